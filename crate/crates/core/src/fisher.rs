//! Maximum Nash Welfare for divisible goods, computed as the equilibrium
//! of a linear Fisher market in which every agent has budget 1.
//!
//! The equilibrium is found with proportional response dynamics: each agent
//! splits its budget into bids, goods are priced at the sum of their bids and
//! shared in proportion to them, and every agent then re-bids in proportion
//! to the utility each good contributed.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{FisherError, LastResiduals};
use crate::model::{FractionalAllocation, Instance, Usage};
use crate::rational::{self, Rational};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
/// Largest denominator used when snapping shares to rationals.
pub const SNAP_DENOMINATOR: u64 = 1_000_000;
/// Largest change to any share allowed while snapping.
pub const SNAP_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PriceVector(pub Vec<f64>);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Residuals {
    /// Largest deviation of a good's total share from 1.
    pub clearing: f64,
    /// Largest deviation of an agent's spending from its budget of 1.
    pub budget: f64,
    /// Largest bang-per-buck shortfall of a good an agent actually buys.
    pub mbb: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.clearing.max(self.budget).max(self.mbb)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketOutcome {
    pub x: Vec<Vec<f64>>,
    #[serde(rename = "p")]
    pub prices: PriceVector,
    pub residuals: Residuals,
    #[serde(rename = "iters")]
    pub iterations: usize,
    /// Whether the support refinement replaced the raw dynamics' output.
    #[serde(skip)]
    pub refined: bool,
}

fn values_f64(inst: &Instance) -> Vec<Vec<f64>> {
    inst.valuations()
        .iter()
        .map(|row| row.iter().map(rational::to_f64).collect())
        .collect()
}

fn prices_from_bids(bids: &[Vec<f64>], m: usize) -> Vec<f64> {
    (0..m)
        .map(|g| bids.iter().map(|row| row[g]).sum())
        .collect()
}

fn shares_from_bids(bids: &[Vec<f64>], prices: &[f64]) -> Vec<Vec<f64>> {
    bids.iter()
        .map(|row| {
            row.iter()
                .zip(prices)
                .map(|(&b, &p)| if p > 0.0 { b / p } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Runs proportional response until the largest relative price change in
/// one round is at most `tol`.
pub fn proportional_response_solve(
    inst: &Instance,
    tol: f64,
    max_iter: usize,
) -> Result<MarketOutcome, FisherError> {
    inst.validate(Usage::Fisher)?;
    let (n, m) = (inst.n(), inst.m());
    let v = values_f64(inst);

    let mut bids: Vec<Vec<f64>> = v
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            row.iter().map(|x| x / total).collect()
        })
        .collect();
    let mut prices = prices_from_bids(&bids, m);
    let mut change = f64::INFINITY;

    for iter in 1..=max_iter {
        let x = shares_from_bids(&bids, &prices);
        for a in 0..n {
            let utility: f64 = (0..m).map(|g| v[a][g] * x[a][g]).sum();
            for g in 0..m {
                bids[a][g] = v[a][g] * x[a][g] / utility;
            }
        }
        let next = prices_from_bids(&bids, m);
        change = prices
            .iter()
            .zip(&next)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &q)| ((q - p) / p).abs())
            .fold(0.0, f64::max);
        prices = next;
        if change <= tol {
            let mut x = shares_from_bids(&bids, &prices);
            let mut residuals = verify_equilibrium(inst, &x, &prices, tol);
            let mut refined = false;
            if residuals.max() > tol {
                if let Some((rx, rp)) = refine_on_support(&v, &bids, &prices) {
                    let rr = verify_equilibrium(inst, &rx, &rp, tol);
                    if rr.max() < residuals.max() {
                        (x, prices, residuals, refined) = (rx, rp, rr, true);
                    }
                }
            }
            return Ok(MarketOutcome {
                x,
                prices: PriceVector(prices),
                residuals,
                iterations: iter,
                refined,
            });
        }
    }
    let x = shares_from_bids(&bids, &prices);
    let r = verify_equilibrium(inst, &x, &prices, tol);
    Err(FisherError::NoConvergence {
        max_iter,
        last: LastResiduals {
            clearing: r.clearing,
            budget: r.budget,
            mbb: r.mbb,
            price_change: change,
        },
    })
}

/// Relative bang-per-buck gaps tried when guessing the equilibrium support.
const SUPPORT_GAPS: [f64; 6] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8];

/// Proportional response converges slowly when the equilibrium sits on a
/// boundary (an agent indifferent between goods it ends up not sharing).
/// Guess the maximum bang-per-buck graph from near-equilibrium prices, solve
/// prices exactly on it, then repair the bids into a feasible spending flow.
fn refine_on_support(
    v: &[Vec<f64>],
    bids: &[Vec<f64>],
    prices: &[f64],
) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    SUPPORT_GAPS
        .iter()
        .find_map(|&gap| refine_with_gap(v, bids, prices, gap))
}

fn refine_with_gap(
    v: &[Vec<f64>],
    bids: &[Vec<f64>],
    prices: &[f64],
    gap: f64,
) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let (n, m) = (v.len(), prices.len());
    let valued: Vec<bool> = (0..m).map(|g| (0..n).any(|a| v[a][g] > 0.0)).collect();
    let mut edges = vec![vec![false; m]; n];
    for a in 0..n {
        let bang = |g: usize| v[a][g] / prices[g];
        let best = (0..m)
            .filter(|&g| valued[g] && v[a][g] > 0.0)
            .map(bang)
            .fold(0.0, f64::max);
        for g in (0..m).filter(|&g| valued[g] && v[a][g] > 0.0) {
            edges[a][g] = bang(g) >= best * (1.0 - gap);
        }
    }
    // Every priced good must be someone's MBB good.
    if (0..m).any(|g| valued[g] && (0..n).all(|a| !edges[a][g])) {
        return None;
    }

    // Propagate prices along each connected component of the MBB graph.
    let mut price = vec![0.0f64; m];
    let mut ratio = vec![0.0f64; n];
    let mut agent_seen = vec![false; n];
    let mut good_seen = vec![false; m];
    for root in (0..m).filter(|&g| valued[g]) {
        if good_seen[root] {
            continue;
        }
        let (mut comp_goods, mut comp_agents) = (vec![root], Vec::new());
        good_seen[root] = true;
        price[root] = 1.0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(g) = queue.pop_front() {
            for a in 0..n {
                if !edges[a][g] || agent_seen[a] {
                    continue;
                }
                agent_seen[a] = true;
                comp_agents.push(a);
                ratio[a] = v[a][g] / price[g];
                for h in 0..m {
                    if !edges[a][h] || good_seen[h] {
                        continue;
                    }
                    good_seen[h] = true;
                    price[h] = v[a][h] / ratio[a];
                    comp_goods.push(h);
                    queue.push_back(h);
                }
            }
        }
        let total: f64 = comp_goods.iter().map(|&g| price[g]).sum();
        let scale = comp_agents.len() as f64 / total;
        for &g in &comp_goods {
            price[g] *= scale;
        }
        for &a in &comp_agents {
            ratio[a] /= scale;
        }
    }
    for a in 0..n {
        for g in (0..m).filter(|&g| valued[g] && v[a][g] > 0.0) {
            let bang = v[a][g] / price[g];
            if edges[a][g] && (bang - ratio[a]).abs() > 1e-9 * ratio[a] {
                return None;
            }
            if bang > ratio[a] * (1.0 + 1e-12) {
                return None;
            }
        }
    }

    let spend = support_flow(&edges, bids, &price)?;
    let x = (0..n)
        .map(|a| {
            (0..m)
                .map(|g| {
                    if price[g] > 0.0 {
                        spend[a][g] / price[g]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Some((x, price))
}

/// Spending flow from unit budgets to goods along `edges` that exactly pays
/// every price, started from the given bids so the repair stays close to them.
fn support_flow(edges: &[Vec<bool>], bids: &[Vec<f64>], price: &[f64]) -> Option<Vec<Vec<f64>>> {
    let (n, m) = (edges.len(), price.len());
    let mut flow: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..m)
                .map(|g| if edges[a][g] { bids[a][g] } else { 0.0 })
                .collect()
        })
        .collect();
    for row in flow.iter_mut() {
        let s: f64 = row.iter().sum();
        if s > 1.0 {
            row.iter_mut().for_each(|f| *f /= s);
        }
    }
    for g in 0..m {
        let s: f64 = (0..n).map(|a| flow[a][g]).sum();
        if s > price[g] {
            (0..n).for_each(|a| flow[a][g] *= price[g] / s);
        }
    }

    // Augmenting paths over source -> agents -> goods -> sink.
    const EPS: f64 = 1e-15;
    loop {
        let budget_left: Vec<f64> = (0..n).map(|a| 1.0 - flow[a].iter().sum::<f64>()).collect();
        let price_left: Vec<f64> = (0..m)
            .map(|g| price[g] - (0..n).map(|a| flow[a][g]).sum::<f64>())
            .collect();
        // BFS state: parent of each agent / good node.
        let mut agent_parent: Vec<Option<Option<usize>>> = vec![None; n];
        let mut good_parent: Vec<Option<usize>> = vec![None; m];
        let mut queue = std::collections::VecDeque::new();
        for a in (0..n).filter(|&a| budget_left[a] > EPS) {
            agent_parent[a] = Some(None);
            queue.push_back(a);
        }
        let mut target = None;
        while let Some(a) = queue.pop_front() {
            for g in 0..m {
                if !edges[a][g] || good_parent[g].is_some() {
                    continue;
                }
                good_parent[g] = Some(a);
                if price_left[g] > EPS {
                    target = Some(g);
                    break;
                }
                for b in 0..n {
                    if agent_parent[b].is_some() || flow[b][g] <= EPS {
                        continue;
                    }
                    agent_parent[b] = Some(Some(g));
                    queue.push_back(b);
                }
            }
            if target.is_some() {
                break;
            }
        }
        let Some(end) = target else { break };
        // Walk back to find the bottleneck, then push.
        let mut path = Vec::new();
        let mut g = end;
        let mut amount = price_left[end];
        loop {
            let a = good_parent[g].expect("on path");
            path.push((a, g));
            match agent_parent[a].expect("on path") {
                None => {
                    amount = amount.min(budget_left[a]);
                    break;
                }
                Some(prev) => {
                    amount = amount.min(flow[a][prev]);
                    g = prev;
                }
            }
        }
        for &(a, g) in &path {
            flow[a][g] += amount;
            if let Some(Some(prev)) = agent_parent[a] {
                flow[a][prev] -= amount;
            }
        }
    }
    let short = (0..n)
        .map(|a| (1.0 - flow[a].iter().sum::<f64>()).abs())
        .fold(0.0, f64::max);
    (short < 1e-12).then_some(flow)
}

/// Residuals of the three equilibrium conditions. Goods nobody values carry
/// price 0 and are excluded from clearing, since any split of them is
/// compatible with equilibrium. The MBB check considers shares above `tol`.
pub fn verify_equilibrium(inst: &Instance, x: &[Vec<f64>], prices: &[f64], tol: f64) -> Residuals {
    let (n, m) = (inst.n(), inst.m());
    let v = values_f64(inst);
    let free = |g: usize| prices[g] <= 0.0 && (0..n).all(|a| v[a][g] == 0.0);

    let clearing = (0..m)
        .filter(|&g| !free(g))
        .map(|g| ((0..n).map(|a| x[a][g]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let budget = (0..n)
        .map(|a| ((0..m).map(|g| prices[g] * x[a][g]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let mut mbb = 0.0f64;
    for a in 0..n {
        let bang = |g: usize| {
            if prices[g] > 0.0 {
                v[a][g] / prices[g]
            } else if v[a][g] > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        let best = (0..m).map(bang).fold(0.0, f64::max);
        for g in (0..m).filter(|&g| x[a][g] > tol && !free(g)) {
            mbb = mbb.max(best - bang(g));
        }
    }
    Residuals {
        clearing,
        budget,
        mbb,
    }
}

/// How goods that no agent values are split. An equilibrium leaves them
/// unpriced, so any split maximizes Nash welfare.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroGoodPolicy {
    #[default]
    Uniform,
    ToAgent(usize),
    /// Column of shares per unvalued good; every unvalued good must appear.
    Explicit(#[serde(serialize_with = "columns_text")] BTreeMap<usize, Vec<Rational>>),
}

fn columns_text<S: serde::Serializer>(
    cols: &BTreeMap<usize, Vec<Rational>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    s.collect_map(
        cols.iter()
            .map(|(g, col)| (g, col.iter().map(ToString::to_string).collect::<Vec<_>>())),
    )
}

/// Maximum Nash Welfare allocation with shares snapped to exact rationals.
pub fn mnw_allocate(
    inst: &Instance,
    policy: &ZeroGoodPolicy,
) -> Result<FractionalAllocation, FisherError> {
    mnw_solve(inst, policy, DEFAULT_TOL, DEFAULT_MAX_ITER).map(|(alloc, _)| alloc)
}

pub fn mnw_solve(
    inst: &Instance,
    policy: &ZeroGoodPolicy,
    tol: f64,
    max_iter: usize,
) -> Result<(FractionalAllocation, MarketOutcome), FisherError> {
    let outcome = proportional_response_solve(inst, tol, max_iter)?;
    let (n, m) = (inst.n(), inst.m());
    let unvalued: Vec<usize> = (0..m)
        .filter(|&g| (0..n).all(|a| inst.value(a, g).is_zero()))
        .collect();

    let mut alloc = FractionalAllocation::zeros(n, m);
    for g in (0..m).filter(|g| !unvalued.contains(g)) {
        let column: Vec<f64> = (0..n).map(|a| outcome.x[a][g]).collect();
        for (a, share) in snap_column(&column, g)?.into_iter().enumerate() {
            alloc.shares[a][g] = share;
        }
    }
    for &g in &unvalued {
        let column = match policy {
            ZeroGoodPolicy::Uniform => vec![rational::frac(1, n as i64); n],
            ZeroGoodPolicy::ToAgent(agent) => {
                if *agent >= n {
                    return Err(FisherError::ZeroGoodPolicy(format!(
                        "agent {agent} out of range"
                    )));
                }
                (0..n)
                    .map(|a| {
                        if a == *agent {
                            Rational::one()
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect()
            }
            ZeroGoodPolicy::Explicit(columns) => {
                let col = columns.get(&g).ok_or_else(|| {
                    FisherError::ZeroGoodPolicy(format!("no shares given for good {g}"))
                })?;
                if col.len() != n
                    || !rational::sum(col).is_one()
                    || col.iter().any(|x| x < &Rational::zero())
                {
                    return Err(FisherError::ZeroGoodPolicy(format!(
                        "shares for good {g} are not a distribution"
                    )));
                }
                col.clone()
            }
        };
        for (a, share) in column.into_iter().enumerate() {
            alloc.shares[a][g] = share;
        }
    }
    alloc.validate()?;
    Ok((alloc, outcome))
}

/// Snaps one column of real shares to rationals that sum to exactly 1 by
/// moving the rounding remainder onto the largest share.
fn snap_column(column: &[f64], good: usize) -> Result<Vec<Rational>, FisherError> {
    let total: f64 = column.iter().sum();
    let mut snapped: Vec<Rational> = column
        .iter()
        .map(|&x| rational::approximate((x / total).clamp(0.0, 1.0), SNAP_DENOMINATOR))
        .collect();
    let remainder = Rational::one() - rational::sum(&snapped);
    let largest = (0..column.len())
        .max_by(|&i, &j| column[i].total_cmp(&column[j]))
        .expect("non-empty column");
    snapped[largest] += remainder;
    for (x, s) in column.iter().zip(&snapped) {
        let drift = (x - rational::to_f64(s)).abs();
        if drift > SNAP_DRIFT || s < &Rational::zero() {
            return Err(FisherError::RationalizationDrift { good, drift });
        }
    }
    Ok(snapped)
}

/// Spending comparison for one agent between two price vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpendingReport {
    /// Goods whose price strictly decreased.
    pub decreased: Vec<usize>,
    pub before_on_decreased: f64,
    pub after_on_decreased: f64,
    pub before_on_rest: f64,
    pub after_on_rest: f64,
    pub holds: bool,
}

/// For an agent demanding `x` at `p` and `x2` at `p2`: spending on goods
/// that became cheaper does not fall, and spending on the others does not
/// rise (both up to `tol`).
pub fn spending_monotonicity_check(
    inst: &Instance,
    agent: usize,
    p: &[f64],
    p2: &[f64],
    x: &[f64],
    x2: &[f64],
    tol: f64,
) -> Result<SpendingReport, FisherError> {
    let m = inst.m();
    let v: Vec<f64> = inst.valuations()[agent]
        .iter()
        .map(rational::to_f64)
        .collect();
    for (prices, shares) in [(p, x), (p2, x2)] {
        let residual = demand_residual(&v, prices, shares, tol);
        if residual > tol {
            return Err(FisherError::PreconditionViolated { residual });
        }
    }
    let decreased: Vec<usize> = (0..m).filter(|&g| p[g] > p2[g]).collect();
    let spend = |prices: &[f64], shares: &[f64], inside: bool| -> f64 {
        (0..m)
            .filter(|g| decreased.contains(g) == inside)
            .map(|g| prices[g] * shares[g])
            .sum()
    };
    let before_on_decreased = spend(p, x, true);
    let after_on_decreased = spend(p2, x2, true);
    let before_on_rest = spend(p, x, false);
    let after_on_rest = spend(p2, x2, false);
    let holds =
        before_on_decreased <= after_on_decreased + tol && after_on_rest <= before_on_rest + tol;
    Ok(SpendingReport {
        decreased,
        before_on_decreased,
        after_on_decreased,
        before_on_rest,
        after_on_rest,
        holds,
    })
}

fn demand_residual(v: &[f64], prices: &[f64], shares: &[f64], tol: f64) -> f64 {
    let bang = |g: usize| {
        if prices[g] > 0.0 {
            v[g] / prices[g]
        } else {
            f64::INFINITY
        }
    };
    let best = (0..v.len())
        .filter(|&g| v[g] > 0.0)
        .map(bang)
        .fold(0.0, f64::max);
    (0..v.len())
        .filter(|&g| shares[g] > tol)
        .map(|g| if v[g] > 0.0 { best - bang(g) } else { best })
        .fold(0.0, f64::max)
}
