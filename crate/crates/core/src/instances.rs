//! Lower-bound constructions with their manipulations and closed-form
//! ratios, plus random and exhaustive instance sources for sweeps.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::error::{IncentiveError, InstanceError};
use crate::fisher::ZeroGoodPolicy;
use crate::incentives::{
    evaluate_against_profile, mnw_manipulation_ratio, OrdinalMechanism, RatioReport, RatioValue,
};
use crate::model::{Coalition, Instance, OrdinalProfile};
use crate::rational::{frac, int, Rational};

/// Largest number of goods a generator will build.
pub const MAX_GOODS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairedMechanism {
    Ordinal(OrdinalMechanism),
    /// Maximum Nash Welfare, with the unvalued-good policy of each run.
    Mnw {
        truthful: ZeroGoodPolicy,
        manipulated: ZeroGoodPolicy,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Construction {
    pub bound: &'static str,
    pub params: BTreeMap<&'static str, String>,
    pub instance: Instance,
    pub truthful: OrdinalProfile,
    pub coalition: Coalition,
    pub mechanism: PairedMechanism,
    #[serde(serialize_with = "ratio_map")]
    pub expected_ratios: BTreeMap<usize, Rational>,
    pub expected_limit: RatioValue,
}

fn ratio_map<S: Serializer>(m: &BTreeMap<usize, Rational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k, v.to_string())))
}

impl Construction {
    /// Runs the paired mechanism on the truthful and manipulated reports.
    pub fn evaluate(&self) -> Result<RatioReport, IncentiveError> {
        match &self.mechanism {
            PairedMechanism::Ordinal(mech) => {
                evaluate_against_profile(*mech, &self.instance, &self.truthful, &self.coalition)
            }
            PairedMechanism::Mnw {
                truthful,
                manipulated,
            } => mnw_manipulation_ratio(&self.instance, &self.coalition, truthful, manipulated),
        }
    }

    /// Smallest expected ratio over the coalition.
    pub fn expected_min(&self) -> &Rational {
        self.expected_ratios
            .values()
            .min()
            .expect("non-empty coalition")
    }
}

fn check_mnw_params(n: usize, c: usize) -> Result<(), InstanceError> {
    if c < 1 || n <= c {
        return Err(InstanceError::InvalidParams(format!(
            "need n > c >= 1, got n={n}, c={c}"
        )));
    }
    if n > MAX_GOODS {
        return Err(InstanceError::InvalidParams(format!(
            "m = {n} exceeds {MAX_GOODS}"
        )));
    }
    Ok(())
}

/// Agents `0..c` value every good; the others value goods `0..c` at zero.
/// The coalition reports zero for goods `0..c`.
fn mnw_base(n: usize, c: usize) -> (Instance, Coalition) {
    let rows = (0..n)
        .map(|a| {
            (0..n)
                .map(|g| if a < c || g >= c { int(1) } else { int(0) })
                .collect()
        })
        .collect();
    let inst = Instance::new(rows, true).expect("non-empty");
    let lie: Vec<Rational> = (0..n)
        .map(|g| if g >= c { int(1) } else { int(0) })
        .collect();
    let coalition = Coalition::cardinal((0..c).collect(), vec![lie; c]).expect("distinct members");
    (inst, coalition)
}

fn mnw_params(n: usize, c: usize) -> BTreeMap<&'static str, String> {
    BTreeMap::from([("n", n.to_string()), ("c", c.to_string())])
}

/// Each corrupted agent keeps one of the goods nobody reports valuing and
/// shares the rest equally with everyone.
pub fn mnw_gir_instance(n: usize, c: usize) -> Result<Construction, InstanceError> {
    check_mnw_params(n, c)?;
    let (instance, coalition) = mnw_base(n, c);
    let columns = (0..c)
        .map(|g| {
            (
                g,
                (0..n)
                    .map(|a| if a == g { int(1) } else { int(0) })
                    .collect(),
            )
        })
        .collect();
    let ratio = int(2) - frac(c as i64, n as i64);
    Ok(Construction {
        bound: "mnw-gir",
        params: mnw_params(n, c),
        truthful: instance.ordinal_profile(),
        instance,
        coalition,
        mechanism: PairedMechanism::Mnw {
            truthful: ZeroGoodPolicy::Uniform,
            manipulated: ZeroGoodPolicy::Explicit(columns),
        },
        expected_ratios: (0..c).map(|a| (a, ratio.clone())).collect(),
        expected_limit: RatioValue::Finite(int(2)),
    })
}

/// Share of the unreported goods `0..c` given to agent `a` in the
/// manipulated run: agents `1..c` get just enough to stay at utility 1 and
/// agent 0 gets the remainder.
fn sgir_split(n: usize, c: usize, agent: usize) -> Rational {
    let keep = frac(c as i64, n as i64);
    if agent == 0 {
        int(c as i64) - keep * int(c as i64 - 1)
    } else {
        keep
    }
}

/// Same instance and misreport as [`mnw_gir_instance`], with the unreported
/// goods concentrated on agent 0 as far as the other corrupted agents stay
/// weakly better off.
pub fn mnw_sgir_instance(n: usize, c: usize) -> Result<Construction, InstanceError> {
    check_mnw_params(n, c)?;
    let (instance, coalition) = mnw_base(n, c);

    // Pour the per-agent amounts into goods 0..c in order.
    let mut columns: BTreeMap<usize, Vec<Rational>> =
        (0..c).map(|g| (g, vec![Rational::zero(); n])).collect();
    let (mut g, mut room) = (0, Rational::one());
    for a in 0..c {
        let mut want = sgir_split(n, c, a);
        while want > Rational::zero() {
            let take = if want < room {
                want.clone()
            } else {
                room.clone()
            };
            columns.get_mut(&g).expect("good in range")[a] += &take;
            want -= &take;
            room -= &take;
            if room.is_zero() && g + 1 < c {
                g += 1;
                room = Rational::one();
            }
        }
    }

    let rest = frac((n - c) as i64, n as i64);
    let expected_ratios = (0..c).map(|a| (a, &rest + sgir_split(n, c, a))).collect();
    Ok(Construction {
        bound: "mnw-sgir",
        params: mnw_params(n, c),
        truthful: instance.ordinal_profile(),
        instance,
        coalition,
        mechanism: PairedMechanism::Mnw {
            truthful: ZeroGoodPolicy::Uniform,
            manipulated: ZeroGoodPolicy::Explicit(columns),
        },
        expected_ratios,
        expected_limit: RatioValue::Finite(int(c as i64 + 1)),
    })
}

/// Closed-form ratio of corrupted agent `a` (1-based) in [`ps_gir_instance`].
pub fn ps_gir_ratio(n: usize, c: usize, t: usize, a: usize) -> Rational {
    let t = int(t as i64);
    let tm1 = &t - int(1);
    let middle = Rational::one() / &tm1 - Rational::one() / (num_traits::pow(t, a - 1) * &tm1);
    int(c as i64) - int(c as i64) * middle + frac((n - c) as i64, n as i64)
}

/// Goods are `g_i^(p)` for agents `i` in `1..=n` and levels `p` in
/// `1..=(c+1)T^c`, with id `(p-1)*n + (i-1)`.
pub fn ps_gir_instance(n: usize, c: usize, t: usize) -> Result<Construction, InstanceError> {
    if c < 1 || n <= c {
        return Err(InstanceError::InvalidParams(format!(
            "need n > c >= 1, got n={n}, c={c}"
        )));
    }
    if t < 2 || t % n != 0 {
        return Err(InstanceError::InvalidParams(format!(
            "T = {t} must exceed 1 and be a multiple of n = {n}"
        )));
    }
    let levels = (c + 1)
        .checked_mul(t.checked_pow(c as u32).unwrap_or(usize::MAX))
        .unwrap_or(usize::MAX);
    let m = levels.saturating_mul(n);
    if m > MAX_GOODS {
        return Err(InstanceError::InvalidParams(format!(
            "m = (c+1)nT^c exceeds {MAX_GOODS}"
        )));
    }
    let tc = t.pow(c as u32);
    let id = |i: usize, p: usize| (p - 1) * n + (i - 1);
    let goods: Vec<(usize, usize)> = (1..=levels)
        .flat_map(|p| (1..=n).map(move |i| (i, p)))
        .collect();

    let value = |a: usize, (i, p): (usize, usize)| -> bool {
        if a <= c {
            p <= t.pow(a as u32)
        } else {
            i > c || p > tc
        }
    };
    let rows: Vec<Vec<Rational>> = (1..=n)
        .map(|a| {
            let mut row = vec![Rational::zero(); m];
            for &g in &goods {
                if value(a, g) {
                    row[id(g.0, g.1)] = Rational::one();
                }
            }
            row
        })
        .collect();
    let instance = Instance::new(rows, true).expect("non-empty");

    // Higher value first; then lower level, own subscript, lower subscript.
    let truthful = OrdinalProfile {
        orderings: (1..=n)
            .map(|a| {
                let mut order = goods.clone();
                order.sort_by_key(|&(i, p)| (!value(a, (i, p)), p, i != a, i));
                order.into_iter().map(|(i, p)| id(i, p)).collect()
            })
            .collect(),
    };

    let lower = |a: usize| (1..a).map(|k| t.pow(k as u32)).sum::<usize>();
    let misreports: Vec<Vec<usize>> = (1..=c)
        .map(|a| {
            let tier = |&(i, p): &(usize, usize)| {
                if i > c && p <= tc {
                    0
                } else if i <= c && lower(a) < p && p <= t.pow(a as u32) {
                    1
                } else if p > tc {
                    2
                } else {
                    3
                }
            };
            let mut order = goods.clone();
            order.sort_by_key(|g| match tier(g) {
                0 | 1 => (tier(g), g.1, g.0),
                k => (k, g.0, g.1),
            });
            order.into_iter().map(|(i, p)| id(i, p)).collect()
        })
        .collect();
    let coalition = Coalition::ordinal((0..c).collect(), misreports).expect("distinct members");

    Ok(Construction {
        bound: "ps-gir",
        params: BTreeMap::from([
            ("n", n.to_string()),
            ("c", c.to_string()),
            ("T", t.to_string()),
        ]),
        instance,
        truthful,
        coalition,
        mechanism: PairedMechanism::Ordinal(OrdinalMechanism::ProbabilisticSerial),
        expected_ratios: (1..=c).map(|a| (a - 1, ps_gir_ratio(n, c, t, a))).collect(),
        expected_limit: RatioValue::Finite(int(c as i64 + 1)),
    })
}

/// Three agents and four goods where two agents jointly manipulate
/// Round-Robin; agent 1's gain grows as `1/eps`.
pub fn rr_sgir_instance(eps: &Rational) -> Result<Construction, InstanceError> {
    if eps <= &Rational::zero() || eps >= &frac(1, 4) {
        return Err(InstanceError::InvalidParams(format!(
            "eps = {eps} must lie in (0, 1/4)"
        )));
    }
    let one = Rational::one();
    let rows = vec![
        vec![&one + eps * int(2), &one + eps, one.clone(), int(0)],
        vec![&one / eps, one.clone(), int(0), int(0)],
        vec![int(0), int(0), int(2), one.clone()],
    ];
    let instance = Instance::new(rows, false).expect("non-empty");
    let truthful = instance.ordinal_profile();
    let coalition = Coalition::ordinal(
        vec![0, 1],
        vec![vec![2, 1, 0, 3], truthful.orderings[1].clone()],
    )
    .expect("distinct members");
    let expected_ratios = BTreeMap::from([
        (0, (int(2) + eps) / (int(1) + eps * int(2))),
        (1, &one / eps),
    ]);
    Ok(Construction {
        bound: "rr-sgir",
        params: BTreeMap::from([("eps", eps.to_string())]),
        instance,
        truthful,
        coalition,
        mechanism: PairedMechanism::Ordinal(OrdinalMechanism::RoundRobin),
        expected_ratios,
        expected_limit: RatioValue::Infinite,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValuationFamily {
    /// Entries 0 or 1 with equal probability.
    Binary,
    /// Entries `p/q` with `p` in `0..=100` and `q` in `1..=100`.
    UniformRational,
    /// As `UniformRational` with `p` in `1..=100`.
    PositiveRational,
}

pub fn random_instance(n: usize, m: usize, family: ValuationFamily, seed: u64) -> Instance {
    assert!(
        n >= 1 && m >= 1,
        "instance needs at least one agent and one good"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| match family {
                    ValuationFamily::Binary => int(rng.gen_bool(0.5) as i64),
                    ValuationFamily::UniformRational => {
                        frac(rng.gen_range(0..=100), rng.gen_range(1..=100))
                    }
                    ValuationFamily::PositiveRational => {
                        frac(rng.gen_range(1..=100), rng.gen_range(1..=100))
                    }
                })
                .collect()
        })
        .collect();
    Instance::new(rows, family != ValuationFamily::Binary).expect("non-empty")
}

/// Every 0/1 valuation matrix of shape `n x m`, in order of the row-major
/// bit pattern read as a binary number.
pub fn all_binary_instances(n: usize, m: usize) -> impl Iterator<Item = Instance> {
    let cells = n * m;
    assert!(cells < 32, "too many binary instances to enumerate");
    (0u64..(1u64 << cells)).map(move |bits| {
        let rows = (0..n)
            .map(|a| {
                (0..m)
                    .map(|g| int(((bits >> (cells - 1 - (a * m + g))) & 1) as i64))
                    .collect()
            })
            .collect();
        Instance::new(rows, false).expect("non-empty")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational;

    fn ratios(p: &Construction) -> BTreeMap<usize, Rational> {
        p.evaluate()
            .unwrap()
            .per_agent
            .into_iter()
            .map(|(a, r)| (a, r.finite().unwrap().clone()))
            .collect()
    }

    #[test]
    fn mnw_gir_expected_values() {
        let p = mnw_gir_instance(4, 2).unwrap();
        assert_eq!(
            p.expected_ratios.values().cloned().collect::<Vec<_>>(),
            vec![frac(3, 2); 2]
        );
        assert_eq!(
            mnw_gir_instance(100, 1).unwrap().expected_ratios[&0],
            frac(199, 100)
        );
        assert_eq!(p.expected_limit, RatioValue::Finite(int(2)));
        assert!(mnw_gir_instance(2, 2).is_err());
        assert!(mnw_gir_instance(3, 0).is_err());
    }

    #[test]
    fn mnw_sgir_expected_values() {
        let p = mnw_sgir_instance(4, 2).unwrap();
        assert_eq!(p.expected_ratios[&0], int(2));
        assert_eq!(p.expected_ratios[&1], int(1));
        let p = mnw_sgir_instance(10, 3).unwrap();
        assert_eq!(p.expected_ratios[&0], frac(31, 10));
        assert_eq!(p.expected_ratios[&2], int(1));
        // c = 1 coincides with the GIR construction.
        assert_eq!(
            mnw_sgir_instance(5, 1).unwrap().expected_ratios[&0],
            frac(9, 5)
        );
        assert_eq!(p.expected_limit, RatioValue::Finite(int(4)));
    }

    #[test]
    fn mnw_sgir_split_is_feasible() {
        for (n, c) in [(4, 2), (10, 3), (7, 5), (3, 2)] {
            let p = mnw_sgir_instance(n, c).unwrap();
            let PairedMechanism::Mnw {
                manipulated: ZeroGoodPolicy::Explicit(cols),
                ..
            } = &p.mechanism
            else {
                panic!("explicit policy expected");
            };
            assert_eq!(cols.len(), c);
            for col in cols.values() {
                assert_eq!(rational::sum(col), int(1));
                assert!(col.iter().all(|x| x >= &int(0)));
            }
            for a in 0..c {
                let got = rational::sum(cols.values().map(|col| &col[a]));
                assert_eq!(got, sgir_split(n, c, a));
            }
        }
    }

    fn close(a: &Rational, b: &Rational) -> bool {
        let (a, b) = (rational::to_f64(a), rational::to_f64(b));
        (a - b).abs() <= 1e-5 * b.abs()
    }

    #[test]
    fn mnw_generators_reproduce_their_ratios() {
        for p in [
            mnw_gir_instance(4, 2).unwrap(),
            mnw_sgir_instance(4, 2).unwrap(),
            mnw_sgir_instance(5, 3).unwrap(),
        ] {
            let got = ratios(&p);
            for (a, want) in &p.expected_ratios {
                assert!(
                    close(&got[a], want),
                    "{}: agent {a} got {} want {want}",
                    p.bound,
                    got[a]
                );
            }
        }
    }

    #[test]
    fn rr_sgir_ratios() {
        let p = rr_sgir_instance(&frac(1, 100)).unwrap();
        assert_eq!(p.expected_ratios[&0], frac(201, 102));
        assert_eq!(p.expected_ratios[&1], int(100));
        let r = p.evaluate().unwrap();
        assert!(r.all_weakly_better);
        assert_eq!(ratios(&p), p.expected_ratios);

        let p = rr_sgir_instance(&frac(1, 10)).unwrap();
        assert_eq!(p.expected_ratios[&0], frac(21, 12));
        assert_eq!(ratios(&p), p.expected_ratios);
        assert!(rr_sgir_instance(&frac(1, 4)).is_err());
        assert!(rr_sgir_instance(&int(0)).is_err());
    }

    #[test]
    fn rr_sgir_truthful_bundles() {
        let p = rr_sgir_instance(&frac(1, 100)).unwrap();
        let (bundles, _) = crate::mechanisms::round_robin(&p.truthful);
        assert_eq!(bundles.bundles, vec![vec![0, 3], vec![1], vec![2]]);
    }

    #[test]
    fn ps_gir_closed_form() {
        assert_eq!(ps_gir_ratio(2, 1, 2, 1), frac(3, 2));
        assert_eq!(ps_gir_ratio(4, 1, 4, 1), frac(7, 4));
        let p = ps_gir_instance(2, 1, 2).unwrap();
        assert_eq!(p.instance.m(), 8);
        assert_eq!(p.expected_ratios[&0], frac(3, 2));
        assert!(ps_gir_instance(2, 1, 3).is_err());
        assert!(ps_gir_instance(2, 2, 2).is_err());
        assert!(ps_gir_instance(10, 3, 10).is_err());
    }

    #[test]
    fn ps_gir_truthful_run_gives_each_agent_its_subscript() {
        for (n, c, t) in [(2, 1, 2), (3, 1, 3), (3, 2, 3)] {
            let p = ps_gir_instance(n, c, t).unwrap();
            let (x, _) = crate::mechanisms::probabilistic_serial(&p.truthful);
            for a in 0..n {
                for g in 0..p.instance.m() {
                    let want = if g % n == a { int(1) } else { int(0) };
                    assert_eq!(x.shares[a][g], want);
                }
            }
            for a in 0..c {
                let u = p.instance.utility(a, x.row(a));
                assert_eq!(u, int(t.pow(a as u32 + 1) as i64));
            }
        }
    }

    #[test]
    fn ps_gir_generator_reproduces_its_ratios() {
        for (n, c, t) in [(2, 1, 2), (4, 1, 4), (3, 1, 6), (3, 2, 3), (4, 2, 4)] {
            let p = ps_gir_instance(n, c, t).unwrap();
            assert_eq!(ratios(&p), p.expected_ratios, "n={n} c={c} T={t}");
        }
    }

    #[test]
    fn ps_gir_orderings_are_consistent_with_values() {
        let p = ps_gir_instance(3, 2, 3).unwrap();
        p.truthful.validate().unwrap();
        for (a, ord) in p.truthful.orderings.iter().enumerate() {
            for w in ord.windows(2) {
                assert!(p.instance.value(a, w[0]) >= p.instance.value(a, w[1]));
            }
        }
    }

    #[test]
    fn ps_gir_closed_form_approaches_its_limit() {
        for c in 1..4usize {
            let limit = int(c as i64 + 1);
            let gir = |n, t| (1..=c).map(|a| ps_gir_ratio(n, c, t, a)).min().unwrap();
            for n in c + 1..20 {
                for t in 2..20 {
                    let here = gir(n, t);
                    assert!(here < limit);
                    assert!(gir(n + 1, t) >= here);
                    assert!(gir(n, t + 1) >= here);
                }
            }
        }
    }

    #[test]
    fn random_instances_are_reproducible() {
        let a = random_instance(2, 2, ValuationFamily::Binary, 1);
        assert_eq!(a, random_instance(2, 2, ValuationFamily::Binary, 1));
        for seed in 0..50 {
            let b = random_instance(3, 4, ValuationFamily::Binary, seed);
            assert!(b
                .valuations()
                .iter()
                .flatten()
                .all(|v| v.is_zero() || v.is_one()));
            let u = random_instance(3, 4, ValuationFamily::UniformRational, seed);
            assert!(u
                .valuations()
                .iter()
                .flatten()
                .all(|v| *v.denom() <= 100.into() && v >= &int(0)));
            let p = random_instance(3, 4, ValuationFamily::PositiveRational, seed);
            assert!(p.valuations().iter().flatten().all(|v| v > &int(0)));
        }
    }

    #[test]
    fn binary_enumeration_is_complete() {
        let all: Vec<Instance> = all_binary_instances(2, 2).collect();
        assert_eq!(all.len(), 16);
        assert_eq!(all[1].valuations()[1], vec![int(0), int(1)]);
        let distinct: std::collections::BTreeSet<String> = all
            .iter()
            .map(|i| serde_json::to_string(i).unwrap())
            .collect();
        assert_eq!(distinct.len(), 16);
    }

    #[test]
    fn bundle_json_has_the_expected_fields() {
        let p = rr_sgir_instance(&frac(1, 100)).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["bound"], "rr-sgir");
        assert_eq!(v["expected_ratios"]["1"], "100");
        assert_eq!(v["expected_limit"], "inf");
        assert_eq!(v["mechanism"]["ordinal"], "RR");
        assert_eq!(v["coalition"]["members"], serde_json::json!([0, 1]));
        let v = serde_json::to_value(mnw_gir_instance(4, 2).unwrap()).unwrap();
        assert_eq!(
            v["mechanism"]["mnw"]["manipulated"]["explicit"]["0"],
            serde_json::json!(["1", "0", "0", "0"])
        );
    }
}
