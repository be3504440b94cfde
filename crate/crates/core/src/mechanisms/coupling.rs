//! Probabilistic Serial computed through Round-Robin over copies of goods.
//!
//! Each good is split into `T` indivisible copies ranked consecutively in
//! every agent's ordering. Running Round-Robin over the `m*T` copies and
//! dividing the copy counts by `T` reproduces the eating allocation whenever
//! `T` times every step duration is an integer.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::round_robin::{round_robin, RrTrace};
use super::serial::{probabilistic_serial, PsTrace};
use crate::error::MechanismError;
use crate::model::{FractionalAllocation, OrdinalProfile};
use crate::rational::{self, Rational};

/// Upper bound on `m * T` when materializing `T = (n!)^m`.
pub const FACTORIAL_T_LIMIT: u64 = 1_000_000;

/// The expanded goods: copy `k` of good `g` has id `g * copies + k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopyUniverse {
    pub copies: usize,
    pub goods: usize,
    pub profile: OrdinalProfile,
}

impl CopyUniverse {
    pub fn original(&self, copy: usize) -> usize {
        copy / self.copies
    }

    pub fn copy_index(&self, copy: usize) -> usize {
        copy % self.copies
    }

    pub fn len(&self) -> usize {
        self.goods * self.copies
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Least `T` making `T * t` integral for every step duration `t`.
pub fn minimal_coupling_t(trace: &PsTrace) -> BigInt {
    rational::denominator_lcm(trace.durations())
}

/// `(n!)^m`.
pub fn factorial_power(n: usize, m: usize) -> BigInt {
    let fact: BigInt = (1..=n).map(BigInt::from).product();
    num_traits::pow(fact, m)
}

/// `(n!)^m` as a copy count, refused when `m * T` exceeds [`FACTORIAL_T_LIMIT`].
pub fn factorial_copies(n: usize, m: usize) -> Result<usize, MechanismError> {
    let t = factorial_power(n, m);
    let total = &t * BigInt::from(m);
    if total > BigInt::from(FACTORIAL_T_LIMIT) {
        return Err(MechanismError::FactorialTTooLarge {
            total: total.to_string(),
        });
    }
    Ok(t.to_usize().expect("bounded by limit"))
}

/// Expands every ordering over `copies` copies per good: goods keep their
/// relative order and copies of one good are ranked by ascending index.
pub fn expand_profile(profile: &OrdinalProfile, copies: usize) -> CopyUniverse {
    assert!(copies >= 1, "at least one copy per good");
    let orderings = profile
        .orderings
        .iter()
        .map(|ord| {
            ord.iter()
                .flat_map(|&g| (0..copies).map(move |k| g * copies + k))
                .collect()
        })
        .collect();
    CopyUniverse {
        copies,
        goods: profile.m(),
        profile: OrdinalProfile { orderings },
    }
}

/// Everything produced by one run of the reduction.
#[derive(Debug, Clone)]
pub struct ReductionRun {
    pub allocation: FractionalAllocation,
    pub copies: usize,
    pub universe: CopyUniverse,
    pub rr_trace: RrTrace,
    pub ps_trace: PsTrace,
}

pub fn ps_via_rr(
    profile: &OrdinalProfile,
    copies: Option<usize>,
) -> Result<FractionalAllocation, MechanismError> {
    ps_via_rr_traced(profile, copies).map(|run| run.allocation)
}

/// Runs the reduction. Without an explicit `copies`, the minimal coupling
/// count of the profile's eating trace is used.
pub fn ps_via_rr_traced(
    profile: &OrdinalProfile,
    copies: Option<usize>,
) -> Result<ReductionRun, MechanismError> {
    profile.validate()?;
    let (n, m) = (profile.n(), profile.m());
    let (_, ps_trace) = probabilistic_serial(profile);
    let copies = match copies {
        Some(t) => {
            check_copies(&ps_trace, n, m, t)?;
            t
        }
        None => {
            let t = minimal_coupling_t(&ps_trace);
            t.to_usize().ok_or_else(|| MechanismError::InvalidT {
                copies: t.to_string(),
                reason: "does not fit in memory".into(),
            })?
        }
    };

    let universe = expand_profile(profile, copies);
    let (bundles, rr_trace) = round_robin(&universe.profile);
    let denom = rational::int(copies as i64);
    let mut allocation = FractionalAllocation::zeros(n, m);
    for (a, bundle) in bundles.bundles.iter().enumerate() {
        for &copy in bundle {
            allocation.shares[a][universe.original(copy)] += Rational::one();
        }
    }
    for row in &mut allocation.shares {
        for x in row.iter_mut() {
            *x /= &denom;
        }
    }
    Ok(ReductionRun {
        allocation,
        copies,
        universe,
        rr_trace,
        ps_trace,
    })
}

fn check_copies(trace: &PsTrace, n: usize, m: usize, copies: usize) -> Result<(), MechanismError> {
    let invalid = |reason: String| MechanismError::InvalidT {
        copies: copies.to_string(),
        reason,
    };
    if copies == 0 {
        return Err(invalid("must be positive".into()));
    }
    if (m * copies) % n != 0 {
        return Err(invalid(format!("{n} does not divide m*T = {}", m * copies)));
    }
    let t = rational::int(copies as i64);
    for (k, d) in trace.durations().enumerate() {
        let scaled = d * &t;
        if !scaled.is_integer() {
            return Err(invalid(format!(
                "T * t({}) = {} is not an integer",
                k + 1,
                scaled
            )));
        }
    }
    Ok(())
}

/// Checks the step-by-step coupling between a reduction's Round-Robin run
/// and the eating trace: during eating step `k` every agent picks exactly
/// `T * t(k)` copies, all of the good it eats in that step. Returns a
/// description of every violation found.
pub fn coupling_violations(run: &ReductionRun) -> Vec<String> {
    let n = run.universe.profile.n();
    let t = rational::int(run.copies as i64);
    let mut violations = Vec::new();
    let mut start_round = BigInt::zero();
    for (k, step) in run.ps_trace.steps.iter().enumerate() {
        let rounds = &step.duration * &t;
        if !rounds.is_integer() {
            violations.push(format!("step {}: T*t = {} not integral", k + 1, rounds));
            return violations;
        }
        let end_round = &start_round + rounds.to_integer();
        let lo = (&start_round * BigInt::from(n))
            .to_usize()
            .unwrap_or(usize::MAX);
        let hi = (&end_round * BigInt::from(n))
            .to_usize()
            .unwrap_or(usize::MAX);
        let mut picked = vec![0usize; n];
        for pick in &run.rr_trace.stages
            [lo.min(run.rr_trace.stages.len())..hi.min(run.rr_trace.stages.len())]
        {
            let expected = run.ps_trace.good_eaten(k, pick.agent);
            let got = run.universe.original(pick.good);
            if expected != Some(got) {
                violations.push(format!(
                    "step {}: agent {} took a copy of good {} instead of {:?}",
                    k + 1,
                    pick.agent,
                    got,
                    expected
                ));
            }
            picked[pick.agent] += 1;
        }
        let want = rounds.to_integer();
        for (a, &c) in picked.iter().enumerate() {
            if BigInt::from(c) != want {
                violations.push(format!(
                    "step {}: agent {a} picked {c} copies, expected {want}",
                    k + 1
                ));
            }
        }
        start_round = end_round;
    }
    violations
}
