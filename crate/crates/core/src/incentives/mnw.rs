use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ratio::RatioReport;
use crate::error::IncentiveError;
use crate::fisher::{mnw_allocate, ZeroGoodPolicy};
use crate::model::{Coalition, Instance, Usage};
use crate::rational::Rational;

/// Gains of a coalition reporting cardinal valuations to the Maximum Nash
/// Welfare mechanism. Each run uses its own policy for unvalued goods.
pub fn mnw_manipulation_ratio(
    inst: &Instance,
    coalition: &Coalition,
    policy_true: &ZeroGoodPolicy,
    policy_manip: &ZeroGoodPolicy,
) -> Result<RatioReport, IncentiveError> {
    inst.validate(Usage::Fisher)?;
    coalition.validate(inst.n(), inst.m())?;
    let rows = coalition
        .cardinal_replacements()
        .ok_or(IncentiveError::MisreportKind)?;
    let reported = inst.with_rows(&rows)?;
    reported.validate(Usage::Fisher)?;
    let before = mnw_allocate(inst, policy_true)?;
    let after = mnw_allocate(&reported, policy_manip)?;
    Ok(RatioReport::from_allocations(
        inst, coalition, &before, &after,
    ))
}

/// `count` coalitions over `members`, each reporting random 0/1 rows with
/// at least one valued good.
pub fn binary_probes(m: usize, members: &[usize], count: usize, seed: u64) -> Vec<Coalition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let rows = members
                .iter()
                .map(|_| {
                    let mut row: Vec<Rational> = (0..m)
                        .map(|_| {
                            if rng.gen_bool(0.5) {
                                Rational::one()
                            } else {
                                Rational::zero()
                            }
                        })
                        .collect();
                    if row.iter().all(Zero::is_zero) {
                        row[rng.gen_range(0..m)] = Rational::one();
                    }
                    row
                })
                .collect();
            Coalition::cardinal(members.to_vec(), rows).expect("distinct members")
        })
        .collect()
}
