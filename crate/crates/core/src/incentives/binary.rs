//! Replacing a corrupted agent's valuation by a 0/1 valuation that keeps
//! its ordering and does not lower its gain.

use num_traits::{One, Zero};
use serde::Serialize;

use super::ratio::{gain_ratio, RatioValue};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinaryReduction {
    /// Ratio of prefix sums for prefixes of length `0..=m`.
    pub prefix_ratios: Vec<RatioValue>,
    pub r_max: RatioValue,
    /// Length of the largest prefix attaining `r_max`.
    pub cut: usize,
    /// The 0/1 valuation indexed by original good id.
    #[serde(with = "crate::rational::vec")]
    pub valuation: Vec<Rational>,
}

impl BinaryReduction {
    /// The agent's ratio if its valuation were `self.valuation`.
    pub fn ratio_under(
        &self,
        truthful_shares: &[Rational],
        manipulated_shares: &[Rational],
    ) -> RatioValue {
        let dot =
            |x: &[Rational]| -> Rational { self.valuation.iter().zip(x).map(|(v, s)| v * s).sum() };
        gain_ratio(&dot(truthful_shares), &dot(manipulated_shares))
    }
}

/// `l_true` and `l_manip` hold the agent's shares listed in the order of
/// `ordering` (most preferred first).
pub fn binary_reduction(
    ordering: &[usize],
    l_true: &[Rational],
    l_manip: &[Rational],
) -> BinaryReduction {
    let m = ordering.len();
    assert_eq!(l_true.len(), m);
    assert_eq!(l_manip.len(), m);
    let mut prefix_ratios = Vec::with_capacity(m + 1);
    let (mut before, mut after) = (Rational::zero(), Rational::zero());
    prefix_ratios.push(gain_ratio(&before, &after));
    for g in 0..m {
        before += &l_true[g];
        after += &l_manip[g];
        prefix_ratios.push(gain_ratio(&before, &after));
    }
    let r_max = prefix_ratios
        .iter()
        .max()
        .expect("at least the empty prefix")
        .clone();
    let cut = prefix_ratios
        .iter()
        .rposition(|r| *r == r_max)
        .expect("maximum is attained");
    let mut valuation = vec![Rational::zero(); m];
    for &g in &ordering[..cut] {
        valuation[g] = Rational::one();
    }
    BinaryReduction {
        prefix_ratios,
        r_max,
        cut,
        valuation,
    }
}

/// [`binary_reduction`] for share rows indexed by good id.
pub fn binary_reduction_for_rows(
    ordering: &[usize],
    truthful_row: &[Rational],
    manipulated_row: &[Rational],
) -> BinaryReduction {
    let l: Vec<Rational> = ordering.iter().map(|&g| truthful_row[g].clone()).collect();
    let l2: Vec<Rational> = ordering
        .iter()
        .map(|&g| manipulated_row[g].clone())
        .collect();
    binary_reduction(ordering, &l, &l2)
}
