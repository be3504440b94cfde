//! Envy-freeness, EF1 and Nash welfare.

use num_traits::Zero;

use crate::model::{FractionalAllocation, Instance, IntegralAllocation};
use crate::rational::{self, Rational};

/// Outcome of a fairness predicate. `witness` is `(envious, envied)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FairnessReport {
    pub holds: bool,
    pub witness: Option<(usize, usize)>,
}

impl FairnessReport {
    fn from_witness(witness: Option<(usize, usize)>) -> Self {
        FairnessReport {
            holds: witness.is_none(),
            witness,
        }
    }
}

pub fn is_envy_free(inst: &Instance, alloc: &FractionalAllocation) -> FairnessReport {
    envy_free_with_slack(inst, alloc, &Rational::zero())
}

/// Envy-freeness where `a` envies `b` only if `v_a(x_b) - v_a(x_a) > slack`.
pub fn envy_free_with_slack(
    inst: &Instance,
    alloc: &FractionalAllocation,
    slack: &Rational,
) -> FairnessReport {
    let n = inst.n();
    for a in 0..n {
        let own = inst.utility(a, alloc.row(a));
        for b in (0..n).filter(|&b| b != a) {
            if inst.utility(a, alloc.row(b)) - &own > *slack {
                return FairnessReport::from_witness(Some((a, b)));
            }
        }
    }
    FairnessReport::from_witness(None)
}

pub fn is_ef1(inst: &Instance, alloc: &IntegralAllocation) -> FairnessReport {
    let n = inst.n();
    for a in 0..n {
        let own = inst.bundle_utility(a, &alloc.bundles[a]);
        for b in (0..n).filter(|&b| b != a) {
            let other = &alloc.bundles[b];
            if other.is_empty() {
                continue;
            }
            // Removing a's most valued good from b's bundle is the best case.
            let top = other.iter().map(|&g| inst.value(a, g)).max().unwrap();
            if own < inst.bundle_utility(a, other) - top {
                return FairnessReport::from_witness(Some((a, b)));
            }
        }
    }
    FairnessReport::from_witness(None)
}

/// Geometric mean of the agents' utilities, computed in log space.
pub fn nash_welfare(inst: &Instance, alloc: &FractionalAllocation) -> f64 {
    let utilities: Vec<f64> = (0..inst.n())
        .map(|a| rational::to_f64(&inst.utility(a, alloc.row(a))))
        .collect();
    geometric_mean(&utilities)
}

pub fn geometric_mean(utilities: &[f64]) -> f64 {
    if utilities.iter().any(|&u| u <= 0.0) {
        return 0.0;
    }
    let logs: f64 = utilities.iter().map(|u| u.ln()).sum();
    (logs / utilities.len() as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn uniform(n: usize, m: usize) -> FractionalAllocation {
        FractionalAllocation {
            shares: vec![vec![frac(1, n as i64); m]; n],
        }
    }

    #[test]
    fn envy_examples() {
        let inst = Instance::from_ints(&[&[3, 1, 4], &[1, 5, 9], &[2, 6, 5]], true).unwrap();
        assert!(is_envy_free(&inst, &uniform(3, 3)).holds);

        let inst = Instance::from_ints(&[&[1, 0], &[1, 0]], true).unwrap();
        let alloc = FractionalAllocation {
            shares: vec![vec![int(1), int(0)], vec![int(0), int(1)]],
        };
        let r = is_envy_free(&inst, &alloc);
        assert!(!r.holds);
        assert_eq!(r.witness, Some((1, 0)));
        assert!(envy_free_with_slack(&inst, &alloc, &int(1)).holds);
    }

    #[test]
    fn ef1_examples() {
        let inst = Instance::from_ints(&[&[1, 1, 1], &[1, 1, 1]], false).unwrap();
        let lopsided = IntegralAllocation {
            bundles: vec![vec![], vec![0, 1, 2]],
        };
        let r = is_ef1(&inst, &lopsided);
        assert!(!r.holds);
        assert_eq!(r.witness, Some((0, 1)));

        let ok = IntegralAllocation {
            bundles: vec![vec![0], vec![1, 2]],
        };
        assert!(is_ef1(&inst, &ok).holds);

        let single = Instance::from_ints(&[&[1, 2]], false).unwrap();
        let all = IntegralAllocation {
            bundles: vec![vec![0, 1]],
        };
        assert!(is_ef1(&single, &all).holds);
    }

    #[test]
    fn nash_welfare_examples() {
        assert!((geometric_mean(&[1.0, 1.0, 1.0]) - 1.0).abs() < 1e-15);
        assert!((geometric_mean(&[4.0, 1.0]) - 2.0).abs() < 1e-15);
        assert_eq!(geometric_mean(&[0.0, 3.0]), 0.0);

        let inst = Instance::from_ints(&[&[1, 0], &[0, 1]], true).unwrap();
        let diag = FractionalAllocation {
            shares: vec![vec![int(1), int(0)], vec![int(0), int(1)]],
        };
        assert!((nash_welfare(&inst, &diag) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nash_welfare_scale_covariance() {
        // Scaling row a by lambda scales NW by lambda^(1/n) and keeps the argmax.
        let base = Instance::from_ints(&[&[2, 1], &[1, 3]], true).unwrap();
        let scaled = Instance::from_ints(&[&[8, 4], &[1, 3]], true).unwrap();
        let grid: Vec<FractionalAllocation> = (0..=10)
            .flat_map(|i| (0..=10).map(move |j| (i, j)))
            .map(|(i, j)| FractionalAllocation {
                shares: vec![
                    vec![frac(i, 10), frac(j, 10)],
                    vec![frac(10 - i, 10), frac(10 - j, 10)],
                ],
            })
            .collect();
        let mut best = (0.0, 0usize);
        let mut best_scaled = (0.0, 0usize);
        for (k, alloc) in grid.iter().enumerate() {
            let nw = nash_welfare(&base, alloc);
            let nws = nash_welfare(&scaled, alloc);
            if nw > 0.0 {
                assert!((nws / nw - 2.0).abs() < 1e-12);
            }
            if nw > best.0 + 1e-12 {
                best = (nw, k);
            }
            if nws > best_scaled.0 + 1e-12 {
                best_scaled = (nws, k);
            }
        }
        assert_eq!(best.1, best_scaled.1);
    }
}
