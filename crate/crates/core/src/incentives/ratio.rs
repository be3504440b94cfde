use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::IncentiveError;
use crate::mechanisms::{probabilistic_serial, round_robin};
use crate::model::{Coalition, FractionalAllocation, Instance, OrdinalProfile};
use crate::rational::{self, Rational};

/// A utility gain ratio. A positive utility over a zero one is `Infinite`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RatioValue {
    Finite(Rational),
    Infinite,
}

impl RatioValue {
    pub fn one() -> Self {
        RatioValue::Finite(Rational::one())
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            RatioValue::Finite(r) => Some(r),
            RatioValue::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RatioValue::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            RatioValue::Finite(r) => rational::to_f64(r),
            RatioValue::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for RatioValue {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            RatioValue::Finite(r) => write!(f, "{r}"),
            RatioValue::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for RatioValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `manipulated / truthful`, with `0/0 = 1` and `positive/0 = inf`.
pub fn gain_ratio(truthful: &Rational, manipulated: &Rational) -> RatioValue {
    if truthful.is_zero() {
        if manipulated.is_zero() {
            RatioValue::one()
        } else {
            RatioValue::Infinite
        }
    } else {
        RatioValue::Finite(manipulated / truthful)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OrdinalMechanism {
    #[serde(rename = "RR")]
    RoundRobin,
    #[serde(rename = "PS")]
    ProbabilisticSerial,
}

impl OrdinalMechanism {
    /// The mechanism's output as a share matrix (0/1 for Round-Robin).
    pub fn allocate(self, profile: &OrdinalProfile) -> FractionalAllocation {
        match self {
            OrdinalMechanism::RoundRobin => round_robin(profile).0.to_fractional(profile.m()),
            OrdinalMechanism::ProbabilisticSerial => probabilistic_serial(profile).0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OrdinalMechanism::RoundRobin => "RR",
            OrdinalMechanism::ProbabilisticSerial => "PS",
        }
    }
}

/// Gains of every corrupted agent under one manipulation, measured with the
/// true valuations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatioReport {
    pub per_agent: BTreeMap<usize, RatioValue>,
    #[serde(serialize_with = "utility_map")]
    pub truthful_utility: BTreeMap<usize, Rational>,
    #[serde(serialize_with = "utility_map")]
    pub manipulated_utility: BTreeMap<usize, Rational>,
    pub coalition: Coalition,
    pub all_weakly_better: bool,
    pub min_ratio: RatioValue,
    pub max_ratio: RatioValue,
}

fn utility_map<S: Serializer>(m: &BTreeMap<usize, Rational>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k, v.to_string())))
}

impl RatioReport {
    pub(crate) fn from_allocations(
        inst: &Instance,
        coalition: &Coalition,
        truthful: &FractionalAllocation,
        manipulated: &FractionalAllocation,
    ) -> Self {
        let mut per_agent = BTreeMap::new();
        let mut truthful_utility = BTreeMap::new();
        let mut manipulated_utility = BTreeMap::new();
        let mut all_weakly_better = true;
        for &a in coalition.members() {
            let before = inst.utility(a, truthful.row(a));
            let after = inst.utility(a, manipulated.row(a));
            all_weakly_better &= after >= before;
            per_agent.insert(a, gain_ratio(&before, &after));
            truthful_utility.insert(a, before);
            manipulated_utility.insert(a, after);
        }
        let min_ratio = per_agent
            .values()
            .min()
            .expect("non-empty coalition")
            .clone();
        let max_ratio = per_agent
            .values()
            .max()
            .expect("non-empty coalition")
            .clone();
        RatioReport {
            per_agent,
            truthful_utility,
            manipulated_utility,
            coalition: coalition.clone(),
            all_weakly_better,
            min_ratio,
            max_ratio,
        }
    }
}

/// Runs `mechanism` on the truthful profile (derived from the valuations)
/// and on the profile with the coalition's orderings substituted.
pub fn evaluate_manipulation(
    mechanism: OrdinalMechanism,
    inst: &Instance,
    coalition: &Coalition,
) -> Result<RatioReport, IncentiveError> {
    let truthful = inst.ordinal_profile();
    evaluate_against_profile(mechanism, inst, &truthful, coalition)
}

/// Same as [`evaluate_manipulation`] with an explicit truthful profile, for
/// instances whose ties are broken differently from ascending good index.
pub fn evaluate_against_profile(
    mechanism: OrdinalMechanism,
    inst: &Instance,
    truthful: &OrdinalProfile,
    coalition: &Coalition,
) -> Result<RatioReport, IncentiveError> {
    coalition.validate(inst.n(), inst.m())?;
    let replacements = coalition
        .ordinal_replacements()
        .ok_or(IncentiveError::MisreportKind)?;
    let manipulated = truthful.with_orderings(&replacements);
    let before = mechanism.allocate(truthful);
    let after = mechanism.allocate(&manipulated);
    Ok(RatioReport::from_allocations(
        inst, coalition, &before, &after,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn ratio_conventions() {
        let eps = frac(1, 100);
        assert_eq!(
            gain_ratio(&int(1), &(int(1) / &eps)),
            RatioValue::Finite(int(100))
        );
        assert_eq!(gain_ratio(&int(0), &int(0)), RatioValue::one());
        assert_eq!(gain_ratio(&int(0), &int(3)), RatioValue::Infinite);
        assert_eq!(gain_ratio(&int(2), &int(3)), RatioValue::Finite(frac(3, 2)));
        assert!(RatioValue::Finite(int(1_000_000)) < RatioValue::Infinite);
        assert_eq!(RatioValue::Infinite.to_string(), "inf");
    }

    #[test]
    fn identity_manipulation_changes_nothing() {
        let inst = Instance::from_ints(&[&[3, 2, 1], &[1, 3, 2], &[2, 1, 3]], false).unwrap();
        let truthful = inst.ordinal_profile();
        let coalition = Coalition::ordinal(
            vec![0, 2],
            vec![truthful.orderings[0].clone(), truthful.orderings[2].clone()],
        )
        .unwrap();
        for mech in [
            OrdinalMechanism::RoundRobin,
            OrdinalMechanism::ProbabilisticSerial,
        ] {
            let r = evaluate_manipulation(mech, &inst, &coalition).unwrap();
            assert!(r.per_agent.values().all(|v| *v == RatioValue::one()));
            assert!(r.all_weakly_better);
        }
    }

    #[test]
    fn cardinal_misreport_is_rejected_for_ordinal_mechanisms() {
        let inst = Instance::from_ints(&[&[1, 2], &[2, 1]], false).unwrap();
        let c = Coalition::cardinal(vec![0], vec![vec![int(1), int(1)]]).unwrap();
        assert_eq!(
            evaluate_manipulation(OrdinalMechanism::RoundRobin, &inst, &c),
            Err(IncentiveError::MisreportKind)
        );
    }
}
