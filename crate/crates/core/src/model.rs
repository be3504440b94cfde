//! Domain types shared by every mechanism: instances, ordinal profiles,
//! fractional and integral allocations, and coalitions.
//!
//! Agents and goods are 0-based everywhere in code and on the wire.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::rational::{self, Rational};

/// Which downstream consumer an instance is validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Usage {
    Ordinal,
    /// The Fisher market additionally requires every agent to value some good.
    Fisher,
}

/// `n` agents with additive valuations over `m` goods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceWire", into = "InstanceWire")]
pub struct Instance {
    valuations: Vec<Vec<Rational>>,
    divisible: bool,
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    n: usize,
    m: usize,
    #[serde(default)]
    divisible: bool,
    #[serde(with = "rational::matrix")]
    valuations: Vec<Vec<Rational>>,
}

impl TryFrom<InstanceWire> for Instance {
    type Error = ModelError;

    fn try_from(w: InstanceWire) -> Result<Self, ModelError> {
        let inst = Instance::new(w.valuations, w.divisible)?;
        if inst.n() != w.n || inst.m() != w.m {
            return Err(ModelError::ShapeMismatch {
                declared_n: w.n,
                declared_m: w.m,
            });
        }
        Ok(inst)
    }
}

impl From<Instance> for InstanceWire {
    fn from(inst: Instance) -> Self {
        InstanceWire {
            n: inst.n(),
            m: inst.m(),
            divisible: inst.divisible,
            valuations: inst.valuations,
        }
    }
}

impl Instance {
    /// Builds an instance from a rectangular valuation matrix. Sign and
    /// zero-row checks are left to [`Instance::validate`].
    pub fn new(valuations: Vec<Vec<Rational>>, divisible: bool) -> Result<Self, ModelError> {
        let m = valuations.first().map_or(0, Vec::len);
        if valuations.is_empty() || m == 0 {
            return Err(ModelError::EmptyInstance);
        }
        for (agent, row) in valuations.iter().enumerate() {
            if row.len() != m {
                return Err(ModelError::RaggedRow {
                    agent,
                    expected: m,
                    found: row.len(),
                });
            }
        }
        Ok(Instance {
            valuations,
            divisible,
        })
    }

    /// Convenience constructor from integer entries.
    pub fn from_ints(rows: &[&[i64]], divisible: bool) -> Result<Self, ModelError> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&v| rational::int(v)).collect())
                .collect(),
            divisible,
        )
    }

    pub fn n(&self) -> usize {
        self.valuations.len()
    }

    pub fn m(&self) -> usize {
        self.valuations[0].len()
    }

    pub fn divisible(&self) -> bool {
        self.divisible
    }

    pub fn valuations(&self) -> &[Vec<Rational>] {
        &self.valuations
    }

    pub fn value(&self, agent: usize, good: usize) -> &Rational {
        &self.valuations[agent][good]
    }

    /// Same goods, with some agents' rows replaced.
    pub fn with_rows(&self, replacements: &[(usize, Vec<Rational>)]) -> Result<Self, ModelError> {
        let mut valuations = self.valuations.clone();
        for (agent, row) in replacements {
            valuations[*agent] = row.clone();
        }
        Self::new(valuations, self.divisible)
    }

    pub fn validate(&self, usage: Usage) -> Result<(), ModelError> {
        for (agent, row) in self.valuations.iter().enumerate() {
            if let Some(good) = row.iter().position(|v| v.is_negative()) {
                return Err(ModelError::NegativeValue { agent, good });
            }
        }
        if usage == Usage::Fisher {
            if let Some(agent) = self
                .valuations
                .iter()
                .position(|row| row.iter().all(Zero::is_zero))
            {
                return Err(ModelError::ZeroRow { agent });
            }
        }
        Ok(())
    }

    /// Strict ordering per agent consistent with the values; equal values
    /// are ordered by ascending good index.
    pub fn ordinal_profile(&self) -> OrdinalProfile {
        let orderings = self
            .valuations
            .iter()
            .map(|row| {
                let mut goods: Vec<usize> = (0..row.len()).collect();
                // Stable sort keeps ascending index among ties.
                goods.sort_by(|&a, &b| row[b].cmp(&row[a]));
                goods
            })
            .collect();
        OrdinalProfile { orderings }
    }

    /// Additive value of a fractional bundle.
    pub fn utility(&self, agent: usize, shares: &[Rational]) -> Rational {
        self.valuations[agent]
            .iter()
            .zip(shares)
            .filter(|(_, x)| !x.is_zero())
            .fold(Rational::zero(), |acc, (v, x)| acc + v * x)
    }

    /// Additive value of an integral bundle.
    pub fn bundle_utility(&self, agent: usize, bundle: &[usize]) -> Rational {
        rational::sum(bundle.iter().map(|&g| &self.valuations[agent][g]))
    }
}

/// One strict preference ordering per agent, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrdinalProfile {
    pub orderings: Vec<Vec<usize>>,
}

impl OrdinalProfile {
    pub fn new(orderings: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        let profile = OrdinalProfile { orderings };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let m = self.orderings.first().map_or(0, Vec::len);
        if self.orderings.is_empty() || m == 0 {
            return Err(ModelError::EmptyInstance);
        }
        for (agent, ord) in self.orderings.iter().enumerate() {
            let mut seen = vec![false; m];
            let ok = ord.len() == m
                && ord
                    .iter()
                    .all(|&g| g < m && !std::mem::replace(&mut seen[g], true));
            if !ok {
                return Err(ModelError::NotAPermutation { agent, m });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.orderings.len()
    }

    pub fn m(&self) -> usize {
        self.orderings[0].len()
    }

    /// Profile with some agents' orderings replaced.
    pub fn with_orderings(&self, replacements: &[(usize, Vec<usize>)]) -> Self {
        let mut orderings = self.orderings.clone();
        for (agent, ord) in replacements {
            orderings[*agent] = ord.clone();
        }
        OrdinalProfile { orderings }
    }
}

/// Row `a` holds agent `a`'s share of every good; every column sums to 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FractionalAllocation {
    #[serde(with = "rational::matrix")]
    pub shares: Vec<Vec<Rational>>,
}

impl FractionalAllocation {
    pub fn zeros(n: usize, m: usize) -> Self {
        FractionalAllocation {
            shares: vec![vec![Rational::zero(); m]; n],
        }
    }

    pub fn n(&self) -> usize {
        self.shares.len()
    }

    pub fn m(&self) -> usize {
        self.shares.first().map_or(0, Vec::len)
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.shares[agent]
    }

    pub fn column_sum(&self, good: usize) -> Rational {
        rational::sum(self.shares.iter().map(|row| &row[good]))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (agent, row) in self.shares.iter().enumerate() {
            for (good, x) in row.iter().enumerate() {
                if x.is_negative() || *x > Rational::one() {
                    return Err(ModelError::ShareRange { agent, good });
                }
            }
        }
        for good in 0..self.m() {
            let sum = self.column_sum(good);
            if !sum.is_one() {
                return Err(ModelError::ColumnSum {
                    good,
                    sum: sum.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Bundles of indivisible goods, one per agent, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegralAllocation {
    pub bundles: Vec<Vec<usize>>,
}

impl IntegralAllocation {
    pub fn validate(&self, m: usize) -> Result<(), ModelError> {
        let mut seen = vec![false; m];
        for bundle in &self.bundles {
            for &g in bundle {
                if g >= m || std::mem::replace(&mut seen[g], true) {
                    return Err(ModelError::NotAPartition(format!(
                        "good {g} repeated or out of range"
                    )));
                }
            }
        }
        if let Some(g) = seen.iter().position(|s| !s) {
            return Err(ModelError::NotAPartition(format!("good {g} unassigned")));
        }
        Ok(())
    }

    /// The 0/1 share matrix of this allocation.
    pub fn to_fractional(&self, m: usize) -> FractionalAllocation {
        let mut alloc = FractionalAllocation::zeros(self.bundles.len(), m);
        for (a, bundle) in self.bundles.iter().enumerate() {
            for &g in bundle {
                alloc.shares[a][g] = Rational::one();
            }
        }
        alloc
    }
}

/// Replacement preferences reported by the coalition members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Misreport {
    Ordinal(Vec<Vec<usize>>),
    Cardinal(#[serde(with = "rational::matrix")] Vec<Vec<Rational>>),
}

/// A set of corrupted agents together with what each of them reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coalition {
    members: Vec<usize>,
    misreport: Misreport,
}

impl Coalition {
    /// `members` must be distinct; `misreport` holds one entry per member in
    /// the same order. Members are stored in ascending order.
    pub fn new(members: Vec<usize>, misreport: Misreport) -> Result<Self, ModelError> {
        if members.is_empty() {
            return Err(ModelError::InvalidCoalition("empty coalition".into()));
        }
        let distinct: BTreeSet<_> = members.iter().collect();
        if distinct.len() != members.len() {
            return Err(ModelError::InvalidCoalition("repeated member".into()));
        }
        let reports = match &misreport {
            Misreport::Ordinal(v) => v.len(),
            Misreport::Cardinal(v) => v.len(),
        };
        if reports != members.len() {
            return Err(ModelError::InvalidCoalition(format!(
                "{} members but {} misreports",
                members.len(),
                reports
            )));
        }
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by_key(|&i| members[i]);
        let members_sorted = order.iter().map(|&i| members[i]).collect();
        let misreport = match misreport {
            Misreport::Ordinal(v) => {
                Misreport::Ordinal(order.iter().map(|&i| v[i].clone()).collect())
            }
            Misreport::Cardinal(v) => {
                Misreport::Cardinal(order.iter().map(|&i| v[i].clone()).collect())
            }
        };
        Ok(Coalition {
            members: members_sorted,
            misreport,
        })
    }

    pub fn ordinal(members: Vec<usize>, orderings: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        Self::new(members, Misreport::Ordinal(orderings))
    }

    pub fn cardinal(members: Vec<usize>, rows: Vec<Vec<Rational>>) -> Result<Self, ModelError> {
        Self::new(members, Misreport::Cardinal(rows))
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn misreport(&self) -> &Misreport {
        &self.misreport
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.members.binary_search(&agent).is_ok()
    }

    /// Checks members are in range and each misreport has the right shape.
    pub fn validate(&self, n: usize, m: usize) -> Result<(), ModelError> {
        if let Some(&a) = self.members.iter().find(|&&a| a >= n) {
            return Err(ModelError::InvalidCoalition(format!(
                "agent {a} out of range"
            )));
        }
        match &self.misreport {
            Misreport::Ordinal(v) => {
                OrdinalProfile::new(v.clone()).and_then(|p| {
                    if p.m() == m {
                        Ok(())
                    } else {
                        Err(ModelError::InvalidCoalition(
                            "misreport over wrong goods".into(),
                        ))
                    }
                })?;
            }
            Misreport::Cardinal(v) => {
                if v.iter().any(|row| row.len() != m) {
                    return Err(ModelError::InvalidCoalition(
                        "misreport over wrong goods".into(),
                    ));
                }
                if v.iter().flatten().any(Signed::is_negative) {
                    return Err(ModelError::InvalidCoalition(
                        "negative misreported value".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Ordinal replacements as `(agent, ordering)` pairs.
    pub fn ordinal_replacements(&self) -> Option<Vec<(usize, Vec<usize>)>> {
        match &self.misreport {
            Misreport::Ordinal(v) => Some(
                self.members
                    .iter()
                    .copied()
                    .zip(v.iter().cloned())
                    .collect(),
            ),
            Misreport::Cardinal(_) => None,
        }
    }

    pub fn cardinal_replacements(&self) -> Option<Vec<(usize, Vec<Rational>)>> {
        match &self.misreport {
            Misreport::Cardinal(v) => Some(
                self.members
                    .iter()
                    .copied()
                    .zip(v.iter().cloned())
                    .collect(),
            ),
            Misreport::Ordinal(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use proptest::prelude::*;

    #[test]
    fn validation_examples() {
        let ok = Instance::from_ints(&[&[1, 1], &[0, 1]], true).unwrap();
        assert_eq!(ok.validate(Usage::Ordinal), Ok(()));
        assert_eq!(ok.validate(Usage::Fisher), Ok(()));

        let neg = Instance::from_ints(&[&[-1]], true).unwrap();
        assert_eq!(
            neg.validate(Usage::Ordinal),
            Err(ModelError::NegativeValue { agent: 0, good: 0 })
        );

        let zero = Instance::from_ints(&[&[1, 1], &[0, 0]], true).unwrap();
        assert_eq!(zero.validate(Usage::Ordinal), Ok(()));
        assert_eq!(
            zero.validate(Usage::Fisher),
            Err(ModelError::ZeroRow { agent: 1 })
        );

        assert_eq!(Instance::new(vec![], true), Err(ModelError::EmptyInstance));
        assert_eq!(
            Instance::new(vec![vec![]], true),
            Err(ModelError::EmptyInstance)
        );
        assert!(matches!(
            Instance::from_ints(&[&[1, 2], &[1]], true),
            Err(ModelError::RaggedRow { agent: 1, .. })
        ));
    }

    #[test]
    fn ordinal_examples() {
        let inst = Instance::from_ints(&[&[3, 1, 2], &[1, 1, 1], &[0, 0, 2]], false).unwrap();
        let p = inst.ordinal_profile();
        assert_eq!(p.orderings[0], vec![0, 2, 1]);
        assert_eq!(p.orderings[1], vec![0, 1, 2]);

        let row = Instance::from_ints(&[&[0, 0, 2, 1]], false).unwrap();
        assert_eq!(row.ordinal_profile().orderings[0], vec![2, 3, 0, 1]);
    }

    #[test]
    fn utility_examples() {
        let inst = Instance::from_ints(&[&[1, 2]], true).unwrap();
        assert_eq!(inst.utility(0, &[frac(1, 2), frac(1, 2)]), frac(3, 2));
        assert_eq!(inst.bundle_utility(0, &[]), int(0));

        let eps = frac(1, 100);
        let row = vec![int(1) + &eps * int(2), int(1) + &eps, int(1), int(0)];
        let inst = Instance::new(vec![row], false).unwrap();
        assert_eq!(inst.bundle_utility(0, &[0, 3]), frac(51, 50));
    }

    #[test]
    fn instance_json_shape() {
        let inst = Instance::new(vec![vec![frac(1, 2), int(3)]], true).unwrap();
        let s = serde_json::to_string(&inst).unwrap();
        assert_eq!(
            s,
            r#"{"n":1,"m":2,"divisible":true,"valuations":[["1/2","3"]]}"#
        );
        let back: Instance = serde_json::from_str(&s).unwrap();
        assert_eq!(back, inst);

        let mixed: Instance =
            serde_json::from_str(r#"{"n":1,"m":2,"divisible":false,"valuations":[[1,"2/4"]]}"#)
                .unwrap();
        assert_eq!(mixed.value(0, 1), &frac(1, 2));

        let bad = serde_json::from_str::<Instance>(
            r#"{"n":2,"m":2,"divisible":true,"valuations":[[1,1]]}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn profile_validation() {
        assert!(OrdinalProfile::new(vec![vec![0, 1], vec![1, 0]]).is_ok());
        assert!(matches!(
            OrdinalProfile::new(vec![vec![0, 0]]),
            Err(ModelError::NotAPermutation { agent: 0, .. })
        ));
        assert!(OrdinalProfile::new(vec![vec![0, 1], vec![0]]).is_err());
        assert!(OrdinalProfile::new(vec![vec![0, 2]]).is_err());
    }

    #[test]
    fn allocation_validation() {
        let half = FractionalAllocation {
            shares: vec![vec![frac(1, 2)], vec![frac(1, 2)]],
        };
        assert!(half.validate().is_ok());
        let short = FractionalAllocation {
            shares: vec![vec![frac(1, 2)], vec![frac(1, 3)]],
        };
        assert!(matches!(
            short.validate(),
            Err(ModelError::ColumnSum { good: 0, .. })
        ));

        let part = IntegralAllocation {
            bundles: vec![vec![0, 2], vec![1]],
        };
        assert!(part.validate(3).is_ok());
        assert!(part.validate(4).is_err());
        let dup = IntegralAllocation {
            bundles: vec![vec![0], vec![0, 1]],
        };
        assert!(dup.validate(2).is_err());
    }

    #[test]
    fn coalition_sorts_members_with_reports() {
        let c = Coalition::ordinal(vec![2, 0], vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(c.members(), &[0, 2]);
        assert_eq!(
            c.ordinal_replacements().unwrap(),
            vec![(0, vec![0, 1]), (2, vec![1, 0])]
        );
        assert!(Coalition::ordinal(vec![], vec![]).is_err());
        assert!(Coalition::ordinal(vec![1, 1], vec![vec![0], vec![0]]).is_err());
        assert!(Coalition::ordinal(vec![1], vec![]).is_err());
        assert!(c.validate(2, 2).is_err());
        assert!(c.validate(3, 2).is_ok());
    }

    fn instance_strategy() -> impl Strategy<Value = Instance> {
        (1usize..5, 1usize..6).prop_flat_map(|(n, m)| {
            proptest::collection::vec(proptest::collection::vec((0i64..6, 1i64..4), m), n).prop_map(
                |rows| {
                    let vals = rows
                        .into_iter()
                        .map(|r| r.into_iter().map(|(p, q)| frac(p, q)).collect())
                        .collect();
                    Instance::new(vals, false).unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn ordinal_profile_is_consistent(inst in instance_strategy()) {
            let p = inst.ordinal_profile();
            prop_assert!(p.validate().is_ok());
            for (a, ord) in p.orderings.iter().enumerate() {
                for w in ord.windows(2) {
                    prop_assert!(inst.value(a, w[0]) >= inst.value(a, w[1]));
                    if inst.value(a, w[0]) == inst.value(a, w[1]) {
                        prop_assert!(w[0] < w[1]);
                    }
                }
            }
        }

        #[test]
        fn bundle_utility_is_additive(inst in instance_strategy(), mask in proptest::collection::vec(0u8..3, 5)) {
            let m = inst.m();
            let s: Vec<usize> = (0..m).filter(|&g| mask[g] == 0).collect();
            let t: Vec<usize> = (0..m).filter(|&g| mask[g] == 1).collect();
            let st: Vec<usize> = (0..m).filter(|&g| mask[g] <= 1).collect();
            for a in 0..inst.n() {
                prop_assert_eq!(
                    inst.bundle_utility(a, &st),
                    inst.bundle_utility(a, &s) + inst.bundle_utility(a, &t)
                );
            }
        }
    }
}
