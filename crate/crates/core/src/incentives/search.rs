//! Exhaustive enumeration of coalition misreports for ordinal mechanisms.

use itertools::Itertools;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use super::ratio::{OrdinalMechanism, RatioReport, RatioValue};
use crate::error::IncentiveError;
use crate::model::{Coalition, FractionalAllocation, Instance, Usage};
use crate::rational::Rational;

/// Maximum number of manipulated-profile evaluations per search.
pub const SEARCH_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// GIR ranges over every manipulation when true; otherwise only over
    /// manipulations leaving every corrupted agent weakly better off.
    pub gir_literal: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { gir_literal: true }
    }
}

/// Largest finite value seen for one aggregate, the first manipulation (in
/// enumeration order) attaining it, and how many manipulations produced an
/// infinite value instead.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Aggregate {
    pub value: Option<Rational>,
    pub witness: Option<RatioReport>,
    pub infinite: u64,
    pub infinite_witness: Option<RatioReport>,
}

impl Aggregate {
    fn offer(&mut self, v: &RatioValue, report: &RatioReport) {
        match v {
            RatioValue::Infinite => {
                if self.infinite == 0 {
                    self.infinite_witness = Some(report.clone());
                }
                self.infinite += 1;
            }
            RatioValue::Finite(r) => {
                if self.value.as_ref().map_or(true, |best| r > best) {
                    self.value = Some(r.clone());
                    self.witness = Some(report.clone());
                }
            }
        }
    }

    /// Folds `later` (from later in the enumeration) into `self`, keeping the
    /// earliest witness on ties.
    fn merge(&mut self, later: Aggregate) {
        if let Some(v) = later.value {
            if self.value.as_ref().map_or(true, |best| &v > best) {
                self.value = Some(v);
                self.witness = later.witness;
            }
        }
        if self.infinite == 0 {
            self.infinite_witness = later.infinite_witness;
        }
        self.infinite += later.infinite;
    }

    /// The aggregate with infinite witnesses excluded; `Infinite` only when
    /// nothing finite was seen.
    pub fn display_value(&self) -> Option<RatioValue> {
        match (&self.value, self.infinite) {
            (Some(v), _) => Some(RatioValue::Finite(v.clone())),
            (None, 0) => None,
            (None, _) => Some(RatioValue::Infinite),
        }
    }

    /// The aggregate with infinite witnesses included.
    pub fn supremum(&self) -> Option<RatioValue> {
        if self.infinite > 0 {
            Some(RatioValue::Infinite)
        } else {
            self.value.clone().map(RatioValue::Finite)
        }
    }

    pub fn best_witness(&self) -> Option<&RatioReport> {
        self.witness.as_ref().or(self.infinite_witness.as_ref())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Partial {
    ir: Aggregate,
    gir: Aggregate,
    sgir: Aggregate,
    sgir_feasible: u64,
    profiles: u64,
}

impl Partial {
    fn merge(&mut self, later: Partial) {
        self.ir.merge(later.ir);
        self.gir.merge(later.gir);
        self.sgir.merge(later.sgir);
        self.sgir_feasible += later.sgir_feasible;
        self.profiles += later.profiles;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    pub mechanism: OrdinalMechanism,
    pub c: usize,
    pub ir: Aggregate,
    pub gir: Aggregate,
    pub sgir: Aggregate,
    /// Manipulations leaving every corrupted agent weakly better off.
    pub sgir_feasible: u64,
    pub profiles_searched: u64,
}

impl SearchResult {
    pub fn empirical_ir(&self) -> Option<RatioValue> {
        self.ir.display_value()
    }

    pub fn empirical_gir(&self) -> Option<RatioValue> {
        self.gir.display_value()
    }

    pub fn empirical_sgir(&self) -> Option<RatioValue> {
        self.sgir.display_value()
    }
}

struct Empirical<'a>(&'a SearchResult);

impl Serialize for Empirical<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(3))?;
        map.serialize_entry("ir", &self.0.empirical_ir())?;
        map.serialize_entry("gir", &self.0.empirical_gir())?;
        map.serialize_entry("sgir", &self.0.empirical_sgir())?;
        map.end()
    }
}

impl Serialize for SearchResult {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(7))?;
        map.serialize_entry("mechanism", &self.mechanism)?;
        map.serialize_entry("c", &self.c)?;
        map.serialize_entry("empirical", &Empirical(self))?;
        map.serialize_entry(
            "infinite",
            &serde_json::json!({"ir": self.ir.infinite, "gir": self.gir.infinite, "sgir": self.sgir.infinite}),
        )?;
        map.serialize_entry(
            "argmax",
            &serde_json::json!({
                "ir": self.ir.best_witness(),
                "gir": self.gir.best_witness(),
                "sgir": self.sgir.best_witness(),
            }),
        )?;
        map.serialize_entry("sgir_feasible", &self.sgir_feasible)?;
        map.serialize_entry("profiles_searched", &self.profiles_searched)?;
        map.end()
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::from(1), |acc, i| {
        acc * BigInt::from(n - i) / BigInt::from(i + 1)
    })
}

/// Number of manipulated profiles evaluated for coalitions of size `1..=c`.
pub fn search_size(n: usize, m: usize, c: usize) -> BigInt {
    let perms: BigInt = (1..=m).map(BigInt::from).product();
    (1..=c.min(n))
        .map(|k| binomial(n, k) * num_traits::pow(perms.clone(), k))
        .sum()
}

/// Evaluates every coalition of size at most `c` with every joint misreport
/// of strict orderings, identity included.
pub fn exhaustive_search(
    mechanism: OrdinalMechanism,
    inst: &Instance,
    c: usize,
    options: SearchOptions,
) -> Result<SearchResult, IncentiveError> {
    inst.validate(Usage::Ordinal)?;
    let (n, m) = (inst.n(), inst.m());
    let count = search_size(n, m, c);
    if count > BigInt::from(SEARCH_LIMIT) {
        return Err(IncentiveError::SearchTooLarge {
            count: count.to_string(),
            limit: SEARCH_LIMIT,
        });
    }

    let truthful = inst.ordinal_profile();
    let before = mechanism.allocate(&truthful);
    let perms: Vec<Vec<usize>> = (0..m).permutations(m).collect();
    let coalitions: Vec<Vec<usize>> = (1..=c.min(n))
        .flat_map(|k| (0..n).combinations(k))
        .collect();

    let partials: Vec<Partial> = coalitions
        .par_iter()
        .map(|members| search_coalition(mechanism, inst, &before, &perms, members, options))
        .collect();
    let mut total = Partial::default();
    for p in partials {
        total.merge(p);
    }
    Ok(SearchResult {
        mechanism,
        c,
        ir: total.ir,
        gir: total.gir,
        sgir: total.sgir,
        sgir_feasible: total.sgir_feasible,
        profiles_searched: total.profiles,
    })
}

fn search_coalition(
    mechanism: OrdinalMechanism,
    inst: &Instance,
    before: &FractionalAllocation,
    perms: &[Vec<usize>],
    members: &[usize],
    options: SearchOptions,
) -> Partial {
    let truthful = inst.ordinal_profile();
    let mut acc = Partial::default();
    for choice in members
        .iter()
        .map(|_| 0..perms.len())
        .multi_cartesian_product()
    {
        let reports: Vec<Vec<usize>> = choice.iter().map(|&i| perms[i].clone()).collect();
        let coalition =
            Coalition::ordinal(members.to_vec(), reports).expect("members are distinct");
        let replacements = coalition.ordinal_replacements().expect("ordinal misreport");
        let after = mechanism.allocate(&truthful.with_orderings(&replacements));
        let report = RatioReport::from_allocations(inst, &coalition, before, &after);
        acc.profiles += 1;

        if members.len() == 1 {
            acc.ir.offer(&report.max_ratio, &report);
        }
        if options.gir_literal || report.all_weakly_better {
            acc.gir.offer(&report.min_ratio, &report);
        }
        if report.all_weakly_better {
            acc.sgir_feasible += 1;
            acc.sgir.offer(&report.max_ratio, &report);
        }
    }
    acc
}
