//! Probabilistic Serial as a finite sequence of eating steps.
//!
//! At each step every agent eats its favorite available good at unit speed.
//! The step lasts until the first good runs out; every good that runs out at
//! that instant is removed together.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::model::{FractionalAllocation, OrdinalProfile};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PsStep {
    /// Duration of the step.
    #[serde(rename = "t", with = "rational::text")]
    pub duration: Rational,
    /// Goods that ran out at the end of the step.
    pub finished: Vec<usize>,
    /// Good being eaten -> agents eating it, fixed for the whole step.
    pub eaters: BTreeMap<usize, Vec<usize>>,
    /// Time each eaten good would need to run out at the current rate.
    #[serde(skip)]
    pub candidates: BTreeMap<usize, Rational>,
    /// Goods still available after the step.
    #[serde(skip)]
    pub available: Vec<usize>,
    /// Partial allocation after the step.
    #[serde(skip)]
    pub snapshot: FractionalAllocation,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PsTrace {
    pub steps: Vec<PsStep>,
}

impl PsTrace {
    pub fn durations(&self) -> impl Iterator<Item = &Rational> {
        self.steps.iter().map(|s| &s.duration)
    }

    pub fn total_time(&self) -> Rational {
        rational::sum(self.durations())
    }

    /// Good eaten by `agent` during step `k`.
    pub fn good_eaten(&self, k: usize, agent: usize) -> Option<usize> {
        self.steps[k]
            .eaters
            .iter()
            .find(|(_, agents)| agents.contains(&agent))
            .map(|(&g, _)| g)
    }
}

pub fn probabilistic_serial(profile: &OrdinalProfile) -> (FractionalAllocation, PsTrace) {
    let n = profile.n();
    let m = profile.m();
    let mut x = FractionalAllocation::zeros(n, m);
    let mut consumed = vec![Rational::zero(); m];
    let mut available = vec![true; m];
    let mut remaining_goods = m;
    let mut steps = Vec::new();

    while remaining_goods > 0 {
        let mut eaters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (a, ord) in profile.orderings.iter().enumerate() {
            let fav = ord
                .iter()
                .copied()
                .find(|&g| available[g])
                .expect("a good is available");
            eaters.entry(fav).or_default().push(a);
        }
        let candidates: BTreeMap<usize, Rational> = eaters
            .iter()
            .map(|(&g, agents)| {
                let left = Rational::one() - &consumed[g];
                (g, left / rational::int(agents.len() as i64))
            })
            .collect();
        let duration = candidates
            .values()
            .min()
            .expect("some good is eaten")
            .clone();

        for (&g, agents) in &eaters {
            for &a in agents {
                x.shares[a][g] += &duration;
            }
            consumed[g] += &duration * rational::int(agents.len() as i64);
        }
        let finished: Vec<usize> = candidates
            .iter()
            .filter(|(_, t)| **t == duration)
            .map(|(&g, _)| g)
            .collect();
        for &g in &finished {
            debug_assert!(consumed[g].is_one());
            available[g] = false;
        }
        remaining_goods -= finished.len();

        steps.push(PsStep {
            duration,
            finished,
            eaters,
            candidates,
            available: (0..m).filter(|&g| available[g]).collect(),
            snapshot: x.clone(),
        });
    }
    (x, PsTrace { steps })
}
