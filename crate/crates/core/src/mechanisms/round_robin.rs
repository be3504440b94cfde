use serde::Serialize;

use crate::model::{IntegralAllocation, OrdinalProfile};

/// One pick: `agent` took `good` at stage `stage` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Pick {
    pub stage: usize,
    pub agent: usize,
    pub good: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RrTrace {
    pub stages: Vec<Pick>,
}

impl RrTrace {
    /// Round index of a stage when `n` agents pick in turn.
    pub fn round_of(stage: usize, n: usize) -> usize {
        stage / n
    }
}

/// Agents pick in index order, each taking the best remaining good under its
/// ordering. When `n` does not divide `m` the final round is partial.
pub fn round_robin(profile: &OrdinalProfile) -> (IntegralAllocation, RrTrace) {
    let n = profile.n();
    let m = profile.m();
    let mut taken = vec![false; m];
    // Per-agent cursor into its ordering; everything before it is taken.
    let mut cursor = vec![0usize; n];
    let mut bundles = vec![Vec::new(); n];
    let mut stages = Vec::with_capacity(m);
    for stage in 0..m {
        let agent = stage % n;
        let ord = &profile.orderings[agent];
        while taken[ord[cursor[agent]]] {
            cursor[agent] += 1;
        }
        let good = ord[cursor[agent]];
        taken[good] = true;
        bundles[agent].push(good);
        stages.push(Pick { stage, agent, good });
    }
    for b in &mut bundles {
        b.sort_unstable();
    }
    (IntegralAllocation { bundles }, RrTrace { stages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fairness::is_ef1;
    use crate::model::Instance;
    use crate::rational::int;
    use proptest::prelude::*;

    #[test]
    fn alternating_picks() {
        let p = OrdinalProfile::new(vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3]]).unwrap();
        let (alloc, trace) = round_robin(&p);
        assert_eq!(alloc.bundles, vec![vec![0, 2], vec![1, 3]]);
        let agents: Vec<usize> = trace.stages.iter().map(|s| s.agent).collect();
        assert_eq!(agents, vec![0, 1, 0, 1]);
    }

    #[test]
    fn partial_final_round() {
        let p = OrdinalProfile::new(vec![vec![0, 1, 2]; 2]).unwrap();
        let (alloc, _) = round_robin(&p);
        assert_eq!(alloc.bundles, vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn three_agent_table_truthful_and_manipulated() {
        let truthful =
            OrdinalProfile::new(vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3], vec![2, 3, 0, 1]])
                .unwrap();
        let (alloc, _) = round_robin(&truthful);
        assert_eq!(alloc.bundles, vec![vec![0, 3], vec![1], vec![2]]);

        let manipulated = truthful.with_orderings(&[(0, vec![2, 1, 0, 3])]);
        let (alloc, _) = round_robin(&manipulated);
        assert_eq!(alloc.bundles, vec![vec![1, 2], vec![0], vec![3]]);
    }

    fn profile_and_values() -> impl Strategy<Value = (OrdinalProfile, Instance)> {
        (1usize..5, 1usize..7).prop_flat_map(|(n, m)| {
            let perms =
                proptest::collection::vec(Just((0..m).collect::<Vec<_>>()).prop_shuffle(), n);
            let steps = proptest::collection::vec(proptest::collection::vec(0i64..4, m), n);
            (perms, steps).prop_map(|(orderings, steps)| {
                // Values non-increasing along each ordering.
                let vals = orderings
                    .iter()
                    .zip(&steps)
                    .map(|(ord, st)| {
                        let mut row = vec![int(0); ord.len()];
                        let mut acc = 0;
                        for (pos, &g) in ord.iter().enumerate().rev() {
                            acc += st[pos];
                            row[g] = int(acc);
                        }
                        row
                    })
                    .collect();
                (
                    OrdinalProfile::new(orderings).unwrap(),
                    Instance::new(vals, false).unwrap(),
                )
            })
        })
    }

    proptest! {
        #[test]
        fn output_is_a_partition_and_agents_alternate((p, _) in profile_and_values()) {
            let (alloc, trace) = round_robin(&p);
            prop_assert!(alloc.validate(p.m()).is_ok());
            let mut seen = std::collections::HashSet::new();
            for pick in &trace.stages {
                prop_assert_eq!(pick.agent, pick.stage % p.n());
                prop_assert!(seen.insert(pick.good));
            }
        }

        #[test]
        fn output_is_ef1_for_consistent_values((p, inst) in profile_and_values()) {
            let (alloc, _) = round_robin(&p);
            prop_assert!(is_ef1(&inst, &alloc).holds);
        }
    }
}
