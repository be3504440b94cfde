//! Exhaustive coalition search for Round-Robin and Probabilistic Serial.

use collusion_lab::incentives::{exhaustive_search, OrdinalMechanism, SearchOptions};
use collusion_lab::Instance;

fn main() {
    let inst = Instance::from_ints(&[&[3, 2, 1, 0], &[3, 0, 2, 1], &[1, 3, 0, 2]], false).unwrap();
    for mech in [
        OrdinalMechanism::RoundRobin,
        OrdinalMechanism::ProbabilisticSerial,
    ] {
        for c in 1..=2 {
            let r = exhaustive_search(mech, &inst, c, SearchOptions::default()).unwrap();
            let show = |v: Option<collusion_lab::incentives::RatioValue>| {
                v.map_or("-".into(), |v| v.to_string())
            };
            println!(
                "{} c={c}: IR {} GIR {} SGIR {} (infinite SGIR witnesses: {}, profiles: {})",
                mech.label(),
                show(r.empirical_ir()),
                show(r.empirical_gir()),
                show(r.empirical_sgir()),
                r.sgir.infinite,
                r.profiles_searched
            );
            if let Some(w) = r.sgir.best_witness() {
                println!(
                    "  SGIR witness: {}",
                    serde_json::to_string(&w.coalition).unwrap()
                );
            }
        }
    }
}
