//! Every lower-bound construction evaluated against its closed-form ratios.

use collusion_lab::instances::{
    mnw_gir_instance, mnw_sgir_instance, ps_gir_instance, rr_sgir_instance,
};
use collusion_lab::rational::frac;

fn main() {
    let bundles = [
        mnw_gir_instance(4, 2).unwrap(),
        mnw_sgir_instance(4, 2).unwrap(),
        ps_gir_instance(2, 1, 2).unwrap(),
        ps_gir_instance(4, 1, 4).unwrap(),
        rr_sgir_instance(&frac(1, 100)).unwrap(),
    ];
    for b in &bundles {
        let report = b.evaluate().unwrap();
        println!("{} {:?} (limit {})", b.bound, b.params, b.expected_limit);
        for (a, want) in &b.expected_ratios {
            let got = &report.per_agent[a];
            println!(
                "  agent {a}: achieved {got} ({:.6}), expected {want}",
                got.to_f64()
            );
        }
    }
}
