//! The eating steps of Probabilistic Serial and the resulting shares.

use collusion_lab::fairness::is_envy_free;
use collusion_lab::mechanisms::probabilistic_serial;
use collusion_lab::Instance;

fn main() {
    let inst = Instance::from_ints(&[&[3, 2, 1], &[2, 3, 1], &[3, 1, 2]], true).unwrap();
    let (x, trace) = probabilistic_serial(&inst.ordinal_profile());
    for (k, step) in trace.steps.iter().enumerate() {
        println!(
            "step {}: lasts {}, eaten {:?}, finished {:?}",
            k + 1,
            step.duration,
            step.eaters,
            step.finished
        );
    }
    for (a, row) in x.shares.iter().enumerate() {
        let row: Vec<String> = row.iter().map(ToString::to_string).collect();
        println!("agent {a}: [{}]", row.join(", "));
    }
    println!("envy-free: {}", is_envy_free(&inst, &x).holds);
}
