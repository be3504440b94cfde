//! Round-Robin on a small instance, with its pick sequence and an EF1 check.

use collusion_lab::fairness::is_ef1;
use collusion_lab::mechanisms::round_robin;
use collusion_lab::Instance;

fn main() {
    let inst = Instance::from_ints(&[&[5, 4, 1, 0], &[4, 5, 0, 2], &[1, 1, 3, 3]], false).unwrap();
    let (alloc, trace) = round_robin(&inst.ordinal_profile());
    for pick in &trace.stages {
        println!(
            "stage {}: agent {} takes good {}",
            pick.stage, pick.agent, pick.good
        );
    }
    for (a, bundle) in alloc.bundles.iter().enumerate() {
        println!(
            "agent {a}: {bundle:?} worth {}",
            inst.bundle_utility(a, bundle)
        );
    }
    println!("EF1: {}", is_ef1(&inst, &alloc).holds);
}
