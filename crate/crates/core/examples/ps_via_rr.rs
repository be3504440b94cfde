//! Probabilistic Serial recovered from Round-Robin over copies of the goods.

use collusion_lab::mechanisms::{
    coupling_violations, factorial_copies, probabilistic_serial, ps_via_rr_traced,
};
use collusion_lab::OrdinalProfile;

fn main() {
    let profile = OrdinalProfile::new(vec![vec![0, 1, 2], vec![1, 0, 2], vec![0, 2, 1]]).unwrap();
    let (direct, _) = probabilistic_serial(&profile);

    let minimal = ps_via_rr_traced(&profile, None).unwrap();
    println!(
        "minimal T = {}: equal = {}",
        minimal.copies,
        minimal.allocation == direct
    );
    println!(
        "coupling violations: {}",
        coupling_violations(&minimal).len()
    );

    let t = factorial_copies(profile.n(), profile.m()).unwrap();
    let factorial = ps_via_rr_traced(&profile, Some(t)).unwrap();
    println!(
        "T = (n!)^m = {}: equal = {}",
        factorial.copies,
        factorial.allocation == direct
    );

    match ps_via_rr_traced(&profile, Some(5)) {
        Ok(_) => println!("T = 5 accepted"),
        Err(e) => println!("T = 5 rejected: {e}"),
    }
}
