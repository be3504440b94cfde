//! The best single-agent manipulation of Probabilistic Serial on a small
//! instance, and the gain the same shares give under the derived 0/1
//! valuation.

use collusion_lab::incentives::{
    binary_reduction_for_rows, exhaustive_search, OrdinalMechanism, SearchOptions,
};
use collusion_lab::Instance;

fn main() {
    let inst = Instance::from_ints(&[&[6, 5, 1], &[6, 1, 5], &[5, 6, 1]], true).unwrap();
    let mech = OrdinalMechanism::ProbabilisticSerial;
    let search = exhaustive_search(mech, &inst, 1, SearchOptions::default()).unwrap();
    let best = search.ir.best_witness().unwrap();
    let a = best.coalition.members()[0];

    let truthful = inst.ordinal_profile();
    let before = mech.allocate(&truthful);
    let after =
        mech.allocate(&truthful.with_orderings(&best.coalition.ordinal_replacements().unwrap()));
    let red = binary_reduction_for_rows(&truthful.orderings[a], before.row(a), after.row(a));

    println!(
        "agent {a} reports {:?}",
        best.coalition.ordinal_replacements().unwrap()[0].1
    );
    println!("cardinal ratio: {}", best.per_agent[&a]);
    let prefixes: Vec<String> = red.prefix_ratios.iter().map(ToString::to_string).collect();
    println!("prefix ratios: [{}]", prefixes.join(", "));
    let v: Vec<String> = red.valuation.iter().map(ToString::to_string).collect();
    println!(
        "binary valuation: [{}], cut after {} goods",
        v.join(", "),
        red.cut
    );
    println!("binary ratio: {}", red.r_max);
}
