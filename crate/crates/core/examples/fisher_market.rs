//! Maximum Nash Welfare through a Fisher market, with equilibrium residuals.

use collusion_lab::fairness::nash_welfare;
use collusion_lab::fisher::{
    mnw_solve, verify_equilibrium, ZeroGoodPolicy, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use collusion_lab::rational;
use collusion_lab::Instance;

fn main() {
    let inst = Instance::from_ints(&[&[4, 1, 1], &[1, 3, 0], &[2, 2, 5]], true).unwrap();
    let (x, outcome) = mnw_solve(
        &inst,
        &ZeroGoodPolicy::Uniform,
        DEFAULT_TOL,
        DEFAULT_MAX_ITER,
    )
    .unwrap();
    println!(
        "prices: {:?} after {} iterations",
        outcome.prices.0, outcome.iterations
    );
    for (a, row) in x.shares.iter().enumerate() {
        let row: Vec<String> = row.iter().map(ToString::to_string).collect();
        println!(
            "agent {a}: [{}] utility {}",
            row.join(", "),
            inst.utility(a, x.row(a))
        );
    }
    let snapped: Vec<Vec<f64>> = x
        .shares
        .iter()
        .map(|r| r.iter().map(rational::to_f64).collect())
        .collect();
    println!("residuals (solver): {:?}", outcome.residuals);
    println!(
        "residuals (snapped): {:?}",
        verify_equilibrium(&inst, &snapped, &outcome.prices.0, 1e-9)
    );
    println!("Nash welfare: {:.9}", nash_welfare(&inst, &x));
}
