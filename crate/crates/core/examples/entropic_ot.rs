//! Entropic OT between two small point clouds, compared against the exact
//! W1 as β shrinks.
//!
//! cargo run --release --example entropic_ot

use datashifts::measures::{cost_matrix, Metric};
use datashifts::ot::{entropic_ot, exact_w1, SolverConfig};
use ndarray::{array, Array1};

fn main() -> datashifts::Result<()> {
    let a = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]];
    let b = array![[0.5, 0.2], [1.5, 1.0], [0.2, 1.8]];
    let cost = cost_matrix(a.view(), b.view(), Metric::Euclidean)?;
    let mu = Array1::from_elem(4, 0.25);
    let nu = array![0.5, 0.25, 0.25];

    let exact = exact_w1(&cost, mu.view(), nu.view())?;
    println!("exact W1 = {exact:.6}");
    println!(
        "{:>8} {:>12} {:>12} {:>10} {:>6}",
        "beta", "<C,gamma>", "objective", "violation", "iters"
    );
    for beta in [1.0, 0.1, 1e-2, 1e-3, 1e-4] {
        let plan = entropic_ot(&cost, mu.view(), nu.view(), &SolverConfig::with_beta(beta))?;
        println!(
            "{beta:>8.0e} {:>12.6} {:>12.6} {:>10.1e} {:>6}",
            plan.transport_cost, plan.objective, plan.marginal_violation, plan.iterations
        );
    }

    // β = 0 goes to the exact min-cost-flow solver
    let plan = entropic_ot(&cost, mu.view(), nu.view(), &SolverConfig::with_beta(0.0))?;
    println!("\nexact plan:\n{:.3}", plan.coupling);
    Ok(())
}
