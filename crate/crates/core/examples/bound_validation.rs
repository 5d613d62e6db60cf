//! Checks the target error bound on randomly drawn synthetic tasks.
//!
//! cargo run --release --example bound_validation -- [tasks]

use datashifts::ot::SolverConfig;
use datashifts::shift::ShiftOptions;
use datashifts::synth::{run_random_bound_validation, ValidationSummary};

fn main() -> datashifts::Result<()> {
    let count: usize = std::env::args().nth(1).map_or(20, |s| s.parse().expect("task count"));
    let options = ShiftOptions {
        solver: SolverConfig::with_beta(1e-3),
        ..Default::default()
    };
    let rows = run_random_bound_validation(count, 300, 2024, &options)?;
    println!(
        "{:>8} {:>8} {:>8} {:>8} {:>8}",
        "eps_S", "eps_T", "S_cov", "S_cpt", "bound"
    );
    for r in &rows {
        println!(
            "{:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}{}",
            r.source_error,
            r.target_error,
            r.s_cov,
            r.s_cpt,
            r.bound,
            if r.holds { "" } else { "  violated" }
        );
    }
    println!("{}", serde_json::to_string(&ValidationSummary::of(&rows))?);
    Ok(())
}
