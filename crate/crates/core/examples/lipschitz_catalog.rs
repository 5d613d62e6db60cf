//! The loss catalog's Lipschitz constants, a randomized check of each, and
//! the layered bound for a small network.
//!
//! cargo run --release --example lipschitz_catalog

use datashifts::lipschitz::{layered_hypothesis_lipschitz, loss_lipschitz, verify_constants, LipschitzSpec, LossSpec};

fn main() -> datashifts::Result<()> {
    let losses = [
        LossSpec::AbsoluteError,
        LossSpec::SquaredErrorBounded { m: 2.0 },
        LossSpec::CrossEntropyClamped { a: 0.05 },
    ];
    for loss in &losses {
        let (l, lp) = loss_lipschitz(loss)?;
        let holds = verify_constants(loss, l, lp, 20_000, 1);
        // halving either constant should be caught
        let tight = !verify_constants(loss, 0.5 * l, lp, 20_000, 1) && !verify_constants(loss, l, 0.5 * lp, 20_000, 1);
        println!("{loss:?}: L = {l:.4}, L' = {lp:.4}, verified {holds}, halved constants rejected {tight}");
    }

    // 3-layer ReLU network with spectral norms 1.2, 0.9 and 1.5
    let l_h = layered_hypothesis_lipschitz(&[1.2, 0.9, 1.5], &[1.0, 1.0])?;
    let spec = LipschitzSpec::for_loss(&LossSpec::AbsoluteError, l_h)?;
    println!("\nnetwork L_h = {l_h:.3}\n{}", serde_json::to_string_pretty(&spec)?);
    Ok(())
}
