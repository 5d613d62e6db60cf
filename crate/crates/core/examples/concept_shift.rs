//! Concept shift between two labelled samples whose labelling functions
//! differ by a constant, against the value computed from the known laws.
//!
//! cargo run --release --example concept_shift

use datashifts::measures::{Domain, LabeledSample, Metric};
use datashifts::ot::SolverConfig;
use datashifts::seed::stream_rng;
use datashifts::shift::oracle::{total_pair_shift_oracle, ConditionalLaw, LabelFunction, Noise};
use datashifts::shift::{concept_shift, plugin_xshift};
use datashifts::synth::{gen_gaussian_pair, GaussianShiftSpec};

fn main() -> datashifts::Result<()> {
    let f = LabelFunction::Sine {
        weights: vec![1.0, 0.5],
        amplitude: 1.0,
        bias: 0.0,
    };
    let spec = GaussianShiftSpec {
        dimension: 2,
        mean_offset_norm: 0.5,
        sample_size: 600,
        seed: 3,
    };
    let (xs, xt) = gen_gaussian_pair(&spec)?;
    let config = SolverConfig::with_beta(1e-3);

    for (label, source_law, target_law) in [
        (
            "deterministic",
            ConditionalLaw::deterministic(f.clone()),
            ConditionalLaw::deterministic(f.offset(0.4)),
        ),
        (
            "noisy",
            ConditionalLaw {
                function: f.clone(),
                noise: Noise::Gaussian { sigma: 0.2 },
            },
            ConditionalLaw {
                function: f.offset(0.4),
                noise: Noise::Uniform { half_width: 0.3 },
            },
        ),
    ] {
        let ys = source_law.sample_labels(xs.covariates(), &mut stream_rng(3, 2))?;
        let yt = target_law.sample_labels(xt.covariates(), &mut stream_rng(3, 3))?;
        let source = LabeledSample::new(xs.covariates().to_owned(), Some(ys), Domain::Source)?;
        let target = LabeledSample::new(xt.covariates().to_owned(), Some(yt), Domain::Target)?;

        let (_, plan) = plugin_xshift(&source, &target, Metric::Euclidean, &config)?;
        let estimate = concept_shift(&source, &target, &plan, Metric::Euclidean)?;
        let oracle = total_pair_shift_oracle(&source_law, &target_law, xs.covariates(), xt.covariates(), &plan)?;
        let ceiling = source_law.noise.variance().sqrt() + target_law.noise.variance().sqrt();
        println!(
            "{label:>13}: estimate {estimate:.4}, oracle {oracle:.4}, gap {:+.4} (noise ceiling {ceiling:.4})",
            estimate - oracle
        );
    }
    Ok(())
}
