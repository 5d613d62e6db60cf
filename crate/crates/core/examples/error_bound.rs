//! The full pipeline on labelled data: both shifts and the target error
//! bound, next to the target error it is meant to cover.
//!
//! cargo run --release --example error_bound

use datashifts::bound::{datashifts, empirical_error};
use datashifts::lipschitz::{LipschitzSpec, LossSpec};
use datashifts::measures::{Domain, LabeledSample};
use datashifts::seed::stream_rng;
use datashifts::shift::oracle::{ConditionalLaw, LabelFunction, Noise};
use datashifts::shift::ShiftOptions;
use datashifts::synth::{gen_gaussian_pair, GaussianShiftSpec};
use ndarray::Array2;

fn main() -> datashifts::Result<()> {
    let (xs, xt) = gen_gaussian_pair(&GaussianShiftSpec {
        dimension: 3,
        mean_offset_norm: 1.0,
        sample_size: 500,
        seed: 11,
    })?;
    let truth = LabelFunction::Sine {
        weights: vec![1.0, -0.5, 0.25],
        amplitude: 1.0,
        bias: 0.0,
    };
    let source_law = ConditionalLaw {
        function: truth.clone(),
        noise: Noise::Gaussian { sigma: 0.1 },
    };
    let target_law = ConditionalLaw {
        function: truth.offset(0.2),
        noise: Noise::Gaussian { sigma: 0.1 },
    };
    let label = |law: &ConditionalLaw, x: &LabeledSample, stream, domain| -> datashifts::Result<LabeledSample> {
        let y = law.sample_labels(x.covariates(), &mut stream_rng(11, stream))?;
        LabeledSample::new(x.covariates().to_owned(), Some(y), domain)
    };
    let source = label(&source_law, &xs, 2, Domain::Source)?;
    let target = label(&target_law, &xt, 3, Domain::Target)?;

    // a linear hypothesis h(x) = <w, x> with L_h = |w|
    let w = [0.8, -0.4, 0.2];
    let l_h = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let predict = |s: &LabeledSample| {
        Array2::from_shape_fn((s.len(), 1), |(i, _)| {
            s.covariates().row(i).iter().zip(&w).map(|(x, w)| x * w).sum()
        })
    };
    let loss = LossSpec::AbsoluteError;
    let source_error = empirical_error(&source, predict(&source).view(), &loss)?;
    let target_error = empirical_error(&target, predict(&target).view(), &loss)?;

    let lipschitz = LipschitzSpec::for_loss(&loss, l_h)?;
    let mut report = datashifts(
        &source,
        &target,
        &ShiftOptions::default(),
        Some(lipschitz),
        Some(source_error),
    )?;
    if let Some(b) = report.bound.as_mut() {
        b.target_error = Some(target_error);
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    let b = report.bound.expect("bound requested");
    println!(
        "\nε̂_T = {target_error:.4} ≤ B = {:.4}: {}",
        b.bound,
        target_error <= b.bound
    );
    Ok(())
}
