//! Empirical check of the target error bound on synthetic tasks with known
//! labelling laws and a hypothesis of known Lipschitz constant.

use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{gen_gaussian_pair, parallel_map, GaussianShiftSpec};
use crate::bound::{assemble_bound, empirical_error};
use crate::error::{Error, Result};
use crate::lipschitz::{LipschitzSpec, LossSpec};
use crate::measures::{Domain, LabeledSample};
use crate::seed::{child_seed, stream_rng};
use crate::shift::oracle::{ConditionalLaw, LabelFunction, Noise};
use crate::shift::{estimate_shifts, ShiftOptions};

/// Random pairs used to check a declared hypothesis constant.
const LIPSCHITZ_CHECK_PAIRS: usize = 2000;
const LIPSCHITZ_SLACK: f64 = 1e-9;

/// A Gaussian covariate pair labelled by one law per domain, a fixed
/// hypothesis `h` with declared constant `hypothesis_lipschitz`, and a loss.
/// The covariate seed is replaced by each trial's seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub covariates: GaussianShiftSpec,
    pub source_law: ConditionalLaw,
    pub target_law: ConditionalLaw,
    pub hypothesis: LabelFunction,
    pub hypothesis_lipschitz: f64,
    pub loss: LossSpec,
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<()> {
        self.covariates.validate()?;
        let d = self.covariates.dimension;
        self.source_law.validate(d)?;
        self.target_law.validate(d)?;
        self.loss.validate()?;
        if self.hypothesis.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.hypothesis.dim(),
            });
        }
        if !(self.hypothesis_lipschitz.is_finite() && self.hypothesis_lipschitz >= 0.0) {
            return Err(Error::InvalidInput(
                "hypothesis Lipschitz constant must be nonnegative".into(),
            ));
        }
        self.check_hypothesis_constant()
    }

    /// Checks `|h(x) - h(x')| ≤ L_h ‖x - x'‖` on random pairs drawn at several
    /// scales around the covariate range.
    fn check_hypothesis_constant(&self) -> Result<()> {
        let d = self.covariates.dimension;
        let mut rng = stream_rng(0x4C49_5053, 0);
        let spread = 3.0 + self.covariates.mean_offset_norm;
        for k in 0..LIPSCHITZ_CHECK_PAIRS {
            let scale = spread * 0.1f64.powi((k % 4) as i32);
            let x = Array2::from_shape_fn((1, d), |_| rng.random_range(-spread..spread));
            let y = &x + &Array2::from_shape_fn((1, d), |_| rng.random_range(-scale..scale));
            let dist = (&x - &y).mapv(|v| v * v).sum().sqrt();
            let gap = (self.hypothesis.eval(x.row(0)) - self.hypothesis.eval(y.row(0))).abs();
            if gap > self.hypothesis_lipschitz * dist + LIPSCHITZ_SLACK {
                return Err(Error::InvalidInput(format!(
                    "hypothesis moves by {gap} over distance {dist}, more than the declared constant {} allows",
                    self.hypothesis_lipschitz
                )));
            }
        }
        Ok(())
    }
}

/// Random task: a sine-linear source law, a target law that perturbs it, a
/// linear hypothesis and the absolute loss. Shift size, noise and dimension
/// all vary with the seed.
pub fn random_task(seed: u64, sample_size: usize) -> SyntheticTaskSpec {
    let mut rng = stream_rng(seed, 7);
    let d = rng.random_range(1..=5usize);
    let mut vector = |norm: f64| {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        v.into_iter().map(|x| x * norm / len).collect::<Vec<f64>>()
    };
    let w_source = vector(1.5);
    let w_drift = vector(0.5);
    let w_h = vector(1.0);
    let mut rng = stream_rng(seed, 8);
    let amplitude = rng.random_range(0.5..1.5);
    let source_fn = LabelFunction::Sine {
        weights: w_source.clone(),
        amplitude,
        bias: 0.0,
    };
    let drift = rng.random_range(0.0..1.0);
    let target_fn = LabelFunction::Sine {
        weights: w_source.iter().zip(&w_drift).map(|(a, b)| a + drift * b).collect(),
        amplitude,
        bias: rng.random_range(-0.5..0.5),
    };
    let noise = |rng: &mut rand_chacha::ChaCha8Rng| match rng.random_range(0..3u8) {
        0 => Noise::None,
        1 => Noise::Gaussian {
            sigma: rng.random_range(0.0..0.3),
        },
        _ => Noise::Uniform {
            half_width: rng.random_range(0.0..0.4),
        },
    };
    let h_scale = rng.random_range(0.2..1.5);
    let hypothesis = LabelFunction::Linear {
        weights: w_h.iter().map(|w| w * h_scale).collect(),
        bias: rng.random_range(-0.3..0.3),
    };
    SyntheticTaskSpec {
        covariates: GaussianShiftSpec {
            dimension: d,
            mean_offset_norm: rng.random_range(0.0..2.0),
            sample_size,
            seed,
        },
        source_law: ConditionalLaw {
            function: source_fn,
            noise: noise(&mut rng),
        },
        target_law: ConditionalLaw {
            function: target_fn,
            noise: noise(&mut rng),
        },
        hypothesis_lipschitz: hypothesis.lipschitz(),
        hypothesis,
        loss: LossSpec::AbsoluteError,
    }
}

/// One trial of the bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTrial {
    pub seed: u64,
    pub trial: usize,
    pub source_error: f64,
    pub target_error: f64,
    pub s_cov: f64,
    pub s_cpt: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub trials: usize,
    pub holds: usize,
    pub holds_rate: f64,
    /// Smallest `(B - ε̂_T) / B` over the trials.
    pub worst_relative_gap: f64,
}

impl ValidationSummary {
    pub fn of(rows: &[BoundTrial]) -> Self {
        let holds = rows.iter().filter(|r| r.holds).count();
        let worst = rows
            .iter()
            .map(|r| (r.bound - r.target_error) / r.bound)
            .fold(f64::INFINITY, f64::min);
        ValidationSummary {
            trials: rows.len(),
            holds,
            holds_rate: if rows.is_empty() {
                f64::NAN
            } else {
                holds as f64 / rows.len() as f64
            },
            worst_relative_gap: worst,
        }
    }
}

/// Runs `trials` independent draws of the task for each seed; draw `t` of
/// seed `s` uses the trial seed `child_seed(s, t)` for data, labels and
/// splits. The seed inside `options` is ignored.
pub fn run_bound_validation(
    task: &SyntheticTaskSpec,
    trials: usize,
    seeds: &[u64],
    options: &ShiftOptions,
) -> Result<Vec<BoundTrial>> {
    task.validate()?;
    options.solver.validate()?;
    let jobs: Vec<(u64, usize)> = seeds.iter().flat_map(|&s| (0..trials).map(move |t| (s, t))).collect();
    parallel_map(&jobs, |&(seed, trial)| bound_trial(task, seed, trial, options))
        .into_iter()
        .collect()
}

/// One draw from each of `count` random tasks. Task `k` is built from and
/// drawn with `child_seed(seed, k)`, which is also its row's seed.
pub fn run_random_bound_validation(
    count: usize,
    sample_size: usize,
    seed: u64,
    options: &ShiftOptions,
) -> Result<Vec<BoundTrial>> {
    options.solver.validate()?;
    let seeds: Vec<u64> = (0..count as u64).map(|k| child_seed(seed, k)).collect();
    parallel_map(&seeds, |&task_seed| {
        let task = random_task(task_seed, sample_size);
        task.validate()?;
        bound_trial(&task, task_seed, 0, options)
    })
    .into_iter()
    .collect()
}

fn bound_trial(task: &SyntheticTaskSpec, seed: u64, trial: usize, options: &ShiftOptions) -> Result<BoundTrial> {
    let trial_seed = child_seed(seed, trial as u64);
    let (xs, xt) = gen_gaussian_pair(&GaussianShiftSpec {
        seed: trial_seed,
        ..task.covariates
    })?;
    let ys = task
        .source_law
        .sample_labels(xs.covariates(), &mut stream_rng(trial_seed, 2))?;
    let yt = task
        .target_law
        .sample_labels(xt.covariates(), &mut stream_rng(trial_seed, 3))?;
    let source = LabeledSample::new(xs.covariates().to_owned(), Some(ys), Domain::Source)?;
    let target = LabeledSample::new(xt.covariates().to_owned(), Some(yt), Domain::Target)?;
    let predict = |s: &LabeledSample| {
        let p: Vec<f64> = s.covariates().outer_iter().map(|x| task.hypothesis.eval(x)).collect();
        Array2::from_shape_vec((p.len(), 1), p).expect("column shape")
    };
    let source_error = empirical_error(&source, predict(&source).view(), &task.loss)?;
    let target_error = empirical_error(&target, predict(&target).view(), &task.loss)?;
    let options = ShiftOptions {
        seed: child_seed(trial_seed, 0),
        ..*options
    };
    let shifts = estimate_shifts(&source, &target, &options)?;
    let lipschitz = LipschitzSpec::for_loss(&task.loss, task.hypothesis_lipschitz)?;
    let report = assemble_bound(&shifts, lipschitz, source_error)?;
    Ok(BoundTrial {
        seed,
        trial,
        source_error,
        target_error,
        s_cov: shifts.s_cov,
        s_cpt: shifts.s_cpt.unwrap_or(0.0),
        bound: report.bound,
        holds: target_error <= report.bound,
    })
}

/// Per-trial rows followed by nothing else; the summary goes to its own file
/// or stream so the table stays rectangular.
pub fn write_bound_csv<W: Write>(rows: &[BoundTrial], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "seed",
            "trial",
            "source_error",
            "target_error",
            "s_cov",
            "s_cpt",
            "bound",
            "holds",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
