//! How fast the estimators settle on their oracle values as n grows.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{gen_gaussian_pair, median, parallel_map, GaussianShiftSpec};
use crate::error::Result;
use crate::measures::{Domain, LabeledSample, Metric};
use crate::ot::SolverConfig;
use crate::seed::{child_seed, stream_rng};
use crate::shift::oracle::{total_pair_shift_oracle, ConditionalLaw};
use crate::shift::{concept_shift, debiased_xshift, plugin_xshift, SplitScheme};

/// Debiased X-shift on one Gaussian pair against the true distance `‖T‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub seed: u64,
    pub estimate: f64,
    pub truth: f64,
    pub abs_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSummary {
    pub n: usize,
    pub seeds: usize,
    pub median_abs_deviation: f64,
}

/// Debiased X-shift for every `(n, seed)` with `d` and `‖T‖` fixed. Failed
/// solves give NaN rows.
pub fn run_concentration(
    dimension: usize,
    mean_offset_norm: f64,
    sizes: &[usize],
    seeds: &[u64],
    config: &SolverConfig,
) -> Result<Vec<ConcentrationRow>> {
    config.validate()?;
    let jobs: Vec<(usize, u64)> = sizes.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    for &n in sizes {
        GaussianShiftSpec {
            dimension,
            mean_offset_norm,
            sample_size: n,
            seed: 0,
        }
        .validate()?;
    }
    Ok(parallel_map(&jobs, |&(n, seed)| {
        let spec = GaussianShiftSpec {
            dimension,
            mean_offset_norm,
            sample_size: n,
            seed,
        };
        let estimate = gen_gaussian_pair(&spec)
            .and_then(|(s, t)| {
                let scheme = SplitScheme::new(n, n, child_seed(seed, 0))?;
                debiased_xshift(&s, &t, Metric::Euclidean, config, &scheme)
            })
            .unwrap_or_else(|e| {
                eprintln!("n={n} seed={seed}: {e}");
                f64::NAN
            });
        ConcentrationRow {
            n,
            seed,
            estimate,
            truth: mean_offset_norm,
            abs_deviation: (estimate - mean_offset_norm).abs(),
        }
    }))
}

/// Median absolute deviation per sample size, in order of first appearance.
pub fn summarize_concentration(rows: &[ConcentrationRow]) -> Vec<ConcentrationSummary> {
    let mut sizes: Vec<usize> = Vec::new();
    for r in rows {
        if !sizes.contains(&r.n) {
            sizes.push(r.n);
        }
    }
    sizes
        .into_iter()
        .map(|n| {
            let cell: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.abs_deviation).collect();
            ConcentrationSummary {
                n,
                seeds: cell.len(),
                median_abs_deviation: median(cell),
            }
        })
        .collect()
}

/// Labelled Gaussian pair for concept-shift studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptTaskSpec {
    pub dimension: usize,
    pub mean_offset_norm: f64,
    pub source_law: ConditionalLaw,
    pub target_law: ConditionalLaw,
}

/// Ŝ_Cpt against the pair-shift oracle evaluated under the same plan, with
/// the bias ceiling `√I_S + √I_T` of the noisy labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptConcentrationRow {
    pub n: usize,
    pub seed: u64,
    pub s_cpt: f64,
    pub oracle: f64,
    pub deviation: f64,
    pub bias_ceiling: f64,
}

/// For every `(n, seed)`: draw the pair, label it, solve the plug-in plan,
/// and compare `Σ γ̂_ij |Y_i - Y_j|` with `Σ γ̂_ij W1(D^S_{Y|x_i}, D^T_{Y|x_j})`.
pub fn run_cpt_concentration(
    task: &CptTaskSpec,
    sizes: &[usize],
    seeds: &[u64],
    config: &SolverConfig,
) -> Result<Vec<CptConcentrationRow>> {
    config.validate()?;
    task.source_law.validate(task.dimension)?;
    task.target_law.validate(task.dimension)?;
    let ceiling = task.source_law.noise.variance().sqrt() + task.target_law.noise.variance().sqrt();
    let jobs: Vec<(usize, u64)> = sizes.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    parallel_map(&jobs, |&(n, seed)| {
        let (xs, xt) = gen_gaussian_pair(&GaussianShiftSpec {
            dimension: task.dimension,
            mean_offset_norm: task.mean_offset_norm,
            sample_size: n,
            seed,
        })?;
        let ys = task
            .source_law
            .sample_labels(xs.covariates(), &mut stream_rng(seed, 2))?;
        let yt = task
            .target_law
            .sample_labels(xt.covariates(), &mut stream_rng(seed, 3))?;
        let source = LabeledSample::new(xs.covariates().to_owned(), Some(ys), Domain::Source)?;
        let target = LabeledSample::new(xt.covariates().to_owned(), Some(yt), Domain::Target)?;
        let (_, plan) = plugin_xshift(&source, &target, Metric::Euclidean, config)?;
        let s_cpt = concept_shift(&source, &target, &plan, Metric::Euclidean)?;
        let oracle = total_pair_shift_oracle(
            &task.source_law,
            &task.target_law,
            source.covariates(),
            target.covariates(),
            &plan,
        )?;
        Ok(CptConcentrationRow {
            n,
            seed,
            s_cpt,
            oracle,
            deviation: s_cpt - oracle,
            bias_ceiling: ceiling,
        })
    })
    .into_iter()
    .collect()
}

/// Median `|Ŝ_Cpt - oracle|` per sample size.
pub fn cpt_concentration_summary(rows: &[CptConcentrationRow]) -> Vec<ConcentrationSummary> {
    let as_rows: Vec<ConcentrationRow> = rows
        .iter()
        .map(|r| ConcentrationRow {
            n: r.n,
            seed: r.seed,
            estimate: r.s_cpt,
            truth: r.oracle,
            abs_deviation: r.deviation.abs(),
        })
        .collect();
    summarize_concentration(&as_rows)
}

pub fn write_rows_csv<W: Write, R: Serialize>(rows: &[R], header: &[&str], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
