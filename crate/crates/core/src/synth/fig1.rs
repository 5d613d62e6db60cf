//! Plug-in and debiased X-shift estimates on Gaussian pairs, swept over
//! dimension, sample size and true distance.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{gen_gaussian_pair, parallel_map, GaussianShiftSpec};
use crate::error::Result;
use crate::measures::Metric;
use crate::ot::SolverConfig;
use crate::seed::child_seed;
use crate::shift::{debiased_xshift, plugin_xshift, EstimatorKind, SplitScheme};

/// Dimension held fixed while sample size or distance varies.
pub const FIG1_ANCHOR_DIM: usize = 70;
/// Sample size held fixed while dimension or distance varies.
pub const FIG1_ANCHOR_SIZE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig1Cell {
    pub d: usize,
    pub n: usize,
    pub offset: f64,
}

/// One estimate. `estimate` and `abs_error` are NaN when the solver failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Row {
    pub d: usize,
    pub n: usize,
    pub offset: f64,
    pub seed: u64,
    pub estimator: EstimatorKind,
    pub estimate: f64,
    pub truth: f64,
    pub abs_error: f64,
}

/// The three one-factor sweeps around the anchor `(d, n) = (70, 1000)`:
/// sample sizes at zero distance, dimensions at zero distance, and positive
/// distances. Duplicate cells are dropped.
pub fn fig1_cells(dims: &[usize], sizes: &[usize], offsets: &[f64]) -> Vec<Fig1Cell> {
    let mut cells = Vec::new();
    let mut push = |c: Fig1Cell| {
        if !cells.contains(&c) {
            cells.push(c);
        }
    };
    for &n in sizes {
        push(Fig1Cell {
            d: FIG1_ANCHOR_DIM,
            n,
            offset: 0.0,
        });
    }
    for &d in dims {
        push(Fig1Cell {
            d,
            n: FIG1_ANCHOR_SIZE,
            offset: 0.0,
        });
    }
    for &offset in offsets {
        push(Fig1Cell {
            d: FIG1_ANCHOR_DIM,
            n: FIG1_ANCHOR_SIZE,
            offset,
        });
    }
    cells
}

/// Runs both estimators for every (cell, seed). The data of a trial comes
/// from `seed` and its split from a child of `seed`, so the two estimators see
/// the same samples.
pub fn run_fig1(cells: &[Fig1Cell], beta: f64, seeds: &[u64]) -> Result<Vec<Fig1Row>> {
    let config = SolverConfig::with_beta(beta);
    config.validate()?;
    let trials: Vec<(Fig1Cell, u64)> = cells.iter().flat_map(|c| seeds.iter().map(move |s| (*c, *s))).collect();
    let rows = parallel_map(&trials, |&(cell, seed)| fig1_trial(cell, seed, &config));
    Ok(rows.into_iter().flatten().collect())
}

fn fig1_trial(cell: Fig1Cell, seed: u64, config: &SolverConfig) -> Vec<Fig1Row> {
    let spec = GaussianShiftSpec {
        dimension: cell.d,
        mean_offset_norm: cell.offset,
        sample_size: cell.n,
        seed,
    };
    let row = |estimator, estimate: Result<f64>| {
        let estimate = estimate.unwrap_or_else(|e| {
            eprintln!(
                "d={} n={} offset={} seed={seed} {estimator:?}: {e}",
                cell.d, cell.n, cell.offset
            );
            f64::NAN
        });
        Fig1Row {
            d: cell.d,
            n: cell.n,
            offset: cell.offset,
            seed,
            estimator,
            estimate,
            truth: cell.offset,
            abs_error: (estimate - cell.offset).abs(),
        }
    };
    let (source, target) = match gen_gaussian_pair(&spec) {
        Ok(pair) => pair,
        Err(e) => {
            let msg = e.to_string();
            let fail = || Err(crate::Error::InvalidInput(msg.clone()));
            return vec![row(EstimatorKind::PlugIn, fail()), row(EstimatorKind::Debiased, fail())];
        }
    };
    let plugin = plugin_xshift(&source, &target, Metric::Euclidean, config).map(|(v, _)| v);
    let debiased = SplitScheme::new(cell.n, cell.n, child_seed(seed, 0))
        .and_then(|scheme| debiased_xshift(&source, &target, Metric::Euclidean, config, &scheme));
    vec![
        row(EstimatorKind::PlugIn, plugin),
        row(EstimatorKind::Debiased, debiased),
    ]
}

/// Writes the table with header `d,n,offset,seed,estimator,estimate,truth,abs_error`.
pub fn write_fig1_csv<W: Write>(rows: &[Fig1Row], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "d",
            "n",
            "offset",
            "seed",
            "estimator",
            "estimate",
            "truth",
            "abs_error",
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_cover_three_sweeps_without_duplicates() {
        let cells = fig1_cells(&[2, 70], &[250, 1000], &[0.0, 2.0]);
        assert_eq!(
            cells,
            vec![
                Fig1Cell {
                    d: 70,
                    n: 250,
                    offset: 0.0
                },
                Fig1Cell {
                    d: 70,
                    n: 1000,
                    offset: 0.0
                },
                Fig1Cell {
                    d: 2,
                    n: 1000,
                    offset: 0.0
                },
                Fig1Cell {
                    d: 70,
                    n: 1000,
                    offset: 2.0
                },
            ]
        );
    }

    #[test]
    fn small_run_has_truth_column_and_header() {
        let cells = [Fig1Cell {
            d: 2,
            n: 24,
            offset: 1.5,
        }];
        let rows = run_fig1(&cells, 1e-2, &[1, 2]).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.truth == 1.5 && r.estimate.is_finite()));
        assert!(rows
            .iter()
            .all(|r| (r.abs_error - (r.estimate - 1.5).abs()).abs() < 1e-15));
        let mut buf = Vec::new();
        write_fig1_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("d,n,offset,seed,estimator,estimate,truth,abs_error\n2,24,1.5,1,plug_in,"));
        assert_eq!(run_fig1(&cells, 1e-2, &[1, 2]).unwrap(), rows);
    }

    #[test]
    fn failures_become_nan_rows() {
        let rows = run_fig1(
            &[Fig1Cell {
                d: 2,
                n: 3,
                offset: 0.0,
            }],
            1e-2,
            &[0],
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.estimate.is_nan()));
    }

    #[test]
    fn empty_table_still_has_header() {
        let mut buf = Vec::new();
        write_fig1_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "d,n,offset,seed,estimator,estimate,truth,abs_error\n"
        );
    }
}
