//! Synthetic Gaussian experiments: generators, the estimator-bias sweeps
//! over dimension, sample size and true distance, bound validation and
//! concentration studies.
//!
//! Every table is a pure function of its spec and seeds. Trials run on a
//! bounded worker pool and are returned in input order.

mod concentration;
mod fig1;
mod plot;
mod validation;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use concentration::{
    cpt_concentration_summary, run_concentration, run_cpt_concentration, summarize_concentration, write_rows_csv,
    ConcentrationRow, ConcentrationSummary, CptConcentrationRow, CptTaskSpec,
};
pub use fig1::{fig1_cells, run_fig1, write_fig1_csv, Fig1Cell, Fig1Row, FIG1_ANCHOR_DIM, FIG1_ANCHOR_SIZE};
pub use plot::plot_fig1;
pub use validation::{
    random_task, run_bound_validation, run_random_bound_validation, write_bound_csv, BoundTrial, SyntheticTaskSpec,
    ValidationSummary,
};

use crate::error::{Error, Result};
use crate::measures::{Domain, LabeledSample};
use crate::seed::stream_rng;

/// Source `N(0, I_d)` against target `N(T, I_d)` with `T = offset · e_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianShiftSpec {
    pub dimension: usize,
    pub mean_offset_norm: f64,
    pub sample_size: usize,
    pub seed: u64,
}

impl GaussianShiftSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if self.sample_size < 4 {
            return Err(Error::InvalidInput(format!(
                "sample size must be at least 4, got {}",
                self.sample_size
            )));
        }
        if !(self.mean_offset_norm.is_finite() && self.mean_offset_norm >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "offset norm must be nonnegative, got {}",
                self.mean_offset_norm
            )));
        }
        Ok(())
    }
}

/// Unlabelled source and target samples; the source uses stream 0 of the
/// seed and the target stream 1.
pub fn gen_gaussian_pair(spec: &GaussianShiftSpec) -> Result<(LabeledSample, LabeledSample)> {
    spec.validate()?;
    let source = standard_normal(spec.sample_size, spec.dimension, &mut stream_rng(spec.seed, 0));
    let mut target = standard_normal(spec.sample_size, spec.dimension, &mut stream_rng(spec.seed, 1));
    target.column_mut(0).mapv_inplace(|v| v + spec.mean_offset_norm);
    Ok((
        LabeledSample::new(source, None, Domain::Source)?,
        LabeledSample::new(target, None, Domain::Target)?,
    ))
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Array2<f64> {
    let values: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    Array2::from_shape_vec((n, d), values).expect("n × d")
}

/// Maps `f` over `items` on up to `available_parallelism` threads and returns
/// the results in input order.
pub fn parallel_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<U>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(k) else { break };
                let out = f(item);
                slots.lock().expect("no worker panicked")[k] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect()
}

/// Median of the finite values, or NaN when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// Number of strict increases in a sequence that should be nonincreasing.
pub fn count_increases(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Axis;

    #[test]
    fn generator_is_reproducible() {
        let spec = GaussianShiftSpec {
            dimension: 3,
            mean_offset_norm: 2.0,
            sample_size: 50,
            seed: 9,
        };
        let (a, b) = gen_gaussian_pair(&spec).unwrap();
        let (c, d) = gen_gaussian_pair(&spec).unwrap();
        assert_eq!(a, c);
        assert_eq!(b, d);
        let (e, _) = gen_gaussian_pair(&GaussianShiftSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a, e);
        assert_eq!(a.domain(), Domain::Source);
        assert_eq!(b.domain(), Domain::Target);
    }

    #[test]
    fn generator_means_match_the_offset() {
        let spec = GaussianShiftSpec {
            dimension: 4,
            mean_offset_norm: 6.0,
            sample_size: 100_000,
            seed: 1,
        };
        let (s, t) = gen_gaussian_pair(&spec).unwrap();
        let ms = s.covariates().mean_axis(Axis(0)).unwrap();
        let mt = t.covariates().mean_axis(Axis(0)).unwrap();
        for k in 0..4 {
            assert!(ms[k].abs() < 0.05);
            let expected = if k == 0 { 6.0 } else { 0.0 };
            assert!((mt[k] - expected).abs() < 0.05, "coordinate {k}: {}", mt[k]);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let ok = GaussianShiftSpec {
            dimension: 2,
            mean_offset_norm: 0.0,
            sample_size: 10,
            seed: 0,
        };
        assert!(gen_gaussian_pair(&GaussianShiftSpec { dimension: 0, ..ok }).is_err());
        assert!(gen_gaussian_pair(&GaussianShiftSpec { sample_size: 3, ..ok }).is_err());
        assert!(gen_gaussian_pair(&GaussianShiftSpec {
            mean_offset_norm: -1.0,
            ..ok
        })
        .is_err());
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..100).collect();
        assert_eq!(
            parallel_map(&items, |x| x * x),
            items.iter().map(|x| x * x).collect::<Vec<_>>()
        );
    }

    #[test]
    fn medians_and_inversions() {
        assert_eq!(median([3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median([4.0, 1.0, f64::NAN, 2.0, 3.0]), 2.5);
        assert!(median([f64::NAN]).is_nan());
        assert_eq!(count_increases(&[5.0, 4.0, 4.0, 4.5, 3.0]), 1);
    }
}
