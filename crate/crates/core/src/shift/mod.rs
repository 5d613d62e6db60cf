//! Covariate (X) shift and concept (Y|X) shift estimators.
//!
//! The X shift is the entropic OT distance between the covariate marginals,
//! estimated either by the plug-in value on the full samples or by the
//! half-split debiased combination
//!
//! ```text
//! √| ½W(S′,T′)² + ½W(S″,T″)² − ½W(S′,S″)² − ½W(T′,T″)² |
//! ```
//!
//! which cancels most of the upward bias the plug-in value picks up in high
//! dimension. The concept shift averages label distances under the plug-in
//! plan of the full samples.

pub mod oracle;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{cost_matrix, LabeledSample, Metric};
use crate::ot::{entropic_ot, SolverConfig, TransportPlan};
use crate::seed::stream_rng;

/// Smallest domain size the debiased estimator accepts.
pub const MIN_SPLIT_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    PlugIn,
    #[default]
    Debiased,
}

/// How the shifts are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftOptions {
    pub solver: SolverConfig,
    pub estimator: EstimatorKind,
    /// Independent half splits averaged by the debiased estimator.
    pub num_splits: usize,
    pub seed: u64,
    pub covariate_metric: Metric,
    pub label_metric: Metric,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            estimator: EstimatorKind::Debiased,
            num_splits: 1,
            seed: 0,
            covariate_metric: Metric::Euclidean,
            label_metric: Metric::Euclidean,
        }
    }
}

/// Estimated shifts with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftEstimates {
    pub s_cov: f64,
    /// Absent when labels were not used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_cpt: Option<f64>,
    pub beta: f64,
    pub n_source: usize,
    pub n_target: usize,
    pub estimator_kind: EstimatorKind,
    pub num_splits: usize,
    pub seed: u64,
}

/// A random split of each domain into two disjoint halves of equal size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitScheme {
    pub seed: u64,
    pub half_sizes: (usize, usize),
    pub permutation_source: Vec<usize>,
    pub permutation_target: Vec<usize>,
}

impl SplitScheme {
    /// Shuffles both index sets with stream 0 of `seed`. With odd sizes the
    /// last permuted index is left out.
    pub fn new(n_source: usize, n_target: usize, seed: u64) -> Result<Self> {
        Self::on_stream(n_source, n_target, seed, 0)
    }

    /// `count` independent splits on streams `0..count` of `seed`.
    pub fn family(n_source: usize, n_target: usize, seed: u64, count: usize) -> Result<Vec<Self>> {
        if count == 0 {
            return Err(Error::InvalidConfig("num_splits must be at least 1".into()));
        }
        (0..count as u64)
            .map(|k| Self::on_stream(n_source, n_target, seed, k))
            .collect()
    }

    fn on_stream(n_source: usize, n_target: usize, seed: u64, stream: u64) -> Result<Self> {
        for (name, n) in [("source", n_source), ("target", n_target)] {
            if n < MIN_SPLIT_SIZE {
                return Err(Error::InvalidInput(format!(
                    "{name} sample has {n} points; the debiased estimator needs at least {MIN_SPLIT_SIZE}"
                )));
            }
        }
        let mut rng = stream_rng(seed, stream);
        let mut permutation_source: Vec<usize> = (0..n_source).collect();
        let mut permutation_target: Vec<usize> = (0..n_target).collect();
        permutation_source.shuffle(&mut rng);
        permutation_target.shuffle(&mut rng);
        Ok(Self {
            seed,
            half_sizes: (n_source / 2, n_target / 2),
            permutation_source,
            permutation_target,
        })
    }

    pub fn source_halves(&self) -> (&[usize], &[usize]) {
        let h = self.half_sizes.0;
        (&self.permutation_source[..h], &self.permutation_source[h..2 * h])
    }

    pub fn target_halves(&self) -> (&[usize], &[usize]) {
        let h = self.half_sizes.1;
        (&self.permutation_target[..h], &self.permutation_target[h..2 * h])
    }
}

/// Entropic OT between the uniform empirical measures on two point sets.
pub fn empirical_ot(
    a: ArrayView2<'_, f64>,
    b: ArrayView2<'_, f64>,
    metric: Metric,
    config: &SolverConfig,
) -> Result<TransportPlan> {
    let cost = cost_matrix(a, b, metric)?;
    let (n, m) = cost.shape();
    let mu = ndarray::Array1::from_elem(n, 1.0 / n as f64);
    let nu = ndarray::Array1::from_elem(m, 1.0 / m as f64);
    entropic_ot(&cost, mu.view(), nu.view(), config)
}

/// Plug-in estimate `W_β(D̂_S, D̂_T)` (full objective) and its plan.
pub fn plugin_xshift(
    source: &LabeledSample,
    target: &LabeledSample,
    metric: Metric,
    config: &SolverConfig,
) -> Result<(f64, TransportPlan)> {
    let plan = empirical_ot(source.covariates(), target.covariates(), metric, config)?;
    Ok((plan.objective, plan))
}

/// Debiased estimate on one half split.
pub fn debiased_xshift(
    source: &LabeledSample,
    target: &LabeledSample,
    metric: Metric,
    config: &SolverConfig,
    scheme: &SplitScheme,
) -> Result<f64> {
    debiased_xshift_averaged(source, target, metric, config, std::slice::from_ref(scheme))
}

/// Debiased estimate with each squared term averaged over the given splits
/// before the terms are combined.
pub fn debiased_xshift_averaged(
    source: &LabeledSample,
    target: &LabeledSample,
    metric: Metric,
    config: &SolverConfig,
    schemes: &[SplitScheme],
) -> Result<f64> {
    if schemes.is_empty() {
        return Err(Error::InvalidInput("at least one split is required".into()));
    }
    let (x, y) = (source.covariates(), target.covariates());
    let mut squares = [0.0; 4];
    for scheme in schemes {
        if scheme.permutation_source.len() != source.len() || scheme.permutation_target.len() != target.len() {
            return Err(Error::InvalidInput(
                "split scheme does not match the sample sizes".into(),
            ));
        }
        let (s1, s2) = scheme.source_halves();
        let (t1, t2) = scheme.target_halves();
        let rows = |v: ArrayView2<'_, f64>, idx: &[usize]| v.select(ndarray::Axis(0), idx);
        let (s1, s2, t1, t2) = (rows(x, s1), rows(x, s2), rows(y, t1), rows(y, t2));
        let pairs = [(&s1, &t1), (&s2, &t2), (&s1, &s2), (&t1, &t2)];
        for (acc, (a, b)) in squares.iter_mut().zip(pairs) {
            let w = empirical_ot(a.view(), b.view(), metric, config)?.objective;
            *acc += w * w;
        }
    }
    let k = schemes.len() as f64;
    let [cross1, cross2, within_s, within_t] = squares.map(|s| s / k);
    Ok((0.5 * cross1 + 0.5 * cross2 - 0.5 * within_s - 0.5 * within_t)
        .abs()
        .sqrt())
}

/// `Σ_ij ρ_Y(Y_i, Y_j) γ_ij` over a plan between the two samples.
pub fn concept_shift(
    source: &LabeledSample,
    target: &LabeledSample,
    plan: &TransportPlan,
    label_metric: Metric,
) -> Result<f64> {
    label_metric.validate()?;
    let ys = source
        .labels()
        .ok_or(Error::MissingLabels("the concept shift (source)"))?;
    let yt = target
        .labels()
        .ok_or(Error::MissingLabels("the concept shift (target)"))?;
    if plan.shape() != (source.len(), target.len()) {
        return Err(Error::InvalidInput(format!(
            "plan is {:?} but the samples have {} and {} rows",
            plan.shape(),
            source.len(),
            target.len()
        )));
    }
    if ys.ncols() != yt.ncols() {
        return Err(Error::DimensionMismatch {
            expected: ys.ncols(),
            found: yt.ncols(),
        });
    }
    let mut total = 0.0;
    for (i, row) in plan.coupling.outer_iter().enumerate() {
        let yi = ys.row(i);
        let mut acc = 0.0;
        for (j, g) in row.iter().enumerate() {
            acc += g * label_metric.distance(yi, yt.row(j));
        }
        total += acc;
    }
    Ok(total.max(0.0))
}

/// Ŝ_Cov only, by the configured estimator.
pub fn estimate_xshift(
    source: &LabeledSample,
    target: &LabeledSample,
    options: &ShiftOptions,
) -> Result<ShiftEstimates> {
    let s_cov = match options.estimator {
        EstimatorKind::PlugIn => plugin_xshift(source, target, options.covariate_metric, &options.solver)?.0,
        EstimatorKind::Debiased => debiased_cov(source, target, options)?,
    };
    Ok(estimates(source, target, options, s_cov, None))
}

/// Ŝ_Cov by the configured estimator and Ŝ_Cpt over the full-sample plug-in plan.
pub fn estimate_shifts(
    source: &LabeledSample,
    target: &LabeledSample,
    options: &ShiftOptions,
) -> Result<ShiftEstimates> {
    if source.labels().is_none() || target.labels().is_none() {
        return Err(Error::MissingLabels("the concept shift"));
    }
    let (plugin, plan) = plugin_xshift(source, target, options.covariate_metric, &options.solver)?;
    let s_cpt = concept_shift(source, target, &plan, options.label_metric)?;
    let s_cov = match options.estimator {
        EstimatorKind::PlugIn => plugin,
        EstimatorKind::Debiased => debiased_cov(source, target, options)?,
    };
    Ok(estimates(source, target, options, s_cov, Some(s_cpt)))
}

fn debiased_cov(source: &LabeledSample, target: &LabeledSample, options: &ShiftOptions) -> Result<f64> {
    let schemes = SplitScheme::family(source.len(), target.len(), options.seed, options.num_splits)?;
    debiased_xshift_averaged(source, target, options.covariate_metric, &options.solver, &schemes)
}

fn estimates(
    source: &LabeledSample,
    target: &LabeledSample,
    options: &ShiftOptions,
    s_cov: f64,
    s_cpt: Option<f64>,
) -> ShiftEstimates {
    ShiftEstimates {
        s_cov,
        s_cpt,
        beta: options.solver.beta,
        n_source: source.len(),
        n_target: target.len(),
        estimator_kind: options.estimator,
        num_splits: options.num_splits,
        seed: options.seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Domain;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn constant_sample(value: f64, n: usize, domain: Domain) -> LabeledSample {
        LabeledSample::new(Array2::from_elem((n, 1), value), None, domain).unwrap()
    }

    fn labeled(x: Array2<f64>, y: Vec<f64>, domain: Domain) -> LabeledSample {
        LabeledSample::with_scalar_labels(x, y, domain).unwrap()
    }

    #[test]
    fn plugin_single_point_is_zero() {
        let s = constant_sample(1.5, 1, Domain::Source);
        let t = constant_sample(1.5, 1, Domain::Target);
        let (value, _) = plugin_xshift(&s, &t, Metric::Euclidean, &SolverConfig::default()).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn plugin_constant_clouds_move_the_gap() {
        let s = constant_sample(-1.0, 5, Domain::Source);
        let t = constant_sample(2.0, 7, Domain::Target);
        let (_, plan) = plugin_xshift(&s, &t, Metric::Euclidean, &SolverConfig::default()).unwrap();
        assert!((plan.transport_cost - 3.0).abs() < 1e-9);
    }

    #[test]
    fn debiased_constant_clouds_recover_the_gap() {
        let s = constant_sample(0.0, 9, Domain::Source);
        let t = constant_sample(2.5, 6, Domain::Target);
        let scheme = SplitScheme::new(9, 6, 3).unwrap();
        let v = debiased_xshift(&s, &t, Metric::Euclidean, &SolverConfig::default(), &scheme).unwrap();
        assert!((v - 2.5).abs() < 1e-9);
    }

    #[test]
    fn split_halves_are_disjoint_and_drop_one_odd_point() {
        let scheme = SplitScheme::new(9, 6, 11).unwrap();
        assert_eq!(scheme.half_sizes, (4, 3));
        let (a, b) = scheme.source_halves();
        assert_eq!((a.len(), b.len()), (4, 4));
        assert!(a.iter().all(|i| !b.contains(i)));
        let (c, d) = scheme.target_halves();
        assert!(c.iter().all(|i| !d.contains(i)));
        assert_eq!(scheme, SplitScheme::new(9, 6, 11).unwrap());
        assert_ne!(
            scheme.permutation_source,
            SplitScheme::new(9, 6, 12).unwrap().permutation_source
        );
    }

    #[test]
    fn tiny_samples_cannot_be_split() {
        assert!(SplitScheme::new(3, 10, 0).is_err());
        assert!(SplitScheme::family(10, 10, 0, 0).is_err());
    }

    #[test]
    fn split_family_members_differ() {
        let family = SplitScheme::family(20, 20, 5, 3).unwrap();
        assert_eq!(family[0], SplitScheme::new(20, 20, 5).unwrap());
        assert_ne!(family[0].permutation_source, family[1].permutation_source);
    }

    #[test]
    fn concept_shift_single_pair() {
        let s = labeled(array![[0.0]], vec![1.0], Domain::Source);
        let t = labeled(array![[3.0]], vec![-0.5], Domain::Target);
        let (_, plan) = plugin_xshift(&s, &t, Metric::Euclidean, &SolverConfig::default()).unwrap();
        assert_eq!(concept_shift(&s, &t, &plan, Metric::Euclidean).unwrap(), 1.5);
    }

    #[test]
    fn concept_shift_identical_domains_vanishes() {
        let x = Array2::from_shape_fn((12, 2), |(i, j)| (i as f64 * 0.7 + j as f64 * 1.3).sin() * 3.0);
        let y: Vec<f64> = x.outer_iter().map(|r| r[0] - 2.0 * r[1]).collect();
        let s = labeled(x.clone(), y.clone(), Domain::Source);
        let t = labeled(x, y, Domain::Target);
        let (_, plan) = plugin_xshift(&s, &t, Metric::Euclidean, &SolverConfig::with_beta(1e-4)).unwrap();
        assert!(concept_shift(&s, &t, &plan, Metric::Euclidean).unwrap() <= 1e-3);
    }

    #[test]
    fn concept_shift_recovers_label_offset() {
        let x = Array2::from_shape_fn((10, 3), |(i, j)| ((i * 3 + j * 7) % 10) as f64 * 0.4 + j as f64);
        let y: Vec<f64> = x.outer_iter().map(|r| r.sum()).collect();
        let s = labeled(x.clone(), y.clone(), Domain::Source);
        let t = labeled(x, y.iter().map(|v| v + 0.8).collect(), Domain::Target);
        let (_, plan) = plugin_xshift(&s, &t, Metric::Euclidean, &SolverConfig::with_beta(1e-4)).unwrap();
        let v = concept_shift(&s, &t, &plan, Metric::Euclidean).unwrap();
        assert!((v - 0.8).abs() <= 1e-3, "{v}");
    }

    #[test]
    fn concept_shift_validates_inputs() {
        let s = labeled(array![[0.0], [1.0]], vec![0.0, 1.0], Domain::Source);
        let t = constant_sample(0.5, 2, Domain::Target);
        let (_, plan) = plugin_xshift(&s, &t, Metric::Euclidean, &SolverConfig::default()).unwrap();
        assert!(matches!(
            concept_shift(&s, &t, &plan, Metric::Euclidean),
            Err(Error::MissingLabels(_))
        ));
        let t3 = labeled(array![[0.0], [1.0], [2.0]], vec![0.0; 3], Domain::Target);
        assert!(concept_shift(&s, &t3, &plan, Metric::Euclidean).is_err());
    }

    #[test]
    fn estimates_report_round_trips() {
        let est = ShiftEstimates {
            s_cov: 0.25,
            s_cpt: Some(0.125),
            beta: 1e-3,
            n_source: 10,
            n_target: 12,
            estimator_kind: EstimatorKind::Debiased,
            num_splits: 1,
            seed: 42,
        };
        let json = serde_json::to_string(&est).unwrap();
        assert_eq!(
            json,
            r#"{"s_cov":0.25,"s_cpt":0.125,"beta":0.001,"n_source":10,"n_target":12,"estimator_kind":"debiased","num_splits":1,"seed":42}"#
        );
        assert_eq!(serde_json::from_str::<ShiftEstimates>(&json).unwrap(), est);
        let no_cpt = ShiftEstimates { s_cpt: None, ..est };
        assert!(!serde_json::to_string(&no_cpt).unwrap().contains("s_cpt"));
    }

    #[test]
    fn estimate_shifts_needs_labels() {
        let s = constant_sample(0.0, 8, Domain::Source);
        let t = constant_sample(1.0, 8, Domain::Target);
        assert!(matches!(
            estimate_shifts(&s, &t, &ShiftOptions::default()),
            Err(Error::MissingLabels(_))
        ));
        let est = estimate_xshift(&s, &t, &ShiftOptions::default()).unwrap();
        assert!((est.s_cov - 1.0).abs() < 1e-9);
        assert_eq!(est.s_cpt, None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn debiased_is_nonnegative(xs in proptest::collection::vec(-2.0f64..2.0, 16), shift in -1.0f64..1.0, seed in 0u64..1000) {
            let a = Array2::from_shape_vec((8, 2), xs.clone()).unwrap();
            let b = a.mapv(|v| v * 0.5 + shift);
            let s = LabeledSample::new(a, None, Domain::Source).unwrap();
            let t = LabeledSample::new(b, None, Domain::Target).unwrap();
            let scheme = SplitScheme::new(8, 8, seed).unwrap();
            let v = debiased_xshift(&s, &t, Metric::Euclidean, &SolverConfig::with_beta(0.05), &scheme).unwrap();
            prop_assert!(v >= 0.0 && v.is_finite());
        }
    }
}
