//! Samples, empirical measures, ground metrics and cost matrices.

mod csv;

pub use self::csv::{read_labeled_csv, read_labeled_csv_from};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of a shift a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Source,
    Target,
}

/// Covariates (one row per observation) plus optional labels for one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    covariates: Array2<f64>,
    labels: Option<Array2<f64>>,
    domain: Domain,
}

impl LabeledSample {
    pub fn new(covariates: Array2<f64>, labels: Option<Array2<f64>>, domain: Domain) -> Result<Self> {
        if covariates.nrows() == 0 {
            return Err(Error::Empty("sample has no rows"));
        }
        if covariates.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariates"));
        }
        if let Some(y) = &labels {
            if y.nrows() != covariates.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: covariates.nrows(),
                    found: y.nrows(),
                });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("labels"));
            }
        }
        Ok(Self {
            covariates,
            labels,
            domain,
        })
    }

    /// Sample with scalar labels, one per row.
    pub fn with_scalar_labels(covariates: Array2<f64>, labels: Vec<f64>, domain: Domain) -> Result<Self> {
        let n = labels.len();
        let y = Array2::from_shape_vec((n, 1), labels).expect("column vector shape");
        Self::new(covariates, Some(y), domain)
    }

    pub fn covariates(&self) -> ArrayView2<'_, f64> {
        self.covariates.view()
    }

    pub fn labels(&self) -> Option<ArrayView2<'_, f64>> {
        self.labels.as_ref().map(|y| y.view())
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.covariates.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Covariate dimension `d`.
    pub fn dim(&self) -> usize {
        self.covariates.ncols()
    }

    /// Sub-sample made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("row selection"));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.len()) {
            return Err(Error::InvalidInput(format!(
                "row index {bad} out of range for sample of size {}",
                self.len()
            )));
        }
        Ok(Self {
            covariates: self.covariates.select(Axis(0), rows),
            labels: self.labels.as_ref().map(|y| y.select(Axis(0), rows)),
            domain: self.domain,
        })
    }
}

/// Weighted point cloud `Σ w_i δ_{x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Array2<f64>,
    weights: Array1<f64>,
}

impl EmpiricalMeasure {
    pub fn new(points: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(Error::Empty("measure has no atoms"));
        }
        if weights.len() != points.nrows() {
            return Err(Error::DimensionMismatch {
                expected: points.nrows(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { points, weights })
    }

    /// Uniform weights `1/n` on the rows of `points`.
    pub fn uniform(points: Array2<f64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::Empty("measure has no atoms"));
        }
        Ok(Self {
            points,
            weights: Array1::from_elem(n, 1.0 / n as f64),
        })
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Uniform empirical measure over a sample's covariate rows.
pub fn empirical_measure(sample: &LabeledSample) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::uniform(sample.covariates.clone())
}

/// Ground metric on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    /// `(Σ |a_k - b_k|^p)^(1/p)`; a metric for `p >= 1`.
    Minkowski(f64),
}

impl Metric {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Metric::Euclidean => Ok(()),
            Metric::Minkowski(p) if p.is_finite() && p >= 1.0 => Ok(()),
            Metric::Minkowski(p) => Err(Error::InvalidInput(format!(
                "Minkowski exponent must be a finite value >= 1, got {p}"
            ))),
        }
    }

    pub fn distance(&self, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
        match *self {
            Metric::Euclidean => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Minkowski(1.0) => a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Minkowski(p) => a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x - y).abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p),
        }
    }
}

/// Pairwise ground costs between two point sets.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: Array2<f64>,
    metric: Metric,
}

impl CostMatrix {
    /// Wraps precomputed costs. Entries must be finite and nonnegative.
    pub fn from_values(values: Array2<f64>, metric: Metric) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("cost matrix"));
        }
        if values.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("cost matrix"));
        }
        if values.iter().any(|c| *c < 0.0) {
            return Err(Error::InvalidInput("cost matrix has negative entries".into()));
        }
        Ok(Self { values, metric })
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn transpose(&self) -> Self {
        Self {
            values: self.values.t().to_owned(),
            metric: self.metric,
        }
    }
}

/// `values[i][j] = metric(a_i, b_j)`.
pub fn cost_matrix(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, metric: Metric) -> Result<CostMatrix> {
    metric.validate()?;
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::Empty("point set"));
    }
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: b.ncols(),
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("point set"));
    }
    let mut values = Array2::zeros((a.nrows(), b.nrows()));
    for (i, row) in a.outer_iter().enumerate() {
        for (j, col) in b.outer_iter().enumerate() {
            values[[i, j]] = metric.distance(row, col);
        }
    }
    Ok(CostMatrix { values, metric })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn three_four_five() {
        let c = cost_matrix(array![[0.0, 0.0]].view(), array![[3.0, 4.0]].view(), Metric::Euclidean).unwrap();
        assert_eq!(c.values(), array![[5.0]]);
    }

    #[test]
    fn identical_sets_have_zero_diagonal() {
        let a = array![[1.0, 2.0], [3.0, 4.0]];
        let c = cost_matrix(a.view(), a.view(), Metric::Euclidean).unwrap();
        assert_eq!(c.values()[[0, 0]], 0.0);
        assert_eq!(c.values()[[1, 1]], 0.0);
    }

    #[test]
    fn scalar_points() {
        let c = cost_matrix(array![[0.0], [1.0]].view(), array![[2.0]].view(), Metric::Euclidean).unwrap();
        assert_eq!(c.values(), array![[2.0], [1.0]]);
    }

    #[test]
    fn minkowski_one_is_manhattan() {
        let c = cost_matrix(
            array![[0.0, 0.0]].view(),
            array![[3.0, 4.0]].view(),
            Metric::Minkowski(1.0),
        )
        .unwrap();
        assert_eq!(c.values(), array![[7.0]]);
        assert!(Metric::Minkowski(0.5).validate().is_err());
    }

    #[test]
    fn rejects_bad_points() {
        let a = array![[0.0, 1.0]];
        assert!(matches!(
            cost_matrix(a.view(), array![[1.0]].view(), Metric::Euclidean),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            cost_matrix(a.view(), array![[f64::NAN, 1.0]].view(), Metric::Euclidean),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn sample_validation() {
        assert!(LabeledSample::new(Array2::zeros((0, 2)), None, Domain::Source).is_err());
        assert!(LabeledSample::new(array![[f64::INFINITY]], None, Domain::Source).is_err());
        assert!(LabeledSample::new(array![[1.0], [2.0]], Some(array![[1.0]]), Domain::Source).is_err());
    }

    #[test]
    fn uniform_weights() {
        let s = LabeledSample::new(Array2::zeros((4, 1)), None, Domain::Source).unwrap();
        assert_eq!(empirical_measure(&s).unwrap().weights(), array![0.25, 0.25, 0.25, 0.25]);
        let s = LabeledSample::new(Array2::zeros((1, 3)), None, Domain::Target).unwrap();
        assert_eq!(empirical_measure(&s).unwrap().weights(), array![1.0]);
        let s = LabeledSample::new(Array2::zeros((3, 1)), None, Domain::Target).unwrap();
        assert!((empirical_measure(&s).unwrap().weights().sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn measure_rejects_unnormalized_weights() {
        assert!(EmpiricalMeasure::new(Array2::zeros((2, 1)), array![0.5, 0.6]).is_err());
        assert!(EmpiricalMeasure::new(Array2::zeros((2, 1)), array![1.5, -0.5]).is_err());
    }

    fn points(n: usize, d: usize) -> impl Strategy<Value = Array2<f64>> {
        proptest::collection::vec(-50.0..50.0f64, n * d).prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
    }

    proptest! {
        #[test]
        fn triangle_inequality(p in points(3, 4)) {
            let c = cost_matrix(p.view(), p.view(), Metric::Euclidean).unwrap();
            let v = c.values();
            prop_assert!(v[[0, 2]] <= v[[0, 1]] + v[[1, 2]] + 1e-9);
            prop_assert!(v[[0, 1]] <= v[[0, 2]] + v[[2, 1]] + 1e-9);
        }

        #[test]
        fn transpose_symmetry(a in points(3, 2), b in points(5, 2)) {
            let ab = cost_matrix(a.view(), b.view(), Metric::Euclidean).unwrap();
            let ba = cost_matrix(b.view(), a.view(), Metric::Euclidean).unwrap();
            let back = ba.transpose();
            prop_assert_eq!(ab.values(), back.values());
        }

        #[test]
        fn uniform_weights_normalized(n in 1usize..500) {
            let m = EmpiricalMeasure::uniform(Array2::zeros((n, 1))).unwrap();
            prop_assert!((m.weights().sum() - 1.0).abs() <= 1e-12);
        }
    }
}
