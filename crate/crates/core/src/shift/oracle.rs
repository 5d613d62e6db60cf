//! Known conditional label laws for synthetic tasks, and the population
//! quantities that cannot be estimated from samples: point Y|X shift and
//! irreducible error.
//!
//! A law is `y = f(x) + noise` with scalar `y` and a noise family that does
//! not depend on `x`. Distances between two such laws at given points are
//! one-dimensional W1 distances, computed in closed form within a family and
//! by quantile integration across families.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::ot::TransportPlan;

/// Lipschitz labelling function `R^d → R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelFunction {
    /// `⟨w, x⟩ + bias`
    Linear { weights: Vec<f64>, bias: f64 },
    /// `amplitude · sin(⟨w, x⟩) + bias`
    Sine {
        weights: Vec<f64>,
        amplitude: f64,
        bias: f64,
    },
}

impl LabelFunction {
    pub fn eval(&self, x: ArrayView1<'_, f64>) -> f64 {
        let dot = |w: &[f64]| w.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
        match self {
            LabelFunction::Linear { weights, bias } => dot(weights) + bias,
            LabelFunction::Sine {
                weights,
                amplitude,
                bias,
            } => amplitude * dot(weights).sin() + bias,
        }
    }

    /// Lipschitz constant with respect to the Euclidean norm.
    pub fn lipschitz(&self) -> f64 {
        let norm = |w: &[f64]| w.iter().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            LabelFunction::Linear { weights, .. } => norm(weights),
            LabelFunction::Sine { weights, amplitude, .. } => amplitude.abs() * norm(weights),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LabelFunction::Linear { weights, .. } | LabelFunction::Sine { weights, .. } => weights.len(),
        }
    }

    /// The same function shifted by `offset`.
    pub fn offset(&self, offset: f64) -> Self {
        let mut f = self.clone();
        match &mut f {
            LabelFunction::Linear { bias, .. } | LabelFunction::Sine { bias, .. } => *bias += offset,
        }
        f
    }
}

/// Additive label noise, independent of `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
    /// Uniform on `[-half_width, half_width]`.
    Uniform {
        half_width: f64,
    },
}

impl Noise {
    pub fn variance(&self) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Gaussian { sigma } => sigma * sigma,
            Noise::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Noise::None => true,
            Noise::Gaussian { sigma: s } | Noise::Uniform { half_width: s } => s.is_finite() && s >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "noise scale must be finite and nonnegative: {self:?}"
            )))
        }
    }

    /// Quantile function of the noise at `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Gaussian { sigma } => sigma * standard_normal_quantile(u),
            Noise::Uniform { half_width } => half_width * (2.0 * u - 1.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Gaussian { sigma } => Normal::new(0.0, sigma).expect("validated sigma").sample(rng),
            Noise::Uniform { half_width: 0.0 } => 0.0,
            Noise::Uniform { half_width } => Uniform::new_inclusive(-half_width, half_width)
                .expect("validated width")
                .sample(rng),
        }
    }
}

/// `D_{Y|X=x} = law of f(x) + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalLaw {
    pub function: LabelFunction,
    #[serde(default)]
    pub noise: Noise,
}

impl ConditionalLaw {
    pub fn deterministic(function: LabelFunction) -> Self {
        Self {
            function,
            noise: Noise::None,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.function.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.function.dim(),
            });
        }
        self.noise.validate()
    }

    pub fn mean(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.function.eval(x)
    }

    /// One label per covariate row, as an `n × 1` matrix.
    pub fn sample_labels<R: Rng + ?Sized>(&self, x: ArrayView2<'_, f64>, rng: &mut R) -> Result<Array2<f64>> {
        self.validate(x.ncols())?;
        let ys: Vec<f64> = x
            .outer_iter()
            .map(|row| self.mean(row) + self.noise.sample(rng))
            .collect();
        Ok(Array2::from_shape_vec((ys.len(), 1), ys).expect("column shape"))
    }
}

/// W1 between `f_S(x_S) + noise_S` and `f_T(x_T) + noise_T`.
pub fn pair_shift(
    source: &ConditionalLaw,
    x_source: ArrayView1<'_, f64>,
    target: &ConditionalLaw,
    x_target: ArrayView1<'_, f64>,
) -> f64 {
    noise_w1(source.mean(x_source), source.noise, target.mean(x_target), target.noise)
}

/// `E_x W1(D^S_{Y|X=x}, D^T_{Y|X=x})` under the weighted points.
pub fn total_point_shift_oracle(
    source: &ConditionalLaw,
    target: &ConditionalLaw,
    x_points: ArrayView2<'_, f64>,
    weights: ArrayView1<'_, f64>,
) -> Result<f64> {
    check_points(x_points, weights)?;
    source.validate(x_points.ncols())?;
    target.validate(x_points.ncols())?;
    Ok(x_points
        .outer_iter()
        .zip(weights.iter())
        .map(|(x, w)| w * pair_shift(source, x, target, x))
        .sum())
}

/// `Σ_ij γ_ij W1(D^S_{Y|X=x_i}, D^T_{Y|X=x_j})`: the pair Y|X shift averaged
/// under a given covariate plan.
pub fn total_pair_shift_oracle(
    source: &ConditionalLaw,
    target: &ConditionalLaw,
    x_source: ArrayView2<'_, f64>,
    x_target: ArrayView2<'_, f64>,
    plan: &TransportPlan,
) -> Result<f64> {
    source.validate(x_source.ncols())?;
    target.validate(x_target.ncols())?;
    if plan.shape() != (x_source.nrows(), x_target.nrows()) {
        return Err(Error::InvalidInput("plan does not match the point sets".into()));
    }
    let ms: Vec<f64> = x_source.outer_iter().map(|x| source.mean(x)).collect();
    let mt: Vec<f64> = x_target.outer_iter().map(|x| target.mean(x)).collect();
    // cells below this carry at most 1e-15 of mass in total, so skipping them
    // moves the result by at most 1e-15 times the largest pair distance
    let negligible = 1e-15 / plan.coupling.len() as f64;
    let mut total = 0.0;
    for (row, a) in plan.coupling.outer_iter().zip(&ms) {
        total += row
            .iter()
            .zip(&mt)
            .filter(|(g, _)| **g > negligible)
            .map(|(g, b)| g * noise_w1(*a, source.noise, *b, target.noise))
            .sum::<f64>();
    }
    Ok(total)
}

/// `E_x E[(y - E[y|x])²]`, the irreducible squared error of the law.
pub fn irreducible_error_oracle(
    law: &ConditionalLaw,
    x_points: ArrayView2<'_, f64>,
    weights: ArrayView1<'_, f64>,
) -> Result<f64> {
    check_points(x_points, weights)?;
    law.validate(x_points.ncols())?;
    // noise does not depend on x, so the weights only need to sum to one
    Ok(law.noise.variance())
}

fn check_points(x: ArrayView2<'_, f64>, w: ArrayView1<'_, f64>) -> Result<()> {
    if x.nrows() == 0 {
        return Err(Error::Empty("oracle points"));
    }
    if w.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: w.len(),
        });
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) || (w.sum() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(
            "oracle weights must be a probability vector".into(),
        ));
    }
    Ok(())
}

/// W1 between `a + noise_a` and `b + noise_b` on the real line.
pub fn noise_w1(a: f64, noise_a: Noise, b: f64, noise_b: Noise) -> f64 {
    let delta = b - a;
    let gaussian_scale = |n: Noise| match n {
        Noise::None => Some(0.0),
        Noise::Gaussian { sigma } => Some(sigma),
        Noise::Uniform { .. } => None,
    };
    let uniform_scale = |n: Noise| match n {
        Noise::None => Some(0.0),
        Noise::Uniform { half_width } => Some(half_width),
        Noise::Gaussian { .. } => None,
    };
    // the quantile coupling is optimal in one dimension, so within one
    // location-scale family W1 = E|δ + (s_b - s_a) Z|
    if let (Some(sa), Some(sb)) = (gaussian_scale(noise_a), gaussian_scale(noise_b)) {
        return folded_normal_mean(delta, (sb - sa).abs());
    }
    if let (Some(ha), Some(hb)) = (uniform_scale(noise_a), uniform_scale(noise_b)) {
        return folded_uniform_mean(delta, (hb - ha).abs());
    }
    match (noise_a, noise_b) {
        (Noise::Gaussian { sigma }, Noise::Uniform { half_width }) => gaussian_uniform_w1(a, sigma, b, half_width),
        (Noise::Uniform { half_width }, Noise::Gaussian { sigma }) => gaussian_uniform_w1(b, sigma, a, half_width),
        _ => unreachable!("every other pairing shares a family"),
    }
}

/// W1 between `a + σZ` and `b + hV`, `Z` standard normal and `V` uniform on
/// `[-1, 1]`. Coupling quantiles and substituting `u = Φ(z)` turns it into
/// `∫ |ψ(z)| φ(z) dz` with `ψ(z) = σz + c - 2hΦ(z)` and `c = a - b + h`. The
/// integrand has the antiderivative `A(z) = -σφ(z) + cΦ(z) - hΦ(z)²`, and `ψ`
/// is monotone on each side of the points where `2hφ(z) = σ`, so it has at
/// most three sign changes. Summing `|ΔA|` over the pieces between them is
/// exact up to root finding.
fn gaussian_uniform_w1(a: f64, sigma: f64, b: f64, h: f64) -> f64 {
    use statrs::function::erf::erfc;
    // φ underflows far inside this range, so it stands in for the real line
    const REACH: f64 = 40.0;
    let c = a - b + h;
    let cdf = |z: f64| 0.5 * erfc(-z / std::f64::consts::SQRT_2);
    let pdf = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let psi = |z: f64| sigma * z + c - 2.0 * h * cdf(z);
    let anti = |z: f64| {
        let p = cdf(z);
        -sigma * pdf(z) + c * p - h * p * p
    };

    let mut points = vec![-REACH, REACH];
    let peak = 2.0 * h * pdf(0.0);
    if sigma < peak {
        let turn = if sigma > 0.0 {
            (2.0 * (peak / sigma).ln()).sqrt().min(REACH)
        } else {
            REACH
        };
        points.extend([-turn, turn]);
    }
    points.sort_by(f64::total_cmp);
    let mut roots = Vec::new();
    for w in points.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (psi(lo), psi(hi));
        if flo == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        // ψ is monotone between turning points, so Newton steps that stay
        // inside the bracket are safe; anything else falls back to bisection.
        // A root off by δ moves the integral only by O(δ²).
        let mut z = 0.5 * (lo + hi);
        for _ in 0..100 {
            let f = psi(z);
            if f == 0.0 {
                break;
            }
            if f.signum() == flo.signum() {
                lo = z;
            } else {
                hi = z;
            }
            let slope = sigma - 2.0 * h * pdf(z);
            let newton = z - f / slope;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let step = (next - z).abs();
            z = next;
            if step < 1e-13 || hi - lo < 1e-13 {
                break;
            }
        }
        roots.push(z);
    }
    points.extend(roots);
    points.sort_by(f64::total_cmp);
    points.windows(2).map(|w| (anti(w[1]) - anti(w[0])).abs()).sum()
}

/// `∫_0^1 |F⁻¹(u) - G⁻¹(u)| du` by the midpoint rule.
pub fn quantile_w1(f_inv: impl Fn(f64) -> f64, g_inv: impl Fn(f64) -> f64, nodes: usize) -> f64 {
    let h = 1.0 / nodes as f64;
    (0..nodes)
        .map(|k| {
            let u = (k as f64 + 0.5) * h;
            (f_inv(u) - g_inv(u)).abs()
        })
        .sum::<f64>()
        * h
}

/// `E|δ + sZ|` for standard normal `Z`.
fn folded_normal_mean(delta: f64, s: f64) -> f64 {
    if s == 0.0 {
        return delta.abs();
    }
    let r = delta / s;
    s * (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * r * r).exp() + delta * erf(r / std::f64::consts::SQRT_2)
}

/// `E|δ + kV|` for `V` uniform on `[-1, 1]`.
fn folded_uniform_mean(delta: f64, k: f64) -> f64 {
    if delta.abs() >= k {
        delta.abs()
    } else {
        (delta * delta + k * k) / (2.0 * k)
    }
}

fn standard_normal_quantile(u: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::standard().inverse_cdf(u)
}
