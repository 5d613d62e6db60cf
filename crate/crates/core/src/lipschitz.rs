//! Lipschitz factors for the bound: separately Lipschitz constants of a small
//! loss catalog and a spectral-product bound for layered hypotheses.
//!
//! A loss `ℓ(y, y′)` is separately `(L_ℓ, L′_ℓ)`-Lipschitz when
//! `|ℓ(y₁,y′₁) − ℓ(y₂,y′₂)| ≤ L_ℓ |y₁ − y₂| + L′_ℓ |y′₁ − y′₂|`
//! on its declared label and output spaces.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stream_rng;

/// Loss functions with known separately Lipschitz constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossSpec {
    /// `|y − y′|` on the real line.
    AbsoluteError,
    /// `(y − y′)²` with labels and outputs in `[0, m]`.
    SquaredErrorBounded { m: f64 },
    /// Binary cross-entropy with labels in `[0, 1]` and outputs in `[a, 1 − a]`.
    CrossEntropyClamped { a: f64 },
}

/// Range used when sampling the unbounded absolute-error domain.
const ABSOLUTE_ERROR_RANGE: f64 = 10.0;

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::AbsoluteError => Ok(()),
            LossSpec::SquaredErrorBounded { m } if m.is_finite() && m > 0.0 => Ok(()),
            LossSpec::SquaredErrorBounded { m } => Err(Error::InvalidInput(format!(
                "squared-error bound must be positive, got {m}"
            ))),
            LossSpec::CrossEntropyClamped { a } if a > 0.0 && a < 0.5 => Ok(()),
            LossSpec::CrossEntropyClamped { a } => Err(Error::InvalidInput(format!(
                "cross-entropy clamp must lie in (0, 0.5), got {a}"
            ))),
        }
    }

    /// `ℓ(y, y′)` for scalar label `y` and output `y′`. Outputs of the clamped
    /// cross-entropy are clamped to `[a, 1 − a]`.
    pub fn eval(&self, y: f64, y_hat: f64) -> f64 {
        match *self {
            LossSpec::AbsoluteError => (y - y_hat).abs(),
            LossSpec::SquaredErrorBounded { .. } => (y - y_hat).powi(2),
            LossSpec::CrossEntropyClamped { a } => {
                let p = y_hat.clamp(a, 1.0 - a);
                -y * p.ln() - (1.0 - y) * (1.0 - p).ln()
            }
        }
    }

    /// Label space and output space as closed intervals.
    pub fn domain(&self) -> ((f64, f64), (f64, f64)) {
        match *self {
            LossSpec::AbsoluteError => {
                let r = (-ABSOLUTE_ERROR_RANGE, ABSOLUTE_ERROR_RANGE);
                (r, r)
            }
            LossSpec::SquaredErrorBounded { m } => ((0.0, m), (0.0, m)),
            LossSpec::CrossEntropyClamped { a } => ((0.0, 1.0), (a, 1.0 - a)),
        }
    }
}

/// `(L_h, L_ℓ, L′_ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSpec {
    pub l_h: f64,
    pub l_loss_label: f64,
    pub l_loss_output: f64,
}

impl LipschitzSpec {
    /// Catalog loss constants combined with a hypothesis constant.
    pub fn for_loss(loss: &LossSpec, l_h: f64) -> Result<Self> {
        let (l_loss_label, l_loss_output) = loss_lipschitz(loss)?;
        let spec = Self {
            l_h,
            l_loss_label,
            l_loss_output,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l_h", self.l_h),
            ("l_loss_label", self.l_loss_label),
            ("l_loss_output", self.l_loss_output),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Catalog constants `(L_ℓ, L′_ℓ)`.
pub fn loss_lipschitz(loss: &LossSpec) -> Result<(f64, f64)> {
    loss.validate()?;
    Ok(match *loss {
        LossSpec::AbsoluteError => (1.0, 1.0),
        LossSpec::SquaredErrorBounded { m } => (2.0 * m, 2.0 * m),
        LossSpec::CrossEntropyClamped { a } => (((1.0 - a) / a).ln(), 1.0 / a),
    })
}

/// Upper bound on the Lipschitz constant of `σ_k ∘ A_k ∘ … ∘ σ_1 ∘ A_1`:
/// the product of the layer spectral norms and activation constants. There
/// may be one activation fewer than layers (linear output) or as many.
pub fn layered_hypothesis_lipschitz(weight_spectral_norms: &[f64], activation_constants: &[f64]) -> Result<f64> {
    if weight_spectral_norms.is_empty() {
        return Err(Error::Empty("layer norms"));
    }
    let layers = weight_spectral_norms.len();
    if activation_constants.len() + 1 != layers && activation_constants.len() != layers {
        return Err(Error::InvalidInput(format!(
            "{layers} layers take {} or {layers} activation constants, got {}",
            layers - 1,
            activation_constants.len()
        )));
    }
    let all = weight_spectral_norms.iter().chain(activation_constants);
    if let Some(bad) = all.clone().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "Lipschitz factors must be finite and nonnegative, got {bad}"
        )));
    }
    Ok(all.product())
}

/// Checks the separately Lipschitz inequality with the catalog constants on
/// `pair_samples` random quadruples.
pub fn verify_separate_lipschitz(loss: &LossSpec, pair_samples: usize, seed: u64) -> bool {
    match loss_lipschitz(loss) {
        Ok((l, l_out)) => verify_constants(loss, l, l_out, pair_samples, seed),
        Err(_) => false,
    }
}

/// Checks the inequality with arbitrary constants. Half of the quadruples are
/// drawn uniformly; the other half perturb one coordinate of a random point by
/// a small step, with points pushed toward the domain edges where gradients
/// peak.
pub fn verify_constants(loss: &LossSpec, l_label: f64, l_output: f64, pair_samples: usize, seed: u64) -> bool {
    if loss.validate().is_err() {
        return false;
    }
    let ((y_lo, y_hi), (o_lo, o_hi)) = loss.domain();
    let mut rng = stream_rng(seed, 0);
    let draw = |lo: f64, hi: f64, rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        match rng.random_range(0..4) {
            0 => lo,
            1 => hi,
            _ => rng.random_range(lo..=hi),
        }
    };
    for k in 0..pair_samples {
        let (y1, o1) = (draw(y_lo, y_hi, &mut rng), draw(o_lo, o_hi, &mut rng));
        let (y2, o2) = if k % 2 == 0 {
            (rng.random_range(y_lo..=y_hi), rng.random_range(o_lo..=o_hi))
        } else {
            let step = 10f64.powf(rng.random_range(-6.0..-1.0));
            let nudge = |v: f64, lo: f64, hi: f64| {
                let d = step * (hi - lo);
                if v + d <= hi {
                    v + d
                } else {
                    v - d
                }
            };
            if rng.random_bool(0.5) {
                (nudge(y1, y_lo, y_hi), o1)
            } else {
                (y1, nudge(o1, o_lo, o_hi))
            }
        };
        let lhs = (loss.eval(y1, o1) - loss.eval(y2, o2)).abs();
        let rhs = l_label * (y1 - y2).abs() + l_output * (o1 - o2).abs();
        if lhs > rhs + 1e-9 {
            return false;
        }
    }
    true
}
