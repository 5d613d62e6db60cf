//! The DataShifts pipeline: estimate both shifts and, when the loss factors
//! and source error are known, the target error bound
//!
//! ```text
//! B = ε̂_S + L_h · L′_ℓ · Ŝ_Cov + L_ℓ · Ŝ_Cpt
//! ```

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lipschitz::{LipschitzSpec, LossSpec};
use crate::measures::LabeledSample;
use crate::shift::{estimate_shifts, estimate_xshift, ShiftEstimates, ShiftOptions};

/// Term-by-term bound. `bound == source_error + x_term + y_term`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub source_error: f64,
    /// `L_h · L′_ℓ · Ŝ_Cov`
    pub x_term: f64,
    /// `L_ℓ · Ŝ_Cpt`
    pub y_term: f64,
    pub bound: f64,
    pub lipschitz: LipschitzSpec,
    /// Observed target error, when target predictions were supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_error: Option<f64>,
}

/// Shifts, plus the bound when it was requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataShiftsReport {
    pub shifts: ShiftEstimates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundReport>,
}

/// Assembles the bound from already estimated shifts.
pub fn assemble_bound(shifts: &ShiftEstimates, lipschitz: LipschitzSpec, source_error: f64) -> Result<BoundReport> {
    lipschitz.validate()?;
    if !source_error.is_finite() {
        return Err(Error::NonFinite("source error"));
    }
    let s_cpt = shifts
        .s_cpt
        .ok_or(Error::MissingLabels("the bound's concept-shift term"))?;
    let x_term = lipschitz.l_h * lipschitz.l_loss_output * shifts.s_cov;
    let y_term = lipschitz.l_loss_label * s_cpt;
    Ok(BoundReport {
        source_error,
        x_term,
        y_term,
        bound: source_error + x_term + y_term,
        lipschitz,
        target_error: None,
    })
}

/// Estimates Ŝ_Cov (and Ŝ_Cpt when both samples carry labels). The bound is
/// assembled only when both `lipschitz` and `source_error` are given, and it
/// then requires labels.
pub fn datashifts(
    source: &LabeledSample,
    target: &LabeledSample,
    options: &ShiftOptions,
    lipschitz: Option<LipschitzSpec>,
    source_error: Option<f64>,
) -> Result<DataShiftsReport> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            found: target.dim(),
        });
    }
    let labelled = source.labels().is_some() && target.labels().is_some();
    let wants_bound = lipschitz.is_some() && source_error.is_some();
    if wants_bound && !labelled {
        return Err(Error::MissingLabels("the error bound"));
    }
    let shifts = if labelled {
        estimate_shifts(source, target, options)?
    } else {
        estimate_xshift(source, target, options)?
    };
    let bound = match (lipschitz, source_error) {
        (Some(l), Some(e)) => Some(assemble_bound(&shifts, l, e)?),
        _ => None,
    };
    Ok(DataShiftsReport { shifts, bound })
}

/// Mean loss of scalar predictions against the sample's scalar labels.
pub fn empirical_error(sample: &LabeledSample, predictions: ArrayView2<'_, f64>, loss: &LossSpec) -> Result<f64> {
    loss.validate()?;
    let labels = sample.labels().ok_or(Error::MissingLabels("the empirical error"))?;
    if predictions.nrows() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            found: predictions.nrows(),
        });
    }
    if labels.ncols() != 1 || predictions.ncols() != 1 {
        return Err(Error::InvalidInput(
            "the loss catalog takes scalar labels and predictions".into(),
        ));
    }
    if predictions.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("predictions"));
    }
    let total: f64 = labels
        .iter()
        .zip(predictions.iter())
        .map(|(y, p)| loss.eval(*y, *p))
        .sum();
    Ok(total / sample.len() as f64)
}
