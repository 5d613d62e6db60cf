//! Quantifies how a labelled dataset shifts between a source and a target
//! domain, and turns the shifts into an estimable bound on the target error.
//!
//! The covariate (X) shift is an entropic optimal transport distance between
//! the covariate samples. The concept (Y|X) shift averages label distances
//! under the same transport plan. With Lipschitz constants for the loss and
//! the hypothesis, the two combine into
//!
//! ```text
//! ε_T ≤ ε̂_S + L_h · L′_ℓ · Ŝ_Cov + L_ℓ · Ŝ_Cpt
//! ```
//!
//! ```no_run
//! use datashifts::measures::{read_labeled_csv, Domain};
//! use datashifts::shift::{estimate_shifts, ShiftOptions};
//!
//! let labels = ["y".to_string()];
//! let source = read_labeled_csv("source.csv", &labels, Domain::Source)?;
//! let target = read_labeled_csv("target.csv", &labels, Domain::Target)?;
//! let shifts = estimate_shifts(&source, &target, &ShiftOptions::default())?;
//! println!("X shift {:.3}, Y|X shift {:?}", shifts.s_cov, shifts.s_cpt);
//! # Ok::<(), datashifts::Error>(())
//! ```
//!
//! [`synth`] holds the synthetic experiments that check the estimators and
//! the bound against known ground truth.

pub mod bound;
pub mod error;
pub mod lipschitz;
pub mod measures;
pub mod ot;
pub mod seed;
pub mod shift;
pub mod synth;

pub use error::{Error, Result};
