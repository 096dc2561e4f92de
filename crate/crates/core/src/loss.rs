//! Unbiased loss correction under class-conditional label noise.
//!
//! With a row-stochastic forward matrix `R(i, j) = Pr(ỹ = j | y = i)`, the
//! corrected loss vector `l̃ = R⁻¹ · l` satisfies
//! `E_{ỹ | y = i}[l̃(ỹ)] = (R · l̃)_i = l_i` for every true class `i`.
//! Correcting against the transpose (the column-stochastic `Pr(ỹ | y)`
//! layout) is only unbiased when `R` is symmetric.

use serde::{Deserialize, Serialize};

use crate::confusion::{ConfusionMatrix, Orientation, SINGULAR_THRESHOLD};
use crate::error::{Error, Result};

/// Loss per candidate label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("loss {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `l̃ = R⁻¹ · l`, i.e. `l̃_i = Σ_j R⁻¹(i, j) · l_j`.
pub fn correct_loss_multiclass(clean: &LossVector, forward: &ConfusionMatrix) -> Result<LossVector> {
    forward.expect_orientation(Orientation::Forward)?;
    let k = forward.num_classes();
    if clean.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: clean.len(),
        });
    }
    let inv = forward.inverse()?;
    let corrected = (0..k)
        .map(|i| (0..k).map(|j| inv[(i, j)] * clean.values()[j]).sum())
        .collect();
    LossVector::new(corrected)
}

/// Closed-form two-class correction over the ordering `(+1, −1)`.
///
/// `kappa_plus` is the flip rate out of `+1` and `kappa_minus` out of `−1`
/// (see [`ConfusionMatrix::binary_from_kappas`]). Returns
/// `(l̃(+1), l̃(−1))`. A sum above one is allowed; the denominator changes
/// sign and the estimate stays unbiased.
pub fn correct_loss_binary(
    loss_pos: f64,
    loss_neg: f64,
    kappa_plus: f64,
    kappa_minus: f64,
) -> Result<(f64, f64)> {
    let denom = 1.0 - kappa_plus - kappa_minus;
    if denom.abs() < SINGULAR_THRESHOLD {
        return Err(Error::Singular {
            det: denom,
            threshold: SINGULAR_THRESHOLD,
        });
    }
    let pos = ((1.0 - kappa_minus) * loss_pos - kappa_plus * loss_neg) / denom;
    let neg = ((1.0 - kappa_plus) * loss_neg - kappa_minus * loss_pos) / denom;
    Ok((pos, neg))
}

/// `Σ_j Pr(ỹ = j | y = true_label) · corrected_j`.
pub fn expected_weak_loss(
    corrected: &LossVector,
    forward: &ConfusionMatrix,
    true_label: usize,
) -> Result<f64> {
    forward.expect_orientation(Orientation::Forward)?;
    let k = forward.num_classes();
    if corrected.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: corrected.len(),
        });
    }
    if true_label >= k {
        return Err(Error::InvalidArgument(format!(
            "true label {true_label} out of range for {k} classes"
        )));
    }
    Ok(corrected
        .values()
        .iter()
        .enumerate()
        .map(|(j, l)| forward.get(true_label, j) * l)
        .sum())
}
