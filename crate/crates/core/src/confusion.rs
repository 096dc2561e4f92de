//! Backward and forward confusion matrices.
//!
//! A [`ConfusionMatrix`] always carries its orientation:
//!
//! * [`Orientation::Backward`] holds `Pr(y = i | ỹ = j)` at `(i, j)`. Columns
//!   sum to one. This is the matrix consumed by density correction.
//! * [`Orientation::Forward`] holds `Pr(ỹ = j | y = i)` at `(i, j)`, i.e. rows
//!   are indexed by the true class and sum to one. This is the matrix used for
//!   posterior and loss correction and for injecting synthetic label noise.
//!
//! The two are related by Bayes' rule through the class prior, see
//! [`ConfusionMatrix::backward_from_forward`]. Nothing in this crate silently
//! transposes one into the other.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::density::DiscretePmf;
use crate::error::{Axis, Error, Result};

/// Tolerance on row/column sums accepted by validation.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Matrices with `|det|` below this are treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

const PERMUTATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `Pr(y | ỹ)`, column-stochastic.
    Backward,
    /// `Pr(ỹ | y)`, row-stochastic with rows indexed by the true class.
    Forward,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::Backward => f.write_str("backward"),
            Orientation::Forward => f.write_str("forward"),
        }
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "backward" => Ok(Orientation::Backward),
            "forward" => Ok(Orientation::Forward),
            other => Err(Error::InvalidArgument(format!(
                "unknown orientation '{other}' (expected backward or forward)"
            ))),
        }
    }
}

/// A validated, invertible K×K stochastic matrix with an orientation tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    entries: DMatrix<f64>,
    orientation: Orientation,
    determinant: f64,
}

/// Conditioning summary of a confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfusionDiagnostics {
    pub determinant: f64,
    /// `λmax / λmin` of `M⁻¹ · M⁻ᵀ`.
    pub eigen_ratio: f64,
    pub log_eigen_ratio: f64,
    pub is_permutation: bool,
}

impl ConfusionMatrix {
    /// Validates `raw` as a stochastic matrix of the given orientation.
    ///
    /// Non-stochastic input is rejected, never renormalized; use
    /// [`ConfusionMatrix::normalize_columns`] for raw counts.
    pub fn new(raw: DMatrix<f64>, orientation: Orientation) -> Result<Self> {
        let k = raw.nrows();
        if k < 2 {
            return Err(Error::InvalidArgument(format!(
                "confusion matrix needs at least 2 classes, got {k}"
            )));
        }
        if raw.ncols() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: raw.ncols(),
            });
        }
        for row in 0..k {
            for col in 0..k {
                let v = raw[(row, col)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row,
                        col,
                        value: v,
                    });
                }
            }
        }
        let (axis, sums): (Axis, Vec<f64>) = match orientation {
            Orientation::Backward => (
                Axis::Column,
                raw.column_iter().map(|c| c.iter().sum()).collect(),
            ),
            Orientation::Forward => (Axis::Row, raw.row_iter().map(|r| r.iter().sum()).collect()),
        };
        for (index, &sum) in sums.iter().enumerate() {
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NonStochastic {
                    axis,
                    index,
                    sum,
                    tol: STOCHASTIC_TOL,
                });
            }
        }
        let determinant = raw.clone().lu().determinant();
        if determinant.abs() < SINGULAR_THRESHOLD {
            return Err(Error::Singular {
                det: determinant,
                threshold: SINGULAR_THRESHOLD,
            });
        }
        Ok(Self {
            entries: raw,
            orientation,
            determinant,
        })
    }

    /// Builds from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>], orientation: Orientation) -> Result<Self> {
        Self::new(dmatrix_from_rows(rows)?, orientation)
    }

    /// Column-normalizes a matrix of raw co-occurrence counts into a
    /// backward matrix.
    pub fn normalize_columns(counts: &DMatrix<f64>) -> Result<Self> {
        let mut m = counts.clone();
        for (col, mut column) in m.column_iter_mut().enumerate() {
            for (row, v) in column.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
                if *v < 0.0 {
                    return Err(Error::NegativeEntry {
                        row,
                        col,
                        value: *v,
                    });
                }
            }
            let sum: f64 = column.iter().sum();
            if sum <= 0.0 {
                return Err(Error::ZeroColumn { col });
            }
            column /= sum;
        }
        Self::new(m, Orientation::Backward)
    }

    /// Binary forward matrix over the class ordering `(+1, −1)`.
    ///
    /// `kappa_plus` is the rate at which a true `+1` is annotated `−1` and
    /// `kappa_minus` the rate at which a true `−1` is annotated `+1`. With
    /// this reading the two-class inverse reproduces the closed-form
    /// unbiased loss in [`crate::loss::correct_loss_binary`]. The matrix is
    /// singular exactly when `kappa_plus + kappa_minus == 1`.
    pub fn binary_from_kappas(kappa_plus: f64, kappa_minus: f64) -> Result<Self> {
        for (name, k) in [("kappa_plus", kappa_plus), ("kappa_minus", kappa_minus)] {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {k} is outside [0, 1]"
                )));
            }
        }
        let raw = DMatrix::from_row_slice(
            2,
            2,
            &[1.0 - kappa_plus, kappa_plus, kappa_minus, 1.0 - kappa_minus],
        );
        Self::new(raw, Orientation::Forward)
    }

    /// Converts a forward matrix into the backward matrix implied by `prior`:
    /// `Pr(y=i | ỹ=j) = Pr(ỹ=j | y=i)·prior_i / Σ_m Pr(ỹ=j | y=m)·prior_m`.
    pub fn backward_from_forward(forward: &ConfusionMatrix, prior: &DiscretePmf) -> Result<Self> {
        forward.expect_orientation(Orientation::Forward)?;
        let k = forward.num_classes();
        if prior.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: prior.len(),
            });
        }
        if let Some(i) = prior.masses().iter().position(|&p| p <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "class prior must be strictly positive (class {i} has zero mass)"
            )));
        }
        let mut back = DMatrix::zeros(k, k);
        for weak in 0..k {
            let marginal: f64 = (0..k)
                .map(|m| forward.entries[(m, weak)] * prior.masses()[m])
                .sum();
            if marginal <= 0.0 {
                return Err(Error::ZeroWeakLabelMass { label: weak });
            }
            for truth in 0..k {
                back[(truth, weak)] = forward.entries[(truth, weak)] * prior.masses()[truth] / marginal;
            }
        }
        Self::new(back, Orientation::Backward)
    }

    pub fn num_classes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn determinant(&self) -> f64 {
        self.determinant
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub(crate) fn expect_orientation(&self, expected: Orientation) -> Result<()> {
        if self.orientation != expected {
            return Err(Error::OrientationMismatch {
                expected,
                found: self.orientation,
            });
        }
        Ok(())
    }

    /// Inverse via partial-pivot LU. Entries of the inverse may be negative.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.entries
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::Singular {
                det: self.determinant,
                threshold: SINGULAR_THRESHOLD,
            })
    }

    pub fn diagnostics(&self) -> Result<ConfusionDiagnostics> {
        let inv = self.inverse()?;
        let gram = &inv * inv.transpose();
        let eig = SymmetricEigen::new(gram);
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if lo <= 0.0 {
            return Err(Error::Singular {
                det: self.determinant,
                threshold: SINGULAR_THRESHOLD,
            });
        }
        // Rounding can push the ratio a hair below one for orthogonal inputs.
        let eigen_ratio = (hi / lo).max(1.0);
        let is_permutation = self
            .entries
            .iter()
            .all(|&v| v.abs() < PERMUTATION_TOL || (v - 1.0).abs() < PERMUTATION_TOL);
        Ok(ConfusionDiagnostics {
            determinant: self.determinant,
            eigen_ratio,
            log_eigen_ratio: eigen_ratio.ln(),
            is_permutation,
        })
    }
}

pub(crate) fn dmatrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: ncols,
            found: bad.len(),
        });
    }
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flatten().copied(),
    ))
}
