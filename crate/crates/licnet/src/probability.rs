//! Distributions, channel matrices, perturbation vectors, and the local
//! quadratic approximation of the KL divergence.
//!
//! All types are immutable after construction and all operations are pure, so
//! everything here is safe to call concurrently.
//!
//! Tolerances: user-supplied vectors and matrices are validated at
//! [`INPUT_TOL`]; objects constructed internally from already-validated
//! inputs come from exact arithmetic and are held to the tighter
//! [`INTERNAL_TOL`].

use crate::linalg::{dot, norm, Mat};
use thiserror::Error;

/// Simplex/stochasticity/orthogonality tolerance for user inputs.
pub const INPUT_TOL: f64 = 1e-9;
/// Tolerance for internally constructed objects.
pub const INTERNAL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbabilityError {
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entries sum to {sum}, deviating from 1 by {deviation:e}")]
    SumNotOne { sum: f64, deviation: f64 },
    #[error("column {column} sums to {sum}, not 1")]
    ColumnNotStochastic { column: usize, sum: f64 },
    #[error("entry {value} at ({row},{col}) outside [0,1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("support mismatch: q is zero at index {index} where p is positive")]
    SupportMismatch { index: usize },
    #[error("perturbation leaves the simplex: entry {value} at index {index}")]
    InvalidPerturbation { index: usize, value: f64 },
    #[error("perturbation norm {norm} exceeds 1")]
    NormTooLarge { norm: f64 },
    #[error("perturbation not orthogonal to sqrt of reference (inner product {inner:e})")]
    NotOrthogonal { inner: f64 },
}

/// A finite probability distribution over an alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    entries: Vec<f64>,
}

impl ProbabilityVector {
    /// Validate a raw vector as a distribution.
    pub fn new(entries: Vec<f64>) -> Result<Self, ProbabilityError> {
        for (index, &value) in entries.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(ProbabilityError::NegativeEntry { index, value });
            }
        }
        let sum: f64 = entries.iter().sum();
        let deviation = (sum - 1.0).abs();
        if deviation > INPUT_TOL {
            return Err(ProbabilityError::SumNotOne { sum, deviation });
        }
        Ok(ProbabilityVector { entries })
    }

    pub fn uniform(n: usize) -> Self {
        ProbabilityVector { entries: vec![1.0 / n as f64; n] }
    }

    /// Construction path for outputs of exact arithmetic on validated inputs.
    pub(crate) fn from_exact(entries: Vec<f64>) -> Self {
        debug_assert!(
            (entries.iter().sum::<f64>() - 1.0).abs() <= INTERNAL_TOL,
            "internally constructed distribution off the simplex"
        );
        let entries = entries.into_iter().map(|v| v.max(0.0)).collect();
        ProbabilityVector { entries }
    }

    pub fn alphabet_size(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries[i]
    }

    /// Entrywise square roots, the reference direction for perturbations.
    pub fn sqrt_entries(&self) -> Vec<f64> {
        self.entries.iter().map(|p| p.sqrt()).collect()
    }

    /// Index of the first zero-probability symbol, if any.
    pub fn zero_symbol(&self) -> Option<usize> {
        self.entries.iter().position(|&p| p <= 0.0)
    }
}

/// A column-stochastic transition matrix: entry (y, x) is W(y|x).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    mat: Mat,
}

impl ChannelMatrix {
    /// Validate a row-major list of rows as a channel matrix.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ProbabilityError> {
        let mat = Mat::from_rows(&rows);
        for row in 0..mat.rows() {
            for col in 0..mat.cols() {
                let value = mat[(row, col)];
                if !(-INPUT_TOL..=1.0 + INPUT_TOL).contains(&value) || !value.is_finite() {
                    return Err(ProbabilityError::EntryOutOfRange { row, col, value });
                }
            }
        }
        for column in 0..mat.cols() {
            let sum: f64 = (0..mat.rows()).map(|r| mat[(r, column)]).sum();
            if (sum - 1.0).abs() > INPUT_TOL {
                return Err(ProbabilityError::ColumnNotStochastic { column, sum });
            }
        }
        Ok(ChannelMatrix { mat })
    }

    pub fn identity(n: usize) -> Self {
        ChannelMatrix { mat: Mat::identity(n) }
    }

    pub fn output_size(&self) -> usize {
        self.mat.rows()
    }

    pub fn input_size(&self) -> usize {
        self.mat.cols()
    }

    pub fn entry(&self, y: usize, x: usize) -> f64 {
        self.mat[(y, x)]
    }

    pub(crate) fn mat(&self) -> &Mat {
        &self.mat
    }

    /// P_Y = W P_X.
    pub fn apply(&self, p: &ProbabilityVector) -> Result<ProbabilityVector, ProbabilityError> {
        if self.input_size() != p.alphabet_size() {
            return Err(ProbabilityError::DimensionMismatch {
                left: self.input_size(),
                right: p.alphabet_size(),
            });
        }
        Ok(ProbabilityVector::from_exact(self.mat.matvec(p.entries())))
    }
}

/// P_Y = W P_X; preserves the simplex exactly for column-stochastic W.
pub fn apply_channel(
    w: &ChannelMatrix,
    p: &ProbabilityVector,
) -> Result<ProbabilityVector, ProbabilityError> {
    w.apply(p)
}

/// A direction L in which a reference distribution is perturbed:
/// P = ref + eps * [sqrt(ref)] L. Unit norm or shorter, orthogonal to
/// sqrt(ref) so the perturbed vector stays on the simplex hyperplane.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationVector {
    entries: Vec<f64>,
    reference: ProbabilityVector,
}

impl PerturbationVector {
    pub fn new(
        entries: Vec<f64>,
        reference: ProbabilityVector,
    ) -> Result<Self, ProbabilityError> {
        if entries.len() != reference.alphabet_size() {
            return Err(ProbabilityError::DimensionMismatch {
                left: entries.len(),
                right: reference.alphabet_size(),
            });
        }
        let n = norm(&entries);
        if n > 1.0 + INPUT_TOL {
            return Err(ProbabilityError::NormTooLarge { norm: n });
        }
        let inner = dot(&entries, &reference.sqrt_entries());
        if inner.abs() > INPUT_TOL {
            return Err(ProbabilityError::NotOrthogonal { inner });
        }
        Ok(PerturbationVector { entries, reference })
    }

    /// Solver outputs are orthogonal by construction; checked at the
    /// internal tolerance.
    pub(crate) fn from_solver(entries: Vec<f64>, reference: ProbabilityVector) -> Self {
        debug_assert!(
            dot(&entries, &reference.sqrt_entries()).abs() <= INTERNAL_TOL,
            "solver output not orthogonal to sqrt reference"
        );
        PerturbationVector { entries, reference }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn reference(&self) -> &ProbabilityVector {
        &self.reference
    }

    pub fn norm(&self) -> f64 {
        norm(&self.entries)
    }

    /// The additive direction J = [sqrt(ref)] L.
    pub fn j_vector(&self) -> Vec<f64> {
        self.entries
            .iter()
            .zip(self.reference.sqrt_entries())
            .map(|(l, s)| l * s)
            .collect()
    }

    /// ref + eps * [sqrt(ref)] L as a raw vector.
    pub fn perturbed(&self, epsilon: f64) -> Vec<f64> {
        self.reference
            .entries()
            .iter()
            .zip(self.j_vector())
            .map(|(p, j)| p + epsilon * j)
            .collect()
    }
}

/// Exact KL divergence D(p || q) in nats.
pub fn kl_divergence(
    p: &ProbabilityVector,
    q: &ProbabilityVector,
) -> Result<f64, ProbabilityError> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(ProbabilityError::DimensionMismatch {
            left: p.alphabet_size(),
            right: q.alphabet_size(),
        });
    }
    let mut sum = 0.0;
    for (index, (&pi, &qi)) in p.entries().iter().zip(q.entries()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(ProbabilityError::SupportMismatch { index });
            }
            sum += pi * (pi / qi).ln();
        }
    }
    Ok(sum.max(0.0))
}

/// Quadratic approximation of the KL divergence between `base` and its
/// perturbation by `eps * [sqrt(base)] l`: returns eps^2 ||l||^2 / 2.
pub fn local_kl_approx(
    base: &ProbabilityVector,
    l: &PerturbationVector,
    epsilon: f64,
) -> Result<f64, ProbabilityError> {
    if base.alphabet_size() != l.entries().len() {
        return Err(ProbabilityError::DimensionMismatch {
            left: base.alphabet_size(),
            right: l.entries().len(),
        });
    }
    let j: Vec<f64> = l
        .entries()
        .iter()
        .zip(base.sqrt_entries())
        .map(|(li, s)| li * s)
        .collect();
    for (index, (&b, &ji)) in base.entries().iter().zip(&j).enumerate() {
        let value = b + epsilon * ji;
        if value < -INTERNAL_TOL {
            return Err(ProbabilityError::InvalidPerturbation { index, value });
        }
    }
    let l2 = dot(l.entries(), l.entries());
    Ok(0.5 * epsilon * epsilon * l2)
}
