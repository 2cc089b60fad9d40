//! Divergence transition matrices and their constrained top singular pair.
//!
//! For a channel W and full-support input distribution P_X with output
//! P_Y = W P_X, the DTM is B = diag(1/sqrt(P_Y)) W diag(sqrt(P_X)). Its
//! largest singular value is always 1 with singular vectors sqrt(P_X) and
//! sqrt(P_Y); the informative quantity is the second pair. We obtain it by
//! rank-one deflation (subtract sqrt(P_Y) sqrt(P_X)^T), which makes the
//! feasible directions orthogonal to sqrt(P_X) automatically, followed by a
//! power-iteration top-singular solve.

use crate::linalg::{dot, norm, project_out, top_singular_constrained, Mat};
use crate::probability::{ChannelMatrix, PerturbationVector, ProbabilityError, ProbabilityVector};
use thiserror::Error;

/// Tolerance below which two singular values count as a degenerate pair.
const DEGENERACY_TOL: f64 = 1e-9;

const SEED_SECOND_SINGULAR: u64 = 0x5eed_d7a1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DtmError {
    #[error("zero-probability {side} symbol {index}")]
    ZeroProbabilitySymbol { side: Side, index: usize },
    #[error("singular solve did not converge")]
    NumericalFailure,
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Input,
    Output,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Input => write!(f, "input"),
            Side::Output => write!(f, "output"),
        }
    }
}

/// A divergence transition matrix with its input/output distributions.
#[derive(Debug, Clone)]
pub struct Dtm {
    matrix: Mat,
    input_dist: ProbabilityVector,
    output_dist: ProbabilityVector,
}

/// The constrained top singular pair of a DTM: sigma and the achieving
/// perturbation direction.
#[derive(Debug, Clone)]
pub struct SingularSolution {
    pub value: f64,
    pub vector: PerturbationVector,
    /// True when the next singular value ties with `value`, in which case
    /// `vector` is one representative of the optimal subspace.
    pub degenerate: bool,
}

/// B = diag(1/sqrt(P_Y)) W diag(sqrt(P_X)).
pub fn build_dtm(w: &ChannelMatrix, p_x: &ProbabilityVector) -> Result<Dtm, DtmError> {
    if let Some(index) = p_x.zero_symbol() {
        return Err(DtmError::ZeroProbabilitySymbol { side: Side::Input, index });
    }
    let p_y = w.apply(p_x)?;
    if let Some(index) = p_y.zero_symbol() {
        return Err(DtmError::ZeroProbabilitySymbol { side: Side::Output, index });
    }
    Ok(Dtm::from_parts(w.mat(), p_x.clone(), p_y))
}

impl Dtm {
    pub(crate) fn from_parts(w: &Mat, input_dist: ProbabilityVector, output_dist: ProbabilityVector) -> Self {
        let sx = input_dist.sqrt_entries();
        let sy = output_dist.sqrt_entries();
        let mut matrix = Mat::zeros(w.rows(), w.cols());
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                matrix[(i, j)] = w[(i, j)] * sx[j] / sy[i];
            }
        }
        Dtm { matrix, input_dist, output_dist }
    }

    pub fn input_size(&self) -> usize {
        self.matrix.cols()
    }

    pub fn output_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn entry(&self, y: usize, x: usize) -> f64 {
        self.matrix[(y, x)]
    }

    pub fn input_dist(&self) -> &ProbabilityVector {
        &self.input_dist
    }

    pub fn output_dist(&self) -> &ProbabilityVector {
        &self.output_dist
    }

    pub(crate) fn matrix(&self) -> &Mat {
        &self.matrix
    }

    /// B with its top singular pair removed: B - sqrt(P_Y) sqrt(P_X)^T.
    pub(crate) fn deflated(&self) -> Mat {
        self.matrix
            .sub_outer(&self.output_dist.sqrt_entries(), &self.input_dist.sqrt_entries())
    }

    /// || B v || for a raw direction v.
    pub fn image_norm(&self, v: &[f64]) -> f64 {
        norm(&self.matrix.matvec(v))
    }

    /// Residual of the known top pair: || B sqrt(P_X) - sqrt(P_Y) ||.
    pub fn top_pair_residual(&self) -> f64 {
        let image = self.matrix.matvec(&self.input_dist.sqrt_entries());
        let sy = self.output_dist.sqrt_entries();
        image
            .iter()
            .zip(&sy)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Largest singular value and right singular vector of the deflated DTM,
/// i.e. the second singular pair of B itself.
pub fn second_singular(dtm: &Dtm) -> Result<SingularSolution, DtmError> {
    let a = dtm.deflated();
    let sx = dtm.input_dist.sqrt_entries();
    let constraints = vec![sx.clone()];
    let (sigma, mut v, converged) = top_singular_constrained(&a, &constraints, SEED_SECOND_SINGULAR);
    if !converged && sigma > 0.0 {
        return Err(DtmError::NumericalFailure);
    }

    let degenerate = if sigma > 0.0 {
        // peel the found pair off and look at the next singular value
        let mut u = a.matvec(&v);
        for x in u.iter_mut() {
            *x /= sigma;
        }
        let a2 = a.sub_outer(&u.iter().map(|x| x * sigma).collect::<Vec<_>>(), &v);
        let (sigma3, _, _) = top_singular_constrained(&a2, &constraints, SEED_SECOND_SINGULAR ^ 1);
        sigma3 >= sigma - DEGENERACY_TOL
    } else {
        false
    };

    // guard: keep the certificate exactly orthogonal to sqrt(P_X)
    project_out(&mut v, &constraints);
    let inner = dot(&v, &sx);
    debug_assert!(inner.abs() <= 1e-10, "orthogonality guard failed: {inner}");

    let vector = PerturbationVector::from_solver(v, dtm.input_dist.clone());
    Ok(SingularSolution { value: sigma, vector, degenerate })
}
