//! Channel parameters sigma^2 for point-to-point, broadcast, multiple-access
//! and interference topologies, plus the structural inequality validators
//! that every parameter grid must satisfy.
//!
//! Conventions:
//! - All parameters are stored squared (sigma^2); every downstream formula
//!   (capacities, harmonic means) consumes squares.
//! - Joint channels enumerate input pairs x1-major: column index is
//!   `x1 * |X2| + x2`.
//! - Virtual index 0 means "common": row 0 of a grid is the Tx-common
//!   message, column 0 the Rx-common message.

use crate::dtm::{build_dtm, second_singular, Dtm, DtmError, Side, SingularSolution};
use crate::linalg::{top_singular_constrained, Mat};
use crate::minmax::{max_min_quadratics, MaxMinSolution, SolverDidNotConverge};
use crate::probability::{ChannelMatrix, PerturbationVector, ProbabilityError, ProbabilityVector};
use thiserror::Error;

/// Tolerance for the structural chain inequalities.
pub const GRID_TOL: f64 = 1e-8;

const SEED_BC: u64 = 0xbc00;
const SEED_MAC: u64 = 0x3ac0;
const SEED_IC: u64 = 0x1c00;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SinglehopError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("marginal channels disagree on receiver {receiver} output distribution by {deviation:e}")]
    InconsistentMarginals { receiver: usize, deviation: f64 },
    #[error(transparent)]
    Solver(#[from] SolverDidNotConverge),
    #[error(transparent)]
    Dtm(#[from] DtmError),
    #[error(transparent)]
    Probability(#[from] ProbabilityError),
}

/// Broadcast-channel parameters: two private pipes and the common-message
/// min-max value with its certificates.
#[derive(Debug, Clone)]
pub struct BcParameters {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma0_sq: f64,
    pub l1: PerturbationVector,
    pub l2: PerturbationVector,
    pub l0: PerturbationVector,
    /// Duality gap achieved by the common-message solver.
    pub gap: f64,
}

/// Multiple-access parameters: the common pipe reflects coherent combining
/// across the two transmitters.
#[derive(Debug, Clone)]
pub struct MacParameters {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma0_sq: f64,
    pub l1: PerturbationVector,
    pub l2: PerturbationVector,
    /// Stacked direction of length |X1| + |X2|; the first |X1| entries are
    /// orthogonal to sqrt(P_X1), the rest to sqrt(P_X2).
    pub l0: Vec<f64>,
}

/// The 3x3 grid of interference-channel parameters, indexed
/// (virtual Tx, virtual Rx) with 0 meaning common.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcParameterGrid {
    sigma_sq: [[f64; 3]; 3],
}

/// Message labels in grid order, lexicographic.
pub const GRID_LABELS: [&str; 9] = ["00", "01", "02", "10", "11", "12", "20", "21", "22"];

impl IcParameterGrid {
    pub fn new(sigma_sq: [[f64; 3]; 3]) -> Self {
        IcParameterGrid { sigma_sq }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.sigma_sq[i][j]
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.sigma_sq
    }

    /// Entries keyed by message label "ij".
    pub fn as_map(&self) -> std::collections::BTreeMap<String, f64> {
        let mut m = std::collections::BTreeMap::new();
        for i in 0..3 {
            for j in 0..3 {
                m.insert(format!("{i}{j}"), self.sigma_sq[i][j]);
            }
        }
        m
    }

    /// Largest entry and its (i, j), ties broken by label order.
    pub fn max_entry(&self) -> (f64, (usize, usize)) {
        let mut best = (self.sigma_sq[0][0], (0, 0));
        for i in 0..3 {
            for j in 0..3 {
                if self.sigma_sq[i][j] > best.0 {
                    best = (self.sigma_sq[i][j], (i, j));
                }
            }
        }
        best
    }

    /// Relabel users 1 and 2 on both sides.
    pub fn swap_users(&self) -> Self {
        let p = |k: usize| match k {
            1 => 2,
            2 => 1,
            _ => 0,
        };
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[p(i)][p(j)] = self.sigma_sq[i][j];
            }
        }
        IcParameterGrid { sigma_sq: out }
    }

    /// Reverse the roles of transmitters and receivers.
    pub fn transpose(&self) -> Self {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[j][i] = self.sigma_sq[i][j];
            }
        }
        IcParameterGrid { sigma_sq: out }
    }
}

/// Interference-channel computation result: grid entries plus the achieving
/// directions and solver gaps (zero for the singular-value entries).
#[derive(Debug, Clone)]
pub struct IcSolution {
    pub grid: IcParameterGrid,
    pub vectors: Vec<Vec<Vec<f64>>>,
    pub gaps: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// One violated structural inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct GridViolation {
    /// Chain number 1-5 in the canonical listing.
    pub chain: usize,
    pub bound: BoundSide,
    pub actual: f64,
    pub limit: f64,
}

impl std::fmt::Display for GridViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let desc = match self.chain {
            1 => "s10 between harmonic half and min of (s11, s12)",
            2 => "s20 between harmonic half and min of (s21, s22)",
            3 => "s00 between harmonic half and min of (s01, s02)",
            4 => "s01 between max and sum of (s11, s21)",
            _ => "s02 between max and sum of (s12, s22)",
        };
        let side = match self.bound {
            BoundSide::Lower => "lower",
            BoundSide::Upper => "upper",
        };
        write!(
            f,
            "chain {} ({desc}) {side} bound violated: {} vs limit {}",
            self.chain, self.actual, self.limit
        )
    }
}

/// ab / (a + b), the best time-shared rate through two pipes; 0 when both
/// are dead.
pub fn time_share_rate(sigma1_sq: f64, sigma2_sq: f64) -> f64 {
    let s = sigma1_sq + sigma2_sq;
    if s <= 0.0 {
        0.0
    } else {
        sigma1_sq * sigma2_sq / s
    }
}

/// Point-to-point parameter: squared second singular value of the DTM and
/// the achieving direction.
pub fn p2p_parameter(
    w: &ChannelMatrix,
    p_x: &ProbabilityVector,
) -> Result<(f64, SingularSolution), SinglehopError> {
    let dtm = build_dtm(w, p_x)?;
    let sol = second_singular(&dtm)?;
    Ok((sol.value * sol.value, sol))
}

/// Broadcast-channel parameters for two branches sharing the input alphabet.
pub fn bc_parameters(
    w1: &ChannelMatrix,
    w2: &ChannelMatrix,
    p_x: &ProbabilityVector,
) -> Result<BcParameters, SinglehopError> {
    if w1.input_size() != w2.input_size() {
        return Err(SinglehopError::DimensionMismatch {
            left: w1.input_size(),
            right: w2.input_size(),
        });
    }
    let d1 = build_dtm(w1, p_x)?;
    let d2 = build_dtm(w2, p_x)?;
    let s1 = second_singular(&d1)?;
    let s2 = second_singular(&d2)?;
    let a1 = d1.deflated();
    let a2 = d2.deflated();
    let sol = max_min_quadratics([&a1, &a2], &[p_x.sqrt_entries()], SEED_BC)?;
    let bc = BcParameters {
        sigma1_sq: s1.value * s1.value,
        sigma2_sq: s2.value * s2.value,
        sigma0_sq: sol.value,
        l1: s1.vector,
        l2: s2.vector,
        l0: PerturbationVector::from_solver(sol.vector, p_x.clone()),
        gap: sol.gap,
    };
    debug_assert!(
        bc.sigma0_sq + GRID_TOL >= time_share_rate(bc.sigma1_sq, bc.sigma2_sq)
            && bc.sigma0_sq <= bc.sigma1_sq.min(bc.sigma2_sq) + GRID_TOL,
        "broadcast structural bounds violated"
    );
    Ok(bc)
}

/// Marginal channels of a joint channel over X1 x X2 (x1-major columns),
/// together with the joint output distribution.
fn marginalize(
    w: &ChannelMatrix,
    p1: &ProbabilityVector,
    p2: &ProbabilityVector,
) -> Result<(ChannelMatrix, ChannelMatrix, ProbabilityVector), SinglehopError> {
    let n1 = p1.alphabet_size();
    let n2 = p2.alphabet_size();
    if w.input_size() != n1 * n2 {
        return Err(SinglehopError::DimensionMismatch {
            left: w.input_size(),
            right: n1 * n2,
        });
    }
    let ny = w.output_size();
    let mut w1 = vec![vec![0.0; n1]; ny];
    let mut w2 = vec![vec![0.0; n2]; ny];
    let mut py = vec![0.0; ny];
    for x1 in 0..n1 {
        for x2 in 0..n2 {
            let col = x1 * n2 + x2;
            for y in 0..ny {
                let v = w.entry(y, col);
                w1[y][x1] += v * p2.get(x2);
                w2[y][x2] += v * p1.get(x1);
                py[y] += v * p1.get(x1) * p2.get(x2);
            }
        }
    }
    Ok((
        ChannelMatrix::new(w1)?,
        ChannelMatrix::new(w2)?,
        ProbabilityVector::from_exact(py),
    ))
}

fn check_full_support(p: &ProbabilityVector, side: Side) -> Result<(), SinglehopError> {
    if let Some(index) = p.zero_symbol() {
        return Err(SinglehopError::Dtm(DtmError::ZeroProbabilitySymbol { side, index }));
    }
    Ok(())
}

/// Constraint directions for a stacked vector: sqrt(P_X1) embedded on the
/// left block and sqrt(P_X2) on the right block.
fn stacked_constraints(p1: &ProbabilityVector, p2: &ProbabilityVector) -> Vec<Vec<f64>> {
    let n1 = p1.alphabet_size();
    let n2 = p2.alphabet_size();
    let mut d1 = vec![0.0; n1 + n2];
    let mut d2 = vec![0.0; n1 + n2];
    d1[..n1].copy_from_slice(&p1.sqrt_entries());
    d2[n1..].copy_from_slice(&p2.sqrt_entries());
    vec![d1, d2]
}

/// Multiple-access parameters from the joint channel.
pub fn mac_parameters(
    w: &ChannelMatrix,
    p1: &ProbabilityVector,
    p2: &ProbabilityVector,
) -> Result<MacParameters, SinglehopError> {
    check_full_support(p1, Side::Input)?;
    check_full_support(p2, Side::Input)?;
    let (w1, w2, py) = marginalize(w, p1, p2)?;
    check_full_support(&py, Side::Output)?;
    let d1 = Dtm::from_parts(w1.mat(), p1.clone(), py.clone());
    let d2 = Dtm::from_parts(w2.mat(), p2.clone(), py);
    let s1 = second_singular(&d1)?;
    let s2 = second_singular(&d2)?;

    // The stacked DTM [B1 B2] deflated by its top pair equals the
    // concatenation of the individually deflated matrices, and its top right
    // singular vector satisfies both split orthogonality constraints.
    let a0 = d1.deflated().hconcat(&d2.deflated());
    let constraints = stacked_constraints(p1, p2);
    let (sigma0, l0, converged) = top_singular_constrained(&a0, &constraints, SEED_MAC);
    if !converged && sigma0 > 0.0 {
        return Err(SinglehopError::Dtm(DtmError::NumericalFailure));
    }

    let mac = MacParameters {
        sigma1_sq: s1.value * s1.value,
        sigma2_sq: s2.value * s2.value,
        sigma0_sq: sigma0 * sigma0,
        l1: s1.vector,
        l2: s2.vector,
        l0,
    };
    debug_assert!(
        mac.sigma0_sq + GRID_TOL >= mac.sigma1_sq.max(mac.sigma2_sq)
            && mac.sigma0_sq <= mac.sigma1_sq + mac.sigma2_sq + GRID_TOL,
        "multiple-access structural bounds violated"
    );
    Ok(mac)
}

/// Derive the four marginal channels of an interference channel from its
/// joint per-receiver descriptions.
///
/// Returns (w11, w12, w21, w22) where w_ij is the channel Tx i -> Rx j.
pub fn ic_marginals(
    wy1: &ChannelMatrix,
    wy2: &ChannelMatrix,
    p1: &ProbabilityVector,
    p2: &ProbabilityVector,
) -> Result<(ChannelMatrix, ChannelMatrix, ChannelMatrix, ChannelMatrix), SinglehopError> {
    let (w11, w21, _) = marginalize(wy1, p1, p2)?;
    let (w12, w22, _) = marginalize(wy2, p1, p2)?;
    Ok((w11, w12, w21, w22))
}

/// Interference-channel parameter grid from the four marginal channels.
pub fn ic_parameters(
    w11: &ChannelMatrix,
    w12: &ChannelMatrix,
    w21: &ChannelMatrix,
    w22: &ChannelMatrix,
    p1: &ProbabilityVector,
    p2: &ProbabilityVector,
) -> Result<IcSolution, SinglehopError> {
    check_full_support(p1, Side::Input)?;
    check_full_support(p2, Side::Input)?;
    for (w, p) in [(w11, p1), (w12, p1), (w21, p2), (w22, p2)] {
        if w.input_size() != p.alphabet_size() {
            return Err(SinglehopError::DimensionMismatch {
                left: w.input_size(),
                right: p.alphabet_size(),
            });
        }
    }

    // both transmitters must see the same output distribution per receiver
    let py1 = w11.apply(p1)?;
    let py2 = w12.apply(p1)?;
    for (receiver, (wa, pa, py)) in [(1usize, (w21, p2, &py1)), (2usize, (w22, p2, &py2))] {
        let other = wa.apply(pa)?;
        let deviation = other
            .entries()
            .iter()
            .zip(py.entries())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if deviation > 1e-9 {
            return Err(SinglehopError::InconsistentMarginals { receiver, deviation });
        }
    }
    check_full_support(&py1, Side::Output)?;
    check_full_support(&py2, Side::Output)?;

    let d11 = Dtm::from_parts(w11.mat(), p1.clone(), py1.clone());
    let d21 = Dtm::from_parts(w21.mat(), p2.clone(), py1);
    let d12 = Dtm::from_parts(w12.mat(), p1.clone(), py2.clone());
    let d22 = Dtm::from_parts(w22.mat(), p2.clone(), py2);

    let mut grid = [[0.0; 3]; 3];
    let mut vectors: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); 3]; 3];
    let mut gaps = [[0.0; 3]; 3];

    // private entries
    for (i, j, d) in [(1, 1, &d11), (1, 2, &d12), (2, 1, &d21), (2, 2, &d22)] {
        let sol = second_singular(d)?;
        grid[i][j] = sol.value * sol.value;
        vectors[i][j] = sol.vector.entries().to_vec();
    }

    // Tx-private to both receivers: broadcast-type min-max
    for (i, da, db, p) in [(1usize, &d11, &d12, p1), (2usize, &d21, &d22, p2)] {
        let a = da.deflated();
        let b = db.deflated();
        let sol: MaxMinSolution =
            max_min_quadratics([&a, &b], &[p.sqrt_entries()], SEED_IC ^ (i as u64))?;
        grid[i][0] = sol.value;
        vectors[i][0] = sol.vector;
        gaps[i][0] = sol.gap;
    }

    // Tx-common to one receiver: stacked second singular value
    let stacked1 = d11.deflated().hconcat(&d21.deflated());
    let stacked2 = d12.deflated().hconcat(&d22.deflated());
    let constraints = stacked_constraints(p1, p2);
    for (j, a0) in [(1usize, &stacked1), (2usize, &stacked2)] {
        let (sigma, v, converged) =
            top_singular_constrained(a0, &constraints, SEED_IC ^ ((10 + j) as u64));
        if !converged && sigma > 0.0 {
            return Err(SinglehopError::Dtm(DtmError::NumericalFailure));
        }
        grid[0][j] = sigma * sigma;
        vectors[0][j] = v;
    }

    // Tx-common to both receivers: stacked min-max
    let sol = max_min_quadratics([&stacked1, &stacked2], &constraints, SEED_IC ^ 0xff)?;
    grid[0][0] = sol.value;
    vectors[0][0] = sol.vector;
    gaps[0][0] = sol.gap;

    Ok(IcSolution { grid: IcParameterGrid::new(grid), vectors, gaps })
}

/// Check the five structural chains; empty means the grid is consistent.
pub fn validate_grid(g: &IcParameterGrid) -> Vec<GridViolation> {
    let s = g.entries();
    let mut out = Vec::new();
    let mut chain = |n: usize, lo: f64, x: f64, hi: f64| {
        if x < lo - GRID_TOL {
            out.push(GridViolation { chain: n, bound: BoundSide::Lower, actual: x, limit: lo });
        }
        if x > hi + GRID_TOL {
            out.push(GridViolation { chain: n, bound: BoundSide::Upper, actual: x, limit: hi });
        }
    };
    chain(1, time_share_rate(s[1][1], s[1][2]), s[1][0], s[1][1].min(s[1][2]));
    chain(2, time_share_rate(s[2][1], s[2][2]), s[2][0], s[2][1].min(s[2][2]));
    chain(3, time_share_rate(s[0][1], s[0][2]), s[0][0], s[0][1].min(s[0][2]));
    chain(4, s[1][1].max(s[2][1]), s[0][1], s[1][1] + s[2][1]);
    chain(5, s[1][2].max(s[2][2]), s[0][2], s[1][2] + s[2][2]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1_w(alpha: f64) -> ChannelMatrix {
        ChannelMatrix::new(vec![
            vec![0.5, 0.5, 1.0 - alpha, alpha],
            vec![0.5, 0.5, alpha, 1.0 - alpha],
        ])
        .unwrap()
    }

    fn example2_w2(alpha: f64) -> ChannelMatrix {
        ChannelMatrix::new(vec![
            vec![1.0 - alpha, alpha, 0.5, 0.5],
            vec![alpha, 1.0 - alpha, 0.5, 0.5],
        ])
        .unwrap()
    }

    /// Joint MAC channel used by the quaternary examples.
    pub(crate) fn example3_joint(alpha: f64) -> ChannelMatrix {
        let mut rows = vec![vec![0.0; 16]; 2];
        for x1 in 0..4usize {
            for x2 in 0..4usize {
                let p0 = if x1 <= 1 && x2 <= 2 {
                    (2.0 - alpha) / 3.0
                } else if x2 == 3 {
                    alpha
                } else if (x1 == 2 && x2 <= 2) || (x1 == 3 && x2 == 2) {
                    (4.0 - 5.0 * alpha) / 3.0
                } else {
                    (-2.0 + 7.0 * alpha) / 3.0
                };
                rows[0][4 * x1 + x2] = p0;
                rows[1][4 * x1 + x2] = 1.0 - p0;
            }
        }
        ChannelMatrix::new(rows).unwrap()
    }

    /// The second-receiver joint channel of the interference example.
    pub(crate) fn example5_joint_y2(alpha: f64) -> ChannelMatrix {
        let a = alpha;
        let big = (2.0 - a) / 3.0;
        let mid = (4.0 - 5.0 * a) / 3.0;
        let low = (-2.0 + 7.0 * a) / 3.0;
        let mut rows = vec![vec![0.0; 16]; 2];
        let assign = |pair: (usize, usize)| -> f64 {
            match pair {
                (2, 2) | (2, 3) | (2, 0) | (3, 2) | (3, 3) | (3, 0) => big,
                (2, 1) | (3, 1) | (0, 1) | (1, 1) => a,
                (0, 2) | (0, 3) | (0, 0) | (1, 0) => mid,
                _ => low, // (1,2), (1,3)
            }
        };
        for x1 in 0..4usize {
            for x2 in 0..4usize {
                let p0 = assign((x1, x2));
                rows[0][4 * x1 + x2] = p0;
                rows[1][4 * x1 + x2] = 1.0 - p0;
            }
        }
        ChannelMatrix::new(rows).unwrap()
    }

    pub(crate) fn example5_solution(alpha: f64) -> IcSolution {
        let p = ProbabilityVector::uniform(4);
        let (w11, w12, w21, w22) =
            ic_marginals(&example3_joint(alpha), &example5_joint_y2(alpha), &p, &p).unwrap();
        ic_parameters(&w11, &w12, &w21, &w22, &p, &p).unwrap()
    }

    #[test]
    fn p2p_quaternary_example() {
        let (s, _) = p2p_parameter(&example1_w(0.3), &ProbabilityVector::uniform(4)).unwrap();
        assert!((s - 0.08).abs() < 1e-12);
    }

    #[test]
    fn p2p_noiseless_binary_is_one() {
        let (s, _) = p2p_parameter(&ChannelMatrix::identity(2), &ProbabilityVector::uniform(2))
            .unwrap();
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bc_example_values_and_time_share_equality() {
        for alpha in [0.1, 0.2, 0.35] {
            let bc = bc_parameters(
                &example1_w(alpha),
                &example2_w2(alpha),
                &ProbabilityVector::uniform(4),
            )
            .unwrap();
            let s = (1.0 - 2.0 * alpha).powi(2);
            assert!((bc.sigma1_sq - 0.5 * s).abs() < 1e-10, "alpha={alpha}");
            assert!((bc.sigma2_sq - 0.5 * s).abs() < 1e-10);
            assert!((bc.sigma0_sq - 0.25 * s).abs() < 1e-9);
            assert!(bc.gap <= 1e-7);
            // the certificate achieves the reported value on both branches
            let ts = time_share_rate(bc.sigma1_sq, bc.sigma2_sq);
            assert!((ts - bc.sigma0_sq).abs() < 1e-9);
        }
    }

    #[test]
    fn bc_identical_branches_collapse() {
        let w = example1_w(0.15);
        let bc = bc_parameters(&w, &w, &ProbabilityVector::uniform(4)).unwrap();
        assert!((bc.sigma0_sq - bc.sigma1_sq).abs() < 1e-9);
        assert!((bc.sigma1_sq - bc.sigma2_sq).abs() < 1e-12);
    }

    #[test]
    fn time_share_rate_cases() {
        assert!((time_share_rate(0.18, 0.18) - 0.09).abs() < 1e-15);
        assert_eq!(time_share_rate(0.7, 0.0), 0.0);
        assert!((time_share_rate(0.3, 0.6) - 0.2).abs() < 1e-15);
        assert_eq!(time_share_rate(0.0, 0.0), 0.0);
    }

    #[test]
    fn mac_quaternary_example() {
        for alpha in [0.3, 0.35, 0.45, 0.6] {
            let mac = mac_parameters(
                &example3_joint(alpha),
                &ProbabilityVector::uniform(4),
                &ProbabilityVector::uniform(4),
            )
            .unwrap();
            let s = (1.0 - 2.0 * alpha).powi(2);
            assert!((mac.sigma1_sq - 0.5 * s).abs() < 1e-10, "alpha={alpha}");
            assert!((mac.sigma2_sq - 0.5 * s).abs() < 1e-10);
            assert!((mac.sigma0_sq - s).abs() < 1e-10);
        }
        // the stacked direction at alpha = 0.35
        let mac = mac_parameters(
            &example3_joint(0.35),
            &ProbabilityVector::uniform(4),
            &ProbabilityVector::uniform(4),
        )
        .unwrap();
        let expect = [0.0, 0.0, 0.5, -0.5, 0.0, 0.0, 0.5, -0.5];
        for (got, want) in mac.l0.iter().zip(expect) {
            assert!((got - want).abs() < 1e-8, "l0 = {:?}", mac.l0);
        }
    }

    #[test]
    fn mac_l0_split_orthogonality() {
        let p = ProbabilityVector::uniform(4);
        let mac = mac_parameters(&example3_joint(0.4), &p, &p).unwrap();
        let s: Vec<f64> = p.sqrt_entries();
        let left: f64 = mac.l0[..4].iter().zip(&s).map(|(a, b)| a * b).sum();
        let right: f64 = mac.l0[4..].iter().zip(&s).map(|(a, b)| a * b).sum();
        assert!(left.abs() < 1e-9 && right.abs() < 1e-9);
        let n: f64 = mac.l0.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-9);
    }

    #[test]
    fn binary_addition_mac_carries_nothing() {
        // y = x1 xor x2 xor noise: both marginals are pure noise
        let alpha = 0.1;
        let w = ChannelMatrix::new(vec![
            vec![1.0 - alpha, alpha, alpha, 1.0 - alpha],
            vec![alpha, 1.0 - alpha, 1.0 - alpha, alpha],
        ])
        .unwrap();
        let p = ProbabilityVector::uniform(2);
        let mac = mac_parameters(&w, &p, &p).unwrap();
        assert!(mac.sigma1_sq < 1e-10);
        assert!(mac.sigma2_sq < 1e-10);
        assert!(mac.sigma0_sq < 1e-10);
    }

    #[test]
    fn swapped_addition_mac_exposes_user_two() {
        // swapping two columns turns the channel into y = x2 xor noise;
        // user 2 then owns a binary symmetric channel, whose parameter is
        // (1-2a)^2 under a uniform input (paper Example 4 prints half that
        // value, which contradicts its own singular-value definition: at
        // a = 0 the channel is noiseless and the parameter must be 1).
        for alpha in [0.1, 0.3] {
            let w = ChannelMatrix::new(vec![
                vec![1.0 - alpha, alpha, 1.0 - alpha, alpha],
                vec![alpha, 1.0 - alpha, alpha, 1.0 - alpha],
            ])
            .unwrap();
            let p = ProbabilityVector::uniform(2);
            let mac = mac_parameters(&w, &p, &p).unwrap();
            let s = (1.0 - 2.0 * alpha).powi(2);
            assert!(mac.sigma1_sq < 1e-10);
            assert!((mac.sigma2_sq - s).abs() < 1e-10, "alpha={alpha} got {}", mac.sigma2_sq);
            assert!((mac.sigma0_sq - s).abs() < 1e-10);
        }
    }

    #[test]
    fn ic_grid_closed_forms() {
        for alpha in [0.3, 0.4] {
            let sol = example5_solution(alpha);
            let s = (1.0 - 2.0 * alpha).powi(2);
            let g = sol.grid;
            for i in 1..3 {
                for j in 1..3 {
                    assert!((g.get(i, j) - 0.5 * s).abs() < 1e-9, "({i},{j}) alpha={alpha}");
                }
            }
            assert!((g.get(1, 0) - 0.25 * s).abs() < 1e-8);
            assert!((g.get(2, 0) - 0.25 * s).abs() < 1e-8);
            assert!((g.get(0, 1) - s).abs() < 1e-9);
            assert!((g.get(0, 2) - s).abs() < 1e-9);
            assert!((g.get(0, 0) - 0.5 * s).abs() < 1e-8);
            assert!(validate_grid(&g).is_empty());
        }
    }

    #[test]
    fn identical_channels_collapse_grid() {
        // all four marginals identical: Rx-common values equal the private
        // ones, Tx-common at most doubles them
        let p = ProbabilityVector::uniform(4);
        let w = example1_w(0.2);
        let sol = ic_parameters(&w, &w, &w, &w, &p, &p).unwrap();
        let g = sol.grid;
        assert!((g.get(1, 0) - g.get(1, 1)).abs() < 1e-8);
        assert!((g.get(2, 0) - g.get(2, 2)).abs() < 1e-8);
        assert!(g.get(0, 1) <= 2.0 * g.get(1, 1) + 1e-8);
        assert!(validate_grid(&g).is_empty());
    }

    #[test]
    fn validate_grid_reports_constructed_violation() {
        let mut sol = example5_solution(0.3);
        let mut entries = *sol.grid.entries();
        entries[0][1] = entries[1][1] + entries[2][1] + 1.0; // break chain 4
        sol.grid = IcParameterGrid::new(entries);
        let violations = validate_grid(&sol.grid);
        assert!(!violations.is_empty());
        assert!(violations
            .iter()
            .any(|v| v.chain == 4 && v.bound == BoundSide::Upper));
    }

    #[test]
    fn grid_swap_users_is_an_involution_matching_transposed_channels() {
        let alpha = 0.35;
        let p = ProbabilityVector::uniform(4);
        let (w11, w12, w21, w22) =
            ic_marginals(&example3_joint(alpha), &example5_joint_y2(alpha), &p, &p).unwrap();
        let g = ic_parameters(&w11, &w12, &w21, &w22, &p, &p).unwrap().grid;
        // swap user labels: channels relabel as (11<->22, 12<->21)
        let g_swapped = ic_parameters(&w22, &w21, &w12, &w11, &p, &p).unwrap().grid;
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (g.swap_users().get(i, j) - g_swapped.get(i, j)).abs() < 1e-8,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn inconsistent_marginals_are_rejected() {
        let p = ProbabilityVector::uniform(2);
        let w_id = ChannelMatrix::identity(2);
        let w_noise = ChannelMatrix::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        // Rx1 sees identity from Tx1 but noise from Tx2: output dists differ
        let err = ic_parameters(&w_id, &w_id, &w_noise, &w_noise, &p, &p);
        assert!(err.is_ok(), "uniform outputs actually agree here");
        let skew = ChannelMatrix::new(vec![vec![0.9, 0.2], vec![0.1, 0.8]]).unwrap();
        let err = ic_parameters(&skew, &w_id, &w_noise, &w_noise, &p, &p);
        assert!(matches!(err, Err(SinglehopError::InconsistentMarginals { receiver: 1, .. })));
    }
}
