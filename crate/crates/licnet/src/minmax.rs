//! Max-min of two quadratic forms over the unit sphere of a subspace.
//!
//! The common-message parameters solve
//!     max { min( ||A1 u||^2, ||A2 u||^2 ) : ||u|| = 1, u in S }
//! where S is the orthogonal complement of a few fixed directions. The dual
//! bound is d* = min over t in [0,1] of lambda_max(P (t G1 + (1-t) G2) P)
//! with G_k the Gram matrices and P the projector onto S; lambda_max is
//! convex in t, so a golden-section search finds the minimum (eigenvalues
//! come from a dense Jacobi solve, which stays exact through the kink the
//! curve has wherever the top eigenvalue changes multiplicity). Primal
//! certificates come from the top eigenvector at the optimal t, from a
//! rotation inside a near-degenerate top eigenspace that balances the two
//! forms, and from projected-gradient ascent over seeded random restarts.
//! The reported value is always the certified primal; the dual gap is
//! surfaced so a failure of strong duality would be visible, not silent.

use crate::linalg::{
    dot, fix_sign, jacobi_sym_eigen, matmul, normalize, project_out, Mat,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

const GOLDEN_ITERS: usize = 80;
const PGA_RESTARTS: usize = 32;
const PGA_ITERS: usize = 400;
/// Restarts stop early once the certificate is this close to the dual bound.
const EARLY_EXIT_GAP: f64 = 1e-11;
/// Beyond this duality gap the solve is reported as failed.
pub(crate) const GAP_LIMIT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("max-min solver did not converge: duality gap {gap:e}")]
pub struct SolverDidNotConverge {
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct MaxMinSolution {
    /// Certified primal value min_k ||A_k u||^2 of `vector`.
    pub value: f64,
    pub vector: Vec<f64>,
    /// Dual upper bound.
    pub dual_bound: f64,
    /// dual_bound - value, clamped at 0.
    pub gap: f64,
}

struct Instance<'a> {
    mats: [&'a Mat; 2],
    constraints: &'a [Vec<f64>],
    /// Projected Gram matrices P A_k^T A_k P.
    grams: [Mat; 2],
    dim: usize,
}

impl Instance<'_> {
    fn new<'a>(mats: [&'a Mat; 2], constraints: &'a [Vec<f64>]) -> Instance<'a> {
        let dim = mats[0].cols();
        let mut projector = Mat::identity(dim);
        for d in constraints {
            let n = dot(d, d).sqrt();
            if n == 0.0 {
                continue;
            }
            for i in 0..dim {
                for j in 0..dim {
                    projector[(i, j)] -= d[i] / n * d[j] / n;
                }
            }
        }
        let gram = |a: &Mat| {
            let mut g = Mat::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    let mut s = 0.0;
                    for r in 0..a.rows() {
                        s += a[(r, i)] * a[(r, j)];
                    }
                    g[(i, j)] = s;
                }
            }
            matmul(&matmul(&projector, &g), &projector)
        };
        let grams = [gram(mats[0]), gram(mats[1])];
        Instance { mats, constraints, grams, dim }
    }

    fn q(&self, k: usize, u: &[f64]) -> f64 {
        let y = self.mats[k].matvec(u);
        dot(&y, &y)
    }

    fn qmin(&self, u: &[f64]) -> f64 {
        self.q(0, u).min(self.q(1, u))
    }

    fn mix(&self, t: f64) -> Mat {
        let mut m = Mat::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = t * self.grams[0][(i, j)] + (1.0 - t) * self.grams[1][(i, j)];
            }
        }
        m
    }

    fn lambda_max(&self, t: f64) -> f64 {
        jacobi_sym_eigen(&self.mix(t)).0[0]
    }
}

/// Solve max-min over the subspace orthogonal to `constraints` (unit
/// directions). Deterministic for a fixed seed.
pub(crate) fn max_min_quadratics(
    mats: [&Mat; 2],
    constraints: &[Vec<f64>],
    seed: u64,
) -> Result<MaxMinSolution, SolverDidNotConverge> {
    assert_eq!(mats[0].cols(), mats[1].cols());
    let inst = Instance::new(mats, constraints);

    // dual: golden-section over t, keeping the best evaluation seen
    let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    let mut dual_bound = f64::INFINITY;
    let mut t_star = 0.5;
    let mut track = |t: f64, f: f64, dual: &mut f64, ts: &mut f64| {
        if f < *dual {
            *dual = f;
            *ts = t;
        }
    };
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let mut fc = inst.lambda_max(c);
    let mut fd = inst.lambda_max(d);
    track(c, fc, &mut dual_bound, &mut t_star);
    track(d, fd, &mut dual_bound, &mut t_star);
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = inst.lambda_max(c);
            track(c, fc, &mut dual_bound, &mut t_star);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = inst.lambda_max(d);
            track(d, fd, &mut dual_bound, &mut t_star);
        }
        if b - a < 1e-12 {
            break;
        }
    }
    for t in [0.0, 1.0] {
        track(t, inst.lambda_max(t), &mut dual_bound, &mut t_star);
    }

    // primal candidates from the spectrum at the dual optimum
    let (values, vectors) = jacobi_sym_eigen(&inst.mix(t_star));
    let column = |k: usize| -> Vec<f64> { (0..inst.dim).map(|r| vectors[(r, k)]).collect() };
    let mut candidates: Vec<Vec<f64>> = vec![column(0)];
    if inst.dim >= 2 && values[0] > 0.0 && values[1] >= values[0] * (1.0 - 1e-6) {
        // rotate u(theta) = cos(theta) va + sin(theta) vb until both forms
        // agree; h is a quadratic form of (cos, sin), so roots are explicit
        let va = column(0);
        let vb = column(1);
        let h = |u: &[f64]| inst.q(0, u) - inst.q(1, u);
        let haa = h(&va);
        let hbb = h(&vb);
        let mixed: Vec<f64> = va
            .iter()
            .zip(&vb)
            .map(|(x, y)| (x + y) / 2.0_f64.sqrt())
            .collect();
        let hab = h(&mixed) - 0.5 * haa - 0.5 * hbb;
        let c0 = 0.5 * (haa + hbb);
        let r = ((0.5 * (haa - hbb)).powi(2) + hab * hab).sqrt();
        if r > 0.0 && c0.abs() <= r {
            let phi = hab.atan2(0.5 * (haa - hbb));
            let acos = (-c0 / r).clamp(-1.0, 1.0).acos();
            for sgn in [1.0, -1.0] {
                let theta = 0.5 * (phi + sgn * acos);
                let u: Vec<f64> = va
                    .iter()
                    .zip(&vb)
                    .map(|(x, y)| theta.cos() * x + theta.sin() * y)
                    .collect();
                candidates.push(u);
            }
        }
    }

    // projected-gradient ascent restarts on a seeded stream
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdeadbeef);
    let best_of = |cands: &[Vec<f64>], inst: &Instance| -> f64 {
        cands
            .iter()
            .map(|u| inst.qmin(u))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let lam_scale = dual_bound.max(1e-12);
    for _ in 0..PGA_RESTARTS {
        if dual_bound - best_of(&candidates, &inst) <= EARLY_EXIT_GAP {
            break;
        }
        let mut u: Vec<f64> = (0..inst.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        project_out(&mut u, constraints);
        if normalize(&mut u) == 0.0 {
            continue;
        }
        let mut step = 0.5 / lam_scale;
        for _ in 0..PGA_ITERS {
            let q0 = inst.q(0, &u);
            let q1 = inst.q(1, &u);
            let k = if q0 <= q1 { 0 } else { 1 };
            let grad = inst.grams[k].matvec(&u);
            let mut next: Vec<f64> =
                u.iter().zip(&grad).map(|(x, g)| x + step * 2.0 * g).collect();
            project_out(&mut next, constraints);
            if normalize(&mut next) == 0.0 {
                break;
            }
            if inst.qmin(&next) >= q0.min(q1) {
                u = next;
            } else {
                step *= 0.5;
                if step < 1e-14 / lam_scale {
                    break;
                }
            }
        }
        candidates.push(u);
    }

    // deterministic reduction: strict improvement keeps the earliest winner
    let mut best_val = f64::NEG_INFINITY;
    let mut best: Vec<f64> = vec![0.0; inst.dim];
    for mut u in candidates {
        project_out(&mut u, constraints);
        if normalize(&mut u) == 0.0 {
            continue;
        }
        let v = inst.qmin(&u);
        if v > best_val {
            best_val = v;
            best = u;
        }
    }
    if best_val < 0.0 {
        // feasible subspace is trivial
        best_val = 0.0;
        best = vec![0.0; inst.dim];
        dual_bound = 0.0;
    }
    fix_sign(&mut best);
    let gap = (dual_bound - best_val).max(0.0);
    if gap > GAP_LIMIT {
        return Err(SolverDidNotConverge { gap });
    }
    Ok(MaxMinSolution { value: best_val, vector: best, dual_bound, gap })
}
