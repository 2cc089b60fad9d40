//! Small dense row-major matrices and a power-iteration eigensolver.
//!
//! Alphabets in this crate are tiny (tens of symbols at most), so the solver
//! favors robustness and determinism over scale: power iteration on a PSD
//! operator with monotone Rayleigh quotients, seeded random restarts, and an
//! explicit projection hook to keep iterates inside a constraint subspace.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const POWER_TOL: f64 = 1e-12;
pub(crate) const POWER_MAX_ITERS: usize = 10_000;
const POWER_RESTARTS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = dot(row, x);
        }
        out
    }

    pub fn tr_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (o, &r) in out.iter_mut().zip(row) {
                *o += y[i] * r;
            }
        }
        out
    }

    /// A - u v^T
    pub fn sub_outer(&self, u: &[f64], v: &[f64]) -> Mat {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        let mut m = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] -= u[i] * v[j];
            }
        }
        m
    }

    pub fn hconcat(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut m = Mat::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self[(i, j)];
            }
            for j in 0..other.cols {
                m[(i, self.cols + j)] = other[(i, j)];
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut m = self.clone();
        for v in &mut m.data {
            *v *= s;
        }
        m
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        for v in a.iter_mut() {
            *v /= n;
        }
    }
    n
}

/// Remove the components of `v` along each unit direction in `dirs`.
pub(crate) fn project_out(v: &mut [f64], dirs: &[Vec<f64>]) {
    for d in dirs {
        let c = dot(v, d);
        for (x, y) in v.iter_mut().zip(d) {
            *x -= c * y;
        }
    }
}

pub(crate) struct EigResult {
    pub value: f64,
    pub vector: Vec<f64>,
    /// Stationary iterate, or a stalled one whose Rayleigh quotient has
    /// stopped improving (near-degenerate spectrum); the value is then still
    /// accurate to roughly 1e-8 relative.
    pub converged: bool,
}

/// Top eigenpair of a symmetric PSD operator given by `apply`.
///
/// `project` restricts iterates to a linear subspace; the operator must map
/// the subspace into itself (projected Gram matrices do). The Rayleigh
/// quotient is nondecreasing under power iteration on a PSD operator, so a
/// run ends on a stationary iterate, on sub-ulp Rayleigh gains (stall), or
/// at the iteration cap; stalls and cap hits trigger random restarts.
pub(crate) fn power_top_eig<F, P>(dim: usize, apply: F, project: P, seed: u64) -> EigResult
where
    F: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&mut [f64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = EigResult { value: -1.0, vector: vec![0.0; dim], converged: false };

    for restart in 0..POWER_RESTARTS {
        let mut v: Vec<f64> = if restart == 0 {
            // deterministic ramp start; random restarts follow if it stalls
            (0..dim).map(|i| 1.0 + i as f64).collect()
        } else {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        project(&mut v);
        if normalize(&mut v) == 0.0 {
            continue;
        }

        let mut lambda = 0.0_f64;
        let mut flat = 0usize;
        let mut converged = false;
        for _ in 0..POWER_MAX_ITERS {
            let mut w = apply(&v);
            project(&mut w);
            let new_lambda = dot(&v, &w);
            let wn = normalize(&mut w);
            if wn <= 1e-300 {
                // the operator annihilates this direction
                lambda = 0.0;
                converged = true;
                break;
            }
            let moved: f64 = v
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).abs().min((a + b).abs()))
                .fold(0.0, f64::max);
            let gain = new_lambda - lambda;
            lambda = new_lambda;
            v = w;
            if moved < POWER_TOL {
                converged = true;
                break;
            }
            if gain.abs() <= f64::EPSILON * lambda.abs().max(1e-300) {
                flat += 1;
                if flat >= 50 {
                    converged = true; // stalled: value is as good as it gets
                    break;
                }
            } else {
                flat = 0;
            }
        }

        if lambda > best.value {
            best = EigResult { value: lambda.max(0.0), vector: v, converged };
        }
        // a random start confirming a positive converged value is enough
        if restart >= 1 && best.converged && best.value > 0.0 {
            return best;
        }
    }
    if best.value < 0.0 {
        best.value = 0.0;
    }
    best
}

/// All eigenpairs of a small symmetric matrix by the cyclic Jacobi method,
/// eigenvalues sorted descending; column j of the returned matrix is the
/// eigenvector of the j-th eigenvalue.
pub(crate) fn jacobi_sym_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.rows();
    assert_eq!(n, m.cols());
    let mut a = m.clone();
    let mut v = Mat::identity(n);
    let off = |a: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)] * a[(i, j)];
                }
            }
        }
        s.sqrt()
    };
    let scale = a.frobenius().max(1e-300);
    for _ in 0..60 {
        if off(&a) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, col)] = v[(k, i)];
        }
    }
    (values, vectors)
}

/// C = A B for small dense matrices.
pub(crate) fn matmul(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols(), b.rows());
    let mut c = Mat::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            let aik = a[(i, k)];
            if aik != 0.0 {
                for j in 0..b.cols() {
                    c[(i, j)] += aik * b[(k, j)];
                }
            }
        }
    }
    c
}

/// Top singular pair (sigma, right vector) of `a`, with iterates kept
/// orthogonal to `constraints` (unit directions spanning the complement of
/// the feasible subspace). Returns sigma computed as ||A v|| of the returned
/// vector so downstream residual identities hold exactly.
pub(crate) fn top_singular_constrained(
    a: &Mat,
    constraints: &[Vec<f64>],
    seed: u64,
) -> (f64, Vec<f64>, bool) {
    let dim = a.cols();
    let eig = power_top_eig(
        dim,
        |x| a.tr_matvec(&a.matvec(x)),
        |v| project_out(v, constraints),
        seed,
    );
    let mut v = eig.vector;
    project_out(&mut v, constraints);
    if normalize(&mut v) == 0.0 {
        return (0.0, vec![0.0; dim], eig.converged);
    }
    fix_sign(&mut v);
    let sigma = norm(&a.matvec(&v));
    (sigma, v, eig.converged)
}

/// Sign convention: first entry of clearly nonzero magnitude is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return;
    }
    for &x in v.iter() {
        if x.abs() > 1e-7 * scale {
            if x < 0.0 {
                for y in v.iter_mut() {
                    *y = -*y;
                }
            }
            return;
        }
    }
}
