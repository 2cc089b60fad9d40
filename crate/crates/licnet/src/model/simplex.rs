//! Dense two-phase simplex with Bland's rule.
//!
//! Problems here are tiny (tens of variables), so the tableau is kept dense
//! and pivoting favors determinism: the entering variable is the
//! lowest-index candidate and ratio-test ties leave the basic variable with
//! the lowest index. Duals are read off the final tableau through the
//! columns that initially held the identity.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
}

/// maximize c.x  subject to  eq rows A x = b, le rows A x <= b, x >= 0.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub le: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Basic variable indices (structural variables are 0..n).
    pub basis: Vec<usize>,
    /// Reduced costs of the structural variables at optimality (all <= 0).
    pub reduced_costs: Vec<f64>,
    /// Dual multipliers of the le rows (>= 0) and eq rows (free).
    pub dual_le: Vec<f64>,
    pub dual_eq: Vec<f64>,
}

struct Tableau {
    /// rows x (cols + 1); last column is the rhs
    t: Vec<Vec<f64>>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.t[r][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for j in 0..=self.cols {
            self.t[r][j] /= p;
        }
        for i in 0..self.rows {
            if i != r {
                let f = self.t[i][c];
                if f != 0.0 {
                    for j in 0..=self.cols {
                        self.t[i][j] -= f * self.t[r][j];
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule on the given objective expressed as reduced costs.
    /// Returns Err(Unbounded) or the number of pivots.
    fn run(&mut self, rc: &mut [f64], value: &mut f64, allowed: &[bool]) -> Result<(), LpError> {
        loop {
            let entering = (0..self.cols)
                .find(|&j| allowed[j] && rc[j] > PIVOT_TOL);
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.t[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-12
                                || ((ratio - bratio).abs() <= 1e-12
                                    && self.basis[r] < self.basis[br])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else { return Err(LpError::Unbounded) };
            // update reduced costs and objective alongside the tableau
            let factor = rc[c] / self.t[r][c];
            *value += factor * self.rhs(r);
            let row = self.t[r].clone();
            for j in 0..self.cols {
                rc[j] -= factor * row[j];
            }
            rc[c] = 0.0;
            self.pivot(r, c);
        }
    }
}

/// Solve with the dense two-phase simplex.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    let n = p.objective.len();
    for (row, _) in p.eq.iter().chain(&p.le) {
        assert_eq!(row.len(), n, "constraint width mismatch");
    }
    let m_le = p.le.len();
    let m_eq = p.eq.len();
    let m = m_le + m_eq;

    // column layout: structural 0..n, slacks n..n+m_le, artificials after
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut flipped = vec![false; m];
    let mut needs_artificial = vec![false; m];
    // le rows first (stable indices for duals)
    for (i, (a, b)) in p.le.iter().enumerate() {
        let mut row = vec![0.0; n];
        row.copy_from_slice(a);
        let mut b = *b;
        if b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            b = -b;
            flipped[i] = true;
            needs_artificial[i] = true; // slack becomes a surplus
        }
        row.push(b);
        rows.push(row);
    }
    for (k, (a, b)) in p.eq.iter().enumerate() {
        let i = m_le + k;
        let mut row = vec![0.0; n];
        row.copy_from_slice(a);
        let mut b = *b;
        if b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
            b = -b;
            flipped[i] = true;
        }
        needs_artificial[i] = true;
        row.push(b);
        rows.push(row);
    }

    let n_art: usize = needs_artificial.iter().filter(|&&x| x).count();
    let cols = n + m_le + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art_cols: Vec<usize> = Vec::new();
    let mut id_col = vec![0usize; m]; // column initially holding +e_i for row i
    let mut next_art = n + m_le;
    for i in 0..m {
        let b = rows[i][n];
        t[i][..n].copy_from_slice(&rows[i][..n]);
        t[i][cols] = b;
        if i < m_le {
            // slack (or surplus when the row was flipped)
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            t[i][n + i] = sign;
        }
        if needs_artificial[i] {
            t[i][next_art] = 1.0;
            basis[i] = next_art;
            id_col[i] = next_art;
            art_cols.push(next_art);
            next_art += 1;
        } else {
            basis[i] = n + i;
            id_col[i] = n + i;
        }
    }

    let mut tab = Tableau { t, rows: m, cols, basis };

    // phase 1: drive artificials to zero
    if n_art > 0 {
        let mut rc = vec![0.0; cols];
        let mut value = 0.0;
        // objective: maximize -(sum of artificials); reduced costs start
        // from c - c_B B^-1 A with c_B = -1 on the artificial basis rows
        for j in 0..cols {
            let mut v = if art_cols.contains(&j) { -1.0 } else { 0.0 };
            for i in 0..m {
                if needs_artificial[i] {
                    v += tab.t[i][j];
                }
            }
            rc[j] = v;
        }
        for i in 0..m {
            if needs_artificial[i] {
                value -= tab.rhs(i);
            }
        }
        let allowed = vec![true; cols];
        tab.run(&mut rc, &mut value, &allowed)?;
        if value < -FEAS_TOL {
            return Err(LpError::Infeasible);
        }
        // pivot remaining basic artificials out where possible
        for r in 0..m {
            if art_cols.contains(&tab.basis[r]) {
                if let Some(c) = (0..n + m_le).find(|&j| tab.t[r][j].abs() > PIVOT_TOL) {
                    tab.pivot(r, c);
                }
                // otherwise the row is redundant; the artificial stays basic at 0
            }
        }
    }

    // phase 2: original objective, artificials barred from entering
    let mut allowed = vec![true; cols];
    for &c in &art_cols {
        allowed[c] = false;
    }
    let mut rc = vec![0.0; cols];
    rc[..n].copy_from_slice(&p.objective);
    let mut value = 0.0;
    // express objective in terms of the current basis
    for r in 0..m {
        let b = tab.basis[r];
        let cb = if b < n { p.objective[b] } else { 0.0 };
        if cb != 0.0 {
            value += cb * tab.rhs(r);
            let row = tab.t[r].clone();
            for j in 0..cols {
                rc[j] -= cb * row[j];
            }
        }
    }
    tab.run(&mut rc, &mut value, &allowed)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.rhs(r);
        }
    }
    // duals via the initial-identity columns; flipped rows change sign
    let mut dual = vec![0.0; m];
    for i in 0..m {
        let mut y = -rc[id_col[i]];
        if flipped[i] {
            y = -y;
        }
        dual[i] = y;
    }
    let (dual_le, dual_eq) = (dual[..m_le].to_vec(), dual[m_le..].to_vec());
    let value = p
        .objective
        .iter()
        .zip(&x)
        .map(|(c, xi)| c * xi)
        .sum::<f64>();
    Ok(LpSolution {
        x,
        value,
        basis: tab.basis,
        reduced_costs: rc[..n].to_vec(),
        dual_le,
        dual_eq,
    })
}
