//! Bit-pipe deterministic models of single-hop channels: rate regions,
//! weighted sum-rate maximization through a small LP, and sum capacities.
//!
//! The resource budget is normalized to 1 for a single hop; it stays an
//! explicit parameter because layered networks pass their layer count.

pub mod simplex;

pub use simplex::{solve_lp, LpError, LpProblem, LpSolution};

use crate::singlehop::{validate_grid, GridViolation, IcParameterGrid};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("negative weight for message {0}")]
    NegativeWeight(String),
    #[error("invalid parameter grid: {}", format_violations(.0))]
    InvalidGrid(Vec<GridViolation>),
}

fn format_violations(v: &[GridViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Rates per message label, normalized per unit resource budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTuple {
    pub rates: BTreeMap<String, f64>,
}

/// Resource shares per message label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    pub delta: BTreeMap<String, f64>,
}

impl Allocation {
    pub fn total(&self) -> f64 {
        self.delta.values().sum()
    }
}

/// Maximize sum of mu_k * delta_k * sigma_k^2 subject to sum delta <= budget.
///
/// Solved through the LP path; the returned allocation is canonicalized to
/// put the whole budget on the lexicographically first optimal label so the
/// output is reproducible.
pub fn mu_sum_rate(
    sigma_sq: &BTreeMap<String, f64>,
    mu: &BTreeMap<String, f64>,
    budget: f64,
) -> Result<(f64, Allocation), ModelError> {
    for (label, &w) in mu {
        if w < 0.0 {
            return Err(ModelError::NegativeWeight(label.clone()));
        }
    }
    let labels: Vec<&String> = sigma_sq.keys().collect();
    let coeff: Vec<f64> = labels
        .iter()
        .map(|l| mu.get(*l).copied().unwrap_or(0.0) * sigma_sq[*l])
        .collect();
    let problem = LpProblem {
        objective: coeff.clone(),
        eq: vec![],
        le: vec![(vec![1.0; labels.len()], budget)],
    };
    let solution = solve_lp(&problem)?;

    let mut delta = BTreeMap::new();
    for l in &labels {
        delta.insert((*l).clone(), 0.0);
    }
    let best = coeff.iter().cloned().fold(0.0_f64, f64::max);
    if best > 0.0 {
        // lexicographically first argmax ("00" < "01" < ... < "22")
        let k = coeff.iter().position(|&c| c >= best - 1e-12 * best.abs().max(1.0)).unwrap();
        delta.insert(labels[k].clone(), budget);
    }
    let value = best * budget;
    debug_assert!((solution.value - value).abs() <= 1e-9 * value.abs().max(1.0));
    Ok((value, Allocation { delta }))
}

/// Sum capacity of an interference-channel grid under a unit budget: the
/// largest grid entry, which the structural chains force to be one of the
/// Tx-common entries.
pub fn ic_sum_capacity(g: &IcParameterGrid) -> Result<(f64, Allocation), ModelError> {
    let violations = validate_grid(g);
    if !violations.is_empty() {
        return Err(ModelError::InvalidGrid(violations));
    }
    let (value, _) = g.max_entry();
    debug_assert!(
        value <= g.get(0, 1).max(g.get(0, 2)) + 2.0 * crate::singlehop::GRID_TOL,
        "chain inequalities should cap the maximum at the Tx-common entries"
    );
    let mut delta = BTreeMap::new();
    for (i, label) in crate::singlehop::GRID_LABELS.iter().enumerate() {
        let (r, c) = (i / 3, i % 3);
        delta.insert((*label).to_string(), 0.0);
        if g.get(r, c) >= value - 1e-12 && delta.values().all(|&v| v == 0.0) {
            delta.insert((*label).to_string(), 1.0);
        }
    }
    Ok((value, Allocation { delta }))
}

/// Extreme points of the region { R : R_k <= delta_k sigma_k^2,
/// sum delta <= budget }: the origin plus one vertex per message axis at
/// budget * sigma_k^2. The region itself is the coordinate-wise-decreasing
/// convex hull of these points.
pub fn rate_region_vertices(sigma_sq: &BTreeMap<String, f64>, budget: f64) -> Vec<RateTuple> {
    let zero: BTreeMap<String, f64> = sigma_sq.keys().map(|k| (k.clone(), 0.0)).collect();
    let mut out = vec![RateTuple { rates: zero.clone() }];
    for (label, &s) in sigma_sq {
        let mut rates = zero.clone();
        rates.insert(label.clone(), budget * s);
        out.push(RateTuple { rates });
    }
    out
}
