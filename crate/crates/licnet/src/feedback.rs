//! Feedback transformations of the deterministic model.
//!
//! With decoded-message feedback, a Tx-private-to-both-receivers message can
//! travel a two-hop route through the opposite receiver and the Tx-common
//! terminal instead of its direct pipe. That substitution only ever grows
//! the two affected parameters, so a network with feedback is the same
//! network with (s10, s20) replaced by their feedback versions; full and
//! layered feedback coincide because every layer can reconstruct what the
//! deeper layers know.

use crate::multihop::{
    harmonic_mean, identical_layer_sum_capacity, layered_region_params, LayeredNetwork, Mode,
    MultihopError,
};
use crate::singlehop::{validate_grid, GridViolation, IcParameterGrid};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeedbackError {
    #[error("invalid parameter grid: {}", format_violations(.0))]
    InvalidGrid(Vec<GridViolation>),
    #[error("symmetric parameters violate the structural chains: {}", format_violations(.0))]
    InvalidSymmetricParameters(Vec<GridViolation>),
    #[error(transparent)]
    Multihop(#[from] MultihopError),
}

fn format_violations(v: &[GridViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// How a feedback-enhanced common parameter is achieved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackRoute {
    /// The direct pipe already dominates.
    Direct,
    /// Through the other user's receiver: Tx k -> Rx (3-k), feedback to
    /// Tx 0, then Tx 0 -> Rx k.
    ViaOtherReceiver,
    /// Through the own receiver: Tx k -> Rx k, feedback to Tx 0, then
    /// Tx 0 -> Rx (3-k).
    ViaOwnReceiver,
}

impl FeedbackRoute {
    pub fn label(self) -> &'static str {
        match self {
            FeedbackRoute::Direct => "direct",
            FeedbackRoute::ViaOtherReceiver => "via-other-rx",
            FeedbackRoute::ViaOwnReceiver => "via-own-rx",
        }
    }
}

/// A grid plus its two feedback-substituted parameters and the routes that
/// attain them.
#[derive(Debug, Clone)]
pub struct FeedbackGrid {
    pub base: IcParameterGrid,
    pub sigma10_fb_sq: f64,
    pub sigma20_fb_sq: f64,
    pub route10: FeedbackRoute,
    pub route20: FeedbackRoute,
}

impl FeedbackGrid {
    /// The base grid with (s10, s20) replaced by the feedback values.
    pub fn substituted(&self) -> IcParameterGrid {
        let mut e = *self.base.entries();
        e[1][0] = self.sigma10_fb_sq;
        e[2][0] = self.sigma20_fb_sq;
        IcParameterGrid::new(e)
    }
}

fn hm2(a: f64, b: f64) -> f64 {
    harmonic_mean(&[a, b]).expect("two elements")
}

fn fb_parameter(direct: f64, alt1: f64, alt2: f64) -> (f64, FeedbackRoute) {
    // tie-break: direct first, then the first listed alternative
    let mut best = (direct, FeedbackRoute::Direct);
    if alt1 > best.0 {
        best = (alt1, FeedbackRoute::ViaOtherReceiver);
    }
    if alt2 > best.0 {
        best = (alt2, FeedbackRoute::ViaOwnReceiver);
    }
    best
}

/// Feedback substitution for one grid:
/// s10_fb = max(s10, M(s12,s01)/2, M(s11,s02)/2) and mirrored for s20.
pub fn feedback_ic_parameters(g: &IcParameterGrid) -> Result<FeedbackGrid, FeedbackError> {
    let violations = validate_grid(g);
    if !violations.is_empty() {
        return Err(FeedbackError::InvalidGrid(violations));
    }
    let s = g.entries();
    let (sigma10_fb_sq, route10) = fb_parameter(
        s[1][0],
        hm2(s[1][2], s[0][1]) / 2.0,
        hm2(s[1][1], s[0][2]) / 2.0,
    );
    let (sigma20_fb_sq, route20) = fb_parameter(
        s[2][0],
        hm2(s[2][1], s[0][2]) / 2.0,
        hm2(s[2][2], s[0][1]) / 2.0,
    );
    Ok(FeedbackGrid { base: *g, sigma10_fb_sq, sigma20_fb_sq, route10, route20 })
}

/// End-to-end region parameters of a layered network with feedback: apply
/// the per-layer substitution, then run the nonfeedback path optimization.
/// Full-feedback and layered-feedback models both reduce to this.
pub fn feedback_layered_region_params(
    net: &LayeredNetwork,
) -> Result<[[f64; 3]; 3], FeedbackError> {
    Ok(layered_region_params(&feedback_network(net)?))
}

/// The substituted network itself.
pub fn feedback_network(net: &LayeredNetwork) -> Result<LayeredNetwork, FeedbackError> {
    let mut layers = Vec::with_capacity(net.len());
    for g in net.layers() {
        layers.push(feedback_ic_parameters(g)?.substituted());
    }
    // substituted grids can violate the nonfeedback chains (that is the
    // point of feedback), so bypass the validating constructor
    Ok(LayeredNetwork::new_unchecked(layers))
}

/// Mode label with the feedback-substituted entries marked.
pub fn feedback_mode_label(mode: Mode) -> &'static str {
    match mode {
        Mode::Relay1 => "M(s10fb,s01)",
        Mode::Relay2 => "M(s20fb,s02)",
        Mode::Cycle102 => "M(s10fb,s02,s21)",
        Mode::Cycle201 => "M(s20fb,s01,s12)",
        other => other.label(),
    }
}

/// Identical-layer feedback sum capacity: the eight modes evaluated on the
/// substituted grid.
pub fn feedback_identical_sum_capacity(
    g: &IcParameterGrid,
) -> Result<(f64, Mode), FeedbackError> {
    let fb = feedback_ic_parameters(g)?;
    let sub = fb.substituted();
    let mut best = (f64::NEG_INFINITY, Mode::Direct1);
    for mode in Mode::ALL {
        let v = mode.value(&sub);
        if v > best.0 {
            best = (v, mode);
        }
    }
    Ok(best)
}

/// Outcome of checking the no-gain symmetric class.
#[derive(Debug, Clone)]
pub struct SymmetricClassReport {
    pub grid: IcParameterGrid,
    pub sum_capacity: f64,
    pub mode: Mode,
    pub feedback_sum_capacity: f64,
    pub feedback_mode: Mode,
    pub equal: bool,
}

/// Build the symmetric grid (all four private entries lambda, both
/// Tx-private-common entries mu, both Tx-common entries sigma), run both
/// sum-capacity paths, and confirm feedback gains nothing.
pub fn corollary_symmetric_check(
    lambda_sq: f64,
    mu_sq: f64,
    sigma_sq: f64,
    sigma00_sq: f64,
) -> Result<SymmetricClassReport, FeedbackError> {
    let grid = IcParameterGrid::new([
        [sigma00_sq, sigma_sq, sigma_sq],
        [mu_sq, lambda_sq, lambda_sq],
        [mu_sq, lambda_sq, lambda_sq],
    ]);
    let violations = validate_grid(&grid);
    if !violations.is_empty() {
        return Err(FeedbackError::InvalidSymmetricParameters(violations));
    }
    let (sum_capacity, mode) = identical_layer_sum_capacity(&grid)?;
    let (feedback_sum_capacity, feedback_mode) = feedback_identical_sum_capacity(&grid)?;
    let equal = (sum_capacity - feedback_sum_capacity).abs() <= 1e-10;
    Ok(SymmetricClassReport {
        grid,
        sum_capacity,
        mode,
        feedback_sum_capacity,
        feedback_mode,
        equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_grid(alpha: f64) -> IcParameterGrid {
        let s = (1.0 - 2.0 * alpha).powi(2);
        IcParameterGrid::new([
            [0.5 * s, s, s],
            [0.25 * s, 0.5 * s, 0.5 * s],
            [0.25 * s, 0.5 * s, 0.5 * s],
        ])
    }

    fn display_grid() -> IcParameterGrid {
        IcParameterGrid::new([
            [0.375, 0.6, 1.0],
            [0.26, 0.35, 1.0],
            [0.0, 0.25, 0.0],
        ])
    }

    #[test]
    fn feedback_gain_is_four_thirds_on_the_extreme_grid() {
        for alpha in [0.25, 0.4] {
            let g = example_grid(alpha);
            let fb = feedback_ic_parameters(&g).unwrap();
            let ratio = fb.sigma10_fb_sq / g.get(1, 0);
            assert!((ratio - 4.0 / 3.0).abs() < 1e-9, "alpha={alpha}");
            assert!((fb.sigma20_fb_sq / g.get(2, 0) - 4.0 / 3.0).abs() < 1e-9);
            assert_eq!(fb.route10, FeedbackRoute::ViaOtherReceiver);
        }
    }

    #[test]
    fn display_grid_feedback_parameters() {
        let fb = feedback_ic_parameters(&display_grid()).unwrap();
        assert!((fb.sigma10_fb_sq - 0.375).abs() < 1e-12);
        assert!((fb.sigma20_fb_sq - 0.2).abs() < 1e-12);
        assert_eq!(fb.route10, FeedbackRoute::ViaOtherReceiver);
        assert_eq!(fb.route20, FeedbackRoute::ViaOtherReceiver);
        let (v, mode) = feedback_identical_sum_capacity(&display_grid()).unwrap();
        assert!((v - 6.0 / 13.0).abs() < 1e-12);
        assert_eq!(mode, Mode::Relay1);
        assert_eq!(feedback_mode_label(mode), "M(s10fb,s01)");
    }

    #[test]
    fn direct_dominant_grid_is_unchanged() {
        // s10 already sits at its best alternative
        let g = IcParameterGrid::new([
            [0.5, 0.8, 0.7],
            [0.4, 0.4, 0.5],
            [0.25, 0.6, 0.3],
        ]);
        let fb = feedback_ic_parameters(&g).unwrap();
        assert_eq!(fb.route10, FeedbackRoute::Direct);
        assert_eq!(fb.sigma10_fb_sq, g.get(1, 0));
    }

    #[test]
    fn layered_substitution_never_hurts() {
        let g = example_grid(0.3);
        let net = LayeredNetwork::replicate(g, 3).unwrap();
        let base = layered_region_params(&net);
        let with_fb = feedback_layered_region_params(&net).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(with_fb[i][j] >= base[i][j] - 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn symmetric_class_gains_nothing() {
        let r = corollary_symmetric_check(0.3, 0.2, 0.45, 0.3).unwrap();
        assert!(r.equal, "nonfb {} vs fb {}", r.sum_capacity, r.feedback_sum_capacity);
        // boundary of the chain: sigma = 2 lambda makes the relay route
        // exactly tie with the private pipe
        let lambda = 0.25;
        let sigma = 2.0 * lambda;
        let m = hm2(hm2(lambda, sigma) / 2.0, sigma);
        assert!((m - lambda).abs() < 1e-12);
        let r = corollary_symmetric_check(lambda, 0.2, sigma, 0.3).unwrap();
        assert!(r.equal);
    }

    #[test]
    fn invalid_symmetric_parameters_are_rejected() {
        // sigma > 2 lambda violates the Tx-common sum bound
        assert!(matches!(
            corollary_symmetric_check(0.2, 0.15, 0.5, 0.3),
            Err(FeedbackError::InvalidSymmetricParameters(_))
        ));
    }
}
