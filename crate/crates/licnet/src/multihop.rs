//! Layered-network deterministic model: per-message path optimization via
//! Viterbi dynamic programming, network sum capacity, the eight
//! identical-layer communication modes, flow-balance accounting, and repair
//! of almost-balanced resource allocations.
//!
//! A layered network is a sequence of parameter grids, one per hop. A path
//! through the virtual-node trellis carries one message; with an optimal
//! split of the resource budget along a path, its rate is the harmonic mean
//! of the link parameters (scaled by the budget convention in use). A dead
//! link (sigma^2 = 0) kills every path through it, which the Viterbi costs
//! encode as +infinity.

use crate::singlehop::{validate_grid, GridViolation, IcParameterGrid};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultihopError {
    #[error("empty value list")]
    EmptyList,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid parameter grid in layer {layer}: {}", format_violations(.violations))]
    InvalidGrid { layer: usize, violations: Vec<GridViolation> },
    #[error("mode uses dead link ({0}, {1})", .link.0, .link.1)]
    DeadLinkInMode { link: (usize, usize) },
    #[error("negative resource share {value} at layer {layer} link ({i},{j})")]
    NegativeDelta { layer: usize, i: usize, j: usize, value: f64 },
    #[error("scheme spends {total} over {layers} layers, beyond the budget")]
    BudgetExceeded { total: f64, layers: usize },
    #[error("scheme could not be rebalanced (residual imbalance {residual:e})")]
    UnrepairableZeroPattern { residual: f64 },
}

fn format_violations(v: &[GridViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// An ordered stack of per-hop parameter grids, each individually valid.
#[derive(Debug, Clone)]
pub struct LayeredNetwork {
    layers: Vec<IcParameterGrid>,
}

impl LayeredNetwork {
    pub fn new(layers: Vec<IcParameterGrid>) -> Result<Self, MultihopError> {
        if layers.is_empty() {
            return Err(MultihopError::EmptyList);
        }
        for (layer, g) in layers.iter().enumerate() {
            let violations = validate_grid(g);
            if !violations.is_empty() {
                return Err(MultihopError::InvalidGrid { layer, violations });
            }
        }
        Ok(LayeredNetwork { layers })
    }

    pub fn replicate(grid: IcParameterGrid, layers: usize) -> Result<Self, MultihopError> {
        LayeredNetwork::new(vec![grid; layers])
    }

    /// Feedback-substituted grids may step outside the nonfeedback chains,
    /// so the feedback pipeline skips the chain validation.
    pub(crate) fn new_unchecked(layers: Vec<IcParameterGrid>) -> Self {
        LayeredNetwork { layers }
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layer(&self, l: usize) -> &IcParameterGrid {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[IcParameterGrid] {
        &self.layers
    }
}

/// Node sequence i_1 .. i_{L+1} through the virtual-node trellis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<u8>,
}

impl std::fmt::Display for Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

/// Result of a single-message path optimization.
#[derive(Debug, Clone)]
pub struct PathResult {
    /// (1/L) times the harmonic mean of the links along the best path.
    pub sigma_sq: f64,
    pub path: Path,
    /// Every path from source to destination crosses a dead link.
    pub dead: bool,
}

/// Result of the network sum-capacity search.
#[derive(Debug, Clone)]
pub struct SumCapacity {
    /// Harmonic mean of the best node sequence (budget L convention).
    pub value: f64,
    pub path: Path,
    pub dead: bool,
}

/// k / sum(1/v); zero as soon as any element is zero.
pub fn harmonic_mean(values: &[f64]) -> Result<f64, MultihopError> {
    if values.is_empty() {
        return Err(MultihopError::EmptyList);
    }
    if values.iter().any(|&v| v <= 0.0) {
        return Ok(0.0);
    }
    Ok(values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>())
}

fn edge_cost(g: &IcParameterGrid, i: usize, j: usize) -> f64 {
    let s = g.get(i, j);
    if s > 0.0 {
        1.0 / s
    } else {
        f64::INFINITY
    }
}

/// Backward cost-to-go tables: ctg[l][k] is the least total cost from node k
/// at boundary l to the terminal boundary L (seeded with `terminal`).
fn cost_to_go(net: &LayeredNetwork, terminal: [f64; 3]) -> Vec<[f64; 3]> {
    let l = net.len();
    let mut ctg = vec![[0.0; 3]; l + 1];
    ctg[l] = terminal;
    for layer in (0..l).rev() {
        for k in 0..3 {
            let mut best = f64::INFINITY;
            for m in 0..3 {
                let c = edge_cost(net.layer(layer), k, m) + ctg[layer + 1][m];
                if c < best {
                    best = c;
                }
            }
            ctg[layer][k] = best;
        }
    }
    ctg
}

/// Walk forward choosing, at every step, the smallest next node that lies on
/// a minimum-cost continuation: the lexicographically smallest optimal path.
fn reconstruct(net: &LayeredNetwork, ctg: &[[f64; 3]], start: usize) -> Vec<u8> {
    let l = net.len();
    let mut nodes = Vec::with_capacity(l + 1);
    nodes.push(start as u8);
    let mut cur = start;
    for layer in 0..l {
        let target = ctg[layer][cur];
        let mut chosen = 0usize;
        for m in 0..3 {
            let c = edge_cost(net.layer(layer), cur, m) + ctg[layer + 1][m];
            if c == target {
                chosen = m;
                break;
            }
        }
        nodes.push(chosen as u8);
        cur = chosen;
    }
    nodes
}

/// Best path for the message from virtual source `i` to virtual destination
/// `j`, with the layer-count normalization baked into the value.
pub fn best_path(net: &LayeredNetwork, i: usize, j: usize) -> PathResult {
    let mut terminal = [f64::INFINITY; 3];
    terminal[j] = 0.0;
    let ctg = cost_to_go(net, terminal);
    let cost = ctg[0][i];
    let mut nodes = reconstruct(net, &ctg, i);
    let dead = !cost.is_finite();
    if dead {
        *nodes.last_mut().unwrap() = j as u8;
    }
    let sigma_sq = if dead { 0.0 } else { 1.0 / cost };
    PathResult { sigma_sq, path: Path { nodes }, dead }
}

/// All nine end-to-end region parameters of the network.
pub fn layered_region_params(net: &LayeredNetwork) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = best_path(net, i, j).sigma_sq;
        }
    }
    out
}

/// Network sum capacity over free choice of source and destination: the
/// largest harmonic mean over node sequences. Under the per-layer budget of
/// L this value carries no 1/L factor.
pub fn sum_capacity(net: &LayeredNetwork) -> SumCapacity {
    let ctg = cost_to_go(net, [0.0; 3]);
    let mut best = f64::INFINITY;
    let mut start = 0usize;
    for k in 0..3 {
        if ctg[0][k] < best {
            best = ctg[0][k];
            start = k;
        }
    }
    let dead = !best.is_finite();
    let nodes = reconstruct(net, &ctg, start);
    let value = if dead { 0.0 } else { net.len() as f64 / best };
    SumCapacity { value, path: Path { nodes }, dead }
}

/// The eight communication modes that can be optimal for a network of
/// identical layers: three self-loops, three two-cycles, two three-cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Direct1,
    Common,
    Direct2,
    Relay1,
    Relay2,
    Swap,
    Cycle102,
    Cycle201,
}

impl Mode {
    pub const ALL: [Mode; 8] = [
        Mode::Direct1,
        Mode::Common,
        Mode::Direct2,
        Mode::Relay1,
        Mode::Relay2,
        Mode::Swap,
        Mode::Cycle102,
        Mode::Cycle201,
    ];

    /// Links of the cycle this mode keeps active.
    pub fn links(self) -> &'static [(usize, usize)] {
        match self {
            Mode::Direct1 => &[(1, 1)],
            Mode::Common => &[(0, 0)],
            Mode::Direct2 => &[(2, 2)],
            Mode::Relay1 => &[(1, 0), (0, 1)],
            Mode::Relay2 => &[(2, 0), (0, 2)],
            Mode::Swap => &[(1, 2), (2, 1)],
            Mode::Cycle102 => &[(1, 0), (0, 2), (2, 1)],
            Mode::Cycle201 => &[(2, 0), (0, 1), (1, 2)],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Direct1 => "s11",
            Mode::Common => "s00",
            Mode::Direct2 => "s22",
            Mode::Relay1 => "M(s10,s01)",
            Mode::Relay2 => "M(s20,s02)",
            Mode::Swap => "M(s12,s21)",
            Mode::Cycle102 => "M(s10,s02,s21)",
            Mode::Cycle201 => "M(s20,s01,s12)",
        }
    }

    pub fn value(self, g: &IcParameterGrid) -> f64 {
        let vals: Vec<f64> = self.links().iter().map(|&(i, j)| g.get(i, j)).collect();
        harmonic_mean(&vals).expect("mode link list is never empty")
    }
}

/// Sum capacity of the infinite identical-layer network: the best of the
/// eight modes, ties resolved in listing order.
pub fn identical_layer_sum_capacity(g: &IcParameterGrid) -> Result<(f64, Mode), MultihopError> {
    let violations = validate_grid(g);
    if !violations.is_empty() {
        return Err(MultihopError::InvalidGrid { layer: 0, violations });
    }
    let mut best = (f64::NEG_INFINITY, Mode::Direct1);
    for mode in Mode::ALL {
        let v = mode.value(g);
        if v > best.0 {
            best = (v, mode);
        }
    }
    Ok(best)
}

/// Per-layer resource shares delta[l][i][j] under the budget
/// (1/L) * sum delta <= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    delta: Vec<[[f64; 3]; 3]>,
}

impl Scheme {
    pub fn new(delta: Vec<[[f64; 3]; 3]>) -> Result<Self, MultihopError> {
        if delta.is_empty() {
            return Err(MultihopError::EmptyList);
        }
        let layers = delta.len();
        let mut total = 0.0;
        for (layer, d) in delta.iter().enumerate() {
            for (i, row) in d.iter().enumerate() {
                for (j, &value) in row.iter().enumerate() {
                    if value < -1e-12 {
                        return Err(MultihopError::NegativeDelta { layer, i, j, value });
                    }
                    total += value;
                }
            }
        }
        if total / layers as f64 > 1.0 + 1e-9 {
            return Err(MultihopError::BudgetExceeded { total, layers });
        }
        Ok(Scheme { delta })
    }

    pub fn single_layer(delta: [[f64; 3]; 3]) -> Result<Self, MultihopError> {
        Scheme::new(vec![delta])
    }

    pub fn layers(&self) -> usize {
        self.delta.len()
    }

    pub fn layer(&self, l: usize) -> &[[f64; 3]; 3] {
        &self.delta[l]
    }

    pub fn total(&self) -> f64 {
        self.delta.iter().flatten().flatten().sum()
    }

    /// Mean of the per-layer shares as a single-layer scheme.
    pub fn layer_average(&self) -> Scheme {
        let l = self.delta.len() as f64;
        let mut avg = [[0.0; 3]; 3];
        for d in &self.delta {
            for i in 0..3 {
                for j in 0..3 {
                    avg[i][j] += d[i][j] / l;
                }
            }
        }
        Scheme { delta: vec![avg] }
    }

    /// Total rate injected by layer `l`: sum of delta * sigma^2 over links.
    pub fn layer_throughput(&self, g: &IcParameterGrid, l: usize) -> f64 {
        let mut t = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                t += self.delta[l][i][j] * g.get(i, j);
            }
        }
        t
    }
}

/// Flow accounting for a scheme over a network.
#[derive(Debug, Clone)]
pub struct ImbalanceReport {
    /// Sum over nodes of |first-layer outflow - last-layer inflow|.
    pub gamma: f64,
    /// Residuals of the per-node balance at each interior boundary:
    /// inflow through layer l minus outflow through layer l+1.
    pub boundary_residuals: Vec<[f64; 3]>,
}

fn outflow(d: &[[f64; 3]; 3], g: &IcParameterGrid, k: usize) -> f64 {
    (0..3).map(|j| d[k][j] * g.get(k, j)).sum()
}

fn inflow(d: &[[f64; 3]; 3], g: &IcParameterGrid, k: usize) -> f64 {
    (0..3).map(|i| d[i][k] * g.get(i, k)).sum()
}

/// End-to-end gamma and interior balance residuals of `s` over `net`.
pub fn flow_imbalance(s: &Scheme, net: &LayeredNetwork) -> Result<ImbalanceReport, MultihopError> {
    if s.layers() != net.len() {
        return Err(MultihopError::DimensionMismatch { left: s.layers(), right: net.len() });
    }
    let l = net.len();
    let gamma = (0..3)
        .map(|k| {
            (outflow(s.layer(0), net.layer(0), k) - inflow(s.layer(l - 1), net.layer(l - 1), k))
                .abs()
        })
        .sum();
    let mut boundary_residuals = Vec::with_capacity(l.saturating_sub(1));
    for b in 1..l {
        let mut res = [0.0; 3];
        for (k, r) in res.iter_mut().enumerate() {
            *r = inflow(s.layer(b - 1), net.layer(b - 1), k)
                - outflow(s.layer(b), net.layer(b), k);
        }
        boundary_residuals.push(res);
    }
    Ok(ImbalanceReport { gamma, boundary_residuals })
}

/// A scheme tagged with its end-to-end imbalance.
#[derive(Debug, Clone)]
pub struct GammaScheme {
    pub scheme: Scheme,
    pub gamma: f64,
}

impl GammaScheme {
    pub fn new(scheme: Scheme, net: &LayeredNetwork) -> Result<Self, MultihopError> {
        let gamma = flow_imbalance(&scheme, net)?.gamma;
        Ok(GammaScheme { scheme, gamma })
    }

    /// Single-layer convenience over one grid; the grid is not required to
    /// pass the chain validation here, only the flow accounting is done.
    pub fn over_grid(scheme: Scheme, g: &IcParameterGrid) -> Result<Self, MultihopError> {
        if scheme.layers() != 1 {
            return Err(MultihopError::DimensionMismatch { left: scheme.layers(), right: 1 });
        }
        let gamma = node_alphas(scheme.layer(0), g.entries())
            .iter()
            .map(|a| a.abs())
            .sum();
        Ok(GammaScheme { scheme, gamma })
    }
}

/// The balanced single-layer allocation that achieves a mode: equal flow
/// M/k on every link of the k-cycle.
pub fn mode_allocation(g: &IcParameterGrid, mode: Mode) -> Result<Scheme, MultihopError> {
    let links = mode.links();
    for &(i, j) in links {
        if g.get(i, j) <= 0.0 {
            return Err(MultihopError::DeadLinkInMode { link: (i, j) });
        }
    }
    let inv: Vec<f64> = links.iter().map(|&(i, j)| 1.0 / g.get(i, j)).collect();
    let total_inv: f64 = inv.iter().sum();
    let mut delta = [[0.0; 3]; 3];
    for (&(i, j), &w) in links.iter().zip(&inv) {
        delta[i][j] = w / total_inv;
    }
    Scheme::single_layer(delta)
}

const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn permute(d: &[[f64; 3]; 3], p: &[usize; 3], transpose: bool) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = if transpose { (j, i) } else { (i, j) };
            out[p[a]][p[b]] = d[i][j];
        }
    }
    out
}

fn unpermute(d: &[[f64; 3]; 3], p: &[usize; 3], transpose: bool) -> [[f64; 3]; 3] {
    let mut inv = [0usize; 3];
    for (k, &pk) in p.iter().enumerate() {
        inv[pk] = k;
    }
    let first = permute(d, &inv, false);
    if transpose {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = first[j][i];
            }
        }
        out
    } else {
        first
    }
}

fn node_alphas(d: &[[f64; 3]; 3], g: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut a = [0.0; 3];
    for (k, ak) in a.iter_mut().enumerate() {
        let out: f64 = (0..3).map(|j| d[k][j] * g[k][j]).sum();
        let inn: f64 = (0..3).map(|i| d[i][k] * g[i][k]).sum();
        *ak = out - inn;
    }
    a
}

/// Turn an almost-balanced single-layer scheme into an exactly balanced one
/// with per-entry changes bounded by 4 * max(1/sigma^2) * gamma.
///
/// The construction routes the excess received by one node back to the two
/// over-sending nodes, falling back to deactivating unfixable flows when the
/// required return links are dead. Node labels are permuted (and flow
/// direction reversed when needed) so that nodes 0 and 1 are the
/// over-senders; the relabeling is undone on output.
pub fn repair_to_balanced(
    s: &GammaScheme,
    g: &IcParameterGrid,
) -> Result<Scheme, MultihopError> {
    if s.scheme.layers() != 1 {
        return Err(MultihopError::DimensionMismatch { left: s.scheme.layers(), right: 1 });
    }
    let delta0 = *s.scheme.layer(0);
    let sig0 = *g.entries();
    let flow_scale: f64 = delta0
        .iter()
        .flatten()
        .zip(sig0.iter().flatten())
        .map(|(d, s)| d * s)
        .sum();
    let alpha0 = node_alphas(&delta0, &sig0);
    let eps: f64 = alpha0.iter().map(|a| a.abs()).sum();
    if eps <= 1e-13 * (1.0 + flow_scale) {
        return Ok(s.scheme.clone());
    }

    // find a relabeling with alpha0 >= 0, alpha1 >= 0, alpha2 <= 0,
    // preferring zero-patterns that need the least surgery
    let noise = 1e-12 * (1.0 + flow_scale);
    let mut chosen: Option<(usize, [usize; 3], bool)> = None; // (case rank, perm, transpose)
    for transpose in [false, true] {
        for perm in &PERMS {
            let st = permute(&sig0, perm, transpose);
            let dt = permute(&delta0, perm, transpose);
            let at = node_alphas(&dt, &st);
            let violation = (-at[0]).max(0.0) + (-at[1]).max(0.0) + at[2].max(0.0);
            if violation > noise {
                continue;
            }
            let rank = if st[2][0] > 0.0 && st[2][1] > 0.0 {
                0
            } else if st[2][0] > 0.0 && st[0][1] > 0.0 {
                1
            } else if st[2][0] > 0.0 {
                2
            } else if st[2][1] > 0.0 {
                3 // symmetric image of rank <= 2 under the 0<->1 swap
            } else {
                4
            };
            if chosen.map_or(true, |(r, _, _)| rank < r) {
                chosen = Some((rank, *perm, transpose));
            }
        }
    }
    let Some((_, perm, transpose)) = chosen else {
        return Err(MultihopError::UnrepairableZeroPattern { residual: eps });
    };

    let st = permute(&sig0, &perm, transpose);
    let mut dt = permute(&delta0, &perm, transpose);
    let at = node_alphas(&dt, &st);
    let a0 = at[0].max(0.0);
    let a1 = at[1].max(0.0);

    if st[2][0] > 0.0 && st[2][1] > 0.0 {
        dt[2][0] += a0 / st[2][0];
        dt[2][1] += a1 / st[2][1];
    } else if st[2][0] > 0.0 && st[0][1] > 0.0 {
        dt[0][1] += a1 / st[0][1];
        dt[2][0] += (a0 + a1) / st[2][0];
    } else if st[2][0] > 0.0 {
        // node 1 cannot be refilled: deactivate its outgoing flow instead
        let f10 = if st[1][0] > 0.0 { dt[1][0] * st[1][0] } else { 0.0 };
        dt[2][0] += (a0 + f10) / st[2][0];
        if st[1][0] > 0.0 {
            dt[1][0] = 0.0;
        }
        if st[1][2] > 0.0 {
            dt[1][2] = 0.0;
        }
    } else {
        // node 2 cannot return anything: deactivate its live inflows, then
        // settle the residual two-node imbalance between 0 and 1
        let f02 = if st[0][2] > 0.0 { dt[0][2] * st[0][2] } else { 0.0 };
        if st[0][2] > 0.0 {
            dt[0][2] = 0.0;
        }
        if st[1][2] > 0.0 {
            dt[1][2] = 0.0;
        }
        let beta = at[0] - f02;
        if beta > 0.0 {
            if st[1][0] > 0.0 {
                dt[1][0] += beta / st[1][0];
            } else if st[0][1] > 0.0 {
                // beta equals the 0 -> 1 cross flow exactly; remove it
                dt[0][1] = 0.0;
            }
        } else if beta < 0.0 {
            if st[0][1] > 0.0 {
                dt[0][1] += (-beta) / st[0][1];
            } else if st[1][0] > 0.0 {
                dt[1][0] = (dt[1][0] + beta / st[1][0]).max(0.0);
            }
        }
    }

    let mut repaired = unpermute(&dt, &perm, transpose);
    for row in repaired.iter_mut() {
        for v in row.iter_mut() {
            *v = v.max(0.0);
        }
    }
    let total: f64 = repaired.iter().flatten().sum();
    if total > 1.0 {
        for row in repaired.iter_mut() {
            for v in row.iter_mut() {
                *v /= total;
            }
        }
    }

    let residual: f64 = node_alphas(&repaired, &sig0).iter().map(|a| a.abs()).sum();
    if residual > 1e-10 * (1.0 + flow_scale) {
        return Err(MultihopError::UnrepairableZeroPattern { residual });
    }
    Scheme::single_layer(repaired)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(entries: [[f64; 3]; 3]) -> IcParameterGrid {
        IcParameterGrid::new(entries)
    }

    /// Parameters matching the worked layered-network example: each layer
    /// rounds to (s11, s12, s10) = (.35, 1, .26), (s21, s22, s20) =
    /// (.25, 0, 0), (s01, s02, s00) = (.6, 1, .375).
    fn display_grid() -> IcParameterGrid {
        grid([
            [0.375, 0.6, 1.0],
            [0.26, 0.35, 1.0],
            [0.0, 0.25, 0.0],
        ])
    }

    fn small_valid_grid() -> IcParameterGrid {
        // chains hold: s10 in [hm/2, min], s0j in [max, sum], s00 in range
        grid([
            [0.5, 0.8, 0.7],
            [0.3, 0.4, 0.5],
            [0.25, 0.6, 0.3],
        ])
    }

    #[test]
    fn harmonic_mean_cases() {
        assert!((harmonic_mean(&[0.7]).unwrap() - 0.7).abs() < 1e-15);
        let m = harmonic_mean(&[0.375, 0.6]).unwrap();
        assert!((m - 6.0 / 13.0).abs() < 1e-15);
        // direct-formula oracle for a triple
        let vals = [0.35, 1.0, 0.26];
        let expect = 3.0 / (1.0 / 0.35 + 1.0 + 1.0 / 0.26);
        assert!((harmonic_mean(&vals).unwrap() - expect).abs() < 1e-15);
        assert_eq!(harmonic_mean(&[0.3, 0.0]).unwrap(), 0.0);
        assert!(matches!(harmonic_mean(&[]), Err(MultihopError::EmptyList)));
    }

    #[test]
    fn single_layer_best_path_is_the_entry() {
        let net = LayeredNetwork::new(vec![small_valid_grid()]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let r = best_path(&net, i, j);
                assert!((r.sigma_sq - net.layer(0).get(i, j)).abs() < 1e-15);
                assert_eq!(r.path.nodes, vec![i as u8, j as u8]);
            }
        }
    }

    #[test]
    fn two_layer_common_message_formula() {
        let g1 = small_valid_grid();
        let g2 = grid([
            [0.45, 0.7, 0.9],
            [0.33, 0.45, 0.6],
            [0.28, 0.5, 0.35],
        ]);
        let net = LayeredNetwork::new(vec![g1, g2]).unwrap();
        let r = best_path(&net, 1, 0);
        // candidate paths 1 -> m -> 0 for m in {0, 1, 2}
        let hand = (0..3)
            .map(|m| {
                let vals = [g1.get(1, m), g2.get(m, 0)];
                harmonic_mean(&vals).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max)
            / 2.0;
        assert!((r.sigma_sq - hand).abs() < 1e-12);
    }

    #[test]
    fn dead_paths_are_flagged() {
        // node 1 has no live outgoing links, so nothing leaves it
        let g = grid([
            [0.25, 0.6, 0.3],
            [0.0, 0.0, 0.0],
            [0.25, 0.6, 0.3],
        ]);
        assert!(validate_grid(&g).is_empty());
        let net = LayeredNetwork::new(vec![g, g]).unwrap();
        let r = best_path(&net, 1, 2);
        assert!(r.dead);
        assert_eq!(r.sigma_sq, 0.0);
        assert_eq!(r.path.nodes.len(), 3);
        assert_eq!(r.path.nodes[0], 1);
        assert_eq!(*r.path.nodes.last().unwrap(), 2);
    }

    #[test]
    fn sum_capacity_single_layer_is_max_entry() {
        let g = small_valid_grid();
        let net = LayeredNetwork::new(vec![g]).unwrap();
        let r = sum_capacity(&net);
        assert!((r.value - 0.8).abs() < 1e-15);
        assert_eq!(r.path.nodes, vec![0, 1]);
    }

    #[test]
    fn region_params_single_layer_is_identity() {
        let g = small_valid_grid();
        let net = LayeredNetwork::new(vec![g]).unwrap();
        let params = layered_region_params(&net);
        for i in 0..3 {
            for j in 0..3 {
                assert!((params[i][j] - g.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identical_layer_modes_on_display_grid() {
        let (v, mode) = identical_layer_sum_capacity(&display_grid()).unwrap();
        assert!((v - 0.4).abs() < 1e-12);
        assert_eq!(mode, Mode::Swap);
    }

    #[test]
    fn symmetric_grid_mode_values() {
        // lambda = .2, mu = .15, s = .3, s00 = .18
        let g = grid([
            [0.18, 0.3, 0.3],
            [0.15, 0.2, 0.2],
            [0.15, 0.2, 0.2],
        ]);
        assert!(validate_grid(&g).is_empty());
        let (v, mode) = identical_layer_sum_capacity(&g).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        assert_eq!(mode, Mode::Direct1); // several modes tie at 0.2
    }

    #[test]
    fn mode_allocation_self_loop_and_cycle() {
        let g = small_valid_grid();
        let s = mode_allocation(&g, Mode::Common).unwrap();
        assert_eq!(s.layer(0)[0][0], 1.0);
        assert_eq!(s.total(), 1.0);

        let s = mode_allocation(&g, Mode::Cycle102).unwrap();
        let m = Mode::Cycle102.value(&g);
        for &(i, j) in Mode::Cycle102.links() {
            let flow = s.layer(0)[i][j] * g.get(i, j);
            assert!((flow - m / 3.0).abs() < 1e-12);
        }
        assert!((s.total() - 1.0).abs() < 1e-12);
        let report = flow_imbalance(&s, &LayeredNetwork::new(vec![g]).unwrap()).unwrap();
        assert!(report.gamma < 1e-12);
        assert!((s.layer_throughput(&g, 0) - m).abs() < 1e-12);
    }

    #[test]
    fn mode_allocation_rejects_dead_links() {
        let g = display_grid(); // s20 = 0
        assert!(matches!(
            mode_allocation(&g, Mode::Relay2),
            Err(MultihopError::DeadLinkInMode { link: (2, 0) })
        ));
    }

    #[test]
    fn flow_imbalance_by_definition() {
        let g = small_valid_grid();
        let net = LayeredNetwork::new(vec![g]).unwrap();
        // a pure self-loop is balanced
        let mut d = [[0.0; 3]; 3];
        d[1][1] = 1.0;
        let r = flow_imbalance(&Scheme::single_layer(d).unwrap(), &net).unwrap();
        assert_eq!(r.gamma, 0.0);
        // a single cross link shows up at both endpoints
        let mut d = [[0.0; 3]; 3];
        d[1][0] = 1.0;
        let r = flow_imbalance(&Scheme::single_layer(d).unwrap(), &net).unwrap();
        assert!((r.gamma - 2.0 * g.get(1, 0)).abs() < 1e-15);
    }

    #[test]
    fn layer_average_divides_gamma_by_l() {
        // build a 3-layer scheme satisfying the interior balance, so the
        // averaging identity applies exactly
        let g = small_valid_grid();
        let l = 3;
        let net = LayeredNetwork::replicate(g, l).unwrap();
        let mut layers = Vec::new();
        let mut d = [[0.0; 3]; 3];
        d[0][1] = 0.4;
        d[1][2] = 0.2;
        layers.push(d);
        for _ in 1..l {
            let prev = *layers.last().unwrap();
            let mut next = [[0.0; 3]; 3];
            for k in 0..3 {
                let inflow: f64 = (0..3).map(|i| prev[i][k] * g.get(i, k)).sum();
                // push everything to a fixed outgoing link
                let j = (k + 1) % 3;
                next[k][j] = inflow / g.get(k, j);
            }
            layers.push(next);
        }
        // normalize to the layered budget
        let raw_total: f64 = layers.iter().flatten().flatten().sum();
        let scale = (l as f64) / raw_total.max(l as f64);
        for d in layers.iter_mut() {
            for row in d.iter_mut() {
                for v in row.iter_mut() {
                    *v *= scale;
                }
            }
        }
        let scheme = Scheme::new(layers).unwrap();
        let full = flow_imbalance(&scheme, &net).unwrap();
        for res in &full.boundary_residuals {
            for r in res {
                assert!(r.abs() < 1e-12, "interior balance should hold by construction");
            }
        }
        let avg = scheme.layer_average();
        let single = LayeredNetwork::new(vec![g]).unwrap();
        let avg_gamma = flow_imbalance(&avg, &single).unwrap().gamma;
        assert!((avg_gamma - full.gamma / l as f64).abs() < 1e-12);
        // identical throughput per layer carries over to the average
        let t0 = scheme.layer_throughput(&g, 0);
        assert!((avg.layer_throughput(&g, 0) - t0).abs() < 1e-12);
    }

    #[test]
    fn repair_leaves_balanced_schemes_alone() {
        let g = small_valid_grid();
        let s = mode_allocation(&g, Mode::Cycle102).unwrap();
        let gs = GammaScheme::over_grid(s.clone(), &g).unwrap();
        let repaired = repair_to_balanced(&gs, &g).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((repaired.layer(0)[i][j] - s.layer(0)[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repair_matches_the_direct_construction_when_no_relabel_is_needed() {
        let g = small_valid_grid();
        let sig = *g.entries();
        // make nodes 0 and 1 over-send and node 2 over-receive
        let mut d = [[0.0; 3]; 3];
        d[0][2] = 0.10;
        d[1][2] = 0.08;
        d[2][2] = 0.05;
        let scheme = Scheme::single_layer(d).unwrap();
        let gs = GammaScheme::over_grid(scheme, &g).unwrap();
        let a0 = d[0][2] * sig[0][2];
        let a1 = d[1][2] * sig[1][2];
        assert!((gs.gamma - 2.0 * (a0 + a1)).abs() < 1e-15);

        let repaired = repair_to_balanced(&gs, &g).unwrap();
        // hand construction: return flows on 2->0 and 2->1
        let mut want = d;
        want[2][0] += a0 / sig[2][0];
        want[2][1] += a1 / sig[2][1];
        let total: f64 = want.iter().flatten().sum();
        assert!(total <= 1.0, "no normalization expected in this instance");
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (repaired.layer(0)[i][j] - want[i][j]).abs() < 1e-12,
                    "entry ({i},{j})"
                );
            }
        }
        let residual = flow_imbalance(&repaired, &LayeredNetwork::new(vec![g]).unwrap())
            .unwrap()
            .gamma;
        assert!(residual < 1e-12);
    }

    #[test]
    fn repair_handles_dead_return_links() {
        // s20 = s22 = 0: the direct return path from node 2 to node 0 is
        // dead, so the relabeling must route around it
        let g = display_grid();
        let mut d = [[0.0; 3]; 3];
        d[0][2] = 0.05;
        d[1][0] = 0.1;
        d[1][2] = 0.03;
        let gs = GammaScheme::over_grid(Scheme::single_layer(d).unwrap(), &g).unwrap();
        assert!(gs.gamma > 1e-3);
        let repaired = repair_to_balanced(&gs, &g).unwrap();
        let check = GammaScheme::over_grid(repaired.clone(), &g).unwrap();
        assert!(check.gamma < 1e-12);
        assert!(repaired.total() <= 1.0 + 1e-12);
    }
}
