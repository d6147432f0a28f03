//! Crank-Nicolson solver for the interacting Black-Scholes equation in `(S, tau)`:
//!
//! ```text
//! dpi/dtau = 1/2 sigma^2 S^2 pi_SS + (r + v(tau)) (S pi_S - pi)
//! ```
//!
//! with `v(tau)` piecewise constant on the bubble window. Boundaries: `pi = 0`
//! at the lowest node and `pi_SS = 0` at `s_max`. Time steps are aligned with
//! `tau1` and `tau2`, and the march starts with fully implicit half steps
//! (Rannacher) to damp the payoff kink.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{potential_v0, potential_v0_star, MarketParams, SquareBubble};

/// Minimum nodes in each direction.
pub const MIN_NODES: usize = 50;
/// Largest `|potential| * dtau` the oracle accepts.
pub const STIFFNESS_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Uniform,
    /// Geometric nodes from `strike / 100` to `s_max`.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    /// Price intervals (nodes are `n_s + 1`).
    pub n_s: usize,
    /// Time steps over `[0, T]`, before rounding up per regime.
    pub n_tau: usize,
    /// Upper price bound; `4 * strike` when unset.
    pub s_max: Option<f64>,
    pub spacing: Spacing,
    pub theta: f64,
    /// Implicit half steps replacing the first CN steps.
    pub rannacher_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            n_s: 400,
            n_tau: 400,
            s_max: None,
            spacing: Spacing::Uniform,
            theta: 0.5,
            rannacher_steps: 4,
        }
    }
}

impl GridConfig {
    pub fn new(n_s: usize, n_tau: usize) -> Self {
        GridConfig {
            n_s,
            n_tau,
            ..GridConfig::default()
        }
    }

    /// Same grid with both resolutions halved.
    pub fn halved(&self) -> Self {
        GridConfig {
            n_s: self.n_s / 2,
            n_tau: self.n_tau / 2,
            ..*self
        }
    }

    fn validate(&self, market: &MarketParams) -> Result<f64> {
        if self.n_s < MIN_NODES || self.n_tau < MIN_NODES {
            return Err(Error::GridTooCoarse {
                n_s: self.n_s,
                n_tau: self.n_tau,
            });
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid("theta", "must lie in [0, 1]"));
        }
        let s_max = self.s_max.unwrap_or(4.0 * market.strike());
        if !(s_max.is_finite() && s_max > 3.0 * market.strike()) {
            return Err(Error::invalid("s_max", "must exceed 3 * strike"));
        }
        Ok(s_max)
    }
}

/// One constant-coefficient stretch of the march.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    start: f64,
    end: f64,
    base_rate: f64,
    potential: f64,
}

/// Solved option surface.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeGrid {
    s_nodes: Vec<f64>,
    tau_nodes: Vec<f64>,
    /// Row-major by time: `surface[k * (n_s + 1) + i]` is `pi(S_i, tau_k)`.
    surface: Vec<f64>,
    theta: f64,
}

impl PdeGrid {
    pub fn s_min(&self) -> f64 {
        self.s_nodes[0]
    }

    pub fn s_max(&self) -> f64 {
        *self.s_nodes.last().unwrap()
    }

    /// Price intervals.
    pub fn n_s(&self) -> usize {
        self.s_nodes.len() - 1
    }

    /// Time steps actually taken.
    pub fn n_tau(&self) -> usize {
        self.tau_nodes.len() - 1
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s_nodes
    }

    pub fn tau_nodes(&self) -> &[f64] {
        &self.tau_nodes
    }

    /// Values at time node `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.s_nodes.len();
        &self.surface[k * w..(k + 1) * w]
    }

    pub fn value(&self, k: usize, i: usize) -> f64 {
        self.surface[k * self.s_nodes.len() + i]
    }

    pub fn surface(&self) -> &[f64] {
        &self.surface
    }
}

/// Bracketing index and weight of `x` in sorted `nodes`.
fn locate(nodes: &[f64], x: f64) -> Option<(usize, f64)> {
    let last = *nodes.last()?;
    if !(x >= nodes[0] && x <= last) {
        return None;
    }
    let idx = nodes
        .partition_point(|&v| v <= x)
        .saturating_sub(1)
        .min(nodes.len() - 2);
    let w = (x - nodes[idx]) / (nodes[idx + 1] - nodes[idx]);
    Some((idx, w))
}

/// Bilinear interpolation of the surface.
pub fn sample(grid: &PdeGrid, s: f64, tau: f64) -> Result<f64> {
    let out = Error::OutOfGrid { s, tau };
    let (i, ws) = locate(&grid.s_nodes, s).ok_or(out.clone())?;
    let (k, wt) = locate(&grid.tau_nodes, tau).ok_or(out)?;
    let lo = (1.0 - ws) * grid.value(k, i) + ws * grid.value(k, i + 1);
    let hi = (1.0 - ws) * grid.value(k + 1, i) + ws * grid.value(k + 1, i + 1);
    Ok((1.0 - wt) * lo + wt * hi)
}

/// Solve a tridiagonal system by the Thomas algorithm.
///
/// `sub[i]` multiplies `x[i-1]` (ignored for `i = 0`), `sup[i]` multiplies `x[i+1]`
/// (ignored for the last row).
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

fn price_nodes(cfg: &GridConfig, strike: f64, s_max: f64) -> Vec<f64> {
    let n = cfg.n_s;
    match cfg.spacing {
        Spacing::Uniform => (0..=n).map(|i| s_max * i as f64 / n as f64).collect(),
        Spacing::Log => {
            let lo = strike / 100.0;
            let ratio = (s_max / lo).ln();
            let mut nodes: Vec<f64> = (0..=n)
                .map(|i| lo * (ratio * i as f64 / n as f64).exp())
                .collect();
            nodes[n] = s_max;
            nodes
        }
    }
}

/// Spatial operator `L V = 1/2 sigma^2 S^2 V_SS + R (S V_S - V)` as three-point
/// weights on interior node `i`.
struct Stencil {
    lower: Vec<f64>,
    centre_diffusion: Vec<f64>,
    centre_drift: Vec<f64>,
    upper: Vec<f64>,
    lower_drift: Vec<f64>,
    upper_drift: Vec<f64>,
    nodes_s: Vec<f64>,
    gaps: Vec<f64>,
    half_var_s2: Vec<f64>,
}

impl Stencil {
    fn new(nodes: &[f64], sigma: f64) -> Self {
        let n = nodes.len();
        let mut st = Stencil {
            lower: vec![0.0; n],
            centre_diffusion: vec![0.0; n],
            centre_drift: vec![0.0; n],
            upper: vec![0.0; n],
            lower_drift: vec![0.0; n],
            upper_drift: vec![0.0; n],
            nodes_s: nodes.to_vec(),
            gaps: nodes.windows(2).map(|w| w[1] - w[0]).collect(),
            half_var_s2: vec![0.0; n],
        };
        let half_var = 0.5 * sigma * sigma;
        for i in 1..n - 1 {
            let s = nodes[i];
            let hm = s - nodes[i - 1];
            let hp = nodes[i + 1] - s;
            let diff = half_var * s * s;
            st.half_var_s2[i] = diff;
            st.lower[i] = diff * 2.0 / (hm * (hm + hp));
            st.centre_diffusion[i] = -diff * 2.0 / (hm * hp);
            st.upper[i] = diff * 2.0 / (hp * (hm + hp));
            st.lower_drift[i] = -s * hp / (hm * (hm + hp));
            st.centre_drift[i] = s * (hp - hm) / (hm * hp);
            st.upper_drift[i] = s * hm / (hp * (hm + hp));
        }
        st
    }

    /// `L v` at node `i` written through divided differences, so nearly linear
    /// data (deep in the money) does not cancel large stencil weights.
    fn apply(&self, i: usize, v: &[f64], rate: f64) -> f64 {
        let (hm, hp) = (self.gaps[i - 1], self.gaps[i]);
        let back = (v[i] - v[i - 1]) / hm;
        let fwd = (v[i + 1] - v[i]) / hp;
        let second = 2.0 * (fwd - back) / (hm + hp);
        let first = (hm * fwd + hp * back) / (hm + hp);
        self.half_var_s2[i] * second + rate * (self.nodes_s[i] * first - v[i])
    }

    /// `(lower, centre, upper)` of `L` at node `i` for total rate `rate`.
    fn weights(&self, i: usize, rate: f64) -> (f64, f64, f64) {
        (
            self.lower[i] + rate * self.lower_drift[i],
            self.centre_diffusion[i] + rate * (self.centre_drift[i] - 1.0),
            self.upper[i] + rate * self.upper_drift[i],
        )
    }
}

struct Marcher<'a> {
    nodes: &'a [f64],
    stencil: Stencil,
    /// `V_N = (1 + rho) V_{N-1} - rho V_{N-2}`.
    rho: f64,
}

impl Marcher<'_> {
    /// One theta step, solved for the increment `d = V_new - V`:
    /// `(I - theta dt L) d = dt L V`. The increment is small, so the solve's
    /// rounding stays far below that of solving for `V_new` directly.
    fn step(&self, v: &[f64], dt: f64, theta: f64, rate: f64) -> Vec<f64> {
        let n = self.nodes.len();
        let m = n - 2;
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for j in 0..m {
            let i = j + 1;
            let (a, b, c) = self.stencil.weights(i, rate);
            rhs[j] = dt * self.stencil.apply(i, v, rate);
            sub[j] = -theta * dt * a;
            diag[j] = 1.0 - theta * dt * b;
            sup[j] = -theta * dt * c;
        }
        // the linearity condition is linear, so the increment obeys it too:
        // fold it into the last interior row
        let last = m - 1;
        let c_top = sup[last];
        diag[last] += c_top * (1.0 + self.rho);
        sub[last] -= c_top * self.rho;
        sup[last] = 0.0;
        // lower Dirichlet value is fixed at zero, so its increment vanishes

        let delta = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        let mut out = Vec::with_capacity(n);
        out.push(0.0);
        out.extend(delta.iter().zip(&v[1..n - 1]).map(|(d, x)| x + d));
        out.push((1.0 + self.rho) * out[n - 2] - self.rho * out[n - 3]);
        out
    }
}

fn march(market: &MarketParams, segments: &[Segment], cfg: &GridConfig) -> Result<PdeGrid> {
    let s_max = cfg.validate(market)?;
    let nodes = price_nodes(cfg, market.strike(), s_max);
    let n = nodes.len();
    let rho = (nodes[n - 1] - nodes[n - 2]) / (nodes[n - 2] - nodes[n - 3]);
    let marcher = Marcher {
        nodes: &nodes,
        stencil: Stencil::new(&nodes, market.sigma()),
        rho,
    };

    let horizon = market.maturity();
    let plan: Vec<(Segment, usize)> = segments
        .iter()
        .filter(|s| s.end > s.start)
        .map(|s| {
            let steps = ((cfg.n_tau as f64) * (s.end - s.start) / horizon).ceil() as usize;
            (*s, steps.max(1))
        })
        .collect();
    for (seg, steps) in &plan {
        let dt = (seg.end - seg.start) / *steps as f64;
        let ratio = seg.potential.abs() * dt;
        if ratio > STIFFNESS_LIMIT {
            return Err(Error::StiffRegime { ratio });
        }
    }

    let total_steps: usize = plan.iter().map(|(_, k)| k).sum();
    let mut surface = Vec::with_capacity((total_steps + 1) * n);
    let mut tau_nodes = Vec::with_capacity(total_steps + 1);
    let mut v: Vec<f64> = nodes.iter().map(|s| (s - market.strike()).max(0.0)).collect();
    surface.extend_from_slice(&v);
    tau_nodes.push(0.0);

    let startup_steps = cfg.rannacher_steps.div_ceil(2);
    let mut taken = 0usize;
    for (seg, steps) in &plan {
        let dt = (seg.end - seg.start) / *steps as f64;
        let rate = seg.base_rate + seg.potential;
        for k in 1..=*steps {
            if taken < startup_steps {
                let half = 0.5 * dt;
                v = marcher.step(&v, half, 1.0, rate);
                v = marcher.step(&v, half, 1.0, rate);
            } else {
                v = marcher.step(&v, dt, cfg.theta, rate);
            }
            taken += 1;
            surface.extend_from_slice(&v);
            tau_nodes.push(if k == *steps {
                seg.end
            } else {
                seg.start + k as f64 * dt
            });
        }
    }

    Ok(PdeGrid {
        s_nodes: nodes,
        tau_nodes,
        surface,
        theta: cfg.theta,
    })
}

fn window_segments(
    market: &MarketParams,
    bubble: &SquareBubble,
    base_rate: f64,
    outside: f64,
    inside: f64,
) -> [Segment; 3] {
    let seg = |start, end, potential| Segment {
        start,
        end,
        base_rate,
        potential,
    };
    [
        seg(0.0, bubble.tau1(), outside),
        seg(bubble.tau1(), bubble.tau2(), inside),
        seg(bubble.tau2(), market.maturity(), outside),
    ]
}

/// Low-energy form: base rate `r`, potential `v0` inside the window.
pub fn solve(market: &MarketParams, bubble: &SquareBubble, cfg: &GridConfig) -> Result<PdeGrid> {
    let v0 = potential_v0(market, bubble.f0())?;
    let segments = window_segments(market, bubble, market.r(), 0.0, v0);
    march(market, &segments, cfg)
}

/// High-energy form of the same equation: base rate `alpha`, potential
/// `v* = (r - alpha) + v`, i.e. `r - alpha` outside the window and `v0*` inside.
pub fn solve_high_energy(
    market: &MarketParams,
    bubble: &SquareBubble,
    cfg: &GridConfig,
) -> Result<PdeGrid> {
    let v0_star = potential_v0_star(market, bubble.f0())?;
    let outside = market.r() - market.alpha();
    let segments = window_segments(market, bubble, market.alpha(), outside, v0_star);
    march(market, &segments, cfg)
}

/// Free equation at a constant rate.
pub fn solve_free(market: &MarketParams, rate: f64, cfg: &GridConfig) -> Result<PdeGrid> {
    let segments = [Segment {
        start: 0.0,
        end: market.maturity(),
        base_rate: rate,
        potential: 0.0,
    }];
    march(market, &segments, cfg)
}

/// Error estimate of the finer of two second-order solutions with a 2x ratio.
pub fn richardson_error(fine: f64, coarse: f64) -> f64 {
    (fine - coarse) / 3.0
}

/// Oracle value with its own Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub coarse_value: f64,
    pub richardson_error: f64,
}

/// Solves at `cfg` and at half resolution.
pub fn solve_pair(
    market: &MarketParams,
    bubble: &SquareBubble,
    cfg: &GridConfig,
) -> Result<(PdeGrid, PdeGrid)> {
    Ok((solve(market, bubble, cfg)?, solve(market, bubble, &cfg.halved())?))
}

pub fn estimate(fine: &PdeGrid, coarse: &PdeGrid, s: f64, tau: f64) -> Result<OracleEstimate> {
    let value = sample(fine, s, tau)?;
    let coarse_value = sample(coarse, s, tau)?;
    Ok(OracleEstimate {
        value,
        coarse_value,
        richardson_error: richardson_error(value, coarse_value),
    })
}
