//! Resolved run configuration, serializable so a run can be saved and replayed.

use std::path::PathBuf;

use bubble_bs::harness::{SurfaceSpec, FIGURE_H_VALUES};
use bubble_bs::pde::GridConfig;
use bubble_bs::{MarketParams, Method, SquareBubble};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Couplings within this distance of 1 sit next to the pole of the potential
/// and are refused unless explicitly allowed.
pub const NEAR_POLE_BAND: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    /// File (or, for surfaces, directory) to write; stdout when unset.
    pub path: Option<PathBuf>,
    /// Unset selects the command's default: a text table for `price`, CSV otherwise.
    pub format: Option<Format>,
}

/// A single `(S, tau)` evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotePoint {
    pub s: f64,
    pub tau: f64,
}

/// Couplings to sweep and the lattice each panel is priced on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// `h = f0 / sigma` for the low-energy methods, `h* = sigma / f0` for the dual ones.
    pub h_values: Vec<f64>,
    pub surface: SurfaceSpec,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            h_values: FIGURE_H_VALUES.to_vec(),
            surface: SurfaceSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub market: MarketParams,
    pub bubble: SquareBubble,
    pub method: Method,
    pub grid: Option<GridConfig>,
    pub output: OutputSpec,
    pub sweep: Option<SweepSpec>,
    pub point: Option<QuotePoint>,
    #[serde(default)]
    pub allow_near_pole: bool,
}

fn near_pole(field: &'static str, h: f64, market: &MarketParams, allow: bool) -> Result<(), CliError> {
    if allow || (h - 1.0).abs() > NEAR_POLE_BAND {
        return Ok(());
    }
    Err(CliError::Validation(format!(
        "invalid `{field}`: SingularBubble: coupling {h} is within {NEAR_POLE_BAND} of the pole \
         f0 = sigma = {} (pass --allow-near-pole to evaluate anyway)",
        market.sigma()
    )))
}

impl RunConfig {
    /// Re-checks everything deserialization alone cannot: the bubble window
    /// against the maturity, the quote point, and the pole band.
    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.market;
        SquareBubble::new(self.bubble.f0(), self.bubble.tau1(), self.bubble.tau2(), m)?;
        let field = if self.method.is_dual() { "h*" } else { "h" };
        if self.sweep.is_none() {
            near_pole("f0", self.bubble.ratio(m), m, self.allow_near_pole)?;
        }
        if let Some(p) = &self.point {
            if !(p.s.is_finite() && p.s > 0.0) {
                return Err(CliError::Validation(format!("invalid `s` = {}: must be > 0", p.s)));
            }
            if !(p.tau.is_finite() && (0.0..=m.maturity()).contains(&p.tau)) {
                return Err(CliError::Validation(format!(
                    "invalid `tau` = {}: must lie in [0, {}]",
                    p.tau,
                    m.maturity()
                )));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.h_values.is_empty() {
                return Err(CliError::Validation("invalid `h-list`: empty".into()));
            }
            for &h in &sw.h_values {
                if !(h.is_finite() && h >= 0.0) {
                    return Err(CliError::Validation(format!(
                        "invalid `{field}` = {h}: must be finite and >= 0"
                    )));
                }
                near_pole(field, h, m, self.allow_near_pole)?;
            }
            let s = &sw.surface;
            if s.n_s == 0 || s.n_tau == 0 || !(s.s_max.is_finite() && s.s_max > 0.0) {
                return Err(CliError::Validation(
                    "invalid `grid`: needs at least 1x1 points and s-max > 0".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("invalid config: {e}")))?;
        Ok(cfg)
    }
}

/// Parse `NSxNT`, e.g. `400x400`.
pub fn parse_grid(text: &str) -> Result<(usize, usize), String> {
    let (a, b) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NSxNT, got `{text}`"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("expected NSxNT with positive integers, got `{text}`"))
    };
    let (ns, nt) = (parse(a)?, parse(b)?);
    if ns == 0 || nt == 0 {
        return Err(format!("grid dimensions must be positive, got `{text}`"));
    }
    Ok((ns, nt))
}

/// Parse a method name; `dual-truncated` is accepted for `dual-trunc3`.
pub fn parse_method(label: &str, n_max: usize) -> Result<Method, CliError> {
    let label = if label == "dual-truncated" { "dual-trunc3" } else { label };
    Method::from_label(label, n_max).ok_or_else(|| {
        CliError::Validation(format!(
            "invalid `method` = {label}: expected perturb3, exact, trunc3, dual-exact or dual-trunc3"
        ))
    })
}
