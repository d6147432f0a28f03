//! Surface sweeps and the series-versus-oracle comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{MarketParams, SquareBubble};
use crate::pde::{estimate, solve_pair, GridConfig, PdeGrid};
use crate::series::{dual_quote_with_coupling, quote, Method};
use crate::sweep::{map_collect, map_sequential};

/// The h = f0 / sigma values of the published surface panels.
pub const FIGURE_H_VALUES: [f64; 12] = [
    0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 0.9, 0.95, 1.10, 1.20, 1.40, 1.80,
];

/// Evaluation lattice for a price surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub s_max: f64,
    /// Price points `s_max * i / n_s` for `i = 1..=n_s`.
    pub n_s: usize,
    /// Time points `T * j / n_tau` for `j = 0..=n_tau`.
    pub n_tau: usize,
}

impl Default for SurfaceSpec {
    fn default() -> Self {
        SurfaceSpec {
            s_max: 300.0,
            n_s: 60,
            n_tau: 40,
        }
    }
}

impl SurfaceSpec {
    pub fn s_points(&self) -> Vec<f64> {
        (1..=self.n_s)
            .map(|i| self.s_max * i as f64 / self.n_s as f64)
            .collect()
    }

    pub fn tau_points(&self, maturity: f64) -> Vec<f64> {
        (0..=self.n_tau)
            .map(|j| {
                if j == self.n_tau {
                    maturity
                } else {
                    maturity * j as f64 / self.n_tau as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub s: f64,
    pub tau: f64,
    pub price: f64,
}

/// Price one panel over `spec`, rows ordered by `tau` then `S`.
///
/// `coupling` is `h = f0 / sigma` for the low-energy methods and the dual
/// coupling `h*` for the dual ones (so `h* = 0` is the infinite bubble).
pub fn price_surface(
    market: &MarketParams,
    tau1: f64,
    tau2: f64,
    coupling: f64,
    method: Method,
    spec: &SurfaceSpec,
) -> Result<Vec<SurfacePoint>> {
    if spec.n_s == 0 || spec.n_tau == 0 || !(spec.s_max > 0.0) {
        return Err(Error::invalid("surface", "needs n_s, n_tau >= 1 and s_max > 0"));
    }
    let bubble = if method.is_dual() {
        SquareBubble::new(0.0, tau1, tau2, market)?
    } else {
        SquareBubble::from_ratio(coupling, tau1, tau2, market)?
    };
    let s_points = spec.s_points();
    let points: Vec<(f64, f64)> = spec
        .tau_points(market.maturity())
        .into_iter()
        .flat_map(|tau| s_points.iter().map(move |&s| (s, tau)))
        .collect();
    let priced = map_collect(&points, |&(s, tau)| {
        let q = if method.is_dual() {
            dual_quote_with_coupling(s, tau, market, &bubble, coupling, method)?
        } else {
            quote(s, tau, market, &bubble, method)?
        };
        Ok(SurfacePoint {
            s,
            tau,
            price: q.price,
        })
    });
    priced.into_iter().collect()
}

/// Sequential twin of [`price_surface`] for benchmarking the parallel path.
pub fn price_surface_sequential(
    market: &MarketParams,
    bubble: &SquareBubble,
    method: Method,
    spec: &SurfaceSpec,
) -> Result<Vec<SurfacePoint>> {
    let s_points = spec.s_points();
    let points: Vec<(f64, f64)> = spec
        .tau_points(market.maturity())
        .into_iter()
        .flat_map(|tau| s_points.iter().map(move |&s| (s, tau)))
        .collect();
    map_sequential(&points, |&(s, tau)| {
        Ok(SurfacePoint {
            s,
            tau,
            price: quote(s, tau, market, bubble, method)?.price,
        })
    })
    .into_iter()
    .collect()
}

/// Configuration of a series-versus-oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSpec {
    pub methods: Vec<Method>,
    pub h_values: Vec<f64>,
    pub tau1: f64,
    pub tau2: f64,
    pub grid: GridConfig,
    /// Price window `[lo, hi]` for the max-abs error.
    pub s_window: (f64, f64),
    /// Time of the at-the-money comparison.
    pub atm_tau: f64,
    /// Upper bound on sampled nodes per axis inside the window.
    pub max_points_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Stiff,
    Singular,
    Failed(String),
}

impl std::fmt::Display for RowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowStatus::Ok => f.write_str("ok"),
            RowStatus::Stiff => f.write_str("stiff"),
            RowStatus::Singular => f.write_str("singular"),
            RowStatus::Failed(msg) => write!(f, "failed: {msg}"),
        }
    }
}

impl From<&Error> for RowStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::StiffRegime { .. } => RowStatus::Stiff,
            Error::SingularBubble { .. } => RowStatus::Singular,
            other => RowStatus::Failed(other.to_string()),
        }
    }
}

/// One `(h, method)` line of the error report. Errors are `NaN` unless `status` is ok.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub h: f64,
    pub method: Method,
    pub max_abs_error: f64,
    pub atm_rel_error: f64,
    pub atm_series: f64,
    pub atm_oracle: f64,
    /// `|Richardson estimate| / |oracle|` at the money.
    pub oracle_rel_error: f64,
    pub status: RowStatus,
}

impl CompareRow {
    fn failed(h: f64, method: Method, status: RowStatus) -> Self {
        CompareRow {
            h,
            method,
            max_abs_error: f64::NAN,
            atm_rel_error: f64::NAN,
            atm_series: f64::NAN,
            atm_oracle: f64::NAN,
            oracle_rel_error: f64::NAN,
            status,
        }
    }
}

fn strided(indices: Vec<usize>, max: usize) -> Vec<usize> {
    let stride = indices.len().div_ceil(max.max(1)).max(1);
    indices.into_iter().step_by(stride).collect()
}

fn compare_method(
    h: f64,
    market: &MarketParams,
    bubble: &SquareBubble,
    method: Method,
    fine: &PdeGrid,
    spec: &CompareSpec,
    atm_oracle: f64,
    oracle_rel_error: f64,
) -> Result<CompareRow> {
    let (lo, hi) = spec.s_window;
    let s_idx = strided(
        (0..fine.s_nodes().len())
            .filter(|&i| fine.s_nodes()[i] >= lo && fine.s_nodes()[i] <= hi && fine.s_nodes()[i] > 0.0)
            .collect(),
        spec.max_points_per_axis,
    );
    let t_idx = strided((1..fine.tau_nodes().len()).collect(), spec.max_points_per_axis);
    let mut max_abs: f64 = 0.0;
    for &k in &t_idx {
        for &i in &s_idx {
            let (s, tau) = (fine.s_nodes()[i], fine.tau_nodes()[k]);
            let q = quote(s, tau, market, bubble, method)?;
            max_abs = max_abs.max((q.price - fine.value(k, i)).abs());
        }
    }
    let atm = quote(market.strike(), spec.atm_tau, market, bubble, method)?.price;
    Ok(CompareRow {
        h,
        method,
        max_abs_error: max_abs,
        atm_rel_error: ((atm - atm_oracle) / atm_oracle).abs(),
        atm_series: atm,
        atm_oracle,
        oracle_rel_error,
        status: RowStatus::Ok,
    })
}

fn compare_one_h(market: &MarketParams, h: f64, spec: &CompareSpec) -> Vec<CompareRow> {
    let fail_all = |e: &Error| {
        spec.methods
            .iter()
            .map(|&m| CompareRow::failed(h, m, RowStatus::from(e)))
            .collect::<Vec<_>>()
    };
    let bubble = match SquareBubble::from_ratio(h, spec.tau1, spec.tau2, market) {
        Ok(b) => b,
        Err(e) => return fail_all(&e),
    };
    let (fine, coarse) = match solve_pair(market, &bubble, &spec.grid) {
        Ok(pair) => pair,
        Err(e) => return fail_all(&e),
    };
    let est = match estimate(&fine, &coarse, market.strike(), spec.atm_tau) {
        Ok(est) => est,
        Err(e) => return fail_all(&e),
    };
    let oracle_rel = (est.richardson_error / est.value).abs();
    spec.methods
        .iter()
        .map(|&m| {
            compare_method(h, market, &bubble, m, &fine, spec, est.value, oracle_rel)
                .unwrap_or_else(|e| CompareRow::failed(h, m, RowStatus::from(&e)))
        })
        .collect()
}

/// Error report of every method against the oracle for every `h`.
///
/// A failing `h` (stiff, singular, ...) yields rows with a non-ok status and
/// does not abort the sweep. Rows are ordered by `h`, then by method.
pub fn compare(market: &MarketParams, spec: &CompareSpec) -> Vec<CompareRow> {
    map_collect(&spec.h_values, |&h| compare_one_h(market, h, spec))
        .into_iter()
        .flatten()
        .collect()
}

/// Oracle and series price at one point, with the oracle's Richardson estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub series: f64,
    pub oracle: f64,
    pub richardson_error: f64,
    pub rel_gap: f64,
}

pub fn oracle_check(
    s: f64,
    tau: f64,
    market: &MarketParams,
    bubble: &SquareBubble,
    method: Method,
    grid: &GridConfig,
) -> Result<OracleCheck> {
    let series = quote(s, tau, market, bubble, method)?.price;
    let (fine, coarse) = solve_pair(market, bubble, grid)?;
    let est = estimate(&fine, &coarse, s, tau)?;
    Ok(OracleCheck {
        series,
        oracle: est.value,
        richardson_error: est.richardson_error,
        rel_gap: ((series - est.value) / est.value).abs(),
    })
}
