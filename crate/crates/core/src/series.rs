//! Greek-series prices under a square bubble.
//!
//! Inside the window the price is `exp(x P) C(S, tau)` with `P = K - I` and the
//! elapsed interaction `x = v0 * clock`. Expanding `exp(xK)` in `S^n D^n` gives
//!
//! ```text
//! price = e^{-x} sum_n Q_n(x) S^n d^nC/dS^n
//! ```
//!
//! After the window the clock stops at `tau2 - tau1` while `C` keeps its
//! current `tau`.

use serde::{Deserialize, Serialize};

use crate::blackscholes::{call_price, greek_vector, max_order};
use crate::error::{Error, Result};
use crate::operators::{q_function, triangle};
use crate::params::{
    check_horizon, classify_regime, potential_from_dual_coupling, potential_v0, MarketParams,
    RateBasis, Regime, SquareBubble,
};

/// Default truncation order of the exact series.
pub const DEFAULT_N_MAX: usize = 12;

/// Which closed-form approximation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// Cubic Taylor expansion of `exp(xP)` acting on `C`.
    PerturbativeOrder3,
    /// `e^{-x} sum_{n <= n_max} Q_n(x) S^n C^(n)`.
    ExactSeries { n_max: usize },
    /// Exact prefactor `e^{-x}`, with `Q_2`, `Q_3` cut at cubic order.
    TruncatedOrder3,
    /// Exact series in the high-energy form (rate `alpha`, potential `v0*`).
    DualExactSeries { n_max: usize },
    /// Truncated series in the high-energy form.
    DualTruncatedOrder3,
}

impl Method {
    pub fn is_dual(&self) -> bool {
        matches!(
            self,
            Method::DualExactSeries { .. } | Method::DualTruncatedOrder3
        )
    }

    /// Command-line name.
    pub fn label(&self) -> &'static str {
        match self {
            Method::PerturbativeOrder3 => "perturb3",
            Method::ExactSeries { .. } => "exact",
            Method::TruncatedOrder3 => "trunc3",
            Method::DualExactSeries { .. } => "dual-exact",
            Method::DualTruncatedOrder3 => "dual-trunc3",
        }
    }

    /// Parse a command-line name; `n_max` applies to the exact variants.
    pub fn from_label(label: &str, n_max: usize) -> Option<Method> {
        Some(match label {
            "perturb3" => Method::PerturbativeOrder3,
            "exact" => Method::ExactSeries { n_max },
            "trunc3" => Method::TruncatedOrder3,
            "dual-exact" => Method::DualExactSeries { n_max },
            "dual-trunc3" => Method::DualTruncatedOrder3,
            _ => return None,
        })
    }

    fn highest_order(&self) -> usize {
        match self {
            Method::ExactSeries { n_max } | Method::DualExactSeries { n_max } => *n_max,
            _ => 3,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::ExactSeries { n_max } | Method::DualExactSeries { n_max } => {
                write!(f, "{}({n_max})", self.label())
            }
            _ => f.write_str(self.label()),
        }
    }
}

/// One order of the series: `weight * S^n d^nC/dS^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub order: usize,
    pub weight: f64,
    /// `S^n d^nC/dS^n`.
    pub greek: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesQuote {
    pub price: f64,
    pub regime: Regime,
    pub terms: Vec<SeriesTerm>,
    pub method: Method,
    pub rate_basis: RateBasis,
    /// Elapsed interaction `x = v0 * clock` (or `v0* * clock`).
    pub interaction: f64,
}

/// Time spent inside the bubble: 0 before it, `tau - tau1` during, `tau2 - tau1` after.
pub fn interaction_clock(tau: f64, market: &MarketParams, bubble: &SquareBubble) -> Result<f64> {
    check_horizon(tau, market)?;
    Ok(match classify_regime(tau, bubble, market)? {
        Regime::PreBubble => 0.0,
        Regime::InBubble => tau - bubble.tau1(),
        Regime::PostBubble => bubble.tau2() - bubble.tau1(),
    })
}

/// Weights of `C, S Delta, S^2 Gamma, S^3 Speed` in the cubic perturbative price.
pub fn perturbative_weights(x: f64) -> [f64; 4] {
    let x2 = x * x / 2.0;
    let x3 = x * x * x / 6.0;
    [1.0 - x + x2 - x3, x - x2 + x3, x2, x3]
}

/// Weights of the truncated series: `Q_2 ~ x^2/2 + a(3,2) x^3/6`, `Q_3 ~ x^3/6`.
pub fn truncated_weights(x: f64) -> [f64; 4] {
    let a32 = triangle(3).expect("row 3 fits").get(3, 2) as f64;
    let decay = (-x).exp();
    let x3 = x * x * x / 6.0;
    [
        decay,
        -(-x).exp_m1(),
        decay * (x * x / 2.0 + a32 * x3),
        decay * x3,
    ]
}

/// Weights `e^{-x} Q_n(x)` for `n = 0..=n_max`, with `n = 1` written as `1 - e^{-x}`.
pub fn exact_weights(x: f64, n_max: usize) -> Result<Vec<f64>> {
    let decay = (-x).exp();
    let mut w = Vec::with_capacity(n_max + 1);
    w.push(decay);
    if n_max >= 1 {
        w.push(-(-x).exp_m1());
    }
    for n in 2..=n_max {
        w.push(decay * q_function(n, x)?);
    }
    Ok(w)
}

fn method_weights(method: Method, x: f64) -> Result<Vec<f64>> {
    Ok(match method {
        Method::PerturbativeOrder3 => perturbative_weights(x).to_vec(),
        Method::TruncatedOrder3 | Method::DualTruncatedOrder3 => truncated_weights(x).to_vec(),
        Method::ExactSeries { n_max } | Method::DualExactSeries { n_max } => {
            exact_weights(x, n_max)?
        }
    })
}

fn assemble(
    s: f64,
    tau: f64,
    market: &MarketParams,
    basis: RateBasis,
    regime: Regime,
    x: f64,
    method: Method,
) -> Result<SeriesQuote> {
    let n_max = method.highest_order();
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be >= 1"));
    }
    let cap = max_order();
    if n_max > cap {
        return Err(Error::OrderTooHigh {
            order: n_max,
            max: cap,
        });
    }
    if x == 0.0 {
        let c = call_price(s, tau, market, basis)?;
        return Ok(SeriesQuote {
            price: c,
            regime,
            terms: vec![SeriesTerm {
                order: 0,
                weight: 1.0,
                greek: c,
                contribution: c,
            }],
            method,
            rate_basis: basis,
            interaction: x,
        });
    }

    let weights = method_weights(method, x)?;
    let greeks = greek_vector(n_max, s, tau, market, basis)?.scaled(s);
    let terms: Vec<SeriesTerm> = weights
        .iter()
        .zip(&greeks)
        .enumerate()
        .map(|(order, (&weight, &greek))| SeriesTerm {
            order,
            weight,
            greek,
            contribution: weight * greek,
        })
        .collect();
    // highest order first: the small tail is added before the large leading terms
    let price = terms.iter().rev().map(|t| t.contribution).sum();
    Ok(SeriesQuote {
        price,
        regime,
        terms,
        method,
        rate_basis: basis,
        interaction: x,
    })
}

/// Low-energy quote for one of the non-dual methods.
fn low_energy(
    s: f64,
    tau: f64,
    market: &MarketParams,
    bubble: &SquareBubble,
    method: Method,
) -> Result<SeriesQuote> {
    let regime = classify_regime(tau, bubble, market)?;
    let v0 = potential_v0(market, bubble.f0())?;
    let x = v0 * interaction_clock(tau, market, bubble)?;
    assemble(s, tau, market, RateBasis::Riskless, regime, x, method)
}

/// Cubic perturbative price in `C, S Delta, S^2 Gamma, S^3 Speed`.
pub fn perturbative_order3(
    s: f64,
    tau: f64,
    market: &MarketParams,
    bubble: &SquareBubble,
) -> Result<SeriesQuote> {
    low_energy(s, tau, market, bubble, Method::PerturbativeOrder3)
}

/// Greek series through order `n_max`.
pub fn exact_series(
    s: f64,
    tau: f64,
    market: &MarketParams,
    bubble: &SquareBubble,
    n_max: usize,
) -> Result<SeriesQuote> {
    low_energy(s, tau, market, bubble, Method::ExactSeries { n_max })
}

/// Series through `S^3` with the exponential prefactor kept to all orders.
pub fn truncated_order3(
    s: f64,
    tau: f64,
    market: &MarketParams,
    bubble: &SquareBubble,
) -> Result<SeriesQuote> {
    low_energy(s, tau, market, bubble, Method::TruncatedOrder3)
}

/// High-energy quote: starred Greeks at rate `alpha` and potential `v0*` from
/// the coupling `h* = sigma / f0`.
///
/// `method` selects the series shape; the low-energy variants map onto their
/// dual counterparts.
pub fn dual_quote(
    s: f64,
    tau: f64,
    market: &MarketParams,
    bubble: &SquareBubble,
    method: Method,
) -> Result<SeriesQuote> {
    if bubble.f0() == 0.0 {
        return Err(Error::ZeroBubble);
    }
    dual_quote_with_coupling(s, tau, market, bubble, market.sigma() / bubble.f0(), method)
}

/// [`dual_quote`] with the dual coupling given directly; `h_star = 0` is the
/// infinite bubble. Only the window of `bubble` is used.
pub fn dual_quote_with_coupling(
    s: f64,
    tau: f64,
    market: &MarketParams,
    bubble: &SquareBubble,
    h_star: f64,
    method: Method,
) -> Result<SeriesQuote> {
    let method = match method {
        Method::ExactSeries { n_max } => Method::DualExactSeries { n_max },
        Method::TruncatedOrder3 => Method::DualTruncatedOrder3,
        Method::PerturbativeOrder3 => {
            return Err(Error::invalid(
                "method",
                "the perturbative cubic has no high-energy form",
            ))
        }
        m => m,
    };
    let regime = classify_regime(tau, bubble, market)?;
    let v0_star = potential_from_dual_coupling(market, h_star)?;
    let x = v0_star * interaction_clock(tau, market, bubble)?;
    assemble(s, tau, market, RateBasis::Drift, regime, x, method)
}

/// Dispatch on `method`.
pub fn quote(
    s: f64,
    tau: f64,
    market: &MarketParams,
    bubble: &SquareBubble,
    method: Method,
) -> Result<SeriesQuote> {
    if method.is_dual() {
        dual_quote(s, tau, market, bubble, method)
    } else {
        low_energy(s, tau, market, bubble, method)
    }
}
