//! Market environment, the square bubble, regime classification and the
//! potential levels shared by every pricer.
//!
//! All times are time-to-maturity `tau = T - t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative width of the guard band around the pole `f0 = sigma`.
pub const POLE_GUARD: f64 = 1e-9;

/// Which rate parameterizes a closed-form Black-Scholes evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateBasis {
    /// The risk-free rate `r` (low-energy form).
    Riskless,
    /// The drift `alpha` of the underlying (high-energy form).
    Drift,
}

/// The fixed economic environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMarketParams", into = "RawMarketParams")]
pub struct MarketParams {
    r: f64,
    alpha: f64,
    sigma: f64,
    strike: f64,
    maturity: f64,
}

#[derive(Serialize, Deserialize)]
struct RawMarketParams {
    r: f64,
    alpha: f64,
    sigma: f64,
    strike: f64,
    maturity: f64,
}

impl TryFrom<RawMarketParams> for MarketParams {
    type Error = Error;

    fn try_from(raw: RawMarketParams) -> Result<Self> {
        MarketParams::new(raw.r, raw.alpha, raw.sigma, raw.strike, raw.maturity)
    }
}

impl From<MarketParams> for RawMarketParams {
    fn from(mp: MarketParams) -> Self {
        RawMarketParams {
            r: mp.r,
            alpha: mp.alpha,
            sigma: mp.sigma,
            strike: mp.strike,
            maturity: mp.maturity,
        }
    }
}

impl MarketParams {
    pub fn new(r: f64, alpha: f64, sigma: f64, strike: f64, maturity: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::invalid("r", "must be finite"));
        }
        if !alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma", "must be finite and > 0"));
        }
        if !(strike.is_finite() && strike > 0.0) {
            return Err(Error::invalid("strike", "must be finite and > 0"));
        }
        if !(maturity.is_finite() && maturity > 0.0) {
            return Err(Error::invalid("maturity", "must be finite and > 0"));
        }
        Ok(MarketParams {
            r,
            alpha,
            sigma,
            strike,
            maturity,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn strike(&self) -> f64 {
        self.strike
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn rate(&self, basis: RateBasis) -> f64 {
        match basis {
            RateBasis::Riskless => self.r,
            RateBasis::Drift => self.alpha,
        }
    }

    /// Same environment with a different risk-free rate.
    pub fn with_rate(&self, r: f64) -> Result<Self> {
        MarketParams::new(r, self.alpha, self.sigma, self.strike, self.maturity)
    }

    /// Swap `r` and `alpha`.
    pub fn swapped(&self) -> Self {
        MarketParams {
            r: self.alpha,
            alpha: self.r,
            ..*self
        }
    }
}

/// Piecewise-constant bubble: `f0` on `[tau1, tau2)`, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareBubble {
    f0: f64,
    tau1: f64,
    tau2: f64,
}

impl SquareBubble {
    /// Validates `0 <= tau1 <= tau2 <= T` and a finite, non-negative amplitude.
    ///
    /// The pole `f0 = sigma` is not rejected here; it surfaces as
    /// [`Error::SingularBubble`] when a potential is evaluated.
    pub fn new(f0: f64, tau1: f64, tau2: f64, market: &MarketParams) -> Result<Self> {
        if !(f0.is_finite() && f0 >= 0.0) {
            return Err(Error::invalid("f0", "must be finite and >= 0"));
        }
        if !(tau1.is_finite() && tau1 >= 0.0) {
            return Err(Error::invalid("tau1", "must be finite and >= 0"));
        }
        if !(tau2.is_finite() && tau2 >= tau1) {
            return Err(Error::invalid("tau2", "must be finite and >= tau1"));
        }
        if tau2 > market.maturity() {
            return Err(Error::invalid("tau2", "must not exceed the maturity"));
        }
        Ok(SquareBubble { f0, tau1, tau2 })
    }

    /// Bubble given as a fraction `h = f0 / sigma` of the volatility.
    pub fn from_ratio(h: f64, tau1: f64, tau2: f64, market: &MarketParams) -> Result<Self> {
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::invalid("h", "must be finite and >= 0"));
        }
        SquareBubble::new(h * market.sigma(), tau1, tau2, market)
    }

    /// The bubble active over the whole horizon `[0, T]`.
    pub fn spanning(f0: f64, market: &MarketParams) -> Result<Self> {
        SquareBubble::new(f0, 0.0, market.maturity(), market)
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn ratio(&self, market: &MarketParams) -> f64 {
        self.f0 / market.sigma()
    }

    /// Bubble amplitude at a given time to maturity.
    pub fn amplitude_at(&self, tau: f64) -> f64 {
        if tau >= self.tau1 && tau < self.tau2 {
            self.f0
        } else {
            0.0
        }
    }
}

/// Position of a time to maturity relative to the bubble window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    PreBubble,
    InBubble,
    PostBubble,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::PreBubble => "pre_bubble",
            Regime::InBubble => "in_bubble",
            Regime::PostBubble => "post_bubble",
        })
    }
}

/// Windows are left-closed: `tau1` is in the bubble, `tau2` is after it.
pub fn classify_regime(tau: f64, bubble: &SquareBubble, market: &MarketParams) -> Result<Regime> {
    check_horizon(tau, market)?;
    Ok(if tau < bubble.tau1 {
        Regime::PreBubble
    } else if tau < bubble.tau2 {
        Regime::InBubble
    } else {
        Regime::PostBubble
    })
}

pub(crate) fn check_horizon(tau: f64, market: &MarketParams) -> Result<()> {
    if !(tau >= 0.0 && tau <= market.maturity()) {
        return Err(Error::OutOfHorizon {
            tau,
            maturity: market.maturity(),
        });
    }
    Ok(())
}

fn check_pole(market: &MarketParams, f0: f64) -> Result<()> {
    let sigma = market.sigma();
    if (f0 - sigma).abs() < POLE_GUARD * sigma {
        return Err(Error::SingularBubble { f0, sigma });
    }
    Ok(())
}

/// Low-energy potential level `(r - alpha) f0 / (sigma - f0)`.
pub fn potential_v0(market: &MarketParams, f0: f64) -> Result<f64> {
    check_pole(market, f0)?;
    if f0 == 0.0 {
        return Ok(0.0);
    }
    Ok((market.r() - market.alpha()) * f0 / (market.sigma() - f0))
}

/// High-energy potential level `(r - alpha) sigma / (sigma - f0)`.
pub fn potential_v0_star(market: &MarketParams, f0: f64) -> Result<f64> {
    check_pole(market, f0)?;
    Ok((market.r() - market.alpha()) * market.sigma() / (market.sigma() - f0))
}

/// High-energy potential written through the dual coupling `h* = sigma / f0`:
/// `(alpha - r) h* / (1 - h*)`. Finite at `h* = 0` (infinite bubble).
pub fn potential_from_dual_coupling(market: &MarketParams, h_star: f64) -> Result<f64> {
    if !(h_star.is_finite() && h_star >= 0.0) {
        return Err(Error::invalid("h_star", "must be finite and >= 0"));
    }
    if (h_star - 1.0).abs() < POLE_GUARD {
        return Err(Error::SingularBubble {
            f0: market.sigma() / h_star,
            sigma: market.sigma(),
        });
    }
    if h_star == 0.0 {
        return Ok(0.0);
    }
    Ok((market.alpha() - market.r()) * h_star / (1.0 - h_star))
}

/// Potential levels of both parametrizations for one bubble amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialValue {
    pub v0: f64,
    pub v0_star: f64,
    /// `f0 / sigma`.
    pub h: f64,
    /// `1 / h`; infinite for a zero bubble.
    pub h_star: f64,
}

impl PotentialValue {
    pub fn evaluate(market: &MarketParams, f0: f64) -> Result<Self> {
        let h = f0 / market.sigma();
        Ok(PotentialValue {
            v0: potential_v0(market, f0)?,
            v0_star: potential_v0_star(market, f0)?,
            h,
            h_star: market.sigma() / f0,
        })
    }

    /// The in-bubble dressed rate `r + v0`.
    pub fn dressed_rate(&self, market: &MarketParams) -> f64 {
        market.r() + self.v0
    }
}

/// The discrete transform `r <-> alpha`, `h <-> 1/h`.
///
/// Returns the swapped market and the dual coupling `h* = sigma / f0`.
pub fn dual_params(market: &MarketParams, bubble: &SquareBubble) -> Result<(MarketParams, f64)> {
    if bubble.f0 == 0.0 {
        return Err(Error::ZeroBubble);
    }
    Ok((market.swapped(), market.sigma() / bubble.f0))
}
