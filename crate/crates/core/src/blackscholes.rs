//! Closed-form European call and its S-derivatives to arbitrary order.
//!
//! For `n >= 2` every derivative shares the Gamma kernel:
//!
//! ```text
//! d^n C / dS^n = phi(d1) * P_n(d1) / (S s)^(n-1),    s = sigma sqrt(tau)
//! P_2 = 1,   P_{n+1}(d) = P_n'(d) - (d + (n-1) s) P_n(d)
//! ```
//!
//! which follows from `d(d1)/dS = 1 / (S s)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{MarketParams, RateBasis};

/// Derivative order cap when `BUBBLE_BS_MAX_ORDER` is unset.
pub const DEFAULT_MAX_ORDER: usize = 16;
/// Largest accepted override; the Gamma polynomials lose digits past this.
pub const HARD_MAX_ORDER: usize = 40;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Derivative order cap, overridable once per process through `BUBBLE_BS_MAX_ORDER`.
pub fn max_order() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("BUBBLE_BS_MAX_ORDER")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .map(|n| n.clamp(3, HARD_MAX_ORDER))
            .unwrap_or(DEFAULT_MAX_ORDER)
    })
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `d^k C / dS^k` for `k = 0..=order` at one `(S, tau)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreekVector {
    pub order: usize,
    pub values: Vec<f64>,
    pub rate_used: RateBasis,
}

impl GreekVector {
    pub fn price(&self) -> f64 {
        self.values[0]
    }

    /// `S^k d^k C / dS^k`, the form the Euler-operator series consumes.
    pub fn scaled(&self, s: f64) -> Vec<f64> {
        let mut pow = 1.0;
        self.values
            .iter()
            .map(|v| {
                let out = v * pow;
                pow *= s;
                out
            })
            .collect()
    }
}

fn check_spot(s: f64) -> Result<()> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!("spot must be finite and > 0, got {s}")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Domain(format!("tau must be finite and >= 0, got {tau}")));
    }
    Ok(())
}

struct Kernel {
    d1: f64,
    d2: f64,
    vol: f64,
    discount: f64,
}

fn kernel(s: f64, tau: f64, market: &MarketParams, rate: f64) -> Kernel {
    let vol = market.sigma() * tau.sqrt();
    let d1 = ((s / market.strike()).ln() + (rate + 0.5 * market.sigma().powi(2)) * tau) / vol;
    Kernel {
        d1,
        d2: d1 - vol,
        vol,
        discount: (-rate * tau).exp(),
    }
}

/// Black-Scholes call with the selected rate; the payoff at `tau = 0`.
pub fn call_price(s: f64, tau: f64, market: &MarketParams, basis: RateBasis) -> Result<f64> {
    check_spot(s)?;
    check_tau(tau)?;
    if tau == 0.0 {
        return Ok((s - market.strike()).max(0.0));
    }
    let k = kernel(s, tau, market, market.rate(basis));
    Ok(s * norm_cdf(k.d1) - market.strike() * k.discount * norm_cdf(k.d2))
}

/// Black-Scholes call at an arbitrary rate.
pub fn call_price_at_rate(s: f64, tau: f64, market: &MarketParams, rate: f64) -> Result<f64> {
    let m = market.with_rate(rate)?;
    call_price(s, tau, &m, RateBasis::Riskless)
}

/// Coefficients (in powers of `d1`) of the Gamma polynomials `P_2 ..= P_order`.
fn gamma_polynomials(order: usize, vol: f64) -> Vec<Vec<f64>> {
    let mut polys: Vec<Vec<f64>> = Vec::with_capacity(order.saturating_sub(1));
    if order < 2 {
        return polys;
    }
    polys.push(vec![1.0]);
    for n in 2..order {
        let p = &polys[n - 2];
        let shift = (n - 1) as f64 * vol;
        let mut next = vec![0.0; p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            if i > 0 {
                next[i - 1] += i as f64 * c;
            }
            next[i + 1] -= c;
            next[i] -= shift * c;
        }
        polys.push(next);
    }
    polys
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Price and S-derivatives up to `n_max`, sharing one `d1`/`d2` evaluation.
///
/// `tau > 0` is required whenever `n_max >= 1`: at expiry the derivatives are
/// distributional.
pub fn greek_vector(
    n_max: usize,
    s: f64,
    tau: f64,
    market: &MarketParams,
    basis: RateBasis,
) -> Result<GreekVector> {
    check_spot(s)?;
    check_tau(tau)?;
    let cap = max_order();
    if n_max > cap {
        return Err(Error::OrderTooHigh {
            order: n_max,
            max: cap,
        });
    }
    if n_max == 0 {
        return Ok(GreekVector {
            order: 0,
            values: vec![call_price(s, tau, market, basis)?],
            rate_used: basis,
        });
    }
    if tau == 0.0 {
        return Err(Error::Domain(
            "S-derivatives of order >= 1 need tau > 0".into(),
        ));
    }

    let k = kernel(s, tau, market, market.rate(basis));
    let mut values = Vec::with_capacity(n_max + 1);
    values.push(s * norm_cdf(k.d1) - market.strike() * k.discount * norm_cdf(k.d2));
    values.push(norm_cdf(k.d1));
    if n_max >= 2 {
        let density = norm_pdf(k.d1);
        let unit = s * k.vol;
        let mut denom = unit;
        for p in gamma_polynomials(n_max, k.vol) {
            values.push(density * horner(&p, k.d1) / denom);
            denom *= unit;
        }
    }
    Ok(GreekVector {
        order: n_max,
        values,
        rate_used: basis,
    })
}

/// One S-derivative: price, Delta, Gamma, Speed, ...
pub fn call_s_derivative(
    n: usize,
    s: f64,
    tau: f64,
    market: &MarketParams,
    basis: RateBasis,
) -> Result<f64> {
    Ok(greek_vector(n, s, tau, market, basis)?.values[n])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> MarketParams {
        MarketParams::new(0.05, 0.05, 0.2, 100.0, 1.0).unwrap()
    }

    #[test]
    fn expiry_is_payoff() {
        let mp = desk();
        assert_eq!(call_price(100.0, 0.0, &mp, RateBasis::Riskless).unwrap(), 0.0);
        assert_eq!(call_price(130.0, 0.0, &mp, RateBasis::Riskless).unwrap(), 30.0);
    }

    #[test]
    fn textbook_value() {
        // oracle: mpmath ncdf at 40 digits, S = K = 100, r = 0.05, sigma = 0.2, tau = 1
        let c = call_price(100.0, 1.0, &desk(), RateBasis::Riskless).unwrap();
        assert!((c - 10.450_583_572_185_565).abs() < 1e-12, "{c}");
    }

    #[test]
    fn textbook_gamma() {
        // oracle: Richardson-extrapolated central differences of the price (see tests/greeks.rs)
        let g = call_s_derivative(2, 100.0, 1.0, &desk(), RateBasis::Riskless).unwrap();
        assert!((g - 0.018_762_017_345_846_9).abs() < 1e-12, "{g}");
    }

    #[test]
    fn deep_itm_asymptotes() {
        let mp = desk();
        let s = 1e4;
        let c = call_price(s, 1.0, &mp, RateBasis::Riskless).unwrap();
        let forward_intrinsic = s - 100.0 * (-0.05f64).exp();
        assert!((c - forward_intrinsic).abs() < 1e-9);
        let delta = call_s_derivative(1, s, 1.0, &mp, RateBasis::Riskless).unwrap();
        assert!((delta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn speed_closed_form() {
        // Speed = -Gamma / S * (d1 / (sigma sqrt tau) + 1)
        let mp = desk();
        let (s, tau) = (93.0, 0.7);
        let g = greek_vector(3, s, tau, &mp, RateBasis::Riskless).unwrap();
        let vol = 0.2 * tau.sqrt();
        let d1 = ((s / 100.0f64).ln() + (0.05 + 0.02) * tau) / vol;
        let expected = -g.values[2] / s * (d1 / vol + 1.0);
        assert!((g.values[3] - expected).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let mp = desk();
        assert!(matches!(
            call_price(0.0, 1.0, &mp, RateBasis::Riskless),
            Err(Error::Domain(_))
        ));
        assert!(call_price(100.0, -1.0, &mp, RateBasis::Riskless).is_err());
        assert!(call_s_derivative(1, 100.0, 0.0, &mp, RateBasis::Riskless).is_err());
        assert!(matches!(
            call_s_derivative(max_order() + 1, 100.0, 1.0, &mp, RateBasis::Riskless),
            Err(Error::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn batched_matches_individual() {
        let mp = desk();
        assert_eq!(
            greek_vector(0, 120.0, 0.5, &mp, RateBasis::Riskless)
                .unwrap()
                .values
                .len(),
            1
        );
        let g = greek_vector(3, 120.0, 0.5, &mp, RateBasis::Riskless).unwrap();
        for n in 0..=3 {
            let single = call_s_derivative(n, 120.0, 0.5, &mp, RateBasis::Riskless).unwrap();
            assert_eq!(single.to_bits(), g.values[n].to_bits());
        }
    }

    #[test]
    fn cdf_tails() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(-10.0) - 7.619_853_024_160_527e-24).abs() < 1e-37);
        assert!((norm_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
    }
}
