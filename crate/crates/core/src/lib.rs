//! European call pricing under the Black-Scholes equation perturbed by a
//! time-dependent square arbitrage bubble.
//!
//! The bubble enters the pricing equation through the potential
//! `v = (r - alpha) f / (sigma - f)` multiplying `S d/dS - 1`. Because that
//! operator commutes with the free Black-Scholes generator, the in-bubble price
//! is a resummed series in the S-derivatives of the plain call:
//!
//! - [`params`]: market data, the square bubble, regimes, potentials and the
//!   `r <-> alpha`, `h <-> 1/h` duality.
//! - [`blackscholes`]: the closed-form call and its S-derivatives to any order.
//! - [`operators`]: the coefficient triangle of `(S d/dS)^n` and the weights `Q_n`.
//! - [`series`]: perturbative, exact and truncated Greek series and their dual forms.
//! - [`pde`]: an independent Crank-Nicolson solver of the same equation.
//! - [`harness`]: surface sweeps and series-versus-oracle error reports.

pub mod blackscholes;
pub mod error;
pub mod harness;
pub mod operators;
pub mod params;
pub mod pde;
pub mod series;
pub mod sweep;

pub use error::{Error, Result};
pub use params::{MarketParams, PotentialValue, RateBasis, Regime, SquareBubble};
pub use series::{Method, SeriesQuote, SeriesTerm};
