//! Powers of the Euler operator `K = S d/dS` and the weights of its exponential.
//!
//! `K^n = sum_{m=1}^{n} a(n, m) S^m D^m` with `a(n, 1) = a(n, n) = 1` and
//! `a(n, m) = m a(n-1, m) + a(n-1, m-1)`. Resumming `exp(xK)` by powers of
//! `S^m D^m` gives the weights `Q_m(x) = sum_{n>=m} a(n, m) x^n / n!`.
//!
//! The triangle obeys the Stirling-second-kind recursion, so
//! `Q_m(x) = (e^x - 1)^m / m!`; [`QFunctionSet`] evaluates that closed form and
//! can also sum the defining series for cross-checking.

use crate::error::{Error, Result};

/// Rows with every entry below `i128::MAX`.
pub const MAX_EXACT_ROW: usize = 43;

/// Exact integer coefficients of `K^n` in the basis `S^m D^m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffTriangle {
    rows: Vec<Vec<i128>>,
}

impl CoeffTriangle {
    /// Rows `1..=n_max`, or [`Error::Overflow`] at the first row that no longer fits.
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::invalid("n_max", "must be >= 1"));
        }
        let mut rows: Vec<Vec<i128>> = Vec::with_capacity(n_max);
        rows.push(vec![1]);
        for n in 2..=n_max {
            let prev = &rows[n - 2];
            let mut row = Vec::with_capacity(n);
            for m in 1..=n {
                let keep = if m <= prev.len() {
                    (m as i128)
                        .checked_mul(prev[m - 1])
                        .ok_or(Error::Overflow { row: n })?
                } else {
                    0
                };
                let lower = if m >= 2 { prev[m - 2] } else { 0 };
                row.push(keep.checked_add(lower).ok_or(Error::Overflow { row: n })?);
            }
            rows.push(row);
        }
        Ok(CoeffTriangle { rows })
    }

    pub fn n_max(&self) -> usize {
        self.rows.len()
    }

    /// Row `n` as `[a(n,1), ..., a(n,n)]`.
    pub fn row(&self, n: usize) -> Option<&[i128]> {
        n.checked_sub(1)
            .and_then(|i| self.rows.get(i))
            .map(Vec::as_slice)
    }

    /// `a(n, m)`; zero outside `1 <= m <= n`.
    pub fn get(&self, n: usize, m: usize) -> i128 {
        if m == 0 || m > n {
            return 0;
        }
        self.row(n).map_or(0, |r| r[m - 1])
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i128]> {
        self.rows.iter().map(Vec::as_slice)
    }
}

/// Shorthand for [`CoeffTriangle::new`].
pub fn triangle(n_max: usize) -> Result<CoeffTriangle> {
    CoeffTriangle::new(n_max)
}

/// Default `|x|` bound for [`q_function`].
pub const DEFAULT_Q_RANGE: f64 = 30.0;

/// Evaluator for the resummation weights `Q_j(x)`.
#[derive(Debug, Clone)]
pub struct QFunctionSet {
    pub n_max: usize,
    /// Terms kept when summing the defining series.
    pub series_cutoff: usize,
    pub x_range: f64,
    // float copy of the triangle; the series needs rows past the i128 limit
    coeffs: Vec<Vec<f64>>,
}

impl QFunctionSet {
    pub fn new(n_max: usize, series_cutoff: usize) -> Result<Self> {
        let rows = (n_max + series_cutoff).max(1);
        let mut coeffs: Vec<Vec<f64>> = vec![vec![1.0]];
        for n in 2..=rows {
            let prev = &coeffs[n - 2];
            let row = (1..=n)
                .map(|m| {
                    let keep = prev.get(m - 1).map_or(0.0, |a| m as f64 * a);
                    let lower = if m >= 2 { prev[m - 2] } else { 0.0 };
                    keep + lower
                })
                .collect();
            coeffs.push(row);
        }
        Ok(QFunctionSet {
            n_max,
            series_cutoff,
            x_range: DEFAULT_Q_RANGE,
            coeffs,
        })
    }

    fn check(&self, j: usize, x: f64) -> Result<()> {
        if j > self.n_max {
            return Err(Error::invalid("j", format!("must be <= {}", self.n_max)));
        }
        if !(x.abs() <= self.x_range) {
            return Err(Error::Range {
                x,
                limit: self.x_range,
            });
        }
        Ok(())
    }

    pub fn eval(&self, j: usize, x: f64) -> Result<f64> {
        self.check(j, x)?;
        Ok(q_closed_form(j, x))
    }

    /// `sum_{m=j}^{j+cutoff-1} a(m, j) x^m / m!` in double precision.
    pub fn eval_series(&self, j: usize, x: f64) -> Result<f64> {
        self.check(j, x)?;
        if j == 0 {
            return Ok(1.0);
        }
        // x^m / m! accumulated incrementally
        let mut term = 1.0;
        for m in 1..j {
            term *= x / m as f64;
        }
        let mut sum = 0.0;
        for m in j..j + self.series_cutoff {
            term *= x / m as f64;
            sum += self.coeffs[m - 1][j - 1] * term;
        }
        Ok(sum)
    }
}

/// `Q_j(x)` via `(e^x - 1)^j / j!`.
pub fn q_function(j: usize, x: f64) -> Result<f64> {
    if !(x.abs() <= DEFAULT_Q_RANGE) {
        return Err(Error::Range {
            x,
            limit: DEFAULT_Q_RANGE,
        });
    }
    Ok(q_closed_form(j, x))
}

fn q_closed_form(j: usize, x: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => x.exp_m1(),
        _ => {
            let base = x.exp_m1();
            let mut v = 1.0;
            for k in 1..=j {
                v *= base / k as f64;
            }
            v
        }
    }
}

/// `p (p-1) ... (p-n+1)`; the action of `S^n D^n` on `S^p` divided by `S^p`.
pub fn falling_factorial(p: i128, n: usize) -> Option<i128> {
    (0..n as i128).try_fold(1i128, |acc, k| acc.checked_mul(p - k))
}

/// Both evaluations of `K^n S^p = lambda S^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KPowerAction {
    /// `p^n` from the eigen-relation `K S^p = p S^p`.
    pub eigen: i128,
    /// `sum_j a(n, j) p(p-1)...(p-j+1)` from the triangle expansion.
    pub expansion: i128,
}

pub fn apply_k_power_to_monomial(n: usize, p: u32) -> Result<KPowerAction> {
    let p = p as i128;
    let eigen = (0..n).try_fold(1i128, |acc, _| acc.checked_mul(p));
    let eigen = eigen.ok_or(Error::Overflow { row: n })?;
    if n == 0 {
        return Ok(KPowerAction {
            eigen,
            expansion: 1,
        });
    }
    let tri = CoeffTriangle::new(n)?;
    let mut expansion = 0i128;
    for j in 1..=n {
        let ff = falling_factorial(p, j).ok_or(Error::Overflow { row: n })?;
        let term = tri.get(n, j).checked_mul(ff).ok_or(Error::Overflow { row: n })?;
        expansion = expansion
            .checked_add(term)
            .ok_or(Error::Overflow { row: n })?;
    }
    Ok(KPowerAction { eigen, expansion })
}

/// Truncated `exp(xK)` applied to `S^p`, divided by `S^p`:
/// `sum_{n=0}^{terms} Q_n(x) p(p-1)...(p-n+1)`. Tends to `e^{xp}`.
pub fn resummed_shift_on_monomial(x: f64, p: u32, terms: usize) -> Result<f64> {
    let mut sum = 0.0;
    for n in (0..=terms).rev() {
        let ff = falling_factorial(p as i128, n).ok_or(Error::Overflow { row: n })?;
        if ff != 0 {
            sum += q_function(n, x)? * ff as f64;
        }
    }
    Ok(sum)
}

/// Coefficients of an operator in the basis `I, SD, S^2D^2, S^3D^3, ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorExpansion {
    /// `coeffs[k]` multiplies `S^k D^k` (`k = 0` is the identity).
    pub coeffs: Vec<i64>,
}

impl OperatorExpansion {
    pub fn identity(&self) -> i64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, k: usize) -> i64 {
        self.coeffs.get(k).copied().unwrap_or(0)
    }
}

/// `P^n = (K - I)^n` expanded through the triangle, for `n` in `1..=3`.
pub fn p_power_coeffs(n: usize) -> Result<OperatorExpansion> {
    if !(1..=3).contains(&n) {
        return Err(Error::invalid("n", "P powers are provided for n = 1, 2, 3"));
    }
    let tri = CoeffTriangle::new(n)?;
    let mut coeffs = vec![0i64; n + 1];
    // (K - I)^n = sum_k C(n,k) (-1)^(n-k) K^k, K^0 = I
    let mut binom = 1i64;
    for k in 0..=n {
        let sign = if (n - k) % 2 == 0 { 1 } else { -1 };
        let c = sign * binom;
        if k == 0 {
            coeffs[0] += c;
        } else {
            for m in 1..=k {
                coeffs[m] += c * tri.get(k, m) as i64;
            }
        }
        binom = binom * (n - k) as i64 / (k + 1) as i64;
    }
    Ok(OperatorExpansion { coeffs })
}

/// Finite Laurent polynomial `sum c_p S^p`, used to exercise operator identities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Monomials {
    terms: std::collections::BTreeMap<i32, f64>,
}

impl Monomials {
    pub fn monomial(p: i32, c: f64) -> Self {
        let mut m = Monomials::default();
        m.add(p, c);
        m
    }

    fn add(&mut self, p: i32, c: f64) {
        if c != 0.0 {
            let e = self.terms.entry(p).or_insert(0.0);
            *e += c;
            if *e == 0.0 {
                self.terms.remove(&p);
            }
        }
    }

    pub fn coeff(&self, p: i32) -> f64 {
        self.terms.get(&p).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == 0.0)
    }

    /// `D = d/dS`.
    pub fn d(&self) -> Self {
        let mut out = Monomials::default();
        for (&p, &c) in &self.terms {
            out.add(p - 1, c * p as f64);
        }
        out
    }

    /// Multiply by `S^k`.
    pub fn shift(&self, k: i32) -> Self {
        Monomials {
            terms: self.terms.iter().map(|(&p, &c)| (p + k, c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&p, &c) in &other.terms {
            out.add(p, -c);
        }
        out
    }

    /// `K = S D`.
    pub fn k(&self) -> Self {
        self.d().shift(1)
    }

    /// `P = S D - I`.
    pub fn p(&self) -> Self {
        self.k().sub(self)
    }

    /// `T = S^2 D^2`.
    pub fn t(&self) -> Self {
        self.d().d().shift(2)
    }
}

/// `(TP - PT) f`.
pub fn tp_commutator(f: &Monomials) -> Monomials {
    f.p().t().sub(&f.t().p())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_entries() {
        let t = triangle(7).unwrap();
        assert_eq!(t.get(3, 2), 3);
        assert_eq!(t.get(5, 3), 25);
        assert_eq!(t.get(7, 3), 301);
        assert_eq!(t.row(6).unwrap(), &[1, 31, 90, 65, 15, 1]);
        assert_eq!(t.row(7).unwrap(), &[1, 63, 301, 350, 140, 21, 1]);
        assert_eq!(t.row(1).unwrap(), &[1]);
        assert!(t.row(0).is_none());
        assert!(t.row(8).is_none());
    }

    #[test]
    fn exact_capacity() {
        assert!(triangle(MAX_EXACT_ROW).is_ok());
        assert!(matches!(
            triangle(MAX_EXACT_ROW + 20),
            Err(Error::Overflow { .. })
        ));
        assert!(triangle(0).is_err());
    }

    #[test]
    fn q_basics() {
        for x in [-1.0, 0.0, 1.0] {
            assert_eq!(q_function(1, x).unwrap(), f64::exp_m1(x));
        }
        assert_eq!(q_function(0, 0.0).unwrap(), 1.0);
        for j in 1..10 {
            assert_eq!(q_function(j, 0.0).unwrap(), 0.0);
        }
        // cancellation-safe near zero
        let tiny = 1e-12;
        let expected = tiny + tiny * tiny / 2.0;
        assert!((q_function(1, tiny).unwrap() - expected).abs() < 1e-28);
        assert!(matches!(q_function(2, 31.0), Err(Error::Range { .. })));
    }

    #[test]
    fn q2_at_one() {
        // oracle: exact rational sum of 60 terms of a(m,2)/m! (tests/operators.rs)
        let v = q_function(2, 1.0).unwrap();
        assert!((v - 1.476_246_221_006_280).abs() < 1e-15, "{v}");
    }

    #[test]
    fn k_power_examples() {
        let a = apply_k_power_to_monomial(2, 3).unwrap();
        assert_eq!(a, KPowerAction { eigen: 9, expansion: 9 });
        for n in 1..8 {
            assert_eq!(apply_k_power_to_monomial(n, 0).unwrap().expansion, 0);
            assert_eq!(apply_k_power_to_monomial(n, 1).unwrap().expansion, 1);
        }
    }

    #[test]
    fn p_powers() {
        assert_eq!(p_power_coeffs(1).unwrap().coeffs, vec![-1, 1]);
        assert_eq!(p_power_coeffs(2).unwrap().coeffs, vec![1, -1, 1]);
        assert_eq!(p_power_coeffs(3).unwrap().coeffs, vec![-1, 1, 0, 1]);
        assert!(p_power_coeffs(4).is_err());
        assert!(p_power_coeffs(0).is_err());
    }

    #[test]
    fn p_powers_act_like_repeated_p() {
        // P S^p = (p - 1) S^p, so P^n S^p = (p - 1)^n S^p
        for n in 1..=3 {
            let e = p_power_coeffs(n).unwrap();
            for p in -3i32..8 {
                let mut direct = Monomials::monomial(p, 1.0);
                for _ in 0..n {
                    direct = direct.p();
                }
                let via: i128 = (0..=n)
                    .map(|k| e.coeff(k) as i128 * falling_factorial(p as i128, k).unwrap())
                    .sum();
                assert_eq!(direct.coeff(p), via as f64, "n={n} p={p}");
                assert_eq!(via, ((p - 1) as i128).pow(n as u32));
            }
        }
    }

    #[test]
    fn commutator_vanishes() {
        for p in 0..=10 {
            assert!(tp_commutator(&Monomials::monomial(p, 1.0)).is_zero());
        }
    }

    #[test]
    fn series_and_closed_form() {
        let q = QFunctionSet::new(8, 60).unwrap();
        for j in 0..=8 {
            // negative x alternates; double precision only holds ~1e-10 there
            for (x, tol) in [(-2.0, 1e-9), (-0.5, 1e-12), (0.3, 1e-13), (1.7, 1e-13), (2.0, 1e-13)] {
                let a = q.eval(j, x).unwrap();
                let b = q.eval_series(j, x).unwrap();
                assert!((a - b).abs() <= tol * a.abs(), "j={j} x={x} {a} {b}");
            }
        }
        assert!(q.eval(9, 0.1).is_err());
    }
}
