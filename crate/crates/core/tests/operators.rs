//! Triangle and Q-function checks against an exact-rational oracle.
//!
//! The oracle uses the explicit Stirling formula
//! `S(n,k) = 1/k! sum_i (-1)^i C(k,i) (k-i)^n`, which shares nothing with the
//! recursion the library builds the triangle from.

use bubble_bs::operators::{
    apply_k_power_to_monomial, q_function, resummed_shift_on_monomial, tp_commutator, triangle,
    Monomials, QFunctionSet,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn stirling2(n: u64, k: u64) -> BigInt {
    let mut sum = BigInt::zero();
    for i in 0..=k {
        let term = binomial(k, i) * BigInt::from(k - i).pow(n as u32);
        if i % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum / factorial(k)
}

/// `sum_{m=j}^{j+terms-1} S(m,j) x^m / m!` in exact rationals.
fn q_series_exact(j: u64, x: f64, terms: u64) -> f64 {
    let xr = BigRational::from_float(x).unwrap();
    let mut sum = BigRational::zero();
    for m in j..j + terms {
        let coeff = BigRational::new(stirling2(m, j), factorial(m));
        sum += coeff * num_traits::pow(xr.clone(), m as usize);
    }
    sum.to_f64().unwrap()
}

#[test]
fn triangle_matches_explicit_formula_to_row_30() {
    let t = triangle(30).unwrap();
    for n in 1..=30u64 {
        for m in 1..=n {
            let exact = stirling2(n, m);
            assert_eq!(BigInt::from(t.get(n as usize, m as usize)), exact, "({n},{m})");
        }
    }
}

#[test]
fn triangle_recursion_and_edges() {
    let t = triangle(30).unwrap();
    for n in 1..=30 {
        assert_eq!(t.get(n, 1), 1);
        assert_eq!(t.get(n, n), 1);
        for m in 2..n {
            assert_eq!(t.get(n, m), m as i128 * t.get(n - 1, m) + t.get(n - 1, m - 1));
        }
    }
}

#[test]
fn q_closed_form_matches_exact_series() {
    let q = QFunctionSet::new(8, 60).unwrap();
    for j in 0..=8u64 {
        for i in -8..=8 {
            let x = i as f64 * 0.25;
            let closed = q.eval(j as usize, x).unwrap();
            let series = if j == 0 { 1.0 } else { q_series_exact(j, x, 60) };
            let rel = if series == 0.0 {
                closed.abs()
            } else {
                ((closed - series) / series).abs()
            };
            assert!(rel < 1e-12, "j={j} x={x}: {closed} vs {series}");
        }
    }
}

#[test]
fn q2_at_one_from_the_series() {
    let v = q_series_exact(2, 1.0, 60);
    assert!((v - 1.476_246_221_006_280).abs() < 1e-15, "{v}");
    assert!((q_function(2, 1.0).unwrap() - v).abs() < 1e-15);
}

#[test]
fn resummation_reproduces_exponential() {
    for p in 0..=8u32 {
        for i in -10..=10 {
            let x = i as f64 / 10.0;
            let got = resummed_shift_on_monomial(x, p, 20).unwrap();
            let want = (x * p as f64).exp();
            assert!(((got - want) / want).abs() < 1e-10, "p={p} x={x}");
        }
    }
}

#[test]
fn eigen_identity_exact() {
    for n in 0..=12 {
        for p in 0..=12 {
            let a = apply_k_power_to_monomial(n, p).unwrap();
            assert_eq!(a.eigen, a.expansion, "n={n} p={p}");
        }
    }
}

#[test]
fn commutator_on_monomials() {
    for p in 0..=10 {
        assert!(tp_commutator(&Monomials::monomial(p, 1.0)).is_zero(), "p={p}");
    }
}

proptest! {
    #[test]
    fn commutator_vanishes_on_polynomials(coeffs in prop::collection::vec(-5.0f64..5.0, 1..8)) {
        let mut f = Monomials::default();
        for (p, c) in coeffs.iter().enumerate() {
            f = f.sub(&Monomials::monomial(p as i32, -*c));
        }
        let comm = tp_commutator(&f);
        for p in -2..12 {
            prop_assert!(comm.coeff(p).abs() < 1e-9);
        }
    }

    #[test]
    fn q_recurrence(x in -2.0f64..2.0, j in 1usize..10) {
        // (e^x - 1) Q_j = (j + 1) Q_{j+1}
        let lhs = x.exp_m1() * q_function(j, x).unwrap();
        let rhs = (j as f64 + 1.0) * q_function(j + 1, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * lhs.abs().max(1e-300));
    }
}
