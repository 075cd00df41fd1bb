use grushin_core::specfun::{hermite_eval, l1_bound_integral, laguerre_normalized, laguerre_poly, laguerre_weighted};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn binom(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// `L_k^δ(τ) = Σ_j (-1)^j C(k+δ, k-j) τ^j / j!` in exact arithmetic, with the sum
/// of absolute terms as the conditioning scale.
fn laguerre_exact(k: u64, delta: u64, tau: &BigRational) -> (f64, f64) {
    let mut sum = BigRational::zero();
    let mut scale = BigRational::zero();
    let mut power = BigRational::one();
    let mut fact = BigInt::one();
    for j in 0..=k {
        if j > 0 {
            power *= tau;
            fact *= BigInt::from(j);
        }
        let term = BigRational::from(binom(k + delta, k - j)) * &power / BigRational::from(fact.clone());
        scale += term.abs();
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    (sum.to_f64().unwrap(), scale.to_f64().unwrap())
}

/// Physicists' `H_k(x)` in exact arithmetic, with the sum of absolute terms.
fn hermite_poly_exact(k: usize, x: &BigRational) -> (f64, f64) {
    let two = BigInt::from(2);
    let mut prev: Vec<BigInt> = vec![];
    let mut cur: Vec<BigInt> = vec![BigInt::one()];
    for j in 0..k {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += &two * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= &two * BigInt::from(j) * c;
        }
        prev = cur;
        cur = next;
    }
    let mut sum = BigRational::zero();
    let mut scale = BigRational::zero();
    let mut power = BigRational::one();
    for c in &cur {
        let term = BigRational::from(c.clone()) * &power;
        scale += term.abs();
        sum += term;
        power *= x;
    }
    (sum.to_f64().unwrap(), scale.to_f64().unwrap())
}

#[test]
fn laguerre_matches_exact_rational_sum() {
    for &(n, d) in &[(1, 3), (5, 2), (7, 1), (20, 1), (81, 4)] {
        let tau = rat(n, d);
        let tf = n as f64 / d as f64;
        for delta in 0..=2u64 {
            for k in 0..=30u64 {
                let (exact, scale) = laguerre_exact(k, delta, &tau);
                let got = laguerre_poly(k as usize, delta as f64, tf).unwrap();
                assert!(
                    (got - exact).abs() <= 1e-13 * scale.max(1.0),
                    "L_{k}^{delta}({tf}) = {got}, exact {exact}"
                );
            }
        }
    }
}

#[test]
fn hermite_functions_match_exact_polynomials() {
    for &(n, d) in &[(0, 1), (1, 2), (5, 4), (3, 1), (-7, 2)] {
        let x = rat(n, d);
        let xf = n as f64 / d as f64;
        for k in 0..=40usize {
            let (poly, scale) = hermite_poly_exact(k, &x);
            // (2^k k! √π)^{-1/2} e^{-x²/2}
            let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
            let ln_norm = -0.5 * (k as f64 * 2f64.ln() + ln_fact + 0.5 * std::f64::consts::PI.ln()) - 0.5 * xf * xf;
            let exact = poly * ln_norm.exp();
            let got = hermite_eval(k, xf);
            assert!(
                (got - exact).abs() <= 1e-12 * (scale * ln_norm.exp()).max(1e-300),
                "h_{k}({xf}) = {got}, exact {exact}"
            );
        }
    }
}

#[test]
fn normalized_laguerre_matches_definition_for_integer_types() {
    for delta in 0..=3usize {
        for k in [0usize, 1, 4, 9, 15] {
            // Γ(k+1)/Γ(k+δ+1) = 1/((k+1)···(k+δ))
            let ratio: f64 = (1..=delta).map(|j| 1.0 / (k + j) as f64).product();
            for tau in [0.25f64, 1.0, 3.5, 12.0, 40.0] {
                let want = ratio.sqrt() * (-0.5 * tau).exp() * tau.powf(0.5 * delta as f64) * laguerre_poly(k, delta as f64, tau).unwrap();
                let got = laguerre_normalized(k, delta as f64, tau).unwrap();
                assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-3), "k {k} δ {delta} τ {tau}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn l1_integral_k0_closed_forms() {
    let c1 = l1_bound_integral(0, 1).unwrap();
    let c2 = l1_bound_integral(0, 2).unwrap();
    assert!((c1 / (2.0 * std::f64::consts::PI).sqrt() - 1.0).abs() < 1e-8, "{c1}");
    assert!((c2 / 2.0 - 1.0).abs() < 1e-8, "{c2}");
}

#[test]
fn invalid_laguerre_inputs_are_rejected() {
    assert!(laguerre_poly(3, -1.0, 1.0).is_err());
    assert!(laguerre_poly(3, 0.0, -1.0).is_err());
    assert!(laguerre_normalized(3, 0.0, f64::NAN).is_err());
}

proptest! {
    #[test]
    fn hermite_parity(k in 0usize..60, x in -8.0f64..8.0) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let (a, b) = (hermite_eval(k, x), sign * hermite_eval(k, -x));
        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300));
    }

    #[test]
    fn laguerre_type_lowering_identity(k in 1usize..40, delta in 0.0f64..3.0, tau in 0.0f64..30.0) {
        // L_k^δ = L_k^{δ+1} - L_{k-1}^{δ+1}
        let lhs = laguerre_weighted(k, delta, tau).unwrap();
        let hi = laguerre_weighted(k, delta + 1.0, tau).unwrap();
        let lo = laguerre_weighted(k - 1, delta + 1.0, tau).unwrap();
        prop_assert!((lhs - (hi - lo)).abs() <= 1e-10 * (hi.abs() + lo.abs()).max(1e-300));
    }

    #[test]
    fn hermite_three_term_relation(k in 1usize..80, x in -10.0f64..10.0) {
        // x h_k = sqrt((k+1)/2) h_{k+1} + sqrt(k/2) h_{k-1}
        let kf = k as f64;
        let lhs = x * hermite_eval(k, x);
        let up = ((kf + 1.0) / 2.0).sqrt() * hermite_eval(k + 1, x);
        let down = (kf / 2.0).sqrt() * hermite_eval(k - 1, x);
        prop_assert!((lhs - up - down).abs() <= 1e-12 * (up.abs() + down.abs()).max(1e-300));
    }
}
