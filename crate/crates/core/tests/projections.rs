use grushin_core::hermite::{default_grid, eigsum_kernel_value, enumerate_multiindices, phi_scaled, projection_kernel_eigsum, binomial};
use grushin_core::quadrature::{Quadrature1D, TensorGrid};
use grushin_core::weyl::{laguerre_kernel_diagonal, projection_kernel_laguerre_on};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vector(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn wnorm(v: &[Complex64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(v, w)| v.norm_sqr() * w).sum::<f64>().sqrt()
}

#[test]
fn multiindex_counts() {
    for d1 in 1..=3 {
        for k in 0..8 {
            let list = enumerate_multiindices(d1, k);
            assert_eq!(list.len(), binomial(k + d1 - 1, d1 - 1));
            assert!(list.iter().all(|nu| nu.degree() == k));
        }
    }
}

#[test]
fn scaled_eigenfunctions_are_orthonormal() {
    let g = TensorGrid::new(vec![Quadrature1D::gauss_hermite(80).unwrap(); 2]).unwrap();
    let a: f64 = 1.7;
    let rule = g.scaled(1.0 / a.sqrt());
    let pts = rule.points();
    let w = rule.weights();
    let nus: Vec<_> = (0..5).flat_map(|k| enumerate_multiindices(2, k)).collect();
    for (i, u) in nus.iter().enumerate() {
        for (j, v) in nus.iter().enumerate() {
            let ip: f64 = pts
                .iter()
                .zip(&w)
                .map(|(p, w)| w * phi_scaled(u, a, p).unwrap() * phi_scaled(v, a, p).unwrap())
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip - want).abs() < 1e-12, "{u:?} {v:?}: {ip}");
        }
    }
}

#[test]
fn laguerre_route_kernel_matches_eigensum_in_two_dimensions() {
    let g = TensorGrid::uniform(2, 7, 3.0).unwrap();
    for k in [0, 3, 6] {
        let lag = projection_kernel_laguerre_on(k, 0.8, &g).unwrap();
        let pts = g.points();
        for i in (0..g.len()).step_by(5) {
            for j in (0..g.len()).step_by(3) {
                let want = eigsum_kernel_value(k, 0.8, &pts[i], &pts[j]).unwrap();
                let got = lag.value(i, j);
                assert!((got.re - want).abs() < 1e-10 * (1.0 + want.abs()) && got.im.abs() < 1e-10, "k {k}: {got} vs {want}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn discrete_projections_are_idempotent(k in 0usize..8, a in 0.3f64..3.0, seed in 0u64..1000) {
        let g = default_grid(1, 20, a).unwrap();
        let p = projection_kernel_eigsum(k, a, &g).unwrap();
        let w = g.weights();
        let v = random_vector(g.len(), seed);
        let pv = p.apply(&v).unwrap();
        let ppv = p.apply(&pv).unwrap();
        let diff: Vec<Complex64> = ppv.iter().zip(&pv).map(|(a, b)| a - b).collect();
        prop_assert!(wnorm(&diff, &w) <= 1e-9 * wnorm(&v, &w));
        prop_assert!(wnorm(&pv, &w) <= wnorm(&v, &w) * (1.0 + 1e-9));
    }

    #[test]
    fn kernel_scale_covariance(
        k in 0usize..12,
        a in 0.1f64..10.0,
        x in proptest::collection::vec(-3.0f64..3.0, 2),
        y in proptest::collection::vec(-3.0f64..3.0, 2),
    ) {
        // F_{k,a}(x, y) = |a|^{d₁/2} F_{k,1}(√|a|x, √|a|y)
        let s = a.sqrt();
        let xs: Vec<f64> = x.iter().map(|v| s * v).collect();
        let ys: Vec<f64> = y.iter().map(|v| s * v).collect();
        let lhs = eigsum_kernel_value(k, a, &x, &y).unwrap();
        let rhs = a * eigsum_kernel_value(k, 1.0, &xs, &ys).unwrap();
        let neg = eigsum_kernel_value(k, -a, &x, &y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + a) * (k as f64 + 1.0));
        prop_assert!((lhs - neg).abs() <= 1e-14 * (1.0 + lhs.abs()));
    }

    #[test]
    fn laguerre_diagonal_matches_eigensum(k in 0usize..15, a in 0.2f64..5.0, x in proptest::collection::vec(-4.0f64..4.0, 1..=2)) {
        let lag = laguerre_kernel_diagonal(k, a, &x).unwrap();
        let eig = eigsum_kernel_value(k, a, &x, &x).unwrap();
        prop_assert!(eig >= -1e-12);
        prop_assert!((lag - eig).abs() <= 1e-10 * (1.0 + eig.abs()), "{} vs {}", lag, eig);
    }
}
