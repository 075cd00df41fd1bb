use std::f64::consts::PI;

use grushin_core::hermite::{phi_scaled, MultiIndex};
use grushin_core::io::{read_field, write_field};
use grushin_core::quadrature::TensorGrid;
use grushin_core::restriction::{
    inverse_partial_fourier_t, partial_fourier_t, restriction_apply, sphere_measure_transform, sphere_rule, PeriodicGrid,
    RestrictionConfig, SampledField,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn gaussian(x: &[f64], t: &[f64]) -> Complex64 {
    Complex64::new((-0.5 * (x[0] * x[0] + t[0] * t[0])).exp(), 0.0)
}

/// `∫ e^{-x²/2} Φ^a_k(x) dx` by a fine trapezoid sum.
fn hermite_coefficient(k: usize, a: f64) -> f64 {
    let n = 60_001;
    let h = 60.0 / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let x = -30.0 + i as f64 * h;
            (-0.5 * x * x).exp() * phi_scaled(&MultiIndex(vec![k]), a, &[x]).unwrap()
        })
        .sum::<f64>()
        * h
}

/// For `d₁ = d₂ = 1` the sphere is `{±1}` and `f^λ = √(2π)e^{-λ²/2}e^{-x²/2}`, so
/// `𝓟_μ f(x,t) = (2π)^{-1} Σ_k (2k+1)^{-1} c_k Φ^{a_k}_k(x) √(2π) e^{-a_k²/2} 2cos(a_k t)`.
#[test]
fn one_dimensional_restriction_matches_two_point_formula() {
    let x = TensorGrid::uniform(1, 321, 20.0).unwrap();
    let t = PeriodicGrid::uniform(1, 128, 40.0).unwrap();
    let f = SampledField::from_fn(x.clone(), t.clone(), gaussian).unwrap();
    let k_max = 6;
    for mu in [1.0, 2.5] {
        let out = restriction_apply(&f, &RestrictionConfig::new(mu, k_max)).unwrap();
        assert_eq!(out.sphere_points, 2);
        let coeffs: Vec<(f64, f64)> = (0..=k_max)
            .map(|k| {
                let a = mu / (2 * k + 1) as f64;
                (a, hermite_coefficient(k, a) / (2 * k + 1) as f64)
            })
            .collect();
        let expected = SampledField::from_fn(x.clone(), t.clone(), |xp, tp| {
            let v: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, &(a, c))| {
                    c * phi_scaled(&MultiIndex(vec![k]), a, xp).unwrap() * (2.0 * PI).sqrt() * (-0.5 * a * a).exp() * 2.0 * (a * tp[0]).cos()
                })
                .sum::<f64>()
                / (2.0 * PI);
            Complex64::new(v, 0.0)
        })
        .unwrap();
        let err = out.field.values().iter().zip(expected.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-9 * expected.max_abs(), "μ = {mu}: max error {err:e}");
        assert_eq!(out.level_norms.len(), k_max + 1);
        // odd levels vanish for an even input
        assert!(out.level_norms[1] < 1e-12 && out.level_norms[3] < 1e-12);
    }
}

#[test]
fn partial_fourier_of_a_gaussian() {
    let x = TensorGrid::uniform(1, 19, 9.0).unwrap();
    let t = PeriodicGrid::uniform(1, 128, 30.0).unwrap();
    let f = SampledField::from_fn(x, t, gaussian).unwrap();
    let s = partial_fourier_t(&f).unwrap();
    let xs = f.x_grid().points();
    for ix in 0..xs.len() {
        for p in 0..128 {
            let l = s.lambda(p)[0];
            let want = (2.0 * PI).sqrt() * (-0.5 * l * l).exp() * (-0.5 * xs[ix][0] * xs[ix][0]).exp();
            assert!((s.value(ix, p) - want).norm() < 1e-12, "λ = {l}");
        }
    }
    let back = inverse_partial_fourier_t(&s).unwrap();
    let err = back.values().iter().zip(f.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-13);
}

#[test]
fn sphere_rules_carry_the_surface_area() {
    assert_eq!(sphere_rule(1, 1).unwrap().total_weight(), 2.0);
    assert!((sphere_rule(2, 16).unwrap().total_weight() - 2.0 * PI).abs() < 1e-13);
    assert!((sphere_rule(3, 12).unwrap().total_weight() - 4.0 * PI).abs() < 1e-12);
}

#[test]
fn unit_sphere_measure_transform_in_three_dimensions() {
    let rule = sphere_rule(3, 24).unwrap();
    for t in [[0.3f64, 0.0, 0.0], [1.0, -2.0, 0.5], [0.0, 4.0, 3.0]] {
        let r = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
        let want = 4.0 * PI * r.sin() / r;
        let got = sphere_measure_transform(&t, 1.0, &rule);
        assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-12, "|t| = {r}: {got} vs {want}");
    }
}

#[test]
fn insufficient_x_support_is_rejected() {
    let x = TensorGrid::uniform(1, 65, 2.0).unwrap();
    let t = PeriodicGrid::uniform(1, 64, 30.0).unwrap();
    let f = SampledField::from_fn(x, t, gaussian).unwrap();
    assert!(restriction_apply(&f, &RestrictionConfig::new(1.0, 2)).is_err());
    assert!(restriction_apply(&f, &RestrictionConfig::new(-1.0, 2)).is_err());
}

#[test]
fn restricted_field_survives_a_disk_round_trip() {
    let x = TensorGrid::uniform(1, 161, 16.0).unwrap();
    let t = PeriodicGrid::uniform(1, 64, 40.0).unwrap();
    let f = SampledField::from_fn(x, t, gaussian).unwrap();
    let out = restriction_apply(&f, &RestrictionConfig::new(1.0, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.bin");
    write_field(&path, &out.field).unwrap();
    assert_eq!(read_field(&path).unwrap(), out.field);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn restriction_is_linear(c in -3.0f64..3.0, d in -3.0f64..3.0, shift in -2.0f64..2.0) {
        let x = TensorGrid::uniform(1, 161, 16.0).unwrap();
        let t = PeriodicGrid::uniform(1, 64, 40.0).unwrap();
        let f = SampledField::from_fn(x.clone(), t.clone(), gaussian).unwrap();
        let g = SampledField::from_fn(x.clone(), t.clone(), |x, t| {
            Complex64::new(0.0, (-0.5 * ((x[0] - shift).powi(2) + t[0] * t[0])).exp())
        }).unwrap();
        let combo = SampledField::new(
            x, t,
            f.values().iter().zip(g.values()).map(|(a, b)| a * c + b * d).collect(),
        ).unwrap();
        let cfg = RestrictionConfig::new(1.3, 4);
        let pf = restriction_apply(&f, &cfg).unwrap().field;
        let pg = restriction_apply(&g, &cfg).unwrap().field;
        let pc = restriction_apply(&combo, &cfg).unwrap().field;
        let scale = pf.max_abs() * c.abs() + pg.max_abs() * d.abs() + 1e-300;
        let err = pc.values().iter().zip(pf.values().iter().zip(pg.values()))
            .map(|(v, (a, b))| (v - (a * c + b * d)).norm())
            .fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * scale.max(pc.max_abs()));
    }
}
