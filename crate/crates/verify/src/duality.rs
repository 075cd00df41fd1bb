//! `||h ∗ \widehat{dσ_r}||_{p'}` against `||h||_p` on a periodic t-grid.

use grushin_core::restriction::{sphere_convolution, sphere_measure_transform, sphere_rule, PeriodicGrid, SphereRule};
use grushin_core::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub d2: usize,
    pub p: f64,
    pub radius: f64,
    pub convolution_norm: f64,
    pub h_norm: f64,
    /// `convolution_norm / h_norm`, zero for `h = 0`.
    pub ratio: f64,
    pub sphere_points: usize,
}

/// Discrete `L^p` norm on the grid, `p = ∞` the maximum.
pub fn grid_lp_norm(values: &[Complex64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    (cell * values.iter().map(|v| v.norm().powf(p)).sum::<f64>()).powf(1.0 / p)
}

/// Sphere rule exact for `ĥ(rε)e^{-irε·t}` over the whole grid.
pub fn duality_rule(t: &PeriodicGrid, radius: f64) -> Result<SphereRule> {
    sphere_rule(t.dim(), SphereRule::required_order(t.dim(), 2.0 * radius * t.half_diagonal()))
}

/// Ratio `||h ∗ \widehat{dσ_r}||_{p'} / ||h||_p` by sphere quadrature of the
/// plane-wave integral.
pub fn duality_demo(t: &PeriodicGrid, h: &[Complex64], p: f64, radius: f64) -> Result<DualityReport> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must lie in [1, 2], got {p}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let rule = duality_rule(t, radius)?;
    let conv = sphere_convolution(t, h, radius, &rule)?;
    let p_conj = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
    let cell = t.cell_volume();
    let convolution_norm = grid_lp_norm(&conv, cell, p_conj);
    let h_norm = grid_lp_norm(h, cell, p);
    let ratio = if h_norm > 0.0 { convolution_norm / h_norm } else { 0.0 };
    Ok(DualityReport { d2: t.dim(), p, radius, convolution_norm, h_norm, ratio, sphere_points: rule.len() })
}

/// `max_t |\widehat{dσ_r}(t) - r^{d₂-1}\widehat{dσ_1}(rt)|` over `points`, both
/// sides by the same sphere rule.
pub fn radius_scaling_deviation(rule: &SphereRule, radius: f64, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .map(|t| {
            let lhs = sphere_measure_transform(t, radius, rule);
            let rt: Vec<f64> = t.iter().map(|v| radius * v).collect();
            let rhs = sphere_measure_transform(&rt, 1.0, rule) * radius.powi(rule.d2 as i32 - 1);
            (lhs - rhs).norm()
        })
        .fold(0.0, f64::max)
}
