//! Partial Fourier transform in `t`, sphere quadrature, the restriction operator
//! `𝓟_μ`, spectral synthesis of `L`, and a finite-difference Grushin operator.
//!
//! Conventions: `f^λ(x) = ∫ f(x,t) e^{iλ·t} dt` and
//! `f(x,t) = (2π)^{-d₂} ∫ f^λ(x) e^{-iλ·t} dλ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{check_resolution, ScaledBasis};
use crate::quadrature::{gauss_legendre, QuadratureKind, TensorGrid};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default effective-support tolerance for fields entering `𝓟_μ`.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-8;

/// One periodic axis with nodes `-T/2 + jT/n`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicAxis {
    pub n: usize,
    pub period: f64,
}

impl PeriodicAxis {
    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        -0.5 * self.period + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Dual frequency `2πm/T` of centered index `p`, `m = p - n/2`.
    pub fn dual(&self, p: usize) -> f64 {
        2.0 * PI * (p as f64 - (self.n / 2) as f64) / self.period
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }
}

/// Uniform periodic grid on `R^{d₂}`, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    axes: Vec<PeriodicAxis>,
}

impl PeriodicGrid {
    pub fn new(axes: Vec<PeriodicAxis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidArgument(format!("t-grid dimension must be 1, 2 or 3, got {}", axes.len())));
        }
        for (i, a) in axes.iter().enumerate() {
            if a.n < 2 || a.n % 2 != 0 {
                return Err(Error::InvalidArgument(format!("t-axis {i} needs an even point count, got {}", a.n)));
            }
            if !(a.period > 0.0) {
                return Err(Error::InvalidArgument(format!("t-axis {i} needs a positive period")));
            }
        }
        Ok(Self { axes })
    }

    pub fn uniform(d2: usize, n: usize, period: f64) -> Result<Self> {
        Self::new(vec![PeriodicAxis { n, period }; d2])
    }

    pub fn axes(&self) -> &[PeriodicAxis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).product()
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (slot, a) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = flat % a.n;
            flat /= a.n;
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).iter().zip(&self.axes).map(|(&j, a)| a.node(j)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|f| self.point(f)).collect()
    }

    pub fn dual_point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat).iter().zip(&self.axes).map(|(&p, a)| a.dual(p)).collect()
    }

    /// Half length of the box diagonal, `max |t|` over the periodic cell.
    pub fn half_diagonal(&self) -> f64 {
        self.axes.iter().map(|a| (0.5 * a.period).powi(2)).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { axes: self.axes.iter().map(|a| PeriodicAxis { n: a.n, period: a.period * s }).collect() }
    }
}

/// Complex samples of `f(x,t)`, stored as `values[x_flat * nt + t_flat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    x: TensorGrid,
    t: PeriodicGrid,
    values: Vec<Complex64>,
}

impl SampledField {
    pub fn new(x: TensorGrid, t: PeriodicGrid, values: Vec<Complex64>) -> Result<Self> {
        if x.axes().iter().any(|q| q.kind() != QuadratureKind::UniformTrapezoid) {
            return Err(Error::InvalidArgument("field x-grids must be uniform".into()));
        }
        if values.len() != x.len() * t.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {} x {} grid",
                values.len(),
                x.len(),
                t.len()
            )));
        }
        Ok(Self { x, t, values })
    }

    pub fn zeros(x: TensorGrid, t: PeriodicGrid) -> Result<Self> {
        let n = x.len() * t.len();
        Self::new(x, t, vec![ZERO; n])
    }

    pub fn from_fn(x: TensorGrid, t: PeriodicGrid, f: impl Fn(&[f64], &[f64]) -> Complex64 + Sync) -> Result<Self> {
        let xs = x.points();
        let ts = t.points();
        let nt = ts.len();
        let mut values = vec![ZERO; xs.len() * nt];
        values.par_chunks_mut(nt).zip(&xs).for_each(|(row, xp)| {
            for (v, tp) in row.iter_mut().zip(&ts) {
                *v = f(xp, tp);
            }
        });
        Self::new(x, t, values)
    }

    pub fn x_grid(&self) -> &TensorGrid {
        &self.x
    }

    pub fn t_grid(&self) -> &PeriodicGrid {
        &self.t
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn d1(&self) -> usize {
        self.x.dim()
    }

    pub fn d2(&self) -> usize {
        self.t.dim()
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    pub fn value(&self, ix: usize, it: usize) -> Complex64 {
        self.values[ix * self.nt() + it]
    }

    pub fn same_grids(&self, other: &SampledField) -> bool {
        self.x == other.x && self.t == other.t
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest magnitude on the outer faces of the x-box and the first/last
    /// planes of every t-axis, relative to the global maximum.
    pub fn boundary_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let xs = self.x.shape();
        let ts = self.t.shape();
        let nt = self.nt();
        let mut edge: f64 = 0.0;
        for ix in 0..self.nx() {
            let xi = self.x.unflatten(ix);
            let x_face = xi.iter().zip(&xs).any(|(&i, &n)| i == 0 || i + 1 == n);
            for it in 0..nt {
                let face = x_face || {
                    let ti = self.t.unflatten(it);
                    ti.iter().zip(&ts).any(|(&j, &n)| j == 0 || j + 1 == n)
                };
                if face {
                    edge = edge.max(self.values[ix * nt + it].norm());
                }
            }
        }
        edge / max
    }

    /// Rejects fields that are not effectively supported inside the grid.
    pub fn check_support(&self, tol: f64) -> Result<()> {
        let r = self.boundary_ratio();
        if r > tol {
            return Err(Error::SupportViolation(format!(
                "boundary magnitude is {r:.3e} of the maximum, above the tolerance {tol:.1e}"
            )));
        }
        Ok(())
    }

    /// Discrete `L²(R^{d₁}×R^{d₂})` norm.
    pub fn l2_norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    /// `Σ w_x Δt f·conj(g)`.
    pub fn inner(&self, other: &SampledField) -> Complex64 {
        let wx = self.x.weights();
        let dt = self.t.cell_volume();
        let nt = self.nt();
        self.values
            .chunks(nt)
            .zip(other.values.chunks(nt))
            .zip(&wx)
            .map(|((a, b), w)| a.iter().zip(b).map(|(u, v)| u * v.conj()).sum::<Complex64>() * (w * dt))
            .sum()
    }

    pub fn scale(&mut self, c: Complex64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    pub fn add_scaled(&mut self, other: &SampledField, c: Complex64) -> Result<()> {
        if !self.same_grids(other) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += b * c);
        Ok(())
    }
}

/// `f^λ(x)` on the discrete dual grid, stored as `values[x_flat * nt + p_flat]`
/// with centered frequency indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSpectrum {
    x: TensorGrid,
    t: PeriodicGrid,
    values: Vec<Complex64>,
}

impl PartialSpectrum {
    pub fn new(x: TensorGrid, t: PeriodicGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != x.len() * t.len() {
            return Err(Error::GridMismatch(format!("{} values for a {} x {} grid", values.len(), x.len(), t.len())));
        }
        Ok(Self { x, t, values })
    }

    /// Samples `f^λ(x)` on the dual grid of `t`.
    pub fn from_fn(x: TensorGrid, t: PeriodicGrid, f: impl Fn(&[f64], &[f64]) -> Complex64 + Sync) -> Result<Self> {
        let xs = x.points();
        let ls: Vec<Vec<f64>> = (0..t.len()).map(|p| t.dual_point(p)).collect();
        let nt = ls.len();
        let mut values = vec![ZERO; xs.len() * nt];
        values.par_chunks_mut(nt).zip(&xs).for_each(|(row, xp)| {
            for (v, l) in row.iter_mut().zip(&ls) {
                *v = f(xp, l);
            }
        });
        Self::new(x, t, values)
    }

    pub fn x_grid(&self) -> &TensorGrid {
        &self.x
    }

    pub fn t_grid(&self) -> &PeriodicGrid {
        &self.t
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn lambda(&self, p_flat: usize) -> Vec<f64> {
        self.t.dual_point(p_flat)
    }

    pub fn value(&self, ix: usize, p: usize) -> Complex64 {
        self.values[ix * self.t.len() + p]
    }

    /// `f^λ(x)` at an arbitrary `λ` inside the resolved band, by trigonometric
    /// interpolation of the dual-grid values (the band-limited continuation).
    pub fn interpolate(&self, lambda: &[f64]) -> Result<Vec<Complex64>> {
        check_band(&self.t, lambda)?;
        let field = inverse_partial_fourier_t(self)?;
        let phases = plane_wave(&self.t, lambda, 1.0);
        let dt = self.t.cell_volume();
        Ok(field
            .values
            .chunks(self.t.len())
            .map(|row| row.iter().zip(&phases).map(|(v, e)| v * e).sum::<Complex64>() * dt)
            .collect())
    }
}

fn check_band(t: &PeriodicGrid, lambda: &[f64]) -> Result<()> {
    if lambda.len() != t.dim() {
        return Err(Error::InvalidArgument(format!("frequency has {} components, t-grid has {}", lambda.len(), t.dim())));
    }
    for (j, (l, a)) in lambda.iter().zip(t.axes()).enumerate() {
        if l.abs() > a.nyquist() * (1.0 + 1e-12) {
            return Err(Error::FrequencyOutOfRange(format!(
                "|λ_{j}| = {:.4} exceeds the dual-grid limit π/Δt = {:.4}",
                l.abs(),
                a.nyquist()
            )));
        }
    }
    Ok(())
}

/// `e^{i·sign·λ·t}` on every t-grid point.
fn plane_wave(t: &PeriodicGrid, lambda: &[f64], sign: f64) -> Vec<Complex64> {
    let per_axis: Vec<Vec<Complex64>> = t
        .axes()
        .iter()
        .zip(lambda)
        .map(|(a, &l)| a.nodes().iter().map(|&s| Complex64::from_polar(1.0, sign * l * s)).collect())
        .collect();
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for ax in per_axis {
        out = out.iter().flat_map(|&u| ax.iter().map(move |&v| u * v)).collect();
    }
    out
}

/// Applies a 1-D FFT along `axis` of a row-major tensor with shape `shape`.
fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, inverse: bool) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let block = n * inner;
    data.par_chunks_mut(block).take(outer).for_each(|chunk| {
        let mut line = vec![ZERO; n];
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        for i in 0..inner {
            for j in 0..n {
                line[j] = chunk[j * inner + i];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for j in 0..n {
                chunk[j * inner + i] = line[j];
            }
        }
    });
}

fn reorder_axis(data: &[Complex64], shape: &[usize], axis: usize, map: impl Fn(usize) -> usize) -> Vec<Complex64> {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![ZERO; data.len()];
    for (src, dst) in data.chunks(n * inner).zip(out.chunks_mut(n * inner)) {
        for j in 0..n {
            let tj = map(j);
            dst[tj * inner..(tj + 1) * inner].copy_from_slice(&src[j * inner..(j + 1) * inner]);
        }
    }
    out
}

/// `f^λ(x) = ∫ f(x,t)e^{iλ·t}dt` by the periodic trapezoid sum, on the dual grid.
/// Rejects fields whose boundary magnitude exceeds [`DEFAULT_SUPPORT_TOL`].
pub fn partial_fourier_t(f: &SampledField) -> Result<PartialSpectrum> {
    partial_fourier_t_with_tol(f, DEFAULT_SUPPORT_TOL)
}

pub fn partial_fourier_t_with_tol(f: &SampledField, support_tol: f64) -> Result<PartialSpectrum> {
    f.check_support(support_tol)?;
    let values = forward_t(&f.values, f.nx(), &f.t);
    Ok(PartialSpectrum { x: f.x.clone(), t: f.t.clone(), values })
}

fn forward_t(values: &[Complex64], rows: usize, t: &PeriodicGrid) -> Vec<Complex64> {
    let mut shape = vec![rows];
    shape.extend(t.shape());
    let mut data = values.to_vec();
    for (k, a) in t.axes().iter().enumerate() {
        let axis = k + 1;
        // X[m mod n] = Σ_j f_j e^{2πi jm/n}; λ_m t_j = πm(2j/n - 1)
        fft_axis(&mut data, &shape, axis, true);
        let n = a.n;
        let half = n / 2;
        data = reorder_axis(&data, &shape, axis, |j| (j + half) % n);
        let inner: usize = shape[axis + 1..].iter().product();
        let dt = a.spacing();
        for (idx, v) in data.iter_mut().enumerate() {
            let p = (idx / inner) % n;
            let m = p as i64 - half as i64;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *v *= sign * dt;
        }
    }
    data
}

/// `Δt Σ_j u(t_j) e^{iλ_m·t_j}` on the dual grid for a single t-profile.
pub fn fourier_t_samples(t: &PeriodicGrid, values: &[Complex64]) -> Result<Vec<Complex64>> {
    if values.len() != t.len() {
        return Err(Error::GridMismatch(format!("{} samples for a t-grid of {}", values.len(), t.len())));
    }
    Ok(forward_t(values, 1, t))
}

/// Periodic convolution in t, `Δt Σ_l h(t_l) f(x, t - t_l)`, computed through
/// the dual grid.
pub fn convolve_t(f: &SampledField, h: &[Complex64]) -> Result<SampledField> {
    let hh = fourier_t_samples(&f.t, h)?;
    let mut spec = forward_t(&f.values, f.nx(), &f.t);
    for row in spec.chunks_mut(hh.len()) {
        row.iter_mut().zip(&hh).for_each(|(v, w)| *v *= w);
    }
    inverse_partial_fourier_t(&PartialSpectrum { x: f.x.clone(), t: f.t.clone(), values: spec })
}

/// `f(x,t_j) = (2π)^{-d₂} Σ_m Δλ f^{λ_m}(x) e^{-iλ_m·t_j}`, the exact inverse of
/// [`partial_fourier_t`] on the grid.
pub fn inverse_partial_fourier_t(s: &PartialSpectrum) -> Result<SampledField> {
    let mut shape = vec![s.x.len()];
    shape.extend(s.t.shape());
    let mut data = s.values.clone();
    for (k, a) in s.t.axes().iter().enumerate() {
        let axis = k + 1;
        let n = a.n;
        let half = n / 2;
        let inner: usize = shape[axis + 1..].iter().product();
        for (idx, v) in data.iter_mut().enumerate() {
            let p = (idx / inner) % n;
            let m = p as i64 - half as i64;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *v *= sign / a.period;
        }
        data = reorder_axis(&data, &shape, axis, |p| (p + n - half) % n);
        fft_axis(&mut data, &shape, axis, false);
    }
    SampledField::new(s.x.clone(), s.t.clone(), data)
}

/// Points and weights on `S^{d₂-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereRule {
    pub d2: usize,
    pub order: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> Complex64) -> Complex64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| f(p) * *w).sum()
    }

    /// Groups of point indices sharing the last coordinate exactly.
    fn rings(&self) -> Vec<Vec<usize>> {
        let mut rings: Vec<(u64, Vec<usize>)> = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            let key = p[self.d2 - 1].to_bits();
            match rings.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(i),
                None => rings.push((key, vec![i])),
            }
        }
        rings.into_iter().map(|(_, v)| v).collect()
    }

    /// Smallest order resolving `e^{-iλ·t}` with `|λ||t| ≤ r` on the sphere.
    pub fn required_order(d2: usize, r: f64) -> usize {
        let n = (r + 8.0 * r.cbrt() + 16.0).ceil() as usize;
        match d2 {
            1 => 1,
            2 => n,
            _ => n.div_ceil(2),
        }
    }
}

/// `d₂ = 1`: `{±1}` with unit weights; `d₂ = 2`: `order` equispaced points;
/// `d₂ = 3`: `order` Gauss–Legendre nodes in `cos θ` times `2·order` azimuths.
pub fn sphere_rule(d2: usize, order: usize) -> Result<SphereRule> {
    if order == 0 {
        return Err(Error::InvalidArgument("sphere rule order must be positive".into()));
    }
    match d2 {
        1 => Ok(SphereRule { d2, order, points: vec![vec![-1.0], vec![1.0]], weights: vec![1.0, 1.0] }),
        2 => {
            let w = 2.0 * PI / order as f64;
            let points = (0..order)
                .map(|j| {
                    let phi = 2.0 * PI * j as f64 / order as f64;
                    vec![phi.cos(), phi.sin()]
                })
                .collect();
            Ok(SphereRule { d2, order, points, weights: vec![w; order] })
        }
        3 => {
            let (zs, wz) = gauss_legendre(order, -1.0, 1.0)?;
            let nphi = 2 * order;
            let wphi = 2.0 * PI / nphi as f64;
            let mut points = Vec::with_capacity(order * nphi);
            let mut weights = Vec::with_capacity(order * nphi);
            for (&z, &w) in zs.iter().zip(&wz) {
                let s = (1.0 - z * z).max(0.0).sqrt();
                for j in 0..nphi {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / nphi as f64;
                    points.push(vec![s * phi.cos(), s * phi.sin(), z]);
                    weights.push(w * wphi);
                }
            }
            Ok(SphereRule { d2, order, points, weights })
        }
        _ => Err(Error::InvalidArgument(format!("sphere rules exist for d2 in 1..=3, got {d2}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaInterpolation {
    /// Band-limited (zero-padding limit) interpolation of the dual-grid spectrum.
    Trigonometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionConfig {
    pub mu: f64,
    pub k_max: usize,
    /// Sphere rule order; `None` picks the smallest resolving order.
    pub sphere_order: Option<usize>,
    pub interpolation: LambdaInterpolation,
    pub support_tol: f64,
}

impl RestrictionConfig {
    pub fn new(mu: f64, k_max: usize) -> Self {
        Self {
            mu,
            k_max,
            sphere_order: None,
            interpolation: LambdaInterpolation::Trigonometric,
            support_tol: DEFAULT_SUPPORT_TOL,
        }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidArgument(format!("μ must be positive, got {}", self.mu)));
        }
        if !(self.support_tol > 0.0) {
            return Err(Error::InvalidArgument("support tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Smallest `K` with `Σ_{k>K} (2k+d₁)^{-s} < 10⁻⁴·Σ_{k≤K} (2k+d₁)^{-s}` for the
    /// level weight exponent `s = 2d₂(1/p-1/2) + (1/q-1/r)/2`, capped at `cap`.
    pub fn default_k_max(d1: usize, d2: usize, p: f64, q: f64, r: f64, cap: usize) -> usize {
        let s = 2.0 * d2 as f64 * (1.0 / p - 0.5) + 0.5 * (1.0 / q - 1.0 / r);
        if s <= 1.0 {
            return cap;
        }
        let w = |k: usize| (2.0 * k as f64 + d1 as f64).powf(-s);
        let mut partial = 0.0;
        for k in 0..=cap {
            partial += w(k);
            // integral bound of the tail: ∫_k^∞ (2x+d₁)^{-s} dx
            let tail = (2.0 * k as f64 + d1 as f64).powf(1.0 - s) / (2.0 * (s - 1.0));
            if tail < 1e-4 * partial {
                return k;
            }
        }
        cap
    }
}

/// `𝓟_μ f` with per-level diagnostics.
#[derive(Debug, Clone)]
pub struct RestrictionOutput {
    pub field: SampledField,
    /// L² norm of each level-`k` term.
    pub level_norms: Vec<f64>,
    /// Geometric extrapolation of the omitted levels `k > K_max`. Equal to the last
    /// level norm when that is negligible, infinite when the last two levels do
    /// not decrease.
    pub tail_estimate: f64,
    pub sphere_points: usize,
}

/// `𝓟_μ f(x,t) = (2π)^{-d₂} Σ_{k≤K} μ^{d₂-1}/(2k+d₁)^{d₂} ∫_S P_k(a_k) f^{a_kε}(x) e^{-ia_k t·ε} dσ(ε)`,
/// `a_k = μ/(2k+d₁)`.
///
/// For every level the field is projected onto `Φ^{a_k}_ν`, `|ν| = k`, in x; the
/// resulting t-profiles are transformed exactly at the sphere points (the
/// band-limited continuation of the dual-grid spectrum) and synthesized back.
/// Levels are computed in parallel and summed in increasing `k`.
pub fn restriction_apply(f: &SampledField, cfg: &RestrictionConfig) -> Result<RestrictionOutput> {
    cfg.validate()?;
    f.check_support(cfg.support_tol)?;
    let d1 = f.d1();
    let d2 = f.d2();
    let a0 = cfg.mu / d1 as f64;
    let r = 2.0 * a0 * f.t.half_diagonal();
    let needed = SphereRule::required_order(d2, r);
    let order = match cfg.sphere_order {
        Some(o) if o < needed => {
            return Err(Error::Unresolved(format!(
                "sphere rule order {o} below the {needed} required at |λ||t| ≤ {r:.2}"
            )))
        }
        Some(o) => o,
        None => needed,
    };
    let rule = sphere_rule(d2, order)?;
    for p in &rule.points {
        let lam: Vec<f64> = p.iter().map(|e| a0 * e).collect();
        check_band(&f.t, &lam)?;
    }
    let rings = rule.rings();

    let levels: Vec<(ScaledBasis, Vec<Complex64>, f64)> = (0..=cfg.k_max)
        .into_par_iter()
        .map(|k| restriction_level(f, cfg.mu, k, &rule, &rings))
        .collect::<Result<Vec<_>>>()?;

    let nt = f.nt();
    let mut out = vec![ZERO; f.nx() * nt];
    let mut level_norms = Vec::with_capacity(levels.len());
    for (basis, coeffs, norm) in &levels {
        let term = basis.synthesize(coeffs, nt);
        out.iter_mut().zip(&term).for_each(|(o, t)| *o += t);
        level_norms.push(*norm);
    }
    let tail_estimate = match level_norms.len() {
        0 | 1 => 0.0,
        n => {
            let (prev, last) = (level_norms[n - 2], level_norms[n - 1]);
            let peak = level_norms.iter().cloned().fold(0.0, f64::max);
            if last <= 1e-8 * peak {
                last
            } else if last < prev {
                let q = last / prev;
                last * q / (1.0 - q)
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(RestrictionOutput {
        field: SampledField::new(f.x.clone(), f.t.clone(), out)?,
        level_norms,
        tail_estimate,
        sphere_points: rule.len(),
    })
}

/// One level: basis at `a_k`, box coefficients of `Σ_{|ν|=k} Φ_ν ⊗ T_ν` and the
/// L² norm of the term.
fn restriction_level(
    f: &SampledField,
    mu: f64,
    k: usize,
    rule: &SphereRule,
    rings: &[Vec<usize>],
) -> Result<(ScaledBasis, Vec<Complex64>, f64)> {
    let d1 = f.d1();
    let d2 = f.d2();
    let level = (2 * k + d1) as f64;
    let a = mu / level;
    check_resolution(&f.x, k, a)?;
    let basis = ScaledBasis::new(a, k, &f.x)?;
    let nt = f.nt();
    let mut coeffs = basis.analyze(&f.x, &f.values, nt);
    let degrees = basis.box_degrees();
    let pref = (2.0 * PI).powi(-(d2 as i32)) * mu.powi(d2 as i32 - 1) / level.powi(d2 as i32);
    let lambdas: Vec<Vec<f64>> = rule.points.iter().map(|p| p.iter().map(|e| a * e).collect()).collect();
    let dt = f.t.cell_volume();
    let mut norm2 = 0.0;
    for (row, &deg) in coeffs.chunks_mut(nt).zip(&degrees) {
        if deg != k {
            row.iter_mut().for_each(|v| *v = ZERO);
            continue;
        }
        let spectrum = dtft_rings(row, &f.t, rings, &lambdas);
        let weighted: Vec<Complex64> = spectrum
            .iter()
            .zip(&rule.weights)
            .map(|(c, w)| c * (w * pref * dt))
            .collect();
        let synth = synth_rings(&weighted, &f.t, rings, &lambdas);
        norm2 += synth.iter().map(|v| v.norm_sqr()).sum::<f64>() * dt;
        row.copy_from_slice(&synth);
    }
    Ok((basis, coeffs, norm2.sqrt()))
}

fn axis_phases(a: &PeriodicAxis, l: f64, sign: f64) -> Vec<Complex64> {
    (0..a.n).map(|j| Complex64::from_polar(1.0, sign * l * a.node(j))).collect()
}

/// `Σ_t data[t]·e^{iλ_s·t}` for every λ_s, sharing the last-axis contraction
/// within each ring.
fn dtft_rings(data: &[Complex64], t: &PeriodicGrid, rings: &[Vec<usize>], lambdas: &[Vec<f64>]) -> Vec<Complex64> {
    let d2 = t.dim();
    let axes = t.axes();
    let last = axes[d2 - 1];
    let rest = data.len() / last.n;
    let mut out = vec![ZERO; lambdas.len()];
    for ring in rings {
        let e_last = axis_phases(&last, lambdas[ring[0]][d2 - 1], 1.0);
        let reduced: Vec<Complex64> = data
            .chunks(last.n)
            .map(|line| line.iter().zip(&e_last).map(|(v, e)| v * e).sum())
            .collect();
        debug_assert_eq!(reduced.len(), rest);
        for &s in ring {
            let mut cur = reduced.clone();
            for ax in (0..d2 - 1).rev() {
                let e = axis_phases(&axes[ax], lambdas[s][ax], 1.0);
                cur = cur
                    .chunks(axes[ax].n)
                    .map(|line| line.iter().zip(&e).map(|(v, e)| v * e).sum())
                    .collect();
            }
            out[s] = cur[0];
        }
    }
    out
}

/// `Σ_s c_s·e^{-iλ_s·t}` on the t-grid, building the leading-axis product per
/// ring before expanding along the last axis.
fn synth_rings(c: &[Complex64], t: &PeriodicGrid, rings: &[Vec<usize>], lambdas: &[Vec<f64>]) -> Vec<Complex64> {
    let d2 = t.dim();
    let axes = t.axes();
    let last = axes[d2 - 1];
    let rest: usize = axes[..d2 - 1].iter().map(|a| a.n).product();
    let mut out = vec![ZERO; rest * last.n];
    for ring in rings {
        let mut lead = vec![ZERO; rest];
        for &s in ring {
            let mut prod = vec![c[s]];
            for ax in 0..d2 - 1 {
                let e = axis_phases(&axes[ax], lambdas[s][ax], -1.0);
                prod = prod.iter().flat_map(|&u| e.iter().map(move |&v| u * v)).collect();
            }
            lead.iter_mut().zip(&prod).for_each(|(l, p)| *l += p);
        }
        let e_last = axis_phases(&last, lambdas[ring[0]][d2 - 1], -1.0);
        for (chunk, l) in out.chunks_mut(last.n).zip(&lead) {
            chunk.iter_mut().zip(&e_last).for_each(|(o, e)| *o += l * e);
        }
    }
    out
}

/// `(h ∗ \widehat{dσ_r})(t) = r^{d₂-1} ∫_{S^{d₂-1}} ĥ(rε) e^{-irε·t} dσ(ε)` on the
/// t-grid, with `ĥ` the band-limited transform of the samples and
/// `\widehat{dσ_r}(t) = ∫_{|ω|=r} e^{-it·ω} dσ_r(ω)`.
pub fn sphere_convolution(t: &PeriodicGrid, h: &[Complex64], radius: f64, rule: &SphereRule) -> Result<Vec<Complex64>> {
    if h.len() != t.len() {
        return Err(Error::GridMismatch(format!("{} samples for a t-grid of {}", h.len(), t.len())));
    }
    if rule.d2 != t.dim() {
        return Err(Error::GridMismatch(format!("sphere rule in dimension {}, t-grid in {}", rule.d2, t.dim())));
    }
    let lambdas: Vec<Vec<f64>> = rule.points.iter().map(|p| p.iter().map(|e| radius * e).collect()).collect();
    for l in &lambdas {
        check_band(t, l)?;
    }
    let rings = rule.rings();
    let dt = t.cell_volume();
    let surface = radius.powi(t.dim() as i32 - 1);
    let spectrum = dtft_rings(h, t, &rings, &lambdas);
    let weighted: Vec<Complex64> = spectrum.iter().zip(&rule.weights).map(|(c, w)| c * (w * dt * surface)).collect();
    Ok(synth_rings(&weighted, t, &rings, &lambdas))
}

/// `\widehat{dσ_r}(t) = r^{d₂-1} Σ_s w_s e^{-irε_s·t}` at a single point.
pub fn sphere_measure_transform(t: &[f64], radius: f64, rule: &SphereRule) -> Complex64 {
    let surface = radius.powi(rule.d2 as i32 - 1);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(e, w)| {
            let ph: f64 = e.iter().zip(t).map(|(u, v)| u * v).sum();
            Complex64::from_polar(w * surface, -radius * ph)
        })
        .sum()
}

/// Quadrature in μ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MuQuadrature {
    pub fn gauss_legendre(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::InvalidArgument(format!("μ-interval must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
        }
        let (nodes, weights) = gauss_legendre(n, lo, hi)?;
        Ok(Self { nodes, weights })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthesisKind {
    /// `Σ w_i 𝓟_{μ_i} f`, approximating `f`.
    Identity,
    /// `Σ μ_i w_i 𝓟_{μ_i} f`, approximating `Lf`.
    Grushin,
}

/// Quadrature of `∫ 𝓟_μ f dμ` or `∫ μ 𝓟_μ f dμ` over `mu`.
pub fn spectral_synthesis(
    f: &SampledField,
    mu: &MuQuadrature,
    template: &RestrictionConfig,
    kind: SynthesisKind,
) -> Result<SampledField> {
    let mut acc = SampledField::zeros(f.x.clone(), f.t.clone())?;
    for (&m, &w) in mu.nodes.iter().zip(&mu.weights) {
        let p = restriction_apply(f, &template.with_mu(m))?;
        let c = match kind {
            SynthesisKind::Identity => w,
            SynthesisKind::Grushin => w * m,
        };
        acc.add_scaled(&p.field, Complex64::new(c, 0.0))?;
    }
    Ok(acc)
}

/// `Lf = -Δ_x f - |x|²Δ_t f` by second-order centered differences: zero
/// extension across the x-boundary, periodic wrap in t.
pub fn grushin_apply_fd(f: &SampledField) -> Result<SampledField> {
    let xs = f.x.shape();
    let ts = f.t.shape();
    let nt = f.nt();
    let hx: Vec<f64> = f
        .x
        .axes()
        .iter()
        .map(|q| q.spacing().expect("field x-grids are uniform"))
        .collect();
    let r2 = f.x.radii_squared();
    let mut out = vec![ZERO; f.values.len()];
    let t_strides: Vec<usize> = (0..ts.len()).map(|ax| ts[ax + 1..].iter().product()).collect();
    let x_strides: Vec<usize> = (0..xs.len()).map(|ax| xs[ax + 1..].iter().product()).collect();
    out.par_chunks_mut(nt).enumerate().for_each(|(ix, row)| {
        let xi = f.x.unflatten(ix);
        for (it, o) in row.iter_mut().enumerate() {
            let c = f.values[ix * nt + it];
            let mut lap_x = ZERO;
            for ax in 0..xs.len() {
                let left = if xi[ax] > 0 { f.values[(ix - x_strides[ax]) * nt + it] } else { ZERO };
                let right = if xi[ax] + 1 < xs[ax] { f.values[(ix + x_strides[ax]) * nt + it] } else { ZERO };
                lap_x += (left + right - c * 2.0) / (hx[ax] * hx[ax]);
            }
            let ti = f.t.unflatten(it);
            let mut lap_t = ZERO;
            for ax in 0..ts.len() {
                let n = ts[ax];
                let s = t_strides[ax];
                let j = ti[ax];
                let left_it = if j > 0 { it - s } else { it + (n - 1) * s };
                let right_it = if j + 1 < n { it + s } else { it - (n - 1) * s };
                let h = f.t.axes()[ax].spacing();
                lap_t += (f.values[ix * nt + left_it] + f.values[ix * nt + right_it] - c * 2.0) / (h * h);
            }
            *o = -lap_x - lap_t * r2[ix];
        }
    });
    SampledField::new(f.x.clone(), f.t.clone(), out)
}

/// Flat `(x, t)` positions excluding a `margin`-cell ring at the x-boundary and
/// at both ends of every t-axis.
pub fn interior_positions(f: &SampledField, margin: usize) -> Vec<bool> {
    let xs = f.x.shape();
    let ts = f.t.shape();
    let nt = f.nt();
    let mut mask = vec![false; f.values.len()];
    for ix in 0..f.nx() {
        let xin = f.x.unflatten(ix).iter().zip(&xs).all(|(&i, &n)| i >= margin && i + margin < n);
        if !xin {
            continue;
        }
        for it in 0..nt {
            let tin = f.t.unflatten(it).iter().zip(&ts).all(|(&j, &n)| j >= margin && j + margin < n);
            mask[ix * nt + it] = tin;
        }
    }
    mask
}

/// `||u - c·v|| / ||c·v||` over the masked positions, with `x`-quadrature weights.
pub fn masked_relative_residual(u: &SampledField, v: &SampledField, c: f64, mask: &[bool]) -> f64 {
    let wx = u.x.weights();
    let nt = u.nt();
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, (&a, &b)) in u.values.iter().zip(&v.values).enumerate() {
        if !mask[i] {
            continue;
        }
        let w = wx[i / nt];
        num += w * (a - b * c).norm_sqr();
        den += w * (b * c).norm_sqr();
    }
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_field(d2: usize) -> SampledField {
        let x = TensorGrid::uniform(1, 29, 7.0).unwrap();
        let t = PeriodicGrid::uniform(d2, 32, 24.0).unwrap();
        SampledField::from_fn(x, t, |x, t| {
            let r2: f64 = t.iter().map(|v| v * v).sum();
            Complex64::new((-x[0] * x[0] / 2.0 - r2 / 2.0).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn gaussian_fourier_pair() {
        let f = gaussian_field(1);
        let s = partial_fourier_t(&f).unwrap();
        let xg = f.x_grid().clone();
        for ix in [3usize, 12] {
            let g = (-xg.point(ix)[0].powi(2) / 2.0).exp();
            for p in [10usize, 16, 20] {
                let l = s.lambda(p)[0];
                let e = g * (2.0 * PI).sqrt() * (-l * l / 2.0).exp();
                assert!((s.value(ix, p) - e).norm() < 1e-9, "p={p} got {} want {e}", s.value(ix, p));
            }
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for d2 in 1..=3 {
            let f = gaussian_field(d2);
            let back = inverse_partial_fourier_t(&partial_fourier_t(&f).unwrap()).unwrap();
            let err = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10 * f.max_abs(), "d2={d2} err={err}");
        }
    }

    #[test]
    fn interpolation_hits_grid_values_and_closed_form() {
        let f = gaussian_field(1);
        let s = partial_fourier_t(&f).unwrap();
        let on_grid = s.interpolate(&s.lambda(19)).unwrap();
        assert!((on_grid[5] - s.value(5, 19)).norm() < 1e-12);
        let v = s.interpolate(&[0.37]).unwrap();
        let g = (-f.x_grid().point(5)[0].powi(2) / 2.0).exp();
        assert!((v[5] - g * (2.0 * PI).sqrt() * (-0.37f64 * 0.37 / 2.0).exp()).norm() < 1e-9);
        assert!(matches!(s.interpolate(&[9.0]), Err(Error::FrequencyOutOfRange(_))));
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let x = TensorGrid::uniform(1, 3, 1.0).unwrap();
        let t = PeriodicGrid::uniform(1, 8, 4.0).unwrap();
        let f = SampledField::from_fn(x, t.clone(), |x, t| Complex64::new(x[0] + t[0] * t[0], t[0])).unwrap();
        let h: Vec<Complex64> = (0..8).map(|j| Complex64::new(j as f64 * 0.3 - 1.0, 0.1 * j as f64)).collect();
        let c = convolve_t(&f, &h).unwrap();
        let dt = t.cell_volume();
        for ix in 0..3 {
            for j in 0..8 {
                let direct: Complex64 = (0..8).map(|l| h[l] * f.value(ix, (j + 8 - l + 4) % 8) * dt).sum();
                assert!((c.value(ix, j) - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn support_violation_is_rejected() {
        let x = TensorGrid::uniform(1, 16, 2.0).unwrap();
        let t = PeriodicGrid::uniform(1, 16, 4.0).unwrap();
        let f = SampledField::from_fn(x, t, |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(partial_fourier_t(&f), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn odd_counts_are_rejected() {
        assert!(PeriodicGrid::uniform(1, 15, 2.0).is_err());
    }

    #[test]
    fn sphere_rules() {
        let s1 = sphere_rule(1, 1).unwrap();
        assert_eq!(s1.points, vec![vec![-1.0], vec![1.0]]);
        assert_eq!(s1.total_weight(), 2.0);
        assert_relative_eq!(sphere_rule(2, 17).unwrap().total_weight(), 2.0 * PI, max_relative = 1e-12);
        let s3 = sphere_rule(3, 6).unwrap();
        assert_relative_eq!(s3.total_weight(), 4.0 * PI, max_relative = 1e-12);
        let m = s3.integrate(|e| Complex64::new(e[2] * e[2], 0.0)).re;
        assert!((m - 4.0 * PI / 3.0).abs() < 1e-10);
        assert!(sphere_rule(4, 3).is_err());
    }

    #[test]
    fn zero_field_restricts_to_zero() {
        let x = TensorGrid::uniform(1, 29, 7.0).unwrap();
        let t = PeriodicGrid::uniform(1, 32, 24.0).unwrap();
        let f = SampledField::zeros(x, t).unwrap();
        let out = restriction_apply(&f, &RestrictionConfig::new(1.0, 1)).unwrap();
        assert_eq!(out.field.max_abs(), 0.0);
    }

    #[test]
    fn fd_ground_state_eigenrelation() {
        // Φ^1_0(x)e^{-it} has eigenvalue 1, Φ^2_0(x)e^{-2it} has eigenvalue 2
        for a in [1.0f64, 2.0] {
            let x = TensorGrid::uniform(1, 257, 8.0).unwrap();
            let t = PeriodicGrid::uniform(1, 256, 2.0 * PI).unwrap();
            let f = SampledField::from_fn(x, t, |x, t| {
                Complex64::from_polar(a.powf(0.25) * (-a * x[0] * x[0] / 2.0).exp(), -a * t[0])
            })
            .unwrap();
            let lf = grushin_apply_fd(&f).unwrap();
            let mask = interior_positions(&f, 1);
            let res = masked_relative_residual(&lf, &f, a, &mask);
            assert!(res < 2e-3, "a={a} residual={res}");
        }
    }

    #[test]
    fn default_k_max_behaviour() {
        assert_eq!(RestrictionConfig::default_k_max(1, 1, 1.0, 2.0, 2.0, 40), 40);
        let k = RestrictionConfig::default_k_max(1, 3, 1.0, 2.0, 2.0, 400);
        assert!(k > 0 && k < 400);
    }
}
