//! Knapp-type fields whose restriction `𝓟₁f` has a closed form.
//!
//! `f(x,t) = ∫ φ(λ)ĥ(λ)e^{-|λ||x|²/2}e^{-i⟨λ,t⟩}|λ|^n dλ` with `φ(λ) = ψ(|λ|)`,
//! so `f^λ(x) = (2π)^{d₂}ψ(|λ|)ĥ(λ)c|λ|^n e^{-|λ||x|²/2}` (`c = 1` for the display
//! above). Only the ground state of `H(|λ|)` is present, so `𝓟_μ f` keeps the
//! `k = 0` level alone.

use std::collections::HashMap;
use std::f64::consts::PI;

use grushin_core::norms::least_squares;
use grushin_core::quadrature::{Quadrature1D, TensorGrid};
use grushin_core::restriction::{
    convolve_t, inverse_partial_fourier_t, restriction_apply, PartialSpectrum, PeriodicGrid, RestrictionConfig, RestrictionOutput,
    SampledField,
};
use grushin_core::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Smooth cutoff `ψ(s) = exp(-ln²(s/s_c)/(2σ²))·χ(|ln(s/s_c)|)`, `s_c` the centre.
///
/// `χ` is a `C^∞` switch equal to 1 while the bump exceeds `10⁻³⁰` and to 0 one
/// `σ` further out, so `ψ` vanishes on `(0, s₀]` and beyond `s₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psi {
    pub center: f64,
    pub sigma: f64,
}

impl Psi {
    pub fn new(center: f64, sigma: f64) -> Result<Self> {
        if !(center > 0.0 && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("cutoff needs a positive centre and width, got {center}, {sigma}")));
        }
        Ok(Self { center, sigma })
    }

    fn inner_log(&self) -> f64 {
        self.sigma * (2.0 * 30.0 * std::f64::consts::LN_10).sqrt()
    }

    fn outer_log(&self) -> f64 {
        self.inner_log() + self.sigma
    }

    /// `(s₀, s₁)`: `ψ = 0` outside `(s₀, s₁)`.
    pub fn support(&self) -> (f64, f64) {
        let l = self.outer_log();
        (self.center * (-l).exp(), self.center * l.exp())
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let u = (s / self.center).ln();
        let au = u.abs();
        let (l1, l2) = (self.inner_log(), self.outer_log());
        if au >= l2 {
            return 0.0;
        }
        let bump = (-u * u / (2.0 * self.sigma * self.sigma)).exp();
        if au <= l1 {
            return bump;
        }
        let bridge = |v: f64| if v > 0.0 { (-1.0 / v).exp() } else { 0.0 };
        let a = bridge((l2 - au) / self.sigma);
        let b = bridge((au - l1) / self.sigma);
        bump * a / (a + b)
    }
}

/// `h(t) = A·exp(-|t|²/(2w²))` with `ĥ(λ) = ∫h(t)e^{iλ·t}dt = A(2πw²)^{d₂/2}e^{-w²|λ|²/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub amplitude: f64,
    pub width: f64,
}

impl GaussianProfile {
    pub fn eval(&self, t: &[f64]) -> f64 {
        let r2: f64 = t.iter().map(|v| v * v).sum();
        self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
    }

    pub fn transform(&self, lambda: &[f64]) -> f64 {
        let d2 = lambda.len() as f64;
        let l2: f64 = lambda.iter().map(|v| v * v).sum();
        self.amplitude * (2.0 * PI * self.width * self.width).powf(0.5 * d2) * (-0.5 * self.width * self.width * l2).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnappInputs {
    pub d1: usize,
    pub d2: usize,
    pub psi: Psi,
    pub h: GaussianProfile,
    /// Exponent of the `|λ|^n` weight.
    pub n: f64,
    /// Constant `c` multiplying the weight.
    pub weight_constant: f64,
}

impl KnappInputs {
    /// Cutoff centred at `1/d₁` with log-width `0.3`, `h` of unit amplitude and
    /// width `1`, and `n = d₁`.
    pub fn standard(d1: usize, d2: usize) -> Result<Self> {
        if !(1..=3).contains(&d1) || !(1..=3).contains(&d2) {
            return Err(Error::InvalidArgument(format!("dimensions must lie in 1..=3, got ({d1}, {d2})")));
        }
        Ok(Self {
            d1,
            d2,
            psi: Psi::new(1.0 / d1 as f64, 0.3)?,
            h: GaussianProfile { amplitude: 1.0, width: 1.0 },
            n: d1 as f64,
            weight_constant: 1.0,
        })
    }

    pub fn with_weight(self, n: f64, c: f64) -> Self {
        Self { n, weight_constant: c, ..self }
    }

    fn check_grids(&self, x: &TensorGrid, t: &PeriodicGrid) -> Result<()> {
        if x.dim() != self.d1 || t.dim() != self.d2 {
            return Err(Error::GridMismatch(format!(
                "grids are ({}, {})-dimensional, inputs ({}, {})",
                x.dim(),
                t.dim(),
                self.d1,
                self.d2
            )));
        }
        let reach = self.spectral_reach(1e-16);
        let nyq = t.axes().iter().map(|a| a.nyquist()).fold(f64::INFINITY, f64::min);
        if reach > nyq {
            return Err(Error::Unresolved(format!(
                "the spectrum exceeds 1e-16 of its peak up to |λ| = {reach:.3}, beyond the dual-grid limit {nyq:.3}"
            )));
        }
        Ok(())
    }

    /// Largest `|λ|` where `ψ(|λ|)|ĥ(λ)||λ|^n` exceeds `tol` times its peak.
    pub fn spectral_reach(&self, tol: f64) -> f64 {
        self.spectral_band(tol).1
    }

    /// Smallest and largest `|λ|` where `ψ(|λ|)|ĥ(λ)||λ|^n` exceeds `tol` times its peak.
    pub fn spectral_band(&self, tol: f64) -> (f64, f64) {
        let (s0, s1) = self.psi.support();
        let steps = 4000;
        let envelope = |rho: f64| {
            let mut e = vec![0.0; self.d2];
            e[0] = rho;
            self.psi.eval(rho) * self.h.transform(&e).abs() * rho.powf(self.n)
        };
        let rhos: Vec<f64> = (0..=steps).map(|i| s0 * (s1 / s0).powf(i as f64 / steps as f64)).collect();
        let vals: Vec<f64> = rhos.iter().map(|&r| envelope(r)).collect();
        let peak = vals.iter().cloned().fold(0.0, f64::max);
        let above = rhos.iter().zip(&vals).filter(|(_, &v)| v > tol * peak).map(|(&r, _)| r);
        above.fold((f64::INFINITY, 0.0), |(lo, hi), r| (lo.min(r), hi.max(r)))
    }

    /// `f^λ(x)` of the direct construction.
    pub fn spectrum(&self, x: &[f64], lambda: &[f64]) -> Complex64 {
        let rho = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
        let psi = self.psi.eval(rho);
        if psi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let v = (2.0 * PI).powi(self.d2 as i32)
            * psi
            * self.h.transform(lambda)
            * self.weight_constant
            * rho.powf(self.n)
            * (-0.5 * rho * r2).exp();
        Complex64::new(v, 0.0)
    }
}

/// `f` by trapezoid quadrature in `λ` on the dual grid of `t`.
pub fn knapp_direct(inputs: &KnappInputs, x: &TensorGrid, t: &PeriodicGrid) -> Result<SampledField> {
    inputs.check_grids(x, t)?;
    let s = PartialSpectrum::from_fn(x.clone(), t.clone(), |xp, l| inputs.spectrum(xp, l))?;
    inverse_partial_fourier_t(&s)
}

/// `∫_{R^{d₁}} e^{-|ξ|²/(2ρ)} e^{-iξ·x} dξ` by a tensor trapezoid rule in `ξ`.
fn xi_integral(rho: f64, x: &[f64], nodes: &[f64], h: f64) -> f64 {
    // the integrand is even in each ξ_j, so the imaginary part cancels
    x.iter()
        .map(|&xj| nodes.iter().map(|&u| h * (-u * u / (2.0 * rho)).exp() * (u * xj).cos()).sum::<f64>())
        .product()
}

fn xi_rule(rho: f64) -> (Vec<f64>, f64) {
    let half = (2.0 * rho * 40.0).sqrt();
    let n = 257usize;
    let h = 2.0 * half / (n - 1) as f64;
    ((0..n).map(|i| -half + i as f64 * h).collect(), h)
}

/// `g` from `ĝ(ξ,λ) = φ(λ)e^{-|ξ|²/(2|λ|)}`: `g^λ(x) = (2π)^{-d₁}∫ĝ(ξ,λ)e^{-iξ·x}dξ`
/// by quadrature in `ξ`, then trapezoid quadrature in `λ`.
pub fn knapp_profile_g(inputs: &KnappInputs, x: &TensorGrid, t: &PeriodicGrid) -> Result<SampledField> {
    inputs.check_grids(x, t)?;
    let d1 = inputs.d1;
    let xs = x.points();
    let mut cache: HashMap<u64, Vec<f64>> = HashMap::new();
    let mut values = vec![Complex64::new(0.0, 0.0); xs.len() * t.len()];
    let nt = t.len();
    for p in 0..nt {
        let l = t.dual_point(p);
        let rho = l.iter().map(|v| v * v).sum::<f64>().sqrt();
        let psi = inputs.psi.eval(rho);
        if psi == 0.0 {
            continue;
        }
        let column = cache.entry(rho.to_bits()).or_insert_with(|| {
            let (nodes, h) = xi_rule(rho);
            xs.iter().map(|xp| (2.0 * PI).powi(-(d1 as i32)) * xi_integral(rho, xp, &nodes, h)).collect()
        });
        for (ix, v) in column.iter().enumerate() {
            values[ix * nt + p] = Complex64::new(psi * v, 0.0);
        }
    }
    inverse_partial_fourier_t(&PartialSpectrum::new(x.clone(), t.clone(), values)?)
}

/// `h ∗_t g` by periodic convolution of samples.
pub fn knapp_factored(inputs: &KnappInputs, x: &TensorGrid, t: &PeriodicGrid) -> Result<SampledField> {
    let g = knapp_profile_g(inputs, x, t)?;
    let h: Vec<Complex64> = t.points().iter().map(|tp| Complex64::new(inputs.h.eval(tp), 0.0)).collect();
    convolve_t(&g, &h)
}

/// Power law `c·ρ^n` fitted to the numerical `ξ`-integral of the stated
/// transform, expressed in the normalization of [`KnappInputs::spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightCalibration {
    pub n: f64,
    pub constant: f64,
    pub residual: f64,
}

pub fn calibrate_weight(inputs: &KnappInputs) -> WeightCalibration {
    let d1 = inputs.d1;
    let d2 = inputs.d2;
    let c0 = inputs.psi.center;
    let origin = vec![0.0; d1];
    let samples: Vec<(f64, f64)> = (0..9)
        .map(|i| {
            let rho = c0 * 2f64.powf(-1.0 + 0.25 * i as f64);
            let (nodes, h) = xi_rule(rho);
            let g = (2.0 * PI).powi(-(d1 as i32)) * xi_integral(rho, &origin, &nodes, h);
            (rho.ln(), (g / (2.0 * PI).powi(d2 as i32)).ln())
        })
        .collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (n, b, residual) = least_squares(&xs, &ys);
    WeightCalibration { n, constant: b.exp(), residual }
}

/// `∫_{S^{d₂-1}} e^{-iτ e·ε} dσ(ε)` for any unit `e`.
pub fn sphere_plane_wave(d2: usize, tau: f64) -> f64 {
    match d2 {
        1 => 2.0 * tau.cos(),
        2 => 2.0 * PI * libm::j0(tau),
        _ => {
            if tau.abs() < 1e-8 {
                4.0 * PI * (1.0 - tau * tau / 6.0)
            } else {
                4.0 * PI * tau.sin() / tau
            }
        }
    }
}

/// `d₁^{-d₁-d₂}e^{-|x|²/(2d₁)}·(h ∗ \widehat{dσ_{1/d₁}})(t)` for Gaussian `h`,
/// where `\widehat{dσ_r}(t) = ∫_{|ω|=r} e^{-it·ω}dσ_r(ω)`.
pub fn knapp_closed_form(inputs: &KnappInputs, x: &TensorGrid, t: &PeriodicGrid) -> Result<SampledField> {
    let d1 = inputs.d1 as f64;
    let d2 = inputs.d2;
    let r = 1.0 / d1;
    let mut e = vec![0.0; d2];
    e[0] = r;
    let h_r = inputs.h.transform(&e);
    let pref = d1.powf(-d1 - d2 as f64) * r.powi(d2 as i32 - 1) * h_r;
    SampledField::from_fn(x.clone(), t.clone(), |xp, tp| {
        let r2: f64 = xp.iter().map(|v| v * v).sum();
        let tn = tp.iter().map(|v| v * v).sum::<f64>().sqrt();
        Complex64::new(pref * (-r2 / (2.0 * d1)).exp() * sphere_plane_wave(d2, r * tn), 0.0)
    })
}

/// A uniform x-grid wide enough for the Gaussians `e^{-ρ|x|²/2}` on the cutoff
/// support and fine enough for the level-`k_max` checks at `μ = d₁`.
pub fn knapp_x_grid(inputs: &KnappInputs, n: usize, half_width: f64) -> Result<TensorGrid> {
    TensorGrid::new(vec![Quadrature1D::uniform(n, half_width)?; inputs.d1])
}

/// `f_s(x,t) = f(sx, s²t)` sampled on the correspondingly shrunk grids.
pub fn dilate_grids(x: &TensorGrid, t: &PeriodicGrid, s: f64) -> (TensorGrid, PeriodicGrid) {
    (x.scaled(1.0 / s), t.scaled(1.0 / (s * s)))
}

/// The three constructions of a Knapp field and the checks that tie them together.
#[derive(Debug, Clone)]
pub struct KnappBuild {
    /// `f` by direct `λ`-quadrature with the weight of the inputs.
    pub direct: SampledField,
    pub calibration: WeightCalibration,
    /// `f` by direct quadrature with the calibrated weight `c·|λ|^n`.
    pub calibrated: SampledField,
    /// `h ∗_t g`.
    pub factored: SampledField,
    /// `||calibrated - factored||₂ / ||factored||₂`.
    pub route_deviation: f64,
    pub closed_form: SampledField,
    /// `𝓟₁` applied to `direct`.
    pub restricted: RestrictionOutput,
    /// `max|𝓟₁f - closed form| / max|closed form|`.
    pub closed_form_deviation: f64,
    /// L² norm of the `k > 0` levels of `𝓟₁f` over that of `k = 0`.
    pub excited_fraction: f64,
}

fn relative_l2(a: &SampledField, b: &SampledField) -> f64 {
    let num: f64 = a.values().iter().zip(b.values()).map(|(u, v)| (u - v).norm_sqr()).sum();
    let den: f64 = b.values().iter().map(|v| v.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn relative_max(a: &SampledField, b: &SampledField) -> f64 {
    let num = a.values().iter().zip(b.values()).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    let den = b.max_abs();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Builds `f` by both routes, calibrates the weight, and compares `𝓟₁f` from the
/// restriction pipeline (levels `k ≤ k_max`) with the closed form.
pub fn knapp_build(inputs: &KnappInputs, x: &TensorGrid, t: &PeriodicGrid, k_max: usize) -> Result<KnappBuild> {
    let direct = knapp_direct(inputs, x, t)?;
    let calibration = calibrate_weight(inputs);
    let calibrated = knapp_direct(&inputs.with_weight(calibration.n, calibration.constant), x, t)?;
    let factored = knapp_factored(inputs, x, t)?;
    let route_deviation = relative_l2(&calibrated, &factored);
    let closed_form = knapp_closed_form(inputs, x, t)?;
    let restricted = restriction_apply(&direct, &RestrictionConfig::new(1.0, k_max))?;
    let closed_form_deviation = relative_max(&restricted.field, &closed_form);
    let ground = restricted.level_norms[0];
    let excited = restricted.level_norms[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    let excited_fraction = if ground > 0.0 { excited / ground } else { excited };
    Ok(KnappBuild {
        direct,
        calibration,
        calibrated,
        factored,
        route_deviation,
        closed_form,
        restricted,
        closed_form_deviation,
        excited_fraction,
    })
}
