//! μ-scaling of `𝓟_μ` on dilation families and on a fixed test function.

use std::f64::consts::PI;

use grushin_core::norms::{fit_scaling_exponent, input_norm, output_norm, predicted_exponent, ExponentFitReport, FitTolerance, MixedNormParams};
use grushin_core::quadrature::TensorGrid;
use grushin_core::restriction::{inverse_partial_fourier_t, restriction_apply, PartialSpectrum, PeriodicGrid, RestrictionConfig, SampledField};
use grushin_core::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::knapp::{dilate_grids, knapp_direct, GaussianProfile, KnappInputs};

/// Uniform grids for the base (`μ = 1`) member of a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseGrids {
    /// Points per x-axis.
    pub nx: usize,
    pub x_half_width: f64,
    /// Points per t-axis.
    pub nt: usize,
    pub t_period: f64,
}

impl BaseGrids {
    pub fn build(&self, d1: usize, d2: usize) -> Result<(TensorGrid, PeriodicGrid)> {
        Ok((TensorGrid::uniform(d1, self.nx, self.x_half_width)?, PeriodicGrid::uniform(d2, self.nt, self.t_period)?))
    }
}

/// How the members `f_μ(x,t) = f(√μ x, μt)` are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilySampling {
    /// Every member on the same grids, from its own spectrum.
    Fixed,
    /// Member `μ` on the base grids shrunk by `1/√μ` in x and `1/μ` in t.
    Adapted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationCase {
    pub d1: usize,
    pub d2: usize,
    pub params: MixedNormParams,
    pub mus: Vec<f64>,
    pub k_max: usize,
    pub support_tol: f64,
    pub grids: BaseGrids,
    pub sampling: FamilySampling,
    /// Width of the Gaussian `h`.
    pub h_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub mu: f64,
    pub input_norm: f64,
    pub output_norm: f64,
    /// `output_norm / input_norm`.
    pub ratio: f64,
    pub level_norms: Vec<f64>,
    pub tail_estimate: f64,
    pub boundary_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationOutcome {
    pub case: DilationCase,
    pub rows: Vec<ScalingRow>,
    /// Fit of `ln ratio` against `ln μ`.
    pub fit: ExponentFitReport,
}

/// Samples of `f(sx, s²t)` from `f^λ_s(x) = s^{-2d₂} f^{λ/s²}(sx)`.
pub fn dilated_knapp_fixed(inputs: &KnappInputs, x: &TensorGrid, t: &PeriodicGrid, s: f64) -> Result<SampledField> {
    let reach = inputs.spectral_reach(1e-16) * s * s;
    let nyq = t.axes().iter().map(|a| a.nyquist()).fold(f64::INFINITY, f64::min);
    if reach > nyq {
        return Err(Error::Unresolved(format!(
            "the dilated spectrum reaches |λ| = {reach:.3}, beyond the dual-grid limit {nyq:.3}"
        )));
    }
    let norm = s.powi(-2 * inputs.d2 as i32);
    let spectrum = PartialSpectrum::from_fn(x.clone(), t.clone(), |xp, l| {
        let xs: Vec<f64> = xp.iter().map(|v| s * v).collect();
        let ls: Vec<f64> = l.iter().map(|v| v / (s * s)).collect();
        inputs.spectrum(&xs, &ls) * norm
    })?;
    inverse_partial_fourier_t(&spectrum)
}

fn measure(f: &SampledField, mu: f64, case: &DilationCase) -> Result<ScalingRow> {
    let mut cfg = RestrictionConfig::new(mu, case.k_max);
    cfg.support_tol = case.support_tol;
    let out = restriction_apply(f, &cfg)?;
    let input = input_norm(f, &case.params)?;
    let output = output_norm(&out.field, &case.params)?;
    Ok(ScalingRow {
        mu,
        input_norm: input,
        output_norm: output,
        ratio: output / input,
        level_norms: out.level_norms,
        tail_estimate: out.tail_estimate,
        boundary_ratio: f.boundary_ratio(),
    })
}

/// Runs `𝓟_μ` on the Knapp family `f_μ(x,t) = f(√μ x, μt)` and fits the slope of
/// `||𝓟_μ f_μ||_{L^r_x L^{p'}_t} / ||f_μ||_{L^q_x L^p_t}` against `μ`.
pub fn run_dilation_scaling(case: &DilationCase, tolerance: FitTolerance) -> Result<DilationOutcome> {
    case.params.check_admissible(case.d2)?;
    if case.mus.len() < 2 {
        return Err(Error::InvalidArgument("a scaling fit needs at least two values of μ".into()));
    }
    let mut inputs = KnappInputs::standard(case.d1, case.d2)?;
    inputs.h = GaussianProfile { amplitude: 1.0, width: case.h_width };
    let (x0, t0) = case.grids.build(case.d1, case.d2)?;
    let base = match case.sampling {
        FamilySampling::Adapted => Some(knapp_direct(&inputs, &x0, &t0)?),
        FamilySampling::Fixed => None,
    };
    let mut rows = Vec::with_capacity(case.mus.len());
    for &mu in &case.mus {
        let s = mu.sqrt();
        let f = match &base {
            Some(b) => {
                let (x, t) = dilate_grids(&x0, &t0, s);
                SampledField::new(x, t, b.values().to_vec())?
            }
            None => dilated_knapp_fixed(&inputs, &x0, &t0, s)?,
        };
        rows.push(measure(&f, mu, case)?);
    }
    let predicted = predicted_exponent(&case.params, case.d1, case.d2)?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let fit = fit_scaling_exponent(&case.mus, &ratios, predicted, tolerance)?;
    Ok(DilationOutcome { case: case.clone(), rows, fit })
}

/// `g(x,t) = (1 + x₁ + t₁²/2)·e^{-|x|²/2-|t|²/2}`, a fixed Schwartz function with
/// content on every level.
pub fn generic_test_function(x: &[f64], t: &[f64]) -> Complex64 {
    let x2: f64 = x.iter().map(|v| v * v).sum();
    let t2: f64 = t.iter().map(|v| v * v).sum();
    Complex64::new((1.0 + x[0] + 0.5 * t[0] * t[0]) * (-0.5 * (x2 + t2)).exp(), 0.0)
}

/// Grids for `𝓟_μ g`: half width `max(1.02√((2K+d₁+4)(2K+d₁)/μ), 9)`, x-spacing 10%
/// inside the level-`K` oscillation limit, t-period 48 resolving `|λ| ≤ 32`.
pub fn generic_grids(d1: usize, d2: usize, mu: f64, k_max: usize) -> Result<(TensorGrid, PeriodicGrid)> {
    let level = (2 * k_max + d1) as f64;
    let half = (1.02 * ((level + 4.0) * level / mu).sqrt()).max(9.0);
    let mut nx = (1.1 * 8.0 * half * mu.sqrt() / PI).ceil() as usize;
    nx = nx.max(129) | 1;
    let period = 48.0;
    let nt = 2 * (period * 1.1 * 32.0 / (2.0 * PI)).ceil() as usize;
    Ok((TensorGrid::uniform(d1, nx, half)?, PeriodicGrid::uniform(d2, nt, period)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandOutcome {
    pub params: MixedNormParams,
    pub predicted: f64,
    pub rows: Vec<ScalingRow>,
    /// `ratio / μ^{predicted}` per row.
    pub normalized: Vec<f64>,
    /// `max / min` of the normalized ratios.
    pub spread: f64,
    /// Largest normalized ratio over the value at the smallest `μ`.
    pub upper_growth: f64,
}

/// `𝓟_μ g` for the fixed function [`generic_test_function`] over `mus`.
pub fn run_generic_band(d1: usize, d2: usize, params: MixedNormParams, mus: &[f64], k_max: usize) -> Result<BandOutcome> {
    params.check_admissible(d2)?;
    if mus.is_empty() {
        return Err(Error::InvalidArgument("the band check needs at least one value of μ".into()));
    }
    let predicted = predicted_exponent(&params, d1, d2)?;
    let case = DilationCase {
        d1,
        d2,
        params,
        mus: mus.to_vec(),
        k_max,
        support_tol: grushin_core::restriction::DEFAULT_SUPPORT_TOL,
        grids: BaseGrids { nx: 0, x_half_width: 0.0, nt: 0, t_period: 0.0 },
        sampling: FamilySampling::Fixed,
        h_width: 1.0,
    };
    let mut rows = Vec::with_capacity(mus.len());
    for &mu in mus {
        let (x, t) = generic_grids(d1, d2, mu, k_max)?;
        let f = SampledField::from_fn(x, t, generic_test_function)?;
        rows.push(measure(&f, mu, &case)?);
    }
    let normalized: Vec<f64> = rows.iter().map(|r| r.ratio / r.mu.powf(predicted)).collect();
    let hi = normalized.iter().cloned().fold(0.0, f64::max);
    let lo = normalized.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(BandOutcome { params, predicted, rows, spread: hi / lo, upper_growth: hi / normalized[0], normalized })
}

/// Band of the normalized ratio over the dilations `g(√μ x, μt)` of
/// [`generic_test_function`], sampled on correspondingly shrunk grids.
pub fn run_generic_dilation(d1: usize, d2: usize, params: MixedNormParams, mus: &[f64], k_max: usize) -> Result<BandOutcome> {
    params.check_admissible(d2)?;
    if mus.is_empty() {
        return Err(Error::InvalidArgument("the band check needs at least one value of μ".into()));
    }
    let predicted = predicted_exponent(&params, d1, d2)?;
    let case = DilationCase {
        d1,
        d2,
        params,
        mus: mus.to_vec(),
        k_max,
        support_tol: grushin_core::restriction::DEFAULT_SUPPORT_TOL,
        grids: BaseGrids { nx: 0, x_half_width: 0.0, nt: 0, t_period: 0.0 },
        sampling: FamilySampling::Adapted,
        h_width: 1.0,
    };
    let (x0, t0) = generic_grids(d1, d2, 1.0, k_max)?;
    let base = SampledField::from_fn(x0.clone(), t0.clone(), generic_test_function)?;
    let mut rows = Vec::with_capacity(mus.len());
    for &mu in mus {
        let (x, t) = dilate_grids(&x0, &t0, mu.sqrt());
        let f = SampledField::new(x, t, base.values().to_vec())?;
        rows.push(measure(&f, mu, &case)?);
    }
    let normalized: Vec<f64> = rows.iter().map(|r| r.ratio / r.mu.powf(predicted)).collect();
    let hi = normalized.iter().cloned().fold(0.0, f64::max);
    let lo = normalized.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(BandOutcome { params, predicted, rows, spread: hi / lo, upper_growth: hi / normalized[0], normalized })
}
