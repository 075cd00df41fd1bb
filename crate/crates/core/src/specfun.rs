//! Hermite functions, Laguerre polynomials and normalized Laguerre functions.
//!
//! Every recurrence carries its value as `mantissa · e^{log_scale}` so that the
//! Gaussian and exponential weights are folded in without overflow or
//! premature underflow.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;

const RESCALE_AT: f64 = 1e150;
const LN_RESCALE: f64 = 345.387_763_949_107; // ln(1e150)

/// `h_k(τ)`, the L²-normalized Hermite function.
pub fn hermite_eval(k: usize, tau: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    let mut log_scale = -0.5 * tau * tau;
    for j in 0..k {
        let jf = j as f64;
        let next = tau * (2.0 / (jf + 1.0)).sqrt() * cur - (jf / (jf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            cur /= RESCALE_AT;
            prev /= RESCALE_AT;
            log_scale += LN_RESCALE;
        }
    }
    finish(cur, log_scale)
}

/// `table[k][i] = h_k(nodes[i])` for `k ≤ k_max`, one recurrence pass per node.
pub fn hermite_batch(k_max: usize, nodes: &[f64]) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; nodes.len()]; k_max + 1];
    for (i, &tau) in nodes.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = std::f64::consts::PI.powf(-0.25);
        let mut log_scale = -0.5 * tau * tau;
        table[0][i] = finish(cur, log_scale);
        for j in 0..k_max {
            let jf = j as f64;
            let next = tau * (2.0 / (jf + 1.0)).sqrt() * cur - (jf / (jf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE_AT {
                cur /= RESCALE_AT;
                prev /= RESCALE_AT;
                log_scale += LN_RESCALE;
            }
            table[j + 1][i] = finish(cur, log_scale);
        }
    }
    table
}

fn finish(mantissa: f64, log_scale: f64) -> f64 {
    if mantissa == 0.0 {
        return 0.0;
    }
    mantissa * log_scale.exp()
}

fn check_type(delta: f64) -> Result<()> {
    if delta > -1.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidLaguerreType(delta))
    }
}

fn check_arg(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("Laguerre argument must be finite and nonnegative, got {tau}")))
    }
}

/// `L_k^δ(τ)` from the classical three-term recurrence.
pub fn laguerre_poly(k: usize, delta: f64, tau: f64) -> Result<f64> {
    check_type(delta)?;
    check_arg(tau)?;
    let mut prev = 0.0;
    let mut cur = 1.0;
    for j in 0..k {
        let jf = j as f64;
        let next = ((2.0 * jf + delta + 1.0 - tau) * cur - (jf + delta) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `L_k^δ(τ)·e^{-τ/2}`, evaluated with a running log scale so large `τ` is safe.
pub fn laguerre_weighted(k: usize, delta: f64, tau: f64) -> Result<f64> {
    check_type(delta)?;
    check_arg(tau)?;
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut log_scale = -0.5 * tau;
    for j in 0..k {
        let jf = j as f64;
        let next = ((2.0 * jf + delta + 1.0 - tau) * cur - (jf + delta) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            cur /= RESCALE_AT;
            prev /= RESCALE_AT;
            log_scale += LN_RESCALE;
        }
    }
    Ok(finish(cur, log_scale))
}

/// `out[k] = L_k^δ(τ)·e^{-τ/2}` for every `k < out.len()`, in one recurrence pass.
pub fn laguerre_weighted_all(delta: f64, tau: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut log_scale = -0.5 * tau;
    let mut factor = log_scale.exp();
    out[0] = factor;
    for j in 0..out.len() - 1 {
        let jf = j as f64;
        let next = ((2.0 * jf + delta + 1.0 - tau) * cur - (jf + delta) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            cur /= RESCALE_AT;
            prev /= RESCALE_AT;
            log_scale += LN_RESCALE;
            factor = log_scale.exp();
        }
        out[j + 1] = cur * factor;
    }
}

/// Sign and natural log of `|𝓛_k^δ(τ)|`; the log is `-∞` where the value vanishes.
pub fn laguerre_normalized_log(k: usize, delta: f64, tau: f64) -> Result<(f64, f64)> {
    check_type(delta)?;
    check_arg(tau)?;
    let power = if delta == 0.0 {
        0.0
    } else {
        0.5 * delta * tau.ln()
    };
    let mut log_scale = -0.5 * tau + power - 0.5 * ln_gamma(delta + 1.0);
    // ℓ_j = sqrt(Γ(j+1)/Γ(j+δ+1)) L_j^δ satisfies a symmetric recurrence
    let mut prev = 0.0;
    let mut cur = 1.0;
    for j in 0..k {
        let jf = j as f64;
        let next = ((2.0 * jf + delta + 1.0 - tau) * cur - (jf * (jf + delta)).sqrt() * prev)
            / ((jf + 1.0) * (jf + 1.0 + delta)).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_AT {
            cur /= RESCALE_AT;
            prev /= RESCALE_AT;
            log_scale += LN_RESCALE;
        }
    }
    if cur == 0.0 || log_scale == f64::NEG_INFINITY {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    Ok((cur.signum(), cur.abs().ln() + log_scale))
}

/// `𝓛_k^δ(τ) = sqrt(Γ(k+1)/Γ(k+δ+1))·e^{-τ/2}·τ^{δ/2}·L_k^δ(τ)`.
pub fn laguerre_normalized(k: usize, delta: f64, tau: f64) -> Result<f64> {
    let (sign, log_abs) = laguerre_normalized_log(k, delta, tau)?;
    Ok(sign * log_abs.exp())
}

/// `φ_k(z) = L_k^{d₁-1}(|z|²/2)·e^{-|z|²/4}` for `z ∈ R^{2d₁}`.
pub fn laguerre_phi(k: usize, d1: usize, z: &[f64]) -> f64 {
    let r2: f64 = z.iter().map(|v| v * v).sum();
    laguerre_phi_radial(k, d1, r2)
}

/// `φ_k` as a function of `|z|²`.
pub fn laguerre_phi_radial(k: usize, d1: usize, r2: f64) -> f64 {
    assert!(d1 >= 1, "d1 must be positive");
    laguerre_weighted(k, d1 as f64 - 1.0, 0.5 * r2).expect("type d1-1 > -1 and |z|^2 >= 0")
}

/// The four τ-regions of the normalized Laguerre envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeRegion {
    Small,
    Oscillatory,
    Turning,
    Exponential,
}

impl EnvelopeRegion {
    pub const ALL: [EnvelopeRegion; 4] = [
        EnvelopeRegion::Small,
        EnvelopeRegion::Oscillatory,
        EnvelopeRegion::Turning,
        EnvelopeRegion::Exponential,
    ];

    /// Closed τ-interval of the region for `ν = 4k + 2δ + 2`.
    pub fn range(self, nu: f64) -> (f64, f64) {
        match self {
            EnvelopeRegion::Small => (0.0, 1.0 / nu),
            EnvelopeRegion::Oscillatory => (1.0 / nu, nu / 2.0),
            EnvelopeRegion::Turning => (nu / 2.0, 1.5 * nu),
            EnvelopeRegion::Exponential => (1.5 * nu, f64::INFINITY),
        }
    }

    pub fn contains(self, nu: f64, tau: f64) -> bool {
        let (lo, hi) = self.range(nu);
        tau >= lo && tau <= hi
    }

    /// Natural log of the region's bound at τ.
    pub fn log_bound(self, tau: f64, nu: f64, delta: f64, gamma: f64) -> f64 {
        match self {
            EnvelopeRegion::Small => {
                if delta == 0.0 {
                    0.0
                } else {
                    0.5 * delta * (tau * nu).ln()
                }
            }
            EnvelopeRegion::Oscillatory => -0.25 * (tau * nu).ln(),
            EnvelopeRegion::Turning => -0.25 * nu.ln() - 0.25 * (nu.cbrt() + (nu - tau).abs()).ln(),
            EnvelopeRegion::Exponential => -gamma * tau,
        }
    }
}

pub fn envelope_nu(k: usize, delta: f64) -> f64 {
    4.0 * k as f64 + 2.0 * delta + 2.0
}

/// Per-region maxima of `|𝓛_k^δ(τ)| / bound(τ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub k: usize,
    pub delta: f64,
    pub gamma: f64,
    pub nu: f64,
    pub small: Option<f64>,
    pub oscillatory: Option<f64>,
    pub turning: Option<f64>,
    pub exponential: Option<f64>,
}

impl EnvelopeReport {
    pub fn ratio(&self, region: EnvelopeRegion) -> Option<f64> {
        match region {
            EnvelopeRegion::Small => self.small,
            EnvelopeRegion::Oscillatory => self.oscillatory,
            EnvelopeRegion::Turning => self.turning,
            EnvelopeRegion::Exponential => self.exponential,
        }
    }

    /// The smallest `C` certified on the grid: the maximum over non-empty regions.
    pub fn fitted_constant(&self) -> Option<f64> {
        EnvelopeRegion::ALL
            .iter()
            .filter_map(|&r| self.ratio(r))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    }
}

/// Decay rate of the exponential-region envelope at which the fitted constants
/// stay stable in `k`.
pub const DEFAULT_GAMMA: f64 = 1.0 / 16.0;

/// Evaluates the four-region envelope on `tau_grid`.
///
/// A grid point on a shared endpoint counts for both regions. Points where the
/// function and the bound both vanish are skipped; a region without points is
/// reported as `None`.
pub fn envelope_check(k: usize, delta: f64, tau_grid: &[f64], gamma: f64) -> Result<EnvelopeReport> {
    check_type(delta)?;
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("envelope decay rate must be positive, got {gamma}")));
    }
    let nu = envelope_nu(k, delta);
    let mut maxima = [None::<f64>; 4];
    for &tau in tau_grid {
        check_arg(tau)?;
        let (_, log_val) = laguerre_normalized_log(k, delta, tau)?;
        for (slot, region) in maxima.iter_mut().zip(EnvelopeRegion::ALL) {
            if !region.contains(nu, tau) {
                continue;
            }
            let log_bound = region.log_bound(tau, nu, delta, gamma);
            let ratio = if log_val == f64::NEG_INFINITY {
                if log_bound == f64::NEG_INFINITY {
                    continue;
                }
                0.0
            } else {
                (log_val - log_bound).exp()
            };
            *slot = Some(slot.map_or(ratio, |m| m.max(ratio)));
        }
    }
    Ok(EnvelopeReport {
        k,
        delta,
        gamma,
        nu,
        small: maxima[0],
        oscillatory: maxima[1],
        turning: maxima[2],
        exponential: maxima[3],
    })
}

/// `∫₀^∞ |𝓛_k^{d₁-1}(τ)| τ^{-1/2} dτ`.
///
/// With `τ = s²` the integrand becomes `2|𝓛(s²)|`, free of the endpoint
/// singularity. Breakpoints follow a geometric grading down to `τ = 10⁻¹²`, the
/// region boundaries, and half-periods of the oscillation up to the turning
/// region; the upper limit is pushed out until the integrand is below 10⁻¹⁸.
pub fn l1_bound_integral(k: usize, d1: usize) -> Result<f64> {
    if d1 == 0 {
        return Err(Error::InvalidArgument("d1 must be positive".into()));
    }
    let delta = d1 as f64 - 1.0;
    let nu = envelope_nu(k, delta);
    let f = |s: f64| 2.0 * laguerre_normalized(k, delta, s * s).expect("valid type").abs();

    let mut taus = vec![0.0];
    let mut g = 1e-12;
    while g < 1.0 / nu {
        taus.push(g);
        g *= 2.0;
    }
    taus.push(1.0 / nu);
    let mut bp: Vec<f64> = taus.iter().map(|t| t.sqrt()).collect();
    let s_osc_end = (1.5 * nu).sqrt();
    let panel = std::f64::consts::PI / nu.sqrt();
    let mut s = bp[bp.len() - 1] + panel;
    while s < s_osc_end {
        bp.push(s);
        s += panel;
    }
    for t in [0.5 * nu, 1.5 * nu] {
        bp.push(t.sqrt());
    }
    let mut tau_end = 1.5 * nu + 10.0;
    while laguerre_normalized(k, delta, tau_end)?.abs() >= 1e-18 {
        tau_end += 10.0;
    }
    bp.push(tau_end.sqrt());
    bp.sort_by(f64::total_cmp);
    bp.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let r = integrate_adaptive(f, &bp, 1e-10, 0.0)
        .or_else(|_| integrate_adaptive(f, &bp, 1e-7, 0.0))?;
    if r.error > 1e-6 * r.value.abs() {
        return Err(Error::QuadratureFailure(format!(
            "L1 integral for k = {k}, d1 = {d1}: error {:.2e} exceeds 1e-6 relative",
            r.error
        )));
    }
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PI_M14: f64 = 0.751_125_544_464_943;

    #[test]
    fn hermite_frozen_values() {
        assert_relative_eq!(hermite_eval(0, 0.0), PI_M14, max_relative = 1e-14);
        assert_eq!(hermite_eval(1, 0.0), 0.0);
        let expected = 2f64.sqrt() * PI_M14 * (-0.5f64).exp();
        assert_relative_eq!(hermite_eval(1, 1.0), expected, max_relative = 1e-14);
        assert_relative_eq!(expected, 0.644288365113, max_relative = 1e-11);
    }

    #[test]
    fn hermite_batch_agrees_with_scalar() {
        let nodes = [-3.0, -0.5, 0.0, 1.25, 7.0];
        let t = hermite_batch(30, &nodes);
        for k in 0..=30 {
            for (i, &x) in nodes.iter().enumerate() {
                assert_eq!(t[k][i], hermite_eval(k, x));
            }
        }
        let t2 = hermite_batch(2, &[0.0]);
        assert_relative_eq!(t2[2][0], -PI_M14 / 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn hermite_far_tail_is_finite() {
        for &k in &[0usize, 10, 500, 2000] {
            for &x in &[-200.0, -60.0, 45.0, 200.0] {
                let v = hermite_eval(k, x);
                assert!(v.is_finite() && v.abs() <= 1.09);
            }
        }
    }

    #[test]
    fn laguerre_frozen_values() {
        assert_eq!(laguerre_poly(0, 0.5, 3.7).unwrap(), 1.0);
        assert_eq!(laguerre_poly(1, 0.0, 2.0).unwrap(), -1.0);
        assert_relative_eq!(laguerre_poly(2, 0.0, 3.0).unwrap(), -0.5, max_relative = 1e-14);
        assert_relative_eq!(laguerre_normalized(0, 0.0, 2.0).unwrap(), (-1f64).exp(), max_relative = 1e-14);
        assert_eq!(laguerre_normalized(0, 1.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_invalid_type() {
        assert_eq!(laguerre_poly(3, -1.0, 1.0), Err(Error::InvalidLaguerreType(-1.0)));
        assert!(laguerre_normalized(3, -2.0, 1.0).is_err());
        assert!(envelope_check(3, -1.5, &[1.0], 0.25).is_err());
    }

    #[test]
    fn weighted_all_matches_scalar() {
        let mut out = vec![0.0; 31];
        for &tau in &[0.0, 0.7, 12.0, 95.0, 2000.0] {
            laguerre_weighted_all(1.0, tau, &mut out);
            for (k, v) in out.iter().enumerate() {
                let e = laguerre_weighted(k, 1.0, tau).unwrap();
                assert!((v - e).abs() <= 1e-13 * e.abs().max(1e-300), "k={k} tau={tau}");
            }
        }
    }

    #[test]
    fn laguerre_phi_values() {
        assert_eq!(laguerre_phi(0, 1, &[0.0, 0.0]), 1.0);
        let z = [1.0, 0.0, 0.0, 1.0];
        assert_relative_eq!(laguerre_phi(1, 2, &z), (-0.5f64).exp(), max_relative = 1e-14);
        let zm: Vec<f64> = z.iter().map(|v| -v).collect();
        assert_eq!(laguerre_phi(7, 2, &z), laguerre_phi(7, 2, &zm));
    }

    #[test]
    fn normalized_is_finite_at_extremes() {
        for &k in &[0usize, 100, 2000] {
            for &tau in &[0.0, 1e-8, 3.0, 8000.0, 1e6] {
                assert!(laguerre_normalized(k, 1.0, tau).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn envelope_trivial_cases() {
        let empty = envelope_check(5, 1.0, &[], 0.25).unwrap();
        assert!(empty.fitted_constant().is_none());
        for r in EnvelopeRegion::ALL {
            assert!(empty.ratio(r).is_none());
        }
        let r = envelope_check(0, 0.0, &[3.0, 5.0], 0.25).unwrap();
        let expected = (-5.0f64 / 2.0 + 5.0 / 4.0).exp().max((-3.0f64 / 2.0 + 3.0 / 4.0).exp());
        assert_relative_eq!(r.exponential.unwrap(), expected, max_relative = 1e-13);
        assert!(r.small.is_none());
    }

    #[test]
    fn shared_endpoint_counts_for_both_regions() {
        let nu = envelope_nu(2, 0.0);
        let r = envelope_check(2, 0.0, &[nu / 2.0], 0.1).unwrap();
        assert!(r.oscillatory.is_some() && r.turning.is_some());
    }

    #[test]
    fn l1_closed_forms() {
        let two_pi_sqrt = (2.0 * std::f64::consts::PI).sqrt();
        assert_relative_eq!(l1_bound_integral(0, 1).unwrap(), two_pi_sqrt, max_relative = 1e-9);
        assert_relative_eq!(l1_bound_integral(0, 2).unwrap(), 2.0, max_relative = 1e-9);
    }
}
