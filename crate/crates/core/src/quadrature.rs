//! One-dimensional quadrature: node/weight grids for the x-variable and an
//! adaptive Gauss–Kronrod integrator for scalar integrals on the half line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureKind {
    UniformTrapezoid,
    GaussHermite,
}

/// Nodes and weights approximating `∫_R f(x) dx ≈ Σ w_i f(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadrature1D {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kind: QuadratureKind,
}

impl Quadrature1D {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, kind: QuadratureKind) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs matching non-empty node/weight vectors ({} vs {})",
                nodes.len(),
                weights.len()
            )));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("quadrature nodes must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidArgument("quadrature weights must be strictly positive".into()));
        }
        Ok(Self { nodes, weights, kind })
    }

    /// `n` equispaced nodes on `[-half_width, half_width]` with trapezoid weights.
    pub fn uniform(n: usize, half_width: f64) -> Result<Self> {
        if n < 2 || !(half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "uniform grid needs n >= 2 and a positive half width (n = {n}, X = {half_width})"
            )));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        let nodes = (0..n).map(|i| -half_width + i as f64 * h).collect();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        Self::new(nodes, weights, QuadratureKind::UniformTrapezoid)
    }

    /// `n`-point Gauss–Hermite rule with weights multiplied by `e^{x_i²}`, so that
    /// it integrates `f` directly rather than `f·e^{-x²}`.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        let (nodes, weights) = gauss_hermite_adjusted(n)?;
        Self::new(nodes, weights, QuadratureKind::GaussHermite)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node spacing of a uniform grid; `None` for Gauss rules.
    pub fn spacing(&self) -> Option<f64> {
        match self.kind {
            QuadratureKind::UniformTrapezoid => Some(self.nodes[1] - self.nodes[0]),
            QuadratureKind::GaussHermite => None,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.nodes[0].abs().max(self.nodes[self.nodes.len() - 1].abs())
    }

    /// The same rule with every node multiplied by `s > 0` (weights scale by `s`).
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            nodes: self.nodes.iter().map(|x| x * s).collect(),
            weights: self.weights.iter().map(|w| w * s).collect(),
            kind: self.kind,
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Tensor product of one-dimensional rules; flat indices run row-major with the
/// last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorGrid {
    axes: Vec<Quadrature1D>,
}

impl TensorGrid {
    pub fn new(axes: Vec<Quadrature1D>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("tensor grid needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    /// The same uniform rule on every one of `dim` axes.
    pub fn uniform(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        let q = Quadrature1D::uniform(n, half_width)?;
        Self::new(vec![q; dim])
    }

    pub fn axes(&self) -> &[Quadrature1D] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Quadrature1D {
        &self.axes[i]
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|q| q.len()).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|q| q.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat position.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (slot, q) in idx.iter_mut().zip(&self.axes).rev() {
            *slot = flat % q.len();
            flat /= q.len();
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, q)| q.nodes()[i])
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|f| self.point(f)).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![1.0];
        for q in &self.axes {
            w = w.iter().flat_map(|&a| q.weights().iter().map(move |&b| a * b)).collect();
        }
        w
    }

    /// Squared Euclidean norm of every grid point.
    pub fn radii_squared(&self) -> Vec<f64> {
        let mut r = vec![0.0];
        for q in &self.axes {
            r = r.iter().flat_map(|&a| q.nodes().iter().map(move |&x| a + x * x)).collect();
        }
        r
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { axes: self.axes.iter().map(|q| q.scaled(s)).collect() }
    }

    /// `Σ w_i f(x_i)` over the full tensor grid.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let w = self.weights();
        (0..self.len()).map(|i| w[i] * f(&self.point(i))).sum()
    }
}

fn gauss_hermite_adjusted(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("Gauss-Hermite rule needs at least one node".into()));
    }
    let nf = n as f64;
    let m = n.div_ceil(2);
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut pos: Vec<(f64, f64)> = Vec::with_capacity(m);
    let mut z = 0.0_f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * pos[0].0,
            3 => 1.91 * z - 0.91 * pos[1].0,
            _ => 2.0 * z - pos[i - 2].0,
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            // orthonormal polynomials for the weight e^{-x^2}
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureFailure(format!("Gauss-Hermite root {i} of {n} did not converge")));
        }
        // w e^{z^2} with w = 2 / pp^2
        pos.push((z, 2.0 / (pp * pp) * (z * z).exp()));
    }
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &(z, w) in &pos {
        nodes.push(-z);
        weights.push(w);
    }
    let start = if n % 2 == 1 { 1 } else { 0 };
    for &(z, w) in pos.iter().rev().skip(start) {
        nodes.push(z);
        weights.push(w);
    }
    if n % 2 == 1 {
        // the middle root was pushed once with its negated sign
        let mid = m - 1;
        nodes[mid] = 0.0;
    }
    Ok((nodes, weights))
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 1 {
        return Ok((vec![0.5 * (a + b)], vec![b - a]));
    }
    let rule = gauss_quad::legendre::GaussLegendre::new(n)
        .map_err(|e| Error::InvalidArgument(format!("Gauss-Legendre rule: {e}")))?;
    let mut pairs: Vec<(f64, f64)> = rule
        .iter()
        .map(|&(x, w)| (0.5 * ((b - a) * x + (b + a)), 0.5 * (b - a) * w))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs.into_iter().unzip())
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Gauss–Kronrod (7/15) integration over consecutive `breakpoints`.
///
/// Every panel is bisected until its error estimate is below its share of
/// `max(abs_tol, rel_tol·|I|)`; the reported error is the sum of panel estimates.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Integral> {
    if breakpoints.len() < 2 {
        return Err(Error::InvalidArgument("need at least two breakpoints".into()));
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    let total_width = breakpoints[breakpoints.len() - 1] - breakpoints[0];
    const MAX_PANELS: usize = 200_000;
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            return Ok(Integral { value, error });
        }
        if panels.len() > MAX_PANELS {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {error:.3e} above target {target:.3e} after {} panels",
                panels.len()
            )));
        }
        // refine every panel carrying more than its proportional share of the budget
        let mut next = Vec::with_capacity(panels.len() * 2);
        let mut refined = false;
        for &(a, b, v, e) in &panels {
            let share = target * (b - a) / total_width;
            if e > share && (b - a) > 1e-14 * (1.0 + a.abs()) {
                let m = 0.5 * (a + b);
                let (v1, e1) = gk15(&f, a, m);
                let (v2, e2) = gk15(&f, m, b);
                next.push((a, m, v1, e1));
                next.push((m, b, v2, e2));
                refined = true;
            } else {
                next.push((a, b, v, e));
            }
        }
        if !refined {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {error:.3e} above target {target:.3e} and no panel can be refined"
            )));
        }
        panels = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_grid_is_symmetric_with_trapezoid_weights() {
        let q = Quadrature1D::uniform(5, 2.0).unwrap();
        assert_eq!(q.nodes(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(q.weights(), &[0.5, 1.0, 1.0, 1.0, 0.5]);
        assert_eq!(q.spacing(), Some(1.0));
    }

    #[test]
    fn rejects_unsorted_or_nonpositive() {
        assert!(Quadrature1D::new(vec![0.0, 0.0], vec![1.0, 1.0], QuadratureKind::UniformTrapezoid).is_err());
        assert!(Quadrature1D::new(vec![0.0, 1.0], vec![1.0, 0.0], QuadratureKind::UniformTrapezoid).is_err());
        assert!(Quadrature1D::new(vec![0.0], vec![1.0, 2.0], QuadratureKind::UniformTrapezoid).is_err());
    }

    #[test]
    fn tensor_grid_layout_is_row_major() {
        let g = TensorGrid::new(vec![
            Quadrature1D::uniform(2, 1.0).unwrap(),
            Quadrature1D::uniform(3, 1.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.point(1), vec![-1.0, 0.0]);
        assert_eq!(g.point(3), vec![1.0, -1.0]);
        assert_eq!(g.unflatten(5), vec![1, 2]);
        assert_eq!(g.weights()[4], 2.0 * 0.5);
        assert_eq!(g.radii_squared()[5], 2.0);
    }

    #[test]
    fn gauss_hermite_matches_golub_welsch() {
        for n in [2usize, 7, 20, 41] {
            let ours = Quadrature1D::gauss_hermite(n).unwrap();
            let gw = gauss_quad::hermite::GaussHermite::new(n).unwrap();
            let mut theirs: Vec<(f64, f64)> = gw.iter().copied().collect();
            theirs.sort_by(|a, b| a.0.total_cmp(&b.0));
            // eigenvector-based weights are only accurate in absolute terms
            for (i, (x, w)) in theirs.iter().enumerate() {
                assert!((ours.nodes()[i] - x).abs() < 1e-10, "node {i} of {n}");
                let ours_raw = ours.weights()[i] * (-x * x).exp();
                assert!((ours_raw - w).abs() < 1e-13, "weight {i} of {n}");
            }
        }
    }

    #[test]
    fn gauss_hermite_integrates_gaussian_moments() {
        let q = Quadrature1D::gauss_hermite(30).unwrap();
        let pi = std::f64::consts::PI;
        assert_relative_eq!(q.integrate(|x| (-x * x).exp()), pi.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(q.integrate(|x| x * x * (-x * x).exp()), pi.sqrt() / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn gauss_legendre_on_interval() {
        let (x, w) = gauss_legendre(5, 1.0, 3.0).unwrap();
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert_relative_eq!(i, (3f64.powi(10) - 1.0) / 10.0, max_relative = 1e-13);
        assert!(x.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn adaptive_handles_kinks_and_reports_error() {
        let r = integrate_adaptive(|x: f64| x.sin().abs(), &[0.0, 10.0], 1e-12, 0.0).unwrap();
        let exact = 7.0 + (10.0f64).cos();
        assert_relative_eq!(r.value, exact, max_relative = 1e-11);
        assert!(r.error < 1e-10);
    }

    #[test]
    fn adaptive_fails_on_nonintegrable() {
        let r = integrate_adaptive(|x: f64| 1.0 / x, &[0.0, 1.0], 1e-10, 0.0);
        assert!(matches!(r, Err(Error::QuadratureFailure(_))));
    }
}
