//! Weyl-transform kernels `K_g^a(x,y) = ∫ g(ξ, y-x) e^{i(a/2)ξ·(x+y)} dξ` and the
//! Laguerre route to the projection kernel `F_{k,a}`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{check_resolution, kernel_operator_norm, KernelRoute, ProjectionKernel};
use crate::quadrature::TensorGrid;
use crate::specfun::{laguerre_weighted, laguerre_weighted_all};

/// Symmetric uniform trapezoid rule for the ξ-integral, the same on every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiRule {
    pub half_width: f64,
    pub points: usize,
}

impl XiRule {
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|i| -self.half_width + i as f64 * h).collect()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.points];
        w[0] *= 0.5;
        w[self.points - 1] *= 0.5;
        w
    }

    /// Rule for a Gaussian-damped integrand `e^{-|a||ξ|²/4}·(smooth)` whose phase
    /// frequency is at most `omega`: truncation where `e^{-|a|R²/4} < 10⁻¹⁴`, at
    /// least six points per phase period, and `extra_band` added to the sampling
    /// bandwidth for oscillation of the amplitude itself.
    pub fn for_gaussian(a: f64, omega: f64, extra_band: f64, min_half_width: f64) -> Self {
        let a = a.abs();
        let r_gauss = (4.0 * (1e14f64).ln() / a).sqrt();
        let half_width = r_gauss.max(min_half_width);
        let by_phase = if omega > 0.0 { 2.0 * PI / (6.0 * omega) } else { f64::INFINITY };
        let by_band = 2.0 * PI / (omega + extra_band + 8.0 * a.sqrt());
        let h = by_phase.min(by_band);
        let points = ((2.0 * half_width / h).ceil() as usize + 1).max(3) | 1;
        Self { half_width, points }
    }
}

/// End of the numerical support of `τ ↦ L_k^δ(τ)e^{-τ/2}`: beyond the returned
/// value the function stays below `10⁻¹⁶·L_k^δ(0)`.
pub fn laguerre_support_end(k: usize, delta: f64) -> f64 {
    let nu = 4.0 * k as f64 + 2.0 * delta + 2.0;
    let scale = laguerre_weighted(k, delta, 0.0).expect("valid type").abs();
    let thr = 1e-16 * scale;
    let mut tau = nu;
    let mut last_above = 0.0;
    let mut quiet = 0;
    while quiet < 40 {
        if laguerre_weighted(k, delta, tau).expect("valid type").abs() >= thr {
            last_above = tau;
            quiet = 0;
        } else {
            quiet += 1;
        }
        tau += 1.0;
    }
    last_above.max(nu) + 1.0
}

/// ξ-rule adequate for `F_{k',a}`, `k' ≤ k_max`, at `|x+y| ≤ u_max`.
pub fn laguerre_xi_rule(k_max: usize, a: f64, d1: usize, u_max: f64) -> XiRule {
    let delta = d1 as f64 - 1.0;
    let tau_end = (0..=k_max).map(|k| laguerre_support_end(k, delta)).fold(0.0, f64::max);
    let nu = 4.0 * k_max as f64 + 2.0 * delta + 2.0;
    let band = (nu * a.abs() / 2.0).sqrt();
    XiRule::for_gaussian(a, 0.5 * a.abs() * u_max, band, (2.0 * tau_end / a.abs()).sqrt())
}

/// Kernel of a Weyl transform on a tensor x-grid, `values[i * n + j] = K(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylKernel {
    pub a: f64,
    pub grid: TensorGrid,
    pub values: Vec<Complex64>,
    pub source: String,
}

impl WeylKernel {
    pub fn n(&self) -> usize {
        self.grid.len()
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n() + j]
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.n();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.value(i, j) - self.value(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn operator_norm(&self, seed: u64) -> Result<f64> {
        kernel_operator_norm(&self.values, &self.grid.weights(), 50, seed)
    }
}

fn check_scale(a: f64) -> Result<()> {
    if a == 0.0 || !a.is_finite() {
        Err(Error::ZeroScale)
    } else {
        Ok(())
    }
}

fn xi_points(rule: &XiRule, d1: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let nodes = rule.nodes();
    let w = rule.weights();
    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
    let mut ws = vec![1.0];
    for _ in 0..d1 {
        let mut np = Vec::with_capacity(pts.len() * nodes.len());
        let mut nw = Vec::with_capacity(pts.len() * nodes.len());
        for (p, pw) in pts.iter().zip(&ws) {
            for (x, xw) in nodes.iter().zip(&w) {
                let mut q = p.clone();
                q.push(*x);
                np.push(q);
                nw.push(pw * xw);
            }
        }
        pts = np;
        ws = nw;
    }
    (pts, ws)
}

/// `K_g^a(x,y) = ∫ g(ξ, y-x)·e^{i(a/2)ξ·(x+y)} dξ` by the tensor trapezoid `rule`.
///
/// `g(ξ, w)` takes `ξ, w ∈ R^{d₁}`. Non-finite values of `g` are rejected.
pub fn weyl_kernel<G>(g: G, a: f64, grid: &TensorGrid, rule: &XiRule, source: &str) -> Result<WeylKernel>
where
    G: Fn(&[f64], &[f64]) -> Complex64 + Sync,
{
    check_scale(a)?;
    let d1 = grid.dim();
    let (xi, wxi) = xi_points(rule, d1);
    let pts = grid.points();
    let n = pts.len();
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    let failed = std::sync::atomic::AtomicBool::new(false);
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x = &pts[i];
        for (j, v) in row.iter_mut().enumerate() {
            let y = &pts[j];
            let w: Vec<f64> = y.iter().zip(x).map(|(b, a)| b - a).collect();
            let u: Vec<f64> = y.iter().zip(x).map(|(b, a)| b + a).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, pw) in xi.iter().zip(&wxi) {
                let gv = g(p, &w);
                if !gv.re.is_finite() || !gv.im.is_finite() {
                    failed.store(true, std::sync::atomic::Ordering::Relaxed);
                }
                let phase = 0.5 * a * p.iter().zip(&u).map(|(s, t)| s * t).sum::<f64>();
                acc += gv * Complex64::from_polar(*pw, phase);
            }
            *v = acc;
        }
    });
    if failed.into_inner() {
        return Err(Error::QuadratureFailure(format!("symbol {source} is not finite on the quadrature nodes")));
    }
    Ok(WeylKernel { a, grid: grid.clone(), values, source: source.to_string() })
}

/// `φ_{k,a}(ξ, w) = L_k^{d₁-1}((|a|/2)(|ξ|²+|w|²))·e^{-(|a|/4)(|ξ|²+|w|²)}`.
pub fn phi_k_a(k: usize, a: f64, d1: usize, xi: &[f64], w: &[f64]) -> f64 {
    let r2: f64 = xi.iter().chain(w).map(|v| v * v).sum();
    laguerre_weighted(k, d1 as f64 - 1.0, 0.5 * a.abs() * r2).expect("type d1-1 > -1")
}

/// Index of every pairwise value `f(x_i, x_j)` among its distinct values.
struct PairIndex {
    values: Vec<f64>,
    index: Vec<usize>,
}

fn pair_index(nodes: &[f64], f: impl Fn(f64, f64) -> f64) -> PairIndex {
    let n = nodes.len();
    let mut map: HashMap<i64, usize> = HashMap::new();
    let mut values = Vec::new();
    let mut index = vec![0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = f(nodes[i], nodes[j]);
            let key = (v * 1e9).round() as i64;
            let id = *map.entry(key).or_insert_with(|| {
                values.push(v);
                values.len() - 1
            });
            index[i * n + j] = id;
        }
    }
    PairIndex { values, index }
}

/// Laguerre-route kernels `F_{k,a}` for every `k ≤ k_max` on `grid` (d₁ ∈ {1, 2}),
/// without the sampling check. Returns one real row-major table per level.
///
/// The integrand is even in ξ, so only `Π_j cos((a/2)ξ_j u_j)` survives; the
/// amplitude depends on `|v|² = |x-y|²` alone and is cached per distinct value.
pub fn laguerre_kernel_tables(k_max: usize, a: f64, grid: &TensorGrid) -> Result<Vec<Vec<f64>>> {
    check_scale(a)?;
    let d1 = grid.dim();
    if d1 > 2 {
        return Err(Error::InvalidArgument("dense Laguerre-route kernels support d1 <= 2".into()));
    }
    let aa = a.abs();
    let u_max = grid.axes().iter().map(|q| (2.0 * q.half_width()).powi(2)).sum::<f64>().sqrt();
    let rule = laguerre_xi_rule(k_max, a, d1, u_max);
    let xi = rule.nodes();
    let wxi = rule.weights();
    let m = xi.len();
    let delta = d1 as f64 - 1.0;
    let levels = k_max + 1;
    let pref = (2.0 * PI).powi(-(d1 as i32)) * aa.powi(d1 as i32);

    let us: Vec<PairIndex> = grid.axes().iter().map(|q| pair_index(q.nodes(), |x, y| x + y)).collect();
    let vs: Vec<PairIndex> = grid.axes().iter().map(|q| pair_index(q.nodes(), |x, y| (x - y).abs())).collect();
    // weighted cosine tables per axis: cos[u][i] = w_i cos((a/2) ξ_i u)
    let cos: Vec<Vec<Vec<f64>>> = us
        .iter()
        .map(|p| {
            p.values
                .iter()
                .map(|&u| xi.iter().zip(&wxi).map(|(s, w)| w * (0.5 * a * s * u).cos()).collect())
                .collect()
        })
        .collect();

    let n = grid.len();
    let shape = grid.shape();
    let mut tables = vec![vec![0.0; n * n]; levels];

    if d1 == 1 {
        let nv = vs[0].values.len();
        // amp[v][k * m + i]
        let amp: Vec<Vec<f64>> = (0..nv)
            .into_par_iter()
            .map(|vi| {
                let v2 = vs[0].values[vi].powi(2);
                let mut out = vec![0.0; levels * m];
                let mut buf = vec![0.0; levels];
                for (i, s) in xi.iter().enumerate() {
                    laguerre_weighted_all(delta, 0.5 * aa * (s * s + v2), &mut buf);
                    for k in 0..levels {
                        out[k * m + i] = buf[k];
                    }
                }
                out
            })
            .collect();
        let n0 = shape[0];
        let entries: Vec<Vec<f64>> = (0..n * n)
            .into_par_iter()
            .map(|f| {
                let (i, j) = (f / n0, f % n0);
                let c = &cos[0][us[0].index[i * n0 + j]];
                let g = &amp[vs[0].index[i * n0 + j]];
                (0..levels)
                    .map(|k| pref * g[k * m..(k + 1) * m].iter().zip(c).map(|(p, q)| p * q).sum::<f64>())
                    .collect()
            })
            .collect();
        for (f, e) in entries.iter().enumerate() {
            for k in 0..levels {
                tables[k][f] = e[k];
            }
        }
        return Ok(tables);
    }

    // d1 = 2: group (x, y) pairs by their per-axis |v| indices
    let (n0, n1) = (shape[0], shape[1]);
    let mut groups: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for xf in 0..n {
        let (xa, xb) = (xf / n1, xf % n1);
        for yf in 0..n {
            let (ya, yb) = (yf / n1, yf % n1);
            let key = (vs[0].index[xa * n0 + ya], vs[1].index[xb * n1 + yb]);
            groups.entry(key).or_default().push((xf, yf));
        }
    }
    let mut keys: Vec<(usize, usize)> = groups.keys().copied().collect();
    keys.sort_unstable();
    let xi2: Vec<f64> = xi.iter().map(|s| s * s).collect();
    let results: Vec<Vec<(usize, Vec<f64>)>> = keys
        .par_iter()
        .map(|key| {
            let v2 = vs[0].values[key.0].powi(2) + vs[1].values[key.1].powi(2);
            // amp[k][i1 * m + i2]
            let mut amp = vec![vec![0.0; m * m]; levels];
            let mut buf = vec![0.0; levels];
            for i1 in 0..m {
                for i2 in 0..m {
                    laguerre_weighted_all(delta, 0.5 * aa * (xi2[i1] + xi2[i2] + v2), &mut buf);
                    for k in 0..levels {
                        amp[k][i1 * m + i2] = buf[k];
                    }
                }
            }
            let mut partial: HashMap<usize, Vec<Vec<f64>>> = HashMap::new();
            let mut out = Vec::new();
            for &(xf, yf) in &groups[key] {
                let (xa, xb) = (xf / n1, xf % n1);
                let (ya, yb) = (yf / n1, yf % n1);
                let u1 = us[0].index[xa * n0 + ya];
                let u2 = us[1].index[xb * n1 + yb];
                let t = partial.entry(u2).or_insert_with(|| {
                    let c2 = &cos[1][u2];
                    amp.iter()
                        .map(|g| (0..m).map(|i1| g[i1 * m..(i1 + 1) * m].iter().zip(c2).map(|(p, q)| p * q).sum()).collect())
                        .collect()
                });
                let c1 = &cos[0][u1];
                let vals = t.iter().map(|tk| pref * tk.iter().zip(c1).map(|(p, q)| p * q).sum::<f64>()).collect();
                out.push((xf * n + yf, vals));
            }
            out
        })
        .collect();
    for group in results {
        for (pos, vals) in group {
            for k in 0..levels {
                tables[k][pos] = vals[k];
            }
        }
    }
    Ok(tables)
}

/// Laguerre-route kernel `F_{k,a}` on a grid that satisfies the sampling policy.
pub fn projection_kernel_laguerre(k: usize, a: f64, grid: &TensorGrid) -> Result<ProjectionKernel> {
    check_resolution(grid, k, a)?;
    projection_kernel_laguerre_on(k, a, grid)
}

/// Laguerre-route kernel on any grid, without the sampling check.
pub fn projection_kernel_laguerre_on(k: usize, a: f64, grid: &TensorGrid) -> Result<ProjectionKernel> {
    let mut tables = laguerre_kernel_tables(k, a, grid)?;
    let values = tables.swap_remove(k).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    Ok(ProjectionKernel { k, a, grid: grid.clone(), values, route: KernelRoute::Laguerre })
}

/// `F_{k,a}(x, x)` by the Laguerre route, for sup estimates (by Cauchy–Schwarz the
/// diagonal dominates `|F(x,y)|`).
pub fn laguerre_kernel_diagonal(k: usize, a: f64, x: &[f64]) -> Result<f64> {
    check_scale(a)?;
    let d1 = x.len();
    let u: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
    let u_max = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rule = laguerre_xi_rule(k, a, d1, u_max.max(1e-12));
    let nodes = rule.nodes();
    let w = rule.weights();
    let aa = a.abs();
    let pref = (2.0 * PI).powi(-(d1 as i32)) * aa.powi(d1 as i32);
    let delta = d1 as f64 - 1.0;
    let cos: Vec<Vec<f64>> = u
        .iter()
        .map(|&uj| nodes.iter().zip(&w).map(|(s, wi)| wi * (0.5 * a * s * uj).cos()).collect())
        .collect();
    let total: f64 = match d1 {
        1 => nodes
            .iter()
            .enumerate()
            .map(|(i, s)| cos[0][i] * laguerre_weighted(k, delta, 0.5 * aa * s * s).expect("valid"))
            .sum(),
        2 => (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..nodes.len() {
                    let r2 = nodes[i] * nodes[i] + nodes[j] * nodes[j];
                    acc += cos[1][j] * laguerre_weighted(k, delta, 0.5 * aa * r2).expect("valid");
                }
                cos[0][i] * acc
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum(),
        _ => return Err(Error::InvalidArgument("diagonal evaluation supports d1 <= 2".into())),
    };
    Ok(pref * total)
}

/// Operator norm versus `||g||₁` for the Weyl transform of `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub operator_norm: f64,
    pub l1_norm: f64,
    pub ratio: f64,
}

/// Compares the discrete operator norm of `W_a(g)` with `||g||_{L¹(R^{2d₁})}`,
/// both by quadrature (`rule` on each of the `2d₁` variables for the L¹ norm).
pub fn weyl_l1_contraction_check<G>(g: G, a: f64, grid: &TensorGrid, rule: &XiRule) -> Result<ContractionReport>
where
    G: Fn(&[f64], &[f64]) -> Complex64 + Sync,
{
    let d1 = grid.dim();
    let (pts, w) = xi_points(rule, 2 * d1);
    let l1_norm: f64 = pts
        .par_iter()
        .zip(&w)
        .map(|(p, w)| w * g(&p[..d1], &p[d1..]).norm())
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let kernel = weyl_kernel(&g, a, grid, rule, "g")?;
    let operator_norm = kernel.operator_norm(7)?;
    let ratio = if l1_norm > 0.0 { operator_norm / l1_norm } else { 0.0 };
    Ok(ContractionReport { operator_norm, l1_norm, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{default_grid, eigsum_kernel_value};
    use approx::assert_relative_eq;

    #[test]
    fn ground_state_weyl_value() {
        let grid = TensorGrid::uniform(1, 3, 1.0).unwrap();
        let rule = XiRule::for_gaussian(1.0, 1.0, 0.0, 0.0);
        let k = weyl_kernel(|xi, w| Complex64::new(phi_k_a(0, 1.0, 1, xi, w), 0.0), 1.0, &grid, &rule, "phi0").unwrap();
        // centre node is x = y = 0
        assert_relative_eq!(k.value(1, 1).re, 2.0 * PI.sqrt(), max_relative = 1e-12);
        assert!(k.value(1, 1).im.abs() < 1e-14);
    }

    #[test]
    fn conjugate_under_sign_flip() {
        let grid = TensorGrid::uniform(1, 5, 1.5).unwrap();
        let rule = XiRule::for_gaussian(1.0, 3.0, 0.0, 0.0);
        let g = |xi: &[f64], w: &[f64]| Complex64::new((-(xi[0] - 0.3).powi(2) - w[0] * w[0]).exp(), 0.0);
        let kp = weyl_kernel(g, 1.0, &grid, &rule, "g").unwrap();
        let km = weyl_kernel(g, -1.0, &grid, &rule, "g").unwrap();
        for (p, m) in kp.values.iter().zip(&km.values) {
            assert!((p - m.conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn laguerre_route_ground_state() {
        let grid = default_grid(1, 0, 1.0).unwrap();
        let v = laguerre_kernel_diagonal(0, 1.0, &[0.0]).unwrap();
        assert_relative_eq!(v, 1.0 / PI.sqrt(), max_relative = 1e-12);
        let ker = projection_kernel_laguerre(0, 1.0, &grid).unwrap();
        let n = grid.len();
        let (x, y) = (grid.point(n / 4)[0], grid.point(n / 2)[0]);
        let e = eigsum_kernel_value(0, 1.0, &[x], &[y]).unwrap();
        assert_relative_eq!(ker.value(n / 4, n / 2).re, e, max_relative = 1e-10);
    }

    #[test]
    fn laguerre_tables_match_eigensum_d2() {
        let grid = TensorGrid::uniform(2, 5, 2.5).unwrap();
        let tables = laguerre_kernel_tables(3, 1.5, &grid).unwrap();
        let pts = grid.points();
        let n = grid.len();
        for k in 0..=3 {
            for i in 0..n {
                for j in 0..n {
                    let e = eigsum_kernel_value(k, 1.5, &pts[i], &pts[j]).unwrap();
                    assert!((tables[k][i * n + j] - e).abs() < 1e-11, "k={k} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn support_end_grows_with_level() {
        assert!(laguerre_support_end(20, 0.0) > laguerre_support_end(2, 0.0));
        assert!(laguerre_support_end(0, 0.0) >= 70.0);
    }
}
