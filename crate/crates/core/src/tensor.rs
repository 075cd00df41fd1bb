//! Axis-wise contractions of row-major complex tensors against real matrices.

use num_complex::Complex64;
use rayon::prelude::*;

/// Contracts axis `axis` of `data` (row-major, `shape`) with the row-major
/// `rows × shape[axis]` matrix `m`: `out[.., r, ..] = Σ_j m[r][j]·data[.., j, ..]`.
pub fn contract_axis(data: &[Complex64], shape: &[usize], axis: usize, m: &[f64], rows: usize) -> Vec<Complex64> {
    let n = shape[axis];
    assert_eq!(m.len(), rows * n, "matrix does not match the contracted axis");
    assert_eq!(data.len(), shape.iter().product::<usize>(), "data does not match its shape");
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * rows * inner];
    if inner == 0 || outer == 0 {
        return out;
    }
    out.par_chunks_mut(rows * inner).enumerate().for_each(|(o, block)| {
        let src = &data[o * n * inner..(o + 1) * n * inner];
        for r in 0..rows {
            let dst = &mut block[r * inner..(r + 1) * inner];
            let mrow = &m[r * n..(r + 1) * n];
            for (j, &c) in mrow.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let s = &src[j * inner..(j + 1) * inner];
                for (d, v) in dst.iter_mut().zip(s) {
                    *d += v * c;
                }
            }
        }
    });
    out
}

/// Applies one matrix per leading axis in turn; `mats[i]` maps `shape[i]` to `rows[i]`.
pub fn contract_leading(data: &[Complex64], shape: &[usize], mats: &[(&[f64], usize)]) -> (Vec<Complex64>, Vec<usize>) {
    let mut cur = data.to_vec();
    let mut sh = shape.to_vec();
    for (axis, &(m, rows)) in mats.iter().enumerate() {
        cur = contract_axis(&cur, &sh, axis, m, rows);
        sh[axis] = rows;
    }
    (cur, sh)
}

/// Transpose of a row-major `rows × cols` matrix.
pub fn transpose(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; m.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = m[r * cols + c];
        }
    }
    t
}

/// Pairwise summation in a fixed order, for reproducible reductions.
pub fn pairwise_sum(terms: &[Vec<Complex64>]) -> Vec<Complex64> {
    match terms.len() {
        0 => Vec::new(),
        1 => terms[0].clone(),
        n => {
            let (a, b) = terms.split_at(n / 2);
            let mut left = pairwise_sum(a);
            let right = pairwise_sum(b);
            for (l, r) in left.iter_mut().zip(&right) {
                *l += r;
            }
            left
        }
    }
}
