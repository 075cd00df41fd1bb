//! Binary import/export of sampled fields and projection kernels.
//!
//! Layout (little-endian): 8-byte magic `GRUSHIN\0`, `u32` payload kind, `u32`
//! version, `u32` d₁, `u32` d₂, then per x-axis `u32` quadrature kind, `u64` n,
//! n nodes, n weights; per t-axis `u64` n and `f64` period; for kernels `u64` k,
//! `f64` a, `u32` route; finally `u64` count and `count` pairs `(re, im)`.
//! A JSON sidecar `<file>.json` repeats the header in readable form.

use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{KernelRoute, ProjectionKernel};
use crate::quadrature::{Quadrature1D, QuadratureKind, TensorGrid};
use crate::restriction::{PeriodicAxis, PeriodicGrid, SampledField};

const MAGIC: &[u8; 8] = b"GRUSHIN\0";
pub const FORMAT_VERSION: u32 = 1;
const KIND_FIELD: u32 = 1;
const KIND_KERNEL: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisMeta {
    pub kind: QuadratureKind,
    pub n: usize,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub payload: String,
    pub d1: usize,
    pub d2: usize,
    pub x_axes: Vec<AxisMeta>,
    pub t_axes: Vec<PeriodicAxis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route: Option<KernelRoute>,
    pub layout: String,
    pub values: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn get_u32(c: &mut Cursor<&[u8]>) -> Result<u32> {
    let mut b = [0u8; 4];
    c.read_exact(&mut b).map_err(|_| Error::Format("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn get_u64(c: &mut Cursor<&[u8]>) -> Result<u64> {
    let mut b = [0u8; 8];
    c.read_exact(&mut b).map_err(|_| Error::Format("truncated header".into()))?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(c: &mut Cursor<&[u8]>) -> Result<f64> {
    let mut b = [0u8; 8];
    c.read_exact(&mut b).map_err(|_| Error::Format("truncated data".into()))?;
    Ok(f64::from_le_bytes(b))
}

fn kind_code(k: QuadratureKind) -> u32 {
    match k {
        QuadratureKind::UniformTrapezoid => 0,
        QuadratureKind::GaussHermite => 1,
    }
}

fn route_code(r: KernelRoute) -> u32 {
    match r {
        KernelRoute::Eigensum => 0,
        KernelRoute::Laguerre => 1,
    }
}

fn put_header(buf: &mut Vec<u8>, kind: u32, x: &TensorGrid, t: Option<&PeriodicGrid>) {
    buf.extend_from_slice(MAGIC);
    put_u32(buf, kind);
    put_u32(buf, FORMAT_VERSION);
    put_u32(buf, x.dim() as u32);
    put_u32(buf, t.map_or(0, |t| t.dim()) as u32);
    for q in x.axes() {
        put_u32(buf, kind_code(q.kind()));
        put_u64(buf, q.len() as u64);
        q.nodes().iter().for_each(|&v| put_f64(buf, v));
        q.weights().iter().for_each(|&v| put_f64(buf, v));
    }
    if let Some(t) = t {
        for a in t.axes() {
            put_u64(buf, a.n as u64);
            put_f64(buf, a.period);
        }
    }
}

fn put_payload(buf: &mut Vec<u8>, values: &[Complex64]) {
    put_u64(buf, values.len() as u64);
    for v in values {
        put_f64(buf, v.re);
        put_f64(buf, v.im);
    }
}

struct Header {
    kind: u32,
    x: TensorGrid,
    t: Option<PeriodicGrid>,
}

fn get_header(c: &mut Cursor<&[u8]>) -> Result<Header> {
    let mut magic = [0u8; 8];
    c.read_exact(&mut magic).map_err(|_| Error::Format("file too short".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic number".into()));
    }
    let kind = get_u32(c)?;
    let version = get_u32(c)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let d1 = get_u32(c)? as usize;
    let d2 = get_u32(c)? as usize;
    if d1 == 0 || d1 > 3 || d2 > 3 {
        return Err(Error::Format(format!("implausible dimensions d1 = {d1}, d2 = {d2}")));
    }
    let mut axes = Vec::with_capacity(d1);
    for _ in 0..d1 {
        let qk = match get_u32(c)? {
            0 => QuadratureKind::UniformTrapezoid,
            1 => QuadratureKind::GaussHermite,
            other => return Err(Error::Format(format!("unknown quadrature kind {other}"))),
        };
        let n = get_u64(c)? as usize;
        if n > (c.get_ref().len() / 16) {
            return Err(Error::Format("axis length exceeds file size".into()));
        }
        let nodes = (0..n).map(|_| get_f64(c)).collect::<Result<Vec<_>>>()?;
        let weights = (0..n).map(|_| get_f64(c)).collect::<Result<Vec<_>>>()?;
        axes.push(Quadrature1D::new(nodes, weights, qk)?);
    }
    let x = TensorGrid::new(axes)?;
    let t = if d2 > 0 {
        let mut ta = Vec::with_capacity(d2);
        for _ in 0..d2 {
            let n = get_u64(c)? as usize;
            let period = get_f64(c)?;
            ta.push(PeriodicAxis { n, period });
        }
        Some(PeriodicGrid::new(ta)?)
    } else {
        None
    };
    Ok(Header { kind, x, t })
}

fn get_payload(c: &mut Cursor<&[u8]>, expected: usize) -> Result<Vec<Complex64>> {
    let count = get_u64(c)? as usize;
    if count != expected {
        return Err(Error::Format(format!("payload holds {count} values, grids need {expected}")));
    }
    let remaining = c.get_ref().len() - c.position() as usize;
    if remaining != 16 * count {
        return Err(Error::Format(format!("payload is {remaining} bytes, expected {}", 16 * count)));
    }
    (0..count).map(|_| Ok(Complex64::new(get_f64(c)?, get_f64(c)?))).collect()
}

fn axis_meta(x: &TensorGrid) -> Vec<AxisMeta> {
    x.axes()
        .iter()
        .map(|q| AxisMeta { kind: q.kind(), n: q.len(), min: q.nodes()[0], max: q.nodes()[q.len() - 1] })
        .collect()
}

pub fn encode_field(f: &SampledField) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + 16 * f.values().len());
    put_header(&mut buf, KIND_FIELD, f.x_grid(), Some(f.t_grid()));
    put_payload(&mut buf, f.values());
    buf
}

pub fn decode_field(bytes: &[u8]) -> Result<SampledField> {
    let mut c = Cursor::new(bytes);
    let h = get_header(&mut c)?;
    if h.kind != KIND_FIELD {
        return Err(Error::Format("file does not hold a sampled field".into()));
    }
    let t = h.t.ok_or_else(|| Error::Format("field without a t-grid".into()))?;
    let values = get_payload(&mut c, h.x.len() * t.len())?;
    SampledField::new(h.x, t, values)
}

pub fn field_sidecar(f: &SampledField) -> Sidecar {
    Sidecar {
        format: "grushin-binary".into(),
        version: FORMAT_VERSION,
        payload: "sampled-field".into(),
        d1: f.d1(),
        d2: f.d2(),
        x_axes: axis_meta(f.x_grid()),
        t_axes: f.t_grid().axes().to_vec(),
        level: None,
        scale: None,
        route: None,
        layout: "values[x_flat * nt + t_flat], row-major, last axis fastest".into(),
        values: f.values().len(),
    }
}

/// Writes the binary file and its JSON sidecar.
pub fn write_field(path: &Path, f: &SampledField) -> Result<()> {
    fs::write(path, encode_field(f))?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&field_sidecar(f))? + "\n")?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<SampledField> {
    decode_field(&fs::read(path)?)
}

pub fn encode_kernel(k: &ProjectionKernel) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + 16 * k.values.len());
    put_header(&mut buf, KIND_KERNEL, &k.grid, None);
    put_u64(&mut buf, k.k as u64);
    put_f64(&mut buf, k.a);
    put_u32(&mut buf, route_code(k.route));
    put_payload(&mut buf, &k.values);
    buf
}

pub fn decode_kernel(bytes: &[u8]) -> Result<ProjectionKernel> {
    let mut c = Cursor::new(bytes);
    let h = get_header(&mut c)?;
    if h.kind != KIND_KERNEL {
        return Err(Error::Format("file does not hold a projection kernel".into()));
    }
    let k = get_u64(&mut c)? as usize;
    let a = get_f64(&mut c)?;
    let route = match get_u32(&mut c)? {
        0 => KernelRoute::Eigensum,
        1 => KernelRoute::Laguerre,
        other => return Err(Error::Format(format!("unknown kernel route {other}"))),
    };
    let n = h.x.len();
    let values = get_payload(&mut c, n * n)?;
    Ok(ProjectionKernel { k, a, grid: h.x, values, route })
}

pub fn kernel_sidecar(k: &ProjectionKernel) -> Sidecar {
    Sidecar {
        format: "grushin-binary".into(),
        version: FORMAT_VERSION,
        payload: "projection-kernel".into(),
        d1: k.grid.dim(),
        d2: 0,
        x_axes: axis_meta(&k.grid),
        t_axes: Vec::new(),
        level: Some(k.k),
        scale: Some(k.a),
        route: Some(k.route),
        layout: "values[i * n + j] = F(x_i, y_j)".into(),
        values: k.values.len(),
    }
}

pub fn write_kernel(path: &Path, k: &ProjectionKernel) -> Result<()> {
    fs::write(path, encode_kernel(k))?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&kernel_sidecar(k))? + "\n")?;
    Ok(())
}

pub fn read_kernel(path: &Path) -> Result<ProjectionKernel> {
    decode_kernel(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::projection_kernel_eigsum;

    #[test]
    fn field_round_trip_on_disk() {
        let x = TensorGrid::uniform(2, 5, 1.0).unwrap();
        let t = PeriodicGrid::uniform(1, 4, 2.0).unwrap();
        let f = SampledField::from_fn(x, t, |x, t| Complex64::new(x[0] + t[0], x[1])).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        write_field(&p, &f).unwrap();
        assert_eq!(read_field(&p).unwrap(), f);
        let side: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!(side.values, 100);
    }

    #[test]
    fn kernel_round_trip() {
        let g = TensorGrid::new(vec![Quadrature1D::gauss_hermite(12).unwrap()]).unwrap();
        let k = projection_kernel_eigsum(2, 1.0, &g).unwrap();
        assert_eq!(decode_kernel(&encode_kernel(&k)).unwrap(), k);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let x = TensorGrid::uniform(1, 4, 1.0).unwrap();
        let t = PeriodicGrid::uniform(1, 2, 1.0).unwrap();
        let f = SampledField::zeros(x, t).unwrap();
        let mut b = encode_field(&f);
        b.pop();
        assert!(matches!(decode_field(&b), Err(Error::Format(_))));
        assert!(matches!(decode_field(b"nonsense"), Err(Error::Format(_))));
    }
}
