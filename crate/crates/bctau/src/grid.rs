//! Complex scalar fields on the periodic unit square and their centered
//! finite-difference stencils.
//!
//! A field of size `n` holds values at the nodes `(i/n, j/n)` for
//! `0 <= i, j < n`, stored row-major with `x` fastest (`data[j * n + i]`).
//! All stencils are second order and wrap periodically. Pointwise maps run in
//! parallel over nodes; reductions are serial so results are bit-identical for
//! any thread count.

use std::io::{Read, Write};
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Errors raised while reading or writing fields.
#[derive(Debug, thiserror::Error)]
pub enum GridIoError {
    /// Underlying I/O failure.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    /// CSV syntax or a non-numeric cell.
    #[error("csv: {0}")]
    Csv(String),
    /// Header is missing or malformed.
    #[error("container header: {0}")]
    Header(String),
    /// Row or payload length does not match the grid size.
    #[error("expected {expected} values, found {found}")]
    Length {
        /// Expected count.
        expected: usize,
        /// Found count.
        found: usize,
    },
}

/// Header of the binary field container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerHeader {
    /// Nodes per side.
    pub n: usize,
    /// Payload encoding; always `"c128le"` (re, im as little-endian f64).
    pub encoding: String,
}

const ENCODING: &str = "c128le";

/// Complex scalar field on an `n x n` periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n: usize,
    data: Vec<Complex64>,
}

impl Field {
    /// Builds a field from node indices.
    pub fn from_index_fn<F>(n: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> Complex64 + Sync,
    {
        assert!(n >= 4, "grid size must be at least 4");
        let data = (0..n * n).into_par_iter().map(|k| f(k % n, k / n)).collect();
        Self { n, data }
    }

    /// Samples a function of the node coordinates `(x, y)` in `[0, 1)^2`.
    pub fn from_fn<F>(n: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let h = 1.0 / n as f64;
        Self::from_index_fn(n, |i, j| f(i as f64 * h, j as f64 * h))
    }

    /// Samples a real function of the node coordinates.
    pub fn from_real_fn<F>(n: usize, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        Self::from_fn(n, |x, y| Complex64::new(f(x, y), 0.0))
    }

    /// Wraps raw row-major data. Panics if the length is not `n * n`.
    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n * n, "field data has wrong length");
        Self { n, data }
    }

    /// The constant field.
    pub fn constant(n: usize, c: Complex64) -> Self {
        Self {
            n,
            data: vec![c; n * n],
        }
    }

    /// The zero field.
    pub fn zeros(n: usize) -> Self {
        Self::constant(n, Complex64::new(0.0, 0.0))
    }

    /// Number of nodes per side.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `1/n`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Row-major node values.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Mutable row-major node values.
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Consumes the field and returns its data.
    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// Value at node `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[j * self.n + i]
    }

    /// Value at a node given by possibly out-of-range indices, wrapped
    /// periodically.
    pub fn wrap(&self, i: isize, j: isize) -> Complex64 {
        let n = self.n as isize;
        let (i, j) = (i.rem_euclid(n) as usize, j.rem_euclid(n) as usize);
        self.data[j * self.n + i]
    }

    /// Pointwise map.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        Self {
            n: self.n,
            data: self.data.par_iter().map(|&z| f(z)).collect(),
        }
    }

    /// Pointwise combination of two fields of the same size.
    pub fn zip_map<F>(&self, o: &Field, f: F) -> Self
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        assert_eq!(self.n, o.n, "field sizes differ");
        Self {
            n: self.n,
            data: self
                .data
                .par_iter()
                .zip(o.data.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Pointwise exponential.
    pub fn exp(&self) -> Self {
        self.map(|z| z.exp())
    }

    /// Multiplies by a complex scalar.
    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    /// Multiplies by a real scalar.
    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    /// Pointwise quotient.
    pub fn div(&self, o: &Field) -> Self {
        self.zip_map(o, |a, b| a / b)
    }

    /// Largest modulus over nodes.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest modulus of the imaginary part.
    pub fn max_abs_im(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// Arithmetic mean over nodes.
    pub fn mean(&self) -> Complex64 {
        self.sum() / (self.n * self.n) as f64
    }

    /// Sum over nodes.
    pub fn sum(&self) -> Complex64 {
        self.data.iter().sum()
    }

    /// Root-mean-square modulus.
    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    /// True when every node value is finite.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest deviation from the mean; zero for constant fields.
    pub fn oscillation(&self) -> f64 {
        let m = self.mean();
        self.data.iter().fold(0.0, |a, z| a.max((z - m).norm()))
    }

    /// Restriction to every `k`-th node (`n` must be divisible by `k`).
    pub fn subsample(&self, k: usize) -> Self {
        assert_eq!(self.n % k, 0, "grid size not divisible");
        let m = self.n / k;
        Self::from_index_fn(m, |i, j| self.at(i * k, j * k))
    }

    /// Writes one CSV row per `y` index with `re,im` pairs for increasing `x`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), GridIoError> {
        let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.data.chunks(self.n) {
            let rec: Vec<String> = row.iter().flat_map(|z| [z.re.to_string(), z.im.to_string()]).collect();
            wr.write_record(&rec).map_err(|e| GridIoError::Csv(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the format of [`Field::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self, GridIoError> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut data = Vec::new();
        let mut rows = 0;
        for rec in rd.records() {
            let rec = rec.map_err(|e| GridIoError::Csv(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|c| c.trim().parse::<f64>().map_err(|e| GridIoError::Csv(format!("{c:?}: {e}"))))
                .collect::<Result<_, _>>()?;
            if vals.len() % 2 != 0 {
                return Err(GridIoError::Csv("odd number of cells in a row".into()));
            }
            data.extend(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])));
            rows += 1;
        }
        if rows < 4 || data.len() != rows * rows {
            return Err(GridIoError::Length {
                expected: rows * rows,
                found: data.len(),
            });
        }
        Ok(Self::from_vec(rows, data))
    }

    /// JSON header line followed by the raw little-endian payload.
    pub fn to_container(&self) -> Vec<u8> {
        let header = ContainerHeader {
            n: self.n,
            encoding: ENCODING.into(),
        };
        let mut out = serde_json::to_vec(&header).expect("header serialises");
        out.push(b'\n');
        for z in &self.data {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    /// Inverse of [`Field::to_container`].
    pub fn from_container(bytes: &[u8]) -> Result<Self, GridIoError> {
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| GridIoError::Header("missing header line".into()))?;
        let header: ContainerHeader =
            serde_json::from_slice(&bytes[..split]).map_err(|e| GridIoError::Header(e.to_string()))?;
        if header.encoding != ENCODING {
            return Err(GridIoError::Header(format!("unknown encoding {}", header.encoding)));
        }
        if header.n < 4 {
            return Err(GridIoError::Header(format!("grid size {} below 4", header.n)));
        }
        let payload = &bytes[split + 1..];
        let expected = header.n * header.n;
        if payload.len() != 16 * expected {
            return Err(GridIoError::Length {
                expected,
                found: payload.len() / 16,
            });
        }
        let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
        let data = payload.chunks(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
        Ok(Self::from_vec(header.n, data))
    }

    fn stencil<F>(&self, f: F) -> Self
    where
        F: Fn(&Field, isize, isize) -> Complex64 + Sync,
    {
        Self::from_index_fn(self.n, |i, j| f(self, i as isize, j as isize))
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, o: &Field) -> Field {
        self.zip_map(o, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, o: &Field) -> Field {
        self.zip_map(o, |a, b| a - b)
    }
}

impl Mul for &Field {
    type Output = Field;
    fn mul(self, o: &Field) -> Field {
        self.zip_map(o, |a, b| a * b)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|z| -z)
    }
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Centered `d/dx`.
pub fn dx(f: &Field) -> Field {
    let s = 0.5 / f.h();
    f.stencil(|g, i, j| (g.wrap(i + 1, j) - g.wrap(i - 1, j)) * s)
}

/// Centered `d/dy`.
pub fn dy(f: &Field) -> Field {
    let s = 0.5 / f.h();
    f.stencil(|g, i, j| (g.wrap(i, j + 1) - g.wrap(i, j - 1)) * s)
}

/// Compact three-point `d^2/dx^2`.
pub fn dxx(f: &Field) -> Field {
    let s = 1.0 / (f.h() * f.h());
    f.stencil(|g, i, j| (g.wrap(i + 1, j) - 2.0 * g.wrap(i, j) + g.wrap(i - 1, j)) * s)
}

/// Compact three-point `d^2/dy^2`.
pub fn dyy(f: &Field) -> Field {
    let s = 1.0 / (f.h() * f.h());
    f.stencil(|g, i, j| (g.wrap(i, j + 1) - 2.0 * g.wrap(i, j) + g.wrap(i, j - 1)) * s)
}

/// Four-corner `d^2/dxdy`.
pub fn dxy(f: &Field) -> Field {
    let s = 0.25 / (f.h() * f.h());
    f.stencil(|g, i, j| {
        (g.wrap(i + 1, j + 1) - g.wrap(i + 1, j - 1) - g.wrap(i - 1, j + 1) + g.wrap(i - 1, j - 1))
            * s
    })
}

/// `d/dz = (d/dx - i d/dy)/2`.
pub fn dz(f: &Field) -> Field {
    let s = 0.25 / f.h();
    f.stencil(|g, i, j| {
        ((g.wrap(i + 1, j) - g.wrap(i - 1, j)) - I * (g.wrap(i, j + 1) - g.wrap(i, j - 1))) * s
    })
}

/// `d/dzbar = (d/dx + i d/dy)/2`.
pub fn dzb(f: &Field) -> Field {
    let s = 0.25 / f.h();
    f.stencil(|g, i, j| {
        ((g.wrap(i + 1, j) - g.wrap(i - 1, j)) + I * (g.wrap(i, j + 1) - g.wrap(i, j - 1))) * s
    })
}

/// Compact `d^2/dz dzbar`, one quarter of the five-point Laplacian.
pub fn dz_dzb(f: &Field) -> Field {
    let s = 0.25 / (f.h() * f.h());
    f.stencil(|g, i, j| {
        (g.wrap(i + 1, j) + g.wrap(i - 1, j) + g.wrap(i, j + 1) + g.wrap(i, j - 1)
            - 4.0 * g.wrap(i, j))
            * s
    })
}

/// `d^2/dzbar^2 = (f_xx - f_yy + 2i f_xy)/4` from compact stencils.
pub fn dzb_dzb(f: &Field) -> Field {
    let s = 0.25 / (f.h() * f.h());
    f.stencil(|g, i, j| {
        let xx = g.wrap(i + 1, j) + g.wrap(i - 1, j);
        let yy = g.wrap(i, j + 1) + g.wrap(i, j - 1);
        let xy = 0.25
            * (g.wrap(i + 1, j + 1) - g.wrap(i + 1, j - 1) - g.wrap(i - 1, j + 1)
                + g.wrap(i - 1, j - 1));
        (xx - yy + 2.0 * I * xy) * s
    })
}

/// `d^2/dz^2 = (f_xx - f_yy - 2i f_xy)/4` from compact stencils.
pub fn dz_dz(f: &Field) -> Field {
    dzb_dzb(&f.conj()).conj()
}

/// Two-dimensional forward FFT (unnormalised), row-major like [`Field`].
pub fn fft2(f: &Field) -> Vec<Complex64> {
    transform2(f.n(), f.data().to_vec(), false)
}

/// Inverse of [`fft2`], including the `1/n^2` normalisation.
pub fn ifft2(n: usize, spectrum: Vec<Complex64>) -> Field {
    let mut out = transform2(n, spectrum, true);
    let s = 1.0 / (n * n) as f64;
    out.iter_mut().for_each(|z| *z *= s);
    Field::from_vec(n, out)
}

fn transform2(n: usize, mut data: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = data[j * n + i];
        }
        fft.process(&mut col);
        for j in 0..n {
            data[j * n + i] = col[j];
        }
    }
    data
}

/// Signed wavenumber of FFT bin `k` on an `n`-point grid.
pub fn wavenumber(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn wave(n: usize) -> Field {
        Field::from_real_fn(n, |x, y| (2.0 * PI * x).sin() * (4.0 * PI * y).cos())
    }

    #[test]
    fn centered_derivative_is_second_order() {
        let err = |n: usize| {
            let f = wave(n);
            let exact = Field::from_real_fn(n, |x, y| 2.0 * PI * (2.0 * PI * x).cos() * (4.0 * PI * y).cos());
            (&dx(&f) - &exact).max_abs()
        };
        let ratio = err(32) / err(64);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn wirtinger_symbols() {
        // f = exp(2 pi i (x + 2y)): f_z = pi (i + 2) f, f_zbar = pi (i - 2) f.
        let err = |n: usize| {
            let f = Field::from_fn(n, |x, y| Complex64::new(0.0, 2.0 * PI * (x + 2.0 * y)).exp());
            let ez = (&dz(&f) - &f.scale(Complex64::new(2.0 * PI, PI))).max_abs();
            let ezb = (&dzb(&f) - &f.scale(Complex64::new(-2.0 * PI, PI))).max_abs();
            ez.max(ezb)
        };
        assert!(err(128) < 2e-2);
        assert!((err(64) / err(128) - 4.0).abs() < 0.1);
    }

    #[test]
    fn dz_dzb_matches_quarter_laplacian() {
        let f = wave(32);
        let lap = &dxx(&f) + &dyy(&f);
        assert!((&dz_dzb(&f) - &lap.scale_re(0.25)).max_abs() < 1e-9);
    }

    #[test]
    fn dzb_dzb_combines_compact_stencils() {
        let f = Field::from_fn(16, |x, y| Complex64::new((2.0 * PI * (x + 2.0 * y)).sin(), (2.0 * PI * x).cos()));
        let expect = &(&dxx(&f) - &dyy(&f)) + &dxy(&f).scale(Complex64::new(0.0, 2.0));
        assert!((&dzb_dzb(&f) - &expect.scale_re(0.25)).max_abs() < 1e-9);
        let expect_z = &(&dxx(&f) - &dyy(&f)) - &dxy(&f).scale(Complex64::new(0.0, 2.0));
        assert!((&dz_dz(&f) - &expect_z.scale_re(0.25)).max_abs() < 1e-9);
    }

    #[test]
    fn fft_roundtrip() {
        let f = wave(16);
        let back = ifft2(16, fft2(&f));
        assert!((&back - &f).max_abs() < 1e-13);
    }

    #[test]
    fn csv_and_container_round_trip() {
        let f = Field::from_fn(8, |x, y| Complex64::new((2.0 * PI * x).sin() + y, 1.0 / 3.0 - x * y));
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 16);
        assert_eq!(Field::read_csv(buf.as_slice()).unwrap(), f);
        assert_eq!(Field::from_container(&f.to_container()).unwrap(), f);
        let mut bad = f.to_container();
        bad.pop();
        assert!(matches!(Field::from_container(&bad), Err(GridIoError::Length { .. })));
        assert!(Field::read_csv("1,0,2\n".as_bytes()).is_err());
    }
}
