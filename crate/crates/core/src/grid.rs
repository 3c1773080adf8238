//! Periodic boxes standing in for whole space, and the Fourier transform
//! pair used by every multiplier in the crate.
//!
//! The box is `[-L/2, L/2)^n` sampled at `x_j = -L/2 + j h` with `h = L/N`.
//! The forward transform approximates the continuous Fourier integral,
//!
//! ```text
//! c(k) = sum_x f(x) exp(-i xi_k . x) h^n,    xi_k = 2 pi k / L,
//! ```
//!
//! so the zero coefficient is the Riemann sum of `∫ f dx`. With this scaling
//! the discrete Parseval identity reads
//! `sum |f|^2 h^n = (2 pi)^-n sum |c|^2 (2 pi / L)^n = L^-n sum |c|^2`.
//!
//! Spectral coefficients are stored in FFT order along every axis: index
//! `j < N/2` holds wavenumber `k = j`, index `j >= N/2` holds `k = j - N`.
//! Flat indices are row-major with the last axis fastest.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::par;

/// Residue bound used by [`to_physical`] relative to the coefficient scale.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-8;

struct GridInner {
    dim: usize,
    points: usize,
    length: f64,
    spacing: f64,
    /// Wavenumbers `xi` along one axis, FFT order.
    axis_xi: Vec<f64>,
    /// Physical coordinates along one axis.
    axis_x: Vec<f64>,
    /// `|xi|` at every flat spectral index.
    xi_mag: Vec<f64>,
    /// `(-1)^(j_1 + ... + j_n)`: the phase that moves the FFT origin to `-L/2`.
    parity: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Discrete periodic box of dimension 1, 2 or 3.
///
/// Cheap to clone; all derived tables are shared.
#[derive(Clone)]
pub struct GridSpec {
    inner: Arc<GridInner>,
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("dim", &self.inner.dim)
            .field("points", &self.inner.points)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.points == other.inner.points
                && self.inner.length.to_bits() == other.inner.length.to_bits())
    }
}

/// Builds a grid, rejecting unsupported shapes.
pub fn make_grid(dim: usize, points_per_axis: usize, box_length: f64) -> Result<GridSpec> {
    GridSpec::new(dim, points_per_axis, box_length)
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidPoints(points));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidLength(length));
        }
        // N is a power of two, so L / N is exact and spacing * N == L.
        let spacing = length / points as f64;
        let dk = 2.0 * PI / length;
        let axis_xi: Vec<f64> = (0..points)
            .map(|j| dk * signed_index(j, points) as f64)
            .collect();
        let axis_x: Vec<f64> = (0..points)
            .map(|j| -0.5 * length + j as f64 * spacing)
            .collect();
        let total = points.pow(dim as u32);
        let mut xi_mag = Vec::with_capacity(total);
        let mut parity = Vec::with_capacity(total);
        let mut digits = [0usize; 3];
        for idx in 0..total {
            split_index(idx, dim, points, &mut digits);
            let s: f64 = digits[..dim].iter().map(|&j| axis_xi[j] * axis_xi[j]).sum();
            xi_mag.push(s.sqrt());
            let odd = digits[..dim].iter().sum::<usize>() % 2 == 1;
            parity.push(if odd { -1.0 } else { 1.0 });
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                points,
                length,
                spacing,
                axis_xi,
                axis_x,
                xi_mag,
                parity,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.points
    }

    pub fn box_length(&self) -> f64 {
        self.inner.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Total number of grid points, `N^n`.
    pub fn len(&self) -> usize {
        self.inner.xi_mag.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.powi(self.inner.dim as i32)
    }

    /// Lattice spacing in frequency, `2 pi / L`.
    pub fn frequency_step(&self) -> f64 {
        2.0 * PI / self.inner.length
    }

    /// Frequency lattice along one axis in increasing order,
    /// `2 pi k / L` for `k = -N/2, ..., N/2 - 1`.
    pub fn lattice(&self) -> Vec<f64> {
        let n = self.inner.points as i64;
        let dk = self.frequency_step();
        (-n / 2..n / 2).map(|k| dk * k as f64).collect()
    }

    /// Wavenumbers along one axis in storage (FFT) order.
    pub fn axis_frequencies(&self) -> &[f64] {
        &self.inner.axis_xi
    }

    /// Physical coordinates along one axis.
    pub fn axis_coordinates(&self) -> &[f64] {
        &self.inner.axis_x
    }

    /// `|xi|` at every flat spectral index.
    pub fn xi_magnitudes(&self) -> &[f64] {
        &self.inner.xi_mag
    }

    /// Per-axis digits of a flat index.
    pub fn digits(&self, idx: usize) -> [usize; 3] {
        let mut d = [0usize; 3];
        split_index(idx, self.inner.dim, self.inner.points, &mut d);
        d
    }

    /// Frequency vector at a flat spectral index (unused axes are zero).
    pub fn xi_vector(&self, idx: usize) -> [f64; 3] {
        let d = self.digits(idx);
        let mut xi = [0.0; 3];
        for a in 0..self.inner.dim {
            xi[a] = self.inner.axis_xi[d[a]];
        }
        xi
    }

    /// Signed integer wavenumbers at a flat spectral index.
    pub fn wavenumbers(&self, idx: usize) -> [i64; 3] {
        let d = self.digits(idx);
        let mut k = [0i64; 3];
        for a in 0..self.inner.dim {
            k[a] = signed_index(d[a], self.inner.points);
        }
        k
    }

    /// Physical position at a flat index (unused axes are zero).
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let d = self.digits(idx);
        let mut x = [0.0; 3];
        for a in 0..self.inner.dim {
            x[a] = self.inner.axis_x[d[a]];
        }
        x
    }

    /// Euclidean distance of a grid point from the origin.
    pub fn radius(&self, idx: usize) -> f64 {
        let x = self.position(idx);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// True if the flat index lies on the outermost layer of the box.
    pub fn on_boundary(&self, idx: usize) -> bool {
        let d = self.digits(idx);
        d[..self.inner.dim]
            .iter()
            .any(|&j| j == 0 || j == self.inner.points - 1)
    }

    fn parity(&self) -> &[f64] {
        &self.inner.parity
    }

    /// In-place n-dimensional FFT over the flat buffer.
    fn fft_nd(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.inner.points;
        let dim = self.inner.dim;
        let plan = if inverse {
            &self.inner.inverse
        } else {
            &self.inner.forward
        };
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            if stride == 1 {
                par::for_each_chunk_mut(data, n, |_, line| plan.process(line));
                continue;
            }
            // Gather strided lines into contiguous rows, transform, scatter back.
            let lines = data.len() / n;
            let mut rows = vec![Complex64::new(0.0, 0.0); data.len()];
            {
                let src: &[Complex64] = data;
                par::for_each_chunk_mut(&mut rows, n, |line, row| {
                    let base = line_base(line, n, stride);
                    for (j, r) in row.iter_mut().enumerate() {
                        *r = src[base + j * stride];
                    }
                    plan.process(row);
                });
            }
            for line in 0..lines {
                let base = line_base(line, n, stride);
                for j in 0..n {
                    data[base + j * stride] = rows[line * n + j];
                }
            }
        }
    }
}

/// Start offset of the `line`-th 1-D line along an axis with the given stride.
fn line_base(line: usize, n: usize, stride: usize) -> usize {
    let outer = line / stride;
    let inner = line % stride;
    outer * n * stride + inner
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn split_index(mut idx: usize, dim: usize, n: usize, out: &mut [usize; 3]) {
    for a in (0..dim).rev() {
        out[a] = idx % n;
        idx /= n;
    }
}

/// Real grid function.
#[derive(Clone, Debug)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(x)` at every grid point; `x` has `dim` entries.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Self {
        let dim = grid.dim();
        let values = par::map_range(grid.len(), |idx| {
            let x = grid.position(idx);
            f(&x[..dim])
        });
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// `amplitude * exp(-|x|^2 / width^2)`.
    pub fn gaussian(grid: &GridSpec, amplitude: f64, width: f64) -> Self {
        Self::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            amplitude * (-r2 / (width * width)).exp()
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Riemann sum of the field, `sum f h^n`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Field, s: f64) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    /// Periodic shift by `cells` grid cells along `axis` (`g(x) = f(x - cells h e_axis)`).
    pub fn shifted(&self, axis: usize, cells: usize) -> Self {
        let n = self.grid.points_per_axis();
        let dim = self.grid.dim();
        let stride = n.pow((dim - 1 - axis) as u32);
        let mut out = vec![0.0; self.values.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let j = (idx / stride) % n;
            let src_j = (j + n - cells % n) % n;
            let src = idx - j * stride + src_j * stride;
            *o = self.values[src];
        }
        Self {
            grid: self.grid.clone(),
            values: out,
        }
    }

    /// Little-endian binary layout: `u32 n`, `u32 N`, `f64 L`, then `N^n`
    /// row-major `f64` values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.points_per_axis() as u32).to_le_bytes())?;
        w.write_all(&self.grid.box_length().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let points = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let length = f64::from_le_bytes(b8);
        let grid = GridSpec::new(dim, points, length)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Field::new(grid, values)
    }

    /// Two-column CSV `x,value`; one-dimensional fields only.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if self.grid.dim() != 1 {
            return Err(Error::InvalidParameter(
                "CSV export is defined for one-dimensional fields".into(),
            ));
        }
        writeln!(w, "x,value")?;
        for (x, v) in self.grid.axis_coordinates().iter().zip(&self.values) {
            writeln!(w, "{x:.15e},{v:.15e}")?;
        }
        Ok(())
    }
}

/// Complex coefficients on the frequency lattice, FFT order.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Spectral field whose coefficient at index `i` is `f(i, |xi_i|)`.
    pub fn from_symbol(grid: &GridSpec, f: impl Fn(usize, f64) -> f64 + Sync + Send) -> Self {
        let mags = grid.xi_magnitudes();
        let coeffs = par::map_range(grid.len(), |i| Complex64::new(f(i, mags[i]), 0.0));
        Self {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at `xi = 0`, the Riemann sum of the underlying integral.
    pub fn zero_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Multiplies each coefficient by the real symbol `m(index, |xi|)`.
    pub fn apply_radial(&self, m: impl Fn(usize, f64) -> f64 + Sync + Send) -> Self {
        let mags = self.grid.xi_magnitudes();
        let mut coeffs = self.coeffs.clone();
        par::for_each_indexed_mut(&mut coeffs, |i, c| *c *= m(i, mags[i]));
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &SpectralField, s: Complex64) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    /// Physical-space L² norm via Parseval, `(L^-n sum |c|^2)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (s / self.grid.box_length().powi(self.grid.dim() as i32)).sqrt()
    }

    /// Largest deviation from conjugate symmetry `c(-k) = conj(c(k))`,
    /// skipping Nyquist indices whose partner falls off the lattice.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.grid.points_per_axis();
        let dim = self.grid.dim();
        let mut worst = 0.0_f64;
        for idx in 0..self.coeffs.len() {
            let d = self.grid.digits(idx);
            if d[..dim].contains(&(n / 2)) {
                continue;
            }
            let mut partner = 0;
            for &j in &d[..dim] {
                partner = partner * n + (n - j) % n;
            }
            worst = worst.max((self.coeffs[partner] - self.coeffs[idx].conj()).norm());
        }
        worst
    }
}

pub(crate) fn ensure_same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Forward transform, `c(k) = sum_x f(x) e^{-i xi_k x} h^n`.
pub fn to_spectral(f: &Field) -> SpectralField {
    let grid = f.grid.clone();
    let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fft_nd(&mut data, false);
    let w = grid.cell_volume();
    let parity = grid.parity();
    par::for_each_indexed_mut(&mut data, |i, c| *c *= w * parity[i]);
    SpectralField { grid, coeffs: data }
}

/// Inverse of [`to_spectral`].
///
/// Fails when the inverse carries an imaginary part above
/// [`IMAGINARY_RESIDUE_TOL`] times the coefficient scale `L^-n sum |c|`,
/// which signals input that does not represent a real function.
pub fn to_physical(c: &SpectralField) -> Result<Field> {
    let (field, residue, scale) = inverse_parts(c);
    let bound = IMAGINARY_RESIDUE_TOL * scale;
    if residue > bound {
        return Err(Error::ImaginaryResidue { residue, bound });
    }
    Ok(field)
}

/// Inverse transform that discards the imaginary part without checking it.
pub(crate) fn to_physical_unchecked(c: &SpectralField) -> Field {
    inverse_parts(c).0
}

fn inverse_parts(c: &SpectralField) -> (Field, f64, f64) {
    let grid = c.grid.clone();
    let parity = grid.parity();
    let mut data = c.coeffs.clone();
    par::for_each_indexed_mut(&mut data, |i, v| *v *= parity[i]);
    grid.fft_nd(&mut data, true);
    let volume = grid.box_length().powi(grid.dim() as i32);
    let scale = c.coeffs.iter().map(|v| v.norm()).sum::<f64>() / volume;
    let inv = 1.0 / volume;
    let mut residue = 0.0_f64;
    let values: Vec<f64> = data
        .iter()
        .map(|v| {
            residue = residue.max((v.im * inv).abs());
            v.re * inv
        })
        .collect();
    (Field { grid, values }, residue, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &GridSpec, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Field::new(grid.clone(), values).unwrap()
    }

    #[test]
    fn lattice_for_two_pi_box_is_integer() {
        let g = make_grid(1, 8, 2.0 * PI).unwrap();
        let lat = g.lattice();
        let expect = [-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        for (a, b) in lat.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_dimensional_lattice_size_and_extent() {
        let g = make_grid(2, 16, 40.0).unwrap();
        assert_eq!(g.len(), 256);
        let max = g.lattice().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!((max - 2.0 * PI * 8.0 / 40.0).abs() < 1e-14);
        assert!((max - 1.2566).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(make_grid(1, 7, 10.0), Err(Error::InvalidPoints(7))));
        assert!(matches!(make_grid(1, 4, 10.0), Err(Error::InvalidPoints(4))));
        assert!(matches!(make_grid(4, 8, 10.0), Err(Error::InvalidDimension(4))));
        assert!(matches!(make_grid(0, 8, 10.0), Err(Error::InvalidDimension(0))));
        assert!(matches!(make_grid(1, 8, 0.0), Err(Error::InvalidLength(_))));
        assert!(matches!(make_grid(1, 8, -1.0), Err(Error::InvalidLength(_))));
    }

    #[test]
    fn spacing_times_points_is_length() {
        for &(n, l) in &[(8usize, 10.0), (1024, 400.0), (64, 3.7)] {
            let g = make_grid(1, n, l).unwrap();
            assert_eq!(g.spacing() * n as f64, l);
        }
    }

    #[test]
    fn zero_field_has_zero_spectrum() {
        let g = make_grid(2, 8, 5.0).unwrap();
        let c = to_spectral(&Field::zeros(&g));
        assert!(c.coefficients().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn gaussian_zero_mode_is_integral() {
        let g = make_grid(1, 512, 40.0).unwrap();
        let c = to_spectral(&Field::gaussian(&g, 1.0, 1.0));
        assert!((c.zero_mode().re - PI.sqrt()).abs() < 1e-10);
        assert!(c.zero_mode().im.abs() < 1e-14);
    }

    #[test]
    fn real_field_is_conjugate_symmetric() {
        for dim in 1..=3 {
            let g = make_grid(dim, 8, 3.0).unwrap();
            let c = to_spectral(&random_field(&g, 7 + dim as u64));
            assert!(c.symmetry_defect() < 1e-13);
        }
    }

    #[test]
    fn round_trip_random_fields() {
        for dim in 1..=3 {
            let g = make_grid(dim, 16, 9.0).unwrap();
            let f = random_field(&g, dim as u64);
            let back = to_physical(&to_spectral(&f)).unwrap();
            let err = f
                .values()
                .iter()
                .zip(back.values())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-12 * f.max_abs(), "dim {dim}: {err}");
        }
    }

    #[test]
    fn single_mode_is_cosine() {
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let mut c = SpectralField::zeros(&g);
        // k0 = 3 and its conjugate partner at -3.
        c.coefficients_mut()[3] = Complex64::new(1.0, 0.0);
        c.coefficients_mut()[32 - 3] = Complex64::new(1.0, 0.0);
        let f = to_physical(&c).unwrap();
        for (x, v) in g.axis_coordinates().iter().zip(f.values()) {
            let expect = 2.0 * (3.0 * x).cos() / (2.0 * PI);
            assert!((v - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn asymmetric_input_reports_residue() {
        let g = make_grid(1, 16, 4.0).unwrap();
        let mut c = SpectralField::zeros(&g);
        c.coefficients_mut()[2] = Complex64::new(1.0, 0.0);
        assert!(matches!(
            to_physical(&c),
            Err(Error::ImaginaryResidue { .. })
        ));
    }

    #[test]
    fn parseval_with_documented_constant() {
        for dim in 1..=3 {
            let g = make_grid(dim, 16, 6.5).unwrap();
            let f = random_field(&g, 40 + dim as u64);
            let c = to_spectral(&f);
            let phys: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
            let dxi = g.frequency_step().powi(dim as i32);
            let spec: f64 = c.coefficients().iter().map(|v| v.norm_sqr()).sum::<f64>() * dxi
                / (2.0 * PI).powi(dim as i32);
            assert!((phys - spec).abs() <= 1e-10 * phys);
            assert!((c.l2_norm() - phys.sqrt()).abs() <= 1e-10 * phys.sqrt());
        }
    }

    #[test]
    fn shift_multiplies_by_phase() {
        let g = make_grid(2, 16, 5.0).unwrap();
        let f = random_field(&g, 99);
        let c = to_spectral(&f);
        for axis in 0..2 {
            let cs = to_spectral(&f.shifted(axis, 1));
            for i in 0..g.len() {
                let xi = g.xi_vector(i)[axis];
                let expect = c.coefficients()[i] * Complex64::from_polar(1.0, -xi * g.spacing());
                assert!((cs.coefficients()[i] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn binary_and_csv_layouts() {
        let g = make_grid(1, 8, 2.5).unwrap();
        let f = random_field(&g, 3);
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 8 * 8);
        assert_eq!(&buf[0..4], &1u32.to_le_bytes());
        assert_eq!(&buf[4..8], &8u32.to_le_bytes());
        assert_eq!(&buf[8..16], &2.5f64.to_le_bytes());
        assert_eq!(&buf[16..24], &f.values()[0].to_le_bytes());
        let back = Field::read_binary(&buf[..]).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid(), f.grid());

        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("x,value\n"));

        let g2 = make_grid(2, 8, 2.5).unwrap();
        assert!(Field::zeros(&g2).write_csv(Vec::new()).is_err());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Field::zeros(&make_grid(1, 8, 1.0).unwrap());
        let b = Field::zeros(&make_grid(1, 16, 1.0).unwrap());
        assert!(matches!(a.add_scaled(&b, 1.0), Err(Error::GridMismatch)));
    }
}
