//! Periodic grid, complex fields and the discrete Fourier conventions used
//! everywhere else.
//!
//! The box is `[-L/2, L/2)` sampled at `x_j = -L/2 + j h`, `h = L/N`, with
//! frequencies `xi_k = 2 pi k / L`, `k = -N/2 .. N/2-1`. The spectrum is
//! normalized so that `sum_k |hat f_k|^2 = h sum_j |f_j|^2` (the discrete
//! surrogate of the line integral of `|f|^2`); a single mode `e^{i xi_k x}`
//! has `|hat f_k| = sqrt(L)`. This fixes all Sobolev norms downstream as
//! bit-contracts.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

/// Uniform periodic grid with cached FFT plans.
///
/// Two grids are interchangeable iff they agree in `(length, n)`.
pub struct Grid1D {
    length: f64,
    n: usize,
    h: f64,
    x: Vec<f64>,
    xi: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fwd_pad: Arc<dyn Fft<f64>>,
    inv_pad: Arc<dyn Fft<f64>>,
    n_pad: usize,
}

impl std::fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid1D")
            .field("length", &self.length)
            .field("n", &self.n)
            .finish()
    }
}

impl Grid1D {
    /// `n` must be a power of two (>= 8) so dyadic decompositions and the
    /// 3/2-padded product grid are representable.
    pub fn new(length: f64, n: usize) -> Result<Arc<Self>> {
        if !(length.is_finite() && length > 0.0) {
            return Err(LabError::InvalidGrid(format!("length {length} must be positive")));
        }
        if !n.is_power_of_two() || n < 8 {
            return Err(LabError::InvalidGrid(format!("n = {n} must be a power of two >= 8")));
        }
        let h = length / n as f64;
        let x: Vec<f64> = (0..n).map(|j| j as f64 * h - length / 2.0).collect();
        let xi: Vec<f64> = (0..n)
            .map(|j| {
                let k = if j < n / 2 { j as i64 } else { j as i64 - n as i64 };
                2.0 * std::f64::consts::PI * k as f64 / length
            })
            .collect();
        let mut planner = FftPlanner::new();
        let n_pad = 3 * n / 2;
        Ok(Arc::new(Self {
            length,
            n,
            h,
            x,
            xi,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            fwd_pad: planner.plan_fft_forward(n_pad),
            inv_pad: planner.plan_fft_inverse(n_pad),
            n_pad,
        }))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Sample coordinates `x_j`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Frequencies `xi_k` in FFT bin order.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// Largest frequency magnitude on the grid (the Nyquist mode).
    pub fn xi_max(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / self.length
    }

    /// Index of x = 0 (the box midpoint).
    pub fn mid(&self) -> usize {
        self.n / 2
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.length == other.length && self.n == other.n
    }

    pub fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(LabError::GridMismatch {
                left_l: self.length,
                left_n: self.n,
                right_l: other.length,
                right_n: other.n,
            })
        }
    }

    /// Periodic minimal distance between two coordinates.
    pub fn periodic_distance(&self, a: f64, b: f64) -> f64 {
        let mut d = (a - b).rem_euclid(self.length);
        if d > self.length / 2.0 {
            d = self.length - d;
        }
        d
    }

    /// Unnormalized in-place forward FFT.
    pub(crate) fn fft_raw(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// In-place inverse FFT including the 1/N normalization.
    pub(crate) fn ifft_norm(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        let s = 1.0 / self.n as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    /// Spectrum under the fixed Plancherel convention:
    /// `hat f_k = (h/sqrt(L)) sum_j f_j e^{-i xi_k x_j}`, FFT bin order.
    ///
    /// Since x_0 = -L/2, the phase relative to the raw FFT is (-1)^k.
    pub fn spectrum(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.fft_raw(&mut buf);
        let scale = self.h / self.length.sqrt();
        for (j, v) in buf.iter_mut().enumerate() {
            let sign = if j % 2 == 0 { scale } else { -scale };
            *v *= sign;
        }
        buf
    }

    /// Inverse of [`Grid1D::spectrum`].
    pub fn from_spectrum(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let scale = self.length.sqrt() / self.h;
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(j, v)| if j % 2 == 0 { v * scale } else { -v * scale })
            .collect();
        self.ifft_norm(&mut buf);
        buf
    }

    /// Apply a frequency multiplier `m(xi_k)` to samples.
    pub fn apply_multiplier<F: Fn(f64) -> Complex64>(
        &self,
        samples: &[Complex64],
        m: F,
    ) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.fft_raw(&mut buf);
        for (v, &xi) in buf.iter_mut().zip(&self.xi) {
            *v *= m(xi);
        }
        self.ifft_norm(&mut buf);
        buf
    }

    /// Pointwise product of two fields computed on the 3/2 zero-padded grid,
    /// then truncated back; alias-free for band-limited inputs.
    pub fn dealiased_product(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let m = self.n_pad;
        let half = n / 2;
        let mut fa = a.to_vec();
        let mut fb = b.to_vec();
        self.fft_raw(&mut fa);
        self.fft_raw(&mut fb);
        let mut pa = vec![Complex64::default(); m];
        let mut pb = vec![Complex64::default(); m];
        pa[..half].copy_from_slice(&fa[..half]);
        pa[m - half..].copy_from_slice(&fa[half..]);
        pb[..half].copy_from_slice(&fb[..half]);
        pb[m - half..].copy_from_slice(&fb[half..]);
        self.inv_pad.process(&mut pa);
        self.inv_pad.process(&mut pb);
        // 1/n (not 1/m): keeps padded samples equal to interpolated values
        let s = 1.0 / n as f64;
        for (x, y) in pa.iter_mut().zip(pb.iter()) {
            *x = *x * *y * (s * s);
        }
        self.fwd_pad.process(&mut pa);
        let mut out = vec![Complex64::default(); n];
        out[..half].copy_from_slice(&pa[..half]);
        out[half..].copy_from_slice(&pa[m - half..]);
        let mut res = out;
        self.inv.process(&mut res);
        // product spectrum is per-coefficient exact; 1/m accounts for the
        // padded forward transform
        let s2 = 1.0 / m as f64;
        for v in res.iter_mut() {
            *v *= s2;
        }
        res
    }
}

/// A regularity index; finite by construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() {
            Ok(Self(s))
        } else {
            Err(LabError::Parameter(format!("Sobolev index {s} is not finite")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Split s = m + alpha with integer m >= 0 and alpha in [0,1).
    /// Only valid for s >= 0.
    pub fn split(self) -> Result<(usize, f64)> {
        if self.0 < 0.0 {
            return Err(LabError::Domain(format!(
                "localized norms require s >= 0, got {}",
                self.0
            )));
        }
        let m = self.0.floor();
        let alpha = self.0 - m;
        Ok((m as usize, alpha))
    }

    pub fn require_above(self, threshold: f64, what: &str) -> Result<Self> {
        if self.0 > threshold {
            Ok(self)
        } else {
            Err(LabError::Domain(format!(
                "{what} requires s > {threshold}, got {}",
                self.0
            )))
        }
    }
}

impl From<SobolevIndex> for f64 {
    fn from(s: SobolevIndex) -> f64 {
        s.0
    }
}

/// Grid samples of a complex wave function; immutable once built, samples
/// validated finite.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: Arc<Grid1D>,
    samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<Grid1D>, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(LabError::InvalidGrid(format!(
                "sample count {} does not match grid n = {}",
                samples.len(),
                grid.n_points()
            )));
        }
        if let Some(i) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LabError::NonFinite { context: "field samples", index: i });
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: &Arc<Grid1D>, f: F) -> Result<Self> {
        let samples = grid.x().iter().map(|&x| f(x)).collect();
        Self::new(grid.clone(), samples)
    }

    pub fn constant(grid: &Arc<Grid1D>, c: Complex64) -> Self {
        Self { grid: grid.clone(), samples: vec![c; grid.n_points()] }
    }

    pub fn zero(grid: &Arc<Grid1D>) -> Self {
        Self::constant(grid, Complex64::default())
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Replace samples without re-validation; callers guarantee finiteness.
    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), self.grid.n_points());
        Self { grid: self.grid.clone(), samples }
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.spectrum(&self.samples)
    }

    /// Spectral derivative of the given order; the unpaired Nyquist mode is
    /// zeroed for odd orders.
    pub fn derivative(&self, order: u32) -> ComplexField {
        let n = self.grid.n_points();
        let samples = self.grid.apply_multiplier(&self.samples, |xi| {
            if order % 2 == 1 && xi.abs() >= self.grid.xi_max() {
                return Complex64::default();
            }
            (Complex64::new(0.0, xi)).powu(order)
        });
        debug_assert_eq!(samples.len(), n);
        self.with_samples(samples)
    }

    pub fn scale(&self, lambda: Complex64) -> ComplexField {
        self.with_samples(self.samples.iter().map(|&z| z * lambda).collect())
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(&other.grid)?;
        Ok(self.with_samples(
            self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(&other.grid)?;
        Ok(self.with_samples(
            self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
        ))
    }

    /// |q|^2 - 1 as a real-part field (imaginary part zero).
    pub fn modulus_sq_minus_one(&self) -> ComplexField {
        self.with_samples(
            self.samples.iter().map(|z| Complex64::new(z.norm_sqr() - 1.0, 0.0)).collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// A closed interval of half-width `radius` around `center`, interpreted on
/// the periodic box. The diameter must fit in one period; membership uses the
/// periodic minimal distance, so balls near the seam wrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: f64,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0 && center.is_finite()) {
            return Err(LabError::Domain(format!(
                "ball (center {center}, radius {radius}) is not valid"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        if 2.0 * self.radius >= grid.length() {
            return Err(LabError::Domain(format!(
                "ball diameter {} does not fit in the period {}",
                2.0 * self.radius,
                grid.length()
            )));
        }
        Ok(())
    }

    /// Indices of grid points inside the (closed) ball.
    pub fn indices(&self, grid: &Grid1D) -> Vec<usize> {
        let tol = 1e-9 * grid.spacing();
        grid.x()
            .iter()
            .enumerate()
            .filter(|(_, &x)| grid.periodic_distance(x, self.center) <= self.radius + tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices in the half-open tile [center - radius, center + radius);
    /// used by partition families so tiles never double-count a point.
    pub fn tile_indices(&self, grid: &Grid1D) -> Vec<usize> {
        let tol = 1e-9 * grid.spacing();
        grid.x()
            .iter()
            .enumerate()
            .filter(|(_, &x)| {
                let mut d = (x - self.center).rem_euclid(grid.length());
                if d > grid.length() / 2.0 {
                    d -= grid.length();
                }
                d >= -self.radius - tol && d < self.radius - tol
            })
            .map(|(i, _)| i)
            .collect()
    }
}
