//! Periodic grid, unitary discrete Fourier transform, Bessel-type multipliers,
//! band projections and Sobolev norms.
//!
//! The domain `[-L, L)` carries samples `x_j = -L + j dx`, `dx = 2L / N`, and
//! the dual lattice `xi_k = pi k / L` for `k = -N/2 .. N/2 - 1`. Spectra are
//! stored in FFT order (`k = 0, 1, .., N/2 - 1, -N/2, .., -1`); use
//! [`Grid::frequencies`] to read the frequency of each slot.
//!
//! The transform approximates the continuum transform
//! `f^(xi) = (2 pi)^{-1/2} int f(x) e^{-i x xi} dx` by the rectangle rule, so
//! discrete Parseval holds with quadrature weights `dx` (space) and `pi / L`
//! (frequency).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Serializable description of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_length: f64,
    pub num_points: usize,
}

/// Periodic grid on `[-L, L)` with its paired frequency ladder and cached FFT plans.
pub struct Grid {
    half_length: f64,
    num_points: usize,
    dx: f64,
    frequencies: Vec<f64>,
    signs: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.half_length)
            .field("num_points", &self.num_points)
            .field("dx", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.half_length == other.half_length && self.num_points == other.num_points
    }
}

impl Grid {
    /// Grid with a power-of-two number of points.
    pub fn new(half_length: f64, num_points: usize) -> Result<Arc<Grid>> {
        if !num_points.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "num_points = {num_points} is not a power of two (use Grid::with_even_points)"
            )));
        }
        Self::with_even_points(half_length, num_points)
    }

    /// Grid with any even number of points.
    pub fn with_even_points(half_length: f64, num_points: usize) -> Result<Arc<Grid>> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::Parameter(format!(
                "half_length must be positive, got {half_length}"
            )));
        }
        if num_points < 2 || num_points % 2 != 0 {
            return Err(Error::Parameter(format!(
                "num_points must be even and >= 2, got {num_points}"
            )));
        }
        let n = num_points;
        let dx = 2.0 * half_length / n as f64;
        let frequencies = (0..n)
            .map(|i| PI * signed_index(i, n) as f64 / half_length)
            .collect();
        let signs = (0..n)
            .map(|i| if signed_index(i, n) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            half_length,
            num_points,
            dx,
            frequencies,
            signs,
            fft_forward: planner.plan_fft_forward(n),
            fft_inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn from_spec(spec: GridSpec) -> Result<Arc<Grid>> {
        Self::new(spec.half_length, spec.num_points)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            half_length: self.half_length,
            num_points: self.num_points,
        }
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.num_points
    }

    pub fn is_empty(&self) -> bool {
        self.num_points == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Frequency spacing `pi / L`, the quadrature weight on the spectral side.
    pub fn dxi(&self) -> f64 {
        PI / self.half_length
    }

    /// Frequencies in storage (FFT) order.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Largest resolved frequency magnitude, `pi N / (2L)`.
    pub fn max_frequency(&self) -> f64 {
        PI * (self.num_points / 2) as f64 / self.half_length
    }

    /// Signed mode number of storage slot `i`.
    pub fn mode_number(&self, slot: usize) -> i64 {
        signed_index(slot, self.num_points)
    }

    /// Storage slot of signed mode number `k`, if it is on the ladder.
    pub fn slot_of_mode(&self, k: i64) -> Option<usize> {
        let half = (self.num_points / 2) as i64;
        if k < -half || k >= half {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + self.num_points as i64) as usize })
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.x(j)).collect()
    }

    /// Signed periodic displacement `x - a` folded into `[-L, L)`.
    pub fn periodic_offset(&self, x: f64, a: f64) -> f64 {
        let period = 2.0 * self.half_length;
        (x - a + self.half_length).rem_euclid(period) - self.half_length
    }

    /// In-place forward transform of raw samples into spectral coefficients.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.num_points);
        self.fft_forward.process(buf);
        let scale = self.dx / (2.0 * PI).sqrt();
        for (c, &sign) in buf.iter_mut().zip(&self.signs) {
            *c *= scale * sign;
        }
    }

    /// In-place inverse of [`Grid::forward_in_place`].
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.num_points);
        for (c, &sign) in buf.iter_mut().zip(&self.signs) {
            *c *= sign;
        }
        self.fft_inverse.process(buf);
        let scale = (2.0 * PI).sqrt() / (2.0 * self.half_length);
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.num_points {
            return Err(Error::Structural(format!(
                "{what} has length {len}, grid has {} points",
                self.num_points
            )));
        }
        Ok(())
    }
}

fn signed_index(slot: usize, n: usize) -> i64 {
    if slot < n / 2 {
        slot as i64
    } else {
        slot as i64 - n as i64
    }
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::Structural(format!(
            "grid mismatch: (L={}, N={}) vs (L={}, N={})",
            a.half_length, a.num_points, b.half_length, b.num_points
        )));
    }
    Ok(())
}

/// Complex samples on a grid.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    samples: Vec<Complex64>,
}

/// Complex spectral coefficients on a grid, in FFT order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coefficients: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Field {
    pub fn new(grid: Arc<Grid>, samples: Vec<Complex64>) -> Result<Self> {
        grid.check_len(samples.len(), "field")?;
        Ok(Field { grid, samples })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let samples = vec![Complex64::new(0.0, 0.0); grid.len()];
        Field { grid, samples }
    }

    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(f64) -> Complex64) -> Self {
        let samples = (0..grid.len()).map(|j| f(grid.x(j))).collect();
        Field { grid, samples }
    }

    pub fn from_real(grid: Arc<Grid>, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// `amplitude * e^{i xi_k x}` for the signed mode number `k`.
    pub fn plane_wave(grid: Arc<Grid>, mode: i64, amplitude: Complex64) -> Result<Self> {
        if grid.slot_of_mode(mode).is_none() {
            return Err(Error::Parameter(format!("mode {mode} is not on the frequency ladder")));
        }
        let xi = PI * mode as f64 / grid.half_length();
        Ok(Self::from_fn(grid, |x| amplitude * Complex64::from_polar(1.0, xi * x)))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn to_spectrum(&self) -> Spectrum {
        let mut buf = self.samples.clone();
        self.grid.forward_in_place(&mut buf);
        Spectrum {
            grid: self.grid.clone(),
            coefficients: buf,
        }
    }

    /// Discrete `L^2` norm, `(sum |f_j|^2 dx)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// Discrete `L^2` norm restricted to the grid indices in `set`.
    pub fn l2_norm_on(&self, set: &[usize]) -> f64 {
        (set.iter().map(|&j| self.samples[j].norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    /// Discrete inner product `sum f_j conj(g_j) dx`.
    pub fn inner(&self, other: &Field) -> Result<Complex64> {
        same_grid(&self.grid, &other.grid)?;
        let s: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.dx())
    }

    /// Pointwise product with real samples of equal length.
    pub fn multiply_real(&self, weights: &[f64]) -> Result<Field> {
        self.grid.check_len(weights.len(), "multiplier")?;
        let samples = self.samples.iter().zip(weights).map(|(c, &w)| c * w).collect();
        Ok(Field {
            grid: self.grid.clone(),
            samples,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Field {
        Field {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        same_grid(&self.grid, &other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Ok(Field {
            grid: self.grid.clone(),
            samples,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Spectrum {
    pub fn new(grid: Arc<Grid>, coefficients: Vec<Complex64>) -> Result<Self> {
        grid.check_len(coefficients.len(), "spectrum")?;
        Ok(Spectrum { grid, coefficients })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let coefficients = vec![Complex64::new(0.0, 0.0); grid.len()];
        Spectrum { grid, coefficients }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    pub fn to_field(&self) -> Field {
        let mut buf = self.coefficients.clone();
        self.grid.inverse_in_place(&mut buf);
        Field {
            grid: self.grid.clone(),
            samples: buf,
        }
    }

    /// Discrete `L^2` norm on the frequency side, `(sum |c_k|^2 pi/L)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dxi()).sqrt()
    }
}

/// Either side of the transform.
#[derive(Debug, Clone)]
pub enum Transformed {
    Spectrum(Spectrum),
    Field(Field),
}

/// Transform raw samples in the requested direction.
///
/// `Forward` reads `values` as samples and yields a spectrum; `Inverse` reads
/// them as coefficients and yields a field.
pub fn transform(grid: &Arc<Grid>, values: &[Complex64], direction: Direction) -> Result<Transformed> {
    grid.check_len(values.len(), "transform input")?;
    let mut buf = values.to_vec();
    Ok(match direction {
        Direction::Forward => {
            grid.forward_in_place(&mut buf);
            Transformed::Spectrum(Spectrum {
                grid: grid.clone(),
                coefficients: buf,
            })
        }
        Direction::Inverse => {
            grid.inverse_in_place(&mut buf);
            Transformed::Field(Field {
                grid: grid.clone(),
                samples: buf,
            })
        }
    })
}

/// The symbol `(xi^2 + 1)^{p/2}`.
#[inline]
pub fn bessel_symbol(xi: f64, power: f64) -> f64 {
    (xi * xi + 1.0).powf(0.5 * power)
}

/// Multiply coefficient `k` by `(xi_k^2 + 1)^{p/2}`; `p = s` is `D^s`.
pub fn apply_bessel_multiplier(spec: &Spectrum, power: f64) -> Spectrum {
    let coefficients = spec
        .coefficients
        .iter()
        .zip(spec.grid.frequencies())
        .map(|(c, &xi)| c * bessel_symbol(xi, power))
        .collect();
    Spectrum {
        grid: spec.grid.clone(),
        coefficients,
    }
}

/// Closed frequency interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let band = Band { lo, hi };
        band.validate()?;
        Ok(band)
    }

    /// `[center - half_width, center + half_width]`.
    pub fn centered(center: f64, half_width: f64) -> Result<Self> {
        Self::new(center - half_width, center + half_width)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_nan() || self.hi.is_nan() || self.lo > self.hi {
            return Err(Error::Structural(format!(
                "malformed band [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn contains(&self, xi: f64) -> bool {
        self.lo <= xi && xi <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Storage slots whose frequency lies in at least one band.
pub fn band_slots(grid: &Grid, bands: &[Band]) -> Result<Vec<usize>> {
    for b in bands {
        b.validate()?;
    }
    Ok(grid
        .frequencies()
        .iter()
        .enumerate()
        .filter(|(_, &xi)| bands.iter().any(|b| b.contains(xi)))
        .map(|(i, _)| i)
        .collect())
}

/// Keep coefficients whose frequency lies in some band, zero the rest.
pub fn band_project(spec: &Spectrum, bands: &[Band]) -> Result<Spectrum> {
    for b in bands {
        b.validate()?;
    }
    let coefficients = spec
        .coefficients
        .iter()
        .zip(spec.grid.frequencies())
        .map(|(&c, &xi)| {
            if bands.iter().any(|b| b.contains(xi)) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(Spectrum {
        grid: spec.grid.clone(),
        coefficients,
    })
}

/// `( sum (xi_k^2 + 1)^r |c_k|^2 pi/L )^{1/2}`.
pub fn sobolev_norm(field: &Field, r: f64) -> f64 {
    sobolev_norm_of_spectrum(&field.to_spectrum(), r)
}

pub fn sobolev_norm_of_spectrum(spec: &Spectrum, r: f64) -> f64 {
    let sum: f64 = spec
        .coefficients
        .iter()
        .zip(spec.grid.frequencies())
        .map(|(c, &xi)| (xi * xi + 1.0).powf(r) * c.norm_sqr())
        .sum();
    (sum * spec.grid.dxi()).sqrt()
}
