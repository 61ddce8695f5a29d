//! Periodic position/wavenumber lattice and the unitary transform between
//! the two representations.
//!
//! Positions are `y_n = -L + n·dy` for `n = 0..N`, wavenumbers are
//! `k_m = m·dk` for `m = -N/2..N/2`, stored in ascending order so that array
//! index `j` holds `m = j - N/2`. The transform is
//!
//! ```text
//! F_m = N^{-1/2} Σ_n f_n exp(-i k_m y_n)
//! ```
//!
//! which is unitary in both directions. Physical densities (per unit length
//! or per unit wavenumber) are recovered at the observable layer with
//! [`GridSpec::amplitude_scale`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest lattice accepted by [`GridSpec::new`].
pub const MIN_POINTS: usize = 8;

/// Discretization of the periodic interval `[-L, L)` with `N` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    num_points: usize,
}

impl GridSpec {
    pub fn new(half_width: f64, num_points: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive and finite, got {half_width}")));
        }
        if num_points < MIN_POINTS || num_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "number of points must be even and at least {MIN_POINTS}, got {num_points}"
            )));
        }
        Ok(Self { half_width, num_points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.num_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `dy = 2L/N`.
    pub fn dy(&self) -> f64 {
        2.0 * self.half_width / self.num_points as f64
    }

    /// Wavenumber spacing `dk = π/L`.
    pub fn dk(&self) -> f64 {
        PI / self.half_width
    }

    /// Position of node `n`.
    pub fn position(&self, n: usize) -> f64 {
        -self.half_width + n as f64 * self.dy()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.num_points).map(|n| self.position(n)).collect()
    }

    /// Signed lattice index `m = j - N/2` of wavenumber slot `j`.
    pub fn mode(&self, j: usize) -> i64 {
        j as i64 - (self.num_points / 2) as i64
    }

    /// Wavenumber of slot `j` (ascending order).
    pub fn wavenumber(&self, j: usize) -> f64 {
        self.mode(j) as f64 * self.dk()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.wavenumber(j)).collect()
    }

    /// Slot holding `-k_j`. The most negative mode is its own partner on a
    /// periodic lattice.
    pub fn negated_slot(&self, j: usize) -> usize {
        (self.num_points - j) % self.num_points
    }

    /// Largest representable wavenumber magnitude, `(N/2)·dk`.
    pub fn nyquist(&self) -> f64 {
        (self.num_points / 2) as f64 * self.dk()
    }

    /// Minimal periodic distance between two positions.
    pub fn periodic_distance(&self, a: f64, b: f64) -> f64 {
        let period = 2.0 * self.half_width;
        let d = (a - b).rem_euclid(period);
        d.min(period - d)
    }

    /// Factor `sqrt(dy/dk)` mapping unitary transform coefficients to the
    /// amplitude of the continuum transform `(2π)^{-1/2} ∫ dy e^{-iky} f(y)`.
    pub fn amplitude_scale(&self) -> f64 {
        (self.dy() / self.dk()).sqrt()
    }

    pub(crate) fn check_len(&self, actual: usize) -> Result<()> {
        if actual != self.num_points {
            return Err(Error::LengthMismatch { expected: self.num_points, actual });
        }
        Ok(())
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[-{L}, {L}) with {N} nodes", L = self.half_width, N = self.num_points)
    }
}

pub fn make_grid(half_width: f64, num_points: usize) -> Result<GridSpec> {
    GridSpec::new(half_width, num_points)
}

/// Reusable forward/inverse transform for one grid.
///
/// Holds FFT plans plus the `(-1)^m` factors that come from the lattice
/// starting at `-L` rather than zero.
#[derive(Clone)]
pub struct SpectralTransform {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    signs: Vec<f64>,
    scale: f64,
}

impl fmt::Debug for SpectralTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralTransform").field("grid", &self.grid).finish()
    }
}

impl SpectralTransform {
    pub fn new(grid: GridSpec) -> Self {
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let signs = (0..n).map(|j| if grid.mode(j).rem_euclid(2) == 0 { 1.0 } else { -1.0 }).collect();
        Self {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            signs,
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Position samples to ascending-order spectral coefficients, in place.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.grid.check_len(buf.len())?;
        self.forward.process(buf);
        // FFT bin q holds mode m ≡ q (mod N); rotating by N/2 sorts ascending.
        buf.rotate_left(self.grid.len() / 2);
        for (v, s) in buf.iter_mut().zip(&self.signs) {
            *v *= s * self.scale;
        }
        Ok(())
    }

    /// Ascending-order spectral coefficients back to position samples, in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.grid.check_len(buf.len())?;
        for (v, s) in buf.iter_mut().zip(&self.signs) {
            *v *= s * self.scale;
        }
        buf.rotate_right(self.grid.len() / 2);
        self.inverse.process(buf);
        Ok(())
    }

    /// Transform every lane of `field` along `axis` (0 = particle 1,
    /// 1 = particle 2).
    pub fn forward_axis(&self, field: &mut Array2<Complex64>, axis: usize) -> Result<()> {
        self.apply_axis(field, axis, true)
    }

    pub fn inverse_axis(&self, field: &mut Array2<Complex64>, axis: usize) -> Result<()> {
        self.apply_axis(field, axis, false)
    }

    fn apply_axis(&self, field: &mut Array2<Complex64>, axis: usize, forward: bool) -> Result<()> {
        if axis > 1 {
            return Err(Error::InvalidAxis(axis + 1));
        }
        self.grid.check_len(field.len_of(Axis(axis)))?;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for mut lane in field.lanes_mut(Axis(axis)) {
            for (b, v) in buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            if forward {
                self.forward_in_place(&mut buf)?;
            } else {
                self.inverse_in_place(&mut buf)?;
            }
            for (v, b) in lane.iter_mut().zip(&buf) {
                *v = *b;
            }
        }
        Ok(())
    }

    /// Forward transform along both axes.
    pub fn forward_2d(&self, field: &mut Array2<Complex64>) -> Result<()> {
        self.forward_axis(field, 0)?;
        self.forward_axis(field, 1)
    }

    pub fn inverse_2d(&self, field: &mut Array2<Complex64>) -> Result<()> {
        self.inverse_axis(field, 0)?;
        self.inverse_axis(field, 1)
    }
}

pub fn to_spectrum(field: &[Complex64], grid: &GridSpec) -> Result<Vec<Complex64>> {
    grid.check_len(field.len())?;
    let mut out = field.to_vec();
    SpectralTransform::new(*grid).forward_in_place(&mut out)?;
    Ok(out)
}

pub fn from_spectrum(spectrum: &[Complex64], grid: &GridSpec) -> Result<Vec<Complex64>> {
    grid.check_len(spectrum.len())?;
    let mut out = spectrum.to_vec();
    SpectralTransform::new(*grid).inverse_in_place(&mut out)?;
    Ok(out)
}
