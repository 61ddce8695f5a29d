//! Band-limited source amplitudes and the momentum-entangled pair state.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{GridSpec, SpectralTransform};

/// Tolerance on the unit-norm invariants of amplitudes and states.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Discrete source amplitude `W_m` over the wavenumber lattice.
///
/// Normalized so that `Σ |W_m|² dk = 1`, and exactly zero above the band
/// limit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude {
    grid: GridSpec,
    values: Vec<Complex64>,
    band_limit: f64,
}

impl SpectralAmplitude {
    /// Wrap explicit values. Entries above `band_limit` must already be zero
    /// and the weighted norm must be one.
    pub fn new(grid: GridSpec, values: Vec<Complex64>, band_limit: f64) -> Result<Self> {
        grid.check_len(values.len())?;
        if !(band_limit > 0.0) {
            return Err(Error::InvalidParameter {
                name: "band_limit",
                reason: format!("must be positive, got {band_limit}"),
            });
        }
        for (j, v) in values.iter().enumerate() {
            if grid.wavenumber(j).abs() > band_limit && *v != Complex64::new(0.0, 0.0) {
                return Err(Error::InvalidParameter {
                    name: "values",
                    reason: format!("nonzero entry at k = {} beyond band limit", grid.wavenumber(j)),
                });
            }
        }
        let norm_sqr = weighted_norm_sqr(&values, grid.dk());
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { grid, values, band_limit })
    }

    /// Normalize arbitrary values (zeroing anything above the band) and wrap.
    pub fn normalized(grid: GridSpec, mut values: Vec<Complex64>, band_limit: f64) -> Result<Self> {
        grid.check_len(values.len())?;
        for (j, v) in values.iter_mut().enumerate() {
            if grid.wavenumber(j).abs() > band_limit {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        let norm_sqr = weighted_norm_sqr(&values, grid.dk());
        if !(norm_sqr > 0.0 && norm_sqr.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "amplitude vanishes inside the band".into(),
            });
        }
        let s = norm_sqr.sqrt().recip();
        values.iter_mut().for_each(|v| *v *= s);
        Self::new(grid, values, band_limit)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn band_limit(&self) -> f64 {
        self.band_limit
    }

    /// `|W_m|²`, the source wavenumber density.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Multiply every entry by a uniformly distributed phase.
    ///
    /// Moduli are untouched; the same seed always yields the same phases.
    pub fn randomize_phase(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = self
            .values
            .iter()
            .map(|v| {
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                v * Complex64::from_polar(1.0, theta)
            })
            .collect();
        Self { values, ..self.clone() }
    }
}

fn weighted_norm_sqr(values: &[Complex64], dk: f64) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dk
}

/// Gaussian envelope `exp(-k²/2σ²)` truncated at `|k| ≤ k_cut`.
pub fn gaussian_band(grid: &GridSpec, sigma_k: f64, k_cut: f64) -> Result<SpectralAmplitude> {
    if !(sigma_k > 0.0 && sigma_k.is_finite()) {
        return Err(Error::InvalidParameter { name: "sigma_k", reason: format!("must be positive, got {sigma_k}") });
    }
    if !(k_cut > 0.0 && k_cut < grid.nyquist()) {
        return Err(Error::InvalidParameter {
            name: "k_cut",
            reason: format!("must lie in (0, {}), got {k_cut}", grid.nyquist()),
        });
    }
    let values = (0..grid.len())
        .map(|j| {
            let k = grid.wavenumber(j);
            let w = if k.abs() <= k_cut { (-k * k / (2.0 * sigma_k * sigma_k)).exp() } else { 0.0 };
            Complex64::new(w, 0.0)
        })
        .collect();
    SpectralAmplitude::normalized(*grid, values, k_cut)
}

/// Masses of both particles and the reduced Planck constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub mass1: f64,
    pub mass2: f64,
    pub hbar: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { mass1: 1.0, mass2: 1.0, hbar: 1.0 }
    }
}

impl Physics {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass1", self.mass1), ("mass2", self.mass2), ("hbar", self.hbar)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: format!("must be positive, got {v}") });
            }
        }
        Ok(())
    }

    /// Reduced mass `m₁m₂/(m₁+m₂)`.
    pub fn reduced_mass(&self) -> f64 {
        self.mass1 * self.mass2 / (self.mass1 + self.mass2)
    }
}

/// Two-particle amplitude `ψ(y₁, y₂)` on the lattice, row index `y₁`,
/// column index `y₂`, with `Σ |ψ|² dy² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteWave {
    pub(crate) grid: GridSpec,
    pub(crate) psi: Array2<Complex64>,
    pub(crate) physics: Physics,
}

impl BipartiteWave {
    /// Wrap an existing amplitude array. The array must be `N×N` and
    /// normalized.
    pub fn new(grid: GridSpec, psi: Array2<Complex64>, physics: Physics) -> Result<Self> {
        grid.check_len(psi.nrows())?;
        grid.check_len(psi.ncols())?;
        physics.validate()?;
        let wave = Self { grid, psi, physics };
        let norm_sqr = wave.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(wave)
    }

    pub(crate) fn with_psi(&self, psi: Array2<Complex64>) -> Self {
        Self { grid: self.grid, psi, physics: self.physics }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn psi(&self) -> &Array2<Complex64> {
        &self.psi
    }

    pub fn physics(&self) -> &Physics {
        &self.physics
    }

    /// `Σ |ψ|² dy²`.
    pub fn norm_sqr(&self) -> f64 {
        let dy = self.grid.dy();
        self.psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dy * dy
    }

    /// Largest deviation from `ψ(y₁+s, y₂+s) = ψ(y₁, y₂)` over all lattice
    /// shifts `s`.
    pub fn shift_invariance_defect(&self) -> f64 {
        let n = self.grid.len();
        let mut worst = 0.0f64;
        for s in 1..n {
            for i in 0..n {
                for j in 0..n {
                    let d = (self.psi[[(i + s) % n, (j + s) % n]] - self.psi[[i, j]]).norm();
                    worst = worst.max(d);
                }
            }
        }
        worst
    }
}

/// Build `ψ(y₁,y₂) = c Σ_m W_m exp(-i k_m y₁) exp(+i k_m y₂)`.
///
/// The state is assembled in the double-spectral representation, where it
/// sits on the anti-diagonal `k₁ = -k₂`, and transformed back; `c` is taken
/// from the assembled array.
pub fn build_epr_state(source: &SpectralAmplitude, physics: Physics) -> Result<BipartiteWave> {
    physics.validate()?;
    let norm_sqr = weighted_norm_sqr(&source.values, source.grid.dk());
    if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm_sqr });
    }
    let grid = source.grid;
    let n = grid.len();
    let mut field = Array2::<Complex64>::zeros((n, n));
    for (j, w) in source.values.iter().enumerate() {
        field[[grid.negated_slot(j), j]] += *w;
    }
    SpectralTransform::new(grid).inverse_2d(&mut field)?;

    let dy = grid.dy();
    let total: f64 = field.iter().map(|v| v.norm_sqr()).sum::<f64>() * dy * dy;
    let c = total.sqrt().recip();
    field.mapv_inplace(|v| v * c);
    BipartiteWave::new(grid, field, physics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> GridSpec {
        GridSpec::new(8.0, 32).unwrap()
    }

    #[test]
    fn gaussian_band_is_normalized_and_truncated() {
        let g = grid();
        for (sigma, cut) in [(0.5, 1.0), (1.0, 2.5), (10.0, 0.9)] {
            let w = gaussian_band(&g, sigma, cut).unwrap();
            let total: f64 = w.density().iter().sum::<f64>() * g.dk();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            for (j, v) in w.values().iter().enumerate() {
                if g.wavenumber(j).abs() > cut {
                    assert_eq!(*v, Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn wide_gaussian_is_flat_over_band() {
        let g = GridSpec::new(20.0, 128).unwrap();
        let (sigma, cut): (f64, f64) = (50.0, 2.0);
        // Envelope ratio edge/centre is exp(-k_edge²/2σ²) for the outermost
        // node inside the band.
        let k_edge = (0..g.len()).map(|j| g.wavenumber(j).abs()).filter(|k| *k <= cut).fold(0.0, f64::max);
        let ratio = (-k_edge * k_edge / (2.0 * sigma * sigma)).exp();
        assert!(1.0 - ratio < 0.01);
        let w = gaussian_band(&g, sigma, cut).unwrap();
        let inside: Vec<f64> = w
            .values()
            .iter()
            .enumerate()
            .filter(|(j, _)| g.wavenumber(*j).abs() <= cut)
            .map(|(_, v)| v.norm())
            .collect();
        let max = inside.iter().cloned().fold(0.0, f64::max);
        let min = inside.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((max - min) / max < 0.01);
        assert_abs_diff_eq!(min / max, ratio, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_band_rejects_cut_beyond_nyquist() {
        let g = grid();
        assert!(gaussian_band(&g, 1.0, g.nyquist()).is_err());
        assert!(gaussian_band(&g, 1.0, 0.0).is_err());
        assert!(gaussian_band(&g, 0.0, 1.0).is_err());
    }

    #[test]
    fn randomize_phase_keeps_moduli_and_is_deterministic() {
        let g = grid();
        let w = gaussian_band(&g, 1.0, 2.0).unwrap();
        let a = w.randomize_phase(7);
        let b = w.randomize_phase(7);
        let c = w.randomize_phase(8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (x, y) in w.values().iter().zip(a.values()) {
            assert_abs_diff_eq!(x.norm(), y.norm(), epsilon = 1e-15);
        }
    }

    #[test]
    fn explicit_amplitude_checks() {
        let g = grid();
        let mut vals = vec![Complex64::new(0.0, 0.0); g.len()];
        vals[16] = Complex64::new(1.0, 0.0);
        assert!(matches!(SpectralAmplitude::new(g, vals.clone(), 1.0), Err(Error::NotNormalized { .. })));
        vals[16] = Complex64::new((1.0 / g.dk()).sqrt(), 0.0);
        assert!(SpectralAmplitude::new(g, vals.clone(), 1.0).is_ok());
        vals[0] = Complex64::new(0.1, 0.0);
        assert!(SpectralAmplitude::new(g, vals, 1.0).is_err());
    }

    #[test]
    fn single_mode_state_is_a_plane_wave_pair() {
        let g = grid();
        let j0 = 19;
        let k0 = g.wavenumber(j0);
        let w = SpectralAmplitude::normalized(
            g,
            (0..g.len()).map(|j| Complex64::new(if j == j0 { 1.0 } else { 0.0 }, 0.0)).collect(),
            2.0,
        )
        .unwrap();
        let state = build_epr_state(&w, Physics::default()).unwrap();
        let modulus = 1.0 / (2.0 * g.half_width());
        let reference = state.psi()[[0, 0]];
        for i in 0..g.len() {
            for j in 0..g.len() {
                let v = state.psi()[[i, j]];
                assert_abs_diff_eq!(v.norm(), modulus, epsilon = 1e-12);
                let expect = reference * Complex64::from_polar(1.0, k0 * (g.position(j) - g.position(i)));
                assert!((v - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_direct_plane_wave_sum() {
        let g = GridSpec::new(5.0, 16).unwrap();
        let w = gaussian_band(&g, 1.2, 3.0).unwrap().randomize_phase(3);
        let state = build_epr_state(&w, Physics::default()).unwrap();
        let n = g.len();
        let mut direct = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                direct[[i, j]] = (0..n)
                    .map(|m| {
                        let k = g.wavenumber(m);
                        w.values()[m] * Complex64::from_polar(1.0, -k * g.position(i) + k * g.position(j))
                    })
                    .sum();
            }
        }
        let dy = g.dy();
        let c = (direct.iter().map(|v| v.norm_sqr()).sum::<f64>() * dy * dy).sqrt().recip();
        for (a, b) in state.psi().iter().zip(direct.iter()) {
            assert!((a - b * c).norm() < 1e-13);
        }
    }

    #[test]
    fn epr_state_is_normalized_and_shift_invariant() {
        let g = grid();
        let w = gaussian_band(&g, 0.8, 2.0).unwrap().randomize_phase(11);
        let state = build_epr_state(&w, Physics::default()).unwrap();
        assert_abs_diff_eq!(state.norm_sqr(), 1.0, epsilon = 1e-12);
        assert!(state.shift_invariance_defect() < 1e-12);
    }

    #[test]
    fn bipartite_wave_validates() {
        let g = GridSpec::new(1.0, 8).unwrap();
        let psi = Array2::from_elem((8, 8), Complex64::new(1.0, 0.0));
        assert!(matches!(BipartiteWave::new(g, psi, Physics::default()), Err(Error::NotNormalized { .. })));
        let psi = Array2::from_elem((8, 6), Complex64::new(1.0, 0.0));
        assert!(BipartiteWave::new(g, psi, Physics::default()).is_err());
        let bad = Physics { mass1: 0.0, ..Physics::default() };
        assert!(bad.validate().is_err());
        assert_abs_diff_eq!(Physics { mass1: 1.0, mass2: 3.0, hbar: 1.0 }.reduced_mass(), 0.75);
    }
}
