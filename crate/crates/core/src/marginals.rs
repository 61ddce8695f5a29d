//! Observables: spectral components, the particle-2 wavenumber
//! distribution, position marginals, the far-field screen profile and
//! distances between distributions.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use serde::Serialize;

use crate::entangle::BipartiteWave;
use crate::error::{Error, Result};
use crate::lattice::{GridSpec, SpectralTransform};

/// Particle-2 wavenumber density `D(k₂)` with `Σ D_m dk = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberDistribution {
    grid: GridSpec,
    values: Vec<f64>,
}

impl WavenumberDistribution {
    /// Wrap raw densities. Entries must be nonnegative; normalization is
    /// not enforced so that intermediate sums can be represented.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("densities must be finite and nonnegative, found {v}"),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `Σ D_m dk`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dk()
    }

    /// Probability mass at `|k| > k_cut`.
    pub fn mass_outside(&self, k_cut: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(j, _)| self.grid.wavenumber(*j).abs() > k_cut)
            .map(|(_, v)| v)
            .sum::<f64>()
            * self.grid.dk()
    }

    /// Standard deviation of `k` under this density.
    pub fn spread(&self) -> f64 {
        let dk = self.grid.dk();
        let total = self.total();
        let mean: f64 =
            self.values.iter().enumerate().map(|(j, v)| v * self.grid.wavenumber(j)).sum::<f64>() * dk / total;
        let var: f64 =
            self.values.iter().enumerate().map(|(j, v)| v * (self.grid.wavenumber(j) - mean).powi(2)).sum::<f64>() * dk
                / total;
        var.sqrt()
    }

    /// `Σ_b weight_b · D_b`, the outcome-weighted mixture of distributions
    /// on a shared grid.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a WavenumberDistribution)>) -> Result<Self> {
        let mut iter = parts.into_iter().peekable();
        let grid = match iter.peek() {
            Some((_, d)) => d.grid,
            None => {
                return Err(Error::InvalidParameter { name: "parts", reason: "empty mixture".into() });
            }
        };
        let mut values = vec![0.0; grid.len()];
        for (w, d) in iter {
            if d.grid != grid {
                return Err(Error::GridMismatch);
            }
            for (acc, v) in values.iter_mut().zip(&d.values) {
                *acc += w * v;
            }
        }
        Self::new(grid, values)
    }
}

/// Spectral components `Φ(k₁, k₂)` scaled to the continuum convention, so
/// that `Σ |Φ|² dk² = Σ |ψ|² dy²`.
pub fn spectral_components(state: &BipartiteWave) -> Array2<Complex64> {
    let mut phi = state.psi.clone();
    SpectralTransform::new(state.grid).forward_2d(&mut phi).expect("state arrays always match their grid");
    let s = state.grid.dy() / state.grid.dk();
    phi.mapv_inplace(|v| v * s);
    phi
}

/// `D_m = Σ_{k₁} |Φ(k₁, k_m)|² dk`.
pub fn particle2_distribution(state: &BipartiteWave) -> WavenumberDistribution {
    distribution_from_components(&state.grid, &spectral_components(state))
}

pub(crate) fn distribution_from_components(grid: &GridSpec, phi: &Array2<Complex64>) -> WavenumberDistribution {
    let dk = grid.dk();
    let values = phi.axis_iter(Axis(1)).map(|col| col.iter().map(|v| v.norm_sqr()).sum::<f64>() * dk).collect();
    WavenumberDistribution { grid: *grid, values }
}

/// Position density of particle `axis` (1 or 2), integrating the other
/// coordinate out. Integrates to one against `dy`.
pub fn position_marginal(state: &BipartiteWave, axis: usize) -> Result<Vec<f64>> {
    let summed = match axis {
        1 => Axis(1),
        2 => Axis(0),
        other => return Err(Error::InvalidAxis(other)),
    };
    let dy = state.grid.dy();
    Ok(state.psi.map(|v| v.norm_sqr()).sum_axis(summed).iter().map(|v| v * dy).collect())
}

/// Density of particle-2 arrivals on a screen after free flight.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenProfile {
    pub positions: Vec<f64>,
    pub density: Vec<f64>,
    pub spacing: f64,
}

impl ScreenProfile {
    pub fn total(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.spacing
    }
}

/// Map `D(k₂)` onto screen coordinates `y = ħ k₂ T / m₂` with Jacobian
/// `m₂ / (ħ T)`.
pub fn screen_profile(dist: &WavenumberDistribution, flight_time: f64, mass2: f64, hbar: f64) -> Result<ScreenProfile> {
    if !(flight_time > 0.0 && flight_time.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "flight_time",
            reason: format!("must be positive, got {flight_time}"),
        });
    }
    if !(mass2 > 0.0 && hbar > 0.0) {
        return Err(Error::InvalidParameter { name: "mass2", reason: "mass and hbar must be positive".into() });
    }
    let velocity_scale = hbar * flight_time / mass2;
    let positions = dist.grid.wavenumbers().iter().map(|k| k * velocity_scale).collect();
    let density = dist.values.iter().map(|d| d / velocity_scale).collect();
    Ok(ScreenProfile { positions, density, spacing: dist.grid.dk() * velocity_scale })
}

/// Max-abs and total-variation distance between two densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionDistance {
    pub max_abs: f64,
    pub total_variation: f64,
}

pub fn distribution_distance(a: &WavenumberDistribution, b: &WavenumberDistribution) -> Result<DistributionDistance> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let (mut max_abs, mut sum) = (0.0f64, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        let d = (x - y).abs();
        max_abs = max_abs.max(d);
        sum += d;
    }
    Ok(DistributionDistance { max_abs, total_variation: 0.5 * sum * a.grid.dk() })
}

/// Total-variation distance between two position densities on `grid`.
pub fn position_tv(grid: &GridSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    grid.check_len(a.len())?;
    grid.check_len(b.len())?;
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * grid.dy())
}
