//! Time evolution of the pair. Particle 2 always moves freely; every local
//! operation acts on the particle-1 axis only.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::entangle::{BipartiteWave, Physics};
use crate::error::{Error, Result};
use crate::lattice::{GridSpec, SpectralTransform};

/// Gram-defect tolerance for explicit unitaries.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Rectangular aperture in a flat barrier, with raised-cosine walls.
///
/// `V(y) = 0` for `|y - y_c| ≤ a`, rises as `V₀·(1 - cos(π d/s))/2` over
/// `0 < d = |y - y_c| - a < s`, and is `V₀` beyond. Distances are periodic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlitScreen {
    pub center: f64,
    pub aperture_half_width: f64,
    pub barrier_height: f64,
    pub edge_smoothing: f64,
}

impl SlitScreen {
    pub fn new(center: f64, aperture_half_width: f64, barrier_height: f64, edge_smoothing: f64) -> Result<Self> {
        let screen = Self { center, aperture_half_width, barrier_height, edge_smoothing };
        screen.validate()?;
        Ok(screen)
    }

    /// Screen with the default barrier `50·ħ²K²/2m₁` for band limit `K` and
    /// walls four nodes wide.
    pub fn with_defaults(
        grid: &GridSpec,
        physics: &Physics,
        band_limit: f64,
        center: f64,
        half_width: f64,
    ) -> Result<Self> {
        Self::new(center, half_width, default_barrier_height(physics, band_limit), default_edge_smoothing(grid))
    }

    fn validate(&self) -> Result<()> {
        if !(self.aperture_half_width >= 0.0 && self.aperture_half_width.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "aperture_half_width",
                reason: format!("must be nonnegative, got {}", self.aperture_half_width),
            });
        }
        if !(self.barrier_height > 0.0 && self.barrier_height.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "barrier_height",
                reason: format!("must be positive, got {}", self.barrier_height),
            });
        }
        if !(self.edge_smoothing > 0.0 && self.edge_smoothing.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "edge_smoothing",
                reason: format!("must be positive, got {}", self.edge_smoothing),
            });
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidParameter { name: "center", reason: "must be finite".into() });
        }
        Ok(())
    }

    pub fn potential_at(&self, grid: &GridSpec, y: f64) -> f64 {
        let d = grid.periodic_distance(y, self.center) - self.aperture_half_width;
        if d <= 0.0 {
            0.0
        } else if d >= self.edge_smoothing {
            self.barrier_height
        } else {
            0.5 * self.barrier_height * (1.0 - (PI * d / self.edge_smoothing).cos())
        }
    }

    pub fn profile(&self, grid: &GridSpec) -> Vec<f64> {
        grid.positions().into_iter().map(|y| self.potential_at(grid, y)).collect()
    }

    pub fn into_operation(self, grid: &GridSpec) -> LocalOperation {
        LocalOperation::Potential(Potential::Static(self.profile(grid).into()))
    }
}

pub fn default_barrier_height(physics: &Physics, band_limit: f64) -> f64 {
    50.0 * physics.hbar * physics.hbar * band_limit * band_limit / (2.0 * physics.mass1)
}

pub fn default_edge_smoothing(grid: &GridSpec) -> f64 {
    4.0 * grid.dy()
}

/// Potential energy acting on the particle-1 coordinate.
#[derive(Clone)]
pub enum Potential {
    /// Time-independent values, one per `y₁` node.
    Static(Arc<[f64]>),
    /// `V(node, t)` with `t` measured from the start of the operation.
    TimeDependent(Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>),
}

impl Potential {
    pub fn from_fn(f: impl Fn(usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::TimeDependent(Arc::new(f))
    }

    fn values(&self, grid: &GridSpec, t: f64) -> Result<Vec<f64>> {
        let values: Vec<f64> = match self {
            Potential::Static(v) => {
                grid.check_len(v.len())?;
                v.to_vec()
            }
            Potential::TimeDependent(f) => (0..grid.len()).map(|n| f(n, t)).collect(),
        };
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePotential { node, time: t });
        }
        Ok(values)
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Static(v) => f.debug_tuple("Static").field(&v.len()).finish(),
            Potential::TimeDependent(_) => f.write_str("TimeDependent(..)"),
        }
    }
}

/// Anything Alice can do to particle 1 short of measuring it.
#[derive(Debug, Clone)]
pub enum LocalOperation {
    FreeOnly,
    Potential(Potential),
    /// `N×N` unitary acting on the `y₁` index.
    ExplicitUnitary(Array2<Complex64>),
    /// Operations applied in order, each for its duration.
    Schedule(Vec<(LocalOperation, f64)>),
}

impl LocalOperation {
    /// Checked constructor for [`LocalOperation::ExplicitUnitary`].
    pub fn explicit_unitary(u: Array2<Complex64>) -> Result<Self> {
        check_unitary(&u)?;
        Ok(Self::ExplicitUnitary(u))
    }
}

/// `max |U†U - I|` over all entries.
pub fn unitarity_defect(u: &Array2<Complex64>) -> f64 {
    let gram = u.t().mapv(|v| v.conj()).dot(u);
    gram.indexed_iter().map(|((a, b), v)| if a == b { (v - 1.0).norm() } else { v.norm() }).fold(0.0, f64::max)
}

fn check_unitary(u: &Array2<Complex64>) -> Result<()> {
    if !u.is_square() {
        return Err(Error::NonUnitary { defect: f64::INFINITY });
    }
    let defect = unitarity_defect(u);
    if !(defect <= UNITARITY_TOLERANCE) {
        return Err(Error::NonUnitary { defect });
    }
    Ok(())
}

/// Seeded Haar-like random unitary: Gram–Schmidt on a complex Gaussian
/// matrix, orthogonalizing each column twice.
pub fn random_unitary(n: usize, seed: u64) -> Array2<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Array2::from_shape_simple_fn((n, n), || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    });
    // Orthogonalize columns of `m` as contiguous rows of its transpose.
    let mut rows = m.t().as_standard_layout().into_owned();
    for c in 0..n {
        let (done, mut rest) = rows.view_mut().split_at(Axis(0), c);
        let mut col = rest.row_mut(0);
        let col = col.as_slice_mut().expect("standard layout");
        for _ in 0..2 {
            for prev in done.rows() {
                let prev = prev.to_slice().expect("standard layout");
                let proj: Complex64 = prev.iter().zip(col.iter()).map(|(p, v)| p.conj() * v).sum();
                for (v, p) in col.iter_mut().zip(prev) {
                    *v -= proj * p;
                }
            }
        }
        let norm = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        col.iter_mut().for_each(|v| *v /= norm);
    }
    m = rows.t().as_standard_layout().into_owned();
    m
}

/// Kinetic phase factors `exp(-iħk²dt/2m)` for one axis.
fn kinetic_phases(grid: &GridSpec, mass: f64, hbar: f64, dt: f64) -> Vec<Complex64> {
    grid.wavenumbers().into_iter().map(|k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * mass))).collect()
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter { name: "t", reason: format!("must be finite and nonnegative, got {t}") });
    }
    Ok(())
}

/// Applies the exact free drift of both particles over `dt`.
struct Drift {
    transform: SpectralTransform,
    phase1: Vec<Complex64>,
    phase2: Vec<Complex64>,
}

impl Drift {
    fn new(grid: &GridSpec, physics: &Physics, dt: f64) -> Self {
        Self {
            transform: SpectralTransform::new(*grid),
            phase1: kinetic_phases(grid, physics.mass1, physics.hbar, dt),
            phase2: kinetic_phases(grid, physics.mass2, physics.hbar, dt),
        }
    }

    fn apply(&self, psi: &mut Array2<Complex64>) -> Result<()> {
        self.transform.forward_2d(psi)?;
        for ((i, j), v) in psi.indexed_iter_mut() {
            *v *= self.phase1[i] * self.phase2[j];
        }
        self.transform.inverse_2d(psi)
    }

    /// Drift of one particle only; `axis` 0 is particle 1.
    fn apply_axis(&self, psi: &mut Array2<Complex64>, axis: usize) -> Result<()> {
        self.transform.forward_axis(psi, axis)?;
        let phases = if axis == 0 { &self.phase1 } else { &self.phase2 };
        for mut lane in psi.lanes_mut(Axis(axis)) {
            for (v, p) in lane.iter_mut().zip(phases) {
                *v *= p;
            }
        }
        self.transform.inverse_axis(psi, axis)
    }
}

/// Exact free evolution `exp(-iHt/ħ)` with `H = p₁²/2m₁ + p₂²/2m₂`.
pub fn free_propagate(state: &BipartiteWave, t: f64) -> Result<BipartiteWave> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(state.clone());
    }
    let mut psi = state.psi.clone();
    Drift::new(&state.grid, &state.physics, t).apply(&mut psi)?;
    Ok(state.with_psi(psi))
}

fn kick(psi: &mut Array2<Complex64>, potential: &[f64], dt: f64, hbar: f64) {
    for (mut row, v) in psi.axis_iter_mut(Axis(0)).zip(potential) {
        let phase = Complex64::from_polar(1.0, -v * dt / hbar);
        row.mapv_inplace(|z| z * phase);
    }
}

/// Strang-split evolution under `op` for `t_total`, in `n_steps` steps.
///
/// Each step is a half kick `exp(-iV dt/2ħ)` on the `y₁` axis, an exact free
/// drift of particle 1, and a second half kick; particle 2 drifts exactly
/// over the whole interval. Time-dependent
/// potentials are sampled at the step midpoint. A schedule must span exactly
/// `t_total`; its segments share the steps in proportion to their duration
/// (at least one each).
pub fn split_step(state: &BipartiteWave, op: &LocalOperation, t_total: f64, n_steps: usize) -> Result<BipartiteWave> {
    check_time(t_total)?;
    if n_steps == 0 {
        return Err(Error::InvalidParameter { name: "n_steps", reason: "must be at least 1".into() });
    }
    let mut psi = state.psi.clone();
    evolve_in_place(&mut psi, &state.grid, &state.physics, op, t_total, n_steps, 0.0)?;
    Ok(state.with_psi(psi))
}

fn evolve_in_place(
    psi: &mut Array2<Complex64>,
    grid: &GridSpec,
    physics: &Physics,
    op: &LocalOperation,
    t_total: f64,
    n_steps: usize,
    t_offset: f64,
) -> Result<()> {
    match op {
        LocalOperation::FreeOnly => {
            let dt = t_total / n_steps as f64;
            let drift = Drift::new(grid, physics, dt);
            for _ in 0..n_steps {
                drift.apply(psi)?;
            }
            Ok(())
        }
        LocalOperation::Potential(potential) => {
            let dt = t_total / n_steps as f64;
            let drift = Drift::new(grid, physics, dt);
            let fixed = match potential {
                Potential::Static(_) => Some(potential.values(grid, 0.0)?),
                Potential::TimeDependent(_) => None,
            };
            for step in 0..n_steps {
                let values = match &fixed {
                    Some(v) => std::borrow::Cow::Borrowed(v.as_slice()),
                    None => {
                        let t_mid = t_offset + (step as f64 + 0.5) * dt;
                        std::borrow::Cow::Owned(potential.values(grid, t_mid)?)
                    }
                };
                kick(psi, &values, 0.5 * dt, physics.hbar);
                drift.apply_axis(psi, 0)?;
                kick(psi, &values, 0.5 * dt, physics.hbar);
            }
            // Particle 2's drift commutes with every kick.
            Drift::new(grid, physics, t_total).apply_axis(psi, 1)
        }
        LocalOperation::Schedule(segments) => {
            if segments.is_empty() {
                return Err(Error::InvalidParameter { name: "schedule", reason: "empty schedule".into() });
            }
            let total: f64 = segments.iter().map(|(_, d)| *d).sum();
            if segments.iter().any(|(_, d)| !(*d > 0.0 && d.is_finite())) {
                return Err(Error::InvalidParameter {
                    name: "schedule",
                    reason: "segment durations must be positive".into(),
                });
            }
            if (total - t_total).abs() > 1e-12 * t_total.max(1.0) {
                return Err(Error::InvalidParameter {
                    name: "t_total",
                    reason: format!("schedule spans {total}, requested {t_total}"),
                });
            }
            let mut elapsed = t_offset;
            for (inner, duration) in segments {
                let steps = ((n_steps as f64 * duration / total).round() as usize).max(1);
                evolve_in_place(psi, grid, physics, inner, *duration, steps, elapsed)?;
                elapsed += duration;
            }
            Ok(())
        }
        LocalOperation::ExplicitUnitary(_) => {
            Err(Error::UnsupportedOperation("explicit unitaries are instantaneous; use apply_local_unitary"))
        }
    }
}

/// `ψ'(y₁, y₂) = Σ U(y₁, y₁') ψ(y₁', y₂)`.
pub fn apply_local_unitary(state: &BipartiteWave, u: &Array2<Complex64>) -> Result<BipartiteWave> {
    state.grid.check_len(u.nrows())?;
    state.grid.check_len(u.ncols())?;
    check_unitary(u)?;
    Ok(state.with_psi(u.dot(&state.psi)))
}

/// A piecewise-constant slit schedule: one static slit per `(half_width,
/// duration)` pair, applied in order.
pub fn make_schedule_slit(
    grid: &GridSpec,
    widths: &[(f64, f64)],
    center: f64,
    barrier_height: f64,
    edge_smoothing: f64,
) -> Result<LocalOperation> {
    if widths.is_empty() {
        return Err(Error::InvalidParameter { name: "widths", reason: "empty schedule".into() });
    }
    let segments = widths
        .iter()
        .map(|&(a, duration)| {
            if !(duration > 0.0 && duration.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "widths",
                    reason: format!("durations must be positive, got {duration}"),
                });
            }
            let screen = SlitScreen::new(center, a, barrier_height, edge_smoothing)?;
            Ok((screen.into_operation(grid), duration))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocalOperation::Schedule(segments))
}

/// Total duration a schedule spans; `None` for other operations.
pub fn schedule_duration(op: &LocalOperation) -> Option<f64> {
    match op {
        LocalOperation::Schedule(s) => Some(s.iter().map(|(_, d)| d).sum()),
        _ => None,
    }
}
