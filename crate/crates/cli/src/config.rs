//! Run configuration: a flat JSON object whose every key is optional.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nosignal::dynamics::{default_barrier_height, default_edge_smoothing};
use nosignal::entangle::Physics;
use nosignal::verifier::{ApertureSpec, OperationSpec, Scenario, SourceSpec, NO_SIGNAL_TOLERANCE};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationKind {
    Free,
    Slit,
    Schedule,
    RandomUnitary,
}

/// Defaults are listed per field. Keys left unset that depend on the grid
/// are filled in by [`RunConfig::resolve`], and the resolved form is what
/// reports echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Lattice points `N`. Default 256.
    pub grid_n: usize,
    /// Box half-width `L`. Default `N/4`, so that `dy = 0.5`.
    pub grid_l: Option<f64>,
    /// Gaussian width of the source amplitude. Default 1.
    pub sigma_k: f64,
    /// Source band limit. Default 2.
    pub k_cut: f64,
    /// Seed for random source phases. Default none (real amplitude).
    pub phase_seed: Option<u64>,
    /// Seed for the random-unitary operation. Default 2005.
    pub seed: u64,
    /// Default 1.
    pub mass1: f64,
    /// Default 1.
    pub mass2: f64,
    /// Default 1.
    pub hbar: f64,
    /// Free flight before the operation. Default 1.
    pub pre_time: f64,
    /// Operation window. Default 2.
    pub op_time: f64,
    /// Free flight after the operation. Default 5.
    pub post_time: f64,
    /// Split-step count for potentials. Default 100.
    pub n_steps: usize,
    /// `free`, `slit`, `schedule` or `random_unitary`. Default `slit`.
    pub operation: OperationKind,
    /// Default 0.
    pub slit_center: f64,
    /// Default `4·dy`.
    pub slit_half_width: Option<f64>,
    /// Default `50·ħ²k_cut²/(2m₁)`.
    pub barrier_height: Option<f64>,
    /// Raised-cosine edge width. Default `4·dy`.
    pub edge_smoothing: Option<f64>,
    /// `[half_width, duration]` segments. Default alternates `8·dy` and
    /// `2·dy` over four quarters of `op_time`.
    pub schedule: Option<Vec<[f64; 2]>>,
    /// Measure particle 1 in the aperture at the end. Default false.
    pub measurement: bool,
    /// Default `slit_center`.
    pub aperture_center: Option<f64>,
    /// Default `slit_half_width`.
    pub aperture_half_width: Option<f64>,
    /// Slit half-widths for `sweep`. No default; required by `sweep`.
    pub widths: Option<Vec<f64>>,
    /// Max-abs tolerance for marginal comparisons. Default 1e-12.
    pub tolerance: f64,
    /// Output directory. Default `nosignal-out`.
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = Scenario::baseline(256);
        Self {
            grid_n: s.grid_points,
            grid_l: None,
            sigma_k: s.source.sigma_k,
            k_cut: s.source.k_cut,
            phase_seed: None,
            seed: 2005,
            mass1: s.physics.mass1,
            mass2: s.physics.mass2,
            hbar: s.physics.hbar,
            pre_time: s.pre_time,
            op_time: s.operation_time,
            post_time: s.post_time,
            n_steps: s.n_steps,
            operation: OperationKind::Slit,
            slit_center: 0.0,
            slit_half_width: None,
            barrier_height: None,
            edge_smoothing: None,
            schedule: None,
            measurement: false,
            aperture_center: None,
            aperture_half_width: None,
            widths: None,
            tolerance: NO_SIGNAL_TOLERANCE,
            out_dir: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_n: Option<usize>,
    pub grid_l: Option<f64>,
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!(
                "{}: line {}, column {}: {}",
                origin.display(),
                e.line(),
                e.column(),
                strip_position(&e)
            ))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::parse(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.grid_n {
            self.grid_n = v;
        }
        if let Some(v) = o.grid_l {
            self.grid_l = Some(v);
        }
        if let Some(v) = o.tolerance {
            self.tolerance = v;
        }
    }

    /// Fill grid-dependent defaults and validate every field.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let invalid = |field: &str, reason: String| Err(CliError::Config(format!("field `{field}`: {reason}")));
        if self.grid_n < 8 || self.grid_n % 2 != 0 {
            return invalid("grid_n", format!("must be an even integer >= 8, got {}", self.grid_n));
        }
        let l = *self.grid_l.get_or_insert(self.grid_n as f64 / 4.0);
        if !(l > 0.0 && l.is_finite()) {
            return invalid("grid_l", format!("must be positive, got {l}"));
        }
        for (field, v) in [
            ("sigma_k", self.sigma_k),
            ("k_cut", self.k_cut),
            ("mass1", self.mass1),
            ("mass2", self.mass2),
            ("hbar", self.hbar),
            ("tolerance", self.tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(field, format!("must be positive, got {v}"));
            }
        }
        for (field, v) in [("pre_time", self.pre_time), ("op_time", self.op_time), ("post_time", self.post_time)] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(field, format!("must be nonnegative, got {v}"));
            }
        }
        if self.n_steps == 0 {
            return invalid("n_steps", "must be at least 1".into());
        }
        let grid =
            nosignal::lattice::GridSpec::new(l, self.grid_n).map_err(|e| CliError::Config(format!("grid: {e}")))?;
        if self.k_cut >= grid.nyquist() {
            return invalid("k_cut", format!("must lie below the grid Nyquist wavenumber {}", grid.nyquist()));
        }
        let dy = grid.dy();
        let physics = self.physics();
        let half_width = *self.slit_half_width.get_or_insert(4.0 * dy);
        self.barrier_height.get_or_insert(default_barrier_height(&physics, self.k_cut));
        self.edge_smoothing.get_or_insert(default_edge_smoothing(&grid));
        let quarter = self.op_time / 4.0;
        self.schedule.get_or_insert_with(|| {
            vec![[8.0 * dy, quarter], [2.0 * dy, quarter], [8.0 * dy, quarter], [2.0 * dy, quarter]]
        });
        self.aperture_center.get_or_insert(self.slit_center);
        self.aperture_half_width.get_or_insert(half_width);
        if let Some(widths) = &self.widths {
            if let Some(w) = widths.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
                return invalid("widths", format!("entries must be positive, got {w}"));
            }
        }
        // Building the scenario validates the remaining operation fields.
        let scenario = self.scenario();
        scenario.source.build(&grid).map_err(|e| CliError::Config(format!("source: {e}")))?;
        if let OperationSpec::Slit { center, half_width, barrier_height, edge_smoothing } = scenario.operation {
            nosignal::dynamics::SlitScreen::new(center, half_width, barrier_height, edge_smoothing)
                .map_err(|e| CliError::Config(format!("slit: {e}")))?;
        }
        if let OperationSpec::Schedule { segments, .. } = &scenario.operation {
            if segments.is_empty() || segments.iter().any(|(a, d)| !(*a > 0.0 && *d > 0.0)) {
                return invalid("schedule", "segments need positive half-width and duration".into());
            }
        }
        Ok(self)
    }

    pub fn physics(&self) -> Physics {
        Physics { mass1: self.mass1, mass2: self.mass2, hbar: self.hbar }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("nosignal-out"))
    }

    /// Slit operation built from the slit keys.
    pub fn slit(&self, half_width: f64) -> OperationSpec {
        OperationSpec::Slit {
            center: self.slit_center,
            half_width,
            barrier_height: self.barrier_height.expect("resolved"),
            edge_smoothing: self.edge_smoothing.expect("resolved"),
        }
    }

    /// Scenario described by a resolved config.
    pub fn scenario(&self) -> Scenario {
        let operation = match self.operation {
            OperationKind::Free => OperationSpec::Free,
            OperationKind::Slit => self.slit(self.slit_half_width.expect("resolved")),
            OperationKind::Schedule => OperationSpec::Schedule {
                center: self.slit_center,
                segments: self.schedule.as_ref().expect("resolved").iter().map(|[a, d]| (*a, *d)).collect(),
                barrier_height: self.barrier_height.expect("resolved"),
                edge_smoothing: self.edge_smoothing.expect("resolved"),
            },
            OperationKind::RandomUnitary => OperationSpec::RandomUnitary { seed: self.seed, norm_defect: 0.0 },
        };
        Scenario {
            id: "variant".into(),
            grid_half_width: self.grid_l.expect("resolved"),
            grid_points: self.grid_n,
            source: SourceSpec { sigma_k: self.sigma_k, k_cut: self.k_cut, phase_seed: self.phase_seed },
            physics: self.physics(),
            pre_time: self.pre_time,
            operation,
            operation_time: self.op_time,
            n_steps: self.n_steps,
            post_time: self.post_time,
            measurement: self.measurement.then(|| self.aperture()),
        }
    }

    pub fn aperture(&self) -> ApertureSpec {
        ApertureSpec {
            center: self.aperture_center.expect("resolved"),
            half_width: self.aperture_half_width.expect("resolved"),
        }
    }
}

/// serde_json appends " at line L column C"; the caller reports position
/// separately.
fn strip_position(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    }
}
