//! Scenario pipelines and the no-signaling check suite.
//!
//! A [`Scenario`] is a declarative description of one run: grid, source,
//! free flight before Alice's station, a local operation, free flight after,
//! and optionally a position measurement of particle 1 at the end. Every
//! check in a [`NoSignalReport`] stores the raw numbers it was decided
//! from; verdicts are recomputed on demand.

use std::time::Instant;

use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::collapse::{project_aperture, DiscreteBipartite, Region};
use crate::dynamics::{
    apply_local_unitary, default_barrier_height, default_edge_smoothing, free_propagate, make_schedule_slit,
    random_unitary, split_step, SlitScreen,
};
use crate::entangle::{build_epr_state, gaussian_band, BipartiteWave, Physics, SpectralAmplitude};
use crate::error::{Error, Result};
use crate::lattice::GridSpec;
use crate::marginals::{
    distribution_distance, particle2_distribution, position_marginal, position_tv, DistributionDistance,
    WavenumberDistribution,
};

/// Default tolerance on marginal max-abs distances.
pub const NO_SIGNAL_TOLERANCE: f64 = 1e-12;
/// Default bound on unconditional `D` mass outside the source band.
pub const BANDWIDTH_TOLERANCE: f64 = 1e-10;
/// Minimum TV distance a coincidence-conditioned distribution must show.
pub const CONDITIONAL_CONTRAST: f64 = 0.01;
/// Distance a negative control must exceed.
pub const NEGATIVE_CONTROL_FLOOR: f64 = 1e-3;

/// Band-limited Gaussian source, optionally with random phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub sigma_k: f64,
    pub k_cut: f64,
    pub phase_seed: Option<u64>,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self { sigma_k: 1.0, k_cut: 2.0, phase_seed: None }
    }
}

impl SourceSpec {
    pub fn build(&self, grid: &GridSpec) -> Result<SpectralAmplitude> {
        let w = gaussian_band(grid, self.sigma_k, self.k_cut)?;
        Ok(match self.phase_seed {
            Some(seed) => w.randomize_phase(seed),
            None => w,
        })
    }
}

/// Declarative local operation at Alice's station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperationSpec {
    Free,
    Slit {
        center: f64,
        half_width: f64,
        barrier_height: f64,
        edge_smoothing: f64,
    },
    /// `(half_width, duration)` segments applied in order.
    Schedule {
        center: f64,
        segments: Vec<(f64, f64)>,
        barrier_height: f64,
        edge_smoothing: f64,
    },
    /// Seeded random unitary on the `y₁` axis applied at the start of the
    /// operation window. `norm_defect` scales the matrix by `1 + defect` and
    /// exists only to exercise the rejection path.
    RandomUnitary {
        seed: u64,
        norm_defect: f64,
    },
}

impl OperationSpec {
    /// Slit with the default barrier and wall width for `grid` and `source`.
    pub fn default_slit(grid: &GridSpec, physics: &Physics, source: &SourceSpec, half_width: f64) -> Self {
        OperationSpec::Slit {
            center: 0.0,
            half_width,
            barrier_height: default_barrier_height(physics, source.k_cut),
            edge_smoothing: default_edge_smoothing(grid),
        }
    }

    /// Wide/narrow alternation between `wide` and `narrow` half-widths.
    pub fn default_schedule(
        grid: &GridSpec,
        physics: &Physics,
        source: &SourceSpec,
        wide: f64,
        narrow: f64,
        total: f64,
    ) -> Self {
        let q = total / 4.0;
        OperationSpec::Schedule {
            center: 0.0,
            segments: vec![(wide, q), (narrow, q), (wide, q), (narrow, q)],
            barrier_height: default_barrier_height(physics, source.k_cut),
            edge_smoothing: default_edge_smoothing(grid),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            OperationSpec::Free => "free",
            OperationSpec::Slit { .. } => "slit",
            OperationSpec::Schedule { .. } => "schedule",
            OperationSpec::RandomUnitary { .. } => "random_unitary",
        }
    }
}

/// Particle-1 position measurement: inside vs. outside an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureSpec {
    pub center: f64,
    pub half_width: f64,
}

impl ApertureSpec {
    pub fn region(&self, grid: &GridSpec) -> Region {
        Region::interval(grid, self.center, self.half_width)
    }
}

/// One fully deterministic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub source: SourceSpec,
    pub physics: Physics,
    /// Free flight from the source to Alice's station.
    pub pre_time: f64,
    pub operation: OperationSpec,
    /// Duration of the operation window. Ignored for schedules, which
    /// carry their own durations.
    pub operation_time: f64,
    pub n_steps: usize,
    /// Free flight after the operation.
    pub post_time: f64,
    pub measurement: Option<ApertureSpec>,
}

impl Scenario {
    /// Free-only scenario on an `N`-point grid with `L = N/4`, so that
    /// `dy = 1/2` for every `N`.
    pub fn baseline(grid_points: usize) -> Self {
        Self {
            id: "baseline".into(),
            grid_half_width: grid_points as f64 / 4.0,
            grid_points,
            source: SourceSpec::default(),
            physics: Physics::default(),
            pre_time: 1.0,
            operation: OperationSpec::Free,
            operation_time: 2.0,
            n_steps: 100,
            post_time: 5.0,
            measurement: None,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid_half_width, self.grid_points)
    }

    /// Copy with a different id and operation.
    pub fn with_operation(&self, id: impl Into<String>, operation: OperationSpec) -> Self {
        Self { id: id.into(), operation, ..self.clone() }
    }

    pub fn with_measurement(&self, id: impl Into<String>, measurement: Option<ApertureSpec>) -> Self {
        Self { id: id.into(), measurement, ..self.clone() }
    }

    pub fn operation_duration(&self) -> f64 {
        match &self.operation {
            OperationSpec::Schedule { segments, .. } => segments.iter().map(|(_, d)| d).sum(),
            _ => self.operation_time,
        }
    }

    fn same_setup(&self, other: &Scenario) -> Result<()> {
        if self.grid_half_width != other.grid_half_width || self.grid_points != other.grid_points {
            return Err(Error::ScenarioMismatch(format!("grids differ between `{}` and `{}`", self.id, other.id)));
        }
        if self.source != other.source {
            return Err(Error::ScenarioMismatch(format!("sources differ between `{}` and `{}`", self.id, other.id)));
        }
        Ok(())
    }
}

/// Outcome-resolved particle-2 statistics for a measured scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBranches {
    /// Probability that particle 1 is found inside the aperture.
    pub probability_inside: f64,
    pub inside: Option<WavenumberDistribution>,
    pub outside: Option<WavenumberDistribution>,
    /// `D` of the same state without the measurement.
    pub unmeasured: WavenumberDistribution,
}

impl MeasurementBranches {
    /// `p·D_in + (1-p)·D_out`, dropping a branch that cannot occur.
    pub fn averaged(&self) -> Result<WavenumberDistribution> {
        let p = self.probability_inside;
        let mut parts = Vec::with_capacity(2);
        if let Some(d) = &self.inside {
            parts.push((p, d));
        }
        if let Some(d) = &self.outside {
            parts.push((1.0 - p, d));
        }
        WavenumberDistribution::mixture(parts)
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    /// Final unmeasured state.
    pub state: BipartiteWave,
    /// Particle-2 distribution Bob sees; for measured scenarios, the
    /// outcome average.
    pub distribution: WavenumberDistribution,
    pub branches: Option<MeasurementBranches>,
}

/// Evolve the state through the scenario without measuring.
pub fn evolve_scenario(s: &Scenario) -> Result<BipartiteWave> {
    let grid = s.grid()?;
    let source = s.source.build(&grid)?;
    let mut state = build_epr_state(&source, s.physics)?;
    state = free_propagate(&state, s.pre_time)?;
    state = match &s.operation {
        OperationSpec::Free => free_propagate(&state, s.operation_time)?,
        OperationSpec::Slit { center, half_width, barrier_height, edge_smoothing } => {
            let op = SlitScreen::new(*center, *half_width, *barrier_height, *edge_smoothing)?.into_operation(&grid);
            split_step(&state, &op, s.operation_time, s.n_steps)?
        }
        OperationSpec::Schedule { center, segments, barrier_height, edge_smoothing } => {
            let op = make_schedule_slit(&grid, segments, *center, *barrier_height, *edge_smoothing)?;
            split_step(&state, &op, s.operation_duration(), s.n_steps)?
        }
        OperationSpec::RandomUnitary { seed, norm_defect } => {
            let scale = num_complex::Complex64::new(1.0 + norm_defect, 0.0);
            let u = random_unitary(grid.len(), *seed).mapv(|v| v * scale);
            free_propagate(&apply_local_unitary(&state, &u)?, s.operation_time)?
        }
    };
    free_propagate(&state, s.post_time)
}

/// Both measurement branches of `state` for `aperture`.
pub fn measure_branches(state: &BipartiteWave, aperture: &ApertureSpec) -> Result<MeasurementBranches> {
    let region = aperture.region(state.grid());
    let unmeasured = particle2_distribution(state);
    let branch = |r: &Region| match project_aperture(state, r) {
        Ok((p, post)) => Ok(Some((p, particle2_distribution(&post)))),
        Err(Error::ZeroProbabilityOutcome { .. }) | Err(Error::InvalidParameter { name: "region", .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let inside = branch(&region)?;
    let outside = branch(&region.complement())?;
    let probability_inside = match (&inside, &outside) {
        (Some((p, _)), _) => *p,
        (None, Some(_)) => 0.0,
        (None, None) => return Err(Error::ZeroProbabilityOutcome { probability: 0.0 }),
    };
    Ok(MeasurementBranches {
        probability_inside,
        inside: inside.map(|(_, d)| d),
        outside: outside.map(|(_, d)| d),
        unmeasured,
    })
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioOutcome> {
    let state = evolve_scenario(s)?;
    match &s.measurement {
        None => {
            let distribution = particle2_distribution(&state);
            Ok(ScenarioOutcome { state, distribution, branches: None })
        }
        Some(aperture) => {
            let branches = measure_branches(&state, aperture)?;
            let distribution = branches.averaged()?;
            Ok(ScenarioOutcome { state, distribution, branches: Some(branches) })
        }
    }
}

/// Outcome-averaged Bob distribution of a measured scenario.
pub fn averaged_post_measurement(s: &Scenario) -> Result<WavenumberDistribution> {
    if s.measurement.is_none() {
        return Err(Error::InvalidParameter { name: "measurement", reason: "scenario has no aperture".into() });
    }
    Ok(run_scenario(s)?.distribution)
}

/// Distance between two distributions, judged against `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRecord {
    pub baseline: String,
    pub variant: String,
    pub distance: DistributionDistance,
    pub tolerance: f64,
}

impl ComparisonRecord {
    pub fn passed(&self) -> bool {
        self.distance.max_abs <= self.tolerance
    }
}

/// Compare two distributions directly. Unlike [`compare`] this does not
/// require the producing scenarios to share a source.
pub fn compare_distributions(
    baseline: impl Into<String>,
    a: &WavenumberDistribution,
    variant: impl Into<String>,
    b: &WavenumberDistribution,
    tolerance: f64,
) -> Result<ComparisonRecord> {
    Ok(ComparisonRecord {
        baseline: baseline.into(),
        variant: variant.into(),
        distance: distribution_distance(a, b)?,
        tolerance,
    })
}

/// Run both scenarios and compare Bob's distributions. The scenarios must
/// share grid and source.
pub fn compare(baseline: &Scenario, variant: &Scenario, tolerance: f64) -> Result<ComparisonRecord> {
    baseline.same_setup(variant)?;
    let a = run_scenario(baseline)?;
    let b = run_scenario(variant)?;
    compare_distributions(&baseline.id, &a.distribution, &variant.id, &b.distribution, tolerance)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandwidthRecord {
    pub k_cut: f64,
    pub mass_outside: f64,
    pub tolerance: f64,
}

impl BandwidthRecord {
    pub fn passed(&self) -> bool {
        self.mass_outside <= self.tolerance
    }
}

pub fn bandwidth_check(d: &WavenumberDistribution, k_cut: f64, tolerance: f64) -> BandwidthRecord {
    BandwidthRecord { k_cut, mass_outside: d.mass_outside(k_cut), tolerance }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub half_width: f64,
    pub marginal_max_abs: Option<f64>,
    pub marginal_tv: Option<f64>,
    /// TV distance between this width's coincidence-conditioned `D` and the
    /// widest slit's.
    pub conditional_tv: Option<f64>,
    /// Probability of the coincidence event (particle 1 found in the
    /// detection window).
    pub coincidence_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub tolerance: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Every marginal distance that was computed is within tolerance.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.marginal_max_abs.map_or(true, |d| d <= self.tolerance))
    }
}

/// Run `base` (which must use a slit operation) with each half-width.
///
/// Marginals are compared with the free baseline. The coincidence event is
/// particle 1 being found, after the post-flight, inside `base.measurement`
/// if set or else inside the slit's own aperture. A single width yields one
/// row with no comparisons.
pub fn slit_width_sweep(base: &Scenario, widths: &[f64], tolerance: f64) -> Result<SweepTable> {
    let (center, barrier_height, edge_smoothing) = match base.operation {
        OperationSpec::Slit { center, barrier_height, edge_smoothing, .. } => (center, barrier_height, edge_smoothing),
        _ => {
            return Err(Error::InvalidParameter { name: "operation", reason: "sweep base must be a slit".into() });
        }
    };
    if widths.is_empty() {
        return Err(Error::InvalidParameter { name: "widths", reason: "no widths given".into() });
    }
    let free = base.with_operation("free", OperationSpec::Free).with_measurement("free", None);
    let free_d = run_scenario(&free)?.distribution;

    let runs = widths
        .par_iter()
        .map(|&half_width| {
            let s = base
                .with_operation(
                    format!("slit a={half_width}"),
                    OperationSpec::Slit { center, half_width, barrier_height, edge_smoothing },
                )
                .with_measurement(format!("slit a={half_width}"), None);
            let state = evolve_scenario(&s)?;
            let window = base.measurement.unwrap_or(ApertureSpec { center, half_width });
            let branches = measure_branches(&state, &window)?;
            Ok((half_width, branches))
        })
        .collect::<Result<Vec<_>>>()?;

    let widest =
        runs.iter().max_by(|a, b| a.0.total_cmp(&b.0)).map(|(_, b)| b.inside.clone()).expect("widths is nonempty");
    let compare_rows = widths.len() >= 2;
    let rows = runs
        .iter()
        .map(|(half_width, branches)| {
            let mut row = SweepRow {
                half_width: *half_width,
                marginal_max_abs: None,
                marginal_tv: None,
                conditional_tv: None,
                coincidence_probability: branches.probability_inside,
            };
            if compare_rows {
                let d = distribution_distance(&free_d, &branches.unmeasured)?;
                row.marginal_max_abs = Some(d.max_abs);
                row.marginal_tv = Some(d.total_variation);
                if let (Some(reference), Some(inside)) = (&widest, &branches.inside) {
                    row.conditional_tv = Some(distribution_distance(reference, inside)?.total_variation);
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { tolerance, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckCategory {
    NoSignaling,
    MeasurementAverage,
    ConditionalContrast,
    Bandwidth,
    DiscreteOrder,
    Normalization,
    NegativeControl,
}

/// How `value` must relate to `threshold` for a check to pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    Above,
}

impl Bound {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Bound::AtMost => value <= threshold,
            Bound::Above => value > threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    pub category: CheckCategory,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub distance: Option<DistributionDistance>,
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, category: CheckCategory, value: f64, bound: Bound, threshold: f64) -> Self {
        Self { name: name.into(), category, value, threshold, bound, distance: None, error: None }
    }

    fn from_comparison(name: impl Into<String>, category: CheckCategory, c: &ComparisonRecord) -> Self {
        Self { distance: Some(c.distance), ..Self::new(name, category, c.distance.max_abs, Bound::AtMost, c.tolerance) }
    }

    fn failed(name: impl Into<String>, category: CheckCategory, bound: Bound, threshold: f64, err: &Error) -> Self {
        Self { error: Some(err.to_string()), ..Self::new(name, category, f64::NAN, bound, threshold) }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.bound.holds(self.value, self.threshold)
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let rel = match self.bound {
            Bound::AtMost => "<=",
            Bound::Above => ">",
        };
        match &self.error {
            Some(e) => format!("{verdict}  {}: error: {e}", self.name),
            None => format!("{verdict}  {}: {:.3e} {rel} {:.1e}", self.name, self.value, self.threshold),
        }
    }
}

impl Serialize for CheckRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("CheckRecord", 8)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("category", &self.category)?;
        st.serialize_field("value", &self.value)?;
        st.serialize_field("bound", &self.bound)?;
        st.serialize_field("threshold", &self.threshold)?;
        st.serialize_field("distance", &self.distance)?;
        st.serialize_field("error", &self.error)?;
        st.serialize_field("passed", &self.passed())?;
        st.end()
    }
}

/// Parameters of the default suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub grid_points: usize,
    pub grid_half_width: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub random_unitaries: usize,
    pub discrete_states: usize,
    /// Adds a scenario whose local operation is not unitary. The suite must
    /// then fail.
    pub inject_non_unitary: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            grid_points: 256,
            grid_half_width: 64.0,
            seed: 2005,
            tolerance: NO_SIGNAL_TOLERANCE,
            random_unitaries: 50,
            discrete_states: 200,
            inject_non_unitary: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignalReport {
    pub config: SuiteConfig,
    pub checks: Vec<CheckRecord>,
    pub elapsed_seconds: f64,
}

impl NoSignalReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(CheckRecord::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

fn comparison_check(
    name: String,
    category: CheckCategory,
    base: &WavenumberDistribution,
    s: &Scenario,
    tol: f64,
) -> CheckRecord {
    match run_scenario(s).and_then(|out| compare_distributions("baseline", base, &s.id, &out.distribution, tol)) {
        Ok(c) => CheckRecord::from_comparison(name, category, &c),
        Err(e) => CheckRecord::failed(name, category, Bound::AtMost, tol, &e),
    }
}

/// Largest `|Σ_i ρ₁ᵢ ρ₂ⱼ/ᵢ - ρ₂ⱼ|` over `count` seeded random states with
/// dimensions between 1 and 8.
pub fn discrete_order_defect(count: usize, seed: u64) -> Result<f64> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i as u64);
            let (d1, d2) = (1 + (s % 8) as usize, 1 + ((s / 8) % 8) as usize);
            let state = DiscreteBipartite::random(d1, d2, s)?;
            let rho2 = state.bob_marginal();
            let mut avg = vec![0.0; d2];
            for outcome in 0..d1 {
                let c = state.collapse_on_alice(outcome)?;
                for (acc, v) in avg.iter_mut().zip(c.conditional_bob()) {
                    *acc += c.probability * v;
                }
            }
            Ok(avg.iter().zip(&rho2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// Free, random-unitary, slit, schedule and measurement-average checks plus
/// the bandwidth, conditional-contrast and negative-control checks.
pub fn run_default_suite(config: &SuiteConfig) -> Result<NoSignalReport> {
    let started = Instant::now();
    let tol = config.tolerance;
    let mut base = Scenario::baseline(config.grid_points);
    base.grid_half_width = config.grid_half_width;
    base.source.phase_seed = Some(config.seed);
    let grid = base.grid()?;
    let dy = grid.dy();
    let source = base.source.build(&grid)?;
    let source_d = WavenumberDistribution::new(grid, source.density())?;

    let mut checks = Vec::new();

    // Free flight against the source density itself.
    checks.push(comparison_check("free evolution".into(), CheckCategory::NoSignaling, &source_d, &base, tol));
    let base_out = run_scenario(&base)?;
    let base_d = base_out.distribution.clone();

    let mut variants: Vec<(String, Scenario)> = Vec::new();
    for i in 0..config.random_unitaries {
        let seed = config.seed.wrapping_add(1 + i as u64);
        variants.push((
            format!("random unitary #{i} (seed {seed})"),
            base.with_operation(format!("unitary-{seed}"), OperationSpec::RandomUnitary { seed, norm_defect: 0.0 }),
        ));
    }
    for nodes in [8.0, 4.0, 2.0] {
        let op = OperationSpec::default_slit(&grid, &base.physics, &base.source, nodes * dy);
        variants.push((format!("slit a={nodes}dy"), base.with_operation(format!("slit-{nodes}dy"), op)));
    }
    let schedule =
        OperationSpec::default_schedule(&grid, &base.physics, &base.source, 8.0 * dy, 2.0 * dy, base.operation_time);
    variants.push(("schedule wide/narrow".into(), base.with_operation("schedule", schedule)));
    if config.inject_non_unitary {
        variants.push((
            "injected non-unitary operation".into(),
            base.with_operation("injected", OperationSpec::RandomUnitary { seed: config.seed, norm_defect: 1e-3 }),
        ));
    }
    let mut compared: Vec<CheckRecord> = variants
        .par_iter()
        .map(|(name, s)| comparison_check(name.clone(), CheckCategory::NoSignaling, &base_d, s, tol))
        .collect();
    checks.append(&mut compared);

    // Measurement at the end of a slit run: averaged vs unmeasured, and the
    // contrast of the coincidence-conditioned branch.
    let slit =
        base.with_operation("slit-4dy", OperationSpec::default_slit(&grid, &base.physics, &base.source, 4.0 * dy));
    let aperture = ApertureSpec { center: 0.0, half_width: 4.0 * dy };
    match run_scenario(&slit.with_measurement("slit-4dy-measured", Some(aperture))) {
        Ok(out) => {
            let branches = out.branches.as_ref().expect("measured scenario has branches");
            let avg = distribution_distance(&out.distribution, &branches.unmeasured)?;
            let mut c = CheckRecord::new(
                "measurement average vs unmeasured",
                CheckCategory::MeasurementAverage,
                avg.max_abs,
                Bound::AtMost,
                tol,
            );
            c.distance = Some(avg);
            checks.push(c);
            let marginal = distribution_distance(&base_d, &branches.unmeasured)?;
            let mut c = CheckRecord::new(
                "slit a=4dy unconditional vs free",
                CheckCategory::NoSignaling,
                marginal.max_abs,
                Bound::AtMost,
                tol,
            );
            c.distance = Some(marginal);
            checks.push(c);
            let contrast = match &branches.inside {
                Some(inside) => distribution_distance(inside, &branches.unmeasured)?.total_variation,
                None => 0.0,
            };
            checks.push(CheckRecord::new(
                "coincidence-conditioned D differs from unconditional (TV)",
                CheckCategory::ConditionalContrast,
                contrast,
                Bound::Above,
                CONDITIONAL_CONTRAST,
            ));
            let bw = bandwidth_check(&branches.unmeasured, base.source.k_cut, BANDWIDTH_TOLERANCE);
            checks.push(CheckRecord::new(
                "post-slit mass outside source band",
                CheckCategory::Bandwidth,
                bw.mass_outside,
                Bound::AtMost,
                bw.tolerance,
            ));
        }
        Err(e) => checks.push(CheckRecord::failed(
            "measured slit scenario",
            CheckCategory::MeasurementAverage,
            Bound::AtMost,
            tol,
            &e,
        )),
    }

    // Parseval chain on the final baseline state.
    let chain = [
        base_out.state.norm_sqr(),
        crate::marginals::spectral_components(&base_out.state).iter().map(|v| v.norm_sqr()).sum::<f64>()
            * grid.dk()
            * grid.dk(),
        base_d.total(),
    ];
    let chain_defect = chain.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    checks.push(CheckRecord::new(
        "normalization chain",
        CheckCategory::Normalization,
        chain_defect,
        Bound::AtMost,
        tol,
    ));

    checks.push(CheckRecord::new(
        format!("discrete order independence ({} states)", config.discrete_states),
        CheckCategory::DiscreteOrder,
        discrete_order_defect(config.discrete_states, config.seed)?,
        Bound::AtMost,
        1e-14,
    ));

    // Negative controls: a changed source must be visible, and a non-unitary
    // operator must be refused.
    let mut modified = base.clone();
    modified.id = "modified-source".into();
    modified.source.sigma_k *= 0.5;
    let control = run_scenario(&modified)
        .and_then(|out| compare_distributions("baseline", &base_d, &modified.id, &out.distribution, tol));
    checks.push(match control {
        Ok(c) => CheckRecord {
            distance: Some(c.distance),
            ..CheckRecord::new(
                "negative control: modified source is detected",
                CheckCategory::NegativeControl,
                c.distance.max_abs,
                Bound::Above,
                NEGATIVE_CONTROL_FLOOR,
            )
        },
        Err(e) => CheckRecord::failed(
            "negative control: modified source is detected",
            CheckCategory::NegativeControl,
            Bound::Above,
            NEGATIVE_CONTROL_FLOOR,
            &e,
        ),
    });
    let faulty = random_unitary(grid.len(), config.seed).mapv(|v| v * (1.0 + 1e-3));
    let defect = crate::dynamics::unitarity_defect(&faulty);
    let mut rejection = CheckRecord::new(
        "negative control: non-unitary operation is rejected",
        CheckCategory::NegativeControl,
        defect,
        Bound::Above,
        crate::dynamics::UNITARITY_TOLERANCE,
    );
    match apply_local_unitary(&base_out.state, &faulty) {
        Err(Error::NonUnitary { .. }) => {}
        Err(e) => rejection.error = Some(format!("unexpected error: {e}")),
        Ok(_) => rejection.error = Some("non-unitary operation was accepted".into()),
    }
    checks.push(rejection);

    Ok(NoSignalReport { config: config.clone(), checks, elapsed_seconds: started.elapsed().as_secs_f64() })
}

/// Particle-1 position-marginal TV between a scenario and its free
/// counterpart, a measure of how strongly the operation acted.
pub fn particle1_reshaping(s: &Scenario) -> Result<f64> {
    let grid = s.grid()?;
    let acted = evolve_scenario(s)?;
    let free = evolve_scenario(&s.with_operation("free", OperationSpec::Free))?;
    position_tv(&grid, &position_marginal(&acted, 1)?, &position_marginal(&free, 1)?)
}

impl std::fmt::Display for OperationSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
