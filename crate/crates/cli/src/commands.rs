use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use nosignal::marginals::{distribution_distance, spectral_components};
use nosignal::verifier::{
    bandwidth_check, particle1_reshaping, run_default_suite, run_scenario, slit_width_sweep, Bound, CheckCategory,
    CheckRecord, OperationSpec, SuiteConfig, BANDWIDTH_TOLERANCE,
};

use crate::output::{ensure_dir, write_csv, write_json};
use crate::{CliError, Invocation};

fn versions() -> Value {
    json!({ "nosignal": nosignal::VERSION, "nosignal-cli": env!("CARGO_PKG_VERSION") })
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn print_checks(command: &str, checks: &[CheckRecord]) -> bool {
    for c in checks {
        println!("{}", c.summary());
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    let ok = passed == checks.len();
    println!("{command}: {passed} of {} checks passed{}", checks.len(), if ok { "" } else { " (FAILED)" });
    ok
}

/// Configured operation against free flight of the same source.
pub fn run(inv: &Invocation) -> Result<bool, CliError> {
    let started = Instant::now();
    let cfg = &inv.config;
    let variant = cfg.scenario();
    let baseline = variant.with_operation("free", OperationSpec::Free).with_measurement("free", None);
    let grid = variant.grid()?;
    let tol = cfg.tolerance;

    let base_out = run_scenario(&baseline)?;
    let out = run_scenario(&variant)?;
    let d_base = &base_out.distribution;
    let d_var = &out.distribution;
    let marginal = distribution_distance(d_base, d_var)?;
    let unmeasured = out.branches.as_ref().map_or(d_var, |b| &b.unmeasured);
    let bandwidth = bandwidth_check(unmeasured, cfg.k_cut, BANDWIDTH_TOLERANCE);
    let phi_norm: f64 =
        spectral_components(&out.state).iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dk() * grid.dk();
    let normalization = [out.state.norm_sqr(), phi_norm, unmeasured.total(), d_var.total()]
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);

    let mut checks = vec![
        CheckRecord {
            distance: Some(marginal),
            ..CheckRecord::new(
                "marginal vs free flight",
                CheckCategory::NoSignaling,
                marginal.max_abs,
                Bound::AtMost,
                tol,
            )
        },
        CheckRecord::new(
            "mass outside source band",
            CheckCategory::Bandwidth,
            bandwidth.mass_outside,
            Bound::AtMost,
            bandwidth.tolerance,
        ),
        CheckRecord::new("normalization chain", CheckCategory::Normalization, normalization, Bound::AtMost, tol),
    ];
    let mut measurement = Value::Null;
    if let Some(br) = &out.branches {
        let avg = distribution_distance(d_var, &br.unmeasured)?;
        checks.push(CheckRecord {
            distance: Some(avg),
            ..CheckRecord::new(
                "measurement average vs unmeasured",
                CheckCategory::MeasurementAverage,
                avg.max_abs,
                Bound::AtMost,
                tol,
            )
        });
        let (conditional_tv, conditional_outside) = match &br.inside {
            Some(inside) => (
                Some(distribution_distance(inside, &br.unmeasured)?.total_variation),
                Some(inside.mass_outside(cfg.k_cut)),
            ),
            None => (None, None),
        };
        // Conditionals are not bound by the source band; recorded only.
        measurement = json!({
            "probability_inside": br.probability_inside,
            "conditional_tv": conditional_tv,
            "conditional_mass_outside_band": conditional_outside,
        });
    }
    let particle1_tv = particle1_reshaping(&variant.with_measurement("variant", None))?;

    ensure_dir(&inv.out_dir)?;
    let k = grid.wavenumbers();
    let rows: Vec<Vec<Option<f64>>> = (0..grid.len())
        .map(|j| {
            let (a, b) = (d_base.values()[j], d_var.values()[j]);
            vec![Some(k[j]), Some(a), Some(b), Some((a - b).abs())]
        })
        .collect();
    let csv = write_csv(&inv.out_dir, "distributions.csv", &["k2", "D_baseline", "D_variant", "abs_diff"], &rows)?;

    let passed = print_checks("run", &checks);
    let report = json!({
        "command": "run",
        "config": cfg,
        "metrics": {
            "marginal": marginal,
            "mass_outside_band": bandwidth.mass_outside,
            "normalization_defect": normalization,
            "particle1_position_tv": particle1_tv,
            "measurement": measurement,
        },
        "verdicts": checks,
        "passed": passed,
        "versions": versions(),
        "runtime_seconds": started.elapsed().as_secs_f64(),
        "generated_at_unix": timestamp(),
    });
    let json = write_json(&inv.out_dir, "report.json", &report)?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(passed)
}

/// Default suite on the configured grid, seed and tolerance.
pub fn verify(inv: &Invocation, inject_non_unitary: bool) -> Result<bool, CliError> {
    let started = Instant::now();
    let cfg = &inv.config;
    let suite = SuiteConfig {
        grid_points: cfg.grid_n,
        grid_half_width: cfg.grid_l.expect("resolved"),
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        inject_non_unitary,
        ..SuiteConfig::default()
    };
    let report = run_default_suite(&suite)?;
    let passed = print_checks("verify", &report.checks);
    ensure_dir(&inv.out_dir)?;
    let value = json!({
        "command": "verify",
        "config": cfg,
        "suite": report.config,
        "verdicts": report.checks,
        "passed": passed,
        "versions": versions(),
        "runtime_seconds": started.elapsed().as_secs_f64(),
        "generated_at_unix": timestamp(),
    });
    let json = write_json(&inv.out_dir, "report.json", &value)?;
    println!("wrote {}", json.display());
    Ok(passed)
}

/// Slit run repeated over `widths`.
pub fn sweep(inv: &Invocation) -> Result<bool, CliError> {
    let started = Instant::now();
    let cfg = &inv.config;
    let widths =
        cfg.widths.as_ref().filter(|w| !w.is_empty()).ok_or_else(|| {
            CliError::Config("field `widths`: sweep needs a nonempty list of slit half-widths".into())
        })?;
    let base = cfg.scenario().with_operation("slit", cfg.slit(cfg.slit_half_width.expect("resolved")));
    let table = slit_width_sweep(&base, widths, cfg.tolerance)?;

    ensure_dir(&inv.out_dir)?;
    let rows: Vec<Vec<Option<f64>>> = table
        .rows
        .iter()
        .map(|r| vec![Some(r.half_width), r.marginal_max_abs, r.marginal_tv, r.conditional_tv])
        .collect();
    let csv =
        write_csv(&inv.out_dir, "sweep.csv", &["width", "marginal_maxabs", "marginal_tv", "conditional_tv"], &rows)?;

    let checks: Vec<CheckRecord> = table
        .rows
        .iter()
        .filter_map(|r| {
            r.marginal_max_abs.map(|d| {
                CheckRecord::new(
                    format!("slit a={} marginal vs free", r.half_width),
                    CheckCategory::NoSignaling,
                    d,
                    Bound::AtMost,
                    table.tolerance,
                )
            })
        })
        .collect();
    if checks.is_empty() {
        println!("sweep: single width, no comparisons");
    }
    let passed = print_checks("sweep", &checks);
    let report = json!({
        "command": "sweep",
        "config": cfg,
        "rows": table.rows,
        "verdicts": checks,
        "passed": passed,
        "versions": versions(),
        "runtime_seconds": started.elapsed().as_secs_f64(),
        "generated_at_unix": timestamp(),
    });
    let json = write_json(&inv.out_dir, "report.json", &report)?;
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(passed)
}
