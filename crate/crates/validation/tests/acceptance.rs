//! Acceptance criteria 1–10. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ndarray::Array2;
use num_complex::Complex64;

use nosignal::collapse::DiscreteBipartite;
use nosignal::dynamics::{apply_local_unitary, free_propagate, random_unitary, split_step, SlitScreen};
use nosignal::entangle::{build_epr_state, gaussian_band, BipartiteWave, Physics};
use nosignal::marginals::{distribution_distance, particle2_distribution, spectral_components, WavenumberDistribution};
use nosignal::verifier::{
    bandwidth_check, compare, compare_distributions, discrete_order_defect, evolve_scenario, measure_branches,
    particle1_reshaping, run_default_suite, run_scenario, ApertureSpec, OperationSpec, Scenario, SuiteConfig,
    BANDWIDTH_TOLERANCE, CONDITIONAL_CONTRAST, NEGATIVE_CONTROL_FLOOR, NO_SIGNAL_TOLERANCE,
};
use nosignal::Error;

const SEED: u64 = 2005;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `L = N/4`, Gaussian band σ_k = 1, K_cut = 2, seeded random phases.
fn base(n: usize) -> Scenario {
    let mut s = Scenario::baseline(n);
    s.source.phase_seed = Some(SEED);
    s
}

fn slit(s: &Scenario, nodes: f64) -> OperationSpec {
    let grid = s.grid().unwrap();
    OperationSpec::default_slit(&grid, &s.physics, &s.source, nodes * grid.dy())
}

fn schedule(s: &Scenario) -> OperationSpec {
    let grid = s.grid().unwrap();
    let dy = grid.dy();
    OperationSpec::default_schedule(&grid, &s.physics, &s.source, 8.0 * dy, 2.0 * dy, s.operation_time)
}

fn c1_free_evolution() -> Verdict {
    let s = base(256);
    let grid = s.grid().unwrap();
    let w = s.source.build(&grid).unwrap();
    let pair = build_epr_state(&w, s.physics).unwrap();
    let source = w.density();
    let mut worst: f64 = 0.0;
    for t in [0.0, 0.37, 1.0, 5.0, 42.0, 1.0e3] {
        let d = particle2_distribution(&free_propagate(&pair, t).unwrap());
        worst = worst.max(max_abs(d.values(), &source));
    }
    Verdict::new(worst <= NO_SIGNAL_TOLERANCE, format!("N=256, 6 times, max|ΔD| = {worst:.2e} <= 1e-12"))
}

fn c2_local_unitaries() -> Verdict {
    let s = base(128);
    let state = evolve_scenario(&s).unwrap();
    let d0 = particle2_distribution(&state);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let u = random_unitary(128, SEED + 1 + i);
        let d = particle2_distribution(&apply_local_unitary(&state, &u).unwrap());
        worst = worst.max(distribution_distance(&d0, &d).unwrap().max_abs);
    }
    Verdict::new(worst <= NO_SIGNAL_TOLERANCE, format!("N=128, 50 unitaries, max|ΔD| = {worst:.2e} <= 1e-12"))
}

fn c3_slits() -> Verdict {
    let s = base(256);
    let free = run_scenario(&s).unwrap().distribution;
    let mut ops: Vec<(String, OperationSpec)> =
        [8.0, 4.0, 2.0].iter().map(|n| (format!("a={n}dy"), slit(&s, *n))).collect();
    ops.push(("schedule".into(), schedule(&s)));
    let mut worst: f64 = 0.0;
    let mut reshaped = Vec::new();
    for (name, op) in &ops {
        for steps in [10, 100, 400] {
            let mut v = s.with_operation(name.clone(), op.clone());
            v.n_steps = steps;
            let d = run_scenario(&v).unwrap().distribution;
            worst = worst.max(distribution_distance(&free, &d).unwrap().max_abs);
        }
        reshaped.push((name.clone(), particle1_reshaping(&s.with_operation(name.clone(), op.clone())).unwrap()));
    }
    let marginal_ok = worst <= NO_SIGNAL_TOLERANCE;
    let reshape_ok = reshaped.iter().all(|(_, tv)| *tv > 0.1);
    let tvs: Vec<String> = reshaped.iter().map(|(n, tv)| format!("{n}:{tv:.3}")).collect();
    Verdict::new(
        marginal_ok && reshape_ok,
        format!(
            "N=256, steps {{10,100,400}}, max|ΔD| = {worst:.2e} <= 1e-12 [{}]; particle-1 TV vs free > 0.1 [{}] ({})",
            if marginal_ok { "ok" } else { "no" },
            if reshape_ok { "ok" } else { "no" },
            tvs.join(", ")
        ),
    )
}

fn c4_discrete_order() -> Verdict {
    let defect = discrete_order_defect(1000, SEED).unwrap();
    Verdict::new(defect <= 1e-14, format!("1000 states up to 8x8, max defect = {defect:.2e} <= 1e-14"))
}

/// Bob's conditional distribution for the "inside" outcome, computed with an
/// explicit DFT matrix and an explicit diagonal projector.
fn explicit_conditional(state: &BipartiteWave, aperture: &ApertureSpec) -> (Vec<f64>, Vec<f64>) {
    let grid = *state.grid();
    let n = grid.len();
    let f = Array2::from_shape_fn((n, n), |(m, j)| {
        Complex64::from_polar((n as f64).sqrt().recip(), -grid.wavenumber(m) * grid.position(j))
    });
    let region = aperture.region(&grid);
    let p = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j && region.contains(i) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let psi = state.psi();
    let d_of = |psi: &Array2<Complex64>| -> Vec<f64> {
        let phi = f.dot(psi).dot(&f.t());
        let col: Vec<f64> = (0..n).map(|k2| (0..n).map(|k1| phi[[k1, k2]].norm_sqr()).sum()).collect();
        let total: f64 = col.iter().sum::<f64>() * grid.dk();
        col.iter().map(|v| v / total).collect()
    };
    (d_of(&p.dot(psi)), d_of(psi))
}

fn c5_measurement_average() -> Verdict {
    // Oracle at N=64: explicit projector and DFT matrix.
    let small = base(64).with_operation("slit", slit(&base(64), 4.0));
    let small_grid = small.grid().unwrap();
    let small_aperture = ApertureSpec { center: 0.0, half_width: 4.0 * small_grid.dy() };
    let state = evolve_scenario(&small).unwrap();
    let (cond, uncond) = explicit_conditional(&state, &small_aperture);
    let oracle_tv = 0.5 * cond.iter().zip(&uncond).map(|(a, b)| (a - b).abs()).sum::<f64>() * small_grid.dk();
    let lib = measure_branches(&state, &small_aperture).unwrap();
    let oracle_agrees = max_abs(lib.inside.as_ref().unwrap().values(), &cond) <= 1e-10;

    let s = base(256);
    let grid = s.grid().unwrap();
    let aperture = ApertureSpec { center: 0.0, half_width: 4.0 * grid.dy() };
    let measured = s.with_operation("slit", slit(&s, 4.0)).with_measurement("measured", Some(aperture));
    let out = run_scenario(&measured).unwrap();
    let br = out.branches.unwrap();
    let avg = distribution_distance(&out.distribution, &br.unmeasured).unwrap().max_abs;
    let tv = distribution_distance(br.inside.as_ref().unwrap(), &br.unmeasured).unwrap().total_variation;
    Verdict::new(
        oracle_tv > CONDITIONAL_CONTRAST && oracle_agrees && avg <= NO_SIGNAL_TOLERANCE && tv > CONDITIONAL_CONTRAST,
        format!(
            "N=64 oracle TV = {oracle_tv:.3} (library agrees: {oracle_agrees}); N=256 |avg - unmeasured| = {avg:.2e} <= 1e-12, conditional TV = {tv:.3} > 0.01"
        ),
    )
}

fn c6_bandwidth() -> Verdict {
    let s = base(256);
    let mut worst: f64 = 0.0;
    for op in [slit(&s, 8.0), slit(&s, 4.0), slit(&s, 2.0), schedule(&s)] {
        let d = run_scenario(&s.with_operation("op", op)).unwrap().distribution;
        worst = worst.max(bandwidth_check(&d, s.source.k_cut, BANDWIDTH_TOLERANCE).mass_outside);
    }
    Verdict::new(worst <= BANDWIDTH_TOLERANCE, format!("mass at |k2| > K_cut = {worst:.2e} <= 1e-10"))
}

fn chain_defect(state: &BipartiteWave) -> f64 {
    let grid = state.grid();
    let phi: f64 = spectral_components(state).iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dk() * grid.dk();
    let d = particle2_distribution(state).total();
    [state.norm_sqr(), phi, d].iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
}

fn c7_normalization() -> Verdict {
    let s = base(256);
    let grid = s.grid().unwrap();
    let physics = s.physics;
    let w = s.source.build(&grid).unwrap();
    let source_total = WavenumberDistribution::new(grid, w.density()).unwrap().total();
    let fresh = build_epr_state(&w, physics).unwrap();
    let pre = free_propagate(&fresh, s.pre_time).unwrap();
    let screen = SlitScreen::with_defaults(&grid, &physics, s.source.k_cut, 0.0, 4.0 * grid.dy()).unwrap();
    let op = split_step(&pre, &screen.into_operation(&grid), s.operation_time, s.n_steps).unwrap();
    let post = free_propagate(&op, s.post_time).unwrap();
    let region = ApertureSpec { center: 0.0, half_width: 4.0 * grid.dy() }.region(&grid);
    let inside = nosignal::collapse::project_aperture(&post, &region).unwrap().1;
    let outside = nosignal::collapse::project_aperture(&post, &region.complement()).unwrap().1;
    let worst = [&fresh, &pre, &op, &post, &inside, &outside]
        .iter()
        .map(|st| chain_defect(st))
        .fold((source_total - 1.0).abs(), f64::max);
    Verdict::new(worst <= 1e-12, format!("7 stages, max |norm - 1| = {worst:.2e} <= 1e-12"))
}

fn c8_monte_carlo() -> Verdict {
    let n = 100_000u64;
    let mut worst_sigmas: f64 = 0.0;
    let mut reproducible = true;
    for i in 0..10 {
        let state = DiscreteBipartite::random(3 + i % 5, 2 + (i * 3) % 7, SEED + i as u64).unwrap();
        let counts = state.sample_joint(SEED + 100 + i as u64, n).unwrap();
        reproducible &= counts == state.sample_joint(SEED + 100 + i as u64, n).unwrap();
        let rho2 = state.bob_marginal();
        for (j, p) in rho2.iter().enumerate() {
            let observed: u64 = counts.column(j).sum();
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            let dev = (observed as f64 - n as f64 * p).abs();
            worst_sigmas = worst_sigmas.max(if sd > 0.0 {
                dev / sd
            } else if dev > 0.0 {
                f64::INFINITY
            } else {
                0.0
            });
        }
    }
    Verdict::new(
        worst_sigmas <= 4.0 && reproducible,
        format!("10 states x 1e5 pairs, worst deviation = {worst_sigmas:.2} sd <= 4, seeded counts reproduce: {reproducible}"),
    )
}

fn c9_negative_control() -> Verdict {
    let s = base(128);
    let faulty = s.with_operation("faulty", OperationSpec::RandomUnitary { seed: SEED, norm_defect: 1e-3 });
    let rejected = matches!(run_scenario(&faulty), Err(Error::NonUnitary { .. }));

    let mut modified = s.clone();
    modified.id = "modified".into();
    modified.source.sigma_k *= 0.5;
    let a = run_scenario(&s).unwrap().distribution;
    let b = run_scenario(&modified).unwrap().distribution;
    let c = compare_distributions(&s.id, &a, &modified.id, &b, NO_SIGNAL_TOLERANCE).unwrap();
    let strict_refuses = matches!(compare(&s, &modified, NO_SIGNAL_TOLERANCE), Err(Error::ScenarioMismatch(_)));

    let suite = run_default_suite(&SuiteConfig {
        grid_points: 64,
        grid_half_width: 16.0,
        random_unitaries: 2,
        discrete_states: 10,
        inject_non_unitary: true,
        ..SuiteConfig::default()
    })
    .unwrap();

    Verdict::new(
        rejected && c.distance.max_abs > NEGATIVE_CONTROL_FLOOR && !c.passed() && strict_refuses && !suite.passed(),
        format!(
            "non-unitary rejected: {rejected}; modified source max|ΔD| = {:.2e} > 1e-3, verdict fails: {}; injected suite fails: {}",
            c.distance.max_abs,
            !c.passed(),
            !suite.passed()
        ),
    )
}

fn column_profiles(state: &BipartiteWave) -> Array2<f64> {
    let mut p = spectral_components(state).mapv(|v| v.norm_sqr());
    for mut col in p.columns_mut() {
        let total: f64 = col.sum();
        if total > 0.0 {
            col.mapv_inplace(|v| v / total);
        }
    }
    p
}

fn c10_factorization() -> Verdict {
    let s = base(128);
    let grid = s.grid().unwrap();
    let physics = Physics::default();
    let sources = [
        gaussian_band(&grid, 1.0, 2.0).unwrap().randomize_phase(SEED),
        gaussian_band(&grid, 0.4, 1.5).unwrap().randomize_phase(SEED + 1),
    ];
    let screen = SlitScreen::with_defaults(&grid, &physics, 2.0, 0.0, 4.0 * grid.dy()).unwrap().into_operation(&grid);
    let profiles: Vec<(Array2<f64>, Vec<f64>)> = sources
        .iter()
        .map(|w| {
            let pair = free_propagate(&build_epr_state(w, physics).unwrap(), 1.0).unwrap();
            let after = free_propagate(&split_step(&pair, &screen, 2.0, 100).unwrap(), 5.0).unwrap();
            (column_profiles(&after), w.density())
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut shared = 0;
    for k2 in 0..grid.len() {
        if profiles[0].1[k2] > 1e-6 && profiles[1].1[k2] > 1e-6 {
            shared += 1;
            let a = profiles[0].0.column(k2);
            let b = profiles[1].0.column(k2);
            worst = worst.max(a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
    }
    Verdict::new(
        shared > 0 && worst <= 1e-8,
        format!("N=128, {shared} shared columns, max profile difference = {worst:.2e} <= 1e-8"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict, Duration); 10] = [
        ("free-evolution invariance", c1_free_evolution, Duration::from_secs(1)),
        ("local-unitary no-signaling", c2_local_unitaries, Duration::from_secs(30)),
        ("slit no-signaling", c3_slits, Duration::from_secs(60)),
        ("discrete measurement order", c4_discrete_order, Duration::from_secs(5)),
        ("continuous measurement order", c5_measurement_average, Duration::from_secs(30)),
        ("bandwidth preservation", c6_bandwidth, Duration::from_secs(10)),
        ("normalization chain", c7_normalization, Duration::from_secs(60)),
        ("Monte Carlo concordance", c8_monte_carlo, Duration::from_secs(60)),
        ("negative controls", c9_negative_control, Duration::from_secs(60)),
        ("column-profile factorization", c10_factorization, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let v = run();
        let elapsed = started.elapsed();
        let in_time = elapsed <= *budget;
        let passed = v.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {} ({:.2}s of {}s)",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
