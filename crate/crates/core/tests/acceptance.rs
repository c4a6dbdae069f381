//! Exit criteria. Each test prints one `criterion N: PASS|FAIL ...` line to
//! stderr (uncaptured) and then asserts it.

use std::fs;
use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use cm2::classical::{build_q, crosscheck};
use cm2::cli::{self, Mode, ModelSource, RunConfig, SingleShot};
use cm2::dynamics::{run_unconditional, DEFAULT_PRUNE};
use cm2::linalg::{c, CMatrix};
use cm2::presets::{self, Preset, PresetParams};
use cm2::random::{random_incoherent_model, random_model};
use cm2::thermo::{self, exact_series, verify_exact, Column, Verdict};

fn report(n: usize, passed: bool, detail: String) {
    let line = format!("criterion {n}: {} {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(passed, "criterion {n} failed: {detail}");
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

fn preset_config(preset: Preset, mode: Mode, steps: usize, n_traj: usize, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::new(
        ModelSource::Preset {
            preset,
            params: PresetParams::default(),
        },
        mode,
    );
    cfg.steps = steps;
    cfg.n_traj = n_traj;
    cfg.seed = Some(seed);
    cfg
}

const ISS_STEPS: usize = 200;
const ISS_TRAJ: usize = 2000;
const ISS_SEED: u64 = 1;

struct IssRun {
    outcome: cli::EnsembleOutcome,
    elapsed: Duration,
}

/// The two-qubit ensemble shared by the steady-state criteria.
fn iss_run() -> &'static IssRun {
    static RUN: OnceLock<IssRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = preset_config(Preset::TwoQubit, Mode::Ensemble, ISS_STEPS, ISS_TRAJ, ISS_SEED);
        let start = Instant::now();
        let outcome = cli::run_ensemble(&cfg).expect("ensemble runs");
        IssRun {
            outcome,
            elapsed: start.elapsed(),
        }
    })
}

#[test]
fn criterion_1_homogenization() {
    let start = Instant::now();
    let model = presets::single_qubit_model(0.3, 0.3).unwrap();
    let run = run_unconditional(&model, 200).unwrap();
    let s = thermo::vn_entropy(run.states[200].matrix()).unwrap();
    let elapsed = start.elapsed();
    let target = 0.610864;
    let gap = (s - target).abs();
    report(
        1,
        gap < 1e-6 && within(elapsed, Duration::from_secs(1)),
        format!("S(X_200) = {s:.9}, |S - {target}| = {gap:.2e} (< 1e-6), {elapsed:.2?} (< 1 s)"),
    );
}

#[test]
fn criterion_2_equilibrium_ledger_vanishes() {
    let model = presets::single_qubit_model(0.3, 0.3)
        .unwrap()
        .with_initial_state(presets::thermal_qubit(0.3).unwrap())
        .unwrap();
    let run = exact_series(&model, 10, DEFAULT_PRUNE).unwrap();
    let mut worst: f64 = 0.0;
    for s in &run.series.steps {
        let mut entries = vec![s.gain, s.loss, s.d_info, s.d_sigma_u, s.d_sigma_c, s.d_phi_u, s.d_phi_c];
        entries.extend(&s.d_phi_u_per_unit);
        for v in entries {
            worst = worst.max(if v.is_finite() { v.abs() } else { f64::INFINITY });
        }
    }
    report(
        2,
        worst <= 1e-12,
        format!("max |entry| over G, L, dI, dSigma_u, dSigma_c, dPhi in 10 steps = {worst:.2e} (<= 1e-12)"),
    );
}

#[test]
fn criterion_3_no_iss_for_single_qubit() {
    let cfg = preset_config(Preset::SingleQubit, Mode::Ensemble, 100, 2000, 1);
    let start = Instant::now();
    let out = cli::run_ensemble(&cfg).unwrap();
    let elapsed = start.elapsed();
    let iss = &out.iss;
    let worst = iss.mean_gain.abs().max(iss.mean_loss.abs()).max(iss.mean_abs_d_info);
    let passed = worst < 5e-3 && iss.verdict != Verdict::Iss && within(elapsed, Duration::from_secs(30));
    report(
        3,
        passed,
        format!(
            "tail |G| {:.2e}, |L| {:.2e}, |dI| {:.2e} (< 5e-3), verdict {}, {elapsed:.2?} (< 30 s)",
            iss.mean_gain.abs(),
            iss.mean_loss.abs(),
            iss.mean_abs_d_info,
            iss.verdict
        ),
    );
}

#[test]
fn criterion_4_iss_for_two_qubits() {
    let run = iss_run();
    let iss = &run.outcome.iss;
    // G - L is dI trajectory by trajectory, so its window mean carries the SE of dI
    let se = iss.se_d_info;
    let split = (iss.mean_gain - iss.mean_loss).abs();
    // dSigma_c - dSigma_u = -dI
    let production_gap = iss.mean_abs_d_info;
    let checks = [
        iss.verdict == Verdict::Iss,
        split < 3.0 * se,
        iss.mean_gain > 5e-3,
        production_gap < 3.0 * se,
        within(run.elapsed, Duration::from_secs(120)),
    ];
    report(
        4,
        checks.iter().all(|&b| b),
        format!(
            "verdict {} (ISS required); |G - L| = {split:.2e} vs 3 SE = {:.2e}; G = {:.3e} ± {:.1e} (> 5e-3 required); \
             |dSigma_c - dSigma_u| = {production_gap:.2e}; {:.2?} (< 2 min)",
            iss.verdict,
            3.0 * se,
            iss.mean_gain,
            iss.se_gain,
            run.elapsed
        ),
    );
}

#[test]
fn criterion_5_single_shot_ergodicity() {
    let model = Preset::TwoQubitFixedPoint.build(&PresetParams::default()).unwrap();
    let start = Instant::now();
    let shot = SingleShot::compute(&model, 5000, 1).unwrap();
    let elapsed = start.elapsed();
    let clicks = *shot.click_average.last().unwrap();
    let gain = SingleShot::time_average(&shot.gain, cli::DEFAULT_DISCARD);
    let prod = SingleShot::time_average(&shot.d_sigma_c_regular, cli::DEFAULT_DISCARD);

    let series = &iss_run().outcome.series;
    let tail = iss_run().outcome.iss.window_start;
    let (g_ref, g_se) = series.window_stats(Column::Gain, tail);
    let (p_ref, p_se) = series.window_stats(Column::DSigmaCRegular, tail);
    let g_tol = 3.0 * gain.se.hypot(g_se);
    let p_tol = 3.0 * prod.se.hypot(p_se);
    let checks = [
        (clicks - 0.70).abs() <= 0.03,
        (gain.mean - g_ref).abs() < g_tol,
        (prod.mean - p_ref).abs() < p_tol,
        within(elapsed, Duration::from_secs(30)),
    ];
    report(
        5,
        checks.iter().all(|&b| b),
        format!(
            "Z_T = {clicks:.4} (0.70 ± 0.03); <G> = {:.3e} vs {g_ref:.3e} (|diff| {:.1e} < {g_tol:.1e}); \
             <dSigma_c> regular part {:.4e} vs {p_ref:.4e} (|diff| {:.1e} < {p_tol:.1e}); {elapsed:.2?} (< 30 s)",
            gain.mean,
            (gain.mean - g_ref).abs(),
            prod.mean,
            (prod.mean - p_ref).abs()
        ),
    );
}

#[test]
fn criterion_6_fixed_point_purification() {
    let cfg = preset_config(
        Preset::TwoQubitFixedPoint,
        Mode::Ensemble,
        ISS_STEPS,
        ISS_TRAJ,
        ISS_SEED,
    );
    let out = cli::run_ensemble(&cfg).unwrap();
    let steps = &out.series.steps;
    let s0 = steps[0].s_u;
    let drift = steps.iter().map(|s| (s.s_u - s0).abs()).fold(0.0, f64::max);
    let (s_c, se) = out.series.window_stats(Column::SC, out.iss.window_start);
    let s_u = steps.last().unwrap().s_u;
    report(
        6,
        drift <= 1e-12 && s_c < s_u - 3.0 * se,
        format!(
            "max |S_u(t) - S_u(1)| = {drift:.2e} (<= 1e-12); tail S_c = {s_c:.6} < S_u - 3 SE = {:.6}",
            s_u - 3.0 * se
        ),
    );
}

#[test]
fn criterion_7_inequality_suite() {
    const MODELS: u64 = 200;
    const STEPS: usize = 5;
    // relation name -> tolerance at which it is required
    let gated = [
        ("unconditional_second_law", 1e-10),
        ("loss_nonnegative", 1e-10),
        ("information_rate_split", 1e-10),
        ("integrated_information", 1e-10),
        ("conditional_second_law", 1e-9),
        ("collision_holevo_bound", 1e-10),
        ("gain_holevo_bound", 1e-10),
        ("marginalization", 1e-10),
        ("conditional_flux", 1e-10),
        ("flux_additivity", 1e-10),
    ];
    let start = Instant::now();
    let mut worst: Vec<(&str, f64)> = gated.iter().map(|(n, _)| (*n, f64::INFINITY)).collect();
    worst.push(("integrated_gain_floor", f64::INFINITY));
    let mut condition_ok = true;
    for seed in 0..MODELS {
        let model = random_model(seed, 1 + (seed % 2) as usize);
        let run = exact_series(&model, STEPS, DEFAULT_PRUNE).unwrap();
        condition_ok &= run.condition.holds;
        let v = verify_exact(&run);
        for check in v.checks.iter().chain(&v.informational) {
            if check.divergent {
                continue;
            }
            if let Some(w) = worst.iter_mut().find(|(n, _)| *n == check.name) {
                w.1 = w.1.min(check.slack);
            }
        }
    }
    let elapsed = start.elapsed();
    let mut passed = condition_ok && within(elapsed, Duration::from_secs(180));
    let mut parts = Vec::new();
    for (name, slack) in &worst {
        let tol = gated.iter().find(|(n, _)| n == name).map_or(1e-9, |(_, t)| *t);
        let ok = *slack >= -tol;
        passed &= ok;
        parts.push(format!("{name} {slack:+.2e}{}", if ok { "" } else { " FAILED" }));
    }
    report(
        7,
        passed,
        format!(
            "{MODELS} models x {STEPS} steps, {elapsed:.2?} (< 3 min); worst slack per relation: {}",
            parts.join(", ")
        ),
    );
}

/// Partial SWAP written through its transmission amplitude `lambda`.
fn lambda_swap(lambda: f64) -> CMatrix {
    let t = -(1.0 - lambda * lambda).sqrt();
    let mut u = CMatrix::zeros(4, 4);
    u[(0, 0)] = c(1.0, 0.0);
    u[(3, 3)] = c(1.0, 0.0);
    u[(1, 1)] = c(lambda, 0.0);
    u[(2, 2)] = c(lambda, 0.0);
    u[(1, 2)] = c(0.0, t);
    u[(2, 1)] = c(0.0, t);
    u
}

#[test]
fn criterion_8_classical_crosscheck() {
    let mut worst: f64 = 0.0;
    let mut all_passed = true;
    for seed in 0..50 {
        let check = crosscheck(&random_incoherent_model(seed), 8).unwrap();
        worst = worst.max(check.max_abs_diff);
        all_passed &= check.passed;
    }
    let mut q_err: f64 = 0.0;
    for k in 0..=10 {
        let l = k as f64 / 10.0;
        let q = build_q(&lambda_swap(l), 2, 2).unwrap();
        let l2 = l * l;
        let expected = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, l2, 1.0 - l2, 0.0],
            [0.0, 1.0 - l2, l2, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        for (r, row) in expected.iter().enumerate() {
            for (col, v) in row.iter().enumerate() {
                q_err = q_err.max((q.matrix[(r, col)] - v).abs());
            }
        }
    }
    report(
        8,
        all_passed && worst < 1e-12 && q_err < 1e-12,
        format!(
            "50 models, T=8: max |P_q - P_hmm| = {worst:.2e} (< 1e-12); partial SWAP Q entrywise error {q_err:.2e}"
        ),
    );
}

#[test]
fn criterion_9_thread_count_does_not_change_output() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut csv = Vec::new();
    for (dir, threads) in dirs.iter().zip(["1", "8"]) {
        let steps = ISS_STEPS.to_string();
        let traj = ISS_TRAJ.to_string();
        let seed = ISS_SEED.to_string();
        let out = Command::new(env!("CARGO_BIN_EXE_cm2"))
            .args([
                "ensemble",
                "--preset",
                "two-qubit",
                "--steps",
                &steps,
                "--traj",
                &traj,
                "--seed",
                &seed,
            ])
            .arg("--out")
            .arg(dir.path())
            .env("CM2_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csv.push(fs::read(dir.path().join("series.csv")).unwrap());
    }
    report(
        9,
        csv[0] == csv[1],
        format!(
            "series.csv with CM2_THREADS=1 and 8: {} vs {} bytes, identical = {}",
            csv[0].len(),
            csv[1].len(),
            csv[0] == csv[1]
        ),
    );
}
