//! The release gate: seven numbered checks, each reported as one
//! `criterion N: PASS/FAIL/SKIPPED - ...` line written to the real stdout
//! (bypassing the harness's output capture, so the verdicts appear in plain
//! `cargo test` logs).
//!
//! Criteria 1-3 and 7 run per-commit. Criteria 4-6 need five long ensemble
//! runs at the published physics sizes (N = 100 trajectories, grid 256,
//! up to 200 modulation periods); set `QPEND_FULL_ACCEPTANCE=1` to include
//! them, as a nightly pipeline would. Every tolerance is pinned in code
//! next to the check it guards.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use qpend_core::classical::{classify_orbit, stroboscopic_portrait, OrbitClass};
use qpend_core::grid::Grid;
use qpend_core::noise::TrajectoryStreams;
use qpend_core::oracle::{trace_distance, DenseOracle, DensityMatrix, MasterEq};
use qpend_core::params::SimParams;
use qpend_core::propagator::SplitOperator;
use qpend_core::stats::{AngleMatrix, StrobeSnapshotSet};
use qpend_core::wavefunction::{gaussian_state, WaveFunction};
use qpend_core::wigner::wigner_transform;

use qpend_cli::config::parse_config;
use qpend_cli::emit::{read_moments, read_theta_ave};
use qpend_cli::output::parse_csv;
use qpend_cli::runner::run_scenario;

/// Pass detail or failure detail.
type Outcome = Result<String, String>;

enum Verdict {
    Pass(String, f64),
    Fail(String, f64),
    Skipped(String),
}

/// Print through the capture: verdict lines must reach the real stdout even
/// when the harness swallows `println!`.
fn report(line: &str) {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").expect("stdout");
    out.flush().expect("stdout");
}

fn panic_text(p: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "opaque panic payload".to_string()
    }
}

/// Run one criterion body with timing, panic containment, and an optional
/// hard runtime budget (budget overruns fail the criterion: the budgets are
/// part of the contract).
fn timed(budget_s: Option<f64>, body: impl FnOnce() -> Outcome) -> Verdict {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body))
        .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(p.as_ref()))));
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => match budget_s {
            Some(b) if secs > b => Verdict::Fail(
                format!("{detail}; but runtime exceeded the {b:.0} s budget"),
                secs,
            ),
            _ => Verdict::Pass(detail, secs),
        },
        Err(detail) => Verdict::Fail(detail, secs),
    }
}

/// L2 distance between two states under the grid measure.
fn state_distance(a: &WaveFunction, b: &WaveFunction) -> f64 {
    let sq: f64 = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(u, v)| (u - v).norm_sqr())
        .sum();
    (sq * a.grid().dx).sqrt()
}

fn estr(e: impl std::fmt::Display) -> String {
    e.to_string()
}

// ------------------------------------------------------------- criterion 1

/// Split-operator kernel against the dense oracle: same noise, same map,
/// per-step state error <= 1e-8 at D = 0 and D = 0.1.
fn criterion_1() -> Outcome {
    const TOL: f64 = 1e-8;
    let mut worst: f64 = 0.0;
    for (idx, d) in [(0u64, 0.0), (1u64, 0.1)] {
        let params = SimParams {
            d,
            grid_size: 32,
            ..SimParams::baseline()
        };
        let grid = Grid::new(params.grid_size, params.kbar).map_err(estr)?;
        let psi0 =
            gaussian_state(&grid, params.x0, params.p0, params.sigma_x).map_err(estr)?;
        let mut fast = SplitOperator::new(grid.clone(), params.clone()).map_err(estr)?;
        let mut oracle = DenseOracle::new(grid.clone(), params.clone()).map_err(estr)?;
        let mut a = psi0.clone();
        let mut b = psi0;
        let mut stream = TrajectoryStreams::new(8420).stream(idx);
        for step in 1..=100u32 {
            let w = stream.wiener(fast.dt());
            fast.sse_step(&mut a, &w);
            oracle.step(&mut b, &w).map_err(estr)?;
            let err = state_distance(&a, &b);
            worst = worst.max(err);
            if !(err <= TOL) {
                return Err(format!(
                    "D={d}: state error {err:.3e} > {TOL:.0e} at step {step}"
                ));
            }
        }
    }
    Ok(format!(
        "dense-oracle agreement over 100 shared-noise steps at D=0 and D=0.1: \
         max per-step state error {worst:.2e} <= 1e-8"
    ))
}

// ------------------------------------------------------------- criterion 2

/// Monte Carlo mean of conditioned projectors against the master equation:
/// trace distance <= 3/sqrt(M) at M=400, and the disjoint M=100 ensemble's
/// error is about twice as large (1/sqrt(M) scaling).
fn criterion_2() -> Outcome {
    let params = SimParams {
        d: 0.01,
        grid_size: 64,
        // 800 steps/period keeps the deterministic splitting bias well below
        // the Monte Carlo term, so the error ratio shows the 1/sqrt(M) law.
        steps_per_period: 800,
        ..SimParams::baseline()
    };
    let grid = Grid::new(params.grid_size, params.kbar).map_err(estr)?;
    let psi0 = gaussian_state(&grid, params.x0, params.p0, params.sigma_x).map_err(estr)?;
    let steps = params.steps_per_period;

    let mut rho_me = DensityMatrix::from_pure(&psi0);
    let mut me = MasterEq::new(grid.clone(), params.clone()).map_err(estr)?;
    for _ in 0..steps {
        me.step(&mut rho_me).map_err(estr)?;
    }

    let horizon = std::f64::consts::TAU;
    let streams = TrajectoryStreams::new(2024);
    let mut rho_400 = DensityMatrix::zeros(grid.clone(), horizon);
    let mut rho_100 = DensityMatrix::zeros(grid.clone(), horizon);
    for traj in 0..500u64 {
        let mut eng = SplitOperator::new(grid.clone(), params.clone()).map_err(estr)?;
        let mut psi = psi0.clone();
        let mut stream = streams.stream(traj);
        for _ in 0..steps {
            let w = stream.wiener(eng.dt());
            eng.sse_step(&mut psi, &w);
        }
        if traj < 400 {
            rho_400.accumulate_pure(&psi, 1.0 / 400.0);
        } else {
            rho_100.accumulate_pure(&psi, 1.0 / 100.0);
        }
    }
    let td_400 = trace_distance(&rho_400, &rho_me).map_err(estr)?;
    let td_100 = trace_distance(&rho_100, &rho_me).map_err(estr)?;
    let bound = 3.0 / 400f64.sqrt(); // 0.15
    if !(td_400 <= bound) {
        return Err(format!(
            "trace distance {td_400:.4} at M=400 exceeds 3/sqrt(M) = {bound:.3}"
        ));
    }
    let ratio = td_100 / td_400;
    if !(1.3..=2.7).contains(&ratio) {
        return Err(format!(
            "M=100/M=400 error ratio {ratio:.2} outside 2 +/- 0.7 \
             (TD100 {td_100:.4}, TD400 {td_400:.4})"
        ));
    }
    Ok(format!(
        "trajectory mean vs master equation: TD(M=400) = {td_400:.4} <= {bound:.3}, \
         disjoint-ensemble error ratio M=100/M=400 = {ratio:.2} within 2 +/- 0.7"
    ))
}

// ------------------------------------------------------------- criterion 3

/// Classical phase-space structure: the two canonical seeds classify as
/// regular / chaotic, and the regular strobe orbit stays bounded.
fn criterion_3() -> Outcome {
    let params = SimParams {
        d: 0.0,
        ..SimParams::baseline() // xi = 1.2, epsilon = 0.2
    };
    let reg = classify_orbit(0.0, 1.0, &params);
    let cha = classify_orbit(-2.5, 1.0, &params);
    if reg.class != OrbitClass::Regular {
        return Err(format!(
            "(0, 1.0) classified chaotic (exponent {:.3})",
            reg.exponent
        ));
    }
    if cha.class != OrbitClass::Chaotic {
        return Err(format!(
            "(-2.5, 1.0) classified regular (exponent {:.3})",
            cha.exponent
        ));
    }
    let orbit = &stroboscopic_portrait(&[(0.0, 1.0)], 2000, &params)[0];
    let p_bar = orbit.iter().map(|&(_, p)| p).sum::<f64>() / orbit.len() as f64;
    let max_dev = orbit
        .iter()
        .map(|&(_, p)| (p - p_bar).abs())
        .fold(0.0f64, f64::max);
    if !(max_dev <= 1.0) {
        return Err(format!(
            "regular orbit wandered: max |p - p_bar| = {max_dev:.3} > 1 over 2000 strobes"
        ));
    }
    Ok(format!(
        "(0,1) regular (exponent {:.3}), (-2.5,1) chaotic (exponent {:.3}); \
         regular strobe orbit bounded, max |p - p_bar| = {max_dev:.2} <= 1 over 2000 strobes",
        reg.exponent, cha.exponent
    ))
}

// ----------------------------------------------- criteria 4-6 shared runs

struct LongRuns {
    reg_angles: PathBuf,
    cha_angles: PathBuf,
    q_d01: PathBuf,
    c_d01: PathBuf,
    c_d0001: PathBuf,
}

/// The five published-size ensemble runs criteria 4-6 read. Everything not
/// set here comes from the baseline: kbar 0.25, xi 1.2, epsilon 0.2,
/// sigma_x 0.3906, grid 256, 200 steps/period.
fn build_long_runs(root: &Path) -> Result<LongRuns, String> {
    let mk = |scenario: &str, d: f64, x0: f64, n_periods: u32| {
        format!(
            "scenario = {scenario}\n\
             D = {d}\n\
             x0 = {x0}\n\
             p0 = 1.0\n\
             n_traj = 100\n\
             n_periods = {n_periods}\n\
             dump_strobes = {n_periods}\n\
             seed = 11\n"
        )
    };
    let specs = [
        ("reg_angles", mk("angles", 0.001, 0.0, 200)),
        ("cha_angles", mk("angles", 0.001, -2.5, 200)),
        ("q_d01", mk("quantum_ensemble", 0.1, 0.0, 50)),
        ("c_d01", mk("classical_ensemble", 0.1, 0.0, 50)),
        ("c_d0001", mk("classical_ensemble", 0.001, 0.0, 200)),
    ];
    let mut dirs = Vec::new();
    for (name, text) in &specs {
        let cfg = parse_config(text).map_err(estr)?;
        let dir = root.join(name);
        run_scenario(&cfg, &dir, None).map_err(|e| format!("{name}: {e}"))?;
        dirs.push(dir);
    }
    let mut it = dirs.into_iter();
    Ok(LongRuns {
        reg_angles: it.next().unwrap(),
        cha_angles: it.next().unwrap(),
        q_d01: it.next().unwrap(),
        c_d01: it.next().unwrap(),
        c_d0001: it.next().unwrap(),
    })
}

// ------------------------------------------------------------- criterion 4

/// Hypersensitivity trend: the chaotic seed's average Hilbert angle at
/// strobe 200 exceeds the regular seed's, with the pinned desk-scale bounds.
fn criterion_4(runs: &LongRuns) -> Outcome {
    let reg = read_theta_ave(&runs.reg_angles).map_err(estr)?;
    let cha = read_theta_ave(&runs.cha_angles).map_err(estr)?;
    let r = reg.last().ok_or("empty regular angle table")?;
    let c = cha.last().ok_or("empty chaotic angle table")?;
    if r.strobe != 200 || c.strobe != 200 {
        return Err(format!(
            "angle tables end at strobes {} / {}, expected 200",
            r.strobe, c.strobe
        ));
    }
    if !(c.theta_ave > r.theta_ave) {
        return Err(format!(
            "chaotic theta_ave {:.3} not above regular {:.3} at strobe 200",
            c.theta_ave, r.theta_ave
        ));
    }
    if !(c.theta_ave >= 1.2) {
        return Err(format!(
            "chaotic theta_ave {:.3} below the 1.2 rad floor \
             (regular {:.3}, ordering chaotic > regular holds)",
            c.theta_ave, r.theta_ave
        ));
    }
    if !(r.theta_ave <= 1.0) {
        return Err(format!(
            "regular theta_ave {:.3} above the 1.0 rad ceiling (chaotic {:.3})",
            r.theta_ave, c.theta_ave
        ));
    }
    Ok(format!(
        "theta_ave at strobe 200 (N=100, D=0.001): chaotic {:.3} >= 1.2, \
         regular {:.3} <= 1.0",
        c.theta_ave, r.theta_ave
    ))
}

// ------------------------------------------------------------- criterion 5

/// Angle-histogram shape at strobe 200: chaotic mode near pi/2, regular
/// mode well below it.
fn criterion_5(runs: &LongRuns) -> Outcome {
    let mode = |dir: &Path| -> Result<f64, String> {
        let path = dir.join("angle_hist_s200.csv");
        let text =
            std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let (_, rows) = parse_csv(&text, &path).map_err(estr)?;
        let mut best_center = 0.0;
        let mut best_count = 0u64;
        for row in &rows {
            let lo: f64 = row[0].parse().map_err(|_| "bad bin_lo")?;
            let hi: f64 = row[1].parse().map_err(|_| "bad bin_hi")?;
            let count: u64 = row[2].parse().map_err(|_| "bad count")?;
            if count > best_count {
                best_count = count;
                best_center = 0.5 * (lo + hi);
            }
        }
        Ok(best_center)
    };
    let m_cha = mode(&runs.cha_angles)?;
    let m_reg = mode(&runs.reg_angles)?;
    let off = (m_cha - std::f64::consts::FRAC_PI_2).abs();
    if !(off <= 0.25) {
        return Err(format!(
            "chaotic histogram mode {m_cha:.3} rad is {off:.3} rad from pi/2 (> 0.25)"
        ));
    }
    let gap = m_cha - m_reg;
    if !(gap >= 0.4) {
        return Err(format!(
            "regular mode {m_reg:.3} rad only {gap:.3} rad below chaotic mode {m_cha:.3} (< 0.4)"
        ));
    }
    Ok(format!(
        "histogram modes at strobe 200: chaotic {m_cha:.3} rad ({off:.3} from pi/2, <= 0.25); \
         regular {m_reg:.3} rad, gap {gap:.2} >= 0.4"
    ))
}

// ------------------------------------------------------------- criterion 6

/// Quantum-classical correspondence at strong measurement, and its breakdown
/// (tunneling) at weak measurement.
fn criterion_6(runs: &LongRuns) -> Outcome {
    let q = read_moments(&runs.q_d01).map_err(estr)?;
    let c = read_moments(&runs.c_d01).map_err(estr)?;
    if q.len() != 51 || c.len() != 51 {
        return Err(format!(
            "expected 51 strobes in both D=0.1 moment tables, got {} / {}",
            q.len(),
            c.len()
        ));
    }
    let n = 100.0;
    let mut hits = 0u32;
    for s in 1..=50 {
        let se = ((q[s].var_of_means + c[s].var_of_means) / n).sqrt();
        if (q[s].mean_p - c[s].mean_p).abs() <= 3.0 * se {
            hits += 1;
        }
    }
    if hits < 45 {
        return Err(format!(
            "D=0.1 quantum/classical <p> within 3 pooled SE at only {hits}/50 strobes (< 45)"
        ));
    }

    let q_weak = read_moments(&runs.reg_angles).map_err(estr)?;
    let c_weak = read_moments(&runs.c_d0001).map_err(estr)?;
    // Both series start at <p> = +1; a reversal is the mean turning negative.
    let q_flip = q_weak.iter().find(|r| r.mean_p < 0.0).map(|r| r.strobe);
    let c_flip = c_weak.iter().find(|r| r.mean_p < 0.0).map(|r| r.strobe);
    let Some(flip_at) = q_flip else {
        return Err(
            "D=0.001 quantum <p> never reverses sign within 200 strobes (no tunneling)"
                .to_string(),
        );
    };
    if let Some(s) = c_flip {
        return Err(format!(
            "D=0.001 classical <p> also reverses sign (at strobe {s}); the tunneling \
             discriminator must separate the two"
        ));
    }
    Ok(format!(
        "D=0.1 <p> agreement within 3 pooled SE at {hits}/50 strobes (>= 45); \
         D=0.001 quantum <p> first reverses sign at strobe {flip_at}, classical never does"
    ))
}

// ------------------------------------------------------------- criterion 7

/// Invariant sweeps: norm conservation, Wigner identities, angle-matrix
/// bounds/symmetry, Wiener moments, worker-count determinism.
fn criterion_7() -> Outcome {
    let mut notes: Vec<String> = Vec::new();

    // Norm conservation. At D = 0 the conditioned factor is a pure phase,
    // so the pre-renormalization norm must sit at 1 to rounding; at D = 0.1
    // the post-step state must be exactly renormalized.
    {
        let streams = TrajectoryStreams::new(5);
        let mut worst_pre = 0.0f64;
        let mut worst_post = 0.0f64;
        for (idx, d) in [(0u64, 0.0), (1u64, 0.1)] {
            let params = SimParams {
                d,
                grid_size: 64,
                ..SimParams::baseline()
            };
            let grid = Grid::new(params.grid_size, params.kbar).map_err(estr)?;
            let mut psi =
                gaussian_state(&grid, params.x0, params.p0, params.sigma_x).map_err(estr)?;
            let mut eng = SplitOperator::new(grid.clone(), params.clone()).map_err(estr)?;
            let mut stream = streams.stream(idx);
            for _ in 0..200 {
                let w = stream.wiener(eng.dt());
                let pre = eng.sse_step(&mut psi, &w);
                if d == 0.0 {
                    worst_pre = worst_pre.max((pre - 1.0).abs());
                }
                worst_post = worst_post.max((psi.norm() - 1.0).abs());
            }
        }
        if !(worst_pre <= 1e-12) {
            return Err(format!(
                "noise-free pre-renormalization norm drift {worst_pre:.2e} > 1e-12 per step"
            ));
        }
        if !(worst_post <= 1e-12) {
            return Err(format!(
                "renormalized state norm off by {worst_post:.2e} > 1e-12"
            ));
        }
        notes.push(format!(
            "norm drift {worst_pre:.1e} (D=0 pre-renorm), {worst_post:.1e} (post-renorm)"
        ));
    }

    // Wigner normalization and both marginals on an evolved, noisy state.
    {
        let params = SimParams {
            d: 0.01,
            grid_size: 64,
            ..SimParams::baseline()
        };
        let grid = Grid::new(params.grid_size, params.kbar).map_err(estr)?;
        let mut psi =
            gaussian_state(&grid, params.x0, params.p0, params.sigma_x).map_err(estr)?;
        let mut eng = SplitOperator::new(grid.clone(), params.clone()).map_err(estr)?;
        let mut stream = TrajectoryStreams::new(6).stream(0);
        for _ in 0..50 {
            let w = stream.wiener(eng.dt());
            eng.sse_step(&mut psi, &w);
        }
        let w = wigner_transform(&psi).map_err(estr)?;
        let norm_err = (w.norm() - 1.0).abs();
        if !(norm_err <= 1e-8) {
            return Err(format!("Wigner normalization off by {norm_err:.2e} > 1e-8"));
        }
        let xm = w.x_marginal();
        let mut marg_err = 0.0f64;
        for (m, a) in xm.iter().zip(&psi.amps) {
            marg_err = marg_err.max((m - a.norm_sqr()).abs());
        }
        let pm = w.p_marginal();
        let spec = psi.momentum_spectrum();
        let scale = grid.dx * grid.dx / (std::f64::consts::TAU * grid.kbar);
        for (m, f) in pm.iter().zip(&spec) {
            marg_err = marg_err.max((m - f.norm_sqr() * scale).abs());
        }
        if !(marg_err <= 1e-8) {
            return Err(format!(
                "Wigner marginal deviates from the state density by {marg_err:.2e} > 1e-8"
            ));
        }
        notes.push(format!(
            "Wigner norm residual {norm_err:.1e}, marginal residual {marg_err:.1e}"
        ));
    }

    // Angle-matrix bounds and symmetry on a small evolved ensemble.
    {
        let params = SimParams {
            d: 0.05,
            grid_size: 64,
            ..SimParams::baseline()
        };
        let grid = Grid::new(params.grid_size, params.kbar).map_err(estr)?;
        let psi0 =
            gaussian_state(&grid, params.x0, params.p0, params.sigma_x).map_err(estr)?;
        let streams = TrajectoryStreams::new(7);
        let mut states = Vec::new();
        for traj in 0..6u64 {
            let mut eng = SplitOperator::new(grid.clone(), params.clone()).map_err(estr)?;
            let mut psi = psi0.clone();
            let mut stream = streams.stream(traj);
            for _ in 0..40 {
                let w = stream.wiener(eng.dt());
                eng.sse_step(&mut psi, &w);
            }
            states.push(psi);
        }
        let snap = StrobeSnapshotSet::new(1, (0..6).collect(), states).map_err(estr)?;
        let m = AngleMatrix::from_snapshots(&snap).map_err(estr)?;
        let half_pi = std::f64::consts::FRAC_PI_2;
        for i in 0..6 {
            if !(m.value(i, i) <= 1e-6) {
                return Err(format!("self-angle {:.2e} not ~0", m.value(i, i)));
            }
            for j in 0..6 {
                let v = m.value(i, j);
                if !(-1e-12..=half_pi + 1e-12).contains(&v) {
                    return Err(format!("angle ({i},{j}) = {v} outside [0, pi/2]"));
                }
                if m.value(i, j) != m.value(j, i) {
                    return Err(format!("angle matrix asymmetric at ({i},{j})"));
                }
            }
        }
        notes.push("angle matrix within [0, pi/2], symmetric, zero diagonal".to_string());
    }

    // Wiener-increment statistics: mean and variance z-tests over 1e6 draws.
    {
        let n = 1_000_000usize;
        let dt = 0.01;
        let mut stream = TrajectoryStreams::new(99).stream(0);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let w = stream.wiener(dt);
            sum += w.dw;
            sum_sq += w.dw * w.dw;
        }
        let z_mean = sum / (n as f64 * dt).sqrt();
        // Var(dw^2) = 2 dt^2 for a centered Gaussian of variance dt.
        let z_var = (sum_sq - n as f64 * dt) / (dt * (2.0 * n as f64).sqrt());
        if !(z_mean.abs() <= 4.0) {
            return Err(format!("Wiener mean z = {z_mean:.2} beyond 4 sigma"));
        }
        if !(z_var.abs() <= 4.0) {
            return Err(format!("Wiener variance z = {z_var:.2} beyond 4 sigma"));
        }
        notes.push(format!(
            "Wiener z-scores over 1e6 draws: mean {z_mean:+.2}, variance {z_var:+.2}"
        ));
    }

    // Worker-count determinism: byte-identical run directories.
    {
        let tmp = tempfile::tempdir().map_err(estr)?;
        let cfg = parse_config(
            "scenario = quantum_ensemble\n\
             D = 0.01\n\
             grid_size = 32\n\
             steps_per_period = 40\n\
             n_periods = 2\n\
             n_traj = 4\n\
             dump_strobes = 2\n\
             seed = 9\n",
        )
        .map_err(estr)?;
        let d1 = tmp.path().join("w1");
        let d3 = tmp.path().join("w3");
        run_scenario(&cfg, &d1, Some(1)).map_err(estr)?;
        run_scenario(&cfg, &d3, Some(3)).map_err(estr)?;
        for entry in std::fs::read_dir(&d1).map_err(estr)? {
            let name = entry.map_err(estr)?.file_name();
            let a = std::fs::read(d1.join(&name)).map_err(estr)?;
            let b = std::fs::read(d3.join(&name))
                .map_err(|e| format!("{}: {e}", name.to_string_lossy()))?;
            if a != b {
                return Err(format!(
                    "worker counts 1 and 3 disagree on {}",
                    name.to_string_lossy()
                ));
            }
        }
        notes.push("1-worker and 3-worker runs byte-identical".to_string());
    }

    Ok(notes.join("; "))
}

// --------------------------------------------------------------- the gate

#[test]
fn acceptance_criteria() {
    let full = matches!(
        std::env::var("QPEND_FULL_ACCEPTANCE").as_deref(),
        Ok("1") | Ok("true")
    );
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut failed: Vec<usize> = Vec::new();
    let mut emit = |n: usize, v: Verdict| {
        let line = match &v {
            Verdict::Pass(d, s) => format!("criterion {n}: PASS - {d} [{s:.1}s]"),
            Verdict::Fail(d, s) => format!("criterion {n}: FAIL - {d} [{s:.1}s]"),
            Verdict::Skipped(d) => format!("criterion {n}: SKIPPED - {d}"),
        };
        report(&line);
        if matches!(v, Verdict::Fail(..)) {
            failed.push(n);
        }
    };

    emit(1, timed(Some(60.0), criterion_1));
    emit(2, timed(Some(600.0), criterion_2));
    emit(3, timed(Some(60.0), criterion_3));

    if full {
        // Build the shared ensembles first, outside any one criterion's
        // verdict: criteria 5 and 6 judge the same artifacts and must not be
        // blanked out by a threshold miss in criterion 4. The build time is
        // attributed to criterion 4's line (it mandates these runs).
        let build_start = Instant::now();
        let built = catch_unwind(AssertUnwindSafe(|| build_long_runs(tmp.path())))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(p.as_ref()))));
        let build_s = build_start.elapsed().as_secs_f64();
        match built {
            Ok(runs) => {
                let with_build = |v: Verdict| match v {
                    Verdict::Pass(d, s) => Verdict::Pass(d, s + build_s),
                    Verdict::Fail(d, s) => Verdict::Fail(d, s + build_s),
                    skipped => skipped,
                };
                emit(4, with_build(timed(None, || criterion_4(&runs))));
                emit(5, timed(None, || criterion_5(&runs)));
                emit(6, timed(None, || criterion_6(&runs)));
            }
            Err(e) => {
                emit(
                    4,
                    Verdict::Fail(format!("ensemble runs failed to build: {e}"), build_s),
                );
                for n in [5, 6] {
                    emit(
                        n,
                        Verdict::Fail(
                            "criterion 4's ensemble runs are unavailable".to_string(),
                            0.0,
                        ),
                    );
                }
            }
        }
    } else {
        for n in [4, 5, 6] {
            emit(
                n,
                Verdict::Skipped(
                    "published-size ensemble runs (nightly scale); \
                     set QPEND_FULL_ACCEPTANCE=1 to include"
                        .to_string(),
                ),
            );
        }
    }

    emit(7, timed(Some(300.0), criterion_7));

    assert!(
        failed.is_empty(),
        "acceptance criteria failed: {failed:?} (see the criterion lines above)"
    );
}
