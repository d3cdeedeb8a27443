//! Scenario execution: ensemble integration, per-strobe bookkeeping,
//! checkpointing, and output finalization.
//!
//! Runs advance strobe-major: every trajectory integrates one modulation
//! period inside a work-stealing parallel region, then a sequential
//! bookkeeping pass appends record rows in trajectory order, writes any
//! strobe-tied artifacts (state dumps, Wigner tables, angle histograms),
//! and checkpoints. Trajectories are value-isolated — each owns its state,
//! its noise substream, and its propagator — and every cross-trajectory
//! reduction runs over trajectory-ordered slices, so output bytes depend
//! only on `(seed, config)`, never on the worker count or scheduling.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use qpend_core::classical::{
    sample_q_single, sde_step, stroboscopic_portrait, ClassicalState, QInitParams,
};
use qpend_core::grid::Grid;
use qpend_core::noise::{NoiseStream, TrajectoryStreams};
use qpend_core::propagator::SplitOperator;
use qpend_core::stats::{angle_histogram, average_angle, ensemble_moments, StrobeSnapshotSet};
use qpend_core::wavefunction::{gaussian_state, WaveFunction};
use qpend_core::wigner::wigner_transform;

use crate::checkpoint::{
    read_checkpoint, remove_checkpoint, write_checkpoint, Checkpoint, EnsembleSnapshot,
};
use crate::config::{load_snapshot_bytes, RunConfig};
use crate::error::{config_err, fail, io_fail, CliError, Result};
use crate::output::{
    atomic_write, fmt_f64, read_manifest, sha256_hex, Csv, FileEntry, OutputSet, RunSummary,
    CONFIG_SNAPSHOT_NAME,
};
use crate::scenario::{ScenarioKind, StrobeScalars, ThetaRow, TrajectoryRecord};

/// Portrait seed lattice: `PORTRAIT_NX` positions spanning [−π, π) crossed
/// with `PORTRAIT_NP` momenta spanning [−2, 2].
pub const PORTRAIT_NX: usize = 13;
pub const PORTRAIT_NP: usize = 11;

/// Build the thread pool a run executes in. `None` lets the library pick.
fn build_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot build a {workers:?}-worker pool: {e}")))
}

/// Execute a scenario into `out_dir`. The directory is created if missing;
/// a directory already holding a completed run is refused so results are
/// never silently clobbered (outputs are deterministic — rerunning the same
/// config cannot produce anything new).
pub fn run_scenario(cfg: &RunConfig, out_dir: &Path, workers: Option<usize>) -> Result<RunSummary> {
    cfg.validate()?;
    let started = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| io_fail(out_dir, e))?;
    if read_manifest(out_dir)?.is_some() {
        return Err(CliError::Config(format!(
            "{} already contains a completed run (manifest.json); \
             use a fresh directory, or `resume` to reprint its summary",
            out_dir.display()
        )));
    }
    let snapshot = cfg.snapshot();
    let snap_path = out_dir.join(CONFIG_SNAPSHOT_NAME);
    atomic_write(&snap_path, snapshot.as_bytes()).map_err(|e| io_fail(&snap_path, e))?;

    if cfg.scenario == ScenarioKind::Portrait {
        let files = run_portrait(cfg, out_dir)?;
        return Ok(summary(cfg, out_dir, "complete", cfg.params.n_periods, started, files));
    }

    let pool = build_pool(workers)?;
    let mut engine = Engine::fresh(cfg.clone(), out_dir, &snapshot)?;
    pool.install(|| engine.initial_strobe())?;
    let halted = pool.install(|| engine.run_to_end())?;
    match halted {
        Some(strobe) => Ok(summary(cfg, out_dir, "halted", strobe, started, Vec::new())),
        None => {
            let files = engine.finalize()?;
            Ok(summary(cfg, out_dir, "complete", cfg.params.n_periods, started, files))
        }
    }
}

/// Continue a run directory to completion. A completed run is a no-op that
/// reprints its summary; an unstarted directory is a usage error.
pub fn resume_run(run_dir: &Path, workers: Option<usize>) -> Result<RunSummary> {
    let started = Instant::now();
    let snapshot_bytes = load_snapshot_bytes(run_dir)?;
    let cfg = crate::config::parse_config(
        std::str::from_utf8(&snapshot_bytes)
            .map_err(|_| fail("config.snapshot is not valid UTF-8"))?,
    )?;
    if let Some(manifest) = read_manifest(run_dir)? {
        return Ok(summary(
            &cfg,
            run_dir,
            "complete",
            cfg.params.n_periods,
            started,
            manifest.files,
        ));
    }
    if cfg.scenario == ScenarioKind::Portrait {
        return Err(CliError::Config(
            "portrait runs are not resumable; rerun simulate".into(),
        ));
    }
    let mut sha = [0u8; 32];
    sha.copy_from_slice(&sha2_bytes(&snapshot_bytes));
    let ck = read_checkpoint(run_dir, &sha)?.ok_or_else(|| {
        CliError::Config(format!(
            "{} has no checkpoint to resume (and no manifest)",
            run_dir.display()
        ))
    })?;
    let pool = build_pool(workers)?;
    let mut engine = Engine::from_checkpoint(cfg.clone(), run_dir, ck)?;
    let halted = pool.install(|| engine.run_to_end())?;
    debug_assert!(halted.is_none(), "resume ignores the halt knob");
    let files = engine.finalize()?;
    Ok(summary(&cfg, run_dir, "complete", cfg.params.n_periods, started, files))
}

fn sha2_bytes(bytes: &[u8]) -> [u8; 32] {
    use sha2::Digest;
    sha2::Sha256::digest(bytes).into()
}

fn summary(
    cfg: &RunConfig,
    dir: &Path,
    status: &str,
    strobe: u32,
    started: Instant,
    files: Vec<FileEntry>,
) -> RunSummary {
    RunSummary {
        run_id: cfg.run_id(),
        scenario: cfg.scenario.name().to_string(),
        status: status.to_string(),
        strobe,
        wall_time_s: started.elapsed().as_secs_f64(),
        out_dir: dir.display().to_string(),
        files,
    }
}

/// The two trajectory families a checkpointable scenario advances.
enum Family {
    Quantum {
        props: Vec<SplitOperator>,
        states: Vec<WaveFunction>,
    },
    Classical {
        states: Vec<ClassicalState>,
    },
}

struct Engine {
    cfg: RunConfig,
    dir: PathBuf,
    config_sha: [u8; 32],
    family: Family,
    streams: Vec<NoiseStream>,
    records: Vec<TrajectoryRecord>,
    /// Wrapped positions per trajectory per strobe (classical only).
    class_x: Vec<Vec<f64>>,
    /// Angle summary per strobe (angles only).
    theta: Vec<ThetaRow>,
    /// Strobe the states currently sit at.
    strobe: u32,
}

/// Per-strobe measurement of one quantum trajectory.
fn measure_quantum(psi: &WaveFunction) -> StrobeScalars {
    let (mean_p, mean_p2) = psi.momentum_moments();
    let (mean_j, mean_j2) = psi.j_moments();
    StrobeScalars {
        mean_p,
        mean_p2,
        mean_j,
        mean_j2,
        norm_drift: psi.norm() - 1.0,
    }
}

/// Per-strobe measurement of one classical sample. `J = -cos x` mirrors the
/// quantum record so the two ensembles share one table shape.
fn measure_classical(s: &ClassicalState) -> StrobeScalars {
    let j = -s.x.cos();
    StrobeScalars {
        mean_p: s.p,
        mean_p2: s.p * s.p,
        mean_j: j,
        mean_j2: j * j,
        norm_drift: 0.0,
    }
}

impl Engine {
    fn fresh(cfg: RunConfig, dir: &Path, snapshot: &str) -> Result<Engine> {
        let params = cfg.params;
        let n = params.n_traj as usize;
        let streams_src = TrajectoryStreams::new(params.seed);
        let mut streams: Vec<NoiseStream> =
            (0..params.n_traj).map(|i| streams_src.stream(i)).collect();
        let family = if cfg.scenario.is_quantum() {
            let grid = Grid::new(params.grid_size, params.kbar).map_err(core_cfg)?;
            let psi0 = gaussian_state(&grid, params.x0, params.p0, params.sigma_x)
                .map_err(core_cfg)?;
            let mut props = Vec::with_capacity(n);
            for _ in 0..n {
                props.push(SplitOperator::new(grid.clone(), params).map_err(core_cfg)?);
            }
            Family::Quantum {
                props,
                states: vec![psi0; n],
            }
        } else {
            let q = QInitParams::from_quantum(&params).map_err(core_cfg)?;
            let states = streams
                .iter_mut()
                .map(|stream| sample_q_single(&q, stream))
                .collect();
            Family::Classical { states }
        };
        Ok(Engine {
            config_sha: sha2_bytes(snapshot.as_bytes()),
            cfg,
            dir: dir.to_path_buf(),
            family,
            streams,
            records: (0..n as u64).map(TrajectoryRecord::new).collect(),
            class_x: vec![Vec::new(); n],
            theta: Vec::new(),
            strobe: 0,
        })
    }

    fn from_checkpoint(cfg: RunConfig, dir: &Path, ck: Checkpoint) -> Result<Engine> {
        if ck.kind != cfg.scenario {
            return Err(fail(format!(
                "checkpoint is a {} run, config.snapshot says {}",
                ck.kind.name(),
                cfg.scenario.name()
            )));
        }
        let params = cfg.params;
        let n = params.n_traj as usize;
        if ck.states.len() != n || ck.word_pos.len() != n || ck.records.len() != n {
            return Err(fail(format!(
                "checkpoint holds {} trajectories, config.snapshot says {n}",
                ck.states.len()
            )));
        }
        if ck.strobe >= params.n_periods {
            return Err(fail(format!(
                "checkpoint strobe {} is not before n_periods {}",
                ck.strobe, params.n_periods
            )));
        }
        let streams_src = TrajectoryStreams::new(params.seed);
        let mut streams = Vec::with_capacity(n);
        for (i, &pos) in ck.word_pos.iter().enumerate() {
            let mut s = streams_src.stream(i as u64);
            s.set_word_pos(pos);
            streams.push(s);
        }
        let family = match ck.states {
            EnsembleSnapshot::Quantum(dumped) => {
                let grid = Grid::new(params.grid_size, params.kbar).map_err(core_cfg)?;
                let mut states = Vec::with_capacity(n);
                for psi in dumped {
                    if psi.n() != grid.n || psi.grid().kbar != grid.kbar {
                        return Err(fail(
                            "checkpoint state grid disagrees with config.snapshot",
                        ));
                    }
                    // Rehome every state onto one shared grid instance.
                    let time = psi.time;
                    states.push(WaveFunction::from_amps(grid.clone(), psi.amps, time));
                }
                let mut props = Vec::with_capacity(n);
                for _ in 0..n {
                    props.push(SplitOperator::new(grid.clone(), params).map_err(core_cfg)?);
                }
                Family::Quantum { props, states }
            }
            EnsembleSnapshot::Classical(states) => Family::Classical { states },
        };
        Ok(Engine {
            config_sha: ck.config_sha,
            cfg,
            dir: dir.to_path_buf(),
            family,
            streams,
            records: ck.records,
            class_x: ck.class_x,
            theta: ck.theta,
            strobe: ck.strobe,
        })
    }

    /// Record strobe 0 (the prepared ensemble), write its artifacts, and lay
    /// down the first checkpoint.
    fn initial_strobe(&mut self) -> Result<()> {
        let scalars: Vec<StrobeScalars> = match &self.family {
            Family::Quantum { states, .. } => states.iter().map(measure_quantum).collect(),
            Family::Classical { states } => states.iter().map(measure_classical).collect(),
        };
        self.append_strobe(scalars)?;
        self.write_strobe_artifacts()?;
        self.write_checkpoint()
    }

    /// Advance to `n_periods`, or to the halt strobe if one is set.
    fn run_to_end(&mut self) -> Result<Option<u32>> {
        while self.strobe < self.cfg.params.n_periods {
            let scalars = self.advance_period()?;
            self.strobe += 1;
            self.append_strobe(scalars)?;
            self.write_strobe_artifacts()?;
            self.write_checkpoint()?;
            if self.cfg.halt_at_strobe == Some(self.strobe) {
                return Ok(Some(self.strobe));
            }
        }
        Ok(None)
    }

    /// Integrate every trajectory through one modulation period in parallel.
    /// Returns each trajectory's strobe scalars; the first non-finite
    /// trajectory (lowest id, for scheduler-independent reporting) aborts
    /// the run with its id and the 1-based global step that broke.
    fn advance_period(&mut self) -> Result<Vec<StrobeScalars>> {
        let params = self.cfg.params;
        let dt = params.dt();
        let spp = params.steps_per_period;
        let base_step = self.strobe as u64 * spp as u64;
        let outcomes: Vec<std::result::Result<StrobeScalars, u32>> = match &mut self.family {
            Family::Quantum { props, states, .. } => props
                .par_iter_mut()
                .zip(states.par_iter_mut())
                .zip(self.streams.par_iter_mut())
                .map(|((prop, psi), stream)| {
                    for k in 0..spp {
                        let w = stream.wiener(dt);
                        let norm = prop.sse_step(psi, &w);
                        if !(norm.is_finite() && norm > 0.0) {
                            return Err(k);
                        }
                    }
                    Ok(measure_quantum(psi))
                })
                .collect(),
            Family::Classical { states } => states
                .par_iter_mut()
                .zip(self.streams.par_iter_mut())
                .map(|(s, stream)| {
                    for k in 0..spp {
                        let w = stream.wiener(dt);
                        sde_step(s, &w, &params);
                        if !(s.x.is_finite() && s.p.is_finite()) {
                            return Err(k);
                        }
                    }
                    Ok(measure_classical(s))
                })
                .collect(),
        };
        let mut scalars = Vec::with_capacity(outcomes.len());
        for (id, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(s) => scalars.push(s),
                Err(k) => {
                    return Err(fail(format!(
                        "non-finite state in trajectory {id} at step {} (strobe {})",
                        base_step + k as u64 + 1,
                        self.strobe + 1
                    )))
                }
            }
        }
        Ok(scalars)
    }

    /// Sequential bookkeeping: append this strobe's rows in trajectory
    /// order, plus the scenario-specific reductions.
    fn append_strobe(&mut self, scalars: Vec<StrobeScalars>) -> Result<()> {
        for (rec, s) in self.records.iter_mut().zip(scalars) {
            rec.push(self.strobe, s)?;
        }
        if let Family::Classical { states } = &self.family {
            for (xs, s) in self.class_x.iter_mut().zip(states) {
                xs.push(s.wrapped_x());
            }
        }
        if self.cfg.scenario == ScenarioKind::Angles {
            let avg = average_angle(&self.snapshot_set()?, None)
                .map_err(|e| fail(format!("angle reduction at strobe {}: {e}", self.strobe)))?;
            self.theta.push(ThetaRow {
                theta_ave: avg.mean,
                stderr: avg.stderr,
                n_pairs: avg.n_pairs as u64,
            });
        }
        Ok(())
    }

    fn snapshot_set(&self) -> Result<StrobeSnapshotSet> {
        let Family::Quantum { states, .. } = &self.family else {
            return Err(fail("angle reductions need quantum states"));
        };
        let ids: Vec<u64> = self.records.iter().map(|r| r.trajectory_id).collect();
        StrobeSnapshotSet::new(self.strobe as usize, ids, states.clone())
            .map_err(|e| fail(format!("snapshot at strobe {}: {e}", self.strobe)))
    }

    /// Artifacts tied to a dump strobe: per-trajectory state dumps for every
    /// quantum kind, Wigner tables for `wigner`, angle histograms for
    /// `angles`. Files are written immediately (atomically) so a later halt
    /// cannot lose them; `finalize` records them into the manifest.
    fn write_strobe_artifacts(&mut self) -> Result<()> {
        if !self.cfg.dump_strobes.contains(&self.strobe) {
            return Ok(());
        }
        let strobe = self.strobe;
        if let Family::Quantum { states, .. } = &self.family {
            for (i, psi) in states.iter().enumerate() {
                let name = state_dump_name(strobe, i as u64);
                let mut bytes = Vec::with_capacity(psi.n() * 16 + 48);
                psi.write_dump(&mut bytes)
                    .map_err(|e| fail(format!("{name}: {e}")))?;
                let path = self.dir.join(&name);
                atomic_write(&path, &bytes).map_err(|e| io_fail(&path, e))?;
            }
            if self.cfg.scenario == ScenarioKind::Wigner {
                for (i, psi) in states.iter().enumerate() {
                    let w = wigner_transform(psi)
                        .map_err(|e| fail(format!("wigner at strobe {strobe}: {e}")))?;
                    let name = wigner_name(strobe, i as u64);
                    let grid = psi.grid();
                    let order: Vec<usize> =
                        (grid.n / 2..grid.n).chain(0..grid.n / 2).collect();
                    let mut csv = Csv::new(&["x", "p", "P"]);
                    for (j, &x) in grid.x.iter().enumerate() {
                        for &l in &order {
                            csv.row(&[
                                fmt_f64(x),
                                fmt_f64(grid.p[l]),
                                fmt_f64(w.value(j, l)),
                            ]);
                        }
                    }
                    let path = self.dir.join(&name);
                    atomic_write(&path, csv.into_string().as_bytes())
                        .map_err(|e| io_fail(&path, e))?;
                }
            }
        }
        if self.cfg.scenario == ScenarioKind::Angles {
            let hist = angle_histogram(&self.snapshot_set()?, None)
                .map_err(|e| fail(format!("angle histogram at strobe {strobe}: {e}")))?;
            let mut csv = Csv::new(&["bin_lo", "bin_hi", "count"]);
            for (b, &count) in hist.counts.iter().enumerate() {
                let (lo, hi) = hist.bin_edges(b);
                csv.row(&[fmt_f64(lo), fmt_f64(hi), count.to_string()]);
            }
            let name = hist_name(strobe);
            let path = self.dir.join(&name);
            atomic_write(&path, csv.into_string().as_bytes()).map_err(|e| io_fail(&path, e))?;
        }
        Ok(())
    }

    fn write_checkpoint(&self) -> Result<()> {
        let states = match &self.family {
            Family::Quantum { states, .. } => EnsembleSnapshot::Quantum(states.clone()),
            Family::Classical { states } => EnsembleSnapshot::Classical(states.clone()),
        };
        let ck = Checkpoint {
            config_sha: self.config_sha,
            kind: self.cfg.scenario,
            strobe: self.strobe,
            states,
            word_pos: self.streams.iter().map(|s| s.word_pos()).collect(),
            records: self.records.clone(),
            class_x: if self.cfg.scenario == ScenarioKind::ClassicalEnsemble {
                self.class_x.clone()
            } else {
                Vec::new()
            },
            theta: self.theta.clone(),
        };
        write_checkpoint(&self.dir, &ck)
    }

    /// Write the aggregate tables and the manifest, then drop the
    /// checkpoint. Returns the manifest's file list.
    fn finalize(&mut self) -> Result<Vec<FileEntry>> {
        let cfg = &self.cfg;
        let n_periods = cfg.params.n_periods;
        for rec in &self.records {
            rec.check_complete(n_periods)?;
        }
        let mut out = OutputSet::new(&self.dir);
        out.record_existing(CONFIG_SNAPSHOT_NAME)?;

        let mut records_csv = Csv::new(&[
            "trajectory",
            "strobe",
            "mean_p",
            "mean_p2",
            "mean_j",
            "mean_j2",
            "norm_drift",
        ]);
        for rec in &self.records {
            for (s, row) in rec.strobes.iter().enumerate() {
                records_csv.row(&[
                    rec.trajectory_id.to_string(),
                    s.to_string(),
                    fmt_f64(row.mean_p),
                    fmt_f64(row.mean_p2),
                    fmt_f64(row.mean_j),
                    fmt_f64(row.mean_j2),
                    fmt_f64(row.norm_drift),
                ]);
            }
        }
        out.write("records.csv", records_csv.into_string().as_bytes())?;

        let mean_p: Vec<Vec<f64>> = self
            .records
            .iter()
            .map(|r| r.strobes.iter().map(|s| s.mean_p).collect())
            .collect();
        let mean_p2: Vec<Vec<f64>> = self
            .records
            .iter()
            .map(|r| r.strobes.iter().map(|s| s.mean_p2).collect())
            .collect();
        let moments = ensemble_moments(&mean_p, &mean_p2)
            .map_err(|e| fail(format!("ensemble moments: {e}")))?;
        let mut moments_csv = Csv::new(&[
            "strobe",
            "mean_p",
            "var_of_means",
            "mean_cond_var",
            "pooled_var",
        ]);
        for (s, m) in moments.iter().enumerate() {
            moments_csv.row(&[
                s.to_string(),
                fmt_f64(m.mean_p),
                fmt_f64(m.var_of_means),
                fmt_f64(m.mean_cond_var),
                fmt_f64(m.pooled_var),
            ]);
        }
        out.write("moments.csv", moments_csv.into_string().as_bytes())?;

        if cfg.scenario == ScenarioKind::ClassicalEnsemble {
            let n = self.records.len() as f64;
            let mut csv = Csv::new(&["t", "mean_p", "var_p", "mean_x", "var_x"]);
            for (s, m) in moments.iter().enumerate() {
                let xs: Vec<f64> = self.class_x.iter().map(|traj| traj[s]).collect();
                let mean_x = xs.iter().sum::<f64>() / n;
                let var_x = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum::<f64>() / n;
                csv.row(&[
                    fmt_f64(s as f64 * TAU),
                    fmt_f64(m.mean_p),
                    fmt_f64(m.pooled_var),
                    fmt_f64(mean_x),
                    fmt_f64(var_x),
                ]);
            }
            out.write("classical_moments.csv", csv.into_string().as_bytes())?;
        }

        if cfg.scenario == ScenarioKind::Angles {
            let mut csv = Csv::new(&["strobe", "theta_ave", "stderr", "n_pairs"]);
            for (s, row) in self.theta.iter().enumerate() {
                csv.row(&[
                    s.to_string(),
                    fmt_f64(row.theta_ave),
                    fmt_f64(row.stderr),
                    row.n_pairs.to_string(),
                ]);
            }
            out.write("theta_ave.csv", csv.into_string().as_bytes())?;
            for &strobe in &cfg.dump_strobes {
                out.record_existing(&hist_name(strobe))?;
            }
        }

        if cfg.scenario.is_quantum() {
            for &strobe in &cfg.dump_strobes {
                for i in 0..cfg.params.n_traj {
                    out.record_existing(&state_dump_name(strobe, i))?;
                }
                if cfg.scenario == ScenarioKind::Wigner {
                    for i in 0..cfg.params.n_traj {
                        out.record_existing(&wigner_name(strobe, i))?;
                    }
                }
            }
        }

        let (_, files) = out.finish(&cfg.run_id(), cfg.scenario.name())?;
        remove_checkpoint(&self.dir)?;
        Ok(files)
    }
}

/// Per-trajectory state dump file name.
pub fn state_dump_name(strobe: u32, traj: u64) -> String {
    format!("state_s{strobe}_t{traj}.qwf")
}

/// Wigner table file name.
pub fn wigner_name(strobe: u32, traj: u64) -> String {
    format!("wigner_s{strobe}_t{traj}.csv")
}

/// Angle histogram file name.
pub fn hist_name(strobe: u32) -> String {
    format!("angle_hist_s{strobe}.csv")
}

fn core_cfg(e: qpend_core::Error) -> CliError {
    config_err("config", e)
}

/// Deterministic portrait over the fixed seed lattice; returns the manifest
/// file list.
fn run_portrait(cfg: &RunConfig, dir: &Path) -> Result<Vec<FileEntry>> {
    let params = cfg.params;
    let mut seeds = Vec::with_capacity(PORTRAIT_NX * PORTRAIT_NP);
    for jx in 0..PORTRAIT_NX {
        let x = -PI + TAU * jx as f64 / PORTRAIT_NX as f64;
        for lp in 0..PORTRAIT_NP {
            let p = -2.0 + 4.0 * lp as f64 / (PORTRAIT_NP - 1) as f64;
            seeds.push((x, p));
        }
    }
    let orbits = stroboscopic_portrait(&seeds, params.n_periods as usize, &params);
    let mut csv = Csv::new(&["strobe", "seed", "x", "p"]);
    for (seed_idx, orbit) in orbits.iter().enumerate() {
        for (strobe, &(x, p)) in orbit.iter().enumerate() {
            if !(x.is_finite() && p.is_finite()) {
                return Err(fail(format!(
                    "non-finite portrait point for seed {seed_idx} at strobe {strobe}"
                )));
            }
            csv.row(&[
                strobe.to_string(),
                seed_idx.to_string(),
                fmt_f64(x),
                fmt_f64(p),
            ]);
        }
    }
    let mut out = OutputSet::new(dir);
    out.record_existing(CONFIG_SNAPSHOT_NAME)?;
    out.write("portrait.csv", csv.into_string().as_bytes())?;
    let (_, files) = out.finish(&cfg.run_id(), cfg.scenario.name())?;
    Ok(files)
}

/// Convenience for tests and the binary: hash the on-disk snapshot.
pub fn snapshot_sha(dir: &Path) -> Result<String> {
    Ok(sha256_hex(&load_snapshot_bytes(dir)?))
}
