//! Figure-data emission: reshape completed runs into the exact tables the
//! figures fig2-fig6 plot.
//!
//! `emit` never recomputes physics — it reads the tables a run already
//! wrote, pairs runs up (quantum against classical, regular seed against
//! chaotic seed), and writes one `figN.csv` with the series side by side.
//! The directory argument may be a single run or a parent holding several
//! runs; every "cannot emit" error names exactly what is missing.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use qpend_core::classical::{classify_orbit, OrbitClass};
use qpend_core::params::SimParams;

use crate::config::{parse_config, RunConfig, DEFAULT_DUMP_STROBE};
use crate::error::{CliError, Result};
use crate::output::{
    atomic_write, fmt_f64, parse_csv, read_manifest, sha256_hex, Csv, FileEntry,
    CONFIG_SNAPSHOT_NAME,
};
use crate::runner::hist_name;
use crate::scenario::ScenarioKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Figure, String> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            other => Err(format!(
                "unknown figure `{other}` (expected fig2, fig3, fig4, fig5, or fig6)"
            )),
        }
    }
}

/// One discovered, completed run.
#[derive(Debug, Clone)]
pub struct RunInfo {
    pub dir: PathBuf,
    pub cfg: RunConfig,
    /// File names listed by the run's manifest.
    pub files: Vec<String>,
}

impl RunInfo {
    fn load(dir: &Path) -> Result<Option<RunInfo>> {
        let snap = dir.join(CONFIG_SNAPSHOT_NAME);
        if !snap.is_file() {
            return Ok(None);
        }
        let Some(manifest) = read_manifest(dir)? else {
            return Ok(None); // incomplete run: not a usable source
        };
        let text = std::fs::read_to_string(&snap)
            .map_err(|e| CliError::Failure(format!("{}: {e}", snap.display())))?;
        let cfg = parse_config(&text)?;
        Ok(Some(RunInfo {
            dir: dir.to_path_buf(),
            cfg,
            files: manifest.files.into_iter().map(|f| f.path).collect(),
        }))
    }

    fn describe(&self) -> String {
        format!(
            "{} ({}, D={}, x0={}, p0={})",
            self.dir.display(),
            self.cfg.scenario.name(),
            self.cfg.params.d,
            self.cfg.params.x0,
            self.cfg.params.p0
        )
    }

    fn orbit_class(&self) -> OrbitClass {
        let params = SimParams {
            d: 0.0,
            ..self.cfg.params
        };
        classify_orbit(params.x0, params.p0, &params).class
    }
}

/// All completed runs reachable from `dir`: the directory itself when it is
/// a run, otherwise its immediate children (sorted by name).
fn discover_runs(dir: &Path) -> Result<Vec<RunInfo>> {
    if let Some(run) = RunInfo::load(dir)? {
        return Ok(vec![run]);
    }
    if dir.join(CONFIG_SNAPSHOT_NAME).is_file() {
        return Err(CliError::Config(format!(
            "{} holds an unfinished run (config.snapshot without manifest.json); \
             resume it before emitting",
            dir.display()
        )));
    }
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    names.sort();
    let mut runs = Vec::new();
    for child in names {
        if let Some(run) = RunInfo::load(&child)? {
            runs.push(run);
        }
    }
    if runs.is_empty() {
        return Err(CliError::Config(format!(
            "no completed runs found at or under {}",
            dir.display()
        )));
    }
    Ok(runs)
}

/// One parsed row of a run's `moments.csv`.
#[derive(Debug, Clone, Copy)]
pub struct MomentsRow {
    pub strobe: u32,
    pub mean_p: f64,
    pub var_of_means: f64,
    pub mean_cond_var: f64,
    pub pooled_var: f64,
}

fn parse_field(path: &Path, row: usize, name: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| {
        CliError::Failure(format!(
            "{}: row {row}: `{name}` value `{v}` is not a number",
            path.display()
        ))
    })
}

/// Read a run's per-strobe ensemble moments table.
pub fn read_moments(run_dir: &Path) -> Result<Vec<MomentsRow>> {
    let path = run_dir.join("moments.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::Config(format!("missing moments table {}: {e}", path.display()))
    })?;
    let (header, rows) = parse_csv(&text, &path)?;
    let expect = ["strobe", "mean_p", "var_of_means", "mean_cond_var", "pooled_var"];
    if header != expect {
        return Err(CliError::Failure(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        out.push(MomentsRow {
            strobe: row[0].parse().map_err(|_| {
                CliError::Failure(format!("{}: row {}: bad strobe", path.display(), i + 2))
            })?,
            mean_p: parse_field(&path, i + 2, "mean_p", &row[1])?,
            var_of_means: parse_field(&path, i + 2, "var_of_means", &row[2])?,
            mean_cond_var: parse_field(&path, i + 2, "mean_cond_var", &row[3])?,
            pooled_var: parse_field(&path, i + 2, "pooled_var", &row[4])?,
        });
    }
    Ok(out)
}

/// One parsed row of an angles run's `theta_ave.csv`.
#[derive(Debug, Clone, Copy)]
pub struct ThetaAveRow {
    pub strobe: u32,
    pub theta_ave: f64,
    pub stderr: f64,
    pub n_pairs: u64,
}

/// Read an angles run's per-strobe average-angle series.
pub fn read_theta_ave(run_dir: &Path) -> Result<Vec<ThetaAveRow>> {
    let path = run_dir.join("theta_ave.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::Config(format!("missing angle table {}: {e}", path.display()))
    })?;
    let (header, rows) = parse_csv(&text, &path)?;
    if header != ["strobe", "theta_ave", "stderr", "n_pairs"] {
        return Err(CliError::Failure(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        out.push(ThetaAveRow {
            strobe: row[0].parse().map_err(|_| {
                CliError::Failure(format!("{}: row {}: bad strobe", path.display(), i + 2))
            })?,
            theta_ave: parse_field(&path, i + 2, "theta_ave", &row[1])?,
            stderr: parse_field(&path, i + 2, "stderr", &row[2])?,
            n_pairs: row[3].parse().map_err(|_| {
                CliError::Failure(format!("{}: row {}: bad n_pairs", path.display(), i + 2))
            })?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceRun {
    pub dir: String,
    pub run_id: String,
    pub scenario: String,
}

impl SourceRun {
    fn of(run: &RunInfo) -> SourceRun {
        SourceRun {
            dir: run.dir.display().to_string(),
            run_id: run.cfg.run_id(),
            scenario: run.cfg.scenario.name().to_string(),
        }
    }
}

/// Summary of one emit invocation, printed as a JSON line.
#[derive(Debug, Clone, Serialize)]
pub struct EmitSummary {
    pub figure: String,
    pub sources: Vec<SourceRun>,
    pub wall_time_s: f64,
    pub output: FileEntry,
    pub out_dir: String,
}

/// True when the two runs describe the same system apart from the seed
/// point `(x0, p0)` — the pairing rule for regular-vs-chaotic overlays.
fn same_physics_except_seed_point(a: &RunConfig, b: &RunConfig) -> bool {
    let (pa, pb) = (&a.params, &b.params);
    pa.kbar == pb.kbar
        && pa.xi == pb.xi
        && pa.d == pb.d
        && pa.epsilon == pb.epsilon
        && pa.sigma_x == pb.sigma_x
        && pa.steps_per_period == pb.steps_per_period
}

/// Emit the named figure's data table into `dir` (as `figN.csv`).
pub fn emit_figure(dir: &Path, figure: Figure) -> Result<EmitSummary> {
    let started = Instant::now();
    let runs = discover_runs(dir)?;
    let (sources, csv) = match figure {
        Figure::Fig2 | Figure::Fig3 => overlay_table(dir, &runs, figure)?,
        Figure::Fig4 => theta_pair_table(dir, &runs)?,
        Figure::Fig5 => histogram_table(dir, &runs, OrbitClass::Regular)?,
        Figure::Fig6 => histogram_table(dir, &runs, OrbitClass::Chaotic)?,
    };
    let name = format!("{}.csv", figure.name());
    let bytes = csv.into_bytes();
    let path = dir.join(&name);
    atomic_write(&path, &bytes)
        .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    Ok(EmitSummary {
        figure: figure.name().to_string(),
        sources,
        wall_time_s: started.elapsed().as_secs_f64(),
        output: FileEntry {
            path: name,
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        },
        out_dir: dir.display().to_string(),
    })
}

/// figs 2–3: quantum and classical ensemble moments side by side.
fn overlay_table(
    dir: &Path,
    runs: &[RunInfo],
    figure: Figure,
) -> Result<(Vec<SourceRun>, String)> {
    let quantum: Vec<&RunInfo> = runs.iter().filter(|r| r.cfg.scenario.is_quantum()).collect();
    let classical: Vec<&RunInfo> = runs
        .iter()
        .filter(|r| r.cfg.scenario == ScenarioKind::ClassicalEnsemble)
        .collect();
    let fig = figure.name();
    let mut pairs = Vec::new();
    for q in &quantum {
        for c in &classical {
            if q.cfg.same_physics(&c.cfg) && q.cfg.params.n_periods == c.cfg.params.n_periods {
                pairs.push((*q, *c));
            }
        }
    }
    let (q, c) = match pairs.len() {
        0 => {
            let mut msg = format!(
                "{fig} overlays a quantum ensemble and a classical ensemble with matching \
                 physics (kbar, xi, D, epsilon, x0, p0, sigma_x, steps_per_period, n_periods); "
            );
            if quantum.is_empty() {
                msg.push_str("no completed quantum run found");
            } else if classical.is_empty() {
                msg.push_str("no completed classical_ensemble run found");
            } else {
                msg.push_str("no quantum/classical pair matches");
            }
            msg.push_str(&format!(
                " at {} (searched {} completed runs)",
                dir.display(),
                runs.len()
            ));
            return Err(CliError::Config(msg));
        }
        1 => pairs[0],
        n => {
            let listing: Vec<String> = pairs
                .iter()
                .map(|(q, c)| format!("[{} + {}]", q.describe(), c.describe()))
                .collect();
            return Err(CliError::Config(format!(
                "{fig} is ambiguous: {n} matching quantum/classical pairs: {}",
                listing.join(", ")
            )));
        }
    };
    let qm = read_moments(&q.dir)?;
    let cm = read_moments(&c.dir)?;
    if qm.len() != cm.len() {
        return Err(CliError::Failure(format!(
            "strobe counts differ: {} has {}, {} has {}",
            q.dir.display(),
            qm.len(),
            c.dir.display(),
            cm.len()
        )));
    }
    let qn = q.cfg.params.n_traj as f64;
    let cn = c.cfg.params.n_traj as f64;
    let csv = match figure {
        Figure::Fig2 => {
            // Standard errors of the ensemble means, population convention.
            let mut csv = Csv::new(&[
                "strobe",
                "t",
                "quantum_mean_p",
                "quantum_se",
                "classical_mean_p",
                "classical_se",
            ]);
            for (qr, cr) in qm.iter().zip(&cm) {
                csv.row(&[
                    qr.strobe.to_string(),
                    fmt_f64(qr.strobe as f64 * std::f64::consts::TAU),
                    fmt_f64(qr.mean_p),
                    fmt_f64((qr.var_of_means / qn).sqrt()),
                    fmt_f64(cr.mean_p),
                    fmt_f64((cr.var_of_means / cn).sqrt()),
                ]);
            }
            csv
        }
        _ => {
            let mut csv = Csv::new(&[
                "strobe",
                "t",
                "quantum_var_of_means",
                "quantum_mean_cond_var",
                "quantum_pooled_var",
                "classical_var_p",
            ]);
            for (qr, cr) in qm.iter().zip(&cm) {
                csv.row(&[
                    qr.strobe.to_string(),
                    fmt_f64(qr.strobe as f64 * std::f64::consts::TAU),
                    fmt_f64(qr.var_of_means),
                    fmt_f64(qr.mean_cond_var),
                    fmt_f64(qr.pooled_var),
                    fmt_f64(cr.pooled_var),
                ]);
            }
            csv
        }
    };
    Ok((
        vec![SourceRun::of(q), SourceRun::of(c)],
        csv.into_string(),
    ))
}

/// fig 4: average-angle series of the regular and chaotic seeds.
fn theta_pair_table(dir: &Path, runs: &[RunInfo]) -> Result<(Vec<SourceRun>, String)> {
    let angles: Vec<&RunInfo> = runs
        .iter()
        .filter(|r| r.cfg.scenario == ScenarioKind::Angles)
        .collect();
    let regular: Vec<&RunInfo> = angles
        .iter()
        .copied()
        .filter(|r| r.orbit_class() == OrbitClass::Regular)
        .collect();
    let chaotic: Vec<&RunInfo> = angles
        .iter()
        .copied()
        .filter(|r| r.orbit_class() == OrbitClass::Chaotic)
        .collect();
    let pick = |label: &str, found: &[&RunInfo]| -> Result<RunInfo> {
        match found.len() {
            1 => Ok(found[0].clone()),
            0 => Err(CliError::Config(format!(
                "fig4 needs one completed angles run whose seed point is {label}; \
                 none found at {} ({} angles runs total)",
                dir.display(),
                angles.len()
            ))),
            n => Err(CliError::Config(format!(
                "fig4 found {n} {label} angles runs; keep exactly one: {}",
                found.iter().map(|r| r.describe()).collect::<Vec<_>>().join(", ")
            ))),
        }
    };
    let reg = pick("regular", &regular)?;
    let cha = pick("chaotic", &chaotic)?;
    if !same_physics_except_seed_point(&reg.cfg, &cha.cfg) {
        return Err(CliError::Config(format!(
            "fig4 runs disagree on physics: {} vs {}",
            reg.describe(),
            cha.describe()
        )));
    }
    let tr = read_theta_ave(&reg.dir)?;
    let tc = read_theta_ave(&cha.dir)?;
    if tr.len() != tc.len() {
        return Err(CliError::Failure(format!(
            "strobe counts differ: {} has {}, {} has {}",
            reg.dir.display(),
            tr.len(),
            cha.dir.display(),
            tc.len()
        )));
    }
    let mut csv = Csv::new(&[
        "strobe",
        "theta_ave_regular",
        "stderr_regular",
        "theta_ave_chaotic",
        "stderr_chaotic",
    ]);
    for (r, c) in tr.iter().zip(&tc) {
        csv.row(&[
            r.strobe.to_string(),
            fmt_f64(r.theta_ave),
            fmt_f64(r.stderr),
            fmt_f64(c.theta_ave),
            fmt_f64(c.stderr),
        ]);
    }
    Ok((
        vec![SourceRun::of(&reg), SourceRun::of(&cha)],
        csv.into_string(),
    ))
}

/// figs 5–6: the angle histogram of one run of the required orbit class,
/// preferring the canonical dump strobe when several were dumped.
fn histogram_table(
    dir: &Path,
    runs: &[RunInfo],
    class: OrbitClass,
) -> Result<(Vec<SourceRun>, String)> {
    let label = match class {
        OrbitClass::Regular => "regular",
        OrbitClass::Chaotic => "chaotic",
    };
    let fig = match class {
        OrbitClass::Regular => "fig5",
        OrbitClass::Chaotic => "fig6",
    };
    let matching: Vec<&RunInfo> = runs
        .iter()
        .filter(|r| r.cfg.scenario == ScenarioKind::Angles && r.orbit_class() == class)
        .collect();
    let run = match matching.len() {
        1 => matching[0],
        0 => {
            return Err(CliError::Config(format!(
                "{fig} needs a completed angles run whose seed point is {label}; \
                 none found at {}",
                dir.display()
            )))
        }
        n => {
            return Err(CliError::Config(format!(
                "{fig} found {n} {label} angles runs; keep exactly one: {}",
                matching
                    .iter()
                    .map(|r| r.describe())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    };
    let mut strobes: Vec<u32> = run
        .files
        .iter()
        .filter_map(|f| {
            f.strip_prefix("angle_hist_s")
                .and_then(|rest| rest.strip_suffix(".csv"))
                .and_then(|s| s.parse().ok())
        })
        .collect();
    strobes.sort_unstable();
    let strobe = if strobes.contains(&DEFAULT_DUMP_STROBE) {
        DEFAULT_DUMP_STROBE
    } else if strobes.len() == 1 {
        strobes[0]
    } else {
        return Err(CliError::Config(format!(
            "{fig}: {} dumped angle histograms at strobes {strobes:?}; \
             none is the canonical strobe {DEFAULT_DUMP_STROBE}, so the choice is ambiguous",
            run.dir.display()
        )));
    };
    let path = run.dir.join(hist_name(strobe));
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("missing histogram {}: {e}", path.display())))?;
    let (header, _) = parse_csv(&text, &path)?;
    if header != ["bin_lo", "bin_hi", "count"] {
        return Err(CliError::Failure(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    Ok((vec![SourceRun::of(run)], text))
}
