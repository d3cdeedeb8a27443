//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a full-line comment, blank lines are
//! ignored. Unknown keys, duplicate keys, and malformed values are hard
//! errors naming the offender, so a typo can never silently fall back to a
//! default. Every physics key has a documented default (the library's
//! baseline operating point); only `scenario` is mandatory.
//!
//! A parsed config serializes back to a canonical snapshot
//! ([`RunConfig::snapshot`]) that is stored inside the run directory. The
//! snapshot is the identity of the run: its SHA-256 prefix is the run id,
//! resume re-reads it, and the figure emitter matches runs by its fields.
//! The `halt_at_strobe` control knob is deliberately excluded so a halted
//! and a straight-through run of the same physics share one identity.

use std::collections::HashSet;
use std::path::Path;

use qpend_core::params::SimParams;

use crate::error::{config_err, CliError, Result};
use crate::scenario::ScenarioKind;

/// Default strobe at which full states are dumped when the config does not
/// name any (clipped to the run's horizon).
pub const DEFAULT_DUMP_STROBE: u32 = 200;

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub params: SimParams,
    /// Strobes at which full per-trajectory states (and scenario-specific
    /// large outputs) are written. Sorted, deduplicated.
    pub dump_strobes: Vec<u32>,
    /// Stop cleanly after checkpointing this strobe instead of finishing.
    /// Control knob only: not part of the run's identity.
    pub halt_at_strobe: Option<u32>,
}

const KEYS: &[&str] = &[
    "scenario",
    "kbar",
    "xi",
    "D",
    "epsilon",
    "x0",
    "p0",
    "sigma_x",
    "grid_size",
    "steps_per_period",
    "n_periods",
    "n_traj",
    "seed",
    "dump_strobes",
    "halt_at_strobe",
];

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| config_err(key, format!("`{v}` is not a number")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|_| config_err(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_u32(key: &str, v: &str) -> Result<u32> {
    v.parse::<u32>()
        .map_err(|_| config_err(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| config_err(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_strobe_list(key: &str, v: &str) -> Result<Vec<u32>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for part in v.split(',') {
        out.push(parse_u32(key, part.trim())?);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parse config text into a resolved [`RunConfig`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut scenario: Option<ScenarioKind> = None;
    let mut params = SimParams::baseline();
    params.seed = 0;
    let mut dump_strobes: Option<Vec<u32>> = None;
    let mut halt_at_strobe: Option<u32> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("config line {lineno}: expected `key = value`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "config line {lineno}: unknown key `{key}`"
            )));
        }
        if !seen.insert(key.to_string()) {
            return Err(CliError::Config(format!(
                "config line {lineno}: duplicate key `{key}`"
            )));
        }
        match key {
            "scenario" => {
                scenario = Some(ScenarioKind::parse(value).ok_or_else(|| {
                    config_err(
                        "scenario",
                        format!(
                            "`{value}` is not one of portrait, quantum_ensemble, \
                             classical_ensemble, angles, wigner"
                        ),
                    )
                })?);
            }
            "kbar" => params.kbar = parse_f64(key, value)?,
            "xi" => params.xi = parse_f64(key, value)?,
            "D" => params.d = parse_f64(key, value)?,
            "epsilon" => params.epsilon = parse_f64(key, value)?,
            "x0" => params.x0 = parse_f64(key, value)?,
            "p0" => params.p0 = parse_f64(key, value)?,
            "sigma_x" => params.sigma_x = parse_f64(key, value)?,
            "grid_size" => params.grid_size = parse_usize(key, value)?,
            "steps_per_period" => params.steps_per_period = parse_u32(key, value)?,
            "n_periods" => params.n_periods = parse_u32(key, value)?,
            "n_traj" => params.n_traj = parse_u64(key, value)?,
            "seed" => params.seed = parse_u64(key, value)?,
            "dump_strobes" => dump_strobes = Some(parse_strobe_list(key, value)?),
            "halt_at_strobe" => halt_at_strobe = Some(parse_u32(key, value)?),
            _ => unreachable!("key list checked above"),
        }
    }

    let scenario = scenario
        .ok_or_else(|| config_err("scenario", "missing (must name the scenario to run)"))?;

    let dump_strobes = match dump_strobes {
        Some(list) => {
            if let Some(&bad) = list.iter().find(|&&s| s > params.n_periods) {
                return Err(config_err(
                    "dump_strobes",
                    format!("strobe {bad} exceeds n_periods = {}", params.n_periods),
                ));
            }
            list
        }
        // Implicit default: dump at strobe 200 when the run reaches it.
        None => [DEFAULT_DUMP_STROBE]
            .into_iter()
            .filter(|&s| s <= params.n_periods)
            .collect(),
    };

    let cfg = RunConfig {
        scenario,
        params,
        dump_strobes,
        halt_at_strobe,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Read and parse a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Raw bytes of a run directory's stored config snapshot. Errors point at
/// the directory, since a missing snapshot means "not a run directory".
pub fn load_snapshot_bytes(run_dir: &Path) -> Result<Vec<u8>> {
    let path = run_dir.join(crate::output::CONFIG_SNAPSHOT_NAME);
    std::fs::read(&path).map_err(|e| {
        CliError::Config(format!(
            "{} is not a run directory ({}: {e})",
            run_dir.display(),
            path.display()
        ))
    })
}

impl RunConfig {
    /// Cross-field validation; parameter-level checks delegate to the
    /// library so CLI and library agree on what is representable.
    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| match e {
            qpend_core::Error::InvalidParam { name, reason } => {
                // The config spells the diffusion key `D`.
                let key = if name == "d" { "D".to_string() } else { name };
                config_err(&key, reason)
            }
            other => CliError::Config(other.to_string()),
        })?;
        if self.params.n_periods == 0 {
            return Err(config_err("n_periods", "must be >= 1"));
        }
        if self.scenario == ScenarioKind::Angles && self.params.n_traj < 2 {
            return Err(config_err(
                "n_traj",
                "angles needs at least two trajectories to form pairs",
            ));
        }
        if let Some(h) = self.halt_at_strobe {
            if self.scenario == ScenarioKind::Portrait {
                return Err(config_err(
                    "halt_at_strobe",
                    "portrait runs are not resumable; remove the key",
                ));
            }
            if h == 0 || h >= self.params.n_periods {
                return Err(config_err(
                    "halt_at_strobe",
                    format!("must lie in 1..n_periods = {}", self.params.n_periods),
                ));
            }
        }
        Ok(())
    }

    /// Canonical serialization: fixed key order, shortest round-trip float
    /// formatting, `\n` endings. Parsing the snapshot reproduces the config
    /// exactly (minus the excluded `halt_at_strobe` control knob).
    pub fn snapshot(&self) -> String {
        let p = &self.params;
        let strobes = self
            .dump_strobes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "# resolved run configuration\n\
             scenario = {}\n\
             kbar = {}\n\
             xi = {}\n\
             D = {}\n\
             epsilon = {}\n\
             x0 = {}\n\
             p0 = {}\n\
             sigma_x = {}\n\
             grid_size = {}\n\
             steps_per_period = {}\n\
             n_periods = {}\n\
             n_traj = {}\n\
             seed = {}\n\
             dump_strobes = {strobes}\n",
            self.scenario.name(),
            p.kbar,
            p.xi,
            p.d,
            p.epsilon,
            p.x0,
            p.p0,
            p.sigma_x,
            p.grid_size,
            p.steps_per_period,
            p.n_periods,
            p.n_traj,
            p.seed,
        )
    }

    /// Run identity: first 16 hex digits of the snapshot's SHA-256. Stable
    /// across worker counts, halts, and resumes of the same physics.
    pub fn run_id(&self) -> String {
        crate::output::sha256_hex(self.snapshot().as_bytes())[..16].to_string()
    }

    /// True when the two configs describe the same physical system and
    /// integration cadence (everything except scenario kind, ensemble size,
    /// seed, and output selection). The emitter uses this to pair runs.
    pub fn same_physics(&self, other: &RunConfig) -> bool {
        let a = &self.params;
        let b = &other.params;
        a.kbar == b.kbar
            && a.xi == b.xi
            && a.d == b.d
            && a.epsilon == b.epsilon
            && a.x0 == b.x0
            && a.p0 == b.p0
            && a.sigma_x == b.sigma_x
            && a.steps_per_period == b.steps_per_period
    }
}
