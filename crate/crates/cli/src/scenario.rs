//! Scenario vocabulary shared by the config parser, the runner, and the
//! figure emitter.

use crate::error::{fail, CliError, Result};

/// What a run computes. Every kind shares the same parameter set; the kind
/// decides which ensembles advance and which reductions are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Deterministic stroboscopic portrait over a fixed seed lattice.
    Portrait,
    /// Conditioned quantum trajectories; per-strobe records and moments.
    QuantumEnsemble,
    /// Classical conditional diffusion; per-strobe records and moments.
    ClassicalEnsemble,
    /// Quantum ensemble plus Hilbert-angle reductions per strobe.
    Angles,
    /// Quantum ensemble plus Wigner-function dumps at the named strobes.
    Wigner,
}

impl ScenarioKind {
    pub fn parse(s: &str) -> Option<ScenarioKind> {
        match s {
            "portrait" => Some(ScenarioKind::Portrait),
            "quantum_ensemble" => Some(ScenarioKind::QuantumEnsemble),
            "classical_ensemble" => Some(ScenarioKind::ClassicalEnsemble),
            "angles" => Some(ScenarioKind::Angles),
            "wigner" => Some(ScenarioKind::Wigner),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Portrait => "portrait",
            ScenarioKind::QuantumEnsemble => "quantum_ensemble",
            ScenarioKind::ClassicalEnsemble => "classical_ensemble",
            ScenarioKind::Angles => "angles",
            ScenarioKind::Wigner => "wigner",
        }
    }

    /// Kinds that advance conditioned quantum states.
    pub fn is_quantum(&self) -> bool {
        matches!(
            self,
            ScenarioKind::QuantumEnsemble | ScenarioKind::Angles | ScenarioKind::Wigner
        )
    }
}

/// The five per-strobe scalars recorded for every trajectory: conditional
/// first and second moments of momentum, of the measured observable
/// J = −cos x, and the state's norm deviation from one (zero by definition
/// for classical samples).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrobeScalars {
    pub mean_p: f64,
    pub mean_p2: f64,
    pub mean_j: f64,
    pub mean_j2: f64,
    pub norm_drift: f64,
}

impl StrobeScalars {
    pub fn all_finite(&self) -> bool {
        self.mean_p.is_finite()
            && self.mean_p2.is_finite()
            && self.mean_j.is_finite()
            && self.mean_j2.is_finite()
            && self.norm_drift.is_finite()
    }
}

/// One trajectory's full record: identity plus one [`StrobeScalars`] per
/// strobe (strobe 0 is the initial state, so a completed run holds
/// `n_periods + 1` entries).
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub trajectory_id: u64,
    /// Noise substream index; equals `trajectory_id` under the current
    /// seeding scheme but stored separately so the record is self-describing.
    pub stream_id: u64,
    pub strobes: Vec<StrobeScalars>,
}

impl TrajectoryRecord {
    pub fn new(trajectory_id: u64) -> Self {
        TrajectoryRecord {
            trajectory_id,
            stream_id: trajectory_id,
            strobes: Vec::new(),
        }
    }

    /// Append one strobe's scalars, rejecting non-finite values.
    pub fn push(&mut self, strobe: u32, s: StrobeScalars) -> Result<()> {
        if !s.all_finite() {
            return Err(fail(format!(
                "non-finite record scalar in trajectory {} at strobe {strobe}",
                self.trajectory_id
            )));
        }
        self.strobes.push(s);
        Ok(())
    }

    /// Invariant check used before records are persisted.
    pub fn check_complete(&self, n_periods: u32) -> Result<()> {
        let want = n_periods as usize + 1;
        if self.strobes.len() != want {
            return Err(CliError::Failure(format!(
                "trajectory {} holds {} strobes, expected {want}",
                self.trajectory_id,
                self.strobes.len()
            )));
        }
        Ok(())
    }
}

/// Hilbert-angle summary of one strobe (angles scenario).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaRow {
    pub theta_ave: f64,
    pub stderr: f64,
    pub n_pairs: u64,
}
