//! Binary checkpoints for resumable runs.
//!
//! A checkpoint freezes everything a run needs to continue bit-for-bit from
//! a strobe boundary: each trajectory's state, its noise stream position,
//! every per-strobe record row produced so far, and the scenario-specific
//! reduction series. The whole payload is integrity-protected by a trailing
//! SHA-256; the config snapshot's hash is embedded so a checkpoint cannot
//! silently continue under edited parameters.
//!
//! All integers and floats are little-endian. Wavefunction states reuse the
//! library's self-delimiting dump format; classical states are three
//! doubles `(x, p, time)` with `x` unwrapped so well-to-well winding
//! survives the round trip.

use std::io::{Cursor, Read};
use std::path::Path;

use qpend_core::classical::ClassicalState;
use qpend_core::wavefunction::WaveFunction;

use crate::error::{fail, io_fail, CliError, Result};
use crate::output::{atomic_write, CHECKPOINT_NAME};
use crate::scenario::{ScenarioKind, StrobeScalars, ThetaRow, TrajectoryRecord};

const MAGIC: [u8; 8] = *b"QPENDCP1";
const VERSION: u64 = 1;

/// Trajectory states at the checkpointed strobe.
#[derive(Debug, Clone)]
pub enum EnsembleSnapshot {
    Quantum(Vec<WaveFunction>),
    Classical(Vec<ClassicalState>),
}

impl EnsembleSnapshot {
    pub fn len(&self) -> usize {
        match self {
            EnsembleSnapshot::Quantum(v) => v.len(),
            EnsembleSnapshot::Classical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Everything needed to continue a run from a strobe boundary.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    /// SHA-256 of the `config.snapshot` content this checkpoint belongs to.
    pub config_sha: [u8; 32],
    pub kind: ScenarioKind,
    /// Strobe the states sit at; records cover strobes `0..=strobe`.
    pub strobe: u32,
    pub states: EnsembleSnapshot,
    /// Noise stream positions, one per trajectory.
    pub word_pos: Vec<u128>,
    pub records: Vec<TrajectoryRecord>,
    /// Per-trajectory wrapped positions per strobe (classical runs only;
    /// feeds the classical moments table).
    pub class_x: Vec<Vec<f64>>,
    /// Per-strobe angle summary (angles runs only).
    pub theta: Vec<ThetaRow>,
}

fn kind_tag(kind: ScenarioKind) -> u8 {
    match kind {
        ScenarioKind::QuantumEnsemble => 1,
        ScenarioKind::ClassicalEnsemble => 2,
        ScenarioKind::Angles => 3,
        ScenarioKind::Wigner => 4,
        ScenarioKind::Portrait => unreachable!("portrait runs are never checkpointed"),
    }
}

fn kind_from_tag(tag: u8) -> Result<ScenarioKind> {
    match tag {
        1 => Ok(ScenarioKind::QuantumEnsemble),
        2 => Ok(ScenarioKind::ClassicalEnsemble),
        3 => Ok(ScenarioKind::Angles),
        4 => Ok(ScenarioKind::Wigner),
        other => Err(fail(format!("checkpoint names unknown scenario tag {other}"))),
    }
}

impl Checkpoint {
    /// Serialize with the integrity trailer appended.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let n = self.states.len();
        assert_eq!(self.word_pos.len(), n, "one stream position per trajectory");
        assert_eq!(self.records.len(), n, "one record per trajectory");
        let mut buf = Vec::with_capacity(1 << 16);
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&self.config_sha);
        buf.push(kind_tag(self.kind));
        buf.extend_from_slice(&self.strobe.to_le_bytes());
        buf.extend_from_slice(&(n as u64).to_le_bytes());
        for i in 0..n {
            buf.extend_from_slice(&self.records[i].trajectory_id.to_le_bytes());
            let pos = self.word_pos[i];
            buf.extend_from_slice(&(pos as u64).to_le_bytes());
            buf.extend_from_slice(&((pos >> 64) as u64).to_le_bytes());
            match &self.states {
                EnsembleSnapshot::Quantum(states) => {
                    states[i]
                        .write_dump(&mut buf)
                        .map_err(|e| fail(format!("checkpoint state dump: {e}")))?;
                }
                EnsembleSnapshot::Classical(states) => {
                    let s = &states[i];
                    buf.extend_from_slice(&s.x.to_le_bytes());
                    buf.extend_from_slice(&s.p.to_le_bytes());
                    buf.extend_from_slice(&s.time.to_le_bytes());
                }
            }
        }
        let rows = self.strobe as usize + 1;
        for rec in &self.records {
            assert_eq!(rec.strobes.len(), rows, "records cover strobes 0..=strobe");
            for s in &rec.strobes {
                for v in [s.mean_p, s.mean_p2, s.mean_j, s.mean_j2, s.norm_drift] {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        if self.kind == ScenarioKind::ClassicalEnsemble {
            assert_eq!(self.class_x.len(), n);
            for xs in &self.class_x {
                assert_eq!(xs.len(), rows);
                for v in xs {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        if self.kind == ScenarioKind::Angles {
            assert_eq!(self.theta.len(), rows, "one angle row per strobe");
            for t in &self.theta {
                buf.extend_from_slice(&t.theta_ave.to_le_bytes());
                buf.extend_from_slice(&t.stderr.to_le_bytes());
                buf.extend_from_slice(&t.n_pairs.to_le_bytes());
            }
        }
        let digest = sha2::Sha256::digest(&buf);
        buf.extend_from_slice(&digest);
        Ok(buf)
    }

    /// Parse and verify a serialized checkpoint. The trailer is checked
    /// before anything else is trusted; `expected_config_sha` ties the
    /// checkpoint to the run directory's config snapshot.
    pub fn from_bytes(bytes: &[u8], expected_config_sha: &[u8; 32]) -> Result<Checkpoint> {
        if bytes.len() < 32 {
            return Err(fail("checkpoint truncated: no integrity trailer"));
        }
        let (payload, trailer) = bytes.split_at(bytes.len() - 32);
        let digest = sha2::Sha256::digest(payload);
        if digest.as_slice() != trailer {
            return Err(fail("checkpoint checksum mismatch: file is corrupted"));
        }
        let mut cur = Cursor::new(payload);
        let mut magic = [0u8; 8];
        read_exact(&mut cur, &mut magic)?;
        if magic != MAGIC {
            return Err(fail("checkpoint magic mismatch"));
        }
        let version = read_u64(&mut cur)?;
        if version != VERSION {
            return Err(fail(format!("unsupported checkpoint version {version}")));
        }
        let mut config_sha = [0u8; 32];
        read_exact(&mut cur, &mut config_sha)?;
        if &config_sha != expected_config_sha {
            return Err(fail(
                "checkpoint was written for a different config.snapshot",
            ));
        }
        let kind = kind_from_tag(read_u8(&mut cur)?)?;
        let strobe = read_u32(&mut cur)?;
        let n = read_u64(&mut cur)? as usize;
        let rows = strobe as usize + 1;

        let mut word_pos = Vec::with_capacity(n);
        let mut records: Vec<TrajectoryRecord> = Vec::with_capacity(n);
        let mut q_states = Vec::new();
        let mut c_states = Vec::new();
        for _ in 0..n {
            let id = read_u64(&mut cur)?;
            let lo = read_u64(&mut cur)? as u128;
            let hi = read_u64(&mut cur)? as u128;
            word_pos.push(lo | (hi << 64));
            records.push(TrajectoryRecord::new(id));
            if kind == ScenarioKind::ClassicalEnsemble {
                let x = read_f64(&mut cur)?;
                let p = read_f64(&mut cur)?;
                let time = read_f64(&mut cur)?;
                c_states.push(ClassicalState { x, p, time });
            } else {
                let psi = WaveFunction::read_dump(&mut cur)
                    .map_err(|e| fail(format!("checkpoint state: {e}")))?;
                q_states.push(psi);
            }
        }
        for rec in records.iter_mut() {
            for strobe_idx in 0..rows {
                let mut v = [0.0; 5];
                for slot in v.iter_mut() {
                    *slot = read_f64(&mut cur)?;
                }
                rec.push(
                    strobe_idx as u32,
                    StrobeScalars {
                        mean_p: v[0],
                        mean_p2: v[1],
                        mean_j: v[2],
                        mean_j2: v[3],
                        norm_drift: v[4],
                    },
                )?;
            }
        }
        let mut class_x = Vec::new();
        if kind == ScenarioKind::ClassicalEnsemble {
            for _ in 0..n {
                let mut xs = Vec::with_capacity(rows);
                for _ in 0..rows {
                    xs.push(read_f64(&mut cur)?);
                }
                class_x.push(xs);
            }
        }
        let mut theta = Vec::new();
        if kind == ScenarioKind::Angles {
            for _ in 0..rows {
                theta.push(ThetaRow {
                    theta_ave: read_f64(&mut cur)?,
                    stderr: read_f64(&mut cur)?,
                    n_pairs: read_u64(&mut cur)?,
                });
            }
        }
        if cur.position() != payload.len() as u64 {
            return Err(fail("checkpoint has trailing garbage"));
        }
        let states = if kind == ScenarioKind::ClassicalEnsemble {
            EnsembleSnapshot::Classical(c_states)
        } else {
            EnsembleSnapshot::Quantum(q_states)
        };
        Ok(Checkpoint {
            config_sha,
            kind,
            strobe,
            states,
            word_pos,
            records,
            class_x,
            theta,
        })
    }
}

/// Atomically write the run directory's checkpoint.
pub fn write_checkpoint(dir: &Path, ck: &Checkpoint) -> Result<()> {
    let path = dir.join(CHECKPOINT_NAME);
    atomic_write(&path, &ck.to_bytes()?).map_err(|e| io_fail(&path, e))
}

/// Read the run directory's checkpoint; `Ok(None)` when none exists.
pub fn read_checkpoint(dir: &Path, expected_config_sha: &[u8; 32]) -> Result<Option<Checkpoint>> {
    let path = dir.join(CHECKPOINT_NAME);
    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_fail(&path, e)),
    };
    Checkpoint::from_bytes(&bytes, expected_config_sha).map(Some)
}

/// Remove the checkpoint once a run has completed and its manifest exists.
pub fn remove_checkpoint(dir: &Path) -> Result<()> {
    let path = dir.join(CHECKPOINT_NAME);
    match std::fs::remove_file(&path) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(io_fail(&path, e)),
    }
}

use sha2::Digest;

fn read_exact(cur: &mut Cursor<&[u8]>, buf: &mut [u8]) -> Result<()> {
    cur.read_exact(buf)
        .map_err(|_| CliError::Failure("checkpoint truncated".into()))
}

fn read_u8(cur: &mut Cursor<&[u8]>) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact(cur, &mut b)?;
    Ok(b[0])
}

fn read_u32(cur: &mut Cursor<&[u8]>) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(cur, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(cur: &mut Cursor<&[u8]>) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(cur, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(cur: &mut Cursor<&[u8]>) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(cur, &mut b)?;
    Ok(f64::from_le_bytes(b))
}
