//! Per-trajectory Wiener noise from counter-based, splittable streams.
//!
//! Every trajectory draws from its own ChaCha12 stream: the cipher key is
//! expanded from the ensemble master seed (SplitMix64 expansion inside
//! `seed_from_u64`), and the 64-bit ChaCha stream id is set to the trajectory
//! index. Streams with different ids are cryptographically independent, and
//! because the generator is counter-based the draw sequence of trajectory `k`
//! depends only on `(master_seed, k)` — never on scheduling, worker count, or
//! how many other trajectories exist. The stream position (a word counter)
//! can be saved and restored exactly, which is what checkpoint/resume uses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

/// One Wiener increment: `dw ~ N(0, dt)` alongside the step it belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerStep {
    pub dw: f64,
    pub dt: f64,
}

impl WienerStep {
    /// The sampled quotient `dw²/dt` kept by the stochastic potential.
    pub fn dw_sq_over_dt(&self) -> f64 {
        self.dw * self.dw / self.dt
    }
}

/// Factory handing out the per-trajectory noise streams of one ensemble.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryStreams {
    master_seed: u64,
}

impl TrajectoryStreams {
    pub fn new(master_seed: u64) -> Self {
        TrajectoryStreams { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The independent stream of trajectory `traj_index`.
    pub fn stream(&self, traj_index: u64) -> NoiseStream {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master_seed);
        rng.set_stream(traj_index);
        NoiseStream { rng, traj_index }
    }
}

/// A seekable Gaussian noise source for a single trajectory.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha12Rng,
    traj_index: u64,
}

impl NoiseStream {
    pub fn traj_index(&self) -> u64 {
        self.traj_index
    }

    /// One standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// One Wiener increment over `dt`: `dw = sqrt(dt) · z`.
    pub fn wiener(&mut self, dt: f64) -> WienerStep {
        debug_assert!(dt > 0.0);
        WienerStep {
            dw: dt.sqrt() * self.standard_normal(),
            dt,
        }
    }

    /// Current position in the underlying word counter, for checkpoints.
    pub fn word_pos(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Restore a position previously returned by [`NoiseStream::word_pos`].
    pub fn set_word_pos(&mut self, pos: u128) {
        self.rng.set_word_pos(pos);
    }
}
