//! Hilbert-space angle statistics and ensemble momentum moments.
//!
//! The central diagnostic is the angle between two conditional states,
//!
//! ```text
//!   θ_ij = arccos |⟨ψ_i|ψ_j⟩|,   ⟨ψ_i|ψ_j⟩ = Σ_k ψ_i*(x_k)·ψ_j(x_k)·dx,
//! ```
//!
//! collected over all unordered pairs of an ensemble frozen at one strobe.
//! Identical preparations that are driven apart by nothing but their
//! measurement records produce an angle distribution whose drift toward π/2
//! measures how violently the conditional dynamics amplifies record noise.
//!
//! Sums over pairs use pairwise summation so that results are independent of
//! how the pair set was partitioned across threads.

use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::math::pairwise_sum;
use crate::wavefunction::WaveFunction;
use crate::Result;

/// How far a state's norm may sit from 1 before it is rejected as input.
const NORM_TOL: f64 = 1e-8;

/// Angle between two normalized states: `arccos` of the clamped overlap
/// magnitude, in `[0, π/2]`. The clamp guards `|overlap| = 1 + 1e−16`
/// rounding, which would leave the `arccos` domain.
pub fn angle(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    check_same_grid(a, b)?;
    for (label, s) in [("first", a), ("second", b)] {
        if (s.norm_sq() - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(
                "state",
                format!("{label} argument is not normalized"),
            ));
        }
    }
    Ok(angle_unchecked(a, b))
}

fn check_same_grid(a: &WaveFunction, b: &WaveFunction) -> Result<()> {
    if a.n() != b.n() || a.grid().kbar != b.grid().kbar {
        return Err(Error::GridMismatch(format!(
            "angle between states on different grids: n {} vs {}, kbar {} vs {}",
            a.n(),
            b.n(),
            a.grid().kbar,
            b.grid().kbar
        )));
    }
    Ok(())
}

fn angle_unchecked(a: &WaveFunction, b: &WaveFunction) -> f64 {
    a.overlap(b).norm().clamp(0.0, 1.0).acos()
}

/// An ensemble of conditional states frozen at one strobe, validated once at
/// construction: one shared grid, every member normalized.
#[derive(Debug, Clone)]
pub struct StrobeSnapshotSet {
    strobe_index: usize,
    trajectory_ids: Vec<u64>,
    states: Vec<WaveFunction>,
}

impl StrobeSnapshotSet {
    pub fn new(
        strobe_index: usize,
        trajectory_ids: Vec<u64>,
        states: Vec<WaveFunction>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::invalid("states", "snapshot set must be non-empty"));
        }
        if trajectory_ids.len() != states.len() {
            return Err(Error::invalid(
                "trajectory_ids",
                format!(
                    "{} ids for {} states",
                    trajectory_ids.len(),
                    states.len()
                ),
            ));
        }
        let first = &states[0];
        for s in &states[1..] {
            check_same_grid(first, s)?;
        }
        for (id, s) in trajectory_ids.iter().zip(&states) {
            if (s.norm_sq() - 1.0).abs() > NORM_TOL {
                return Err(Error::invalid(
                    "states",
                    format!("trajectory {id} is not normalized"),
                ));
            }
        }
        Ok(StrobeSnapshotSet {
            strobe_index,
            trajectory_ids,
            states,
        })
    }

    pub fn strobe_index(&self) -> usize {
        self.strobe_index
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn trajectory_ids(&self) -> &[u64] {
        &self.trajectory_ids
    }

    pub fn states(&self) -> &[WaveFunction] {
        &self.states
    }

    fn require_pairs(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::invalid(
                "states",
                "need at least two states to form pairs",
            ));
        }
        Ok(())
    }
}

/// Upper-triangular matrix of pair angles, `θ_ii = 0`, `θ_ij = θ_ji`.
#[derive(Debug, Clone)]
pub struct AngleMatrix {
    n: usize,
    /// Row-major upper triangle: row `i` holds `θ_ij` for `j = i+1 … n−1`.
    theta: Vec<f64>,
}

impl AngleMatrix {
    /// All-pairs fill, parallelized over rows (each row is one disjoint
    /// block of the triangle, so thread count cannot change any value).
    pub fn from_snapshots(snap: &StrobeSnapshotSet) -> Result<AngleMatrix> {
        snap.require_pairs()?;
        let n = snap.len();
        let mut theta = vec![0.0; n * (n - 1) / 2];
        let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(n - 1);
        let mut rest = theta.as_mut_slice();
        for i in 0..n - 1 {
            let (row, tail) = rest.split_at_mut(n - 1 - i);
            rows.push((i, row));
            rest = tail;
        }
        let states = snap.states();
        rows.par_iter_mut().for_each(|(i, row)| {
            let a = &states[*i];
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = angle_unchecked(a, &states[*i + 1 + k]);
            }
        });
        Ok(AngleMatrix { n, theta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_pairs(&self) -> usize {
        self.theta.len()
    }

    /// `θ_ij`; zero on the diagonal, symmetric in its arguments.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.n, "angle index out of range");
        if i == j {
            return 0.0;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let row_start = lo * (2 * self.n - lo - 1) / 2;
        self.theta[row_start + (hi - lo - 1)]
    }

    /// The upper triangle in deterministic (row-major) order.
    pub fn upper_triangle(&self) -> &[f64] {
        &self.theta
    }
}

/// Mean pair angle with its standard error and the number of pairs it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageAngle {
    pub mean: f64,
    pub stderr: f64,
    pub n_pairs: usize,
}

/// Ensemble-average angle `θ_ave = (2/(N²−N))·Σ_{i<j} θ_ij`.
///
/// With `pair_budget` below the full pair count, a uniform subset of that
/// many distinct pairs is drawn from a deterministic seed (a fixed function
/// of the strobe index, ensemble size, and budget), the mean runs over the
/// subset, and the reported standard error quantifies the subsampling
/// spread. The standard error is the sample standard deviation of the pair
/// angles divided by √n_pairs in either mode.
pub fn average_angle(snap: &StrobeSnapshotSet, pair_budget: Option<usize>) -> Result<AverageAngle> {
    snap.require_pairs()?;
    let n = snap.len();
    let total_pairs = n * (n - 1) / 2;
    let budget = pair_budget.unwrap_or(total_pairs).min(total_pairs);
    if budget == 0 {
        return Err(Error::invalid("pair_budget", "must allow at least one pair"));
    }
    let states = snap.states();
    let angles: Vec<f64> = if budget == total_pairs {
        AngleMatrix::from_snapshots(snap)?.upper_triangle().to_vec()
    } else {
        let pair_ids = sample_pair_ids(snap.strobe_index, n, budget, total_pairs);
        pair_ids
            .par_iter()
            .map(|&k| {
                let (i, j) = decode_pair(k, n);
                angle_unchecked(&states[i], &states[j])
            })
            .collect()
    };
    let mean = pairwise_sum(&angles) / angles.len() as f64;
    let sq_dev: Vec<f64> = angles.iter().map(|&t| (t - mean) * (t - mean)).collect();
    let stderr = if angles.len() > 1 {
        (pairwise_sum(&sq_dev) / (angles.len() - 1) as f64 / angles.len() as f64).sqrt()
    } else {
        0.0
    };
    Ok(AverageAngle {
        mean,
        stderr,
        n_pairs: angles.len(),
    })
}

/// `budget` distinct pair ids from `[0, total)`, uniform, deterministic in
/// `(strobe, n, budget)`. Floyd's sampling keeps this O(budget).
fn sample_pair_ids(strobe: usize, n: usize, budget: usize, total: usize) -> Vec<u64> {
    let seed = (strobe as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((n as u64) << 20)
        .wrapping_add(budget as u64);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut chosen: HashSet<u64> = HashSet::with_capacity(budget);
    for t in (total - budget)..total {
        let r = rng.random_range(0..=t as u64);
        if !chosen.insert(r) {
            chosen.insert(t as u64);
        }
    }
    let mut ids: Vec<u64> = chosen.into_iter().collect();
    ids.sort_unstable();
    ids
}

/// Invert the row-major triangle layout: pair id → `(i, j)`, `i < j`.
fn decode_pair(k: u64, n: usize) -> (usize, usize) {
    // Binary search the row: row i starts at i·(2n−i−1)/2.
    let start = |i: u64| i * (2 * n as u64 - i - 1) / 2;
    let (mut lo, mut hi) = (0u64, n as u64 - 1);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if start(mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = if start(hi) <= k { hi } else { lo };
    let j = i + 1 + (k - start(i));
    (i as usize, j as usize)
}

/// Angle histogram over `[0, π/2]` with uniform bins.
#[derive(Debug, Clone)]
pub struct AngleHistogram {
    pub counts: Vec<u64>,
    bin_width: f64,
}

impl AngleHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// `(lower, upper)` edges of bin `b`.
    pub fn bin_edges(&self, b: usize) -> (f64, f64) {
        (b as f64 * self.bin_width, (b + 1) as f64 * self.bin_width)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the most-populated bin (ties resolve to the lowest index).
    pub fn mode_bin(&self) -> usize {
        let mut best = 0;
        for (b, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = b;
            }
        }
        best
    }

    /// Center of the most-populated bin.
    pub fn mode_angle(&self) -> f64 {
        let (lo, hi) = self.bin_edges(self.mode_bin());
        0.5 * (lo + hi)
    }
}

/// Bin count used when the caller does not name one.
pub const DEFAULT_ANGLE_BINS: usize = 50;

/// Histogram of all pair angles; counts sum to the number of pairs. The
/// right edge π/2 lands in the last bin.
pub fn angle_histogram(snap: &StrobeSnapshotSet, n_bins: Option<usize>) -> Result<AngleHistogram> {
    let n_bins = n_bins.unwrap_or(DEFAULT_ANGLE_BINS);
    if n_bins == 0 {
        return Err(Error::invalid("n_bins", "must be positive"));
    }
    let matrix = AngleMatrix::from_snapshots(snap)?;
    let bin_width = FRAC_PI_2 / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for &t in matrix.upper_triangle() {
        let b = ((t / bin_width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    Ok(AngleHistogram { counts, bin_width })
}

/// Per-strobe ensemble statistics of the trajectory momentum moments.
///
/// `pooled_var` decomposes exactly (population convention at both levels) as
/// `var_of_means + mean_cond_var`: spread of the conditional means across
/// records plus the average width retained within one record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrobeMoments {
    /// Ensemble mean of the per-trajectory conditional means ⟨p⟩.
    pub mean_p: f64,
    /// Population variance of the conditional means across trajectories.
    pub var_of_means: f64,
    /// Ensemble mean of the conditional variances ⟨p²⟩ − ⟨p⟩².
    pub mean_cond_var: f64,
    /// Variance of the pooled ensemble: mean ⟨p²⟩ − (mean ⟨p⟩)².
    pub pooled_var: f64,
}

/// Reduce per-trajectory series of `⟨p⟩` and `⟨p²⟩` (outer index trajectory,
/// inner index strobe; all trajectories must agree on strobe count) to
/// per-strobe ensemble moments. A classical ensemble is the degenerate case:
/// feed each sample's `p` and `p²`, so every conditional variance is zero
/// and `pooled_var` collapses to `var_of_means`.
pub fn ensemble_moments(
    mean_p: &[Vec<f64>],
    second_moment: &[Vec<f64>],
) -> Result<Vec<StrobeMoments>> {
    if mean_p.is_empty() || mean_p.len() != second_moment.len() {
        return Err(Error::invalid(
            "trajectories",
            "need matching, non-empty mean and second-moment series",
        ));
    }
    let n_strobes = mean_p[0].len();
    for (series, label) in [(mean_p, "mean_p"), (second_moment, "second_moment")] {
        for (i, traj) in series.iter().enumerate() {
            if traj.len() != n_strobes {
                return Err(Error::invalid(
                    label,
                    format!(
                        "trajectory {i} has {} strobes, expected {n_strobes}",
                        traj.len()
                    ),
                ));
            }
        }
    }
    let n_traj = mean_p.len() as f64;
    let mut out = Vec::with_capacity(n_strobes);
    let mut col_mean = vec![0.0; mean_p.len()];
    let mut col_sq = vec![0.0; mean_p.len()];
    let mut col_dev = vec![0.0; mean_p.len()];
    let mut col_cvar = vec![0.0; mean_p.len()];
    for s in 0..n_strobes {
        for (i, (m, q)) in mean_p.iter().zip(second_moment).enumerate() {
            col_mean[i] = m[s];
            col_sq[i] = q[s];
            col_cvar[i] = q[s] - m[s] * m[s];
        }
        let ens_mean = pairwise_sum(&col_mean) / n_traj;
        let ens_sq = pairwise_sum(&col_sq) / n_traj;
        for (d, &m) in col_dev.iter_mut().zip(&col_mean) {
            *d = (m - ens_mean) * (m - ens_mean);
        }
        out.push(StrobeMoments {
            mean_p: ens_mean,
            var_of_means: pairwise_sum(&col_dev) / n_traj,
            mean_cond_var: pairwise_sum(&col_cvar) / n_traj,
            pooled_var: ens_sq - ens_mean * ens_mean,
        });
    }
    Ok(out)
}
