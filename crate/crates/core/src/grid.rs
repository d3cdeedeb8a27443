//! Discretization of one spatial period and its conjugate momentum grid.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::Error;
use crate::Result;

/// Uniform periodic grid on `[-π, π)` with its FFT-conjugate momenta.
///
/// Positions are `x_j = -π + j·dx`, `dx = 2π/n`, with `x[0] = -π` exactly.
/// Momenta are `kbar` times the integer FFT frequencies, stored in FFT
/// ordering `{0, 1, …, n/2-1, -n/2, …, -1}`, so neighbouring momentum bins
/// differ by exactly `kbar` and `max |p| = kbar·n/2`.
#[derive(Debug)]
pub struct Grid {
    /// Number of points; a power of two in `16..=8192`.
    pub n: usize,
    /// Grid spacing `2π/n`.
    pub dx: f64,
    /// Scaled Planck constant fixing the momentum quantum.
    pub kbar: f64,
    /// Position samples.
    pub x: Vec<f64>,
    /// Momentum samples in FFT ordering.
    pub p: Vec<f64>,
}

impl Grid {
    /// Build a grid of `n` points for effective Planck constant `kbar`.
    pub fn new(n: usize, kbar: f64) -> Result<Arc<Grid>> {
        if !n.is_power_of_two() || !(16..=8192).contains(&n) {
            return Err(Error::invalid("n", "must be a power of two in 16..=8192"));
        }
        if !(kbar.is_finite() && kbar > 0.0) {
            return Err(Error::invalid("kbar", "must be finite and > 0"));
        }
        let dx = 2.0 * PI / n as f64;
        let x = (0..n).map(|j| -PI + j as f64 * dx).collect();
        let p = (0..n)
            .map(|m| {
                let freq = if m < n / 2 {
                    m as f64
                } else {
                    m as f64 - n as f64
                };
                kbar * freq
            })
            .collect();
        Ok(Arc::new(Grid { n, dx, kbar, x, p }))
    }

    /// Signed integer FFT frequency for bin `m` (momentum is `kbar` times this).
    pub fn freq(&self, m: usize) -> i64 {
        if m < self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }
}
