//! Shared FFT plan cache and a small in-place transform wrapper.
//!
//! rustfft transforms are unnormalized; [`FftPair::inverse`] folds the `1/n`
//! back in so that `inverse(forward(ψ)) == ψ` up to rounding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftDirection, FftPlanner};

use crate::C64;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn cache() -> &'static Mutex<HashMap<usize, Plans>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fetch (and memoize) forward/inverse plans for length `n`.
pub fn plans(n: usize) -> Plans {
    let mut guard = cache().lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (
                planner.plan_fft(n, FftDirection::Forward),
                planner.plan_fft(n, FftDirection::Inverse),
            )
        })
        .clone()
}

/// Forward/inverse plan pair with its scratch buffer.
pub struct FftPair {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let (fwd, inv) = plans(n);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        FftPair {
            n,
            fwd,
            inv,
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward DFT: `out_m = Σ_j in_j exp(-2πi m j / n)`.
    pub fn forward(&mut self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.fwd.process_with_scratch(buf, &mut self.scratch);
    }

    /// In-place inverse DFT including the `1/n` normalization.
    pub fn inverse(&mut self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// In-place inverse DFT without the `1/n` factor.
    pub fn inverse_unscaled(&mut self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inv.process_with_scratch(buf, &mut self.scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_recovers_input() {
        let n = 64;
        let mut pair = FftPair::new(n);
        let orig: Vec<C64> = (0..n)
            .map(|j| C64::new((j as f64 * 0.1).sin(), (j as f64 * 0.07).cos()))
            .collect();
        let mut buf = orig.clone();
        pair.forward(&mut buf);
        pair.inverse(&mut buf);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_of_plane_wave_is_a_delta() {
        let n = 32;
        let mut pair = FftPair::new(n);
        let k = 5;
        let mut buf: Vec<C64> = (0..n)
            .map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64))
            .collect();
        pair.forward(&mut buf);
        for (m, z) in buf.iter().enumerate() {
            let expect = if m == k { n as f64 } else { 0.0 };
            assert!((z.norm() - expect).abs() < 1e-9, "bin {m}");
        }
    }
}
