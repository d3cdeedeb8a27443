//! Split-operator integration of the conditioned Schrödinger equation.
//!
//! One step of length `dt` applies the symmetric sandwich
//!
//! ```text
//!   exp(-i p² dt / (4 kbar)) · exp(-i V dt / kbar) · exp(-i p² dt / (4 kbar))
//! ```
//!
//! with the kinetic factors acting in momentum space (FFT) and the stochastic
//! effective potential acting pointwise in position space,
//!
//! ```text
//!   V(x) = -ξ(t)·cos x
//!          - i·kbar·[ D(t)·(J - ⟨J⟩)²·(1 + dW²/dt) - √(2 D(t))·(J - ⟨J⟩)·dW/dt ],
//!   J(x) = -cos x.
//! ```
//!
//! The anti-Hermitian part implements the measurement update: a trajectory
//! conditioned on the homodyne record `dW` is damped where it disagrees with
//! the record and amplified where it agrees, and is renormalized afterwards.
//! The `dW²/dt` factor is kept as sampled — not replaced by its mean — so
//! that expanding the exponential reproduces the Itô increment of the
//! normalized nonlinear equation exactly to order `dt^{3/2}`.
//!
//! Modulated coefficients are evaluated at the step midpoint `t + dt/2`,
//! which keeps the deterministic part of the sandwich second order in `dt`
//! for a time-dependent drive; `⟨J⟩` is evaluated once, on the state entering
//! the potential factor.

use std::sync::Arc;

use crate::error::Error;
use crate::fft::FftPair;
use crate::grid::Grid;
use crate::noise::WienerStep;
use crate::params::SimParams;
use crate::wavefunction::WaveFunction;
use crate::{Result, C64};

/// Reusable split-operator engine for a fixed grid, parameter set, and step.
pub struct SplitOperator {
    grid: Arc<Grid>,
    params: SimParams,
    dt: f64,
    /// `exp(-i p² dt / (4 kbar))` per momentum bin.
    kinetic_half: Vec<C64>,
    cos_x: Vec<f64>,
    fft: FftPair,
}

impl SplitOperator {
    /// Engine with the step implied by `params.steps_per_period`.
    pub fn new(grid: Arc<Grid>, params: SimParams) -> Result<Self> {
        let dt = params.dt();
        Self::with_dt(grid, params, dt)
    }

    /// Engine with an explicit step (used by convergence sweeps).
    pub fn with_dt(grid: Arc<Grid>, params: SimParams, dt: f64) -> Result<Self> {
        params.validate()?;
        if grid.kbar != params.kbar {
            return Err(Error::GridMismatch(format!(
                "grid kbar {} != params kbar {}",
                grid.kbar, params.kbar
            )));
        }
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::invalid("dt", "must be finite and >= 0"));
        }
        let kinetic_half = grid
            .p
            .iter()
            .map(|&p| C64::from_polar(1.0, -p * p * dt / (4.0 * grid.kbar)))
            .collect();
        let cos_x = grid.x.iter().map(|&x| x.cos()).collect();
        let fft = FftPair::new(grid.n);
        Ok(SplitOperator {
            grid,
            params,
            dt,
            kinetic_half,
            cos_x,
            fft,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn check_state(&self, psi: &WaveFunction) {
        assert_eq!(psi.n(), self.grid.n, "state grid does not match engine");
        assert_eq!(
            psi.grid().kbar,
            self.grid.kbar,
            "state kbar does not match engine"
        );
    }

    /// Half of the free flight: multiply by `exp(-i p² dt/(4 kbar))` in
    /// momentum space. Does not advance the state's clock.
    pub fn kinetic_half_step(&mut self, psi: &mut WaveFunction) {
        self.check_state(psi);
        self.fft.forward(&mut psi.amps);
        for (a, k) in psi.amps.iter_mut().zip(&self.kinetic_half) {
            *a *= k;
        }
        self.fft.inverse(&mut psi.amps);
    }

    /// `⟨J⟩ = ⟨-cos x⟩` of the current amplitudes (normalized expectation).
    fn mean_j(&self, psi: &WaveFunction) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, c) in psi.amps.iter().zip(&self.cos_x) {
            let w = a.norm_sqr();
            num -= w * c;
            den += w;
        }
        num / den
    }

    /// Conditioned potential factor `exp(-i V dt / kbar)` evaluated at drive
    /// time `t_eval`, followed by renormalization. `⟨J⟩` is computed once,
    /// from the state handed in. Returns the norm found before renormalizing
    /// (its deviation from 1 is the per-step norm drift diagnostic).
    ///
    /// Does not advance the state's clock; [`SplitOperator::sse_step`] owns
    /// time bookkeeping.
    pub fn potential_step(
        &mut self,
        psi: &mut WaveFunction,
        t_eval: f64,
        w: &WienerStep,
    ) -> f64 {
        self.apply_potential_conditioned(psi, t_eval, w);
        // A collapsed-to-zero or non-finite state cannot be renormalized;
        // hand the bad norm back so callers can flag the trajectory instead
        // of panicking deep inside a worker thread.
        let norm = psi.norm();
        if norm.is_finite() && norm > 0.0 {
            let inv = 1.0 / norm;
            for a in &mut psi.amps {
                *a *= inv;
            }
        }
        norm
    }

    /// The potential factor alone (no renormalization).
    fn apply_potential_conditioned(&self, psi: &mut WaveFunction, t_eval: f64, w: &WienerStep) {
        self.check_state(psi);
        let xi_t = self.params.xi_at(t_eval);
        let d_t = self.params.d_at(t_eval);
        let mean_j = self.mean_j(psi);
        // exponent = i·ξ(t)·cos x·dt/kbar
        //          - D(t)·(J-⟨J⟩)²·(dt + dW²) + √(2 D(t))·(J-⟨J⟩)·dW
        let phase_coef = xi_t * self.dt / self.grid.kbar;
        let damp_coef = -d_t * (self.dt + w.dw * w.dw);
        let noise_coef = (2.0 * d_t).sqrt() * w.dw;
        for (a, c) in psi.amps.iter_mut().zip(&self.cos_x) {
            let dj = -c - mean_j;
            let re = damp_coef * dj * dj + noise_coef * dj;
            let im = phase_coef * c;
            *a *= C64::from_polar(re.exp(), im);
        }
    }

    /// One full conditioned step. Returns the pre-renormalization norm of the
    /// potential factor's output (drift diagnostic). Advances `psi.time`.
    pub fn sse_step(&mut self, psi: &mut WaveFunction, w: &WienerStep) -> f64 {
        let t_mid = psi.time + 0.5 * self.dt;
        self.kinetic_half_step(psi);
        let norm = self.potential_step(psi, t_mid, w);
        self.kinetic_half_step(psi);
        psi.time += self.dt;
        norm
    }

    /// One explicit Euler step of the *linear* (unnormalized) record-driven
    /// equation,
    ///
    /// ```text
    ///   ψ ← ψ + dt·[ -(i/kbar)·(T̂ + ξ(t)·J)ψ - D(t)·J²ψ + I_A·Jψ ],
    ///   I_A = 4·D(t)·⟨J⟩ + √(2 D(t))·dW/dt,
    /// ```
    ///
    /// with the kinetic term applied spectrally and no renormalization, so
    /// the norm carries the relative likelihood of the sampled record. `⟨J⟩`
    /// is the normalized expectation of the incoming state; coefficients are
    /// evaluated at the step's start (the Itô point). Normalizing the output
    /// recovers the conditioned step to leading order in `dt`, which is what
    /// the convergence sweeps check.
    pub fn sse_step_unnormalized(&mut self, psi: &mut WaveFunction, w: &WienerStep) {
        self.check_state(psi);
        let t0 = psi.time;
        let xi_t = self.params.xi_at(t0);
        let d_t = self.params.d_at(t0);
        let mean_j = self.mean_j(psi);
        let drive = 4.0 * d_t * mean_j * self.dt + (2.0 * d_t).sqrt() * w.dw;
        let mut kinetic = psi.amps.clone();
        self.fft.forward(&mut kinetic);
        for (k, &p) in kinetic.iter_mut().zip(&self.grid.p) {
            *k *= 0.5 * p * p;
        }
        self.fft.inverse(&mut kinetic);
        let minus_i_dt_over_kbar = C64::new(0.0, -self.dt / self.grid.kbar);
        for ((a, k), &c) in psi.amps.iter_mut().zip(&kinetic).zip(&self.cos_x) {
            let j = -c;
            let h_psi = k + xi_t * j * *a;
            *a += minus_i_dt_over_kbar * h_psi + (drive * j - self.dt * d_t * j * j) * *a;
        }
        psi.time += self.dt;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::TrajectoryStreams;
    use crate::wavefunction::gaussian_state;
    use approx::assert_abs_diff_eq;

    fn quiet_params() -> SimParams {
        SimParams {
            d: 0.0,
            epsilon: 0.0,
            ..SimParams::baseline()
        }
    }

    fn zero_step(dt: f64) -> WienerStep {
        WienerStep { dw: 0.0, dt }
    }

    #[test]
    fn kinetic_half_step_adds_pure_phase_to_plane_wave() {
        // A momentum eigenstate only picks up exp(-i p² dt/(4 kbar)).
        let params = quiet_params();
        let grid = Grid::new(64, params.kbar).unwrap();
        let mut eng = SplitOperator::new(grid.clone(), params).unwrap();
        let p0 = 3.0 * params.kbar;
        let amps: Vec<C64> = grid
            .x
            .iter()
            .map(|&x| C64::from_polar(1.0, p0 * x / params.kbar))
            .collect();
        let mut psi = WaveFunction::from_amps(grid.clone(), amps, 0.0);
        psi.normalize();
        let before = psi.clone();
        eng.kinetic_half_step(&mut psi);
        let expect = C64::from_polar(1.0, -p0 * p0 * eng.dt() / (4.0 * params.kbar));
        for (a, b) in psi.amps.iter().zip(&before.amps) {
            assert!((a - b * expect).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_dt_step_is_the_identity() {
        let params = quiet_params();
        let grid = Grid::new(64, params.kbar).unwrap();
        let mut eng = SplitOperator::with_dt(grid.clone(), params, 0.0).unwrap();
        let mut psi = gaussian_state(&grid, 0.3, 1.0, 0.2).unwrap();
        let before = psi.clone();
        eng.sse_step(&mut psi, &zero_step(0.0));
        for (a, b) in psi.amps.iter().zip(&before.amps) {
            assert!((a - b).norm() < 1e-13);
        }
        assert_eq!(psi.time, 0.0);
    }

    #[test]
    fn noise_free_potential_is_a_pure_phase() {
        // With D = 0 the potential factor must not change |ψ(x)| anywhere.
        let params = quiet_params();
        let grid = Grid::new(128, params.kbar).unwrap();
        let mut eng = SplitOperator::new(grid.clone(), params).unwrap();
        let mut psi = gaussian_state(&grid, 0.5, -0.5, 0.15).unwrap();
        let before = psi.density();
        let norm = eng.potential_step(&mut psi, 0.0, &zero_step(eng.dt()));
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        for (d0, d1) in before.iter().zip(psi.density()) {
            assert_abs_diff_eq!(*d0, d1, epsilon = 1e-13);
        }
    }

    #[test]
    fn step_keeps_unit_norm() {
        let params = SimParams {
            d: 0.1,
            ..SimParams::baseline()
        };
        let grid = Grid::new(128, params.kbar).unwrap();
        let mut eng = SplitOperator::new(grid.clone(), params).unwrap();
        let mut psi = gaussian_state(&grid, 0.0, 1.0, params.sigma_x).unwrap();
        let mut stream = TrajectoryStreams::new(5).stream(0);
        for _ in 0..500 {
            let w = stream.wiener(eng.dt());
            eng.sse_step(&mut psi, &w);
            assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_evolution_ignores_the_seed() {
        // At D = 0 the record has no influence: different Wiener streams,
        // bitwise identical states.
        let params = quiet_params();
        let grid = Grid::new(64, params.kbar).unwrap();
        let mut eng = SplitOperator::new(grid.clone(), params).unwrap();
        let mut a = gaussian_state(&grid, 0.0, 1.0, params.sigma_x).unwrap();
        let mut b = a.clone();
        let mut sa = TrajectoryStreams::new(1).stream(0);
        let mut sb = TrajectoryStreams::new(99).stream(3);
        for _ in 0..50 {
            let wa = sa.wiener(eng.dt());
            let wb = sb.wiener(eng.dt());
            eng.sse_step(&mut a, &wa);
            eng.sse_step(&mut b, &wb);
        }
        for (x, y) in a.amps.iter().zip(&b.amps) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }

    #[test]
    fn linear_euler_step_is_exact_on_a_free_plane_wave() {
        // A momentum eigenstate with ξ = D = 0 turns the linear step into
        // scalar arithmetic: ψ·(1 - i·dt·p₀²/(2 kbar)). No discretization
        // error hides in this comparison.
        let params = SimParams {
            xi: 0.0,
            ..quiet_params()
        };
        let grid = Grid::new(64, params.kbar).unwrap();
        let mut eng = SplitOperator::new(grid.clone(), params).unwrap();
        let p0 = 5.0 * params.kbar;
        let amps: Vec<C64> = grid
            .x
            .iter()
            .map(|&x| C64::from_polar(1.0, p0 * x / params.kbar))
            .collect();
        let mut psi = WaveFunction::from_amps(grid.clone(), amps, 0.0);
        psi.normalize();
        let before = psi.clone();
        eng.sse_step_unnormalized(&mut psi, &zero_step(eng.dt()));
        let factor = C64::new(1.0, -eng.dt() * p0 * p0 / (2.0 * params.kbar));
        for (a, b) in psi.amps.iter().zip(&before.amps) {
            assert!((a - b * factor).norm() < 1e-13);
        }
        assert_abs_diff_eq!(psi.time, eng.dt(), epsilon = 1e-15);
    }

    #[test]
    fn linear_euler_step_on_a_uniform_state_is_pointwise_closed_form() {
        // The uniform state is the zero-momentum eigenstate (T̂ψ = 0) and has
        // ⟨J⟩ = 0, so the whole step collapses to a pointwise multiplier:
        //   ψ·(1 + i·ξ·dt·cos x/kbar - D·dt·cos²x + √(2D)·dW·(-cos x)).
        let params = SimParams {
            d: 0.05,
            epsilon: 0.0,
            ..SimParams::baseline()
        };
        let grid = Grid::new(64, params.kbar).unwrap();
        let mut eng = SplitOperator::new(grid.clone(), params).unwrap();
        let amps = vec![C64::new(1.0, 0.0); grid.n];
        let mut psi = WaveFunction::from_amps(grid.clone(), amps, 0.0);
        psi.normalize();
        assert_abs_diff_eq!(psi.j_moments().0, 0.0, epsilon = 1e-14);
        let before = psi.clone();
        let dw = 0.7 * eng.dt().sqrt();
        eng.sse_step_unnormalized(
            &mut psi,
            &WienerStep {
                dw,
                dt: eng.dt(),
            },
        );
        let dt = eng.dt();
        for ((a, b), &x) in psi.amps.iter().zip(&before.amps).zip(&grid.x) {
            let j = -x.cos();
            let mult = C64::new(
                1.0 - params.d * dt * j * j + (2.0 * params.d).sqrt() * dw * j,
                params.xi * dt * x.cos() / params.kbar,
            );
            assert!((a - b * mult).norm() < 1e-14);
        }
    }

    #[test]
    fn normalized_linear_step_approaches_the_conditioned_step() {
        // One linear Euler step, normalized, agrees with one conditioned
        // split step to leading order; halving dt must shrink the gap by
        // at least ~2 (the full order sweep lives in the convergence tests).
        let params = SimParams {
            d: 0.1,
            ..SimParams::baseline()
        };
        let grid = Grid::new(64, params.kbar).unwrap();
        let psi0 = gaussian_state(&grid, -0.4, 0.8, 0.2).unwrap();
        let gap = |dt: f64| -> f64 {
            let mut eng = SplitOperator::with_dt(grid.clone(), params.clone(), dt).unwrap();
            let w = WienerStep {
                dw: 0.3 * dt.sqrt(),
                dt,
            };
            let mut a = psi0.clone();
            let mut b = psi0.clone();
            eng.sse_step(&mut a, &w);
            eng.sse_step_unnormalized(&mut b, &w);
            b.normalize();
            a.amps
                .iter()
                .zip(&b.amps)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let coarse = gap(1e-3);
        let fine = gap(5e-4);
        assert!(coarse < 1e-4, "single-step gap too large: {coarse:.2e}");
        assert!(
            coarse / fine > 1.8,
            "gap must shrink with dt: coarse {coarse:.2e}, fine {fine:.2e}"
        );
    }
}
