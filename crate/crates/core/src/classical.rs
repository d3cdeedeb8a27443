//! Classical conditional dynamics of the modulated pendulum.
//!
//! The measurement-conditioned classical counterpart of the quantum model is
//! the Itô SDE
//!
//! ```text
//!   dx = p·dt,
//!   dp = -ξ(t)·sin x·dt + √(2·D(t))·kbar·sin x·dW,
//! ```
//!
//! integrated by Euler–Maruyama with the drift ordered symplectically
//! (momentum kick first, then position drift with the updated momentum).
//! Deterministic phase-space studies — stroboscopic portraits and orbit
//! classification — use a 4th-order composition of velocity-Verlet substeps
//! instead, so energy contours and island boundaries stay sharp over
//! hundreds of modulation periods; the SDE path keeps the plain kick-drift
//! ordering that its noise term is defined against.
//!
//! Positions are unwrapped internally (diffusion drives well-to-well
//! transport); wrap only for reporting.

use crate::error::Error;
use crate::math::{min_image, wrap_position};
use crate::noise::{NoiseStream, WienerStep};
use crate::params::SimParams;
use crate::Result;

/// One classical trajectory's instantaneous state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    /// Position, unwrapped (use [`ClassicalState::wrapped_x`] for reports).
    pub x: f64,
    /// Momentum.
    pub p: f64,
    /// Dimensionless time.
    pub time: f64,
}

impl ClassicalState {
    pub fn new(x: f64, p: f64) -> Self {
        ClassicalState { x, p, time: 0.0 }
    }

    /// Position wrapped into [−π, π) for reporting.
    pub fn wrapped_x(&self) -> f64 {
        wrap_position(self.x)
    }
}

/// An ensemble of classical trajectories.
pub type ClassicalEnsemble = Vec<ClassicalState>;

/// One Euler–Maruyama step of the conditional SDE. Drive and diffusion are
/// evaluated at the step's start time (Itô convention); the drift is applied
/// kick-then-drift so the D=0 limit is the symplectic Euler map.
pub fn sde_step(s: &mut ClassicalState, w: &WienerStep, params: &SimParams) {
    let xi_t = params.xi_at(s.time);
    let d_t = params.d_at(s.time);
    let sin_x = s.x.sin();
    s.p += -xi_t * sin_x * w.dt + (2.0 * d_t).sqrt() * params.kbar * sin_x * w.dw;
    s.x += s.p * w.dt;
    s.time += w.dt;
}

/// The deterministic (D = 0) limit of [`sde_step`]: identical code path with
/// a zero Wiener increment, so the two agree bitwise.
pub fn kick_drift_step(s: &mut ClassicalState, dt: f64, params: &SimParams) {
    sde_step(s, &WienerStep { dw: 0.0, dt }, params);
}

/// One velocity-Verlet step for H = p²/2 − ξ(t)·cos x (time-dependent force
/// evaluated at both endpoints).
fn verlet_step(s: &mut ClassicalState, dt: f64, params: &SimParams) {
    let half = 0.5 * dt;
    s.p += -params.xi_at(s.time) * s.x.sin() * half;
    s.x += s.p * dt;
    s.p += -params.xi_at(s.time + dt) * s.x.sin() * half;
    s.time += dt;
}

/// One 4th-order symplectic step: the standard triple-Verlet composition
/// with weights (w1, w0, w1), w1 = 1/(2−2^{1/3}), w0 = 1 − 2·w1.
pub fn deterministic_step4(s: &mut ClassicalState, dt: f64, params: &SimParams) {
    let w1 = 1.0 / (2.0 - 2f64.powf(1.0 / 3.0));
    let w0 = 1.0 - 2.0 * w1;
    verlet_step(s, w1 * dt, params);
    verlet_step(s, w0 * dt, params);
    verlet_step(s, w1 * dt, params);
}

/// Classical energy H₀(t) = p²/2 − ξ(t)·cos x at the state's own time.
pub fn energy(s: &ClassicalState, params: &SimParams) -> f64 {
    0.5 * s.p * s.p - params.xi_at(s.time) * s.x.cos()
}

/// Deterministic stroboscopic portrait: for each seed, the (x, p) points at
/// t = 2π·k for k = 0..=n_periods, positions wrapped to [−π, π).
pub fn stroboscopic_portrait(
    seeds: &[(f64, f64)],
    n_periods: usize,
    params: &SimParams,
) -> Vec<Vec<(f64, f64)>> {
    let dt = params.dt();
    seeds
        .iter()
        .map(|&(x0, p0)| {
            let mut s = ClassicalState::new(x0, p0);
            let mut points = Vec::with_capacity(n_periods + 1);
            points.push((s.wrapped_x(), s.p));
            for _ in 0..n_periods {
                for _ in 0..params.steps_per_period {
                    deterministic_step4(&mut s, dt, params);
                }
                points.push((s.wrapped_x(), s.p));
            }
            points
        })
        .collect()
}

/// Orbit character from the finite-time separation-growth exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitClass {
    Regular,
    Chaotic,
}

/// Result of [`classify_orbit`].
#[derive(Debug, Clone, Copy)]
pub struct ClassifiedOrbit {
    /// Mean log separation growth per modulation period.
    pub exponent: f64,
    pub class: OrbitClass,
}

/// Initial offset between the fiducial and shadow orbits.
pub const CLASSIFY_OFFSET: f64 = 1e-8;

/// Separation growth above this rate (per period) is labeled chaotic. A
/// calibration constant, not physics; override via
/// [`classify_orbit_with_threshold`].
pub const CHAOS_THRESHOLD: f64 = 0.05;

/// Classify a deterministic orbit by the growth of an infinitesimal
/// perturbation: a shadow orbit is offset by 1e−8 in x, both are advanced
/// period by period, and the shadow is rescaled back to the initial offset
/// after each period. The exponent is the mean of ln(growth) per period over
/// `params.n_periods` periods.
pub fn classify_orbit(x0: f64, p0: f64, params: &SimParams) -> ClassifiedOrbit {
    classify_orbit_with_threshold(x0, p0, params, CHAOS_THRESHOLD)
}

pub fn classify_orbit_with_threshold(
    x0: f64,
    p0: f64,
    params: &SimParams,
    threshold: f64,
) -> ClassifiedOrbit {
    let dt = params.dt();
    let mut a = ClassicalState::new(x0, p0);
    let mut b = ClassicalState::new(x0 + CLASSIFY_OFFSET, p0);
    let mut log_sum = 0.0;
    for _ in 0..params.n_periods {
        for _ in 0..params.steps_per_period {
            deterministic_step4(&mut a, dt, params);
            deterministic_step4(&mut b, dt, params);
        }
        let dx = min_image(b.x - a.x);
        let dp = b.p - a.p;
        let d = (dx * dx + dp * dp).sqrt();
        log_sum += (d / CLASSIFY_OFFSET).ln();
        // Pull the shadow back to the fiducial offset along the current
        // separation direction.
        let scale = CLASSIFY_OFFSET / d;
        b.x = a.x + dx * scale;
        b.p = a.p + dp * scale;
        b.time = a.time;
    }
    let exponent = log_sum / params.n_periods as f64;
    let class = if exponent > threshold {
        OrbitClass::Chaotic
    } else {
        OrbitClass::Regular
    };
    ClassifiedOrbit { exponent, class }
}

/// Center and variances of the classical initial distribution (the Q
/// function of the quantum initial state).
#[derive(Debug, Clone, Copy)]
pub struct QInitParams {
    pub x0: f64,
    pub p0: f64,
    /// Position variance δ_x.
    pub delta_x: f64,
    /// Momentum variance δ_p.
    pub delta_p: f64,
}

impl QInitParams {
    pub fn new(x0: f64, p0: f64, delta_x: f64, delta_p: f64) -> Result<Self> {
        if !(delta_x.is_finite() && delta_x > 0.0) {
            return Err(Error::invalid("delta_x", "must be finite and > 0"));
        }
        if !(delta_p.is_finite() && delta_p > 0.0) {
            return Err(Error::invalid("delta_p", "must be finite and > 0"));
        }
        Ok(QInitParams {
            x0,
            p0,
            delta_x,
            delta_p,
        })
    }

    /// The variance relations tying the classical cloud to the quantum
    /// initial state: δ_x = k̄²/(2ξ) + k̄²/(4σ_x), δ_p = k̄√ξ/2 + σ_p.
    /// They are adopted verbatim; σ_p is the quantum momentum variance.
    pub fn from_widths(x0: f64, p0: f64, kbar: f64, xi: f64, sigma_x: f64, sigma_p: f64) -> Result<Self> {
        if !(xi > 0.0) {
            return Err(Error::invalid("xi", "Q-function widths need xi > 0"));
        }
        if !(sigma_x > 0.0) {
            return Err(Error::invalid("sigma_x", "must be > 0"));
        }
        let delta_x = kbar * kbar / (2.0 * xi) + kbar * kbar / (4.0 * sigma_x);
        let delta_p = kbar * xi.sqrt() / 2.0 + sigma_p;
        Self::new(x0, p0, delta_x, delta_p)
    }

    /// Widths for a simulation's quantum initial state, taking the
    /// minimum-uncertainty momentum variance σ_p = k̄²/(4σ_x).
    pub fn from_quantum(params: &SimParams) -> Result<Self> {
        let sigma_p = params.kbar * params.kbar / (4.0 * params.sigma_x);
        Self::from_widths(
            params.x0,
            params.p0,
            params.kbar,
            params.xi,
            params.sigma_x,
            sigma_p,
        )
    }
}

/// One bivariate-Gaussian draw: the first two normals of `stream` become the
/// position and momentum offsets, in that order (trajectory path noise
/// continues from the same stream afterwards).
pub fn sample_q_single(q: &QInitParams, stream: &mut NoiseStream) -> ClassicalState {
    let zx = stream.standard_normal();
    let zp = stream.standard_normal();
    ClassicalState::new(q.x0 + q.delta_x.sqrt() * zx, q.p0 + q.delta_p.sqrt() * zp)
}

/// `n` independent draws from one stream.
pub fn sample_q_initial(q: &QInitParams, n: usize, stream: &mut NoiseStream) -> ClassicalEnsemble {
    (0..n).map(|_| sample_q_single(q, stream)).collect()
}
