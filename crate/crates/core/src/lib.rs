//! Conditional dynamics of a single atom in a modulated intracavity standing
//! wave, observed continuously through homodyne detection of the output light.
//!
//! The library works in scaled units throughout: position is measured in
//! half-wavelengths of the standing wave (one period of the potential is
//! `2π`), time in periods of the drive modulation divided by `2π`, and the
//! commutator `[x, p] = i k̄` carries an effective Planck constant `k̄` set by
//! the physical parameters. The conditioned state obeys a nonlinear stochastic
//! Schrödinger equation driven by the measurement record; averaging over
//! records recovers the unconditional master equation.
//!
//! Module map:
//!
//! * [`params`] — physical cavity/atom parameters and their reduction to the
//!   dimensionless set `(k̄, ξ, D)`, plus the drive modulation.
//! * [`grid`] — periodic position grid and its FFT-conjugate momentum grid.
//! * [`wavefunction`] — states on the grid, Gaussian preparation,
//!   expectation values, binary state dumps.
//! * [`noise`] — counter-based per-trajectory Wiener streams.
//! * [`propagator`] — split-operator integration of the conditioned
//!   Schrödinger equation (normalized and linear-unnormalized forms).
//! * [`oracle`] — slow dense-matrix propagator and master-equation
//!   integrator used as independent cross-checks.
//! * [`classical`] — the classical conditioned phase-space dynamics:
//!   stochastic kicks, stroboscopic portraits, orbit classification.
//! * [`wigner`] — Wigner quasiprobability on the periodic grid.
//! * [`stats`] — Hilbert-space angles between trajectory snapshots,
//!   histograms and ensemble moments.

pub mod classical;
pub mod error;
pub mod fft;
pub mod grid;
pub mod math;
pub mod noise;
pub mod oracle;
pub mod params;
pub mod propagator;
pub mod stats;
pub mod wavefunction;
pub mod wigner;

pub use error::Error;

/// Complex double, the amplitude type used everywhere.
pub type C64 = num_complex::Complex64;

/// Result alias for fallible library operations.
pub type Result<T> = std::result::Result<T, Error>;
