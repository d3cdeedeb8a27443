//! Cavity/atom parameters and their reduction to dimensionless form.
//!
//! The lab-frame model is an atom of mass `M` in a standing wave with
//! wavenumber `k_L` inside a driven cavity (coupling `g`, drive amplitude
//! `E0`, detuning `Delta`, linewidth `kappa`), with the drive intensity
//! modulated at angular frequency `omega`. After adiabatic elimination of the
//! internal state and the cavity field, and after scaling position by
//! `2 k_L`, time by `omega`, and momentum accordingly, three numbers remain:
//!
//! * `kbar = 4 ħ k_L² / (M ω)` — scaled Planck constant, `[x, p] = i kbar`;
//! * `xi = (4 k_L² / (M ω²)) ħ χ` with `χ = 2 g² E0² / (Δ κ²)` — well depth;
//! * `d = D / ω` with `D = 2 g⁴ E0² / (Δ² κ³)` — measurement-induced
//!   momentum diffusion, which also sets the information gain rate of the
//!   homodyne record.
//!
//! The drive modulation multiplies both `xi` and `d` by
//! [`modulation_factor`], `m(t) = 1 - 2 ε cos t`.

use crate::error::Error;
use crate::math::gaussian_tail_mass;
use crate::Result;

/// CODATA value of the reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054571817e-34;

/// Largest admissible wrap-around tail mass for a Gaussian preparation.
/// States wider than this do not fit in a single well period.
pub const MAX_WRAP_MASS: f64 = 1e-6;

/// Raw physical parameters, SI units (rates in rad/s, `k_l` in 1/m,
/// `mass` in kg).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Atom-cavity coupling rate `g`.
    pub g: f64,
    /// Cavity drive amplitude `E0` (rate units).
    pub e0: f64,
    /// Atom-drive detuning `Delta`.
    pub delta: f64,
    /// Cavity field decay rate `kappa`.
    pub kappa: f64,
    /// Standing-wave wavenumber `k_L`.
    pub k_l: f64,
    /// Atomic mass `M`.
    pub mass: f64,
    /// Modulation angular frequency `omega`.
    pub omega: f64,
}

/// Validity thresholds for the adiabatic-elimination regime.
#[derive(Debug, Clone, Copy)]
pub struct AdiabaticThresholds {
    /// Require `delta >= min_detuning_ratio * g` (internal state slaved).
    pub min_detuning_ratio: f64,
    /// Require `e0 <= max_drive_ratio * kappa` (weak intracavity field).
    pub max_drive_ratio: f64,
}

impl Default for AdiabaticThresholds {
    fn default() -> Self {
        AdiabaticThresholds {
            min_detuning_ratio: 10.0,
            max_drive_ratio: 0.1,
        }
    }
}

/// The dimensionless triple produced by [`dimensionless_from_physical`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensionless {
    /// Scaled Planck constant `kbar`.
    pub kbar: f64,
    /// Scaled well depth `xi`.
    pub xi: f64,
    /// Scaled diffusion rate `d`.
    pub d: f64,
}

/// Reduce physical parameters to `(kbar, xi, d)` with default thresholds.
pub fn dimensionless_from_physical(pp: &PhysicalParams) -> Result<Dimensionless> {
    dimensionless_with_thresholds(pp, &AdiabaticThresholds::default())
}

/// Reduce physical parameters to `(kbar, xi, d)`.
///
/// Rejects non-positive inputs and parameter sets outside the adiabatic
/// regime the reduction assumes.
pub fn dimensionless_with_thresholds(
    pp: &PhysicalParams,
    th: &AdiabaticThresholds,
) -> Result<Dimensionless> {
    for (name, v) in [
        ("g", pp.g),
        ("e0", pp.e0),
        ("delta", pp.delta),
        ("kappa", pp.kappa),
        ("k_l", pp.k_l),
        ("mass", pp.mass),
        ("omega", pp.omega),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
        }
    }
    if pp.delta < th.min_detuning_ratio * pp.g {
        return Err(Error::Assumption(format!(
            "detuning delta = {:.3e} below {} * g = {:.3e}; internal state not adiabatic",
            pp.delta,
            th.min_detuning_ratio,
            th.min_detuning_ratio * pp.g
        )));
    }
    if pp.e0 > th.max_drive_ratio * pp.kappa {
        return Err(Error::Assumption(format!(
            "drive e0 = {:.3e} above {} * kappa = {:.3e}; cavity field not weak",
            pp.e0,
            th.max_drive_ratio,
            th.max_drive_ratio * pp.kappa
        )));
    }
    let kbar = 4.0 * HBAR * pp.k_l * pp.k_l / (pp.mass * pp.omega);
    let chi = 2.0 * pp.g * pp.g * pp.e0 * pp.e0 / (pp.delta * pp.kappa * pp.kappa);
    let xi = 4.0 * pp.k_l * pp.k_l / (pp.mass * pp.omega * pp.omega) * HBAR * chi;
    let big_d = 2.0 * pp.g.powi(4) * pp.e0 * pp.e0 / (pp.delta * pp.delta * pp.kappa.powi(3));
    Ok(Dimensionless {
        kbar,
        xi,
        d: big_d / pp.omega,
    })
}

/// Intensity modulation `m(t) = 1 - 2 ε cos t`, applied to both the well
/// depth and the diffusion rate. Period `2π` in scaled time.
#[inline]
pub fn modulation_factor(t: f64, epsilon: f64) -> f64 {
    1.0 - 2.0 * epsilon * t.cos()
}

/// Full dimensionless run description shared by the quantum and classical
/// integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// Scaled Planck constant.
    pub kbar: f64,
    /// Well depth at zero modulation.
    pub xi: f64,
    /// Diffusion rate at zero modulation.
    pub d: f64,
    /// Modulation depth, `0 ≤ ε < 0.5` so `m(t)` stays positive.
    pub epsilon: f64,
    /// Initial position (center of the Gaussian / classical cloud).
    pub x0: f64,
    /// Initial momentum.
    pub p0: f64,
    /// Initial position variance of the Gaussian preparation.
    pub sigma_x: f64,
    /// Number of position grid points (power of two).
    pub grid_size: usize,
    /// Integration steps per modulation period `2π`.
    pub steps_per_period: u32,
    /// Number of modulation periods to integrate.
    pub n_periods: u32,
    /// Ensemble size.
    pub n_traj: u64,
    /// Master seed for the trajectory noise streams.
    pub seed: u64,
}

impl SimParams {
    /// Canonical operating point used throughout the test suite: a shallow
    /// quantum pendulum (`kbar = 0.25`, `xi = 1.2`) with 20% modulation and a
    /// near-minimum-uncertainty preparation on the stable period-one island.
    pub fn baseline() -> Self {
        SimParams {
            kbar: 0.25,
            xi: 1.2,
            d: 0.001,
            epsilon: 0.2,
            x0: 0.0,
            p0: 1.0,
            sigma_x: 0.3906,
            grid_size: 256,
            steps_per_period: 200,
            n_periods: 200,
            n_traj: 100,
            seed: 0,
        }
    }

    /// Integration step in scaled time.
    pub fn dt(&self) -> f64 {
        std::f64::consts::TAU / self.steps_per_period as f64
    }

    /// Well depth at scaled time `t`.
    pub fn xi_at(&self, t: f64) -> f64 {
        self.xi * modulation_factor(t, self.epsilon)
    }

    /// Diffusion rate at scaled time `t`.
    pub fn d_at(&self, t: f64) -> f64 {
        self.d * modulation_factor(t, self.epsilon)
    }

    /// Check every field. Returns the first violation found.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kbar", self.kbar),
            ("xi", self.xi),
            ("d", self.d),
            ("epsilon", self.epsilon),
            ("x0", self.x0),
            ("p0", self.p0),
            ("sigma_x", self.sigma_x),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.kbar <= 0.0 {
            return Err(Error::invalid("kbar", "must be > 0"));
        }
        if self.xi < 0.0 {
            return Err(Error::invalid("xi", "must be >= 0"));
        }
        if self.d < 0.0 {
            return Err(Error::invalid("d", "must be >= 0"));
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(Error::invalid(
                "epsilon",
                "must lie in [0, 0.5) so the modulated intensity stays positive",
            ));
        }
        if self.x0.abs() > std::f64::consts::PI {
            return Err(Error::invalid("x0", "must lie in [-pi, pi]"));
        }
        if self.sigma_x <= 0.0 {
            return Err(Error::invalid("sigma_x", "must be > 0"));
        }
        let wrap = gaussian_tail_mass(self.sigma_x, std::f64::consts::PI);
        if wrap > MAX_WRAP_MASS {
            return Err(Error::invalid(
                "sigma_x",
                format!(
                    "wrap-around mass {wrap:.2e} exceeds {MAX_WRAP_MASS:.0e}; state does not fit one period"
                ),
            ));
        }
        if !self.grid_size.is_power_of_two() || !(16..=8192).contains(&self.grid_size) {
            return Err(Error::invalid(
                "grid_size",
                "must be a power of two in 16..=8192",
            ));
        }
        if self.steps_per_period == 0 {
            return Err(Error::invalid("steps_per_period", "must be >= 1"));
        }
        if self.n_traj == 0 {
            return Err(Error::invalid("n_traj", "must be >= 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Build a physical set that lands exactly on the given dimensionless
    /// triple by inverting the reduction formulas. Free choices: `kappa`,
    /// the ratios `g/kappa` (via `a`), `e0/kappa` (via `b`), `delta/g`
    /// (via `r`), and the atomic mass.
    fn physical_for(kbar: f64, xi: f64, d: f64) -> PhysicalParams {
        let b = 0.08; // e0 / kappa, inside the weak-drive bound
        let r = 20.0; // delta / g, inside the adiabatic bound
        let mass = 2.2069e-25; // a cesium-ish atom
        let k_l = 7.3754e6; // optical standing wave

        // kbar fixes omega; xi then fixes chi; d fixes g/kappa.
        let omega = 4.0 * HBAR * k_l * k_l / (mass * kbar);
        let chi = xi * omega / kbar;
        let big_d = d * omega;
        // chi = 2 g^2 e0^2/(delta kappa^2) = (2 a^2 b^2 / r a) kappa = (2 a b^2/r) kappa
        // D   = 2 g^4 e0^2/(delta^2 kappa^3) = (2 a^2 b^2 / r^2) kappa
        // => D/chi = a / r  => a = r D / chi
        let a = r * big_d / chi;
        let kappa = chi * r / (2.0 * a * b * b);
        PhysicalParams {
            g: a * kappa,
            e0: b * kappa,
            delta: r * a * kappa,
            kappa,
            k_l,
            mass,
            omega,
        }
    }

    #[test]
    fn reduction_hits_requested_triple() {
        let pp = physical_for(0.25, 1.2, 0.001);
        let dl = dimensionless_from_physical(&pp).unwrap();
        assert_relative_eq!(dl.kbar, 0.25, max_relative = 1e-12);
        assert_relative_eq!(dl.xi, 1.2, max_relative = 1e-12);
        assert_relative_eq!(dl.d, 0.001, max_relative = 1e-12);
    }

    #[test]
    fn reduction_is_scale_invariant() {
        // Scaling all rates by c and k_l by sqrt(c) leaves the triple fixed.
        let pp = physical_for(0.25, 1.2, 0.001);
        let c = 3.7;
        let scaled = PhysicalParams {
            g: c * pp.g,
            e0: c * pp.e0,
            delta: c * pp.delta,
            kappa: c * pp.kappa,
            k_l: c.sqrt() * pp.k_l,
            mass: pp.mass,
            omega: c * pp.omega,
        };
        let a = dimensionless_from_physical(&pp).unwrap();
        let b = dimensionless_from_physical(&scaled).unwrap();
        assert_relative_eq!(a.kbar, b.kbar, max_relative = 1e-12);
        assert_relative_eq!(a.xi, b.xi, max_relative = 1e-12);
        assert_relative_eq!(a.d, b.d, max_relative = 1e-12);
    }

    #[test]
    fn reduction_rejects_non_adiabatic_detuning() {
        let mut pp = physical_for(0.25, 1.2, 0.001);
        pp.delta = 5.0 * pp.g;
        assert!(matches!(
            dimensionless_from_physical(&pp),
            Err(Error::Assumption(_))
        ));
    }

    #[test]
    fn reduction_rejects_strong_drive() {
        let mut pp = physical_for(0.25, 1.2, 0.001);
        pp.e0 = 0.2 * pp.kappa;
        assert!(matches!(
            dimensionless_from_physical(&pp),
            Err(Error::Assumption(_))
        ));
    }

    #[test]
    fn reduction_rejects_nonpositive_input() {
        let mut pp = physical_for(0.25, 1.2, 0.001);
        pp.mass = 0.0;
        assert!(dimensionless_from_physical(&pp).is_err());
    }

    #[test]
    fn modulation_reference_points() {
        assert_abs_diff_eq!(modulation_factor(0.0, 0.2), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(modulation_factor(std::f64::consts::PI, 0.2), 1.4, epsilon = 1e-15);
        assert_abs_diff_eq!(modulation_factor(1.234, 0.0), 1.0, epsilon = 0.0);
    }

    #[test]
    fn modulation_has_period_two_pi() {
        for k in 0..10 {
            let t = 0.321 + 0.613 * k as f64;
            assert_abs_diff_eq!(
                modulation_factor(t, 0.3),
                modulation_factor(t + std::f64::consts::TAU, 0.3),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn modulation_stays_positive_below_half() {
        for k in 0..1000 {
            let t = k as f64 * 0.01;
            assert!(modulation_factor(t, 0.4999) > 0.0);
        }
    }

    #[test]
    fn baseline_validates() {
        SimParams::baseline().validate().unwrap();
    }

    #[test]
    fn validate_rejects_epsilon_half() {
        let mut p = SimParams::baseline();
        p.epsilon = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn validate_rejects_wide_state() {
        let mut p = SimParams::baseline();
        p.sigma_x = 0.45; // wrap-around mass ~ 3e-6 > 1e-6
        assert!(p.validate().is_err());
    }

    #[test]
    fn validate_rejects_bad_grid() {
        let mut p = SimParams::baseline();
        p.grid_size = 100;
        assert!(p.validate().is_err());
        p.grid_size = 8;
        assert!(p.validate().is_err());
    }
}
