//! States on the periodic grid: preparation, expectation values, and a
//! little-endian binary dump format for exchanging states between runs.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::Error;
use crate::fft::FftPair;
use crate::grid::Grid;
use crate::math::{dot_conj, gaussian_tail_mass, min_image, pairwise_sum};
use crate::params::MAX_WRAP_MASS;
use crate::{Result, C64};

/// Magic bytes opening a state dump, `b"QPENDWF1"`.
pub const DUMP_MAGIC: [u8; 8] = *b"QPENDWF1";
/// Current dump format version.
pub const DUMP_VERSION: u64 = 1;

/// A wavefunction sampled on a [`Grid`], normalized so `Σ|ψ|²·dx = 1`
/// (enforced by the constructors; evolution code renormalizes explicitly).
#[derive(Debug, Clone)]
pub struct WaveFunction {
    grid: Arc<Grid>,
    /// Amplitudes at the grid positions.
    pub amps: Vec<C64>,
    /// Scaled time the state belongs to.
    pub time: f64,
}

impl WaveFunction {
    /// Wrap raw amplitudes without normalizing. Internal building block.
    pub fn from_amps(grid: Arc<Grid>, amps: Vec<C64>, time: f64) -> Self {
        assert_eq!(amps.len(), grid.n, "amplitude count must match the grid");
        WaveFunction { grid, amps, time }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// `Σ|ψ|²·dx`, the squared L2 norm under the grid measure.
    pub fn norm_sq(&self) -> f64 {
        let sq: Vec<f64> = self.amps.iter().map(|a| a.norm_sqr()).collect();
        pairwise_sum(&sq) * self.grid.dx
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Scale to unit norm. Returns the norm found before scaling.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm();
        assert!(norm > 0.0, "cannot normalize the zero state");
        let inv = 1.0 / norm;
        for a in &mut self.amps {
            *a *= inv;
        }
        norm
    }

    /// Inner product `⟨self|other⟩ = Σ ψ*·φ·dx` via pairwise summation.
    pub fn overlap(&self, other: &WaveFunction) -> C64 {
        assert!(
            self.grid.n == other.grid.n && self.grid.kbar == other.grid.kbar,
            "overlap requires matching grids"
        );
        dot_conj(&self.amps, &other.amps) * self.grid.dx
    }

    /// Position probability density `|ψ(x_j)|²`.
    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Circular mean position: the argument of `Σ|ψ|² e^{ix}`.
    /// Well defined for any state that is not uniformly spread.
    pub fn circular_mean_x(&self) -> f64 {
        let mut s = 0.0;
        let mut c = 0.0;
        for (a, &x) in self.amps.iter().zip(&self.grid.x) {
            let w = a.norm_sqr();
            s += w * x.sin();
            c += w * x.cos();
        }
        s.atan2(c)
    }

    /// Position variance about `center`, displacements taken minimum-image.
    pub fn variance_x_about(&self, center: f64) -> f64 {
        let terms: Vec<f64> = self
            .amps
            .iter()
            .zip(&self.grid.x)
            .map(|(a, &x)| {
                let d = min_image(x - center);
                a.norm_sqr() * d * d
            })
            .collect();
        pairwise_sum(&terms) * self.grid.dx / self.norm_sq()
    }

    /// Momentum-space amplitudes (raw DFT coefficients, FFT bin order).
    /// `|F_m|²` weights are proportional to the momentum distribution.
    pub fn momentum_spectrum(&self) -> Vec<C64> {
        let mut buf = self.amps.clone();
        FftPair::new(self.grid.n).forward(&mut buf);
        buf
    }

    /// `(⟨p⟩, ⟨p²⟩)` evaluated in the momentum basis.
    pub fn momentum_moments(&self) -> (f64, f64) {
        let spec = self.momentum_spectrum();
        let w: Vec<f64> = spec.iter().map(|z| z.norm_sqr()).collect();
        let total = pairwise_sum(&w);
        let wp: Vec<f64> = w.iter().zip(&self.grid.p).map(|(wi, &p)| wi * p).collect();
        let wp2: Vec<f64> = w
            .iter()
            .zip(&self.grid.p)
            .map(|(wi, &p)| wi * p * p)
            .collect();
        (pairwise_sum(&wp) / total, pairwise_sum(&wp2) / total)
    }

    /// `(⟨J⟩, ⟨J²⟩)` for the measured quadrature `J(x) = -cos x`.
    pub fn j_moments(&self) -> (f64, f64) {
        let mut wj = 0.0;
        let mut wj2 = 0.0;
        let mut total = 0.0;
        for (a, &x) in self.amps.iter().zip(&self.grid.x) {
            let w = a.norm_sqr();
            let j = -x.cos();
            total += w;
            wj += w * j;
            wj2 += w * j * j;
        }
        (wj / total, wj2 / total)
    }

    /// Pendulum energy `⟨p²⟩/2 - xi·⟨cos x⟩` at well depth `xi`.
    pub fn mean_h0(&self, xi: f64) -> f64 {
        let (_, p2) = self.momentum_moments();
        let (j, _) = self.j_moments();
        // ⟨cos x⟩ = -⟨J⟩
        0.5 * p2 + xi * j
    }

    /// Write the state in the binary dump format: magic, version, `n`,
    /// `kbar`, `time` as little-endian 64-bit values, then `n` interleaved
    /// `(re, im)` doubles.
    pub fn write_dump<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        w.write_all(&self.grid.kbar.to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Read a state written by [`WaveFunction::write_dump`].
    pub fn read_dump<R: Read>(r: &mut R) -> Result<WaveFunction> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        if head != DUMP_MAGIC {
            return Err(Error::BadDump("magic mismatch".into()));
        }
        let version = read_u64(r)?;
        if version != DUMP_VERSION {
            return Err(Error::BadDump(format!("unsupported version {version}")));
        }
        let n = read_u64(r)? as usize;
        let kbar = read_f64(r)?;
        let time = read_f64(r)?;
        if !kbar.is_finite() || kbar <= 0.0 {
            return Err(Error::BadDump(format!("bad kbar {kbar}")));
        }
        let grid = Grid::new(n, kbar).map_err(|e| Error::BadDump(e.to_string()))?;
        let mut amps = Vec::with_capacity(n);
        for _ in 0..n {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            amps.push(C64::new(re, im));
        }
        Ok(WaveFunction::from_amps(grid, amps, time))
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Minimum-uncertainty Gaussian `ψ(x) ∝ exp[-(x-x0)²/(4 σx) + i p0 x / kbar]`
/// centered at `(x0, p0)` with position variance `sigma_x`, the displacement
/// taken minimum-image so the packet may straddle the periodic seam.
///
/// The conjugate variance is `Var(p) = kbar²/(4 σx)`. Rejects packets whose
/// wrap-around tail mass exceeds the supported bound, and centers placed
/// outside `[-π, π]`.
pub fn gaussian_state(grid: &Arc<Grid>, x0: f64, p0: f64, sigma_x: f64) -> Result<WaveFunction> {
    if !(sigma_x.is_finite() && sigma_x > 0.0) {
        return Err(Error::invalid("sigma_x", "must be finite and > 0"));
    }
    if !p0.is_finite() {
        return Err(Error::invalid("p0", "must be finite"));
    }
    if !(x0.is_finite() && x0.abs() <= std::f64::consts::PI) {
        return Err(Error::invalid("x0", "must lie in [-pi, pi]"));
    }
    let wrap = gaussian_tail_mass(sigma_x, std::f64::consts::PI);
    if wrap > MAX_WRAP_MASS {
        return Err(Error::invalid(
            "sigma_x",
            format!("wrap-around mass {wrap:.2e} exceeds {MAX_WRAP_MASS:.0e}"),
        ));
    }
    let amps = grid
        .x
        .iter()
        .map(|&x| {
            let d = min_image(x - x0);
            let envelope = (-d * d / (4.0 * sigma_x)).exp();
            let phase = p0 * x / grid.kbar;
            C64::from_polar(envelope, phase)
        })
        .collect();
    let mut psi = WaveFunction::from_amps(grid.clone(), amps, 0.0);
    psi.normalize();
    Ok(psi)
}
