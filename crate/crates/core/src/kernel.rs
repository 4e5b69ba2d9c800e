//! Dirichlet-kernel structure of the beamspace continuum.
//!
//! A single path at a continuous virtual location (m*, n*) produces, at the
//! integer grid cell (m, n), the value
//!
//! ```text
//!   alpha * D(vphi, vtheta) * exp(-j pi vtheta (N-1)) * exp(+j pi vphi (M-1)),
//!   vphi = (m - m*)/M,   vtheta = (n - n*)/N,
//! ```
//!
//! where `D` is the two-dimensional Dirichlet kernel below. Sampling this
//! expression at all integer cells gives the beamspace matrix of the path;
//! evaluating it at continuous (m, n) gives the spectrum between grid
//! points. The phase orientation (receive phase over transmit phase) is
//! pinned against the two-sided DFT projection in unit tests, so the kernel
//! route and the matrix route stay interchangeable to 1e-10.
//!
//! Everything here is expressed in virtual peak coordinates, which absorb
//! the element spacing; only the angle <-> peak maps depend on it.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::channel::{BeamspaceMatrix, MultipathComponent, UlaConfig};
use crate::error::{Error, Result};

/// Below this magnitude of sin(pi x), the Dirichlet ratio switches to its
/// analytic limit to avoid catastrophic cancellation at integer arguments.
const SINGULARITY_GUARD: f64 = 1e-9;

/// One recovered path in the virtual domain: a continuous peak location
/// (periodic coordinates in [1, M+1) x [1, N+1)) and its complex strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualPeak {
    pub m_star: f64,
    pub n_star: f64,
    pub strength: Complex64,
}

impl VirtualPeak {
    /// Stores the peak with both coordinates reduced modulo the grid periods.
    pub fn new(m_star: f64, n_star: f64, strength: Complex64, config: &UlaConfig) -> Self {
        Self {
            m_star: reduce_peak_coord(m_star, config.num_bs_antennas),
            n_star: reduce_peak_coord(n_star, config.num_ue_antennas),
            strength,
        }
    }

    /// Distance of the peak from the nearest integer cell, per coordinate.
    pub fn fractional_offsets(&self) -> (f64, f64) {
        let frac = |x: f64| {
            let r = (x - 1.0).rem_euclid(1.0);
            r.min(1.0 - r)
        };
        (frac(self.m_star), frac(self.n_star))
    }
}

/// Maps a coordinate into the periodic range [1, K+1).
pub fn reduce_peak_coord(x: f64, period: usize) -> f64 {
    (x - 1.0).rem_euclid(period as f64) + 1.0
}

/// The ratio sin(pi x K) / sin(pi x), with the removable singularities at
/// integer x evaluated by the L'Hopital limit K cos(pi x K)/cos(pi x).
pub fn dirichlet_ratio(x: f64, k: usize) -> f64 {
    let s = (PI * x).sin();
    if s.abs() < SINGULARITY_GUARD {
        k as f64 * (PI * x * k as f64).cos() / (PI * x).cos()
    } else {
        (PI * x * k as f64).sin() / s
    }
}

/// Two-dimensional Dirichlet kernel; exactly 1 at the origin.
pub fn dirichlet_kernel(varphi: f64, vartheta: f64, m: usize, n: usize) -> f64 {
    dirichlet_ratio(varphi, m) * dirichlet_ratio(vartheta, n) / (m as f64 * n as f64)
}

/// Complex beamspace value of a unit-strength path at kernel-argument
/// offsets (varphi, vartheta): Dirichlet kernel times the grid phase ramp.
pub fn beamspace_kernel_value(varphi: f64, vartheta: f64, m: usize, n: usize) -> Complex64 {
    let d = dirichlet_kernel(varphi, vartheta, m, n);
    let phase = PI * (varphi * (m as f64 - 1.0) - vartheta * (n as f64 - 1.0));
    Complex64::from_polar(1.0, phase) * d
}

/// Continuous virtual peak coordinate of a departure angle.
///
/// The grid places sines uniformly over [-1, 1), so a path whose sine is s
/// peaks at 1 + M (1 + 2 d s)/2, reduced into [1, M+1). With d = 0.5 this
/// is 1 + M (1 + s)/2.
pub fn peak_from_aod(config: &UlaConfig, phi: f64) -> f64 {
    let m = config.num_bs_antennas as f64;
    reduce_peak_coord(
        1.0 + m * (1.0 + 2.0 * config.element_spacing * phi.sin()) / 2.0,
        config.num_bs_antennas,
    )
}

/// Continuous virtual peak coordinate of an arrival angle.
pub fn peak_from_aoa(config: &UlaConfig, theta: f64) -> f64 {
    let n = config.num_ue_antennas as f64;
    reduce_peak_coord(
        1.0 + n * (1.0 + 2.0 * config.element_spacing * theta.sin()) / 2.0,
        config.num_ue_antennas,
    )
}

/// Normalized steering vector parameterized by a virtual peak coordinate:
/// entry k = exp(j 2 pi (k-1) ((peak-1)/K - 1/2)) / sqrt(K).
///
/// At integer peaks this reproduces the corresponding dictionary column;
/// between them it is the physical array response of the off-grid path.
pub fn steering_from_peak(len: usize, peak: f64) -> Array1<Complex64> {
    let k = len as f64;
    let scale = 1.0 / k.sqrt();
    let slope = 2.0 * PI * ((peak - 1.0) / k - 0.5);
    Array1::from_shape_fn(len, |i| Complex64::from_polar(scale, slope * i as f64))
}

fn check_peak(x: f64, period: usize, name: &str) -> Result<()> {
    if !(x.is_finite() && x >= 1.0 && x < period as f64 + 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {x} outside the periodic range [1, {})",
            period + 1
        )));
    }
    Ok(())
}

/// Beamspace matrix of one continuous-valued path: the Dirichlet expression
/// sampled at every integer cell. At integer peaks with unit strength the
/// result is one-hot.
pub fn dirichlet_atom(
    m_star: f64,
    n_star: f64,
    strength: Complex64,
    config: &UlaConfig,
) -> Result<BeamspaceMatrix> {
    let m = config.num_bs_antennas;
    let n = config.num_ue_antennas;
    check_peak(reduce_peak_coord(m_star, m), m, "m_star")?;
    check_peak(reduce_peak_coord(n_star, n), n, "n_star")?;
    let mut matrix = Array2::zeros((n, m));
    for row in 0..n {
        let vt = (row as f64 + 1.0 - n_star) / n as f64;
        for col in 0..m {
            let vp = (col as f64 + 1.0 - m_star) / m as f64;
            matrix[[row, col]] = strength * beamspace_kernel_value(vp, vt, m, n);
        }
    }
    Ok(BeamspaceMatrix { matrix })
}

/// [`dirichlet_atom`] for a [`VirtualPeak`].
pub fn atom_of(peak: &VirtualPeak, config: &UlaConfig) -> Result<BeamspaceMatrix> {
    dirichlet_atom(peak.m_star, peak.n_star, peak.strength, config)
}

/// Beamspace continuum of a path list evaluated at one continuous point.
///
/// At integer (m, n) this agrees with the corresponding entry of the
/// DFT-projected beamspace matrix.
pub fn dtft_spectrum(
    paths: &[MultipathComponent],
    config: &UlaConfig,
    m_star: f64,
    n_star: f64,
) -> Result<Complex64> {
    let m = config.num_bs_antennas;
    let n = config.num_ue_antennas;
    check_peak(m_star, m, "m_star")?;
    check_peak(n_star, n, "n_star")?;
    let mut total = Complex64::new(0.0, 0.0);
    for path in paths {
        let pm = peak_from_aod(config, path.aod);
        let pn = peak_from_aoa(config, path.aoa);
        let vp = (m_star - pm) / m as f64;
        let vt = (n_star - pn) / n as f64;
        total += path.gain * beamspace_kernel_value(vp, vt, m, n);
    }
    Ok(total)
}
