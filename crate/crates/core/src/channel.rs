//! Physical channel synthesis and the beamspace (virtual) representation.
//!
//! A narrowband link between two uniform linear arrays is modeled as a sum
//! of rank-1 multipath components. Projecting the channel matrix onto
//! centered unitary DFT dictionaries on both array ends yields the
//! beamspace matrix, which is sparse whenever path angles align with the
//! dictionary grid.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{conj_t, fro_norm};

/// Geometry of the two uniform linear arrays and their angular grids.
///
/// Grid sizes equal the antenna counts, so both dictionaries are square
/// unitary DFT matrices. `element_spacing` is in carrier wavelengths;
/// the beamspace grid spans the full sine range only at the default 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct UlaConfig {
    /// Transmit-side antenna count M.
    pub num_bs_antennas: usize,
    /// Receive-side antenna count N.
    pub num_ue_antennas: usize,
    /// Transmit-side grid size (equals M).
    pub grid_bs: usize,
    /// Receive-side grid size (equals N).
    pub grid_ue: usize,
    /// Inter-element spacing in wavelengths.
    pub element_spacing: f64,
}

impl UlaConfig {
    /// Half-wavelength arrays with square grids.
    pub fn new(num_bs_antennas: usize, num_ue_antennas: usize) -> Result<Self> {
        Self::with_spacing(num_bs_antennas, num_ue_antennas, 0.5)
    }

    /// Same as [`UlaConfig::new`] with explicit element spacing.
    pub fn with_spacing(
        num_bs_antennas: usize,
        num_ue_antennas: usize,
        element_spacing: f64,
    ) -> Result<Self> {
        if num_bs_antennas == 0 || num_ue_antennas == 0 {
            return Err(Error::InvalidParameter(
                "antenna counts must be at least 1".into(),
            ));
        }
        if !(element_spacing > 0.0) {
            return Err(Error::InvalidParameter(
                "element spacing must be positive".into(),
            ));
        }
        Ok(Self {
            num_bs_antennas,
            num_ue_antennas,
            grid_bs: num_bs_antennas,
            grid_ue: num_ue_antennas,
            element_spacing,
        })
    }
}

/// One propagation path: complex gain plus departure/arrival angles in
/// radians, both restricted to [-pi/2, pi/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipathComponent {
    pub gain: Complex64,
    pub aod: f64,
    pub aoa: f64,
}

impl MultipathComponent {
    pub fn new(gain: Complex64, aod: f64, aoa: f64) -> Result<Self> {
        check_angle(aod)?;
        check_angle(aoa)?;
        Ok(Self { gain, aod, aoa })
    }
}

/// A synthesized channel: the path list and the dense N x M matrix they sum to.
#[derive(Debug, Clone)]
pub struct PhysicalChannel {
    pub paths: Vec<MultipathComponent>,
    pub matrix: Array2<Complex64>,
}

/// The channel expressed on the DFT grids: an N x M complex matrix with the
/// same Frobenius norm as the antenna-space channel.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamspaceMatrix {
    pub matrix: Array2<Complex64>,
}

impl BeamspaceMatrix {
    pub fn frobenius_norm(&self) -> f64 {
        fro_norm(&self.matrix.view())
    }
}

fn check_angle(angle: f64) -> Result<()> {
    if !(angle.is_finite() && angle.abs() <= PI / 2.0 + 1e-12) {
        return Err(Error::AngleOutOfRange(angle));
    }
    Ok(())
}

fn steering(len: usize, spacing: f64, angle: f64) -> Array1<Complex64> {
    let scale = 1.0 / (len as f64).sqrt();
    let slope = 2.0 * PI * spacing * angle.sin();
    Array1::from_shape_fn(len, |k| {
        Complex64::from_polar(scale, slope * k as f64)
    })
}

/// Normalized transmit-array response, entry m = exp(j 2 pi d (m-1) sin phi) / sqrt(M).
pub fn array_response_bs(config: &UlaConfig, phi: f64) -> Result<Array1<Complex64>> {
    check_angle(phi)?;
    Ok(steering(config.num_bs_antennas, config.element_spacing, phi))
}

/// Normalized receive-array response over N elements.
pub fn array_response_ue(config: &UlaConfig, theta: f64) -> Result<Array1<Complex64>> {
    check_angle(theta)?;
    Ok(steering(config.num_ue_antennas, config.element_spacing, theta))
}

/// Centered unitary DFT dictionary of size K.
///
/// Entry (k, k') = exp(j 2 pi (k-1) ((k'-1)/K - 1/2)) / sqrt(K); column k'
/// equals the array response at the grid angle whose sine is 2(k'-1)/K - 1.
pub fn dft_dictionary(size: usize) -> Result<Array2<Complex64>> {
    if size == 0 {
        return Err(Error::InvalidParameter("dictionary size must be >= 1".into()));
    }
    let k = size as f64;
    let scale = 1.0 / k.sqrt();
    Ok(Array2::from_shape_fn((size, size), |(row, col)| {
        let phase = 2.0 * PI * row as f64 * (col as f64 / k - 0.5);
        Complex64::from_polar(scale, phase)
    }))
}

/// Sums rank-1 outer products over the path list.
pub fn build_channel(
    config: &UlaConfig,
    paths: Vec<MultipathComponent>,
) -> Result<PhysicalChannel> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("path list must be nonempty".into()));
    }
    let n = config.num_ue_antennas;
    let m = config.num_bs_antennas;
    let mut matrix = Array2::zeros((n, m));
    for path in &paths {
        let a_ue = array_response_ue(config, path.aoa)?;
        let a_bs = array_response_bs(config, path.aod)?;
        for i in 0..n {
            for j in 0..m {
                matrix[[i, j]] += path.gain * a_ue[i] * a_bs[j].conj();
            }
        }
    }
    Ok(PhysicalChannel { paths, matrix })
}

/// Two-sided DFT projection `A_ue^H H A_bs`.
pub fn to_beamspace(channel: &PhysicalChannel, config: &UlaConfig) -> Result<BeamspaceMatrix> {
    beamspace_of(&channel.matrix, config)
}

/// [`to_beamspace`] on a raw channel matrix.
pub fn beamspace_of(h: &Array2<Complex64>, config: &UlaConfig) -> Result<BeamspaceMatrix> {
    let (n, m) = h.dim();
    if n != config.num_ue_antennas || m != config.num_bs_antennas {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{} but config expects {}x{}",
            n, m, config.num_ue_antennas, config.num_bs_antennas
        )));
    }
    let a_bs = dft_dictionary(config.grid_bs)?;
    let a_ue = dft_dictionary(config.grid_ue)?;
    let matrix = conj_t(&a_ue.view()).dot(h).dot(&a_bs);
    Ok(BeamspaceMatrix { matrix })
}

/// Inverse of [`to_beamspace`]: `A_ue H_v A_bs^H` back in antenna space.
pub fn from_beamspace(beamspace: &BeamspaceMatrix, config: &UlaConfig) -> Result<Array2<Complex64>> {
    let (n, m) = beamspace.matrix.dim();
    if n != config.grid_ue || m != config.grid_bs {
        return Err(Error::DimensionMismatch(format!(
            "beamspace is {}x{} but config expects {}x{}",
            n, m, config.grid_ue, config.grid_bs
        )));
    }
    let a_bs = dft_dictionary(config.grid_bs)?;
    let a_ue = dft_dictionary(config.grid_ue)?;
    Ok(a_ue.dot(&beamspace.matrix).dot(&conj_t(&a_bs.view())))
}
