//! Fractional-offset estimators: main-lobe ratio, three-sample
//! bias-corrected interpolation, and peak-strength recovery.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::channel::UlaConfig;
use crate::error::{Error, Result};
use crate::kernel::beamspace_kernel_value;

fn min_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        (a / b).min(b / a)
    }
}

/// Main-lobe offset from the center estimate and its two axis neighbors.
///
/// The side holding the larger neighbor magnitude contains the main lobe;
/// the offset is half the smaller of the center/neighbor magnitude ratios,
/// so it always lands in [-1/2, 1/2]. Magnitudes are used because the lobe
/// shape argument concerns the amplitude spectrum; the raw complex ratio
/// would not stay in [0, 1].
pub fn mlb_offset(center: Complex64, plus: Complex64, minus: Complex64) -> Result<f64> {
    let c = center.norm();
    let p = plus.norm();
    let m = minus.norm();
    if c == 0.0 && p == 0.0 && m == 0.0 {
        return Err(Error::DegenerateInput(
            "all three lobe estimates are zero".into(),
        ));
    }
    if p > m {
        Ok(0.5 * min_ratio(c, p))
    } else {
        Ok(-0.5 * min_ratio(c, m))
    }
}

/// Bias-corrected three-sample offset (main and side lobe):
/// `tan(pi/K)/(pi/K) * Re((minus - plus) / (2 center - minus - plus))`,
/// clamped to [-1/2, 1/2].
///
/// Exact for noise-free uniform-array spectra at offsets 0 and +-1/2;
/// callers fall back to [`mlb_offset`] when the denominator vanishes.
pub fn mslb_offset(
    center: Complex64,
    plus: Complex64,
    minus: Complex64,
    grid_size: usize,
) -> Result<f64> {
    let denom = 2.0 * center - minus - plus;
    if denom.norm() <= 1e-12 * center.norm() {
        return Err(Error::DegenerateInput(
            "three-sample interpolation denominator vanished".into(),
        ));
    }
    let x = PI / grid_size as f64;
    let correction = x.tan() / x;
    let delta = correction * ((minus - plus) / denom).re;
    Ok(delta.clamp(-0.5, 0.5))
}

/// Recovers the continuous peak strength by dividing the center
/// least-squares estimate by the unit atom's value at the center cell.
pub fn peak_strength(
    center: Complex64,
    m1: usize,
    n1: usize,
    m_star: f64,
    n_star: f64,
    config: &UlaConfig,
) -> Result<Complex64> {
    let m = config.num_bs_antennas;
    let n = config.num_ue_antennas;
    if m_star == m1 as f64 && n_star == n1 as f64 {
        return Ok(center);
    }
    let vp = (m1 as f64 - m_star) / m as f64;
    let vt = (n1 as f64 - n_star) / n as f64;
    let unit = beamspace_kernel_value(vp, vt, m, n);
    if unit.norm() < 1e-9 {
        return Err(Error::DegenerateGeometry(format!(
            "atom value {:.3e} at cell ({m1},{n1}) for peak ({m_star:.4},{n_star:.4})",
            unit.norm()
        )));
    }
    Ok(center / unit)
}
