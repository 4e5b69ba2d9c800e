//! Dirichlet-aware pursuit with lobe-ratio peak interpolation.
//!
//! Each atom estimate locates the strongest grid cell, solves a five-cell
//! least-squares neighborhood, interpolates a fractional offset per axis
//! (main-lobe ratio or three-sample rule), and recovers the continuous
//! peak strength; the shared pursuit driver handles subtraction, stopping,
//! and cross-path refinement.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{atom_of, VirtualPeak};
use crate::linalg::vec_cm;

use super::offsets::{mlb_offset, mslb_offset, peak_strength};
use super::pursuit::{pursue, Proposal};
use super::{match_step, neighborhood_ls, EstimateResult, EstimatorConfig, SensingOperator};

#[derive(Clone, Copy)]
enum OffsetRule {
    MainLobe,
    MainAndSideLobe,
}

/// Pursuit with main-lobe ratio interpolation.
pub fn domp_mlb(
    y: &ArrayView1<Complex64>,
    op: &SensingOperator,
    config: &EstimatorConfig,
) -> Result<EstimateResult> {
    let mut iteration = 0usize;
    pursue(y, op, config, |op, residual| {
        iteration += 1;
        estimate_one(op, residual, OffsetRule::MainLobe, iteration)
    })
}

/// Pursuit with the bias-corrected three-sample interpolation; falls back
/// to the main-lobe rule on a vanishing interpolation denominator.
pub fn domp_mslb(
    y: &ArrayView1<Complex64>,
    op: &SensingOperator,
    config: &EstimatorConfig,
) -> Result<EstimateResult> {
    let mut iteration = 0usize;
    pursue(y, op, config, |op, residual| {
        iteration += 1;
        estimate_one(op, residual, OffsetRule::MainAndSideLobe, iteration)
    })
}

fn offset_along_axis(
    rule: OffsetRule,
    center: Complex64,
    plus: Complex64,
    minus: Complex64,
    grid_size: usize,
) -> Result<f64> {
    match rule {
        OffsetRule::MainLobe => mlb_offset(center, plus, minus),
        OffsetRule::MainAndSideLobe => match mslb_offset(center, plus, minus, grid_size) {
            Ok(delta) => Ok(delta),
            Err(Error::DegenerateInput(_)) => mlb_offset(center, plus, minus),
            Err(e) => Err(e),
        },
    }
}

fn estimate_one(
    op: &SensingOperator,
    residual: &Array1<Complex64>,
    rule: OffsetRule,
    iteration: usize,
) -> Result<Proposal> {
    let ula = op.config();
    let m = ula.num_bs_antennas;
    let n = ula.num_ue_antennas;
    let (_, m1, n1) = match_step(op, &residual.view())?;
    let nb = neighborhood_ls(op, &residual.view(), m1, n1).map_err(|e| match e {
        Error::SingularSystem => Error::SingularAtIteration { iteration },
        other => other,
    })?;

    let delta_m = offset_along_axis(rule, nb.center, nb.m_plus, nb.m_minus, m)?;
    let delta_n = offset_along_axis(rule, nb.center, nb.n_plus, nb.n_minus, n)?;

    let m_star = m1 as f64 + delta_m;
    let n_star = n1 as f64 + delta_n;
    let strength = peak_strength(nb.center, m1, n1, m_star, n_star, ula)?;
    let peak = VirtualPeak::new(m_star, n_star, strength, ula);
    let atom = atom_of(&peak, ula)?;
    let image = op.matrix().dot(&vec_cm(&atom.matrix.view()));
    Ok((peak, image))
}
