//! Shared pursuit driver for the Dirichlet-atom estimators.
//!
//! The greedy phase finds one atom per iteration and subtracts its image
//! from the residual, stopping at the residual tolerance, the `max_paths`
//! cap, or two consecutive non-decreasing residuals.
//!
//! A five-cell least-squares fit against a residual that still contains
//! other paths absorbs part of their energy, which biases the first
//! offsets whenever sampling is compressed. The refinement phase removes
//! that coupling: it cycles over the recovered paths, re-adds one atom at
//! a time, re-estimates it against the cleaner residual, and keeps the
//! replacement only when the residual norm drops. Each cycle shrinks the
//! cross-path coupling by roughly the dictionary coherence, so a handful
//! of cycles reaches the estimator's intrinsic accuracy.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::VirtualPeak;
use crate::linalg::vec_norm;

use super::{assemble_result, EstimateResult, EstimatorConfig, SensingOperator};

/// Upper bound on refinement sweeps; each sweep stops early once no
/// replacement improves the residual.
const MAX_REFINE_CYCLES: usize = 8;

/// Minimum relative residual improvement for accepting a replacement.
const REFINE_REL_IMPROVEMENT: f64 = 1e-12;

/// One atom proposal: the peak and its image under the sensing matrix.
pub(super) type Proposal = (VirtualPeak, Array1<Complex64>);

/// Runs greedy pursuit plus refinement with a caller-supplied single-atom
/// estimator (lobe interpolation or local search).
pub(super) fn pursue<F>(
    y: &ArrayView1<Complex64>,
    op: &SensingOperator,
    config: &EstimatorConfig,
    mut estimate_one: F,
) -> Result<EstimateResult>
where
    F: FnMut(&SensingOperator, &Array1<Complex64>) -> Result<Proposal>,
{
    let a = op.matrix();
    if a.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {} but sensing matrix has {} rows",
            y.len(),
            a.nrows()
        )));
    }
    let ula = op.config();

    let mut residual = y.to_owned();
    let mut prev_norm = vec_norm(&residual.view());
    let mut residual_history = Vec::new();
    let mut peaks: Vec<VirtualPeak> = Vec::new();
    let mut images: Vec<Array1<Complex64>> = Vec::new();
    let mut warning = false;
    let mut nondecreasing_streak = 0usize;

    while vec_norm(&residual.view()) > config.residual_tolerance
        && peaks.len() < config.max_paths
    {
        let (peak, image) = estimate_one(op, &residual)?;
        residual -= &image;
        peaks.push(peak);
        images.push(image);

        let norm = vec_norm(&residual.view());
        residual_history.push(norm);
        if norm > prev_norm {
            warning = true;
        }
        if norm >= prev_norm {
            nondecreasing_streak += 1;
        } else {
            nondecreasing_streak = 0;
        }
        prev_norm = norm;
        if nondecreasing_streak >= 2 {
            warning = true;
            break;
        }
    }
    let greedy_iterations = peaks.len();

    if peaks.len() > 1 {
        for _cycle in 0..MAX_REFINE_CYCLES {
            let mut improved = false;
            for l in 0..peaks.len() {
                let current_norm = vec_norm(&residual.view());
                if current_norm <= config.residual_tolerance {
                    break;
                }
                let readded = &residual + &images[l];
                let Ok((peak, image)) = estimate_one(op, &readded) else {
                    continue;
                };
                let candidate = &readded - &image;
                let candidate_norm = vec_norm(&candidate.view());
                if candidate_norm < current_norm * (1.0 - REFINE_REL_IMPROVEMENT) {
                    residual = candidate;
                    peaks[l] = peak;
                    images[l] = image;
                    residual_history.push(candidate_norm);
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
    }

    let mut result = assemble_result(peaks, residual_history, warning, ula)?;
    result.iterations = greedy_iterations;
    Ok(result)
}
