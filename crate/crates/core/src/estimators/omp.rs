//! Classic grid-constrained orthogonal matching pursuit.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::channel::{from_beamspace, BeamspaceMatrix};
use crate::error::{Error, Result};
use crate::kernel::VirtualPeak;
use crate::linalg::{lstsq, vec_norm};

use super::{EstimateResult, EstimatorConfig, SensingOperator};

/// Standard OMP: alternate correlation-based atom selection with a full
/// least-squares refit over the selected grid cells, until the residual
/// drops below the tolerance or the iteration cap (`4 * max_paths`) is hit.
///
/// The matched filter uses the conjugate-transposed columns, as required
/// for complex data. Already-selected columns are excluded from the
/// argmax; with an exact refit their correlation is zero anyway.
pub fn omp_standard(
    y: &ArrayView1<Complex64>,
    op: &SensingOperator,
    config: &EstimatorConfig,
) -> Result<EstimateResult> {
    let a = op.matrix();
    if a.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {} but sensing matrix has {} rows",
            y.len(),
            a.nrows()
        )));
    }
    let mn = a.ncols();
    let num_ue = op.config().num_ue_antennas;

    let mut residual = y.to_owned();
    let mut residual_history = Vec::new();
    let mut support: Vec<usize> = Vec::new();
    let mut selected = vec![false; mn];
    let mut coefficients: Array1<Complex64> = Array1::zeros(0);
    let cap = config.omp_iteration_cap();

    while vec_norm(&residual.view()) > config.residual_tolerance && support.len() < cap {
        // Matched filter A^H y_res, accumulated row-wise.
        let mut corr = vec![Complex64::new(0.0, 0.0); mn];
        for (i, row) in a.rows().into_iter().enumerate() {
            let yi = residual[i];
            for (j, aij) in row.iter().enumerate() {
                corr[j] += aij.conj() * yi;
            }
        }
        let mut best: Option<usize> = None;
        let mut best_mag = 0.0;
        for (j, c) in corr.iter().enumerate() {
            if selected[j] {
                continue;
            }
            let mag = c.norm_sqr();
            if best.is_none() || mag > best_mag {
                best = Some(j);
                best_mag = mag;
            }
        }
        let Some(j) = best else { break };
        if best_mag == 0.0 {
            // Residual orthogonal to every remaining column; nothing to gain.
            break;
        }
        selected[j] = true;
        support.push(j);

        let k = support.len();
        let mut sub = Array2::zeros((a.nrows(), k));
        for (col, &idx) in support.iter().enumerate() {
            for i in 0..a.nrows() {
                sub[[i, col]] = a[[i, idx]];
            }
        }
        let x = lstsq(&sub.view(), y).map_err(|e| match e {
            Error::SingularSystem => Error::SingularAtIteration { iteration: k },
            other => other,
        })?;
        residual = y.to_owned();
        for (col, &idx) in support.iter().enumerate() {
            for i in 0..a.nrows() {
                residual[i] -= a[[i, idx]] * x[col];
            }
        }
        residual_history.push(vec_norm(&residual.view()));
        coefficients = x;
    }

    // Scatter the final least-squares solution onto the grid.
    let ula = op.config();
    let mut grid = Array2::zeros((ula.num_ue_antennas, ula.num_bs_antennas));
    let mut paths = Vec::with_capacity(support.len());
    for (col, &idx) in support.iter().enumerate() {
        let m1 = idx / num_ue + 1;
        let n1 = idx % num_ue + 1;
        grid[[n1 - 1, m1 - 1]] = coefficients[col];
        paths.push(VirtualPeak::new(
            m1 as f64,
            n1 as f64,
            coefficients[col],
            ula,
        ));
    }
    let beamspace_estimate = BeamspaceMatrix { matrix: grid };
    let channel_estimate = from_beamspace(&beamspace_estimate, ula)?;
    let iterations = support.len();
    Ok(EstimateResult {
        paths,
        beamspace_estimate,
        channel_estimate,
        residual_history,
        iterations,
        early_stop_warning: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{dft_dictionary, UlaConfig};
    use crate::kernel::dirichlet_atom;
    use crate::linalg::{kron, vec_cm};

    fn full_sampling_op(m: usize, n: usize) -> SensingOperator {
        let config = UlaConfig::new(m, n).unwrap();
        let a_bs = dft_dictionary(m).unwrap();
        let a_ue = dft_dictionary(n).unwrap();
        let a_bs_conj = a_bs.mapv(|z| z.conj());
        let psi = kron(&a_bs_conj.view(), &a_ue.view());
        SensingOperator::from_matrix(psi, &config).unwrap()
    }

    #[test]
    fn recovers_on_grid_single_path_in_one_iteration() {
        let config = UlaConfig::new(8, 8).unwrap();
        let op = full_sampling_op(8, 8);
        let gain = Complex64::new(0.8, -1.3);
        let atom = dirichlet_atom(3.0, 6.0, gain, &config).unwrap();
        let y = op.matrix().dot(&vec_cm(&atom.matrix.view()));
        let cfg = EstimatorConfig::new(1e-10, 3).unwrap();
        let result = omp_standard(&y.view(), &op, &cfg).unwrap();
        assert_eq!(result.iterations, 1);
        assert!(result.residual_history[0] < 1e-10);
        assert!((result.beamspace_estimate.matrix[[5, 2]] - gain).norm() < 1e-10);
    }

    #[test]
    fn recovers_three_on_grid_paths_from_compressed_measurements() {
        // Desk-scale exhaustive check: 3 well-separated grid cells, random
        // compressed sampling, exact support recovery.
        let config = UlaConfig::new(8, 8).unwrap();
        let (f, w) = crate::measurement::random_beamformers(&config, 6, 6, 123).unwrap();
        let setup = crate::measurement::SensingSetup::new(&config, f, w).unwrap();
        let op = SensingOperator::from_setup(&setup, &config).unwrap();

        let cells = [(2usize, 2usize), (5, 7), (8, 4)];
        let gains = [
            Complex64::new(1.0, 0.3),
            Complex64::new(-0.6, 0.9),
            Complex64::new(0.2, -1.1),
        ];
        let mut hv = Array2::zeros((8, 8));
        for (&(m1, n1), &g) in cells.iter().zip(gains.iter()) {
            hv[[n1 - 1, m1 - 1]] = g;
        }
        let y = op.matrix().dot(&vec_cm(&hv.view()));
        let cfg = EstimatorConfig::new(1e-9, 3).unwrap();
        let result = omp_standard(&y.view(), &op, &cfg).unwrap();
        assert_eq!(result.iterations, 3);
        for (&(m1, n1), &g) in cells.iter().zip(gains.iter()) {
            let got = result.beamspace_estimate.matrix[[n1 - 1, m1 - 1]];
            assert!((got - g).norm() < 1e-6, "cell ({m1},{n1}): {got}");
        }
        let err = crate::linalg::fro_norm(&(&result.beamspace_estimate.matrix - &hv).view());
        let scale = crate::linalg::fro_norm(&hv.view());
        assert!((err / scale).powi(2) < 1e-6);
    }

    #[test]
    fn residual_follows_power_capture_on_worst_case_path() {
        // Full sampling, worst-case off-grid path: after k greedy picks the
        // squared residual must equal (1 - eta(k)) * ||y||^2, the leakage
        // left by the k strongest grid cells. OMP cannot reach 1e-10 here.
        let m = 16usize;
        let n = 16usize;
        let config = UlaConfig::new(m, n).unwrap();
        let op = full_sampling_op(m, n);
        let atom = dirichlet_atom(4.5, 9.5, Complex64::new(1.0, 0.0), &config).unwrap();
        let y = op.matrix().dot(&vec_cm(&atom.matrix.view()));
        let y_norm = vec_norm(&y.view());

        let cfg = EstimatorConfig::new(1e-10, 3).unwrap();
        let result = omp_standard(&y.view(), &op, &cfg).unwrap();
        assert_eq!(result.iterations, cfg.omp_iteration_cap());
        for (k, res) in result.residual_history.iter().enumerate() {
            let eta =
                crate::analysis::power_capture_oracle(m, n, (0.5 / m as f64, 0.5 / n as f64), k + 1)
                    .unwrap();
            let expected = y_norm * (1.0 - eta).max(0.0).sqrt();
            assert!(
                (res - expected).abs() < 1e-9 * y_norm.max(1.0),
                "iteration {}: residual {res} vs oracle {expected}",
                k + 1
            );
        }
        assert!(result.residual_history.last().unwrap() > &1e-2);
    }

    #[test]
    fn aborts_on_rank_deficient_support() {
        // Two numerically dependent columns force a singular refit on the
        // second pick.
        let config = UlaConfig::new(2, 1).unwrap();
        let mut a = Array2::zeros((3, 2));
        for i in 0..3 {
            a[[i, 0]] = Complex64::new(1.0 + i as f64, 0.5);
            a[[i, 1]] = a[[i, 0]] + Complex64::new(1e-13, -1e-13 * i as f64);
        }
        let op = SensingOperator::from_matrix(a, &config).unwrap();
        let y = Array1::from_shape_fn(3, |i| Complex64::new(0.3 * i as f64 + 1.0, -0.2));
        let cfg = EstimatorConfig::new(1e-12, 2).unwrap();
        let err = omp_standard(&y.view(), &op, &cfg).unwrap_err();
        assert!(matches!(err, Error::SingularAtIteration { iteration: 2 }));
    }

    #[test]
    fn residual_is_monotone_under_refit() {
        let config = UlaConfig::new(6, 6).unwrap();
        let (f, w) = crate::measurement::random_beamformers(&config, 4, 4, 5).unwrap();
        let setup = crate::measurement::SensingSetup::new(&config, f, w).unwrap();
        let op = SensingOperator::from_setup(&setup, &config).unwrap();
        let atom = dirichlet_atom(2.6, 4.2, Complex64::new(1.0, 1.0), &config).unwrap();
        let mut y = op.matrix().dot(&vec_cm(&atom.matrix.view()));
        // Perturb so OMP has to work through several picks.
        for (i, z) in y.iter_mut().enumerate() {
            *z += Complex64::new(0.01 * (i as f64).sin(), -0.01 * (i as f64).cos());
        }
        let cfg = EstimatorConfig::new(1e-9, 4).unwrap();
        let result = omp_standard(&y.view(), &op, &cfg).unwrap();
        for pair in result.residual_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }
}
