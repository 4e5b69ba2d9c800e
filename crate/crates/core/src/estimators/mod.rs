//! Greedy sparse-recovery estimators over the beamspace dictionary.
//!
//! Four reconstruction algorithms share the projection step (matched filter
//! against the sensing matrix) and differ in how they place energy:
//!
//! * [`omp_standard`] keeps everything on the integer grid (classic OMP);
//! * [`domp_mlb`] / [`domp_mslb`] interpolate a continuous peak from the
//!   least-squares estimates of the five cells around each projection hit,
//!   then synthesize and subtract the full Dirichlet atom;
//! * [`domp_lo`] replaces the interpolation with a localized numerical
//!   search of the atom-fit objective around the hit.
//!
//! All estimators are pure functions of `(y, A, config)`; the sensing
//! matrix and dictionaries can be shared read-only across parallel trials.

mod domp;
mod local_opt;
mod offsets;
mod omp;
mod pursuit;

pub use domp::{domp_mlb, domp_mslb};
pub use local_opt::{domp_lo, golden_section_max};
pub use offsets::{mlb_offset, mslb_offset, peak_strength};
pub use omp::omp_standard;

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

use crate::channel::{from_beamspace, BeamspaceMatrix, UlaConfig};
use crate::error::{Error, Result};
use crate::kernel::{atom_of, dirichlet_atom, steering_from_peak, VirtualPeak};
use crate::linalg::{lstsq, vec_cm, vec_norm};

/// Stopping and sizing knobs shared by all estimators.
///
/// `max_paths` caps DOMP iterations directly; grid-constrained OMP gets
/// `4 * max_paths` picks, since one off-grid path leaks over several grid
/// cells. The local-optimizer fields control the coarse scan step (in cell
/// units) and the number of coordinate-wise refinement passes.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub residual_tolerance: f64,
    pub max_paths: usize,
    pub lo_grid_step: f64,
    pub lo_refine_iters: usize,
}

impl EstimatorConfig {
    pub fn new(residual_tolerance: f64, max_paths: usize) -> Result<Self> {
        if !(residual_tolerance > 0.0) {
            return Err(Error::InvalidParameter(
                "residual tolerance must be positive".into(),
            ));
        }
        if max_paths == 0 {
            return Err(Error::InvalidParameter("max_paths must be at least 1".into()));
        }
        Ok(Self {
            residual_tolerance,
            max_paths,
            lo_grid_step: 1e-2,
            lo_refine_iters: 40,
        })
    }

    pub fn with_local_search(mut self, grid_step: f64, refine_iters: usize) -> Result<Self> {
        if !(grid_step > 0.0 && grid_step <= 1.0) {
            return Err(Error::InvalidParameter(
                "lo_grid_step must lie in (0, 1]".into(),
            ));
        }
        if refine_iters == 0 {
            return Err(Error::InvalidParameter(
                "lo_refine_iters must be at least 1".into(),
            ));
        }
        self.lo_grid_step = grid_step;
        self.lo_refine_iters = refine_iters;
        Ok(self)
    }

    /// Noise-floor stopping threshold: `0.9 * 10^(-snr_db/20) * y_norm`,
    /// floored at `1e-12 * y_norm` so it stays positive for noiseless runs.
    pub fn noise_floor_epsilon(y_norm: f64, snr_db: f64) -> f64 {
        let adaptive = 0.9 * 10.0_f64.powf(-snr_db / 20.0) * y_norm;
        adaptive.max(1e-12 * y_norm).max(f64::MIN_POSITIVE)
    }

    pub(crate) fn omp_iteration_cap(&self) -> usize {
        4 * self.max_paths
    }
}

/// Output of one estimator run.
///
/// `beamspace_estimate` is the sum of the synthesized atoms (for OMP, the
/// grid-sparse least-squares solution), `channel_estimate` its antenna-space
/// image, and `residual_history` the residual norm after each iteration.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub paths: Vec<VirtualPeak>,
    pub beamspace_estimate: BeamspaceMatrix,
    pub channel_estimate: Array2<Complex64>,
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// Set when the residual stopped improving (any strict increase, or the
    /// two-consecutive-non-decrease early stop).
    pub early_stop_warning: bool,
}

/// The sensing matrix together with the grid geometry it acts on, plus the
/// beamformer factors when the matrix was assembled from a measurement
/// setup. The factors let the local optimizer score continuous atoms
/// without a dense matrix-vector product; they never replace the dense
/// matrix in residual bookkeeping.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    matrix: Array2<Complex64>,
    config: UlaConfig,
    factors: Option<BeamformerFactors>,
}

#[derive(Debug, Clone)]
struct BeamformerFactors {
    precoder: Array2<Complex64>,
    combiner: Array2<Complex64>,
}

impl SensingOperator {
    /// Wraps a bare sensing matrix (columns indexed by vectorized grid cells).
    pub fn from_matrix(matrix: Array2<Complex64>, config: &UlaConfig) -> Result<Self> {
        let mn = config.num_bs_antennas * config.num_ue_antennas;
        if matrix.ncols() != mn {
            return Err(Error::DimensionMismatch(format!(
                "sensing matrix has {} columns, expected {}",
                matrix.ncols(),
                mn
            )));
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidParameter("sensing matrix has no rows".into()));
        }
        Ok(Self {
            matrix,
            config: config.clone(),
            factors: None,
        })
    }

    /// Wraps a measurement setup, keeping the precoder/combiner factors.
    pub fn from_setup(
        setup: &crate::measurement::SensingSetup,
        config: &UlaConfig,
    ) -> Result<Self> {
        let mut op = Self::from_matrix(setup.sensing_matrix.clone(), config)?;
        op.factors = Some(BeamformerFactors {
            precoder: setup.precoder.clone(),
            combiner: setup.combiner.clone(),
        });
        Ok(op)
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn config(&self) -> &UlaConfig {
        &self.config
    }

    /// `A vec(atom)` for a unit-strength atom at (m*, n*); dense route.
    pub fn atom_image(&self, m_star: f64, n_star: f64) -> Result<Array1<Complex64>> {
        let atom = dirichlet_atom(
            m_star,
            n_star,
            Complex64::new(1.0, 0.0),
            &self.config,
        )?;
        Ok(self.matrix.dot(&vec_cm(&atom.matrix.view())))
    }

    /// Precoder-side factor of the atom image: `F^T conj(a_bs(m*))`.
    fn left_factor(&self, m_star: f64) -> Option<(Array1<Complex64>, f64)> {
        let f = &self.factors.as_ref()?.precoder;
        let steer = steering_from_peak(self.config.num_bs_antennas, m_star);
        let cols = f.ncols();
        let mut out = Array1::zeros(cols);
        for p in 0..cols {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..f.nrows() {
                s += f[[k, p]] * steer[k].conj();
            }
            out[p] = s;
        }
        let norm_sqr = out.iter().map(|z| z.norm_sqr()).sum();
        Some((out, norm_sqr))
    }

    /// Combiner-side factor of the atom image: `W^H a_ue(n*)`.
    fn right_factor(&self, n_star: f64) -> Option<(Array1<Complex64>, f64)> {
        let w = &self.factors.as_ref()?.combiner;
        let steer = steering_from_peak(self.config.num_ue_antennas, n_star);
        let cols = w.ncols();
        let mut out = Array1::zeros(cols);
        for q in 0..cols {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..w.nrows() {
                s += w[[k, q]].conj() * steer[k];
            }
            out[q] = s;
        }
        let norm_sqr = out.iter().map(|z| z.norm_sqr()).sum();
        Some((out, norm_sqr))
    }

    pub(crate) fn num_combiners(&self) -> Option<usize> {
        self.factors.as_ref().map(|f| f.combiner.ncols())
    }

    #[cfg(test)]
    pub(crate) fn factored_image(
        &self,
        m_star: f64,
        n_star: f64,
    ) -> Option<Array1<Complex64>> {
        let (left, _) = self.left_factor(m_star)?;
        let (right, _) = self.right_factor(n_star)?;
        let nq = right.len();
        let mut u = Array1::zeros(left.len() * nq);
        for (p, lp) in left.iter().enumerate() {
            for (q, rq) in right.iter().enumerate() {
                u[p * nq + q] = lp * rq;
            }
        }
        Some(u)
    }
}

/// Column index (0-based) of grid cell (m', n') under column-major
/// vectorization of the N x M beamspace matrix.
pub(crate) fn cell_to_col(m1: usize, n1: usize, num_ue: usize) -> usize {
    (m1 - 1) * num_ue + (n1 - 1)
}

fn wrap_up(idx: usize, period: usize) -> usize {
    if idx == period {
        1
    } else {
        idx + 1
    }
}

fn wrap_down(idx: usize, period: usize) -> usize {
    if idx == 1 {
        period
    } else {
        idx - 1
    }
}

/// Matched-filter projection: the 1-based column index maximizing
/// `|A(:,j)^H y_res|` (lowest index wins ties) plus its grid cell (m', n').
pub fn match_step(
    op: &SensingOperator,
    y_res: &ArrayView1<Complex64>,
) -> Result<(usize, usize, usize)> {
    if vec_norm(y_res) == 0.0 {
        return Err(Error::DegenerateInput(
            "matched filter applied to a zero residual".into(),
        ));
    }
    let a = &op.matrix;
    let mn = a.ncols();
    let mut corr = vec![Complex64::new(0.0, 0.0); mn];
    for (i, row) in a.rows().into_iter().enumerate() {
        let yi = y_res[i];
        for (j, aij) in row.iter().enumerate() {
            corr[j] += aij.conj() * yi;
        }
    }
    let mut best = 0usize;
    let mut best_mag = -1.0;
    for (j, c) in corr.iter().enumerate() {
        let mag = c.norm_sqr();
        if mag > best_mag {
            best_mag = mag;
            best = j;
        }
    }
    let n = op.config.num_ue_antennas;
    let j1 = best + 1;
    let m1 = best / n + 1;
    let n1 = best % n + 1;
    Ok((j1, m1, n1))
}

/// Least-squares estimates at the five cells around (m', n').
#[derive(Debug, Clone, Copy)]
pub struct NeighborhoodEstimates {
    pub center: Complex64,
    /// Cell (m'+1, n'), wrapped periodically.
    pub m_plus: Complex64,
    /// Cell (m'-1, n').
    pub m_minus: Complex64,
    /// Cell (m', n'+1).
    pub n_plus: Complex64,
    /// Cell (m', n'-1).
    pub n_minus: Complex64,
}

/// Joint least-squares fit of the residual over the five columns of the
/// sensing matrix at `(m',n')` and its four axis neighbors (periodic wrap).
pub fn neighborhood_ls(
    op: &SensingOperator,
    y_res: &ArrayView1<Complex64>,
    m1: usize,
    n1: usize,
) -> Result<NeighborhoodEstimates> {
    let m = op.config.num_bs_antennas;
    let n = op.config.num_ue_antennas;
    if m1 == 0 || m1 > m || n1 == 0 || n1 > n {
        return Err(Error::InvalidParameter(format!(
            "cell ({m1},{n1}) outside the {m}x{n} grid"
        )));
    }
    let cells = [
        (m1, n1),
        (wrap_up(m1, m), n1),
        (wrap_down(m1, m), n1),
        (m1, wrap_up(n1, n)),
        (m1, wrap_down(n1, n)),
    ];
    let a = &op.matrix;
    let rows = a.nrows();
    let mut sub = Array2::zeros((rows, 5));
    for (k, &(cm, cn)) in cells.iter().enumerate() {
        let col = cell_to_col(cm, cn, n);
        for i in 0..rows {
            sub[[i, k]] = a[[i, col]];
        }
    }
    let x = lstsq(&sub.view(), y_res)?;
    Ok(NeighborhoodEstimates {
        center: x[0],
        m_plus: x[1],
        m_minus: x[2],
        n_plus: x[3],
        n_minus: x[4],
    })
}

/// Sums the Dirichlet atoms of the recovered peaks and maps the total back
/// to antenna space.
pub(crate) fn assemble_result(
    peaks: Vec<VirtualPeak>,
    residual_history: Vec<f64>,
    early_stop_warning: bool,
    config: &UlaConfig,
) -> Result<EstimateResult> {
    let n = config.num_ue_antennas;
    let m = config.num_bs_antennas;
    let mut total = Array2::zeros((n, m));
    for peak in &peaks {
        let atom = atom_of(peak, config)?;
        total += &atom.matrix;
    }
    let beamspace_estimate = BeamspaceMatrix { matrix: total };
    let channel_estimate = from_beamspace(&beamspace_estimate, config)?;
    let iterations = peaks.len();
    Ok(EstimateResult {
        paths: peaks,
        beamspace_estimate,
        channel_estimate,
        residual_history,
        iterations,
        early_stop_warning,
    })
}

/// The four estimators, as selectable units for the experiment harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Omp,
    DompMlb,
    DompMslb,
    DompLo,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::Omp,
        Estimator::DompMlb,
        Estimator::DompMslb,
        Estimator::DompLo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Omp => "omp",
            Estimator::DompMlb => "domp-mlb",
            Estimator::DompMslb => "domp-mslb",
            Estimator::DompLo => "domp-lo",
        }
    }

    pub fn run(
        self,
        y: &ArrayView1<Complex64>,
        op: &SensingOperator,
        config: &EstimatorConfig,
    ) -> Result<EstimateResult> {
        match self {
            Estimator::Omp => omp_standard(y, op, config),
            Estimator::DompMlb => domp_mlb(y, op, config),
            Estimator::DompMslb => domp_mslb(y, op, config),
            Estimator::DompLo => domp_lo(y, op, config),
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "omp" => Ok(Estimator::Omp),
            "domp-mlb" | "domp_mlb" => Ok(Estimator::DompMlb),
            "domp-mslb" | "domp_mslb" => Ok(Estimator::DompMslb),
            "domp-lo" | "domp_lo" => Ok(Estimator::DompLo),
            other => Err(Error::InvalidParameter(format!(
                "unknown estimator '{other}' (expected omp, domp-mlb, domp-mslb, domp-lo)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::dft_dictionary;
    use crate::linalg::kron;

    fn orthonormal_op(m: usize, n: usize) -> SensingOperator {
        let config = UlaConfig::new(m, n).unwrap();
        let a_bs = dft_dictionary(m).unwrap();
        let a_ue = dft_dictionary(n).unwrap();
        let a_bs_conj = a_bs.mapv(|z| z.conj());
        let psi = kron(&a_bs_conj.view(), &a_ue.view());
        SensingOperator::from_matrix(psi, &config).unwrap()
    }

    #[test]
    fn match_step_finds_a_planted_column() {
        let op = orthonormal_op(4, 4);
        let y = op.matrix.column(4).to_owned();
        let (j, _, _) = match_step(&op, &y.view()).unwrap();
        assert_eq!(j, 5);
    }

    #[test]
    fn match_step_index_arithmetic() {
        // M = N = 4, j* = 7 -> (m', n') = (2, 3) under column-major layout.
        let op = orthonormal_op(4, 4);
        let y = op.matrix.column(6).to_owned();
        let (j, m1, n1) = match_step(&op, &y.view()).unwrap();
        assert_eq!((j, m1, n1), (7, 2, 3));
    }

    #[test]
    fn match_step_rejects_zero_residual() {
        let op = orthonormal_op(4, 4);
        let y = Array1::zeros(16);
        assert!(matches!(
            match_step(&op, &y.view()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn match_step_locates_off_grid_peak_cell() {
        // A single off-grid path under full sampling projects strongest onto
        // the cell containing the continuous peak.
        let config = UlaConfig::new(16, 16).unwrap();
        let op = orthonormal_op(16, 16);
        let atom = dirichlet_atom(4.3, 9.7, Complex64::new(1.0, -0.7), &config).unwrap();
        let y = op.matrix.dot(&vec_cm(&atom.matrix.view()));
        let (_, m1, n1) = match_step(&op, &y.view()).unwrap();
        assert_eq!((m1, n1), (4, 10));
    }

    #[test]
    fn neighborhood_ls_recovers_on_grid_coefficient() {
        let config = UlaConfig::new(8, 8).unwrap();
        let op = orthonormal_op(8, 8);
        let gain = Complex64::new(1.5, -2.0);
        let atom = dirichlet_atom(3.0, 5.0, gain, &config).unwrap();
        let y = op.matrix.dot(&vec_cm(&atom.matrix.view()));
        let nb = neighborhood_ls(&op, &y.view(), 3, 5).unwrap();
        assert!((nb.center - gain).norm() < 1e-10);
        for z in [nb.m_plus, nb.m_minus, nb.n_plus, nb.n_minus] {
            assert!(z.norm() < 1e-10);
        }
    }

    #[test]
    fn neighborhood_ls_sees_half_cell_straddle() {
        // Peak exactly between cells 4 and 5 along m: those two estimates
        // dominate the m-axis neighbors.
        let config = UlaConfig::new(16, 16).unwrap();
        let op = orthonormal_op(16, 16);
        let atom = dirichlet_atom(4.5, 7.0, Complex64::new(1.0, 0.0), &config).unwrap();
        let y = op.matrix.dot(&vec_cm(&atom.matrix.view()));
        let nb = neighborhood_ls(&op, &y.view(), 4, 7).unwrap();
        assert!((nb.center.norm() - nb.m_plus.norm()).abs() < 1e-9);
        assert!(nb.m_plus.norm() > 2.5 * nb.m_minus.norm());
    }

    #[test]
    fn neighborhood_wraps_at_grid_edge() {
        let config = UlaConfig::new(8, 8).unwrap();
        let op = orthonormal_op(8, 8);
        // Peak in cell (1, 8); its m-minus neighbor is cell 8, n-plus is 1.
        let atom = dirichlet_atom(1.0, 8.0, Complex64::new(2.0, 0.0), &config).unwrap();
        let y = op.matrix.dot(&vec_cm(&atom.matrix.view()));
        let nb = neighborhood_ls(&op, &y.view(), 1, 8).unwrap();
        assert!((nb.center - Complex64::new(2.0, 0.0)).norm() < 1e-10);
        assert!(nb.m_minus.norm() < 1e-10);
        assert!(nb.n_plus.norm() < 1e-10);
    }

    #[test]
    fn factored_image_matches_dense_image() {
        let config = UlaConfig::new(6, 5).unwrap();
        let (f, w) = crate::measurement::random_beamformers(&config, 4, 3, 9).unwrap();
        let setup = crate::measurement::SensingSetup::new(&config, f, w).unwrap();
        let op = SensingOperator::from_setup(&setup, &config).unwrap();
        for &(ms, ns) in &[(2.4_f64, 3.1_f64), (1.0, 1.0), (5.97, 4.5), (6.5, 1.02)] {
            let dense = op.atom_image(ms, ns).unwrap();
            let fast = op.factored_image(ms, ns).unwrap();
            let err: f64 = dense
                .iter()
                .zip(fast.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let scale = vec_norm(&dense.view()).max(1e-30);
            assert!(err < 1e-9 * scale.max(1.0), "({ms},{ns}): err {err}");
        }
    }

    #[test]
    fn estimator_names_round_trip() {
        for est in Estimator::ALL {
            let parsed: Estimator = est.name().parse().unwrap();
            assert_eq!(parsed, est);
        }
        assert!("ompx".parse::<Estimator>().is_err());
    }
}
