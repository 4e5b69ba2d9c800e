//! Power-capture analysis, scenario generation, and Monte-Carlo sweeps.
//!
//! The sweep drivers pair every estimator against the identical observation
//! per trial, derive all randomness from the scenario root seed through the
//! documented splitting rule, and merge results in task order, so a sweep
//! is reproducible bit-for-bit regardless of thread scheduling.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::channel::{build_channel, MultipathComponent, PhysicalChannel, UlaConfig};
use crate::error::{Error, Result};
use crate::estimators::{Estimator, EstimatorConfig, SensingOperator};
use crate::kernel::dirichlet_kernel;
use crate::linalg::{fro_norm, vec_norm};
use crate::measurement::{
    derive_seed, draw_complex_gaussian, measure, random_beamformers, rng_from_seed, SensingSetup,
};
use rand::Rng;

/// Seed-stream tags for the per-trial RNG split (see [`derive_seed`]).
const TAG_CHANNEL: u64 = 1;
const TAG_BEAMFORMERS: u64 = 2;
const TAG_NOISE: u64 = 3;

/// Path gain model for generated scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainModel {
    /// Every path has gain 1.
    Unit,
    /// Gains drawn CN(0,1), then rescaled so the total path power equals
    /// the path count on every trial.
    ComplexGaussian,
}

/// A Monte-Carlo scenario description.
///
/// Defaults follow the reference experiment: 3 paths placed near cell
/// midpoints (`offgrid_scale` 0.1), at least 20 degrees of separation in
/// both angle domains, Gaussian gains, 50 trials.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub config: UlaConfig,
    pub num_paths: usize,
    pub offgrid_scale: f64,
    pub min_separation_deg: f64,
    pub gain_model: GainModel,
    pub trials: usize,
    pub root_seed: u64,
}

impl ScenarioSpec {
    pub fn new(config: UlaConfig) -> Self {
        Self {
            config,
            num_paths: 3,
            offgrid_scale: 0.1,
            min_separation_deg: 20.0,
            gain_model: GainModel::ComplexGaussian,
            trials: 50,
            root_seed: 0,
        }
    }
}

/// Fraction of a single unit path's beamspace power captured by its K
/// strongest grid cells, by direct enumeration.
///
/// `offsets` are the kernel-argument distances of the path from a grid
/// cell; the worst case is `(1/(2M), 1/(2N))`. This function is the ground
/// truth the closed form is gated on.
pub fn power_capture_oracle(
    m: usize,
    n: usize,
    offsets: (f64, f64),
    k: usize,
) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("grid sizes must be positive".into()));
    }
    if k == 0 || k > m * n {
        return Err(Error::InvalidParameter(format!(
            "sparsity level {k} outside 1..={}",
            m * n
        )));
    }
    let mut powers = Vec::with_capacity(m * n);
    for col in 0..m {
        let vp = col as f64 / m as f64 - offsets.0;
        for row in 0..n {
            let vt = row as f64 / n as f64 - offsets.1;
            powers.push(dirichlet_kernel(vp, vt, m, n).powi(2));
        }
    }
    powers.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = powers.iter().sum();
    let top: f64 = powers[..k].iter().sum();
    Ok(top / total)
}

/// Worst-case power capture in closed form.
///
/// At half-cell offsets every element magnitude is proportional to
/// `1 / (sin(pi (2i-1)/(2M)) sin(pi (2j-1)/(2N)))` and appears in a
/// symmetric quadruple, so K must be a multiple of 4 (and M, N even).
/// Gated against [`power_capture_oracle`] to 1e-9.
pub fn power_capture_closed_form(m: usize, n: usize, k: usize) -> Result<f64> {
    if m == 0 || n == 0 || m % 2 != 0 || n % 2 != 0 {
        return Err(Error::InvalidParameter(
            "closed form requires positive even grid sizes".into(),
        ));
    }
    if k == 0 || k % 4 != 0 || k > m * n {
        return Err(Error::InvalidParameter(format!(
            "sparsity level {k} must be a positive multiple of 4, at most {}",
            m * n
        )));
    }
    let mut quads = Vec::with_capacity(m / 2 * n / 2);
    for i in 1..=m / 2 {
        let si = (PI * (2 * i - 1) as f64 / (2.0 * m as f64)).sin();
        for j in 1..=n / 2 {
            let sj = (PI * (2 * j - 1) as f64 / (2.0 * n as f64)).sin();
            quads.push(1.0 / (si * si * sj * sj));
        }
    }
    quads.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = quads.iter().sum();
    let top: f64 = quads[..k / 4].iter().sum();
    Ok(top / total)
}

/// Normalized mean square error `||h_hat - h||_F^2 / ||h||_F^2`.
pub fn nmse(h_hat: &Array2<Complex64>, h: &Array2<Complex64>) -> Result<f64> {
    if h_hat.dim() != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {:?} but reference is {:?}",
            h_hat.dim(),
            h.dim()
        )));
    }
    let ref_norm = fro_norm(&h.view());
    if ref_norm == 0.0 {
        return Err(Error::InvalidParameter(
            "reference channel has zero norm".into(),
        ));
    }
    let diff = h_hat - h;
    Ok((fro_norm(&diff.view()) / ref_norm).powi(2))
}

enum Placement {
    /// Cell midpoint perturbed by +- scale * zeta / 2 cells, zeta ~ U[0,1].
    NearMidpoint { scale: f64 },
    /// Exactly on a grid cell.
    OnGrid,
}

fn place_paths(
    spec: &ScenarioSpec,
    trial_index: usize,
    placement: Placement,
) -> Result<PhysicalChannel> {
    if spec.num_paths == 0 {
        return Err(Error::InvalidParameter("num_paths must be at least 1".into()));
    }
    let config = &spec.config;
    let m = config.num_bs_antennas;
    let n = config.num_ue_antennas;
    let sep_rad = spec.min_separation_deg.to_radians();
    let mut rng = rng_from_seed(derive_seed(
        spec.root_seed,
        &[TAG_CHANNEL, trial_index as u64],
    ));

    let mut angles: Vec<(f64, f64)> = Vec::with_capacity(spec.num_paths);
    let mut attempts = 0usize;
    while angles.len() < spec.num_paths {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::Scenario(format!(
                "could not place {} paths with {} deg separation after 10000 draws",
                spec.num_paths, spec.min_separation_deg
            )));
        }
        let draw_coord = |rng: &mut rand_chacha::ChaCha12Rng, cells: usize| -> f64 {
            let cell = rng.random_range(1..=cells) as f64;
            match placement {
                Placement::OnGrid => cell,
                Placement::NearMidpoint { scale } => {
                    let zeta: f64 = rng.random();
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    cell + 0.5 + sign * scale * zeta / 2.0
                }
            }
        };
        let m_star = draw_coord(&mut rng, m);
        let n_star = draw_coord(&mut rng, n);
        let sin_phi = (2.0 * (m_star - 1.0) / m as f64 - 1.0) / (2.0 * config.element_spacing);
        let sin_theta = (2.0 * (n_star - 1.0) / n as f64 - 1.0) / (2.0 * config.element_spacing);
        if sin_phi.abs() > 1.0 || sin_theta.abs() > 1.0 {
            continue;
        }
        let phi = sin_phi.asin();
        let theta = sin_theta.asin();
        let separated = angles.iter().all(|&(p, t)| {
            (phi - p).abs() >= sep_rad && (theta - t).abs() >= sep_rad
        });
        if separated {
            angles.push((phi, theta));
        }
    }

    let gains: Vec<Complex64> = match spec.gain_model {
        GainModel::Unit => vec![Complex64::new(1.0, 0.0); spec.num_paths],
        GainModel::ComplexGaussian => {
            let raw: Vec<Complex64> = (0..spec.num_paths)
                .map(|_| draw_complex_gaussian(&mut rng, 1.0))
                .collect();
            let power: f64 = raw.iter().map(|z| z.norm_sqr()).sum();
            let scale = (spec.num_paths as f64 / power).sqrt();
            raw.into_iter().map(|z| z * scale).collect()
        }
    };

    let paths: Result<Vec<MultipathComponent>> = angles
        .iter()
        .zip(gains.iter())
        .map(|(&(phi, theta), &g)| MultipathComponent::new(g, phi, theta))
        .collect();
    build_channel(config, paths?)
}

/// Draws one trial's channel with every path near a cell midpoint,
/// perturbed by `offgrid_scale`, with pairwise angle separation enforced
/// in both the departure and arrival domains.
pub fn generate_offgrid_scenario(
    spec: &ScenarioSpec,
    trial_index: usize,
) -> Result<PhysicalChannel> {
    place_paths(
        spec,
        trial_index,
        Placement::NearMidpoint {
            scale: spec.offgrid_scale,
        },
    )
}

/// Same placement machinery with every path exactly on a grid cell.
pub fn generate_ongrid_scenario(
    spec: &ScenarioSpec,
    trial_index: usize,
) -> Result<PhysicalChannel> {
    place_paths(spec, trial_index, Placement::OnGrid)
}

/// Square split of a measurement budget: `M_t = N_t = round(sqrt(total))`.
/// When `total` is not a perfect square the realized budget is `M_t N_t`.
pub fn split_measurements(total: usize) -> Result<(usize, usize)> {
    if total == 0 {
        return Err(Error::InvalidParameter(
            "measurement budget must be positive".into(),
        ));
    }
    let side = (total as f64).sqrt().round().max(1.0) as usize;
    Ok((side, side))
}

/// Per-trial estimator outputs entering the records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub nmse: f64,
    pub iterations: usize,
    pub final_residual: f64,
}

/// One (axis point, estimator, trial) outcome; failures carry the reason.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub axis_value: f64,
    pub estimator: Estimator,
    pub trial: usize,
    pub outcome: std::result::Result<TrialMetrics, String>,
}

/// Mean and standard error over the successful trials of one cell.
#[derive(Debug, Clone, Copy)]
pub struct AggregateRecord {
    pub axis_value: f64,
    pub estimator: Estimator,
    pub mean_nmse: f64,
    pub stderr_nmse: f64,
    pub n_trials: usize,
}

/// Output of a sweep: the axis, all per-trial records in deterministic
/// (axis, trial, estimator) order, and per-cell aggregates.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis_label: &'static str,
    pub axis_values: Vec<f64>,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<AggregateRecord>,
}

#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    axis_value: f64,
    num_precoders: usize,
    num_combiners: usize,
    snr_db: f64,
}

fn run_trial(
    spec: &ScenarioSpec,
    point: &SweepPoint,
    trial: usize,
    estimators: &[Estimator],
    epsilon_override: Option<f64>,
) -> Vec<(Estimator, std::result::Result<TrialMetrics, String>)> {
    let fail_all = |reason: String| {
        estimators
            .iter()
            .map(|&e| (e, Err(reason.clone())))
            .collect::<Vec<_>>()
    };

    let channel = match generate_offgrid_scenario(spec, trial) {
        Ok(c) => c,
        Err(e) => return fail_all(format!("trial {trial}: {e}")),
    };
    let bf_seed = derive_seed(
        spec.root_seed,
        &[
            TAG_BEAMFORMERS,
            trial as u64,
            point.num_precoders as u64,
            point.num_combiners as u64,
        ],
    );
    let setup = match random_beamformers(
        &spec.config,
        point.num_precoders,
        point.num_combiners,
        bf_seed,
    )
    .and_then(|(f, w)| SensingSetup::new(&spec.config, f, w))
    {
        Ok(s) => s,
        Err(e) => return fail_all(format!("trial {trial}: {e}")),
    };
    let noise_seed = derive_seed(
        spec.root_seed,
        &[
            TAG_NOISE,
            trial as u64,
            point.num_precoders as u64,
            point.num_combiners as u64,
        ],
    );
    let observation = match measure(&channel, &setup, point.snr_db, noise_seed) {
        Ok(o) => o,
        Err(e) => return fail_all(format!("trial {trial}: {e}")),
    };
    let operator = match SensingOperator::from_setup(&setup, &spec.config) {
        Ok(o) => o,
        Err(e) => return fail_all(format!("trial {trial}: {e}")),
    };

    let y_norm = vec_norm(&observation.y.view());
    let epsilon = epsilon_override
        .unwrap_or_else(|| EstimatorConfig::noise_floor_epsilon(y_norm, point.snr_db));
    let est_config = match EstimatorConfig::new(epsilon, spec.num_paths) {
        Ok(c) => c,
        Err(e) => return fail_all(format!("trial {trial}: {e}")),
    };

    estimators
        .iter()
        .map(|&est| {
            let outcome = est
                .run(&observation.y.view(), &operator, &est_config)
                .and_then(|r| {
                    let err = nmse(&r.channel_estimate, &channel.matrix)?;
                    Ok(TrialMetrics {
                        nmse: err,
                        iterations: r.iterations,
                        final_residual: r.residual_history.last().copied().unwrap_or(y_norm),
                    })
                })
                .map_err(|e| format!("trial {trial}: {e}"));
            (est, outcome)
        })
        .collect()
}

fn run_sweep(
    spec: &ScenarioSpec,
    axis_label: &'static str,
    points: Vec<SweepPoint>,
    estimators: &[Estimator],
    epsilon_override: Option<f64>,
) -> Result<SweepResult> {
    if estimators.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one estimator must be selected".into(),
        ));
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("axis list must be nonempty".into()));
    }
    if spec.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }

    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.trials).map(move |t| (p, t)))
        .collect();
    // Indexed parallel map keeps task order, so records come out in
    // (axis, trial) order no matter how the pool schedules them.
    let outcomes: Vec<Vec<(Estimator, std::result::Result<TrialMetrics, String>)>> = tasks
        .par_iter()
        .map(|&(p, t)| run_trial(spec, &points[p], t, estimators, epsilon_override))
        .collect();

    let mut records = Vec::with_capacity(tasks.len() * estimators.len());
    for (&(p, t), trial_outcomes) in tasks.iter().zip(outcomes.into_iter()) {
        for (est, outcome) in trial_outcomes {
            records.push(TrialRecord {
                axis_value: points[p].axis_value,
                estimator: est,
                trial: t,
                outcome,
            });
        }
    }

    // Records are laid out as points x trials x estimators, so each
    // (point, estimator) cell is a strided slice of the record list.
    let per_point = spec.trials * estimators.len();
    let mut aggregates = Vec::with_capacity(points.len() * estimators.len());
    for (p, point) in points.iter().enumerate() {
        for (e, &est) in estimators.iter().enumerate() {
            let values: Vec<f64> = (0..spec.trials)
                .map(|t| &records[p * per_point + t * estimators.len() + e])
                .filter_map(|r| r.outcome.as_ref().ok().map(|m| m.nmse))
                .collect();
            let n = values.len();
            let mean = if n > 0 {
                values.iter().sum::<f64>() / n as f64
            } else {
                f64::NAN
            };
            let stderr = if n > 1 {
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                    / (n as f64 - 1.0);
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            aggregates.push(AggregateRecord {
                axis_value: point.axis_value,
                estimator: est,
                mean_nmse: mean,
                stderr_nmse: stderr,
                n_trials: n,
            });
        }
    }

    Ok(SweepResult {
        axis_label,
        axis_values: points.iter().map(|p| p.axis_value).collect(),
        records,
        aggregates,
    })
}

/// NMSE versus SNR at a fixed measurement budget. Every estimator sees the
/// identical observation per trial.
pub fn sweep_snr(
    spec: &ScenarioSpec,
    snr_list_db: &[f64],
    measurements_total: usize,
    estimators: &[Estimator],
    epsilon_override: Option<f64>,
) -> Result<SweepResult> {
    let (mt, nt) = split_measurements(measurements_total)?;
    let points = snr_list_db
        .iter()
        .map(|&snr| SweepPoint {
            axis_value: snr,
            num_precoders: mt,
            num_combiners: nt,
            snr_db: snr,
        })
        .collect();
    run_sweep(spec, "snr_db", points, estimators, epsilon_override)
}

/// NMSE versus measurement budget at a fixed SNR.
pub fn sweep_measurements(
    spec: &ScenarioSpec,
    measurement_list: &[usize],
    snr_db: f64,
    estimators: &[Estimator],
    epsilon_override: Option<f64>,
) -> Result<SweepResult> {
    let points: Result<Vec<SweepPoint>> = measurement_list
        .iter()
        .map(|&total| {
            let (mt, nt) = split_measurements(total)?;
            Ok(SweepPoint {
                axis_value: (mt * nt) as f64,
                num_precoders: mt,
                num_combiners: nt,
                snr_db,
            })
        })
        .collect();
    run_sweep(spec, "measurements", points?, estimators, epsilon_override)
}
