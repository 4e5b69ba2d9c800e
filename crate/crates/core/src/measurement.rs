//! Hybrid-beamforming measurement model.
//!
//! One training block applies `M_t` random analog precoders against `N_t`
//! random analog combiners on a static channel. Vectorizing the received
//! block turns channel estimation into sparse recovery against the sensing
//! matrix `A = (F^T kron W^H)(A_bs^* kron A_ue)`, which collapses to
//! `(F^T A_bs^*) kron (W^H A_ue)` by the Kronecker mixed-product rule.
//!
//! Noise is drawn in antenna space and then combined, so it stays colored
//! by `W^H` exactly as the receiver would see it; nothing here whitens.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::PI;

use crate::channel::{to_beamspace, PhysicalChannel, UlaConfig};
use crate::error::{Error, Result};
use crate::linalg::{conj_t, kron, vec_cm, vec_norm};

/// 64-bit finalizer used for all seed derivation (splitmix64).
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child-seed derivation rule: fold each tag into the root through
/// [`mix64`]. Parallel trials use disjoint tag lists, so their RNG streams
/// are independent and reproducible regardless of scheduling.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    let mut seed = mix64(root);
    for &tag in tags {
        seed = mix64(seed ^ mix64(tag));
    }
    seed
}

/// The deterministic RNG used everywhere; fixed algorithm so streams are
/// stable across platforms and releases.
pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// One circularly symmetric complex Gaussian draw with per-component
/// variance `variance` (E|z|^2 = variance), via Box-Muller.
pub fn draw_complex_gaussian(rng: &mut ChaCha12Rng, variance: f64) -> Complex64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    let r = (-variance * u1.ln()).sqrt();
    Complex64::from_polar(r, 2.0 * PI * u2)
}

/// Precoders, combiners, and the matrices they induce on the vectorized
/// problem. `sensing_matrix` = `beamforming_effect * dictionary`.
#[derive(Debug, Clone)]
pub struct SensingSetup {
    /// Precoder F, M x M_t, unit-norm columns.
    pub precoder: Array2<Complex64>,
    /// Combiner W, N x N_t, unit-norm columns.
    pub combiner: Array2<Complex64>,
    /// Overall sensing matrix A, (M_t N_t) x (M N).
    pub sensing_matrix: Array2<Complex64>,
    /// Dictionary Psi = A_bs^* kron A_ue, (M N) x (M N).
    pub dictionary: Array2<Complex64>,
    /// Beamforming effect Phi = F^T kron W^H, (M_t N_t) x (M N).
    pub beamforming_effect: Array2<Complex64>,
}

impl SensingSetup {
    /// Assembles the vectorized model for a given precoder/combiner pair.
    pub fn new(
        config: &UlaConfig,
        precoder: Array2<Complex64>,
        combiner: Array2<Complex64>,
    ) -> Result<Self> {
        let sensing = sensing_matrix(&precoder, &combiner, config)?;
        let a_bs = crate::channel::dft_dictionary(config.grid_bs)?;
        let a_ue = crate::channel::dft_dictionary(config.grid_ue)?;
        let a_bs_conj = a_bs.mapv(|z| z.conj());
        let dictionary = kron(&a_bs_conj.view(), &a_ue.view());
        let f_t = precoder.t().to_owned();
        let w_h = conj_t(&combiner.view());
        let beamforming_effect = kron(&f_t.view(), &w_h.view());
        Ok(Self {
            precoder,
            combiner,
            sensing_matrix: sensing,
            dictionary,
            beamforming_effect,
        })
    }

    pub fn num_measurements(&self) -> usize {
        self.sensing_matrix.nrows()
    }
}

/// One vectorized observation of length M_t N_t, reproducible from `seed`.
#[derive(Debug, Clone)]
pub struct Observation {
    pub y: Array1<Complex64>,
    /// Per-component variance of the antenna-space noise.
    pub noise_variance: f64,
    pub snr_db: f64,
    pub seed: u64,
}

/// Unit-modulus random-phase precoder/combiner pair (analog phase-shifter
/// model), columns scaled to unit norm, deterministic given the seed.
pub fn random_beamformers(
    config: &UlaConfig,
    num_precoders: usize,
    num_combiners: usize,
    seed: u64,
) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    if num_precoders == 0 || num_combiners == 0 {
        return Err(Error::InvalidParameter(
            "beamformer counts must be at least 1".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let m = config.num_bs_antennas;
    let n = config.num_ue_antennas;
    let mut f = Array2::zeros((m, num_precoders));
    for col in 0..num_precoders {
        for row in 0..m {
            let phase: f64 = rng.random::<f64>() * 2.0 * PI;
            f[[row, col]] = Complex64::from_polar(1.0 / (m as f64).sqrt(), phase);
        }
    }
    let mut w = Array2::zeros((n, num_combiners));
    for col in 0..num_combiners {
        for row in 0..n {
            let phase: f64 = rng.random::<f64>() * 2.0 * PI;
            w[[row, col]] = Complex64::from_polar(1.0 / (n as f64).sqrt(), phase);
        }
    }
    Ok((f, w))
}

/// Overall sensing matrix `(F^T A_bs^*) kron (W^H A_ue)`.
///
/// Built from the small per-side products; equality with the literal
/// `(F^T kron W^H)(A_bs^* kron A_ue)` is pinned by a dense oracle test.
pub fn sensing_matrix(
    precoder: &Array2<Complex64>,
    combiner: &Array2<Complex64>,
    config: &UlaConfig,
) -> Result<Array2<Complex64>> {
    if precoder.nrows() != config.num_bs_antennas {
        return Err(Error::DimensionMismatch(format!(
            "precoder has {} rows, expected {}",
            precoder.nrows(),
            config.num_bs_antennas
        )));
    }
    if combiner.nrows() != config.num_ue_antennas {
        return Err(Error::DimensionMismatch(format!(
            "combiner has {} rows, expected {}",
            combiner.nrows(),
            config.num_ue_antennas
        )));
    }
    let a_bs = crate::channel::dft_dictionary(config.grid_bs)?;
    let a_ue = crate::channel::dft_dictionary(config.grid_ue)?;
    let a_bs_conj = a_bs.mapv(|z| z.conj());
    let bs_side = precoder.t().dot(&a_bs_conj); // M_t x M
    let ue_side = conj_t(&combiner.view()).dot(&a_ue); // N_t x N
    Ok(kron(&bs_side.view(), &ue_side.view()))
}

/// Applies the training block to a channel and adds combined noise.
///
/// The per-component antenna noise variance is set so that the average
/// received signal power per measurement over the noise variance equals
/// the requested linear SNR:
/// `sigma^2 = ||A vec(H_v)||^2 / (len(y) * 10^(snr_db/10))`.
/// `snr_db = +inf` disables noise entirely.
pub fn measure(
    channel: &PhysicalChannel,
    setup: &SensingSetup,
    snr_db: f64,
    seed: u64,
) -> Result<Observation> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(format!(
            "snr_db must be finite or +inf, got {snr_db}"
        )));
    }
    let (n, m) = channel.matrix.dim();
    let mn = setup.sensing_matrix.ncols();
    if n * m != mn {
        return Err(Error::DimensionMismatch(format!(
            "channel is {n}x{m} but sensing matrix has {mn} columns"
        )));
    }
    let config = UlaConfig::new(m, n)?;
    let h_v = to_beamspace(channel, &config)?;
    let signal = setup.sensing_matrix.dot(&vec_cm(&h_v.matrix.view()));

    if snr_db == f64::INFINITY {
        return Ok(Observation {
            y: signal,
            noise_variance: 0.0,
            snr_db,
            seed,
        });
    }

    let len = signal.len() as f64;
    let signal_power = vec_norm(&signal.view()).powi(2);
    let noise_variance = signal_power / (len * 10.0_f64.powf(snr_db / 10.0));

    // Draw in antenna space (N x M_t), then combine column blocks with W^H.
    let mut rng = rng_from_seed(seed);
    let num_precoders = setup.precoder.ncols();
    let num_combiners = setup.combiner.ncols();
    let n_ant = setup.combiner.nrows();
    let mut y = signal;
    for block in 0..num_precoders {
        let noise: Vec<Complex64> = (0..n_ant)
            .map(|_| draw_complex_gaussian(&mut rng, noise_variance))
            .collect();
        for q in 0..num_combiners {
            let mut combined = Complex64::new(0.0, 0.0);
            for ant in 0..n_ant {
                combined += setup.combiner[[ant, q]].conj() * noise[ant];
            }
            y[block * num_combiners + q] += combined;
        }
    }
    Ok(Observation {
        y,
        noise_variance,
        snr_db,
        seed,
    })
}
