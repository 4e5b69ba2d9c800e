//! Property checks shared by the proptest suite and the acceptance gate.

use domp_core::{
    build_channel, dft_dictionary, dirichlet_atom, dirichlet_kernel, measure, mlb_offset,
    mslb_offset, omp_standard, peak_from_aoa, peak_from_aod, power_capture_oracle,
    random_beamformers, to_beamspace, Complex64, EstimatorConfig, MultipathComponent,
    SensingOperator, SensingSetup, UlaConfig,
};
use ndarray::Array2;

pub fn fro(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Dictionary columns are orthonormal to 1e-12 per Gram entry.
pub fn check_unitarity(k: usize) {
    let d = dft_dictionary(k).unwrap();
    for i in 0..k {
        for j in 0..k {
            let mut g = Complex64::new(0.0, 0.0);
            for r in 0..k {
                g += d[[r, i]].conj() * d[[r, j]];
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!(
                (g - Complex64::new(expect, 0.0)).norm() < 1e-12,
                "gram ({i},{j}) of size-{k} dictionary: {g}"
            );
        }
    }
}

pub fn random_paths(angles: &[(f64, f64)], gains: &[(f64, f64)]) -> Vec<MultipathComponent> {
    angles
        .iter()
        .zip(gains.iter())
        .map(|(&(phi, theta), &(re, im))| {
            MultipathComponent::new(Complex64::new(re, im), phi, theta).unwrap()
        })
        .collect()
}

/// The beamspace transform preserves the Frobenius norm to 1e-10 relative.
pub fn check_parseval(m: usize, n: usize, angles: &[(f64, f64)], gains: &[(f64, f64)]) {
    let config = UlaConfig::new(m, n).unwrap();
    let channel = build_channel(&config, random_paths(angles, gains)).unwrap();
    let h_norm = fro(&channel.matrix);
    if h_norm == 0.0 {
        return;
    }
    let hv = to_beamspace(&channel, &config).unwrap();
    assert!(
        (hv.frobenius_norm() - h_norm).abs() <= 1e-10 * h_norm,
        "parseval: {} vs {}",
        hv.frobenius_norm(),
        h_norm
    );
}

/// `A vec(H_v)` equals `vec(W^H H F)` to 1e-9 * ||H||_F.
pub fn check_vec_identity(
    m: usize,
    n: usize,
    mt: usize,
    nt: usize,
    seed: u64,
    angles: &[(f64, f64)],
    gains: &[(f64, f64)],
) {
    let config = UlaConfig::new(m, n).unwrap();
    let channel = build_channel(&config, random_paths(angles, gains)).unwrap();
    let (f, w) = random_beamformers(&config, mt, nt, seed).unwrap();
    let setup = SensingSetup::new(&config, f.clone(), w.clone()).unwrap();
    let hv = to_beamspace(&channel, &config).unwrap();
    let mut via_a = vec![Complex64::new(0.0, 0.0); mt * nt];
    for (i, row) in setup.sensing_matrix.rows().into_iter().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for (j, aij) in row.iter().enumerate() {
            s += aij * hv.matrix[[j % n, j / n]];
        }
        via_a[i] = s;
    }
    // vec(W^H H F), column-major over the N_t x M_t block.
    let mut err = 0.0_f64;
    for p in 0..mt {
        for q in 0..nt {
            let mut direct = Complex64::new(0.0, 0.0);
            for r in 0..n {
                for c in 0..m {
                    direct += w[[r, q]].conj() * channel.matrix[[r, c]] * f[[c, p]];
                }
            }
            err += (via_a[p * nt + q] - direct).norm_sqr();
        }
    }
    let h_norm = fro(&channel.matrix);
    assert!(
        err.sqrt() <= 1e-9 * h_norm.max(1e-30),
        "vec identity error {} for ||H|| {}",
        err.sqrt(),
        h_norm
    );
}

/// A kernel atom placed at a path's virtual peak equals the beamspace
/// transform of the rank-1 physical channel, to 1e-10 relative Frobenius.
pub fn check_atom_equivalence(m: usize, n: usize, gain: (f64, f64), phi: f64, theta: f64) {
    let config = UlaConfig::new(m, n).unwrap();
    let g = Complex64::new(gain.0, gain.1);
    if g.norm() == 0.0 {
        return;
    }
    let path = MultipathComponent::new(g, phi, theta).unwrap();
    let channel = build_channel(&config, vec![path]).unwrap();
    let bs = to_beamspace(&channel, &config).unwrap();
    let atom = dirichlet_atom(
        peak_from_aod(&config, phi),
        peak_from_aoa(&config, theta),
        g,
        &config,
    )
    .unwrap();
    let diff = &atom.matrix - &bs.matrix;
    assert!(
        fro(&diff) <= 1e-10 * bs.frobenius_norm(),
        "atom mismatch {}",
        fro(&diff)
    );
}

/// Identical seeds produce bit-identical observations.
pub fn check_measure_determinism(seed: u64, snr_db: f64) {
    let config = UlaConfig::new(6, 6).unwrap();
    let channel = build_channel(
        &config,
        vec![MultipathComponent::new(Complex64::new(1.0, -0.3), 0.4, -0.9).unwrap()],
    )
    .unwrap();
    let (f, w) = random_beamformers(&config, 4, 4, seed ^ 0x5a5a).unwrap();
    let setup = SensingSetup::new(&config, f, w).unwrap();
    let a = measure(&channel, &setup, snr_db, seed).unwrap();
    let b = measure(&channel, &setup, snr_db, seed).unwrap();
    assert_eq!(a.y, b.y);
    assert_eq!(a.noise_variance, b.noise_variance);
}

/// OMP's residual norms never increase.
pub fn check_omp_monotonicity(seed: u64, snr_db: f64) {
    let config = UlaConfig::new(6, 6).unwrap();
    let channel = build_channel(
        &config,
        vec![
            MultipathComponent::new(Complex64::new(0.9, 0.1), 0.7, -0.4).unwrap(),
            MultipathComponent::new(Complex64::new(-0.2, 0.8), -0.8, 0.9).unwrap(),
        ],
    )
    .unwrap();
    let (f, w) = random_beamformers(&config, 4, 4, seed).unwrap();
    let setup = SensingSetup::new(&config, f, w).unwrap();
    let obs = measure(&channel, &setup, snr_db, seed.wrapping_add(1)).unwrap();
    let op = SensingOperator::from_setup(&setup, &config).unwrap();
    let y_norm = obs.y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let cfg = EstimatorConfig::new((1e-9 * y_norm).max(1e-300), 3).unwrap();
    let result = omp_standard(&obs.y.view(), &op, &cfg).unwrap();
    let mut prev = y_norm;
    for &r in &result.residual_history {
        assert!(r <= prev + 1e-12 * y_norm, "residual rose: {r} after {prev}");
        prev = r;
    }
}

/// Offset estimates always land in [-1/2, 1/2].
pub fn check_offset_range(c: (f64, f64), p: (f64, f64), mi: (f64, f64), k: usize) {
    let center = Complex64::new(c.0, c.1);
    let plus = Complex64::new(p.0, p.1);
    let minus = Complex64::new(mi.0, mi.1);
    if let Ok(d) = mlb_offset(center, plus, minus) {
        assert!((-0.5..=0.5).contains(&d), "mlb offset {d}");
    }
    if let Ok(d) = mslb_offset(center, plus, minus, k.max(2)) {
        assert!((-0.5..=0.5).contains(&d), "mslb offset {d}");
    }
}

/// Shifting the first kernel argument by a period scales it by (-1)^(M+1).
pub fn check_kernel_periodicity(x: f64, y: f64, m: usize, n: usize) {
    let base = dirichlet_kernel(x, y, m, n);
    let shifted = dirichlet_kernel(x + 1.0, y, m, n);
    let sign = if (m + 1) % 2 == 0 { 1.0 } else { -1.0 };
    assert!(
        (shifted - sign * base).abs() <= 1e-9 * base.abs().max(1.0),
        "periodicity at ({x},{y}) M={m}: {shifted} vs {base}"
    );
}

/// Captured power is non-decreasing in the sparsity level and complete at
/// the full grid.
pub fn check_power_capture_monotone(m: usize, n: usize, off: (f64, f64)) {
    let mut last = 0.0;
    for k in 1..=(m * n) {
        let eta = power_capture_oracle(m, n, off, k).unwrap();
        assert!(eta + 1e-12 >= last, "eta({k}) {eta} < eta({}) {last}", k - 1);
        last = eta;
    }
    assert!((last - 1.0).abs() < 1e-9, "eta(MN) = {last}");
}
