//! Small dense complex linear-algebra helpers: Kronecker products,
//! column-major (un)vectorization, and a Householder-QR least-squares solver.
//!
//! The solver targets the tall skinny systems produced by greedy pursuit
//! (hundreds of rows, a handful of columns), so no blocking or pivoting
//! beyond a rank guard is needed.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative threshold below which a QR diagonal is treated as zero.
const RANK_TOL: f64 = 1e-10;

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ArrayView2<Complex64>, b: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            for p in 0..br {
                for q in 0..bc {
                    out[[i * br + p, j * bc + q]] = aij * b[[p, q]];
                }
            }
        }
    }
    out
}

/// Conjugate transpose `a^H`.
pub fn conj_t(a: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let (r, c) = a.dim();
    Array2::from_shape_fn((c, r), |(i, j)| a[[j, i]].conj())
}

/// Column-major vectorization: stacks the columns of `a` into one vector.
pub fn vec_cm(a: &ArrayView2<Complex64>) -> Array1<Complex64> {
    let (rows, cols) = a.dim();
    let mut out = Array1::zeros(rows * cols);
    for j in 0..cols {
        for i in 0..rows {
            out[j * rows + i] = a[[i, j]];
        }
    }
    out
}

/// Inverse of [`vec_cm`]: reshapes `v` into a `rows x cols` matrix.
pub fn unvec_cm(v: &ArrayView1<Complex64>, rows: usize, cols: usize) -> Result<Array2<Complex64>> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape length {} into {}x{}",
            v.len(),
            rows,
            cols
        )));
    }
    Ok(Array2::from_shape_fn((rows, cols), |(i, j)| v[j * rows + i]))
}

/// Frobenius norm.
pub fn fro_norm(a: &ArrayView2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &ArrayView1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inner product `<a, b> = a^H b`.
pub fn inner(a: &ArrayView1<Complex64>, b: &ArrayView1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Minimum-residual solution of `min_x ||a x - b||_2` via Householder QR.
///
/// Requires `a` to have at least as many rows as columns and full column
/// rank; a diagonal of `R` falling below `RANK_TOL` times the largest
/// column norm raises [`Error::SingularSystem`].
pub fn lstsq(a: &ArrayView2<Complex64>, b: &ArrayView1<Complex64>) -> Result<Array1<Complex64>> {
    let (m, n) = a.dim();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "lstsq: matrix is {}x{} but rhs has length {}",
            m,
            n,
            b.len()
        )));
    }
    if m < n {
        return Err(Error::DimensionMismatch(format!(
            "lstsq: underdetermined system ({m} rows < {n} cols)"
        )));
    }

    let mut r = a.to_owned();
    let mut qtb = b.to_owned();

    let max_col_norm = (0..n)
        .map(|j| r.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0_f64, f64::max);
    let tol = RANK_TOL * max_col_norm.max(f64::MIN_POSITIVE);

    for k in 0..n {
        // Householder reflector for column k, rows k..m.
        let xnorm = (k..m).map(|i| r[[i, k]].norm_sqr()).sum::<f64>().sqrt();
        if xnorm <= tol {
            return Err(Error::SingularSystem);
        }
        let x0 = r[[k, k]];
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        // v = x - alpha e1, stored in place of column k below the diagonal.
        let v0 = x0 - alpha;
        r[[k, k]] = v0;
        let vnorm_sqr: f64 = (k..m).map(|i| r[[i, k]].norm_sqr()).sum();
        if vnorm_sqr == 0.0 {
            // Column already of the form alpha*e1.
            r[[k, k]] = alpha;
            continue;
        }
        let tau = 2.0 / vnorm_sqr;

        for j in (k + 1)..n {
            let w: Complex64 = (k..m).map(|i| r[[i, k]].conj() * r[[i, j]]).sum();
            let tw = tau * w;
            for i in k..m {
                let vik = r[[i, k]];
                r[[i, j]] -= tw * vik;
            }
        }
        let w: Complex64 = (k..m).map(|i| r[[i, k]].conj() * qtb[i]).sum();
        let tw = tau * w;
        for i in k..m {
            let vik = r[[i, k]];
            qtb[i] -= tw * vik;
        }
        r[[k, k]] = alpha;
    }

    // Back substitution on the upper triangle.
    let mut x = Array1::zeros(n);
    for k in (0..n).rev() {
        let mut s = qtb[k];
        for j in (k + 1)..n {
            s -= r[[k, j]] * x[j];
        }
        let d = r[[k, k]];
        if d.norm() <= tol {
            return Err(Error::SingularSystem);
        }
        x[k] = s / d;
    }
    Ok(x)
}
