//! Dense symmetric eigensolvers and least-squares kernels.
//!
//! The matrices here are small (correlation matrices up to ~20x20, design
//! matrices with two or three columns), so the solvers are direct
//! implementations rather than LAPACK bindings:
//!
//! - `power_iteration` — leading eigenpair of a symmetric matrix from the
//!   fixed start vector `(1,...,1)/sqrt(n)`, Rayleigh-quotient eigenvalue
//!   estimates, convergence when successive estimates differ by less than
//!   `tol` AND the residual `max_i |A v - lambda v|_i` drops below
//!   `RESIDUAL_TOL`.
//! - `jacobi_eigen` — full spectrum via cyclic Jacobi rotations; used for the
//!   spectral-gap diagnostic, trace checks, and condition numbers.
//! - `lstsq` — least squares via Householder QR (never the normal equations),
//!   returning `(X'X)^-1` reconstructed from the triangular factor for
//!   covariance work.

use ndarray::{Array1, Array2};

/// Residual bound a converged eigenpair must satisfy, in the infinity norm.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, thiserror::Error)]
pub enum LinalgError {
    #[error(
        "eigensolver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    Convergence { iterations: usize, residual: f64 },
    #[error("matrix is rank deficient (pivot {pivot:.3e} at column {col})")]
    RankDeficient { col: usize, pivot: f64 },
}

/// Leading eigenpair of a symmetric matrix by deterministic power iteration
/// from the fixed start `(1,...,1)/sqrt(n)`.
///
/// Returns `(lambda, v, iterations, residual)` with `v` unit-norm. The caller
/// owns sign conventions; the raw vector direction depends only on the fixed
/// start, so results are reproducible for a given input.
pub fn power_iteration(
    a: &Array2<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Array1<f64>, usize, f64), LinalgError> {
    let n = a.nrows();
    let start = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    power_iteration_from(a, start, tol, max_iter)
}

/// Power iteration from an explicit unit-norm start vector.
pub fn power_iteration_from(
    a: &Array2<f64>,
    start: Array1<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Array1<f64>, usize, f64), LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    assert!(n > 0, "matrix must be non-empty");
    assert_eq!(start.len(), n);

    let mut v = start;
    let mut w = a.dot(&v);
    let mut lambda = v.dot(&w);
    let mut residual = inf_norm_residual(&w, lambda, &v);

    for iteration in 1..=max_iter {
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            // A v vanished: the fixed start lies in the null space and the
            // iteration cannot leave it.
            return Err(LinalgError::Convergence {
                iterations: iteration,
                residual,
            });
        }
        v = w.mapv(|x| x / norm);
        w = a.dot(&v);
        let next = v.dot(&w);
        residual = inf_norm_residual(&w, next, &v);
        let converged = (next - lambda).abs() < tol && residual < RESIDUAL_TOL;
        lambda = next;
        if converged {
            return Ok((lambda, v, iteration, residual));
        }
    }
    Err(LinalgError::Convergence {
        iterations: max_iter,
        residual,
    })
}

fn inf_norm_residual(av: &Array1<f64>, lambda: f64, v: &Array1<f64>) -> f64 {
    av.iter()
        .zip(v.iter())
        .map(|(&a, &x)| (a - lambda * x).abs())
        .fold(0.0, f64::max)
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending and the matching eigenvectors as
/// matrix columns. Convergence is quadratic; 50 sweeps is far beyond what the
/// sizes here ever need.
pub fn jacobi_eigen(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    const MAX_SWEEPS: usize = 50;

    let mut m = a.clone();
    let mut vecs = Array2::<f64>::eye(n);
    let scale = frobenius(&m).max(1.0);

    for _sweep in 0..MAX_SWEEPS {
        let off: f64 = off_diagonal_abs_sum(&m);
        if off < 1e-14 * scale {
            return Ok(sorted_spectrum(&m, vecs));
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                // Rotation angle that annihilates m[p][q].
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta.abs() > 1e12 {
                    // Degenerate angle: tan ~ 1/(2 theta).
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = c * mip - s * miq;
                    m[(i, q)] = s * mip + c * miq;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = c * mpj - s * mqj;
                    m[(q, j)] = s * mpj + c * mqj;
                }
                for i in 0..n {
                    let vip = vecs[(i, p)];
                    let viq = vecs[(i, q)];
                    vecs[(i, p)] = c * vip - s * viq;
                    vecs[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    Err(LinalgError::Convergence {
        iterations: MAX_SWEEPS,
        residual: off_diagonal_abs_sum(&m),
    })
}

fn frobenius(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn off_diagonal_abs_sum(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += m[(i, j)].abs();
            }
        }
    }
    sum
}

fn sorted_spectrum(diag: &Array2<f64>, vecs: Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = diag.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        diag[(j, j)]
            .partial_cmp(&diag[(i, i)])
            .expect("eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&k| diag[(k, k)]).collect();
    let mut sorted_vecs = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vecs[(i, dst)] = vecs[(i, src)];
        }
    }
    (values, sorted_vecs)
}

/// Least-squares fit computed via Householder QR.
#[derive(Debug, Clone)]
pub struct LstsqFit {
    pub coefficients: Array1<f64>,
    /// `(X'X)^-1 = R^-1 R^-T`, for covariance estimators.
    pub xtx_inv: Array2<f64>,
    /// 2-norm condition number of the design matrix.
    pub condition: f64,
}

/// Solve `min ||y - X b||_2` for a full-column-rank `X` (n >= k).
///
/// A diagonal entry of `R` below `rank_tol * max_j |R_jj|` is treated as rank
/// deficiency.
pub fn lstsq(x: &Array2<f64>, y: &Array1<f64>, rank_tol: f64) -> Result<LstsqFit, LinalgError> {
    let n = x.nrows();
    let k = x.ncols();
    assert!(n >= k && k > 0, "need n >= k >= 1");
    assert_eq!(y.len(), n);

    let mut r = x.clone();
    let mut qty = y.clone();

    // Householder reflections, applied column by column to both R and y.
    for j in 0..k {
        let mut alpha: f64 = (j..n).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt();
        if alpha == 0.0 {
            return Err(LinalgError::RankDeficient { col: j, pivot: 0.0 });
        }
        if r[(j, j)] > 0.0 {
            alpha = -alpha;
        }
        let mut v: Vec<f64> = (j..n).map(|i| r[(i, j)]).collect();
        v[0] -= alpha;
        let v_norm2: f64 = v.iter().map(|x| x * x).sum();
        if v_norm2 > 0.0 {
            for col in j..k {
                let dot: f64 = (j..n).map(|i| v[i - j] * r[(i, col)]).sum();
                let scale = 2.0 * dot / v_norm2;
                for i in j..n {
                    r[(i, col)] -= scale * v[i - j];
                }
            }
            let dot: f64 = (j..n).map(|i| v[i - j] * qty[i]).sum();
            let scale = 2.0 * dot / v_norm2;
            for i in j..n {
                qty[i] -= scale * v[i - j];
            }
        }
        r[(j, j)] = alpha;
        for i in (j + 1)..n {
            r[(i, j)] = 0.0;
        }
    }

    let max_pivot = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    for j in 0..k {
        let pivot = r[(j, j)].abs();
        if pivot <= rank_tol * max_pivot {
            return Err(LinalgError::RankDeficient { col: j, pivot });
        }
    }

    // Back substitution: R b = Q'y (top k rows).
    let mut beta = Array1::<f64>::zeros(k);
    for j in (0..k).rev() {
        let mut sum = qty[j];
        for l in (j + 1)..k {
            sum -= r[(j, l)] * beta[l];
        }
        beta[j] = sum / r[(j, j)];
    }

    // R^-1 by back substitution on the identity, then (X'X)^-1 = R^-1 R^-T.
    let mut r_inv = Array2::<f64>::zeros((k, k));
    for col in 0..k {
        for j in (0..=col).rev() {
            let mut sum = if j == col { 1.0 } else { 0.0 };
            for l in (j + 1)..=col {
                sum -= r[(j, l)] * r_inv[(l, col)];
            }
            r_inv[(j, col)] = sum / r[(j, j)];
        }
    }
    let xtx_inv = r_inv.dot(&r_inv.t());

    // Exact 2-norm condition of X from the spectrum of X'X (k is tiny).
    let xtx = {
        let rt = {
            let mut top = Array2::<f64>::zeros((k, k));
            for i in 0..k {
                for j in 0..k {
                    top[(i, j)] = r[(i, j)];
                }
            }
            top
        };
        rt.t().dot(&rt)
    };
    let (eigs, _) = jacobi_eigen(&xtx)?;
    let lam_max = eigs.first().copied().unwrap_or(0.0).max(0.0);
    let lam_min = eigs.last().copied().unwrap_or(0.0).max(0.0);
    let condition = if lam_min > 0.0 {
        (lam_max / lam_min).sqrt()
    } else {
        f64::INFINITY
    };

    Ok(LstsqFit {
        coefficients: beta,
        xtx_inv,
        condition,
    })
}
