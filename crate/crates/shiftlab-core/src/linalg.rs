//! Dense complex linear-algebra helpers on top of `faer`.
//!
//! `faer::c64` is a re-export of `num_complex::Complex64`, so matrices and
//! the rest of the crate share one scalar type; the binding below fails to
//! compile if that ever stops being true.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef};
use num_complex::Complex64;
use thiserror::Error;

const _SAME_SCALAR: fn(faer::c64) -> Complex64 = |z| z;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { pivot: f64, index: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub fn zeros(rows: usize, cols: usize) -> Mat<Complex64> {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> Mat<Complex64> {
    scaled_identity(n, Complex64::new(1.0, 0.0))
}

pub fn scaled_identity(n: usize, c: Complex64) -> Mat<Complex64> {
    Mat::from_fn(n, n, |i, j| if i == j { c } else { Complex64::new(0.0, 0.0) })
}

/// Scale a matrix by a complex scalar.
pub fn scale(a: MatRef<'_, Complex64>, c: Complex64) -> Mat<Complex64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * c)
}

/// Assemble a matrix from column vectors (all of equal length).
pub fn from_columns(cols: &[Vec<Complex64>]) -> Mat<Complex64> {
    let ncols = cols.len();
    let nrows = cols.first().map_or(0, |c| c.len());
    Mat::from_fn(nrows, ncols, |i, j| cols[j][i])
}

pub fn column(m: MatRef<'_, Complex64>, j: usize) -> Vec<Complex64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// Copy `src` into `dst` with its top-left corner at `(i0, j0)`.
pub fn copy_block(dst: &mut Mat<Complex64>, i0: usize, j0: usize, src: MatRef<'_, Complex64>) {
    for i in 0..src.nrows() {
        for j in 0..src.ncols() {
            dst[(i0 + i, j0 + j)] = src[(i, j)];
        }
    }
}

pub fn singular_values(a: MatRef<'_, Complex64>) -> Vec<f64> {
    let svd = a.svd().expect("svd did not converge");
    let s = svd.S();
    (0..s.dim()).map(|i| s[i].re).collect()
}

/// Operator (spectral) norm via full SVD.
pub fn op_norm(a: MatRef<'_, Complex64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn sigma_min(a: MatRef<'_, Complex64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    singular_values(a).last().copied().unwrap_or(0.0)
}

pub fn eigenvalues(a: MatRef<'_, Complex64>) -> Vec<Complex64> {
    a.eigenvalues().expect("eigenvalue computation failed")
}

/// Solve `A X = B` for square `A` (partial-pivot LU).
pub fn solve(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> Mat<Complex64> {
    a.partial_piv_lu().solve(b)
}

pub fn inverse(a: MatRef<'_, Complex64>) -> Mat<Complex64> {
    solve(a, identity(a.nrows()).as_ref())
}

/// Horner evaluation of `p(A) = p[0] I + p[1] A + ... + p[d] A^d`.
pub fn apply_poly(p: &[Complex64], a: MatRef<'_, Complex64>) -> Mat<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "apply_poly needs a square matrix");
    if p.is_empty() {
        return zeros(n, n);
    }
    let mut acc = scaled_identity(n, p[p.len() - 1]);
    for &c in p[..p.len() - 1].iter().rev() {
        acc = &acc * &a;
        for i in 0..n {
            acc[(i, i)] += c;
        }
    }
    acc
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix:
/// `G = L L^H`. Fails with the offending pivot if `G` is not numerically
/// positive definite.
pub fn cholesky_lower(g: MatRef<'_, Complex64>) -> Result<Mat<Complex64>, LinalgError> {
    let n = g.nrows();
    assert_eq!(n, g.ncols(), "cholesky needs a square matrix");
    let mut l = zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: d, index: j });
        }
        let dj = d.sqrt();
        l[(j, j)] = Complex64::new(dj, 0.0);
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Solve `L X = B` with `L` lower triangular.
pub fn solve_lower_triangular(
    l: MatRef<'_, Complex64>,
    b: MatRef<'_, Complex64>,
) -> Mat<Complex64> {
    let n = l.nrows();
    let m = b.ncols();
    let mut x = b.to_owned();
    for col in 0..m {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// Solve `U X = B` with `U` upper triangular.
pub fn solve_upper_triangular(
    u: MatRef<'_, Complex64>,
    b: MatRef<'_, Complex64>,
) -> Mat<Complex64> {
    let n = u.nrows();
    let m = b.ncols();
    let mut x = b.to_owned();
    for col in 0..m {
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in (i + 1)..n {
                s -= u[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / u[(i, i)];
        }
    }
    x
}

/// Thin orthonormal factor spanning the columns of `a` (QR-based).
pub fn thin_q(a: MatRef<'_, Complex64>) -> Mat<Complex64> {
    a.qr().compute_thin_Q()
}

/// Orthonormal basis for the effective range of `a`: left singular vectors
/// whose singular value exceeds `rel_tol * sigma_max` (and an absolute floor).
pub fn effective_range(a: MatRef<'_, Complex64>, rel_tol: f64) -> Mat<Complex64> {
    let svd = a.svd().expect("svd did not converge");
    let s = svd.S();
    let smax = if s.dim() > 0 { s[0].re } else { 0.0 };
    let cut = (rel_tol * smax).max(1e-14);
    let rank = (0..s.dim()).take_while(|&i| s[i].re > cut).count();
    let u = svd.U();
    Mat::from_fn(a.nrows(), rank, |i, j| u[(i, j)])
}

/// Cosines of the principal angles between the column spans of two
/// orthonormal frames: the singular values of `Qa^H Qb`, clipped to [0, 1].
pub fn principal_angle_cosines(
    qa: MatRef<'_, Complex64>,
    qb: MatRef<'_, Complex64>,
) -> Vec<f64> {
    let prod = qa.adjoint() * qb;
    singular_values(prod.as_ref())
        .into_iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect()
}

/// Iterative top-singular-value estimator that warm-starts from the previous
/// call — cheap when tracking a slowly changing matrix family (operator power
/// profiles). Falls back to a full SVD if the iteration stalls.
pub struct TopSingularTracker {
    v: Vec<Complex64>,
}

impl TopSingularTracker {
    pub fn new(dim: usize) -> Self {
        // Deterministic, aperiodic start vector; no zero entries.
        let v = (0..dim)
            .map(|j| Complex64::new(1.0, (0.7 * (j as f64 + 1.0)).sin() * 0.5))
            .collect();
        Self { v }
    }

    pub fn estimate(&mut self, a: MatRef<'_, Complex64>) -> f64 {
        let n = a.ncols();
        assert_eq!(n, self.v.len(), "tracker dimension mismatch");
        let mut v = Mat::from_fn(n, 1, |i, _| self.v[i]);
        normalize_col(&mut v);
        let mut sigma = 0.0_f64;
        let mut converged = false;
        for _ in 0..200 {
            let w = &a * &v;
            let s = w.norm_l2();
            let mut vn = a.adjoint() * &w;
            normalize_col(&mut vn);
            v = vn;
            if (s - sigma).abs() <= 1e-12 * s.max(1.0) {
                sigma = s;
                converged = true;
                break;
            }
            sigma = s;
        }
        if !converged {
            sigma = op_norm(a);
        }
        for i in 0..n {
            self.v[i] = v[(i, 0)];
        }
        sigma
    }
}

fn normalize_col(v: &mut Mat<Complex64>) {
    let norm = v.norm_l2();
    if norm > 0.0 {
        let inv = Complex64::new(1.0 / norm, 0.0);
        for i in 0..v.nrows() {
            v[(i, 0)] *= inv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cholesky_reconstructs_gram() {
        // G = A^H A + I for a fixed small A is comfortably positive definite.
        let a = Mat::from_fn(4, 4, |i, j| c((i * j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
        let mut g = a.adjoint() * &a;
        for i in 0..4 {
            g[(i, i)] += c(1.0, 0.0);
        }
        let l = cholesky_lower(g.as_ref()).unwrap();
        let back = &l * l.adjoint();
        let err = op_norm((&back - &g).as_ref());
        assert!(err < 1e-12, "cholesky residual {err}");
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut g = identity(3);
        g[(2, 2)] = c(-1.0, 0.0);
        assert!(cholesky_lower(g.as_ref()).is_err());
    }

    #[test]
    fn triangular_solves_invert_cholesky() {
        let g = Mat::from_fn(3, 3, |i, j| {
            if i == j {
                c(2.0, 0.0)
            } else {
                c(0.3, 0.1 * (i as f64 - j as f64))
            }
        });
        let g = &g * g.adjoint(); // Hermitian PD
        let l = cholesky_lower(g.as_ref()).unwrap();
        let b = identity(3);
        let y = solve_lower_triangular(l.as_ref(), b.as_ref());
        let lh = l.adjoint().to_owned();
        let x = solve_upper_triangular(lh.as_ref(), y.as_ref());
        // x should equal G^{-1}
        let res = op_norm((&g * &x - identity(3)).as_ref());
        assert!(res < 1e-12, "residual {res}");
    }

    #[test]
    fn apply_poly_matches_direct_sum() {
        let a = Mat::from_fn(3, 3, |i, j| c(0.2 * (i + 2 * j) as f64, 0.1 * i as f64));
        let p = [c(1.0, 0.0), c(-2.0, 0.5), c(0.0, 0.0), c(3.0, 0.0)];
        let pa = apply_poly(&p, a.as_ref());
        let a2 = &a * &a;
        let a3 = &a2 * &a;
        let direct = scaled_identity(3, p[0]) + scale(a.as_ref(), p[1]) + scale(a3.as_ref(), p[3]);
        let err = op_norm((&pa - &direct).as_ref());
        assert!(err < 1e-13, "horner vs direct {err}");
    }

    #[test]
    fn jordan_block_singular_values() {
        // Nilpotent 2x2 Jordan block has singular values (1, 0).
        let mut a = zeros(2, 2);
        a[(0, 1)] = c(1.0, 0.0);
        let sv = singular_values(a.as_ref());
        assert!((sv[0] - 1.0).abs() < 1e-14 && sv[1].abs() < 1e-14);
    }

    #[test]
    fn tracker_matches_svd() {
        let a = Mat::from_fn(20, 20, |i, j| {
            c(((i * 7 + j * 3) % 11) as f64 * 0.1, ((i + 5 * j) % 7) as f64 * 0.05)
        });
        let exact = op_norm(a.as_ref());
        let mut tracker = TopSingularTracker::new(20);
        let est = tracker.estimate(a.as_ref());
        assert!((est - exact).abs() < 1e-9 * exact, "est {est} exact {exact}");
    }

    #[test]
    fn principal_angles_of_identical_spans_are_zero() {
        let q = identity(5);
        let cos = principal_angle_cosines(q.as_ref().submatrix(0, 0, 5, 2), q.as_ref().submatrix(0, 0, 5, 2));
        for c in cos {
            assert!((c - 1.0).abs() < 1e-14);
        }
    }
}
