//! Non-orthogonal basis diagnostics: coordinate functionals, partial-sum
//! projections, Riesz/synthesis singular values, and dual families — plus
//! the rotated-symbol family x_n = zⁿ(1-z)^α whose partial sums stay
//! bounded while its synthesis map degenerates.
//!
//! All operators here act on span{x_0..x_{M-1}} with the ambient H² inner
//! product; norms are computed by congruence with the Cholesky factor of
//! the Gram matrix, P ↦ L^H P L^{-H}, which turns the span into coordinates
//! where the norm is a plain largest singular value.

use faer::{Mat, MatRef};
use num_complex::Complex64;
use thiserror::Error;

use crate::hardy::{inner_product, HardyVec, Symbol};
use crate::linalg;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("exponent {0} outside (0, 1/2)")]
    AlphaOutOfRange(f64),
    #[error("family needs truncation at least {need}, got {got}")]
    TruncationTooSmall { need: usize, got: usize },
    #[error("Gram matrix numerically singular at leading block {0}")]
    SingularGram(usize),
}

/// A finite family x_0..x_{M-1} with everything the diagnostics need:
/// Gram, Cholesky congruence, partial-sum projection norms ‖P_n‖, the
/// coordinate-functional norms ‖Q_n‖, and the Riesz frame bounds.
///
/// `sigma_min`/`sigma_max` are the frame bounds of the synthesis map —
/// the extreme eigenvalues of the Gram matrix, i.e. the sharp constants in
/// c·Σ|a_k|² ≤ ‖Σ a_k x_k‖² ≤ C·Σ|a_k|².
pub struct BasisFamily {
    vectors: Vec<HardyVec>,
    gram: Mat<Complex64>,
    chol: Mat<Complex64>,
    pnorms: Vec<f64>,
    qnorms: Vec<f64>,
    sigma_min: f64,
    sigma_max: f64,
}

/// Family from explicit ambient vectors.
pub fn general_family(vectors: Vec<HardyVec>) -> Result<BasisFamily, FamilyError> {
    let m = vectors.len();
    let mut gram = linalg::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = inner_product(&vectors[j], &vectors[i]);
        }
    }
    let chol = linalg::cholesky_lower(gram.as_ref()).map_err(|_| FamilyError::SingularGram(m))?;

    // Congruence to orthonormal coordinates: with U = L^H and V = U⁻¹, the
    // projection onto the first n+1 coordinates has norm σ_max(U Π_n V),
    // and U Π_n V = U[:, :n+1] · V[:n+1, :].
    let u = chol.adjoint().to_owned();
    let v = linalg::solve_upper_triangular(u.as_ref(), linalg::identity(m).as_ref());
    let mut pnorms = Vec::with_capacity(m);
    for n in 0..m {
        let mut k = linalg::zeros(m, m);
        for i in 0..m {
            for jcol in 0..m {
                let mut s = Complex64::new(0.0, 0.0);
                for t in 0..=n {
                    s += u[(i, t)] * v[(t, jcol)];
                }
                k[(i, jcol)] = s;
            }
        }
        pnorms.push(linalg::op_norm(k.as_ref()));
    }
    // Q_n = P_n - P_{n-1} is rank one in coordinates: ‖Q_n‖ = ‖U e_n‖·‖e_nᵀV‖.
    let qnorms: Vec<f64> = (0..m)
        .map(|n| {
            let colnorm: f64 = (0..m).map(|i| u[(i, n)].norm_sqr()).sum::<f64>().sqrt();
            let rownorm: f64 = (0..m).map(|j| v[(n, j)].norm_sqr()).sum::<f64>().sqrt();
            colnorm * rownorm
        })
        .collect();

    let synth = linalg::from_columns(
        &vectors.iter().map(|x| x.coeffs.clone()).collect::<Vec<_>>(),
    );
    let sv = linalg::singular_values(synth.as_ref());
    let sigma_max = sv.first().map_or(0.0, |s| s * s);
    let sigma_min = sv.last().map_or(0.0, |s| s * s);

    Ok(BasisFamily { vectors, gram, chol, pnorms, qnorms, sigma_min, sigma_max })
}

/// x_n = zⁿ(1-z)^α truncated to n_trunc coefficients, 0 < α < 1/2.
pub fn psi_basis(alpha: f64, m: usize, n_trunc: usize) -> Result<BasisFamily, FamilyError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(FamilyError::AlphaOutOfRange(alpha));
    }
    if n_trunc < m + 2 {
        return Err(FamilyError::TruncationTooSmall { need: m + 2, got: n_trunc });
    }
    let psi = Symbol::one_minus_z_pow(alpha, n_trunc);
    let base = HardyVec::new(psi.coeffs);
    let vectors: Vec<HardyVec> = (0..m)
        .map(|n| {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); n_trunc];
            for k in n..n_trunc {
                coeffs[k] = base.coeffs[k - n];
            }
            HardyVec::new(coeffs)
        })
        .collect();
    general_family(vectors)
}

/// The orthonormal control family z^0..z^{M-1}.
pub fn monomial_family(m: usize, n_trunc: usize) -> Result<BasisFamily, FamilyError> {
    general_family((0..m).map(|k| HardyVec::monomial(k, n_trunc)).collect())
}

/// Frame bounds of the synthesis map plus a threshold verdict.
#[derive(Debug, Clone)]
pub struct RieszDiagnostic {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub stable: bool,
}

impl BasisFamily {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn truncation_order(&self) -> usize {
        self.vectors.first().map_or(0, HardyVec::len)
    }

    pub fn vector(&self, n: usize) -> &HardyVec {
        &self.vectors[n]
    }

    pub fn gram(&self) -> MatRef<'_, Complex64> {
        self.gram.as_ref()
    }

    pub fn xnorm(&self, n: usize) -> f64 {
        self.gram[(n, n)].re.max(0.0).sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        (0..self.len()).map(|n| self.xnorm(n)).fold(f64::INFINITY, f64::min)
    }

    pub fn pnorms(&self) -> &[f64] {
        &self.pnorms
    }

    pub fn qnorms(&self) -> &[f64] {
        &self.qnorms
    }

    pub fn sup_qnorm(&self) -> f64 {
        self.qnorms.iter().copied().fold(0.0, f64::max)
    }

    pub fn riesz_diagnostic(&self, threshold: f64) -> RieszDiagnostic {
        RieszDiagnostic {
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max,
            stable: self.sigma_min >= threshold,
        }
    }

    /// Congruence of an x-coordinate operator to orthonormal coordinates;
    /// its singular values are then honest span norms.
    pub fn to_onb(&self, a: MatRef<'_, Complex64>) -> Mat<Complex64> {
        let la = self.chol.adjoint().to_owned() * a;
        let xh = linalg::solve_lower_triangular(self.chol.as_ref(), la.adjoint().to_owned().as_ref());
        xh.adjoint().to_owned()
    }

    /// Coordinates of the dual family: column n of G⁻¹ gives x′_n in the
    /// x-basis ((x′_n, x_k) = δ_{nk}).
    pub fn dual_coords(&self) -> Mat<Complex64> {
        linalg::solve(self.gram.as_ref(), linalg::identity(self.len()).as_ref())
    }

    /// Ambient vector of x′_n.
    pub fn dual_vector(&self, n: usize) -> HardyVec {
        let d = self.dual_coords();
        let mut acc = HardyVec::zeros(self.truncation_order());
        for j in 0..self.len() {
            acc = acc.add(&self.vectors[j].scale(d[(j, n)]));
        }
        acc
    }

    /// Lower frame bound of each leading block (columns 0..k), k = 1..M —
    /// the profile behind "the leading Gram blocks are nonsingular".
    pub fn prefix_sigma_mins(&self) -> Vec<f64> {
        (1..=self.len())
            .map(|k| {
                let cols: Vec<Vec<Complex64>> =
                    self.vectors[..k].iter().map(|x| x.coeffs.clone()).collect();
                let m = linalg::from_columns(&cols);
                linalg::singular_values(m.as_ref()).last().map_or(0.0, |s| s * s)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn monomial_family_is_orthonormal() {
        let fam = monomial_family(6, 32).unwrap();
        for n in 0..6 {
            assert!((fam.pnorms()[n] - 1.0).abs() < 1e-12);
            assert!((fam.qnorms()[n] - 1.0).abs() < 1e-12);
            assert!(fam.dual_vector(n).sub(fam.vector(n)).norm() < 1e-12);
        }
        let d = fam.riesz_diagnostic(1e-3);
        assert!((d.sigma_min - 1.0).abs() < 1e-12 && (d.sigma_max - 1.0).abs() < 1e-12);
        assert!(d.stable);
    }

    #[test]
    fn oblique_pair_matches_closed_form() {
        // x₀ = e₀, x₁ = cosφ·e₀ + sinφ·e₁: the projection onto x₀ along x₁
        // has norm 1/sinφ, and x′₀ = (1, -cosφ/sinφ).
        for &phi in &[0.3f64, 0.7, 1.2] {
            let x0 = HardyVec::monomial(0, 8);
            let x1 = HardyVec::new({
                let mut v = vec![c(0.0, 0.0); 8];
                v[0] = c(phi.cos(), 0.0);
                v[1] = c(phi.sin(), 0.0);
                v
            });
            let fam = general_family(vec![x0, x1]).unwrap();
            assert!((fam.pnorms()[0] - 1.0 / phi.sin()).abs() < 1e-12, "phi={phi}");
            assert!((fam.pnorms()[1] - 1.0).abs() < 1e-12);
            let d0 = fam.dual_vector(0);
            assert!((d0.coeffs[0] - c(1.0, 0.0)).norm() < 1e-12);
            assert!((d0.coeffs[1] - c(-phi.cos() / phi.sin(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn qnorms_match_projection_differences() {
        // Two routes to ‖Q_n‖: the rank-one formula and σ_max(P_n - P_{n-1})
        // computed from scratch in orthonormal coordinates.
        let fam = psi_basis(0.4, 8, 128).unwrap();
        let m = fam.len();
        let u = fam.chol.adjoint().to_owned();
        let v = linalg::solve_upper_triangular(u.as_ref(), linalg::identity(m).as_ref());
        for n in 0..m {
            let mut k = linalg::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    k[(i, j)] = u[(i, n)] * v[(n, j)];
                }
            }
            let direct = linalg::op_norm(k.as_ref());
            assert!((direct - fam.qnorms()[n]).abs() < 1e-10 * direct.max(1.0));
        }
    }

    #[test]
    fn triangle_inequality_between_reported_arrays() {
        let fam = psi_basis(0.45, 12, 128).unwrap();
        for n in 0..12 {
            let prev = if n == 0 { 0.0 } else { fam.pnorms()[n - 1] };
            assert!(fam.qnorms()[n] <= fam.pnorms()[n] + prev + 1e-12);
        }
    }

    #[test]
    fn psi_norms_nearly_constant_in_n() {
        // |x_n| on the circle is n-independent; truncation only removes an
        // algebraic tail, so ‖x_n‖ sits in [‖x₀‖ - ε, ‖x₀‖].
        let fam = psi_basis(0.4, 16, 256).unwrap();
        let base = fam.xnorm(0);
        for n in 1..16 {
            assert!(fam.xnorm(n) <= base + 1e-12);
            assert!(fam.xnorm(n) > base - 1e-3, "n={n}: {} vs {base}", fam.xnorm(n));
        }
    }

    #[test]
    fn psi_rejects_bad_alpha() {
        assert!(matches!(psi_basis(0.0, 4, 32), Err(FamilyError::AlphaOutOfRange(_))));
        assert!(matches!(psi_basis(0.5, 4, 32), Err(FamilyError::AlphaOutOfRange(_))));
    }

    #[test]
    fn synthesis_sigma_min_degrades_for_psi_family() {
        // The family is linearly independent at every finite stage yet the
        // lower frame bound decays like M^(-2α): more than halved per
        // quadrupling of M once 2α > 1/2.
        let s16 = psi_basis(0.4, 16, 256).unwrap().riesz_diagnostic(1e-3).sigma_min;
        let s64 = psi_basis(0.4, 64, 256).unwrap().riesz_diagnostic(1e-3).sigma_min;
        assert!(s64 < s16 / 2.0, "s16={s16} s64={s64}");
        let s32 = psi_basis(0.45, 32, 256).unwrap().riesz_diagnostic(1e-3).sigma_min;
        let s128 = psi_basis(0.45, 128, 256).unwrap().riesz_diagnostic(1e-3).sigma_min;
        assert!(s128 < s32 / 2.0, "s32={s32} s128={s128}");
    }

    #[test]
    fn kernel_family_frame_bounds_locked() {
        // Normalized kernel vectors of the crowded geometric ladder: a Riesz
        // basis of its span, but with a tiny lower bound (the ladder's
        // separation constant is ~0.024). Regression band around the
        // measured bounds.
        use crate::blaschke::{geometric_zeros, BlaschkeProduct};
        use crate::model;
        let b = BlaschkeProduct::new(geometric_zeros(0.5, 8)).unwrap();
        let basis = model::uv_bases(&b, 256).unwrap();
        let fam = general_family((0..8).map(|n| basis.u(n).clone()).collect()).unwrap();
        let d = fam.riesz_diagnostic(1e-6);
        assert!(d.sigma_min > 1.9e-5 && d.sigma_min < 2.4e-5, "lower={}", d.sigma_min);
        assert!(d.sigma_max > 5.2 && d.sigma_max < 5.7, "upper={}", d.sigma_max);
        assert!(d.stable);
    }

    #[test]
    fn dual_family_biorthogonal_and_reproducing() {
        let fam = psi_basis(0.3, 8, 128).unwrap();
        for n in 0..8 {
            let dual = fam.dual_vector(n);
            for k in 0..8 {
                let ip = inner_product(&dual, fam.vector(k));
                let want = if n == k { 1.0 } else { 0.0 };
                assert!((ip - c(want, 0.0)).norm() < 1e-10, "({n},{k})");
            }
        }
        // Σ (x, x′_k) x_k reproduces members of the span.
        let mut x = HardyVec::zeros(128);
        for (k, w) in [(0usize, 0.3), (3, -1.1), (7, 0.45)] {
            x = x.add(&fam.vector(k).scale(c(w, 0.0)));
        }
        let mut recon = HardyVec::zeros(128);
        for k in 0..8 {
            let coeff = inner_product(&x, &fam.dual_vector(k));
            recon = recon.add(&fam.vector(k).scale(coeff));
        }
        assert!(recon.sub(&x).norm() < 1e-8);
    }

    #[test]
    fn prefix_sigmas_monotone_nonincreasing() {
        let fam = psi_basis(0.4, 12, 128).unwrap();
        let prefix = fam.prefix_sigma_mins();
        for w in prefix.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let n0 = fam.xnorm(0);
        assert!((prefix[0] - n0 * n0).abs() < 1e-12);
    }
}
