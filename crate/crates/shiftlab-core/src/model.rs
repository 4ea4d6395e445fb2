//! Model spaces of finite Blaschke products: reproducing kernels, the
//! orthogonal split H² = BH² ⊕ K_B, the biorthogonal pair (u_n, v_n), and
//! the compressed shift.
//!
//! Inner products between K_B members are carried in *kernel coordinates*
//! with closed forms: the Cauchy Gram ⟨h_{λ_j}, h_{λ_i}⟩ = 1/(1-λ̄_j λ_i)
//! and residue coordinates for the dual family. Truncated coefficient
//! vectors drop |λ|^{2N}/(1-|λ|²) of a kernel's squared norm, which for
//! zeros crowding the boundary is a ruinous loss; the ambient vectors are
//! kept for composition with coefficient-space operators, and their tail
//! deficits are reported, never silently absorbed.

use faer::{Mat, MatRef};
use num_complex::Complex64;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::blaschke::BlaschkeProduct;
use crate::hardy::{inner_product, kernel_vector, DiskPoint, HardyVec};
use crate::linalg;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model-space bases need every zero off the origin (kernel coordinates degenerate at 0)")]
    ZeroAtOrigin,
    #[error("truncation order {n} below degree {degree} plus margin")]
    TruncationTooSmall { n: usize, degree: usize },
    #[error("biorthogonality residual {residual:.3e} exceeds tolerance (zero set too crowded for f64)")]
    Biorthogonality { residual: f64 },
}

/// Coefficients of h_{B,λ} = (1 - conj(B(λ)) B(z)) h_λ(z), truncated to n.
/// This is the reproducing kernel of K_B: P_{K_B} h_λ.
pub fn model_kernel(b: &BlaschkeProduct, lambda: &DiskPoint, n: usize) -> HardyVec {
    let h = kernel_vector(lambda, n);
    let bh = b.taylor(n).apply_to(&h, n);
    h.sub(&bh.scale(b.eval(lambda.get()).conj()))
}

/// Orthonormal frame for the truncated BH² = span{B·z^j : j < n - deg B},
/// built once by QR so projections are plain frame contractions.
pub struct BhFrame {
    q: Mat<Complex64>,
}

impl BhFrame {
    pub fn new(b: &BlaschkeProduct, n: usize) -> Self {
        let degree = b.degree();
        let bcoef = b.taylor(n);
        let cols: Vec<Vec<Complex64>> = (0..n.saturating_sub(degree))
            .map(|j| {
                let mut col = vec![Complex64::new(0.0, 0.0); n];
                for (k, &c) in bcoef.coeffs.iter().enumerate() {
                    if k + j < n {
                        col[k + j] = c;
                    }
                }
                col
            })
            .collect();
        let q = linalg::thin_q(linalg::from_columns(&cols).as_ref());
        Self { q }
    }

    /// Orthogonal split f = g + k with g ∈ BH², k ∈ K_B (at truncation).
    pub fn split(&self, f: &HardyVec) -> (HardyVec, HardyVec) {
        let n = self.q.nrows();
        let fv = f.resized(n);
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..self.q.ncols() {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..n {
                dot += self.q[(i, j)].conj() * fv.coeffs[i];
            }
            for i in 0..n {
                g[i] += self.q[(i, j)] * dot;
            }
        }
        let g = HardyVec::new(g);
        let k = fv.sub(&g);
        (g, k)
    }
}

/// Orthogonal decomposition of f into (BH² part, K_B part) at f's length.
pub fn project(b: &BlaschkeProduct, f: &HardyVec) -> (HardyVec, HardyVec) {
    BhFrame::new(b, f.len()).split(f)
}

/// The kernel-coordinate model of K_B for a finite Blaschke product with
/// distinct zeros λ_0..λ_{M-1}: normalized kernels u_n = c_n h_{λ_n},
/// c_n = (1-|λ_n|²)^{1/2}, and the dual family v_n = B_n u_n / B_n(λ_n).
pub struct ModelSpaceBasis {
    product: BlaschkeProduct,
    truncation_order: usize,
    c: Vec<f64>,
    /// ⟨h_{λ_j}, h_{λ_i}⟩ = 1/(1 - λ̄_j λ_i) at [i][j].
    kernel_gram: Mat<Complex64>,
    /// ⟨u_j, u_i⟩ at [i][j].
    gram_u: Mat<Complex64>,
    /// Cholesky factor: gram_u = L L^H; congruence to an orthonormal frame.
    chol: Mat<Complex64>,
    /// v_n = Σ_i v_coords[i][n] · h_{λ_i} (residue partial fractions).
    v_coords: Mat<Complex64>,
    u_ambient: Vec<HardyVec>,
    v_ambient: Vec<HardyVec>,
    /// max_{n,k} |(v_n, u_k) - δ_{nk}| via the exact coordinates.
    pub biorth_residual: f64,
    /// max_n of the u_n ambient norm deficit 1 - ‖trunc u_n‖² = |λ_n|^{2N}.
    pub ambient_tail: f64,
}

/// Builds the biorthogonal pair and validates it. Errors when the exact
/// coordinates themselves cannot hold biorthogonality in f64 (crowded zero
/// sets amplify the residue products by powers of 1/δ).
pub fn uv_bases(b: &BlaschkeProduct, n: usize) -> Result<ModelSpaceBasis, ModelError> {
    let m = b.degree();
    if b.zeros().iter().any(|z| z.norm() == 0.0) {
        return Err(ModelError::ZeroAtOrigin);
    }
    if n < m + 2 {
        return Err(ModelError::TruncationTooSmall { n, degree: m });
    }
    let lam = b.zeros();
    let c: Vec<f64> = lam.iter().map(|l| (1.0 - l.norm_sqr()).sqrt()).collect();

    let mut kernel_gram = linalg::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            kernel_gram[(i, j)] = ONE / (ONE - lam[j].conj() * lam[i]);
        }
    }
    let mut gram_u = kernel_gram.clone();
    for i in 0..m {
        for j in 0..m {
            gram_u[(i, j)] *= c[i] * c[j];
        }
    }
    let chol = linalg::cholesky_lower(gram_u.as_ref())
        .map_err(|_| ModelError::Biorthogonality { residual: f64::INFINITY })?;

    // Partial fractions of B_n h_{λ_n} over the simple poles 1/λ̄_i:
    //   i = n: residue of h_{λ_n} itself, weight B_n(1/λ̄_n);
    //   i ≠ n: residue of the b_{λ_i} factor, everything else evaluated there.
    let mut v_coords = linalg::zeros(m, m);
    for nn in 0..m {
        let bn_at_zero = b.eval_omit(lam[nn], nn);
        let scale = Complex64::new(c[nn], 0.0) / bn_at_zero;
        for i in 0..m {
            let pole = ONE / lam[i].conj();
            let gamma = if i == nn {
                let mut prod = ONE;
                for k in 0..m {
                    if k != nn {
                        prod *= crate::blaschke::factor_eval(lam[k], pole);
                    }
                }
                prod
            } else {
                let head = (Complex64::new(lam[i].norm(), 0.0) / lam[i])
                    * ((lam[i].norm_sqr() - 1.0) / lam[i].conj());
                let mut prod = ONE;
                for k in 0..m {
                    if k != i && k != nn {
                        prod *= crate::blaschke::factor_eval(lam[k], pole);
                    }
                }
                head * prod / (ONE - lam[nn].conj() * pole)
            };
            v_coords[(i, nn)] = scale * gamma;
        }
    }

    // Exact biorthogonality: (v_n, u_k) = c_k Σ_i v_coords[i][n] h_{λ_i}(λ_k).
    let mut biorth_residual = 0.0f64;
    for nn in 0..m {
        for k in 0..m {
            let mut ip = Complex64::new(0.0, 0.0);
            for i in 0..m {
                ip += v_coords[(i, nn)] / (ONE - lam[i].conj() * lam[k]);
            }
            ip *= c[k];
            let target = if nn == k { ONE } else { Complex64::new(0.0, 0.0) };
            biorth_residual = biorth_residual.max((ip - target).norm());
        }
    }
    if biorth_residual > 1e-6 {
        return Err(ModelError::Biorthogonality { residual: biorth_residual });
    }

    let u_ambient: Vec<HardyVec> = (0..m)
        .map(|i| kernel_vector(&b.zero_point(i), n).scale(Complex64::new(c[i], 0.0)))
        .collect();
    let v_ambient: Vec<HardyVec> = (0..m)
        .map(|nn| {
            let mut acc = HardyVec::zeros(n);
            for i in 0..m {
                acc = acc.add(&kernel_vector(&b.zero_point(i), n).scale(v_coords[(i, nn)]));
            }
            acc
        })
        .collect();
    let ambient_tail = lam
        .iter()
        .map(|l| l.norm_sqr().powi(n as i32))
        .fold(0.0f64, f64::max);

    Ok(ModelSpaceBasis {
        product: b.clone(),
        truncation_order: n,
        c,
        kernel_gram,
        gram_u,
        chol,
        v_coords,
        u_ambient,
        v_ambient,
        biorth_residual,
        ambient_tail,
    })
}

impl ModelSpaceBasis {
    pub fn degree(&self) -> usize {
        self.c.len()
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation_order
    }

    pub fn product(&self) -> &BlaschkeProduct {
        &self.product
    }

    pub fn normalizer(&self, n: usize) -> f64 {
        self.c[n]
    }

    pub fn gram_u(&self) -> MatRef<'_, Complex64> {
        self.gram_u.as_ref()
    }

    pub fn kernel_gram(&self) -> MatRef<'_, Complex64> {
        self.kernel_gram.as_ref()
    }

    pub fn u(&self, n: usize) -> &HardyVec {
        &self.u_ambient[n]
    }

    pub fn v(&self, n: usize) -> &HardyVec {
        &self.v_ambient[n]
    }

    /// v_n(z) for any z in the disc, from the residue coordinates.
    pub fn v_eval(&self, n: usize, z: Complex64) -> Complex64 {
        let lam = self.product.zeros();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.degree() {
            acc += self.v_coords[(i, n)] / (ONE - lam[i].conj() * z);
        }
        acc
    }

    /// ‖v_n‖, exactly: the Gram quadratic form of the residue coordinates.
    pub fn v_norm(&self, n: usize) -> f64 {
        let m = self.degree();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                acc += self.v_coords[(i, n)]
                    * self.v_coords[(j, n)].conj()
                    * self.kernel_gram[(j, i)].conj();
            }
        }
        acc.re.max(0.0).sqrt()
    }

    /// Expansion coefficients of P_{K_B} h_λ in the u-basis:
    /// a_i = conj(v_i(λ)), from f = Σ (f, v_i) u_i with (h_λ, v_i) = conj(v_i(λ)).
    pub fn expand_kernel(&self, z: Complex64) -> Vec<Complex64> {
        (0..self.degree()).map(|i| self.v_eval(i, z).conj()).collect()
    }

    /// Value at z of Σ a_i u_i, via the closed kernel forms.
    pub fn eval_u_combo(&self, a: &[Complex64], z: Complex64) -> Complex64 {
        let lam = self.product.zeros();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.degree() {
            acc += a[i] * self.c[i] / (ONE - lam[i].conj() * z);
        }
        acc
    }

    /// ‖Σ a_i u_i‖ via the exact Gram.
    pub fn norm_u_combo(&self, a: &[Complex64]) -> f64 {
        let m = self.degree();
        let mut acc = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                acc += (a[i] * a[j].conj() * self.gram_u[(j, i)].conj()).re;
            }
        }
        acc.max(0.0).sqrt()
    }

    /// Ambient vector of Σ a_i u_i.
    pub fn assemble_u_combo(&self, a: &[Complex64]) -> HardyVec {
        let mut acc = HardyVec::zeros(self.truncation_order);
        for (i, &ai) in a.iter().enumerate() {
            acc = acc.add(&self.u_ambient[i].scale(ai));
        }
        acc
    }

    /// M×M matrix of T_B = P_{K_B} S|_{K_B} in u-coordinates. Closed form:
    /// z·u_n = u_n/λ̄_n - (c_n/λ̄_n)·1 and P_{K_B} 1 = Σ_i conj(v_i(0)) u_i.
    pub fn compressed_shift(&self) -> Mat<Complex64> {
        let m = self.degree();
        let lam = self.product.zeros();
        let mut t = linalg::zeros(m, m);
        let v0: Vec<Complex64> = (0..m).map(|i| self.v_eval(i, Complex64::new(0.0, 0.0))).collect();
        for nn in 0..m {
            let inv = ONE / lam[nn].conj();
            t[(nn, nn)] = inv;
            let w = Complex64::new(self.c[nn], 0.0) * inv;
            for i in 0..m {
                t[(i, nn)] -= w * v0[i].conj();
            }
        }
        t
    }

    /// Adjoint of an operator (given in u-coordinates) w.r.t. the true K_B
    /// inner product: A* = G⁻¹ A^H G.
    pub fn gram_adjoint(&self, a: MatRef<'_, Complex64>) -> Mat<Complex64> {
        let ah_g = a.adjoint().to_owned() * &self.gram_u;
        linalg::solve(self.gram_u.as_ref(), ah_g.as_ref())
    }

    /// Similarity to orthonormal coordinates: A ↦ L^H A L^{-H}, where
    /// G = L L^H. Operator norms in K_B are singular values of the image.
    pub fn to_onb(&self, a: MatRef<'_, Complex64>) -> Mat<Complex64> {
        let la = self.chol.adjoint().to_owned() * a;
        // Solve X L^H = L^H A  ⇔  L X^H = (L^H A)^H.
        let xh = linalg::solve_lower_triangular(self.chol.as_ref(), la.adjoint().to_owned().as_ref());
        xh.adjoint().to_owned()
    }

    /// Norm of Σ a_i x_i for an external family given by its Gram.
    pub fn combo_norm_in(&self, x_gram: MatRef<'_, Complex64>, a: &[Complex64]) -> f64 {
        let m = a.len();
        let mut acc = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                acc += (a[i] * a[j].conj() * x_gram[(j, i)].conj()).re;
            }
        }
        acc.max(0.0).sqrt()
    }

    /// Random member of K_B with standard-normal-ish u-coordinates.
    pub fn random_member(&self, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..self.degree())
            .map(|_| {
                Complex64::new(rng.random_range(-1.0f64..1.0), rng.random_range(-1.0f64..1.0))
            })
            .collect()
    }
}

/// |f(λ) - (f, h_{B,λ})| computed by two independent ambient routes:
/// polynomial evaluation of f against a coefficient inner product with the
/// model kernel. For f ∈ K_B both sides agree up to truncation tails.
pub fn reproducing_check(b: &BlaschkeProduct, f: &HardyVec, lambda: &DiskPoint) -> f64 {
    let k = model_kernel(b, lambda, f.len());
    (f.eval(lambda.get()) - inner_product(f, &k)).norm()
}

/// Lower-bound margin for the image of an in-region kernel under the map
/// u_n ↦ x_n: returns LHS/RHS of
///   ‖W h_{B,λ}‖ ≥ (δ/2)(1-δ²/9)^{1/2} (inf‖x_n‖ / sup‖Q_n‖) ‖h_λ‖,
/// with ‖h_λ‖ = (1-|λ|²)^{-1/2}. Caller guarantees λ ∈ ∪D_n and supplies
/// the family constants; the expansion coefficients are exact.
pub fn mapped_kernel_margin(
    basis: &ModelSpaceBasis,
    x_gram: MatRef<'_, Complex64>,
    inf_x: f64,
    sup_q: f64,
    lambda: Complex64,
) -> f64 {
    let a = basis.expand_kernel(lambda);
    let lhs = basis.combo_norm_in(x_gram, &a);
    let delta = basis.product().delta();
    let hnorm = (1.0 - lambda.norm_sqr()).sqrt().recip();
    let rhs = 0.5 * delta * (1.0 - delta * delta / 9.0).sqrt() * (inf_x / sup_q) * hnorm;
    lhs / rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::geometric_zeros;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn points(xs: &[f64]) -> Vec<DiskPoint> {
        xs.iter().map(|&x| DiskPoint::new(c(x, 0.0)).unwrap()).collect()
    }

    fn golden() -> BlaschkeProduct {
        BlaschkeProduct::new(geometric_zeros(0.5, 8)).unwrap()
    }

    #[test]
    fn model_kernel_at_a_zero_is_plain_kernel() {
        let b = BlaschkeProduct::new(points(&[0.5, 0.75])).unwrap();
        let lam = DiskPoint::new(c(0.5, 0.0)).unwrap();
        let mk = model_kernel(&b, &lam, 64);
        let hk = kernel_vector(&lam, 64);
        assert!(mk.sub(&hk).norm() < 1e-13);
    }

    #[test]
    fn model_kernel_of_empty_product_vanishes() {
        let b = BlaschkeProduct::new(Vec::new()).unwrap();
        let lam = DiskPoint::new(c(0.3, 0.2)).unwrap();
        assert!(model_kernel(&b, &lam, 32).norm() < 1e-15);
    }

    #[test]
    fn model_kernel_at_origin_matches_series_division_oracle() {
        // h_{B,0} = 1 - conj(B(0)) B(z); the oracle evaluates that formula
        // pointwise while the implementation works in coefficients.
        let b = BlaschkeProduct::new(points(&[0.5, 0.75])).unwrap();
        let lam = DiskPoint::new(c(0.0, 0.0)).unwrap();
        let mk = model_kernel(&b, &lam, 128);
        let b0 = b.eval(c(0.0, 0.0));
        for &x in &[c(0.1, 0.3), c(-0.4, 0.2), c(0.6, 0.0)] {
            let direct = ONE - b0.conj() * b.eval(x);
            assert!((mk.eval(x) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn project_fixes_members_and_annihilates_kernels() {
        let b = BlaschkeProduct::new(points(&[0.5, 0.75])).unwrap();
        let n = 96;
        // f = B z² lies in BH² already.
        let f = b.taylor(n).apply_to(&HardyVec::monomial(2, n), n);
        let (g, k) = project(&b, &f);
        assert!(f.sub(&g).norm() < 1e-12);
        assert!(k.norm() < 1e-12);
        // A kernel at a zero has no BH² part.
        let lam = DiskPoint::new(c(0.75, 0.0)).unwrap();
        let h = kernel_vector(&lam, n);
        let (g2, k2) = project(&b, &h);
        let tail = crate::hardy::kernel_tail_bound(&lam, n);
        assert!(g2.norm() < tail.sqrt() + 1e-10, "bh2 part {}", g2.norm());
        assert!(k2.sub(&h).norm() < tail.sqrt() + 1e-10);
    }

    #[test]
    fn project_matches_closed_form_on_generic_kernel() {
        // P_{BH²} h_λ = conj(B(λ)) B h_λ.
        let b = BlaschkeProduct::new(points(&[0.5, 0.75])).unwrap();
        let n = 160;
        let lam = DiskPoint::new(c(0.3, 0.0)).unwrap();
        let h = kernel_vector(&lam, n);
        let (g, k) = project(&b, &h);
        let direct = b.taylor(n).apply_to(&h, n).scale(b.eval(lam.get()).conj());
        assert!(g.sub(&direct).norm() < 1e-10);
        let mk = model_kernel(&b, &lam, n);
        assert!(k.sub(&mk).norm() < 1e-10);
    }

    #[test]
    fn projection_rank_equals_degree() {
        let b = BlaschkeProduct::new(points(&[0.5, 0.75])).unwrap();
        let n = 64;
        let frame = BhFrame::new(&b, n);
        // I - QQ^H has exactly deg B unit singular values at truncation.
        let mut p = linalg::identity(n);
        for jcol in 0..n {
            let e = HardyVec::monomial(jcol, n);
            let (g, _) = frame.split(&e);
            for i in 0..n {
                p[(i, jcol)] -= g.coeffs[i];
            }
        }
        let sv = linalg::singular_values(p.as_ref());
        let rank = sv.iter().filter(|&&s| s > 0.5).count();
        assert_eq!(rank, 2);
    }

    #[test]
    fn uv_bases_single_zero_collapses() {
        let b = BlaschkeProduct::new(points(&[0.5])).unwrap();
        let basis = uv_bases(&b, 64).unwrap();
        assert!(basis.u(0).sub(basis.v(0)).norm() < 1e-14);
        assert!((basis.v_norm(0) - 1.0).abs() < 1e-14);
        assert!(basis.biorth_residual < 1e-14);
    }

    #[test]
    fn uv_bases_rejects_origin_zero() {
        let b = BlaschkeProduct::new(points(&[0.0, 0.5])).unwrap();
        assert!(matches!(uv_bases(&b, 64), Err(ModelError::ZeroAtOrigin)));
    }

    #[test]
    fn exact_biorthogonality_on_crowded_zeros() {
        // The golden ladder reaches 1-2⁻⁸; ambient truncation at N=256 loses
        // percent-level mass there, the exact route does not.
        let basis = uv_bases(&golden(), 256).unwrap();
        assert!(basis.biorth_residual < 1e-9, "residual {}", basis.biorth_residual);
        for n in 0..8 {
            let bn = basis.product().eval_omit(basis.product().zero(n), n);
            assert!(
                (basis.v_norm(n) * bn.norm() - 1.0).abs() < 1e-8,
                "v norm identity at {n}"
            );
        }
    }

    #[test]
    fn ambient_biorthogonality_agrees_on_benign_zeros() {
        // Where tails are negligible the coefficient route must reproduce
        // the exact one.
        let b = BlaschkeProduct::new(points(&[0.5, 0.75])).unwrap();
        let basis = uv_bases(&b, 256).unwrap();
        for n in 0..2 {
            for k in 0..2 {
                let ip = inner_product(basis.v(n), basis.u(k));
                let want = if n == k { ONE } else { c(0.0, 0.0) };
                assert!((ip - want).norm() < 1e-10, "({n},{k}) -> {ip}");
            }
        }
    }

    #[test]
    fn ambient_biorthogonality_residual_shrinks_with_truncation() {
        let b = BlaschkeProduct::new(points(&[0.5, 0.75, 0.875])).unwrap();
        let mut prev = f64::INFINITY;
        for &n in &[64usize, 128, 256] {
            let basis = uv_bases(&b, n).unwrap();
            let mut worst = 0.0f64;
            for nn in 0..3 {
                for k in 0..3 {
                    let ip = inner_product(basis.v(nn), basis.u(k));
                    let want = if nn == k { ONE } else { c(0.0, 0.0) };
                    worst = worst.max((ip - want).norm());
                }
            }
            assert!(worst < prev, "residual not shrinking at n={n}");
            prev = worst;
        }
    }

    #[test]
    fn dual_value_at_origin_two_routes() {
        // v_i(0) from residue coordinates vs the product formula
        // B_i(0) c_i / B_i(λ_i).
        let basis = uv_bases(&golden(), 256).unwrap();
        let b = basis.product();
        for i in 0..8 {
            let direct = b.eval_omit(c(0.0, 0.0), i) * basis.normalizer(i)
                / b.eval_omit(b.zero(i), i);
            let got = basis.v_eval(i, c(0.0, 0.0));
            // Residue coordinates of crowded poles cancel heavily; only a
            // relative comparison is meaningful.
            let tol = 1e-11 * direct.norm().max(1.0);
            assert!((got - direct).norm() < tol, "{i}: {got} vs {direct}");
        }
    }

    #[test]
    fn expansion_reproduces_random_members_ambient() {
        // f = Σ (f, v_n) u_n checked end-to-end in coefficient space, on a
        // zero set benign enough for truncation to be irrelevant.
        let b = BlaschkeProduct::new(points(&[0.5, 0.75, 0.875])).unwrap();
        let basis = uv_bases(&b, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let a = basis.random_member(&mut rng);
            let f = basis.assemble_u_combo(&a);
            let mut recon = HardyVec::zeros(256);
            for nn in 0..3 {
                let coeff = inner_product(&f, basis.v(nn));
                recon = recon.add(&basis.u(nn).scale(coeff));
            }
            assert!(recon.sub(&f).norm() < 1e-9);
        }
    }

    #[test]
    fn expansion_coefficients_exact_on_crowded_zeros() {
        // The same identity in exact coordinates where ambient sums are
        // unusable: (Σ_i a_i u_i, v_n) recovers a_n through the Gram forms.
        let basis = uv_bases(&golden(), 256).unwrap();
        let lam = basis.product().zeros();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let a = basis.random_member(&mut rng);
            for nn in 0..8 {
                // (u_i, v_n) = c_i Σ_j conj(v_coords[j][n]) / (1 - λ̄_i λ_j)
                let mut ip = c(0.0, 0.0);
                for i in 0..8 {
                    let mut uin = c(0.0, 0.0);
                    for jj in 0..8 {
                        uin += basis.v_coords[(jj, nn)].conj()
                            / (ONE - lam[i].conj() * lam[jj]);
                    }
                    ip += a[i] * uin * basis.normalizer(i);
                }
                assert!((ip - a[nn]).norm() < 1e-9, "coefficient {nn}");
            }
        }
    }

    #[test]
    fn compressed_shift_single_zero_is_scalar() {
        let b = BlaschkeProduct::new(points(&[0.5])).unwrap();
        let basis = uv_bases(&b, 64).unwrap();
        let t = basis.compressed_shift();
        assert!((t[(0, 0)] - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn compressed_shift_spectrum_is_zero_set() {
        for zeros in [points(&[0.5, 0.75]), geometric_zeros(0.5, 8)] {
            let b = BlaschkeProduct::new(zeros).unwrap();
            let basis = uv_bases(&b, 256).unwrap();
            let t = basis.compressed_shift();
            let mut eigs: Vec<f64> = linalg::eigenvalues(t.as_ref())
                .iter()
                .map(|e| e.re)
                .collect();
            eigs.sort_by(f64::total_cmp);
            let mut want: Vec<f64> = b.zeros().iter().map(|z| z.re).collect();
            want.sort_by(f64::total_cmp);
            for (e, w) in eigs.iter().zip(&want) {
                assert!((e - w).abs() < 1e-8, "{e} vs {w}");
            }
        }
    }

    #[test]
    fn compressed_shift_matches_projection_route() {
        // Independent ambient computation: column n = u-coordinates of
        // P_{K_B}(z·u_n), read off by dual pairings with v_i.
        let b = BlaschkeProduct::new(points(&[0.5, 0.75])).unwrap();
        let n = 256;
        let basis = uv_bases(&b, n).unwrap();
        let t = basis.compressed_shift();
        let frame = BhFrame::new(&b, n);
        for col in 0..2 {
            let shifted = basis.u(col).shift_up(n);
            let (_, k) = frame.split(&shifted);
            for row in 0..2 {
                let got = inner_product(&k, basis.v(row));
                assert!((got - t[(row, col)]).norm() < 1e-9, "entry ({row},{col})");
            }
        }
    }

    #[test]
    fn adjoint_of_compressed_shift_is_diagonal_on_u() {
        // S* h_λ = λ̄ h_λ exactly, so the Gram adjoint of T_B must be
        // diag(λ̄) in u-coordinates.
        let basis = uv_bases(&golden(), 256).unwrap();
        let adj = basis.gram_adjoint(basis.compressed_shift().as_ref());
        let lam = basis.product().zeros();
        let mut worst = 0.0f64;
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { lam[i].conj() } else { c(0.0, 0.0) };
                worst = worst.max((adj[(i, j)] - want).norm());
            }
        }
        assert!(worst < 1e-7, "adjoint deviation {worst}");
    }

    #[test]
    fn onb_conjugation_preserves_spectrum_and_normality_of_adjoint_pair() {
        let basis = uv_bases(&golden(), 256).unwrap();
        let t_onb = basis.to_onb(basis.compressed_shift().as_ref());
        let mut eigs: Vec<f64> = linalg::eigenvalues(t_onb.as_ref()).iter().map(|e| e.re).collect();
        eigs.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = basis.product().zeros().iter().map(|z| z.re).collect();
        want.sort_by(f64::total_cmp);
        for (e, w) in eigs.iter().zip(&want) {
            assert!((e - w).abs() < 1e-7);
        }
        // In orthonormal coordinates the operator norm is a plain σ_max and
        // must not exceed 1 by more than rounding (T_B is a contraction).
        assert!(linalg::op_norm(t_onb.as_ref()) <= 1.0 + 1e-9);
    }

    #[test]
    fn reproducing_residual_small_for_members() {
        // Members of the *truncated* model space come from the frame split;
        // raw combinations of truncated kernels sit measurably outside it
        // when zeros crowd the boundary, and the reproducing identity only
        // holds for actual members.
        let b = golden();
        let n = 256;
        let frame = BhFrame::new(&b, n);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let raw = HardyVec::new(
                (0..n)
                    .map(|_| c(rng.random_range(-1.0f64..1.0), rng.random_range(-1.0f64..1.0)))
                    .collect(),
            );
            let (_, f) = frame.split(&raw);
            let z = Complex64::from_polar(
                rng.random_range(0.0f64..0.8),
                rng.random_range(0.0f64..std::f64::consts::TAU),
            );
            let lam = DiskPoint::new(z).unwrap();
            worst = worst.max(reproducing_check(&b, &f, &lam));
        }
        assert!(worst < 1e-8, "worst residual {worst}");
    }

    #[test]
    fn reproducing_zero_function_and_eigenvector_cases() {
        let b = BlaschkeProduct::new(points(&[0.5])).unwrap();
        let basis = uv_bases(&b, 128).unwrap();
        let lam = DiskPoint::new(c(0.5, 0.0)).unwrap();
        assert!(reproducing_check(&b, basis.u(0), &lam) < 1e-10);
        let zero = HardyVec::zeros(128);
        assert!(reproducing_check(&b, &zero, &lam) == 0.0);
    }

    #[test]
    fn mapped_kernel_margin_identity_family() {
        // x_n = u_n: inf‖x_n‖ = 1 and sup‖Q_n‖ = sup‖v_n‖ = 1/δ exactly,
        // making the bound extremely slack — ratio at λ = λ_n is ≥ 2/δ².
        let basis = uv_bases(&golden(), 256).unwrap();
        let sup_q = (0..8).map(|n| basis.v_norm(n)).fold(0.0f64, f64::max);
        let delta = basis.product().delta();
        assert!((sup_q * delta - 1.0).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 0..8 {
            let z = basis.product().sample_in_region(n, &mut rng);
            let ratio =
                mapped_kernel_margin(&basis, basis.gram_u(), 1.0, sup_q, z);
            assert!(ratio >= 1.0, "region {n}: ratio {ratio}");
        }
        let at_zero = mapped_kernel_margin(
            &basis,
            basis.gram_u(),
            1.0,
            sup_q,
            basis.product().zero(7),
        );
        assert!(at_zero >= 2.0 / (delta * delta) * 0.9);
    }
}
