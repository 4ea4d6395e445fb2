//! The block lift: a diagonal model R₀ on a non-orthogonal family, the
//! intertwiners W and Z against the compressed shift, and the operator
//!
//! ```text
//!     T = [ S|_{BH²}   P_{BH²}S|_{K_B}W* ]        on  BH² ⊕ H₀,
//!         [    0             R₀*         ]
//! ```
//!
//! together with the quasiaffinity pair X, Y, intertwining residuals,
//! kernel-image scans, power/polynomial growth probes, and the
//! shift-type invariant-subspace experiment.
//!
//! Coordinates are chosen so that every matrix entry is the exact value of
//! the corresponding infinite-dimensional inner product (up to declared
//! series extensions): the BH² block uses the orthonormal basis {Bz^j},
//! H₀ uses x-coordinates with their Gram, and K_B uses the kernel basis
//! with its Cauchy Gram. Identities are asserted away from the truncation
//! edge, where a margin of columns/degrees is excluded.

use faer::{Mat, MatRef};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::blaschke::BlaschkeProduct;
use crate::family::{self, BasisFamily};
use crate::hardy::{
    midpoint_nodes, outer_from_modulus, poly_apply, sup_norm_estimate, HardyVec, Symbol,
};
use crate::linalg;
use crate::model::{self, ModelSpaceBasis};
use crate::par;

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("composition mismatch: left domain {left}, right codomain {right}")]
    LabelMismatch { left: String, right: String },
    #[error("eigenvalue sequence must be strictly increasing inside (0,1)")]
    NonIncreasing,
    #[error("expected {expected} eigenvalues, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("construction requires real zeros, found {0}")]
    ComplexZero(Complex64),
    #[error("{quantity} residual {residual:.3e} exceeds {tol:.1e}")]
    Tolerance { quantity: String, residual: f64, tol: f64 },
    #[error("inequality still falsified after {0} rescalings of w")]
    RescaleBudget(usize),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Family(#[from] family::FamilyError),
}

/// Coordinate-system tag carried by every operator representation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coords {
    /// Ambient truncated H², monomial coefficients.
    Monomial { n: usize },
    /// Kernel-direction coordinates of the model space (u-basis).
    KernelU { m: usize },
    /// Coordinates of the non-orthogonal family (x-basis).
    FamilyX { m: usize },
    /// BH² ⊕ H₀ block coordinates: shift part then family part.
    Block { shift: usize, family: usize },
    /// A named finite section of an auxiliary space (triadic module).
    Section { space: &'static str, dim: usize },
}

impl std::fmt::Display for Coords {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coords::Monomial { n } => write!(f, "monomial[{n}]"),
            Coords::KernelU { m } => write!(f, "kernel-u[{m}]"),
            Coords::FamilyX { m } => write!(f, "family-x[{m}]"),
            Coords::Block { shift, family } => write!(f, "block[{shift}+{family}]"),
            Coords::Section { space, dim } => write!(f, "{space}[{dim}]"),
        }
    }
}

/// Dense matrix plus the coordinate systems it maps between.
#[derive(Debug, Clone)]
pub struct OperatorRep {
    pub matrix: Mat<Complex64>,
    pub domain: Coords,
    pub codomain: Coords,
}

impl OperatorRep {
    pub fn new(matrix: Mat<Complex64>, domain: Coords, codomain: Coords) -> Self {
        OperatorRep { matrix, domain, codomain }
    }

    /// Largest singular value of the stored matrix (coordinate norm).
    pub fn norm(&self) -> f64 {
        linalg::op_norm(self.matrix.as_ref())
    }

    pub fn sigma_min(&self) -> f64 {
        linalg::sigma_min(self.matrix.as_ref())
    }

    /// self ∘ rhs, refused unless the coordinate labels line up.
    pub fn compose(&self, rhs: &OperatorRep) -> Result<OperatorRep, LiftError> {
        if self.domain != rhs.codomain {
            return Err(LiftError::LabelMismatch {
                left: self.domain.to_string(),
                right: rhs.codomain.to_string(),
            });
        }
        Ok(OperatorRep {
            matrix: &self.matrix * &rhs.matrix,
            domain: rhs.domain.clone(),
            codomain: self.codomain.clone(),
        })
    }
}

/// The analytic symbol g driving Z and the functional-calculus checks.
#[derive(Debug, Clone, PartialEq)]
pub enum GSymbol {
    One,
    /// (1-z)^alpha, principal branch.
    OneMinusZPow(f64),
}

impl GSymbol {
    pub fn value(&self, z: Complex64) -> Complex64 {
        match self {
            GSymbol::One => Complex64::new(1.0, 0.0),
            GSymbol::OneMinusZPow(a) => (Complex64::new(1.0, 0.0) - z).powf(*a),
        }
    }

    pub fn series(&self, order: usize) -> Symbol {
        match self {
            GSymbol::One => Symbol::one(),
            GSymbol::OneMinusZPow(a) => Symbol::one_minus_z_pow(*a, order),
        }
    }

    /// g_*(z) = conj(g(conj z)); its Taylor coefficients are the conjugates
    /// of g's (here: identical, both variants have real coefficients).
    pub fn star_series(&self, order: usize) -> Symbol {
        self.series(order).conj_coeffs()
    }

    pub fn star_value(&self, z: Complex64) -> Complex64 {
        self.value(z.conj()).conj()
    }
}

/// Diagonal model R₀x_n = λ_n x_n in x-coordinates.
pub fn r0_build(lambdas: &[f64], family_len: usize) -> Result<OperatorRep, LiftError> {
    if lambdas.len() != family_len {
        return Err(LiftError::LengthMismatch { expected: family_len, got: lambdas.len() });
    }
    let ok = lambdas.windows(2).all(|w| w[0] < w[1])
        && lambdas.iter().all(|l| *l > 0.0 && *l < 1.0);
    if !ok {
        return Err(LiftError::NonIncreasing);
    }
    let m = lambdas.len();
    let mut d = linalg::zeros(m, m);
    for (i, l) in lambdas.iter().enumerate() {
        d[(i, i)] = Complex64::new(*l, 0.0);
    }
    Ok(OperatorRep::new(d, Coords::FamilyX { m }, Coords::FamilyX { m }))
}

/// Resolvent-growth probe: max over samples of ‖(A - z)⁻¹‖·|z-1|.
/// `a` must already be expressed in orthonormal coordinates.
#[derive(Debug, Clone)]
pub struct RittReport {
    pub constant: f64,
    pub anomalies: usize,
}

pub fn tadmor_ritt_probe(a: MatRef<'_, Complex64>, samples: &[Complex64]) -> RittReport {
    let n = a.nrows();
    let eye = linalg::identity(n);
    // One LU solve per sample; the resolvent norm comes from a power
    // iteration warm-started across neighbouring samples (the resolvent
    // varies smoothly along the sweep).
    let mut tracker = linalg::TopSingularTracker::new(n);
    let mut constant: f64 = 0.0;
    let mut anomalies = 0usize;
    for z in samples {
        let mut shifted = a.to_owned();
        for i in 0..n {
            shifted[(i, i)] -= *z;
        }
        let inv = linalg::solve(shifted.as_ref(), eye.as_ref());
        let finite = (0..n).all(|i| (0..n).all(|j| inv[(i, j)].is_finite()));
        if !finite {
            anomalies += 1;
            continue;
        }
        let norm = tracker.estimate(inv.as_ref());
        if !norm.is_finite() || norm > 1e14 {
            anomalies += 1;
            continue;
        }
        constant = constant.max(norm * (z - Complex64::new(1.0, 0.0)).norm());
    }
    RittReport { constant, anomalies }
}

/// Log-spaced radii in (1, 2] crossed with a full angular sweep.
pub fn ritt_samples(n_radial: usize, n_angular: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_radial * n_angular);
    for i in 0..n_radial {
        // Cluster radii toward 1 where the bound is tight.
        let t = (i + 1) as f64 / n_radial as f64;
        let r = 1.0 + (2f64.powf(t) - 1.0).min(1.0);
        for k in 0..n_angular {
            let th = std::f64::consts::TAU * k as f64 / n_angular as f64;
            out.push(Complex64::from_polar(r, th));
        }
    }
    out
}

/// ‖Aⁿ‖ for n = 1..=n_max by running matrix powers; the top singular value
/// is tracked by warm-started power iteration (validated against full SVD
/// in the tests).
pub fn power_norm_profile(a: MatRef<'_, Complex64>, n_max: usize) -> Vec<f64> {
    let mut tracker = linalg::TopSingularTracker::new(a.ncols());
    let mut power = a.to_owned();
    let mut out = Vec::with_capacity(n_max);
    out.push(tracker.estimate(power.as_ref()));
    for _ in 2..=n_max {
        power = &power * &a;
        out.push(tracker.estimate(power.as_ref()));
    }
    out
}

/// Report from pairing W (u→x) and Z (x→u) against the compressed shift.
#[derive(Debug, Clone)]
pub struct WzReport {
    /// ‖WT_B* − R₀W‖ in coordinates.
    pub intertwine_w: f64,
    /// ‖ZR₀ − T_B*Z‖ in coordinates.
    pub intertwine_z: f64,
    /// max_n |Σ_k ĝ(k)λ_n^k − g(λ_n)|: truncated calculus vs direct values.
    pub calculus_residual: f64,
    pub series_order: usize,
    pub series_tail: f64,
    /// Partial sums of Σ|g(λ_n)|² (admissibility trend).
    pub g_sq_partial: Vec<f64>,
}

/// Build W (Wu_n = x_n) and Z (Zx_n = g(λ_n)u_n) and verify the model
/// intertwining identities. Matrices are in u/x coordinates, where W is the
/// identity and Z is diagonal; all content is in the verification.
pub fn w_z_build(
    basis: &ModelSpaceBasis,
    g: &GSymbol,
    tol: f64,
) -> Result<(OperatorRep, OperatorRep, WzReport), LiftError> {
    let m = basis.degree();
    let lambdas: Vec<Complex64> = (0..m).map(|n| basis.product().zero(n)).collect();
    let gvals: Vec<Complex64> = lambdas.iter().map(|l| g.value(*l)).collect();

    let w = OperatorRep::new(linalg::identity(m), Coords::KernelU { m }, Coords::FamilyX { m });
    let mut zm = linalg::zeros(m, m);
    for (i, gv) in gvals.iter().enumerate() {
        zm[(i, i)] = *gv;
    }
    let z = OperatorRep::new(zm, Coords::FamilyX { m }, Coords::KernelU { m });

    // T_B* is diagonal with conj(λ_n) in u-coordinates and R₀ is diagonal
    // with λ_n in x-coordinates, so the intertwining residuals reduce to
    // entrywise |conj(λ) − λ| on real data — asserted, not assumed.
    let mut intertwine_w: f64 = 0.0;
    let mut intertwine_z: f64 = 0.0;
    for (i, l) in lambdas.iter().enumerate() {
        intertwine_w = intertwine_w.max((l.conj() - l).norm());
        intertwine_z = intertwine_z.max((gvals[i] * (l - l.conj())).norm());
    }

    // Truncated Taylor calculus for g(T_B*): since T_B* = diag(conj λ) in
    // u-coordinates, the series collapses to scalar sums; the order is grown
    // until the geometric tail bound clears the target.
    let lam_max = lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let mut order = 256usize;
    let (series, tail) = loop {
        let s = g.series(order);
        let last = s.coeffs.last().map_or(0.0, |c| c.norm());
        let tail = if lam_max < 1.0 {
            last * lam_max.powi(order as i32) / (1.0 - lam_max)
        } else {
            f64::INFINITY
        };
        if tail <= 1e-12 || order >= (1 << 17) {
            break (s, tail);
        }
        order *= 2;
    };
    let mut calculus_residual: f64 = 0.0;
    for (i, l) in lambdas.iter().enumerate() {
        let summed = poly_apply(&series.coeffs, l.conj()).conj();
        calculus_residual = calculus_residual.max((summed - gvals[i]).norm());
    }
    if calculus_residual > tol {
        return Err(LiftError::Tolerance {
            quantity: "functional calculus".into(),
            residual: calculus_residual,
            tol,
        });
    }

    let mut g_sq_partial = Vec::with_capacity(m);
    let mut acc = 0.0;
    for gv in &gvals {
        acc += gv.norm_sqr();
        g_sq_partial.push(acc);
    }

    Ok((
        w,
        z,
        WzReport {
            intertwine_w,
            intertwine_z,
            calculus_residual,
            series_order: series.coeffs.len(),
            series_tail: tail,
            g_sq_partial,
        },
    ))
}

/// Configuration of a block-lift build.
#[derive(Debug, Clone)]
pub struct LiftConfig {
    /// Geometric zero ladder ratio: λ_n = 1 − q^{n+1}.
    pub zeros_q: f64,
    /// Number of zeros = family size.
    pub m: usize,
    /// Ambient truncation order.
    pub n: usize,
    /// Edge margin excluded from identity checks (0 → max(deg B, 32)).
    pub margin: usize,
    /// ψ-family exponent; `None` selects the degenerate family x_n = u_n.
    pub alpha: Option<f64>,
    pub g: GSymbol,
}

impl LiftConfig {
    /// The calibrated non-Riesz configuration.
    pub fn golden() -> Self {
        LiftConfig {
            zeros_q: 0.5,
            m: 8,
            n: 256,
            margin: 0,
            alpha: Some(0.4),
            g: GSymbol::OneMinusZPow(0.5),
        }
    }

    /// x_n = u_n with g ≡ 1: T is unitarily equivalent to the truncated
    /// shift and every residual must sit at rounding level.
    pub fn degenerate() -> Self {
        LiftConfig { zeros_q: 0.5, m: 8, n: 256, margin: 0, alpha: None, g: GSymbol::One }
    }
}

/// Residuals and surrogates attached to an assembled block lift.
#[derive(Debug, Clone)]
pub struct LiftResiduals {
    pub yt_sy: f64,
    pub xs_tx: f64,
    pub yx_gs: f64,
    /// ‖Y(XY) − g_*(S)Y‖ on the restricted domain: the XY = g_*(T) identity
    /// checked through the injective factor Y.
    pub xy_via_y: f64,
    /// max over n ≤ margin of the shift-compression identity
    /// P_{BH²}Tⁿ|_{H₀} = P_{BH²}Sⁿ|_{K_B}W*.
    pub proj_power: f64,
    pub x_sigma_min: f64,
    pub y_sigma_min: f64,
}

/// Assembled block operator with its quasiaffinity pair.
pub struct BlockLift {
    config: LiftConfig,
    basis: ModelSpaceBasis,
    family: BasisFamily,
    lambdas: Vec<f64>,
    /// Dimension of the BH² block (= n − m zeros).
    nb: usize,
    margin: usize,
    x_gram: Mat<Complex64>,
    x_chol: Mat<Complex64>,
    t: Mat<Complex64>,
    x_mat: Mat<Complex64>,
    y_mat: Mat<Complex64>,
    t_onb: Mat<Complex64>,
    pub residuals: LiftResiduals,
}

fn is_real(z: Complex64) -> bool {
    z.im.abs() < 1e-14
}

/// Extension length so that geometric tails with ratio `lam_max` fall
/// below 1e-13 relative.
fn series_extension(lam_max: f64) -> usize {
    if lam_max <= 0.0 {
        return 16;
    }
    ((30.0 / -lam_max.ln()).ceil() as usize).clamp(16, 1 << 16)
}

/// Fourier coefficients ρ(d) = Σ_u conj(B̂(u))·ĝ_*(u+d) of conj(B)·g_* on
/// the circle, for d in [-(n_in-1), nb-1]. These are exactly the entries
/// (g_* z^t, Bz^j) at d = j - t, i.e. the BH²-row block of the lifted
/// calculus operator.
fn toeplitz_symbol_bh(
    b_ext: &[Complex64],
    g_ext: &[Complex64],
    n_in: usize,
    nb: usize,
) -> Vec<Complex64> {
    let len = n_in + nb - 1;
    let mut rho = vec![Complex64::new(0.0, 0.0); len];
    for (idx, r) in rho.iter_mut().enumerate() {
        let d = idx as i64 - (n_in as i64 - 1);
        let mut s = Complex64::new(0.0, 0.0);
        for (u, bc) in b_ext.iter().enumerate() {
            let gi = u as i64 + d;
            if gi < 0 {
                continue;
            }
            if gi as usize >= g_ext.len() {
                break;
            }
            s += bc.conj() * g_ext[gi as usize];
        }
        *r = s;
    }
    rho
}

fn rho_at(rho: &[Complex64], n_in: usize, j: usize, t: usize) -> Complex64 {
    rho[(j as i64 - t as i64 + n_in as i64 - 1) as usize]
}

/// op-norm of `d` with the first `rows` rows and the columns selected by
/// `keep` (everything else zeroed — the edge exclusion).
fn restricted_norm<F: Fn(usize) -> bool>(d: MatRef<'_, Complex64>, rows: usize, keep: F) -> f64 {
    let cols: Vec<usize> = (0..d.ncols()).filter(|c| keep(*c)).collect();
    let mut sub = linalg::zeros(rows, cols.len());
    for (cc, c) in cols.iter().enumerate() {
        for r in 0..rows {
            sub[(r, cc)] = d[(r, *c)];
        }
    }
    linalg::op_norm(sub.as_ref())
}

pub fn assemble_lift(cfg: &LiftConfig) -> Result<BlockLift, LiftError> {
    let zeros = crate::blaschke::geometric_zeros(cfg.zeros_q, cfg.m);
    let b = BlaschkeProduct::new(zeros).map_err(|_| LiftError::NonIncreasing)?;
    let basis = model::uv_bases(&b, cfg.n)?;
    let m = cfg.m;
    let n = cfg.n;
    let nb = n - m;
    let margin = if cfg.margin == 0 { m.max(32) } else { cfg.margin };

    let mut lambdas = Vec::with_capacity(m);
    for i in 0..m {
        let z = b.zero(i);
        if !is_real(z) {
            return Err(LiftError::ComplexZero(z));
        }
        lambdas.push(z.re);
    }

    // The family: ψ-vectors or the kernel directions themselves. In the
    // degenerate case the Gram must be the exact Cauchy Gram — the truncated
    // one differs at percent level for crowded ladders.
    let family = match cfg.alpha {
        Some(alpha) => family::psi_basis(alpha, m, n)?,
        None => family::general_family((0..m).map(|k| basis.u(k).clone()).collect())?,
    };
    let x_gram: Mat<Complex64> = match cfg.alpha {
        Some(_) => family.gram().to_owned(),
        None => basis.gram_u().to_owned(),
    };
    let x_chol = linalg::cholesky_lower(x_gram.as_ref())
        .map_err(|_| LiftError::Tolerance {
            quantity: "family Gram Cholesky".into(),
            residual: f64::NAN,
            tol: 0.0,
        })?;

    let cvec: Vec<f64> = (0..m).map(|i| basis.normalizer(i)).collect();
    let b0 = b.eval(Complex64::new(0.0, 0.0));

    // W* = G_u⁻¹ G_x  (x-coords → u-coords), Z* = G_x⁻¹ diag(conj g(λ)) G_u.
    let w_star = linalg::solve(basis.gram_u(), x_gram.as_ref());
    let mut diag_gbar = linalg::zeros(m, m);
    for i in 0..m {
        diag_gbar[(i, i)] = cfg.g.value(Complex64::new(lambdas[i], 0.0)).conj();
    }
    let z_star = linalg::solve(x_gram.as_ref(), (&diag_gbar * basis.gram_u()).as_ref());

    // T: upper-left nilpotent shift in {Bz^j}, upper-right the rank-one
    // P_{BH²}S|_{K_B}W* (image = span{B}), lower-right R₀* = G_x⁻¹ΛG_x.
    let mut t = linalg::zeros(n, n);
    for j in 1..nb {
        t[(j, j - 1)] = Complex64::new(1.0, 0.0);
    }
    for ncol in 0..m {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..m {
            s += w_star[(i, ncol)] * cvec[i] / Complex64::new(lambdas[i], 0.0).conj();
        }
        t[(0, nb + ncol)] = -b0.conj() * s;
    }
    let mut lam_gx = linalg::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            lam_gx[(i, j)] = Complex64::new(lambdas[i], 0.0).conj() * x_gram[(i, j)];
        }
    }
    let r0_star = linalg::solve(x_gram.as_ref(), lam_gx.as_ref());
    for i in 0..m {
        for j in 0..m {
            t[(nb + i, nb + j)] = r0_star[(i, j)];
        }
    }

    // Ambient S and the calculus Toeplitz for the identity checks.
    let mut s_amb = linalg::zeros(n, n);
    for k in 1..n {
        s_amb[(k, k - 1)] = Complex64::new(1.0, 0.0);
    }
    let lam_max = lambdas.iter().fold(0.0f64, |a, l| a.max(*l));
    let ext = series_extension(lam_max);
    let g_star_ext = cfg.g.star_series(n + ext);
    let b_taylor_ext = b.taylor(n + ext);
    let g_star_toep = cfg.g.star_series(n).toeplitz(n);

    // Y: block → ambient. BH² columns are the truncated Bz^j, family
    // columns are W*x_n expanded over the truncated kernel vectors.
    let b_vec = HardyVec::new(b_taylor_ext.coeffs[..n].to_vec());
    let mut y_mat = linalg::zeros(n, n);
    for j in 0..nb {
        for k in j..n {
            y_mat[(k, j)] = b_vec.coeffs[k - j];
        }
    }
    for ncol in 0..m {
        for i in 0..m {
            let coeff = w_star[(i, ncol)];
            let u = basis.u(i);
            for k in 0..n {
                y_mat[(k, nb + ncol)] += coeff * u.coeffs[k];
            }
        }
    }

    // X: ambient → block. Upper rows: the Toeplitz of conj(B)g_* (exact
    // inner products (g_* z^t, Bz^j)). Lower rows: Z* applied to the
    // kernel-interpolation coordinates of the input.
    let rho = toeplitz_symbol_bh(&b_taylor_ext.coeffs, &g_star_ext.coeffs, n, nb);
    let mut x_mat = linalg::zeros(n, n);
    for j in 0..nb {
        for tcol in 0..n {
            x_mat[(j, tcol)] = rho_at(&rho, n, j, tcol);
        }
    }
    // Interpolation: coordinates β of P_{K_B}f solve A β = [f(λ_i)] with
    // A[i][k] = u_k(λ_i).
    let mut interp_a = linalg::zeros(m, m);
    for i in 0..m {
        for k in 0..m {
            interp_a[(i, k)] = Complex64::new(cvec[k], 0.0)
                / (Complex64::new(1.0, 0.0)
                    - Complex64::new(lambdas[k], 0.0).conj() * lambdas[i]);
        }
    }
    let mut vand = linalg::zeros(m, n);
    for i in 0..m {
        let mut p = Complex64::new(1.0, 0.0);
        for tcol in 0..n {
            vand[(i, tcol)] = p;
            p *= lambdas[i];
        }
    }
    let beta_all = linalg::solve(interp_a.as_ref(), vand.as_ref());
    let lower = &z_star * &beta_all;
    for i in 0..m {
        for tcol in 0..n {
            x_mat[(nb + i, tcol)] = lower[(i, tcol)];
        }
    }

    // Residuals, edge-margin excluded on both sides.
    let amb_rows = n - margin;
    let keep_block = |c: usize| c >= nb || c < nb.saturating_sub(margin);
    let keep_amb = |c: usize| c < n - margin;

    let yt = &y_mat * &t;
    let sy = &s_amb * &y_mat;
    let yt_sy = restricted_norm((&yt - &sy).as_ref(), amb_rows, keep_block);

    let xs = &x_mat * &s_amb;
    let tx = &t * &x_mat;
    let d_xstx = &xs - &tx;
    // Block outputs: drop the q-edge rows, keep all family rows.
    let mut d_trim = linalg::zeros(n, n);
    for r in 0..n {
        if r < nb && r >= nb - margin {
            continue;
        }
        for c in 0..n {
            d_trim[(r, c)] = d_xstx[(r, c)];
        }
    }
    let xs_tx = restricted_norm(d_trim.as_ref(), n, keep_amb);

    let yx = &y_mat * &x_mat;
    let yx_gs = restricted_norm((&yx - &g_star_toep).as_ref(), amb_rows, keep_amb);

    let xy = &x_mat * &y_mat;
    let y_xy = &y_mat * &xy;
    let gs_y = &g_star_toep * &y_mat;
    let xy_via_y = restricted_norm((&y_xy - &gs_y).as_ref(), amb_rows, keep_block);

    // P_{BH²}Tⁿ|_{H₀} = P_{BH²}Sⁿ|_{K_B}W*: the right side has closed-form
    // coordinates (Sⁿu_i, Bz^j) = c_i·conj(τ_i(n−j)) with the tail sums
    // τ_i(d) = Σ_{s≥d} B̂(s)λ_i^{s−d}, zero for j ≥ n. (Equivalently
    // −λ_i^{−d}Σ_{s<d}B̂(s)λ_i^s by B(λ_i) = 0, but the tail form avoids
    // the λ^{−d} cancellation blow-up.) Tabulated by backward recursion.
    let pow_depth = margin.min(nb);
    let mut tau = vec![vec![Complex64::new(0.0, 0.0); pow_depth + 1]; m];
    for i in 0..m {
        let li = lambdas[i];
        let mut acc = Complex64::new(0.0, 0.0);
        for s in (pow_depth..b_taylor_ext.coeffs.len()).rev() {
            acc = acc * li + b_taylor_ext.coeffs[s];
        }
        tau[i][pow_depth] = acc;
        for d in (0..pow_depth).rev() {
            tau[i][d] = b_taylor_ext.coeffs[d] + li * tau[i][d + 1];
        }
    }
    let mut proj_power: f64 = 0.0;
    let mut tn = t.clone();
    for npow in 1..=pow_depth {
        let mut worst: f64 = 0.0;
        for ncol in 0..m {
            for j in 0..npow.min(nb) {
                let mut rhs = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    rhs += w_star[(i, ncol)] * cvec[i] * tau[i][npow - j].conj();
                }
                worst = worst.max((tn[(j, nb + ncol)] - rhs).norm());
            }
            for j in npow..nb {
                worst = worst.max(tn[(j, nb + ncol)].norm());
            }
        }
        proj_power = proj_power.max(worst);
        if npow < pow_depth {
            tn = &tn * &t;
        }
    }

    // Quasiaffinity surrogates: smallest singular value away from the edge.
    let x_sigma_min = {
        let cols: Vec<usize> = (0..n - margin).collect();
        let mut sub = linalg::zeros(n, cols.len());
        for (cc, c) in cols.iter().enumerate() {
            for r in 0..n {
                sub[(r, cc)] = x_mat[(r, *c)];
            }
        }
        linalg::sigma_min(sub.as_ref())
    };
    let y_sigma_min = {
        let cols: Vec<usize> = (0..n).filter(|c| keep_block(*c)).collect();
        let mut sub = linalg::zeros(n, cols.len());
        for (cc, c) in cols.iter().enumerate() {
            for r in 0..n {
                sub[(r, cc)] = y_mat[(r, *c)];
            }
        }
        linalg::sigma_min(sub.as_ref())
    };

    // Orthonormal block coordinates: Λ = diag(I, L_x), T̃ = ΛᴴTΛ^{-H}.
    let mut lam_full = linalg::identity(n);
    for i in 0..m {
        for j in 0..m {
            lam_full[(nb + i, nb + j)] = x_chol[(i, j)];
        }
    }
    let th_lam = lam_full.adjoint().to_owned() * &t;
    let t_onb = linalg::solve_lower_triangular(
        lam_full.as_ref(),
        th_lam.adjoint().to_owned().as_ref(),
    )
    .adjoint()
    .to_owned();

    Ok(BlockLift {
        config: cfg.clone(),
        basis,
        family,
        lambdas,
        nb,
        margin,
        x_gram,
        x_chol,
        t,
        x_mat,
        y_mat,
        t_onb,
        residuals: LiftResiduals {
            yt_sy,
            xs_tx,
            yx_gs,
            xy_via_y,
            proj_power,
            x_sigma_min,
            y_sigma_min,
        },
    })
}

impl BlockLift {
    pub fn config(&self) -> &LiftConfig {
        &self.config
    }

    pub fn basis(&self) -> &ModelSpaceBasis {
        &self.basis
    }

    pub fn family(&self) -> &BasisFamily {
        &self.family
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn shift_dim(&self) -> usize {
        self.nb
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn t_rep(&self) -> OperatorRep {
        OperatorRep::new(
            self.t.clone(),
            Coords::Block { shift: self.nb, family: self.lambdas.len() },
            Coords::Block { shift: self.nb, family: self.lambdas.len() },
        )
    }

    pub fn x_rep(&self) -> OperatorRep {
        OperatorRep::new(
            self.x_mat.clone(),
            Coords::Monomial { n: self.config.n },
            Coords::Block { shift: self.nb, family: self.lambdas.len() },
        )
    }

    pub fn y_rep(&self) -> OperatorRep {
        OperatorRep::new(
            self.y_mat.clone(),
            Coords::Block { shift: self.nb, family: self.lambdas.len() },
            Coords::Monomial { n: self.config.n },
        )
    }

    /// T in orthonormal block coordinates: singular values of (powers,
    /// polynomials of) this matrix are honest space norms.
    pub fn t_onb(&self) -> MatRef<'_, Complex64> {
        self.t_onb.as_ref()
    }

    pub fn x_gram(&self) -> MatRef<'_, Complex64> {
        self.x_gram.as_ref()
    }

    /// inf ‖x_n‖ of the attached family.
    pub fn xnorm_inf(&self) -> f64 {
        self.family.inf_norm()
    }

    /// sup ‖Q_n‖: coordinate-functional norms for the ψ-family; for the
    /// degenerate family the exact dual norms ‖v_n‖ from the model basis.
    pub fn qnorm_sup(&self) -> f64 {
        match self.config.alpha {
            Some(_) => self.family.sup_qnorm(),
            None => (0..self.lambdas.len())
                .map(|i| self.basis.v_norm(i))
                .fold(0.0, f64::max),
        }
    }
}

/// The block operator T̃ alone, in orthonormal coordinates, without the
/// ambient X/Y machinery: every block entry is closed-form (exact Cauchy
/// Gram for the kernel directions), so this scales to ladders far deeper
/// than the full assembly — the regime where the polynomial-growth
/// contrast actually develops.
pub fn family_block_t(cfg: &LiftConfig) -> Result<Mat<Complex64>, LiftError> {
    let m = cfg.m;
    let n = cfg.n;
    let nb = n - m;
    let mut lambdas = Vec::with_capacity(m);
    for i in 0..m {
        let l = 1.0 - cfg.zeros_q.powi(i as i32 + 1);
        if !(l > 0.0 && l < 1.0) {
            return Err(LiftError::NonIncreasing);
        }
        lambdas.push(l);
    }
    let cvec: Vec<f64> = lambdas.iter().map(|l| (1.0 - l * l).sqrt()).collect();
    let b0: f64 = lambdas.iter().product();

    let mut gram_u = linalg::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram_u[(i, j)] =
                Complex64::new(cvec[i] * cvec[j] / (1.0 - lambdas[i] * lambdas[j]), 0.0);
        }
    }
    let x_gram = match cfg.alpha {
        Some(alpha) => family::psi_basis(alpha, m, n)?.gram().to_owned(),
        None => gram_u.clone(),
    };
    let x_chol =
        linalg::cholesky_lower(x_gram.as_ref()).map_err(|_| LiftError::Tolerance {
            quantity: "family Gram Cholesky".into(),
            residual: f64::NAN,
            tol: 0.0,
        })?;
    let w_star = linalg::solve(gram_u.as_ref(), x_gram.as_ref());

    let mut t = linalg::zeros(n, n);
    for j in 1..nb {
        t[(j, j - 1)] = Complex64::new(1.0, 0.0);
    }
    for ncol in 0..m {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..m {
            s += w_star[(i, ncol)] * cvec[i] / lambdas[i];
        }
        t[(0, nb + ncol)] = -Complex64::new(b0, 0.0) * s;
    }
    let mut lam_gx = linalg::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            lam_gx[(i, j)] = Complex64::new(lambdas[i], 0.0) * x_gram[(i, j)];
        }
    }
    let r0_star = linalg::solve(x_gram.as_ref(), lam_gx.as_ref());
    for i in 0..m {
        for j in 0..m {
            t[(nb + i, nb + j)] = r0_star[(i, j)];
        }
    }

    let mut lam_full = linalg::identity(n);
    for i in 0..m {
        for j in 0..m {
            lam_full[(nb + i, nb + j)] = x_chol[(i, j)];
        }
    }
    let lam_h = lam_full.adjoint().to_owned();
    let th_lam = &lam_h * &t;
    Ok(linalg::solve_lower_triangular(
        lam_full.as_ref(),
        th_lam.adjoint().to_owned().as_ref(),
    )
    .adjoint()
    .to_owned())
}

/// Scan of ‖Y*h_λ‖/‖h_λ‖ over a disc grid, entirely in closed form:
/// ratio² = |B(λ)|² + (1−|λ|²)·‖W h_{B,λ}‖²_x.
#[derive(Debug, Clone)]
pub struct KernelRatioReport {
    pub c_low: f64,
    pub c_high: f64,
    /// Smallest ratio among points outside every pseudo-hyperbolic region.
    pub outside_min: f64,
    /// The δ²/6 floor those points must clear.
    pub outside_floor: f64,
    /// Smallest mapped-kernel margin among in-region points (≥ 1 required).
    pub inside_margin_min: f64,
    pub grid_len: usize,
    pub outside_count: usize,
    pub inside_count: usize,
}

pub fn kernel_ratio_scan(lift: &BlockLift, radius: f64, grid_points: usize) -> KernelRatioReport {
    let b = lift.basis().product();
    let delta = b.delta();
    let floor = delta * delta / 6.0;
    let inf_x = lift.xnorm_inf();
    let sup_q = lift.qnorm_sup();

    // Sunflower-style grid: uniform in area, irrational angular stride. The
    // pseudo-hyperbolic regions around the zeros are far too small for a
    // uniform grid to hit, so each region also gets a fixed quota of seeded
    // samples — the in-region margin statistic is always populated.
    let mut pts: Vec<Complex64> = (0..grid_points)
        .map(|i| {
            let r = radius * ((i as f64 + 0.5) / grid_points as f64).sqrt();
            let th = std::f64::consts::TAU * (i as f64 * 0.618033988749895).fract();
            Complex64::from_polar(r, th)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1e);
    for zi in 0..b.degree() {
        for _ in 0..16 {
            pts.push(b.sample_in_region(zi, &mut rng));
        }
    }

    let rows: Vec<(f64, Option<f64>, bool)> = par::map_slice(&pts, |z| {
        let a = lift.basis().expand_kernel(*z);
        let wnorm = lift.basis().combo_norm_in(lift.x_gram(), &a);
        let ratio =
            (b.eval(*z).norm_sqr() + (1.0 - z.norm_sqr()) * wnorm * wnorm).sqrt();
        let inside = b.region_membership(*z).is_some();
        let margin = if inside {
            Some(model::mapped_kernel_margin(lift.basis(), lift.x_gram(), inf_x, sup_q, *z))
        } else {
            None
        };
        (ratio, margin, inside)
    });

    let mut c_low = f64::INFINITY;
    let mut c_high: f64 = 0.0;
    let mut outside_min = f64::INFINITY;
    let mut inside_margin_min = f64::INFINITY;
    let mut inside_count = 0;
    let mut outside_count = 0;
    for (ratio, margin, inside) in rows {
        c_low = c_low.min(ratio);
        c_high = c_high.max(ratio);
        if inside {
            inside_count += 1;
            if let Some(mg) = margin {
                inside_margin_min = inside_margin_min.min(mg);
            }
        } else {
            outside_count += 1;
            outside_min = outside_min.min(ratio);
        }
    }
    KernelRatioReport {
        c_low,
        c_high,
        outside_min,
        outside_floor: floor,
        inside_margin_min,
        grid_len: pts.len(),
        outside_count,
        inside_count,
    }
}

/// Probe polynomials for the growth experiments: per degree, the monomial
/// z^d (whose calculus/sup ratio is exactly ‖T^d‖), a few seeded random
/// coefficient vectors, and Fejér-type and lacunary shapes.
pub fn probe_polys(degree: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut out = Vec::new();
    let mut mono = vec![Complex64::new(0.0, 0.0); degree + 1];
    mono[degree] = Complex64::new(1.0, 0.0);
    out.push(mono);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ degree as u64);
    for _ in 0..3 {
        let coeffs: Vec<Complex64> = (0..=degree)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        out.push(coeffs);
    }
    let fejer: Vec<Complex64> = (0..=degree)
        .map(|k| Complex64::new(1.0 - k as f64 / (degree + 1) as f64, 0.0))
        .collect();
    out.push(fejer);
    let mut lac = vec![Complex64::new(0.0, 0.0); degree + 1];
    let mut p = 1usize;
    while p <= degree {
        lac[p] = Complex64::new(1.0, 0.0);
        p *= 2;
    }
    lac[0] = Complex64::new(1.0, 0.0);
    out.push(lac);
    out
}

#[derive(Debug, Clone)]
pub struct PolyboundReport {
    /// (degree bucket, max over probes of ‖p(T)‖ / sup|p|).
    pub buckets: Vec<(usize, f64)>,
}

/// Growth of the polynomial calculus against the sup norm. One pass of
/// running powers of T̃ serves every probe polynomial.
pub fn polybound_probe(lift: &BlockLift, buckets: &[usize], seed: u64) -> PolyboundReport {
    polybound_probe_matrix(lift.t_onb(), buckets, seed)
}

/// Same probe on a bare operator matrix (orthonormal coordinates assumed),
/// for configs built with [`family_block_t`] where the full lift is overkill.
pub fn polybound_probe_matrix(
    t: MatRef<'_, Complex64>,
    buckets: &[usize],
    seed: u64,
) -> PolyboundReport {
    let n = t.nrows();
    let dmax = buckets.iter().copied().max().unwrap_or(0);

    struct Probe {
        bucket: usize,
        coeffs: Vec<Complex64>,
        acc: Mat<Complex64>,
    }
    let mut probes: Vec<Probe> = Vec::new();
    for &d in buckets {
        for coeffs in probe_polys(d, seed) {
            probes.push(Probe { bucket: d, coeffs, acc: linalg::zeros(n, n) });
        }
    }

    let mut power = linalg::identity(n);
    for k in 0..=dmax {
        for probe in probes.iter_mut() {
            if let Some(c) = probe.coeffs.get(k) {
                if c.norm() > 0.0 {
                    let scaled = linalg::scale(power.as_ref(), *c);
                    probe.acc = &probe.acc + &scaled;
                }
            }
        }
        if k < dmax {
            power = &power * t;
        }
    }

    let mut out: Vec<(usize, f64)> = buckets.iter().map(|d| (*d, 0.0)).collect();
    for probe in &probes {
        let sup = sup_norm_estimate(&HardyVec::new(probe.coeffs.clone()), 4096);
        if sup <= 0.0 {
            continue;
        }
        let ratio = linalg::op_norm(probe.acc.as_ref()) / sup;
        for entry in out.iter_mut() {
            if entry.0 == probe.bucket {
                entry.1 = entry.1.max(ratio);
            }
        }
    }
    PolyboundReport { buckets: out }
}

#[derive(Debug, Clone)]
pub struct ShiftSubspaceReport {
    /// min ‖Yy‖/‖y‖ over the orthonormal sample of the cyclic subspace.
    pub min_ratio: f64,
    pub span_rank: usize,
    pub full_rank: usize,
    /// Doublings of w needed before the domination inequality held.
    pub rescales: usize,
    pub falsified: bool,
    pub krylov_dim: usize,
}

/// The invariant-subspace experiment: build h ∈ BH² with |h| ≥ |f| + w^{1/2}
/// pointwise on the circle for f = W*x, take the cyclic subspace of h ⊕ x
/// under T, and verify the two structural conclusions — ‖Yy‖ ≥ ‖y‖/√2 on it,
/// and that together with BH² ⊕ {0} it spans everything.
pub fn shift_subspace_experiment(
    lift: &BlockLift,
    seed: u64,
) -> Result<ShiftSubspaceReport, LiftError> {
    let m = lift.lambdas.len();
    let n = lift.config.n;
    let nb = lift.nb;
    let grid = 2048usize;

    // x = Z*u for a cyclic u: the coordinate route to a vector cyclic for
    // the diagonal part.
    let ones = linalg::from_columns(&[vec![Complex64::new(1.0, 0.0); m]]);
    let mut diag_gbar = linalg::zeros(m, m);
    for i in 0..m {
        diag_gbar[(i, i)] = lift.config.g.value(Complex64::new(lift.lambdas[i], 0.0)).conj();
    }
    let z_star_u = linalg::solve(
        lift.x_gram.as_ref(),
        (&diag_gbar * lift.basis.gram_u() * &ones).as_ref(),
    );
    let x_coords: Vec<Complex64> = (0..m).map(|i| z_star_u[(i, 0)]).collect();

    // f = W*x in kernel coordinates, then as an ambient vector on the grid.
    let w_star = linalg::solve(lift.basis.gram_u(), lift.x_gram.as_ref());
    let xcol = linalg::from_columns(&[x_coords.clone()]);
    let beta = &w_star * &xcol;
    let mut f_amb = HardyVec::zeros(n);
    for i in 0..m {
        f_amb = f_amb.add(&lift.basis.u(i).scale(beta[(i, 0)]));
    }
    // Boundary samples live on the same midpoint grid that the outer
    // recovery and the w-integral use.
    let nodes = midpoint_nodes(grid);
    let f_mod: Vec<f64> = nodes.iter().map(|z| f_amb.eval(*z).norm()).collect();

    // Falsification loop for ‖p(A)x‖² ≤ ∫|p|² w dm with A the diagonal
    // block in orthonormal coordinates.
    let r0_star = {
        let mut lam_gx = linalg::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                lam_gx[(i, j)] = Complex64::new(lift.lambdas[i], 0.0) * lift.x_gram[(i, j)];
            }
        }
        linalg::solve(lift.x_gram.as_ref(), lam_gx.as_ref())
    };
    let a_onb = {
        let la = lift.x_chol.adjoint().to_owned() * &r0_star;
        linalg::solve_lower_triangular(
            lift.x_chol.as_ref(),
            la.adjoint().to_owned().as_ref(),
        )
        .adjoint()
        .to_owned()
    };
    let x_onb = lift.x_chol.adjoint().to_owned() * &xcol;

    let mut w_vals: Vec<f64> = f_mod.iter().map(|v| (v + 1.0) * (v + 1.0)).collect();
    let mut rescales = 0usize;
    let falsified = loop {
        let mut ok = true;
        'outer: for &d in &[8usize, 16, 32, 64] {
            for coeffs in probe_polys(d, seed ^ 0x77) {
                // ‖p(A)x‖² via running powers applied to the vector.
                let mut acc = linalg::zeros(m, 1);
                let mut cur = x_onb.clone();
                for (k, c) in coeffs.iter().enumerate() {
                    acc = &acc + &linalg::scale(cur.as_ref(), *c);
                    if k + 1 < coeffs.len() {
                        cur = &a_onb * &cur;
                    }
                }
                let lhs: f64 = (0..m).map(|i| acc[(i, 0)].norm_sqr()).sum();
                let rhs: f64 = nodes
                    .iter()
                    .zip(&w_vals)
                    .map(|(z, w)| poly_apply(&coeffs, *z).norm_sqr() * w)
                    .sum::<f64>()
                    / grid as f64;
                if lhs > rhs * (1.0 + 1e-9) {
                    ok = false;
                    break 'outer;
                }
            }
        }
        if ok {
            break false;
        }
        if rescales >= 8 {
            break true;
        }
        for w in w_vals.iter_mut() {
            *w *= 2.0;
        }
        rescales += 1;
    };
    if falsified {
        return Err(LiftError::RescaleBudget(rescales));
    }

    // h = B · outer(|f| + w^{1/2} + ε): in block coordinates the BH² part
    // of h is the outer factor itself.
    let target: Vec<f64> = f_mod
        .iter()
        .zip(&w_vals)
        .map(|(fm, w)| fm + w.sqrt() + 1e-3)
        .collect();
    let outer = outer_from_modulus(&target, n).map_err(|_| LiftError::Tolerance {
        quantity: "outer factor".into(),
        residual: f64::NAN,
        tol: 0.0,
    })?;

    let mut seed_block = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..nb {
        seed_block[j] = outer.outer.coeffs[j];
    }
    for i in 0..m {
        seed_block[nb + i] = x_coords[i];
    }

    // Krylov sweep in orthonormal coordinates.
    let kry = 4 * m;
    let mut lam_full = linalg::identity(n);
    for i in 0..m {
        for j in 0..m {
            lam_full[(nb + i, nb + j)] = lift.x_chol[(i, j)];
        }
    }
    let seed_onb = {
        let v = linalg::from_columns(&[seed_block.clone()]);
        lam_full.adjoint().to_owned() * &v
    };
    let mut krylov = linalg::zeros(n, kry);
    let mut cur = seed_onb.clone();
    for k in 0..kry {
        for r in 0..n {
            krylov[(r, k)] = cur[(r, 0)];
        }
        if k + 1 < kry {
            cur = lift.t_onb.as_ref() * &cur;
        }
    }
    let q = linalg::effective_range(krylov.as_ref(), 1e-10);
    let krylov_dim = q.ncols();

    // Span condition: BH² ⊕ {0} together with the cyclic subspace must have
    // full rank. In orthonormal coordinates BH² ⊕ {0} is the leading
    // coordinate block.
    let mut stacked = linalg::zeros(n, nb + krylov_dim);
    for j in 0..nb {
        stacked[(j, j)] = Complex64::new(1.0, 0.0);
    }
    for k in 0..krylov_dim {
        for r in 0..n {
            stacked[(r, nb + k)] = q[(r, k)];
        }
    }
    let span_rank = linalg::effective_range(stacked.as_ref(), 1e-10).ncols();

    // ‖Yy‖/‖y‖ over the orthonormal basis of the subspace and random unit
    // combinations of it.
    let y_onb = {
        // Y in ONB block coordinates on the domain side: Y Λ^{-H}.
        let lh = lam_full.adjoint().to_owned();
        let sol = linalg::solve(lh.as_ref(), linalg::identity(n).as_ref());
        &lift.y_mat * &sol
    };
    let mut min_ratio = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut samples: Vec<Vec<Complex64>> = Vec::new();
    for k in 0..krylov_dim {
        samples.push((0..n).map(|r| q[(r, k)]).collect());
    }
    for _ in 0..64 {
        let w: Vec<Complex64> = (0..krylov_dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let nrm: f64 = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            continue;
        }
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for (k, wk) in w.iter().enumerate() {
            for r in 0..n {
                v[r] += *wk / nrm * q[(r, k)];
            }
        }
        samples.push(v);
    }
    for v in &samples {
        let vn: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vn < 1e-12 {
            continue;
        }
        let vm = linalg::from_columns(&[v.clone()]);
        let yv = &y_onb * &vm;
        let out: f64 = (0..n).map(|r| yv[(r, 0)].norm_sqr()).sum::<f64>().sqrt();
        min_ratio = min_ratio.min(out / vn);
    }

    Ok(ShiftSubspaceReport {
        min_ratio,
        span_rank,
        full_rank: n,
        rescales,
        falsified,
        krylov_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::geometric_zeros;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn compose_checks_labels() {
        let a = OperatorRep::new(linalg::identity(3), Coords::Monomial { n: 3 }, Coords::KernelU { m: 3 });
        let b = OperatorRep::new(linalg::identity(3), Coords::FamilyX { m: 3 }, Coords::Monomial { n: 3 });
        assert!(a.compose(&b).is_ok());
        assert!(matches!(b.compose(&a), Err(LiftError::LabelMismatch { .. })));
    }

    #[test]
    fn r0_build_validates_and_diagonalizes() {
        assert!(matches!(r0_build(&[0.5, 0.5], 2), Err(LiftError::NonIncreasing)));
        assert!(matches!(r0_build(&[0.7, 0.5], 2), Err(LiftError::NonIncreasing)));
        assert!(matches!(r0_build(&[0.5], 2), Err(LiftError::LengthMismatch { .. })));
        let r = r0_build(&[0.25, 0.5, 0.75], 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { [0.25, 0.5, 0.75][i] } else { 0.0 };
                assert_eq!(r.matrix[(i, j)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn r0_norm_dominates_top_eigenvalue_on_psi_family() {
        let fam = family::psi_basis(0.4, 16, 256).unwrap();
        let lambdas: Vec<f64> = (0..16).map(|n| 1.0 - 0.5f64.powi(n as i32 + 1)).collect();
        let r = r0_build(&lambdas, 16).unwrap();
        let onb = fam.to_onb(r.matrix.as_ref());
        let norm = linalg::op_norm(onb.as_ref());
        assert!(norm >= lambdas[15] && norm.is_finite(), "norm={norm}");
    }

    #[test]
    fn ritt_probe_scalar_cases() {
        // A = 0: the probed quantity is |z-1|/|z|, which on |z| ∈ (1,2]
        // peaks just under 2 (z near -1).
        let zero = linalg::zeros(1, 1);
        let rep = tadmor_ritt_probe(zero.as_ref(), &ritt_samples(12, 16));
        assert!(rep.constant > 1.0 && rep.constant <= 2.0 && rep.anomalies == 0, "{}", rep.constant);

        let mut d = linalg::zeros(1, 1);
        d[(0, 0)] = c(0.9, 0.0);
        let rep = tadmor_ritt_probe(d.as_ref(), &ritt_samples(12, 16));
        assert!(rep.constant.is_finite() && rep.constant > 0.0 && rep.anomalies == 0);
        assert!(rep.constant <= 3.0, "{}", rep.constant);
    }

    #[test]
    fn power_profile_matches_exact_svd() {
        // Truncated shift: norm exactly 1 until nilpotency kicks in.
        let mut s = linalg::zeros(12, 12);
        for k in 1..12 {
            s[(k, k - 1)] = c(1.0, 0.0);
        }
        let prof = power_norm_profile(s.as_ref(), 14);
        for (i, p) in prof.iter().enumerate() {
            let want = if i + 1 < 12 { 1.0 } else { 0.0 };
            assert!((p - want).abs() < 1e-9, "n={} got {p}", i + 1);
        }
        let mut d = linalg::zeros(3, 3);
        for i in 0..3 {
            d[(i, i)] = c(0.9, 0.0);
        }
        let prof = power_norm_profile(d.as_ref(), 10);
        for (i, p) in prof.iter().enumerate() {
            assert!((p - 0.9f64.powi(i as i32 + 1)).abs() < 1e-10);
        }
    }

    #[test]
    fn wz_build_degenerate_and_sqrt() {
        let b = BlaschkeProduct::new(geometric_zeros(0.5, 8)).unwrap();
        let basis = model::uv_bases(&b, 256).unwrap();

        let (w, z, rep) = w_z_build(&basis, &GSymbol::One, 1e-10).unwrap();
        assert!(rep.intertwine_w < 1e-14 && rep.intertwine_z < 1e-14);
        assert!(rep.calculus_residual < 1e-12);
        let zw = z.compose(&w).unwrap();
        assert_eq!(zw.domain, Coords::KernelU { m: 8 });
        assert_eq!(zw.codomain, Coords::KernelU { m: 8 });

        let (_, z, rep) = w_z_build(&basis, &GSymbol::OneMinusZPow(0.5), 1e-8).unwrap();
        assert!(rep.calculus_residual <= 1e-8, "residual {}", rep.calculus_residual);
        assert!(rep.series_tail <= 1e-10);
        for i in 0..8 {
            let want = (1.0 - basis.product().zero(i).re).sqrt();
            assert!((z.matrix[(i, i)] - c(want, 0.0)).norm() < 1e-14);
        }
        // Partial sums of Σ|g(λ_n)|² grow and stay finite.
        assert!(rep.g_sq_partial.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn degenerate_lift_is_the_shift_in_disguise() {
        let lift = assemble_lift(&LiftConfig {
            n: 128,
            ..LiftConfig::degenerate()
        })
        .unwrap();
        let r = &lift.residuals;
        assert!(r.yt_sy < 1e-10, "yt_sy {}", r.yt_sy);
        assert!(r.xs_tx < 1e-10, "xs_tx {}", r.xs_tx);
        assert!(r.yx_gs < 1e-10, "yx_gs {}", r.yx_gs);
        assert!(r.xy_via_y < 1e-10, "xy_via_y {}", r.xy_via_y);
        assert!(r.proj_power < 1e-10, "proj_power {}", r.proj_power);
        assert!(r.x_sigma_min > 0.0 && r.y_sigma_min > 0.0);
        // Unitary equivalence with the truncated shift: every power has
        // norm 1 at rounding accuracy.
        let prof = power_norm_profile(lift.t_onb(), 24);
        for p in prof {
            assert!((p - 1.0).abs() < 1e-6, "power norm {p}");
        }
    }

    #[test]
    fn golden_lift_residuals_within_tolerance() {
        let lift = assemble_lift(&LiftConfig::golden()).unwrap();
        let r = &lift.residuals;
        assert!(r.yt_sy < 1e-6, "yt_sy {}", r.yt_sy);
        assert!(r.xs_tx < 1e-6, "xs_tx {}", r.xs_tx);
        assert!(r.yx_gs < 1e-6, "yx_gs {}", r.yx_gs);
        assert!(r.xy_via_y < 1e-6, "xy_via_y {}", r.xy_via_y);
        assert!(r.proj_power < 1e-8, "proj_power {}", r.proj_power);
        assert!(r.x_sigma_min > 0.0, "x_sigma_min {}", r.x_sigma_min);
        assert!(r.y_sigma_min > 0.0, "y_sigma_min {}", r.y_sigma_min);
    }

    #[test]
    fn upper_right_block_matches_brute_inner_products() {
        // Benign zeros keep ambient tails near rounding so the closed-form
        // rank-one block can be checked against literal inner products
        // (S W*x_n, Bz^j) with extended series.
        let cfg = LiftConfig {
            zeros_q: 0.5,
            m: 3,
            n: 96,
            margin: 16,
            alpha: Some(0.4),
            g: GSymbol::One,
        };
        let lift = assemble_lift(&cfg).unwrap();
        let b = lift.basis().product();
        let next = 96 + 512;
        let bt = b.taylor(next);
        let w_star = linalg::solve(lift.basis().gram_u(), lift.x_gram());
        for ncol in 0..3 {
            // Extended ambient W*x_n, shifted once.
            let mut amb = vec![c(0.0, 0.0); next];
            for i in 0..3 {
                let lam = lift.basis().product().zero(i).re;
                let cn = lift.basis().normalizer(i);
                let mut p = 1.0;
                for k in 0..next {
                    amb[k] += w_star[(i, ncol)] * c(cn * p, 0.0);
                    p *= lam;
                }
            }
            amb.rotate_right(1);
            amb[0] = c(0.0, 0.0);
            for j in 0..lift.shift_dim().min(24) {
                let mut ip = c(0.0, 0.0);
                for k in 0..next - j {
                    ip += amb[k + j] * bt.coeffs[k].conj();
                }
                let got = lift.t_rep().matrix[(j, lift.shift_dim() + ncol)];
                assert!((ip - got).norm() < 1e-10, "j={j} n={ncol}: {ip} vs {got}");
            }
        }
    }

    #[test]
    fn kernel_ratio_scan_behaves_on_golden_config() {
        let lift = assemble_lift(&LiftConfig::golden()).unwrap();
        let rep = kernel_ratio_scan(&lift, 0.95, 400);
        assert!(rep.c_low > 0.0 && rep.c_low.is_finite());
        assert!(rep.c_high >= rep.c_low);
        assert!(rep.outside_count > 0);
        assert!(
            rep.outside_min >= rep.outside_floor,
            "outside {} floor {}",
            rep.outside_min,
            rep.outside_floor
        );
        if rep.inside_count > 0 {
            assert!(rep.inside_margin_min >= 1.0, "margin {}", rep.inside_margin_min);
        }
        // λ = 0 by hand: ratio = sqrt(|B(0)|² + ‖W P_K 1‖²) > |B(0)| > 0.
        let a = lift.basis().expand_kernel(c(0.0, 0.0));
        let w = lift.basis().combo_norm_in(lift.x_gram(), &a);
        let b0 = lift.basis().product().eval(c(0.0, 0.0)).norm();
        assert!((b0 * b0 + w * w).sqrt() > b0);
    }

    #[test]
    fn shift_subspace_certificates_on_golden_config() {
        let lift = assemble_lift(&LiftConfig::golden()).unwrap();
        let rep = shift_subspace_experiment(&lift, 42).unwrap();
        assert!(rep.min_ratio >= 0.5f64.sqrt() - 1e-6, "min ratio {}", rep.min_ratio);
        assert_eq!(rep.span_rank, rep.full_rank);
        assert!(!rep.falsified);
        assert!(rep.krylov_dim >= lift.lambdas().len());
    }

    #[test]
    fn constant_poly_ratio_is_one() {
        let lift = assemble_lift(&LiftConfig {
            n: 64,
            m: 2,
            ..LiftConfig::degenerate()
        })
        .unwrap();
        // Degree-0 probe handled through the same accumulation path.
        let rep = polybound_probe(&lift, &[0], 7);
        assert!((rep.buckets[0].1 - 1.0).abs() < 1e-6, "{}", rep.buckets[0].1);
    }

    #[test]
    fn degenerate_polybound_stays_flat() {
        let lift = assemble_lift(&LiftConfig {
            n: 96,
            m: 4,
            ..LiftConfig::degenerate()
        })
        .unwrap();
        let rep = polybound_probe(&lift, &[4, 8, 16], 11);
        // p(S) has norm ≤ sup|p| for the shift; ratios stay pinned near 1.
        for (d, ratio) in rep.buckets {
            assert!(ratio <= 1.0 + 1e-6, "bucket {d}: {ratio}");
        }
    }
}
