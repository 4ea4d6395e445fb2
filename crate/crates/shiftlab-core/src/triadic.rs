//! The triadic feedback shift: a forward shift on a chain {e_j} that drops a
//! marker into a stack of backward shifts {f_{l,j}} every time the chain
//! index passes a power of three, the cyclic subspace generated by e₀, and
//! finite-section spectral scans of the restriction to that subspace.
//!
//! All index combinatorics — the action itself, the κ-sets, the orbit of e₀,
//! membership in the cyclic subspace, rotation exponents — are exact integer
//! computations. Floating point enters only when a finite section is
//! orthonormalized and scanned (SVD); those routines say so.

use std::collections::{BTreeMap, BTreeSet};

use faer::Mat;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lift::{Coords, OperatorRep};
use crate::linalg;
use crate::par;

#[derive(Debug, Error)]
pub enum MtError {
    #[error("rotation parameter must be unimodular, got |ζ| = {0}")]
    NotUnimodular(f64),
    #[error("kernel target {n_target} needs {needed} section columns, have {have}")]
    SectionTooSmall { n_target: usize, needed: usize, have: usize },
    #[error(
        "direction-splitting search exhausted {attempts} attempts; best principal angle {best_angle:.3e} rad"
    )]
    SearchBudget { attempts: usize, best_angle: f64 },
}

/// Basis index of E ⊕ F. The derived order (E block first, then F by
/// (level, j)) fixes the truncation enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MtIndex {
    E { j: u64 },
    F { l: u32, j: u64 },
}

impl std::fmt::Display for MtIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MtIndex::E { j } => write!(f, "e{j}"),
            MtIndex::F { l, j } => write!(f, "f[{l},{j}]"),
        }
    }
}

/// 3^k, saturating. Saturation only matters for κ-queries with enormous
/// levels, where `j ≤ 3^k` is true for every representable j anyway.
fn pow3(k: u32) -> u64 {
    let mut p = 1u64;
    for _ in 0..k {
        p = p.saturating_mul(3);
    }
    p
}

/// Some(k) iff j = 3^k with k ≥ 1.
pub fn triadic_exponent(j: u64) -> Option<u32> {
    if j < 3 {
        return None;
    }
    let mut p = 3u64;
    let mut k = 1u32;
    while p < j {
        p = p.saturating_mul(3);
        k += 1;
    }
    (p == j).then_some(k)
}

/// The unique level l ≥ 1 with 2^{l−1} ≤ k ≤ 2^l − 1.
pub fn level_of(k: u32) -> u32 {
    assert!(k >= 1, "levels start at k = 1");
    32 - k.leading_zeros()
}

/// One application of the operator to a basis index, as an exact formal sum.
///
/// Rules: f_{l,j} ↦ f_{l,j−1} (f_{l,0} ↦ 0); e_j ↦ e_{j+1}, except that at
/// j = 3^k the image also contains f_{l,3^k} for the level l of k.
pub fn mt_apply(idx: MtIndex) -> Vec<(MtIndex, i64)> {
    match idx {
        MtIndex::F { j: 0, .. } => Vec::new(),
        MtIndex::F { l, j } => vec![(MtIndex::F { l, j: j - 1 }, 1)],
        MtIndex::E { j } => match triadic_exponent(j) {
            None => vec![(MtIndex::E { j: j + 1 }, 1)],
            Some(k) => vec![
                (MtIndex::E { j: j + 1 }, 1),
                (MtIndex::F { l: level_of(k), j }, 1),
            ],
        },
    }
}

/// Second, independent encoding of the same action: powers of three detected
/// by repeated division, the level by scanning the defining inequality.
/// Exists purely to cross-check [`mt_apply`] index by index.
pub fn mt_apply_longhand(idx: MtIndex) -> Vec<(MtIndex, i64)> {
    match idx {
        MtIndex::F { l, j } => {
            if j >= 1 {
                vec![(MtIndex::F { l, j: j - 1 }, 1)]
            } else {
                Vec::new()
            }
        }
        MtIndex::E { j } => {
            let mut rest = j;
            let mut k = 0u32;
            while rest >= 3 && rest % 3 == 0 {
                rest /= 3;
                k += 1;
            }
            let mut out = vec![(MtIndex::E { j: j + 1 }, 1)];
            if rest == 1 && k >= 1 {
                let mut l = 1u32;
                while !((1u64 << (l - 1)) <= k as u64 && (k as u64) <= (1u64 << l) - 1) {
                    l += 1;
                }
                out.push((MtIndex::F { l, j }, 1));
            }
            out
        }
    }
}

/// κ_{l,j} = {k ≥ 1 : j ≤ 3^k, 2^{l−1} ≤ k ≤ 2^l − 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KappaSet {
    pub l: u32,
    pub j: u64,
    pub members: Vec<u32>,
}

pub fn kappa(l: u32, j: u64) -> KappaSet {
    assert!(l >= 1);
    let lo = 1u32 << (l - 1);
    let hi = (1u32 << l) - 1;
    let members = (lo..=hi).filter(|&k| j <= pow3(k)).collect();
    KappaSet { l, j, members }
}

/// Brute-force κ: scan every k up to the cap against the raw inequalities.
pub fn kappa_scan(l: u32, j: u64, k_cap: u32) -> Vec<u32> {
    (1..=k_cap)
        .filter(|&k| {
            let mut p = 1u64;
            for _ in 0..k {
                p = p.saturating_mul(3);
            }
            j <= p && (1u64 << (l - 1)) <= k as u64 && (k as u64) <= (1u64 << l) - 1
        })
        .collect()
}

/// Exact sparse vector over the index set, integer coefficients.
pub type MtVector = BTreeMap<MtIndex, i64>;

/// Apply the operator to an exact sparse vector.
pub fn mt_apply_vec(u: &MtVector) -> MtVector {
    let mut out = MtVector::new();
    for (idx, c) in u {
        for (im, w) in mt_apply(*idx) {
            *out.entry(im).or_insert(0) += c * w;
        }
    }
    out.retain(|_, c| *c != 0);
    out
}

/// The orbit e₀, Te₀, …, T^{n_max}e₀, each an exact integer vector, built by
/// iterating the action (no closed form is consulted — downstream tests
/// compare against the coefficient-pattern formula independently).
pub fn orbit(n_max: u64) -> Vec<MtVector> {
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut cur = MtVector::new();
    cur.insert(MtIndex::E { j: 0 }, 1);
    out.push(cur.clone());
    for _ in 0..n_max {
        cur = mt_apply_vec(&cur);
        out.push(cur.clone());
    }
    out
}

#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub member: bool,
    /// max |actual − required| over all checked stack coefficients, exact.
    pub residual: i64,
    pub checked: usize,
}

/// Membership in the cyclic subspace of e₀: the chain part {a_j} of a vector
/// forces every stack coefficient to equal Σ_{k∈κ_{lj}} a_{2·3^k+1−j}; a
/// finitely supported vector is a member iff every forced value matches.
pub fn h0_membership(u: &MtVector) -> MembershipReport {
    let mut cands: BTreeSet<(u32, u64)> = BTreeSet::new();
    for (idx, c) in u {
        match idx {
            MtIndex::F { l, j } => {
                if *c != 0 {
                    cands.insert((*l, *j));
                }
            }
            MtIndex::E { j: n } => {
                if *c == 0 || *n < 4 {
                    continue;
                }
                // n = 2·3^k+1−j with 0 ≤ j ≤ 3^k forces 3^k ∈ [(n−1)/2, n−1];
                // the window has ratio 2 < 3, so at most one k fits.
                let mut k = 1u32;
                while pow3(k) <= n - 1 {
                    if 2 * pow3(k) + 1 >= *n {
                        let j = 2 * pow3(k) + 1 - n;
                        if j <= pow3(k) {
                            cands.insert((level_of(k), j));
                        }
                    }
                    k += 1;
                }
            }
        }
    }
    let coeff_e = |n: u64| -> i64 { u.get(&MtIndex::E { j: n }).copied().unwrap_or(0) };
    let mut residual = 0i64;
    for (l, j) in &cands {
        let required: i64 = kappa(*l, *j)
            .members
            .iter()
            .map(|&k| coeff_e(2 * pow3(k) + 1 - j))
            .sum();
        let actual = u.get(&MtIndex::F { l: *l, j: *j }).copied().unwrap_or(0);
        residual = residual.max((actual - required).abs());
    }
    MembershipReport { member: residual == 0, residual, checked: cands.len() }
}

/// Finite section of the index set: e_j for j ≤ j_max together with the stack
/// levels those chain indices can feed, f_{l,j}, j ≤ j_max, l ≤ l_max.
#[derive(Debug, Clone)]
pub struct MtTruncation {
    j_max: u64,
    l_max: u32,
    indices: Vec<MtIndex>,
    pos: BTreeMap<MtIndex, usize>,
}

impl MtTruncation {
    pub fn new(j_max: u64) -> Self {
        // Largest k with 3^k ≤ j_max decides how many stack levels the kept
        // chain can reach; keep every level up to that one so no marker
        // produced by a kept e_{3^k} is lost.
        let mut k_max = 0u32;
        while pow3(k_max + 1) <= j_max {
            k_max += 1;
        }
        let l_max = level_of(k_max.max(1));
        let mut indices = Vec::new();
        for j in 0..=j_max {
            indices.push(MtIndex::E { j });
        }
        for l in 1..=l_max {
            for j in 0..=j_max {
                indices.push(MtIndex::F { l, j });
            }
        }
        let pos = indices.iter().enumerate().map(|(i, ix)| (*ix, i)).collect();
        MtTruncation { j_max, l_max, indices, pos }
    }

    pub fn j_max(&self) -> u64 {
        self.j_max
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[MtIndex] {
        &self.indices
    }

    pub fn position(&self, idx: MtIndex) -> Option<usize> {
        self.pos.get(&idx).copied()
    }

    /// Kept indices whose image under the action leaves the section
    /// (only the chain boundary e_{j_max} qualifies).
    pub fn boundary_leaks(&self) -> Vec<MtIndex> {
        self.indices
            .iter()
            .copied()
            .filter(|idx| {
                mt_apply(*idx).iter().any(|(im, _)| !self.pos.contains_key(im))
            })
            .collect()
    }

    /// Dense matrix of the action on the kept indices; images outside the
    /// section are dropped (boundary leakage, see [`Self::boundary_leaks`]).
    pub fn operator_matrix(&self) -> Mat<Complex64> {
        let d = self.dim();
        let mut m = linalg::zeros(d, d);
        for (col, idx) in self.indices.iter().enumerate() {
            for (im, w) in mt_apply(*idx) {
                if let Some(row) = self.position(im) {
                    m[(row, col)] += Complex64::new(w as f64, 0.0);
                }
            }
        }
        m
    }

    /// Dense column vector of an exact sparse vector; entries outside the
    /// section must be absent (callers pick supports inside).
    pub fn embed(&self, u: &MtVector) -> Mat<Complex64> {
        let mut v = linalg::zeros(self.dim(), 1);
        for (idx, c) in u {
            let row = self
                .position(*idx)
                .unwrap_or_else(|| panic!("index {idx} outside truncation j_max={}", self.j_max));
            v[(row, 0)] = Complex64::new(*c as f64, 0.0);
        }
        v
    }
}

/// Orthonormalized finite section of the cyclic subspace, with the
/// compressed operator on it. Floating point starts here.
#[derive(Debug, Clone)]
pub struct OrbitSection {
    pub trunc: MtTruncation,
    /// Orbit vectors as columns (integer entries, exact by construction).
    pub orbit_mat: Mat<Complex64>,
    /// Thin-QR orthonormal basis of the section.
    pub q: Mat<Complex64>,
    /// Compression of the operator to the section, in q-coordinates. Its
    /// last column can die exactly: the leaked orbit vector's in-section
    /// part is orthogonal to the section (uniqueness of the live marker),
    /// which is precisely the section's stand-in for the co-kernel.
    pub t0: Mat<Complex64>,
    /// T·Q without leakage, coordinates of the one-step-larger truncation:
    /// every image of a kept index is kept there.
    t_embed: Mat<Complex64>,
    /// Inclusion·Q in the same enlarged coordinates.
    q_embed: Mat<Complex64>,
}

pub fn orbit_section(j_max: u64) -> OrbitSection {
    let trunc = MtTruncation::new(j_max);
    let vecs = orbit(j_max);
    let d = trunc.dim();
    let mut orbit_mat = linalg::zeros(d, vecs.len());
    for (col, v) in vecs.iter().enumerate() {
        for (idx, c) in v {
            let row = trunc.position(*idx).expect("orbit stays inside its truncation");
            orbit_mat[(row, col)] = Complex64::new(*c as f64, 0.0);
        }
    }
    let q = linalg::thin_q(orbit_mat.as_ref());
    let t_full = trunc.operator_matrix();
    let t0 = q.adjoint() * (&t_full * &q);

    let out = MtTruncation::new(j_max + 1);
    let n_sec = q.ncols();
    let mut t_embed = linalg::zeros(out.dim(), n_sec);
    let mut q_embed = linalg::zeros(out.dim(), n_sec);
    for (i, idx) in trunc.indices().iter().enumerate() {
        let oi = out.position(*idx).expect("truncations nest");
        for c in 0..n_sec {
            q_embed[(oi, c)] = q[(i, c)];
        }
        for (im, w) in mt_apply(*idx) {
            let row = out
                .position(im)
                .expect("one extra step closes the action over the section");
            for c in 0..n_sec {
                t_embed[(row, c)] += Complex64::new(w as f64, 0.0) * q[(i, c)];
            }
        }
    }
    OrbitSection { trunc, orbit_mat, q, t0, t_embed, q_embed }
}

impl OrbitSection {
    /// min ‖(T − λ)y‖ over unit y in the section, with the image measured in
    /// the enlarged truncation — an exact Rayleigh quantity of the operator
    /// itself, free of both boundary leakage and compression loss. The
    /// sections nest as j_max grows, so this is nonincreasing by
    /// construction.
    pub fn restricted_sigma_min(&self, lambda: Complex64) -> f64 {
        let shifted = &self.t_embed - linalg::scale(self.q_embed.as_ref(), lambda);
        linalg::sigma_min(shifted.as_ref())
    }
}

#[derive(Debug, Clone)]
pub struct X0Report {
    /// Projection onto the chain section, restricted to the cyclic section.
    pub x0: OperatorRep,
    /// ‖X₀T₀ − S X₀‖ over interior columns (boundary column excluded).
    pub intertwine_residual: f64,
    /// Chain part of T^n e₀ equals e_n with coefficient one — exact check.
    pub orbit_chain_exact: bool,
    /// P_E T e_j = e_{j+1} on kept interior j — exact check.
    pub shift_exact: bool,
}

/// The compression X₀ = P_E restricted to the cyclic section, with its
/// intertwining certificate: X₀T₀ = S X₀ where S is the forward shift on
/// the chain section.
pub fn x0_compression(sec: &OrbitSection) -> X0Report {
    let ne = sec.trunc.j_max() as usize + 1;
    let d = sec.t0.nrows();

    // E-rows of Q: chain coordinates of the section basis.
    let x0_mat = Mat::from_fn(ne, d, |i, j| sec.q[(i, j)]);

    let mut shift = linalg::zeros(ne, ne);
    for j in 0..ne - 1 {
        shift[(j + 1, j)] = Complex64::new(1.0, 0.0);
    }
    let lhs = &x0_mat * &sec.t0;
    let rhs = &shift * &x0_mat;
    let diff = &lhs - &rhs;
    // The last section column leaks at the boundary; exclude it.
    let interior = Mat::from_fn(ne, d - 1, |i, j| diff[(i, j)]);
    let intertwine_residual = linalg::op_norm(interior.as_ref());

    let orbit_chain_exact = orbit(sec.trunc.j_max()).iter().enumerate().all(|(n, v)| {
        v.iter()
            .filter(|(idx, _)| matches!(idx, MtIndex::E { .. }))
            .all(|(idx, c)| *idx == MtIndex::E { j: n as u64 } && *c == 1)
            && v.contains_key(&MtIndex::E { j: n as u64 })
    });
    let shift_exact = (0..sec.trunc.j_max()).all(|j| {
        mt_apply(MtIndex::E { j })
            .iter()
            .filter(|(im, _)| matches!(im, MtIndex::E { .. }))
            .collect::<Vec<_>>()
            == vec![&(MtIndex::E { j: j + 1 }, 1)]
    });

    X0Report {
        x0: OperatorRep::new(
            x0_mat,
            Coords::Section { space: "cyclic", dim: d },
            Coords::Section { space: "chain", dim: ne },
        ),
        intertwine_residual,
        orbit_chain_exact,
        shift_exact,
    }
}

#[derive(Debug, Clone)]
pub struct CodimReport {
    pub n_target: usize,
    pub section_dim: usize,
    /// Smallest singular value of the section above its own zero modes —
    /// the non-closed-range witness (logged, not asserted: it decays only
    /// slowly with section size).
    pub t0_sigma_min: f64,
    /// Singular values of the assembled block below the noise floor: its
    /// numerical co-kernel dimension.
    pub zero_modes: usize,
    /// Below-floor count of the section itself. The compression kills the
    /// boundary direction exactly (the leaked orbit vector's in-section part
    /// is orthogonal to the section), a finite stand-in for the operator's
    /// one-dimensional co-kernel.
    pub ker_t0_star_dim: usize,
    /// = zero_modes: the assembled block's measured kernel dimension, which
    /// should exceed the section's by exactly n_target − 1.
    pub kernel_dim: usize,
    /// Ratio across the noise-floor boundary in the singular spectrum.
    pub gap_ratio: f64,
    /// Smallest principal angle (radians) between the split ranges.
    pub principal_angle: f64,
    pub attempts: usize,
    /// max over n ≤ 20 of the relative defect in Tⁿ(x⊕e) = T₀ⁿx + T₀ⁿ⁻¹Ae.
    pub power_identity_residual: f64,
}

/// Below-floor count and the gap across the floor, floor = σ_max · 1e−10.
fn zero_mode_split(svals_desc: &[f64]) -> (usize, f64, f64) {
    let mut s = svals_desc.to_vec();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let floor = s.last().copied().unwrap_or(0.0) * 1e-10;
    let zeros = s.iter().take_while(|&&v| v < floor).count();
    let gap = if zeros > 0 && zeros < s.len() {
        s[zeros] / s[zeros - 1].max(1e-300)
    } else {
        0.0
    };
    let first_live = s.get(zeros).copied().unwrap_or(0.0);
    (zeros, gap, first_live)
}

/// Kernel-codimension extension at finite scale: append an (N−1)-dimensional
/// summand E and feed it into the section through A = U₀T₁|_E, where T₁ is
/// the section re-expressed on its effective range H₁ and U₀ is a random
/// unitary accepted once ran(T₁) and U₀·ran(T₁) are in general position
/// (smallest principal angle above `angle_threshold`). The assembled block
///
/// ```text
///     T(x ⊕ e) = T₀x + Ae
/// ```
///
/// then has exactly N−1 fresh co-kernel directions on top of the section's
/// own one.
pub fn kernel_codim_construct(
    n_target: usize,
    j_max: u64,
    seed: u64,
) -> Result<CodimReport, MtError> {
    let angle_threshold = 1e-3;
    let budget = 64;

    let sec = orbit_section(j_max);
    let d = sec.t0.nrows();
    let svals = linalg::singular_values(sec.t0.as_ref());
    let (ker_t0_star_dim, t0_gap, t0_sigma_min) = zero_mode_split(&svals);

    if n_target == 0 || n_target >= d / 2 {
        return Err(MtError::SectionTooSmall {
            n_target,
            needed: 2 * n_target + 1,
            have: d,
        });
    }
    if n_target == 1 {
        // Degenerate: no summand, T = T₀, kernel dimension unchanged.
        return Ok(CodimReport {
            n_target,
            section_dim: d,
            t0_sigma_min,
            zero_modes: ker_t0_star_dim,
            ker_t0_star_dim,
            kernel_dim: ker_t0_star_dim,
            gap_ratio: t0_gap,
            principal_angle: std::f64::consts::FRAC_PI_2,
            attempts: 0,
            power_identity_residual: 0.0,
        });
    }

    // H₁: the effective range of the section — everything above the zero
    // modes the boundary compression creates.
    let h1_dim = d - ker_t0_star_dim.max(1);
    let svd = sec.t0.as_ref().svd().expect("svd of section");
    let u = svd.U();
    let h1 = Mat::from_fn(d, h1_dim, |i, j| u[(i, j)]);
    // Pair the bases of H₁ and the section ONB: U₁ maps the k-th H₁ vector
    // to the k-th section vector (the finite stand-in for a unitary between
    // the two spaces). T₁ = P_{H₁} T₀ U₁ on H₁ coordinates.
    let t0_h1 = Mat::from_fn(d, h1_dim, |i, j| sec.t0[(i, j)]);
    let t1 = h1.adjoint() * &t0_h1;

    // Range of T₁ at working precision, capped at half the space so a
    // rotated copy can be in general position with it.
    let range = linalg::effective_range(t1.as_ref(), 1e-10);
    let cap = h1_dim / 2;
    let r = range.ncols().min(cap);
    let range = Mat::from_fn(h1_dim, r, |i, j| range[(i, j)]);

    let mut best_angle = 0.0f64;
    let mut accepted: Option<(Mat<Complex64>, f64, usize)> = None;
    for attempt in 0..budget {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let g = Mat::from_fn(h1_dim, h1_dim, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let u0 = linalg::thin_q(g.as_ref());
        let rotated = &u0 * &range;
        let cosines = linalg::principal_angle_cosines(range.as_ref(), rotated.as_ref());
        let cos_max = cosines.first().copied().unwrap_or(0.0);
        let angle = cos_max.min(1.0).acos();
        if angle > best_angle {
            best_angle = angle;
        }
        if angle > angle_threshold {
            accepted = Some((u0, angle, attempt + 1));
            break;
        }
    }
    let Some((u0, principal_angle, attempts)) = accepted else {
        return Err(MtError::SearchBudget { attempts: budget, best_angle });
    };

    // E: the top right-singular directions of T₁ keep A injective.
    let t1_svd = t1.as_ref().svd().expect("svd of T1");
    let v = t1_svd.V();
    let e_basis = Mat::from_fn(h1_dim, n_target - 1, |i, j| v[(i, j)]);
    // A: E → section coordinates, through U₀ and back along H₁.
    let a = &h1 * (&u0 * (&t1 * &e_basis));

    // Assembled block on section ⊕ E.
    let big = d + n_target - 1;
    let mut t_big = linalg::zeros(big, big);
    linalg::copy_block(&mut t_big, 0, 0, sec.t0.as_ref());
    linalg::copy_block(&mut t_big, 0, d, a.as_ref());

    // Co-kernel directions sit at the SVD noise floor; count by threshold
    // (ratios among junk values below the floor carry no information) and
    // report the gap across the boundary.
    let s_big = linalg::singular_values(t_big.as_ref());
    let (zero_modes, gap_ratio, _) = zero_mode_split(&s_big);

    // Power identity Tⁿ(x⊕e) = T₀ⁿx + T₀ⁿ⁻¹Ae on a random input.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let v0 = Mat::from_fn(big, 1, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let x0 = Mat::from_fn(d, 1, |i, _| v0[(i, 0)]);
    let e0 = Mat::from_fn(n_target - 1, 1, |i, _| v0[(d + i, 0)]);
    let ae = &a * &e0;
    let mut lhs = v0.clone();
    let mut t0_pow_x = x0.clone();
    let mut t0_prev_ae = ae.clone();
    let mut power_identity_residual = 0.0f64;
    for n in 1..=20 {
        lhs = &t_big * &lhs;
        if n > 1 {
            t0_prev_ae = &sec.t0 * &t0_prev_ae;
        }
        t0_pow_x = &sec.t0 * &t0_pow_x;
        let rhs = &t0_pow_x + &t0_prev_ae;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..d {
            num += (lhs[(i, 0)] - rhs[(i, 0)]).norm_sqr();
            den += rhs[(i, 0)].norm_sqr();
        }
        for i in 0..n_target - 1 {
            num += lhs[(d + i, 0)].norm_sqr();
        }
        power_identity_residual =
            power_identity_residual.max((num / den.max(1e-300)).sqrt());
    }

    Ok(CodimReport {
        n_target,
        section_dim: d,
        t0_sigma_min,
        zero_modes,
        ker_t0_star_dim,
        kernel_dim: zero_modes,
        gap_ratio,
        principal_angle,
        attempts,
        power_identity_residual,
    })
}

/// Rotation exponent: V_ζ multiplies a basis index by ζ^{exponent}.
///
/// Chain rule: e_n carries exponent j when n = 2·3^k+1−j with 0 ≤ j ≤ 3^k
/// (such (k, j) are unique: the constraint forces 3^k into a window of
/// ratio two), else exponent 0. Stack rule: f_{l,j} carries j.
pub fn rotation_exponent(idx: MtIndex) -> u64 {
    match idx {
        MtIndex::F { j, .. } => j,
        MtIndex::E { j: n } => {
            if n < 4 {
                return 0;
            }
            let mut k = 1u32;
            while pow3(k) <= n - 1 {
                if 2 * pow3(k) + 1 >= n {
                    let j = 2 * pow3(k) + 1 - n;
                    if j <= pow3(k) {
                        return j;
                    }
                }
                k += 1;
            }
            0
        }
    }
}

#[derive(Debug, Clone)]
pub struct RotationReport {
    pub rep: OperatorRep,
    /// V_ζ(ζT) = T V_ζ on interior stack indices, checked on exponents —
    /// exact integers, no floating point involved.
    pub stack_commutation_exact: bool,
    /// Orbit vectors are V_ζ eigenvectors (chain and stack exponents agree),
    /// so the cyclic subspace is invariant — exact integers.
    pub orbit_eigen_exact: bool,
}

/// The rotation unitary on a truncation. The exponent table is exact; the
/// matrix realization is the only floating-point object here.
pub fn v_zeta(zeta: Complex64, trunc: &MtTruncation) -> Result<RotationReport, MtError> {
    let dev = (zeta.norm() - 1.0).abs();
    if dev > 1e-12 {
        return Err(MtError::NotUnimodular(zeta.norm()));
    }
    let d = trunc.dim();
    let mut m = linalg::zeros(d, d);
    for (i, idx) in trunc.indices().iter().enumerate() {
        m[(i, i)] = zeta.powu(rotation_exponent(*idx) as u32);
    }

    // ζ·V_ζ T f_{l,j} = ζ·ζ^{j−1} f_{l,j−1} and T V_ζ f_{l,j} = ζ^j f_{l,j−1}:
    // both exponents equal j. Checked through the two action encodings.
    let stack_commutation_exact = trunc.indices().iter().all(|idx| match idx {
        MtIndex::F { j, .. } if *j >= 1 => {
            mt_apply(*idx).iter().zip(mt_apply_longhand(*idx)).all(|((im, _), (im2, _))| {
                im == &im2 && 1 + rotation_exponent(*im) == rotation_exponent(*idx)
            })
        }
        _ => true,
    });

    let orbit_eigen_exact = orbit(trunc.j_max()).iter().all(|v| {
        let exps: BTreeSet<u64> =
            v.keys().map(|idx| rotation_exponent(*idx)).collect();
        exps.len() <= 1
    });

    Ok(RotationReport {
        rep: OperatorRep::new(
            m,
            Coords::Section { space: "triadic", dim: d },
            Coords::Section { space: "triadic", dim: d },
        ),
        stack_commutation_exact,
        orbit_eigen_exact,
    })
}

#[derive(Debug, Clone)]
pub struct EssScanRow {
    pub j_max: u64,
    pub lambda: Complex64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone)]
pub struct RingAsymmetry {
    pub zeta: Complex64,
    pub radius: f64,
    /// max over ring points of |σ(λ) − σ(ζλ)| relative to the ring scale.
    pub max_rel_asym: f64,
}

#[derive(Debug, Clone)]
pub struct EssScanReport {
    pub rows: Vec<EssScanRow>,
    pub asymmetry: Vec<RingAsymmetry>,
    /// min σ over grid points outside the closed disc (resolvent control).
    pub control_min: f64,
    /// min over interior grid λ (|λ| ≤ 0.8) of 1 − σ(last)/σ(first).
    pub net_decrease_min: f64,
    /// true when every interior λ is nonincreasing along the ladder with 5%
    /// slack.
    pub monotone_ok: bool,
}

/// min ‖(T − λ)y‖ over the cyclic section, on a truncation ladder and a
/// grid of λ. The sections nest, so for fixed λ the value is nonincreasing
/// in j_max; interior values shrinking along the ladder is the
/// finite-section trace of the essential spectrum filling the disc, while
/// |λ| > 1 stays pinned near the true resolvent bound. The rotation
/// diagnostic compares σ at λ and ζλ on a mid-radius ring of the deepest
/// section.
pub fn ess_spectrum_scan(
    j_ladder: &[u64],
    grid: &[Complex64],
    zetas: &[Complex64],
) -> EssScanReport {
    let ring_radius = 0.5;
    let ring_points = 8;

    let mut rows = Vec::new();
    let mut per_lambda: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    let mut asymmetry = Vec::new();
    let mut control_min = f64::INFINITY;

    for (step, &j_max) in j_ladder.iter().enumerate() {
        let sec = orbit_section(j_max);
        let sigmas = par::map_slice(grid, |&lambda| sec.restricted_sigma_min(lambda));
        for (gi, (&lambda, &s)) in grid.iter().zip(sigmas.iter()).enumerate() {
            rows.push(EssScanRow { j_max, lambda, sigma_min: s });
            per_lambda[gi].push(s);
            if lambda.norm() > 1.0 {
                control_min = control_min.min(s);
            }
        }
        // Rotation diagnostic on the deepest section only.
        if step + 1 == j_ladder.len() {
            let ring: Vec<Complex64> = (0..ring_points)
                .map(|t| {
                    Complex64::from_polar(
                        ring_radius,
                        2.0 * std::f64::consts::PI * t as f64 / ring_points as f64,
                    )
                })
                .collect();
            let base = par::map_slice(&ring, |&z| sec.restricted_sigma_min(z));
            let scale = base.iter().cloned().fold(0.0f64, f64::max);
            for &zeta in zetas {
                let rotated =
                    par::map_slice(&ring, |&z| sec.restricted_sigma_min(zeta * z));
                let max_rel_asym = base
                    .iter()
                    .zip(rotated.iter())
                    .map(|(a, b)| (a - b).abs() / scale)
                    .fold(0.0f64, f64::max);
                asymmetry.push(RingAsymmetry { zeta, radius: ring_radius, max_rel_asym });
            }
        }
    }

    let mut net_decrease_min = f64::INFINITY;
    let mut monotone_ok = true;
    for (gi, &lambda) in grid.iter().enumerate() {
        if lambda.norm() > 0.8 {
            continue;
        }
        let seq = &per_lambda[gi];
        if seq.len() < 2 {
            continue;
        }
        net_decrease_min = net_decrease_min.min(1.0 - seq[seq.len() - 1] / seq[0]);
        for w in seq.windows(2) {
            // Nonincreasing by nesting; leave room for roundoff only.
            if w[1] > w[0] * (1.0 + 1e-9) {
                monotone_ok = false;
            }
        }
    }
    if !net_decrease_min.is_finite() {
        net_decrease_min = 0.0;
    }
    if control_min == f64::INFINITY {
        control_min = f64::NAN;
    }

    EssScanReport { rows, asymmetry, control_min, net_decrease_min, monotone_ok }
}
