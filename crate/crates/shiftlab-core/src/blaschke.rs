//! Finite Blaschke products: normalized factors, Carleson separation, the
//! sublevel regions around each zero, and the sampled lower-bound checks the
//! later operator constructions rely on.
//!
//! Factor convention: b_λ(z) = (|λ|/λ)·(λ-z)/(1-λ̄z), so b_λ(0) = |λ| > 0,
//! and b_0(z) = z. |b_λ(z)| equals the pseudo-hyperbolic distance ρ(λ, z).

use crate::hardy::{DiskPoint, Symbol};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BlaschkeError {
    #[error("duplicate zero at index {0} (pseudo-hyperbolic distance below 1e-14)")]
    DuplicateZero(usize),
    #[error("factor index {index} out of range ({count} zeros)")]
    IndexOutOfRange { index: usize, count: usize },
}

/// Normalized Blaschke factor value. λ = 0 degenerates to b_0(z) = z.
pub fn factor_eval(lambda: Complex64, z: Complex64) -> Complex64 {
    if lambda.norm() == 0.0 {
        return z;
    }
    let phase = Complex64::new(lambda.norm(), 0.0) / lambda;
    phase * (lambda - z) / (Complex64::new(1.0, 0.0) - lambda.conj() * z)
}

/// Derivative of the normalized factor.
pub fn factor_derivative(lambda: Complex64, z: Complex64) -> Complex64 {
    if lambda.norm() == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let phase = Complex64::new(lambda.norm(), 0.0) / lambda;
    let d = Complex64::new(1.0, 0.0) - lambda.conj() * z;
    phase * (lambda.norm_sqr() - 1.0) / (d * d)
}

/// Product of factors over `zeros`, skipping `omit` if given. The empty
/// product is 1.
pub fn product_eval(zeros: &[Complex64], z: Complex64, omit: Option<usize>) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for (n, &lam) in zeros.iter().enumerate() {
        if Some(n) == omit {
            continue;
        }
        acc *= factor_eval(lam, z);
    }
    acc
}

/// Defect of the factor-modulus identity
/// 1 - |b_λ(z)|² = (1-|z|²)(1-|λ|²)/|1-λ̄z|².
pub fn modulus_identity_gap(lambda: Complex64, z: Complex64) -> f64 {
    let lhs = 1.0 - factor_eval(lambda, z).norm_sqr();
    let denom = (Complex64::new(1.0, 0.0) - lambda.conj() * z).norm_sqr();
    let rhs = (1.0 - z.norm_sqr()) * (1.0 - lambda.norm_sqr()) / denom;
    (lhs - rhs).abs()
}

/// Carleson separation constant: min over n of |B_n(λ_n)| where B_n omits
/// the n-th factor. Sets with at most one zero get δ = 1 (empty minimum).
pub fn carleson_delta(zeros: &[Complex64]) -> f64 {
    if zeros.len() <= 1 {
        return 1.0;
    }
    zeros
        .iter()
        .enumerate()
        .map(|(n, &lam)| product_eval(zeros, lam, Some(n)).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Pseudo-hyperbolic distance ρ(a, b) = |a-b| / |1 - āb|.
pub fn pseudo_hyperbolic(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (Complex64::new(1.0, 0.0) - a.conj() * b).norm()
}

/// Disjointness report for the sublevel regions D_n = {ρ(λ_n, ·) <= δ/3}.
#[derive(Debug, Clone)]
pub struct RegionReport {
    pub radius: f64,
    pub disjoint: bool,
    pub overlapping_pairs: Vec<(usize, usize)>,
}

/// Worst margins of the separation lower bounds over random samples.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// min over in-region samples of |B_n(z)| - δ/2 (violation if < 0)
    pub inside_worst_margin: f64,
    /// min over out-of-region samples of |B(z)| - δ²/6
    pub outside_worst_margin: f64,
    pub inside_samples: usize,
    pub outside_samples: usize,
    pub violations: usize,
}

/// A finite Blaschke product with validated, pairwise-distinct zeros.
#[derive(Debug, Clone)]
pub struct BlaschkeProduct {
    zeros: Vec<DiskPoint>,
    delta: f64,
}

impl BlaschkeProduct {
    pub fn new(zeros: Vec<DiskPoint>) -> Result<Self, BlaschkeError> {
        for i in 0..zeros.len() {
            for j in 0..i {
                if pseudo_hyperbolic(zeros[i].get(), zeros[j].get()) < 1e-14 {
                    return Err(BlaschkeError::DuplicateZero(i));
                }
            }
        }
        let raw: Vec<Complex64> = zeros.iter().map(|p| p.get()).collect();
        let delta = carleson_delta(&raw);
        Ok(Self { zeros, delta })
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.zeros.iter().map(|p| p.get()).collect()
    }

    pub fn zero(&self, n: usize) -> Complex64 {
        self.zeros[n].get()
    }

    pub fn zero_point(&self, n: usize) -> DiskPoint {
        self.zeros[n]
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Region radius δ/3 in the pseudo-hyperbolic metric.
    pub fn region_radius(&self) -> f64 {
        self.delta / 3.0
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        product_eval(&self.zeros(), z, None)
    }

    /// Product omitting the n-th factor.
    pub fn eval_omit(&self, z: Complex64, omit: usize) -> Complex64 {
        product_eval(&self.zeros(), z, Some(omit))
    }

    /// B'(λ_n): only the n-th factor contributes a derivative since the
    /// factor itself vanishes there.
    pub fn derivative_at_zero(&self, n: usize) -> Complex64 {
        let lam = self.zeros[n].get();
        factor_derivative(lam, lam) * self.eval_omit(lam, n)
    }

    /// First region containing z (ρ(λ_n, z) <= δ/3), if any. Regions are
    /// scanned in zero order; whether they actually overlap is reported by
    /// `region_disjointness`, never assumed.
    pub fn region_membership(&self, z: Complex64) -> Option<usize> {
        let r = self.region_radius();
        self.zeros
            .iter()
            .position(|lam| pseudo_hyperbolic(lam.get(), z) <= r)
    }

    /// Exact pairwise disjointness of the sublevel regions: two
    /// pseudo-hyperbolic discs of radius r intersect iff their centers are
    /// within the Möbius sum r ⊕ r = 2r/(1+r²).
    pub fn region_disjointness(&self) -> RegionReport {
        let r = self.region_radius();
        let touch = 2.0 * r / (1.0 + r * r);
        let mut overlapping_pairs = Vec::new();
        for i in 0..self.zeros.len() {
            for j in 0..i {
                if pseudo_hyperbolic(self.zeros[i].get(), self.zeros[j].get()) <= touch {
                    overlapping_pairs.push((j, i));
                }
            }
        }
        RegionReport { radius: r, disjoint: overlapping_pairs.is_empty(), overlapping_pairs }
    }

    /// Taylor coefficients of the full product, truncated to n terms.
    /// Factor series: b̂_λ(0) = |λ|, b̂_λ(k) = -(|λ|/λ)(1-|λ|²) λ̄^{k-1}.
    pub fn taylor(&self, n: usize) -> Symbol {
        let mut acc = Symbol::one();
        for p in &self.zeros {
            let lam = p.get();
            let factor = if lam.norm() == 0.0 {
                let mut c = vec![Complex64::new(0.0, 0.0); n.max(2)];
                if n >= 2 {
                    c[1] = Complex64::new(1.0, 0.0);
                }
                Symbol::from_coeffs(c)
            } else {
                let phase = Complex64::new(lam.norm(), 0.0) / lam;
                let head = -phase * (1.0 - lam.norm_sqr());
                let mut c = Vec::with_capacity(n);
                c.push(Complex64::new(lam.norm(), 0.0));
                let mut pw = Complex64::new(1.0, 0.0);
                for _ in 1..n {
                    c.push(head * pw);
                    pw *= lam.conj();
                }
                Symbol::from_coeffs(c)
            };
            acc = acc.mul_truncated(&factor, n);
        }
        acc
    }

    /// Uniform-in-parameter sample of D_n: z = φ_{λ_n}(w) with |w| <= δ/3,
    /// φ_a(w) = (a-w)/(1-āw). Pseudo-hyperbolic balls are Möbius images of
    /// centered euclidean discs, so every draw lands in D_n exactly.
    pub fn sample_in_region(&self, n: usize, rng: &mut ChaCha8Rng) -> Complex64 {
        let lam = self.zeros[n].get();
        let w = sample_disc(rng, self.region_radius());
        (lam - w) / (Complex64::new(1.0, 0.0) - lam.conj() * w)
    }

    /// Sample-based verification of the two separation lower bounds:
    /// |B_n| >= δ/2 on D_n (all n), and |B| >= δ²/6 off ∪D_n. In-region
    /// points are drawn by a Möbius push of uniform disc samples, so both
    /// regimes are exercised regardless of how thin the regions are.
    pub fn bound_checks(&self, total_samples: usize, seed: u64) -> BoundReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.degree().max(1);
        let inside_target = total_samples / 2;
        let per_region = inside_target / m;
        let delta = self.delta;

        let mut inside_worst = f64::INFINITY;
        let mut outside_worst = f64::INFINITY;
        let mut inside_count = 0usize;
        let mut outside_count = 0usize;
        let mut violations = 0usize;

        for n in 0..self.zeros.len() {
            for _ in 0..per_region {
                let z = self.sample_in_region(n, &mut rng);
                let margin = self.eval_omit(z, n).norm() - delta / 2.0;
                if margin < 0.0 {
                    violations += 1;
                }
                inside_worst = inside_worst.min(margin);
                inside_count += 1;
            }
        }

        // Ambient samples, classified by region membership.
        let floor = delta * delta / 6.0;
        while outside_count + inside_count < total_samples {
            let z = sample_disc(&mut rng, 1.0 - 1e-6);
            match self.region_membership(z) {
                Some(n) => {
                    let margin = self.eval_omit(z, n).norm() - delta / 2.0;
                    if margin < 0.0 {
                        violations += 1;
                    }
                    inside_worst = inside_worst.min(margin);
                    inside_count += 1;
                }
                None => {
                    let margin = self.eval(z).norm() - floor;
                    if margin < 0.0 {
                        violations += 1;
                    }
                    outside_worst = outside_worst.min(margin);
                    outside_count += 1;
                }
            }
        }

        BoundReport {
            inside_worst_margin: inside_worst,
            outside_worst_margin: outside_worst,
            inside_samples: inside_count,
            outside_samples: outside_count,
            violations,
        }
    }
}

fn sample_disc(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.random_range(0.0f64..1.0).sqrt();
    let theta = rng.random_range(0.0f64..std::f64::consts::TAU);
    Complex64::from_polar(r, theta)
}

/// The geometric zero ladder λ_n = 1 - q^{n+1}, n < count.
pub fn geometric_zeros(q: f64, count: usize) -> Vec<DiskPoint> {
    (0..count)
        .map(|n| {
            let lam = 1.0 - q.powi(n as i32 + 1);
            DiskPoint::new(Complex64::new(lam, 0.0)).expect("geometric zero outside margin")
        })
        .collect()
}
