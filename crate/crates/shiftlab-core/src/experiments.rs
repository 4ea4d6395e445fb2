//! Named experiment registry. Each experiment is one documented chain of
//! module operations with a fixed default configuration, a deterministic
//! seed policy, scalar metrics, and optional CSV grids. Runs are pure
//! compute — file layout, exit codes, and golden comparison live in the
//! CLI binary.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blaschke::{self, geometric_zeros, BlaschkeProduct};
use crate::family::psi_basis;
use crate::golden::{GoldenRecord, Provenance};
use crate::hardy::DiskPoint;
use crate::lift::{
    assemble_lift, family_block_t, kernel_ratio_scan, polybound_probe_matrix,
    power_norm_profile, ritt_samples, shift_subspace_experiment, tadmor_ritt_probe, w_z_build,
    GSymbol, LiftConfig, LiftError,
};
use crate::model::{self, uv_bases, ModelError};
use crate::triadic::{
    self, ess_spectrum_scan, kernel_codim_construct, h0_membership, kappa, kappa_scan,
    mt_apply, mt_apply_longhand, orbit, v_zeta, MtError, MtTruncation,
};
use crate::{linalg, BlaschkeError, FamilyError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment '{0}'; `shiftlab list` shows the registry")]
    UnknownExperiment(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Blaschke(#[from] BlaschkeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Mt(#[from] MtError),
}

/// Typed parameter map: every experiment reads the subset it understands
/// and validates ranges; unknown JSON keys are rejected at the parse
/// boundary by serde.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Parameters {
    pub alpha: Option<f64>,
    pub q: Option<f64>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub margin: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub jmax: Option<u64>,
    pub jmax_ladder: Option<Vec<u64>>,
    /// Complex grid points as [re, im] pairs.
    pub grid: Option<Vec<[f64; 2]>>,
    pub zetas: Option<Vec<[f64; 2]>>,
    pub targets: Option<Vec<usize>>,
    pub buckets: Option<Vec<usize>>,
    /// Overrides for the experiment's golden-regression tolerance bands.
    pub tolerances: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub parameters: Parameters,
    pub output_dir: std::path::PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let p = &self.parameters;
        if let Some(a) = p.alpha {
            if !(a > 0.0 && a < 0.5) {
                return Err(ExperimentError::InvalidParameter(format!(
                    "alpha must lie in (0, 0.5), got {a}"
                )));
            }
        }
        if let Some(q) = p.q {
            if !(q > 0.0 && q < 1.0) {
                return Err(ExperimentError::InvalidParameter(format!(
                    "q must lie in (0, 1), got {q}"
                )));
            }
        }
        if let Some(s) = p.samples {
            if s == 0 {
                return Err(ExperimentError::InvalidParameter("samples must be ≥ 1".into()));
            }
        }
        if let Some(tols) = &p.tolerances {
            for (name, value) in tols {
                if !(*value > 0.0) {
                    return Err(ExperimentError::InvalidParameter(format!(
                        "tolerance '{name}' must be positive, got {value}"
                    )));
                }
            }
        }
        if !registry().iter().any(|info| info.name == self.experiment) {
            return Err(ExperimentError::UnknownExperiment(self.experiment.clone()));
        }
        Ok(())
    }

    /// FNV-1a over the canonical JSON — stable provenance tag for goldens.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).unwrap_or_default();
        let mut h: u64 = 0xcbf29ce484222325;
        for b in canon.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// One CSV grid produced by a run. The body (header + rows) is fully
/// deterministic; any timestamp belongs in a comment line the writer adds.
#[derive(Debug, Clone, Serialize)]
pub struct CsvFile {
    pub name: String,
    pub header: String,
    pub rows: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub experiment: String,
    /// Seed actually used (recorded for reproducibility).
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    /// Golden-regression tolerance bands for the metrics.
    pub tolerances: BTreeMap<String, f64>,
    pub csv_files: Vec<CsvFile>,
    /// Assertion failures; non-empty means the run fails (exit 1).
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl ExperimentOutcome {
    fn new(experiment: &str, seed: u64) -> Self {
        ExperimentOutcome {
            experiment: experiment.to_string(),
            seed,
            metrics: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            csv_files: Vec::new(),
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn metric(&mut self, name: &str, value: f64, band: f64) {
        self.metrics.insert(name.to_string(), value);
        self.tolerances.insert(name.to_string(), band);
    }

    fn check(&mut self, ok: bool, message: String) {
        if !ok {
            self.failures.push(message);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// The regression record a run emits next to its summary.
    pub fn golden_record(&self, cfg: &ExperimentConfig) -> GoldenRecord {
        GoldenRecord {
            experiment: self.experiment.clone(),
            metrics: self.metrics.clone(),
            tolerances: self.tolerances.clone(),
            provenance: Provenance {
                config_hash: cfg.hash(),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }
}

pub struct ExperimentInfo {
    pub name: &'static str,
    /// The module operation chain the name maps to (shown by `list`).
    pub chain: &'static str,
}

pub fn registry() -> &'static [ExperimentInfo] {
    &[
        ExperimentInfo {
            name: "blmod-identity",
            chain: "blaschke::modulus_identity_gap over seeded random disc pairs",
        },
        ExperimentInfo {
            name: "carleson-trend",
            chain: "blaschke::geometric_zeros → carleson_delta on a deepening ladder",
        },
        ExperimentInfo {
            name: "kernel-bounds",
            chain: "blaschke::BlaschkeProduct::bound_checks (separation lower bounds) over seeded disc samples",
        },
        ExperimentInfo {
            name: "dual-biorthogonality",
            chain: "model::uv_bases → biorthogonality residual + dual-norm identity ‖v_n‖·|B_n(λ_n)| = 1",
        },
        ExperimentInfo {
            name: "kernel-reproducing",
            chain: "model::random_member → reproducing_check over seeded (member, λ) pairs",
        },
        ExperimentInfo {
            name: "disc-domination",
            chain: "model::mapped_kernel_margin over in-region kernel samples against the ψ-family constants",
        },
        ExperimentInfo {
            name: "psi-dichotomy",
            chain: "family::psi_basis → projection-norm stability across truncations + synthesis frame-bound decay across family size",
        },
        ExperimentInfo {
            name: "model-intertwining",
            chain: "model::uv_bases → lift::w_z_build intertwining and calculus residuals",
        },
        ExperimentInfo {
            name: "block-lift-golden",
            chain: "lift::assemble_lift → residuals + kernel_ratio_scan + power_norm_profile across the N ladder",
        },
        ExperimentInfo {
            name: "polybound-contrast",
            chain: "lift::family_block_t → polybound_probe_matrix on the frozen non-Riesz and degenerate configs",
        },
        ExperimentInfo {
            name: "shift-subspace-bound",
            chain: "lift::assemble_lift → shift_subspace_experiment (cyclic-subspace lower bound + span rank)",
        },
        ExperimentInfo {
            name: "ritt-constant",
            chain: "lift::assemble_lift → tadmor_ritt_probe over a sector sample cloud",
        },
        ExperimentInfo {
            name: "mt-exactness",
            chain: "triadic::mt_apply vs longhand + kappa vs brute force + h0_membership + v_zeta certificates, all exact",
        },
        ExperimentInfo {
            name: "mt-codim",
            chain: "triadic::kernel_codim_construct for each adjoint-kernel target",
        },
        ExperimentInfo {
            name: "mt-ess-scan",
            chain: "triadic::ess_spectrum_scan over a truncation ladder × λ grid with rotation diagnostics",
        },
    ]
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    cfg.validate()?;
    let p = &cfg.parameters;
    let mut out = match cfg.experiment.as_str() {
        "blmod-identity" => blmod_identity(p),
        "carleson-trend" => carleson_trend(p),
        "kernel-bounds" => kernel_bounds(p)?,
        "dual-biorthogonality" => dual_biorthogonality(p)?,
        "kernel-reproducing" => kernel_reproducing(p)?,
        "disc-domination" => disc_domination(p)?,
        "psi-dichotomy" => psi_dichotomy(p)?,
        "model-intertwining" => model_intertwining(p)?,
        "block-lift-golden" => block_lift_golden(p)?,
        "polybound-contrast" => polybound_contrast(p)?,
        "shift-subspace-bound" => shift_subspace_bound(p)?,
        "ritt-constant" => ritt_constant(p)?,
        "mt-exactness" => mt_exactness(p),
        "mt-codim" => mt_codim(p)?,
        "mt-ess-scan" => mt_ess_scan(p),
        other => return Err(ExperimentError::UnknownExperiment(other.to_string())),
    };
    if let Some(overrides) = &p.tolerances {
        for (name, value) in overrides {
            out.tolerances.insert(name.clone(), *value);
        }
    }
    Ok(out)
}

fn random_disc(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    let r = radius * rng.random_range(0.0..1.0f64).sqrt();
    let th = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, th)
}

fn golden_product(q: f64, m: usize) -> Result<BlaschkeProduct, BlaschkeError> {
    BlaschkeProduct::new(geometric_zeros(q, m))
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn blmod_identity(p: &Parameters) -> ExperimentOutcome {
    let samples = p.samples.unwrap_or(10_000);
    let seed = p.seed.unwrap_or(7);
    let mut out = ExperimentOutcome::new("blmod-identity", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_gap: f64 = 0.0;
    for _ in 0..samples {
        let lam = random_disc(&mut rng, 0.999);
        let z = random_disc(&mut rng, 0.999);
        max_gap = max_gap.max(blaschke::modulus_identity_gap(lam, z));
    }
    out.metric("samples", samples as f64, 0.5);
    out.metric("max_gap", max_gap, 1e-12);
    out.check(max_gap <= 1e-12, format!("modulus identity gap {max_gap:.3e} > 1e-12"));
    out
}

fn carleson_trend(p: &Parameters) -> ExperimentOutcome {
    let q = p.q.unwrap_or(0.65);
    let seed = p.seed.unwrap_or(0);
    let mut out = ExperimentOutcome::new("carleson-trend", seed);
    let counts = [8usize, 16, 32, 64];
    let mut rows = Vec::new();
    let mut prev = f64::INFINITY;
    for &count in &counts {
        let zeros: Vec<Complex64> = geometric_zeros(q, count).iter().map(|p| p.get()).collect();
        let delta = blaschke::carleson_delta(&zeros);
        out.metric(&format!("delta_{count}"), delta, (delta * 0.02).max(1e-12));
        out.check(delta > 0.0, format!("delta at {count} zeros not positive: {delta:.3e}"));
        out.check(
            delta <= prev,
            format!("delta increased along the ladder at {count} zeros: {delta:.6e} > {prev:.6e}"),
        );
        rows.push(format!("{count},{}", fmt(delta)));
        prev = delta;
    }
    out.csv_files.push(CsvFile {
        name: "carleson_trend.csv".into(),
        header: "count,delta".into(),
        rows,
    });
    out
}

fn kernel_bounds(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let samples = p.samples.unwrap_or(10_000);
    let seed = p.seed.unwrap_or(7);
    let q = p.q.unwrap_or(0.5);
    let m = p.m.unwrap_or(8);
    let mut out = ExperimentOutcome::new("kernel-bounds", seed);
    let b = golden_product(q, m)?;
    let rep = b.bound_checks(samples, seed);
    out.metric("violations", rep.violations as f64, 0.5);
    out.metric("inside_worst_margin", rep.inside_worst_margin, rep.inside_worst_margin.abs() * 0.05 + 1e-12);
    out.metric("outside_worst_margin", rep.outside_worst_margin, rep.outside_worst_margin.abs() * 0.05 + 1e-12);
    out.metric("inside_samples", rep.inside_samples as f64, 0.5);
    out.metric("outside_samples", rep.outside_samples as f64, 0.5);
    out.check(rep.violations == 0, format!("{} bound violations over {samples} samples", rep.violations));
    Ok(out)
}

fn dual_biorthogonality(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let q = p.q.unwrap_or(0.5);
    let m = p.m.unwrap_or(8);
    let n = p.n.unwrap_or(256);
    let mut out = ExperimentOutcome::new("dual-biorthogonality", p.seed.unwrap_or(0));
    let b = golden_product(q, m)?;
    let basis = uv_bases(&b, n)?;
    let mut norm_dev: f64 = 0.0;
    for k in 0..m {
        let bn = b.eval_omit(b.zero(k), k).norm();
        norm_dev = norm_dev.max((basis.v_norm(k) * bn - 1.0).abs());
    }
    out.metric("biorth_residual", basis.biorth_residual, 1e-8);
    out.metric("norm_identity_dev", norm_dev, 1e-6);
    out.metric("ambient_tail", basis.ambient_tail, basis.ambient_tail * 0.1 + 1e-12);
    out.check(
        basis.biorth_residual <= 1e-8,
        format!("biorthogonality residual {:.3e} > 1e-8", basis.biorth_residual),
    );
    out.check(norm_dev <= 1e-6, format!("dual-norm identity deviation {norm_dev:.3e} > 1e-6"));
    Ok(out)
}

fn kernel_reproducing(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let pairs = p.samples.unwrap_or(100);
    let seed = p.seed.unwrap_or(42);
    let q = p.q.unwrap_or(0.5);
    let m = p.m.unwrap_or(8);
    let n = p.n.unwrap_or(256);
    let mut out = ExperimentOutcome::new("kernel-reproducing", seed);
    let b = golden_product(q, m)?;
    let basis = uv_bases(&b, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual: f64 = 0.0;
    for _ in 0..pairs {
        let coords = basis.random_member(&mut rng);
        let f = basis.assemble_u_combo(&coords);
        let lam = DiskPoint::new(random_disc(&mut rng, 0.95))
            .expect("sample radius keeps the margin");
        max_residual = max_residual.max(model::reproducing_check(&b, &f, &lam));
    }
    out.metric("pairs", pairs as f64, 0.5);
    out.metric("max_residual", max_residual, 1e-8);
    out.check(max_residual <= 1e-8, format!("reproducing residual {max_residual:.3e} > 1e-8"));
    Ok(out)
}

fn disc_domination(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let samples = p.samples.unwrap_or(100);
    let seed = p.seed.unwrap_or(11);
    let q = p.q.unwrap_or(0.5);
    let m = p.m.unwrap_or(8);
    let n = p.n.unwrap_or(256);
    let alpha = p.alpha.unwrap_or(0.4);
    let mut out = ExperimentOutcome::new("disc-domination", seed);
    let b = golden_product(q, m)?;
    let basis = uv_bases(&b, n)?;
    let fam = psi_basis(alpha, m, n)?;
    let inf_x = fam.inf_norm();
    let sup_q = fam.sup_qnorm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    for i in 0..samples {
        let lam = b.sample_in_region(i % m, &mut rng);
        let ratio = model::mapped_kernel_margin(&basis, fam.gram(), inf_x, sup_q, lam);
        min_ratio = min_ratio.min(ratio);
    }
    out.metric("samples", samples as f64, 0.5);
    out.metric("min_ratio", min_ratio, min_ratio.abs() * 0.05 + 1e-12);
    out.check(min_ratio >= 1.0, format!("mapped-kernel margin ratio {min_ratio:.6} < 1"));
    Ok(out)
}

fn psi_dichotomy(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let alpha = p.alpha.unwrap_or(0.4);
    let m_proj = p.m.unwrap_or(16);
    let mut out = ExperimentOutcome::new("psi-dichotomy", p.seed.unwrap_or(0));

    let sup_p = |n_trunc: usize| -> Result<f64, ExperimentError> {
        let fam = psi_basis(alpha, m_proj, n_trunc)?;
        Ok(fam.pnorms().iter().copied().fold(0.0, f64::max))
    };
    let sup_p_lo = sup_p(256)?;
    let sup_p_hi = sup_p(512)?;
    let drift = (sup_p_hi - sup_p_lo).abs() / sup_p_lo;

    let sig = |m: usize| -> Result<f64, ExperimentError> {
        Ok(psi_basis(alpha, m, 512)?.riesz_diagnostic(0.0).sigma_min)
    };
    let sigma_32 = sig(32)?;
    let sigma_128 = sig(128)?;
    let ratio = sigma_128 / sigma_32;

    out.metric("sup_p_n256", sup_p_lo, sup_p_lo * 0.02 + 1e-12);
    out.metric("sup_p_n512", sup_p_hi, sup_p_hi * 0.02 + 1e-12);
    out.metric("sup_p_drift", drift, 0.02);
    out.metric("sigma_min_m32", sigma_32, sigma_32 * 0.02 + 1e-15);
    out.metric("sigma_min_m128", sigma_128, sigma_128 * 0.02 + 1e-15);
    out.metric("sigma_ratio", ratio, 0.02);
    out.check(drift < 0.10, format!("projection-norm drift {drift:.4} ≥ 10% across truncations"));
    out.check(
        ratio < 0.5,
        format!("synthesis frame bound at M=128 not below half its M=32 value (ratio {ratio:.4})"),
    );
    Ok(out)
}

fn model_intertwining(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let q = p.q.unwrap_or(0.5);
    let m = p.m.unwrap_or(8);
    let n = p.n.unwrap_or(256);
    let mut out = ExperimentOutcome::new("model-intertwining", p.seed.unwrap_or(0));
    let b = golden_product(q, m)?;
    let basis = uv_bases(&b, n)?;
    let (_, _, rep) = w_z_build(&basis, &GSymbol::OneMinusZPow(0.5), 1e-8)?;
    out.metric("intertwine_w", rep.intertwine_w, 1e-8);
    out.metric("intertwine_z", rep.intertwine_z, 1e-8);
    out.metric("zw_calculus_residual", rep.calculus_residual, 1e-8);
    out.metric("series_order", rep.series_order as f64, 0.5);
    out.check(rep.intertwine_w <= 1e-8, format!("‖WT* − R₀W‖ {:.3e} > 1e-8", rep.intertwine_w));
    out.check(rep.intertwine_z <= 1e-8, format!("‖ZR₀ − T*Z‖ {:.3e} > 1e-8", rep.intertwine_z));
    out.check(
        rep.calculus_residual <= 1e-8,
        format!("‖ZW − g(T*)‖ {:.3e} > 1e-8", rep.calculus_residual),
    );
    Ok(out)
}

fn block_lift_golden(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let seed = p.seed.unwrap_or(0);
    let mut out = ExperimentOutcome::new("block-lift-golden", seed);
    let base = LiftConfig {
        zeros_q: p.q.unwrap_or(0.5),
        m: p.m.unwrap_or(8),
        n: p.n.unwrap_or(256),
        margin: p.margin.unwrap_or(0),
        alpha: Some(p.alpha.unwrap_or(0.4)),
        g: GSymbol::OneMinusZPow(0.5),
    };
    let n_hi = base.n * 2;

    let lift_lo = assemble_lift(&base)?;
    let r = &lift_lo.residuals;
    out.metric("yt_sy", r.yt_sy, 1e-6);
    out.metric("xs_tx", r.xs_tx, 1e-6);
    out.metric("yx_gs", r.yx_gs, 1e-6);
    out.metric("xy_via_y", r.xy_via_y, 1e-6);
    out.metric("proj_power", r.proj_power, 1e-6);
    out.metric("x_sigma_min", r.x_sigma_min, r.x_sigma_min * 0.05 + 1e-12);
    out.metric("y_sigma_min", r.y_sigma_min, r.y_sigma_min * 0.05 + 1e-12);
    for (name, v) in
        [("yt_sy", r.yt_sy), ("xs_tx", r.xs_tx), ("yx_gs", r.yx_gs), ("xy_via_y", r.xy_via_y), ("proj_power", r.proj_power)]
    {
        out.check(v <= 1e-6, format!("lift residual {name} = {v:.3e} > 1e-6"));
    }

    let scan_lo = kernel_ratio_scan(&lift_lo, 0.995, 400);
    out.metric("c_low_n256", scan_lo.c_low, scan_lo.c_low * 0.05 + 1e-12);
    out.metric("c_high_n256", scan_lo.c_high, scan_lo.c_high * 0.05 + 1e-12);
    out.metric("inside_margin_min", scan_lo.inside_margin_min, scan_lo.inside_margin_min * 0.05 + 1e-12);
    out.check(scan_lo.c_low > 0.0, format!("c_low not positive: {:.3e}", scan_lo.c_low));
    out.check(
        scan_lo.outside_min >= scan_lo.outside_floor,
        format!(
            "outside ratio {:.6} under the δ²/6 floor {:.6}",
            scan_lo.outside_min, scan_lo.outside_floor
        ),
    );

    let powers_lo = power_norm_profile(lift_lo.t_onb(), 200);
    let pmax_lo = powers_lo.iter().copied().fold(0.0f64, f64::max);
    out.metric("power_max_n256", pmax_lo, pmax_lo * 0.05 + 1e-12);
    out.csv_files.push(CsvFile {
        name: "power_profile.csv".into(),
        header: "n,norm".into(),
        rows: powers_lo.iter().enumerate().map(|(i, v)| format!("{},{}", i + 1, fmt(*v))).collect(),
    });

    let hi = LiftConfig { n: n_hi, ..base.clone() };
    let lift_hi = assemble_lift(&hi)?;
    let scan_hi = kernel_ratio_scan(&lift_hi, 0.995, 400);
    let powers_hi = power_norm_profile(lift_hi.t_onb(), 200);
    let pmax_hi = powers_hi.iter().copied().fold(0.0f64, f64::max);
    let c_drift = (scan_hi.c_low - scan_lo.c_low).abs() / scan_lo.c_low;
    let p_drift = (pmax_hi - pmax_lo).abs() / pmax_lo;
    out.metric("c_low_n512", scan_hi.c_low, scan_hi.c_low * 0.05 + 1e-12);
    out.metric("power_max_n512", pmax_hi, pmax_hi * 0.05 + 1e-12);
    out.metric("c_low_drift", c_drift, 0.02);
    out.metric("power_max_drift", p_drift, 0.02);
    out.check(c_drift < 0.10, format!("c_low drift {c_drift:.4} ≥ 10% across the N ladder"));
    out.check(p_drift < 0.10, format!("power-norm max drift {p_drift:.4} ≥ 10% across the N ladder"));
    Ok(out)
}

/// The frozen non-Riesz growth configuration: zeros packed hard enough
/// (q = 0.7) that the calculus/sup ratios are still climbing their
/// logarithmic ramp across the whole bucket window.
fn polybound_nonriesz_config() -> LiftConfig {
    LiftConfig {
        zeros_q: 0.7,
        m: 32,
        n: 512,
        margin: 0,
        alpha: Some(0.4),
        g: GSymbol::OneMinusZPow(0.5),
    }
}

fn polybound_contrast(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let seed = p.seed.unwrap_or(77);
    let buckets = p.buckets.clone().unwrap_or_else(|| vec![16, 32, 64, 128]);
    let mut out = ExperimentOutcome::new("polybound-contrast", seed);
    if buckets.len() < 2 {
        return Err(ExperimentError::InvalidParameter("buckets needs at least two degrees".into()));
    }

    let mut non_riesz = polybound_nonriesz_config();
    if let Some(q) = p.q {
        non_riesz.zeros_q = q;
    }
    if let Some(m) = p.m {
        non_riesz.m = m;
    }
    if let Some(n) = p.n {
        non_riesz.n = n;
    }
    if let Some(a) = p.alpha {
        non_riesz.alpha = Some(a);
    }
    let degenerate = LiftConfig { alpha: None, ..non_riesz.clone() };

    let mut rows = Vec::new();
    let t = family_block_t(&non_riesz)?;
    let rep = polybound_probe_matrix(t.as_ref(), &buckets, seed);
    for (d, ratio) in &rep.buckets {
        out.metric(&format!("ratio_d{d}"), *ratio, ratio * 0.02 + 1e-9);
        rows.push(format!("non_riesz,{d},{}", fmt(*ratio)));
    }
    let growth = rep.buckets.last().unwrap().1 / rep.buckets.first().unwrap().1;
    out.metric("growth_non_riesz", growth, 0.02);
    out.check(
        growth >= 1.5,
        format!("non-Riesz ratio growth {growth:.4} < 1.5 across the bucket window"),
    );

    let t_deg = family_block_t(&degenerate)?;
    let rep_deg = polybound_probe_matrix(t_deg.as_ref(), &buckets, seed);
    for (d, ratio) in &rep_deg.buckets {
        rows.push(format!("degenerate,{d},{}", fmt(*ratio)));
    }
    let deg_max = rep_deg.buckets.iter().map(|x| x.1).fold(0.0f64, f64::max);
    let deg_growth = rep_deg.buckets.last().unwrap().1 / rep_deg.buckets.first().unwrap().1;
    out.metric("degenerate_ratio_max", deg_max, 0.05);
    out.metric("degenerate_growth", deg_growth, 0.02);
    out.check(
        deg_max <= 1.1,
        format!("degenerate config ratio {deg_max:.4} strays from the contraction value 1"),
    );

    out.csv_files.push(CsvFile {
        name: "polybound_buckets.csv".into(),
        header: "config,degree,ratio".into(),
        rows,
    });
    Ok(out)
}

fn shift_subspace_bound(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let seed = p.seed.unwrap_or(5);
    let mut out = ExperimentOutcome::new("shift-subspace-bound", seed);
    let lift = assemble_lift(&LiftConfig::golden())?;
    let rep = shift_subspace_experiment(&lift, seed)?;
    let floor = std::f64::consts::FRAC_1_SQRT_2 - 1e-6;
    out.metric("min_ratio", rep.min_ratio, rep.min_ratio * 0.05 + 1e-12);
    out.metric("span_rank", rep.span_rank as f64, 0.5);
    out.metric("full_rank", rep.full_rank as f64, 0.5);
    out.metric("krylov_dim", rep.krylov_dim as f64, 0.5);
    out.metric("rescales", rep.rescales as f64, 0.5);
    out.check(
        rep.min_ratio >= floor,
        format!("cyclic-subspace ratio {:.6} < 1/√2 − 1e-6", rep.min_ratio),
    );
    out.check(
        rep.span_rank == rep.full_rank,
        format!("span rank {} ≠ full rank {}", rep.span_rank, rep.full_rank),
    );
    out.check(!rep.falsified, "domination inequality falsified on the sample".to_string());
    Ok(out)
}

fn ritt_constant(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let mut out = ExperimentOutcome::new("ritt-constant", p.seed.unwrap_or(0));
    let lift = assemble_lift(&LiftConfig::golden())?;
    let samples = ritt_samples(24, 96);
    let rep = tadmor_ritt_probe(lift.t_onb(), &samples);
    out.metric("ritt_const", rep.constant, rep.constant * 0.05 + 1e-9);
    out.metric("anomalies", rep.anomalies as f64, 0.5);
    out.check(rep.constant.is_finite() && rep.constant > 0.0, "Ritt constant not finite".into());
    out.check(rep.anomalies == 0, format!("{} resolvent anomalies", rep.anomalies));
    Ok(out)
}

fn mt_exactness(p: &Parameters) -> ExperimentOutcome {
    let n_max = p.jmax.unwrap_or(200);
    let mut out = ExperimentOutcome::new("mt-exactness", p.seed.unwrap_or(0));

    let trunc = MtTruncation::new(250);
    let apply_mismatches =
        trunc.indices().iter().filter(|idx| mt_apply(**idx) != mt_apply_longhand(**idx)).count();
    out.metric("apply_mismatches", apply_mismatches as f64, 1e-9);
    out.check(apply_mismatches == 0, format!("{apply_mismatches} apply-encoding mismatches"));

    let mut kappa_mismatches = 0usize;
    for l in 1..=6u32 {
        for j in (0u64..=120).chain([243, 728, 729, 730, 6561, 59049]) {
            if kappa(l, j).members != kappa_scan(l, j, 1 << l) {
                kappa_mismatches += 1;
            }
        }
    }
    out.metric("kappa_mismatches", kappa_mismatches as f64, 1e-9);
    out.check(kappa_mismatches == 0, format!("{kappa_mismatches} κ-enumeration mismatches"));

    let orb = orbit(n_max);
    let mut membership_max: i64 = 0;
    for v in &orb {
        let rep = h0_membership(v);
        membership_max = membership_max.max(rep.residual.abs());
    }
    out.metric("membership_max_residual", membership_max as f64, 1e-9);
    out.check(
        membership_max == 0,
        format!("orbit membership residual {membership_max} ≠ 0 (exact arithmetic)"),
    );

    let small = MtTruncation::new(40);
    let zeta = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 7.0);
    let xi = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 5.0);
    let va = v_zeta(zeta, &small).expect("unimodular");
    let vb = v_zeta(xi, &small).expect("unimodular");
    let vab = v_zeta(zeta * xi, &small).expect("unimodular");
    let prod = &va.rep.matrix * &vb.rep.matrix;
    let mut group_dev: f64 = 0.0;
    for i in 0..prod.nrows() {
        group_dev = group_dev.max((prod[(i, i)] - vab.rep.matrix[(i, i)]).norm());
    }
    out.metric("group_law_dev", group_dev, 1e-12);
    out.metric("stack_commutation_exact", va.stack_commutation_exact as u8 as f64, 1e-9);
    out.metric("orbit_eigen_exact", va.orbit_eigen_exact as u8 as f64, 1e-9);
    out.check(group_dev <= 1e-12, format!("V_ζV_ξ − V_ζξ deviation {group_dev:.3e}"));
    out.check(va.stack_commutation_exact, "stack commutation certificate failed".into());
    out.check(va.orbit_eigen_exact, "orbit eigenvector certificate failed".into());
    out
}

fn mt_codim(p: &Parameters) -> Result<ExperimentOutcome, ExperimentError> {
    let targets = p.targets.clone().unwrap_or_else(|| vec![2, 3, 4]);
    let j_max = p.jmax.unwrap_or(40);
    let seed = p.seed.unwrap_or(11);
    let mut out = ExperimentOutcome::new("mt-codim", seed);
    let mut rows = Vec::new();
    for &target in &targets {
        let rep = kernel_codim_construct(target, j_max, seed)?;
        out.metric(&format!("kernel_dim_{target}"), rep.kernel_dim as f64, 1e-9);
        out.metric(&format!("gap_ratio_{target}"), rep.gap_ratio, rep.gap_ratio * 0.5 + 1.0);
        out.metric(
            &format!("power_residual_{target}"),
            rep.power_identity_residual,
            1e-10,
        );
        out.check(
            rep.kernel_dim == target,
            format!("kernel dimension {} ≠ target {target}", rep.kernel_dim),
        );
        out.check(
            rep.gap_ratio >= 1e6,
            format!("SVD gap ratio {:.3e} < 1e6 at target {target}", rep.gap_ratio),
        );
        out.check(
            rep.power_identity_residual <= 1e-10,
            format!("power identity residual {:.3e} > 1e-10", rep.power_identity_residual),
        );
        rows.push(format!(
            "{target},{},{},{},{},{}",
            rep.kernel_dim,
            fmt(rep.gap_ratio),
            fmt(rep.principal_angle),
            rep.attempts,
            fmt(rep.power_identity_residual)
        ));
    }
    out.csv_files.push(CsvFile {
        name: "codim_targets.csv".into(),
        header: "target,kernel_dim,gap_ratio,principal_angle,attempts,power_residual".into(),
        rows,
    });
    Ok(out)
}

fn mt_ess_scan(p: &Parameters) -> ExperimentOutcome {
    let ladder = p.jmax_ladder.clone().unwrap_or_else(|| vec![50, 100, 150, 200]);
    let grid: Vec<Complex64> = p
        .grid
        .clone()
        .unwrap_or_else(|| vec![[0.0, 0.0], [0.5, 0.0], [0.0, -0.5], [0.8, 0.0], [1.5, 0.0]])
        .into_iter()
        .map(|[re, im]| Complex64::new(re, im))
        .collect();
    let zetas: Vec<Complex64> = p
        .zetas
        .clone()
        .unwrap_or_else(|| vec![[-1.0, 0.0], [0.0, 1.0]])
        .into_iter()
        .map(|[re, im]| Complex64::new(re, im))
        .collect();
    let mut out = ExperimentOutcome::new("mt-ess-scan", p.seed.unwrap_or(0));

    let rep = ess_spectrum_scan(&ladder, &grid, &zetas);
    let max_asym = rep.asymmetry.iter().map(|a| a.max_rel_asym).fold(0.0f64, f64::max);
    out.metric("net_decrease_min", rep.net_decrease_min, 0.02);
    out.metric("control_min", rep.control_min, rep.control_min.abs() * 0.02 + 1e-9);
    out.metric("max_rel_asym", max_asym, 0.02);
    out.metric("monotone_ok", rep.monotone_ok as u8 as f64, 1e-9);
    out.check(rep.monotone_ok, "interior σ_min not nonincreasing along the ladder".into());
    out.check(
        rep.net_decrease_min >= 0.05,
        format!("interior net decrease {:.4} < 5%", rep.net_decrease_min),
    );
    out.check(max_asym <= 0.02, format!("rotation asymmetry {max_asym:.4} above frozen 0.02"));
    out.check(
        rep.control_min >= 0.45,
        format!("outside control σ_min {:.4} lost its resolvent floor", rep.control_min),
    );

    out.csv_files.push(CsvFile {
        name: "ess_scan.csv".into(),
        header: "lambda_re,lambda_im,jmax,sigma_min".into(),
        rows: rep
            .rows
            .iter()
            .map(|r| {
                format!("{},{},{},{}", fmt(r.lambda.re), fmt(r.lambda.im), r.j_max, fmt(r.sigma_min))
            })
            .collect(),
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(name: &str) -> ExperimentConfig {
        ExperimentConfig {
            experiment: name.into(),
            parameters: Parameters::default(),
            output_dir: std::path::PathBuf::from("/tmp"),
        }
    }

    #[test]
    fn registry_names_are_unique_and_runnable_names() {
        let names: Vec<&str> = registry().iter().map(|i| i.name).collect();
        let mut dedup = names.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), names.len());
        for info in registry() {
            assert!(!info.chain.is_empty());
        }
    }

    #[test]
    fn unknown_experiment_and_bad_parameters_are_rejected() {
        assert!(matches!(
            run_experiment(&cfg("no-such-thing")),
            Err(ExperimentError::UnknownExperiment(_))
        ));
        let mut c = cfg("blmod-identity");
        c.parameters.alpha = Some(0.7);
        assert!(matches!(run_experiment(&c), Err(ExperimentError::InvalidParameter(_))));
        let mut c = cfg("blmod-identity");
        c.parameters.tolerances = Some([("max_gap".to_string(), -1.0)].into_iter().collect());
        assert!(matches!(run_experiment(&c), Err(ExperimentError::InvalidParameter(_))));
    }

    #[test]
    fn config_json_rejects_unknown_keys_naming_them() {
        let raw = r#"{"experiment": "blmod-identity", "output_dir": "x", "banana": 1}"#;
        let err = serde_json::from_str::<ExperimentConfig>(raw).unwrap_err().to_string();
        assert!(err.contains("banana"), "{err}");
        let raw = r#"{"experiment": "x", "parameters": {"peel": 2}, "output_dir": "y"}"#;
        let err = serde_json::from_str::<ExperimentConfig>(raw).unwrap_err().to_string();
        assert!(err.contains("peel"), "{err}");
    }

    #[test]
    fn blmod_identity_is_deterministic_and_clean() {
        let mut c = cfg("blmod-identity");
        c.parameters.samples = Some(2000);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert!(a.passed(), "{:?}", a.failures);
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.seed, 7);
        assert!(a.metrics["max_gap"] <= 1e-12);
    }

    #[test]
    fn carleson_trend_emits_a_deterministic_csv() {
        let a = run_experiment(&cfg("carleson-trend")).unwrap();
        let b = run_experiment(&cfg("carleson-trend")).unwrap();
        assert!(a.passed());
        assert_eq!(a.csv_files[0].rows, b.csv_files[0].rows);
        assert_eq!(a.csv_files[0].header, "count,delta");
        assert_eq!(a.csv_files[0].rows.len(), 4);
    }

    #[test]
    fn golden_record_carries_provenance() {
        let c = cfg("carleson-trend");
        let out = run_experiment(&c).unwrap();
        let rec = out.golden_record(&c);
        assert_eq!(rec.experiment, "carleson-trend");
        assert_eq!(rec.provenance.config_hash, c.hash());
        assert!(rec.metrics.contains_key("delta_8"));
        rec.validate().unwrap();
    }

    #[test]
    fn mt_exactness_runs_clean() {
        let mut c = cfg("mt-exactness");
        c.parameters.jmax = Some(120);
        let out = run_experiment(&c).unwrap();
        assert!(out.passed(), "{:?}", out.failures);
        assert_eq!(out.metrics["apply_mismatches"], 0.0);
        assert_eq!(out.metrics["membership_max_residual"], 0.0);
    }
}
