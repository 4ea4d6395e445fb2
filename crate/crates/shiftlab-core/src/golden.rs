//! Golden-value regression records: scalar metrics frozen from a calibrated
//! run, compared two-sided against fresh results. Drift beyond a stated
//! tolerance fails the run; extra metrics in the results are allowed (new
//! diagnostics must not invalidate old goldens) and reported as notes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GoldenError {
    #[error("experiment ids differ: results '{results}' vs golden '{golden}'")]
    IdMismatch { results: String, golden: String },
    #[error("metric '{0}' required by the golden record is missing from the results")]
    MissingMetric(String),
    #[error("no tolerance for metric '{0}' (and no 'default' entry)")]
    MissingTolerance(String),
    #[error("tolerance for '{name}' must be positive, got {value}")]
    BadTolerance { name: String, value: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    /// Hash of the canonical config JSON that produced the record.
    pub config_hash: String,
    pub code_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldenRecord {
    pub experiment: String,
    pub metrics: BTreeMap<String, f64>,
    /// Per-metric absolute tolerances; a "default" entry covers the rest.
    pub tolerances: BTreeMap<String, f64>,
    pub provenance: Provenance,
}

impl GoldenRecord {
    pub fn validate(&self) -> Result<(), GoldenError> {
        for (name, value) in &self.tolerances {
            if !(*value > 0.0) {
                return Err(GoldenError::BadTolerance { name: name.clone(), value: *value });
            }
        }
        Ok(())
    }

    fn tolerance_for(&self, metric: &str) -> Result<f64, GoldenError> {
        self.tolerances
            .get(metric)
            .or_else(|| self.tolerances.get("default"))
            .copied()
            .ok_or_else(|| GoldenError::MissingTolerance(metric.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricVerdict {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub experiment: String,
    pub verdicts: Vec<MetricVerdict>,
    /// Present in the results but not in the golden — allowed, noted.
    pub extra_metrics: Vec<String>,
    pub pass: bool,
}

/// Two-sided comparison of fresh results against a golden record. Every
/// golden metric must exist in the results and sit within its tolerance;
/// NaN never passes.
pub fn compare(results: &GoldenRecord, golden: &GoldenRecord) -> Result<CompareReport, GoldenError> {
    if results.experiment != golden.experiment {
        return Err(GoldenError::IdMismatch {
            results: results.experiment.clone(),
            golden: golden.experiment.clone(),
        });
    }
    golden.validate()?;

    let mut verdicts = Vec::with_capacity(golden.metrics.len());
    for (name, expected) in &golden.metrics {
        let actual = *results
            .metrics
            .get(name)
            .ok_or_else(|| GoldenError::MissingMetric(name.clone()))?;
        let tolerance = golden.tolerance_for(name)?;
        let pass = (actual - expected).abs() <= tolerance;
        verdicts.push(MetricVerdict { name: name.clone(), expected: *expected, actual, tolerance, pass });
    }
    let extra_metrics: Vec<String> = results
        .metrics
        .keys()
        .filter(|k| !golden.metrics.contains_key(*k))
        .cloned()
        .collect();
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(CompareReport { experiment: golden.experiment.clone(), verdicts, extra_metrics, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(metrics: &[(&str, f64)], tols: &[(&str, f64)]) -> GoldenRecord {
        GoldenRecord {
            experiment: "probe".into(),
            metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            tolerances: tols.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            provenance: Provenance { config_hash: "0".into(), code_version: "test".into() },
        }
    }

    #[test]
    fn identical_records_pass() {
        let g = record(&[("a", 1.0), ("b", -2.5)], &[("default", 1e-9)]);
        let rep = compare(&g, &g).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.verdicts.len(), 2);
        assert!(rep.extra_metrics.is_empty());
    }

    #[test]
    fn drift_beyond_tolerance_fails_naming_the_metric() {
        let golden = record(&[("a", 1.0)], &[("a", 0.01)]);
        let results = record(&[("a", 1.02)], &[]);
        let rep = compare(&results, &golden).unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.verdicts[0].name, "a");
        assert!(!rep.verdicts[0].pass);
        // Two-sided: same drift downward also fails, drift inside passes.
        let low = record(&[("a", 0.98)], &[]);
        assert!(!compare(&low, &golden).unwrap().pass);
        let ok = record(&[("a", 1.005)], &[]);
        assert!(compare(&ok, &golden).unwrap().pass);
    }

    #[test]
    fn extra_result_metrics_pass_with_note() {
        let golden = record(&[("a", 1.0)], &[("default", 1e-6)]);
        let results = record(&[("a", 1.0), ("shiny_new", 7.0)], &[]);
        let rep = compare(&results, &golden).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.extra_metrics, vec!["shiny_new".to_string()]);
    }

    #[test]
    fn missing_metric_is_an_error_not_a_verdict() {
        let golden = record(&[("a", 1.0)], &[("default", 1e-6)]);
        let results = record(&[("b", 1.0)], &[]);
        match compare(&results, &golden) {
            Err(GoldenError::MissingMetric(name)) => assert_eq!(name, "a"),
            other => panic!("expected missing-metric error, got {other:?}"),
        }
    }

    #[test]
    fn bad_tolerance_and_id_mismatch_are_rejected() {
        let golden = record(&[("a", 1.0)], &[("a", 0.0)]);
        assert!(matches!(
            compare(&golden, &golden),
            Err(GoldenError::BadTolerance { .. })
        ));
        let other = GoldenRecord { experiment: "different".into(), ..record(&[], &[]) };
        assert!(matches!(
            compare(&other, &record(&[], &[("default", 1.0)])),
            Err(GoldenError::IdMismatch { .. })
        ));
    }

    #[test]
    fn nan_results_never_pass() {
        let golden = record(&[("a", 1.0)], &[("default", 1e9)]);
        let results = record(&[("a", f64::NAN)], &[]);
        assert!(!compare(&results, &golden).unwrap().pass);
    }

    #[test]
    fn records_round_trip_through_json() {
        let g = record(&[("a", 1.25)], &[("a", 1e-3)]);
        let s = serde_json::to_string_pretty(&g).unwrap();
        let back: GoldenRecord = serde_json::from_str(&s).unwrap();
        assert_eq!(back.experiment, g.experiment);
        assert_eq!(back.metrics, g.metrics);
        // Unknown keys are rejected at the parse boundary.
        let bad = s.replace("\"experiment\"", "\"mystery\": 3, \"experiment\"");
        let err = serde_json::from_str::<GoldenRecord>(&bad).unwrap_err().to_string();
        assert!(err.contains("mystery"), "{err}");
    }
}
