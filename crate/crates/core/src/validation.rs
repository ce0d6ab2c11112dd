//! Agreement metrics, threshold classification and subgroup disaggregation.
//!
//! Aggregate agreement is reported as MAPE, mean bias and 1.96·sd limits of
//! agreement. A population-level number can hide arbitrarily bad subgroup
//! behaviour, so [`subgroup_disaggregate`] recomputes every metric per
//! subgroup label and per sex entry, and lists every individual residual;
//! rows that cannot be evaluated are reported, never silently dropped.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{estimate_composition, CodingPolicy};
use crate::refit::FitDataset;
use crate::registry::{EquationSpec, Registry};

/// Default acceptability threshold for MAPE, in percent.
pub const DEFAULT_MAPE_THRESHOLD_PERCENT: f64 = 1.5;

/// Subgroup key for rows whose group cell is empty or absent.
pub const UNLABELED_GROUP: &str = "unlabeled";

/// Pass/fail classification of a MAPE value against a threshold, carrying
/// both numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdVerdict {
    pub mape_percent: f64,
    pub threshold_percent: f64,
    pub pass: bool,
}

impl fmt::Display for ThresholdVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "MAPE {:.4}% vs threshold {:.4}%: {}",
            self.mape_percent,
            self.threshold_percent,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

/// Pass iff `mape_percent <= threshold_percent`. Both inputs must be
/// nonnegative; the comparison is monotone in both arguments.
pub fn classify_against_threshold(mape_percent: f64, threshold_percent: f64) -> ThresholdVerdict {
    debug_assert!(mape_percent >= 0.0 && threshold_percent >= 0.0);
    ThresholdVerdict {
        mape_percent,
        threshold_percent,
        pass: mape_percent <= threshold_percent,
    }
}

/// Agreement between estimates and references over one set of pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementMetrics {
    pub n: usize,
    /// `100 · mean(|est − ref| / ref)`.
    pub mape_percent: f64,
    /// `mean(est − ref)`, same unit as the inputs.
    pub mean_bias: f64,
    /// Sample standard deviation of the differences (0 for a single pair).
    pub sd_bias: f64,
    /// `mean_bias ± 1.96 · sd_bias`.
    pub loa_lower: f64,
    pub loa_upper: f64,
    pub verdict: ThresholdVerdict,
}

fn metrics_from_pairs(pairs: &[(f64, f64)], threshold_percent: f64) -> Result<AgreementMetrics> {
    let n = pairs.len();
    if n == 0 {
        return Err(Error::Input("no estimate/reference pairs".into()));
    }
    let mut ape_sum = 0.0;
    let mut diff_sum = 0.0;
    for &(est, reference) in pairs {
        if reference <= 0.0 || reference.is_nan() {
            return Err(Error::MapeUndefined(format!(
                "reference value {reference} is not strictly positive"
            )));
        }
        ape_sum += (est - reference).abs() / reference;
        diff_sum += est - reference;
    }
    let mape_percent = 100.0 * ape_sum / n as f64;
    let mean_bias = diff_sum / n as f64;
    let sd_bias = if n >= 2 {
        let ss: f64 = pairs
            .iter()
            .map(|&(est, reference)| {
                let d = est - reference - mean_bias;
                d * d
            })
            .sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(AgreementMetrics {
        n,
        mape_percent,
        mean_bias,
        sd_bias,
        loa_lower: mean_bias - 1.96 * sd_bias,
        loa_upper: mean_bias + 1.96 * sd_bias,
        verdict: classify_against_threshold(mape_percent, threshold_percent),
    })
}

/// One individual-level residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowResidual {
    pub row: usize,
    pub estimate: f64,
    pub reference: f64,
    pub residual: f64,
}

/// A row that could not be evaluated, and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowFailure {
    pub row: usize,
    pub message: String,
}

/// Agreement metrics overall and per subgroup, plus the individual-level
/// residual listing. Serializes to JSON as the machine-readable form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub overall: AgreementMetrics,
    /// Metrics keyed by group column, then by group value. Rows with an
    /// empty or missing label appear under [`UNLABELED_GROUP`]; each
    /// column's subgroup counts sum to the overall n.
    pub subgroups: BTreeMap<String, BTreeMap<String, AgreementMetrics>>,
    pub residuals: Vec<RowResidual>,
    pub failures: Vec<RowFailure>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = |f: &mut fmt::Formatter<'_>, m: &AgreementMetrics| {
            writeln!(
                f,
                "n={}  MAPE={:.4}%  bias={:+.4}  sd={:.4}  LoA=[{:+.4}, {:+.4}]  -> {}",
                m.n,
                m.mape_percent,
                m.mean_bias,
                m.sd_bias,
                m.loa_lower,
                m.loa_upper,
                if m.verdict.pass { "pass" } else { "fail" }
            )
        };
        write!(f, "overall: ")?;
        line(f, &self.overall)?;
        writeln!(
            f,
            "threshold: {}% ({})",
            self.overall.verdict.threshold_percent,
            if self.overall.verdict.pass {
                "pass"
            } else {
                "fail"
            }
        )?;
        for (column, cells) in &self.subgroups {
            for (value, metrics) in cells {
                write!(f, "subgroup {column}={value}: ")?;
                line(f, metrics)?;
            }
        }
        if !self.residuals.is_empty() {
            writeln!(f, "individual residuals (estimate - reference):")?;
            for r in &self.residuals {
                writeln!(
                    f,
                    "  row {}: est {:.4}  ref {:.4}  residual {:+.4}",
                    r.row, r.estimate, r.reference, r.residual
                )?;
            }
        }
        if !self.failures.is_empty() {
            writeln!(f, "rows not evaluated:")?;
            for failure in &self.failures {
                writeln!(f, "  row {}: {}", failure.row, failure.message)?;
            }
        }
        Ok(())
    }
}

/// Agreement metrics over paired estimates and references (no subgroups),
/// at the default 1.5% MAPE threshold.
pub fn agreement_metrics(estimates: &[f64], references: &[f64]) -> Result<ValidationReport> {
    agreement_metrics_with_threshold(estimates, references, DEFAULT_MAPE_THRESHOLD_PERCENT)
}

/// [`agreement_metrics`] with an explicit threshold.
pub fn agreement_metrics_with_threshold(
    estimates: &[f64],
    references: &[f64],
    threshold_percent: f64,
) -> Result<ValidationReport> {
    if estimates.len() != references.len() {
        return Err(Error::Input(format!(
            "length mismatch: {} estimates vs {} references",
            estimates.len(),
            references.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::Input("no estimate/reference pairs".into()));
    }
    let pairs: Vec<(f64, f64)> = estimates
        .iter()
        .copied()
        .zip(references.iter().copied())
        .collect();
    let overall = metrics_from_pairs(&pairs, threshold_percent)?;
    let residuals = pairs
        .iter()
        .enumerate()
        .map(|(i, &(est, reference))| RowResidual {
            row: i + 1,
            estimate: est,
            reference,
            residual: est - reference,
        })
        .collect();
    Ok(ValidationReport {
        overall,
        subgroups: BTreeMap::new(),
        residuals,
        failures: Vec::new(),
    })
}

/// Runs the estimator on every dataset row and reports agreement with the
/// reference FFM: overall, per `group_` column, per sex entry, and per row.
///
/// Interval estimates contribute their midpoint FFM. Rows the estimator
/// rejects (and rows with a non-positive reference) are collected in
/// `failures` and excluded from the metrics.
pub fn subgroup_disaggregate(
    registry: &Registry,
    dataset: &FitDataset,
    spec: &EquationSpec,
    policy: &CodingPolicy,
) -> Result<ValidationReport> {
    subgroup_disaggregate_with_threshold(
        registry,
        dataset,
        spec,
        policy,
        DEFAULT_MAPE_THRESHOLD_PERCENT,
    )
}

/// [`subgroup_disaggregate`] with an explicit MAPE threshold.
pub fn subgroup_disaggregate_with_threshold(
    registry: &Registry,
    dataset: &FitDataset,
    spec: &EquationSpec,
    policy: &CodingPolicy,
    threshold_percent: f64,
) -> Result<ValidationReport> {
    if dataset.rows.is_empty() {
        return Err(Error::Input("dataset contains no rows".into()));
    }
    let mut pairs: Vec<(usize, f64, f64)> = Vec::new();
    let mut failures = Vec::new();
    for (i, dataset_row) in dataset.rows.iter().enumerate() {
        let row = i + 1;
        if dataset_row.ref_ffm_kg <= 0.0 || dataset_row.ref_ffm_kg.is_nan() {
            failures.push(RowFailure {
                row,
                message: format!(
                    "reference FFM {} is not strictly positive; MAPE undefined",
                    dataset_row.ref_ffm_kg
                ),
            });
            continue;
        }
        match estimate_composition(
            registry,
            spec,
            &dataset_row.profile,
            &dataset_row.reading,
            policy,
        ) {
            Ok(estimate) => pairs.push((
                row,
                estimate.value.midpoint().ffm_kg,
                dataset_row.ref_ffm_kg,
            )),
            Err(e) => failures.push(RowFailure {
                row,
                message: e.to_string(),
            }),
        }
    }
    if pairs.is_empty() {
        return Err(Error::Input(
            "no dataset row could be evaluated; see per-row failures".into(),
        ));
    }

    let flat: Vec<(f64, f64)> = pairs.iter().map(|&(_, e, r)| (e, r)).collect();
    let overall = metrics_from_pairs(&flat, threshold_percent)?;

    // Partition columns: every group_ column present anywhere, plus sex.
    let mut columns: Vec<String> = dataset
        .rows
        .iter()
        .flat_map(|r| r.groups.keys().cloned())
        .collect();
    columns.sort();
    columns.dedup();

    let mut subgroups = BTreeMap::new();
    for column in columns {
        let mut cells: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for &(row, est, reference) in &pairs {
            let label = dataset.rows[row - 1]
                .groups
                .get(&column)
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .unwrap_or(UNLABELED_GROUP)
                .to_string();
            cells.entry(label).or_default().push((est, reference));
        }
        let mut cell_metrics = BTreeMap::new();
        for (label, cell_pairs) in cells {
            cell_metrics.insert(label, metrics_from_pairs(&cell_pairs, threshold_percent)?);
        }
        subgroups.insert(column, cell_metrics);
    }
    {
        let mut cells: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        for &(row, est, reference) in &pairs {
            let label = dataset.rows[row - 1]
                .profile
                .gender_entry
                .label()
                .to_string();
            cells.entry(label).or_default().push((est, reference));
        }
        let mut cell_metrics = BTreeMap::new();
        for (label, cell_pairs) in cells {
            cell_metrics.insert(label, metrics_from_pairs(&cell_pairs, threshold_percent)?);
        }
        subgroups.insert("sex".to_string(), cell_metrics);
    }

    let residuals = pairs
        .iter()
        .map(|&(row, est, reference)| RowResidual {
            row,
            estimate: est,
            reference,
            residual: est - reference,
        })
        .collect();
    Ok(ValidationReport {
        overall,
        subgroups,
        residuals,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refit::{synthesize_cohort, CohortConfig};
    use crate::registry::{builtin_registry, BUILTIN_EQUATION_ID};

    #[test]
    fn identical_inputs_give_zero_metrics() {
        let values = [50.0, 61.5, 47.2];
        let report = agreement_metrics(&values, &values).unwrap();
        assert_eq!(report.overall.mape_percent, 0.0);
        assert_eq!(report.overall.mean_bias, 0.0);
        assert!(report.overall.verdict.pass);
    }

    #[test]
    fn worked_example() {
        let report = agreement_metrics(&[50.0, 60.0], &[50.0, 50.0]).unwrap();
        assert!((report.overall.mape_percent - 10.0).abs() < 1e-12);
        assert!((report.overall.mean_bias - 5.0).abs() < 1e-12);
        assert!(!report.overall.verdict.pass);
        assert!(report.overall.loa_lower <= report.overall.mean_bias);
        assert!(report.overall.mean_bias <= report.overall.loa_upper);
    }

    #[test]
    fn zero_reference_is_undefined() {
        assert!(matches!(
            agreement_metrics(&[60.0], &[0.0]),
            Err(Error::MapeUndefined(_))
        ));
    }

    #[test]
    fn length_mismatch_is_input_error() {
        assert!(matches!(
            agreement_metrics(&[60.0, 50.0], &[60.0]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn threshold_classification() {
        assert!(!classify_against_threshold(25.0, 1.5).pass);
        assert!(classify_against_threshold(1.5, 1.5).pass);
        assert!(classify_against_threshold(0.0, 1.5).pass);
    }

    #[test]
    fn single_pair_has_zero_sd() {
        let report = agreement_metrics(&[52.0], &[50.0]).unwrap();
        assert_eq!(report.overall.sd_bias, 0.0);
        assert_eq!(report.overall.loa_lower, report.overall.mean_bias);
    }

    #[test]
    fn single_group_matches_overall() {
        let mut dataset = synthesize_cohort(&CohortConfig {
            n: 40,
            seed: 13,
            noise_sd_kg: 1.0,
            ..Default::default()
        })
        .unwrap();
        for row in &mut dataset.rows {
            row.groups.insert("site".into(), "alpha".into());
            row.ref_ffm_kg = row.ref_ffm_kg.clamp(1.0, row.profile.weight_kg);
        }
        let registry = builtin_registry();
        let spec = registry.get(BUILTIN_EQUATION_ID).unwrap();
        let report =
            subgroup_disaggregate(&registry, &dataset, spec, &CodingPolicy::AsEntered).unwrap();
        let cell = &report.subgroups["site"]["alpha"];
        assert_eq!(cell, &report.overall);
        assert_eq!(report.residuals.len(), 40);
    }

    #[test]
    fn empty_group_values_collect_under_unlabeled() {
        let mut dataset = synthesize_cohort(&CohortConfig {
            n: 30,
            seed: 14,
            noise_sd_kg: 0.5,
            ..Default::default()
        })
        .unwrap();
        for (i, row) in dataset.rows.iter_mut().enumerate() {
            let label = if i % 3 == 0 { "" } else { "B" };
            row.groups.insert("ethnicity".into(), label.into());
            row.ref_ffm_kg = row.ref_ffm_kg.clamp(1.0, row.profile.weight_kg);
        }
        let registry = builtin_registry();
        let spec = registry.get(BUILTIN_EQUATION_ID).unwrap();
        let report =
            subgroup_disaggregate(&registry, &dataset, spec, &CodingPolicy::AsEntered).unwrap();
        let cells = &report.subgroups["ethnicity"];
        assert!(cells.contains_key(UNLABELED_GROUP));
        let total: usize = cells.values().map(|m| m.n).sum();
        assert_eq!(total, report.overall.n);
        let sex_total: usize = report.subgroups["sex"].values().map(|m| m.n).sum();
        assert_eq!(sex_total, report.overall.n);
    }

    #[test]
    fn weighted_subgroup_bias_matches_overall() {
        let mut dataset = synthesize_cohort(&CohortConfig {
            n: 60,
            seed: 15,
            noise_sd_kg: 1.0,
            ..Default::default()
        })
        .unwrap();
        for (i, row) in dataset.rows.iter_mut().enumerate() {
            row.groups
                .insert("site".into(), if i % 2 == 0 { "A" } else { "B" }.into());
            row.ref_ffm_kg = row.ref_ffm_kg.clamp(1.0, row.profile.weight_kg);
        }
        let registry = builtin_registry();
        let spec = registry.get(BUILTIN_EQUATION_ID).unwrap();
        let report =
            subgroup_disaggregate(&registry, &dataset, spec, &CodingPolicy::AsEntered).unwrap();
        let weighted: f64 = report.subgroups["site"]
            .values()
            .map(|m| m.mean_bias * m.n as f64)
            .sum::<f64>()
            / report.overall.n as f64;
        assert!((weighted - report.overall.mean_bias).abs() < 1e-10);
    }

    #[test]
    fn failing_rows_are_reported_not_dropped() {
        let mut dataset = synthesize_cohort(&CohortConfig {
            n: 10,
            seed: 16,
            noise_sd_kg: 0.5,
            ..Default::default()
        })
        .unwrap();
        for row in &mut dataset.rows {
            row.ref_ffm_kg = row.ref_ffm_kg.clamp(1.0, row.profile.weight_kg);
        }
        dataset.rows[2].ref_ffm_kg = -1.0;
        let registry = builtin_registry();
        let spec = registry.get(BUILTIN_EQUATION_ID).unwrap();
        let report =
            subgroup_disaggregate(&registry, &dataset, spec, &CodingPolicy::AsEntered).unwrap();
        assert_eq!(report.overall.n, 9);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].row, 3);
    }

    #[test]
    fn report_serializes_to_json() {
        let report = agreement_metrics(&[50.0, 60.0], &[50.0, 50.0]).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"mape_percent\""));
        assert!(json.contains("\"residuals\""));
    }
}
