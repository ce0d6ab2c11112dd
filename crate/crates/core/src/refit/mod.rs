//! Least-squares fitting of FFM regression equations.
//!
//! Fits are ordinary least squares over the closed covariate vocabulary,
//! solved by Householder QR for numerical stability. The headline use is the
//! sex-free refit: the same regression re-run without the sex term, which
//! turns an offset-scheme equation into one that serves every user at a
//! quantifiable cost in aggregate error. [`cross_validate`] measures that
//! cost out of sample with deterministic round-robin folds.
//!
//! No regularization: the published equations are plain least-squares fits,
//! and penalties would change what the coefficients mean.

mod cohort;
mod ingest;

pub use cohort::{synthesize_cohort, CohortConfig};
pub use ingest::{ingest_dataset, ingest_dataset_path, GROUP_COLUMN_PREFIX, REQUIRED_COLUMNS};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{ImpedanceReading, SubjectProfile};
use crate::registry::{Covariate, EquationSpec, ReportedError, SexScheme, Term, ValidRange};

/// The covariate set of the built-in equation form, sex term included.
pub const FULL_COVARIATES: [Covariate; 5] = [
    Covariate::Intercept,
    Covariate::H2OverR,
    Covariate::Weight,
    Covariate::Reactance,
    Covariate::SexOffset,
];

/// [`FULL_COVARIATES`] minus the sex term.
pub const SEX_FREE_COVARIATES: [Covariate; 4] = [
    Covariate::Intercept,
    Covariate::H2OverR,
    Covariate::Weight,
    Covariate::Reactance,
];

/// One subject with a reference FFM from a gold-standard measurement, plus
/// optional subgroup labels (e.g. ethnicity) keyed by group name.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetRow {
    pub profile: SubjectProfile,
    pub reading: ImpedanceReading,
    pub ref_ffm_kg: f64,
    pub groups: BTreeMap<String, String>,
}

/// Rows to fit or validate against, with free-text provenance.
///
/// `sex_provenance` records how the sex column was determined (self-report,
/// researcher-assigned, ...). It cannot be validated, only disclosed; when
/// absent it is rendered as "not reported" in fitted-equation metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDataset {
    pub rows: Vec<DatasetRow>,
    pub description: Option<String>,
    pub sex_provenance: Option<String>,
}

impl FitDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Population metadata string recorded on equations fitted from this
    /// dataset.
    pub fn population_note(&self) -> String {
        format!(
            "fitted on {} rows; {}; sex coding provenance: {}",
            self.rows.len(),
            self.description
                .as_deref()
                .unwrap_or("dataset description: not reported"),
            self.sex_provenance.as_deref().unwrap_or("not reported"),
        )
    }
}

/// Fit diagnostics: in-sample RMSE (`sqrt(SSR / n)`), coefficient of
/// determination, and classical per-coefficient standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub rmse_kg: f64,
    pub r_squared: f64,
    pub standard_errors: Vec<(Covariate, f64)>,
    pub n: usize,
}

/// A fitted equation spec together with its diagnostics. The spec carries
/// population metadata auto-filled from the dataset, observed covariate
/// ranges as its validity ranges, and the in-sample RMSE as its reported
/// error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedEquation {
    pub spec: EquationSpec,
    pub diagnostics: FitDiagnostics,
}

/// Design-matrix value of one covariate for one dataset row.
fn design_value(covariate: Covariate, row: &DatasetRow, row_number: usize) -> Result<f64> {
    match covariate {
        Covariate::Intercept => Ok(1.0),
        Covariate::H2OverR => {
            Ok(row.profile.height_cm * row.profile.height_cm / row.reading.resistance_ohm)
        }
        Covariate::Weight => Ok(row.profile.weight_kg),
        Covariate::Reactance => Ok(row.reading.reactance_ohm),
        Covariate::Age => row.profile.age_years.ok_or_else(|| Error::Row {
            row: row_number,
            message: "age covariate requested but the row has no age".into(),
        }),
        Covariate::SexOffset => match row.profile.gender_entry.sex_code() {
            Some(code) => Ok(code.value()),
            None => Err(Error::Row {
                row: row_number,
                message: "sex_offset covariate requires a binary sex entry (m or f); \
                          refit without the sex term for this dataset"
                    .into(),
            }),
        },
    }
}

fn check_covariates(covariates: &[Covariate]) -> Result<()> {
    if covariates.is_empty() {
        return Err(Error::Input("covariate list is empty".into()));
    }
    let mut seen = Vec::new();
    for c in covariates {
        if seen.contains(c) {
            return Err(Error::Input(format!("covariate `{c}` listed twice")));
        }
        seen.push(*c);
    }
    if !covariates.contains(&Covariate::Intercept) {
        return Err(Error::Input(
            "covariates must include the intercept; every supported equation has one".into(),
        ));
    }
    Ok(())
}

fn design_matrix(
    dataset: &FitDataset,
    covariates: &[Covariate],
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = dataset.rows.len();
    let p = covariates.len();
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for (i, row) in dataset.rows.iter().enumerate() {
        for (j, &covariate) in covariates.iter().enumerate() {
            x[(i, j)] = design_value(covariate, row, i + 1)?;
        }
        y[i] = row.ref_ffm_kg;
    }
    Ok((x, y))
}

/// Householder-QR least squares. Errors name the covariates whose columns
/// make the design matrix rank deficient.
fn solve_ols(x: &DMatrix<f64>, y: &DVector<f64>, covariates: &[Covariate]) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::Input(format!(
            "{n} rows cannot determine {p} coefficients"
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
    let tol = f64::EPSILON * (n.max(p) as f64) * max_diag.max(f64::MIN_POSITIVE);
    let collinear: Vec<String> = (0..p)
        .filter(|&i| r[(i, i)].abs() <= tol)
        .map(|i| covariates[i].to_string())
        .collect();
    if !collinear.is_empty() {
        return Err(Error::Singular(collinear));
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular(covariates.iter().map(|c| c.to_string()).collect()))
}

fn observed_ranges(
    dataset: &FitDataset,
    covariates: &[Covariate],
) -> Result<BTreeMap<Covariate, ValidRange>> {
    let mut ranges = BTreeMap::new();
    for &covariate in covariates {
        if matches!(covariate, Covariate::Intercept | Covariate::SexOffset) {
            continue;
        }
        let mut low = f64::INFINITY;
        let mut high = f64::NEG_INFINITY;
        for (i, row) in dataset.rows.iter().enumerate() {
            let v = design_value(covariate, row, i + 1)?;
            low = low.min(v);
            high = high.max(v);
        }
        ranges.insert(covariate, ValidRange { low, high });
    }
    Ok(ranges)
}

/// Ordinary least squares of reference FFM on the given covariates, which
/// must include the intercept. Requires `n >= covariates + 1` and a
/// full-rank design matrix.
pub fn fit_least_squares(dataset: &FitDataset, covariates: &[Covariate]) -> Result<FittedEquation> {
    let id = if covariates.contains(&Covariate::SexOffset) {
        "fitted_with_sex"
    } else {
        "fitted_sex_free"
    };
    fit_least_squares_with_id(dataset, covariates, id)
}

/// [`fit_least_squares`] with an explicit id for the fitted spec.
pub fn fit_least_squares_with_id(
    dataset: &FitDataset,
    covariates: &[Covariate],
    id: &str,
) -> Result<FittedEquation> {
    check_covariates(covariates)?;
    let n = dataset.rows.len();
    let p = covariates.len();
    if n < p + 1 {
        return Err(Error::Input(format!(
            "need at least {} rows to fit {p} covariates, got {n}",
            p + 1
        )));
    }
    let (x, y) = design_matrix(dataset, covariates)?;
    let beta = solve_ols(&x, &y, covariates)?;

    let residuals = &y - &x * &beta;
    let ssr = residuals.norm_squared();
    let rmse_kg = (ssr / n as f64).sqrt();
    let mean_y = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };

    // Classical standard errors from (XᵀX)⁻¹ = R⁻¹R⁻ᵀ.
    let qr = x.clone().qr();
    let r = qr.r();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Singular(covariates.iter().map(|c| c.to_string()).collect()))?;
    let sigma2 = ssr / (n - p) as f64;
    let standard_errors: Vec<(Covariate, f64)> = covariates
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let row_norm2: f64 = (0..p).map(|k| r_inv[(j, k)] * r_inv[(j, k)]).sum();
            (c, (sigma2 * row_norm2).sqrt())
        })
        .collect();

    let spec = EquationSpec {
        id: id.to_string(),
        terms: covariates
            .iter()
            .enumerate()
            .map(|(j, &c)| Term {
                covariate: c,
                coefficient: beta[j],
            })
            .collect(),
        sex_scheme: if covariates.contains(&Covariate::SexOffset) {
            SexScheme::Offset
        } else {
            SexScheme::None
        },
        population: Some(dataset.population_note()),
        gold_standard: None,
        units: Some("height cm; weight kg; resistance ohm; reactance ohm".to_string()),
        valid_ranges: observed_ranges(dataset, covariates)?,
        reported_error: Some(ReportedError {
            metric: "RMSE_kg (in-sample)".to_string(),
            value: rmse_kg,
        }),
    };
    spec.validate()?;
    Ok(FittedEquation {
        spec,
        diagnostics: FitDiagnostics {
            rmse_kg,
            r_squared,
            standard_errors,
            n,
        },
    })
}

/// The sex-free refit: the built-in equation form re-fitted without the sex
/// term. The resulting spec has no sex scheme and serves every user
/// identically.
pub fn refit_without_sex(dataset: &FitDataset) -> Result<FittedEquation> {
    fit_least_squares(dataset, &SEX_FREE_COVARIATES)
}

/// k-fold cross-validation summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub k: usize,
    /// Mean of the per-fold RMSE values.
    pub cv_rmse_kg: f64,
    /// RMSE of each held-out fold, indexed by fold number.
    pub fold_rmse_kg: Vec<f64>,
}

/// k-fold cross-validation with deterministic round-robin fold assignment
/// (row `i` belongs to fold `i mod k`), so results are reproducible without
/// extra random state. Each fold is held out once.
pub fn cross_validate(
    dataset: &FitDataset,
    covariates: &[Covariate],
    k_folds: usize,
) -> Result<CvReport> {
    check_covariates(covariates)?;
    let n = dataset.rows.len();
    if k_folds < 2 {
        return Err(Error::Input(format!(
            "cross-validation needs at least 2 folds, got {k_folds}"
        )));
    }
    if n < k_folds {
        return Err(Error::Input(format!(
            "cannot split {n} rows into {k_folds} folds"
        )));
    }
    let (x, y) = design_matrix(dataset, covariates)?;
    let p = covariates.len();
    let mut fold_rmse_kg = Vec::with_capacity(k_folds);
    for fold in 0..k_folds {
        let test_idx: Vec<usize> = (0..n).filter(|i| i % k_folds == fold).collect();
        let train_idx: Vec<usize> = (0..n).filter(|i| i % k_folds != fold).collect();
        let x_train = DMatrix::from_fn(train_idx.len(), p, |i, j| x[(train_idx[i], j)]);
        let y_train = DVector::from_fn(train_idx.len(), |i, _| y[train_idx[i]]);
        let beta = solve_ols(&x_train, &y_train, covariates)?;
        let sq_err: f64 = test_idx
            .iter()
            .map(|&i| {
                let pred: f64 = (0..p).map(|j| x[(i, j)] * beta[j]).sum();
                (pred - y[i]) * (pred - y[i])
            })
            .sum();
        fold_rmse_kg.push((sq_err / test_idx.len() as f64).sqrt());
    }
    let cv_rmse_kg = fold_rmse_kg.iter().sum::<f64>() / k_folds as f64;
    Ok(CvReport {
        k: k_folds,
        cv_rmse_kg,
        fold_rmse_kg,
    })
}
