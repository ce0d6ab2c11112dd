//! Transparent bioelectrical-impedance body composition.
//!
//! Consumer BIA devices wrap a two-compartment model and a population
//! regression in a black box, and most of them require a binary sex input
//! whose effect on the output is invisible. This crate is the opposite: the
//! conduction model, the regression equations, their coefficients,
//! populations and validity ranges are all inspectable data; sex/gender
//! coding is an explicit policy rather than a hidden 0/1; and the fitting,
//! sensitivity and validation tooling needed to interrogate an equation
//! (or re-fit it without a sex term) ships in the box.
//!
//! Module map:
//!
//! - [`model`] - cylinder conduction model and the FFM/FM/BF% identities
//! - [`registry`] - equation specs, the spec-file format, transparency reports
//! - [`estimator`] - evaluation under explicit sex/gender coding policies
//! - [`sensitivity`] - coding swings, analytic gradients, error propagation
//! - [`refit`] - least-squares (re)fitting, synthetic cohorts, CSV ingestion,
//!   cross-validation
//! - [`validation`] - MAPE/bias/limits-of-agreement, threshold verdicts,
//!   subgroup disaggregation
//! - [`history`] - append-only measurement store and trend reports
//!
//! Everything outside [`history`] is pure and freely shareable across
//! threads.
//!
//! ```
//! use openbia_core::*;
//!
//! let registry = builtin_registry();
//! let spec = registry.get(BUILTIN_EQUATION_ID)?;
//! let profile = SubjectProfile::new(
//!     170.0, 70.0, None, false, GenderEntry::NonbinaryOrUnspecified, None,
//! )?;
//! let reading = ImpedanceReading::new(500.0, 50.0, None)?;
//!
//! // A nonbinary entry under `AsEntered` yields the interval spanned by
//! // both binary codings, not a forced choice.
//! let estimate =
//!     estimate_composition(&registry, spec, &profile, &reading, &CodingPolicy::AsEntered)?;
//! match &estimate.value {
//!     EstimateValue::Interval { low, high, .. } => {
//!         assert!(high.ffm_kg - low.ffm_kg > 4.0);
//!     }
//!     _ => unreachable!(),
//! }
//! # Ok::<(), Error>(())
//! ```

pub mod error;
pub mod estimator;
pub mod history;
pub mod model;
pub mod refit;
pub mod registry;
pub mod sensitivity;
pub mod validation;

pub use error::{Error, Result};
pub use estimator::{
    check_applicability, estimate_composition, evaluate_ffm, recommend_coding, CodingPolicy,
    CodingRecommendation, CompositionEstimate, EstimateValue, GenderEntry, HormoneStatus,
    ImpedanceReading, ResolvedCoding, SexCode, SubjectProfile, TRANSPARENCY_DISCLAIMER,
};
pub use history::{HistoryStore, MeasurementRecord, TrendDelta, TrendReport, HOME_ENV_VAR};
pub use model::{
    body_composition, cylinder_resistance, ffm_from_tbw, tbw_from_impedance, CompositionBreakdown,
    CylinderParams, HydrationConstant, PlausibilityFlag,
};
pub use refit::{
    cross_validate, fit_least_squares, fit_least_squares_with_id, ingest_dataset,
    ingest_dataset_path, refit_without_sex, synthesize_cohort, CohortConfig, CvReport, DatasetRow,
    FitDataset, FitDiagnostics, FittedEquation, FULL_COVARIATES, SEX_FREE_COVARIATES,
};
pub use registry::{
    builtin_registry, describe_transparency, parse_spec, serialize_spec, Covariate, EquationSpec,
    Registry, ReportedError, SexScheme, Term, TransparencyReport, ValidRange, BUILTIN_EQUATION_ID,
};
pub use sensitivity::{
    coding_swing, gradient, propagate, FfmInterval, GradientVector, PerturbationDeltas, SwingReport,
};
pub use validation::{
    agreement_metrics, agreement_metrics_with_threshold, classify_against_threshold,
    subgroup_disaggregate, subgroup_disaggregate_with_threshold, AgreementMetrics, RowFailure,
    RowResidual, ThresholdVerdict, ValidationReport, DEFAULT_MAPE_THRESHOLD_PERCENT,
    UNLABELED_GROUP,
};
