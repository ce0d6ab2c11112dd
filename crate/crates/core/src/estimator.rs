//! Equation evaluation under explicit sex/gender coding policies.
//!
//! Every estimate is produced under a [`CodingPolicy`] that says how the
//! subject's gender entry maps onto the equation's sex term: take it as
//! entered, force one binary coding, evaluate both codings and report the
//! interval, or switch to a sex-free refit equation. Nonbinary or
//! unspecified entries never force a binary choice; under `AsEntered` they
//! resolve to the interval automatically.
//!
//! All output is text; no pictograms anywhere.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{body_composition, CompositionBreakdown};
use crate::registry::{Covariate, EquationSpec, Registry, SexScheme};

/// Disclaimer attached to every estimate the CLI prints.
pub const TRANSPARENCY_DISCLAIMER: &str = "Body-composition estimates come from population-level \
regression equations, not from a direct measurement of this body. Any single reading should be \
interpreted with extreme caution; use estimates to track change over time rather than as \
absolute values.";

/// Gender entry as the user supplied it. Text labels only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenderEntry {
    Male,
    Female,
    NonbinaryOrUnspecified,
}

impl GenderEntry {
    /// Accepts the dataset/CLI shorthand `m` / `f` / `x` (or empty for
    /// unspecified) as well as the full labels.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Ok(GenderEntry::Male),
            "f" | "female" => Ok(GenderEntry::Female),
            "x" | "" | "nonbinary_or_unspecified" => Ok(GenderEntry::NonbinaryOrUnspecified),
            other => Err(Error::Input(format!(
                "unrecognized gender entry `{other}` (expected m, f or x)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            GenderEntry::Male => "male",
            GenderEntry::Female => "female",
            GenderEntry::NonbinaryOrUnspecified => "nonbinary_or_unspecified",
        }
    }

    /// The binary code this entry maps to under `AsEntered`, if any.
    pub fn sex_code(&self) -> Option<SexCode> {
        match self {
            GenderEntry::Male => Some(SexCode::Male),
            GenderEntry::Female => Some(SexCode::Female),
            GenderEntry::NonbinaryOrUnspecified => None,
        }
    }
}

/// Hormone status, the strongest known predictor among the factors the sex
/// term stands in for. Optional input, used only by [`recommend_coding`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HormoneStatus {
    TestosteroneDominant,
    EstrogenDominant,
    MixedOrUnknown,
}

/// Anthropometrics and identity-relevant inputs for one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub height_cm: f64,
    pub weight_kg: f64,
    pub age_years: Option<f64>,
    pub athlete: bool,
    pub gender_entry: GenderEntry,
    pub hormone_status: Option<HormoneStatus>,
}

impl SubjectProfile {
    pub fn new(
        height_cm: f64,
        weight_kg: f64,
        age_years: Option<f64>,
        athlete: bool,
        gender_entry: GenderEntry,
        hormone_status: Option<HormoneStatus>,
    ) -> Result<Self> {
        if !(50.0..=250.0).contains(&height_cm) {
            return Err(Error::Input(format!(
                "height must lie in [50, 250] cm, got {height_cm}"
            )));
        }
        if !(10.0..=300.0).contains(&weight_kg) {
            return Err(Error::Input(format!(
                "weight must lie in [10, 300] kg, got {weight_kg}"
            )));
        }
        if let Some(age) = age_years {
            if !(18.0..=120.0).contains(&age) {
                return Err(Error::Input(format!(
                    "age must lie in [18, 120] years, got {age}"
                )));
            }
        }
        Ok(Self {
            height_cm,
            weight_kg,
            age_years,
            athlete,
            gender_entry,
            hormone_status,
        })
    }
}

/// Resistance and reactance at one measurement frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceReading {
    pub resistance_ohm: f64,
    pub reactance_ohm: f64,
    pub frequency_khz: f64,
}

impl ImpedanceReading {
    pub const DEFAULT_FREQUENCY_KHZ: f64 = 50.0;

    pub fn new(
        resistance_ohm: f64,
        reactance_ohm: f64,
        frequency_khz: Option<f64>,
    ) -> Result<Self> {
        if !(resistance_ohm > 0.0 && resistance_ohm <= 2000.0) {
            return Err(Error::Input(format!(
                "resistance must lie in (0, 2000] ohm, got {resistance_ohm}"
            )));
        }
        if !(0.0..=500.0).contains(&reactance_ohm) {
            return Err(Error::Input(format!(
                "reactance must lie in [0, 500] ohm, got {reactance_ohm}"
            )));
        }
        Ok(Self {
            resistance_ohm,
            reactance_ohm,
            frequency_khz: frequency_khz.unwrap_or(Self::DEFAULT_FREQUENCY_KHZ),
        })
    }
}

/// Binary sex code as the regression equations define it: men = 1, women = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SexCode {
    Female,
    Male,
}

impl SexCode {
    pub fn value(&self) -> f64 {
        match self {
            SexCode::Female => 0.0,
            SexCode::Male => 1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SexCode::Female => "female (code 0)",
            SexCode::Male => "male (code 1)",
        }
    }
}

/// How the gender entry is turned into equation input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodingPolicy {
    /// Map male -> 1, female -> 0; nonbinary or unspecified entries resolve
    /// to the interval over both codings.
    AsEntered,
    ForceMale,
    ForceFemale,
    /// Evaluate a sex-free refit equation (by registry id) instead.
    SexFree(String),
    /// Evaluate both binary codings and report the interval plus midpoint.
    Interval,
}

impl fmt::Display for CodingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodingPolicy::AsEntered => write!(f, "as-entered"),
            CodingPolicy::ForceMale => write!(f, "force-male"),
            CodingPolicy::ForceFemale => write!(f, "force-female"),
            CodingPolicy::SexFree(id) => write!(f, "sex-free={id}"),
            CodingPolicy::Interval => write!(f, "interval"),
        }
    }
}

impl CodingPolicy {
    /// Parses the CLI form: `as-entered`, `force-male`, `force-female`,
    /// `interval`, or `sex-free=<id>`.
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "as-entered" => Ok(CodingPolicy::AsEntered),
            "force-male" => Ok(CodingPolicy::ForceMale),
            "force-female" => Ok(CodingPolicy::ForceFemale),
            "interval" => Ok(CodingPolicy::Interval),
            other => match other.strip_prefix("sex-free=") {
                Some(id) if !id.is_empty() => Ok(CodingPolicy::SexFree(id.to_string())),
                _ => Err(Error::Input(format!(
                    "unrecognized policy `{other}` (expected as-entered, force-male, \
                     force-female, interval or sex-free=<id>)"
                ))),
            },
        }
    }
}

/// The coding that was actually applied to produce an estimate.
///
/// Estimates record this rather than echoing the requested policy, so that
/// equations without a sex term produce byte-identical output no matter
/// which policy or gender entry was supplied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolvedCoding {
    Binary(SexCode),
    /// Both binary codings evaluated; estimate is an interval.
    IntervalBoth,
    /// A sex-free refit equation was used.
    SexFreeEquation,
    /// The equation carries no sex term.
    NoSexTerm,
}

impl fmt::Display for ResolvedCoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolvedCoding::Binary(code) => f.write_str(code.label()),
            ResolvedCoding::IntervalBoth => write!(f, "interval over both binary codings"),
            ResolvedCoding::SexFreeEquation => write!(f, "sex-free equation"),
            ResolvedCoding::NoSexTerm => write!(f, "equation has no sex term"),
        }
    }
}

/// A point estimate or an interval over the two binary codings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateValue {
    Point(CompositionBreakdown),
    /// Ordered by fat-free mass: `low.ffm_kg <= mid.ffm_kg <= high.ffm_kg`.
    /// `mid` is the breakdown at the arithmetic midpoint of the two codings'
    /// FFM.
    Interval {
        low: CompositionBreakdown,
        mid: CompositionBreakdown,
        high: CompositionBreakdown,
    },
}

impl EstimateValue {
    /// The representative breakdown: the point itself, or the interval
    /// midpoint.
    pub fn midpoint(&self) -> &CompositionBreakdown {
        match self {
            EstimateValue::Point(b) => b,
            EstimateValue::Interval { mid, .. } => mid,
        }
    }

    /// Width of the body-fat interval in percentage points (0 for a point).
    pub fn bf_width_pp(&self) -> f64 {
        match self {
            EstimateValue::Point(_) => 0.0,
            EstimateValue::Interval { low, high, .. } => (low.bf_percent - high.bf_percent).abs(),
        }
    }
}

/// A composition estimate with full provenance: which equation, which
/// coding actually applied, and every applicability warning raised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionEstimate {
    pub value: EstimateValue,
    pub equation_id: String,
    pub policy_used: ResolvedCoding,
    pub warnings: Vec<String>,
}

/// Evaluates a spec's fat-free mass: `Σ coefficient · covariate`, with
/// `h2_over_r = height² / resistance` and the given binary sex code.
///
/// Stratified dispatcher specs carry no terms and cannot be evaluated
/// directly; resolve them to a per-sex spec first (as
/// [`estimate_composition`] does).
pub fn evaluate_ffm(
    spec: &EquationSpec,
    profile: &SubjectProfile,
    reading: &ImpedanceReading,
    sex_code: SexCode,
) -> Result<f64> {
    if matches!(spec.sex_scheme, SexScheme::Stratified { .. }) {
        return Err(Error::Input(format!(
            "equation `{}` is a stratified dispatcher; evaluate one of its per-sex equations",
            spec.id
        )));
    }
    let mut ffm = 0.0;
    for term in &spec.terms {
        ffm += term.coefficient * covariate_value(term.covariate, profile, reading, sex_code)?;
    }
    Ok(ffm)
}

fn covariate_value(
    covariate: Covariate,
    profile: &SubjectProfile,
    reading: &ImpedanceReading,
    sex_code: SexCode,
) -> Result<f64> {
    match covariate {
        Covariate::Intercept => Ok(1.0),
        Covariate::H2OverR => {
            if reading.resistance_ohm <= 0.0 || reading.resistance_ohm.is_nan() {
                return Err(Error::Domain(format!(
                    "resistance must be strictly positive, got {}",
                    reading.resistance_ohm
                )));
            }
            Ok(profile.height_cm * profile.height_cm / reading.resistance_ohm)
        }
        Covariate::Weight => Ok(profile.weight_kg),
        Covariate::Reactance => Ok(reading.reactance_ohm),
        Covariate::Age => profile.age_years.ok_or_else(|| {
            Error::Input("equation has an age term but the profile has no age".into())
        }),
        Covariate::SexOffset => Ok(sex_code.value()),
    }
}

/// Warnings about applying a spec to a profile: covariate values outside the
/// validated ranges, an athlete flag conflicting with the study population,
/// and an unconditional disclaimer whenever the population is not reported.
///
/// Only profile-level covariates (weight, age) can be range-checked here;
/// reading-dependent covariates are checked during estimation.
pub fn check_applicability(spec: &EquationSpec, profile: &SubjectProfile) -> Vec<String> {
    let mut warnings = Vec::new();
    for (covariate, range) in &spec.valid_ranges {
        let value = match covariate {
            Covariate::Weight => Some(profile.weight_kg),
            Covariate::Age => profile.age_years,
            _ => None,
        };
        if let Some(v) = value {
            if !range.contains(v) {
                warnings.push(range_warning(*covariate, v, range.low, range.high));
            }
        }
    }
    match &spec.population {
        Some(text) if !text.trim().is_empty() => {
            let lower = text.to_ascii_lowercase();
            if lower.contains("non-athlete") && profile.athlete {
                warnings.push(format!(
                    "subject is an athlete but the equation population is described as `{text}`"
                ));
            } else if lower.contains("athlete")
                && !lower.contains("non-athlete")
                && !profile.athlete
            {
                warnings.push(format!(
                    "subject is not an athlete but the equation population is described as `{text}`"
                ));
            }
        }
        _ => {
            warnings.push(
                "equation population is not reported; applicability to this subject cannot be \
                 assessed"
                    .to_string(),
            );
        }
    }
    warnings
}

fn range_warning(covariate: Covariate, value: f64, low: f64, high: f64) -> String {
    format!("covariate `{covariate}` = {value} is outside the validated range [{low}, {high}]")
}

/// Range warnings for the reading-dependent covariates (h2_over_r,
/// reactance), which [`check_applicability`] cannot see.
pub fn check_reading_ranges(
    spec: &EquationSpec,
    profile: &SubjectProfile,
    reading: &ImpedanceReading,
) -> Vec<String> {
    let mut warnings = Vec::new();
    for (covariate, range) in &spec.valid_ranges {
        let value = match covariate {
            Covariate::H2OverR if reading.resistance_ohm > 0.0 => {
                Some(profile.height_cm * profile.height_cm / reading.resistance_ohm)
            }
            Covariate::Reactance => Some(reading.reactance_ohm),
            _ => None,
        };
        if let Some(v) = value {
            if !range.contains(v) {
                warnings.push(range_warning(*covariate, v, range.low, range.high));
            }
        }
    }
    warnings
}

fn push_unique(warnings: &mut Vec<String>, extra: Vec<String>) {
    for w in extra {
        if !warnings.contains(&w) {
            warnings.push(w);
        }
    }
}

fn applicability_for(
    spec: &EquationSpec,
    profile: &SubjectProfile,
    reading: &ImpedanceReading,
) -> Vec<String> {
    let mut warnings = check_applicability(spec, profile);
    push_unique(&mut warnings, check_reading_ranges(spec, profile, reading));
    warnings
}

/// Resolves the spec used for one binary coding: the spec itself for offset
/// and sex-free schemes, the referenced per-sex spec for stratified ones.
fn spec_for_code<'a>(
    registry: &'a Registry,
    spec: &'a EquationSpec,
    code: SexCode,
) -> Result<&'a EquationSpec> {
    match &spec.sex_scheme {
        SexScheme::Stratified {
            male_spec_id,
            female_spec_id,
        } => {
            let id = match code {
                SexCode::Male => male_spec_id,
                SexCode::Female => female_spec_id,
            };
            registry.get(id).map_err(|_| {
                Error::Configuration(format!(
                    "stratified equation `{}` references `{id}`, which is not in the registry",
                    spec.id
                ))
            })
        }
        _ => Ok(spec),
    }
}

/// Produces a composition estimate under an explicit coding policy.
///
/// `AsEntered` maps male to code 1 and female to code 0; nonbinary or
/// unspecified entries resolve to the interval over both codings. The
/// interval midpoint is the arithmetic mean of the two codings' FFM and is
/// labeled an approximation; supply a sex-free refit (the `SexFree` policy)
/// for a principled single estimate. Equations without a sex term produce
/// the same point estimate under every policy except `SexFree`, with a
/// warning that the gender entry is ignored.
pub fn estimate_composition(
    registry: &Registry,
    spec: &EquationSpec,
    profile: &SubjectProfile,
    reading: &ImpedanceReading,
    policy: &CodingPolicy,
) -> Result<CompositionEstimate> {
    if let CodingPolicy::SexFree(refit_id) = policy {
        let refit = registry.get(refit_id).map_err(|_| {
            Error::Configuration(format!(
                "policy sex-free={refit_id}: no such equation in the registry"
            ))
        })?;
        if refit.sex_scheme != SexScheme::None {
            return Err(Error::Configuration(format!(
                "policy sex-free={refit_id}: equation `{refit_id}` still has a sex scheme"
            )));
        }
        let warnings = applicability_for(refit, profile, reading);
        let ffm = evaluate_ffm(refit, profile, reading, SexCode::Female)?;
        return Ok(CompositionEstimate {
            value: EstimateValue::Point(body_composition(profile.weight_kg, ffm)?),
            equation_id: refit.id.clone(),
            policy_used: ResolvedCoding::SexFreeEquation,
            warnings,
        });
    }

    if spec.sex_scheme == SexScheme::None {
        let mut warnings = applicability_for(spec, profile, reading);
        warnings.push("equation has no sex term; gender entry ignored".to_string());
        let ffm = evaluate_ffm(spec, profile, reading, SexCode::Female)?;
        return Ok(CompositionEstimate {
            value: EstimateValue::Point(body_composition(profile.weight_kg, ffm)?),
            equation_id: spec.id.clone(),
            policy_used: ResolvedCoding::NoSexTerm,
            warnings,
        });
    }

    let binary = match policy {
        CodingPolicy::AsEntered => profile.gender_entry.sex_code(),
        CodingPolicy::ForceMale => Some(SexCode::Male),
        CodingPolicy::ForceFemale => Some(SexCode::Female),
        CodingPolicy::Interval => None,
        CodingPolicy::SexFree(_) => unreachable!("handled above"),
    };

    match binary {
        Some(code) => {
            let used = spec_for_code(registry, spec, code)?;
            let mut warnings = applicability_for(used, profile, reading);
            if !std::ptr::eq(used, spec) {
                push_unique(&mut warnings, check_applicability(spec, profile));
            }
            let ffm = evaluate_ffm(used, profile, reading, code)?;
            Ok(CompositionEstimate {
                value: EstimateValue::Point(body_composition(profile.weight_kg, ffm)?),
                equation_id: spec.id.clone(),
                policy_used: ResolvedCoding::Binary(code),
                warnings,
            })
        }
        None => {
            let female_spec = spec_for_code(registry, spec, SexCode::Female)?;
            let male_spec = spec_for_code(registry, spec, SexCode::Male)?;
            let mut warnings = applicability_for(female_spec, profile, reading);
            push_unique(
                &mut warnings,
                applicability_for(male_spec, profile, reading),
            );
            let ffm_female = evaluate_ffm(female_spec, profile, reading, SexCode::Female)?;
            let ffm_male = evaluate_ffm(male_spec, profile, reading, SexCode::Male)?;
            let (ffm_low, ffm_high) = if ffm_female <= ffm_male {
                (ffm_female, ffm_male)
            } else {
                (ffm_male, ffm_female)
            };
            let ffm_mid = 0.5 * (ffm_female + ffm_male);
            warnings.push(
                "interval midpoint is the arithmetic mean of the two binary codings \
                 (approximation); supply a sex-free refit equation for a principled sex-free \
                 estimate"
                    .to_string(),
            );
            Ok(CompositionEstimate {
                value: EstimateValue::Interval {
                    low: body_composition(profile.weight_kg, ffm_low)?,
                    mid: body_composition(profile.weight_kg, ffm_mid)?,
                    high: body_composition(profile.weight_kg, ffm_high)?,
                },
                equation_id: spec.id.clone(),
                policy_used: ResolvedCoding::IntervalBoth,
                warnings,
            })
        }
    }
}

/// A coding policy suggestion plus the reasoning behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingRecommendation {
    pub policy: CodingPolicy,
    pub rationale: String,
}

const TREND_GUIDANCE: &str = "Whatever the coding, the absolute value is a population-level \
regression output; use it to track change over time, not as ground truth.";

/// Recommends a coding policy from hormone status.
///
/// Hormone balance is the strongest known predictor among the factors the
/// binary sex term stands in for, so a subject with a clearly
/// testosterone- or estrogen-dominant balance gets the matching binary
/// coding; anything else gets the interval.
pub fn recommend_coding(profile: &SubjectProfile) -> CodingRecommendation {
    match profile.hormone_status {
        Some(HormoneStatus::TestosteroneDominant) => CodingRecommendation {
            policy: CodingPolicy::ForceMale,
            rationale: format!(
                "Hormone status is testosterone-dominant: of the two binary codings, male (code 1) \
                 aligns most closely with current hormonal balance. {TREND_GUIDANCE}"
            ),
        },
        Some(HormoneStatus::EstrogenDominant) => CodingRecommendation {
            policy: CodingPolicy::ForceFemale,
            rationale: format!(
                "Hormone status is estrogen-dominant: of the two binary codings, female (code 0) \
                 aligns most closely with current hormonal balance. {TREND_GUIDANCE}"
            ),
        },
        Some(HormoneStatus::MixedOrUnknown) | None => CodingRecommendation {
            policy: CodingPolicy::Interval,
            rationale: format!(
                "Hormone status is mixed, unknown or not provided: no binary coding is clearly \
                 better aligned, so report the interval over both codings. {TREND_GUIDANCE}"
            ),
        },
    }
}
