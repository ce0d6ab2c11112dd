//! Regression equation specifications and their disclosure metadata.
//!
//! An [`EquationSpec`] is a published fat-free-mass regression: its
//! coefficients, how it encodes sex (a 0/1 offset term, a pair of stratified
//! per-sex equations, or no sex term at all), the population it was fitted
//! on, the gold standard it was fitted against, and the covariate ranges it
//! was validated for. The [`Registry`] holds specs by id and ships one
//! built-in equation; further specs load from TOML documents whose schema is
//! given in [`parse_spec`].
//!
//! A [`TransparencyReport`] renders everything a spec discloses and makes
//! every absence explicit as `not reported`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{HydrationConstant, BONE_FRACTION_NOTE};

/// Id of the built-in single-equation spec with a 0/1 sex offset.
pub const BUILTIN_EQUATION_ID: &str = "kyle2001";

/// The closed covariate vocabulary.
///
/// Every term of every supported equation is one of these. Extending the set
/// is a schema version bump, which keeps estimator evaluation total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    /// Constant term; its covariate value is always 1.
    Intercept,
    /// Height squared over resistance, cm²/Ω.
    H2OverR,
    /// Body weight, kg.
    Weight,
    /// Reactance, Ω.
    Reactance,
    /// Age, years.
    Age,
    /// Binary sex code: men = 1, women = 0.
    SexOffset,
}

impl Covariate {
    pub const ALL: [Covariate; 6] = [
        Covariate::Intercept,
        Covariate::H2OverR,
        Covariate::Weight,
        Covariate::Reactance,
        Covariate::Age,
        Covariate::SexOffset,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Covariate::Intercept => "intercept",
            Covariate::H2OverR => "h2_over_r",
            Covariate::Weight => "weight",
            Covariate::Reactance => "reactance",
            Covariate::Age => "age",
            Covariate::SexOffset => "sex_offset",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Covariate::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == name)
            .ok_or_else(|| Error::UnknownCovariate(name.to_string()))
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an equation represents sex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SexScheme {
    /// Single equation; sex enters as a 0/1 offset term.
    Offset,
    /// Separate equations per binary sex, referenced by registry id.
    /// The carrying spec is a dispatcher and holds no terms of its own.
    Stratified {
        male_spec_id: String,
        female_spec_id: String,
    },
    /// No sex term; the equation is identical for all users.
    None,
}

/// One regression term: a covariate and its fitted coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub covariate: Covariate,
    pub coefficient: f64,
}

/// Closed interval of validated covariate values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidRange {
    pub low: f64,
    pub high: f64,
}

impl ValidRange {
    pub fn contains(&self, value: f64) -> bool {
        value >= self.low && value <= self.high
    }
}

/// An error figure the source publication reported for the equation.
/// Disclosure only; never used in computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedError {
    pub metric: String,
    pub value: f64,
}

/// A fat-free-mass regression equation and its disclosure metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSpec {
    pub id: String,
    /// At most one term per covariate. Evaluation is
    /// `Σ coefficient · covariate value` with the intercept's value fixed at 1.
    pub terms: Vec<Term>,
    pub sex_scheme: SexScheme,
    /// Free-text population description (sample size, ethnicity composition,
    /// athlete status, age range). `None` renders as "not reported".
    pub population: Option<String>,
    /// Reference method the regression was fitted against (e.g. DXA).
    pub gold_standard: Option<String>,
    /// Unit convention of the covariates.
    pub units: Option<String>,
    /// Covariate ranges the equation was validated for.
    pub valid_ranges: BTreeMap<Covariate, ValidRange>,
    pub reported_error: Option<ReportedError>,
}

impl EquationSpec {
    /// Coefficient for a covariate, if the spec has that term.
    pub fn coefficient(&self, covariate: Covariate) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| t.covariate == covariate)
            .map(|t| t.coefficient)
    }

    pub fn has_term(&self, covariate: Covariate) -> bool {
        self.coefficient(covariate).is_some()
    }

    /// Checks every structural invariant:
    /// at most one term per covariate, an intercept present on any spec that
    /// carries terms, finite coefficients, sex scheme consistent with the
    /// terms, nonempty validity intervals.
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::Schema("equation id must be nonempty".into()));
        }
        let mut seen = Vec::new();
        for term in &self.terms {
            if seen.contains(&term.covariate) {
                return Err(Error::Consistency(format!(
                    "duplicate term for covariate `{}`",
                    term.covariate
                )));
            }
            if !term.coefficient.is_finite() {
                return Err(Error::Parse(format!(
                    "coefficient for `{}` is not a finite number",
                    term.covariate
                )));
            }
            seen.push(term.covariate);
        }
        match &self.sex_scheme {
            SexScheme::Offset => {
                if !self.has_term(Covariate::SexOffset) {
                    return Err(Error::Consistency(
                        "sex_scheme is `offset` but no sex_offset term exists".into(),
                    ));
                }
            }
            SexScheme::None => {
                if self.has_term(Covariate::SexOffset) {
                    return Err(Error::Consistency(
                        "sex_scheme is `none` but a sex_offset term exists".into(),
                    ));
                }
            }
            SexScheme::Stratified {
                male_spec_id,
                female_spec_id,
            } => {
                if !self.terms.is_empty() {
                    return Err(Error::Consistency(
                        "a stratified spec is a dispatcher and must carry no terms of its own"
                            .into(),
                    ));
                }
                if male_spec_id.trim().is_empty() || female_spec_id.trim().is_empty() {
                    return Err(Error::Consistency(
                        "stratified spec ids must be nonempty".into(),
                    ));
                }
            }
        }
        if !matches!(self.sex_scheme, SexScheme::Stratified { .. })
            && !self.has_term(Covariate::Intercept)
        {
            return Err(Error::Schema(format!(
                "equation `{}` has no intercept term",
                self.id
            )));
        }
        for (covariate, range) in &self.valid_ranges {
            if !(range.low.is_finite() && range.high.is_finite() && range.low <= range.high) {
                return Err(Error::Schema(format!(
                    "valid range for `{covariate}` is empty or not finite: [{}, {}]",
                    range.low, range.high
                )));
            }
        }
        Ok(())
    }
}

/// Immutable map from equation id to spec. Always contains the built-in
/// equation; safe to share across threads once constructed.
#[derive(Debug, Clone)]
pub struct Registry {
    specs: BTreeMap<String, EquationSpec>,
}

/// Builds the registry of built-in equations.
///
/// The single built-in is a whole-body single-frequency equation fitted
/// against DXA, with sex as a 0/1 offset:
/// `FFM = -4.104 + 0.518·H²/R + 0.231·weight + 0.130·X + 4.229·sex`.
/// Stratified or adiposity-specific published equations are representable
/// via spec files but not built in, because their coefficients are not
/// carried here.
pub fn builtin_registry() -> Registry {
    let kyle = EquationSpec {
        id: BUILTIN_EQUATION_ID.to_string(),
        terms: vec![
            Term {
                covariate: Covariate::Intercept,
                coefficient: -4.104,
            },
            Term {
                covariate: Covariate::H2OverR,
                coefficient: 0.518,
            },
            Term {
                covariate: Covariate::Weight,
                coefficient: 0.231,
            },
            Term {
                covariate: Covariate::Reactance,
                coefficient: 0.130,
            },
            Term {
                covariate: Covariate::SexOffset,
                coefficient: 4.229,
            },
        ],
        sex_scheme: SexScheme::Offset,
        population: None,
        gold_standard: Some("DXA".to_string()),
        units: Some("height cm; weight kg; resistance ohm; reactance ohm".to_string()),
        valid_ranges: BTreeMap::from([(
            Covariate::Weight,
            ValidRange {
                low: 35.0,
                high: 120.0,
            },
        )]),
        reported_error: None,
    };
    debug_assert!(kyle.validate().is_ok());
    let mut specs = BTreeMap::new();
    specs.insert(kyle.id.clone(), kyle);
    Registry { specs }
}

impl Registry {
    pub fn get(&self, id: &str) -> Result<&EquationSpec> {
        self.specs
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("no equation with id `{id}` in the registry")))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.specs.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.specs.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &EquationSpec> {
        self.specs.values()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// Adds a validated spec. Ids must be unique.
    pub fn add(&mut self, spec: EquationSpec) -> Result<()> {
        spec.validate()?;
        if self.specs.contains_key(&spec.id) {
            return Err(Error::Input(format!(
                "equation id `{}` already present in the registry",
                spec.id
            )));
        }
        self.specs.insert(spec.id.clone(), spec);
        Ok(())
    }

    /// Parses one spec file and adds it.
    pub fn load_file(&mut self, path: &Path) -> Result<&EquationSpec> {
        let text = std::fs::read_to_string(path)?;
        let spec = parse_spec(&text)?;
        let id = spec.id.clone();
        self.add(spec)?;
        Ok(self.specs.get(&id).expect("just inserted"))
    }
}

// ---------------------------------------------------------------------------
// Spec file format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDocument {
    id: String,
    terms: Vec<TermDocument>,
    sex_scheme: SexSchemeDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    population: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_standard: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    valid_ranges: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reported_error: Option<ReportedError>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDocument {
    covariate: String,
    coefficient: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SexSchemeDocument {
    Offset,
    None,
    Stratified {
        male_spec_id: String,
        female_spec_id: String,
    },
}

/// Parses a TOML equation-spec document.
///
/// Schema (one spec per file):
///
/// ```toml
/// id = "kyle2001"
/// sex_scheme = "offset"      # "offset" | "none" | stratified table, see below
/// population = "..."         # optional free text
/// gold_standard = "DXA"      # optional
/// units = "height cm; ..."   # optional
///
/// [[terms]]
/// covariate = "intercept"    # intercept | h2_over_r | weight | reactance | age | sex_offset
/// coefficient = -4.104
///
/// [valid_ranges]             # optional; closed intervals per covariate
/// weight = [35.0, 120.0]
///
/// [reported_error]           # optional
/// metric = "MAPE"
/// value = 25.0
/// ```
///
/// A stratified dispatcher uses
/// `[sex_scheme.stratified]` with `male_spec_id` / `female_spec_id` keys and
/// an empty `terms` array. Unknown keys and unknown covariate names are
/// rejected, and every structural invariant of [`EquationSpec`] is enforced;
/// no invariant-violating spec ever parses successfully.
pub fn parse_spec(document: &str) -> Result<EquationSpec> {
    let doc: SpecDocument = toml::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    let mut terms = Vec::with_capacity(doc.terms.len());
    for t in &doc.terms {
        terms.push(Term {
            covariate: Covariate::parse(&t.covariate)?,
            coefficient: t.coefficient,
        });
    }
    let mut valid_ranges = BTreeMap::new();
    for (name, [low, high]) in &doc.valid_ranges {
        valid_ranges.insert(
            Covariate::parse(name)?,
            ValidRange {
                low: *low,
                high: *high,
            },
        );
    }
    let spec = EquationSpec {
        id: doc.id,
        terms,
        sex_scheme: match doc.sex_scheme {
            SexSchemeDocument::Offset => SexScheme::Offset,
            SexSchemeDocument::None => SexScheme::None,
            SexSchemeDocument::Stratified {
                male_spec_id,
                female_spec_id,
            } => SexScheme::Stratified {
                male_spec_id,
                female_spec_id,
            },
        },
        population: doc.population,
        gold_standard: doc.gold_standard,
        units: doc.units,
        valid_ranges,
        reported_error: doc.reported_error,
    };
    spec.validate()?;
    Ok(spec)
}

fn to_document(spec: &EquationSpec) -> SpecDocument {
    SpecDocument {
        id: spec.id.clone(),
        terms: spec
            .terms
            .iter()
            .map(|t| TermDocument {
                covariate: t.covariate.as_str().to_string(),
                coefficient: t.coefficient,
            })
            .collect(),
        sex_scheme: match &spec.sex_scheme {
            SexScheme::Offset => SexSchemeDocument::Offset,
            SexScheme::None => SexSchemeDocument::None,
            SexScheme::Stratified {
                male_spec_id,
                female_spec_id,
            } => SexSchemeDocument::Stratified {
                male_spec_id: male_spec_id.clone(),
                female_spec_id: female_spec_id.clone(),
            },
        },
        population: spec.population.clone(),
        gold_standard: spec.gold_standard.clone(),
        units: spec.units.clone(),
        valid_ranges: spec
            .valid_ranges
            .iter()
            .map(|(c, r)| (c.as_str().to_string(), [r.low, r.high]))
            .collect(),
        reported_error: spec.reported_error.clone(),
    }
}

/// Renders a spec as a TOML document that [`parse_spec`] accepts.
/// `parse_spec(serialize_spec(spec))` is the identity on valid specs.
pub fn serialize_spec(spec: &EquationSpec) -> String {
    toml::to_string_pretty(&to_document(spec)).expect("spec document serializes")
}

impl Serialize for EquationSpec {
    /// Serializes in the spec-file document form, so JSON and TOML output
    /// share one schema.
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        to_document(self).serialize(serializer)
    }
}

// ---------------------------------------------------------------------------
// Transparency report
// ---------------------------------------------------------------------------

const NOT_REPORTED: &str = "not reported";

/// Full disclosure of one equation spec: its formula, provenance, validity
/// ranges, sex-scheme explanation and model assumptions, with every absent
/// field rendered explicitly as "not reported".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransparencyReport {
    pub equation_id: String,
    pub formula: String,
    pub sex_scheme: String,
    pub population: String,
    pub gold_standard: String,
    pub units: String,
    pub valid_ranges: Vec<String>,
    pub reported_error: String,
    pub assumptions: Vec<String>,
}

/// Builds the [`TransparencyReport`] for a spec. Deterministic: the same
/// spec always renders to the same report.
pub fn describe_transparency(spec: &EquationSpec) -> TransparencyReport {
    let formula = if spec.terms.is_empty() {
        "dispatcher; see the referenced per-sex equations".to_string()
    } else {
        let mut parts = Vec::new();
        for term in &spec.terms {
            match term.covariate {
                Covariate::Intercept => parts.push(format!("{}", term.coefficient)),
                c => parts.push(format!("{} * {}", term.coefficient, c)),
            }
        }
        format!("FFM [kg] = {}", parts.join(" + "))
    };
    let sex_scheme = match &spec.sex_scheme {
        SexScheme::Offset => {
            let coeff = spec
                .coefficient(Covariate::SexOffset)
                .expect("offset scheme carries a sex_offset term");
            format!(
                "single equation; binary sex enters as a 0/1 offset (men = 1, women = 0) worth {coeff} kg of FFM"
            )
        }
        SexScheme::Stratified { male_spec_id, female_spec_id } => format!(
            "stratified: separate equations per binary sex (male -> `{male_spec_id}`, female -> `{female_spec_id}`)"
        ),
        SexScheme::None => {
            "no sex term; the equation produces identical estimates for all users".to_string()
        }
    };
    let valid_ranges = if spec.valid_ranges.is_empty() {
        vec![format!("validated covariate ranges: {NOT_REPORTED}")]
    } else {
        spec.valid_ranges
            .iter()
            .map(|(c, r)| format!("{c}: [{}, {}]", r.low, r.high))
            .collect()
    };
    let reported_error = match &spec.reported_error {
        Some(e) => format!("{} = {}", e.metric, e.value),
        None => NOT_REPORTED.to_string(),
    };
    let non_blank = |field: &Option<String>| match field {
        Some(s) if !s.trim().is_empty() => s.clone(),
        _ => NOT_REPORTED.to_string(),
    };
    TransparencyReport {
        equation_id: spec.id.clone(),
        formula,
        sex_scheme,
        population: non_blank(&spec.population),
        gold_standard: non_blank(&spec.gold_standard),
        units: non_blank(&spec.units),
        valid_ranges,
        reported_error,
        assumptions: vec![
            "the body is modeled as a single homogeneous conductor".to_string(),
            format!(
                "fat-free mass is assumed {}% water (configurable hydration fraction)",
                HydrationConstant::DEFAULT_FRACTION * 100.0
            ),
            format!(
                "about {}% of fat-free mass is bone; recorded for disclosure, never used in computation",
                BONE_FRACTION_NOTE * 100.0
            ),
            "coefficients are population-level regression fits against the stated gold standard; individual-level accuracy is unknown".to_string(),
            "the gold standard itself embeds assumptions (e.g. fat-free-mass density) that are only valid in its own study population".to_string(),
        ],
    }
}

impl fmt::Display for TransparencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "equation: {}", self.equation_id)?;
        writeln!(f, "formula: {}", self.formula)?;
        writeln!(f, "sex scheme: {}", self.sex_scheme)?;
        writeln!(f, "population: {}", self.population)?;
        writeln!(f, "gold standard: {}", self.gold_standard)?;
        writeln!(f, "units: {}", self.units)?;
        writeln!(f, "reported error: {}", self.reported_error)?;
        writeln!(f, "valid ranges:")?;
        for r in &self.valid_ranges {
            writeln!(f, "  {r}")?;
        }
        writeln!(f, "assumptions:")?;
        for a in &self.assumptions {
            writeln!(f, "  - {a}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_contains_kyle_with_sex_offset() {
        let reg = builtin_registry();
        let spec = reg.get(BUILTIN_EQUATION_ID).unwrap();
        assert_eq!(spec.coefficient(Covariate::SexOffset), Some(4.229));
        assert_eq!(spec.coefficient(Covariate::Intercept), Some(-4.104));
        assert_eq!(spec.coefficient(Covariate::H2OverR), Some(0.518));
        assert_eq!(spec.coefficient(Covariate::Weight), Some(0.231));
        assert_eq!(spec.coefficient(Covariate::Reactance), Some(0.130));
        assert_eq!(spec.sex_scheme, SexScheme::Offset);
        assert_eq!(spec.gold_standard.as_deref(), Some("DXA"));
    }

    #[test]
    fn builtin_lookup_of_absent_id_fails() {
        let reg = builtin_registry();
        assert!(matches!(reg.get("segal1988"), Err(Error::NotFound(_))));
    }

    #[test]
    fn builtin_is_deterministic() {
        let a = builtin_registry();
        let b = builtin_registry();
        assert_eq!(
            a.get(BUILTIN_EQUATION_ID).unwrap(),
            b.get(BUILTIN_EQUATION_ID).unwrap()
        );
    }

    #[test]
    fn parse_document_mirroring_builtin() {
        let text = r#"
id = "kyle2001"
sex_scheme = "offset"
gold_standard = "DXA"
units = "height cm; weight kg; resistance ohm; reactance ohm"

[[terms]]
covariate = "intercept"
coefficient = -4.104

[[terms]]
covariate = "h2_over_r"
coefficient = 0.518

[[terms]]
covariate = "weight"
coefficient = 0.231

[[terms]]
covariate = "reactance"
coefficient = 0.130

[[terms]]
covariate = "sex_offset"
coefficient = 4.229

[valid_ranges]
weight = [35.0, 120.0]
"#;
        let parsed = parse_spec(text).unwrap();
        let builtin = builtin_registry();
        assert_eq!(&parsed, builtin.get(BUILTIN_EQUATION_ID).unwrap());
    }

    #[test]
    fn parse_rejects_scheme_term_mismatch() {
        let text = r#"
id = "bad"
sex_scheme = "offset"

[[terms]]
covariate = "intercept"
coefficient = 1.0
"#;
        assert!(matches!(parse_spec(text), Err(Error::Consistency(_))));
    }

    #[test]
    fn parse_rejects_unknown_covariate() {
        let text = r#"
id = "bad"
sex_scheme = "none"

[[terms]]
covariate = "intercept"
coefficient = 1.0

[[terms]]
covariate = "shoe_size"
coefficient = 2.0
"#;
        match parse_spec(text) {
            Err(Error::UnknownCovariate(name)) => assert_eq!(name, "shoe_size"),
            other => panic!("expected unknown-covariate error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_missing_intercept() {
        let text = r#"
id = "bad"
sex_scheme = "none"

[[terms]]
covariate = "weight"
coefficient = 1.0
"#;
        assert!(matches!(parse_spec(text), Err(Error::Schema(_))));
    }

    #[test]
    fn parse_rejects_malformed_number() {
        let text = r#"
id = "bad"
sex_scheme = "none"

[[terms]]
covariate = "intercept"
coefficient = "abc"
"#;
        assert!(matches!(parse_spec(text), Err(Error::Parse(_))));
    }

    #[test]
    fn parse_rejects_unknown_keys() {
        let text = r#"
id = "bad"
sex_scheme = "none"
firmware_blob = "0xdeadbeef"

[[terms]]
covariate = "intercept"
coefficient = 1.0
"#;
        assert!(matches!(parse_spec(text), Err(Error::Parse(_))));
    }

    #[test]
    fn parse_rejects_duplicate_covariate() {
        let text = r#"
id = "bad"
sex_scheme = "none"

[[terms]]
covariate = "intercept"
coefficient = 1.0

[[terms]]
covariate = "intercept"
coefficient = 2.0
"#;
        assert!(matches!(parse_spec(text), Err(Error::Consistency(_))));
    }

    #[test]
    fn parse_rejects_empty_range() {
        let text = r#"
id = "bad"
sex_scheme = "none"

[[terms]]
covariate = "intercept"
coefficient = 1.0

[valid_ranges]
weight = [120.0, 35.0]
"#;
        assert!(matches!(parse_spec(text), Err(Error::Schema(_))));
    }

    #[test]
    fn stratified_round_trip() {
        let spec = EquationSpec {
            id: "pair".into(),
            terms: vec![],
            sex_scheme: SexScheme::Stratified {
                male_spec_id: "pair_m".into(),
                female_spec_id: "pair_f".into(),
            },
            population: Some("two stratified cohorts".into()),
            gold_standard: None,
            units: None,
            valid_ranges: BTreeMap::new(),
            reported_error: None,
        };
        spec.validate().unwrap();
        let parsed = parse_spec(&serialize_spec(&spec)).unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn registry_rejects_duplicate_ids() {
        let mut reg = builtin_registry();
        let dup = reg.get(BUILTIN_EQUATION_ID).unwrap().clone();
        assert!(matches!(reg.add(dup), Err(Error::Input(_))));
    }

    #[test]
    fn transparency_lists_gold_standard() {
        let reg = builtin_registry();
        let report = describe_transparency(reg.get(BUILTIN_EQUATION_ID).unwrap());
        assert_eq!(report.gold_standard, "DXA");
        assert!(report.formula.contains("4.229"));
    }

    #[test]
    fn transparency_renders_absence() {
        let reg = builtin_registry();
        let mut spec = reg.get(BUILTIN_EQUATION_ID).unwrap().clone();
        spec.population = Some("   ".into());
        let report = describe_transparency(&spec);
        assert_eq!(report.population, "not reported");
        assert_eq!(report.reported_error, "not reported");
    }

    #[test]
    fn transparency_carries_reported_error_verbatim() {
        let reg = builtin_registry();
        let mut spec = reg.get(BUILTIN_EQUATION_ID).unwrap().clone();
        spec.reported_error = Some(ReportedError {
            metric: "MAPE".into(),
            value: 25.0,
        });
        let report = describe_transparency(&spec);
        assert_eq!(report.reported_error, "MAPE = 25");
        assert!(report.to_string().contains("MAPE = 25"));
    }
}
