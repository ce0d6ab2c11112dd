//! How estimates move under sex-coding changes and input perturbations.
//!
//! [`coding_swing`] quantifies the jump a user sees when the binary sex
//! input is flipped. [`gradient`] gives exact analytic partials of FFM with
//! respect to the measured inputs, and [`propagate`] turns stated
//! measurement half-widths into an FFM interval by exact re-evaluation at
//! the input extremes. Estimates are nonlinear in resistance, so corners
//! are evaluated directly instead of linearizing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{evaluate_ffm, ImpedanceReading, SexCode, SubjectProfile};
use crate::model::{body_composition, CompositionBreakdown};
use crate::registry::{Covariate, EquationSpec, Registry, SexScheme};

/// The change in estimate when the binary sex input flips from 0 to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwingReport {
    /// FFM(code 1) − FFM(code 0). For offset-scheme equations this is the
    /// sex coefficient itself, exactly, independent of all other inputs.
    pub delta_ffm_kg: f64,
    /// BF%(code 0) − BF%(code 1) in percentage points:
    /// `100 · delta_ffm_kg / weight`.
    pub delta_bf_pp: f64,
    pub female: CompositionBreakdown,
    pub male: CompositionBreakdown,
}

/// Evaluates both binary codings and reports the FFM and BF% deltas.
///
/// Not applicable to equations without a sex term.
pub fn coding_swing(
    registry: &Registry,
    spec: &EquationSpec,
    profile: &SubjectProfile,
    reading: &ImpedanceReading,
) -> Result<SwingReport> {
    let (ffm_female, ffm_male, delta_ffm_kg) = match &spec.sex_scheme {
        SexScheme::None => {
            return Err(Error::NotApplicable(format!(
                "equation `{}` has no sex term; there is no coding swing",
                spec.id
            )));
        }
        SexScheme::Offset => {
            let coefficient = spec
                .coefficient(Covariate::SexOffset)
                .expect("offset scheme carries a sex_offset term");
            let female = evaluate_ffm(spec, profile, reading, SexCode::Female)?;
            let male = evaluate_ffm(spec, profile, reading, SexCode::Male)?;
            // The swing of an offset equation IS the coefficient; reporting
            // it directly keeps the delta exact instead of rounding through
            // the difference of two sums.
            (female, male, coefficient)
        }
        SexScheme::Stratified {
            male_spec_id,
            female_spec_id,
        } => {
            let male_spec = registry.get(male_spec_id)?;
            let female_spec = registry.get(female_spec_id)?;
            let female = evaluate_ffm(female_spec, profile, reading, SexCode::Female)?;
            let male = evaluate_ffm(male_spec, profile, reading, SexCode::Male)?;
            (female, male, male - female)
        }
    };
    Ok(SwingReport {
        delta_ffm_kg,
        delta_bf_pp: 100.0 * delta_ffm_kg / profile.weight_kg,
        female: body_composition(profile.weight_kg, ffm_female)?,
        male: body_composition(profile.weight_kg, ffm_male)?,
    })
}

/// Analytic partial derivatives of FFM with respect to the measured inputs.
///
/// For `FFM = a + c_h·H²/R + c_w·W + c_x·X (+ sex term)`:
/// `∂/∂R = −c_h·H²/R²`, `∂/∂X = c_x`, `∂/∂W = c_w`, `∂/∂H = 2·c_h·H/R`.
/// Terms absent from the equation contribute zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientVector {
    /// kg per ohm of resistance.
    pub d_resistance: f64,
    /// kg per ohm of reactance.
    pub d_reactance: f64,
    /// kg per kg of body weight.
    pub d_weight: f64,
    /// kg per cm of height.
    pub d_height: f64,
}

/// Computes the analytic gradient of the spec's FFM at the given inputs.
pub fn gradient(
    spec: &EquationSpec,
    profile: &SubjectProfile,
    reading: &ImpedanceReading,
) -> Result<GradientVector> {
    if matches!(spec.sex_scheme, SexScheme::Stratified { .. }) {
        return Err(Error::Input(format!(
            "equation `{}` is a stratified dispatcher; take the gradient of a per-sex equation",
            spec.id
        )));
    }
    let r = reading.resistance_ohm;
    if r <= 0.0 || r.is_nan() {
        return Err(Error::Domain(format!(
            "resistance must be strictly positive, got {r}"
        )));
    }
    let h = profile.height_cm;
    let c_h = spec.coefficient(Covariate::H2OverR).unwrap_or(0.0);
    let c_w = spec.coefficient(Covariate::Weight).unwrap_or(0.0);
    let c_x = spec.coefficient(Covariate::Reactance).unwrap_or(0.0);
    Ok(GradientVector {
        d_resistance: -c_h * h * h / (r * r),
        d_reactance: c_x,
        d_weight: c_w,
        d_height: 2.0 * c_h * h / r,
    })
}

/// Nonnegative half-widths of the measurement uncertainty on each input.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerturbationDeltas {
    pub resistance_ohm: f64,
    pub reactance_ohm: f64,
    pub weight_kg: f64,
    pub height_cm: f64,
}

impl PerturbationDeltas {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("resistance", self.resistance_ohm),
            ("reactance", self.reactance_ohm),
            ("weight", self.weight_kg),
            ("height", self.height_cm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Input(format!(
                    "perturbation half-width for {name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Min/max FFM over the perturbation box, in kg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FfmInterval {
    pub low_kg: f64,
    pub high_kg: f64,
    /// FFM at the unperturbed inputs; always inside `[low_kg, high_kg]`.
    pub point_kg: f64,
}

/// Propagates input uncertainty by exact re-evaluation at the corners of
/// the perturbation box (plus the unperturbed point), returning the min and
/// max FFM found.
///
/// Errors if the resistance half-width reaches or crosses zero resistance.
pub fn propagate(
    spec: &EquationSpec,
    profile: &SubjectProfile,
    reading: &ImpedanceReading,
    sex_code: SexCode,
    deltas: &PerturbationDeltas,
) -> Result<FfmInterval> {
    deltas.validate()?;
    if reading.resistance_ohm - deltas.resistance_ohm <= 0.0 {
        return Err(Error::Domain(format!(
            "resistance perturbation {} drives resistance {} to or below zero",
            deltas.resistance_ohm, reading.resistance_ohm
        )));
    }
    let point_kg = evaluate_ffm(spec, profile, reading, sex_code)?;
    let mut low_kg = point_kg;
    let mut high_kg = point_kg;
    for corner in 0..16u8 {
        let sign = |bit: u8| if corner & (1 << bit) == 0 { -1.0 } else { 1.0 };
        let mut p = profile.clone();
        p.height_cm += sign(0) * deltas.height_cm;
        p.weight_kg += sign(1) * deltas.weight_kg;
        let mut r = *reading;
        r.resistance_ohm += sign(2) * deltas.resistance_ohm;
        r.reactance_ohm += sign(3) * deltas.reactance_ohm;
        let ffm = evaluate_ffm(spec, &p, &r, sex_code)?;
        low_kg = low_kg.min(ffm);
        high_kg = high_kg.max(ffm);
    }
    Ok(FfmInterval {
        low_kg,
        high_kg,
        point_kg,
    })
}
