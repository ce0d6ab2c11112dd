//! Two-compartment conduction model.
//!
//! The body is treated as a single homogeneous conductor: resistance follows
//! from resistivity, length and cross-sectional area, total body water is the
//! conductive volume inferred from that model, and fat-free mass follows from
//! an assumed hydration fraction. Fat mass and body fat percentage are then
//! identities on the subject's weight.
//!
//! All operations are pure and stateless; implausible results are flagged,
//! never clamped or rejected.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cubic centimetres per litre, used when moving between the conduction
/// volume (cm³) and body-water volume (L).
pub const CM3_PER_LITER: f64 = 1000.0;

/// Fraction of fat-free mass that is bone, recorded for disclosure only.
/// It never enters any computation in this crate.
pub const BONE_FRACTION_NOTE: f64 = 0.07;

/// Geometry and material of the homogeneous-conductor model.
///
/// Length and area must be strictly positive; resistivity may be zero
/// (a degenerate, perfectly conducting cylinder).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderParams {
    /// Tissue resistivity in ohm·cm. No default is shipped: there is no
    /// agreed single value, so callers must supply one explicitly.
    pub resistivity_ohm_cm: f64,
    /// Conductor length in cm (proportional to body height).
    pub length_cm: f64,
    /// Cross-sectional area in cm².
    pub area_cm2: f64,
}

impl CylinderParams {
    pub fn new(resistivity_ohm_cm: f64, length_cm: f64, area_cm2: f64) -> Result<Self> {
        if !resistivity_ohm_cm.is_finite() || resistivity_ohm_cm < 0.0 {
            return Err(Error::Domain(format!(
                "resistivity must be finite and nonnegative, got {resistivity_ohm_cm}"
            )));
        }
        if !(length_cm.is_finite() && length_cm > 0.0) {
            return Err(Error::Domain(format!(
                "cylinder length must be strictly positive, got {length_cm}"
            )));
        }
        if !(area_cm2.is_finite() && area_cm2 > 0.0) {
            return Err(Error::Domain(format!(
                "cylinder area must be strictly positive, got {area_cm2}"
            )));
        }
        Ok(Self {
            resistivity_ohm_cm,
            length_cm,
            area_cm2,
        })
    }
}

/// Assumed water fraction of fat-free mass, in (0, 1].
///
/// Kept as an explicit parameter because the fraction varies across
/// populations; 0.73 is the conventional default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydrationConstant(f64);

impl HydrationConstant {
    pub const DEFAULT_FRACTION: f64 = 0.73;

    pub fn new(fraction: f64) -> Result<Self> {
        if !(fraction.is_finite() && fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Domain(format!(
                "hydration fraction must lie in (0, 1], got {fraction}"
            )));
        }
        Ok(Self(fraction))
    }

    pub fn fraction(&self) -> f64 {
        self.0
    }
}

impl Default for HydrationConstant {
    fn default() -> Self {
        Self(Self::DEFAULT_FRACTION)
    }
}

/// Markers attached to estimates that violate physical plausibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlausibilityFlag {
    /// Fat mass came out negative (estimated FFM exceeds body weight).
    ImplausibleNegativeFm,
    /// Body fat percentage fell outside [0, 100].
    ImplausibleBf,
}

impl fmt::Display for PlausibilityFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlausibilityFlag::ImplausibleNegativeFm => write!(f, "implausible_negative_fm"),
            PlausibilityFlag::ImplausibleBf => write!(f, "implausible_bf"),
        }
    }
}

/// Fat-free mass, fat mass and body fat percentage for one subject.
///
/// `ffm_kg + fm_kg` reproduces the subject weight bit-for-bit (fat mass is
/// defined as the difference), and `bf_percent` is `100 · fm / weight`.
/// Implausible values are carried as-is with `flags` set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionBreakdown {
    pub ffm_kg: f64,
    pub fm_kg: f64,
    pub bf_percent: f64,
    pub flags: BTreeSet<PlausibilityFlag>,
}

impl CompositionBreakdown {
    pub fn is_plausible(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Resistance of a homogeneous cylinder: resistivity · length / area.
pub fn cylinder_resistance(params: &CylinderParams) -> Result<f64> {
    if params.area_cm2 <= 0.0 || params.area_cm2.is_nan() {
        return Err(Error::Domain(format!(
            "cylinder area must be strictly positive, got {}",
            params.area_cm2
        )));
    }
    if params.length_cm <= 0.0 || params.length_cm.is_nan() {
        return Err(Error::Domain(format!(
            "cylinder length must be strictly positive, got {}",
            params.length_cm
        )));
    }
    Ok(params.resistivity_ohm_cm * params.length_cm / params.area_cm2)
}

/// Conductive volume (total body water) in cm³, inverted from the cylinder
/// model: resistivity · length² / resistance.
pub fn tbw_from_impedance(
    resistivity_ohm_cm: f64,
    length_cm: f64,
    resistance_ohm: f64,
) -> Result<f64> {
    if resistance_ohm <= 0.0 || resistance_ohm.is_nan() {
        return Err(Error::Domain(format!(
            "resistance must be strictly positive, got {resistance_ohm}"
        )));
    }
    if length_cm <= 0.0 || length_cm.is_nan() {
        return Err(Error::Domain(format!(
            "length must be strictly positive, got {length_cm}"
        )));
    }
    if !resistivity_ohm_cm.is_finite() || resistivity_ohm_cm < 0.0 {
        return Err(Error::Domain(format!(
            "resistivity must be finite and nonnegative, got {resistivity_ohm_cm}"
        )));
    }
    Ok(resistivity_ohm_cm * length_cm * length_cm / resistance_ohm)
}

/// Fat-free mass in kg from total body water in litres.
///
/// Water is taken at 1 kg/L, so FFM = TBW / hydration fraction.
pub fn ffm_from_tbw(tbw_liters: f64, hydration: HydrationConstant) -> Result<f64> {
    if !(tbw_liters.is_finite() && tbw_liters >= 0.0) {
        return Err(Error::Domain(format!(
            "total body water must be nonnegative, got {tbw_liters}"
        )));
    }
    Ok(tbw_liters / hydration.fraction())
}

/// Fat mass and body fat percentage from weight and fat-free mass.
///
/// FM = weight − FFM and BF% = 100 · FM / weight. Values outside the
/// physical range are returned unchanged and flagged.
pub fn body_composition(weight_kg: f64, ffm_kg: f64) -> Result<CompositionBreakdown> {
    if !(weight_kg.is_finite() && weight_kg > 0.0) {
        return Err(Error::Domain(format!(
            "weight must be strictly positive, got {weight_kg}"
        )));
    }
    if !ffm_kg.is_finite() {
        return Err(Error::Domain(format!(
            "fat-free mass must be finite, got {ffm_kg}"
        )));
    }
    let fm_kg = weight_kg - ffm_kg;
    let bf_percent = 100.0 * fm_kg / weight_kg;
    let mut flags = BTreeSet::new();
    if fm_kg < 0.0 {
        flags.insert(PlausibilityFlag::ImplausibleNegativeFm);
    }
    if !(0.0..=100.0).contains(&bf_percent) {
        flags.insert(PlausibilityFlag::ImplausibleBf);
    }
    Ok(CompositionBreakdown {
        ffm_kg,
        fm_kg,
        bf_percent,
        flags,
    })
}
