//! Synthetic cohort generation: the fitting oracle.
//!
//! Cohorts are drawn from a known linear generative model so that fitting
//! code can be checked against ground truth: exact coefficient recovery on
//! noiseless data, and known-coefficient recovery within standard errors on
//! noisy data.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::estimator::{GenderEntry, ImpedanceReading, SexCode, SubjectProfile};
use crate::registry::{Covariate, Term};

use super::{DatasetRow, FitDataset};

/// Generative model for a synthetic cohort.
///
/// Reference FFM is `Σ coefficient · covariate + N(0, noise_sd_kg)`;
/// covariates are uniform draws from the stated ranges and binary sex labels
/// alternate male/female by row index, so each label gets half the cohort.
/// Deterministic given the seed.
///
/// Generated reference values are *not* clipped to `(0, weight]`: the
/// generator exists to realize arbitrary linear models exactly, including
/// ones that produce physically impossible reference masses.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortConfig {
    pub n: usize,
    pub seed: u64,
    pub height_range_cm: (f64, f64),
    pub weight_range_kg: (f64, f64),
    pub resistance_range_ohm: (f64, f64),
    pub reactance_range_ohm: (f64, f64),
    /// True generative coefficients, including the true sex offset if any.
    pub true_coefficients: Vec<Term>,
    pub noise_sd_kg: f64,
}

impl Default for CohortConfig {
    /// Ranges of a plausible adult cohort, with the built-in equation's
    /// coefficients as the generative truth.
    fn default() -> Self {
        Self {
            n: 100,
            seed: 0,
            height_range_cm: (150.0, 200.0),
            weight_range_kg: (45.0, 120.0),
            resistance_range_ohm: (350.0, 750.0),
            reactance_range_ohm: (20.0, 90.0),
            true_coefficients: vec![
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
            noise_sd_kg: 1.0,
        }
    }
}

impl CohortConfig {
    /// Replaces the true sex-offset coefficient (adding the term if absent).
    pub fn with_sex_offset(mut self, coefficient: f64) -> Self {
        match self
            .true_coefficients
            .iter_mut()
            .find(|t| t.covariate == Covariate::SexOffset)
        {
            Some(term) => term.coefficient = coefficient,
            None => self.true_coefficients.push(Term {
                covariate: Covariate::SexOffset,
                coefficient,
            }),
        }
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Input("cohort size must be at least 1".into()));
        }
        if !(self.noise_sd_kg.is_finite() && self.noise_sd_kg >= 0.0) {
            return Err(Error::Input(format!(
                "noise standard deviation must be nonnegative, got {}",
                self.noise_sd_kg
            )));
        }
        for (name, (low, high)) in [
            ("height", self.height_range_cm),
            ("weight", self.weight_range_kg),
            ("resistance", self.resistance_range_ohm),
            ("reactance", self.reactance_range_ohm),
        ] {
            if !(low.is_finite() && high.is_finite() && low <= high) {
                return Err(Error::Input(format!(
                    "{name} range [{low}, {high}] is empty or not finite"
                )));
            }
        }
        if self
            .true_coefficients
            .iter()
            .any(|t| t.covariate == Covariate::Age)
        {
            return Err(Error::Input(
                "the cohort generator does not draw ages; remove the age term".into(),
            ));
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (low, high): (f64, f64)) -> f64 {
    if low == high {
        low
    } else {
        rng.gen_range(low..high)
    }
}

/// Draws a cohort from the generative model. Byte-identical output for
/// identical configs.
pub fn synthesize_cohort(config: &CohortConfig) -> Result<FitDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_sd_kg)
        .map_err(|e| Error::Input(format!("bad noise distribution: {e}")))?;
    let mut rows = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let height_cm = uniform(&mut rng, config.height_range_cm);
        let weight_kg = uniform(&mut rng, config.weight_range_kg);
        let resistance_ohm = uniform(&mut rng, config.resistance_range_ohm);
        let reactance_ohm = uniform(&mut rng, config.reactance_range_ohm);
        let code = if i % 2 == 0 {
            SexCode::Male
        } else {
            SexCode::Female
        };
        let profile = SubjectProfile::new(
            height_cm,
            weight_kg,
            None,
            false,
            match code {
                SexCode::Male => GenderEntry::Male,
                SexCode::Female => GenderEntry::Female,
            },
            None,
        )?;
        let reading = ImpedanceReading::new(resistance_ohm, reactance_ohm, None)?;
        let mut ref_ffm_kg = 0.0;
        for term in &config.true_coefficients {
            let value = match term.covariate {
                Covariate::Intercept => 1.0,
                Covariate::H2OverR => height_cm * height_cm / resistance_ohm,
                Covariate::Weight => weight_kg,
                Covariate::Reactance => reactance_ohm,
                Covariate::SexOffset => code.value(),
                Covariate::Age => unreachable!("rejected by validate"),
            };
            ref_ffm_kg += term.coefficient * value;
        }
        ref_ffm_kg += noise.sample(&mut rng);
        rows.push(DatasetRow {
            profile,
            reading,
            ref_ffm_kg,
            groups: BTreeMap::new(),
        });
    }
    Ok(FitDataset {
        rows,
        description: Some(format!(
            "synthetic cohort (n={}, seed={})",
            config.n, config.seed
        )),
        sex_provenance: Some(
            "synthetic: binary labels assigned by the generator, alternating by row".into(),
        ),
    })
}
