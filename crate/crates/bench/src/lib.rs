//! Shared fixtures for the benchmarks.

use openbia_core::{
    synthesize_cohort, CohortConfig, FitDataset, GenderEntry, ImpedanceReading, SubjectProfile,
};

/// The worked-example subject used across the benchmarks.
pub fn reference_subject() -> (SubjectProfile, ImpedanceReading) {
    let profile =
        SubjectProfile::new(170.0, 70.0, None, false, GenderEntry::Male, None).expect("valid");
    let reading = ImpedanceReading::new(500.0, 50.0, None).expect("valid");
    (profile, reading)
}

/// A deterministic noisy cohort of the given size.
pub fn cohort(n: usize) -> FitDataset {
    synthesize_cohort(&CohortConfig {
        n,
        seed: 11,
        noise_sd_kg: 1.0,
        ..Default::default()
    })
    .expect("valid config")
}
