//! Property tests for the library invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use openbia_core::{
    body_composition, builtin_registry, classify_against_threshold, coding_swing,
    cylinder_resistance, estimate_composition, evaluate_ffm, gradient, parse_spec, propagate,
    serialize_spec, tbw_from_impedance, CodingPolicy, Covariate, CylinderParams, EquationSpec,
    EstimateValue, GenderEntry, ImpedanceReading, PerturbationDeltas, PlausibilityFlag, SexCode,
    SexScheme, SubjectProfile, Term, ValidRange, BUILTIN_EQUATION_ID,
};

fn kyle_profile(height: f64, weight: f64) -> SubjectProfile {
    SubjectProfile::new(height, weight, None, false, GenderEntry::Male, None).unwrap()
}

fn reading(resistance: f64, reactance: f64) -> ImpedanceReading {
    ImpedanceReading::new(resistance, reactance, None).unwrap()
}

proptest! {
    // cylinder_resistance then tbw_from_impedance recovers the volume L·A
    #[test]
    fn conduction_round_trip(
        resistivity in 1e-3..1e4_f64,
        length in 1.0..250.0_f64,
        area in 1.0..1000.0_f64,
    ) {
        let params = CylinderParams::new(resistivity, length, area).unwrap();
        let resistance = cylinder_resistance(&params).unwrap();
        let volume = tbw_from_impedance(resistivity, length, resistance).unwrap();
        let expected = length * area;
        prop_assert!(((volume - expected) / expected).abs() < 1e-9);
    }

    #[test]
    fn tbw_monotone_in_resistance_and_length(
        resistivity in 1e-3..1e4_f64,
        length in 1.0..250.0_f64,
        r1 in 1.0..2000.0_f64,
        bump in 1e-6..500.0_f64,
    ) {
        let v1 = tbw_from_impedance(resistivity, length, r1).unwrap();
        let v2 = tbw_from_impedance(resistivity, length, r1 + bump).unwrap();
        prop_assert!(v2 <= v1);
        let v3 = tbw_from_impedance(resistivity, length + 1.0, r1).unwrap();
        prop_assert!(v3 >= v1);
    }

    // FFM + FM reproduces weight bit-for-bit; FFM within [w/2, 2w] keeps the
    // subtraction exact (Sterbenz), which covers the whole plausible range
    // and the negative-FM flag zone.
    #[test]
    fn composition_identity_is_exact(
        weight in 10.0..300.0_f64,
        fraction in 0.5..2.0_f64,
    ) {
        let ffm = fraction * weight;
        let b = body_composition(weight, ffm).unwrap();
        prop_assert_eq!(b.ffm_kg + b.fm_kg, weight);
        let alt = 100.0 * (1.0 - ffm / weight);
        let tol = 1e-12 * b.bf_percent.abs().max(alt.abs()).max(1.0);
        prop_assert!((b.bf_percent - alt).abs() <= tol);
    }

    // Flags fire exactly on the stated conditions, with no false positives
    // inside [0, 100] BF%.
    #[test]
    fn flags_fire_exactly(
        weight in 10.0..300.0_f64,
        fraction in -1.0..3.0_f64,
    ) {
        let ffm = fraction * weight;
        let b = body_composition(weight, ffm).unwrap();
        prop_assert_eq!(b.flags.contains(&PlausibilityFlag::ImplausibleNegativeFm), b.fm_kg < 0.0);
        prop_assert_eq!(
            b.flags.contains(&PlausibilityFlag::ImplausibleBf),
            !(0.0..=100.0).contains(&b.bf_percent)
        );
        if (0.0..=100.0).contains(&b.bf_percent) && b.fm_kg >= 0.0 {
            prop_assert!(b.flags.is_empty());
        }
    }

    // For offset equations the two codings differ by the sex coefficient,
    // up to evaluation roundoff.
    #[test]
    fn coding_difference_is_the_offset(
        height in 100.0..220.0_f64,
        weight in 35.0..150.0_f64,
        resistance in 200.0..1000.0_f64,
        reactance in 5.0..120.0_f64,
    ) {
        let registry = builtin_registry();
        let spec = registry.get(BUILTIN_EQUATION_ID).unwrap();
        let profile = kyle_profile(height, weight);
        let r = reading(resistance, reactance);
        let male = evaluate_ffm(spec, &profile, &r, SexCode::Male).unwrap();
        let female = evaluate_ffm(spec, &profile, &r, SexCode::Female).unwrap();
        prop_assert!(((male - female) - 4.229).abs() <= 1e-9 * male.abs().max(1.0));
        // and the swing report carries the coefficient exactly
        let swing = coding_swing(&registry, spec, &profile, &r).unwrap();
        prop_assert_eq!(swing.delta_ffm_kg, 4.229);
        prop_assert!((swing.delta_bf_pp - 100.0 * 4.229 / weight).abs() < 1e-9);
    }

    // Interval BF% width equals 100·sex_offset/weight percentage points.
    #[test]
    fn interval_width_matches_offset(
        height in 100.0..220.0_f64,
        weight in 35.0..150.0_f64,
        resistance in 200.0..1000.0_f64,
        reactance in 5.0..120.0_f64,
    ) {
        let registry = builtin_registry();
        let spec = registry.get(BUILTIN_EQUATION_ID).unwrap();
        let profile = SubjectProfile::new(
            height, weight, None, false, GenderEntry::NonbinaryOrUnspecified, None,
        ).unwrap();
        let est = estimate_composition(
            &registry, spec, &profile, &reading(resistance, reactance), &CodingPolicy::AsEntered,
        ).unwrap();
        let width = est.value.bf_width_pp();
        let expected = 100.0 * 4.229 / weight;
        prop_assert!((width - expected).abs() <= 1e-9 * expected.max(1.0));
        match est.value {
            EstimateValue::Interval { low, mid, high } => {
                prop_assert!(low.ffm_kg <= mid.ffm_kg && mid.ffm_kg <= high.ffm_kg);
            }
            _ => prop_assert!(false, "expected an interval"),
        }
    }

    // Raising resistance never raises FFM when the h2_over_r coefficient is
    // positive.
    #[test]
    fn ffm_monotone_in_resistance(
        height in 100.0..220.0_f64,
        weight in 35.0..150.0_f64,
        resistance in 200.0..1000.0_f64,
        bump in 1e-6..800.0_f64,
        reactance in 5.0..120.0_f64,
    ) {
        let registry = builtin_registry();
        let spec = registry.get(BUILTIN_EQUATION_ID).unwrap();
        let profile = kyle_profile(height, weight);
        let lo = evaluate_ffm(spec, &profile, &reading(resistance, reactance), SexCode::Male).unwrap();
        let hi = evaluate_ffm(spec, &profile, &reading(resistance + bump, reactance), SexCode::Male).unwrap();
        prop_assert!(hi <= lo);
    }

    // Analytic gradient matches central finite differences.
    #[test]
    fn gradient_matches_finite_differences(
        height in 100.0..220.0_f64,
        weight in 35.0..150.0_f64,
        resistance in 200.0..1000.0_f64,
        reactance in 5.0..120.0_f64,
    ) {
        let registry = builtin_registry();
        let spec = registry.get(BUILTIN_EQUATION_ID).unwrap();
        let profile = kyle_profile(height, weight);
        let r = reading(resistance, reactance);
        let g = gradient(spec, &profile, &r).unwrap();
        let eval = |h: f64, w: f64, res: f64, x: f64| {
            let p = kyle_profile(h, w);
            let mut rd = r;
            rd.resistance_ohm = res;
            rd.reactance_ohm = x;
            evaluate_ffm(spec, &p, &rd, SexCode::Male).unwrap()
        };
        let fd = |f_plus: f64, f_minus: f64, step: f64| (f_plus - f_minus) / (2.0 * step);
        let checks = [
            (g.d_resistance, {
                let h = 1e-4 * resistance;
                fd(eval(height, weight, resistance + h, reactance),
                   eval(height, weight, resistance - h, reactance), h)
            }),
            (g.d_reactance, {
                let h = 1e-4 * reactance;
                fd(eval(height, weight, resistance, reactance + h),
                   eval(height, weight, resistance, reactance - h), h)
            }),
            (g.d_weight, {
                let h = 1e-4 * weight;
                fd(eval(height, weight + h, resistance, reactance),
                   eval(height, weight - h, resistance, reactance), h)
            }),
            (g.d_height, {
                let h = 1e-4 * height;
                fd(eval(height + h, weight, resistance, reactance),
                   eval(height - h, weight, resistance, reactance), h)
            }),
        ];
        for (analytic, numeric) in checks {
            prop_assert!(
                (analytic - numeric).abs() <= 1e-6 * analytic.abs().max(1e-12),
                "analytic {} vs finite difference {}", analytic, numeric
            );
        }
    }

    // The point estimate sits inside the propagated interval, and widening
    // the perturbations never shrinks it.
    #[test]
    fn propagation_brackets_and_grows(
        height in 100.0..220.0_f64,
        weight in 35.0..150.0_f64,
        resistance in 200.0..1000.0_f64,
        reactance in 5.0..120.0_f64,
        fr in 0.0..0.4_f64,
        fx in 0.0..0.4_f64,
        fw in 0.0..0.4_f64,
        fh in 0.0..0.4_f64,
        grow in 1.0..2.0_f64,
    ) {
        let registry = builtin_registry();
        let spec = registry.get(BUILTIN_EQUATION_ID).unwrap();
        let profile = kyle_profile(height, weight);
        let r = reading(resistance, reactance);
        let deltas = PerturbationDeltas {
            resistance_ohm: fr * resistance,
            reactance_ohm: fx * reactance,
            weight_kg: fw * weight,
            height_cm: fh * height,
        };
        let small = propagate(spec, &profile, &r, SexCode::Male, &deltas).unwrap();
        prop_assert!(small.low_kg <= small.point_kg && small.point_kg <= small.high_kg);
        let bigger = PerturbationDeltas {
            resistance_ohm: (deltas.resistance_ohm * grow).min(0.45 * resistance),
            reactance_ohm: deltas.reactance_ohm * grow,
            weight_kg: deltas.weight_kg * grow,
            height_cm: deltas.height_cm * grow,
        };
        let large = propagate(spec, &profile, &r, SexCode::Male, &bigger).unwrap();
        prop_assert!(large.low_kg <= small.low_kg + 1e-12);
        prop_assert!(large.high_kg >= small.high_kg - 1e-12);
    }

    #[test]
    fn threshold_classification_is_monotone(
        mape in 0.0..100.0_f64,
        lower in 0.0..1.0_f64,
        threshold in 0.0..100.0_f64,
    ) {
        let at = classify_against_threshold(mape, threshold);
        let below = classify_against_threshold(mape * lower, threshold);
        if at.pass {
            prop_assert!(below.pass);
        }
    }
}

// ---------------------------------------------------------------------------
// Spec-file round trip and parse fuzzing
// ---------------------------------------------------------------------------

fn arb_spec() -> impl Strategy<Value = EquationSpec> {
    let coeff = -1e6..1e6_f64;
    let optional_text = proptest::option::of("[ -~]{0,40}");
    (
        "[a-z][a-z0-9_]{0,15}",
        proptest::bool::ANY,
        proptest::bool::ANY,
        proptest::bool::ANY,
        proptest::collection::vec(coeff, 6),
        optional_text.clone(),
        optional_text.clone(),
        optional_text,
        proptest::collection::btree_map(0usize..6, (-1e3..1e3_f64, 0.0..1e3_f64), 0..4),
    )
        .prop_map(
            |(id, with_sex, with_age, with_reactance, coeffs, population, gold, units, ranges)| {
                let mut terms = vec![
                    Term {
                        covariate: Covariate::Intercept,
                        coefficient: coeffs[0],
                    },
                    Term {
                        covariate: Covariate::H2OverR,
                        coefficient: coeffs[1],
                    },
                    Term {
                        covariate: Covariate::Weight,
                        coefficient: coeffs[2],
                    },
                ];
                if with_reactance {
                    terms.push(Term {
                        covariate: Covariate::Reactance,
                        coefficient: coeffs[3],
                    });
                }
                if with_age {
                    terms.push(Term {
                        covariate: Covariate::Age,
                        coefficient: coeffs[4],
                    });
                }
                if with_sex {
                    terms.push(Term {
                        covariate: Covariate::SexOffset,
                        coefficient: coeffs[5],
                    });
                }
                let valid_ranges: BTreeMap<Covariate, ValidRange> = ranges
                    .into_iter()
                    .map(|(i, (low, width))| {
                        (
                            Covariate::ALL[i],
                            ValidRange {
                                low,
                                high: low + width,
                            },
                        )
                    })
                    .collect();
                EquationSpec {
                    id,
                    terms,
                    sex_scheme: if with_sex {
                        SexScheme::Offset
                    } else {
                        SexScheme::None
                    },
                    population,
                    gold_standard: gold,
                    units,
                    valid_ranges,
                    reported_error: None,
                }
            },
        )
}

proptest! {
    #[test]
    fn spec_serialization_round_trips(spec in arb_spec()) {
        spec.validate().unwrap();
        let text = serialize_spec(&spec);
        let parsed = parse_spec(&text).unwrap();
        prop_assert_eq!(parsed, spec);
    }

    // Whatever the input text, parse_spec never yields a spec that violates
    // its own invariants.
    #[test]
    fn parse_never_leaks_invalid_specs(text in "\\PC{0,400}") {
        if let Ok(spec) = parse_spec(&text) {
            prop_assert!(spec.validate().is_ok());
        }
    }

    // Same, for structured near-miss documents.
    #[test]
    fn mangled_documents_never_leak_invalid_specs(
        spec in arb_spec(),
        cut in 0usize..400,
        insert in "[a-z_]{1,12}",
    ) {
        let mut text = serialize_spec(&spec);
        if cut < text.len() && text.is_char_boundary(cut) {
            text.remove(cut);
        }
        text.push_str(&format!("\n{insert} = 1\n"));
        if let Ok(parsed) = parse_spec(&text) {
            prop_assert!(parsed.validate().is_ok());
        }
    }
}
