//! Command implementations.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use openbia_core::{
    builtin_registry, coding_swing, cross_validate, describe_transparency, estimate_composition,
    fit_least_squares_with_id, gradient, ingest_dataset_path, recommend_coding, serialize_spec,
    subgroup_disaggregate_with_threshold, CodingPolicy, CompositionBreakdown, CompositionEstimate,
    Covariate, Error, EstimateValue, FitDataset, GenderEntry, HistoryStore, HormoneStatus,
    ImpedanceReading, MeasurementRecord, Registry, Result, SexScheme, SubjectProfile, TrendReport,
    FULL_COVARIATES, TRANSPARENCY_DISCLAIMER,
};

use crate::args::{
    Cli, Command, EstimateArgs, FitArgs, HistoryAction, MeasurementArgs, RegistryAction,
    ValidateArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(args) => estimate(&args),
        Command::Swing(args) => swing(&args),
        Command::Gradient(args) => grad(&args),
        Command::Registry { action } => registry_cmd(action),
        Command::Fit(args) => fit(&args),
        Command::Validate(args) => validate(&args),
        Command::History { action } => history(cli.home.as_deref(), action),
    }
}

fn load_registry(spec_files: &[PathBuf]) -> Result<Registry> {
    let mut registry = builtin_registry();
    for path in spec_files {
        registry.load_file(path)?;
    }
    Ok(registry)
}

fn parse_hormone(text: &str) -> Result<HormoneStatus> {
    match text {
        "testosterone-dominant" => Ok(HormoneStatus::TestosteroneDominant),
        "estrogen-dominant" => Ok(HormoneStatus::EstrogenDominant),
        "mixed-or-unknown" => Ok(HormoneStatus::MixedOrUnknown),
        other => Err(Error::Input(format!(
            "unrecognized hormone status `{other}` (expected testosterone-dominant, \
             estrogen-dominant or mixed-or-unknown)"
        ))),
    }
}

fn subject_inputs(
    args: &MeasurementArgs,
    gender: GenderEntry,
    hormone: Option<HormoneStatus>,
) -> Result<(SubjectProfile, ImpedanceReading)> {
    let profile = SubjectProfile::new(
        args.height_cm,
        args.weight_kg,
        args.age,
        args.athlete,
        gender,
        hormone,
    )?;
    let reading =
        ImpedanceReading::new(args.resistance_ohm, args.reactance_ohm, args.frequency_khz)?;
    Ok((profile, reading))
}

fn print_breakdown(label: &str, b: &CompositionBreakdown) {
    println!(
        "{label}: FFM {:.4} kg, FM {:.4} kg, BF% {:.4}",
        b.ffm_kg, b.fm_kg, b.bf_percent
    );
}

fn print_estimate(estimate: &CompositionEstimate) {
    println!("equation: {}", estimate.equation_id);
    println!("coding: {}", estimate.policy_used);
    match &estimate.value {
        EstimateValue::Point(b) => {
            println!("FFM: {:.4} kg", b.ffm_kg);
            println!("FM:  {:.4} kg", b.fm_kg);
            println!("BF%: {:.4}", b.bf_percent);
        }
        EstimateValue::Interval { low, mid, high } => {
            let span = |a: f64, b: f64| (a.min(b), a.max(b));
            let (ffm_lo, ffm_hi) = span(low.ffm_kg, high.ffm_kg);
            let (fm_lo, fm_hi) = span(low.fm_kg, high.fm_kg);
            let (bf_lo, bf_hi) = span(low.bf_percent, high.bf_percent);
            println!(
                "FFM: [{ffm_lo:.4}, {ffm_hi:.4}] kg  (midpoint {:.4})",
                mid.ffm_kg
            );
            println!(
                "FM:  [{fm_lo:.4}, {fm_hi:.4}] kg  (midpoint {:.4})",
                mid.fm_kg
            );
            println!(
                "BF%: [{bf_lo:.4}, {bf_hi:.4}]  (midpoint {:.4})",
                mid.bf_percent
            );
        }
    }
    let mut flags: Vec<String> = Vec::new();
    let mut collect = |b: &CompositionBreakdown| {
        for flag in &b.flags {
            let text = flag.to_string();
            if !flags.contains(&text) {
                flags.push(text);
            }
        }
    };
    match &estimate.value {
        EstimateValue::Point(b) => collect(b),
        EstimateValue::Interval { low, mid, high } => {
            collect(low);
            collect(mid);
            collect(high);
        }
    }
    for flag in flags {
        println!("warning: implausible estimate ({flag})");
    }
    for warning in &estimate.warnings {
        println!("warning: {warning}");
    }
    println!("note: {TRANSPARENCY_DISCLAIMER}");
}

fn run_estimate(
    args: &EstimateArgs,
) -> Result<(SubjectProfile, ImpedanceReading, CompositionEstimate)> {
    let registry = load_registry(&args.measurement.spec_files)?;
    let spec = registry.get(&args.measurement.equation)?;
    let gender = GenderEntry::parse(&args.gender)?;
    let hormone = args
        .hormone_status
        .as_deref()
        .map(parse_hormone)
        .transpose()?;
    let (profile, reading) = subject_inputs(&args.measurement, gender, hormone)?;
    let policy = CodingPolicy::parse(&args.policy)?;
    let estimate = estimate_composition(&registry, spec, &profile, &reading, &policy)?;
    Ok((profile, reading, estimate))
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let (profile, _, estimate) = run_estimate(args)?;
    print_estimate(&estimate);
    if profile.hormone_status.is_some() {
        let rec = recommend_coding(&profile);
        println!("recommended coding: {} ({})", rec.policy, rec.rationale);
    }
    Ok(())
}

fn swing(args: &MeasurementArgs) -> Result<()> {
    let registry = load_registry(&args.spec_files)?;
    let spec = registry.get(&args.equation)?;
    // The swing is gender-independent; the placeholder entry never reaches
    // the equation.
    let (profile, reading) = subject_inputs(args, GenderEntry::NonbinaryOrUnspecified, None)?;
    let report = coding_swing(&registry, spec, &profile, &reading)?;
    println!("equation: {}", spec.id);
    print_breakdown("female coding (0)", &report.female);
    print_breakdown("male coding (1)  ", &report.male);
    println!("delta FFM (male - female): {:.4} kg", report.delta_ffm_kg);
    println!("delta BF% (female - male): {:.4} pp", report.delta_bf_pp);
    println!("note: {TRANSPARENCY_DISCLAIMER}");
    Ok(())
}

fn grad(args: &MeasurementArgs) -> Result<()> {
    let registry = load_registry(&args.spec_files)?;
    let spec = registry.get(&args.equation)?;
    let (profile, reading) = subject_inputs(args, GenderEntry::NonbinaryOrUnspecified, None)?;
    let g = gradient(spec, &profile, &reading)?;
    println!(
        "equation: {} at H={} cm, W={} kg, R={} ohm, X={} ohm",
        spec.id,
        profile.height_cm,
        profile.weight_kg,
        reading.resistance_ohm,
        reading.reactance_ohm
    );
    println!("dFFM/dR: {:.6} kg/ohm", g.d_resistance);
    println!("dFFM/dX: {:.6} kg/ohm", g.d_reactance);
    println!("dFFM/dW: {:.6} kg/kg", g.d_weight);
    println!("dFFM/dH: {:.6} kg/cm", g.d_height);
    Ok(())
}

fn registry_cmd(action: RegistryAction) -> Result<()> {
    match action {
        RegistryAction::List { spec_files } => {
            let registry = load_registry(&spec_files)?;
            for spec in registry.iter() {
                let scheme = match &spec.sex_scheme {
                    SexScheme::Offset => "sex scheme: offset".to_string(),
                    SexScheme::None => "sex scheme: none".to_string(),
                    SexScheme::Stratified { .. } => "sex scheme: stratified".to_string(),
                };
                println!("{}  ({scheme}; {} terms)", spec.id, spec.terms.len());
            }
            Ok(())
        }
        RegistryAction::Show { id, spec_files } => {
            let registry = load_registry(&spec_files)?;
            let spec = registry.get(&id)?;
            println!("id: {}", spec.id);
            match &spec.sex_scheme {
                SexScheme::Offset => println!("sex scheme: offset (single equation, 0/1 term)"),
                SexScheme::None => println!("sex scheme: none (sex-free equation)"),
                SexScheme::Stratified {
                    male_spec_id,
                    female_spec_id,
                } => println!(
                    "sex scheme: stratified (male -> {male_spec_id}, female -> {female_spec_id})"
                ),
            }
            println!("terms:");
            for term in &spec.terms {
                println!("  {}: {}", term.covariate, term.coefficient);
            }
            if !spec.valid_ranges.is_empty() {
                println!("valid ranges:");
                for (covariate, range) in &spec.valid_ranges {
                    println!("  {covariate}: [{}, {}]", range.low, range.high);
                }
            }
            println!(
                "population: {}",
                spec.population.as_deref().unwrap_or("not reported")
            );
            println!(
                "gold standard: {}",
                spec.gold_standard.as_deref().unwrap_or("not reported")
            );
            println!("units: {}", spec.units.as_deref().unwrap_or("not reported"));
            match &spec.reported_error {
                Some(e) => println!("reported error: {} = {}", e.metric, e.value),
                None => println!("reported error: not reported"),
            }
            Ok(())
        }
        RegistryAction::Describe { id, spec_files } => {
            let registry = load_registry(&spec_files)?;
            print!("{}", describe_transparency(registry.get(&id)?));
            Ok(())
        }
    }
}

fn parse_covariates(args: &FitArgs) -> Result<Vec<Covariate>> {
    let mut covariates = match &args.covariates {
        Some(list) => {
            let mut parsed = Vec::new();
            for name in list.split(',') {
                parsed.push(Covariate::parse(name.trim())?);
            }
            parsed
        }
        None => FULL_COVARIATES.to_vec(),
    };
    if args.drop_sex {
        covariates.retain(|c| *c != Covariate::SexOffset);
    }
    Ok(covariates)
}

fn load_dataset(path: &Path, args: &FitArgs) -> Result<FitDataset> {
    let mut dataset = ingest_dataset_path(path)?;
    dataset.description = args.description.clone();
    dataset.sex_provenance = args.sex_provenance.clone();
    Ok(dataset)
}

fn fit(args: &FitArgs) -> Result<()> {
    let dataset = load_dataset(&args.csv, args)?;
    let covariates = parse_covariates(args)?;
    let default_id = if covariates.contains(&Covariate::SexOffset) {
        "fitted_with_sex"
    } else {
        "fitted_sex_free"
    };
    let id = args.id.as_deref().unwrap_or(default_id);
    let fitted = fit_least_squares_with_id(&dataset, &covariates, id)?;

    println!(
        "fitted equation `{}` on {} rows",
        fitted.spec.id, fitted.diagnostics.n
    );
    println!("coefficients (standard errors):");
    for (term, (_, se)) in fitted
        .spec
        .terms
        .iter()
        .zip(&fitted.diagnostics.standard_errors)
    {
        println!(
            "  {}: {:.6}  (SE {:.6})",
            term.covariate, term.coefficient, se
        );
    }
    println!("in-sample RMSE: {:.6} kg", fitted.diagnostics.rmse_kg);
    println!("R^2: {:.6}", fitted.diagnostics.r_squared);
    if let Some(k) = args.kfold {
        let cv = cross_validate(&dataset, &covariates, k)?;
        println!("{k}-fold CV RMSE: {:.6} kg", cv.cv_rmse_kg);
        let folds: Vec<String> = cv.fold_rmse_kg.iter().map(|v| format!("{v:.6}")).collect();
        println!("per-fold RMSE: [{}]", folds.join(", "));
    }
    let document = serialize_spec(&fitted.spec);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &document)?;
            println!("equation spec written to {}", path.display());
        }
        None => {
            println!("--- equation spec (TOML) ---");
            print!("{document}");
        }
    }
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<()> {
    if args.threshold < 0.0 {
        return Err(Error::Input(format!(
            "threshold must be nonnegative, got {}",
            args.threshold
        )));
    }
    let registry = load_registry(&args.spec_files)?;
    let spec = registry.get(&args.equation)?;
    let dataset = ingest_dataset_path(&args.csv)?;
    let policy = CodingPolicy::parse(&args.policy)?;
    let report =
        subgroup_disaggregate_with_threshold(&registry, &dataset, spec, &policy, args.threshold)?;
    if args.json {
        let wrapper = serde_json::json!({
            "equation": spec.id,
            "policy": args.policy,
            "report": report,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&wrapper).expect("report serializes")
        );
    } else {
        println!("equation: {}  policy: {}", spec.id, args.policy);
        print!("{report}");
    }
    Ok(())
}

fn open_store(home: Option<&Path>) -> Result<HistoryStore> {
    match home {
        Some(dir) => HistoryStore::open(dir),
        None => HistoryStore::from_env(),
    }
}

fn print_trend(report: &TrendReport) {
    println!("profile: {}", report.profile_id);
    println!("records in window: {}", report.n_records);
    for delta in &report.deltas {
        let widths = if delta.from_bf_width_pp > 0.0 || delta.to_bf_width_pp > 0.0 {
            format!(
                "  (interval widths {:.4} -> {:.4} pp)",
                delta.from_bf_width_pp, delta.to_bf_width_pp
            )
        } else {
            String::new()
        };
        println!(
            "t={} -> t={}: delta FFM {:+.4} kg, delta BF% {:+.4} pp{widths}",
            delta.from_timestamp, delta.to_timestamp, delta.delta_ffm_kg, delta.delta_bf_pp
        );
    }
    println!(
        "net change: FFM {:+.4} kg, BF% {:+.4} pp",
        report.net_ffm_kg, report.net_bf_pp
    );
    if report.mixed_policies {
        println!(
            "warning: this series mixes coding policies; deltas across a policy change measure \
             the coding, not the body"
        );
    }
}

fn history(home: Option<&Path>, action: HistoryAction) -> Result<()> {
    let store = open_store(home)?;
    match action {
        HistoryAction::Record {
            profile_id,
            timestamp,
            estimate: est_args,
        } => {
            let (profile, reading, estimate) = run_estimate(&est_args)?;
            print_estimate(&estimate);
            let timestamp = match timestamp {
                Some(t) => t,
                None => SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs() as i64)
                    .unwrap_or(0),
            };
            let record = MeasurementRecord {
                timestamp,
                profile,
                reading,
                estimate,
            };
            store.record_measurement(&profile_id, &record)?;
            let count = store.read_history(&profile_id)?.len();
            println!("recorded measurement #{count} for profile `{profile_id}` at t={timestamp}");
            Ok(())
        }
        HistoryAction::Trend {
            profile_id,
            from,
            to,
        } => {
            let report = store.trend_report(&profile_id, from, to)?;
            print_trend(&report);
            Ok(())
        }
    }
}
