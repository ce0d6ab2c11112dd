//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "openbia",
    version,
    about = "Transparent bioimpedance body composition: inspectable equations, explicit \
             sex/gender coding policies, refitting and validation tooling",
    after_help = "Every estimate is a population-level regression output; each one is printed \
                  with its applicability warnings and a transparency note."
)]
pub struct Cli {
    /// Measurement-history directory (overrides OPENBIA_HOME).
    #[arg(long, global = true)]
    pub home: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Estimate body composition for one subject.
    Estimate(EstimateArgs),
    /// Show how far the estimate moves when the binary sex input flips.
    Swing(MeasurementArgs),
    /// Analytic sensitivity of FFM to each measured input.
    Gradient(MeasurementArgs),
    /// Inspect the equation registry.
    Registry {
        #[command(subcommand)]
        action: RegistryAction,
    },
    /// Fit an FFM regression to a reference dataset (optionally sex-free).
    Fit(FitArgs),
    /// Validate an equation against a reference dataset, with subgroup
    /// disaggregation.
    Validate(ValidateArgs),
    /// Record measurements and report trends over time.
    History {
        #[command(subcommand)]
        action: HistoryAction,
    },
}

/// Inputs shared by every command that evaluates an equation.
#[derive(Args)]
pub struct MeasurementArgs {
    /// Equation id in the registry.
    #[arg(long)]
    pub equation: String,
    #[arg(long)]
    pub height_cm: f64,
    #[arg(long)]
    pub weight_kg: f64,
    #[arg(long)]
    pub resistance_ohm: f64,
    #[arg(long)]
    pub reactance_ohm: f64,
    /// Age in years, if the equation needs it.
    #[arg(long)]
    pub age: Option<f64>,
    /// Mark the subject as an athlete (used by applicability checks only).
    #[arg(long)]
    pub athlete: bool,
    /// Measurement frequency in kHz (default 50).
    #[arg(long)]
    pub frequency_khz: Option<f64>,
    /// Extra equation-spec files (TOML) to load into the registry; repeatable.
    #[arg(long = "spec-file")]
    pub spec_files: Vec<PathBuf>,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub measurement: MeasurementArgs,
    /// Gender entry: male, female, or x (nonbinary/unspecified).
    #[arg(long)]
    pub gender: String,
    /// Coding policy: as-entered | force-male | force-female | interval |
    /// sex-free=<equation id>.
    #[arg(long, default_value = "as-entered")]
    pub policy: String,
    /// Hormone status, used to print a coding recommendation:
    /// testosterone-dominant | estrogen-dominant | mixed-or-unknown.
    #[arg(long)]
    pub hormone_status: Option<String>,
}

#[derive(Subcommand)]
pub enum RegistryAction {
    /// List registered equation ids.
    List {
        #[arg(long = "spec-file")]
        spec_files: Vec<PathBuf>,
    },
    /// Print an equation's terms and metadata.
    Show {
        id: String,
        #[arg(long = "spec-file")]
        spec_files: Vec<PathBuf>,
    },
    /// Print the full transparency report for an equation.
    Describe {
        id: String,
        #[arg(long = "spec-file")]
        spec_files: Vec<PathBuf>,
    },
}

#[derive(Args)]
pub struct FitArgs {
    /// Reference dataset CSV.
    #[arg(long)]
    pub csv: PathBuf,
    /// Comma-separated covariates
    /// (default: intercept,h2_over_r,weight,reactance,sex_offset).
    #[arg(long)]
    pub covariates: Option<String>,
    /// Drop the sex term: the sex-free refit.
    #[arg(long)]
    pub drop_sex: bool,
    /// Also run k-fold cross-validation with this k.
    #[arg(long)]
    pub kfold: Option<usize>,
    /// Id for the fitted equation spec.
    #[arg(long)]
    pub id: Option<String>,
    /// Free-text dataset description recorded in the fitted spec.
    #[arg(long)]
    pub description: Option<String>,
    /// How the dataset's sex column was determined (disclosure only).
    #[arg(long)]
    pub sex_provenance: Option<String>,
    /// Write the fitted spec document (TOML) to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Reference dataset CSV.
    #[arg(long)]
    pub csv: PathBuf,
    /// Equation id to validate.
    #[arg(long)]
    pub equation: String,
    /// MAPE pass/fail threshold in percent.
    #[arg(long, default_value_t = openbia_core::DEFAULT_MAPE_THRESHOLD_PERCENT)]
    pub threshold: f64,
    /// Coding policy used to evaluate each row (default as-entered).
    #[arg(long, default_value = "as-entered")]
    pub policy: String,
    /// Emit the machine-readable JSON report instead of text.
    #[arg(long)]
    pub json: bool,
    #[arg(long = "spec-file")]
    pub spec_files: Vec<PathBuf>,
}

#[derive(Subcommand)]
pub enum HistoryAction {
    /// Estimate and append the result to a profile's history.
    Record {
        #[arg(long)]
        profile_id: String,
        /// UTC seconds; defaults to now.
        #[arg(long)]
        timestamp: Option<i64>,
        #[command(flatten)]
        estimate: EstimateArgs,
    },
    /// Report consecutive and net changes for a profile.
    Trend {
        #[arg(long)]
        profile_id: String,
        /// Window start, UTC seconds (inclusive).
        #[arg(long)]
        from: Option<i64>,
        /// Window end, UTC seconds (inclusive).
        #[arg(long)]
        to: Option<i64>,
    },
}
