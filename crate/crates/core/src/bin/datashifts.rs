//! Command-line front end: shift estimates and the error bound from CSV
//! files, and the synthetic experiment tables.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use datashifts::bound::{datashifts, empirical_error, DataShiftsReport};
use datashifts::lipschitz::{layered_hypothesis_lipschitz, LipschitzSpec, LossSpec};
use datashifts::measures::{read_labeled_csv, Domain, LabeledSample};
use datashifts::ot::SolverConfig;
use datashifts::seed::child_seed;
use datashifts::shift::{estimate_shifts, estimate_xshift, plugin_xshift, EstimatorKind, ShiftOptions};
use datashifts::synth::{
    cpt_concentration_summary, fig1_cells, plot_fig1, run_bound_validation, run_concentration, run_cpt_concentration,
    run_fig1, run_random_bound_validation, summarize_concentration, write_bound_csv, write_fig1_csv, write_rows_csv,
    CptTaskSpec, SyntheticTaskSpec, ValidationSummary,
};
use datashifts::{Error, Result};
use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "datashifts",
    version,
    about = "Covariate and concept shift estimates with an error bound"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Covariate shift Ŝ_Cov between two CSV samples
    Xshift(XshiftArgs),
    /// Covariate and concept shift (labels required)
    Yshift(SampleArgs),
    /// Both shifts and, given Lipschitz constants and a source error, the target error bound
    Bound(BoundArgs),
    /// Plug-in vs debiased sweeps over sample size, dimension and distance
    Fig1(Fig1Args),
    /// Checks the bound on synthetic tasks
    ValidateBound(ValidateArgs),
    /// Deviation of an estimator from its oracle as n grows
    Concentration(ConcentrationArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    #[value(alias = "plug_in")]
    PlugIn,
    Debiased,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::PlugIn => EstimatorKind::PlugIn,
            EstimatorArg::Debiased => EstimatorKind::Debiased,
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    /// Entropic regularization; 0 selects the exact solver (small inputs only)
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iterations: usize,
    /// L1 marginal violation accepted at convergence
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let config = SolverConfig {
            beta: self.beta,
            max_iterations: self.max_iterations,
            marginal_tolerance: self.tolerance,
        };
        if self.beta != 0.0 {
            config.validate()?;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Comma-separated label column names; the other columns are covariates
    #[arg(long, value_delimiter = ',')]
    label_cols: Vec<String>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Half splits averaged by the debiased estimator
    #[arg(long, default_value_t = 1)]
    num_splits: usize,
    #[arg(long, value_enum, default_value = "debiased")]
    estimator: EstimatorArg,
    /// Output file (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SampleArgs {
    fn options(&self) -> Result<ShiftOptions> {
        Ok(ShiftOptions {
            solver: self.solver.config()?,
            estimator: self.estimator.into(),
            num_splits: self.num_splits,
            seed: self.seed,
            ..Default::default()
        })
    }

    fn read(&self, extra: Option<&str>) -> Result<(Loaded, Loaded)> {
        Ok((
            load(&self.source, &self.label_cols, extra, Domain::Source)?,
            load(&self.target, &self.label_cols, extra, Domain::Target)?,
        ))
    }
}

#[derive(Args)]
struct XshiftArgs {
    #[command(flatten)]
    sample: SampleArgs,
    /// Also write the plug-in coupling as sparse `row,col,mass` CSV
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    sample: SampleArgs,
    /// Lipschitz constants as inline JSON or a path to a JSON file
    #[arg(long)]
    lipschitz: Option<String>,
    /// Source empirical error ε̂_S
    #[arg(long, conflicts_with = "prediction_col")]
    source_error: Option<f64>,
    /// Column holding h(x); ε̂_S (and ε̂_T when the target has it) are computed with the loss
    #[arg(long)]
    prediction_col: Option<String>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Base seed; trial seeds are derived from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeds per cell
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds).map(|k| child_seed(self.seed, k)).collect()
    }
}

/// The sample-size and distance sweeps run at d = 70, the dimension and
/// distance sweeps at n = 1000. A list flag given without values skips its
/// sweep.
#[derive(Args)]
struct Fig1Args {
    #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [2, 10, 30, 50, 70])]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [250, 500, 1000, 2000, 4000])]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0])]
    offsets: Vec<f64>,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    beta: f64,
    #[command(flatten)]
    run: ExperimentArgs,
    /// Also render the three sweeps to an SVG file
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Task JSON file; without it, each seed draws its own random task
    #[arg(long)]
    task: Option<PathBuf>,
    /// Draws per seed for a task file
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Per-domain sample size of random tasks
    #[arg(long, default_value_t = 400)]
    sample_size: usize,
    #[arg(long, value_enum, default_value = "debiased")]
    estimator: EstimatorArg,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    run: ExperimentArgs,
    /// Summary JSON file (stderr if absent)
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConcentrationKind {
    /// Debiased Ŝ_Cov against ‖T‖
    Xshift,
    /// Ŝ_Cpt against the pair-shift oracle under the same plan
    Cpt,
}

#[derive(Args)]
struct ConcentrationArgs {
    #[arg(long, value_enum, default_value = "xshift")]
    kind: ConcentrationKind,
    #[arg(long, default_value_t = 70)]
    dim: usize,
    #[arg(long, default_value_t = 6.0)]
    offset: f64,
    /// Labelled task JSON (required for `--kind cpt`)
    #[arg(long)]
    task: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [250, 500, 1000, 2000, 4000])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    beta: f64,
    #[command(flatten)]
    run: ExperimentArgs,
    /// Per-size median table as CSV (stderr if absent)
    #[arg(long)]
    summary: Option<PathBuf>,
}

/// `--lipschitz` accepts explicit constants, or a loss from the catalog with
/// `l_h` given directly or through per-layer spectral norms.
#[derive(Deserialize)]
#[serde(untagged)]
enum LipschitzInput {
    Constants(LipschitzSpec),
    Loss {
        loss: LossSpec,
        #[serde(default)]
        l_h: Option<f64>,
        #[serde(default)]
        hypothesis: Option<LayeredHypothesis>,
    },
}

#[derive(Deserialize)]
struct LayeredHypothesis {
    weight_spectral_norms: Vec<f64>,
    #[serde(default)]
    activation_constants: Vec<f64>,
}

impl LipschitzInput {
    fn parse(raw: &str) -> Result<Self> {
        let text = if raw.trim_start().starts_with('{') {
            raw.to_owned()
        } else {
            std::fs::read_to_string(raw)?
        };
        Ok(serde_json::from_str(&text)?)
    }

    fn resolve(self) -> Result<(LipschitzSpec, Option<LossSpec>)> {
        match self {
            LipschitzInput::Constants(spec) => Ok((spec, None)),
            LipschitzInput::Loss { loss, l_h, hypothesis } => {
                let l_h = match (l_h, hypothesis) {
                    (Some(l), None) => l,
                    (None, Some(h)) => {
                        let acts = if h.activation_constants.is_empty() {
                            vec![1.0; h.weight_spectral_norms.len().saturating_sub(1)]
                        } else {
                            h.activation_constants
                        };
                        layered_hypothesis_lipschitz(&h.weight_spectral_norms, &acts)?
                    }
                    _ => {
                        return Err(Error::InvalidInput(
                            "--lipschitz with a loss needs exactly one of `l_h` or `hypothesis`".into(),
                        ))
                    }
                };
                Ok((LipschitzSpec::for_loss(&loss, l_h)?, Some(loss)))
            }
        }
    }
}

/// A sample plus, optionally, one prediction column split off the labels.
struct Loaded {
    sample: LabeledSample,
    predictions: Option<Array2<f64>>,
}

fn load(path: &Path, label_cols: &[String], prediction_col: Option<&str>, domain: Domain) -> Result<Loaded> {
    let Some(pred) = prediction_col else {
        return Ok(Loaded {
            sample: read_labeled_csv(path, label_cols, domain)?,
            predictions: None,
        });
    };
    let mut cols = label_cols.to_vec();
    cols.push(pred.to_owned());
    let raw = match read_labeled_csv(path, &cols, domain) {
        Ok(raw) => raw,
        // the target may come without predictions
        Err(Error::InvalidInput(msg)) if domain == Domain::Target && msg.contains(&format!("`{pred}`")) => {
            return load(path, label_cols, None, domain);
        }
        Err(e) => return Err(e),
    };
    let all = raw.labels().expect("prediction column requested");
    let k = label_cols.len();
    let labels = (k > 0).then(|| all.slice(s![.., ..k]).to_owned());
    Ok(Loaded {
        sample: LabeledSample::new(raw.covariates().to_owned(), labels, domain)?,
        predictions: Some(all.slice(s![.., k..]).to_owned()),
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn xshift(args: &XshiftArgs) -> Result<()> {
    let sample = &args.sample;
    let (source, target) = sample.read(None)?;
    let options = sample.options()?;
    let report = estimate_xshift(&source.sample, &target.sample, &options)?;
    if let Some(path) = &args.plan_out {
        let (_, plan) = plugin_xshift(
            &source.sample,
            &target.sample,
            options.covariate_metric,
            &options.solver,
        )?;
        plan.write_csv(BufWriter::new(File::create(path)?), 0.0)?;
    }
    write_json(&report, sample.out.as_deref())
}

fn yshift(args: &SampleArgs) -> Result<()> {
    if args.label_cols.is_empty() {
        return Err(Error::InvalidConfig("yshift needs --label-cols".into()));
    }
    let (source, target) = args.read(None)?;
    let report = estimate_shifts(&source.sample, &target.sample, &args.options()?)?;
    write_json(&report, args.out.as_deref())
}

fn bound(args: &BoundArgs) -> Result<()> {
    let sample = &args.sample;
    let (source, target) = sample.read(args.prediction_col.as_deref())?;
    let (lipschitz, loss) = match &args.lipschitz {
        Some(raw) => {
            let (spec, loss) = LipschitzInput::parse(raw)?.resolve()?;
            (Some(spec), loss)
        }
        None => (None, None),
    };
    let error_of = |l: &Loaded| -> Result<Option<f64>> {
        match (&l.predictions, &loss) {
            (Some(p), Some(loss)) => empirical_error(&l.sample, p.view(), loss).map(Some),
            (Some(_), None) => Err(Error::InvalidInput(
                "--prediction-col needs a loss in --lipschitz to compute errors".into(),
            )),
            (None, _) => Ok(None),
        }
    };
    let source_error = match args.source_error {
        Some(e) => Some(e),
        None => error_of(&source)?,
    };
    let target_error = error_of(&target)?;
    let mut report: DataShiftsReport = datashifts(
        &source.sample,
        &target.sample,
        &sample.options()?,
        lipschitz,
        source_error,
    )?;
    if let Some(b) = report.bound.as_mut() {
        b.target_error = target_error;
    }
    write_json(&report, sample.out.as_deref())
}

fn fig1(args: &Fig1Args) -> Result<()> {
    let cells = fig1_cells(&args.dims, &args.sizes, &args.offsets);
    let rows = run_fig1(&cells, args.beta, &args.run.seed_list())?;
    write_fig1_csv(&rows, output(args.run.out.as_deref())?)?;
    if let Some(path) = &args.plot {
        plot_fig1(&rows, path)?;
    }
    Ok(())
}

fn validate_bound(args: &ValidateArgs) -> Result<()> {
    let options = ShiftOptions {
        solver: args.solver.config()?,
        estimator: args.estimator.into(),
        ..Default::default()
    };
    let rows = match &args.task {
        Some(path) => {
            let task: SyntheticTaskSpec = serde_json::from_reader(File::open(path)?)?;
            run_bound_validation(&task, args.trials, &args.run.seed_list(), &options)?
        }
        None => run_random_bound_validation(args.run.seeds as usize, args.sample_size, args.run.seed, &options)?,
    };
    write_bound_csv(&rows, output(args.run.out.as_deref())?)?;
    let summary = ValidationSummary::of(&rows);
    match &args.summary {
        Some(path) => write_json(&summary, Some(path)),
        None => {
            eprintln!("{}", serde_json::to_string(&summary)?);
            Ok(())
        }
    }
}

fn concentration(args: &ConcentrationArgs) -> Result<()> {
    let config = SolverConfig::with_beta(args.beta);
    let seeds = args.run.seed_list();
    let summary = match args.kind {
        ConcentrationKind::Xshift => {
            let rows = run_concentration(args.dim, args.offset, &args.sizes, &seeds, &config)?;
            write_rows_csv(
                &rows,
                &["n", "seed", "estimate", "truth", "abs_deviation"],
                output(args.run.out.as_deref())?,
            )?;
            summarize_concentration(&rows)
        }
        ConcentrationKind::Cpt => {
            let path = args
                .task
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("--kind cpt needs --task".into()))?;
            let task: CptTaskSpec = serde_json::from_reader(File::open(path)?)?;
            let rows = run_cpt_concentration(&task, &args.sizes, &seeds, &config)?;
            let header = ["n", "seed", "s_cpt", "oracle", "deviation", "bias_ceiling"];
            write_rows_csv(&rows, &header, output(args.run.out.as_deref())?)?;
            cpt_concentration_summary(&rows)
        }
    };
    let header = ["n", "seeds", "median_abs_deviation"];
    match &args.summary {
        Some(path) => write_rows_csv(&summary, &header, output(Some(path))?),
        None => write_rows_csv(&summary, &header, io::stderr()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Xshift(a) => xshift(a),
        Command::Yshift(a) => yshift(a),
        Command::Bound(a) => bound(a),
        Command::Fig1(a) => fig1(a),
        Command::ValidateBound(a) => validate_bound(a),
        Command::Concentration(a) => concentration(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // invalid settings are usage errors, like bad flags
        Err(e @ Error::InvalidConfig(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
