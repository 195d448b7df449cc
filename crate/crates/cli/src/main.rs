use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gnystrom::harness::{
    self, emit_report, learn, load_dataset, parse_config, parse_grid, prepare, sample_labeled,
    Bandwidth, ConfigFile, DataFormat, Dataset, ExperimentConfig, LambdaChoice, Method,
    ReportFormat,
};
use gnystrom::{
    alignment_factors, select, select_lambda, DataMatrix, Error, InductiveModel, LambdaGrid,
    LandmarkMethod, LearnConfig, ModelMetadata, SideInformation, DEFAULT_PINV_TOL,
};
use nalgebra::DMatrix;

#[derive(Parser)]
#[command(name = "gnystrom", version, about = "Generalized Nystrom low-rank kernel decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select landmark points and write them as CSV.
    Landmarks(LandmarksArgs),
    /// Learn a dictionary from labeled samples and save an inductive model.
    Fit(FitArgs),
    /// Embed samples with a saved model.
    Embed(EmbedArgs),
    /// Run a repeated classification experiment and print a report.
    Evaluate(EvaluateArgs),
    /// Score a grid of lambda values by kernel alignment on one labeled split.
    SelectLambda(SelectArgs),
    /// Write the synthetic data set described by a config file as CSV.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: DataFormat,
}

#[derive(Args)]
struct LandmarksArgs {
    #[command(flatten)]
    data: InputArgs,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "kmeans")]
    method: LandmarkMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: InputArgs,
    #[arg(long)]
    labels_per_class: usize,
    /// Landmark count; defaults to max(10, 10% of n) capped at 500.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "kmeans")]
    method: LandmarkMethod,
    /// RBF bandwidth; defaults to the mean pairwise squared distance.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, conflicts_with = "lambda_grid")]
    lambda: Option<f64>,
    /// Comma-separated candidates, or `default`.
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    model_out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: InputArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// Data file; may be omitted when the config defines `data.kind`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: DataFormat,
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    source: ConfigArgs,
    #[arg(long, default_value = "generalized")]
    method: Method,
    #[arg(long, default_value = "text")]
    report: ReportFormat,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    source: ConfigArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Landmarks(a) => landmarks(a),
        Command::Fit(a) => fit(a),
        Command::Embed(a) => embed(a),
        Command::Evaluate(a) => evaluate(a),
        Command::SelectLambda(a) => select_lambda_cmd(a),
        Command::Generate(a) => generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn write_rows(path: &Path, rows: impl Iterator<Item = (Option<i64>, Vec<f64>)>) -> Result<(), Error> {
    let mut out = String::new();
    for (label, values) in rows {
        let mut fields: Vec<String> = Vec::with_capacity(values.len() + 1);
        if let Some(l) = label {
            fields.push(l.to_string());
        }
        fields.extend(values.iter().map(|v| v.to_string()));
        writeln!(out, "{}", fields.join(",")).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn matrix_rows(m: &DMatrix<f64>) -> impl Iterator<Item = Vec<f64>> + '_ {
    m.row_iter().map(|r| r.iter().copied().collect())
}

fn data_rows(x: &DataMatrix) -> impl Iterator<Item = Vec<f64>> + '_ {
    x.iter_rows().map(|r| r.to_vec())
}

fn load_source(src: &ConfigArgs) -> Result<(Dataset, ConfigFile), Error> {
    let file = parse_config(&std::fs::read_to_string(&src.config)?)?;
    let ds = match (&src.input, &file.generator) {
        (Some(path), _) => load_dataset(path, src.format)?,
        (None, Some(g)) => g.generate()?,
        (None, None) => {
            return Err(Error::Input(
                "no --input given and the config defines no data.kind".into(),
            ))
        }
    };
    Ok((ds, file))
}

fn landmarks(a: LandmarksArgs) -> Result<(), Error> {
    let ds = load_dataset(&a.data.input, a.data.format)?;
    let z = select(&ds.x, a.m, a.method, a.seed)?;
    write_rows(&a.out, data_rows(&z.points).map(|r| (None, r)))?;
    println!("wrote {} landmarks ({:?}, seed {}) to {}", z.len(), z.method, z.seed, a.out.display());
    Ok(())
}

fn fit(a: FitArgs) -> Result<(), Error> {
    let ds = load_dataset(&a.data.input, a.data.format)?;
    let classes = ds.classes().len();
    let labels = sample_labeled(&ds, a.labels_per_class * classes, a.seed)?;
    let m = a.m.unwrap_or_else(|| harness::default_landmark_count(ds.len()));
    let bandwidth = a.bandwidth.map_or(Bandwidth::Heuristic, Bandwidth::Fixed);
    let prep = prepare(&ds.x, m, a.method, bandwidth, a.seed, DEFAULT_PINV_TOL)?;
    let choice = match (a.lambda, &a.lambda_grid) {
        (Some(l), _) => LambdaChoice::Fixed(l),
        (None, Some(g)) => LambdaChoice::Grid(parse_grid(g)?),
        (None, None) => LambdaChoice::Grid(LambdaGrid::default_log()),
    };
    let side = SideInformation::from_labels(&labels);
    let learned = learn(&prep.core, &side, &choice, &LearnConfig::new(1.0))?;
    let r = &learned.report;
    let summary = format!(
        "{} iterations, converged by {}, final gradient-mapping norm {:e}",
        r.iterations, r.converged_by, r.final_grad_norm
    );
    let meta = ModelMetadata {
        lambda: Some(learned.lambda),
        solver_summary: summary.clone(),
        created_unix: gnystrom::model::unix_now(),
    };
    let model = InductiveModel::new(prep.landmarks.points, prep.kernel, learned.s, meta)?;
    model.save(&a.model_out)?;
    println!(
        "n = {}, m = {m}, {} labels, bandwidth {:.6}, lambda {}: {summary}",
        ds.len(),
        labels.len(),
        prep.kernel.bandwidth(),
        learned.lambda
    );
    println!("model (rank {}) saved to {}", model.rank(), a.model_out.display());
    Ok(())
}

fn embed(a: EmbedArgs) -> Result<(), Error> {
    let model = InductiveModel::load(&a.model)?;
    let ds = load_dataset(&a.data.input, a.data.format)?;
    let g = model.embed(&ds.x)?;
    write_rows(&a.out, ds.y.iter().map(|&l| Some(l)).zip(matrix_rows(&g)))?;
    println!("embedded {} samples into {} dimensions: {}", g.nrows(), g.ncols(), a.out.display());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<(), Error> {
    let (ds, file) = load_source(&a.source)?;
    let report = harness::run_experiment(&ds, &file.experiment, a.method)?;
    print!("{}", emit_report(&report, a.report)?);
    Ok(())
}

fn select_lambda_cmd(a: SelectArgs) -> Result<(), Error> {
    let (ds, file) = load_source(&a.source)?;
    let cfg: ExperimentConfig = file.experiment;
    cfg.validate(&ds)?;
    let grid = match &cfg.lambda {
        LambdaChoice::Grid(g) => g.clone(),
        LambdaChoice::Fixed(l) => LambdaGrid::new(vec![*l])?,
    };
    let seed = harness::repeat_seed(cfg.seed, 0);
    let labels = sample_labeled(&ds, cfg.labeled_per_run, seed)?;
    let prep = prepare(
        &ds.x,
        cfg.landmarks_for(ds.len()),
        cfg.landmark_method,
        cfg.bandwidth,
        seed,
        cfg.pinv_tol,
    )?;
    let side = SideInformation::from_labels(&labels);
    let rep = select_lambda(&prep.core, &side, &grid, &cfg.learn)?;
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6}"));
    println!("{:>10}  {:>10}  {:>10}  {:>10}  {:>6}  converged_by", "lambda", "rho_prior", "rho_align", "criterion", "iters");
    for r in &rep.records {
        let mark = if r.lambda == rep.chosen_lambda { "  <- chosen" } else { "" };
        let crit = if r.criterion.is_finite() { format!("{:.6}", r.criterion) } else { "-inf".into() };
        println!(
            "{:>10e}  {:>10}  {:>10}  {:>10}  {:>6}  {}{mark}",
            r.lambda,
            fmt(r.rho_prior),
            fmt(r.rho_align),
            crit,
            r.solver.iterations,
            r.solver.converged_by
        );
    }
    let (rp, ra) = alignment_factors(&prep.core, &side, &rep.chosen_state.s);
    println!("chosen lambda {} (rho_prior {}, rho_align {})", rep.chosen_lambda, fmt(rp), fmt(ra));
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<(), Error> {
    let file = parse_config(&std::fs::read_to_string(&a.config)?)?;
    let g = file
        .generator
        .ok_or_else(|| Error::Input("config defines no data.kind".into()))?;
    let ds = g.generate()?;
    write_rows(&a.out, ds.y.iter().map(|&l| Some(l)).zip(data_rows(&ds.x)))?;
    println!("wrote {} samples with {} features to {}", ds.len(), ds.x.cols(), a.out.display());
    Ok(())
}
