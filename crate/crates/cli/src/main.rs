mod error;
mod parse;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lff::harness::{
    generate_spiral, kfold_cv, load_csv, load_features, rmse, LabelColumn, Learner, DEFAULT_MARGIN,
};
use lff::trainer::{
    DEFAULT_BASIS_SIZE, DEFAULT_EPS_DET, DEFAULT_EPS_INNER, DEFAULT_MAX_INNER_SWEEPS, DEFAULT_MAX_OUTER,
};
use lff::{fit, Dataset, GpConfig, InnerRule, Lff, ModelFormat, TrainerConfig};

use error::{CliError, Context};

const LFF_GRID: &str = "10^-10..10^10 step 0.25";
const GP_WIDTH_GRID: &str = "10^-1..10^3 step 0.25";
const GP_PRECISION_GRID: &str = "10^-2..10^10 step 1";

/// Regression with linear factored functions.
///
/// Data files are comma- or whitespace-delimited tables with an optional
/// header line. UCI benchmark files are read from local paths, e.g. after
/// `curl -O https://archive.ics.uci.edu/ml/machine-learning-databases/00243/yacht_hydrodynamics.data`.
#[derive(Debug, Parser)]
#[command(name = "lff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write it together with its diagnostics.
    Train(TrainCmd),
    /// Print one prediction per line.
    Predict(PredictCmd),
    /// Print the RMSE of a model on a labelled file.
    Eval(EvalCmd),
    /// K-fold cross-validation over a hyper-parameter grid.
    Cv(CvCmd),
    /// Generate the two-dimensional spiral benchmark as CSV.
    Spiral(SpiralCmd),
    /// Integrate one input dimension out of a model.
    Marginalize(MarginalizeCmd),
    /// Point-wise product of two models.
    Product(ProductCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Binary,
}

impl From<Format> for ModelFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ModelFormat::Text,
            Format::Binary => ModelFormat::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rule {
    Exact,
    Unscaled,
}

impl From<Rule> for InnerRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Exact => InnerRule::Exact,
            Rule::Unscaled => InnerRule::Unscaled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LearnerArg {
    Lff,
    Gp,
}

#[derive(Debug, Args)]
struct TrainerFlags {
    /// Cosine basis functions per input dimension.
    #[arg(long, default_value_t = DEFAULT_BASIS_SIZE)]
    mk: usize,
    #[arg(long, default_value_t = DEFAULT_EPS_INNER)]
    eps_inner: f64,
    #[arg(long, default_value_t = DEFAULT_EPS_DET)]
    eps_det: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_OUTER)]
    max_outer: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_INNER_SWEEPS)]
    max_inner_sweeps: usize,
    /// Factor update rule of the inner loop.
    #[arg(long, value_enum, default_value_t = Rule::Exact)]
    inner_rule: Rule,
    /// Relative margin added around the training range when mapping inputs
    /// to the unit box.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TrainerFlags {
    fn config(&self, sigma2: Vec<f64>) -> TrainerConfig {
        let d = sigma2.len();
        TrainerConfig {
            sigma2,
            eps_inner: self.eps_inner,
            eps_det: self.eps_det,
            basis_sizes: vec![self.mk; d],
            max_outer: self.max_outer,
            max_inner_sweeps: self.max_inner_sweeps,
            seed: self.seed,
            cache_expansion: true,
            inner_rule: self.inner_rule.into(),
        }
    }
}

#[derive(Debug, Args)]
struct TrainCmd {
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to `<out>.diagnostics.json`.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// One noise variance for all dimensions or a comma list with one per
    /// dimension.
    #[arg(long, default_value = "1e-3")]
    sigma2: String,
    /// 0-based index or header name; defaults to the last column.
    #[arg(long, value_parser = parse::label_column)]
    label_col: Option<LabelColumn>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    trainer: TrainerFlags,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct PredictCmd {
    model: PathBuf,
    data: PathBuf,
    /// Column to drop before predicting; without it every column is an input.
    #[arg(long, value_parser = parse::label_column)]
    label_col: Option<LabelColumn>,
    /// Write predictions here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct EvalCmd {
    model: PathBuf,
    data: PathBuf,
    /// 0-based index or header name; defaults to the last column.
    #[arg(long, value_parser = parse::label_column)]
    label_col: Option<LabelColumn>,
}

#[derive(Debug, Args)]
struct CvCmd {
    data: PathBuf,
    /// JSON report; per-fold rows go to `--csv`, default `<out>.csv`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LearnerArg::Lff)]
    learner: LearnerArg,
    /// σ² values for lff, kernel widths for gp: "10^a..10^b step s" or a
    /// comma list. Defaults to the full published grids.
    #[arg(long)]
    grid: Option<String>,
    /// Shorthand for `--grid` with a comma list (lff only).
    #[arg(long, conflicts_with = "grid")]
    sigma2: Option<String>,
    /// Prior precisions of the gp learner.
    #[arg(long, default_value = GP_PRECISION_GRID)]
    precision_grid: String,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Support-set cap of the gp learner.
    #[arg(long, default_value_t = lff::gp::DEFAULT_MAX_SUPPORT)]
    max_support: usize,
    #[arg(long, value_parser = parse::label_column)]
    label_col: Option<LabelColumn>,
    #[command(flatten)]
    trainer: TrainerFlags,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct SpiralCmd {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    noise_dims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct MarginalizeCmd {
    model: PathBuf,
    /// 0-based input dimension to integrate out.
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct ProductCmd {
    a: PathBuf,
    b: PathBuf,
    /// Keep only the first N coefficients per dimension.
    #[arg(long)]
    lowpass: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or_default();
            eprintln!("{}", CliError::usage(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train(cmd) => train(cmd),
        Command::Predict(cmd) => predict(cmd),
        Command::Eval(cmd) => eval(cmd),
        Command::Cv(cmd) => cv(cmd),
        Command::Spiral(cmd) => spiral(cmd),
        Command::Marginalize(cmd) => marginalize(cmd),
        Command::Product(cmd) => product(cmd),
    }
}

fn train(cmd: TrainCmd) -> Result<(), CliError> {
    let diagnostics_path = cmd.diagnostics.clone().unwrap_or_else(|| suffixed(&cmd.out, ".diagnostics.json"));
    refuse_existing(&[&cmd.out, &diagnostics_path], cmd.force)?;
    let data = load_labelled(&cmd.data, cmd.label_col.as_ref())?;
    let sigma2 = parse::list(&cmd.sigma2).map_err(CliError::usage)?;
    let sigma2 = match sigma2.len() {
        1 => vec![sigma2[0]; data.dim()],
        d if d == data.dim() => sigma2,
        d => {
            return Err(CliError::usage(format!(
                "--sigma2 has {d} values for {} input dimensions",
                data.dim()
            )))
        }
    };
    let (_, unit) = data.fit_transform(cmd.trainer.margin).context("harness")?;
    let (model, diagnostics) = fit(&unit, &cmd.trainer.config(sigma2)).context("trainer")?;
    write_output(&cmd.out, &model.serialize(cmd.format.into()), cmd.force)?;
    let mut report = diagnostics.to_json();
    report.push('\n');
    write_output(&diagnostics_path, report.as_bytes(), cmd.force)?;
    println!(
        "m={} stop={} training_rmse={}",
        diagnostics.num_bases,
        serde_json::to_value(diagnostics.stop_reason)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default(),
        diagnostics.training_rmse
    );
    Ok(())
}

fn predict(cmd: PredictCmd) -> Result<(), CliError> {
    if let Some(out) = &cmd.out {
        refuse_existing(&[out], cmd.force)?;
    }
    let model = read_model(&cmd.model)?;
    let x = match &cmd.label_col {
        Some(label) => load_csv(&cmd.data, label).context("harness")?.x().clone(),
        None => load_features(&cmd.data).context("harness")?,
    };
    let predictions = model.predict(&x).context("lff")?;
    let mut text = String::with_capacity(predictions.len() * 24);
    for p in predictions {
        text.push_str(&format!("{p}\n"));
    }
    match &cmd.out {
        Some(out) => write_output(out, text.as_bytes(), cmd.force),
        None => print_stdout(&text),
    }
}

fn eval(cmd: EvalCmd) -> Result<(), CliError> {
    let model = read_model(&cmd.model)?;
    let data = load_labelled(&cmd.data, cmd.label_col.as_ref())?;
    let predictions = model.predict(data.x()).context("lff")?;
    let error = rmse(&predictions, data.y()).context("harness")?;
    println!("{error}");
    Ok(())
}

fn cv(cmd: CvCmd) -> Result<(), CliError> {
    let csv_path = cmd.csv.clone().unwrap_or_else(|| cmd.out.with_extension("csv"));
    refuse_existing(&[&cmd.out, &csv_path], cmd.force)?;
    let learner = match cmd.learner {
        LearnerArg::Lff => {
            let grid = match (&cmd.grid, &cmd.sigma2) {
                (Some(g), _) | (None, Some(g)) => parse::grid(g),
                (None, None) => parse::grid(LFF_GRID),
            }
            .map_err(CliError::usage)?;
            // Cross-validation broadcasts a single-dimension config to the data.
            Learner::lff(cmd.trainer.config(vec![0.0]), &grid)
        }
        LearnerArg::Gp => {
            if cmd.sigma2.is_some() {
                return Err(CliError::usage("--sigma2 applies to the lff learner only"));
            }
            let widths = parse::grid(cmd.grid.as_deref().unwrap_or(GP_WIDTH_GRID)).map_err(CliError::usage)?;
            let precisions = parse::grid(&cmd.precision_grid).map_err(CliError::usage)?;
            let base = GpConfig {
                max_support: cmd.max_support,
                seed: cmd.trainer.seed,
                ..GpConfig::new(1.0, 1.0)
            };
            Learner::gp(base, &widths, &precisions)
        }
    }
    .with_margin(cmd.trainer.margin);
    let data = load_labelled(&cmd.data, cmd.label_col.as_ref())?;
    let module = match cmd.learner {
        LearnerArg::Lff => "harness",
        LearnerArg::Gp => "gp_baseline",
    };
    let report = kfold_cv(&data, cmd.folds, &learner, cmd.trainer.seed, cmd.workers).context(module)?;
    let mut json = report.to_json();
    json.push('\n');
    write_output(&cmd.out, json.as_bytes(), cmd.force)?;
    write_output(&csv_path, report.to_csv().as_bytes(), cmd.force)?;
    println!(
        "best={} rmse={} ± {} m={} ± {}",
        serde_json::to_string(&report.params).expect("serializes"),
        report.mean_rmse,
        report.std_rmse,
        report.mean_m,
        report.std_m
    );
    Ok(())
}

fn spiral(cmd: SpiralCmd) -> Result<(), CliError> {
    if let Some(out) = &cmd.out {
        refuse_existing(&[out], cmd.force)?;
    }
    let data = generate_spiral(cmd.n, cmd.noise_dims, cmd.seed).context("harness")?;
    let text = to_csv(&data);
    match &cmd.out {
        Some(out) => write_output(out, text.as_bytes(), cmd.force),
        None => print_stdout(&text),
    }
}

fn marginalize(cmd: MarginalizeCmd) -> Result<(), CliError> {
    refuse_existing(&[&cmd.out], cmd.force)?;
    let model = read_model(&cmd.model)?;
    let reduced = model.marginalize(cmd.dim).context("lff")?;
    write_output(&cmd.out, &reduced.serialize(cmd.format.into()), cmd.force)
}

fn product(cmd: ProductCmd) -> Result<(), CliError> {
    refuse_existing(&[&cmd.out], cmd.force)?;
    let a = read_model(&cmd.a)?;
    let b = read_model(&cmd.b)?;
    let p = a.pointwise_product(&b, cmd.lowpass).context("lff")?;
    write_output(&cmd.out, &p.serialize(cmd.format.into()), cmd.force)
}

fn load_labelled(path: &Path, label: Option<&LabelColumn>) -> Result<Dataset, CliError> {
    load_csv(path, label.unwrap_or(&LabelColumn::Last)).context("harness")
}

fn read_model(path: &Path) -> Result<Lff, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::new("lff", "io", format!("cannot read {}: {e}", path.display())))?;
    Lff::deserialize(&bytes).context("lff")
}

fn to_csv(data: &Dataset) -> String {
    let mut header: Vec<String> = match data.names() {
        Some(names) => names.to_vec(),
        None => (1..=data.dim()).map(|k| format!("x{k}")).collect(),
    };
    header.push("y".into());
    let mut text = header.join(",");
    text.push('\n');
    for (t, y) in data.y().iter().enumerate() {
        for v in data.x().row(t).iter() {
            text.push_str(&format!("{v},"));
        }
        text.push_str(&format!("{y}\n"));
    }
    text
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Fails before any work is done if an output would be overwritten.
fn refuse_existing(paths: &[&Path], force: bool) -> Result<(), CliError> {
    if force {
        return Ok(());
    }
    match paths.iter().find(|p| p.exists()) {
        Some(p) => Err(exists_error(p)),
        None => Ok(()),
    }
}

fn exists_error(path: &Path) -> CliError {
    CliError::new(
        "cli",
        "exists",
        format!("{} exists; pass --force to overwrite", path.display()),
    )
}

fn write_output(path: &Path, bytes: &[u8], force: bool) -> Result<(), CliError> {
    let mut options = OpenOptions::new();
    options.write(true);
    if force {
        options.create(true).truncate(true);
    } else {
        options.create_new(true);
    }
    let mut file = options.open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::AlreadyExists => exists_error(path),
        _ => CliError::new("cli", "io", format!("cannot write {}: {e}", path.display())),
    })?;
    file.write_all(bytes)
        .map_err(|e| CliError::new("cli", "io", format!("cannot write {}: {e}", path.display())))
}

fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::new("cli", "io", format!("cannot write to stdout: {e}"))),
    }
}
