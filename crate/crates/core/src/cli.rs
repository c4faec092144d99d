//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or model errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{self, Dataset, LabelIndex, PartitionSizes};
use crate::ensemble::{
    ablation_table, describe_spec, evaluate_subsets, grid_search_c, paper_feature_specs,
    train_ensemble, EnsembleConfig, ScoreTable,
};
use crate::error::Error;
use crate::eval;
use crate::features::FeatureSpec;
use crate::model_file::{self, ModelFile};
use crate::scalar::Scalar;
use crate::svm::{top_features, Loss, TrainConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::FeatureSpec(_) => CliError::Usage(e.to_string()),
            e => CliError::Data(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "dialect-id",
    version,
    about = "Dialect identification with TF-IDF n-gram features and SVM ensembles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an ensemble and write a model file.
    Train(TrainArgs),
    /// Predict labels for a text file.
    Predict(PredictArgs),
    /// Score a prediction file against gold labels.
    Evaluate(EvaluateArgs),
    /// Score a uniform random baseline against gold labels.
    Baseline(BaselineArgs),
    /// Select C by dev macro F1 over a grid.
    Gridsearch(GridArgs),
    /// Score one single-member ensemble per feature spec on dev.
    Ablation(AblationArgs),
    /// Score candidate member subsets on dev.
    Subsets(SubsetArgs),
    /// List the most informative features of one label.
    TopFeatures(TopFeaturesArgs),
    /// Write a seeded synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Tsv,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// SVM regularization parameter C
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
    /// Loss: hinge or squared_hinge
    #[arg(long, default_value = "squared_hinge")]
    pub loss: String,
    /// Projected-gradient stopping tolerance
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Maximum solver epochs
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    /// Seed for the solver's instance permutation
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Do not fit a bias term [default: bias fitted]
    #[arg(long)]
    pub no_bias: bool,
    /// Minimum document frequency for vocabulary features
    #[arg(long, default_value_t = 1)]
    pub min_df: usize,
    /// Keep letter case when extracting features [default: lowercase]
    #[arg(long)]
    pub no_lowercase: bool,
    /// Accept n-gram orders outside char 1-8, word 1-3, skip 1-3 [default: off]
    #[arg(long)]
    pub allow_any_n: bool,
    /// Floating point precision of the model
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    pub precision: Precision,
}

impl SolverArgs {
    fn train_config<F: Scalar>(&self) -> CliResult<TrainConfig<F>> {
        let loss: Loss = self
            .loss
            .parse()
            .map_err(|e: Error| CliError::Usage(e.to_string()))?;
        let config = TrainConfig {
            c: F::from_f64_lossy(self.c),
            loss,
            tol: F::from_f64_lossy(self.tol),
            max_epochs: self.max_epochs,
            seed: self.seed,
            fit_bias: !self.no_bias,
        };
        config
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }

    fn specs(&self, list: &str) -> CliResult<Vec<FeatureSpec>> {
        parse_features(list, self.allow_any_n, !self.no_lowercase)
    }
}

/// Parses a `--features` value. `all` expands to the 14-spec inventory.
pub fn parse_features(list: &str, allow_any_n: bool, lowercase: bool) -> CliResult<Vec<FeatureSpec>> {
    let mut specs = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item == "all" {
            specs.extend(paper_feature_specs());
            continue;
        }
        let spec: FeatureSpec = item
            .parse()
            .map_err(|_| CliError::Usage(format!("bad feature spec `{item}` (expected char:N, word:N or skip:K)")))?;
        if !allow_any_n && !spec.in_standard_range() {
            return Err(CliError::Usage(format!(
                "feature spec `{item}` is outside the supported range \
                 (char:1-8, word:1-3, skip:1-3); pass --allow-any-n to override"
            )));
        }
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(CliError::Usage("no feature specs given".into()));
    }
    let specs: Vec<FeatureSpec> = specs.into_iter().map(|s| s.with_lowercase(lowercase)).collect();
    let distinct: BTreeSet<_> = specs.iter().collect();
    if distinct.len() != specs.len() {
        return Err(CliError::Usage(format!("duplicate feature spec in `{list}`")));
    }
    Ok(specs)
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Labeled training TSV
    #[arg(long)]
    pub train: PathBuf,
    /// Comma-separated feature specs (char:N, word:N, skip:K, or `all`)
    #[arg(long, default_value = "char:2,char:3,char:4,char:5")]
    pub features: String,
    /// Output model file
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled TSV appended to the training data [default: none]
    #[arg(long)]
    pub merge_dev: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Model file written by `train`
    #[arg(long)]
    pub model: PathBuf,
    /// Input TSV; a label column, if present, is ignored
    #[arg(long)]
    pub input: PathBuf,
    /// Output file, one label per line
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Gold labels: labeled TSV or one label per line
    #[arg(long)]
    pub gold: PathBuf,
    /// Predicted labels, one per line
    #[arg(long)]
    pub pred: PathBuf,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    /// Gold labels: labeled TSV or one label per line
    #[arg(long)]
    pub gold: PathBuf,
    /// Seed for the uniform draws
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the baseline predictions here [default: none]
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Labeled training TSV
    #[arg(long)]
    pub train: PathBuf,
    /// Labeled development TSV
    #[arg(long)]
    pub dev: PathBuf,
    /// Ensemble members to tune
    #[arg(long, default_value = "char:4")]
    pub features: String,
    /// Comma-separated C values
    #[arg(long, default_value = "0.001,0.01,0.1,1,10,100,1000")]
    pub grid: String,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AblationArgs {
    /// Labeled training TSV
    #[arg(long)]
    pub train: PathBuf,
    /// Labeled development TSV
    #[arg(long)]
    pub dev: PathBuf,
    /// Feature specs to score one at a time
    #[arg(long, default_value = "all")]
    pub features: String,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SubsetArgs {
    /// Labeled training TSV
    #[arg(long)]
    pub train: PathBuf,
    /// Labeled development TSV
    #[arg(long)]
    pub dev: PathBuf,
    /// Candidate subsets separated by `;`, members by `,`
    #[arg(long, default_value = "char:4;char:3,char:4,char:5;char:2,char:3,char:4,char:5")]
    pub subsets: String,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TopFeaturesArgs {
    /// Model file written by `train`
    #[arg(long)]
    pub model: PathBuf,
    /// Label to report
    #[arg(long)]
    pub label: String,
    /// Number of features
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Member to inspect, by spec [default: first member]
    #[arg(long)]
    pub member: Option<String>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Generator seed
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory (train.tsv, dev.tsv, test.tsv, markers.tsv)
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated label names
    #[arg(long, default_value = "BE,BS,LU,ZH")]
    pub labels: String,
    /// Training instances per label
    #[arg(long, default_value_t = 400)]
    pub train_per_label: usize,
    /// Development instances per label
    #[arg(long, default_value_t = 100)]
    pub dev_per_label: usize,
    /// Test instances per label
    #[arg(long, default_value_t = 100)]
    pub test_per_label: usize,
    /// Fraction of words carrying a label marker
    #[arg(long, default_value_t = 0.8)]
    pub separability: f64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Train(a) => match a.solver.precision {
            Precision::F32 => cmd_train::<f32>(a, out),
            Precision::F64 => cmd_train::<f64>(a, out),
        },
        Command::Predict(a) => cmd_predict(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Baseline(a) => cmd_baseline(a, out),
        Command::Gridsearch(a) => match a.solver.precision {
            Precision::F32 => cmd_gridsearch::<f32>(a, out),
            Precision::F64 => cmd_gridsearch::<f64>(a, out),
        },
        Command::Ablation(a) => match a.solver.precision {
            Precision::F32 => cmd_ablation::<f32>(a, out),
            Precision::F64 => cmd_ablation::<f64>(a, out),
        },
        Command::Subsets(a) => match a.solver.precision {
            Precision::F32 => cmd_subsets::<f32>(a, out),
            Precision::F64 => cmd_subsets::<f64>(a, out),
        },
        Command::TopFeatures(a) => cmd_top_features(a, out),
        Command::Synth(a) => cmd_synth(a, out),
    }
}

fn cmd_train<F: Scalar>(args: &TrainArgs, out: &mut dyn Write) -> CliResult {
    let specs = args.solver.specs(&args.features)?;
    let train_config = args.solver.train_config::<F>()?;
    let mut train = corpus::load_tsv(&args.train, true)?;
    if let Some(dev) = &args.merge_dev {
        train = train.concat(&corpus::load_tsv(dev, true)?);
    }
    let config = EnsembleConfig {
        specs,
        train: train_config,
        min_df: args.solver.min_df,
    };
    let model = train_ensemble(&train, &config)?;
    writeln!(
        out,
        "trained {} member(s) on {} instances, labels {}",
        model.members().len(),
        train.len(),
        model.label_index().labels().join(",")
    )?;
    for m in model.members() {
        let epochs: Vec<String> = model
            .label_index()
            .labels()
            .iter()
            .zip(m.model.binary_models())
            .map(|(l, b)| format!("{l}={}", b.epochs()))
            .collect();
        writeln!(
            out,
            "  {:<8} vocabulary {:>8}  epochs {}",
            m.spec.to_string(),
            m.tfidf.dim(),
            epochs.join(" ")
        )?;
    }
    ModelFile::new(config, model).save(&args.model)?;
    writeln!(out, "model written to {}", args.model.display())?;
    Ok(())
}

enum LoadedModel {
    F32(ModelFile<f32>),
    F64(ModelFile<f64>),
}

fn load_model(path: &Path) -> CliResult<LoadedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(match model_file::peek_scalar(&text)?.as_str() {
        "f32" => LoadedModel::F32(ModelFile::from_text(&text)?),
        "f64" => LoadedModel::F64(ModelFile::from_text(&text)?),
        other => {
            return Err(CliError::Data(Error::ModelFormat {
                line: 3,
                message: format!("unknown scalar `{other}`"),
            }))
        }
    })
}

fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> CliResult {
    let model = load_model(&args.model)?;
    let docs = corpus::load_texts(&args.input)?;
    let predictions = match &model {
        LoadedModel::F32(m) => m.ensemble.predict(&docs)?,
        LoadedModel::F64(m) => m.ensemble.predict(&docs)?,
    };
    corpus::save_predictions(&predictions, &args.output)?;
    writeln!(
        out,
        "wrote {} prediction(s) to {}",
        predictions.len(),
        args.output.display()
    )?;
    Ok(())
}

/// Gold labels from a labeled TSV, or from a plain one-label-per-line file
/// when no line contains a tab.
fn load_gold(path: &Path) -> CliResult<Vec<String>> {
    let bytes = fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if bytes.contains(&b'\t') {
        let ds = corpus::load_tsv(path, true)?;
        Ok(ds.labels()?.into_iter().map(String::from).collect())
    } else {
        Ok(corpus::load_predictions(path)?)
    }
}

fn write_report(report: &eval::MetricsReport<f64>, format: Format, out: &mut dyn Write) -> CliResult {
    match format {
        Format::Text => write!(out, "{}", report.render_text())?,
        Format::Tsv => write!(out, "{}", report.render_tsv())?,
    }
    Ok(())
}

fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult {
    let gold = load_gold(&args.gold)?;
    let pred = corpus::load_predictions(&args.pred)?;
    let index = LabelIndex::new(gold.iter().chain(&pred).cloned())?;
    let report = eval::evaluate(&gold, &pred, &index)?;
    write_report(&report, args.format, out)
}

fn cmd_baseline(args: &BaselineArgs, out: &mut dyn Write) -> CliResult {
    let gold = load_gold(&args.gold)?;
    if gold.is_empty() {
        return Err(CliError::Data(Error::EmptyCorpus));
    }
    let index = LabelIndex::new(gold.iter().cloned())?;
    let pred = eval::random_baseline(&gold, &index, args.seed);
    if let Some(path) = &args.output {
        corpus::save_predictions(&pred, path)?;
    }
    let report = eval::evaluate(&gold, &pred, &index)?;
    if args.format == Format::Text {
        writeln!(out, "random baseline (uniform over {} labels, seed {})\n", index.len(), args.seed)?;
    }
    write_report(&report, args.format, out)
}

fn load_train_dev(train: &Path, dev: &Path) -> CliResult<(Dataset, Dataset)> {
    Ok((corpus::load_tsv(train, true)?, corpus::load_tsv(dev, true)?))
}

fn cmd_gridsearch<F: Scalar>(args: &GridArgs, out: &mut dyn Write) -> CliResult {
    let specs = args.solver.specs(&args.features)?;
    let grid: Vec<F> = args
        .grid
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|c| *c > 0.0 && c.is_finite())
                .map(F::from_f64_lossy)
                .ok_or_else(|| CliError::Usage(format!("bad C value `{s}`")))
        })
        .collect::<CliResult<_>>()?;
    if grid.is_empty() {
        return Err(CliError::Usage("empty --grid".into()));
    }
    let (train, dev) = load_train_dev(&args.train, &args.dev)?;
    let config = EnsembleConfig {
        specs,
        train: args.solver.train_config::<F>()?,
        min_df: args.solver.min_df,
    };
    let result = grid_search_c(&train, &dev, &config, &grid)?;
    match args.format {
        Format::Text => {
            write!(out, "{}", result.render_text())?;
            writeln!(out, "\nbest C = {} (dev macro F1 {:.4})", result.best_c, result.best_score())?;
        }
        Format::Tsv => write!(out, "{}", result.render_tsv())?,
    }
    Ok(())
}

fn write_table(table: &ScoreTable, specs: Option<&[FeatureSpec]>, format: Format, out: &mut dyn Write) -> CliResult {
    match format {
        Format::Tsv => write!(out, "{}", table.render_tsv())?,
        Format::Text => {
            let pretty = match specs {
                Some(specs) => ScoreTable {
                    header: ("Feature".into(), "F1 (macro)".into()),
                    rows: specs
                        .iter()
                        .zip(&table.rows)
                        .map(|(s, (_, score))| (describe_spec(s), *score))
                        .collect(),
                },
                None => ScoreTable {
                    header: ("Members".into(), "F1 (macro)".into()),
                    rows: table.rows.clone(),
                },
            };
            write!(out, "{}", pretty.render_text())?;
        }
    }
    Ok(())
}

fn cmd_ablation<F: Scalar>(args: &AblationArgs, out: &mut dyn Write) -> CliResult {
    let specs = args.solver.specs(&args.features)?;
    let config = args.solver.train_config::<F>()?;
    let (train, dev) = load_train_dev(&args.train, &args.dev)?;
    let table = ablation_table(&train, &dev, &specs, &config, args.solver.min_df)?;
    write_table(&table, Some(&specs), args.format, out)
}

fn cmd_subsets<F: Scalar>(args: &SubsetArgs, out: &mut dyn Write) -> CliResult {
    let candidates = args
        .subsets
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| args.solver.specs(s))
        .collect::<CliResult<Vec<_>>>()?;
    if candidates.is_empty() {
        return Err(CliError::Usage("no candidate subsets".into()));
    }
    let config = args.solver.train_config::<F>()?;
    let (train, dev) = load_train_dev(&args.train, &args.dev)?;
    let table = evaluate_subsets(&train, &dev, &candidates, &config, args.solver.min_df)?;
    write_table(&table, None, args.format, out)
}

fn top_features_report<F: Scalar>(
    model: &ModelFile<F>,
    args: &TopFeaturesArgs,
) -> CliResult<String> {
    if args.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let members = model.ensemble.members();
    let member = match &args.member {
        None => &members[0],
        Some(s) => {
            let wanted: FeatureSpec = s
                .parse()
                .map_err(|_| CliError::Usage(format!("bad member spec `{s}`")))?;
            members
                .iter()
                .find(|m| m.spec.kind == wanted.kind)
                .ok_or_else(|| CliError::Usage(format!("model has no member {s}")))?
        }
    };
    let top = top_features(&member.model, member.tfidf.vocabulary(), &args.label, args.k)?;
    let mut text = String::new();
    match args.format {
        Format::Tsv => {
            text.push_str("rank\tfeature\tweight\n");
            for (i, fw) in top.iter().enumerate() {
                let _ = writeln!(text, "{}\t{}\t{:.6}", i + 1, fw.feature, fw.weight.to_f64_lossless());
            }
        }
        Format::Text => {
            let _ = writeln!(text, "top {} features for {} ({})", args.k, args.label, describe_spec(&member.spec));
            let _ = writeln!(text, "{:>4}  {:<14}  {:>10}", "rank", "feature", "weight");
            for (i, fw) in top.iter().enumerate() {
                let quoted = format!("\"{}\"", fw.feature);
                let _ = writeln!(text, "{:>4}  {:<14}  {:>10.6}", i + 1, quoted, fw.weight.to_f64_lossless());
            }
        }
    }
    Ok(text)
}

fn cmd_top_features(args: &TopFeaturesArgs, out: &mut dyn Write) -> CliResult {
    let report = match load_model(&args.model)? {
        LoadedModel::F32(m) => top_features_report(&m, args)?,
        LoadedModel::F64(m) => top_features_report(&m, args)?,
    };
    write!(out, "{report}")?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> CliResult {
    let labels: Vec<&str> = args.labels.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let sizes = PartitionSizes::new(args.train_per_label, args.dev_per_label, args.test_per_label);
    let generated = corpus::generate_synthetic_corpus(args.seed, &labels, sizes, args.separability)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    for (name, ds) in [("train", &generated.train), ("dev", &generated.dev), ("test", &generated.test)] {
        let path = args.out.join(format!("{name}.tsv"));
        corpus::save_tsv(ds, &path)?;
        writeln!(out, "{:<5} {:>6} instances -> {}", name, ds.len(), path.display())?;
    }
    let mut markers = String::new();
    for (label, ms) in &generated.markers {
        for m in ms {
            let _ = writeln!(markers, "{label}\t{m}");
        }
    }
    let path = args.out.join("markers.tsv");
    fs::write(&path, markers).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    Ok(())
}
