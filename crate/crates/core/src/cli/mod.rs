//! Command-line front end for the pipeline.
//!
//! Every flag can also come from a TOML file given with `--config`: global
//! flags at top level, command flags in a table named after the command
//! (`[gen-corpus]`, `[build-dataset]`, ...), keys spelled like the flags.
//! Flags win over the file, the file wins over built-in defaults.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::classifier::{load_model, save_model, train_mlp, ClassifierError, MlpHyperparams, Optimizer};
use crate::corpus::{generate_corpus, CorpusError, CorpusSpec};
use crate::embedding::{CachedProvider, EmbedError, EmbeddingCache, EmbeddingProvider, ProviderConfig};
use crate::eval::{evaluate, gold_from_companies, EvalError, DEFAULT_SPAN_MASS};
use crate::pscode::{embed_ps_taxonomy, read_predictions, write_predictions, HierarchicalClassifier, PsError};
use crate::taxonomy::{
    load_companies, write_companies, IndustryTaxonomy, ProductServiceTaxonomy, SourceMapping, TaxonomyError,
};
use crate::weaklabel::{build_labeled_dataset, split_dataset, LabeledDataset, WeakLabelConfig, WeakLabelError};

pub const DEFAULT_DIM: usize = 1024;
pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_VALID_FRACTION: f64 = 0.1;

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const TEST_COMPANIES_FILE: &str = "test_companies.jsonl";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Fingerprint(String),
    #[error("{0}")]
    Remote(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Input(_) => 3,
            Self::Fingerprint(_) => 4,
            Self::Remote(_) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::InvalidConfig(_) => Self::Usage(e.to_string()),
            EmbedError::Cache { .. } => Self::Input(e.to_string()),
            _ => Self::Remote(e.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::FingerprintMismatch { .. } | ClassifierError::VersionMismatch { .. } => {
                Self::Fingerprint(e.to_string())
            }
            ClassifierError::InvalidHyperparams(_) => Self::Usage(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<TaxonomyError> for CliError {
    fn from(e: TaxonomyError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<WeakLabelError> for CliError {
    fn from(e: WeakLabelError) -> Self {
        match e {
            WeakLabelError::Embed(inner) => inner.into(),
            WeakLabelError::InvalidConfig(_) => Self::Usage(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<PsError> for CliError {
    fn from(e: PsError) -> Self {
        match e {
            PsError::Embed(inner) => inner.into(),
            PsError::Classifier(inner) => inner.into(),
            PsError::UnknownIndustry(_) => Self::Input(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::InvalidSpec(_) => Self::Usage(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        Self::Input(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Hashed,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Parser)]
#[command(
    name = "codeclass",
    version,
    about = "Hierarchical industry and product/service code classification"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Fills unset fields of `$dst` from `$src`.
macro_rules! fill {
    ($dst:expr, $src:expr; $($field:ident),+ $(,)?) => {
        { $( if $dst.$field.is_none() { $dst.$field = $src.$field.clone(); } )+ }
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GlobalArgs {
    /// Seed for corpus generation, hashing, splitting and training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub provider: Option<ProviderKind>,
    /// Embedding dimension.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Base URL of a remote embedding service.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Similarity threshold for weak labels.
    #[arg(long, global = true)]
    pub thresh: Option<f64>,
    /// Number of industries predicted per company.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Number of product/service codes kept per industry.
    #[arg(long, global = true)]
    pub top_n: Option<usize>,
    /// TOML file supplying defaults for any flag not given
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl GlobalArgs {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn k(&self) -> usize {
        self.k.unwrap_or(crate::pscode::DEFAULT_K)
    }

    fn top_n(&self) -> usize {
        self.top_n.unwrap_or(crate::pscode::DEFAULT_TOP_N)
    }

    pub fn provider_config(&self) -> Result<ProviderConfig> {
        let dim = self.dim.unwrap_or(DEFAULT_DIM);
        let config = match self.provider.unwrap_or(ProviderKind::Hashed) {
            ProviderKind::Hashed => ProviderConfig::hashed(dim, self.seed()),
            ProviderKind::Remote => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| CliError::Usage("--provider remote requires --endpoint".into()))?;
                ProviderConfig::remote(endpoint, dim)
            }
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic taxonomy, mapping and company corpus.
    GenCorpus(GenCorpusArgs),
    /// Weak-label companies and split into train/test.
    BuildDataset(BuildDatasetArgs),
    /// Train the industry classifier.
    Train(TrainArgs),
    /// Predict industries and product/service codes.
    Predict(PredictArgs),
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_industries: Option<usize>,
    #[arg(long)]
    pub ps_min: Option<usize>,
    #[arg(long)]
    pub ps_max: Option<usize>,
    #[arg(long)]
    pub n_companies: Option<usize>,
    #[arg(long)]
    pub mapped_fraction: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct BuildDatasetArgs {
    #[arg(long)]
    pub industries: Option<PathBuf>,
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    #[arg(long)]
    pub companies: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Embedding cache file, created if missing.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Fraction of labeled examples kept for training.
    #[arg(long)]
    pub split: Option<f64>,
    /// Compare against every industry, not only those outside the mapping.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub all_candidates: Option<bool>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct TrainArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Per-epoch loss/accuracy log (JSON).
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Early-stop patience in epochs; 0 disables.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    /// Fraction of the training file held out for early stopping.
    #[arg(long)]
    pub valid_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub industries: Option<PathBuf>,
    #[arg(long)]
    pub products: Option<PathBuf>,
    #[arg(long)]
    pub companies: Option<PathBuf>,
    /// Output JSONL; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Companies JSONL carrying gold labels.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Labeled dataset used as industry gold where a company has none.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Report JSON output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub confusion_csv: Option<PathBuf>,
    /// Confusion mass covered by the span statistic.
    #[arg(long)]
    pub span_mass: Option<f64>,
}

#[derive(Debug, Default)]
struct ConfigFile {
    global: GlobalArgs,
    gen_corpus: GenCorpusArgs,
    build_dataset: BuildDatasetArgs,
    train: TrainArgs,
    predict: PredictArgs,
    evaluate: EvaluateArgs,
}

fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let bad = |e: toml::de::Error| CliError::Usage(format!("{}: {e}", path.display()));
    let mut table: toml::Table = toml::from_str(&text).map_err(bad)?;
    fn section<T: Default + serde::de::DeserializeOwned>(
        table: &mut toml::Table,
        name: &str,
    ) -> std::result::Result<T, toml::de::Error> {
        match table.remove(name) {
            Some(v) => v.try_into(),
            None => Ok(T::default()),
        }
    }
    Ok(ConfigFile {
        gen_corpus: section(&mut table, "gen-corpus").map_err(bad)?,
        build_dataset: section(&mut table, "build-dataset").map_err(bad)?,
        train: section(&mut table, "train").map_err(bad)?,
        predict: section(&mut table, "predict").map_err(bad)?,
        evaluate: section(&mut table, "evaluate").map_err(bad)?,
        global: toml::Value::Table(table).try_into().map_err(bad)?,
    })
}

impl Cli {
    /// Applies config-file values to every flag left unset.
    fn merge_config(mut self) -> Result<Self> {
        let Some(path) = self.global.config.clone() else {
            return Ok(self);
        };
        let cfg = load_config(&path)?;
        fill!(self.global, cfg.global; seed, provider, dim, endpoint, thresh, k, top_n);
        match &mut self.command {
            Command::GenCorpus(a) => {
                fill!(a, cfg.gen_corpus; out_dir, n_industries, ps_min, ps_max, n_companies, mapped_fraction, noise)
            }
            Command::BuildDataset(a) => {
                fill!(a, cfg.build_dataset; industries, mapping, companies, out_dir, cache, split, all_candidates)
            }
            Command::Train(a) => fill!(
                a, cfg.train;
                train, model, history, hidden, lr, epochs, batch_size, l2, patience, optimizer, valid_fraction
            ),
            Command::Predict(a) => fill!(a, cfg.predict; model, industries, products, companies, out, cache),
            Command::Evaluate(a) => {
                fill!(a, cfg.evaluate; predictions, gold, labels, report, confusion_csv, span_mass)
            }
        }
        Ok(self)
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

fn existing<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    let path = required(value, flag)?;
    if !path.exists() {
        return Err(CliError::Input(format!("--{flag}: {} does not exist", path.display())));
    }
    Ok(path)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_dataset(path: &Path, dataset: &LabeledDataset) -> Result<()> {
    dataset.write_jsonl(create(path)?)?;
    Ok(())
}

fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(LabeledDataset::read_jsonl(file)?)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Input(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Runs `body` against the configured provider, optionally behind a
/// persistent cache that is saved afterwards.
fn with_provider<T>(
    global: &GlobalArgs,
    cache: Option<&Path>,
    body: impl FnOnce(&dyn EmbeddingProvider) -> Result<T>,
) -> Result<T> {
    let base = global.provider_config()?.build()?;
    match cache {
        None => body(base.as_ref()),
        Some(path) => {
            let cache = Arc::new(EmbeddingCache::open(path)?);
            let provider = CachedProvider::new(base, Arc::clone(&cache));
            let out = body(&provider)?;
            log::info!(
                "embedding cache: {} computed, {} entries",
                provider.computed(),
                cache.len()
            );
            cache.save()?;
            Ok(out)
        }
    }
}

fn cmd_gen_corpus(global: &GlobalArgs, args: &GenCorpusArgs) -> Result<()> {
    let out_dir = required(&args.out_dir, "out-dir")?;
    let d = CorpusSpec::default();
    let spec = CorpusSpec {
        n_industries: args.n_industries.unwrap_or(d.n_industries),
        ps_min: args.ps_min.unwrap_or(d.ps_min),
        ps_max: args.ps_max.unwrap_or(d.ps_max),
        n_companies: args.n_companies.unwrap_or(d.n_companies),
        mapped_fraction: args.mapped_fraction.unwrap_or(d.mapped_fraction),
        noise: args.noise.unwrap_or(d.noise),
        seed: global.seed(),
    };
    let corpus = generate_corpus(&spec)?;
    corpus.write_to_dir(out_dir)?;
    log::info!(
        "wrote {} industries, {} product/service codes, {} companies to {}",
        corpus.industries.len(),
        corpus.products.len(),
        corpus.companies.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_build_dataset(global: &GlobalArgs, args: &BuildDatasetArgs) -> Result<()> {
    let industries = IndustryTaxonomy::load(existing(&args.industries, "industries")?)?;
    let mapping = SourceMapping::load(existing(&args.mapping, "mapping")?, &industries)?;
    let companies = load_companies(existing(&args.companies, "companies")?)?;
    let out_dir = required(&args.out_dir, "out-dir")?;
    let config = WeakLabelConfig {
        thresh: global.thresh.unwrap_or(WeakLabelConfig::default().thresh),
        uncovered_only: !args.all_candidates.unwrap_or(false),
        split_ratio: args.split.unwrap_or(WeakLabelConfig::default().split_ratio),
        seed: global.seed(),
    };
    config.validate()?;

    let dataset = with_provider(global, args.cache.as_deref(), |p| {
        Ok(build_labeled_dataset(&companies, &mapping, &industries, p, &config)?)
    })?;
    let (train, test) = split_dataset(&dataset, config.split_ratio, config.seed)?;
    log::info!(
        "labeled {} (mapping {}, similarity {}, dropped {}); train {}, test {}",
        dataset.len(),
        dataset.report.mapped,
        dataset.report.similarity,
        dataset.report.dropped,
        train.len(),
        test.len()
    );

    std::fs::create_dir_all(out_dir)?;
    write_dataset(&out_dir.join(DATASET_FILE), &dataset)?;
    write_dataset(&out_dir.join(TRAIN_FILE), &train)?;
    write_dataset(&out_dir.join(TEST_FILE), &test)?;
    write_json(&out_dir.join(REPORT_FILE), &dataset.report)?;

    let test_ids: std::collections::BTreeSet<&str> = test.examples.iter().map(|e| e.company_id.as_str()).collect();
    let test_companies: Vec<_> = companies
        .iter()
        .filter(|c| test_ids.contains(c.id.as_str()))
        .cloned()
        .collect();
    let mut w = create(&out_dir.join(TEST_COMPANIES_FILE))?;
    write_companies(&mut w, &test_companies)?;
    w.flush()?;
    Ok(())
}

fn cmd_train(global: &GlobalArgs, args: &TrainArgs) -> Result<()> {
    let data = read_dataset(existing(&args.train, "train")?)?;
    let model_path = required(&args.model, "model")?;
    let d = MlpHyperparams::default();
    let hp = MlpHyperparams {
        hidden_dims: args.hidden.clone().unwrap_or(d.hidden_dims),
        learning_rate: args.lr.unwrap_or(d.learning_rate),
        epochs: args.epochs.unwrap_or(d.epochs),
        batch_size: args.batch_size.unwrap_or(d.batch_size),
        l2: args.l2.unwrap_or(d.l2),
        seed: global.seed(),
        early_stop_patience: args.patience.unwrap_or(d.early_stop_patience),
        optimizer: match args.optimizer {
            Some(OptimizerArg::Sgd) => Optimizer::Sgd,
            Some(OptimizerArg::Adam) => Optimizer::Adam,
            None => d.optimizer,
        },
    };
    let valid_fraction = args.valid_fraction.unwrap_or(DEFAULT_VALID_FRACTION);
    if !(0.0..1.0).contains(&valid_fraction) {
        return Err(CliError::Usage(format!(
            "--valid-fraction must be in [0, 1), got {valid_fraction}"
        )));
    }

    // The training file carries no fingerprint of its own; the provider
    // flags must describe the embeddings it was built with.
    let fingerprint = global.provider_config()?.fingerprint();
    if let Some(dim) = data.dim() {
        let expected = global.dim.unwrap_or(DEFAULT_DIM);
        if dim != expected {
            return Err(CliError::Fingerprint(format!(
                "training embeddings have dim {dim} but the provider is configured for {expected}"
            )));
        }
    }

    let (train, valid) = if valid_fraction > 0.0 {
        split_dataset(&data, 1.0 - valid_fraction, global.seed())?
    } else {
        (data, LabeledDataset::from_examples(Vec::new(), 0))
    };
    log::info!("training on {} examples, validating on {}", train.len(), valid.len());
    let (model, history) = train_mlp(&train, &valid, &hp, &fingerprint)?;
    if let Some(last) = history.epochs.last() {
        log::info!(
            "finished after {} epochs: loss {:.5}, best epoch {:?}",
            last.epoch,
            last.train_loss,
            history.best_epoch
        );
    }
    save_model(&model, model_path)?;
    if let Some(path) = &args.history {
        write_json(path, &history)?;
    }
    Ok(())
}

fn cmd_predict(global: &GlobalArgs, args: &PredictArgs) -> Result<()> {
    let model = load_model(existing(&args.model, "model")?)?;
    let industries = IndustryTaxonomy::load(existing(&args.industries, "industries")?)?;
    let products = ProductServiceTaxonomy::load(existing(&args.products, "products")?, &industries)?;
    let companies = load_companies(existing(&args.companies, "companies")?)?;
    // Checked before any embedding work so a mismatch never hits the network.
    model.check_fingerprint(&global.provider_config()?.fingerprint(), true)?;

    let predictions = with_provider(global, args.cache.as_deref(), |p| {
        let index = embed_ps_taxonomy(&products, p)?;
        let classifier = HierarchicalClassifier::new(&model, &index, p)?.with_k(global.k(), global.top_n());
        Ok(classifier.classify_all(&companies)?)
    })?;
    log::info!("predicted {} companies", predictions.len());
    match &args.out {
        Some(path) => write_predictions(create(path)?, &predictions)?,
        None => write_predictions(std::io::stdout().lock(), &predictions)?,
    }
    Ok(())
}

fn cmd_evaluate(global: &GlobalArgs, args: &EvaluateArgs) -> Result<()> {
    let path = existing(&args.predictions, "predictions")?;
    let file = File::open(path)?;
    let predictions = read_predictions(file).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let companies = load_companies(existing(&args.gold, "gold")?)?;
    let fallback = match &args.labels {
        Some(p) => {
            let ds = read_dataset(p)?;
            Some(ds.examples.into_iter().map(|e| (e.company_id, e.label)).collect())
        }
        None => None,
    };
    let gold = gold_from_companies(&companies, fallback.as_ref());
    let report = evaluate(
        &predictions,
        &gold,
        global.k(),
        args.span_mass.unwrap_or(DEFAULT_SPAN_MASS),
    )?;
    if let Some(p) = &args.report {
        write_json(p, &report)?;
    }
    if let Some(p) = &args.confusion_csv {
        std::fs::write(p, report.confusion.to_csv())?;
    }
    let mut out = std::io::stdout().lock();
    out.write_all(report.render_table().as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    let cli = cli.merge_config()?;
    let g = &cli.global;
    match &cli.command {
        Command::GenCorpus(a) => cmd_gen_corpus(g, a),
        Command::BuildDataset(a) => cmd_build_dataset(g, a),
        Command::Train(a) => cmd_train(g, a),
        Command::Predict(a) => cmd_predict(g, a),
        Command::Evaluate(a) => cmd_evaluate(g, a),
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
