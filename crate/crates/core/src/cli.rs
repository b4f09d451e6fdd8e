//! The `forge` command line.
//!
//! Every subcommand exits 0 on success. Failures print one line,
//! `error[<kind>]: <message>`, to stderr and exit 1.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use crate::baselines::{CheckpointError, Head, HeadLearner, Predictor, TextClassifier, TrainConfig, TrainError};
use crate::datasets::{self, Corpus, DatasetError, SplitPlan};
use crate::ensemble::{
    out_of_fold, EnsembleError, EnsembleSpec, FoldAssignment, MetaLearner, ProbabilityMatrix, Rule, Topology,
};
use crate::label::{ClassLabel, NUM_CLASSES};
use crate::metrics::{render_table, MetricsError, MetricsReport, Timings};
use crate::predformat::{self, PredFormatError, Predictions};
use crate::preprocess::{PreprocessConfig, PreprocessError, Preprocessor};
use crate::synth::{self, SynthConfig};

/// Environment variable naming a lexicon file; `--lexicon` takes precedence.
pub const LEXICON_ENV: &str = "FORGE_LEXICON";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Format(#[from] PredFormatError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Manifest(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Preprocess(_) => "preprocess",
            CliError::Dataset(_) => "dataset",
            CliError::Train(_) => "train",
            CliError::Checkpoint(_) => "checkpoint",
            CliError::Ensemble(_) => "ensemble",
            CliError::Format(_) => "format",
            CliError::Metrics(_) => "metrics",
            CliError::Manifest(_) => "manifest",
            CliError::Io { .. } => "io",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "forge", version, about = "Ensemble toolkit for abusive-language tweet classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize the texts of a corpus and drop examples that end up too short.
    Preprocess(PreprocessArgs),
    /// Load the three source corpora, harmonize labels and merge them.
    Fuse(FuseArgs),
    /// Write a stratified train/validation/test plan for a corpus.
    Split(SplitArgs),
    /// Train one base learner.
    Train(TrainArgs),
    /// Write class probabilities in the prediction file format.
    Predict(PredictArgs),
    /// Combine member prediction files as described by a JSON manifest.
    Ensemble(EnsembleArgs),
    /// Score a prediction file against gold labels.
    Evaluate(EvaluateArgs),
    /// Merge metrics files into one table.
    Report(ReportArgs),
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputFormat {
    /// Canonical `id,source,label,text` CSV.
    Corpus,
    Davidson,
    Hateval,
    Olid,
}

#[derive(Debug, Args)]
pub struct PreprocessOptions {
    /// key=value preprocessing config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Word list used for elongation and hashtag segmentation (overrides the config and FORGE_LEXICON).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

impl PreprocessOptions {
    fn build(&self) -> Result<Preprocessor, CliError> {
        let mut config = match &self.config {
            Some(p) => PreprocessConfig::from_file(p)?,
            None => PreprocessConfig::default(),
        };
        if let Some(l) = self.lexicon.clone().or_else(|| std::env::var_os(LEXICON_ENV).map(PathBuf::from)) {
            config.lexicon_path = Some(l);
        }
        Ok(Preprocessor::new(config)?)
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "corpus")]
    pub format: InputFormat,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub pre: PreprocessOptions,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub davidson: PathBuf,
    #[arg(long)]
    pub hateval: PathBuf,
    #[arg(long)]
    pub olid: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Also write per-source and fused class histograms as JSON.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Merge the raw texts instead of normalizing first.
    #[arg(long)]
    pub raw: bool,
    #[command(flatten)]
    pub pre: PreprocessOptions,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// train,validation,test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub ratios: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

/// A corpus, optionally restricted to one part of a split plan.
#[derive(Debug, Args)]
pub struct CorpusSelection {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, requires = "part")]
    pub plan: Option<PathBuf>,
    /// train, validation or test.
    #[arg(long, requires = "plan")]
    pub part: Option<String>,
}

impl CorpusSelection {
    fn load(&self) -> Result<Corpus, CliError> {
        let corpus = datasets::read_corpus(&self.corpus)?;
        match (&self.plan, &self.part) {
            (Some(plan), Some(part)) => {
                let plan = SplitPlan::load(plan)?;
                plan.check_covers(&corpus)?;
                let idx = plan
                    .part(part)
                    .ok_or_else(|| CliError::Usage(format!("unknown split part {part:?} (expected train|validation|test)")))?;
                Ok(corpus.subset(idx))
            }
            _ => Ok(corpus),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: CorpusSelection,
    /// mlp, cnn, lstm (or ngram33, ngram35, word1).
    #[arg(long)]
    pub head: Head,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            max_epochs: self.epochs.unwrap_or(d.max_epochs),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            patience: self.patience.unwrap_or(d.patience),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: CorpusSelection,
    /// Trained checkpoint; required unless --oof is given.
    #[arg(long, required_unless_present = "oof", conflicts_with = "oof")]
    pub model: Option<PathBuf>,
    /// Out-of-fold predictions over the selected corpus for this head.
    #[arg(long)]
    pub oof: Option<Head>,
    #[arg(long, default_value_t = 3)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[command(flatten)]
    pub data: CorpusSelection,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub dataset: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metrics JSON files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 400)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

/// Ensemble manifest. Relative paths resolve against the manifest's directory.
///
/// ```json
/// {"topology": "EM4", "rule": "soft", "predictions": {"mlp": "mlp.pred", "cnn": "cnn.pred", "lstm": "lstm.pred"}}
/// ```
///
/// `members` and `weights` may replace `topology`. Stacking also needs
/// `oof` (member out-of-fold prediction files) and `train_corpus`, whose
/// labels the meta-learner is fit on.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub topology: Option<Topology>,
    #[serde(default)]
    pub members: Option<Vec<String>>,
    pub rule: Rule,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub predictions: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub oof: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub train_corpus: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl Manifest {
    fn spec(&self) -> Result<EnsembleSpec, CliError> {
        let (members, topology) = match (&self.topology, &self.members) {
            (Some(t), None) => (t.members().iter().map(|s| s.to_string()).collect(), Some(*t)),
            (None, Some(m)) => (m.clone(), None),
            _ => return Err(CliError::Manifest("give exactly one of \"topology\" or \"members\"".into())),
        };
        let weights = self.weights.clone().unwrap_or_else(|| vec![1.0; members.len()]);
        let mut spec = EnsembleSpec::weighted(members, self.rule, weights)?;
        spec.topology = topology;
        Ok(spec)
    }
}

/// Parses `args` (program name first) and runs the command. Help and
/// version requests print to stdout and succeed.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(first_line(&e.to_string()))),
    };
    execute(cli.command)
}

fn first_line(s: &str) -> String {
    s.lines()
        .map(|l| l.trim_start_matches("error: ").trim())
        .find(|l| !l.is_empty())
        .unwrap_or("invalid arguments")
        .to_string()
}

/// Process entry point: returns the exit code.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    match run(args) {
        Ok(()) => 0,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &CliError) -> i32 {
    let msg = e.to_string().replace('\n', " ");
    eprintln!("error[{}]: {msg}", e.kind());
    1
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Preprocess(a) => preprocess(a),
        Command::Fuse(a) => fuse(a),
        Command::Split(a) => split(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Ensemble(a) => run_ensemble(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
        Command::Synth(a) => synth_cmd(a),
    }
}

fn log(msg: impl AsRef<str>) {
    let _ = writeln!(std::io::stderr(), "{}", msg.as_ref());
}

fn load_input(path: &Path, format: InputFormat) -> Result<Corpus, CliError> {
    Ok(match format {
        InputFormat::Corpus => datasets::read_corpus(path)?,
        InputFormat::Davidson => datasets::load_davidson(path)?,
        InputFormat::Hateval => datasets::load_hateval(path)?,
        InputFormat::Olid => datasets::load_olid(path)?,
    })
}

fn preprocess(a: PreprocessArgs) -> Result<(), CliError> {
    let pp = a.pre.build()?;
    let corpus = load_input(&a.input, a.format)?;
    let (clean, dropped) = corpus.normalized(&pp);
    datasets::write_corpus(&clean, &a.output)?;
    log(format!("kept {} of {} examples ({dropped} dropped)", clean.len(), corpus.len()));
    Ok(())
}

fn fuse(a: FuseArgs) -> Result<(), CliError> {
    let mut parts = [
        datasets::load_davidson(&a.davidson)?,
        datasets::load_hateval(&a.hateval)?,
        datasets::load_olid(&a.olid)?,
    ];
    if !a.raw {
        let pp = a.pre.build()?;
        for c in &mut parts {
            *c = c.normalized(&pp).0;
        }
    }
    let fused = datasets::fuse_dho(&parts[0], &parts[1], &parts[2]);
    datasets::write_corpus(&fused, &a.output)?;
    if let Some(h) = &a.histogram {
        datasets::write_histogram(&fused, h)?;
    }
    log(format!("fused {} examples", fused.len()));
    Ok(())
}

fn parse_ratios(s: &str) -> Result<[f64; 3], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--ratios {s:?}: expected three comma-separated numbers")))?;
    <[f64; 3]>::try_from(v).map_err(|_| CliError::Usage(format!("--ratios {s:?}: expected three comma-separated numbers")))
}

fn split(a: SplitArgs) -> Result<(), CliError> {
    let ratios = parse_ratios(&a.ratios)?;
    let corpus = datasets::read_corpus(&a.corpus)?;
    let plan = datasets::stratified_split(&corpus.labels(), ratios, a.seed)?;
    plan.save(&a.output)?;
    log(format!(
        "train {} / validation {} / test {}",
        plan.train.len(),
        plan.validation.len(),
        plan.test.len()
    ));
    Ok(())
}

fn train(a: TrainArgs) -> Result<(), CliError> {
    let corpus = a.data.load()?;
    let learner = HeadLearner::new(a.head).with_config(a.config());
    let mut timings = Timings::new();
    let (model, _) = timings.time_stage("train", |_| learner.train(&corpus.texts(), &corpus.labels(), a.seed));
    let model = model?;
    model.save(&a.output)?;
    let log_ = model.training_log();
    log(format!(
        "{}: {} epochs, best {} ({:.3}s)",
        a.head,
        log_.epochs.len(),
        log_.best_epoch,
        timings.stages()["train"]
    ));
    Ok(())
}

fn ids(corpus: &Corpus) -> Vec<String> {
    corpus.examples().iter().map(|e| e.id.clone()).collect()
}

fn predict(a: PredictArgs) -> Result<(), CliError> {
    let corpus = a.data.load()?;
    let matrix = match (&a.model, a.oof) {
        (_, Some(head)) => {
            let labels = corpus.labels();
            let folds = FoldAssignment::stratified(&labels, a.folds, a.seed)?;
            out_of_fold(&HeadLearner::new(head), &corpus.texts(), &labels, &folds)?.0
        }
        (Some(path), None) => TextClassifier::load(path)?.predict_proba(&corpus.texts()),
        (None, None) => return Err(CliError::Usage("give --model or --oof".into())),
    };
    predformat::write_predictions(&a.output, &ids(&corpus), &matrix)?;
    Ok(())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn load_registry(
    base: &Path,
    files: &BTreeMap<String, PathBuf>,
    members: &[String],
) -> Result<(Vec<String>, BTreeMap<String, ProbabilityMatrix>), CliError> {
    let mut ids: Option<Vec<String>> = None;
    let mut registry = BTreeMap::new();
    for m in members {
        let path = files.get(m).ok_or_else(|| EnsembleError::MissingMember(m.clone()))?;
        let preds: Predictions = predformat::read_predictions(&resolve(base, path))?;
        let matrix = match &ids {
            None => {
                ids = Some(preds.ids.clone());
                preds.matrix.clone()
            }
            Some(order) => preds
                .aligned_to(order)
                .map_err(|id| CliError::Manifest(format!("member {m} has no prediction for id {id:?}")))?,
        };
        if matrix.len() != preds.ids.len() {
            return Err(CliError::Manifest(format!("member {m} predicts ids the other members do not")));
        }
        registry.insert(m.clone(), matrix.with_producer(m.clone()));
    }
    Ok((ids.unwrap_or_default(), registry))
}

fn one_hot(producer: &str, labels: &[ClassLabel]) -> ProbabilityMatrix {
    let rows = labels
        .iter()
        .map(|l| {
            let mut r = [0.0; NUM_CLASSES];
            r[l.index()] = 1.0;
            r
        })
        .collect();
    ProbabilityMatrix::new(producer, rows).expect("one-hot rows are valid")
}

fn run_ensemble(a: EnsembleArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.manifest).map_err(io_err(&a.manifest))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Manifest(format!("{}: {e}", a.manifest.display())))?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let spec = manifest.spec()?;
    let (ids, registry) = load_registry(base, &manifest.predictions, &spec.members)?;

    let matrix = match spec.rule {
        Rule::Soft => spec.combine(&registry)?.1.expect("soft vote yields probabilities"),
        Rule::Max | Rule::Hard => one_hot(&spec.name(), &spec.combine(&registry)?.0),
        Rule::Stack => {
            let corpus_path = manifest
                .train_corpus
                .as_ref()
                .ok_or_else(|| CliError::Manifest("stacking needs \"train_corpus\"".into()))?;
            let train = datasets::read_corpus(&resolve(base, corpus_path))?;
            let train_ids: Vec<String> = train.examples().iter().map(|e| e.id.clone()).collect();
            let (oof_ids, oof) = load_registry(base, &manifest.oof, &spec.members)?;
            let by_id: BTreeMap<&str, ClassLabel> = train.examples().iter().map(|e| (e.id.as_str(), e.label)).collect();
            let labels = oof_ids
                .iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| CliError::Manifest(format!("out-of-fold id {id:?} not in train_corpus")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if oof_ids.len() != train_ids.len() {
                return Err(CliError::Manifest(format!(
                    "out-of-fold files cover {} of {} training examples",
                    oof_ids.len(),
                    train_ids.len()
                )));
            }
            let oof_members: Vec<ProbabilityMatrix> = spec.members.iter().map(|m| oof[m].clone()).collect();
            let config = TrainConfig {
                seed: manifest.seed,
                ..MetaLearner::default_config()
            };
            let meta = MetaLearner::fit(&oof_members, &labels, &config)?;
            let test_members: Vec<ProbabilityMatrix> = spec.members.iter().map(|m| registry[m].clone()).collect();
            meta.predict(&test_members)?.1.with_producer(spec.name())
        }
    };
    predformat::write_predictions(&a.output, &ids, &matrix)?;
    log(format!("{}: {} rows", spec.name(), matrix.len()));
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let mut timings = Timings::new();
    let (loaded, _) = timings.time_stage("load", |_| -> Result<_, CliError> {
        Ok((predformat::read_predictions(&a.predictions)?, a.data.load()?))
    });
    let (preds, corpus) = loaded?;
    let (report, _) = timings.time_stage("score", |_| -> Result<_, CliError> {
        let order = ids(&corpus);
        let matrix = preds
            .aligned_to(&order)
            .map_err(|id| CliError::Manifest(format!("no prediction for id {id:?}")))?;
        Ok(MetricsReport::evaluate(&corpus.labels(), &matrix.labels())?)
    });
    let mut report = report?;
    report.model = Some(a.model.clone().unwrap_or_else(|| preds.producer().to_string()));
    report.dataset = a.dataset.clone().or_else(|| {
        a.data
            .corpus
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .map(|s| match &a.data.part {
                Some(p) => format!("{s}:{p}"),
                None => s,
            })
    });
    report.timings_s = timings.into_map();
    println!(
        "{} on {}: accuracy {:.4}, macro F1 {:.4}",
        report.model.as_deref().unwrap_or("-"),
        report.dataset.as_deref().unwrap_or("-"),
        report.accuracy,
        report.macro_f1
    );
    if let Some(out) = &a.output {
        report.save(out)?;
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    let reports = a
        .inputs
        .iter()
        .map(|p| MetricsReport::load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let table = render_table(&reports);
    match &a.output {
        Some(out) => std::fs::write(out, &table).map_err(io_err(out))?,
        None => print!("{table}"),
    }
    Ok(())
}

fn synth_cmd(a: SynthArgs) -> Result<(), CliError> {
    let corpus = synth::generate(&SynthConfig {
        n: a.n,
        seed: a.seed,
        ..Default::default()
    });
    datasets::write_corpus(&corpus, &a.output)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_are_one_line() {
        let err = run(["forge", "train", "--head", "mlp"]).unwrap_err();
        assert_eq!(err.kind(), "usage");
        assert!(!err.to_string().contains('\n'));
        assert!(matches!(run(["forge", "bogus"]), Err(CliError::Usage(_))));
    }

    #[test]
    fn ratios() {
        assert_eq!(parse_ratios("0.8, 0.1,0.1").unwrap(), [0.8, 0.1, 0.1]);
        assert!(parse_ratios("0.5,0.5").is_err());
        assert!(parse_ratios("a,b,c").is_err());
    }

    #[test]
    fn manifest_needs_one_member_source() {
        let m: Manifest = serde_json::from_str(r#"{"rule":"soft","predictions":{}}"#).unwrap();
        assert!(matches!(m.spec(), Err(CliError::Manifest(_))));
        let m: Manifest = serde_json::from_str(r#"{"topology":"EM1","rule":"hard","predictions":{}}"#).unwrap();
        assert!(matches!(m.spec(), Err(CliError::Ensemble(EnsembleError::EvenMemberCount(2)))));
    }
}
