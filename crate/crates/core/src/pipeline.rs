//! File-to-file stages behind the `kard` subcommands.
//!
//! Each stage reads its inputs, writes its outputs atomically and returns a
//! [`Manifest`] recording parameters, input and output digests and the tool
//! version. Outputs depend only on inputs and parameters, so re-running a stage
//! reproduces them byte for byte.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{Bm25Params, Corpus, IndexError, PostingsIndex, ScoredDoc};
use crate::distill::{
    emit_training_example, filter_rationales, ingest_rationales, retrieve_knowledge, AnswerMatch,
    DataError, EmitOptions, KeepAll, RationaleFilter, RationaleRecord, Template, TrainingExample,
    VerdictFile,
};
use crate::eval::{
    accuracy, build_silver, hits_at_k, load_predictions, EvalError, HitsMode, MetricsReport,
};
use crate::io::{file_sha256, read_jsonl, sha256_hex, to_jsonl, write_atomic, JsonlError};
use crate::rerank::{
    argmax_agreement, build_candidate_set, rerank_inference, train, Bm25Scorer, CandidateSet,
    Optimizer, PreparedSet, Query, RerankError, RerankerModel, ScoreFile, Scorer, TrainConfig,
    DEFAULT_DIM, DEFAULT_KAPPA_STAR, DEFAULT_TAU1, DEFAULT_TAU2,
};
use crate::sim::{run_simulation, run_sweep, sweep_csv, SimConfig, SimError, Sweep};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(thiserror::Error, Debug)]
pub enum PipelineError {
    #[error("input {} does not exist", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("bad filter {0:?} (expected answer-match, none or verdict-file:<path>)")]
    BadFilter(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Rerank(#[from] RerankError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

type Result<T> = std::result::Result<T, PipelineError>;

/// Run record for one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: Value,
    /// Input path -> sha256.
    pub inputs: BTreeMap<String, String>,
    /// Output path -> sha256.
    pub outputs: BTreeMap<String, String>,
    /// Stage summary (counts, losses).
    pub stats: Value,
}

impl Manifest {
    fn new(command: &str, params: impl Serialize) -> Self {
        Self {
            tool: "kard".into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            params: serde_json::to_value(params).expect("params serialize"),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            stats: Value::Null,
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        let digest = file_sha256(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    fn output(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.outputs
            .insert(path.display().to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Paths whose current content no longer matches the recorded digest.
    pub fn stale_files(&self) -> Vec<String> {
        self.inputs
            .iter()
            .chain(&self.outputs)
            .filter(|(p, d)| file_sha256(Path::new(p)).ok().as_ref() != Some(*d))
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Writes the manifest to `path`, or next to `primary` as `<primary>.manifest.json`.
    pub fn write(&self, path: Option<&Path>, primary: &Path) -> Result<PathBuf> {
        let target = path.map_or_else(|| manifest_path_for(primary), Path::to_path_buf);
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&target, &bytes).map_err(|source| PipelineError::Io {
            path: target.clone(),
            source,
        })?;
        Ok(target)
    }
}

pub fn manifest_path_for(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingInput(path.to_path_buf()))
    }
}

fn load_corpus_and_index(corpus: &Path, index: &Path) -> Result<(Corpus, PostingsIndex)> {
    require(corpus)?;
    require(index)?;
    let corpus = Corpus::load_jsonl(corpus)?;
    let index = PostingsIndex::load(index)?;
    corpus.check_index(&index)?;
    Ok((corpus, index))
}

/// Parsed `--filter` value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FilterSpec {
    AnswerMatch,
    None,
    VerdictFile(PathBuf),
}

impl std::str::FromStr for FilterSpec {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "answer-match" => Ok(FilterSpec::AnswerMatch),
            "none" => Ok(FilterSpec::None),
            other => other
                .strip_prefix("verdict-file:")
                .filter(|p| !p.is_empty())
                .map(|p| FilterSpec::VerdictFile(PathBuf::from(p)))
                .ok_or_else(|| PipelineError::BadFilter(s.to_string())),
        }
    }
}

impl TryFrom<String> for FilterSpec {
    type Error = PipelineError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FilterSpec> for String {
    fn from(f: FilterSpec) -> String {
        match f {
            FilterSpec::AnswerMatch => "answer-match".into(),
            FilterSpec::None => "none".into(),
            FilterSpec::VerdictFile(p) => format!("verdict-file:{}", p.display()),
        }
    }
}

impl FilterSpec {
    fn build(&self, manifest: &mut Manifest) -> Result<Box<dyn RationaleFilter>> {
        Ok(match self {
            FilterSpec::AnswerMatch => Box::new(AnswerMatch),
            FilterSpec::None => Box::new(KeepAll),
            FilterSpec::VerdictFile(p) => {
                require(p)?;
                manifest.input(p)?;
                Box::new(VerdictFile::load(p)?)
            }
        })
    }
}

fn load_filtered(
    rationales: &Path,
    filter: &FilterSpec,
    manifest: &mut Manifest,
) -> Result<(Vec<RationaleRecord>, usize)> {
    require(rationales)?;
    manifest.input(rationales)?;
    let records = ingest_rationales(rationales)?;
    let f = filter.build(manifest)?;
    let filtered = filter_rationales(&records, f.as_ref());
    let dropped = filtered.dropped_records();
    Ok((filtered.records, dropped))
}

// ---------------------------------------------------------------- index

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexParams {
    pub k1: f64,
    pub b: f64,
}

impl Default for IndexParams {
    fn default() -> Self {
        let p = Bm25Params::default();
        Self { k1: p.k1, b: p.b }
    }
}

pub fn cmd_index(corpus: &Path, output: &Path, params: &IndexParams) -> Result<Manifest> {
    require(corpus)?;
    let mut manifest = Manifest::new("index", params);
    manifest.input(corpus)?;
    let docs = Corpus::load_jsonl(corpus)?;
    let index = PostingsIndex::build(
        docs.docs(),
        Bm25Params {
            k1: params.k1,
            b: params.b,
        },
    )?;
    manifest.output(output, &index.to_json_bytes())?;
    manifest.stats = json!({
        "doc_count": index.doc_count(),
        "avg_doc_length": index.avg_doc_length(),
        "vocabulary_size": index.vocabulary_size(),
    });
    Ok(manifest)
}

// ---------------------------------------------------------------- emit-train

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmitParams {
    pub k: usize,
    pub template: String,
    pub filter: FilterSpec,
    pub max_knowledge_chars: Option<usize>,
    pub no_knowledge: bool,
}

impl Default for EmitParams {
    fn default() -> Self {
        Self {
            k: 1,
            template: "medqa".into(),
            filter: FilterSpec::AnswerMatch,
            max_knowledge_chars: None,
            no_knowledge: false,
        }
    }
}

pub fn cmd_emit_train(
    rationales: &Path,
    corpus: &Path,
    index: &Path,
    output: &Path,
    params: &EmitParams,
) -> Result<Manifest> {
    if params.k == 0 && !params.no_knowledge {
        return Err(PipelineError::Usage("--k must be at least 1".into()));
    }
    let mut manifest = Manifest::new("emit-train", params);
    let (corpus, index) = {
        let loaded = load_corpus_and_index(corpus, index)?;
        manifest.input(corpus)?;
        manifest.input(index)?;
        loaded
    };
    let (records, dropped) = load_filtered(rationales, &params.filter, &mut manifest)?;
    if let Some(p) = params.template.strip_prefix("custom:") {
        manifest.input(Path::new(p))?;
    }
    let mut template = Template::from_id(&params.template)?;
    if params.no_knowledge {
        template = template.knowledge_free();
    }

    let jobs: Vec<(&RationaleRecord, usize)> = records
        .iter()
        .flat_map(|r| (0..r.rationales.len()).map(move |j| (r, j)))
        .collect();
    let examples = jobs
        .par_iter()
        .map(|&(record, j)| {
            let knowledge = if template.with_knowledge {
                retrieve_knowledge(&index, record, j, params.k)?
                    .iter()
                    .map(|h| corpus.get(&h.doc_id).expect("index matches corpus").clone())
                    .collect()
            } else {
                Vec::new()
            };
            emit_training_example(
                record,
                j,
                &knowledge,
                &template,
                EmitOptions {
                    max_knowledge_chars: params.max_knowledge_chars,
                },
            )
        })
        .collect::<std::result::Result<Vec<TrainingExample>, DataError>>()?;
    manifest.output(output, &to_jsonl(&examples))?;
    manifest.stats = json!({
        "records": records.len(),
        "records_dropped": dropped,
        "examples": examples.len(),
    });
    Ok(manifest)
}

// ---------------------------------------------------------------- candidates

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CandidateParams {
    pub kappa1: usize,
    pub kappa2: usize,
    pub filter: FilterSpec,
}

impl Default for CandidateParams {
    fn default() -> Self {
        Self {
            kappa1: 8,
            kappa2: 0,
            filter: FilterSpec::AnswerMatch,
        }
    }
}

/// Builds one candidate set per kept rationale. Sets with fewer than two
/// distinct documents cannot carry a KL signal; they are skipped and counted.
pub fn cmd_candidates(
    rationales: &Path,
    index: &Path,
    output: &Path,
    params: &CandidateParams,
) -> Result<Manifest> {
    require(index)?;
    let mut manifest = Manifest::new("candidates", params);
    manifest.input(index)?;
    let index = PostingsIndex::load(index)?;
    let (records, dropped) = load_filtered(rationales, &params.filter, &mut manifest)?;
    let jobs: Vec<(&RationaleRecord, usize)> = records
        .iter()
        .flat_map(|r| (0..r.rationales.len()).map(move |j| (r, j)))
        .collect();
    let built: Vec<Option<CandidateSet>> = jobs
        .par_iter()
        .map(
            |&(r, j)| match build_candidate_set(&index, r, j, params.kappa1, params.kappa2) {
                Ok(s) => Ok(Some(s)),
                Err(RerankError::DegenerateCandidateSet { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect::<std::result::Result<_, _>>()?;
    let skipped: Vec<String> = jobs
        .iter()
        .zip(&built)
        .filter(|(_, b)| b.is_none())
        .map(|((r, j), _)| format!("{}/{}", r.example_id, j))
        .collect();
    let sets: Vec<CandidateSet> = built.into_iter().flatten().collect();
    manifest.output(output, &to_jsonl(&sets))?;
    manifest.stats = json!({
        "records": records.len(),
        "records_dropped": dropped,
        "candidate_sets": sets.len(),
        "skipped_degenerate": skipped,
    });
    Ok(manifest)
}

// ---------------------------------------------------------------- rerank-train

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainParams {
    pub tau1: f64,
    pub tau2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub dim: usize,
    pub hash_seed: u64,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        let c = TrainConfig::default();
        Self {
            tau1: DEFAULT_TAU1,
            tau2: DEFAULT_TAU2,
            lr: c.learning_rate,
            epochs: c.epochs,
            optimizer: c.optimizer,
            dim: DEFAULT_DIM,
            hash_seed: 0,
            seed: 0,
        }
    }
}

/// Trains from an identity-initialized model, or continues from `init`.
pub fn cmd_rerank_train(
    candidates: &Path,
    corpus: &Path,
    init: Option<&Path>,
    output: &Path,
    params: &TrainParams,
) -> Result<Manifest> {
    require(candidates)?;
    require(corpus)?;
    let mut manifest = Manifest::new("rerank-train", params);
    manifest.input(candidates)?;
    manifest.input(corpus)?;
    let corpus = Corpus::load_jsonl(corpus)?;
    let sets: Vec<CandidateSet> = read_jsonl(candidates)?;
    let model = match init {
        Some(p) => {
            require(p)?;
            manifest.input(p)?;
            RerankerModel::load(p)?
        }
        None => RerankerModel::identity(params.dim, params.hash_seed),
    };
    let prepared = sets
        .into_iter()
        .map(|s| PreparedSet::new(s, &corpus, &model))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let config = TrainConfig {
        epochs: params.epochs,
        learning_rate: params.lr,
        tau1: params.tau1,
        tau2: params.tau2,
        seed: params.seed,
        shuffle: false,
        optimizer: params.optimizer,
    };
    let before = argmax_agreement(&model, &prepared);
    let outcome = train(&model, &prepared, &config)?;
    manifest.output(output, &outcome.model.to_json_bytes())?;
    manifest.stats = json!({
        "candidate_sets": prepared.len(),
        "initial_loss": outcome.loss_trace.first(),
        "final_loss": outcome.final_loss,
        "argmax_agreement_before": before,
        "argmax_agreement_after": argmax_agreement(&outcome.model, &prepared),
        "loss_trace": outcome.loss_trace,
    });
    Ok(manifest)
}

// ---------------------------------------------------------------- rerank-infer

/// Student used at inference time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerSource {
    Model(PathBuf),
    ScoreFile(PathBuf),
    /// Rerank by BM25 itself (the retrieval baseline).
    Bm25,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferParams {
    pub kappa_star: usize,
    pub k: usize,
}

impl Default for InferParams {
    fn default() -> Self {
        Self {
            kappa_star: DEFAULT_KAPPA_STAR,
            k: 10,
        }
    }
}

/// One line of rerank-infer output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub id: String,
    pub results: Vec<ScoredDoc>,
}

#[derive(Deserialize)]
struct QuestionRow {
    id: String,
    question: String,
}

/// Reranks the BM25 top-`kappa_star` for every question in `questions`
/// (`{"id", "question", ...}` JSONL, e.g. the rationale file).
pub fn cmd_rerank_infer(
    questions: &Path,
    corpus: &Path,
    index: &Path,
    scorer: &ScorerSource,
    output: &Path,
    params: &InferParams,
) -> Result<Manifest> {
    let mut manifest = Manifest::new(
        "rerank-infer",
        json!({ "params": params, "scorer": scorer }),
    );
    let (corpus_data, index_data) = load_corpus_and_index(corpus, index)?;
    manifest.input(corpus)?;
    manifest.input(index)?;
    require(questions)?;
    manifest.input(questions)?;
    let rows: Vec<QuestionRow> = read_jsonl(questions)?;

    let model;
    let score_file;
    let bm25;
    let scorer: &(dyn Scorer + Sync) = match scorer {
        ScorerSource::Model(p) => {
            require(p)?;
            manifest.input(p)?;
            model = RerankerModel::load(p)?;
            &model
        }
        ScorerSource::ScoreFile(p) => {
            require(p)?;
            manifest.input(p)?;
            score_file = ScoreFile::load(p)?;
            &score_file
        }
        ScorerSource::Bm25 => {
            bm25 = Bm25Scorer::new(&index_data, &corpus_data)?;
            &bm25
        }
    };

    let results = rows
        .par_iter()
        .map(|row| {
            let query = Query {
                id: &row.id,
                text: &row.question,
            };
            let results = match rerank_inference(
                &index_data,
                &corpus_data,
                scorer,
                query,
                params.kappa_star,
                params.k,
            ) {
                Ok(r) => r,
                Err(RerankError::EmptyCandidates(_)) => Vec::new(),
                Err(e) => return Err(e),
            };
            Ok(RetrievalResult {
                id: row.id.clone(),
                results,
            })
        })
        .collect::<std::result::Result<Vec<_>, RerankError>>()?;
    let empty = results.iter().filter(|r| r.results.is_empty()).count();
    manifest.output(output, &to_jsonl(&results))?;
    manifest.stats = json!({ "queries": results.len(), "no_candidates": empty });
    Ok(manifest)
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalParams {
    pub ks: Vec<usize>,
    pub all_silver: bool,
    /// Which rationale of each record is the gold one for silver retrieval.
    pub gold_j: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            ks: vec![1, 3, 10],
            all_silver: false,
            gold_j: 0,
        }
    }
}

/// Hits@k of `retrieved` (rerank-infer output) against silver sets built from
/// the rationale file, plus self-consistency accuracy when predictions are given.
pub fn cmd_eval(
    rationales: &Path,
    index: &Path,
    retrieved: Option<&Path>,
    predictions: Option<&Path>,
    output: &Path,
    params: &EvalParams,
) -> Result<Manifest> {
    if params.ks.is_empty() {
        return Err(PipelineError::Usage("at least one k is required".into()));
    }
    if retrieved.is_none() && predictions.is_none() {
        return Err(PipelineError::Usage(
            "eval needs --retrieved and/or --predictions".into(),
        ));
    }
    let mut manifest = Manifest::new("eval", params);
    let mode = if params.all_silver {
        HitsMode::AllSilver
    } else {
        HitsMode::AnyOverlap
    };
    let mut report = MetricsReport {
        hits: BTreeMap::new(),
        hits_mode: mode,
        accuracy: None,
        counts: BTreeMap::new(),
        excluded: 0,
    };

    if let Some(retrieved) = retrieved {
        require(index)?;
        require(rationales)?;
        require(retrieved)?;
        manifest.input(index)?;
        manifest.input(rationales)?;
        manifest.input(retrieved)?;
        let index = PostingsIndex::load(index)?;
        let records = ingest_rationales(rationales)?;
        let silver = records
            .iter()
            .map(|r| {
                Ok((
                    r.example_id.clone(),
                    build_silver(&index, r, params.gold_j)?,
                ))
            })
            .collect::<std::result::Result<HashMap<_, _>, EvalError>>()?;
        let rows: Vec<RetrievalResult> = read_jsonl(retrieved)?;
        let lists: BTreeMap<String, Vec<String>> = rows
            .into_iter()
            .map(|r| (r.id, r.results.into_iter().map(|d| d.doc_id).collect()))
            .collect();
        for &k in &params.ks {
            let h = hits_at_k(&lists, &silver, k, mode)?;
            report.hits.insert(k, h.value);
            report.excluded = h.excluded;
            report
                .counts
                .insert("retrieval_examples".into(), h.evaluated);
        }
    }
    if let Some(predictions) = predictions {
        require(predictions)?;
        manifest.input(predictions)?;
        let bundles = load_predictions(predictions)?;
        report.accuracy = Some(accuracy(&bundles)?);
        report.counts.insert("predictions".into(), bundles.len());
    }
    let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
    bytes.push(b'\n');
    manifest.output(output, &bytes)?;
    manifest.stats = serde_json::to_value(&report).expect("report serializes");
    Ok(manifest)
}

// ---------------------------------------------------------------- simulate

/// Runs one simulation (JSON report) or a sweep (CSV table). Returns the
/// rendered output and, when `output` is given, writes it there.
pub fn cmd_simulate(
    config: &SimConfig,
    sweep: Option<&Sweep>,
    output: Option<&Path>,
) -> Result<(String, Manifest)> {
    let mut manifest = Manifest::new(
        "simulate",
        json!({ "config": config, "sweep": sweep.map(|s| format!("{}={}:{}:{}", s.param.name(), s.start, s.end, s.step)) }),
    );
    let rendered = match sweep {
        Some(s) => sweep_csv(s.param, &run_sweep(config, s)?),
        None => {
            let mut s =
                serde_json::to_string_pretty(&run_simulation(config)?).expect("report serializes");
            s.push('\n');
            s
        }
    };
    if let Some(p) = output {
        manifest.output(p, rendered.as_bytes())?;
    }
    Ok((rendered, manifest))
}

// ---------------------------------------------------------------- whole chain

/// Every path and stage parameter of a full run, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub rationales: PathBuf,
    #[serde(default)]
    pub predictions: Option<PathBuf>,
    /// Directory receiving every stage output and manifest.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub index: IndexParams,
    #[serde(default)]
    pub emit: EmitParams,
    #[serde(default)]
    pub candidates: CandidateParams,
    #[serde(default)]
    pub train: TrainParams,
    #[serde(default)]
    pub infer: InferParams,
    #[serde(default)]
    pub eval: EvalParams,
    #[serde(default)]
    pub simulate: Option<SimConfig>,
}

impl PipelineConfig {
    /// Parses the config (unknown keys are errors) and checks that every input exists.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: Self = serde_json::from_slice(&bytes).map_err(|e| PipelineError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        require(&self.corpus)?;
        require(&self.rationales)?;
        if let Some(p) = &self.predictions {
            require(p)?;
        }
        for f in [&self.emit.filter, &self.candidates.filter] {
            if let FilterSpec::VerdictFile(p) = f {
                require(p)?;
            }
        }
        Ok(())
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

/// Runs index, emit-train, candidates, rerank-train, rerank-infer, eval and
/// (if configured) simulate, writing each stage's output and manifest into
/// `config.output_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Vec<Manifest>> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir).map_err(|source| PipelineError::Io {
        path: config.output_dir.clone(),
        source,
    })?;
    let index = config.output("index.json");
    let train_jsonl = config.output("train.jsonl");
    let candidates = config.output("candidates.jsonl");
    let model = config.output("model.json");
    let retrieved = config.output("retrieved.jsonl");
    let metrics = config.output("metrics.json");
    let train_params = TrainParams {
        seed: config.seed,
        ..config.train
    };

    let mut out = Vec::new();
    let mut record = |m: Manifest, primary: &Path| -> Result<()> {
        m.write(None, primary)?;
        out.push(m);
        Ok(())
    };
    record(cmd_index(&config.corpus, &index, &config.index)?, &index)?;
    record(
        cmd_emit_train(
            &config.rationales,
            &config.corpus,
            &index,
            &train_jsonl,
            &config.emit,
        )?,
        &train_jsonl,
    )?;
    record(
        cmd_candidates(&config.rationales, &index, &candidates, &config.candidates)?,
        &candidates,
    )?;
    record(
        cmd_rerank_train(&candidates, &config.corpus, None, &model, &train_params)?,
        &model,
    )?;
    record(
        cmd_rerank_infer(
            &config.rationales,
            &config.corpus,
            &index,
            &ScorerSource::Model(model.clone()),
            &retrieved,
            &config.infer,
        )?,
        &retrieved,
    )?;
    record(
        cmd_eval(
            &config.rationales,
            &index,
            Some(&retrieved),
            config.predictions.as_deref(),
            &metrics,
            &config.eval,
        )?,
        &metrics,
    )?;
    if let Some(sim) = &config.simulate {
        let path = config.output("simulation.json");
        let (_, m) = cmd_simulate(sim, None, Some(&path))?;
        record(m, &path)?;
    }
    Ok(out)
}
