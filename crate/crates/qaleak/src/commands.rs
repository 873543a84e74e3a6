//! The analysis stages behind each subcommand. Every stage reads its inputs
//! from [`RunConfig`], writes its artifacts under the output directory and is
//! deterministic given the same inputs and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use qaleak_core::{
    auto_label_empty, compute_answer_overlap, dense_predict, evaluate, sample_for_annotation,
    stratify, AnnotationLog, AnnotationSample, AnswerOverlapResult, CandidateIndex, CandidateSet,
    DatasetSplit, EvalError, NnPrediction, SplitName, StratifiedReport, StratumAssignment,
    TfIdfIndex,
};
use serde::{Deserialize, Serialize};

use crate::embeddings::load_embeddings;
use crate::error::{Error, Result};
use crate::io::{load_dataset, write_json, write_jsonl, DatasetFormat};
use crate::predictions::{load_predictions, write_nn_predictions};
use crate::report::{render_report, ReportFormat};
use crate::server::{self, AppState};
use crate::store::{self, AnnotationStore};

pub const ANSWER_OVERLAP_FILE: &str = "answer_overlap.jsonl";
pub const OVERLAP_SUMMARY_FILE: &str = "overlap_summary.json";
pub const CANDIDATES_FILE: &str = "candidates.jsonl";
pub const SAMPLE_FILE: &str = "sample.json";
pub const AUTO_LABELS_FILE: &str = "auto_labels.jsonl";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";
pub const STRATA_FILE: &str = "strata.jsonl";

/// Prefix given to dev ids when dev items join the training side.
pub const DEV_ID_PREFIX: &str = "dev/";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedPath {
    pub name: String,
    pub path: PathBuf,
}

impl std::str::FromStr for NamedPath {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (name, path) = s
            .split_once('=')
            .filter(|(n, p)| !n.is_empty() && !p.is_empty())
            .ok_or_else(|| format!("expected NAME=PATH, got {s:?}"))?;
        Ok(Self {
            name: name.to_string(),
            path: PathBuf::from(path),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NnMode {
    Tfidf,
    Dense,
}

impl NnMode {
    pub fn name(self) -> &'static str {
        match self {
            NnMode::Tfidf => "tfidf",
            NnMode::Dense => "dense",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub format: Option<DatasetFormat>,
    /// Dataset label used in samples and reports; defaults to the test file stem.
    pub dataset: Option<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub sample_size: usize,
    pub cap: usize,
    pub include_dev: bool,
    /// Annotation store; defaults to `annotations.jsonl` in the output directory.
    pub annotations: Option<PathBuf>,
    pub predictions: Vec<NamedPath>,
    pub plain_predictions: bool,
    pub port: u16,
    pub ui_dir: Option<PathBuf>,
    pub embeddings_train: Option<PathBuf>,
    pub embeddings_test: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            train: None,
            dev: None,
            test: None,
            format: None,
            dataset: None,
            out: out.into(),
            seed: 0,
            sample_size: 1000,
            cap: qaleak_core::DEFAULT_CANDIDATE_CAP,
            include_dev: false,
            annotations: None,
            predictions: Vec::new(),
            plain_predictions: false,
            port: 8080,
            ui_dir: None,
            embeddings_train: None,
            embeddings_test: None,
        }
    }

    pub fn out_path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    pub fn annotations_path(&self) -> PathBuf {
        self.annotations
            .clone()
            .unwrap_or_else(|| self.out_path(ANNOTATIONS_FILE))
    }

    fn dataset_name(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| {
            self.test
                .as_deref()
                .and_then(Path::file_stem)
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    fn load(&self, path: Option<&Path>, flag: &str, name: SplitName) -> Result<DatasetSplit> {
        let path = path.ok_or_else(|| Error::Invalid(format!("{flag} is required")))?;
        let format = self.format.unwrap_or_else(|| DatasetFormat::detect(path));
        load_dataset(path, format, name)
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(Error::io(&self.out))
    }
}

/// Loaded splits. `train` already contains dev items when `include_dev` is set.
pub struct Inputs {
    pub dataset: String,
    pub train: DatasetSplit,
    pub test: DatasetSplit,
}

impl Inputs {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let mut train = config.load(config.train.as_deref(), "--train", SplitName::Train)?;
        let test = config.load(config.test.as_deref(), "--test", SplitName::Test)?;
        if let Some(dev_path) = config.dev.as_deref() {
            let dev = config.load(Some(dev_path), "--dev", SplitName::Dev)?;
            if config.include_dev {
                train = train.merged_with(&dev, DEV_ID_PREFIX).map_err(|source| Error::Dataset {
                    path: dev_path.into(),
                    line: 0,
                    source,
                })?;
            }
        }
        if test.is_empty() {
            return Err(Error::Invalid("the test split is empty".into()));
        }
        Ok(Self {
            dataset: config.dataset_name(),
            train,
            test,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapSummary {
    pub dataset: String,
    pub train_items: usize,
    pub test_items: usize,
    pub overlapping: usize,
    pub answer_overlap_percent: f64,
    /// `answer_overlap_percent` to one decimal place.
    pub answer_overlap: String,
}

impl OverlapSummary {
    pub fn new(dataset: &str, train_items: usize, results: &[AnswerOverlapResult]) -> Self {
        let overlapping = results.iter().filter(|r| r.overlapping).count();
        let percent = 100.0 * overlapping as f64 / results.len() as f64;
        Self {
            dataset: dataset.to_string(),
            train_items,
            test_items: results.len(),
            overlapping,
            answer_overlap_percent: percent,
            answer_overlap: format!("{percent:.1}"),
        }
    }
}

fn overlap_stage(config: &RunConfig, inputs: &Inputs) -> Result<(Vec<AnswerOverlapResult>, OverlapSummary)> {
    let results = compute_answer_overlap(&inputs.test, &inputs.train);
    let summary = OverlapSummary::new(&inputs.dataset, inputs.train.len(), &results);
    write_jsonl(&config.out_path(ANSWER_OVERLAP_FILE), &results)?;
    write_json(&config.out_path(OVERLAP_SUMMARY_FILE), &summary)?;
    Ok((results, summary))
}

pub fn cmd_overlap(config: &RunConfig) -> Result<OverlapSummary> {
    config.ensure_out()?;
    let inputs = Inputs::load(config)?;
    Ok(overlap_stage(config, &inputs)?.1)
}

fn candidates_for<'a>(
    index: &CandidateIndex<'_>,
    test: &DatasetSplit,
    ids: impl IntoIterator<Item = &'a str>,
    cap: usize,
) -> Vec<CandidateSet> {
    ids.into_iter()
        .filter_map(|id| test.get(id))
        .map(|item| index.candidates(item, cap))
        .collect()
}

fn check_cap(config: &RunConfig) -> Result<()> {
    if config.cap == 0 {
        return Err(Error::Invalid("--cap must be at least 1".into()));
    }
    Ok(())
}

pub fn cmd_candidates(config: &RunConfig) -> Result<Vec<CandidateSet>> {
    check_cap(config)?;
    config.ensure_out()?;
    let inputs = Inputs::load(config)?;
    let index = CandidateIndex::new(&inputs.train);
    let sets = candidates_for(&index, &inputs.test, inputs.test.iter().map(|i| i.id.as_str()), config.cap);
    write_jsonl(&config.out_path(CANDIDATES_FILE), &sets)?;
    Ok(sets)
}

fn draw_sample(config: &RunConfig, inputs: &Inputs) -> Result<AnnotationSample> {
    if config.sample_size == 0 {
        return Err(Error::Invalid("--sample-size must be at least 1".into()));
    }
    Ok(sample_for_annotation(&inputs.dataset, &inputs.test, config.sample_size, config.seed))
}

fn by_test_id(sets: Vec<CandidateSet>) -> BTreeMap<String, CandidateSet> {
    sets.into_iter().map(|s| (s.test_id.clone(), s)).collect()
}

/// Sample, candidate sets of the sampled ids, and the automatic labels.
struct SampleStage {
    sample: AnnotationSample,
    candidates: BTreeMap<String, CandidateSet>,
}

impl SampleStage {
    fn compute(config: &RunConfig, inputs: &Inputs, index: &CandidateIndex<'_>) -> Result<Self> {
        check_cap(config)?;
        let sample = draw_sample(config, inputs)?;
        let candidates = by_test_id(candidates_for(
            index,
            &inputs.test,
            sample.test_ids.iter().map(String::as_str),
            config.cap,
        ));
        Ok(Self { sample, candidates })
    }

    fn write(&self, config: &RunConfig) -> Result<usize> {
        write_json(&config.out_path(SAMPLE_FILE), &self.sample)?;
        let auto = auto_label_empty(&self.sample, &self.candidates);
        write_jsonl(&config.out_path(AUTO_LABELS_FILE), &auto)?;
        Ok(auto.len())
    }

    /// Annotation state with automatic labels applied (not persisted to the store).
    fn log(&self) -> AnnotationLog {
        let mut log = AnnotationLog::new(self.sample.clone(), &self.candidates);
        for record in auto_label_empty(&self.sample, &self.candidates) {
            log.record(record).expect("automatic labels are valid");
        }
        log
    }

    /// [`Self::log`] plus every record of the annotation store, when present.
    fn replayed_log(&self, config: &RunConfig) -> Result<AnnotationLog> {
        let mut log = self.log();
        let path = config.annotations_path();
        if path.exists() {
            store::replay(&path, &mut log)?;
        }
        Ok(log)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleOutcome {
    pub sample: AnnotationSample,
    pub auto_labeled: usize,
}

pub fn cmd_sample(config: &RunConfig) -> Result<SampleOutcome> {
    config.ensure_out()?;
    let inputs = Inputs::load(config)?;
    let index = CandidateIndex::new(&inputs.train);
    let stage = SampleStage::compute(config, &inputs, &index)?;
    let auto_labeled = stage.write(config)?;
    Ok(SampleOutcome {
        sample: stage.sample,
        auto_labeled,
    })
}

fn incomplete(ids: Vec<String>) -> Error {
    Error::Invalid(format!(
        "{} sampled items still need annotation: {}",
        ids.len(),
        ids.join(", ")
    ))
}

fn strata_from(log: &AnnotationLog, overlap: &[AnswerOverlapResult]) -> Result<Vec<StratumAssignment>> {
    stratify(log.sample(), &log.effective_labels(), overlap).map_err(|e| match e {
        EvalError::MissingLabels(ids) => incomplete(ids),
        other => other.into(),
    })
}

pub fn cmd_stratify(config: &RunConfig) -> Result<Vec<StratumAssignment>> {
    config.ensure_out()?;
    let inputs = Inputs::load(config)?;
    let index = CandidateIndex::new(&inputs.train);
    let stage = SampleStage::compute(config, &inputs, &index)?;
    let overlap = compute_answer_overlap(&inputs.test, &inputs.train);
    let strata = strata_from(&stage.replayed_log(config)?, &overlap)?;
    write_jsonl(&config.out_path(STRATA_FILE), &strata)?;
    Ok(strata)
}

fn report_file(name: &str) -> String {
    format!("report_{name}.json")
}

fn evaluate_all(config: &RunConfig, inputs: &Inputs, strata: &[StratumAssignment]) -> Result<Vec<StratifiedReport>> {
    let mut reports = Vec::new();
    for named in &config.predictions {
        let predictions = load_predictions(&named.path, config.plain_predictions, &inputs.test)?;
        let report = evaluate(&inputs.dataset, &named.name, &predictions, &inputs.test, strata)
            .map_err(|e| Error::Invalid(format!("{}: {e}", named.path.display())))?;
        if !report.missing_predictions.is_empty() {
            log::warn!(
                "{}: {} of {} test items have no prediction and are scored as wrong",
                named.name,
                report.missing_predictions.len(),
                report.total.count
            );
        }
        let path = config.out_path(&report_file(&named.name));
        fs::write(&path, render_report(&report, ReportFormat::Machine)).map_err(Error::io(&path))?;
        reports.push(report);
    }
    Ok(reports)
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<Vec<StratifiedReport>> {
    if config.predictions.is_empty() {
        return Err(Error::Invalid("at least one --predictions NAME=PATH is required".into()));
    }
    config.ensure_out()?;
    let inputs = Inputs::load(config)?;
    let index = CandidateIndex::new(&inputs.train);
    let stage = SampleStage::compute(config, &inputs, &index)?;
    let overlap = compute_answer_overlap(&inputs.test, &inputs.train);
    let strata = strata_from(&stage.replayed_log(config)?, &overlap)?;
    evaluate_all(config, &inputs, &strata)
}

pub fn nn_file(mode: NnMode) -> String {
    format!("nn_{}.jsonl", mode.name())
}

fn companion_ids(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".ids");
    PathBuf::from(p)
}

pub fn cmd_nn(config: &RunConfig, mode: NnMode) -> Result<Vec<NnPrediction>> {
    config.ensure_out()?;
    let inputs = Inputs::load(config)?;
    let predictions = match mode {
        NnMode::Tfidf => {
            let index = TfIdfIndex::build(&inputs.train)?;
            inputs.test.iter().map(|item| index.predict(item, &inputs.train)).collect()
        }
        NnMode::Dense => {
            let required = |p: &Option<PathBuf>, flag: &str| {
                p.clone()
                    .ok_or_else(|| Error::Invalid(format!("{flag} is required in dense mode")))
            };
            let train_path = required(&config.embeddings_train, "--embeddings-train")?;
            let test_path = required(&config.embeddings_test, "--embeddings-test")?;
            let train_table = load_embeddings(&train_path, &companion_ids(&train_path))?;
            let test_table = load_embeddings(&test_path, &companion_ids(&test_path))?;
            if let Some(unknown) = test_table.ids().iter().find(|id| inputs.test.get(id).is_none()) {
                return Err(Error::Embedding {
                    path: test_path,
                    message: format!("id {unknown:?} is not in the test split"),
                });
            }
            dense_predict(&test_table, &train_table, &inputs.train)?
        }
    };
    write_nn_predictions(&config.out_path(&nn_file(mode)), &predictions)?;
    Ok(predictions)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub summary: OverlapSummary,
    pub sample_size: usize,
    pub auto_labeled: usize,
    /// Sampled ids without any label yet.
    pub remaining: Vec<String>,
    pub reports: Vec<StratifiedReport>,
}

/// Overlap, candidates, sample and automatic labels; then, once every sampled
/// item is labeled, strata and one report per prediction file.
pub fn cmd_pipeline(config: &RunConfig) -> Result<PipelineOutcome> {
    check_cap(config)?;
    config.ensure_out()?;
    let inputs = Inputs::load(config)?;
    let (overlap, summary) = overlap_stage(config, &inputs)?;

    let index = CandidateIndex::new(&inputs.train);
    let all = candidates_for(&index, &inputs.test, inputs.test.iter().map(|i| i.id.as_str()), config.cap);
    write_jsonl(&config.out_path(CANDIDATES_FILE), &all)?;
    let mut candidates = by_test_id(all);

    let sample = draw_sample(config, &inputs)?;
    candidates.retain(|id, _| sample.contains(id));
    let stage = SampleStage { sample, candidates };
    let auto_labeled = stage.write(config)?;

    let log = stage.replayed_log(config)?;
    let remaining: Vec<String> = log.unlabeled().into_iter().map(str::to_string).collect();
    let mut reports = Vec::new();
    if remaining.is_empty() {
        let strata = strata_from(&log, &overlap)?;
        write_jsonl(&config.out_path(STRATA_FILE), &strata)?;
        reports = evaluate_all(config, &inputs, &strata)?;
    } else if !config.predictions.is_empty() {
        return Err(incomplete(remaining));
    }
    Ok(PipelineOutcome {
        summary,
        sample_size: stage.sample.len(),
        auto_labeled,
        remaining,
        reports,
    })
}

/// Builds the annotation server state for `config`.
pub fn serve_state(config: &RunConfig) -> Result<Arc<AppState>> {
    config.ensure_out()?;
    let inputs = Inputs::load(config)?;
    let index = CandidateIndex::new(&inputs.train);
    let stage = SampleStage::compute(config, &inputs, &index)?;
    stage.write(config)?;
    let store = AnnotationStore::open(&config.annotations_path(), stage.log())?;
    let Inputs { train, test, .. } = inputs;
    Ok(Arc::new(AppState::new(store, train, test, stage.candidates)))
}

pub async fn cmd_serve(config: &RunConfig) -> Result<()> {
    let state = serve_state(config)?;
    let addr = ("127.0.0.1", config.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Invalid(format!("cannot bind port {}: {e}", config.port)))?;
    let local = listener.local_addr().map_err(|e| Error::Invalid(e.to_string()))?;
    log::info!("annotation API listening on http://{local}");
    println!("serving annotation API on http://{local} (Ctrl-C to stop)");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    server::serve(state, listener, config.ui_dir.clone(), shutdown)
        .await
        .map_err(|e| Error::Invalid(format!("server error: {e}")))
}
