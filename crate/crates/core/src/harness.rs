//! Repeated stratified cross-validation of a list of methods.
//!
//! Run `r` partitions the data with seed `derive_seed(master, [r])`. In fold
//! `f` every method trains with seed `derive_seed(master, [r, f])`, so
//! methods built on the same member kind see the same bootstrap samples and
//! subspaces. Cells are evaluated in parallel; each result lands in its own
//! slot and all reductions run in index order, so reports are identical for
//! any thread count.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::SystemTime;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::MetaFeatures;
use crate::data::{
    load_cleveland, load_csv, parse_schema_sidecar, random_folds, stratified_folds, DataTable, FeatureMask, Ingested,
};
use crate::ensemble::{fuse_distributions, Fusion};
use crate::error::{Error, Result};
use crate::feature_select::GaConfig;
use crate::learners::{C45Params, Classifier, NaiveBayesParams, RipperParams};
use crate::metrics::{kw_variance, member_mean_accuracy, roc_auc, sensitivity, specificity, ConfusionCounts};
use crate::model::{Hyperparameters, MethodSpec, Model};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    /// Comma-separated processed Cleveland file, class 0 versus 1-4.
    Cleveland,
    /// CSV with a header row and a schema sidecar.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: DataFormat,
    /// Schema sidecar, required for `csv`.
    #[serde(default)]
    pub schema: Option<PathBuf>,
}

fn default_format() -> DataFormat {
    DataFormat::Cleveland
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Mean over every fold of every run.
    AllFolds,
    /// Mean of per-run means.
    PerRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Protocol {
    pub runs: usize,
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
    pub aggregation: Aggregation,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            runs: 25,
            folds: 10,
            seed: 1,
            stratified: true,
            aggregation: Aggregation::AllFolds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleOptions {
    pub n_members: usize,
    pub subspace_fraction: f64,
    /// Fusion behind the reported label and the confusion counts.
    pub label_fusion: Fusion,
    /// Fusion behind the ROC AUC score.
    pub score_fusion: Fusion,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            n_members: 30,
            subspace_fraction: 0.5,
            label_fusion: Fusion::MajorityVote,
            score_fusion: Fusion::AverageProbability,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeOptions {
    pub meta_features: MetaFeatures,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    /// Record every selected and subspace mask.
    pub log_masks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub methods: Vec<String>,
    pub data: DataSource,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default)]
    pub ensemble: EnsembleOptions,
    #[serde(default)]
    pub cascade: CascadeOptions,
    #[serde(default)]
    pub naive_bayes: NaiveBayesParams,
    #[serde(default)]
    pub c45: C45Params,
    #[serde(default)]
    pub ripper: RipperParams,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub report: ReportOptions,
}

impl ExperimentConfig {
    /// Parses TOML; relative data paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.data.path = base_dir.join(&config.data.path);
        if let Some(schema) = &config.data.schema {
            config.data.schema = Some(base_dir.join(schema));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            naive_bayes: self.naive_bayes.clone(),
            c45: self.c45.clone(),
            ripper: self.ripper.clone(),
            ga: self.ga.clone(),
            meta_features: self.cascade.meta_features,
            n_members: self.ensemble.n_members,
            subspace_fraction: self.ensemble.subspace_fraction,
        }
    }

    pub fn method_specs(&self) -> Result<Vec<MethodSpec>> {
        let hp = self.hyperparameters();
        self.methods.iter().map(|m| MethodSpec::parse(m, &hp)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("the method list is empty".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.methods.iter().find(|m| !seen.insert(m.as_str())) {
            return Err(Error::Config(format!("method {dup:?} listed twice")));
        }
        if self.protocol.runs < 1 {
            return Err(Error::Config("protocol.runs must be >= 1".into()));
        }
        if self.protocol.folds < 2 {
            return Err(Error::Config("protocol.folds must be >= 2".into()));
        }
        if self.data.format == DataFormat::Csv && self.data.schema.is_none() {
            return Err(Error::Config("data.schema is required for csv data".into()));
        }
        self.method_specs().map(|_| ())
    }

    /// SHA-256 of the canonical TOML rendering of this configuration.
    pub fn sha256(&self) -> String {
        let canonical = toml::to_string(self).unwrap_or_default();
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn load_dataset(source: &DataSource) -> Result<Ingested> {
    let open = |p: &Path| {
        File::open(p).map_err(|e| Error::DataSource(format!("{}: {e}", p.display())))
    };
    match source.format {
        DataFormat::Cleveland => load_cleveland(open(&source.path)?),
        DataFormat::Csv => {
            let schema_path = source
                .schema
                .as_ref()
                .ok_or_else(|| Error::Config("data.schema is required for csv data".into()))?;
            let text = std::fs::read_to_string(schema_path).map_err(|e| Error::Schema(format!("{}: {e}", schema_path.display())))?;
            load_csv(open(&source.path)?, parse_schema_sidecar(&text)?)
        }
    }
}

/// Metrics of one method on one fold. Rates and AUC are `None` when the
/// test fold lacks the class they need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub run: usize,
    pub fold: usize,
    pub accuracy: f64,
    pub roc_auc: Option<f64>,
    pub tn_rate: Option<f64>,
    pub tp_rate: Option<f64>,
    pub kw_variance: Option<f64>,
    pub member_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation.
    pub sd: f64,
    /// Number of values aggregated.
    pub n: usize,
}

impl Stat {
    fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat {
            mean,
            sd,
            n: values.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub ensemble: bool,
    pub accuracy: Stat,
    pub roc_auc: Option<Stat>,
    pub tn_rate: Option<Stat>,
    pub tp_rate: Option<Stat>,
    pub kw_variance: Option<Stat>,
    pub member_accuracy: Option<Stat>,
    pub folds: Vec<FoldMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_sha256: String,
    pub timestamp: String,
    pub version: String,
    pub rows: usize,
    pub imputed_cells: usize,
}

impl Provenance {
    pub fn render(&self) -> String {
        format!(
            "seed: {}\nconfig_sha256: {}\ntimestamp: {}\nversion: {}\nrows: {}\nimputed_cells: {}\n",
            self.seed, self.config_sha256, self.timestamp, self.version, self.rows, self.imputed_cells
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskLogEntry {
    pub method: String,
    pub run: usize,
    pub fold: usize,
    pub member: Option<usize>,
    pub view: FeatureMask,
    pub selected: Option<FeatureMask>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub provenance: Provenance,
    pub methods: Vec<MethodSummary>,
    pub mask_log: Vec<MaskLogEntry>,
}

impl EvaluationReport {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Loads the configured data and runs the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvaluationReport> {
    let data = load_dataset(&config.data)?;
    run_on_table(config, &data.table, data.imputed_cells)
}

struct Cell {
    metrics: FoldMetrics,
    masks: Vec<MaskLogEntry>,
}

/// Runs the experiment on an already loaded table.
pub fn run_on_table(config: &ExperimentConfig, table: &DataTable, imputed_cells: usize) -> Result<EvaluationReport> {
    config.validate()?;
    let specs = config.method_specs()?;
    let p = &config.protocol;
    if table.n_rows() < p.folds {
        return Err(Error::invalid(format!("{} rows cannot fill {} folds", table.n_rows(), p.folds)));
    }

    let mut splits = Vec::with_capacity(p.runs * p.folds);
    for run in 0..p.runs {
        let seed = derive_seed(p.seed, &[run as u64]);
        let plan = if p.stratified {
            stratified_folds(table, p.folds, seed)?
        } else {
            random_folds(table.n_rows(), p.folds, seed)?
        };
        for fold in 0..p.folds {
            let train = table.select_rows(&plan.train_indices(fold));
            let test = table.select_rows(&plan.test_indices(fold));
            check_disjoint(&train, &test)?;
            splits.push((run, fold, train, test));
        }
    }

    let cells: Vec<(usize, usize)> = (0..specs.len()).flat_map(|m| (0..splits.len()).map(move |s| (m, s))).collect();
    let results: Vec<Cell> = cells
        .par_iter()
        .map(|&(m, s)| {
            let (run, fold, train, test) = &splits[s];
            evaluate_cell(config, &specs[m], *run, *fold, train, test).map_err(|e| Error::Experiment {
                method: specs[m].name.clone(),
                run: *run,
                fold: *fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut methods = Vec::with_capacity(specs.len());
    let mut mask_log = Vec::new();
    for (m, spec) in specs.iter().enumerate() {
        let cells = &results[m * splits.len()..(m + 1) * splits.len()];
        let folds: Vec<FoldMetrics> = cells.iter().map(|c| c.metrics.clone()).collect();
        for c in cells {
            mask_log.extend(c.masks.iter().cloned());
        }
        methods.push(summarize(&spec.name, spec.is_ensemble(), folds, p.aggregation)?);
    }

    Ok(EvaluationReport {
        provenance: Provenance {
            seed: p.seed,
            config_sha256: config.sha256(),
            timestamp: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            rows: table.n_rows(),
            imputed_cells,
        },
        methods,
        mask_log,
    })
}

fn check_disjoint(train: &DataTable, test: &DataTable) -> Result<()> {
    let seen: HashSet<u32> = train.origin().iter().copied().collect();
    if test.origin().iter().any(|o| seen.contains(o)) {
        return Err(Error::invalid("a test row appears in the training split"));
    }
    Ok(())
}

fn evaluate_cell(
    config: &ExperimentConfig,
    spec: &MethodSpec,
    run: usize,
    fold: usize,
    train: &DataTable,
    test: &DataTable,
) -> Result<Cell> {
    let seed = derive_seed(config.protocol.seed, &[run as u64, fold as u64]);
    let model = spec.train(train, seed)?;
    let n = test.n_rows();
    let mut predicted = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    let mut member_correct: Vec<Vec<bool>> = Vec::new();
    for i in 0..n {
        let row = test.row(i);
        match &model {
            Model::Single(m) => {
                let d = m.predict_distribution(row)?;
                predicted.push(d.label());
                scores.push(d.positive());
            }
            Model::Ensemble(e) => {
                let dists = e.member_distributions(row)?;
                predicted.push(fuse_distributions(&dists, config.ensemble.label_fusion)?.label());
                scores.push(fuse_distributions(&dists, config.ensemble.score_fusion)?.positive());
                member_correct.push(dists.iter().map(|d| d.label() == test.label(i)).collect());
            }
        }
    }
    let truth = test.labels();
    let counts = ConfusionCounts::from_labels(truth, &predicted)?;
    let ensemble = matches!(model, Model::Ensemble(_));
    let metrics = FoldMetrics {
        run,
        fold,
        accuracy: counts.accuracy()?,
        roc_auc: defined(roc_auc(truth, &scores))?,
        tn_rate: defined(specificity(&counts))?,
        tp_rate: defined(sensitivity(&counts))?,
        kw_variance: if ensemble && model_members(&model) >= 2 { Some(kw_variance(&member_correct)?) } else { None },
        member_accuracy: if ensemble { Some(member_mean_accuracy(&member_correct)?) } else { None },
    };
    let masks = if config.report.log_masks {
        model
            .masks()?
            .into_iter()
            .map(|r| MaskLogEntry {
                method: spec.name.clone(),
                run,
                fold,
                member: r.member,
                view: r.view,
                selected: r.selected,
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Cell { metrics, masks })
}

fn model_members(model: &Model) -> usize {
    match model {
        Model::Single(_) => 1,
        Model::Ensemble(e) => e.len(),
    }
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn summarize(name: &str, ensemble: bool, folds: Vec<FoldMetrics>, aggregation: Aggregation) -> Result<MethodSummary> {
    let stat = |pick: &dyn Fn(&FoldMetrics) -> Option<f64>| -> Option<Stat> {
        match aggregation {
            Aggregation::AllFolds => Stat::of(&folds.iter().filter_map(pick).collect::<Vec<_>>()),
            Aggregation::PerRun => {
                let runs = folds.iter().map(|f| f.run).max().map_or(0, |r| r + 1);
                let means: Vec<f64> = (0..runs)
                    .filter_map(|r| {
                        let v: Vec<f64> = folds.iter().filter(|f| f.run == r).filter_map(pick).collect();
                        Stat::of(&v).map(|s| s.mean)
                    })
                    .collect();
                Stat::of(&means)
            }
        }
    };
    let accuracy = stat(&|f| Some(f.accuracy)).ok_or_else(|| Error::invalid("no folds evaluated"))?;
    Ok(MethodSummary {
        method: name.to_string(),
        ensemble,
        accuracy,
        roc_auc: stat(&|f| f.roc_auc),
        tn_rate: stat(&|f| f.tn_rate),
        tp_rate: stat(&|f| f.tp_rate),
        kw_variance: stat(&|f| f.kw_variance),
        member_accuracy: stat(&|f| f.member_accuracy),
        folds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::Config(format!("unknown report format {other:?}; expected csv or markdown"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 13] = [
    "method",
    "accuracy",
    "accuracy_sd",
    "roc_auc",
    "roc_auc_sd",
    "tn_rate",
    "tn_rate_sd",
    "tp_rate",
    "tp_rate_sd",
    "kw_variance",
    "kw_variance_sd",
    "member_accuracy",
    "member_accuracy_sd",
];

fn num(v: f64) -> String {
    format!("{v:.5}")
}

fn stat_cells(s: Option<Stat>) -> [String; 2] {
    match s {
        Some(s) => [num(s.mean), num(s.sd)],
        None => [String::new(), String::new()],
    }
}

/// Renders the report body (no provenance) with five decimals.
pub fn emit_report(report: &EvaluationReport, format: ReportFormat) -> Result<String> {
    if report.methods.is_empty() {
        return Err(Error::invalid("report has no methods"));
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::invalid(format!("csv: {e}"));
            w.write_record(CSV_COLUMNS).map_err(io)?;
            for m in &report.methods {
                let mut record = vec![m.method.clone()];
                for s in [Some(m.accuracy), m.roc_auc, m.tn_rate, m.tp_rate, m.kw_variance, m.member_accuracy] {
                    record.extend(stat_cells(s));
                }
                w.write_record(&record).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
            String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let pm = |s: Option<Stat>| match s {
                Some(s) => format!("{} ± {}", num(s.mean), num(s.sd)),
                None => "n/a".to_string(),
            };
            out.push_str("| Method | Accuracy (%) | ROC AUC | TN Rate | TP Rate |\n");
            out.push_str("|---|---:|---:|---:|---:|\n");
            for m in &report.methods {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    m.method,
                    pm(Some(m.accuracy)),
                    pm(m.roc_auc),
                    pm(m.tn_rate),
                    pm(m.tp_rate)
                );
            }
            let ensembles: Vec<&MethodSummary> = report.methods.iter().filter(|m| m.ensemble).collect();
            if !ensembles.is_empty() {
                out.push_str("\n| Method | KW variance | Member accuracy (%) |\n");
                out.push_str("|---|---:|---:|\n");
                for m in ensembles {
                    let _ = writeln!(out, "| {} | {} | {} |", m.method, pm(m.kw_variance), pm(m.member_accuracy));
                }
            }
            Ok(out)
        }
    }
}

/// One line per logged mask: method, run, fold, member, view, selection.
pub fn emit_mask_log(report: &EvaluationReport) -> String {
    let mut out = String::from("method\trun\tfold\tmember\tview\tselected\n");
    for e in &report.mask_log {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.method,
            e.run,
            e.fold,
            e.member.map_or("-".to_string(), |m| m.to_string()),
            e.view,
            e.selected.as_ref().map_or("-".to_string(), |s| s.to_string())
        );
    }
    out
}
