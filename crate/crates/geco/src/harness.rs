//! Experiment orchestration: repeated random train/test splits, per-split
//! training and explanation, CSV results, and a markdown summary table.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{geco_explain, random_explain, ThresholdMode};
use crate::gnn::{predict, train, GcnModel, TrainConfig};
use crate::graph::{Dataset, Graph, NodeMask};
use crate::metrics::{evaluate, pairwise_sum, CharactWeights};
use crate::seed::{self, Role};
use crate::synthgen::{build_dataset, DatasetRecipe};

/// Explanation methods the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Geco,
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Geco => "geco",
            Method::Random => "random",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geco" => Ok(Method::Geco),
            "random" => Ok(Method::Random),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

/// Full experiment description. `dataset` is a built-in recipe name or a
/// path to a dataset JSON file.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: String,
    /// Overrides the per-class size of built-in recipes; ignored for files.
    pub graphs_per_class: Option<usize>,
    pub num_splits: usize,
    pub train_ratio: f64,
    pub train_config: TrainConfig,
    pub hidden_dim: usize,
    pub threshold_mode: ThresholdMode,
    pub methods: Vec<Method>,
    pub charact_weights: CharactWeights,
    pub output_dir: Option<PathBuf>,
    /// Master seed: dataset generation, split shuffles, model init, and
    /// baseline masks all derive from it.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: "ba_house_cycle".into(),
            graphs_per_class: Some(150),
            num_splits: 10,
            train_ratio: 0.8,
            train_config: TrainConfig::default(),
            hidden_dim: 20,
            threshold_mode: ThresholdMode::Mean,
            methods: vec![Method::Geco, Method::Random],
            charact_weights: CharactWeights::equal(),
            output_dir: None,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(Error::InvalidExperimentConfig(format!(
                "train_ratio {} outside (0, 1)",
                self.train_ratio
            )));
        }
        if self.num_splits == 0 {
            return Err(Error::InvalidExperimentConfig("num_splits must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidExperimentConfig("no methods selected".into()));
        }
        Ok(())
    }
}

/// Seeded shuffle then prefix split; train size = round(ratio * n). The two
/// index sets are disjoint and cover `0..n`.
pub fn split(n: usize, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = seed::rng(seed, Role::Split, &[]);
    indices.shuffle(&mut rng);
    let train_size = ((ratio * n as f64).round() as usize).min(n);
    let test = indices.split_off(train_size);
    (indices, test)
}

/// One results row: a (split, method) pair. `explain_seconds` is the mean
/// per-graph wall time; every other column is deterministic given the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsRow {
    pub dataset: String,
    pub method: String,
    pub split_seed: u64,
    pub fid_plus: f64,
    pub fid_minus: f64,
    pub charact: f64,
    pub gea: f64,
    pub explain_seconds: f64,
}

/// Aggregate of one metric column: mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn over(values: &[f64]) -> Self {
        let n = values.len();
        let mean = pairwise_sum(values) / n as f64;
        let std = if n <= 1 {
            0.0
        } else {
            let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&sq) / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

/// Per-(dataset, method) aggregate over splits, in Fid+/Fid-/charact/GEA order.
#[derive(Debug, Clone)]
pub struct MethodSummary {
    pub dataset: String,
    pub method: String,
    pub fid_plus: MeanStd,
    pub fid_minus: MeanStd,
    pub charact: MeanStd,
    pub gea: MeanStd,
    pub splits: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<ResultsRow>,
    /// Test classification accuracy per completed split.
    pub accuracy: Vec<f64>,
    /// Splits aborted by training divergence: (split index, diagnostic).
    pub failed_splits: Vec<(usize, String)>,
}

impl ExperimentOutcome {
    pub fn summaries(&self) -> Vec<MethodSummary> {
        summarize(&self.rows)
    }
}

fn resolve_dataset(cfg: &ExperimentConfig) -> Result<(String, Dataset)> {
    if Path::new(&cfg.dataset).exists() {
        let name = Path::new(&cfg.dataset)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| cfg.dataset.clone());
        return Ok((name, Dataset::load_json(&cfg.dataset)?));
    }
    let mut recipe = DatasetRecipe::builtin(&cfg.dataset)?;
    if let Some(per_class) = cfg.graphs_per_class {
        recipe.graphs_per_class = per_class;
    }
    recipe.seed = seed::derive(cfg.seed, &[Role::Dataset as u64]);
    Ok((recipe.name.clone(), build_dataset(&recipe)?))
}

/// The full protocol: for every split, train a fresh model on the train
/// portion, measure test accuracy, explain every test graph with every
/// method, and score the explanations against ground truth. Splits whose
/// training diverges are excluded from the results and reported.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let (dataset_name, data) = resolve_dataset(cfg)?;
    let mut rows = Vec::new();
    let mut accuracy = Vec::new();
    let mut failed_splits = Vec::new();

    for split_index in 0..cfg.num_splits {
        let split_seed = seed::derive(cfg.seed, &[Role::Split as u64, split_index as u64]);
        let (train_idx, test_idx) = split(data.len(), cfg.train_ratio, split_seed);
        debug_assert!(train_idx.iter().all(|i| !test_idx.contains(i)));

        let train_graphs: Vec<Graph> = train_idx.iter().map(|&i| data.graphs[i].clone()).collect();
        let model = GcnModel::init(
            data.feature_dim,
            cfg.hidden_dim,
            data.num_classes,
            seed::derive(cfg.seed, &[Role::ModelInit as u64, split_index as u64]),
        );
        let mut train_config = cfg.train_config.clone();
        train_config.seed = seed::derive(cfg.seed, &[Role::Shuffle as u64, split_index as u64]);
        let trained = match train(model, &train_graphs, &train_config) {
            Ok((model, _)) => model,
            Err(err @ (Error::NonFiniteLoss { .. } | Error::NonFiniteParams { .. })) => {
                failed_splits.push((split_index, err.to_string()));
                continue;
            }
            Err(err) => return Err(err),
        };

        let test_graphs: Vec<&Graph> = test_idx.iter().map(|&i| &data.graphs[i]).collect();
        let correct: usize = test_graphs
            .iter()
            .map(|g| {
                let (pred, _) = predict(&trained, g)?;
                Ok(usize::from(Some(pred) == g.label()))
            })
            .collect::<Result<Vec<usize>>>()?
            .into_iter()
            .sum();
        accuracy.push(correct as f64 / test_graphs.len().max(1) as f64);

        for &method in &cfg.methods {
            let started = Instant::now();
            let explanations: Vec<NodeMask> = match method {
                Method::Geco => test_graphs
                    .iter()
                    .map(|g| Ok(geco_explain(&trained, g, cfg.threshold_mode)?.mask))
                    .collect::<Result<_>>()?,
                Method::Random => test_idx
                    .iter()
                    .map(|&i| {
                        let mut rng = seed::rng(
                            cfg.seed,
                            Role::RandomMask,
                            &[split_index as u64, i as u64],
                        );
                        random_explain(&data.graphs[i], &mut rng)
                    })
                    .collect(),
            };
            let elapsed = started.elapsed().as_secs_f64();

            let graphs_owned: Vec<Graph> = test_graphs.iter().map(|&g| g.clone()).collect();
            let ground_truths: Vec<Vec<NodeMask>> = test_idx
                .iter()
                .map(|&i| data.ground_truth[i].clone())
                .collect();
            let report = evaluate(
                &trained,
                &graphs_owned,
                &explanations,
                &ground_truths,
                cfg.charact_weights,
            )?;
            rows.push(ResultsRow {
                dataset: dataset_name.clone(),
                method: method.name().to_string(),
                split_seed,
                fid_plus: report.fid_plus,
                fid_minus: report.fid_minus,
                charact: report.charact,
                gea: report.gea,
                explain_seconds: elapsed / test_graphs.len().max(1) as f64,
            });
        }
    }

    let outcome = ExperimentOutcome {
        rows,
        accuracy,
        failed_splits,
    };
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir)?;
        write_results_csv(dir.join("results.csv"), &outcome.rows)?;
        fs::write(dir.join("report.md"), report(&outcome.rows))?;
    }
    Ok(outcome)
}

/// Serialize rows in the documented column order.
pub fn write_results_csv(path: impl AsRef<Path>, rows: &[ResultsRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn results_csv_string(rows: &[ResultsRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::MalformedCsv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::MalformedCsv(e.to_string()))
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultsRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

fn summarize(rows: &[ResultsRow]) -> Vec<MethodSummary> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for row in rows {
        let key = (row.dataset.clone(), row.method.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(dataset, method)| {
            let of = |f: fn(&ResultsRow) -> f64| {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.dataset == dataset && r.method == method)
                    .map(f)
                    .collect();
                (MeanStd::over(&values), values.len())
            };
            let (fid_plus, splits) = of(|r| r.fid_plus);
            let (fid_minus, _) = of(|r| r.fid_minus);
            let (charact, _) = of(|r| r.charact);
            let (gea, _) = of(|r| r.gea);
            MethodSummary {
                dataset,
                method,
                fid_plus,
                fid_minus,
                charact,
                gea,
                splits,
            }
        })
        .collect()
}

/// Markdown summary: one row per (dataset, method), metric columns as
/// "mean ± std" in Fid+ / Fid- / charact / GEA order.
pub fn report(rows: &[ResultsRow]) -> String {
    let mut out = String::new();
    out.push_str("| Dataset | Method | Fid+ ↑ | Fid- ↓ | charact ↑ | GEA ↑ |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for s in summarize(rows) {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} |\n",
            s.dataset, s.method, s.fid_plus, s.fid_minus, s.charact, s.gea
        ));
    }
    out
}
