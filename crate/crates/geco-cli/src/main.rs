//! `geco` command line: generate datasets, train models, inspect
//! communities, explain predictions, evaluate explainers, and run the full
//! repeated-split experiment.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geco::community::{greedy_modularity_communities, modularity};
use geco::explain::{dot_export, geco_explain, random_explain, ThresholdMode};
use geco::gnn::{predict, train, GcnModel, TrainConfig};
use geco::graph::{Dataset, NodeMask};
use geco::harness::{
    read_results_csv, report, run_experiment, ExperimentConfig, Method, ResultsRow,
};
use geco::metrics::{evaluate, CharactWeights};
use geco::synthgen::{build_dataset, DatasetRecipe};

#[derive(Parser)]
#[command(
    name = "geco",
    about = "Community-based explanations for GCN graph classifiers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic motif dataset from a named or file recipe.
    Generate(GenerateArgs),
    /// Train a GCN classifier on a dataset file.
    Train(TrainArgs),
    /// Print the community partition and modularity of one graph.
    Communities(CommunitiesArgs),
    /// Explain the prediction for one graph.
    Explain(ExplainArgs),
    /// Run explainers over a whole dataset file and score them.
    Evaluate(EvaluateArgs),
    /// Run the full repeated-split experiment.
    Run(RunArgs),
    /// Render a markdown summary table from a results CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Built-in recipe name (e.g. ba_house_cycle) or a recipe JSON file.
    #[arg(long)]
    recipe: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Graphs per class; defaults to the recipe's own count.
    #[arg(long)]
    graphs_per_class: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 20)]
    hidden: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CommunitiesArgs {
    #[arg(long)]
    data: PathBuf,
    /// Graph index inside the dataset file.
    #[arg(long)]
    index: usize,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    index: usize,
    #[arg(long, default_value = "mean")]
    mode: String,
    /// Optional DOT file with the explanation mask highlighted in red.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated subset of {geco, random}.
    #[arg(long, default_value = "geco,random")]
    methods: String,
    #[arg(long, default_value = "mean")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON file; flags below override nothing when set.
    #[arg(long, conflicts_with_all = ["recipe"])]
    config: Option<PathBuf>,
    /// Built-in recipe name or dataset JSON path.
    #[arg(long)]
    recipe: Option<String>,
    #[arg(long, default_value_t = 150)]
    graphs_per_class: usize,
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, default_value_t = 0.8)]
    ratio: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 20)]
    hidden: usize,
    #[arg(long, default_value = "mean")]
    mode: String,
    #[arg(long, default_value = "geco,random")]
    methods: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Large protocol: 500 graphs per class and 100 splits.
    #[arg(long, default_value_t = false)]
    full: bool,
    /// Output directory; falls back to $GECO_OUT_DIR, then ./geco-results.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
}

/// Subset of ExperimentConfig accepted as a JSON file for `run --config`.
#[derive(serde::Deserialize)]
struct RunFileConfig {
    dataset: String,
    #[serde(default)]
    graphs_per_class: Option<usize>,
    num_splits: usize,
    train_ratio: f64,
    epochs: usize,
    learning_rate: f64,
    batch_size: usize,
    hidden_dim: usize,
    threshold_mode: String,
    methods: Vec<String>,
    #[serde(default = "default_weight")]
    w_plus: f64,
    seed: u64,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn default_weight() -> f64 {
    0.5
}

fn parse_methods(text: &str) -> Result<Vec<Method>, geco::Error> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn default_out_dir() -> PathBuf {
    std::env::var_os("GECO_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("geco-results"))
}

fn load_recipe(name_or_path: &str) -> Result<DatasetRecipe, geco::Error> {
    if std::path::Path::new(name_or_path).exists() {
        let text = std::fs::read_to_string(name_or_path)?;
        Ok(serde_json::from_str(&text)?)
    } else {
        DatasetRecipe::builtin(name_or_path)
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), geco::Error> {
    let mut recipe = load_recipe(&args.recipe)?;
    recipe.seed = args.seed;
    if let Some(per_class) = args.graphs_per_class {
        recipe.graphs_per_class = per_class;
    }
    let data = build_dataset(&recipe)?;
    data.save_json(&args.out)?;
    println!(
        "wrote {} graphs ({} classes, feature dim {}) to {}",
        data.len(),
        data.num_classes,
        data.feature_dim,
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), geco::Error> {
    let data = Dataset::load_json(&args.data)?;
    let cfg = TrainConfig {
        learning_rate: args.lr,
        batch_size: args.batch,
        epochs: args.epochs,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let model = GcnModel::init(data.feature_dim, args.hidden, data.num_classes, args.seed);
    let (trained, history) = train(model, &data.graphs, &cfg)?;
    trained.save_json(&args.out)?;
    let correct = data
        .graphs
        .iter()
        .filter(|g| predict(&trained, g).map(|(c, _)| Some(c) == g.label()).unwrap_or(false))
        .count();
    println!(
        "trained {} epochs; final loss {:.4}; training accuracy {:.3}; model -> {}",
        history.len(),
        history.last().copied().unwrap_or(f64::NAN),
        correct as f64 / data.len() as f64,
        args.out.display()
    );
    Ok(())
}

fn cmd_communities(args: CommunitiesArgs) -> Result<(), geco::Error> {
    let data = Dataset::load_json(&args.data)?;
    let g = data
        .graphs
        .get(args.index)
        .ok_or(geco::Error::NodeOutOfRange {
            node: args.index,
            num_nodes: data.len(),
        })?;
    let partition = greedy_modularity_communities(g);
    let q = modularity(g, &partition)?;
    println!(
        "graph {}: {} nodes, {} edges, {} communities, Q = {:.4}",
        args.index,
        g.num_nodes(),
        g.num_edges(),
        partition.num_communities(),
        q
    );
    for c in 0..partition.num_communities() {
        println!("  community {c}: {:?}", partition.members(c));
    }
    Ok(())
}

fn cmd_explain(args: ExplainArgs) -> Result<(), geco::Error> {
    let data = Dataset::load_json(&args.data)?;
    let model = GcnModel::load_json(&args.model)?;
    let mode: ThresholdMode = args.mode.parse()?;
    let g = data
        .graphs
        .get(args.index)
        .ok_or(geco::Error::NodeOutOfRange {
            node: args.index,
            num_nodes: data.len(),
        })?;
    let explanation = geco_explain(&model, g, mode)?;
    println!(
        "graph {}: predicted class {} (label {:?})",
        args.index,
        explanation.predicted_class,
        g.label()
    );
    println!(
        "community probabilities: {:?}",
        explanation
            .community_probs
            .iter()
            .map(|p| (p * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
    println!(
        "tau = {:.4} ({}), selected communities {:?}{}",
        explanation.tau,
        mode.name(),
        explanation.selected_communities,
        if explanation.fallback_used {
            " [argmax fallback]"
        } else {
            ""
        }
    );
    println!("mask nodes: {:?}", explanation.mask.indices());
    if let Some(dot_path) = args.dot {
        std::fs::write(&dot_path, dot_export(g, &explanation.mask)?)?;
        println!("wrote {}", dot_path.display());
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), geco::Error> {
    let data = Dataset::load_json(&args.data)?;
    let model = GcnModel::load_json(&args.model)?;
    let mode: ThresholdMode = args.mode.parse()?;
    let methods = parse_methods(&args.methods)?;
    let mut rows = Vec::new();
    for method in methods {
        let explanations: Vec<NodeMask> = match method {
            Method::Geco => data
                .graphs
                .iter()
                .map(|g| Ok(geco_explain(&model, g, mode)?.mask))
                .collect::<Result<_, geco::Error>>()?,
            Method::Random => data
                .graphs
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let mut rng = geco::explain::baseline_rng(args.seed, i);
                    random_explain(g, &mut rng)
                })
                .collect(),
        };
        let report = evaluate(
            &model,
            &data.graphs,
            &explanations,
            &data.ground_truth,
            CharactWeights::equal(),
        )?;
        println!(
            "{:>6}: Fid+ {:.3}  Fid- {:.3}  charact {:.3}  GEA {:.3}  (n = {})",
            method.name(),
            report.fid_plus,
            report.fid_minus,
            report.charact,
            report.gea,
            report.n
        );
        rows.push(ResultsRow {
            dataset: args.data.display().to_string(),
            method: method.name().to_string(),
            split_seed: args.seed,
            fid_plus: report.fid_plus,
            fid_minus: report.fid_minus,
            charact: report.charact,
            gea: report.gea,
            explain_seconds: 0.0,
        });
    }
    if let Some(out) = args.out {
        geco::harness::write_results_csv(&out, &rows)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), geco::Error> {
    let cfg = if let Some(path) = args.config {
        let text = std::fs::read_to_string(&path)?;
        let file: RunFileConfig = serde_json::from_str(&text)?;
        ExperimentConfig {
            dataset: file.dataset,
            graphs_per_class: file.graphs_per_class,
            num_splits: file.num_splits,
            train_ratio: file.train_ratio,
            train_config: TrainConfig {
                learning_rate: file.learning_rate,
                batch_size: file.batch_size,
                epochs: file.epochs,
                ..TrainConfig::default()
            },
            hidden_dim: file.hidden_dim,
            threshold_mode: file.threshold_mode.parse()?,
            methods: file
                .methods
                .iter()
                .map(|m| m.parse())
                .collect::<Result<_, _>>()?,
            charact_weights: CharactWeights::new(file.w_plus, 1.0 - file.w_plus)?,
            output_dir: Some(file.output_dir.unwrap_or_else(default_out_dir)),
            seed: file.seed,
        }
    } else {
        let recipe = args.recipe.ok_or_else(|| {
            geco::Error::InvalidExperimentConfig("use --config or --recipe".into())
        })?;
        ExperimentConfig {
            dataset: recipe,
            graphs_per_class: Some(if args.full { 500 } else { args.graphs_per_class }),
            num_splits: if args.full { 100 } else { args.splits },
            train_ratio: args.ratio,
            train_config: TrainConfig {
                learning_rate: args.lr,
                batch_size: args.batch,
                epochs: args.epochs,
                ..TrainConfig::default()
            },
            hidden_dim: args.hidden,
            threshold_mode: args.mode.parse()?,
            methods: parse_methods(&args.methods)?,
            charact_weights: CharactWeights::equal(),
            output_dir: Some(args.out_dir.unwrap_or_else(default_out_dir)),
            seed: args.seed,
        }
    };
    let outcome = run_experiment(&cfg)?;
    let accuracy_mean =
        outcome.accuracy.iter().sum::<f64>() / outcome.accuracy.len().max(1) as f64;
    println!(
        "completed {} splits (mean test accuracy {:.3}); {} failed",
        outcome.accuracy.len(),
        accuracy_mean,
        outcome.failed_splits.len()
    );
    for (split, diagnostic) in &outcome.failed_splits {
        eprintln!("split {split} aborted: {diagnostic}");
    }
    print!("{}", report(&outcome.rows));
    if let Some(dir) = &cfg.output_dir {
        println!(
            "artifacts: {} and {}",
            dir.join("results.csv").display(),
            dir.join("report.md").display()
        );
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), geco::Error> {
    let rows = read_results_csv(&args.results)?;
    print!("{}", report(&rows));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Train(args) => cmd_train(args),
        Command::Communities(args) => cmd_communities(args),
        Command::Explain(args) => cmd_explain(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Run(args) => cmd_run(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
