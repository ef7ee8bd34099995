//! Command-line pipeline: ingest / generate graphs, benchmark, train, run and
//! report.
//!
//! Working files live in two directories: the graph directory holds
//! `<id>.adgr` dumps with `<id>.stats.json` beside them, and the output
//! directory holds `levels.csv`, `totals.csv`, `training.csv`, the model and
//! the traces.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::adaptive::{adaptive_bfs, read_trace_csv, write_trace_csv, AdaptiveTrace};
use crate::bench::{
    benchmark_graph, compute_oracle, compute_optimal, export_samples, level_mean_totals, read_levels_csv,
    read_totals_csv, BenchmarkConfig, BenchmarkOutput, LEVELS_CSV, TOTALS_CSV,
};
use crate::features::{build_training_set, write_training_csv, FeatureSelection, LabelTime};
use crate::graph::{compute_stats, generate_graph, read_edge_list_file, Graph, GraphModel, GraphStats, VertexId};
use crate::kernels::{CountVariant, Executor, INFINITY};
use crate::report::{accuracy_table, normalized_totals, slowdown_report, write_normalized_csv, write_report_csv};
use crate::tree::{evaluate, split_train_test, FlatTree, ModelMetadata, TrainConfig, Tree};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const GRAPH_EXT: &str = "adgr";
const STATS_SUFFIX: &str = ".stats.json";
const TRAINING_CSV: &str = "training.csv";
const NORMALIZED_CSV: &str = "normalized.csv";
const REPORT_CSV: &str = "report.csv";
const TRACE_PREFIX: &str = "trace__";
/// Below this many labeled levels there is nothing meaningful to split.
const MIN_TRAINING_SAMPLES: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "adaptive-bfs", version, about = "Model-driven level-switching BFS")]
pub struct Cli {
    /// JSON file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub graph_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load every edge-list file in a directory into binary dumps and stats.
    Ingest { dir: PathBuf },
    /// Generate a synthetic graph, e.g. `generate rmat-like scale=10,edges=8192 7`.
    Generate {
        model: String,
        params: String,
        seed: u64,
        #[arg(long)]
        name: Option<String>,
    },
    /// Benchmark all fifteen implementations on every stored graph.
    Bench(BenchArgs),
    /// Build the training set, fit and evaluate the tree, write the model.
    Train(TrainArgs),
    /// Run the switching BFS on one graph.
    Run {
        graph: String,
        root: VertexId,
        model: PathBuf,
        /// Also write the final depths, one per line.
        #[arg(long)]
        depths: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Emit the slowdown table from benchmark data and run traces.
    Report,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub roots: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    #[arg(long)]
    pub min_split: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `default`, `all`, or a comma-separated list of feature names.
    #[arg(long)]
    pub features: Option<String>,
    #[arg(long, value_parser = ["mean", "min"])]
    pub label_time: Option<String>,
}

/// Settings shared by all commands; loaded from `--config` and overridden
/// by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub graph_dir: PathBuf,
    pub output_dir: PathBuf,
    pub model_file: PathBuf,
    pub bench: BenchmarkConfig,
    pub train: TrainConfig,
    pub features: String,
    pub split: f64,
    pub label_time: LabelTime,
    /// When set, seeds both benchmarking and training.
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            graph_dir: PathBuf::from("graphs"),
            output_dir: PathBuf::from("out"),
            model_file: PathBuf::from("out/model.adbt"),
            bench: BenchmarkConfig::default(),
            train: TrainConfig::default(),
            features: "default".into(),
            split: 0.7,
            label_time: LabelTime::Mean,
            seed: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut config = match path {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(seed) = config.seed {
            config.bench.seed = seed;
            config.train.seed = seed;
        }
        Ok(config)
    }

    pub fn selection(&self) -> crate::Result<FeatureSelection> {
        FeatureSelection::preset(&self.features).or_else(|_| {
            let names: Vec<&str> = self.features.split(',').map(str::trim).collect();
            FeatureSelection::from_names(&names)
        })
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut config = match PipelineConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    if let Some(dir) = cli.graph_dir {
        config.graph_dir = dir;
    }
    if let Some(dir) = cli.out_dir {
        config.model_file = dir.join("model.adbt");
        config.output_dir = dir;
    }
    match execute(cli.command, config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_PARTIAL
        }
    }
}

pub fn execute(command: Command, mut config: PipelineConfig) -> anyhow::Result<i32> {
    let mut stdout = std::io::stdout().lock();
    match command {
        Command::Ingest { dir } => cmd_ingest(&dir, &config, &mut stdout),
        Command::Generate {
            model,
            params,
            seed,
            name,
        } => {
            let model = GraphModel::parse(&model, &params)?;
            cmd_generate(model, seed, name.as_deref(), &config, &mut stdout)?;
            Ok(EXIT_OK)
        }
        Command::Bench(args) => {
            let b = &mut config.bench;
            b.roots_per_graph = args.roots.unwrap_or(b.roots_per_graph);
            b.repetitions = args.reps.unwrap_or(b.repetitions);
            b.seed = args.seed.unwrap_or(b.seed);
            b.warmup_runs = args.warmup.unwrap_or(b.warmup_runs);
            b.worker_count = args.workers.unwrap_or(b.worker_count);
            cmd_bench(&config, &mut stdout)?;
            Ok(EXIT_OK)
        }
        Command::Train(args) => {
            let t = &mut config.train;
            t.max_depth = args.max_depth.unwrap_or(t.max_depth);
            t.min_samples_leaf = args.min_leaf.unwrap_or(t.min_samples_leaf);
            t.min_samples_split = args.min_split.unwrap_or(t.min_samples_split);
            t.seed = args.seed.unwrap_or(t.seed);
            config.split = args.split.unwrap_or(config.split);
            if let Some(f) = args.features {
                config.features = f;
            }
            if let Some(lt) = args.label_time {
                config.label_time = if lt == "min" { LabelTime::Min } else { LabelTime::Mean };
            }
            cmd_train(&config, &mut stdout)?;
            Ok(EXIT_OK)
        }
        Command::Run {
            graph,
            root,
            model,
            depths,
            workers,
        } => {
            if let Some(w) = workers {
                config.bench.worker_count = w;
            }
            cmd_run(&graph, root, &model, depths.as_deref(), &config, &mut stdout)?;
            Ok(EXIT_OK)
        }
        Command::Report => {
            cmd_report(&config, &mut stdout)?;
            Ok(EXIT_OK)
        }
    }
}

fn graph_paths(config: &PipelineConfig, id: &str) -> (PathBuf, PathBuf) {
    (
        config.graph_dir.join(format!("{id}.{GRAPH_EXT}")),
        config.graph_dir.join(format!("{id}{STATS_SUFFIX}")),
    )
}

fn store_graph(graph: &Graph, id: &str, config: &PipelineConfig) -> anyhow::Result<GraphStats> {
    fs::create_dir_all(&config.graph_dir)
        .with_context(|| format!("creating {}", config.graph_dir.display()))?;
    let (dump, stats_path) = graph_paths(config, id);
    graph.save(&dump)?;
    let stats = compute_stats(graph);
    fs::write(&stats_path, serde_json::to_string_pretty(&stats)?)
        .with_context(|| format!("writing {}", stats_path.display()))?;
    Ok(stats)
}

pub fn cmd_ingest(dir: &Path, config: &PipelineConfig, out: &mut impl Write) -> anyhow::Result<i32> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let mut failures = 0;
    for path in &files {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let result = read_edge_list_file(path)
            .map_err(anyhow::Error::from)
            .and_then(|g| store_graph(&g, &id, config));
        match result {
            Ok(stats) => writeln!(out, "{id}\t|V|={}\t|E|={}", stats.vertex_count, stats.edge_count)?,
            Err(e) => {
                failures += 1;
                eprintln!("{}: {e:#}", path.display());
            }
        }
    }
    Ok(if failures == 0 { EXIT_OK } else { EXIT_PARTIAL })
}

pub fn cmd_generate(
    model: GraphModel,
    seed: u64,
    name: Option<&str>,
    config: &PipelineConfig,
    out: &mut impl Write,
) -> anyhow::Result<String> {
    let graph = generate_graph(model, seed)?;
    let id = name.map_or_else(|| format!("{model}-seed{seed}"), str::to_string);
    let stats = store_graph(&graph, &id, config)?;
    writeln!(out, "{id}\t|V|={}\t|E|={}", stats.vertex_count, stats.edge_count)?;
    Ok(id)
}

/// Graph ids in the graph directory, sorted.
pub fn stored_graphs(config: &PipelineConfig) -> anyhow::Result<Vec<String>> {
    let mut ids: Vec<String> = fs::read_dir(&config.graph_dir)
        .with_context(|| format!("reading {}", config.graph_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == GRAPH_EXT))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .collect();
    ids.sort();
    Ok(ids)
}

fn load_stats(config: &PipelineConfig, id: &str) -> anyhow::Result<GraphStats> {
    let (_, stats_path) = graph_paths(config, id);
    let text = fs::read_to_string(&stats_path).with_context(|| format!("reading {}", stats_path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn cmd_bench(config: &PipelineConfig, out: &mut impl Write) -> anyhow::Result<BenchmarkOutput> {
    config.bench.validate()?;
    let ids = stored_graphs(config)?;
    if ids.is_empty() {
        bail!("no graphs in {}", config.graph_dir.display());
    }
    let executor = Executor::new(config.bench.worker_count)?;
    let mut all = BenchmarkOutput::default();
    for id in &ids {
        let graph = Graph::load(&graph_paths(config, id).0)?;
        let result = benchmark_graph(&graph, id, &config.bench, &executor)?;
        writeln!(
            out,
            "{id}: {} level samples, {} runs",
            result.samples.len(),
            result.records.len()
        )?;
        all.extend(result);
    }
    fs::create_dir_all(&config.output_dir)?;
    export_samples(&all.samples, &all.records, &config.output_dir)?;
    write_normalized_csv(&config.output_dir.join(NORMALIZED_CSV), &normalized_totals(&all.records))?;
    fs::write(
        config.output_dir.join("bench-config.json"),
        serde_json::to_string_pretty(&config.bench)?,
    )?;
    Ok(all)
}

pub fn cmd_train(config: &PipelineConfig, out: &mut impl Write) -> anyhow::Result<ModelMetadata> {
    let selection = config.selection()?;
    let samples = read_levels_csv(&config.output_dir.join(LEVELS_CSV))?;
    let mut stats = BTreeMap::new();
    for s in &samples {
        if !stats.contains_key(&s.graph_id) {
            stats.insert(s.graph_id.clone(), load_stats(config, &s.graph_id)?);
        }
    }
    let training = build_training_set(&samples, &stats, config.label_time)?;
    write_training_csv(&config.output_dir.join(TRAINING_CSV), &training)?;
    if training.len() < MIN_TRAINING_SAMPLES {
        bail!(
            "insufficient samples: {} labeled levels, need at least {MIN_TRAINING_SAMPLES}",
            training.len()
        );
    }
    let (train, test) = split_train_test(&training, config.split, config.train.seed)?;
    let tree = Tree::fit(&train, &selection, &config.train)?;
    let train_eval = evaluate(&tree, &train)?;
    let test_eval = evaluate(&tree, &test)?;
    tree.serialize(&config.model_file)?;
    let metadata = ModelMetadata {
        selection: selection.names().iter().map(|s| s.to_string()).collect(),
        config: config.train.clone(),
        node_count: tree.node_count(),
        depth: tree.depth(),
        train_samples: train.len(),
        test_samples: test.len(),
        training_accuracy: train_eval.top1_accuracy,
        test_accuracy: test_eval.top1_accuracy,
        unknown_rate: test_eval.unknown_rate,
        importances: selection
            .names()
            .into_iter()
            .map(str::to_string)
            .zip(tree.importance())
            .collect(),
    };
    fs::write(
        config.model_file.with_extension("json"),
        serde_json::to_string_pretty(&metadata)?,
    )?;
    writeln!(
        out,
        "trained on {} levels ({} nodes, depth {}); held-out accuracy {:.3}, unknown {:.3}",
        train.len(),
        metadata.node_count,
        metadata.depth,
        metadata.test_accuracy,
        metadata.unknown_rate
    )?;
    Ok(metadata)
}

fn resolve_graph(spec: &str, config: &PipelineConfig) -> (PathBuf, String) {
    let direct = PathBuf::from(spec);
    if direct.is_file() {
        let id = direct
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        return (direct, id);
    }
    (graph_paths(config, spec).0, spec.to_string())
}

pub fn trace_path(config: &PipelineConfig, graph_id: &str, root: VertexId) -> PathBuf {
    config
        .output_dir
        .join(format!("{TRACE_PREFIX}{graph_id}__{root}.csv"))
}

pub fn cmd_run(
    graph_spec: &str,
    root: VertexId,
    model: &Path,
    depths_out: Option<&Path>,
    config: &PipelineConfig,
    out: &mut impl Write,
) -> anyhow::Result<AdaptiveTrace> {
    let (graph_path, id) = resolve_graph(graph_spec, config);
    let graph = Graph::load(&graph_path)?;
    let tree = FlatTree::read(model).with_context(|| format!("model {} does not fit this pipeline", model.display()))?;
    let stats = compute_stats(&graph);
    let executor = Executor::new(config.bench.worker_count)?;
    let (depths, trace) = adaptive_bfs(&executor, &graph, root, &tree, &stats)?;

    fs::create_dir_all(&config.output_dir)?;
    write_trace_csv(&trace_path(config, &id, root), &trace)?;
    if let Some(path) = depths_out {
        let mut text = String::with_capacity(depths.len() * 4);
        for d in depths.to_vec() {
            if d == INFINITY {
                text.push_str("inf\n");
            } else {
                text.push_str(&format!("{d}\n"));
            }
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }

    for l in &trace.levels {
        writeln!(
            out,
            "level {:>3}  {:<28} frontier {:>9}  {:>10} ns{}",
            l.level,
            l.implementation.to_string(),
            l.frontier_size,
            l.elapsed_ns,
            if l.fallback_used { "  (fallback)" } else { "" }
        )?;
    }
    writeln!(
        out,
        "{id} root {root}: {} levels, kernel time {} ns, prediction time {} ns",
        trace.levels.len(),
        trace.kernel_ns(),
        trace.prediction_ns()
    )?;

    let levels_path = config.output_dir.join(LEVELS_CSV);
    if levels_path.is_file() {
        let samples: Vec<_> = read_levels_csv(&levels_path)?
            .into_iter()
            .filter(|s| s.graph_id == id && s.root == root)
            .collect();
        if !samples.is_empty() {
            let key = (id.clone(), root);
            let optimal = compute_optimal(&samples)?[&key];
            let totals = level_mean_totals(&samples);
            let oracle = compute_oracle(&totals)?[&key].1;
            let singles: Vec<_> = totals
                .iter()
                .filter(|r| r.variant == CountVariant::DirectAtomic)
                .map(|r| (r.implementation(), r.total_elapsed_ns))
                .collect();
            let report = slowdown_report(&trace, optimal, oracle, &singles);
            writeln!(
                out,
                "slowdown vs optimal: adaptive {:.2}x ({}), oracle {:.2}x",
                report.adaptive,
                report.adaptive_bucket().label(),
                report.oracle
            )?;
        }
    }
    Ok(trace)
}

fn read_traces(config: &PipelineConfig) -> anyhow::Result<BTreeMap<(String, VertexId), AdaptiveTrace>> {
    let mut traces = BTreeMap::new();
    for entry in fs::read_dir(&config.output_dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_prefix(TRACE_PREFIX).and_then(|s| s.strip_suffix(".csv")) else {
            continue;
        };
        let Some((graph_id, root)) = stem.rsplit_once("__") else {
            continue;
        };
        let root: VertexId = root.parse().with_context(|| format!("bad trace file name {name}"))?;
        traces.insert((graph_id.to_string(), root), read_trace_csv(&path)?);
    }
    Ok(traces)
}

pub fn cmd_report(config: &PipelineConfig, out: &mut impl Write) -> anyhow::Result<Vec<crate::report::StrategyRow>> {
    let samples = read_levels_csv(&config.output_dir.join(LEVELS_CSV))?;
    let records = read_totals_csv(&config.output_dir.join(TOTALS_CSV))?;
    let traces = read_traces(config)?;
    let rows = accuracy_table(&samples, &traces)?;
    write_report_csv(&config.output_dir.join(REPORT_CSV), &rows)?;
    write_normalized_csv(&config.output_dir.join(NORMALIZED_CSV), &normalized_totals(&records))?;
    writeln!(
        out,
        "{:<16}{:>9}{:>9}{:>9}{:>9}{:>10}{:>10}",
        "Algorithm", "Optimal", "1-2x", ">5x", ">20x", "Average", "Worst"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:<16}{:>8.1}%{:>8.1}%{:>8.1}%{:>8.1}%{:>9.2}x{:>9.2}x",
            r.algorithm, r.optimal_pct, r.one_to_two_pct, r.over_five_pct, r.over_twenty_pct, r.average, r.worst
        )?;
    }
    Ok(rows)
}
