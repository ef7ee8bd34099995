//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::time::Instant;

use adaptive_bfs::adaptive::{adaptive_bfs, measure_prediction_latency, LevelSchedule};
use adaptive_bfs::bench::{
    benchmark_graph, benchmark_roots, compute_optimal, compute_oracle, level_mean_totals, optimal_choices, select_roots,
    BenchmarkConfig, LevelSample,
};
use adaptive_bfs::features::{extract_runtime_features, FeatureSelection, FeatureVector, TrainingSample};
use adaptive_bfs::graph::{compute_stats, extra_memory_cost, generate_graph, GraphModel};
use adaptive_bfs::kernels::{aggregate_count, reference_bfs, INFINITY};
use adaptive_bfs::tree::{evaluate, gini, split_train_test, FlatTree, TrainConfig, Tree};
use adaptive_bfs::{CountVariant, Executor, Graph, Implementation, KernelId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 kernel correctness", kernel_correctness),
        ("2 frontier conservation", frontier_conservation),
        ("3 aggregation neutrality", aggregation_neutrality),
        ("4 gini/cart oracle", cart_oracle),
        ("5 flat-tree equivalence", flat_tree_equivalence),
        ("6 prediction latency", prediction_latency),
        ("7 memory claim", memory_claim),
        ("8 switching feasibility", switching_feasibility),
        ("9 baseline ordering", baseline_ordering),
        ("10 per-level variability", per_level_variability),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| outcome(false, "panicked"));
        let verdict = if result.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {name}: {verdict} ({}) [{:.1}s]",
            result.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!result.passed);
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

/// 200 small graphs: uniform random with edge factors 1-16, rmat-like, and
/// the path / star / complete-bipartite edge cases.
fn sweep_graphs() -> Vec<(GraphModel, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let mut models = Vec::with_capacity(200);
    for i in 0..200u64 {
        let model = match i % 10 {
            0..=5 => {
                let vertices = rng.gen_range(1..=2000);
                let factor = rng.gen_range(1..=16);
                GraphModel::UniformRandom {
                    vertices,
                    edges: vertices * factor,
                }
            }
            6 | 7 => {
                let scale = rng.gen_range(2..=12);
                GraphModel::RmatLike {
                    scale,
                    edges: (1usize << scale) * rng.gen_range(1..=16),
                }
            }
            8 => {
                if i % 20 == 8 {
                    GraphModel::Path {
                        vertices: rng.gen_range(2..=300),
                    }
                } else {
                    GraphModel::Star {
                        leaves: rng.gen_range(1..=2000),
                    }
                }
            }
            _ => GraphModel::CompleteBipartite {
                left: rng.gen_range(1..=40),
                right: rng.gen_range(1..=40),
            },
        };
        models.push((model, i));
    }
    models
}

/// Calls `visit` for every (graph, root, implementation) in the sweep, with
/// the reference depths and the kernel result. Alternates a single inline
/// worker with a four-worker pool.
fn for_each_sweep_run(
    mut visit: impl FnMut(&Graph, &[u32], Implementation, &[u32], &[adaptive_bfs::LevelOutcome]) -> bool,
) -> (usize, usize) {
    let executors = [Executor::new(1).unwrap(), Executor::new(4).unwrap()];
    let (mut runs, mut bad) = (0, 0);
    for (model, seed) in sweep_graphs() {
        let graph = generate_graph(model, seed).unwrap();
        let executor = &executors[seed as usize % 2];
        for root in select_roots(&graph, 3, seed) {
            let expected = reference_bfs(&graph, root).unwrap().to_vec();
            for imp in Implementation::all() {
                let (depths, outcomes) = executor.bfs_full(&graph, root, imp).unwrap();
                runs += 1;
                if !visit(&graph, &expected, imp, &depths.to_vec(), &outcomes) {
                    bad += 1;
                }
            }
        }
    }
    (runs, bad)
}

fn kernel_correctness() -> Outcome {
    let (runs, bad) = for_each_sweep_run(|_, expected, _, depths, _| expected == depths);
    outcome(bad == 0 && runs >= 200 * 15, format!("{runs} runs, {bad} mismatched"))
}

fn frontier_conservation() -> Outcome {
    let (runs, bad) = for_each_sweep_run(|graph, _, _, depths, outcomes| {
        let discovered: u64 = outcomes.iter().map(|o| o.new_frontier_count).sum();
        let finite = depths.iter().filter(|&&d| d != INFINITY).count() as u64;
        let edges_ok = graph.edges().all(|(u, v)| {
            let (du, dv) = (depths[u as usize], depths[v as usize]);
            du == INFINITY || dv <= du + 1
        });
        discovered + 1 == finite && edges_ok
    });
    outcome(bad == 0, format!("{runs} runs, {bad} violations"))
}

fn aggregation_neutrality() -> Outcome {
    let executor = Executor::new(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for _ in 0..20 {
        let counts: Vec<u64> = (0..100_000)
            .map(|_| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(0..1000) })
            .collect();
        let expected: u64 = counts.iter().sum();
        for variant in CountVariant::ALL {
            if aggregate_count(&executor, &counts, variant) != expected {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("20 arrays of 1e5 x 3 variants, {mismatches} mismatched"))
}

fn sample(features: FeatureVector, label: Implementation, level: u32) -> TrainingSample {
    TrainingSample {
        features,
        label,
        graph_id: "g".into(),
        root: 0,
        level,
    }
}

/// Separable set: label is a threshold on frontier_abs alone.
fn separable_fit() -> (bool, usize) {
    let stats = compute_stats(&generate_graph(GraphModel::UniformRandom { vertices: 1000, edges: 8000 }, 1).unwrap());
    let push = Implementation::new(KernelId::VertexPush, CountVariant::DirectAtomic);
    let pull = Implementation::new(KernelId::VertexPull, CountVariant::GroupReduce);
    let samples: Vec<TrainingSample> = (1..=200u64)
        .map(|f| {
            let fv = extract_runtime_features(&stats, f, 200).unwrap();
            sample(fv, if f < 100 { push } else { pull }, f as u32)
        })
        .collect();
    let tree = Tree::fit(&samples, &FeatureSelection::default_model(), &TrainConfig::default()).unwrap();
    let accuracy = evaluate(&tree, &samples).unwrap().top1_accuracy;
    (accuracy == 1.0 && tree.depth() <= 2, tree.depth())
}

/// Deterministic stand-in for level timings: a cost per kernel from graph
/// size and frontier state, plus a per-variant counting cost.
fn synthetic_cost(fv: &FeatureVector, imp: Implementation) -> f64 {
    let (n, m) = (fv.vertex_count, fv.edge_count);
    let avg = m / n;
    let kernel = match imp.kernel {
        KernelId::EdgeList => m,
        KernelId::RevEdgeList => 1.3 * m,
        KernelId::VertexPush => 4.0 * fv.frontier_abs * avg + 0.05 * n,
        KernelId::VertexPull => 1.5 * (1.0 - fv.discovered_pct) * m + 0.1 * n,
        KernelId::VertexPushWarp => fv.frontier_abs * (2.0 * avg + fv.out_deg.max.sqrt()) + 0.2 * n,
    };
    let counting = match imp.variant {
        CountVariant::DirectAtomic => 0.5 * fv.frontier_abs,
        CountVariant::GroupReduce => 300.0 + 0.05 * fv.frontier_abs,
        CountVariant::TwoLevelReduce => 2000.0 + 0.01 * fv.frontier_abs,
    };
    kernel + counting
}

fn synthetic_label(fv: &FeatureVector) -> Implementation {
    Implementation::all()
        .min_by(|a, b| synthetic_cost(fv, *a).total_cmp(&synthetic_cost(fv, *b)))
        .unwrap()
}

/// Level feature vectors from real traversals of generated graphs, labeled
/// by the synthetic cost model.
fn synthetic_training_set() -> Vec<TrainingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut samples = Vec::new();
    for i in 0..40u64 {
        let model = if i % 2 == 0 {
            let vertices = rng.gen_range(500..=5000);
            GraphModel::UniformRandom {
                vertices,
                edges: vertices * rng.gen_range(2..=16),
            }
        } else {
            let scale = rng.gen_range(9..=12);
            GraphModel::RmatLike {
                scale,
                edges: (1usize << scale) * rng.gen_range(2..=16),
            }
        };
        let graph = generate_graph(model, i).unwrap();
        let stats = compute_stats(&graph);
        for root in select_roots(&graph, 10, i) {
            let depths = reference_bfs(&graph, root).unwrap().to_vec();
            let mut per_level = Vec::new();
            for d in depths.into_iter().filter(|&d| d != INFINITY) {
                if per_level.len() <= d as usize {
                    per_level.resize(d as usize + 1, 0u64);
                }
                per_level[d as usize] += 1;
            }
            let mut discovered = 0;
            for (level, &frontier) in per_level.iter().enumerate() {
                discovered += frontier;
                let fv = extract_runtime_features(&stats, frontier, discovered).unwrap();
                let label = synthetic_label(&fv);
                samples.push(TrainingSample {
                    features: fv,
                    label,
                    graph_id: format!("{model}"),
                    root,
                    level: level as u32,
                });
            }
        }
    }
    samples
}

fn synthetic_tree() -> (Tree, Vec<TrainingSample>, Vec<TrainingSample>) {
    let samples = synthetic_training_set();
    let (train, test) = split_train_test(&samples, 0.7, 7).unwrap();
    let tree = Tree::fit(&train, &FeatureSelection::default_model(), &TrainConfig::default()).unwrap();
    (tree, train, test)
}

fn cart_oracle() -> Outcome {
    let g = gini(&[3, 1]).unwrap();
    let (separable_ok, depth) = separable_fit();
    let (tree, train, test) = synthetic_tree();
    let accuracy = evaluate(&tree, &test).unwrap().top1_accuracy;
    let classes: std::collections::BTreeSet<_> = train.iter().map(|s| s.label).collect();
    outcome(
        g == 0.375 && separable_ok && accuracy >= 0.95,
        format!(
            "gini {g}, separable depth {depth}, synthetic held-out accuracy {accuracy:.4} on {} levels, {} classes",
            test.len(),
            classes.len()
        ),
    )
}

fn random_vectors(reference: &[TrainingSample], count: usize, seed: u64) -> Vec<FeatureVector> {
    let arrays: Vec<_> = reference.iter().map(|s| s.features.to_array()).collect();
    let mut lo = arrays[0];
    let mut hi = arrays[0];
    for a in &arrays {
        for i in 0..a.len() {
            lo[i] = lo[i].min(a[i]);
            hi[i] = hi[i].max(a[i]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            // Every fourth vector reuses a real level so splits near the data are hit.
            if k % 4 == 0 {
                return reference[rng.gen_range(0..reference.len())].features;
            }
            let mut values = [0.0; 24];
            for i in 0..values.len() {
                values[i] = if lo[i] < hi[i] { rng.gen_range(lo[i]..=hi[i]) } else { lo[i] };
            }
            FeatureVector::from_array(&values)
        })
        .collect()
}

fn flat_tree_equivalence() -> Outcome {
    let (tree, train, _) = synthetic_tree();
    let flat = FlatTree::from_tree(&tree);
    let vectors = random_vectors(&train, 10_000, 5);
    let disagreements = vectors.iter().filter(|v| tree.predict(v) != flat.predict(v)).count();
    let bytes = flat.to_bytes();
    let again = FlatTree::from_bytes(&bytes).unwrap().to_bytes();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.adbt");
    tree.serialize(&path).unwrap();
    let on_disk = std::fs::read(&path).unwrap();
    let identical = bytes == again && bytes == on_disk;
    outcome(
        disagreements == 0 && identical,
        format!(
            "{} nodes, {disagreements} disagreements on 1e4 vectors, round-trip identical: {identical}",
            tree.node_count()
        ),
    )
}

fn prediction_latency() -> Outcome {
    let (tree, train, _) = synthetic_tree();
    let flat = FlatTree::from_tree(&tree);
    let vectors = random_vectors(&train, 4096, 6);
    let stats = measure_prediction_latency(&flat, &vectors, 1_000_000).unwrap();
    outcome(
        stats.mean_ns < 1000.0,
        format!(
            "mean {:.1} ns over {} calls, depth {}, bound 1000 ns",
            stats.mean_ns,
            stats.calls,
            tree.depth()
        ),
    )
}

fn memory_claim() -> Outcome {
    let bytes = extra_memory_cost(10_000_000, 4);
    let mib = bytes as f64 / (1024.0 * 1024.0);
    outcome(
        bytes == 40_000_000 && (mib - 38.0).abs() <= 0.2,
        format!("{bytes} bytes = {mib:.2} MiB"),
    )
}

/// Benchmark corpus shared by the timing criteria.
struct Corpus {
    graphs: Vec<String>,
    /// Level means from repetitions interleaved with the adaptive runs.
    samples: Vec<LevelSample>,
    /// Mean adaptive kernel time per traversal, driven by the per-level
    /// argmin of an earlier benchmark pass.
    adaptive_ns: BTreeMap<(String, u32), f64>,
}

/// Repetitions of the schedule-picking pass and of the interleaved pass.
const PICK_REPS: usize = 30;
const REPS: usize = 100;
const WARMUP: usize = 2;

fn bench_models() -> Vec<GraphModel> {
    vec![
        GraphModel::UniformRandom { vertices: 20_000, edges: 160_000 },
        GraphModel::UniformRandom { vertices: 50_000, edges: 100_000 },
        GraphModel::UniformRandom { vertices: 10_000, edges: 160_000 },
        GraphModel::UniformRandom { vertices: 40_000, edges: 320_000 },
        GraphModel::RmatLike { scale: 14, edges: 160_000 },
        GraphModel::RmatLike { scale: 15, edges: 250_000 },
        GraphModel::RmatLike { scale: 13, edges: 130_000 },
        GraphModel::RmatLike { scale: 16, edges: 300_000 },
        GraphModel::Star { leaves: 100_000 },
        GraphModel::CompleteBipartite { left: 300, right: 300 },
        GraphModel::CompleteBipartite { left: 20, right: 4000 },
        GraphModel::Path { vertices: 2000 },
    ]
}

/// Host speed drifts by more than the tolerance over a few seconds, so each
/// repetition benchmarks every implementation once and then runs the
/// adaptive schedule, keeping both sides in the same time window.
fn corpus() -> &'static Corpus {
    static CORPUS: std::sync::OnceLock<Corpus> = std::sync::OnceLock::new();
    CORPUS.get_or_init(|| {
        let executor = Executor::default();
        let config = BenchmarkConfig {
            roots_per_graph: 3,
            repetitions: PICK_REPS,
            seed: 11,
            warmup_runs: WARMUP,
            worker_count: executor.workers(),
        };
        let single = BenchmarkConfig {
            repetitions: 1,
            warmup_runs: 0,
            ..config.clone()
        };
        let mut corpus = Corpus {
            graphs: Vec::new(),
            samples: Vec::new(),
            adaptive_ns: BTreeMap::new(),
        };
        for (i, model) in bench_models().into_iter().enumerate() {
            let graph = generate_graph(model, i as u64).unwrap();
            let stats = compute_stats(&graph);
            let id = model.to_string();
            let roots = select_roots(&graph, config.roots_per_graph, config.seed);
            let first = benchmark_graph(&graph, &id, &config, &executor).unwrap().samples;
            let schedules: Vec<(u32, LevelSchedule)> = optimal_choices(&first)
                .unwrap()
                .into_iter()
                .map(|((_, root), levels)| (root, LevelSchedule(levels.iter().map(|(imp, _)| *imp).collect())))
                .collect();

            let mut summed: Vec<LevelSample> = Vec::new();
            let mut adaptive = vec![0u64; schedules.len()];
            for rep in 0..WARMUP + REPS {
                let pass = benchmark_roots(&graph, &id, &roots, &single, &executor).unwrap().samples;
                let kernel: Vec<u64> = schedules
                    .iter()
                    .map(|(root, schedule)| adaptive_bfs(&executor, &graph, *root, schedule, &stats).unwrap().1.kernel_ns())
                    .collect();
                if rep < WARMUP {
                    continue;
                }
                if summed.is_empty() {
                    summed = pass;
                } else {
                    for (acc, s) in summed.iter_mut().zip(&pass) {
                        acc.mean_elapsed_ns += s.mean_elapsed_ns;
                        acc.min_ns = acc.min_ns.min(s.min_ns);
                    }
                }
                for (acc, k) in adaptive.iter_mut().zip(kernel) {
                    *acc += k;
                }
            }
            for s in &mut summed {
                s.mean_elapsed_ns /= REPS as f64;
            }
            for ((root, _), total) in schedules.iter().zip(adaptive) {
                corpus.adaptive_ns.insert((id.clone(), *root), total as f64 / REPS as f64);
            }
            corpus.samples.extend(summed);
            corpus.graphs.push(id);
        }
        corpus
    })
}

/// Traversals of a few tens of microseconds pay a visible cost for every
/// switch, so not every graph is expected to land within the bound.
fn switching_feasibility() -> Outcome {
    let corpus = corpus();
    let optimal = compute_optimal(&corpus.samples).unwrap();
    let mut worst = 0.0f64;
    let mut within = 0;
    let mut detail = Vec::new();
    for id in &corpus.graphs {
        let (mut adaptive_ns, mut optimal_ns) = (0.0, 0.0);
        for (key, ns) in corpus.adaptive_ns.iter().filter(|((g, _), _)| g == id) {
            adaptive_ns += ns;
            optimal_ns += optimal[key];
        }
        let ratio = adaptive_ns / optimal_ns;
        worst = worst.max(ratio);
        within += usize::from(ratio <= 1.1);
        detail.push(format!("{id} {ratio:.3}"));
    }
    let graphs = corpus.graphs.len();
    outcome(
        within >= 10,
        format!("{within}/{graphs} graphs within 1.1x (need 10), worst {worst:.3}; {}", detail.join(", ")),
    )
}

fn baseline_ordering() -> Outcome {
    let corpus = corpus();
    let optimal = compute_optimal(&corpus.samples).unwrap();
    let totals = level_mean_totals(&corpus.samples);
    let oracle = compute_oracle(&totals).unwrap();
    let mut violations = 0;
    for r in &totals {
        let key = (r.graph_id.clone(), r.root);
        let (opt, orc) = (optimal[&key], oracle[&key].1);
        if !(opt <= orc && orc <= r.total_elapsed_ns) {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!("{} traversals, {} totals, {violations} violations", optimal.len(), totals.len()),
    )
}

fn per_level_variability() -> Outcome {
    let corpus = corpus();
    let choices = optimal_choices(&corpus.samples).unwrap();
    let mut switching: BTreeMap<&str, usize> = BTreeMap::new();
    for ((id, _), levels) in &choices {
        let switches = levels.windows(2).filter(|w| w[0].0 != w[1].0).count();
        if switches > 0 {
            *switching.entry(id.as_str()).or_default() += 1;
        }
    }
    outcome(
        !switching.is_empty(),
        format!("{} of {} graphs have a traversal whose argmin changes", switching.len(), corpus.graphs.len()),
    )
}
