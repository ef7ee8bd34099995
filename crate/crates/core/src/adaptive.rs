//! BFS that picks its implementation per level from a predictor.

use std::fs::File;
use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::features::{extract_runtime_features, FeatureVector};
use crate::graph::{Graph, GraphStats, VertexId};
use crate::kernels::{init_depths, CountVariant, DepthArray, Executor, Implementation, KernelId};
use crate::tree::{FlatTree, Prediction};
use crate::{Error, Result};

/// Implementation used when the very first prediction is unknown.
pub const DEFAULT_IMPLEMENTATION: Implementation = Implementation::DEFAULT;

/// Chooses an implementation for a level.
pub trait LevelPredictor {
    fn predict_level(&self, level: u32, features: &FeatureVector) -> Prediction;
}

impl LevelPredictor for FlatTree {
    #[inline]
    fn predict_level(&self, _level: u32, features: &FeatureVector) -> Prediction {
        self.predict(features)
    }
}

/// A fixed per-level schedule, e.g. the measured argmin of each level.
/// Levels past the end of the schedule are unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSchedule(pub Vec<Implementation>);

impl LevelPredictor for LevelSchedule {
    fn predict_level(&self, level: u32, _features: &FeatureVector) -> Prediction {
        self.0
            .get(level as usize)
            .map_or(Prediction::Unknown, |&imp| Prediction::Known(imp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: u32,
    /// Implementation that actually ran.
    pub implementation: Implementation,
    /// Set when the raw prediction was unknown and `implementation` was
    /// inherited from the previous level (or the default at level 0).
    pub fallback_used: bool,
    pub frontier_size: u64,
    pub new_frontier_count: u64,
    pub elapsed_ns: u64,
    pub prediction_ns: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdaptiveTrace {
    pub levels: Vec<LevelRecord>,
}

impl AdaptiveTrace {
    /// Kernel time only; prediction time is accounted separately.
    pub fn kernel_ns(&self) -> u64 {
        self.levels.iter().map(|l| l.elapsed_ns).sum()
    }

    pub fn prediction_ns(&self) -> u64 {
        self.levels.iter().map(|l| l.prediction_ns).sum()
    }

    pub fn implementations(&self) -> Vec<Implementation> {
        self.levels.iter().map(|l| l.implementation).collect()
    }
}

/// Level-synchronous BFS that asks `predictor` for an implementation before
/// every level. Frontier and discovered counts are carried forward from the
/// level outcomes rather than recomputed from the depth array.
pub fn adaptive_bfs<P: LevelPredictor + ?Sized>(
    executor: &Executor,
    graph: &Graph,
    root: VertexId,
    predictor: &P,
    stats: &GraphStats,
) -> Result<(DepthArray, AdaptiveTrace)> {
    if stats.vertex_count != graph.vertex_count() as u64 || stats.edge_count != graph.edge_count() as u64 {
        return Err(Error::InvalidParams("statistics do not belong to this graph".into()));
    }
    let depths = init_depths(graph, root)?;
    let mut trace = AdaptiveTrace::default();
    let mut frontier = 1u64;
    let mut discovered = 1u64;
    let mut previous: Option<Implementation> = None;
    for level in 0u32.. {
        let start = Instant::now();
        let features = extract_runtime_features(stats, frontier, discovered)?;
        let raw = predictor.predict_level(level, &features);
        let prediction_ns = start.elapsed().as_nanos() as u64;
        let (implementation, fallback_used) = match raw {
            Prediction::Known(imp) => (imp, false),
            Prediction::Unknown => (previous.unwrap_or(DEFAULT_IMPLEMENTATION), true),
        };
        let outcome = executor.run_level(graph, &depths, level, implementation);
        trace.levels.push(LevelRecord {
            level,
            implementation,
            fallback_used,
            frontier_size: frontier,
            new_frontier_count: outcome.new_frontier_count,
            elapsed_ns: outcome.elapsed_ns,
            prediction_ns,
        });
        previous = Some(implementation);
        if outcome.new_frontier_count == 0 {
            break;
        }
        frontier = outcome.new_frontier_count;
        discovered += outcome.new_frontier_count;
    }
    Ok((depths, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_ns: f64,
    pub stddev_ns: f64,
    pub max_ns: f64,
    pub calls: usize,
}

/// Times `n` individual predictions, cycling through `vectors`.
pub fn measure_prediction_latency(tree: &FlatTree, vectors: &[FeatureVector], n: usize) -> Result<LatencyStats> {
    if n < 1000 {
        return Err(Error::InvalidParams(format!("need at least 1000 calls, got {n}")));
    }
    if vectors.is_empty() {
        return Err(Error::Empty("feature vectors"));
    }
    let (mut sum, mut sum_sq, mut max) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..n {
        let fv = &vectors[i % vectors.len()];
        let start = Instant::now();
        black_box(tree.predict(black_box(fv)));
        let ns = start.elapsed().as_nanos() as f64;
        sum += ns;
        sum_sq += ns * ns;
        max = max.max(ns);
    }
    let mean = sum / n as f64;
    let variance = (sum_sq / n as f64 - mean * mean).max(0.0);
    Ok(LatencyStats {
        mean_ns: mean,
        stddev_ns: variance.sqrt(),
        max_ns: max,
        calls: n,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    level: u32,
    kernel: KernelId,
    variant: CountVariant,
    fallback: bool,
    frontier: u64,
    elapsed_ns: u64,
    predict_ns: u64,
}

pub const TRACE_HEADER: [&str; 7] = ["level", "kernel", "variant", "fallback", "frontier", "elapsed_ns", "predict_ns"];

pub fn write_trace_csv(path: &Path, trace: &AdaptiveTrace) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    writer.write_record(TRACE_HEADER)?;
    for l in &trace.levels {
        writer.serialize(TraceRow {
            level: l.level,
            kernel: l.implementation.kernel,
            variant: l.implementation.variant,
            fallback: l.fallback_used,
            frontier: l.frontier_size,
            elapsed_ns: l.elapsed_ns,
            predict_ns: l.prediction_ns,
        })?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a trace back. `new_frontier_count` is not part of the file and is
/// reconstructed from the next level's frontier (0 for the last level).
pub fn read_trace_csv(path: &Path) -> Result<AdaptiveTrace> {
    let rows: Vec<TraceRow> = crate::bench::read_csv(path)?;
    let mut levels: Vec<LevelRecord> = rows
        .iter()
        .map(|r| LevelRecord {
            level: r.level,
            implementation: Implementation::new(r.kernel, r.variant),
            fallback_used: r.fallback,
            frontier_size: r.frontier,
            new_frontier_count: 0,
            elapsed_ns: r.elapsed_ns,
            prediction_ns: r.predict_ns,
        })
        .collect();
    for i in 1..levels.len() {
        levels[i - 1].new_frontier_count = levels[i].frontier_size;
    }
    Ok(AdaptiveTrace { levels })
}
