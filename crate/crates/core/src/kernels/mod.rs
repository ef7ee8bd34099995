//! Level-synchronous BFS kernels.
//!
//! Fifteen implementations: five level kernels ([`KernelId`]) times three
//! strategies for aggregating the per-work-item count of newly discovered
//! vertices ([`CountVariant`]). Every kernel is a parallel loop over work
//! items (edges, vertices or vertex chunks) that are split into contiguous
//! blocks, one per worker. Depth updates use an atomic minimum, so the final
//! depths do not depend on scheduling.

mod count;
mod level;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use count::{aggregate_count, GROUP_WIDTH, SUPER_GROUP_WIDTH};

use crate::graph::{Graph, VertexId};
use crate::{Error, Result};

/// Depth of an undiscovered vertex.
pub const INFINITY: u32 = u32::MAX;

/// Default vertices per chunk for [`KernelId::VertexPushWarp`].
pub const DEFAULT_CHUNK_SIZE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum KernelId {
    EdgeList,
    RevEdgeList,
    VertexPush,
    VertexPull,
    VertexPushWarp,
}

impl KernelId {
    pub const ALL: [KernelId; 5] = [
        KernelId::EdgeList,
        KernelId::RevEdgeList,
        KernelId::VertexPush,
        KernelId::VertexPull,
        KernelId::VertexPushWarp,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelId::EdgeList => "EdgeList",
            KernelId::RevEdgeList => "RevEdgeList",
            KernelId::VertexPush => "VertexPush",
            KernelId::VertexPull => "VertexPull",
            KernelId::VertexPushWarp => "VertexPushWarp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CountVariant {
    DirectAtomic,
    GroupReduce,
    TwoLevelReduce,
}

impl CountVariant {
    pub const ALL: [CountVariant; 3] = [
        CountVariant::DirectAtomic,
        CountVariant::GroupReduce,
        CountVariant::TwoLevelReduce,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            CountVariant::DirectAtomic => "DirectAtomic",
            CountVariant::GroupReduce => "GroupReduce",
            CountVariant::TwoLevelReduce => "TwoLevelReduce",
        }
    }
}

macro_rules! name_parsing {
    ($ty:ty) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                <$ty>::ALL
                    .into_iter()
                    .find(|x| x.name() == s)
                    .ok_or_else(|| Error::InvalidParams(format!("unknown {} {s:?}", stringify!($ty))))
            }
        }
    };
}

name_parsing!(KernelId);
name_parsing!(CountVariant);

/// One of the fifteen (kernel, count variant) pairs. Ordered by kernel
/// ordinal first, then variant ordinal; this order breaks every tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Implementation {
    pub kernel: KernelId,
    pub variant: CountVariant,
}

impl Implementation {
    pub const COUNT: usize = 15;

    pub const DEFAULT: Implementation = Implementation {
        kernel: KernelId::EdgeList,
        variant: CountVariant::DirectAtomic,
    };

    pub const fn new(kernel: KernelId, variant: CountVariant) -> Self {
        Implementation { kernel, variant }
    }

    pub fn all() -> impl Iterator<Item = Implementation> {
        KernelId::ALL
            .into_iter()
            .flat_map(|k| CountVariant::ALL.into_iter().map(move |v| Implementation::new(k, v)))
    }

    pub fn ordinal(self) -> usize {
        self.kernel.ordinal() * CountVariant::ALL.len() + self.variant.ordinal()
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        if ordinal >= Self::COUNT {
            return None;
        }
        let k = KernelId::ALL[ordinal / CountVariant::ALL.len()];
        let v = CountVariant::ALL[ordinal % CountVariant::ALL.len()];
        Some(Implementation::new(k, v))
    }
}

impl fmt::Display for Implementation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.kernel, self.variant)
    }
}

/// Per-vertex BFS depths, [`INFINITY`] for undiscovered vertices.
pub struct DepthArray {
    depths: Vec<AtomicU32>,
}

impl DepthArray {
    pub fn new(vertex_count: usize) -> Self {
        DepthArray {
            depths: (0..vertex_count).map(|_| AtomicU32::new(INFINITY)).collect(),
        }
    }

    pub fn from_values(values: &[u32]) -> Self {
        DepthArray {
            depths: values.iter().map(|&d| AtomicU32::new(d)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    #[inline]
    pub fn get(&self, v: VertexId) -> u32 {
        self.depths[v as usize].load(Ordering::Relaxed)
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.depths.iter().map(|d| d.load(Ordering::Relaxed)).collect()
    }

    pub fn finite_count(&self) -> usize {
        self.depths
            .iter()
            .filter(|d| d.load(Ordering::Relaxed) != INFINITY)
            .count()
    }

    pub(crate) fn cells(&self) -> &[AtomicU32] {
        &self.depths
    }
}

impl Clone for DepthArray {
    fn clone(&self) -> Self {
        DepthArray::from_values(&self.to_vec())
    }
}

impl PartialEq for DepthArray {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self
                .depths
                .iter()
                .zip(&other.depths)
                .all(|(a, b)| a.load(Ordering::Relaxed) == b.load(Ordering::Relaxed))
    }
}

impl Eq for DepthArray {}

impl fmt::Debug for DepthArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.to_vec().into_iter().map(|d| if d == INFINITY { None } else { Some(d) }))
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelOutcome {
    /// Vertices that received a depth during this level.
    pub new_frontier_count: u64,
    pub elapsed_ns: u64,
}

fn check_root(graph: &Graph, root: VertexId) -> Result<()> {
    if root as usize >= graph.vertex_count() {
        return Err(Error::VertexOutOfRange {
            vertex: root as u64,
            vertex_count: graph.vertex_count() as u64,
        });
    }
    Ok(())
}

pub fn init_depths(graph: &Graph, root: VertexId) -> Result<DepthArray> {
    check_root(graph, root)?;
    let depths = DepthArray::new(graph.vertex_count());
    depths.cells()[root as usize].store(0, Ordering::Relaxed);
    Ok(depths)
}

/// Sequential FIFO BFS over out-edges.
pub fn reference_bfs(graph: &Graph, root: VertexId) -> Result<DepthArray> {
    check_root(graph, root)?;
    let mut depth = vec![INFINITY; graph.vertex_count()];
    let mut queue = VecDeque::from([root]);
    depth[root as usize] = 0;
    while let Some(u) = queue.pop_front() {
        let next = depth[u as usize] + 1;
        for &v in graph.out_neighbors(u) {
            if depth[v as usize] == INFINITY {
                depth[v as usize] = next;
                queue.push_back(v);
            }
        }
    }
    Ok(DepthArray::from_values(&depth))
}

/// Worker pool and tuning knobs shared by all level kernels.
pub struct Executor {
    pool: Option<rayon::ThreadPool>,
    workers: usize,
    chunk_size: usize,
}

impl Executor {
    /// A pool of `workers` threads. With one worker, blocks run inline on the
    /// calling thread.
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidParams("worker count must be >= 1".into()));
        }
        let pool = if workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(|i| format!("bfs-worker-{i}"))
                    .build()
                    .map_err(|e| Error::InvalidParams(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Executor {
            pool,
            workers,
            chunk_size: DEFAULT_CHUNK_SIZE,
        })
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Result<Self> {
        if chunk_size == 0 {
            return Err(Error::InvalidParams("chunk size must be >= 1".into()));
        }
        self.chunk_size = chunk_size;
        Ok(self)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    /// Runs one level with the given implementation. Timing covers the
    /// parallel section and the count aggregation.
    pub fn run_level(
        &self,
        graph: &Graph,
        depths: &DepthArray,
        level: u32,
        implementation: Implementation,
    ) -> LevelOutcome {
        let variant = implementation.variant;
        match implementation.kernel {
            KernelId::EdgeList => self.run_level_edge_list(graph, depths, level, variant),
            KernelId::RevEdgeList => self.run_level_rev_edge_list(graph, depths, level, variant),
            KernelId::VertexPush => self.run_level_vertex_push(graph, depths, level, variant),
            KernelId::VertexPull => self.run_level_vertex_pull(graph, depths, level, variant),
            KernelId::VertexPushWarp => {
                level::push_warp(self, graph, depths, level, variant, self.chunk_size)
            }
        }
    }

    pub fn run_level_edge_list(
        &self,
        graph: &Graph,
        depths: &DepthArray,
        level: u32,
        variant: CountVariant,
    ) -> LevelOutcome {
        level::edge_list(self, graph, depths, level, variant)
    }

    pub fn run_level_rev_edge_list(
        &self,
        graph: &Graph,
        depths: &DepthArray,
        level: u32,
        variant: CountVariant,
    ) -> LevelOutcome {
        level::rev_edge_list(self, graph, depths, level, variant)
    }

    pub fn run_level_vertex_push(
        &self,
        graph: &Graph,
        depths: &DepthArray,
        level: u32,
        variant: CountVariant,
    ) -> LevelOutcome {
        level::vertex_push(self, graph, depths, level, variant)
    }

    pub fn run_level_vertex_pull(
        &self,
        graph: &Graph,
        depths: &DepthArray,
        level: u32,
        variant: CountVariant,
    ) -> LevelOutcome {
        level::vertex_pull(self, graph, depths, level, variant)
    }

    pub fn run_level_push_warp(
        &self,
        graph: &Graph,
        depths: &DepthArray,
        level: u32,
        variant: CountVariant,
        chunk_size: usize,
    ) -> Result<LevelOutcome> {
        if chunk_size == 0 {
            return Err(Error::InvalidParams("chunk size must be >= 1".into()));
        }
        Ok(level::push_warp(self, graph, depths, level, variant, chunk_size))
    }

    /// Full traversal with one fixed implementation. The final level, which
    /// discovers nothing, is included in the returned outcomes.
    pub fn bfs_full(
        &self,
        graph: &Graph,
        root: VertexId,
        implementation: Implementation,
    ) -> Result<(DepthArray, Vec<LevelOutcome>)> {
        let depths = init_depths(graph, root)?;
        let mut outcomes = Vec::new();
        for level in 0.. {
            let outcome = self.run_level(graph, &depths, level, implementation);
            outcomes.push(outcome);
            if outcome.new_frontier_count == 0 {
                break;
            }
        }
        Ok((depths, outcomes))
    }

    /// Splits `items` work items into one contiguous block per worker and
    /// runs `body` on each block with a count tally for `variant`. Returns
    /// the aggregated count and the elapsed wall time.
    pub(crate) fn run_blocks<F>(&self, items: usize, variant: CountVariant, body: F) -> LevelOutcome
    where
        F: Fn(std::ops::Range<usize>, &mut count::Tally<'_>) + Sync,
    {
        let start = Instant::now();
        let shared = std::sync::atomic::AtomicU64::new(0);
        let blocks = self.workers.min(items).max(1);
        let per_block = items.div_ceil(blocks);
        let run_block = |b: usize| {
            let range = (b * per_block).min(items)..((b + 1) * per_block).min(items);
            let mut tally = count::Tally::new(variant, &shared);
            body(range, &mut tally);
            tally.finish();
        };
        match &self.pool {
            Some(pool) if blocks > 1 => {
                use rayon::prelude::*;
                pool.install(|| (0..blocks).into_par_iter().for_each(run_block));
            }
            _ => (0..blocks).for_each(run_block),
        }
        let new_frontier_count = shared.load(Ordering::Acquire);
        LevelOutcome {
            new_frontier_count,
            elapsed_ns: (start.elapsed().as_nanos() as u64).max(1),
        }
    }
}

impl Default for Executor {
    fn default() -> Self {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        Executor::new(workers).expect("available parallelism is at least one")
    }
}
