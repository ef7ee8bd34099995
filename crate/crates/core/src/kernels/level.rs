use std::sync::atomic::{AtomicU32, Ordering};

use super::{CountVariant, DepthArray, Executor, LevelOutcome, INFINITY};
use crate::graph::{Graph, VertexId};

/// Atomic minimum of `cell` with `next`. Returns 1 if this call moved the
/// vertex out of [`INFINITY`], so that racing relaxations count it once.
#[inline]
fn relax(cell: &AtomicU32, next: u32) -> u64 {
    if cell.load(Ordering::Relaxed) <= next {
        return 0;
    }
    (cell.fetch_min(next, Ordering::Relaxed) == INFINITY) as u64
}

/// One work item per forward edge.
pub(super) fn edge_list(
    ex: &Executor,
    graph: &Graph,
    depths: &DepthArray,
    level: u32,
    variant: CountVariant,
) -> LevelOutcome {
    let cells = depths.cells();
    let origins = graph.origins();
    let destinations = graph.destinations();
    ex.run_blocks(graph.edge_count(), variant, |range, tally| {
        for e in range {
            let mut local = 0;
            if cells[origins[e] as usize].load(Ordering::Relaxed) == level {
                local = relax(&cells[destinations[e] as usize], level + 1);
            }
            tally.add(local);
        }
    })
}

/// One work item per incoming edge, read from the reverse CSR. The owning
/// (destination) vertex of each item is found by walking `in_offsets`.
pub(super) fn rev_edge_list(
    ex: &Executor,
    graph: &Graph,
    depths: &DepthArray,
    level: u32,
    variant: CountVariant,
) -> LevelOutcome {
    let cells = depths.cells();
    let in_offsets = graph.in_offsets();
    let sources = graph.sources();
    ex.run_blocks(graph.edge_count(), variant, |range, tally| {
        if range.is_empty() {
            return;
        }
        let mut owner = in_offsets.partition_point(|&o| o <= range.start) - 1;
        for f in range {
            while in_offsets[owner + 1] <= f {
                owner += 1;
            }
            let mut local = 0;
            if cells[sources[f] as usize].load(Ordering::Relaxed) == level {
                local = relax(&cells[owner], level + 1);
            }
            tally.add(local);
        }
    })
}

/// One work item per vertex; frontier vertices push to their out-neighbours.
pub(super) fn vertex_push(
    ex: &Executor,
    graph: &Graph,
    depths: &DepthArray,
    level: u32,
    variant: CountVariant,
) -> LevelOutcome {
    let cells = depths.cells();
    ex.run_blocks(graph.vertex_count(), variant, |range, tally| {
        for v in range {
            let mut local = 0;
            if cells[v].load(Ordering::Relaxed) == level {
                for &w in graph.out_neighbors(v as VertexId) {
                    local += relax(&cells[w as usize], level + 1);
                }
            }
            tally.add(local);
        }
    })
}

/// One work item per vertex; undiscovered vertices scan their in-neighbours
/// and stop at the first one on the frontier. Each vertex has a single
/// writer, so a plain store suffices.
pub(super) fn vertex_pull(
    ex: &Executor,
    graph: &Graph,
    depths: &DepthArray,
    level: u32,
    variant: CountVariant,
) -> LevelOutcome {
    let cells = depths.cells();
    ex.run_blocks(graph.vertex_count(), variant, |range, tally| {
        for v in range {
            let mut local = 0;
            if cells[v].load(Ordering::Relaxed) == INFINITY {
                // Values written this level are level + 1, never equal to level.
                let found = graph
                    .in_neighbors(v as VertexId)
                    .iter()
                    .any(|&u| cells[u as usize].load(Ordering::Relaxed) == level);
                if found {
                    cells[v].store(level + 1, Ordering::Relaxed);
                    local = 1;
                }
            }
            tally.add(local);
        }
    })
}

/// One work item per chunk of `chunk_size` consecutive vertices. The item
/// walks the out-edges of each frontier member in turn, the sequential
/// analogue of a virtual warp sharing each member's edge list.
pub(super) fn push_warp(
    ex: &Executor,
    graph: &Graph,
    depths: &DepthArray,
    level: u32,
    variant: CountVariant,
    chunk_size: usize,
) -> LevelOutcome {
    let cells = depths.cells();
    let n = graph.vertex_count();
    let chunks = n.div_ceil(chunk_size);
    ex.run_blocks(chunks, variant, |range, tally| {
        for chunk in range {
            let members = chunk * chunk_size..((chunk + 1) * chunk_size).min(n);
            let mut local = 0;
            for v in members {
                if cells[v].load(Ordering::Relaxed) == level {
                    for &w in graph.out_neighbors(v as VertexId) {
                        local += relax(&cells[w as usize], level + 1);
                    }
                }
            }
            tally.add(local);
        }
    })
}
