//! Graphs in the combined representation.
//!
//! A [`Graph`] stores a forward CSR (`out_offsets` / `destinations`), the
//! origin vertex of every forward edge (`origins`), and a reverse CSR
//! (`in_offsets` / `sources`). With the origins array the forward CSR doubles
//! as an edge list, so edge-centric and vertex-centric kernels run against the
//! same memory without any conversion between levels.

mod generate;
pub(crate) mod io;
mod stats;

pub use generate::{generate_graph, GraphModel};
pub use io::{load_edge_list, read_edge_list_file, read_graph_dump, write_graph_dump, DUMP_MAGIC, DUMP_VERSION};
pub use stats::{compute_stats, DegreeSummary, GraphStats};

use crate::{Error, Result};

/// Internal vertex identifier.
pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    out_offsets: Vec<usize>,
    destinations: Vec<VertexId>,
    origins: Vec<VertexId>,
    in_offsets: Vec<usize>,
    sources: Vec<VertexId>,
}

impl Graph {
    /// Builds the combined representation from directed `(origin, destination)`
    /// pairs. Duplicates and self-loops are kept.
    pub fn build_combined(edges: &[(VertexId, VertexId)], vertex_count: usize) -> Result<Self> {
        if vertex_count > VertexId::MAX as usize {
            return Err(Error::InvalidParams(format!(
                "{vertex_count} vertices do not fit 32-bit ids"
            )));
        }
        for &(u, v) in edges {
            let worst = u.max(v);
            if worst as usize >= vertex_count {
                return Err(Error::VertexOutOfRange {
                    vertex: worst as u64,
                    vertex_count: vertex_count as u64,
                });
            }
        }

        let out_offsets = prefix_offsets(vertex_count, edges.iter().map(|&(u, _)| u));
        let mut cursor = out_offsets.clone();
        let mut destinations = vec![0; edges.len()];
        for &(u, v) in edges {
            let slot = &mut cursor[u as usize];
            destinations[*slot] = v;
            *slot += 1;
        }
        let mut origins = Vec::with_capacity(edges.len());
        for v in 0..vertex_count {
            let (start, end) = (out_offsets[v], out_offsets[v + 1]);
            destinations[start..end].sort_unstable();
            origins.extend(std::iter::repeat_n(v as VertexId, end - start));
        }

        // Walking the sorted forward edges keeps every in-neighbour list sorted.
        let in_offsets = prefix_offsets(vertex_count, destinations.iter().copied());
        let mut cursor = in_offsets.clone();
        let mut sources = vec![0; edges.len()];
        for (&u, &v) in origins.iter().zip(&destinations) {
            let slot = &mut cursor[v as usize];
            sources[*slot] = u;
            *slot += 1;
        }

        Ok(Graph {
            vertex_count,
            out_offsets,
            destinations,
            origins,
            in_offsets,
            sources,
        })
    }

    /// Reassembles a graph from raw arrays, checking every structural
    /// invariant of the combined representation.
    pub fn from_parts(
        vertex_count: usize,
        out_offsets: Vec<usize>,
        destinations: Vec<VertexId>,
        origins: Vec<VertexId>,
        in_offsets: Vec<usize>,
        sources: Vec<VertexId>,
    ) -> Result<Self> {
        let graph = Graph {
            vertex_count,
            out_offsets,
            destinations,
            origins,
            in_offsets,
            sources,
        };
        graph.validate()?;
        Ok(graph)
    }

    fn validate(&self) -> Result<()> {
        let n = self.vertex_count;
        let m = self.destinations.len();
        let bad = |what: &str| Err(Error::Format(format!("inconsistent graph: {what}")));
        if self.origins.len() != m || self.sources.len() != m {
            return bad("edge array lengths differ");
        }
        for offsets in [&self.out_offsets, &self.in_offsets] {
            if offsets.len() != n + 1 || offsets[0] != 0 || offsets[n] != m {
                return bad("offset bounds");
            }
            if offsets.windows(2).any(|w| w[0] > w[1]) {
                return bad("offsets decrease");
            }
        }
        let in_range = |ids: &[VertexId]| ids.iter().all(|&v| (v as usize) < n);
        if !in_range(&self.destinations) || !in_range(&self.sources) {
            return bad("vertex id out of range");
        }
        for v in 0..n {
            let owned = &self.origins[self.out_offsets[v]..self.out_offsets[v + 1]];
            if owned.iter().any(|&o| o as usize != v) {
                return bad("origins disagree with out_offsets");
            }
        }
        let mut forward: Vec<(VertexId, VertexId)> = self.edges().collect();
        let mut backward: Vec<(VertexId, VertexId)> = (0..n as VertexId)
            .flat_map(|v| self.in_neighbors(v).iter().map(move |&u| (u, v)))
            .collect();
        forward.sort_unstable();
        backward.sort_unstable();
        if forward != backward {
            return bad("reverse CSR does not mirror forward CSR");
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.destinations.len()
    }

    pub fn out_offsets(&self) -> &[usize] {
        &self.out_offsets
    }

    pub fn destinations(&self) -> &[VertexId] {
        &self.destinations
    }

    pub fn origins(&self) -> &[VertexId] {
        &self.origins
    }

    pub fn in_offsets(&self) -> &[usize] {
        &self.in_offsets
    }

    pub fn sources(&self) -> &[VertexId] {
        &self.sources
    }

    #[inline]
    pub fn out_neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.destinations[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    #[inline]
    pub fn in_neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_offsets[v as usize + 1] - self.out_offsets[v as usize]
    }

    pub fn in_degree(&self, v: VertexId) -> usize {
        self.in_offsets[v as usize + 1] - self.in_offsets[v as usize]
    }

    /// Bytes the origins array adds over plain CSR at the given id width.
    pub fn extra_memory_cost(&self, id_width_bytes: u64) -> u64 {
        extra_memory_cost(self.edge_count() as u64, id_width_bytes)
    }

    /// Forward edges as `(origin, destination)`, in storage order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.origins.iter().copied().zip(self.destinations.iter().copied())
    }
}

fn prefix_offsets(vertex_count: usize, keys: impl Iterator<Item = VertexId>) -> Vec<usize> {
    let mut offsets = vec![0usize; vertex_count + 1];
    for k in keys {
        offsets[k as usize + 1] += 1;
    }
    for i in 0..vertex_count {
        offsets[i + 1] += offsets[i];
    }
    offsets
}

/// Bytes added by the per-edge origins array on top of a plain CSR.
pub fn extra_memory_cost(graph_edge_count: u64, id_width_bytes: u64) -> u64 {
    graph_edge_count * id_width_bytes
}
