//! Deterministic synthetic graphs for desk-scale experiments.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, VertexId};
use crate::{Error, Result};

// Standard R-MAT quadrant probabilities (d = 1 - a - b - c).
const RMAT_A: f64 = 0.57;
const RMAT_B: f64 = 0.19;
const RMAT_C: f64 = 0.19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum GraphModel {
    /// `edges` directed edges with independent uniform endpoints.
    UniformRandom { vertices: usize, edges: usize },
    /// Recursive-matrix generator over `2^scale` vertices.
    RmatLike { scale: u32, edges: usize },
    /// Vertex 0 with a directed edge to each of `leaves` leaves.
    Star { leaves: usize },
    /// Directed path `0 -> 1 -> ... -> vertices - 1`.
    Path { vertices: usize },
    /// Symmetric complete bipartite graph: both directions of every left/right pair.
    CompleteBipartite { left: usize, right: usize },
}

impl GraphModel {
    /// Parses a model name and a `key=value,key=value` parameter string,
    /// e.g. `("rmat-like", "scale=10,edges=8192")`.
    pub fn parse(model: &str, params: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParams(format!("expected key=value, got {part:?}")))?;
            let v: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParams(format!("{k}: not a non-negative integer")))?;
            kv.insert(k.trim().to_string(), v);
        }
        let mut take = |key: &str| {
            kv.remove(key)
                .ok_or_else(|| Error::InvalidParams(format!("{model} requires {key}")))
        };
        let parsed = match model {
            "uniform-random" => GraphModel::UniformRandom {
                vertices: take("n")?,
                edges: take("m")?,
            },
            "rmat-like" => GraphModel::RmatLike {
                scale: take("scale")? as u32,
                edges: take("edges")?,
            },
            "star" => GraphModel::Star { leaves: take("leaves")? },
            "path" => GraphModel::Path { vertices: take("n")? },
            "complete-bipartite" => GraphModel::CompleteBipartite {
                left: take("left")?,
                right: take("right")?,
            },
            other => return Err(Error::InvalidParams(format!("unknown model {other:?}"))),
        };
        if let Some(extra) = kv.keys().next() {
            return Err(Error::InvalidParams(format!("unexpected parameter {extra:?}")));
        }
        parsed.validate()?;
        Ok(parsed)
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        match *self {
            GraphModel::UniformRandom { vertices: 0, .. } => fail("n must be >= 1"),
            GraphModel::RmatLike { scale, .. } if scale == 0 || scale > 31 => {
                fail("scale must be in 1..=31")
            }
            GraphModel::Star { leaves: 0 } => fail("leaves must be >= 1"),
            GraphModel::Path { vertices: 0 } => fail("n must be >= 1"),
            GraphModel::CompleteBipartite { left, right } if left == 0 || right == 0 => {
                fail("left and right must be >= 1")
            }
            _ => Ok(()),
        }
    }

    pub fn vertex_count(&self) -> usize {
        match *self {
            GraphModel::UniformRandom { vertices, .. } => vertices,
            GraphModel::RmatLike { scale, .. } => 1usize << scale,
            GraphModel::Star { leaves } => leaves + 1,
            GraphModel::Path { vertices } => vertices,
            GraphModel::CompleteBipartite { left, right } => left + right,
        }
    }
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphModel::UniformRandom { vertices, edges } => {
                write!(f, "uniform-random-n{vertices}-m{edges}")
            }
            GraphModel::RmatLike { scale, edges } => write!(f, "rmat-like-s{scale}-m{edges}"),
            GraphModel::Star { leaves } => write!(f, "star-{leaves}"),
            GraphModel::Path { vertices } => write!(f, "path-{vertices}"),
            GraphModel::CompleteBipartite { left, right } => {
                write!(f, "complete-bipartite-{left}x{right}")
            }
        }
    }
}

pub fn generate_graph(model: GraphModel, seed: u64) -> Result<Graph> {
    model.validate()?;
    let n = model.vertex_count();
    if n > VertexId::MAX as usize {
        return Err(Error::InvalidParams("too many vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(VertexId, VertexId)> = match model {
        GraphModel::UniformRandom { vertices, edges } => (0..edges)
            .map(|_| {
                (
                    rng.gen_range(0..vertices) as VertexId,
                    rng.gen_range(0..vertices) as VertexId,
                )
            })
            .collect(),
        GraphModel::RmatLike { scale, edges } => {
            (0..edges).map(|_| rmat_edge(&mut rng, scale)).collect()
        }
        GraphModel::Star { leaves } => (1..=leaves as VertexId).map(|leaf| (0, leaf)).collect(),
        GraphModel::Path { vertices } => (1..vertices as VertexId).map(|v| (v - 1, v)).collect(),
        GraphModel::CompleteBipartite { left, right } => {
            let mut edges = Vec::with_capacity(2 * left * right);
            for l in 0..left as VertexId {
                for r in left as VertexId..(left + right) as VertexId {
                    edges.push((l, r));
                    edges.push((r, l));
                }
            }
            edges
        }
    };
    Graph::build_combined(&edges, n)
}

fn rmat_edge(rng: &mut ChaCha8Rng, scale: u32) -> (VertexId, VertexId) {
    let (mut u, mut v) = (0u32, 0u32);
    for bit in (0..scale).rev() {
        let r: f64 = rng.gen();
        let (du, dv) = if r < RMAT_A {
            (0, 0)
        } else if r < RMAT_A + RMAT_B {
            (0, 1)
        } else if r < RMAT_A + RMAT_B + RMAT_C {
            (1, 0)
        } else {
            (1, 1)
        };
        u |= du << bit;
        v |= dv << bit;
    }
    (u, v)
}
