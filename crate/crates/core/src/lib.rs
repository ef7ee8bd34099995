//! Model-driven, level-switching breadth-first search.
//!
//! The crate benchmarks fifteen BFS implementations (five level kernels times
//! three frontier-count aggregation strategies) per level, trains a binary
//! decision tree that predicts the fastest implementation from graph and
//! frontier features, and runs a BFS that switches implementation at every
//! level under that model.
//!
//! Modules, bottom-up:
//! - [`graph`]: combined CSR / edge-list / reverse-CSR representation,
//!   loaders, generators and degree statistics.
//! - [`kernels`]: the level kernels, count aggregation and a sequential
//!   reference BFS.
//! - [`bench`]: the benchmark harness and the optimal / oracle baselines.
//! - [`features`]: feature vectors and training-set construction.
//! - [`tree`]: a CART classifier and its flat, serializable form.
//! - [`adaptive`]: the switching traversal and prediction-latency probe.
//! - [`report`]: slowdown tables.
//! - [`cli`]: the command-line pipeline.

pub mod adaptive;
pub mod bench;
pub mod cli;
pub mod error;
pub mod features;
pub mod graph;
pub mod kernels;
pub mod report;
pub mod tree;

pub use error::{Error, Result};
pub use graph::{DegreeSummary, Graph, GraphStats, VertexId};
pub use kernels::{CountVariant, DepthArray, Executor, Implementation, KernelId, LevelOutcome};
