//! Perfect local samplers for Gibbs distributions by backward deduction of
//! systematic-scan Glauber dynamics.
//!
//! A query for the spins of a vertex set Λ is answered by resolving, from
//! time 0 backwards, only the updates of the stationary scan chain that the
//! answer actually depends on. Two engines are provided: [`soft`] for spin
//! systems whose interactions are bounded away from zero, and [`coloring`]
//! for uniform proper q-colorings. [`oracle`] holds brute-force ground
//! truth and [`inference`] estimates conditional marginals on top of the
//! samplers.

pub mod bernoulli;
pub mod coloring;
pub mod error;
pub mod inference;
pub mod instance;
pub mod oracle;
pub mod rng;
pub mod schedule;
pub mod soft;

pub use error::{
    FactoryError, InferenceError, LoadError, MemoError, ModelError, OracleError, SampleError,
};
pub use instance::{
    build_coloring, build_ising, build_potts, gen_graph, load_instance, to_document, validate_soft,
    ColorPolicy, ColoringInstance, Graph, GraphFamily, Instance, SpinSystem, ValidationReport,
};
pub use rng::RandomStream;
pub use schedule::{pred, scan_vertex, CostStats, MemoState, Timestamp};

/// Default cap on frame pushes per query before a session aborts.
pub const DEFAULT_BUDGET: u64 = 1_000_000_000;
