//! Benchmark graph families.

use rand::seq::SliceRandom;
use rustc_hash::FxHashSet;

use super::Graph;
use crate::error::ModelError;
use crate::rng::RandomStream;

/// Attempts made by the pairing model before giving up.
pub const PAIRING_ATTEMPTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFamily {
    Path,
    Cycle,
    /// `n` leaves around a center vertex 0.
    Star,
    /// `n` rows by `d` columns (square when `d` is absent).
    Grid,
    /// `d`-regular on `n` vertices.
    RandomRegular,
}

impl std::str::FromStr for GraphFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "path" => GraphFamily::Path,
            "cycle" => GraphFamily::Cycle,
            "star" => GraphFamily::Star,
            "grid" => GraphFamily::Grid,
            "random_regular" => GraphFamily::RandomRegular,
            other => return Err(format!("unknown graph family {other:?}")),
        })
    }
}

pub fn gen_graph(
    family: GraphFamily,
    n: usize,
    d: Option<usize>,
    seed: u64,
) -> Result<Graph, ModelError> {
    let infeasible = |msg: String| Err(ModelError::Infeasible(msg));
    match family {
        GraphFamily::Path => {
            if n == 0 {
                return infeasible("path needs n >= 1".into());
            }
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphFamily::Cycle => {
            if n < 3 {
                return infeasible(format!("cycle needs n >= 3, got {n}"));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            Graph::from_edges(n, &edges)
        }
        GraphFamily::Star => {
            let edges: Vec<_> = (1..=n).map(|i| (0, i)).collect();
            Graph::from_edges(n + 1, &edges)
        }
        GraphFamily::Grid => {
            let cols = d.unwrap_or(n);
            if n == 0 || cols == 0 {
                return infeasible("grid needs positive dimensions".into());
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut edges = Vec::new();
            for r in 0..n {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < n {
                        edges.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            Graph::from_edges(n * cols, &edges)
        }
        GraphFamily::RandomRegular => {
            let Some(d) = d else {
                return infeasible("random_regular needs a degree d".into());
            };
            random_regular(n, d, seed)
        }
    }
}

/// Configuration (pairing) model: lay out `n·d` half-edges, shuffle them,
/// pair consecutive entries, and retry the whole matching whenever it
/// produces a self-loop or a repeated edge. The accepted graph is uniform
/// over simple `d`-regular graphs.
fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph, ModelError> {
    if (n * d) % 2 == 1 {
        return Err(ModelError::Infeasible(format!("n·d = {} is odd", n * d)));
    }
    if d >= n && !(n == 0 || d == 0) {
        return Err(ModelError::Infeasible(format!("degree {d} >= n = {n}")));
    }
    let mut rng = RandomStream::new(seed, 0);
    let mut points: Vec<usize> = (0..n * d).map(|i| i / d.max(1)).collect();
    'attempt: for _ in 0..PAIRING_ATTEMPTS {
        points.shuffle(&mut rng);
        let mut seen = FxHashSet::default();
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
            edges.push((u, v));
        }
        return Graph::from_edges(n, &edges);
    }
    Err(ModelError::Infeasible(format!(
        "pairing model found no simple {d}-regular graph on {n} vertices in {PAIRING_ATTEMPTS} attempts"
    )))
}
