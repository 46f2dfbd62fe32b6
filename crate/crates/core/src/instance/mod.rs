//! Model instances: soft-constraint spin systems and proper colorings.

mod document;
mod generate;
mod graph;

pub use document::{load_instance, to_document};
pub use generate::{gen_graph, GraphFamily};
pub use graph::Graph;

use rand::Rng;
use serde::Serialize;

use crate::error::ModelError;

/// Tolerance used when checking that loaded weights are normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// `C(Δ, δ) = 1 − (1 − δ)/(2Δ)`, the lower bound every interaction entry
/// must meet for the soft-constraint sampler to contract.
pub fn c_threshold(max_degree: usize, delta: f64) -> f64 {
    1.0 - (1.0 - delta) / (2.0 * max_degree as f64)
}

/// A q-spin system with normalized vertex fields and edge interactions.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    graph: Graph,
    q: usize,
    /// n × q, row-major.
    fields: Vec<f64>,
    /// n × q cumulative sums, last entry of each row exactly 1.
    field_cdfs: Vec<f64>,
    /// edges × q × q; entry `(i, j)` is for spin `i` at the smaller endpoint.
    interactions: Vec<f64>,
    min_entry: f64,
    delta: Option<f64>,
}

impl SpinSystem {
    /// Builds a system from weights that must already be normalized within
    /// [`NORMALIZATION_TOL`]. Interaction matrices are oriented by edge id
    /// in canonical `(smaller, larger)` order.
    pub fn new(
        graph: Graph,
        q: usize,
        fields: Vec<Vec<f64>>,
        interactions: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, ModelError> {
        Self::build(graph, q, fields, interactions, false)
    }

    /// Like [`SpinSystem::new`], but rescales fields to sum 1 and matrices to
    /// max entry 1 first. The Gibbs distribution is unchanged.
    pub fn from_weights(
        graph: Graph,
        q: usize,
        fields: Vec<Vec<f64>>,
        interactions: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, ModelError> {
        Self::build(graph, q, fields, interactions, true)
    }

    fn build(
        graph: Graph,
        q: usize,
        fields: Vec<Vec<f64>>,
        interactions: Vec<Vec<Vec<f64>>>,
        rescale: bool,
    ) -> Result<Self, ModelError> {
        if q < 2 {
            return Err(ModelError::TooFewSpins(q));
        }
        let n = graph.n();
        if fields.len() != n {
            return Err(ModelError::Dimension(format!(
                "{} field vectors for {} vertices",
                fields.len(),
                n
            )));
        }
        if interactions.len() != graph.num_edges() {
            return Err(ModelError::Dimension(format!(
                "{} interaction matrices for {} edges",
                interactions.len(),
                graph.num_edges()
            )));
        }

        let mut flat_fields = Vec::with_capacity(n * q);
        let mut field_cdfs = Vec::with_capacity(n * q);
        for (v, lambda) in fields.iter().enumerate() {
            if lambda.len() != q {
                return Err(ModelError::Dimension(format!(
                    "field of vertex {v} has length {}, expected {q}",
                    lambda.len()
                )));
            }
            check_weights(lambda, || format!("field of vertex {v}"))?;
            let sum: f64 = lambda.iter().sum();
            if rescale {
                if sum <= 0.0 {
                    return Err(ModelError::BadWeight(format!(
                        "field of vertex {v} is all zero"
                    )));
                }
                flat_fields.extend(lambda.iter().map(|x| x / sum));
            } else {
                if (sum - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(ModelError::FieldNotNormalized { vertex: v, sum });
                }
                // Stored verbatim so that serialization round-trips bit-exactly;
                // the CDF below carries the exact normalization.
                flat_fields.extend_from_slice(lambda);
            }
            let row = &flat_fields[v * q..(v + 1) * q];
            let total: f64 = row.iter().sum();
            let mut acc = 0.0;
            for (c, x) in row.iter().enumerate() {
                acc += x;
                field_cdfs.push(if c + 1 == q {
                    1.0
                } else {
                    (acc / total).min(1.0)
                });
            }
        }

        let mut flat = Vec::with_capacity(graph.num_edges() * q * q);
        let mut min_entry = f64::INFINITY;
        for (id, a) in interactions.iter().enumerate() {
            let (u, v) = graph.edges()[id];
            if a.len() != q || a.iter().any(|row| row.len() != q) {
                return Err(ModelError::Dimension(format!(
                    "interaction on edge ({u}, {v}) is not {q}x{q}"
                )));
            }
            for row in a {
                check_weights(row, || format!("interaction on edge ({u}, {v})"))?;
            }
            let max = a.iter().flatten().copied().fold(0.0, f64::max);
            if max <= 0.0 {
                return Err(ModelError::BadWeight(format!(
                    "interaction on edge ({u}, {v}) is all zero"
                )));
            }
            if !rescale && (max - 1.0).abs() > NORMALIZATION_TOL {
                return Err(ModelError::InteractionNotNormalized { u, v, max });
            }
            for row in a {
                for &x in row {
                    // x / max leaves the maximum at exactly 1 and is idempotent.
                    let y = if max == 1.0 { x } else { x / max };
                    min_entry = min_entry.min(y);
                    flat.push(y);
                }
            }
        }
        if graph.num_edges() == 0 {
            min_entry = 1.0;
        }

        Ok(SpinSystem {
            graph,
            q,
            fields: flat_fields,
            field_cdfs,
            interactions: flat,
            min_entry,
            delta: None,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    pub fn field(&self, v: usize) -> &[f64] {
        &self.fields[v * self.q..(v + 1) * self.q]
    }

    pub fn field_cdf(&self, v: usize) -> &[f64] {
        &self.field_cdfs[v * self.q..(v + 1) * self.q]
    }

    /// The stored matrix of edge `id`, rows indexed by the smaller endpoint.
    pub fn edge_matrix(&self, id: usize) -> &[f64] {
        let qq = self.q * self.q;
        &self.interactions[id * qq..(id + 1) * qq]
    }

    /// `A_e(spin_u, spin_v)` for the edge `e = {u, v}` with id `edge`.
    #[inline]
    pub fn interaction(&self, edge: usize, u: usize, spin_u: u32, v: usize, spin_v: u32) -> f64 {
        let m = self.edge_matrix(edge);
        let (row, col) = if u < v {
            (spin_u, spin_v)
        } else {
            (spin_v, spin_u)
        };
        m[row as usize * self.q + col as usize]
    }

    /// Smallest interaction entry over all edges (1 when there are none).
    pub fn min_entry(&self) -> f64 {
        self.min_entry
    }

    /// Largest δ for which every entry meets `C(Δ, δ)`, clamped to ≤ 1.
    pub fn delta_max(&self) -> f64 {
        let d = self.max_degree();
        if d == 0 {
            return 1.0;
        }
        (1.0 - 2.0 * d as f64 * (1.0 - self.min_entry)).min(1.0)
    }

    /// The δ recorded by the last successful [`SpinSystem::validate`].
    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    /// Runs [`validate_soft`] and records δ on success.
    pub fn validate(&mut self, delta: f64) -> ValidationReport {
        let report = validate_soft(self, delta);
        if report.ok {
            self.delta = Some(delta);
        }
        report
    }

    /// Draws a spin from `λ_v` by inverse CDF. Ties at CDF boundaries go to
    /// the higher index, so zero-weight spins are never returned.
    #[inline]
    pub fn sample_field<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        let cdf = self.field_cdf(v);
        let i = cdf.partition_point(|&x| x <= u);
        i.min(self.q - 1) as u32
    }

    /// Unnormalized weight `w(σ)` of a full configuration.
    pub fn weight(&self, config: &[u32]) -> f64 {
        let mut w = 1.0;
        for (v, &s) in config.iter().enumerate() {
            w *= self.field(v)[s as usize];
        }
        for (id, &(u, v)) in self.graph.edges().iter().enumerate() {
            w *= self.interaction(id, u, config[u], v, config[v]);
        }
        w
    }
}

fn check_weights(xs: &[f64], what: impl Fn() -> String) -> Result<(), ModelError> {
    if xs.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(ModelError::BadWeight(what()));
    }
    Ok(())
}

/// Outcome of checking the soft-constraint condition for a given δ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub max_degree: usize,
    pub c_threshold: f64,
    pub delta_max: f64,
    pub messages: Vec<String>,
}

/// Checks normalization and `A_e(c1, c2) ≥ C(Δ, δ)` for every edge and entry.
pub fn validate_soft(sys: &SpinSystem, delta: f64) -> ValidationReport {
    let max_degree = sys.max_degree();
    let mut messages = Vec::new();
    let mut ok = true;

    for v in 0..sys.n() {
        let sum: f64 = sys.field(v).iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            ok = false;
            messages.push(format!("field of vertex {v} sums to {sum}"));
        }
    }
    for id in 0..sys.graph().num_edges() {
        let max = sys.edge_matrix(id).iter().copied().fold(0.0, f64::max);
        if (max - 1.0).abs() > NORMALIZATION_TOL {
            ok = false;
            let (u, v) = sys.graph().edges()[id];
            messages.push(format!(
                "interaction on edge ({u}, {v}) has max entry {max}"
            ));
        }
    }
    if !(delta > 0.0 && delta <= 1.0) {
        ok = false;
        messages.push(format!("delta = {delta} is outside (0, 1]"));
    }

    if max_degree == 0 {
        messages.push("no edges: product distribution, no interaction condition applies".into());
        return ValidationReport {
            ok,
            max_degree,
            c_threshold: 0.0,
            delta_max: 1.0,
            messages,
        };
    }

    let c = c_threshold(max_degree, delta);
    let min = sys.min_entry();
    if min < c {
        ok = false;
        messages.push(format!(
            "minimum interaction entry {min} is below C(Δ={max_degree}, δ={delta}) = {c}"
        ));
    }
    ValidationReport {
        ok,
        max_degree,
        c_threshold: c,
        delta_max: sys.delta_max(),
        messages,
    }
}

/// Builds an Ising model with edge activity `beta` on every edge.
///
/// Field pairs are normalized on entry. Interactions are `[[β,1],[1,β]]`
/// for `β ≤ 1` and `[[1,1/β],[1/β,1]]` otherwise. Returns any warnings.
pub fn build_ising(
    graph: Graph,
    beta: f64,
    fields: &[(f64, f64)],
) -> Result<(SpinSystem, Vec<String>), ModelError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(ModelError::NonPositiveBeta(beta));
    }
    let mut warnings = Vec::new();
    let d = graph.max_degree();
    if d > 0 {
        let lo = (d as f64 - 0.5) / d as f64;
        let hi = d as f64 / (d as f64 - 0.5);
        if !(beta > lo && beta < hi) {
            warnings.push(format!(
                "beta = {beta} lies outside the window ({lo}, {hi}) for max degree {d}"
            ));
        }
    }
    let a = if beta <= 1.0 {
        vec![vec![beta, 1.0], vec![1.0, beta]]
    } else {
        vec![vec![1.0, 1.0 / beta], vec![1.0 / beta, 1.0]]
    };
    let interactions = vec![a; graph.num_edges()];
    let fields = fields.iter().map(|&(a, b)| vec![a, b]).collect();
    let sys = SpinSystem::from_weights(graph, 2, fields, interactions)?;
    Ok((sys, warnings))
}

/// Potts-style system: uniform fields, `A(c, c) = β`, `A(c, c') = 1`,
/// rescaled to max entry 1.
pub fn build_potts(graph: Graph, q: usize, beta: f64) -> Result<SpinSystem, ModelError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(ModelError::NonPositiveBeta(beta));
    }
    let a: Vec<Vec<f64>> = (0..q)
        .map(|i| (0..q).map(|j| if i == j { beta } else { 1.0 }).collect())
        .collect();
    let interactions = vec![a; graph.num_edges()];
    let fields = vec![vec![1.0; q]; graph.n()];
    SpinSystem::from_weights(graph, q, fields, interactions)
}

/// Uniform proper q-colorings of a graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ColoringInstance {
    graph: Graph,
    q: usize,
}

impl ColoringInstance {
    /// Enforces only the hard floor `q ≥ Δ + 2`; see [`build_coloring`] for
    /// the sampler policies.
    pub fn new(graph: Graph, q: usize) -> Result<Self, ModelError> {
        if q < 2 {
            return Err(ModelError::TooFewSpins(q));
        }
        let required = graph.max_degree() + 2;
        if q < required {
            return Err(ModelError::ColorThreshold {
                q,
                max_degree: graph.max_degree(),
                required,
                policy: "irreducibility",
            });
        }
        Ok(ColoringInstance { graph, q })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    pub fn is_proper(&self, config: &[u32]) -> bool {
        self.graph
            .edges()
            .iter()
            .all(|&(u, v)| config[u] != config[v])
    }
}

/// How strictly [`build_coloring`] enforces the color-count thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ColorPolicy {
    /// `q ≥ 65Δ`: termination is guaranteed in expected linear time.
    #[default]
    Strict,
    /// `q ≥ 50Δ`: outputs are exact on termination, but efficiency is
    /// unproven below `65Δ`.
    Permissive,
}

impl ColorPolicy {
    pub fn required(self, max_degree: usize) -> usize {
        match self {
            ColorPolicy::Strict => 65 * max_degree,
            ColorPolicy::Permissive => 50 * max_degree,
        }
    }

    /// Checks `q` against this policy, returning a warning when accepted in
    /// the unproven band.
    pub fn check(self, q: usize, max_degree: usize) -> Result<Option<String>, ModelError> {
        let required = self.required(max_degree);
        if q < required {
            return Err(ModelError::ColorThreshold {
                q,
                max_degree,
                required,
                policy: match self {
                    ColorPolicy::Strict => "strict",
                    ColorPolicy::Permissive => "permissive",
                },
            });
        }
        if q < 65 * max_degree {
            return Ok(Some(format!(
                "q = {q} < 65Δ = {}: samples are exact on termination but termination is unproven",
                65 * max_degree
            )));
        }
        Ok(None)
    }
}

impl std::str::FromStr for ColorPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(ColorPolicy::Strict),
            "permissive" => Ok(ColorPolicy::Permissive),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

pub fn build_coloring(
    graph: Graph,
    q: usize,
    policy: ColorPolicy,
) -> Result<(ColoringInstance, Vec<String>), ModelError> {
    if q < 2 {
        return Err(ModelError::TooFewSpins(q));
    }
    let warning = policy.check(q, graph.max_degree())?;
    let inst = ColoringInstance::new(graph, q)?;
    Ok((inst, warning.into_iter().collect()))
}

/// Either kind of model an instance document can describe.
#[derive(Clone, Debug, PartialEq)]
pub enum Instance {
    Spin(SpinSystem),
    Coloring(ColoringInstance),
}

impl Instance {
    pub fn graph(&self) -> &Graph {
        match self {
            Instance::Spin(s) => s.graph(),
            Instance::Coloring(c) => c.graph(),
        }
    }

    pub fn q(&self) -> usize {
        match self {
            Instance::Spin(s) => s.q(),
            Instance::Coloring(c) => c.q(),
        }
    }
}
