//! Conditional marginals by pinned local sampling with median boosting.
//!
//! Each of `r` batches draws `s` independent samples of the target from the
//! pinned sampler and records their frequencies. The estimate is the
//! coordinate-wise median of the batch frequency vectors, renormalized.
//!
//! * `s = ⌈6·q·ln(20q)/ε²⌉`: a multiplicative Chernoff bound for a value of
//!   probability at least `1/(2q)`, union-bounded over the `q` values, puts a
//!   batch within `1 ± ε` everywhere with probability at least 0.9.
//! * `r` is the smallest odd integer `≥ 18·ln(2q/δ)`, enough for the median of
//!   batches that each succeed with probability 0.8 to fail with probability
//!   below `δ`.
//! * Batch 0 is a calibration run: its median per-sample work `w` fixes the
//!   work cap `10·s·w` of every later batch. A capped batch keeps the
//!   frequencies of the samples it completed.

use rayon::prelude::*;
use serde::Serialize;

use crate::coloring::{ColoringConfig, ColoringSession};
use crate::error::{InferenceError, SampleError};
use crate::instance::{ColoringInstance, SpinSystem};
use crate::oracle::ModelRef;
use crate::rng::RandomStream;
use crate::schedule::{pred, CostStats};
use crate::soft::{SoftConfig, SoftSession};

/// Work cap per batch, as a multiple of `s` times the calibrated median.
pub const TRUNCATION_FACTOR: f64 = 10.0;

/// A sampler that can draw repeated independent samples of one vertex.
pub trait LocalSampler {
    /// Current value of `v`, i.e. the outcome of its last update at or
    /// before time 0.
    fn sample_vertex(&mut self, v: usize) -> Result<u32, SampleError>;
    fn reset(&mut self);
    fn stats(&self) -> CostStats;
}

impl LocalSampler for SoftSession<'_> {
    fn sample_vertex(&mut self, v: usize) -> Result<u32, SampleError> {
        self.resolve(pred(0, v, self.n()))
    }

    fn reset(&mut self) {
        SoftSession::reset(self)
    }

    fn stats(&self) -> CostStats {
        SoftSession::stats(self)
    }
}

impl LocalSampler for ColoringSession<'_> {
    fn sample_vertex(&mut self, v: usize) -> Result<u32, SampleError> {
        self.resolve(pred(0, v, self.n()))
    }

    fn reset(&mut self) {
        ColoringSession::reset(self)
    }

    fn stats(&self) -> CostStats {
        ColoringSession::stats(self)
    }
}

/// Engine settings shared by every batch.
#[derive(Clone, Copy, Debug, Default)]
pub struct InferenceOptions {
    pub seed: u64,
    pub soft: SoftConfig,
    pub coloring: ColoringConfig,
    /// Overrides the batch count `r`.
    pub repetitions: Option<usize>,
    /// Overrides the batch size `s`.
    pub batch_size: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginalEstimate {
    pub target: usize,
    pub estimates: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
    pub samples_used: u64,
    pub truncations: usize,
    pub batches: usize,
    pub batch_size: u64,
    pub cost: CostStats,
}

#[derive(Clone, Debug)]
pub struct BatchResult {
    pub frequencies: Vec<f64>,
    pub completed: u64,
    pub truncated: bool,
    pub cost: CostStats,
}

/// Smallest odd integer `≥ 18·ln(2q/δ)`.
pub fn repetitions(q: usize, delta: f64) -> usize {
    let r = (18.0 * (2.0 * q as f64 / delta).ln()).ceil().max(1.0) as usize;
    if r.is_multiple_of(2) {
        r + 1
    } else {
        r
    }
}

/// `⌈6·q·ln(20q)/ε²⌉`.
pub fn batch_size(q: usize, eps: f64) -> u64 {
    (6.0 * q as f64 * (20.0 * q as f64).ln() / (eps * eps)).ceil() as u64
}

/// Values the pinning rules out: zero field weight for spin systems, or a
/// zero interaction with a pinned neighbor; for colorings, colors of pinned
/// neighbors.
pub fn forced_zeros(model: ModelRef<'_>, pins: &[(usize, u32)], target: usize) -> Vec<bool> {
    let q = model.q();
    let pinned = |u: usize| pins.iter().find(|p| p.0 == u).map(|p| p.1);
    match model {
        ModelRef::Spin(sys) => {
            let g = sys.graph();
            (0..q as u32)
                .map(|c| {
                    sys.field(target)[c as usize] <= 0.0
                        || g.neighbors(target)
                            .iter()
                            .zip(g.neighbor_edges(target))
                            .any(|(&u, &e)| {
                                pinned(u)
                                    .is_some_and(|s| sys.interaction(e, u, s, target, c) <= 0.0)
                            })
                })
                .collect()
        }
        ModelRef::Coloring(inst) => {
            let nb = inst.graph().neighbors(target);
            (0..q as u32)
                .map(|c| nb.iter().any(|&u| pinned(u) == Some(c)))
                .collect()
        }
    }
}

/// Draws up to `s` samples of `target`, stopping once total work reaches
/// `work_cap`. Returns the batch and, when asked, per-sample work.
fn run_batch<S: LocalSampler>(
    sampler: &mut S,
    target: usize,
    q: usize,
    s: u64,
    work_cap: Option<u64>,
    per_sample: Option<&mut Vec<u64>>,
) -> BatchResult {
    let start = sampler.stats();
    let mut counts = vec![0u64; q];
    let mut completed = 0;
    let mut truncated = false;
    let mut per_sample = per_sample;
    let mut last = start.work();
    for _ in 0..s {
        sampler.reset();
        match sampler.sample_vertex(target) {
            Ok(x) => {
                counts[x as usize] += 1;
                completed += 1;
            }
            Err(_) => {
                truncated = true;
                break;
            }
        }
        let now = sampler.stats().work();
        if let Some(v) = per_sample.as_deref_mut() {
            v.push(now - last);
        }
        last = now;
        if work_cap.is_some_and(|cap| now - start.work() >= cap) && completed < s {
            truncated = true;
            break;
        }
    }
    let frequencies = counts
        .iter()
        .map(|&c| {
            if completed == 0 {
                0.0
            } else {
                c as f64 / completed as f64
            }
        })
        .collect();
    BatchResult {
        frequencies,
        completed,
        truncated,
        cost: sampler.stats().since(&start),
    }
}

/// Coordinate-wise median of batch frequencies with forced zeros applied,
/// renormalized to sum 1.
pub fn median_estimate(batches: &[BatchResult], zeros: &[bool]) -> Vec<f64> {
    let q = zeros.len();
    let mut out: Vec<f64> = (0..q)
        .map(|c| {
            if zeros[c] {
                return 0.0;
            }
            let mut col: Vec<f64> = batches.iter().map(|b| b.frequencies[c]).collect();
            col.sort_by(f64::total_cmp);
            let k = col.len();
            if k % 2 == 1 {
                col[k / 2]
            } else {
                0.5 * (col[k / 2 - 1] + col[k / 2])
            }
        })
        .collect();
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|x| *x /= total);
    } else {
        // every median vanished: fall back to the mean of the batches
        for (c, x) in out.iter_mut().enumerate() {
            if !zeros[c] {
                *x = batches.iter().map(|b| b.frequencies[c]).sum::<f64>();
            }
        }
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            out.iter_mut().for_each(|x| *x /= total);
        }
    }
    out
}

fn make_batches<S, F>(
    make: F,
    r: usize,
    target: usize,
    q: usize,
    s: u64,
) -> Result<Vec<BatchResult>, InferenceError>
where
    S: LocalSampler,
    F: Fn(u64) -> Result<S, SampleError> + Sync,
{
    let mut work = Vec::with_capacity(s as usize);
    let first = run_batch(&mut make(0)?, target, q, s, None, Some(&mut work));
    let median = if work.is_empty() {
        1
    } else {
        let mid = work.len() / 2;
        *work.select_nth_unstable(mid).1
    };
    let cap = (TRUNCATION_FACTOR * s as f64 * median.max(1) as f64).ceil() as u64;
    let rest: Vec<BatchResult> = (1..r as u64)
        .into_par_iter()
        .map(|b| Ok(run_batch(&mut make(b)?, target, q, s, Some(cap), None)))
        .collect::<Result<_, SampleError>>()?;
    let mut all = Vec::with_capacity(r);
    all.push(first);
    all.extend(rest);
    Ok(all)
}

/// All `r` batches for the given model, in batch order. Batch `b` uses the
/// stream `(seed, b)`.
pub fn run_batches(
    model: ModelRef<'_>,
    pins: &[(usize, u32)],
    target: usize,
    r: usize,
    s: u64,
    opts: &InferenceOptions,
) -> Result<Vec<BatchResult>, InferenceError> {
    let q = model.q();
    let seed = opts.seed;
    match model {
        ModelRef::Spin(sys) => make_batches(
            |b| soft_sampler(sys, pins, seed, b, opts.soft),
            r,
            target,
            q,
            s,
        ),
        ModelRef::Coloring(inst) => make_batches(
            |b| coloring_sampler(inst, pins, seed, b, opts.coloring),
            r,
            target,
            q,
            s,
        ),
    }
}

fn soft_sampler<'a>(
    sys: &'a SpinSystem,
    pins: &[(usize, u32)],
    seed: u64,
    stream: u64,
    config: SoftConfig,
) -> Result<SoftSession<'a>, SampleError> {
    SoftSession::new(sys, RandomStream::new(seed, stream), config)?.with_pins(pins)
}

fn coloring_sampler<'a>(
    inst: &'a ColoringInstance,
    pins: &[(usize, u32)],
    seed: u64,
    stream: u64,
    config: ColoringConfig,
) -> Result<ColoringSession<'a>, SampleError> {
    ColoringSession::new(inst, RandomStream::new(seed, stream), config)?.with_pins(pins)
}

/// Estimates the marginal of `target` conditioned on `pins`, within a
/// factor `1 ± eps` on every positive-probability value with probability at
/// least `1 − delta`.
pub fn estimate_conditional_marginal<'a>(
    model: impl Into<ModelRef<'a>>,
    pins: &[(usize, u32)],
    target: usize,
    eps: f64,
    delta: f64,
    opts: &InferenceOptions,
) -> Result<MarginalEstimate, InferenceError> {
    let model = model.into();
    if !(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(InferenceError::BadAccuracy);
    }
    if target >= model.n() {
        return Err(SampleError::BadVertex(target).into());
    }
    if pins.iter().any(|p| p.0 == target) {
        return Err(InferenceError::TargetPinned(target));
    }
    let q = model.q();
    let r = opts.repetitions.unwrap_or_else(|| repetitions(q, delta));
    let s = opts.batch_size.unwrap_or_else(|| batch_size(q, eps));
    let batches = run_batches(model, pins, target, r, s, opts)?;
    let zeros = forced_zeros(model, pins, target);
    let mut cost = CostStats::default();
    for b in &batches {
        cost.add(&b.cost);
    }
    Ok(MarginalEstimate {
        target,
        estimates: median_estimate(&batches, &zeros),
        eps,
        delta,
        samples_used: batches.iter().map(|b| b.completed).sum(),
        truncations: batches.iter().filter(|b| b.truncated).count(),
        batches: r,
        batch_size: s,
        cost,
    })
}

/// Whether every positive entry of `exact` is matched within `1 ± eps` and
/// every zero entry is estimated as zero.
pub fn within_multiplicative(estimates: &[f64], exact: &[f64], eps: f64) -> bool {
    estimates.iter().zip(exact).all(|(&e, &p)| {
        if p > 0.0 {
            (e - p).abs() <= eps * p
        } else {
            e == 0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_ising, gen_graph, Graph, GraphFamily};
    use crate::oracle::enumerate_gibbs;

    #[test]
    fn parameter_formulas() {
        assert_eq!(repetitions(130, 0.1), 143);
        assert_eq!(repetitions(2, 0.1), 67);
        assert_eq!(batch_size(2, 0.1), 4427);
        let s = batch_size(130, 0.1);
        assert!((613_000..613_600).contains(&s), "{s}");
    }

    #[test]
    fn rejects_bad_requests() {
        let sys = build_ising(
            Graph::from_edges(2, &[(0, 1)]).unwrap(),
            0.9,
            &[(1.0, 1.0); 2],
        )
        .unwrap()
        .0;
        let o = InferenceOptions::default();
        assert!(matches!(
            estimate_conditional_marginal(&sys, &[(0, 1)], 0, 0.1, 0.1, &o),
            Err(InferenceError::TargetPinned(0))
        ));
        assert!(matches!(
            estimate_conditional_marginal(&sys, &[], 0, 0.0, 0.1, &o),
            Err(InferenceError::BadAccuracy)
        ));
        let inst = crate::instance::ColoringInstance::new(
            gen_graph(GraphFamily::Path, 3, None, 0).unwrap(),
            130,
        )
        .unwrap();
        assert!(estimate_conditional_marginal(&inst, &[(0, 4), (1, 4)], 2, 0.1, 0.1, &o).is_err());
    }

    #[test]
    fn edge_ising_with_pinned_neighbor() {
        let b = 0.9;
        let sys = build_ising(
            Graph::from_edges(2, &[(0, 1)]).unwrap(),
            b,
            &[(1.0, 1.0); 2],
        )
        .unwrap()
        .0;
        let est = estimate_conditional_marginal(
            &sys,
            &[(0, 1)],
            1,
            0.1,
            0.1,
            &InferenceOptions::default(),
        )
        .unwrap();
        let exact = [1.0 / (b + 1.0), b / (b + 1.0)];
        assert!(
            within_multiplicative(&est.estimates, &exact, 0.1),
            "{:?}",
            est.estimates
        );
        assert!((est.estimates.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(est.batches, 67);
    }

    #[test]
    fn isolated_vertex_recovers_field() {
        let sys = SpinSystem::new(
            Graph::from_edges(1, &[]).unwrap(),
            3,
            vec![vec![0.2, 0.3, 0.5]],
            vec![],
        )
        .unwrap();
        let est =
            estimate_conditional_marginal(&sys, &[], 0, 0.1, 0.1, &InferenceOptions::default())
                .unwrap();
        assert!(within_multiplicative(&est.estimates, &[0.2, 0.3, 0.5], 0.1));
    }

    #[test]
    fn coloring_zeros_are_exact() {
        let inst = crate::instance::ColoringInstance::new(
            gen_graph(GraphFamily::Path, 3, None, 0).unwrap(),
            130,
        )
        .unwrap();
        let opts = InferenceOptions {
            repetitions: Some(3),
            batch_size: Some(2000),
            ..Default::default()
        };
        let est =
            estimate_conditional_marginal(&inst, &[(0, 0), (2, 1)], 1, 0.1, 0.1, &opts).unwrap();
        assert_eq!(est.estimates[0], 0.0);
        assert_eq!(est.estimates[1], 0.0);
        assert!((est.estimates.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(est.samples_used, 6000);
    }

    #[test]
    fn median_of_batches() {
        let mk = |f: Vec<f64>| BatchResult {
            frequencies: f,
            completed: 1,
            truncated: false,
            cost: CostStats::default(),
        };
        let batches = vec![mk(vec![0.2, 0.8]), mk(vec![0.5, 0.5]), mk(vec![0.4, 0.6])];
        let m = median_estimate(&batches, &[false, false]);
        assert!((m[0] - 0.4 / 1.0).abs() < 1e-12 && (m[1] - 0.6).abs() < 1e-12);
        let m = median_estimate(&batches, &[true, false]);
        assert_eq!(m, vec![0.0, 1.0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = gen_graph(GraphFamily::Path, 3, None, 0).unwrap();
        let sys = build_ising(g, 0.9, &[(1.0, 1.0); 3]).unwrap().0;
        let opts = InferenceOptions {
            seed: 4,
            repetitions: Some(5),
            batch_size: Some(500),
            ..Default::default()
        };
        let a = estimate_conditional_marginal(&sys, &[(0, 1)], 2, 0.1, 0.1, &opts).unwrap();
        let b = estimate_conditional_marginal(&sys, &[(0, 1)], 2, 0.1, 0.1, &opts).unwrap();
        assert_eq!(a.estimates, b.estimates);
        let exact = enumerate_gibbs(&sys, &[(0, 1)])
            .unwrap()
            .vertex_marginal(2, 2)
            .unwrap();
        assert!(within_multiplicative(&a.estimates, &exact, 0.2));
    }
}
