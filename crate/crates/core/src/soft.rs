//! Local sampler for spin systems with soft constraints.
//!
//! `resolve(t)` returns the spin the stationary scan chain assigns at time
//! `t`. It runs a rejection sampler for the conditional marginal at
//! `v = scan_vertex(t)`: propose `c ~ λ_v`, and for each neighbor `u` draw
//! `r ~ U[0,1)`; only when `r ≥ C` does the proposal depend on `u`, and only
//! then is `u`'s last spin before `t` resolved recursively. Accept when no
//! neighbor rejects.
//!
//! Recursion runs on an explicit frame stack. Each frame is a suspended
//! [`SoftEvaluator`] waiting on at most one neighbor query.
//!
//! Draw order per iteration: the proposal `c`, then one uniform per
//! neighbor in ascending id order, each drawn only when reached.

use rand::Rng;

use crate::error::SampleError;
use crate::instance::{c_threshold, validate_soft, SpinSystem};
use crate::rng::RandomStream;
use crate::schedule::{pred, scan_vertex, CostStats, MemoState, Timestamp};
use crate::DEFAULT_BUDGET;

#[derive(Clone, Copy, Debug)]
pub struct SoftConfig {
    /// Stop scanning neighbors after the first rejection. The output law is
    /// unchanged; fewer uniforms are drawn.
    pub break_early: bool,
    /// Frame pushes allowed per top-level resolve.
    pub budget: u64,
    /// Sample even when the tractability condition fails.
    pub force: bool,
    /// δ used for the threshold `C(Δ, δ)`. Defaults to the system's
    /// validated δ, else its `delta_max`.
    pub delta: Option<f64>,
}

impl Default for SoftConfig {
    fn default() -> Self {
        SoftConfig {
            break_early: false,
            budget: DEFAULT_BUDGET,
            force: false,
            delta: None,
        }
    }
}

/// What a suspended evaluation needs next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalStep {
    /// The spin of the neighbor at this adjacency index.
    Query(usize),
    Done(u32),
}

/// Resumable rejection sampler for one vertex's conditional marginal.
#[derive(Clone, Debug, Default)]
pub struct SoftEvaluator {
    proposal: u32,
    next: usize,
    accept: bool,
    pending_r: f64,
    started: bool,
}

impl SoftEvaluator {
    pub fn new() -> Self {
        Self::default()
    }

    fn start_iteration<R: Rng + ?Sized>(
        &mut self,
        sys: &SpinSystem,
        v: usize,
        rng: &mut R,
        stats: &mut CostStats,
    ) {
        self.proposal = sys.sample_field(v, rng);
        stats.rng_draws += 1;
        stats.evaluate_iterations += 1;
        self.next = 0;
        self.accept = true;
        self.started = true;
    }

    /// Advances the evaluation at `v`. `answer` is the spin of the neighbor
    /// named by the previous [`EvalStep::Query`], or `None` on the first call.
    #[allow(clippy::too_many_arguments)]
    pub fn resume<R: Rng + ?Sized>(
        &mut self,
        sys: &SpinSystem,
        v: usize,
        threshold: f64,
        break_early: bool,
        answer: Option<u32>,
        rng: &mut R,
        stats: &mut CostStats,
    ) -> EvalStep {
        let graph = sys.graph();
        let nbrs = graph.neighbors(v);
        let edges = graph.neighbor_edges(v);
        if let Some(spin_u) = answer {
            let j = self.next;
            if self.pending_r >= sys.interaction(edges[j], nbrs[j], spin_u, v, self.proposal) {
                self.accept = false;
            }
            self.next += 1;
        } else if !self.started {
            self.start_iteration(sys, v, rng, stats);
        }
        loop {
            if self.next >= nbrs.len() || (break_early && !self.accept) {
                if self.accept {
                    return EvalStep::Done(self.proposal);
                }
                self.start_iteration(sys, v, rng, stats);
                continue;
            }
            let r: f64 = rng.gen();
            stats.rng_draws += 1;
            if r >= threshold {
                self.pending_r = r;
                stats.oracle_calls += 1;
                return EvalStep::Query(self.next);
            }
            self.next += 1;
        }
    }
}

/// Runs one evaluation at `v` against a neighbor oracle `u ↦ spin`.
/// When the oracle answers according to a fixed `σ`, the output is
/// distributed as the conditional marginal `μ_v^σ`.
pub fn evaluate_soft<R, F>(
    sys: &SpinSystem,
    v: usize,
    threshold: f64,
    break_early: bool,
    rng: &mut R,
    stats: &mut CostStats,
    mut oracle: F,
) -> u32
where
    R: Rng + ?Sized,
    F: FnMut(usize) -> u32,
{
    let mut eval = SoftEvaluator::new();
    let mut answer = None;
    loop {
        match eval.resume(sys, v, threshold, break_early, answer, rng, stats) {
            EvalStep::Done(c) => return c,
            EvalStep::Query(j) => answer = Some(oracle(sys.graph().neighbors(v)[j])),
        }
    }
}

struct Frame {
    t: Timestamp,
    v: usize,
    eval: SoftEvaluator,
}

/// One sampling session: a system, a memo, and a random stream. Queries on
/// the same session are mutually consistent.
pub struct SoftSession<'a> {
    sys: &'a SpinSystem,
    memo: MemoState,
    rng: RandomStream,
    config: SoftConfig,
    threshold: f64,
    poisoned: bool,
    stack: Vec<Frame>,
}

impl<'a> SoftSession<'a> {
    pub fn new(
        sys: &'a SpinSystem,
        rng: RandomStream,
        config: SoftConfig,
    ) -> Result<Self, SampleError> {
        let d = sys.max_degree();
        let delta = config
            .delta
            .or(sys.delta())
            .unwrap_or_else(|| sys.delta_max());
        let threshold = if d == 0 {
            1.0
        } else {
            if !validate_soft(sys, delta).ok && !config.force {
                return Err(SampleError::ConditionViolated {
                    delta_max: sys.delta_max(),
                });
            }
            // Any C at or below the smallest entry keeps the sampler exact.
            c_threshold(d, delta).min(sys.min_entry()).max(0.0)
        };
        Ok(SoftSession {
            sys,
            memo: MemoState::new(),
            rng,
            config,
            threshold,
            poisoned: false,
            stack: Vec::new(),
        })
    }

    /// Pins vertices to fixed spins; resolving any update of a pinned
    /// vertex returns its pin. Pinned spins must have positive field weight.
    pub fn with_pins(mut self, pins: &[(usize, u32)]) -> Result<Self, SampleError> {
        for &(v, s) in pins {
            if v >= self.sys.n() {
                return Err(SampleError::BadVertex(v));
            }
            if s as usize >= self.sys.q() || self.sys.field(v)[s as usize] <= 0.0 {
                return Err(SampleError::BadPinning(format!(
                    "spin {s} at vertex {v} has zero weight"
                )));
            }
        }
        self.memo = MemoState::with_pins(pins.iter().copied());
        Ok(self)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn n(&self) -> usize {
        self.sys.n()
    }

    pub fn stats(&self) -> CostStats {
        self.memo.stats
    }

    pub fn memo(&self) -> &MemoState {
        &self.memo
    }

    pub fn memo_mut(&mut self) -> &mut MemoState {
        &mut self.memo
    }

    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }

    /// Starts over with an empty memo, keeping pins, counters, and the
    /// stream position. Later queries are independent of earlier ones.
    pub fn reset(&mut self) {
        self.memo.reset();
        self.poisoned = false;
    }

    /// Spins of the vertices in `lambda`, in query order.
    pub fn local_sample(&mut self, lambda: &[usize]) -> Result<Vec<u32>, SampleError> {
        let n = self.sys.n();
        lambda
            .iter()
            .map(|&v| {
                if v >= n {
                    return Err(SampleError::BadVertex(v));
                }
                self.resolve(pred(0, v, n))
            })
            .collect()
    }

    /// The outcome of the update at time `t ≤ 0`.
    pub fn resolve(&mut self, t: Timestamp) -> Result<u32, SampleError> {
        if self.poisoned {
            return Err(SampleError::Poisoned);
        }
        debug_assert!(t <= 0);
        if let Some(x) = self.memo.memo_get(t) {
            return Ok(x);
        }
        let n = self.sys.n();
        let v = scan_vertex(t, n);
        if let Some(p) = self.memo.pin(v) {
            self.memo.memo_set(t, p)?;
            return Ok(p);
        }

        let SoftSession {
            sys,
            memo,
            rng,
            config,
            threshold,
            stack,
            ..
        } = self;
        let sys: &SpinSystem = sys;
        stack.clear();
        stack.push(Frame {
            t,
            v,
            eval: SoftEvaluator::new(),
        });
        memo.stats.resolve_calls += 1;
        let mut pushes = 1u64;
        let mut answer = None;

        loop {
            let frame = stack.last_mut().expect("stack is nonempty inside the loop");
            let step = frame.eval.resume(
                sys,
                frame.v,
                *threshold,
                config.break_early,
                answer.take(),
                rng,
                &mut memo.stats,
            );
            match step {
                EvalStep::Query(j) => {
                    let u = sys.graph().neighbors(frame.v)[j];
                    let s = pred(frame.t, u, n);
                    debug_assert!(s < frame.t && s > frame.t - n as i64, "non-local recursion");
                    if let Some(x) = memo.memo_get(s) {
                        answer = Some(x);
                        continue;
                    }
                    if let Some(p) = memo.pin(u) {
                        memo.memo_set(s, p)?;
                        answer = Some(p);
                        continue;
                    }
                    pushes += 1;
                    if pushes > config.budget {
                        stack.clear();
                        self.poisoned = true;
                        return Err(SampleError::BudgetExceeded {
                            budget: self.config.budget,
                        });
                    }
                    memo.stats.resolve_calls += 1;
                    stack.push(Frame {
                        t: s,
                        v: u,
                        eval: SoftEvaluator::new(),
                    });
                }
                EvalStep::Done(c) => {
                    let done = stack.pop().unwrap();
                    memo.memo_set(done.t, c)?;
                    if stack.is_empty() {
                        return Ok(c);
                    }
                    answer = Some(c);
                }
            }
        }
    }
}
