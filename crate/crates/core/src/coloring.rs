//! Local sampler for uniform proper q-colorings.
//!
//! Hard constraints rule out the soft sampler's "ignore the neighbor"
//! shortcut, so this engine works with partial information instead. Besides
//! `resolve(t)` there is `check(t, c)`, which decides only whether the update
//! at `t` produced color `c`. Each unresolved update keeps a surviving list
//! `L(t)` of colors not yet ruled out; a negative check removes `c` from it.
//!
//! * `evaluate_color` (inside resolve): draw `c` uniformly from `L(t)`; if no
//!   neighbor's last update before `t` was `c`, output it, else drop `c` and
//!   redraw.
//! * `evaluate_color_eq` (inside check): with probability `1 − 2/|L|` answer
//!   0 outright; otherwise answer 0 if some neighbor is `c`, and else 1 with
//!   probability `(|L|/2)/|L∖S|`, realized by a division factory over the
//!   neighborhood coin of bias `|L∖S|/|L|`.
//! * A check on a list of size `≤ 50Δ` resolves the update fully instead.
//!
//! All recursion targets earlier timestamps and runs on an explicit stack.
//!
//! Draw order: `evaluate_color` draws one list index per loop;
//! `evaluate_color_eq` draws its branch uniform, then checks neighbors in
//! ascending id order, then runs the factory, whose coin flips each draw one
//! list index before their neighbor checks.

use rand::Rng;

use crate::bernoulli::{DivisionBf, Step};
use crate::error::SampleError;
use crate::instance::{ColorPolicy, ColoringInstance};
use crate::rng::RandomStream;
use crate::schedule::{pred, scan_vertex, CostStats, MemoState, Timestamp};
use crate::DEFAULT_BUDGET;

/// Slack handed to the division factory. With `|L| > 50Δ` and at most `Δ`
/// neighbor colors the coin bias is at least `49/50 = 1/2 + 0.48`.
pub const FACTORY_SLACK: f64 = 0.48;

/// List-size multiplier below which a check falls back to a full resolve.
pub const LIST_FLOOR_FACTOR: usize = 50;

#[derive(Clone, Copy, Debug)]
pub struct ColoringConfig {
    pub policy: ColorPolicy,
    /// Frame pushes allowed per top-level query.
    pub budget: u64,
}

impl Default for ColoringConfig {
    fn default() -> Self {
        ColoringConfig {
            policy: ColorPolicy::Strict,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// What a suspended procedure needs next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorStep {
    /// `O(u, color)` for the neighbor at adjacency index `slot`: did its
    /// last update before this one produce `color`?
    Query {
        slot: usize,
        color: u32,
    },
    Done(u32),
}

/// The list `L(t)` a procedure works on, with the problem constants.
#[derive(Clone, Copy, Debug)]
pub struct ListRef {
    pub t: Timestamp,
    pub q: usize,
    /// `50Δ`.
    pub floor: usize,
    pub degree: usize,
}

/// Resumable `Evaluate(v; L)`.
#[derive(Clone, Debug, Default)]
pub struct EvalColor {
    color: Option<u32>,
    next: usize,
    started: bool,
}

impl EvalColor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn resume<R: Rng + ?Sized>(
        &mut self,
        list: ListRef,
        answer: Option<bool>,
        memo: &mut MemoState,
        rng: &mut R,
    ) -> Result<ColorStep, SampleError> {
        if let Some(hit) = answer {
            let c = self.color.expect("answer without a pending color");
            if hit {
                memo.list_remove(list.t, c, list.q)?;
                self.color = None;
            } else {
                self.next += 1;
            }
        } else if !self.started {
            self.started = true;
            let size = memo.list_len(list.t, list.q);
            if size < list.floor || size == 0 {
                return Err(SampleError::ListBound {
                    t: list.t,
                    size,
                    bound: list.floor,
                });
            }
        }
        let c = match self.color {
            Some(c) => c,
            None => {
                let c = memo.list_sample(list.t, list.q, rng);
                memo.stats.evaluate_iterations += 1;
                self.color = Some(c);
                self.next = 0;
                c
            }
        };
        if self.next < list.degree {
            Ok(ColorStep::Query {
                slot: self.next,
                color: c,
            })
        } else {
            Ok(ColorStep::Done(c))
        }
    }
}

/// Resumable coin of bias `|L∖S|/|L|`: draw `c₀` uniformly from `L` and
/// report 0 iff some neighbor's outcome is `c₀`.
#[derive(Clone, Debug)]
pub struct NeighborhoodCoin {
    color: u32,
    next: usize,
}

impl NeighborhoodCoin {
    pub fn start<R: Rng + ?Sized>(list: ListRef, memo: &mut MemoState, rng: &mut R) -> Self {
        memo.stats.coin_flips += 1;
        NeighborhoodCoin {
            color: memo.list_sample(list.t, list.q, rng),
            next: 0,
        }
    }

    /// `Err(query)` while neighbors remain to be checked, `Ok(bit)` after.
    pub fn resume(&mut self, degree: usize, answer: Option<bool>) -> Result<bool, ColorStep> {
        if let Some(hit) = answer {
            if hit {
                return Ok(false);
            }
            self.next += 1;
        }
        if self.next < degree {
            Err(ColorStep::Query {
                slot: self.next,
                color: self.color,
            })
        } else {
            Ok(true)
        }
    }
}

#[derive(Clone, Debug)]
enum EqPhase {
    Start,
    Neighbors(usize),
    Factory(DivisionBf, Option<bool>),
    Coin(DivisionBf, NeighborhoodCoin),
    Finished,
}

/// Resumable `Evaluate(v, c; L)`: returns 1 with probability `1/|L∖S|` when
/// `c ∉ S`, and 0 surely when `c ∈ S`.
#[derive(Clone, Debug)]
pub struct EvalColorEq {
    color: u32,
    phase: EqPhase,
}

impl EvalColorEq {
    pub fn new(color: u32) -> Self {
        EvalColorEq {
            color,
            phase: EqPhase::Start,
        }
    }

    pub fn resume<R: Rng + ?Sized>(
        &mut self,
        list: ListRef,
        mut answer: Option<bool>,
        memo: &mut MemoState,
        rng: &mut R,
    ) -> Result<ColorStep, SampleError> {
        let c = self.color;
        loop {
            match std::mem::replace(&mut self.phase, EqPhase::Finished) {
                EqPhase::Start => {
                    let size = memo.list_len(list.t, list.q);
                    if size <= list.floor || !memo.list_contains(list.t, c, list.q) {
                        return Err(SampleError::ListBound {
                            t: list.t,
                            size,
                            bound: list.floor + 1,
                        });
                    }
                    memo.stats.evaluate_iterations += 1;
                    memo.stats.rng_draws += 1;
                    let u: f64 = rng.gen();
                    if u >= 2.0 / size as f64 {
                        return Ok(ColorStep::Done(0));
                    }
                    self.phase = EqPhase::Neighbors(0);
                }
                EqPhase::Neighbors(mut j) => {
                    if let Some(hit) = answer.take() {
                        if hit {
                            return Ok(ColorStep::Done(0));
                        }
                        j += 1;
                    }
                    if j < list.degree {
                        self.phase = EqPhase::Neighbors(j);
                        return Ok(ColorStep::Query { slot: j, color: c });
                    }
                    self.phase = EqPhase::Factory(DivisionBf::new(0.5, FACTORY_SLACK), None);
                }
                EqPhase::Factory(mut div, flip) => match div.resume(flip, rng) {
                    Step::Done(x) => return Ok(ColorStep::Done(x as u32)),
                    Step::Flip => {
                        let coin = NeighborhoodCoin::start(list, memo, rng);
                        self.phase = EqPhase::Coin(div, coin);
                    }
                },
                EqPhase::Coin(div, mut coin) => match coin.resume(list.degree, answer.take()) {
                    Ok(bit) => self.phase = EqPhase::Factory(div, Some(bit)),
                    Err(query) => {
                        self.phase = EqPhase::Coin(div, coin);
                        return Ok(query);
                    }
                },
                EqPhase::Finished => unreachable!("resumed a finished evaluation"),
            }
        }
    }
}

/// Drives a machine against a closure oracle `(slot, color) -> bool`.
fn drive<F>(
    mut step: impl FnMut(Option<bool>) -> Result<ColorStep, SampleError>,
    mut oracle: F,
) -> Result<u32, SampleError>
where
    F: FnMut(usize, u32) -> bool,
{
    let mut answer = None;
    loop {
        match step(answer)? {
            ColorStep::Done(x) => return Ok(x),
            ColorStep::Query { slot, color } => answer = Some(oracle(slot, color)),
        }
    }
}

/// One `Evaluate(v; L(t))` against a closure oracle, shrinking `L(t)` in
/// `memo` as it goes. Given neighbor outcomes `S`, the result is uniform on
/// `L ∖ S`.
pub fn evaluate_color<R, F>(
    list: ListRef,
    memo: &mut MemoState,
    rng: &mut R,
    oracle: F,
) -> Result<u32, SampleError>
where
    R: Rng + ?Sized,
    F: FnMut(usize, u32) -> bool,
{
    let mut m = EvalColor::new();
    drive(|a| m.resume(list, a, memo, rng), oracle)
}

/// One `Evaluate(v, c; L(t))` against a closure oracle. Does not touch the
/// list; [`ColoringSession::check`] applies the result.
pub fn evaluate_color_eq<R, F>(
    list: ListRef,
    color: u32,
    memo: &mut MemoState,
    rng: &mut R,
    oracle: F,
) -> Result<bool, SampleError>
where
    R: Rng + ?Sized,
    F: FnMut(usize, u32) -> bool,
{
    let mut m = EvalColorEq::new(color);
    drive(|a| m.resume(list, a, memo, rng), oracle).map(|x| x == 1)
}

/// One flip of the `|L∖S|/|L|` coin against a closure oracle.
pub fn neighborhood_coin<R, F>(
    list: ListRef,
    memo: &mut MemoState,
    rng: &mut R,
    mut oracle: F,
) -> bool
where
    R: Rng + ?Sized,
    F: FnMut(usize, u32) -> bool,
{
    let mut coin = NeighborhoodCoin::start(list, memo, rng);
    let mut answer = None;
    loop {
        match coin.resume(list.degree, answer) {
            Ok(bit) => return bit,
            Err(ColorStep::Query { slot, color }) => answer = Some(oracle(slot, color)),
            Err(ColorStep::Done(_)) => unreachable!(),
        }
    }
}

enum Kind {
    Resolve(EvalColor),
    Check(EvalColorEq),
    /// A check answered by fully resolving the update; holds the color.
    CheckViaResolve(u32),
}

struct Frame {
    t: Timestamp,
    v: usize,
    kind: Kind,
}

/// One coloring session: instance, memo (`M`, `L`, pins), random stream.
pub struct ColoringSession<'a> {
    inst: &'a ColoringInstance,
    memo: MemoState,
    rng: RandomStream,
    config: ColoringConfig,
    floor: usize,
    poisoned: bool,
    stack: Vec<Frame>,
}

impl<'a> ColoringSession<'a> {
    pub fn new(
        inst: &'a ColoringInstance,
        rng: RandomStream,
        config: ColoringConfig,
    ) -> Result<Self, SampleError> {
        config.policy.check(inst.q(), inst.max_degree())?;
        Ok(ColoringSession {
            inst,
            memo: MemoState::new(),
            rng,
            config,
            floor: LIST_FLOOR_FACTOR * inst.max_degree(),
            poisoned: false,
            stack: Vec::new(),
        })
    }

    /// Pins vertices to colors. Pins must form a proper partial coloring.
    pub fn with_pins(mut self, pins: &[(usize, u32)]) -> Result<Self, SampleError> {
        validate_coloring_pins(self.inst, pins)?;
        self.memo = MemoState::with_pins(pins.iter().copied());
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.inst.n()
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

    /// Empties `M` and `L`, keeping pins, counters, and the stream position.
    pub fn reset(&mut self) {
        self.memo.reset();
        self.poisoned = false;
    }

    fn list_ref(&self, t: Timestamp, v: usize) -> ListRef {
        ListRef {
            t,
            q: self.inst.q(),
            floor: self.floor,
            degree: self.inst.graph().degree(v),
        }
    }

    /// Colors of the vertices in `lambda`, in query order.
    pub fn local_sample(&mut self, lambda: &[usize]) -> Result<Vec<u32>, SampleError> {
        let n = self.inst.n();
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

    /// The color produced by the update at time `t ≤ 0`.
    pub fn resolve(&mut self, t: Timestamp) -> Result<u32, SampleError> {
        if self.poisoned {
            return Err(SampleError::Poisoned);
        }
        if let Some(x) = self.memo.memo_get(t) {
            return Ok(x);
        }
        let v = scan_vertex(t, self.inst.n());
        if let Some(p) = self.memo.pin(v) {
            self.memo.memo_set(t, p)?;
            return Ok(p);
        }
        self.stack.clear();
        self.push_resolve(t, v);
        self.run()
    }

    /// Whether the update at time `t ≤ 0` produced color `c`.
    pub fn check(&mut self, t: Timestamp, c: u32) -> Result<bool, SampleError> {
        if self.poisoned {
            return Err(SampleError::Poisoned);
        }
        let v = scan_vertex(t, self.inst.n());
        self.stack.clear();
        match self.issue_check(t, v, c)? {
            Some(x) => Ok(x),
            None => self.run().map(|x| x == 1),
        }
    }

    fn push_resolve(&mut self, t: Timestamp, v: usize) {
        self.memo.stats.resolve_calls += 1;
        self.stack.push(Frame {
            t,
            v,
            kind: Kind::Resolve(EvalColor::new()),
        });
    }

    /// Either answers `Check(s, c)` on the spot or pushes the frames that
    /// will answer it.
    fn issue_check(&mut self, s: Timestamp, u: usize, c: u32) -> Result<Option<bool>, SampleError> {
        self.memo.stats.check_calls += 1;
        if let Some(x) = self.memo.memo_get(s) {
            return Ok(Some(x == c));
        }
        if let Some(p) = self.memo.pin(u) {
            return Ok(Some(p == c));
        }
        let q = self.inst.q();
        if !self.memo.list_contains(s, c, q) {
            return Ok(Some(false));
        }
        if self.memo.list_len(s, q) <= self.floor {
            self.stack.push(Frame {
                t: s,
                v: u,
                kind: Kind::CheckViaResolve(c),
            });
            self.push_resolve(s, u);
        } else {
            self.stack.push(Frame {
                t: s,
                v: u,
                kind: Kind::Check(EvalColorEq::new(c)),
            });
        }
        Ok(None)
    }

    fn run(&mut self) -> Result<u32, SampleError> {
        let n = self.inst.n();
        let mut pushes = self.stack.len() as u64;
        let mut answer: Option<u32> = None;
        loop {
            let top = self.stack.len() - 1;
            let (t, v) = (self.stack[top].t, self.stack[top].v);
            let list = self.list_ref(t, v);
            let step = match &mut self.stack[top].kind {
                Kind::Resolve(m) => m.resume(
                    list,
                    answer.take().map(|x| x == 1),
                    &mut self.memo,
                    &mut self.rng,
                )?,
                Kind::Check(m) => m.resume(
                    list,
                    answer.take().map(|x| x == 1),
                    &mut self.memo,
                    &mut self.rng,
                )?,
                Kind::CheckViaResolve(c) => {
                    let got = answer
                        .take()
                        .expect("fallback frame resumed without a color");
                    ColorStep::Done((got == *c) as u32)
                }
            };
            match step {
                ColorStep::Query { slot, color } => {
                    let u = self.inst.graph().neighbors(v)[slot];
                    let s = pred(t, u, n);
                    debug_assert!(s < t && s > t - n as i64, "non-local recursion");
                    let depth = self.stack.len();
                    if let Some(x) = self.issue_check(s, u, color)? {
                        answer = Some(x as u32);
                        continue;
                    }
                    pushes += (self.stack.len() - depth) as u64;
                    if pushes > self.config.budget {
                        self.stack.clear();
                        self.poisoned = true;
                        return Err(SampleError::BudgetExceeded {
                            budget: self.config.budget,
                        });
                    }
                }
                ColorStep::Done(x) => {
                    let frame = self.stack.pop().unwrap();
                    match frame.kind {
                        Kind::Resolve(_) => self.memo.memo_set(frame.t, x)?,
                        Kind::Check(m) => {
                            if x == 1 {
                                self.memo.memo_set(frame.t, m.color)?;
                            } else {
                                self.memo.list_remove(frame.t, m.color, self.inst.q())?;
                            }
                        }
                        Kind::CheckViaResolve(_) => {}
                    }
                    if self.stack.is_empty() {
                        return Ok(x);
                    }
                    answer = Some(x);
                }
            }
        }
    }
}

pub(crate) fn validate_coloring_pins(
    inst: &ColoringInstance,
    pins: &[(usize, u32)],
) -> Result<(), SampleError> {
    let mut assigned = rustc_hash::FxHashMap::default();
    for &(v, c) in pins {
        if v >= inst.n() {
            return Err(SampleError::BadVertex(v));
        }
        if c as usize >= inst.q() {
            return Err(SampleError::BadPinning(format!(
                "color {c} at vertex {v} is >= q"
            )));
        }
        if assigned.insert(v, c).is_some_and(|old| old != c) {
            return Err(SampleError::BadPinning(format!("vertex {v} pinned twice")));
        }
    }
    for (&v, &c) in &assigned {
        for u in inst.graph().neighbors(v) {
            if assigned.get(u) == Some(&c) {
                return Err(SampleError::BadPinning(format!(
                    "adjacent vertices {v} and {u} both pinned to {c}"
                )));
            }
        }
    }
    Ok(())
}
