//! Scan-order timestamp arithmetic and the memo state shared by the
//! backward-deduction engines.
//!
//! Time runs over the non-positive integers. The update at time `t` touches
//! vertex `t mod n` (nonnegative residue), so the last update of `u` at or
//! before `t` is `pred(t, u, n)`.

use rand::Rng;
use rustc_hash::FxHashMap;
use serde::Serialize;

use crate::error::MemoError;

pub type Timestamp = i64;

/// Practical bound on |t|; far beyond anything a session can reach.
pub const TIMESTAMP_LIMIT: i64 = 1 << 62;

#[inline]
fn guard(t: Timestamp) {
    assert!(
        t.unsigned_abs() < TIMESTAMP_LIMIT as u64,
        "timestamp {t} out of range"
    );
}

/// The vertex updated at time `t`: `t mod n` as a nonnegative residue.
#[inline]
pub fn scan_vertex(t: Timestamp, n: usize) -> usize {
    guard(t);
    t.rem_euclid(n as i64) as usize
}

/// Latest `t' ≤ t` with `scan_vertex(t', n) == u`.
#[inline]
pub fn pred(t: Timestamp, u: usize, n: usize) -> Timestamp {
    guard(t);
    debug_assert!(u < n);
    t - (t - u as i64).rem_euclid(n as i64)
}

/// Work counters for one session. All counters only grow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostStats {
    /// Resolve invocations that ran an evaluation (memo and pin hits are free).
    pub resolve_calls: u64,
    /// Check invocations, including the ones answered from the memo.
    pub check_calls: u64,
    /// Neighbor-oracle queries issued by soft-system evaluations.
    pub oracle_calls: u64,
    /// Loop iterations across all evaluation procedures.
    pub evaluate_iterations: u64,
    /// Flips of the neighborhood coin feeding the Bernoulli factory.
    pub coin_flips: u64,
    /// Random numbers drawn from the session stream.
    pub rng_draws: u64,
}

impl CostStats {
    /// Single scalar used for truncation budgets and cost summaries.
    pub fn work(&self) -> u64 {
        self.resolve_calls + self.check_calls + self.oracle_calls + self.evaluate_iterations
    }

    pub fn since(&self, earlier: &CostStats) -> CostStats {
        CostStats {
            resolve_calls: self.resolve_calls - earlier.resolve_calls,
            check_calls: self.check_calls - earlier.check_calls,
            oracle_calls: self.oracle_calls - earlier.oracle_calls,
            evaluate_iterations: self.evaluate_iterations - earlier.evaluate_iterations,
            coin_flips: self.coin_flips - earlier.coin_flips,
            rng_draws: self.rng_draws - earlier.rng_draws,
        }
    }

    pub fn add(&mut self, other: &CostStats) {
        self.resolve_calls += other.resolve_calls;
        self.check_calls += other.check_calls;
        self.oracle_calls += other.oracle_calls;
        self.evaluate_iterations += other.evaluate_iterations;
        self.coin_flips += other.coin_flips;
        self.rng_draws += other.rng_draws;
    }
}

/// A materialized surviving-color list: dense array with swap removal plus
/// a position index for O(1) membership.
#[derive(Clone, Debug)]
struct ColorList {
    colors: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;
const UNPINNED: u32 = u32::MAX;

impl ColorList {
    fn full(q: usize) -> Self {
        ColorList {
            colors: (0..q as u32).collect(),
            pos: (0..q as u32).collect(),
        }
    }

    fn contains(&self, c: u32) -> bool {
        self.pos.get(c as usize).is_some_and(|&p| p != ABSENT)
    }

    fn remove(&mut self, c: u32) -> bool {
        let p = match self.pos.get(c as usize) {
            Some(&p) if p != ABSENT => p as usize,
            _ => return false,
        };
        let last = *self.colors.last().unwrap();
        self.colors.swap_remove(p);
        if last != c {
            self.pos[last as usize] = p as u32;
        }
        self.pos[c as usize] = ABSENT;
        true
    }
}

/// The global state of one backward-deduction session: resolved outcomes
/// `m`, surviving color lists, and pins.
#[derive(Clone, Debug, Default)]
pub struct MemoState {
    m: FxHashMap<Timestamp, u32>,
    lists: FxHashMap<Timestamp, ColorList>,
    /// Dense pin table indexed by vertex; `UNPINNED` marks free vertices.
    pins: Vec<u32>,
    pub stats: CostStats,
}

impl MemoState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_pins(pins: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut table = Vec::new();
        for (v, c) in pins {
            if table.len() <= v {
                table.resize(v + 1, UNPINNED);
            }
            table[v] = c;
        }
        MemoState {
            pins: table,
            ..Self::default()
        }
    }

    /// Forgets every resolved outcome and list, keeping pins and counters.
    pub fn reset(&mut self) {
        if !self.m.is_empty() {
            self.m.clear();
        }
        if !self.lists.is_empty() {
            self.lists.clear();
        }
    }

    #[inline]
    pub fn pin(&self, v: usize) -> Option<u32> {
        match self.pins.get(v) {
            Some(&c) if c != UNPINNED => Some(c),
            _ => None,
        }
    }

    /// Pinned vertices and their values, by vertex.
    pub fn pins(&self) -> Vec<(usize, u32)> {
        self.pins
            .iter()
            .enumerate()
            .filter(|p| *p.1 != UNPINNED)
            .map(|(v, &c)| (v, c))
            .collect()
    }

    pub fn resolved_count(&self) -> usize {
        self.m.len()
    }

    #[inline]
    pub fn memo_get(&self, t: Timestamp) -> Option<u32> {
        self.m.get(&t).copied()
    }

    /// Write-once assignment of `m(t)`. If `L(t)` has been materialized the
    /// value must still be in it.
    pub fn memo_set(&mut self, t: Timestamp, value: u32) -> Result<(), MemoError> {
        if let Some(list) = self.lists.get(&t) {
            if !list.contains(value) {
                return Err(MemoError::NotInList { t, color: value });
            }
        }
        match self.m.entry(t) {
            std::collections::hash_map::Entry::Occupied(_) => Err(MemoError::DoubleSet(t)),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(value);
                Ok(())
            }
        }
    }

    /// `L(t)` as a sorted vector; the full `[q]` when never shrunk.
    pub fn list_get(&self, t: Timestamp, q: usize) -> Vec<u32> {
        match self.lists.get(&t) {
            Some(l) => {
                let mut v = l.colors.clone();
                v.sort_unstable();
                v
            }
            None => (0..q as u32).collect(),
        }
    }

    #[inline]
    pub fn list_len(&self, t: Timestamp, q: usize) -> usize {
        self.lists.get(&t).map_or(q, |l| l.colors.len())
    }

    #[inline]
    pub fn list_contains(&self, t: Timestamp, c: u32, q: usize) -> bool {
        match self.lists.get(&t) {
            Some(l) => l.contains(c),
            None => (c as usize) < q,
        }
    }

    /// Uniform draw from `L(t)`: one `gen_range` over the current length.
    #[inline]
    pub fn list_sample<R: Rng + ?Sized>(&mut self, t: Timestamp, q: usize, rng: &mut R) -> u32 {
        self.stats.rng_draws += 1;
        match self.lists.get(&t) {
            Some(l) => l.colors[rng.gen_range(0..l.colors.len())],
            None => rng.gen_range(0..q as u32),
        }
    }

    /// Removes `c` from `L(t)`, materializing `[q]` on first removal.
    pub fn list_remove(&mut self, t: Timestamp, c: u32, q: usize) -> Result<(), MemoError> {
        let list = self.lists.entry(t).or_insert_with(|| ColorList::full(q));
        if list.remove(c) {
            Ok(())
        } else {
            Err(MemoError::AbsentColor { t, color: c })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scan_examples() {
        assert_eq!(scan_vertex(0, 3), 0);
        assert_eq!(scan_vertex(-1, 3), 2);
        assert_eq!(scan_vertex(-3, 3), 0);
    }

    fn pred_by_enumeration(t: i64, u: usize, n: usize) -> i64 {
        (0..n as i64)
            .map(|k| t - k)
            .find(|&s| s.rem_euclid(n as i64) as usize == u)
            .unwrap()
    }

    #[test]
    fn pred_examples() {
        assert_eq!(pred_by_enumeration(0, 1, 3), -2);
        assert_eq!(pred(0, 1, 3), -2);
        assert_eq!(pred(0, 0, 3), 0);
        assert_eq!(pred_by_enumeration(-4, 2, 3), -4);
        assert_eq!(pred(-4, 2, 3), -4);
    }

    proptest! {
        #[test]
        fn pred_properties(t in -1_000_000_000i64..=0, n in 1usize..500, u_raw in 0usize..500) {
            let u = u_raw % n;
            let p = pred(t, u, n);
            prop_assert!(p <= t);
            prop_assert!(p > t - n as i64);
            prop_assert_eq!(scan_vertex(p, n), u);
        }

        #[test]
        fn list_discipline(q in 2usize..40, ops in proptest::collection::vec(0u32..40, 0..80)) {
            let mut m = MemoState::new();
            let mut model: Vec<u32> = (0..q as u32).collect();
            for c in ops {
                let present = model.contains(&c);
                prop_assert_eq!(m.list_contains(-3, c, q), present);
                let r = m.list_remove(-3, c, q);
                prop_assert_eq!(r.is_ok(), present);
                model.retain(|&x| x != c);
                prop_assert_eq!(m.list_get(-3, q), model.clone());
                prop_assert_eq!(m.list_len(-3, q), model.len());
            }
        }
    }

    #[test]
    fn memo_write_once() {
        let mut m = MemoState::new();
        assert_eq!(m.memo_get(-7), None);
        m.memo_set(-7, 2).unwrap();
        assert_eq!(m.memo_get(-7), Some(2));
        assert_eq!(m.memo_set(-7, 2), Err(MemoError::DoubleSet(-7)));
    }

    #[test]
    fn lists_are_lazy_and_shrink() {
        let mut m = MemoState::new();
        assert_eq!(m.list_get(-7, 5), vec![0, 1, 2, 3, 4]);
        m.list_remove(-7, 3, 5).unwrap();
        assert_eq!(m.list_get(-7, 5), vec![0, 1, 2, 4]);
        assert_eq!(m.list_len(-7, 5), 4);
        assert_eq!(
            m.list_remove(-7, 3, 5),
            Err(MemoError::AbsentColor { t: -7, color: 3 })
        );
        assert_eq!(
            m.memo_set(-7, 3),
            Err(MemoError::NotInList { t: -7, color: 3 })
        );
        m.memo_set(-7, 4).unwrap();
    }

    #[test]
    fn list_sampling_stays_in_list() {
        let mut m = MemoState::new();
        let mut rng = crate::rng::RandomStream::new(3, 0);
        for c in [0, 2, 4, 6, 8] {
            m.list_remove(-1, c, 10).unwrap();
        }
        for _ in 0..1000 {
            let c = m.list_sample(-1, 10, &mut rng);
            assert_eq!(c % 2, 1);
        }
    }
}
