//! Bernoulli factories: turning flips of a coin with unknown bias ξ into
//! flips of a coin with bias `Cξ`, `ξ₁ − ξ₂`, or `p/ξ`.
//!
//! Each factory is a resumable state machine. It consumes auxiliary
//! randomness from the caller's stream directly and suspends whenever it
//! needs a flip of an input coin, so the coloring engine can service those
//! flips with its own explicit-stack recursion. The blocking functions
//! [`linear_bf`], [`subtract_bf`] and [`division_bf`] drive the same
//! machines with a [`CoinOracle`].

use rand::Rng;

use crate::error::FactoryError;
use crate::rng::RandomStream;

/// Hard cap on input-coin flips for one blocking factory run.
pub const FLIP_BUDGET: u64 = 10_000_000;

/// A coin of unknown bias.
pub trait CoinOracle {
    fn flip(&mut self) -> bool;
    /// Number of flips made so far.
    fn flips(&self) -> u64;
}

/// A coin with known bias driven by its own stream. Useful for tests and
/// for the constant-probability coin inside the division factory.
#[derive(Clone, Debug)]
pub struct BiasedCoin {
    bias: f64,
    rng: RandomStream,
    flips: u64,
}

impl BiasedCoin {
    pub fn new(bias: f64, rng: RandomStream) -> Self {
        BiasedCoin {
            bias,
            rng,
            flips: 0,
        }
    }
}

impl CoinOracle for BiasedCoin {
    fn flip(&mut self) -> bool {
        self.flips += 1;
        self.rng.gen::<f64>() < self.bias
    }

    fn flips(&self) -> u64 {
        self.flips
    }
}

/// Wraps any closure as a counted coin.
pub struct FnCoin<F> {
    f: F,
    flips: u64,
}

impl<F: FnMut() -> bool> FnCoin<F> {
    pub fn new(f: F) -> Self {
        FnCoin { f, flips: 0 }
    }
}

impl<F: FnMut() -> bool> CoinOracle for FnCoin<F> {
    fn flip(&mut self) -> bool {
        self.flips += 1;
        (self.f)()
    }

    fn flips(&self) -> u64 {
        self.flips
    }
}

/// Geometric draw on `{1, 2, …}` with success probability `p`, by inversion
/// `⌈ln U / ln(1 − p)⌉` with `U` uniform on `(0, 1]`.
pub fn geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    debug_assert!(p > 0.0 && p <= 1.0);
    if p >= 1.0 {
        return 1;
    }
    let u = 1.0 - rng.gen::<f64>();
    let g = (u.ln() / (-p).ln_1p()).ceil();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        (g as u64).max(1)
    }
}

/// Outcome of advancing a factory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// The input coin must be flipped; feed the result back.
    Flip,
    Done(bool),
}

/// Huber's linear factory: a `Cξ` coin from a ξ coin, given `Cξ ≤ 1 − ζ`.
///
/// A walk starts at `i = 1`; each flip moves it by `−1 + (1 − B)·G` with
/// `G ~ Geo((C−1)/C)` on `{1, 2, …}`. Hitting 0 outputs 1. Whenever `i`
/// reaches the threshold `k` a `(1 + ζ/2)^(−i)` filter is applied, and on
/// survival the walk continues with `C ← C(1 + ζ/2)`, `ζ ← ζ/2`, `k ← 2k`.
#[derive(Clone, Debug)]
pub struct LinearBf {
    c: f64,
    zeta: f64,
    k: f64,
    i: u64,
}

impl LinearBf {
    pub fn new(c: f64, zeta: f64) -> Self {
        debug_assert!(c > 1.0 && zeta > 0.0);
        LinearBf {
            c,
            k: 4.6 / zeta,
            zeta: zeta.min(0.644),
            i: 1,
        }
    }

    /// Feeds one input flip. Returns the output once the walk stops.
    pub fn feed<R: Rng + ?Sized>(&mut self, b: bool, rng: &mut R) -> Option<bool> {
        if b {
            self.i -= 1;
        } else {
            let g = geometric((self.c - 1.0) / self.c, rng);
            self.i = (self.i - 1).saturating_add(g);
        }
        if self.i == 0 {
            return Some(true);
        }
        if self.i as f64 >= self.k {
            // (1 + ζ/2)^(−i) in log space; i can be large.
            let keep = (-(self.i as f64) * (self.zeta / 2.0).ln_1p()).exp();
            let survive = rng.gen::<f64>() < keep;
            self.c *= 1.0 + self.zeta / 2.0;
            self.zeta /= 2.0;
            self.k *= 2.0;
            if !survive {
                return Some(false);
            }
        }
        None
    }
}

/// Which input coin a [`SubtractBf`] wants flipped next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoinSel {
    First,
    Second,
}

/// `ξ₁ − ξ₂` as `1 − LinearBF(O_{(1−ξ₁+ξ₂)/2}, 2, ζ)`, where the composite
/// coin flips a fair bit and returns `1 − coin1` on 1, `coin2` on 0.
#[derive(Clone, Debug)]
pub struct SubtractBf {
    linear: LinearBf,
    pending: Option<CoinSel>,
}

impl SubtractBf {
    pub fn new(zeta: f64) -> Self {
        SubtractBf {
            linear: LinearBf::new(2.0, zeta),
            pending: None,
        }
    }

    /// Draws the fair selector bit and reports which coin to flip.
    pub fn request<R: Rng + ?Sized>(&mut self, rng: &mut R) -> CoinSel {
        let sel = if rng.gen::<bool>() {
            CoinSel::First
        } else {
            CoinSel::Second
        };
        self.pending = Some(sel);
        sel
    }

    /// Feeds the flip of the coin named by the last [`SubtractBf::request`].
    pub fn feed<R: Rng + ?Sized>(&mut self, b: bool, rng: &mut R) -> Option<bool> {
        let composite = match self.pending.take().expect("feed without request") {
            CoinSel::First => !b,
            CoinSel::Second => b,
        };
        self.linear.feed(composite, rng).map(|x| !x)
    }
}

/// `p/ξ` from a ξ coin, given `ξ − p ≥ ζ`. Repeats rounds until one
/// decides: on a fair 1, output 1 with probability `p`; on a fair 0, output
/// 0 if a `SubtractBf(ξ, p, ζ)` draw is 1. A round outputs 1 w.p. `p/2` and
/// 0 w.p. `(ξ − p)/2`. The constant-`p` coin uses stream uniforms only, so every
/// [`Step::Flip`] is a flip of the ξ coin.
#[derive(Clone, Debug)]
pub struct DivisionBf {
    p: f64,
    zeta: f64,
    sub: Option<SubtractBf>,
}

impl DivisionBf {
    pub fn new(p: f64, zeta: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&p) && zeta > 0.0);
        DivisionBf { p, zeta, sub: None }
    }

    /// Advances the machine. Pass `None` on the first call and the ξ-coin
    /// flip after every [`Step::Flip`].
    pub fn resume<R: Rng + ?Sized>(&mut self, flip: Option<bool>, rng: &mut R) -> Step {
        if let Some(b) = flip {
            let sub = self
                .sub
                .as_mut()
                .expect("flip fed without a pending request");
            if let Some(x) = sub.feed(b, rng) {
                if x {
                    return Step::Done(false);
                }
                self.sub = None;
            }
        }
        loop {
            if self.sub.is_none() {
                if rng.gen::<bool>() {
                    if rng.gen::<f64>() < self.p {
                        return Step::Done(true);
                    }
                    continue;
                }
                self.sub = Some(SubtractBf::new(self.zeta));
            }
            let sub = self.sub.as_mut().unwrap();
            match sub.request(rng) {
                CoinSel::First => return Step::Flip,
                CoinSel::Second => {
                    let b = rng.gen::<f64>() < self.p;
                    if let Some(x) = sub.feed(b, rng) {
                        if x {
                            return Step::Done(false);
                        }
                        self.sub = None;
                    }
                }
            }
        }
    }
}

fn spend<C: CoinOracle + ?Sized>(coin: &mut C, spent: &mut u64) -> Result<bool, FactoryError> {
    if *spent >= FLIP_BUDGET {
        return Err(FactoryError::FlipBudget(FLIP_BUDGET));
    }
    *spent += 1;
    Ok(coin.flip())
}

/// Draw of bias `Cξ` from a ξ coin. Requires `C > 1`, `ζ > 0`, `Cξ ≤ 1 − ζ`.
pub fn linear_bf<C, R>(coin: &mut C, c: f64, zeta: f64, rng: &mut R) -> Result<bool, FactoryError>
where
    C: CoinOracle + ?Sized,
    R: Rng + ?Sized,
{
    let mut m = LinearBf::new(c, zeta);
    let mut spent = 0;
    loop {
        let b = spend(coin, &mut spent)?;
        if let Some(x) = m.feed(b, rng) {
            return Ok(x);
        }
    }
}

/// Draw of bias `ξ₁ − ξ₂`. Requires `ξ₁ − ξ₂ ≥ ζ > 0`.
pub fn subtract_bf<C1, C2, R>(
    coin1: &mut C1,
    coin2: &mut C2,
    zeta: f64,
    rng: &mut R,
) -> Result<bool, FactoryError>
where
    C1: CoinOracle + ?Sized,
    C2: CoinOracle + ?Sized,
    R: Rng + ?Sized,
{
    let mut m = SubtractBf::new(zeta);
    let mut spent = 0;
    loop {
        let b = match m.request(rng) {
            CoinSel::First => spend(coin1, &mut spent)?,
            CoinSel::Second => spend(coin2, &mut spent)?,
        };
        if let Some(x) = m.feed(b, rng) {
            return Ok(x);
        }
    }
}

/// Draw of bias `p/ξ`. Requires `ξ − p ≥ ζ > 0`.
pub fn division_bf<C, R>(coin: &mut C, p: f64, zeta: f64, rng: &mut R) -> Result<bool, FactoryError>
where
    C: CoinOracle + ?Sized,
    R: Rng + ?Sized,
{
    let mut m = DivisionBf::new(p, zeta);
    let mut spent = 0;
    let mut input = None;
    loop {
        match m.resume(input, rng) {
            Step::Done(x) => return Ok(x),
            Step::Flip => input = Some(spend(coin, &mut spent)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin(bias: f64, stream: u64) -> BiasedCoin {
        BiasedCoin::new(bias, RandomStream::new(0xC0FFEE, stream))
    }

    /// Empirical frequency and its 3-standard-error band around `target`.
    fn within_3se(hits: u64, trials: u64, target: f64) -> bool {
        let f = hits as f64 / trials as f64;
        let se = (target * (1.0 - target) / trials as f64).sqrt();
        (f - target).abs() <= 3.0 * se + 1e-12
    }

    #[test]
    fn geometric_examples() {
        let mut rng = RandomStream::new(1, 0);
        assert!((0..1000).all(|_| geometric(1.0, &mut rng) == 1));
        let n = 100_000;
        let draws: Vec<u64> = (0..n).map(|_| geometric(0.5, &mut rng)).collect();
        let mean = draws.iter().sum::<u64>() as f64 / n as f64;
        // Var = (1 − p)/p² = 2
        assert!((mean - 2.0).abs() <= 3.0 * (2.0 / n as f64).sqrt());
        let ones = draws.iter().filter(|&&g| g == 1).count() as u64;
        assert!(within_3se(ones, n, 0.5));
        assert!(draws.iter().all(|&g| g >= 1));
    }

    #[test]
    fn linear_with_dead_coin_returns_zero() {
        let mut rng = RandomStream::new(2, 0);
        let mut c = coin(0.0, 1);
        for _ in 0..1000 {
            assert!(!linear_bf(&mut c, 2.0, 0.5, &mut rng).unwrap());
        }
    }

    #[test]
    fn subtract_degenerate_always_one() {
        let mut rng = RandomStream::new(3, 0);
        let (mut a, mut b) = (coin(1.0, 1), coin(0.0, 2));
        for _ in 0..1000 {
            assert!(subtract_bf(&mut a, &mut b, 1.0, &mut rng).unwrap());
        }
    }

    #[test]
    fn division_with_sure_coin_is_p() {
        let mut rng = RandomStream::new(4, 0);
        let mut c = coin(1.0, 1);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| division_bf(&mut c, 0.5, 0.48, &mut rng).unwrap())
            .count() as u64;
        assert!(within_3se(hits, n, 0.5));
    }

    #[test]
    fn division_machine_matches_blocking_driver() {
        // Same stream for factory randomness, same coin: identical outputs.
        let mut r1 = RandomStream::new(5, 0);
        let mut r2 = RandomStream::new(5, 0);
        let mut c1 = coin(0.9, 9);
        let mut c2 = coin(0.9, 9);
        for _ in 0..2000 {
            let a = division_bf(&mut c1, 0.5, 0.4, &mut r1).unwrap();
            let mut m = DivisionBf::new(0.5, 0.4);
            let mut input = None;
            let b = loop {
                match m.resume(input, &mut r2) {
                    Step::Done(x) => break x,
                    Step::Flip => input = Some(c2.flip()),
                }
            };
            assert_eq!(a, b);
        }
        assert_eq!(c1.flips(), c2.flips());
    }
}
