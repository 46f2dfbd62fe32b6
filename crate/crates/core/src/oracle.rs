//! Ground truth for the samplers: brute-force Gibbs tables, a forward
//! systematic-scan Glauber simulator, and goodness-of-fit statistics.

use rand::Rng;
use rustc_hash::FxHashMap;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::OracleError;
use crate::instance::{ColoringInstance, Instance, SpinSystem};
use crate::schedule::scan_vertex;

/// Largest number of configurations [`enumerate_gibbs`] will visit.
pub const ENUMERATION_CAP: f64 = 1e7;

/// Smallest expected count a chi-square cell may have after pooling.
pub const MIN_EXPECTED: f64 = 5.0;

/// A borrowed model, either kind.
#[derive(Clone, Copy, Debug)]
pub enum ModelRef<'a> {
    Spin(&'a SpinSystem),
    Coloring(&'a ColoringInstance),
}

impl<'a> From<&'a SpinSystem> for ModelRef<'a> {
    fn from(s: &'a SpinSystem) -> Self {
        ModelRef::Spin(s)
    }
}

impl<'a> From<&'a ColoringInstance> for ModelRef<'a> {
    fn from(c: &'a ColoringInstance) -> Self {
        ModelRef::Coloring(c)
    }
}

impl<'a> From<&'a Instance> for ModelRef<'a> {
    fn from(i: &'a Instance) -> Self {
        match i {
            Instance::Spin(s) => ModelRef::Spin(s),
            Instance::Coloring(c) => ModelRef::Coloring(c),
        }
    }
}

impl ModelRef<'_> {
    pub fn n(&self) -> usize {
        match self {
            ModelRef::Spin(s) => s.n(),
            ModelRef::Coloring(c) => c.n(),
        }
    }

    pub fn q(&self) -> usize {
        match self {
            ModelRef::Spin(s) => s.q(),
            ModelRef::Coloring(c) => c.q(),
        }
    }

    fn weight(&self, config: &[u32]) -> f64 {
        match self {
            ModelRef::Spin(s) => s.weight(config),
            ModelRef::Coloring(c) => c.is_proper(config) as u32 as f64,
        }
    }
}

/// An exact distribution over configurations of `vertices`. Only
/// positive-probability rows are stored.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    pub vertices: Vec<usize>,
    pub support: Vec<Vec<u32>>,
    pub probs: Vec<f64>,
    pub log_z: f64,
    index: FxHashMap<Vec<u32>, usize>,
}

impl ExactDistribution {
    fn from_rows(vertices: Vec<usize>, rows: Vec<(Vec<u32>, f64)>, log_z: f64) -> Self {
        let mut support = Vec::with_capacity(rows.len());
        let mut probs = Vec::with_capacity(rows.len());
        let mut index = FxHashMap::default();
        for (config, p) in rows {
            index.insert(config.clone(), support.len());
            support.push(config);
            probs.push(p);
        }
        ExactDistribution {
            vertices,
            support,
            probs,
            log_z,
            index,
        }
    }

    pub fn prob(&self, config: &[u32]) -> f64 {
        self.index.get(config).map_or(0.0, |&i| self.probs[i])
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Marginal of a single vertex as a dense vector over `[q]`.
    pub fn vertex_marginal(&self, v: usize, q: usize) -> Result<Vec<f64>, OracleError> {
        let m = exact_marginal(self, &[v])?;
        let mut out = vec![0.0; q];
        for (config, p) in m.support.iter().zip(&m.probs) {
            out[config[0] as usize] += p;
        }
        Ok(out)
    }
}

/// Exact Gibbs distribution of the free vertices given a pinning.
pub fn enumerate_gibbs<'a>(
    model: impl Into<ModelRef<'a>>,
    pins: &[(usize, u32)],
) -> Result<ExactDistribution, OracleError> {
    let model = model.into();
    let (n, q) = (model.n(), model.q());
    let mut config = vec![0u32; n];
    let mut pinned = vec![false; n];
    for &(v, c) in pins {
        if v >= n {
            return Err(OracleError::UnknownVertex(v));
        }
        if c as usize >= q || (pinned[v] && config[v] != c) {
            return Err(OracleError::BadPinning(format!("vertex {v} = {c}")));
        }
        pinned[v] = true;
        config[v] = c;
    }
    let free: Vec<usize> = (0..n).filter(|&v| !pinned[v]).collect();
    let size = (q as f64).powi(free.len() as i32);
    if size > ENUMERATION_CAP {
        return Err(OracleError::TooLarge(size));
    }
    let mut rows = Vec::new();
    let mut z = 0.0;
    let mut digits = vec![0u32; free.len()];
    loop {
        for (&v, &d) in free.iter().zip(&digits) {
            config[v] = d;
        }
        let w = model.weight(&config);
        if w > 0.0 {
            z += w;
            rows.push((digits.clone(), w));
        }
        // odometer, last free vertex fastest
        let mut k = digits.len();
        loop {
            if k == 0 {
                if z <= 0.0 {
                    return Err(OracleError::ZeroWeight);
                }
                for row in &mut rows {
                    row.1 /= z;
                }
                return Ok(ExactDistribution::from_rows(free, rows, z.ln()));
            }
            k -= 1;
            digits[k] += 1;
            if (digits[k] as usize) < q {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Marginal of `dist` on `sub`, in the order given.
pub fn exact_marginal(
    dist: &ExactDistribution,
    sub: &[usize],
) -> Result<ExactDistribution, OracleError> {
    let cols: Vec<usize> = sub
        .iter()
        .map(|v| {
            dist.vertices
                .iter()
                .position(|u| u == v)
                .ok_or(OracleError::UnknownVertex(*v))
        })
        .collect::<Result<_, _>>()?;
    let mut acc: FxHashMap<Vec<u32>, f64> = FxHashMap::default();
    let mut order = Vec::new();
    for (config, p) in dist.support.iter().zip(&dist.probs) {
        let key: Vec<u32> = cols.iter().map(|&i| config[i]).collect();
        match acc.get_mut(&key) {
            Some(x) => *x += p,
            None => {
                order.push(key.clone());
                acc.insert(key, *p);
            }
        }
    }
    order.sort();
    let rows = order
        .into_iter()
        .map(|k| {
            let p = acc[&k];
            (k, p)
        })
        .collect();
    Ok(ExactDistribution::from_rows(sub.to_vec(), rows, dist.log_z))
}

/// Greedy proper coloring in vertex order; always succeeds when `q > Δ`.
pub fn greedy_coloring(inst: &ColoringInstance) -> Vec<u32> {
    let mut out = vec![u32::MAX; inst.n()];
    for v in 0..inst.n() {
        let taken: Vec<u32> = inst.graph().neighbors(v).iter().map(|&u| out[u]).collect();
        out[v] = (0..inst.q() as u32).find(|c| !taken.contains(c)).unwrap();
    }
    out
}

/// A positive-weight starting point for [`forward_glauber`]: the heaviest
/// field value at each vertex, or a greedy coloring.
pub fn default_initial(model: ModelRef<'_>) -> Vec<u32> {
    match model {
        ModelRef::Spin(sys) => (0..sys.n())
            .map(|v| {
                let f = sys.field(v);
                (0..f.len())
                    .max_by(|&a, &b| f[a].total_cmp(&f[b]).then(b.cmp(&a)))
                    .unwrap() as u32
            })
            .collect(),
        ModelRef::Coloring(inst) => greedy_coloring(inst),
    }
}

/// Runs `t_total` updates of systematic-scan Glauber dynamics ending at time
/// 0, so update `k` touches vertex `scan_vertex(k + 1 − t_total)`. Each
/// update redraws the vertex from its exact conditional marginal.
pub fn forward_glauber<'a, R: Rng + ?Sized>(
    model: impl Into<ModelRef<'a>>,
    t_total: u64,
    rng: &mut R,
    initial: &[u32],
) -> Result<Vec<u32>, OracleError> {
    let model = model.into();
    let (n, q) = (model.n(), model.q());
    if initial.len() != n || initial.iter().any(|&c| c as usize >= q) {
        return Err(OracleError::BadInitial(
            "wrong length or spin out of range".into(),
        ));
    }
    if model.weight(initial) <= 0.0 {
        return Err(OracleError::BadInitial("zero weight".into()));
    }
    let mut x = initial.to_vec();
    let mut w = vec![0.0; q];
    let start = 1 - t_total as i64;
    for k in 0..t_total as i64 {
        let v = scan_vertex(start + k, n);
        x[v] = match model {
            ModelRef::Spin(sys) => {
                let g = sys.graph();
                w.copy_from_slice(sys.field(v));
                for (&u, &e) in g.neighbors(v).iter().zip(g.neighbor_edges(v)) {
                    for (c, wc) in w.iter_mut().enumerate() {
                        *wc *= sys.interaction(e, u, x[u], v, c as u32);
                    }
                }
                let total: f64 = w.iter().sum();
                let mut r = rng.gen::<f64>() * total;
                let mut pick = q - 1;
                for (c, &wc) in w.iter().enumerate() {
                    if r < wc {
                        pick = c;
                        break;
                    }
                    r -= wc;
                }
                // never land on a zero-weight tail entry through rounding
                while w[pick] == 0.0 {
                    pick -= 1;
                }
                pick as u32
            }
            ModelRef::Coloring(inst) => {
                let nb = inst.graph().neighbors(v);
                let free: Vec<u32> = (0..q as u32)
                    .filter(|c| nb.iter().all(|&u| x[u] != *c))
                    .collect();
                let c = free[rng.gen_range(0..free.len())];
                debug_assert!(nb.iter().all(|&u| x[u] != c));
                c
            }
        };
    }
    Ok(x)
}

/// Counts of observed configurations.
#[derive(Clone, Debug, Default)]
pub struct Histogram {
    counts: FxHashMap<Vec<u32>, u64>,
    total: u64,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, config: &[u32]) {
        *self.counts.entry(config.to_vec()).or_default() += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (k, c) in &other.counts {
            *self.counts.entry(k.clone()).or_default() += c;
        }
        self.total += other.total;
    }

    pub fn count(&self, config: &[u32]) -> u64 {
        self.counts.get(config).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, u64)> {
        self.counts.iter().map(|(k, &c)| (k, c))
    }

    /// Projection onto the listed coordinates.
    pub fn project(&self, cols: &[usize]) -> Histogram {
        let mut h = Histogram::new();
        for (k, &c) in &self.counts {
            let key: Vec<u32> = cols.iter().map(|&i| k[i]).collect();
            *h.counts.entry(key).or_default() += c;
        }
        h.total = self.total;
        h
    }
}

/// `½ Σ |p − p̂|`; observed mass outside the support counts in full.
pub fn tv_distance(p: &ExactDistribution, counts: &Histogram) -> f64 {
    if counts.total == 0 {
        return 1.0;
    }
    let n = counts.total as f64;
    let inside: f64 = p
        .support
        .iter()
        .zip(&p.probs)
        .map(|(k, &pk)| (pk - counts.count(k) as f64 / n).abs())
        .sum();
    let outside: u64 = counts
        .iter()
        .filter(|(k, _)| p.prob(k) == 0.0)
        .map(|(_, c)| c)
        .sum();
    0.5 * (inside + outside as f64 / n)
}

/// TV distance between two empirical histograms.
pub fn tv_between(a: &Histogram, b: &Histogram) -> f64 {
    let (na, nb) = (a.total as f64, b.total as f64);
    let mut sum = 0.0;
    for (k, c) in a.iter() {
        sum += (c as f64 / na - b.count(k) as f64 / nb).abs();
    }
    for (k, c) in b.iter() {
        if a.count(k) == 0 {
            sum += c as f64 / nb;
        }
    }
    0.5 * sum
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
    pub cells: usize,
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    ChiSquared::new(dof)
        .expect("positive degrees of freedom")
        .sf(x)
}

/// Pearson goodness-of-fit test. Cells with expected count below
/// [`MIN_EXPECTED`] are pooled, smallest first, until every cell qualifies.
pub fn chi_square_test(observed: &[f64], expected: &[f64]) -> Result<ChiSquare, OracleError> {
    if observed.len() != expected.len() {
        return Err(OracleError::Degenerate("length mismatch".into()));
    }
    let (obs, exp) = pool_cells(observed, expected);
    if obs.len() < 2 {
        return Err(OracleError::Degenerate(format!(
            "{} cell(s) after pooling",
            obs.len()
        )));
    }
    let statistic: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = (obs.len() - 1) as f64;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        cells: obs.len(),
    })
}

fn pool_cells(observed: &[f64], expected: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..expected.len()).collect();
    order.sort_by(|&a, &b| expected[a].total_cmp(&expected[b]));
    let (mut obs, mut exp) = (Vec::new(), Vec::new());
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for i in order {
        if expected[i] >= MIN_EXPECTED && e_acc == 0.0 {
            obs.push(observed[i]);
            exp.push(expected[i]);
            continue;
        }
        o_acc += observed[i];
        e_acc += expected[i];
        if e_acc >= MIN_EXPECTED {
            obs.push(o_acc);
            exp.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match exp.last_mut() {
            Some(last) => {
                *last += e_acc;
                *obs.last_mut().unwrap() += o_acc;
            }
            None => {
                obs.push(o_acc);
                exp.push(e_acc);
            }
        }
    }
    (obs, exp)
}

/// Chi-square test of a histogram against an exact distribution. Any
/// observation outside the support yields p = 0.
pub fn chi_square_against(
    p: &ExactDistribution,
    counts: &Histogram,
) -> Result<ChiSquare, OracleError> {
    let n = counts.total as f64;
    let observed: Vec<f64> = p.support.iter().map(|k| counts.count(k) as f64).collect();
    let expected: Vec<f64> = p.probs.iter().map(|pk| pk * n).collect();
    let mut result = chi_square_test(&observed, &expected)?;
    if observed.iter().sum::<f64>() < n {
        result.p_value = 0.0;
    }
    Ok(result)
}

/// Two-sample chi-square test that `a` and `b` come from the same law.
/// Columns whose smaller expected count is below [`MIN_EXPECTED`] are
/// pooled, rarest first.
pub fn chi_square_homogeneity(a: &Histogram, b: &Histogram) -> Result<ChiSquare, OracleError> {
    let (na, nb) = (a.total as f64, b.total as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(OracleError::Degenerate("empty sample".into()));
    }
    let mut keys: Vec<&Vec<u32>> = a.counts.keys().chain(b.counts.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut cols: Vec<(f64, f64)> = keys
        .iter()
        .map(|k| (a.count(k) as f64, b.count(k) as f64))
        .collect();
    cols.sort_by(|x, y| (x.0 + x.1).total_cmp(&(y.0 + y.1)));
    let share = na.min(nb) / (na + nb);
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (x, y) in cols {
        acc.0 += x;
        acc.1 += y;
        if (acc.0 + acc.1) * share >= MIN_EXPECTED {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    if pooled.len() < 2 {
        return Err(OracleError::Degenerate(format!(
            "{} column(s) after pooling",
            pooled.len()
        )));
    }
    let total = na + nb;
    let statistic: f64 = pooled
        .iter()
        .map(|&(x, y)| {
            let col = x + y;
            let (ea, eb) = (col * na / total, col * nb / total);
            (x - ea).powi(2) / ea + (y - eb).powi(2) / eb
        })
        .sum();
    let dof = (pooled.len() - 1) as f64;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        cells: pooled.len(),
    })
}
