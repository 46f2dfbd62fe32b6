//! `cttp`: sample, verify, infer, generate, and benchmark from the shell.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid input, 3 failed
//! statistical test, 4 recursion budget exhausted.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use cttp_core::coloring::{ColoringConfig, ColoringSession};
use cttp_core::inference::{estimate_conditional_marginal, InferenceOptions, LocalSampler};
use cttp_core::oracle::{
    chi_square_against, chi_square_homogeneity, default_initial, enumerate_gibbs, exact_marginal,
    forward_glauber, tv_between, tv_distance, Histogram, ModelRef,
};
use cttp_core::soft::{SoftConfig, SoftSession};
use cttp_core::{
    build_ising, build_potts, gen_graph, load_instance, to_document, ColorPolicy, ColoringInstance,
    CostStats, GraphFamily, InferenceError, Instance, RandomStream, SampleError, DEFAULT_BUDGET,
};

use output::{Emitter, Format};

/// Samples per verification chunk; each chunk owns one stream.
const VERIFY_CHUNK: u64 = 4096;

/// Full scans run by each forward-chain replica.
const FORWARD_SCANS: u64 = 3000;

/// Stream ids at or above this are reserved for forward-chain replicas.
const FORWARD_STREAM_BASE: u64 = 1 << 40;

#[derive(Parser)]
#[command(
    name = "cttp",
    version,
    about = "Perfect local samplers for spin systems and colorings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw joint samples of a vertex set.
    Sample(SampleArgs),
    /// Compare sampler output with exact or forward-chain ground truth.
    Verify(VerifyArgs),
    /// Estimate a conditional marginal.
    Infer(InferArgs),
    /// Write an instance document to standard output.
    Gen(GenArgs),
    /// Measure cost per queried vertex across graph sizes.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    format: Format,
}

#[derive(Args, Clone)]
struct Engine {
    /// Coloring threshold policy: strict (q ≥ 65Δ) or permissive (q ≥ 50Δ).
    #[arg(long, default_value = "strict")]
    policy: ColorPolicy,
    /// Sample soft systems even when the tractability condition fails.
    #[arg(long)]
    force: bool,
    /// Stop scanning neighbors after the first rejection.
    #[arg(long)]
    break_early: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    engine: Engine,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    query: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    reps: u64,
    #[arg(long, value_enum, default_value_t = SessionMode::Fresh)]
    session: SessionMode,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SessionMode {
    /// Independent session per repetition.
    Fresh,
    /// One session for all repetitions; later answers reuse earlier ones.
    Shared,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    engine: Engine,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    query: Vec<usize>,
    #[arg(long, default_value_t = 100_000)]
    reps: u64,
    /// Pass threshold for the chi-square p-value.
    #[arg(long, default_value_t = 1e-3)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = OracleKind::Enumerate)]
    oracle: OracleKind,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Enumerate,
    Forward,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    engine: Engine,
    #[arg(long)]
    instance: PathBuf,
    /// Pinning as `vertex=value` pairs.
    #[arg(long, value_delimiter = ',', value_parser = parse_pin)]
    pin: Vec<(usize, u32)>,
    #[arg(long)]
    target: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Ising,
    Coloring,
    /// Potts model with `q` spins.
    Spin,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long)]
    family: GraphFamily,
    #[arg(long, value_enum)]
    model: ModelKind,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    q: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    model_args: ModelArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    engine: Engine,
    #[command(flatten)]
    model_args: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Vertices per query.
    #[arg(long, default_value_t = 1)]
    queries: usize,
    #[arg(long, default_value_t = 100)]
    reps: u64,
}

fn parse_pin(s: &str) -> Result<(usize, u32), String> {
    let (v, c) = s
        .split_once('=')
        .ok_or_else(|| format!("expected vertex=value, got {s:?}"))?;
    Ok((
        v.trim().parse().map_err(|e| format!("{v:?}: {e}"))?,
        c.trim().parse().map_err(|e| format!("{c:?}: {e}"))?,
    ))
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(m: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: m.into(),
        }
    }

    fn invalid(m: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: m.to_string(),
        }
    }
}

impl From<SampleError> for Failure {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::BudgetExceeded { .. } | SampleError::Poisoned => Failure {
                code: 4,
                message: e.to_string(),
            },
            other => Failure::invalid(other),
        }
    }
}

impl From<InferenceError> for Failure {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Sample(s) => s.into(),
            other => Failure::invalid(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::invalid(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cttp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let budget = match std::env::var("CTTP_BUDGET") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map_err(|e| Failure::usage(format!("CTTP_BUDGET={s:?}: {e}")))?,
        Err(_) => DEFAULT_BUDGET,
    };
    let jobs = match &cli.command {
        Command::Sample(a) => a.common.jobs,
        Command::Verify(a) => a.common.jobs,
        Command::Infer(a) => a.common.jobs,
        Command::Bench(a) => a.common.jobs,
        Command::Gen(_) => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Sample(a) => sample(a, budget),
        Command::Verify(a) => verify(a, budget),
        Command::Infer(a) => infer(a, budget),
        Command::Gen(a) => generate(a),
        Command::Bench(a) => bench(a, budget),
    })
}

fn read_instance(path: &PathBuf) -> Result<Instance, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    load_instance(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn soft_config(engine: &Engine, budget: u64) -> SoftConfig {
    SoftConfig {
        break_early: engine.break_early,
        budget,
        force: engine.force,
        delta: None,
    }
}

fn coloring_config(engine: &Engine, budget: u64) -> ColoringConfig {
    ColoringConfig {
        policy: engine.policy,
        budget,
    }
}

fn open<'a>(
    inst: &'a Instance,
    engine: &Engine,
    budget: u64,
    seed: u64,
    stream: u64,
) -> Result<Box<dyn LocalSampler + 'a>, SampleError> {
    let rng = RandomStream::new(seed, stream);
    Ok(match inst {
        Instance::Spin(sys) => Box::new(SoftSession::new(sys, rng, soft_config(engine, budget))?),
        Instance::Coloring(c) => Box::new(ColoringSession::new(
            c,
            rng,
            coloring_config(engine, budget),
        )?),
    })
}

fn check_query(inst: &Instance, query: &[usize]) -> Outcome {
    let n = inst.graph().n();
    match query.iter().find(|&&v| v >= n) {
        Some(v) => Err(Failure::invalid(format!(
            "query vertex {v} out of range for n = {n}"
        ))),
        None => Ok(()),
    }
}

fn draw(s: &mut dyn LocalSampler, query: &[usize]) -> Result<Vec<u32>, SampleError> {
    query.iter().map(|&v| s.sample_vertex(v)).collect()
}

fn sample_record(rep: u64, query: &[usize], values: &[u32], cost: &CostStats) -> Value {
    json!({
        "rep": rep,
        "query": query,
        "values": values,
        "resolve_calls": cost.resolve_calls,
        "check_calls": cost.check_calls,
        "oracle_calls": cost.oracle_calls,
        "evaluate_iterations": cost.evaluate_iterations,
        "coin_flips": cost.coin_flips,
    })
}

fn emit_all(format: Format, records: impl IntoIterator<Item = Value>) -> Outcome {
    let stdout = std::io::stdout();
    let mut out = Emitter::new(stdout.lock(), format);
    for r in records {
        out.emit(&r)?;
    }
    out.flush()?;
    Ok(())
}

fn sample(a: SampleArgs, budget: u64) -> Outcome {
    let inst = read_instance(&a.instance)?;
    check_query(&inst, &a.query)?;
    let records: Vec<Value> = match a.session {
        SessionMode::Fresh => (0..a.reps)
            .into_par_iter()
            .map(|rep| {
                let mut s = open(&inst, &a.engine, budget, a.common.seed, rep)?;
                let values = draw(s.as_mut(), &a.query)?;
                Ok(sample_record(rep, &a.query, &values, &s.stats()))
            })
            .collect::<Result<_, SampleError>>()?,
        SessionMode::Shared => {
            let mut s = open(&inst, &a.engine, budget, a.common.seed, 0)?;
            let mut out = Vec::with_capacity(a.reps as usize);
            for rep in 0..a.reps {
                let before = s.stats();
                let values = draw(s.as_mut(), &a.query)?;
                out.push(sample_record(
                    rep,
                    &a.query,
                    &values,
                    &s.stats().since(&before),
                ));
            }
            out
        }
    };
    emit_all(a.common.format, records)
}

/// Histogram of `reps` fresh samples; chunk `k` uses stream `(seed, k)` and
/// clears its memo between samples.
fn sampler_histogram(
    inst: &Instance,
    engine: &Engine,
    budget: u64,
    seed: u64,
    query: &[usize],
    reps: u64,
) -> Result<(Histogram, CostStats), SampleError> {
    let chunks = reps.div_ceil(VERIFY_CHUNK);
    let parts: Vec<(Histogram, CostStats)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut s = open(inst, engine, budget, seed, k)?;
            let mut h = Histogram::new();
            let size = VERIFY_CHUNK.min(reps - k * VERIFY_CHUNK);
            for _ in 0..size {
                s.reset();
                h.add(&draw(s.as_mut(), query)?);
            }
            Ok((h, s.stats()))
        })
        .collect::<Result<_, SampleError>>()?;
    let mut h = Histogram::new();
    let mut cost = CostStats::default();
    for (part, c) in &parts {
        h.merge(part);
        cost.add(c);
    }
    Ok((h, cost))
}

/// Histogram of the query vertices after `FORWARD_SCANS` full scans, over
/// `reps` independent forward chains.
fn forward_histogram(
    inst: &Instance,
    seed: u64,
    query: &[usize],
    reps: u64,
) -> Result<Histogram, Failure> {
    let model = ModelRef::from(inst);
    let init = default_initial(model);
    let t_total = FORWARD_SCANS * inst.graph().n() as u64;
    let parts: Vec<Histogram> = (0..reps.div_ceil(VERIFY_CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut rng = RandomStream::new(seed, FORWARD_STREAM_BASE + k);
            let mut h = Histogram::new();
            for _ in 0..VERIFY_CHUNK.min(reps - k * VERIFY_CHUNK) {
                let x =
                    forward_glauber(model, t_total, &mut rng, &init).map_err(Failure::invalid)?;
                let proj: Vec<u32> = query.iter().map(|&v| x[v]).collect();
                h.add(&proj);
            }
            Ok(h)
        })
        .collect::<Result<_, Failure>>()?;
    let mut h = Histogram::new();
    for p in &parts {
        h.merge(p);
    }
    Ok(h)
}

fn verify(a: VerifyArgs, budget: u64) -> Outcome {
    let inst = read_instance(&a.instance)?;
    check_query(&inst, &a.query)?;
    if a.reps == 0 {
        return Err(Failure::usage("--reps must be positive"));
    }
    let (hist, cost) =
        sampler_histogram(&inst, &a.engine, budget, a.common.seed, &a.query, a.reps)?;
    let (tv, chi) = match a.oracle {
        OracleKind::Enumerate => {
            let joint = enumerate_gibbs(&inst, &[]).map_err(Failure::invalid)?;
            let exact = exact_marginal(&joint, &a.query).map_err(Failure::invalid)?;
            (
                tv_distance(&exact, &hist),
                chi_square_against(&exact, &hist),
            )
        }
        OracleKind::Forward => {
            let fwd = forward_histogram(&inst, a.common.seed, &a.query, a.reps)?;
            (tv_between(&fwd, &hist), chi_square_homogeneity(&fwd, &hist))
        }
    };
    let chi = chi.map_err(Failure::invalid)?;
    let pass = chi.p_value >= a.alpha;
    let record = json!({
        "oracle": match a.oracle { OracleKind::Enumerate => "enumerate", OracleKind::Forward => "forward" },
        "query": a.query,
        "reps": a.reps,
        "tv": tv,
        "chi2": chi.statistic,
        "dof": chi.dof,
        "p_value": chi.p_value,
        "alpha": a.alpha,
        "pass": pass,
        "resolve_calls": cost.resolve_calls,
        "check_calls": cost.check_calls,
        "oracle_calls": cost.oracle_calls,
        "coin_flips": cost.coin_flips,
    });
    emit_all(a.common.format, [record])?;
    if pass {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            message: format!(
                "chi-square p = {:.3e} below alpha = {}",
                chi.p_value, a.alpha
            ),
        })
    }
}

fn infer(a: InferArgs, budget: u64) -> Outcome {
    let inst = read_instance(&a.instance)?;
    let opts = InferenceOptions {
        seed: a.common.seed,
        soft: soft_config(&a.engine, budget),
        coloring: coloring_config(&a.engine, budget),
        repetitions: None,
        batch_size: None,
    };
    let est = estimate_conditional_marginal(&inst, &a.pin, a.target, a.eps, a.delta, &opts)?;
    let record = serde_json::to_value(&est).expect("estimate serializes");
    emit_all(a.common.format, [record])
}

fn build_model(args: &ModelArgs, n: usize, seed: u64) -> Result<(Instance, Vec<String>), Failure> {
    let graph = gen_graph(args.family, n, args.d, seed).map_err(Failure::invalid)?;
    let need = |x: Option<f64>, name: &str| {
        x.ok_or_else(|| Failure::usage(format!("--{name} is required for this model")))
    };
    let need_q = || {
        args.q
            .ok_or_else(|| Failure::usage("--q is required for this model"))
    };
    Ok(match args.model {
        ModelKind::Ising => {
            let fields = vec![(1.0, 1.0); graph.n()];
            let (sys, warnings) =
                build_ising(graph, need(args.beta, "beta")?, &fields).map_err(Failure::invalid)?;
            (Instance::Spin(sys), warnings)
        }
        ModelKind::Spin => {
            let sys = build_potts(graph, need_q()?, need(args.beta, "beta")?)
                .map_err(Failure::invalid)?;
            (Instance::Spin(sys), Vec::new())
        }
        ModelKind::Coloring => {
            let q = need_q()?;
            let warnings = match ColorPolicy::Permissive.check(q, graph.max_degree()) {
                Ok(w) => w.into_iter().collect(),
                Err(e) => vec![format!("{e}; sampling will be refused")],
            };
            let inst = ColoringInstance::new(graph, q).map_err(Failure::invalid)?;
            (Instance::Coloring(inst), warnings)
        }
    })
}

fn generate(a: GenArgs) -> Outcome {
    let (inst, warnings) = build_model(&a.model_args, a.n, a.seed)?;
    for w in warnings {
        eprintln!("cttp: warning: {w}");
    }
    println!("{}", to_document(&inst));
    Ok(())
}

fn bench(a: BenchArgs, budget: u64) -> Outcome {
    if a.queries == 0 || a.reps == 0 {
        return Err(Failure::usage("--queries and --reps must be positive"));
    }
    let mut records = Vec::new();
    for &n in &a.sizes {
        let (inst, _) = build_model(&a.model_args, n, a.common.seed)?;
        let nv = inst.graph().n();
        let costs: Vec<CostStats> = (0..a.reps)
            .into_par_iter()
            .map(|rep| {
                let mut s = open(&inst, &a.engine, budget, a.common.seed, rep)?;
                // query vertices come from a separate stream so they do not
                // perturb the sampler's randomness
                let mut pick = RandomStream::new(a.common.seed, FORWARD_STREAM_BASE + rep);
                let query: Vec<usize> = (0..a.queries)
                    .map(|_| rand::Rng::gen_range(&mut pick, 0..nv))
                    .collect();
                draw(s.as_mut(), &query)?;
                Ok(s.stats())
            })
            .collect::<Result<_, SampleError>>()?;
        let mut total = CostStats::default();
        for c in &costs {
            total.add(c);
        }
        let per = (a.reps * a.queries as u64) as f64;
        records.push(json!({
            "n": nv,
            "queries": a.queries,
            "reps": a.reps,
            "resolve_calls_per_vertex": total.resolve_calls as f64 / per,
            "check_calls_per_vertex": total.check_calls as f64 / per,
            "oracle_calls_per_vertex": total.oracle_calls as f64 / per,
            "coin_flips_per_vertex": total.coin_flips as f64 / per,
            "work_per_vertex": total.work() as f64 / per,
        }));
    }
    emit_all(a.common.format, records)
}
