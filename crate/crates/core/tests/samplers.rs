use cttp_core::coloring::{ColoringConfig, ColoringSession};
use cttp_core::oracle::{
    chi_square_against, chi_square_test, enumerate_gibbs, exact_marginal, Histogram,
};
use cttp_core::soft::{SoftConfig, SoftSession};
use cttp_core::{
    build_ising, gen_graph, pred, ColorPolicy, ColoringInstance, Graph, GraphFamily, RandomStream,
    SampleError,
};

fn binomial_ok(hits: u64, n: u64, p: f64) -> bool {
    let f = hits as f64 / n as f64;
    (f - p).abs() <= 4.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn star_ising_joint_matches_enumeration() {
    let g = gen_graph(GraphFamily::Star, 3, None, 0).unwrap();
    let fields = [(0.7, 0.3), (0.5, 0.5), (0.4, 0.6), (0.5, 0.5)];
    let sys = build_ising(g, 0.9, &fields).unwrap().0;
    let exact = enumerate_gibbs(&sys, &[]).unwrap();
    let mut s = SoftSession::new(&sys, RandomStream::new(21, 0), SoftConfig::default()).unwrap();
    let mut h = Histogram::new();
    for _ in 0..100_000 {
        s.reset();
        h.add(&s.local_sample(&[0, 1, 2, 3]).unwrap());
    }
    assert!(chi_square_against(&exact, &h).unwrap().p_value >= 1e-3);
}

#[test]
fn break_early_keeps_the_law() {
    let g = gen_graph(GraphFamily::Cycle, 5, None, 0).unwrap();
    let sys = build_ising(g, 1.1, &[(0.5, 0.5); 5]).unwrap().0;
    let exact = exact_marginal(&enumerate_gibbs(&sys, &[]).unwrap(), &[0, 2]).unwrap();
    let cfg = SoftConfig {
        break_early: true,
        ..SoftConfig::default()
    };
    let mut s = SoftSession::new(&sys, RandomStream::new(22, 0), cfg).unwrap();
    let mut h = Histogram::new();
    for _ in 0..100_000 {
        s.reset();
        h.add(&s.local_sample(&[0, 2]).unwrap());
    }
    assert!(chi_square_against(&exact, &h).unwrap().p_value >= 1e-3);
}

#[test]
fn pinned_soft_sampling_is_conditional() {
    let g = gen_graph(GraphFamily::Path, 4, None, 0).unwrap();
    let sys = build_ising(g, 0.9, &[(0.3, 0.7); 4]).unwrap().0;
    let pins = [(1, 0)];
    let exact = exact_marginal(&enumerate_gibbs(&sys, &pins).unwrap(), &[0, 3]).unwrap();
    let mut s = SoftSession::new(&sys, RandomStream::new(23, 0), SoftConfig::default())
        .unwrap()
        .with_pins(&pins)
        .unwrap();
    let mut h = Histogram::new();
    for _ in 0..100_000 {
        s.reset();
        let x = s.local_sample(&[0, 3, 1]).unwrap();
        assert_eq!(x[2], 0);
        h.add(&x[..2]);
    }
    assert!(chi_square_against(&exact, &h).unwrap().p_value >= 1e-3);
}

#[test]
fn path_coloring_end_agreement() {
    let inst =
        ColoringInstance::new(gen_graph(GraphFamily::Path, 3, None, 0).unwrap(), 130).unwrap();
    let exact = exact_marginal(&enumerate_gibbs(&inst, &[]).unwrap(), &[0, 2]).unwrap();
    let p_same: f64 = exact
        .support
        .iter()
        .zip(&exact.probs)
        .filter(|(k, _)| k[0] == k[1])
        .map(|(_, p)| p)
        .sum();
    assert!((p_same - 1.0 / 129.0).abs() < 1e-12);
    let mut s =
        ColoringSession::new(&inst, RandomStream::new(24, 0), ColoringConfig::default()).unwrap();
    let n = 200_000;
    let mut same = 0;
    for _ in 0..n {
        s.reset();
        let x = s.local_sample(&[0, 1, 2]).unwrap();
        assert!(inst.is_proper(&x));
        same += (x[0] == x[2]) as u64;
    }
    assert!(binomial_ok(same, n, p_same));
}

#[test]
fn permissive_triangle_is_uniform_proper() {
    // 50Δ ≤ q < 65Δ: accepted only under the permissive policy
    let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let inst = ColoringInstance::new(g, 110).unwrap();
    let cfg = ColoringConfig {
        policy: ColorPolicy::Permissive,
        ..ColoringConfig::default()
    };
    let mut s = ColoringSession::new(&inst, RandomStream::new(25, 0), cfg).unwrap();
    let n = 220_000u64;
    let mut marg = vec![0f64; 110];
    let mut less = 0;
    for _ in 0..n {
        s.reset();
        let x = s.local_sample(&[0, 1, 2]).unwrap();
        assert!(inst.is_proper(&x));
        marg[x[1] as usize] += 1.0;
        less += (x[0] < x[2]) as u64;
    }
    assert!(binomial_ok(less, n, 0.5));
    let chi = chi_square_test(&marg, &vec![n as f64 / 110.0; 110]).unwrap();
    assert!(chi.p_value >= 1e-3);
}

#[test]
fn triangle_at_the_list_floor_hits_the_budget() {
    // q = 50Δ: every check falls back to a resolve and the recursion does not close
    let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
    let inst = ColoringInstance::new(g, 100).unwrap();
    let cfg = ColoringConfig {
        policy: ColorPolicy::Permissive,
        budget: 100_000,
    };
    let mut s = ColoringSession::new(&inst, RandomStream::new(26, 0), cfg).unwrap();
    assert!(matches!(
        s.local_sample(&[0]),
        Err(SampleError::BudgetExceeded { budget: 100_000 })
    ));
    assert!(s.is_poisoned());
}

#[test]
fn check_agrees_with_resolve() {
    let inst =
        ColoringInstance::new(gen_graph(GraphFamily::Cycle, 9, None, 0).unwrap(), 130).unwrap();
    for seed in 0..200 {
        let mut s =
            ColoringSession::new(&inst, RandomStream::new(seed, 0), ColoringConfig::default())
                .unwrap();
        let t = pred(0, 4, 9) - 9;
        let probe = (seed % 130) as u32;
        let said = s.check(t, probe).unwrap();
        let c = s.resolve(t).unwrap();
        assert_eq!(said, c == probe);
        assert!(s.check(t, c).unwrap());
        assert!(!s.check(t, (c + 1) % 130).unwrap());
    }
}

#[test]
fn replay_is_exact() {
    let g = gen_graph(GraphFamily::RandomRegular, 40, Some(3), 8).unwrap();
    let sys = build_ising(g.clone(), 0.95, &[(0.5, 0.5); 40]).unwrap().0;
    let inst = ColoringInstance::new(g, 195).unwrap();
    let all: Vec<usize> = (0..40).rev().collect();
    for seed in 0..10 {
        let run_soft = || {
            let mut s =
                SoftSession::new(&sys, RandomStream::new(seed, 3), SoftConfig::default()).unwrap();
            (s.local_sample(&all).unwrap(), s.stats())
        };
        assert_eq!(run_soft(), run_soft());
        let run_col = || {
            let mut s =
                ColoringSession::new(&inst, RandomStream::new(seed, 3), ColoringConfig::default())
                    .unwrap();
            (s.local_sample(&all).unwrap(), s.stats())
        };
        assert_eq!(run_col(), run_col());
    }
}
