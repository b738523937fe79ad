use proptest::prelude::*;

use paging_lab::oracle::{binomial, brute_force_min_faults, dp_solve};
use paging_lab::rng::SplitMix64;
use paging_lab::{
    build_next_use_index, competitive_ratio, cost_model, gen_zipf_trace, hamming_distance,
    perturb_trace, simulate, working_set_series, Aux, BlockId, CacheState, CostModelParams,
    PolicyKind, Trace, ZipfSpec,
};

fn trace_strategy(max_m: u32, max_t: usize) -> impl Strategy<Value = Trace> {
    (2..=max_m).prop_flat_map(move |m| {
        prop::collection::vec(0..m, 1..=max_t).prop_map(move |ids| {
            Trace::new(ids.into_iter().map(BlockId).collect(), m as usize).unwrap()
        })
    })
}

fn every_policy() -> Vec<PolicyKind> {
    let mut v = PolicyKind::BASELINES.to_vec();
    v.extend([PolicyKind::NoisyBelady(0.0), PolicyKind::NoisyBelady(0.5)]);
    v
}

proptest! {
    #[test]
    fn belady_is_never_beaten(trace in trace_strategy(10, 120), k in 1usize..6, seed: u64) {
        let opt = simulate(&trace, PolicyKind::Belady, k, seed).unwrap().faults_total;
        for kind in every_policy() {
            let f = simulate(&trace, kind, k, seed).unwrap().faults_total;
            prop_assert!(opt <= f, "{kind}: {f} < belady {opt}");
            prop_assert!(competitive_ratio(f, opt.max(1)).unwrap() >= 1.0 || opt == 0);
        }
    }

    #[test]
    fn capacity_is_never_exceeded(trace in trace_strategy(10, 80), k in 1usize..5, seed: u64) {
        let next = build_next_use_index(&trace);
        for kind in every_policy() {
            let mut cache = CacheState::new(k).unwrap();
            let mut rng = SplitMix64::new(seed);
            for (t, &r) in trace.requests().iter().enumerate() {
                let before: Vec<_> = cache.resident().collect();
                let mut aux = Aux { next_use: Some(&next), rng: Some(&mut rng) };
                let out = cache.step(kind, r, t, &mut aux).unwrap();
                let after: Vec<_> = cache.resident().collect();
                prop_assert!(after.len() <= k);
                prop_assert!(after.contains(&r));
                if !out.fault {
                    prop_assert_eq!(&before, &after);
                }
            }
        }
    }

    #[test]
    fn belady_improves_with_capacity(trace in trace_strategy(12, 150), k in 1usize..8) {
        let a = simulate(&trace, PolicyKind::Belady, k, 0).unwrap().faults_total;
        let b = simulate(&trace, PolicyKind::Belady, k + 1, 0).unwrap().faults_total;
        prop_assert!(b <= a);
    }

    #[test]
    fn working_set_is_bounded(trace in trace_strategy(12, 150), window in 1usize..40) {
        let ws = working_set_series(&trace, window).unwrap();
        prop_assert_eq!(ws.series.len(), trace.len());
        let cap = window.min(trace.universe_m());
        prop_assert!(ws.series.iter().all(|&w| (1..=cap).contains(&w)));
    }

    #[test]
    fn perturbation_flips_exactly_floor_beta_t(trace in trace_strategy(8, 200), beta in 0.0f64..=1.0, seed: u64) {
        let p = perturb_trace(&trace, beta, seed).unwrap();
        let d = (beta * trace.len() as f64 + 1e-9).floor() as usize;
        prop_assert_eq!(p.hamming_d, d);
        prop_assert_eq!(hamming_distance(&trace, &p.trace).unwrap(), d);
        prop_assert!(p.flipped_positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cost_is_linear_in_tokens(n in 1u64..1_000_000, scale in 1u64..50, kb in 1u64..64, b in 1u64..32, m_log in 1u32..20) {
        let params = |n| CostModelParams { n_tokens: n, context_k: kb * b, block_b: b, memory_m: 1 << m_log };
        let one = cost_model(params(n)).unwrap().total;
        let many = cost_model(params(n * scale)).unwrap().total;
        prop_assert!((many - scale as f64 * one).abs() <= 1e-9 * many);
    }

    #[test]
    fn simulation_is_deterministic(trace in trace_strategy(10, 100), k in 1usize..5, seed: u64) {
        for kind in every_policy() {
            prop_assert_eq!(simulate(&trace, kind, k, seed).unwrap(), simulate(&trace, kind, k, seed).unwrap());
        }
    }
}

#[test]
fn exhaustive_small_traces_match_oracles() {
    let (m, t, k) = (3u32, 8u32, 2usize);
    let memory_cap = binomial(m as usize, k) as usize * (k + 1);
    for code in 0..m.pow(t) {
        let mut c = code;
        let ids: Vec<BlockId> = (0..t)
            .map(|_| {
                let b = BlockId(c % m);
                c /= m;
                b
            })
            .collect();
        let trace = Trace::new(ids, m as usize).unwrap();
        let opt = simulate(&trace, PolicyKind::Belady, k, 0)
            .unwrap()
            .faults_total;
        let dp = dp_solve(&trace, k).unwrap();
        assert_eq!(
            opt,
            brute_force_min_faults(&trace, k).unwrap(),
            "trace code {code}"
        );
        assert_eq!(opt, dp.min_faults, "trace code {code}");
        assert!(dp.peak_layer_states <= memory_cap);
    }
}

#[test]
fn noisy_belady_mean_faults_fall_with_accuracy() {
    let specs = [
        ZipfSpec {
            length_t: 2000,
            ..ZipfSpec::default()
        },
        ZipfSpec {
            length_t: 2000,
            exponent_alpha: 0.8,
            ..ZipfSpec::default()
        },
        ZipfSpec {
            length_t: 2000,
            hot_set_size: 24,
            shift_interval: 250,
            ..ZipfSpec::default()
        },
    ];
    let seeds: Vec<u64> = (42..=51).collect();
    for spec in specs {
        let trace = gen_zipf_trace(&spec, 7).unwrap();
        let means: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&p| {
                let total: usize = seeds
                    .iter()
                    .map(|&s| {
                        simulate(&trace, PolicyKind::NoisyBelady(p), 8, s)
                            .unwrap()
                            .faults_total
                    })
                    .sum();
                total as f64 / seeds.len() as f64
            })
            .collect();
        assert!(
            means.windows(2).all(|w| w[1] <= w[0]),
            "{spec:?}: {means:?}"
        );
    }
}
