//! Driving a policy over a trace, and the metrics computed from the run.

use std::collections::HashMap;

use crate::cache::{build_next_use_index, Aux, CacheState, PolicyKind};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, tags, SplitMix64};
use crate::trace::{BlockId, Trace};

/// Outcome of one `(trace, policy, K_b, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub faults_total: usize,
    pub fault_indicator: Vec<bool>,
    pub eviction_log: Vec<(usize, BlockId)>,
    pub policy: PolicyKind,
    pub k_b: usize,
    pub seed: u64,
}

impl SimResult {
    pub fn len(&self) -> usize {
        self.fault_indicator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fault_indicator.is_empty()
    }

    /// Faults per request; zero for an empty run.
    pub fn fault_rate(&self) -> f64 {
        fault_rate(self, self.len()).unwrap_or(0.0)
    }
}

/// Runs `kind` with capacity `k_b` over `trace` from an empty cache.
///
/// Belady variants get a next-use index built from the whole trace.
/// Randomized policies draw from a stream derived from `seed`, so the seed
/// a trace was generated with can be reused here without correlation.
pub fn simulate(trace: &Trace, kind: PolicyKind, k_b: usize, seed: u64) -> Result<SimResult> {
    kind.validate()?;
    let mut cache = CacheState::new(k_b)?;
    let index = kind.needs_next_use().then(|| build_next_use_index(trace));
    let mut rng = SplitMix64::new(derive_seed(seed, tags::POLICY));

    let mut fault_indicator = Vec::with_capacity(trace.len());
    let mut eviction_log = Vec::new();
    for (t, &request) in trace.requests().iter().enumerate() {
        let mut aux = Aux {
            next_use: index.as_ref(),
            rng: Some(&mut rng),
        };
        let outcome = cache.step(kind, request, t, &mut aux)?;
        fault_indicator.push(outcome.fault);
        if let Some(b) = outcome.evicted {
            eviction_log.push((t, b));
        }
    }
    Ok(SimResult {
        faults_total: fault_indicator.iter().filter(|&&f| f).count(),
        fault_indicator,
        eviction_log,
        policy: kind,
        k_b,
        seed,
    })
}

/// `faults_total / t`, where `t` must be the trace length.
pub fn fault_rate(result: &SimResult, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::usage("fault rate of an empty trace is undefined"));
    }
    if t != result.len() {
        return Err(Error::usage(format!(
            "trace length {t} does not match the run length {}",
            result.len()
        )));
    }
    Ok(result.faults_total as f64 / t as f64)
}

/// `f_alg / f_opt`.
pub fn competitive_ratio(f_alg: usize, f_opt: usize) -> Result<f64> {
    if f_opt == 0 {
        return Err(Error::usage(
            "competitive ratio is undefined when the optimum has no faults",
        ));
    }
    Ok(f_alg as f64 / f_opt as f64)
}

/// Sliding-window distinct-block counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkingSet {
    pub window: usize,
    pub series: Vec<usize>,
}

impl WorkingSet {
    /// Median of the series; the mean of the two middle values for even
    /// lengths, 0 for an empty series.
    pub fn median(&self) -> f64 {
        if self.series.is_empty() {
            return 0.0;
        }
        let mut sorted = self.series.clone();
        sorted.sort_unstable();
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        }
    }

    /// A cache of `k_b` blocks thrashes when the median working set exceeds it.
    pub fn thrashing(&self, k_b: usize) -> bool {
        self.median() > k_b as f64
    }
}

/// `W(t)` = number of distinct blocks among the last `window` requests
/// ending at `t`.
pub fn working_set_series(trace: &Trace, window: usize) -> Result<WorkingSet> {
    if window == 0 {
        return Err(Error::usage("working-set window must be at least 1"));
    }
    let reqs = trace.requests();
    let mut counts: HashMap<BlockId, usize> = HashMap::new();
    let mut series = Vec::with_capacity(reqs.len());
    for (t, &b) in reqs.iter().enumerate() {
        *counts.entry(b).or_default() += 1;
        if t >= window {
            let old = reqs[t - window];
            let c = counts.get_mut(&old).expect("block inside window");
            *c -= 1;
            if *c == 0 {
                counts.remove(&old);
            }
        }
        series.push(counts.len());
    }
    Ok(WorkingSet { window, series })
}

/// Inputs of the closed-form inference cost: `N` tokens, context `K`,
/// block size `B` and external memory of `M` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModelParams {
    pub n_tokens: u64,
    pub context_k: u64,
    pub block_b: u64,
    pub memory_m: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    /// `N * K^2`
    pub attention_ops: f64,
    /// `(N / B) * K_b * log2(M)`
    pub retrieval_ops: f64,
    /// `(N / B) * K_b^2`
    pub policy_ops: f64,
    pub total: f64,
}

pub fn cost_model(params: CostModelParams) -> Result<CostBreakdown> {
    let CostModelParams {
        n_tokens,
        context_k,
        block_b,
        memory_m,
    } = params;
    if n_tokens == 0 || context_k == 0 || block_b == 0 || memory_m == 0 {
        return Err(Error::config("cost model parameters must all be positive"));
    }
    if context_k % block_b != 0 {
        return Err(Error::config(format!(
            "block size B={block_b} does not divide context K={context_k}"
        )));
    }
    let n = n_tokens as f64;
    let k = context_k as f64;
    let b = block_b as f64;
    let k_b = (context_k / block_b) as f64;
    let decisions = n / b;
    let attention_ops = n * k * k;
    let retrieval_ops = decisions * k_b * (memory_m as f64).log2();
    let policy_ops = decisions * k_b * k_b;
    Ok(CostBreakdown {
        attention_ops,
        retrieval_ops,
        policy_ops,
        total: attention_ops + retrieval_ops + policy_ops,
    })
}

/// Sample mean and sample standard deviation (`n - 1` denominator).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub sd: f64,
    pub n_seeds: usize,
    pub per_seed: Vec<f64>,
}

impl SummaryStats {
    /// A single value has standard deviation 0.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::usage("cannot summarize an empty list"));
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        Ok(SummaryStats {
            mean,
            sd,
            n_seeds: n,
            per_seed: values,
        })
    }
}

/// Summarizes `metric` over runs that share policy and capacity.
pub fn aggregate_seeds<F>(results: &[SimResult], metric: F) -> Result<SummaryStats>
where
    F: Fn(&SimResult) -> f64,
{
    let Some(first) = results.first() else {
        return Err(Error::usage("cannot aggregate an empty result list"));
    };
    if results
        .iter()
        .any(|r| r.policy != first.policy || r.k_b != first.k_b || r.len() != first.len())
    {
        return Err(Error::usage(
            "aggregated runs must share policy, K_b and trace length",
        ));
    }
    SummaryStats::from_values(results.iter().map(metric).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::gen_adversarial_trace;

    fn faults(ids: &[u32], kind: PolicyKind, k: usize) -> usize {
        simulate(&Trace::from_ids(ids), kind, k, 0)
            .unwrap()
            .faults_total
    }

    #[test]
    fn simulate_examples() {
        assert_eq!(faults(&[1, 2, 3, 1, 2, 3], PolicyKind::Belady, 2), 4);
        assert_eq!(faults(&[1, 2, 3, 1, 2, 3], PolicyKind::Lru, 2), 6);
    }

    #[test]
    fn large_cache_only_cold_misses() {
        let ids = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5];
        let distinct = Trace::from_ids(&ids).distinct_blocks();
        for kind in PolicyKind::BASELINES {
            assert_eq!(faults(&ids, kind, 10), distinct);
        }
    }

    #[test]
    fn zero_capacity_is_config_error() {
        let err = simulate(&Trace::from_ids(&[0]), PolicyKind::Lru, 0, 0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn result_invariants() {
        let r = simulate(
            &Trace::from_ids(&[0, 1, 2, 0, 3, 1]),
            PolicyKind::Fifo,
            2,
            0,
        )
        .unwrap();
        assert_eq!(
            r.faults_total,
            r.fault_indicator.iter().filter(|&&f| f).count()
        );
        assert!(r.eviction_log.len() <= r.faults_total);
    }

    #[test]
    fn fault_rate_examples() {
        let mut r = simulate(&Trace::from_ids(&[0; 4]), PolicyKind::Lru, 1, 0).unwrap();
        assert_eq!(fault_rate(&r, 4).unwrap(), 0.25);
        r.faults_total = 0;
        assert_eq!(fault_rate(&r, 4).unwrap(), 0.0);
        r.faults_total = 4;
        assert_eq!(fault_rate(&r, 4).unwrap(), 1.0);
        assert!(fault_rate(&r, 0).is_err());

        let mut long = simulate(
            &Trace::new(vec![BlockId(0); 5000], 1).unwrap(),
            PolicyKind::Lru,
            8,
            0,
        )
        .unwrap();
        long.faults_total = 605;
        assert!((fault_rate(&long, 5000).unwrap() - 0.121).abs() < 1e-12);
    }

    #[test]
    fn ratio_examples() {
        assert!((competitive_ratio(1130, 605).unwrap() - 1.8677685950413223).abs() < 1e-12);
        assert_eq!(competitive_ratio(7, 7).unwrap(), 1.0);
        assert_eq!(competitive_ratio(6, 4).unwrap(), 1.5);
        assert!(competitive_ratio(3, 0).is_err());
    }

    #[test]
    fn working_set_examples() {
        let ws = working_set_series(&Trace::from_ids(&[1, 1, 1, 2]), 2).unwrap();
        assert_eq!(ws.series, vec![1, 1, 1, 2]);
        let ws = working_set_series(&Trace::from_ids(&[4; 10]), 3).unwrap();
        assert!(ws.series.iter().all(|&w| w == 1));
        assert!(working_set_series(&Trace::from_ids(&[1]), 0).is_err());
    }

    #[test]
    fn adversarial_cycle_thrashes() {
        let ws = working_set_series(&gen_adversarial_trace(8, 200).unwrap(), 9).unwrap();
        assert!(ws.series[8..].iter().all(|&w| w == 9));
        assert!(ws.thrashing(8));
        assert!(!ws.thrashing(9));
    }

    #[test]
    fn cost_model_examples() {
        let c = cost_model(CostModelParams {
            n_tokens: 1000,
            context_k: 100,
            block_b: 10,
            memory_m: 1024,
        })
        .unwrap();
        assert_eq!(c.attention_ops, 1e7);
        assert_eq!(c.retrieval_ops, 1e4);
        assert_eq!(c.policy_ops, 1e4);
        assert_eq!(c.total, 1e7 + 2e4);

        let c = cost_model(CostModelParams {
            n_tokens: 10,
            context_k: 1,
            block_b: 1,
            memory_m: 2,
        })
        .unwrap();
        assert_eq!(
            (c.attention_ops, c.retrieval_ops, c.policy_ops),
            (10.0, 10.0, 10.0)
        );

        assert!(cost_model(CostModelParams {
            n_tokens: 10,
            context_k: 10,
            block_b: 3,
            memory_m: 2
        })
        .is_err());
        assert!(cost_model(CostModelParams {
            n_tokens: 0,
            context_k: 1,
            block_b: 1,
            memory_m: 2
        })
        .is_err());
    }

    #[test]
    fn summary_examples() {
        let s = SummaryStats::from_values(vec![3.0, 3.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.sd, s.n_seeds), (3.0, 0.0, 3));
        let s = SummaryStats::from_values(vec![1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.sd - 2f64.sqrt()).abs() < 1e-12);
        assert!(SummaryStats::from_values(vec![]).is_err());
        assert!(aggregate_seeds(&[], |r| r.faults_total as f64).is_err());
    }

    #[test]
    fn aggregate_rejects_mixed_runs() {
        let t = Trace::from_ids(&[0, 1, 2]);
        let a = simulate(&t, PolicyKind::Lru, 2, 0).unwrap();
        let b = simulate(&t, PolicyKind::Fifo, 2, 0).unwrap();
        assert!(aggregate_seeds(&[a.clone(), b], |r| r.faults_total as f64).is_err());
        let s = aggregate_seeds(&[a.clone(), a], |r| r.faults_total as f64).unwrap();
        assert_eq!(s.sd, 0.0);
    }
}
