//! Empirical checks of the fault-count bounds.
//!
//! Each check produces [`BoundReport`]s. Upper bounds are satisfied when the
//! empirical value does not exceed the bound (up to [`EPSILON`]); the one
//! lower bound, the adversarial competitive ratio, is satisfied when the
//! empirical value reaches the threshold. Reports marked `hard` are
//! proven to hold and are asserted; the others are informative.
//!
//! Per-sequence bounds (fault sensitivity, robustness) are checked for every
//! seed and summarized by the seed with the least slack. Expectation bounds
//! (recall, noisy Belady) are checked on seed means.

use std::fmt;

use crate::cache::PolicyKind;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, tags, SplitMix64};
use crate::sim::{competitive_ratio, simulate};
use crate::trace::{
    flips_for, gen_adversarial_trace, gen_coupled_trace, gen_zipf_trace, hamming_distance,
    perturb_trace, BlockId, Trace, ZipfSpec,
};

/// Tolerance added to every bound comparison.
pub const EPSILON: f64 = 1e-9;

/// Fraction of `K_b` the adversarial ratio must reach over a finite horizon.
pub const LOWER_BOUND_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundName {
    /// `|F(r) - F(r')| <= (K_b + 1) d`
    FaultSensitivity,
    /// Expected fault difference under imperfect candidate recall.
    Recall,
    /// Adversarial competitive-ratio lower bound.
    AdversarialLower,
    /// `F_A <= c F_opt + (c + 1)(K_b + 1) beta T`
    Robustness,
    /// `E[F_noisy] <= F_opt + (1 - p) D_f T`
    NoisyBelady,
}

impl fmt::Display for BoundName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundName::FaultSensitivity => "fault_sensitivity",
            BoundName::Recall => "recall",
            BoundName::AdversarialLower => "adversarial_lower",
            BoundName::Robustness => "robustness",
            BoundName::NoisyBelady => "noisy_belady",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `empirical <= bound`
    Upper,
    /// `empirical >= bound`
    Lower,
}

/// Parameters a report was computed under. Unused ones stay `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundParams {
    pub policy: Option<PolicyKind>,
    pub k_b: usize,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub d_f: Option<f64>,
    pub t: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: BoundName,
    pub params: BoundParams,
    pub bound_value: f64,
    pub empirical_value: f64,
    pub direction: Direction,
    pub satisfied: bool,
    /// `bound - empirical` for upper bounds, `empirical - bound` for lower.
    pub slack: f64,
    pub hard: bool,
}

impl BoundReport {
    pub fn new(
        name: BoundName,
        params: BoundParams,
        bound_value: f64,
        empirical_value: f64,
        direction: Direction,
        hard: bool,
    ) -> Self {
        let slack = match direction {
            Direction::Upper => bound_value - empirical_value,
            Direction::Lower => empirical_value - bound_value,
        };
        BoundReport {
            name,
            params,
            bound_value,
            empirical_value,
            direction,
            satisfied: slack >= -EPSILON,
            slack,
            hard,
        }
    }

    /// True when this report is hard-asserted and fails.
    pub fn is_violation(&self) -> bool {
        self.hard && !self.satisfied
    }
}

/// Empirical fault divergence per flipped position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeReport {
    pub beta: f64,
    pub empirical_diff: usize,
    pub flips_d: usize,
    pub cascade_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SensitivityOutcome {
    /// The bound was evaluated. `cascade` is absent when no position was
    /// flipped (`beta = 0`).
    Checked {
        report: BoundReport,
        cascade: Option<CascadeReport>,
    },
    /// `beta > 0` but `floor(beta T) = 0`, so there is nothing to measure.
    Skipped { reason: String },
}

fn require_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        Err(Error::usage("at least one seed is required"))
    } else {
        Ok(())
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Keeps the report with the least slack, recording every seed it covers.
fn worst_of(reports: Vec<BoundReport>, seeds: &[u64]) -> BoundReport {
    let mut worst = reports
        .into_iter()
        .min_by(|a, b| a.slack.total_cmp(&b.slack))
        .expect("at least one seed");
    worst.params.seeds = seeds.to_vec();
    worst.satisfied = worst.slack >= -EPSILON;
    worst
}

/// Checks `|F(r^beta) - F(r^0)| <= (K_b + 1) floor(beta T)` for one seed,
/// where `r^beta` is `base` perturbed with a stream derived from `seed`.
pub fn check_fault_sensitivity(
    kind: PolicyKind,
    base: &Trace,
    beta: f64,
    k_b: usize,
    seed: u64,
) -> Result<SensitivityOutcome> {
    if !kind.is_deterministic() {
        return Err(Error::usage(format!(
            "fault sensitivity needs a deterministic policy, got {kind}"
        )));
    }
    let d = flips_for(beta, base.len());
    if d == 0 && beta > 0.0 {
        return Ok(SensitivityOutcome::Skipped {
            reason: format!(
                "beta = {beta} flips no position of a length-{} trace",
                base.len()
            ),
        });
    }
    let perturbed = perturb_trace(base, beta, derive_seed(seed, tags::PERTURB))?;
    let f0 = simulate(base, kind, k_b, seed)?.faults_total;
    let f1 = simulate(&perturbed.trace, kind, k_b, seed)?.faults_total;
    let diff = f0.abs_diff(f1);

    let params = BoundParams {
        policy: Some(kind),
        k_b,
        beta: Some(beta),
        d_f: Some((k_b + 1) as f64),
        t: base.len(),
        seeds: vec![seed],
        ..BoundParams::default()
    };
    let report = BoundReport::new(
        BoundName::FaultSensitivity,
        params,
        ((k_b + 1) * d) as f64,
        diff as f64,
        Direction::Upper,
        true,
    );
    let cascade = (d > 0).then(|| CascadeReport {
        beta,
        empirical_diff: diff,
        flips_d: d,
        cascade_factor: diff as f64 / d as f64,
    });
    Ok(SensitivityOutcome::Checked { report, cascade })
}

struct RobustnessRun {
    f_alg: usize,
    f_opt: usize,
    empirical_c: f64,
    t: usize,
}

fn robustness_run(
    kind: PolicyKind,
    spec: &ZipfSpec,
    beta: f64,
    k_b: usize,
    seed: u64,
) -> Result<RobustnessRun> {
    let base = gen_zipf_trace(spec, seed)?;
    let perturbed = perturb_trace(&base, beta, derive_seed(seed, tags::PERTURB))?.trace;
    let f_alg = simulate(&perturbed, kind, k_b, seed)?.faults_total;
    let f_opt = simulate(&perturbed, PolicyKind::Belady, k_b, seed)?.faults_total;
    let f_alg0 = simulate(&base, kind, k_b, seed)?.faults_total;
    let f_opt0 = simulate(&base, PolicyKind::Belady, k_b, seed)?.faults_total;
    Ok(RobustnessRun {
        f_alg,
        f_opt,
        empirical_c: competitive_ratio(f_alg0, f_opt0)?,
        t: base.len(),
    })
}

fn robustness_report(
    kind: PolicyKind,
    beta: f64,
    c: f64,
    k_b: usize,
    run: &RobustnessRun,
    seed: u64,
    hard: bool,
) -> BoundReport {
    let t = run.t as f64;
    let bound = c * run.f_opt as f64 + (c + 1.0) * (k_b + 1) as f64 * beta * t;
    let params = BoundParams {
        policy: Some(kind),
        k_b,
        beta: Some(beta),
        c: Some(c),
        d_f: Some((k_b + 1) as f64),
        t: run.t,
        seeds: vec![seed],
        ..BoundParams::default()
    };
    BoundReport::new(
        BoundName::Robustness,
        params,
        bound,
        run.f_alg as f64,
        Direction::Upper,
        hard,
    )
}

/// For every `beta`, checks
/// `F_A(r^beta) <= c F_opt(r^beta) + (c + 1)(K_b + 1) beta T` on each seed's
/// perturbed Zipf trace, reporting the seed with the least slack.
pub fn check_robustness(
    kind: PolicyKind,
    spec: &ZipfSpec,
    beta_grid: &[f64],
    c: f64,
    k_b: usize,
    seeds: &[u64],
) -> Result<Vec<BoundReport>> {
    if c.is_nan() || c < 1.0 {
        return Err(Error::config(format!(
            "competitive constant c must be >= 1, got {c}"
        )));
    }
    require_seeds(seeds)?;
    beta_grid
        .iter()
        .map(|&beta| {
            let per_seed = seeds
                .iter()
                .map(|&seed| {
                    let run = robustness_run(kind, spec, beta, k_b, seed)?;
                    Ok(robustness_report(kind, beta, c, k_b, &run, seed, true))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(worst_of(per_seed, seeds))
        })
        .collect()
}

/// The same bound with `c` set per seed to the measured ratio on the
/// unperturbed trace. Informative only; `params.c` holds the mean of the
/// measured constants.
pub fn check_robustness_empirical_c(
    kind: PolicyKind,
    spec: &ZipfSpec,
    beta_grid: &[f64],
    k_b: usize,
    seeds: &[u64],
) -> Result<Vec<BoundReport>> {
    require_seeds(seeds)?;
    beta_grid
        .iter()
        .map(|&beta| {
            let mut cs = Vec::with_capacity(seeds.len());
            let per_seed = seeds
                .iter()
                .map(|&seed| {
                    let run = robustness_run(kind, spec, beta, k_b, seed)?;
                    cs.push(run.empirical_c);
                    Ok(robustness_report(
                        kind,
                        beta,
                        run.empirical_c,
                        k_b,
                        &run,
                        seed,
                        false,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut worst = worst_of(per_seed, seeds);
            worst.params.c = Some(mean(cs));
            Ok(worst)
        })
        .collect()
}

/// Both forms of the recall bound for one `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallReport {
    /// `(1 - rho) T`, which ignores cascades. Reported, never asserted.
    pub stated: BoundReport,
    /// `(K_b + 1)(1 - rho) T`. Hard-asserted.
    pub corrected: BoundReport,
    pub mean_mismatches: f64,
}

/// Replaces each request independently with probability `1 - rho` by a
/// uniformly chosen different block. One coin is drawn per step, then one
/// replacement draw per replaced step. A single-block universe has no
/// replacement, so nothing changes.
pub fn approximate_requests(base: &Trace, rho: f64, seed: u64) -> Result<Trace> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::config(format!(
            "recall rho must lie in [0, 1], got {rho}"
        )));
    }
    let m = base.universe_m();
    let mut rng = SplitMix64::new(seed);
    let requests = base
        .requests()
        .iter()
        .map(|&b| {
            let coin = rng.next_f64();
            if coin >= rho && m >= 2 {
                let mut pick = rng.below(m - 1) as u32;
                if pick >= b.0 {
                    pick += 1;
                }
                BlockId(pick)
            } else {
                b
            }
        })
        .collect();
    Trace::new(requests, m)
}

/// Mean over seeds of `|F(r_hat) - F(r)|` against both recall bounds.
pub fn check_recall_bound(
    kind: PolicyKind,
    base: &Trace,
    rho: f64,
    k_b: usize,
    seeds: &[u64],
) -> Result<RecallReport> {
    require_seeds(seeds)?;
    let f_true = |seed| simulate(base, kind, k_b, seed).map(|r| r.faults_total);
    let mut diffs = Vec::with_capacity(seeds.len());
    let mut mismatches = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let approx = approximate_requests(base, rho, derive_seed(seed, tags::RECALL))?;
        mismatches.push(hamming_distance(base, &approx)? as f64);
        let f_hat = simulate(&approx, kind, k_b, seed)?.faults_total;
        diffs.push(f_hat.abs_diff(f_true(seed)?) as f64);
    }
    let empirical = mean(diffs);
    let t = base.len() as f64;
    let params = |d_f: f64| BoundParams {
        policy: Some(kind),
        k_b,
        rho: Some(rho),
        d_f: Some(d_f),
        t: base.len(),
        seeds: seeds.to_vec(),
        ..BoundParams::default()
    };
    let cascade = (k_b + 1) as f64;
    Ok(RecallReport {
        stated: BoundReport::new(
            BoundName::Recall,
            params(1.0),
            (1.0 - rho) * t,
            empirical,
            Direction::Upper,
            false,
        ),
        corrected: BoundReport::new(
            BoundName::Recall,
            params(cascade),
            cascade * (1.0 - rho) * t,
            empirical,
            Direction::Upper,
            true,
        ),
        mean_mismatches: mean(mismatches),
    })
}

/// For each `p`, checks `mean F_noisy(p) <= F_opt + (1 - p) d_f T`, the mean
/// taken over the policy's random streams.
pub fn check_noisy_belady(
    base: &Trace,
    p_grid: &[f64],
    k_b: usize,
    d_f: f64,
    seeds: &[u64],
) -> Result<Vec<BoundReport>> {
    require_seeds(seeds)?;
    if d_f.is_nan() || d_f <= 0.0 {
        return Err(Error::config(format!("D_f must be positive, got {d_f}")));
    }
    let f_opt = simulate(base, PolicyKind::Belady, k_b, 0)?.faults_total as f64;
    let t = base.len() as f64;
    p_grid
        .iter()
        .map(|&p| {
            let kind = PolicyKind::NoisyBelady(p);
            kind.validate()?;
            let faults = seeds
                .iter()
                .map(|&seed| simulate(base, kind, k_b, seed).map(|r| r.faults_total as f64))
                .collect::<Result<Vec<_>>>()?;
            let params = BoundParams {
                policy: Some(kind),
                k_b,
                p: Some(p),
                d_f: Some(d_f),
                t: base.len(),
                seeds: seeds.to_vec(),
                ..BoundParams::default()
            };
            Ok(BoundReport::new(
                BoundName::NoisyBelady,
                params,
                f_opt + (1.0 - p) * d_f * t,
                mean(faults),
                Direction::Upper,
                true,
            ))
        })
        .collect()
}

/// Runs LRU and FIFO on the `K_b + 1`-block cycle and checks that each one's
/// ratio against Belady reaches `0.8 K_b`. One report per policy.
pub fn check_lower_bound(k_b: usize, length_t: usize) -> Result<Vec<BoundReport>> {
    if length_t < 10 * (k_b + 1) {
        return Err(Error::usage(format!(
            "lower-bound check needs T >= 10 (K_b + 1) = {}, got {length_t}",
            10 * (k_b + 1)
        )));
    }
    let trace = gen_adversarial_trace(k_b, length_t)?;
    let f_opt = simulate(&trace, PolicyKind::Belady, k_b, 0)?.faults_total;
    [PolicyKind::Lru, PolicyKind::Fifo]
        .into_iter()
        .map(|kind| {
            let f = simulate(&trace, kind, k_b, 0)?.faults_total;
            let params = BoundParams {
                policy: Some(kind),
                k_b,
                t: length_t,
                ..BoundParams::default()
            };
            Ok(BoundReport::new(
                BoundName::AdversarialLower,
                params,
                LOWER_BOUND_FRACTION * k_b as f64,
                competitive_ratio(f, f_opt)?,
                Direction::Lower,
                true,
            ))
        })
        .collect()
}

/// Sensitivity estimate for one seed set.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaEstimate {
    pub beta_hat: f64,
    pub per_seed: Vec<f64>,
}

/// Generates one coupled trace per policy with the same seed and takes the
/// largest pairwise Hamming distance over `T`; averages over seeds.
pub fn estimate_beta(
    spec: &ZipfSpec,
    beta_true: f64,
    policy_set: &[PolicyKind],
    k_b: usize,
    seeds: &[u64],
) -> Result<BetaEstimate> {
    if policy_set.len() < 2 {
        return Err(Error::usage("beta estimation needs at least two policies"));
    }
    require_seeds(seeds)?;
    let t = spec.length_t.max(1) as f64;
    let per_seed = seeds
        .iter()
        .map(|&seed| {
            let traces = policy_set
                .iter()
                .map(|&p| gen_coupled_trace(spec, beta_true, p, k_b, seed))
                .collect::<Result<Vec<_>>>()?;
            let mut widest = 0;
            for (i, a) in traces.iter().enumerate() {
                for b in &traces[i + 1..] {
                    widest = widest.max(hamming_distance(a, b)?);
                }
            }
            Ok(widest as f64 / t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BetaEstimate {
        beta_hat: mean(per_seed.iter().copied()),
        per_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ZipfSpec {
        ZipfSpec {
            length_t: 1000,
            ..ZipfSpec::default()
        }
    }

    #[test]
    fn report_direction_semantics() {
        let up = BoundReport::new(
            BoundName::Robustness,
            BoundParams::default(),
            10.0,
            12.0,
            Direction::Upper,
            true,
        );
        assert!(!up.satisfied && up.is_violation());
        assert_eq!(up.slack, -2.0);
        let low = BoundReport::new(
            BoundName::AdversarialLower,
            BoundParams::default(),
            6.4,
            7.9,
            Direction::Lower,
            true,
        );
        assert!(low.satisfied);
        assert!((low.slack - 1.5).abs() < 1e-12);
        let edge = BoundReport::new(
            BoundName::FaultSensitivity,
            BoundParams::default(),
            0.0,
            1e-12,
            Direction::Upper,
            true,
        );
        assert!(edge.satisfied);
    }

    #[test]
    fn sensitivity_zero_beta() {
        let base = gen_zipf_trace(&small_spec(), 1).unwrap();
        let SensitivityOutcome::Checked { report, cascade } =
            check_fault_sensitivity(PolicyKind::Lru, &base, 0.0, 8, 1).unwrap()
        else {
            panic!("beta = 0 is checked, not skipped");
        };
        assert_eq!((report.bound_value, report.empirical_value), (0.0, 0.0));
        assert!(report.satisfied);
        assert!(cascade.is_none());
    }

    #[test]
    fn sensitivity_skips_when_nothing_flips() {
        let base = Trace::from_ids(&[0, 1, 2, 3]);
        let out = check_fault_sensitivity(PolicyKind::Lru, &base, 0.1, 2, 0).unwrap();
        assert!(matches!(out, SensitivityOutcome::Skipped { .. }));
    }

    #[test]
    fn sensitivity_rejects_random_policies() {
        let base = Trace::from_ids(&[0, 1, 2, 3]);
        assert!(check_fault_sensitivity(PolicyKind::Random, &base, 0.5, 2, 0).is_err());
    }

    #[test]
    fn sensitivity_large_cache_counts_only_new_blocks() {
        let spec = small_spec();
        let base = gen_zipf_trace(&spec, 3).unwrap();
        let pert = perturb_trace(&base, 0.2, derive_seed(3, tags::PERTURB))
            .unwrap()
            .trace;
        let mut seen = vec![false; spec.universe_m];
        base.requests().iter().for_each(|b| seen[b.index()] = true);
        let mut new_blocks = 0;
        for b in pert.requests() {
            if !seen[b.index()] {
                seen[b.index()] = true;
                new_blocks += 1;
            }
        }
        for kind in [
            PolicyKind::Lru,
            PolicyKind::Lfu,
            PolicyKind::Fifo,
            PolicyKind::Belady,
        ] {
            let SensitivityOutcome::Checked { report, .. } =
                check_fault_sensitivity(kind, &base, 0.2, 64, 3).unwrap()
            else {
                panic!()
            };
            assert!(report.empirical_value <= new_blocks as f64);
        }
    }

    #[test]
    fn robustness_large_cache_is_tight() {
        let spec = ZipfSpec {
            length_t: 600,
            ..ZipfSpec::default()
        };
        let reports = check_robustness(PolicyKind::Lru, &spec, &[0.0], 1.0, 64, &[1, 2]).unwrap();
        assert_eq!(reports[0].slack, 0.0);
        assert!(reports[0].satisfied);
        assert!(check_robustness(PolicyKind::Lru, &spec, &[0.0], 0.5, 8, &[1]).is_err());
        assert!(check_robustness(PolicyKind::Lru, &spec, &[0.0], 8.0, 8, &[]).is_err());
    }

    #[test]
    fn robustness_empirical_c_at_zero_beta_is_exact() {
        let spec = small_spec();
        let reports =
            check_robustness_empirical_c(PolicyKind::Lru, &spec, &[0.0], 8, &[5]).unwrap();
        assert!(reports[0].slack.abs() < 1e-6);
        assert!(!reports[0].hard);
    }

    #[test]
    fn recall_examples() {
        let base = gen_zipf_trace(&small_spec(), 9).unwrap();
        let full = check_recall_bound(PolicyKind::Lru, &base, 1.0, 8, &[1, 2, 3]).unwrap();
        assert_eq!(full.corrected.empirical_value, 0.0);
        assert_eq!(full.mean_mismatches, 0.0);

        let single = Trace::new(vec![BlockId(0); 50], 1).unwrap();
        let r = check_recall_bound(PolicyKind::Lru, &single, 0.0, 2, &[1]).unwrap();
        assert_eq!(r.corrected.empirical_value, 0.0);

        assert!(check_recall_bound(PolicyKind::Lru, &base, 1.2, 8, &[1]).is_err());
    }

    #[test]
    fn recall_mismatch_rate_tracks_rho() {
        let base = gen_zipf_trace(&ZipfSpec::default(), 4).unwrap();
        let r = check_recall_bound(PolicyKind::Lru, &base, 0.9, 8, &[1, 2, 3, 4, 5]).unwrap();
        assert!((r.mean_mismatches / 5000.0 - 0.1).abs() < 0.02);
        assert_eq!(r.corrected.bound_value, 9.0 * r.stated.bound_value);
        assert!(r.corrected.satisfied);
    }

    #[test]
    fn noisy_belady_exact_at_one() {
        let base = gen_zipf_trace(&small_spec(), 2).unwrap();
        let reports = check_noisy_belady(&base, &[1.0], 8, 9.0, &[1, 2]).unwrap();
        assert_eq!(reports[0].slack, 0.0);
        assert!(check_noisy_belady(&base, &[1.0], 8, 0.0, &[1]).is_err());
        assert!(check_noisy_belady(&base, &[1.5], 8, 9.0, &[1]).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        let r = check_lower_bound(2, 600).unwrap();
        assert!(r.iter().all(|r| r.satisfied));
        assert!((r[0].empirical_value - 2.0).abs() < 0.05);
        let r = check_lower_bound(1, 100).unwrap();
        assert!(r.iter().all(|r| r.satisfied && r.empirical_value == 1.0));
        assert!(check_lower_bound(8, 50).is_err());
    }

    #[test]
    fn beta_estimation_examples() {
        let spec = small_spec();
        let pair = [PolicyKind::Lru, PolicyKind::Fifo];
        assert_eq!(
            estimate_beta(&spec, 0.0, &pair, 8, &[1, 2])
                .unwrap()
                .beta_hat,
            0.0
        );
        let est = estimate_beta(&spec, 0.2, &pair, 8, &[1, 2, 3]).unwrap();
        assert!(est.beta_hat > 0.0);
        assert!(estimate_beta(&spec, 0.2, &pair[..1], 8, &[1]).is_err());
    }
}
