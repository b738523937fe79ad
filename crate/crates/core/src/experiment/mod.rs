//! Experiment drivers behind the command-line tool: the capacity sweep, the
//! perturbation study and the full bound-validation suite.
//!
//! Work fans out over `(configuration point, seed)` on a thread pool whose
//! size the caller picks (`0` runs everything on the calling thread).
//! Results are sorted by `(policy, K_b, beta, seed)` before anything is
//! written, so output files do not depend on scheduling.

mod config;
pub mod csv;

pub use config::ExperimentConfig;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bounds::{
    check_fault_sensitivity, check_lower_bound, check_noisy_belady, check_recall_bound,
    check_robustness, check_robustness_empirical_c, estimate_beta, BoundReport, SensitivityOutcome,
};
use crate::cache::PolicyKind;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, tags};
use crate::sim::{simulate, SummaryStats};
use crate::trace::{gen_zipf_trace, perturb_trace};
use csv::{bound_row, real, write_csv, BOUND_HEADER, SIM_HEADER};

/// Maps `f` over `items` on `threads` workers, keeping input order.
fn par_map<T, R, F>(threads: usize, items: Vec<T>, f: F) -> Result<Vec<R>>
where
    T: Send,
    R: Send,
    F: Fn(T) -> Result<R> + Send + Sync,
{
    if threads == 0 {
        return items.into_iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| items.into_par_iter().map(f).collect())
}

/// One CSV row of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub policy: PolicyKind,
    pub k_b: usize,
    pub beta: f64,
    pub seed: u64,
    pub faults: usize,
    pub fault_rate: f64,
    pub ratio_vs_belady: f64,
}

impl SimRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.policy,
            self.k_b,
            real(self.beta),
            self.seed,
            self.faults,
            real(self.fault_rate),
            real(self.ratio_vs_belady)
        )
    }

    fn sort_key(&self) -> ((usize, u64), usize, u64, u64) {
        (
            self.policy.order_key(),
            self.k_b,
            self.beta.to_bits(),
            self.seed,
        )
    }
}

/// Mean and spread of fault rate and ratio for one `(policy, K_b)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub policy: PolicyKind,
    pub k_b: usize,
    pub fault_rate: SummaryStats,
    pub ratio: SummaryStats,
}

pub const SUMMARY_HEADER: &str =
    "policy,k_b,n_seeds,fault_rate_mean,fault_rate_sd,ratio_mean,ratio_sd";

impl SweepSummary {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.policy,
            self.k_b,
            self.fault_rate.n_seeds,
            real(self.fault_rate.mean),
            real(self.fault_rate.sd),
            real(self.ratio.mean),
            real(self.ratio.sd)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SimRow>,
    pub summary: Vec<SweepSummary>,
}

impl SweepOutput {
    pub fn cell(&self, policy: PolicyKind, k_b: usize) -> Option<&SweepSummary> {
        self.summary
            .iter()
            .find(|s| s.policy == policy && s.k_b == k_b)
    }
}

/// Runs every configured policy at every capacity on each seed's Zipf
/// trace, with ratios taken against Belady on the same trace.
pub fn run_sweep(cfg: &ExperimentConfig, threads: usize) -> Result<SweepOutput> {
    cfg.validate()?;
    let tasks: Vec<(usize, u64)> = cfg
        .k_b_grid
        .iter()
        .flat_map(|&k| cfg.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let per_task = par_map(threads, tasks, |(k_b, seed)| {
        let trace = gen_zipf_trace(&cfg.zipf, seed)?;
        let opt = simulate(&trace, PolicyKind::Belady, k_b, seed)?.faults_total;
        cfg.policies
            .iter()
            .map(|&policy| {
                let r = simulate(&trace, policy, k_b, seed)?;
                Ok(SimRow {
                    policy,
                    k_b,
                    beta: 0.0,
                    seed,
                    faults: r.faults_total,
                    fault_rate: r.fault_rate(),
                    ratio_vs_belady: r.faults_total as f64 / opt.max(1) as f64,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows: Vec<SimRow> = per_task.into_iter().flatten().collect();
    rows.sort_by_key(SimRow::sort_key);

    let mut summary = Vec::new();
    for chunk in rows.chunk_by(|a, b| a.policy == b.policy && a.k_b == b.k_b) {
        summary.push(SweepSummary {
            policy: chunk[0].policy,
            k_b: chunk[0].k_b,
            fault_rate: SummaryStats::from_values(chunk.iter().map(|r| r.fault_rate).collect())?,
            ratio: SummaryStats::from_values(chunk.iter().map(|r| r.ratio_vs_belady).collect())?,
        });
    }
    Ok(SweepOutput { rows, summary })
}

/// Writes `fig3a.csv` (one row per run) and `fig3b.csv` (per-cell means).
pub fn write_sweep(out_dir: &Path, sweep: &SweepOutput) -> Result<Vec<PathBuf>> {
    let a = out_dir.join("fig3a.csv");
    let b = out_dir.join("fig3b.csv");
    write_csv(&a, SIM_HEADER, sweep.rows.iter().map(SimRow::to_csv))?;
    write_csv(
        &b,
        SUMMARY_HEADER,
        sweep.summary.iter().map(SweepSummary::to_csv),
    )?;
    Ok(vec![a, b])
}

/// Fault stability of one policy on one seed at one `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub policy: PolicyKind,
    pub k_b: usize,
    pub beta: f64,
    pub seed: u64,
    pub flips_d: usize,
    pub faults_base: usize,
    pub faults_perturbed: usize,
    pub abs_diff: usize,
}

pub const STABILITY_HEADER: &str =
    "policy,k_b,beta,seed,flips_d,faults_base,faults_perturbed,abs_diff,cascade_factor,sensitivity_bound";

impl StabilityRow {
    pub fn cascade_factor(&self) -> Option<f64> {
        (self.flips_d > 0).then(|| self.abs_diff as f64 / self.flips_d as f64)
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.policy,
            self.k_b,
            real(self.beta),
            self.seed,
            self.flips_d,
            self.faults_base,
            self.faults_perturbed,
            self.abs_diff,
            self.cascade_factor().map(real).unwrap_or_default(),
            (self.k_b + 1) * self.flips_d
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig4Output {
    /// LRU fault stability per `(beta, seed)`.
    pub stability: Vec<StabilityRow>,
    /// Robustness bound per `beta`, with `c = K_b` (hard) and with the
    /// measured constant (informative).
    pub robustness: Vec<BoundReport>,
}

/// The perturbation study at `check_k_b`: LRU fault stability and the
/// robustness bound over the beta grid.
pub fn run_fig4(cfg: &ExperimentConfig, threads: usize) -> Result<Fig4Output> {
    cfg.validate()?;
    let k_b = cfg.check_k_b;
    let tasks: Vec<(f64, u64)> = cfg
        .beta_grid
        .iter()
        .flat_map(|&b| cfg.seeds.iter().map(move |&s| (b, s)))
        .collect();
    let mut stability = par_map(threads, tasks, |(beta, seed)| {
        stability_row(cfg, PolicyKind::Lru, k_b, beta, seed)
    })?;
    stability.sort_by_key(|r| (r.beta.to_bits(), r.seed));

    let c = k_b as f64;
    let mut robustness = check_robustness(
        PolicyKind::Lru,
        &cfg.zipf,
        &cfg.beta_grid,
        c,
        k_b,
        &cfg.seeds,
    )?;
    robustness.extend(check_robustness_empirical_c(
        PolicyKind::Lru,
        &cfg.zipf,
        &cfg.beta_grid,
        k_b,
        &cfg.seeds,
    )?);
    Ok(Fig4Output {
        stability,
        robustness,
    })
}

fn stability_row(
    cfg: &ExperimentConfig,
    policy: PolicyKind,
    k_b: usize,
    beta: f64,
    seed: u64,
) -> Result<StabilityRow> {
    let base = gen_zipf_trace(&cfg.zipf, seed)?;
    let perturbed = perturb_trace(&base, beta, derive_seed(seed, tags::PERTURB))?;
    let f0 = simulate(&base, policy, k_b, seed)?.faults_total;
    let f1 = simulate(&perturbed.trace, policy, k_b, seed)?.faults_total;
    Ok(StabilityRow {
        policy,
        k_b,
        beta,
        seed,
        flips_d: perturbed.hamming_d,
        faults_base: f0,
        faults_perturbed: f1,
        abs_diff: f0.abs_diff(f1),
    })
}

pub fn write_fig4(out_dir: &Path, fig4: &Fig4Output) -> Result<Vec<PathBuf>> {
    let a = out_dir.join("fig4a.csv");
    let b = out_dir.join("fig4b.csv");
    write_csv(
        &a,
        STABILITY_HEADER,
        fig4.stability.iter().map(StabilityRow::to_csv),
    )?;
    write_csv(&b, BOUND_HEADER, fig4.robustness.iter().map(bound_row))?;
    Ok(vec![a, b])
}

/// One beta estimate on coupled traces.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaRow {
    pub beta_true: f64,
    pub k_b: usize,
    pub beta_hat: f64,
    pub n_seeds: usize,
}

pub const BETA_HEADER: &str = "beta_true,policies,k_b,beta_hat,n_seeds";

/// Everything the validation suite produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOutput {
    /// Asserted reports; any unsatisfied one fails validation.
    pub hard: Vec<BoundReport>,
    /// Reported for comparison, never asserted.
    pub informative: Vec<BoundReport>,
    pub beta_estimates: Vec<BetaRow>,
    pub estimation_policies: Vec<PolicyKind>,
    /// Checks that had nothing to measure, with the reason.
    pub skipped: Vec<String>,
}

impl ValidationOutput {
    pub fn violations(&self) -> impl Iterator<Item = &BoundReport> {
        self.hard.iter().filter(|r| r.is_violation())
    }

    pub fn all_satisfied(&self) -> bool {
        self.violations().next().is_none()
    }
}

/// The policies whose fault sensitivity is checked.
pub const SENSITIVITY_POLICIES: [PolicyKind; 4] = [
    PolicyKind::Lru,
    PolicyKind::Fifo,
    PolicyKind::Lfu,
    PolicyKind::Belady,
];

fn worst(mut reports: Vec<BoundReport>, seeds: &[u64]) -> Option<BoundReport> {
    reports.sort_by(|a, b| a.slack.total_cmp(&b.slack));
    let mut w = reports.into_iter().next()?;
    w.params.seeds = seeds.to_vec();
    Some(w)
}

/// Runs every bound check at `check_k_b` over the configured grids.
///
/// Per-sequence bounds are evaluated on every seed's trace and summarized by
/// the least slack. Expectation bounds (recall, noisy Belady) average over
/// all seeds' random streams for each seed's base trace, again keeping the
/// tightest base trace.
pub fn run_validation(cfg: &ExperimentConfig, threads: usize) -> Result<ValidationOutput> {
    cfg.validate()?;
    let k_b = cfg.check_k_b;
    let seeds = &cfg.seeds;
    let mut hard = Vec::new();
    let mut informative = Vec::new();
    let mut skipped = Vec::new();

    // Fault sensitivity, per (policy, beta), worst seed.
    let tasks: Vec<(PolicyKind, f64)> = SENSITIVITY_POLICIES
        .iter()
        .flat_map(|&p| cfg.beta_grid.iter().map(move |&b| (p, b)))
        .collect();
    let sensitivity = par_map(threads, tasks, |(policy, beta)| {
        let mut reports = Vec::new();
        let mut skips = Vec::new();
        for &seed in seeds {
            let base = gen_zipf_trace(&cfg.zipf, seed)?;
            match check_fault_sensitivity(policy, &base, beta, k_b, seed)? {
                SensitivityOutcome::Checked { report, .. } => reports.push(report),
                SensitivityOutcome::Skipped { reason } => {
                    skips.push(format!("fault_sensitivity {policy} seed {seed}: {reason}"))
                }
            }
        }
        Ok((worst(reports, seeds), skips))
    })?;
    for (report, skips) in sensitivity {
        hard.extend(report);
        skipped.extend(skips);
    }

    // Robustness under perturbation.
    let c = k_b as f64;
    hard.extend(check_robustness(
        PolicyKind::Lru,
        &cfg.zipf,
        &cfg.beta_grid,
        c,
        k_b,
        seeds,
    )?);
    informative.extend(check_robustness_empirical_c(
        PolicyKind::Lru,
        &cfg.zipf,
        &cfg.beta_grid,
        k_b,
        seeds,
    )?);

    // Adversarial lower bound.
    for &k in &cfg.adversarial_k_b_grid {
        hard.extend(check_lower_bound(k, cfg.zipf.length_t)?);
    }

    // Expectation bounds, one base trace per seed.
    let d_f = (k_b + 1) as f64;
    let per_base = par_map(threads, seeds.clone(), |seed| {
        let base = gen_zipf_trace(&cfg.zipf, seed)?;
        let noisy = check_noisy_belady(&base, &cfg.p_grid, k_b, d_f, seeds)?;
        let recall = cfg
            .rho_grid
            .iter()
            .map(|&rho| check_recall_bound(PolicyKind::Lru, &base, rho, k_b, seeds))
            .collect::<Result<Vec<_>>>()?;
        Ok((noisy, recall))
    })?;
    for (i, _) in cfg.p_grid.iter().enumerate() {
        hard.extend(worst(
            per_base.iter().map(|(n, _)| n[i].clone()).collect(),
            seeds,
        ));
    }
    for (i, _) in cfg.rho_grid.iter().enumerate() {
        hard.extend(worst(
            per_base
                .iter()
                .map(|(_, r)| r[i].corrected.clone())
                .collect(),
            seeds,
        ));
        informative.extend(worst(
            per_base.iter().map(|(_, r)| r[i].stated.clone()).collect(),
            seeds,
        ));
    }

    // Sensitivity estimation on policy-coupled traces.
    let estimation_policies = vec![PolicyKind::Lru, PolicyKind::Fifo];
    let beta_estimates = par_map(threads, cfg.beta_true_grid.clone(), |beta_true| {
        let est = estimate_beta(&cfg.zipf, beta_true, &estimation_policies, k_b, seeds)?;
        Ok(BetaRow {
            beta_true,
            k_b,
            beta_hat: est.beta_hat,
            n_seeds: seeds.len(),
        })
    })?;

    Ok(ValidationOutput {
        hard,
        informative,
        beta_estimates,
        estimation_policies,
        skipped,
    })
}

/// Writes `bounds.csv` (hard reports), `bounds_informative.csv` and
/// `beta_hat.csv`.
pub fn write_validation(out_dir: &Path, v: &ValidationOutput) -> Result<Vec<PathBuf>> {
    let hard = out_dir.join("bounds.csv");
    let info = out_dir.join("bounds_informative.csv");
    let beta = out_dir.join("beta_hat.csv");
    write_csv(&hard, BOUND_HEADER, v.hard.iter().map(bound_row))?;
    write_csv(&info, BOUND_HEADER, v.informative.iter().map(bound_row))?;
    let names: Vec<String> = v
        .estimation_policies
        .iter()
        .map(|p| p.to_string())
        .collect();
    let names = names.join("|");
    write_csv(
        &beta,
        BETA_HEADER,
        v.beta_estimates.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                real(r.beta_true),
                names,
                r.k_b,
                real(r.beta_hat),
                r.n_seeds
            )
        }),
    )?;
    Ok(vec![hard, info, beta])
}
