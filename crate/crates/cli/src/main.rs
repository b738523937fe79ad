//! `paging-lab`: trace generation, policy sweeps, bound validation and the
//! blocked-tape Turing machine runner.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use paging_lab::experiment::csv::SIM_HEADER;
use paging_lab::experiment::{self, ExperimentConfig, SimRow};
use paging_lab::oracle::{
    brute_force_min_faults, dp_solve, BRUTE_FORCE_MAX_KB, BRUTE_FORCE_MAX_M, BRUTE_FORCE_MAX_T,
};
use paging_lab::rng::{derive_seed, tags};
use paging_lab::tm::{parse_machine, simulate_tm};
use paging_lab::trace::{read_trace, write_trace, TraceHeader, TraceKind};
use paging_lab::{
    gen_adversarial_trace, gen_coupled_trace, gen_zipf_trace, perturb_trace, simulate, PolicyKind,
    Trace,
};

const THREADS_ENV: &str = "PAGING_LAB_THREADS";

#[derive(Parser)]
#[command(
    name = "paging-lab",
    version,
    about = "Deterministic paging experiments"
)]
struct Cli {
    /// Experiment config file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cache capacity in blocks.
    #[arg(long = "k-b", global = true)]
    k_b: Option<usize>,
    /// Perturbation or coupling strength in [0, 1].
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Eviction policy: belady, lru, lfu, fifo, random or noisy-belady:<p>.
    #[arg(long, global = true)]
    policy: Option<PolicyKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a trace file.
    GenTrace {
        #[arg(long, value_enum, default_value = "zipf")]
        kind: Kind,
        /// Destination file; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run one policy over one trace and print a CSV row.
    Simulate {
        /// Trace file; a Zipf trace from the config is generated when omitted.
        /// With a file, `--beta` only labels the output row.
        trace_file: Option<PathBuf>,
    },
    /// Fault rates and ratios over the capacity grid (fig3a.csv, fig3b.csv).
    Sweep,
    /// Check every bound; exits nonzero if any asserted bound fails.
    Validate,
    /// Regenerate the data behind one figure.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
    /// Compare Belady against the exact oracles on a tiny trace.
    Oracle {
        /// Block ids, comma- or space-separated.
        #[arg(required = true, num_args = 1..)]
        blocks: Vec<String>,
    },
    /// Turing machine over a blocked tape.
    Tm {
        #[command(subcommand)]
        action: TmAction,
    },
}

#[derive(Subcommand)]
enum TmAction {
    Run {
        machine_file: PathBuf,
        input: String,
        #[arg(long = "block-size")]
        block_size: usize,
        #[arg(long = "max-steps", default_value_t = 1_000_000)]
        max_steps: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Zipf,
    Adversarial,
    Coupled,
    Perturbed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Fig3,
    Fig4,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a non-negative integer, got `{v}`")),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            ExperimentConfig::parse(&text, &path.display().to_string())?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(k) = cli.k_b {
        cfg.k_b_grid = vec![k];
        cfg.check_k_b = k;
    }
    if let Some(beta) = cli.beta {
        cfg.beta_grid = vec![beta];
    }
    if let Some(p) = cli.policy {
        cfg.policies = vec![p];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = load_config(&cli)?;
    let seed = cli.seed.unwrap_or(cfg.seeds[0]);
    let k_b = cfg.check_k_b;
    match &cli.command {
        Command::GenTrace { kind, output } => {
            let beta = cli.beta.unwrap_or(0.1);
            let policy = cli.policy.unwrap_or(PolicyKind::Lru);
            let (trace, kind) = match kind {
                Kind::Zipf => (gen_zipf_trace(&cfg.zipf, seed)?, TraceKind::Zipf),
                Kind::Adversarial => (
                    gen_adversarial_trace(k_b, cfg.zipf.length_t)?,
                    TraceKind::Adversarial,
                ),
                Kind::Coupled => (
                    gen_coupled_trace(&cfg.zipf, beta, policy, k_b, seed)?,
                    TraceKind::Coupled,
                ),
                Kind::Perturbed => {
                    let base = gen_zipf_trace(&cfg.zipf, seed)?;
                    let p = perturb_trace(&base, beta, derive_seed(seed, tags::PERTURB))?;
                    (p.trace, TraceKind::Perturbed)
                }
            };
            let header = TraceHeader { seed, kind };
            match output {
                Some(path) => {
                    let file = File::create(path)
                        .with_context(|| format!("cannot create {}", path.display()))?;
                    let mut w = BufWriter::new(file);
                    write_trace(&mut w, &trace, header)?;
                    w.flush()?;
                }
                None => write_trace(io::stdout().lock(), &trace, header)?,
            }
        }
        Command::Simulate { trace_file } => {
            let (trace, beta) = match trace_file {
                Some(path) => (load_trace(path)?, cli.beta.unwrap_or(0.0)),
                None => {
                    let base = gen_zipf_trace(&cfg.zipf, seed)?;
                    match cli.beta {
                        Some(b) => (
                            perturb_trace(&base, b, derive_seed(seed, tags::PERTURB))?.trace,
                            b,
                        ),
                        None => (base, 0.0),
                    }
                }
            };
            if trace.is_empty() {
                bail!("empty trace: nothing to simulate");
            }
            let policy = cli.policy.unwrap_or(PolicyKind::Lru);
            let r = simulate(&trace, policy, k_b, seed)?;
            let opt = simulate(&trace, PolicyKind::Belady, k_b, seed)?.faults_total;
            let row = SimRow {
                policy,
                k_b,
                beta,
                seed,
                faults: r.faults_total,
                fault_rate: r.fault_rate(),
                ratio_vs_belady: r.faults_total as f64 / opt.max(1) as f64,
            };
            println!("{SIM_HEADER}");
            println!("{}", row.to_csv());
        }
        Command::Sweep
        | Command::Reproduce {
            figure: Figure::Fig3,
        } => {
            let sweep = experiment::run_sweep(&cfg, threads()?)?;
            report_files(&experiment::write_sweep(&cfg.output_dir, &sweep)?);
        }
        Command::Reproduce {
            figure: Figure::Fig4,
        } => {
            let fig4 = experiment::run_fig4(&cfg, threads()?)?;
            report_files(&experiment::write_fig4(&cfg.output_dir, &fig4)?);
        }
        Command::Validate => {
            let v = experiment::run_validation(&cfg, threads()?)?;
            report_files(&experiment::write_validation(&cfg.output_dir, &v)?);
            for reason in &v.skipped {
                eprintln!("skipped: {reason}");
            }
            let failed: Vec<_> = v.violations().collect();
            println!(
                "{} asserted bounds checked, {} violated",
                v.hard.len(),
                failed.len()
            );
            for r in &failed {
                println!("VIOLATED {}", paging_lab::experiment::csv::bound_row(r));
            }
            if !failed.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Oracle { blocks } => {
            let ids = parse_blocks(blocks)?;
            let trace = Trace::from_ids(&ids);
            let k = cli.k_b.unwrap_or(2);
            let belady = simulate(&trace, PolicyKind::Belady, k, seed)?.faults_total;
            let dp = dp_solve(&trace, k)?;
            println!("belady      {belady}");
            println!(
                "dp          {} (peak layer states {})",
                dp.min_faults, dp.peak_layer_states
            );
            let small = trace.universe_m() <= BRUTE_FORCE_MAX_M
                && trace.len() <= BRUTE_FORCE_MAX_T
                && k <= BRUTE_FORCE_MAX_KB;
            let brute = if small {
                Some(brute_force_min_faults(&trace, k)?)
            } else {
                None
            };
            match brute {
                Some(b) => println!("brute-force {b}"),
                None => println!("brute-force skipped (instance above its limits)"),
            }
            let agree = belady == dp.min_faults && brute.is_none_or(|b| b == belady);
            println!("{}", if agree { "optimal" } else { "MISMATCH" });
            if !agree {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Tm {
            action:
                TmAction::Run {
                    machine_file,
                    input,
                    block_size,
                    max_steps,
                },
        } => {
            let text = fs::read_to_string(machine_file)
                .with_context(|| format!("cannot read {}", machine_file.display()))?;
            let tm = parse_machine(&text, &machine_file.display().to_string())?;
            let r = simulate_tm(&tm, input, *block_size, *max_steps)?;
            println!("halted            {}", r.halted);
            println!("steps             {}", r.steps);
            println!("final_state       {}", r.final_state);
            println!("tape              {}", r.tape_string());
            println!("attention_ops     {}", r.attention_ops);
            println!("retrieval_queries {}", r.retrieval_queries);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn load_trace(path: &Path) -> Result<Trace> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let (trace, _) = read_trace(BufReader::new(file), &path.display().to_string())?;
    Ok(trace)
}

fn parse_blocks(args: &[String]) -> Result<Vec<u32>> {
    args.iter()
        .flat_map(|a| a.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u32>()
                .with_context(|| format!("invalid block id `{s}`"))
        })
        .collect()
}

fn report_files(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}
