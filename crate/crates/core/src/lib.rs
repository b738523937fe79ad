//! A deterministic laboratory for paging experiments.
//!
//! The crate generates block-request traces, runs eviction policies over
//! them (Belady's offline optimum, LRU, LFU, FIFO, Random and a noisy
//! Belady surrogate), certifies optimality on tiny instances with exact
//! oracles, checks fault-count bounds empirically, and simulates a Turing
//! machine over a block-addressed tape while counting the cost of doing so.
//!
//! Every stochastic choice flows from [`rng::SplitMix64`], so the same
//! seed reproduces the same trace, eviction log and report on any machine.
//!
//! ```
//! use paging_lab::{gen_zipf_trace, simulate, PolicyKind, ZipfSpec};
//!
//! let trace = gen_zipf_trace(&ZipfSpec::default(), 42)?;
//! let opt = simulate(&trace, PolicyKind::Belady, 8, 42)?;
//! let lru = simulate(&trace, PolicyKind::Lru, 8, 42)?;
//! assert!(opt.faults_total <= lru.faults_total);
//! # Ok::<(), paging_lab::Error>(())
//! ```
//!
//! The guide in `book/` walks through each part with runnable examples.

pub mod bounds;
pub mod cache;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod tm;
pub mod trace;

pub use cache::{
    build_next_use_index, policy_step, Aux, CacheState, NextUseIndex, PolicyKind, StepOutcome,
};
pub use error::{Error, Result};
pub use sim::{
    aggregate_seeds, competitive_ratio, cost_model, fault_rate, simulate, working_set_series,
    CostBreakdown, CostModelParams, SimResult, SummaryStats, WorkingSet,
};
pub use trace::{
    gen_adversarial_trace, gen_coupled_trace, gen_zipf_trace, hamming_distance, perturb_trace,
    BlockId, PerturbedTrace, Trace, ZipfSpec,
};

/// Compiles and runs the code in the guide as doctests.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/traces.md")]
    mod traces {}
    #[doc = include_str!("../../../book/src/policies.md")]
    mod policies {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/turing.md")]
    mod turing {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
