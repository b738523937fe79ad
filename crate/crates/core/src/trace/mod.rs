//! Block-request traces: generation, perturbation, comparison and the
//! line-oriented text format.

mod coupled;
mod io;
mod zipf;

pub use coupled::gen_coupled_trace;
pub use io::{read_trace, write_trace, TraceHeader, TraceKind};
pub use zipf::{gen_zipf_trace, ZipfSpec};

use std::fmt;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Opaque identifier of a block, in `[0, M)` for the owning trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub u32);

impl BlockId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<u32> for BlockId {
    fn from(v: u32) -> Self {
        BlockId(v)
    }
}

/// A finite request sequence over a universe of `universe_m` blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    requests: Vec<BlockId>,
    universe_m: usize,
    phase_boundaries: Vec<usize>,
}

impl Trace {
    /// Builds a trace, checking that every request lies in `[0, universe_m)`.
    pub fn new(requests: Vec<BlockId>, universe_m: usize) -> Result<Self> {
        if let Some((t, b)) = requests
            .iter()
            .enumerate()
            .find(|(_, b)| b.index() >= universe_m)
        {
            return Err(Error::config(format!(
                "request {b} at step {t} is outside the universe of {universe_m} blocks"
            )));
        }
        Ok(Trace {
            requests,
            universe_m,
            phase_boundaries: Vec::new(),
        })
    }

    /// Convenience constructor from raw ids; the universe is `max + 1`.
    pub fn from_ids(ids: &[u32]) -> Self {
        let universe_m = ids.iter().max().map_or(1, |&m| m as usize + 1);
        Trace {
            requests: ids.iter().copied().map(BlockId).collect(),
            universe_m,
            phase_boundaries: Vec::new(),
        }
    }

    pub fn requests(&self) -> &[BlockId] {
        &self.requests
    }

    pub fn universe_m(&self) -> usize {
        self.universe_m
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    /// Step indices at which a new phase starts (the first phase, at 0, is
    /// implicit).
    pub fn phase_boundaries(&self) -> &[usize] {
        &self.phase_boundaries
    }

    /// Number of distinct blocks that occur in the trace.
    pub fn distinct_blocks(&self) -> usize {
        let mut seen = vec![false; self.universe_m];
        self.requests
            .iter()
            .filter(|b| !std::mem::replace(&mut seen[b.index()], true))
            .count()
    }
}

/// A trace together with the exact positions that were altered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedTrace {
    pub trace: Trace,
    pub hamming_d: usize,
    pub flipped_positions: Vec<usize>,
}

/// Replaces exactly `floor(beta * T)` distinct positions of `base`, each with
/// a block drawn uniformly from the `M - 1` blocks other than the original.
///
/// Positions come from a partial Fisher-Yates pass over `0..T`, then each
/// replacement is drawn in ascending position order.
pub fn perturb_trace(base: &Trace, beta: f64, seed: u64) -> Result<PerturbedTrace> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::config(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    if base.is_empty() {
        return Err(Error::usage("cannot perturb an empty trace"));
    }
    let t = base.len();
    let d = flips_for(beta, t);
    let m = base.universe_m();
    if d > 0 && m < 2 {
        return Err(Error::config(
            "perturbation needs at least two blocks in the universe",
        ));
    }

    let mut rng = SplitMix64::new(seed);
    let mut positions: Vec<usize> = (0..t).collect();
    for i in 0..d {
        let j = i + rng.below(t - i);
        positions.swap(i, j);
    }
    positions.truncate(d);
    positions.sort_unstable();

    let mut requests = base.requests().to_vec();
    for &pos in &positions {
        let original = requests[pos].0;
        let mut pick = rng.below(m - 1) as u32;
        if pick >= original {
            pick += 1;
        }
        requests[pos] = BlockId(pick);
    }

    Ok(PerturbedTrace {
        trace: Trace {
            requests,
            universe_m: m,
            phase_boundaries: base.phase_boundaries.clone(),
        },
        hamming_d: d,
        flipped_positions: positions,
    })
}

/// `floor(beta * t)`, guarded against representation error so that values
/// such as `0.1 * 5000` land on the intended integer.
pub fn flips_for(beta: f64, t: usize) -> usize {
    let raw = beta * t as f64;
    let nearest = raw.round();
    if (raw - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        raw.floor() as usize
    }
}

/// The classical adversarial cycle over `k_blocks + 1` blocks:
/// `requests[t] = t mod (k_blocks + 1)`.
pub fn gen_adversarial_trace(k_blocks: usize, length_t: usize) -> Result<Trace> {
    if k_blocks == 0 {
        return Err(Error::config("adversarial trace needs k_blocks >= 1"));
    }
    let m = k_blocks + 1;
    let requests = (0..length_t).map(|t| BlockId((t % m) as u32)).collect();
    Ok(Trace {
        requests,
        universe_m: m,
        phase_boundaries: Vec::new(),
    })
}

/// Number of positions where `a` and `b` differ.
pub fn hamming_distance(a: &Trace, b: &Trace) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::usage(format!(
            "hamming distance needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.requests
        .iter()
        .zip(&b.requests)
        .filter(|(x, y)| x != y)
        .count())
}
