//! Exact minimum-fault oracles for tiny instances.
//!
//! Both oracles force admission on every miss (no bypass) and start from an
//! empty cache, exactly like the simulated policies. Cache contents are
//! bitmasks over the universe, so `M` is capped well below 64.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::trace::Trace;

/// Limits for [`brute_force_min_faults`].
pub const BRUTE_FORCE_MAX_M: usize = 6;
pub const BRUTE_FORCE_MAX_T: usize = 14;
pub const BRUTE_FORCE_MAX_KB: usize = 3;

/// Limits for [`dp_min_faults`].
pub const DP_MAX_M: usize = 12;
pub const DP_MAX_T: usize = 64;
pub const DP_MAX_KB: usize = 6;

type Mask = u32;

fn guard(trace: &Trace, k_b: usize, limits: (usize, usize, usize), name: &str) -> Result<()> {
    let (max_m, max_t, max_k) = limits;
    if k_b == 0 {
        return Err(Error::config("cache capacity K_b must be at least 1"));
    }
    if trace.universe_m() > max_m || trace.len() > max_t || k_b > max_k {
        return Err(Error::usage(format!(
            "{name} handles M <= {max_m}, T <= {max_t}, K_b <= {max_k}; \
             got M = {}, T = {}, K_b = {k_b}",
            trace.universe_m(),
            trace.len()
        )));
    }
    Ok(())
}

fn masks(trace: &Trace) -> Vec<Mask> {
    trace.requests().iter().map(|b| 1 << b.0).collect()
}

/// Minimum fault count found by branching on every legal eviction at every
/// capacity miss. Exponential; guarded by the `BRUTE_FORCE_*` limits.
pub fn brute_force_min_faults(trace: &Trace, k_b: usize) -> Result<usize> {
    guard(
        trace,
        k_b,
        (BRUTE_FORCE_MAX_M, BRUTE_FORCE_MAX_T, BRUTE_FORCE_MAX_KB),
        "brute-force oracle",
    )?;
    Ok(explore(&masks(trace), 0, k_b))
}

fn explore(reqs: &[Mask], cache: Mask, k_b: usize) -> usize {
    let Some((&r, rest)) = reqs.split_first() else {
        return 0;
    };
    if cache & r != 0 {
        return explore(rest, cache, k_b);
    }
    if (cache.count_ones() as usize) < k_b {
        return 1 + explore(rest, cache | r, k_b);
    }
    let mut best = usize::MAX;
    let mut remaining = cache;
    while remaining != 0 {
        let victim = remaining & remaining.wrapping_neg();
        remaining &= remaining - 1;
        best = best.min(explore(rest, (cache & !victim) | r, k_b));
    }
    1 + best
}

/// Result of the backward-induction solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpSolution {
    pub min_faults: usize,
    /// Largest number of states held in a single value layer.
    pub peak_layer_states: usize,
}

/// Minimum fault count by finite-horizon backward induction.
pub fn dp_min_faults(trace: &Trace, k_b: usize) -> Result<usize> {
    dp_solve(trace, k_b).map(|s| s.min_faults)
}

/// Backward induction over cache states, one layer per step.
///
/// `V_t(S)` is the fewest faults on requests `t..T` starting from cache
/// `S`, with `V_T = 0`. Layer `t` is computed from layer `t + 1` alone and
/// replaces it, so storage never exceeds one layer plus the one being built.
/// The states of layer `t` are those reachable after serving `0..t`: the set
/// of distinct blocks seen so far while it fits, afterwards every
/// `K_b`-subset of those blocks that contains the last request.
pub fn dp_solve(trace: &Trace, k_b: usize) -> Result<DpSolution> {
    guard(
        trace,
        k_b,
        (DP_MAX_M, DP_MAX_T, DP_MAX_KB),
        "dynamic-programming oracle",
    )?;
    let reqs = masks(trace);
    let t_len = reqs.len();

    // seen[t] = blocks requested in 0..t
    let mut seen = vec![0 as Mask; t_len + 1];
    for t in 0..t_len {
        seen[t + 1] = seen[t] | reqs[t];
    }

    let mut next: HashMap<Mask, usize> = layer_states(&seen, &reqs, t_len, k_b)
        .into_iter()
        .map(|s| (s, 0))
        .collect();
    let mut peak = next.len();

    for t in (0..t_len).rev() {
        let r = reqs[t];
        let mut layer = HashMap::new();
        for s in layer_states(&seen, &reqs, t, k_b) {
            let value = if s & r != 0 {
                next[&s]
            } else if (s.count_ones() as usize) < k_b {
                1 + next[&(s | r)]
            } else {
                let mut best = usize::MAX;
                let mut remaining = s;
                while remaining != 0 {
                    let victim = remaining & remaining.wrapping_neg();
                    remaining &= remaining - 1;
                    best = best.min(next[&((s & !victim) | r)]);
                }
                1 + best
            };
            layer.insert(s, value);
        }
        peak = peak.max(layer.len());
        next = layer;
    }

    Ok(DpSolution {
        min_faults: next[&0],
        peak_layer_states: peak,
    })
}

fn layer_states(seen: &[Mask], reqs: &[Mask], t: usize, k_b: usize) -> Vec<Mask> {
    let pool = seen[t];
    if (pool.count_ones() as usize) <= k_b {
        return vec![pool];
    }
    // Cache is full: K_b-subsets of `pool` containing the last request.
    let last = reqs[t - 1];
    let others: Vec<Mask> = bits(pool & !last).collect();
    let mut out = Vec::new();
    choose(&others, k_b - 1, 0, last, &mut out);
    out
}

fn bits(mut m: Mask) -> impl Iterator<Item = Mask> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let low = m & m.wrapping_neg();
            m &= m - 1;
            low
        })
    })
}

fn choose(items: &[Mask], k: usize, start: usize, acc: Mask, out: &mut Vec<Mask>) {
    if k == 0 {
        out.push(acc);
        return;
    }
    for i in start..items.len() {
        if items.len() - i < k {
            break;
        }
        choose(items, k - 1, i + 1, acc | items[i], out);
    }
}

/// `C(n, k)` in floating point, for reporting the layer-size budget.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
