//! Cache state and the eviction rules.
//!
//! Eviction tie-breaks are fixed so that runs are reproducible:
//!
//! * Belady: the block with the farthest next use; blocks never used again
//!   beat every finite next use, and among them the smallest id goes first.
//! * LFU: fewest accesses since admission, then least recently used, then
//!   smallest id. Counters reset when a block is evicted.
//! * Random and the wrong branch of noisy Belady draw uniformly over the
//!   candidates listed in ascending id order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::trace::{BlockId, Trace};

/// Sentinel next-use position for a block that is never requested again.
pub const NEVER: usize = usize::MAX;

/// Eviction policy selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    Belady,
    Lru,
    Lfu,
    Fifo,
    Random,
    /// Picks the Belady victim with probability `p`, otherwise a uniformly
    /// random other resident block.
    NoisyBelady(f64),
}

impl PolicyKind {
    /// The five baseline policies, in reporting order.
    pub const BASELINES: [PolicyKind; 5] = [
        PolicyKind::Belady,
        PolicyKind::Lru,
        PolicyKind::Lfu,
        PolicyKind::Fifo,
        PolicyKind::Random,
    ];

    pub fn needs_next_use(self) -> bool {
        matches!(self, PolicyKind::Belady | PolicyKind::NoisyBelady(_))
    }

    pub fn needs_rng(self) -> bool {
        matches!(self, PolicyKind::Random | PolicyKind::NoisyBelady(_))
    }

    pub fn is_deterministic(self) -> bool {
        !self.needs_rng()
    }

    /// Position in [`PolicyKind::BASELINES`], with noisy Belady last; used
    /// as a stable sort key for reports.
    pub fn order_key(self) -> (usize, u64) {
        match self {
            PolicyKind::Belady => (0, 0),
            PolicyKind::Lru => (1, 0),
            PolicyKind::Lfu => (2, 0),
            PolicyKind::Fifo => (3, 0),
            PolicyKind::Random => (4, 0),
            PolicyKind::NoisyBelady(p) => (5, p.to_bits()),
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            PolicyKind::NoisyBelady(p) if !(0.0..=1.0).contains(&p) => Err(Error::config(format!(
                "noisy Belady accuracy must lie in [0, 1], got {p}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Belady => f.write_str("belady"),
            PolicyKind::Lru => f.write_str("lru"),
            PolicyKind::Lfu => f.write_str("lfu"),
            PolicyKind::Fifo => f.write_str("fifo"),
            PolicyKind::Random => f.write_str("random"),
            PolicyKind::NoisyBelady(p) => write!(f, "noisy-belady:{p}"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    /// Accepts `belady`, `lru`, `lfu`, `fifo`, `random` and
    /// `noisy-belady:<p>` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "belady" | "opt" => PolicyKind::Belady,
            "lru" => PolicyKind::Lru,
            "lfu" => PolicyKind::Lfu,
            "fifo" => PolicyKind::Fifo,
            "random" => PolicyKind::Random,
            other => {
                let p = other
                    .strip_prefix("noisy-belady:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| Error::usage(format!("unknown policy `{s}`")))?;
                PolicyKind::NoisyBelady(p)
            }
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// For each step `t`, the next step at which the same block is requested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NextUseIndex {
    next_use: Vec<usize>,
}

impl NextUseIndex {
    /// Entry `t`, or [`NEVER`].
    pub fn get(&self, t: usize) -> usize {
        self.next_use[t]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.next_use
    }

    pub fn len(&self) -> usize {
        self.next_use.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next_use.is_empty()
    }
}

/// Backward scan keeping the last position seen for each block. O(T + M).
pub fn build_next_use_index(trace: &Trace) -> NextUseIndex {
    let mut last_seen = vec![NEVER; trace.universe_m()];
    let mut next_use = vec![NEVER; trace.len()];
    for (t, b) in trace.requests().iter().enumerate().rev() {
        next_use[t] = last_seen[b.index()];
        last_seen[b.index()] = t;
    }
    NextUseIndex { next_use }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Meta {
    last_access: usize,
    access_count: u64,
    insertion_order: u64,
    next_use: usize,
}

/// Resident blocks with per-block recency, frequency and insertion metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheState {
    capacity_kb: usize,
    resident: BTreeMap<BlockId, Meta>,
    insertions: u64,
}

/// What a single request did to the cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub fault: bool,
    pub evicted: Option<BlockId>,
    pub admitted: Option<BlockId>,
}

/// Side inputs some policies need: the offline next-use index for Belady
/// variants and a random stream for randomized policies.
#[derive(Default)]
pub struct Aux<'a> {
    pub next_use: Option<&'a NextUseIndex>,
    pub rng: Option<&'a mut SplitMix64>,
}

impl CacheState {
    pub fn new(capacity_kb: usize) -> Result<Self> {
        if capacity_kb == 0 {
            return Err(Error::config("cache capacity K_b must be at least 1"));
        }
        Ok(CacheState {
            capacity_kb,
            resident: BTreeMap::new(),
            insertions: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity_kb
    }

    pub fn len(&self) -> usize {
        self.resident.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resident.is_empty()
    }

    pub fn contains(&self, b: BlockId) -> bool {
        self.resident.contains_key(&b)
    }

    /// Resident blocks in ascending id order.
    pub fn resident(&self) -> impl Iterator<Item = BlockId> + '_ {
        self.resident.keys().copied()
    }

    pub fn last_access(&self, b: BlockId) -> Option<usize> {
        self.resident.get(&b).map(|m| m.last_access)
    }

    pub fn access_count(&self, b: BlockId) -> Option<u64> {
        self.resident.get(&b).map(|m| m.access_count)
    }

    pub fn insertion_order(&self, b: BlockId) -> Option<u64> {
        self.resident.get(&b).map(|m| m.insertion_order)
    }

    /// Serves `request` at step `t` under `kind`.
    pub fn step(
        &mut self,
        kind: PolicyKind,
        request: BlockId,
        t: usize,
        aux: &mut Aux<'_>,
    ) -> Result<StepOutcome> {
        let next_use = if kind.needs_next_use() {
            let index = aux
                .next_use
                .ok_or_else(|| Error::usage(format!("{kind} needs a next-use index")))?;
            if t >= index.len() {
                return Err(Error::usage(format!(
                    "step {t} is beyond the next-use index of length {}",
                    index.len()
                )));
            }
            index.get(t)
        } else {
            NEVER
        };
        if kind.needs_rng() && aux.rng.is_none() {
            return Err(Error::usage(format!("{kind} needs a random stream")));
        }

        if let Some(meta) = self.resident.get_mut(&request) {
            meta.last_access = t;
            meta.access_count += 1;
            meta.next_use = next_use;
            return Ok(StepOutcome {
                fault: false,
                evicted: None,
                admitted: None,
            });
        }

        let evicted = if self.resident.len() >= self.capacity_kb {
            let victim = self.choose_victim(kind, aux)?;
            self.resident.remove(&victim);
            Some(victim)
        } else {
            None
        };
        self.insertions += 1;
        self.resident.insert(
            request,
            Meta {
                last_access: t,
                access_count: 1,
                insertion_order: self.insertions,
                next_use,
            },
        );
        Ok(StepOutcome {
            fault: true,
            evicted,
            admitted: Some(request),
        })
    }

    fn choose_victim(&self, kind: PolicyKind, aux: &mut Aux<'_>) -> Result<BlockId> {
        let entries = || self.resident.iter().map(|(b, m)| (*b, m));
        let victim = match kind {
            PolicyKind::Belady => self.belady_victim(),
            PolicyKind::Lru => entries().min_by_key(|(_, m)| m.last_access).map(|(b, _)| b),
            PolicyKind::Lfu => entries()
                .min_by_key(|(b, m)| (m.access_count, m.last_access, *b))
                .map(|(b, _)| b),
            PolicyKind::Fifo => entries()
                .min_by_key(|(_, m)| m.insertion_order)
                .map(|(b, _)| b),
            PolicyKind::Random => {
                let rng = aux.rng.as_deref_mut().expect("checked in step");
                self.resident
                    .keys()
                    .nth(rng.below(self.resident.len()))
                    .copied()
            }
            PolicyKind::NoisyBelady(p) => {
                let best = self.belady_victim();
                if self.resident.len() == 1 {
                    best
                } else {
                    let rng = aux.rng.as_deref_mut().expect("checked in step");
                    if rng.next_f64() < p {
                        best
                    } else {
                        let pick = rng.below(self.resident.len() - 1);
                        self.resident
                            .keys()
                            .filter(|&&b| Some(b) != best)
                            .nth(pick)
                            .copied()
                    }
                }
            }
        };
        victim.ok_or_else(|| Error::usage("eviction requested from an empty cache"))
    }

    fn belady_victim(&self) -> Option<BlockId> {
        // Iterating in ascending id order and keeping the first maximum
        // resolves ties between never-used-again blocks to the smallest id.
        let mut best: Option<(BlockId, usize)> = None;
        for (b, m) in &self.resident {
            if best.is_none_or(|(_, n)| m.next_use > n) {
                best = Some((*b, m.next_use));
            }
        }
        best.map(|(b, _)| b)
    }
}

/// Functional form of [`CacheState::step`].
pub fn policy_step(
    kind: PolicyKind,
    mut cache: CacheState,
    request: BlockId,
    t: usize,
    aux: &mut Aux<'_>,
) -> Result<(StepOutcome, CacheState)> {
    let outcome = cache.step(kind, request, t, aux)?;
    Ok((outcome, cache))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(kind: PolicyKind, ids: &[u32], k: usize, seed: u64) -> (usize, Vec<(usize, BlockId)>) {
        let trace = Trace::from_ids(ids);
        let index = build_next_use_index(&trace);
        let mut rng = SplitMix64::new(seed);
        let mut cache = CacheState::new(k).unwrap();
        let mut faults = 0;
        let mut log = Vec::new();
        for (t, &b) in trace.requests().iter().enumerate() {
            let mut aux = Aux {
                next_use: Some(&index),
                rng: Some(&mut rng),
            };
            let out = cache.step(kind, b, t, &mut aux).unwrap();
            assert!(cache.len() <= k);
            faults += out.fault as usize;
            if let Some(e) = out.evicted {
                log.push((t, e));
            }
        }
        (faults, log)
    }

    #[test]
    fn next_use_examples() {
        // Positions are 0-indexed here; the hand scan of [1,2,1,3] gives the
        // 1-indexed [3, inf, inf, inf].
        let idx = build_next_use_index(&Trace::from_ids(&[1, 2, 1, 3]));
        assert_eq!(idx.as_slice(), &[2, NEVER, NEVER, NEVER]);
        let idx = build_next_use_index(&Trace::from_ids(&[5]));
        assert_eq!(idx.as_slice(), &[NEVER]);
        let idx = build_next_use_index(&Trace::from_ids(&[2, 2, 2]));
        assert_eq!(idx.as_slice(), &[1, 2, NEVER]);
    }

    #[test]
    fn lru_hand_simulation() {
        let (faults, log) = run(PolicyKind::Lru, &[1, 2, 1, 3, 2], 2, 0);
        assert_eq!(faults, 4);
        assert_eq!(log, vec![(3, BlockId(2)), (4, BlockId(1))]);
    }

    #[test]
    fn belady_hand_simulation() {
        let (faults, log) = run(PolicyKind::Belady, &[1, 2, 1, 3, 2], 2, 0);
        assert_eq!(faults, 3);
        assert_eq!(log, vec![(3, BlockId(1))]);
    }

    #[test]
    fn belady_tie_prefers_smallest_id() {
        // At step 2 both resident blocks (4 and 7) are never used again.
        let (_, log) = run(PolicyKind::Belady, &[7, 4, 1], 2, 0);
        assert_eq!(log, vec![(2, BlockId(4))]);
    }

    #[test]
    fn noisy_belady_at_one_matches_belady() {
        let ids: Vec<u32> = (0..400u32).map(|i| (i * 7 + i / 3) % 11).collect();
        for k in 1..6 {
            assert_eq!(
                run(PolicyKind::NoisyBelady(1.0), &ids, k, 3),
                run(PolicyKind::Belady, &ids, k, 99)
            );
        }
    }

    #[test]
    fn lfu_ties_fall_back_to_recency_then_id() {
        // 0 and 1 both have count 1; 0 was used less recently.
        let (_, log) = run(PolicyKind::Lfu, &[0, 1, 2], 2, 0);
        assert_eq!(log, vec![(2, BlockId(0))]);
        // 0 has count 2, so the singleton 1 goes even though 0 is older.
        let (_, log) = run(PolicyKind::Lfu, &[0, 0, 1, 2], 2, 0);
        assert_eq!(log, vec![(3, BlockId(1))]);
    }

    #[test]
    fn lfu_counter_resets_on_eviction() {
        let (_, log) = run(PolicyKind::Lfu, &[0, 0, 0, 1, 2, 0, 3], 2, 0);
        // 0 (count 3) survives; 1 then 2 are evicted.
        assert_eq!(log, vec![(4, BlockId(1)), (6, BlockId(2))]);
        let mut cache = CacheState::new(1).unwrap();
        let mut aux = Aux::default();
        cache
            .step(PolicyKind::Lfu, BlockId(0), 0, &mut aux)
            .unwrap();
        cache
            .step(PolicyKind::Lfu, BlockId(0), 1, &mut aux)
            .unwrap();
        cache
            .step(PolicyKind::Lfu, BlockId(1), 2, &mut aux)
            .unwrap();
        cache
            .step(PolicyKind::Lfu, BlockId(0), 3, &mut aux)
            .unwrap();
        assert_eq!(cache.access_count(BlockId(0)), Some(1));
    }

    #[test]
    fn fifo_ignores_hits() {
        let (_, log) = run(PolicyKind::Fifo, &[0, 1, 0, 2], 2, 0);
        assert_eq!(log, vec![(3, BlockId(0))]);
    }

    #[test]
    fn hits_leave_resident_set_alone() {
        let mut cache = CacheState::new(3).unwrap();
        let mut aux = Aux::default();
        for (t, b) in [0u32, 1, 2].into_iter().enumerate() {
            cache
                .step(PolicyKind::Lru, BlockId(b), t, &mut aux)
                .unwrap();
        }
        let before: Vec<_> = cache.resident().collect();
        let out = cache
            .step(PolicyKind::Lru, BlockId(1), 3, &mut aux)
            .unwrap();
        assert!(!out.fault && out.evicted.is_none() && out.admitted.is_none());
        assert_eq!(cache.resident().collect::<Vec<_>>(), before);
        assert_eq!(cache.last_access(BlockId(1)), Some(3));
        assert_eq!(cache.access_count(BlockId(1)), Some(2));
        assert_eq!(cache.insertion_order(BlockId(1)), Some(2));
    }

    #[test]
    fn missing_aux_is_usage_error() {
        let mut cache = CacheState::new(2).unwrap();
        let mut aux = Aux::default();
        for kind in [
            PolicyKind::Belady,
            PolicyKind::Random,
            PolicyKind::NoisyBelady(0.5),
        ] {
            assert!(matches!(
                cache.step(kind, BlockId(0), 0, &mut aux),
                Err(Error::Usage(_))
            ));
        }
    }

    #[test]
    fn zero_capacity_rejected() {
        assert!(matches!(CacheState::new(0), Err(Error::Config(_))));
    }

    #[test]
    fn random_is_seed_deterministic() {
        let ids: Vec<u32> = (0..300u32).map(|i| (i * 13 + 5) % 9).collect();
        assert_eq!(
            run(PolicyKind::Random, &ids, 3, 11),
            run(PolicyKind::Random, &ids, 3, 11)
        );
    }

    #[test]
    fn noisy_single_slot_evicts_the_only_block() {
        let (faults, log) = run(PolicyKind::NoisyBelady(0.0), &[0, 1, 0], 1, 1);
        assert_eq!(faults, 3);
        assert_eq!(log, vec![(1, BlockId(0)), (2, BlockId(1))]);
    }

    #[test]
    fn noisy_zero_never_picks_belady_victim() {
        let ids: Vec<u32> = (0..300u32).map(|i| (i * 7 + i / 5) % 6).collect();
        let trace = Trace::from_ids(&ids);
        let index = build_next_use_index(&trace);
        let mut rng = SplitMix64::new(4);
        let mut cache = CacheState::new(3).unwrap();
        for (t, &b) in trace.requests().iter().enumerate() {
            let expected_not = if cache.contains(b) || cache.len() < 3 {
                None
            } else {
                cache.belady_victim()
            };
            let mut aux = Aux {
                next_use: Some(&index),
                rng: Some(&mut rng),
            };
            let out = cache
                .step(PolicyKind::NoisyBelady(0.0), b, t, &mut aux)
                .unwrap();
            if let Some(bad) = expected_not {
                assert_ne!(out.evicted, Some(bad));
            }
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for kind in PolicyKind::BASELINES
            .into_iter()
            .chain([PolicyKind::NoisyBelady(0.25)])
        {
            assert_eq!(kind.to_string().parse::<PolicyKind>().unwrap(), kind);
        }
        assert!("noisy-belady:1.5".parse::<PolicyKind>().is_err());
        assert!("arc".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn functional_step_form() {
        let cache = CacheState::new(1).unwrap();
        let (out, cache) =
            policy_step(PolicyKind::Fifo, cache, BlockId(3), 0, &mut Aux::default()).unwrap();
        assert!(out.fault);
        assert!(cache.contains(BlockId(3)));
    }
}
