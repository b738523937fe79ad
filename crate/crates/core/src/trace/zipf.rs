use super::{BlockId, Trace};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Parameters of the non-stationary Zipf workload.
///
/// Each phase draws a hot set of `hot_set_size` blocks uniformly without
/// replacement from the `M` blocks, in random rank order. Requests within
/// the phase follow `rank^(-alpha)` over the hot set only. Every
/// `shift_interval` steps a fresh hot set is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct ZipfSpec {
    pub universe_m: usize,
    pub exponent_alpha: f64,
    pub hot_set_size: usize,
    pub shift_interval: usize,
    pub length_t: usize,
}

impl Default for ZipfSpec {
    fn default() -> Self {
        ZipfSpec {
            universe_m: 64,
            exponent_alpha: 1.2,
            hot_set_size: 16,
            shift_interval: 500,
            length_t: 5000,
        }
    }
}

impl ZipfSpec {
    pub fn validate(&self) -> Result<()> {
        if self.universe_m == 0 {
            return Err(Error::config("zipf.universe_m must be at least 1"));
        }
        if self.universe_m > u32::MAX as usize {
            return Err(Error::config("zipf.universe_m does not fit a block id"));
        }
        if self.hot_set_size == 0 {
            return Err(Error::config("zipf.hot_set_size must be at least 1"));
        }
        if self.hot_set_size > self.universe_m {
            return Err(Error::config(format!(
                "zipf.hot_set_size ({}) exceeds zipf.universe_m ({})",
                self.hot_set_size, self.universe_m
            )));
        }
        if !(self.exponent_alpha > 0.0 && self.exponent_alpha.is_finite()) {
            return Err(Error::config(format!(
                "zipf.exponent_alpha must be a positive real, got {}",
                self.exponent_alpha
            )));
        }
        if self.shift_interval == 0 {
            return Err(Error::config("zipf.shift_interval must be at least 1"));
        }
        Ok(())
    }

    /// Cumulative distribution over hot-set ranks, normalized so the last
    /// entry is exactly 1.
    fn rank_cdf(&self) -> Vec<f64> {
        let weights: Vec<f64> = (1..=self.hot_set_size)
            .map(|r| (r as f64).powf(-self.exponent_alpha))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        cdf
    }
}

/// Draws a Zipf-rank index by inverse CDF.
pub(crate) struct ZipfSampler {
    cdf: Vec<f64>,
    spec: ZipfSpec,
    ranking: Vec<u32>,
}

impl ZipfSampler {
    pub(crate) fn new(spec: &ZipfSpec) -> Result<Self> {
        spec.validate()?;
        Ok(ZipfSampler {
            cdf: spec.rank_cdf(),
            spec: spec.clone(),
            ranking: (0..spec.universe_m as u32).collect(),
        })
    }

    /// Produces the request for step `t`, reshuffling the ranking at phase
    /// starts. Phase shuffles draw from `rng` before that step's request.
    pub(crate) fn next(&mut self, t: usize, rng: &mut SplitMix64) -> BlockId {
        if t.is_multiple_of(self.spec.shift_interval) {
            // One shuffle of the identity fixes both the hot set (first
            // `hot_set_size` entries) and its rank order.
            self.ranking.sort_unstable();
            rng.shuffle(&mut self.ranking);
        }
        let u = rng.next_f64();
        let rank = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        BlockId(self.ranking[rank])
    }

    pub(crate) fn phase_boundaries(&self) -> Vec<usize> {
        (1..)
            .map(|i| i * self.spec.shift_interval)
            .take_while(|&b| b < self.spec.length_t)
            .collect()
    }
}

/// Generates a non-stationary Zipf trace, deterministic in `(spec, seed)`.
pub fn gen_zipf_trace(spec: &ZipfSpec, seed: u64) -> Result<Trace> {
    let mut sampler = ZipfSampler::new(spec)?;
    let mut rng = SplitMix64::new(seed);
    let requests = (0..spec.length_t)
        .map(|t| sampler.next(t, &mut rng))
        .collect();
    let phases = sampler.phase_boundaries();
    Ok(Trace {
        requests,
        universe_m: spec.universe_m,
        phase_boundaries: phases,
    })
}
