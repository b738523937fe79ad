use super::zipf::ZipfSampler;
use super::{Trace, ZipfSpec};
use crate::cache::{Aux, CacheState, PolicyKind};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, tags, SplitMix64};

/// Generates a request stream that reacts to the policy serving it.
///
/// Each step first draws the exogenous Zipf request (the same stream as
/// [`super::gen_zipf_trace`] with `seed`), then a coupling coin from a
/// separate stream. With probability `beta_true` the step instead requests
/// the block the running policy evicted most recently; before the first
/// eviction the exogenous request is used. Randomized policies draw from a
/// third stream, so the exogenous stream never shifts.
///
/// Offline policies are rejected: their next-use index would depend on the
/// very stream being generated.
pub fn gen_coupled_trace(
    spec: &ZipfSpec,
    beta_true: f64,
    policy: PolicyKind,
    k_b: usize,
    seed: u64,
) -> Result<Trace> {
    if !(0.0..=1.0).contains(&beta_true) {
        return Err(Error::config(format!(
            "beta_true must lie in [0, 1], got {beta_true}"
        )));
    }
    if policy.needs_next_use() {
        return Err(Error::usage(format!(
            "{policy} is offline and cannot drive a policy-coupled trace"
        )));
    }
    policy.validate()?;

    let mut sampler = ZipfSampler::new(spec)?;
    let mut exogenous = SplitMix64::new(seed);
    let mut coupling = SplitMix64::new(derive_seed(seed, tags::COUPLING));
    let mut policy_rng = SplitMix64::new(derive_seed(seed, tags::POLICY));
    let mut cache = CacheState::new(k_b)?;
    let mut last_evicted = None;

    let mut requests = Vec::with_capacity(spec.length_t);
    for t in 0..spec.length_t {
        let exo = sampler.next(t, &mut exogenous);
        let coin = coupling.next_f64();
        let request = match last_evicted {
            Some(b) if coin < beta_true => b,
            _ => exo,
        };
        let mut aux = Aux {
            next_use: None,
            rng: Some(&mut policy_rng),
        };
        let outcome = cache.step(policy, request, t, &mut aux)?;
        if outcome.evicted.is_some() {
            last_evicted = outcome.evicted;
        }
        requests.push(request);
    }
    Ok(Trace {
        requests,
        universe_m: spec.universe_m,
        phase_boundaries: sampler.phase_boundaries(),
    })
}
