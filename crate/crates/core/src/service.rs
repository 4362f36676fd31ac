//! Statistical service envelopes and their composition along a path.
//!
//! A [`ServiceEnvelope`] `(S, ε_s)` asserts `P{S(s,t) < S(t-s) - σ} <= ε_s(σ)`
//! for the service process `S` of a node, where `S` satisfies `D >= A ⊗ S`
//! on every sample path. Only the envelope is represented here; realized
//! service processes exist in the simulator.

use crate::bounds::partition::{self, combine};
use crate::error::{require_positive, Error, Result};
use crate::minplus::{convolve, Curve};
use crate::traffic::{tail_sum, ArrivalEnvelope, ExpError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ConstantRate,
    Leftover,
    Composed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceEnvelope {
    pub curve: Curve,
    pub error: ExpError,
    pub provenance: Provenance,
}

/// A work-conserving link of rate `capacity`: deterministic service `C t`.
pub fn constant_rate_service(capacity: f64) -> Result<ServiceEnvelope> {
    require_positive("capacity", capacity)?;
    Ok(ServiceEnvelope {
        curve: Curve::linear(capacity)?,
        error: ExpError::zero(),
        provenance: Provenance::ConstantRate,
    })
}

/// Service left over for a flow of rate `through_rate` after cross traffic
/// bounded by `cross` takes its share: `S(t) = S_agg(t) - G_c(t)`.
///
/// The two error terms are merged with the optimal σ split; with a
/// deterministic aggregate this is just the cross-traffic error.
pub fn leftover_service(
    agg: &ServiceEnvelope,
    cross: &ArrivalEnvelope,
    through_rate: f64,
) -> Result<ServiceEnvelope> {
    let rate = agg.curve.terminal_slope();
    let demand = through_rate + cross.curve.terminal_slope();
    if !(rate >= demand) {
        return Err(Error::Unstable { demand, rate });
    }
    Ok(ServiceEnvelope {
        curve: agg.curve.sub(&cross.curve)?,
        error: combine(&[agg.error, cross.error]),
        provenance: Provenance::Leftover,
    })
}

/// End-to-end service of a tandem path.
///
/// `curve` is the min-plus convolution of the hop curves; the rate
/// correction `delta` is applied by the bound computations. `error_terms` holds one tail-summed term per hop; the
/// network error at σ is the best split of σ among them.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkService {
    pub curve: Curve,
    pub error_terms: Vec<ExpError>,
    /// Rate correction δ, bits/second.
    pub delta: f64,
    /// Discrete time step of the tail sums, seconds.
    pub slot: f64,
    pub hops: usize,
}

impl NetworkService {
    /// A path with no service element: the identity curve and no error.
    pub fn passthrough(delta: f64, slot: f64) -> Result<Self> {
        require_positive("delta", delta)?;
        require_positive("slot", slot)?;
        Ok(Self {
            curve: Curve::identity(),
            error_terms: vec![],
            delta,
            slot,
            hops: 0,
        })
    }

    /// Sample-path violation probability of the network envelope at σ.
    pub fn error_at(&self, sigma: f64) -> Result<f64> {
        if self.error_terms.is_empty() {
            return Ok(0.0);
        }
        partition::partition_infimum(&self.error_terms, sigma)
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::Composed
    }
}

pub fn compose_network(hops: &[ServiceEnvelope], delta: f64, slot: f64) -> Result<NetworkService> {
    let Some((first, rest)) = hops.split_first() else {
        return Err(Error::Empty("hop list"));
    };
    require_positive("delta", delta)?;
    require_positive("slot", slot)?;
    let curve = rest
        .iter()
        .fold(first.curve.clone(), |acc, h| convolve(&acc, &h.curve));
    let error_terms = hops
        .iter()
        .map(|h| tail_sum(&h.error, delta, slot))
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkService {
        curve,
        error_terms,
        delta,
        slot,
        hops: hops.len(),
    })
}

/// `min(1, Σ_{u >= 0} ε(σ + δ·slot·u))`: probability that the service
/// process falls short of the envelope, corrected by rate δ, anywhere along
/// the sample path.
pub fn sample_path_error(error: &ExpError, delta: f64, slot: f64, sigma: f64) -> Result<f64> {
    Ok(tail_sum(error, delta, slot)?.eval(sigma))
}
