//! Probabilistic end-to-end bounds on backlog, delay and output burstiness.
//!
//! With a rate correction δ, the arrival envelope is raised to
//! `G_δ(t) = G(t) + δt` and the network envelope lowered to
//! `S_{net,-δ}(t) = S_net(t) - δt`. Then, for every σ >= 0,
//!
//! * `P{B > (G_δ ⊘ S_{net,-δ})(0) + σ} <= ε(σ)`,
//! * `P{W > d(σ)} <= ε(σ)` with `d(σ)` the horizontal deviation between
//!   `G_δ + σ` and `S_{net,-δ}`,
//! * `G_δ ⊘ S_{net,-δ}` is an arrival envelope of the departures with the
//!   same error,
//!
//! where `ε(σ)` splits σ optimally between the tail-summed arrival error
//! and the per-hop network errors.

pub mod closed_form;
pub mod independent;
pub mod optimize;
pub mod partition;

use crate::error::{Error, Result};
use crate::minplus::{deconvolve_at, horizontal_deviation, Curve};
use crate::service::NetworkService;
use crate::traffic::{tail_sum, ArrivalEnvelope, ExpError};

pub use independent::{independent_error, IndependentTail, StieltjesGrid};
pub use partition::{partition, partition_infimum, partition_quantile, Partition};

/// One error term of a bound: its name, σ share and probability share.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTerm {
    pub name: String,
    pub sigma: f64,
    pub probability: f64,
}

/// A bound value together with the σ it was computed at.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantile {
    /// bits for backlog, seconds for delay
    pub value: f64,
    pub sigma: f64,
    pub probability: f64,
    pub breakdown: Vec<BoundTerm>,
}

/// Error function given by the optimal split of σ over several terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedError {
    pub terms: Vec<ExpError>,
}

impl PartitionedError {
    pub fn eval(&self, sigma: f64) -> Result<f64> {
        if self.terms.iter().all(ExpError::is_zero) {
            return Ok(0.0);
        }
        partition_infimum(&self.terms, sigma)
    }

    /// A single exponential bounding this error everywhere.
    pub fn to_exp(&self) -> ExpError {
        partition::combine(&self.terms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputEnvelope {
    pub curve: Curve,
    pub error: PartitionedError,
}

impl OutputEnvelope {
    /// Reuse as the arrival envelope of a downstream analysis.
    pub fn as_arrival(&self) -> ArrivalEnvelope {
        ArrivalEnvelope {
            curve: self.curve.clone(),
            error: self.error.to_exp(),
        }
    }
}

/// Tail-summed error terms in the order arrival, hop 1, ..., hop H.
pub fn sample_path_terms(arrival: &ArrivalEnvelope, net: &NetworkService) -> Result<Vec<ExpError>> {
    let mut terms = Vec::with_capacity(net.error_terms.len() + 1);
    terms.push(tail_sum(&arrival.error, net.delta, net.slot)?);
    terms.extend_from_slice(&net.error_terms);
    Ok(terms)
}

fn term_name(i: usize) -> String {
    if i == 0 {
        "arrival".to_string()
    } else {
        format!("hop {i}")
    }
}

fn breakdown(p: &Partition) -> Vec<BoundTerm> {
    p.shares
        .iter()
        .zip(&p.probabilities)
        .enumerate()
        .map(|(i, (&sigma, &probability))| BoundTerm {
            name: term_name(i),
            sigma,
            probability,
        })
        .collect()
}

/// `(G_δ, S_{net,-δ})` after checking `ρ + δ <= R - δ`.
fn shifted(arrival: &ArrivalEnvelope, net: &NetworkService) -> Result<(Curve, Curve)> {
    if net.hops == 0 {
        return Err(Error::param("hops", "at least one hop required"));
    }
    let demand = arrival.curve.terminal_slope() + net.delta;
    if !net.curve.is_identity() {
        let rate = net.curve.terminal_slope() - net.delta;
        // the midpoint δ balances the two exactly, up to rounding
        if !(demand <= rate * (1.0 + 1e-12)) {
            return Err(Error::Unstable { demand, rate });
        }
    }
    Ok((
        arrival.curve.add_rate(net.delta)?,
        net.curve.add_rate(-net.delta)?,
    ))
}

fn probability_at(terms: &[ExpError], sigma: f64) -> Result<Partition> {
    partition(terms, sigma)
}

/// Backlog level `(G_δ ⊘ S_{net,-δ})(0) + σ` and the probability of
/// exceeding it.
pub fn backlog_bound(
    arrival: &ArrivalEnvelope,
    net: &NetworkService,
    sigma: f64,
) -> Result<(f64, f64)> {
    let (g, s) = shifted(arrival, net)?;
    let base = deconvolve_at(&g, &s, 0.0)?;
    let p = probability_at(&sample_path_terms(arrival, net)?, sigma)?;
    Ok((base + sigma, p.probability()))
}

pub fn backlog_quantile(
    arrival: &ArrivalEnvelope,
    net: &NetworkService,
    epsilon: f64,
) -> Result<Quantile> {
    let (g, s) = shifted(arrival, net)?;
    let base = deconvolve_at(&g, &s, 0.0)?;
    let terms = sample_path_terms(arrival, net)?;
    let sigma = partition_quantile(&terms, epsilon)?;
    let p = probability_at(&terms, sigma)?;
    Ok(Quantile {
        value: base + sigma,
        sigma,
        probability: p.probability(),
        breakdown: breakdown(&p),
    })
}

/// Delay `d(σ)` and the probability of exceeding it.
pub fn delay_bound(
    arrival: &ArrivalEnvelope,
    net: &NetworkService,
    sigma: f64,
) -> Result<(f64, f64)> {
    let (g, s) = shifted(arrival, net)?;
    let d = horizontal_deviation(&g, &s, sigma)?;
    let p = probability_at(&sample_path_terms(arrival, net)?, sigma)?;
    Ok((d, p.probability()))
}

pub fn delay_quantile(
    arrival: &ArrivalEnvelope,
    net: &NetworkService,
    epsilon: f64,
) -> Result<Quantile> {
    let (g, s) = shifted(arrival, net)?;
    let terms = sample_path_terms(arrival, net)?;
    let sigma = partition_quantile(&terms, epsilon)?;
    let p = probability_at(&terms, sigma)?;
    Ok(Quantile {
        value: horizontal_deviation(&g, &s, sigma)?,
        sigma,
        probability: p.probability(),
        breakdown: breakdown(&p),
    })
}

/// Arrival envelope of the traffic leaving the network.
///
/// Defined for affine arrival envelopes, where `G_δ ⊘ S_{net,-δ}` is again
/// affine with rate `ρ + δ`. A path without service hands the arrival
/// envelope through unchanged.
pub fn output_envelope(arrival: &ArrivalEnvelope, net: &NetworkService) -> Result<OutputEnvelope> {
    if net.curve.is_identity() {
        return Ok(OutputEnvelope {
            curve: arrival.curve.clone(),
            error: PartitionedError {
                terms: vec![arrival.error],
            },
        });
    }
    if arrival.curve.points().len() != 1 {
        return Err(Error::InvalidCurve(
            "output envelope needs an affine arrival envelope".into(),
        ));
    }
    let (g, s) = shifted(arrival, net)?;
    let burst = deconvolve_at(&g, &s, 0.0)?;
    Ok(OutputEnvelope {
        curve: Curve::affine(g.terminal_slope(), burst)?,
        error: PartitionedError {
            terms: sample_path_terms(arrival, net)?,
        },
    })
}

/// Tail table for the independent case, extended until it reaches
/// `epsilon`.
fn independent_table(
    terms: &[ExpError],
    epsilon: f64,
    grid: StieltjesGrid,
) -> Result<(IndependentTail, f64)> {
    // the union bound dominates in the tail; start from its quantile
    let mut sigma_max = partition_quantile(terms, epsilon)?.max(f64::MIN_POSITIVE);
    for _ in 0..8 {
        let table = IndependentTail::new(terms, sigma_max, grid)?;
        if let Some(sigma) = table.quantile(epsilon) {
            return Ok((table, sigma));
        }
        sigma_max *= 2.0;
    }
    Err(Error::param(
        "epsilon",
        format!("independent tail did not reach {epsilon:e}"),
    ))
}

/// Backlog quantile when arrival and hop services are mutually
/// independent. The caller vouches for independence.
pub fn backlog_quantile_independent(
    arrival: &ArrivalEnvelope,
    net: &NetworkService,
    epsilon: f64,
    grid: StieltjesGrid,
) -> Result<Quantile> {
    let (g, s) = shifted(arrival, net)?;
    let base = deconvolve_at(&g, &s, 0.0)?;
    let terms = sample_path_terms(arrival, net)?;
    let (table, sigma) = independent_table(&terms, epsilon, grid)?;
    Ok(Quantile {
        value: base + sigma,
        sigma,
        probability: table.eval(sigma).unwrap_or(epsilon),
        breakdown: vec![],
    })
}

pub fn delay_quantile_independent(
    arrival: &ArrivalEnvelope,
    net: &NetworkService,
    epsilon: f64,
    grid: StieltjesGrid,
) -> Result<Quantile> {
    let (g, s) = shifted(arrival, net)?;
    let terms = sample_path_terms(arrival, net)?;
    let (table, sigma) = independent_table(&terms, epsilon, grid)?;
    Ok(Quantile {
        value: horizontal_deviation(&g, &s, sigma)?,
        sigma,
        probability: table.eval(sigma).unwrap_or(epsilon),
        breakdown: vec![],
    })
}
