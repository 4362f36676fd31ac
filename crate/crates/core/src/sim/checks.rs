//! Empirical checks of envelope guarantees on simulated sample paths.

use super::tandem::TandemTrace;
use crate::error::{Error, Result};
use crate::minplus::Curve;

/// Fraction of windows of `window` slots, starting at `start` or later, in
/// which the cumulative process grows by more than `limit`.
///
/// `cumulative` holds values at slot boundaries.
pub fn exceedance_frequency(
    cumulative: &[f64],
    window: usize,
    start: usize,
    limit: f64,
) -> Result<f64> {
    if window == 0 {
        return Err(Error::param("window", "at least one slot"));
    }
    if start + window >= cumulative.len() {
        return Err(Error::param("window", "longer than the sampled trace"));
    }
    let windows = cumulative.len() - window - start;
    let hits = (start..start + windows)
        .filter(|&s| cumulative[s + window] - cumulative[s] > limit)
        .count();
    Ok(hits as f64 / windows as f64)
}

/// Empirical `P{A(s, s+Δ) > G(Δ) + σ}` for the external through arrivals.
pub fn arrival_violation_frequency(
    trace: &TandemTrace,
    envelope: &Curve,
    window: usize,
    sigma: f64,
) -> Result<f64> {
    let limit = envelope.eval(window as f64 * trace.slot)? + sigma;
    exceedance_frequency(trace.arrivals(), window, trace.warmup, limit)
}

/// Empirical `P{S(s, s+Δ) < S_env(Δ) - σ}` for the realized leftover
/// service `S(s, t) = C (t - s) - A_c(s, t)` at hop `hop` (1-based).
pub fn leftover_violation_frequency(
    trace: &TandemTrace,
    hop: usize,
    envelope: &Curve,
    window: usize,
    sigma: f64,
) -> Result<f64> {
    if hop == 0 || hop > trace.hops() {
        return Err(Error::param(
            "hop",
            format!("must lie in 1..={}", trace.hops()),
        ));
    }
    let span = window as f64 * trace.slot;
    // S < S_env - σ  <=>  A_c > C Δ - S_env(Δ) + σ
    let limit = trace.capacity * span - envelope.eval(span)? + sigma;
    let cross = cumulative(&trace.cross[hop - 1]);
    exceedance_frequency(&cross, window, trace.warmup, limit)
}

fn cumulative(per_slot: &[f64]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(per_slot.iter().scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        }))
        .collect()
}

/// Largest amount by which the departures of hop `hop` (1-based) fall short
/// of `min_{k <= t} [A(k) + C (t - k) - A_c(k, t)]` over all slot
/// boundaries t. Zero or negative means the hop acts as a dynamic server
/// with the realized leftover service.
pub fn dynamic_server_shortfall(trace: &TandemTrace, hop: usize) -> Result<f64> {
    if hop == 0 || hop > trace.hops() {
        return Err(Error::param(
            "hop",
            format!("must lie in 1..={}", trace.hops()),
        ));
    }
    let a = &trace.through[hop - 1];
    let d = &trace.through[hop];
    let per_slot = trace.capacity * trace.slot;
    let cross = cumulative(&trace.cross[hop - 1]);
    // bound(t) = C t - A_c(t) + min_{k <= t} [A(k) - C k + A_c(k)]
    let mut best = f64::INFINITY;
    let mut worst = f64::NEG_INFINITY;
    for t in 0..a.len() {
        let ct = per_slot * t as f64;
        best = best.min(a[t] - ct + cross[t]);
        let bound = ct - cross[t] + best;
        worst = worst.max(bound - d[t]);
    }
    Ok(worst)
}

/// Causality and conservation at every hop: departures non-decreasing and
/// never ahead of arrivals, backlogs non-negative.
pub fn check_causality(trace: &TandemTrace, tolerance: f64) -> bool {
    let monotone = trace
        .through
        .iter()
        .all(|c| c.windows(2).all(|w| w[1] >= w[0] - tolerance));
    let causal = trace
        .through
        .windows(2)
        .all(|p| p[0].iter().zip(&p[1]).all(|(a, d)| *d <= a + tolerance));
    let backlog = trace.backlog.iter().all(|b| b.iter().all(|&x| x >= 0.0));
    monotone && causal && backlog
}
