//! Choice of the free parameters θ and δ for the tandem network with
//! identical hops: constant-rate links of capacity C, each shared with a
//! fresh cross-traffic aggregate.

use rayon::prelude::*;

use super::{
    backlog_quantile, backlog_quantile_independent, delay_quantile, delay_quantile_independent,
    BoundTerm, Quantile, StieltjesGrid,
};
use crate::error::{require_positive, Error, Result};
use crate::service::{compose_network, constant_rate_service, leftover_service, NetworkService};
use crate::traffic::{arrival_envelope, ArrivalEnvelope, TrafficModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// seconds
    Delay,
    /// bits
    Backlog,
    /// burst of the departure envelope, bits
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeltaPolicy {
    /// δ = (C - ρ(θ) - ρ_c(θ)) / 2
    #[default]
    Midpoint,
    /// Minimize over δ in (0, midpoint] for every θ.
    Refine,
}

/// Logarithmic θ grid, 1/bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        Self {
            min: 1e-9,
            max: 1e-2,
            points: 200,
        }
    }
}

impl ThetaGrid {
    pub fn validate(&self) -> Result<()> {
        require_positive("theta_grid.min", self.min)?;
        require_positive("theta_grid.max", self.max)?;
        if self.max <= self.min {
            return Err(Error::param("theta_grid.max", "must exceed theta_grid.min"));
        }
        if self.points < 3 {
            return Err(Error::param("theta_grid.points", "need at least 3 points"));
        }
        Ok(())
    }

    pub fn thetas(&self) -> Vec<f64> {
        let (lo, hi) = (self.min.ln(), self.max.ln());
        let n = self.points;
        let mut out: Vec<f64> = (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect();
        out[0] = self.min;
        out[n - 1] = self.max;
        out
    }
}

/// H hops of capacity C with identical cross traffic at each hop.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub hops: usize,
    /// bits/second
    pub capacity: f64,
    pub cross: Option<TrafficModel>,
    pub epsilon: f64,
    /// seconds
    pub slot: f64,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hops == 0 {
            return Err(Error::param("hops", "at least one hop required"));
        }
        require_positive("capacity", self.capacity)?;
        require_positive("slot", self.slot)?;
        require_positive("epsilon", self.epsilon)?;
        if self.epsilon >= 1.0 {
            return Err(Error::param("epsilon", "must be below 1"));
        }
        Ok(())
    }

    fn cross_rate(&self, theta: f64) -> Result<(f64, f64)> {
        match &self.cross {
            Some(m) => m.sigma_rho_at(theta),
            None => Ok((0.0, 0.0)),
        }
    }

    /// `C - ρ(θ) - ρ_c(θ)`
    pub fn margin(&self, through: &TrafficModel, theta: f64) -> Result<f64> {
        let (_, rho) = through.sigma_rho_at(theta)?;
        let (_, rho_c) = self.cross_rate(theta)?;
        Ok(self.capacity - rho - rho_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OptimizerSettings {
    pub theta_grid: ThetaGrid,
    pub delta_policy: DeltaPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub objective: Objective,
    pub value: f64,
    pub theta: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Violation probability at the returned value.
    pub achieved: f64,
    pub sigma: f64,
    pub breakdown: Vec<BoundTerm>,
    /// Rate of the departure envelope, for [`Objective::Output`].
    pub output_rate: Option<f64>,
}

/// Arrival envelope and end-to-end service at fixed θ and δ.
pub fn pipeline(
    through: &TrafficModel,
    spec: &NetworkSpec,
    theta: f64,
    delta: f64,
) -> Result<(ArrivalEnvelope, NetworkService)> {
    spec.validate()?;
    let arrival = arrival_envelope(through, theta)?;
    let link = constant_rate_service(spec.capacity)?;
    let hop = match &spec.cross {
        Some(m) => leftover_service(
            &link,
            &arrival_envelope(m, theta)?,
            arrival.curve.terminal_slope(),
        )?,
        None => link,
    };
    let net = compose_network(&vec![hop; spec.hops], delta, spec.slot)?;
    Ok((arrival, net))
}

pub fn midpoint_delta(through: &TrafficModel, spec: &NetworkSpec, theta: f64) -> Result<f64> {
    let margin = spec.margin(through, theta)?;
    if !(margin > 0.0) {
        return Err(Error::Unstable {
            demand: spec.capacity - margin,
            rate: spec.capacity,
        });
    }
    Ok(margin / 2.0)
}

fn result(
    objective: Objective,
    epsilon: f64,
    theta: f64,
    delta: f64,
    q: Quantile,
    rate: f64,
) -> BoundResult {
    BoundResult {
        objective,
        value: q.value,
        theta,
        delta,
        epsilon,
        achieved: q.probability,
        sigma: q.sigma,
        breakdown: q.breakdown,
        output_rate: (objective == Objective::Output).then_some(rate),
    }
}

/// Bound at fixed θ and δ.
pub fn evaluate(
    through: &TrafficModel,
    spec: &NetworkSpec,
    objective: Objective,
    theta: f64,
    delta: f64,
) -> Result<BoundResult> {
    let (arrival, net) = pipeline(through, spec, theta, delta)?;
    let q = match objective {
        Objective::Delay => delay_quantile(&arrival, &net, spec.epsilon)?,
        Objective::Backlog | Objective::Output => backlog_quantile(&arrival, &net, spec.epsilon)?,
    };
    let rate = arrival.curve.terminal_slope() + delta;
    Ok(result(objective, spec.epsilon, theta, delta, q, rate))
}

/// Bound at fixed θ and δ when the arrival and all hops are independent.
pub fn evaluate_independent(
    through: &TrafficModel,
    spec: &NetworkSpec,
    objective: Objective,
    theta: f64,
    delta: f64,
    grid: StieltjesGrid,
) -> Result<BoundResult> {
    let (arrival, net) = pipeline(through, spec, theta, delta)?;
    let q = match objective {
        Objective::Delay => delay_quantile_independent(&arrival, &net, spec.epsilon, grid)?,
        Objective::Backlog | Objective::Output => {
            backlog_quantile_independent(&arrival, &net, spec.epsilon, grid)?
        }
    };
    let rate = arrival.curve.terminal_slope() + delta;
    Ok(result(objective, spec.epsilon, theta, delta, q, rate))
}

const GOLDEN_TOLERANCE: f64 = 1e-9;
const MAX_EXTENSIONS: usize = 6;

fn golden(mut a: f64, mut b: f64, f: &(dyn Fn(f64) -> f64 + Sync)) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOLERANCE * (1.0 + a.abs().max(b.abs())) {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimizes `f` over x in a log-spaced grid on `[lo, hi]` (x is a natural
/// log), then refines by golden section between the neighbours of the grid
/// minimum. With `extend`, a minimum on the edge grows the grid by a decade
/// in that direction. Non-finite values count as +∞; ties go to smaller x.
pub(crate) fn minimize_log(
    lo: f64,
    hi: f64,
    points: usize,
    extend: bool,
    f: &(dyn Fn(f64) -> f64 + Sync),
) -> Option<(f64, f64)> {
    let step = (hi - lo) / (points - 1) as f64;
    let per_decade = (std::f64::consts::LN_10 / step).ceil() as usize;
    let eval = |xs: &[f64]| -> Vec<f64> {
        xs.par_iter()
            .map(|&x| {
                let v = f(x);
                if v.is_finite() {
                    v
                } else {
                    f64::INFINITY
                }
            })
            .collect()
    };
    let mut xs: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
    let mut vs = eval(&xs);
    let mut extensions = 0;
    let best = loop {
        let mut best: Option<usize> = None;
        for (i, &v) in vs.iter().enumerate() {
            if v < f64::INFINITY && best.is_none_or(|b| v < vs[b]) {
                best = Some(i);
            }
        }
        let i = best?;
        if !extend || extensions == MAX_EXTENSIONS {
            break i;
        }
        if i == 0 {
            let new: Vec<f64> = (1..=per_decade)
                .rev()
                .map(|k| xs[0] - step * k as f64)
                .collect();
            let mut nv = eval(&new);
            nv.extend_from_slice(&vs);
            vs = nv;
            xs = new.into_iter().chain(xs).collect();
        } else if i == xs.len() - 1 {
            let last = xs[i];
            let new: Vec<f64> = (1..=per_decade).map(|k| last + step * k as f64).collect();
            vs.extend(eval(&new));
            xs.extend(new);
        } else {
            break i;
        }
        extensions += 1;
    };
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(xs.len() - 1)];
    let (x, v) = golden(a, b, &|x| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    });
    if v < vs[best] {
        Some((x, v))
    } else {
        Some((xs[best], vs[best]))
    }
}

/// Best δ in (0, midpoint] at fixed θ.
fn refine_delta(
    through: &TrafficModel,
    spec: &NetworkSpec,
    objective: Objective,
    theta: f64,
) -> Result<f64> {
    let mid = midpoint_delta(through, spec, theta)?;
    let f = |x: f64| {
        evaluate(through, spec, objective, theta, x.exp()).map_or(f64::INFINITY, |r| r.value)
    };
    let (x, _) =
        minimize_log((mid * 1e-6).ln(), mid.ln(), 32, false, &f).ok_or(Error::Unstable {
            demand: spec.capacity - 2.0 * mid,
            rate: spec.capacity,
        })?;
    Ok(x.exp().min(mid))
}

fn delta_for(
    through: &TrafficModel,
    spec: &NetworkSpec,
    objective: Objective,
    policy: DeltaPolicy,
    theta: f64,
) -> Result<f64> {
    match policy {
        DeltaPolicy::Midpoint => midpoint_delta(through, spec, theta),
        DeltaPolicy::Refine => refine_delta(through, spec, objective, theta),
    }
}

/// Error for a grid on which no θ is stable.
pub(crate) fn infeasible(through: &TrafficModel, spec: &NetworkSpec, grid: &ThetaGrid) -> Error {
    let mut closest = (grid.min, f64::NEG_INFINITY);
    for theta in grid.thetas() {
        if let Ok(m) = spec.margin(through, theta) {
            if m > closest.1 {
                closest = (theta, m);
            }
        }
    }
    Error::Infeasible {
        closest_theta: closest.0,
        margin: closest.1,
    }
}

/// Minimizes the bound over θ; δ follows the policy at every θ.
pub fn optimize(
    through: &TrafficModel,
    spec: &NetworkSpec,
    objective: Objective,
    settings: &OptimizerSettings,
) -> Result<BoundResult> {
    minimize_theta(through, spec, objective, settings, &|theta, delta| {
        evaluate(through, spec, objective, theta, delta)
    })
}

/// [`optimize`] with the bound for independent arrivals and hops. δ is
/// chosen by the policy on the union bound, then the independent bound is
/// evaluated at that δ.
pub fn optimize_independent(
    through: &TrafficModel,
    spec: &NetworkSpec,
    objective: Objective,
    settings: &OptimizerSettings,
    grid: StieltjesGrid,
) -> Result<BoundResult> {
    minimize_theta(through, spec, objective, settings, &|theta, delta| {
        evaluate_independent(through, spec, objective, theta, delta, grid)
    })
}

fn minimize_theta(
    through: &TrafficModel,
    spec: &NetworkSpec,
    objective: Objective,
    settings: &OptimizerSettings,
    eval: &(dyn Fn(f64, f64) -> Result<BoundResult> + Sync),
) -> Result<BoundResult> {
    spec.validate()?;
    let grid = settings.theta_grid;
    grid.validate()?;
    let run = |theta: f64| -> Result<BoundResult> {
        let delta = delta_for(through, spec, objective, settings.delta_policy, theta)?;
        eval(theta, delta)
    };
    let f = |x: f64| run(x.exp()).map_or(f64::INFINITY, |r| r.value);
    match minimize_log(grid.min.ln(), grid.max.ln(), grid.points, true, &f) {
        Some((x, _)) => run(x.exp()),
        None => {
            // surface a non-stability failure if there is one
            let probe = grid.thetas().into_iter().map(run).find_map(|r| match r {
                Err(Error::Unstable { .. }) | Ok(_) => None,
                Err(e) => Some(e),
            });
            Err(probe.unwrap_or_else(|| infeasible(through, spec, &grid)))
        }
    }
}
