//! Closed-form bounds for H identical hops with affine envelopes and
//! exponential errors of a common decay θ, at δ = (C - ρ - ρ_c)/2.
//!
//! With `L = ln((H+1) / (ε (1 - e^{-θδ·slot})))`,
//!
//! * backlog `x = (H+1) L / θ + σ + H σ_c`,
//! * delay `d = x / ((C + ρ - ρ_c) / 2)`,
//!
//! both to be minimized over θ. These are evaluated without any min-plus
//! machinery and serve as an independent check of the general pipeline.

use super::optimize::{infeasible, minimize_log, NetworkSpec, Objective, ThetaGrid};
use crate::error::{Error, Result};
use crate::traffic::TrafficModel;

pub fn closed_form(
    through: &TrafficModel,
    spec: &NetworkSpec,
    objective: Objective,
    theta: f64,
) -> Result<f64> {
    spec.validate()?;
    let (sigma, rho) = through.sigma_rho_at(theta)?;
    let (sigma_c, rho_c) = match &spec.cross {
        Some(m) => m.sigma_rho_at(theta)?,
        None => (0.0, 0.0),
    };
    let c = spec.capacity;
    let delta = (c - rho - rho_c) / 2.0;
    if !(delta > 0.0) {
        return Err(Error::Unstable {
            demand: rho + rho_c,
            rate: c,
        });
    }
    let n = (spec.hops + 1) as f64;
    let one_minus = -(-theta * delta * spec.slot).exp_m1();
    let log_term = (n / (spec.epsilon * one_minus)).ln().max(0.0);
    let backlog = n * log_term / theta + sigma + spec.hops as f64 * sigma_c;
    Ok(match objective {
        Objective::Backlog | Objective::Output => backlog,
        Objective::Delay => backlog / ((c + rho - rho_c) / 2.0),
    })
}

/// `(θ*, value)` minimizing [`closed_form`] over the grid.
pub fn optimize_closed_form(
    through: &TrafficModel,
    spec: &NetworkSpec,
    objective: Objective,
    grid: &ThetaGrid,
) -> Result<(f64, f64)> {
    spec.validate()?;
    grid.validate()?;
    let f = |x: f64| closed_form(through, spec, objective, x.exp()).unwrap_or(f64::INFINITY);
    minimize_log(grid.min.ln(), grid.max.ln(), grid.points, true, &f)
        .map(|(x, v)| (x.exp(), v))
        .ok_or_else(|| infeasible(through, spec, grid))
}
