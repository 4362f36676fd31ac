//! Brute-force oracles shared by the integration tests. They only evaluate
//! curves pointwise and never look at segment structure.

#![allow(dead_code)]

use rand::Rng;
use snetcalc::{Curve, MmooParams, NetworkSpec, TrafficModel};

pub fn max_slope(c: &Curve) -> f64 {
    c.segments().map(|s| s.slope).fold(0.0, f64::max)
}

pub fn min_slope(c: &Curve) -> f64 {
    c.segments().map(|s| s.slope).fold(f64::INFINITY, f64::min)
}

/// A random curve with 1..=5 breakpoints, segment slopes in `slopes`, a
/// terminal slope in `terminal` and starting value in `start`.
pub fn random_curve(
    rng: &mut impl Rng,
    slopes: (f64, f64),
    terminal: (f64, f64),
    start: (f64, f64),
) -> Curve {
    let n = rng.random_range(1..=5);
    let mut t = 0.0;
    let mut v = rng.random_range(start.0..=start.1);
    let mut points = vec![(t, v)];
    for _ in 1..n {
        let dt = rng.random_range(0.1..3.0);
        let s: f64 = rng.random_range(slopes.0..=slopes.1);
        t += dt;
        v += s * dt;
        points.push((t, v));
    }
    Curve::new(points, rng.random_range(terminal.0..=terminal.1)).unwrap()
}

fn eval(c: &Curve, t: f64) -> f64 {
    c.eval(t).unwrap()
}

/// `min_{s on grid} f(s) + g(t - s)`; exceeds the true infimum by at most
/// `h (max slope f + max slope g)`.
pub fn grid_convolve(f: &Curve, g: &Curve, t: f64, h: f64) -> f64 {
    let n = (t / h).ceil() as usize;
    (0..=n)
        .map(|k| (k as f64 * h).min(t))
        .map(|s| eval(f, s) + eval(g, t - s))
        .fold(f64::INFINITY, f64::min)
}

/// `max_{u on grid, u <= horizon} f(delta + u) - g(u)`.
pub fn grid_deconvolve(f: &Curve, g: &Curve, delta: f64, horizon: f64, h: f64) -> f64 {
    let n = (horizon / h).ceil() as usize;
    (0..=n)
        .map(|k| k as f64 * h)
        .map(|u| eval(f, delta + u) - eval(g, u))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest x with `g(x) >= y`, by bisection.
pub fn lower_inverse(g: &Curve, y: f64) -> f64 {
    if eval(g, 0.0) >= y {
        return 0.0;
    }
    let mut hi = 1.0;
    while eval(g, hi) < y {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eval(g, mid) >= y {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
    }
    hi
}

/// `max_{t on grid, t <= horizon} max(0, g^{-1}(f(t) + σ) - t)`.
pub fn grid_deviation(f: &Curve, g: &Curve, sigma: f64, horizon: f64, h: f64) -> f64 {
    let n = (horizon / h).ceil() as usize;
    (0..=n)
        .map(|k| k as f64 * h)
        .map(|t| (lower_inverse(g, eval(f, t) + sigma) - t).max(0.0))
        .fold(0.0, f64::max)
}

/// The tandem of the evaluation: 100 Mb/s links, N = 134 through flows,
/// M = 333 cross flows per hop, ε = 1e-9, 0.1 ms slots.
pub fn reference_network(hops: usize, params: MmooParams) -> (TrafficModel, NetworkSpec) {
    (
        TrafficModel::mmoo(params, 134).unwrap(),
        NetworkSpec {
            hops,
            capacity: 100e6,
            cross: Some(TrafficModel::mmoo(params, 333).unwrap()),
            epsilon: 1e-9,
            slot: 1e-4,
        },
    )
}
