//! Min-plus algebra over non-decreasing, continuous, piecewise-linear curves.
//!
//! Every curve lives on `t >= 0`, is affine between its breakpoints and
//! continues past the last breakpoint with a terminal slope. Values may be
//! negative: a leftover service curve such as `(C - ρ_c) t - H σ` starts
//! below zero.
//!
//! All processes are stationary, so a curve is a function of the interval
//! length only.

use crate::error::{Error, Result};

/// Terminal slope of the min-plus identity (`0` at `t = 0`, `+∞` after).
///
/// Only [`Curve::identity`] carries this value; the operations handle it
/// explicitly and never return it inside a result.
pub const INFINITE_SLOPE: f64 = f64::INFINITY;

/// Relative tolerance used when merging collinear segments.
const COLLINEAR_TOL: f64 = 1e-12;

/// `f` outgrows `g`. Slopes within a relative 1e-12 count as equal, so that
/// rates that balance exactly are not rejected over rounding.
fn outgrows(f: &Curve, g: &Curve) -> bool {
    f.is_identity() || f.terminal_slope > g.terminal_slope * (1.0 + COLLINEAR_TOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<(f64, f64)>,
    terminal_slope: f64,
}

/// One linear piece of a curve: starts at `(start, value)` and runs with
/// `slope` until `end` (`f64::INFINITY` for the terminal ray).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub value: f64,
    pub slope: f64,
}

impl Segment {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        self.value + self.slope * (t - self.start)
    }
}

impl Curve {
    /// Builds a curve from breakpoints `(time, value)` and a terminal slope.
    ///
    /// The first breakpoint must sit at `t = 0`, times must be strictly
    /// increasing and every segment slope must be non-negative.
    pub fn new(points: Vec<(f64, f64)>, terminal_slope: f64) -> Result<Self> {
        let Some(&(t0, _)) = points.first() else {
            return Err(Error::InvalidCurve("no breakpoints".into()));
        };
        if t0 != 0.0 {
            return Err(Error::InvalidCurve(format!(
                "first breakpoint at t = {t0}, expected 0"
            )));
        }
        if !(terminal_slope.is_finite() && terminal_slope >= 0.0) {
            return Err(Error::InvalidCurve(format!(
                "terminal slope must be finite and non-negative, got {terminal_slope}"
            )));
        }
        for &(t, v) in &points {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::InvalidCurve(format!(
                    "non-finite breakpoint ({t}, {v})"
                )));
            }
        }
        for w in points.windows(2) {
            let ((ta, va), (tb, vb)) = (w[0], w[1]);
            if tb <= ta {
                return Err(Error::InvalidCurve(format!(
                    "breakpoint times not strictly increasing at t = {tb}"
                )));
            }
            if vb < va {
                return Err(Error::InvalidCurve(format!(
                    "curve decreases on [{ta}, {tb}] ({va} -> {vb})"
                )));
            }
        }
        Ok(Self::normalized(points, terminal_slope))
    }

    /// `rate * t + burst`. `burst` may be negative.
    pub fn affine(rate: f64, burst: f64) -> Result<Self> {
        Self::new(vec![(0.0, burst)], rate)
    }

    /// `rate * t`.
    pub fn linear(rate: f64) -> Result<Self> {
        Self::affine(rate, 0.0)
    }

    /// `rate * (t - latency)^+`.
    pub fn rate_latency(rate: f64, latency: f64) -> Result<Self> {
        if latency == 0.0 {
            return Self::linear(rate);
        }
        Self::new(vec![(0.0, 0.0), (latency, 0.0)], rate)
    }

    /// The min-plus identity: `0` at `t = 0` and `+∞` for `t > 0`.
    pub fn identity() -> Self {
        Self {
            points: vec![(0.0, 0.0)],
            terminal_slope: INFINITE_SLOPE,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.terminal_slope == INFINITE_SLOPE
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn terminal_slope(&self) -> f64 {
        self.terminal_slope
    }

    /// Value at `t = 0`.
    pub fn intercept(&self) -> f64 {
        self.points[0].1
    }

    pub fn last_breakpoint(&self) -> (f64, f64) {
        *self
            .points
            .last()
            .expect("curve has at least one breakpoint")
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.at(t))
    }

    /// Evaluation without the domain check. `t` must be non-negative.
    pub(crate) fn at(&self, t: f64) -> f64 {
        if self.is_identity() {
            return if t == 0.0 { 0.0 } else { f64::INFINITY };
        }
        let idx = self.points.partition_point(|&(bt, _)| bt <= t);
        let i = idx.saturating_sub(1);
        let (t0, v0) = self.points[i];
        let slope = self.slope_after(i);
        v0 + slope * (t - t0)
    }

    fn slope_after(&self, i: usize) -> f64 {
        match self.points.get(i + 1) {
            Some(&(t1, v1)) => {
                let (t0, v0) = self.points[i];
                (v1 - v0) / (t1 - t0)
            }
            None => self.terminal_slope,
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.points.len()).map(move |i| {
            let (start, value) = self.points[i];
            let end = self.points.get(i + 1).map_or(f64::INFINITY, |p| p.0);
            Segment {
                start,
                end,
                value,
                slope: self.slope_after(i),
            }
        })
    }

    /// `self(t) + rate * t`. A negative `rate` is allowed as long as the
    /// result stays non-decreasing.
    pub fn add_rate(&self, rate: f64) -> Result<Self> {
        if self.is_identity() {
            return Ok(self.clone());
        }
        let points = self
            .points
            .iter()
            .map(|&(t, v)| (t, v + rate * t))
            .collect();
        Self::new(points, self.terminal_slope + rate)
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &Curve) -> Result<Self> {
        self.combine(other, 1.0)
    }

    /// Pointwise `self - other`, closed to the largest non-decreasing curve
    /// below the difference.
    pub fn sub(&self, other: &Curve) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Curve, sign: f64) -> Result<Self> {
        if self.is_identity() || other.is_identity() {
            return Err(Error::InvalidCurve(
                "pointwise arithmetic on the identity curve".into(),
            ));
        }
        let mut times: Vec<f64> = self
            .points
            .iter()
            .chain(other.points.iter())
            .map(|p| p.0)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let points: Vec<(f64, f64)> = times
            .into_iter()
            .map(|t| (t, self.at(t) + sign * other.at(t)))
            .collect();
        let slope = self.terminal_slope + sign * other.terminal_slope;
        non_decreasing_closure(points, slope)
    }

    fn normalized(points: Vec<(f64, f64)>, terminal_slope: f64) -> Self {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for &p in &points {
            if out.len() >= 2 {
                let (ta, va) = out[out.len() - 2];
                let (tb, vb) = out[out.len() - 1];
                let s_in = (vb - va) / (tb - ta);
                if collinear(s_in, (p.1 - vb) / (p.0 - tb)) {
                    out.pop();
                }
            }
            out.push(p);
        }
        // Drop the last breakpoint when it only continues the terminal ray.
        if out.len() >= 2 {
            let (ta, va) = out[out.len() - 2];
            let (tb, vb) = out[out.len() - 1];
            if collinear((vb - va) / (tb - ta), terminal_slope) {
                out.pop();
            }
        }
        Self {
            points: out,
            terminal_slope,
        }
    }
}

fn collinear(a: f64, b: f64) -> bool {
    (a - b).abs() <= COLLINEAR_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Replaces `h` by `t -> inf_{s >= t} h(s)`.
fn non_decreasing_closure(points: Vec<(f64, f64)>, terminal_slope: f64) -> Result<Curve> {
    if !(terminal_slope >= 0.0) {
        return Err(Error::InvalidCurve(format!(
            "difference has negative terminal slope {terminal_slope}"
        )));
    }
    let mut rev: Vec<(f64, f64)> = Vec::with_capacity(points.len() + 4);
    let &(t_last, v_last) = points.last().expect("non-empty");
    let mut floor = v_last;
    rev.push((t_last, v_last));
    for w in points.windows(2).rev() {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if v1 <= floor && v0 <= v1 {
            rev.push((t0, v0));
            floor = v0;
        } else if v0 < floor && v1 > v0 {
            // h rises through the running floor inside the segment.
            let cross = t0 + (floor - v0) * (t1 - t0) / (v1 - v0);
            rev.push((cross, floor));
            rev.push((t0, v0));
            floor = v0;
        } else {
            rev.push((t0, floor));
        }
    }
    rev.reverse();
    rev.dedup_by(|b, a| b.0 <= a.0);
    Curve::new(rev, terminal_slope)
}

/// Exact min-plus convolution `(f ⊗ g)(t) = inf_{0 <= k <= t} f(k) + g(t - k)`.
///
/// Each pair of linear pieces convolves to a convex piece (smaller slope
/// first); the result is the lower envelope of those pieces, computed
/// exactly from their breakpoints and pairwise intersections.
pub fn convolve(f: &Curve, g: &Curve) -> Curve {
    if f.is_identity() {
        return g.clone();
    }
    if g.is_identity() {
        return f.clone();
    }
    let mut parts: Vec<Segment> = Vec::new();
    for a in f.segments() {
        for b in g.segments() {
            push_pair_convolution(&mut parts, &a, &b);
        }
    }
    lower_envelope(&parts)
}

fn push_pair_convolution(parts: &mut Vec<Segment>, a: &Segment, b: &Segment) {
    let (small, large) = if a.slope <= b.slope { (a, b) } else { (b, a) };
    let start = a.start + b.start;
    let value = a.value + b.value;
    let small_len = small.end - small.start;
    let large_len = large.end - large.start;
    let mid = start + small_len;
    parts.push(Segment {
        start,
        end: mid,
        value,
        slope: small.slope,
    });
    if mid.is_finite() {
        parts.push(Segment {
            start: mid,
            end: mid + large_len,
            value: value + small.slope * small_len,
            slope: large.slope,
        });
    }
}

/// Lower envelope of linear parts that together cover `[0, ∞)`.
fn lower_envelope(parts: &[Segment]) -> Curve {
    let mut events: Vec<f64> = parts
        .iter()
        .flat_map(|p| [p.start, p.end])
        .filter(|t| t.is_finite())
        .collect();
    events.sort_by(f64::total_cmp);
    events.dedup();

    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut terminal_slope = f64::INFINITY;
    let mut active: Vec<&Segment> = Vec::new();
    for (i, &lo) in events.iter().enumerate() {
        let hi = events.get(i + 1).copied().unwrap_or(f64::INFINITY);
        active.clear();
        active.extend(
            parts
                .iter()
                .filter(|p| p.start <= lo && p.end >= hi && p.end > lo),
        );
        if active.is_empty() {
            continue;
        }
        let mut cands = vec![lo];
        for (x, p) in active.iter().enumerate() {
            for q in &active[x + 1..] {
                if p.slope == q.slope {
                    continue;
                }
                // p.at(t) == q.at(t)
                let t = (q.value - q.slope * q.start - p.value + p.slope * p.start)
                    / (p.slope - q.slope);
                if t > lo && t < hi {
                    cands.push(t);
                }
            }
        }
        cands.sort_by(f64::total_cmp);
        cands.dedup();
        for t in cands {
            let v = active.iter().map(|p| p.at(t)).fold(f64::INFINITY, f64::min);
            points.push((t, v));
        }
        if hi.is_infinite() {
            terminal_slope = active.iter().map(|p| p.slope).fold(f64::INFINITY, f64::min);
        }
    }
    // Rounding in intersection points can produce tiny decreases.
    for i in 1..points.len() {
        if points[i].1 < points[i - 1].1 {
            points[i].1 = points[i - 1].1;
        }
    }
    Curve::normalized(points, terminal_slope)
}

/// Exact min-plus deconvolution evaluated at one interval length:
/// `(f ⊘ g)(delta) = sup_{u >= 0} f(delta + u) - g(u)`.
pub fn deconvolve_at(f: &Curve, g: &Curve, delta: f64) -> Result<f64> {
    if delta < 0.0 || delta.is_nan() {
        return Err(Error::NegativeTime(delta));
    }
    if g.is_identity() {
        return Ok(f.at(delta));
    }
    if outgrows(f, g) {
        return Err(Error::Divergent {
            upper: f.terminal_slope,
            lower: g.terminal_slope,
        });
    }
    let cands = std::iter::once(0.0)
        .chain(g.points.iter().map(|p| p.0))
        .chain(f.points.iter().map(|p| p.0 - delta).filter(|&u| u > 0.0));
    Ok(cands
        .map(|u| f.at(delta + u) - g.at(u))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Smallest `x >= 0` with `f(t) + sigma <= g(t + x)` for every `t >= 0`.
pub fn horizontal_deviation(f: &Curve, g: &Curve, sigma: f64) -> Result<f64> {
    let divergent = || Error::Divergent {
        upper: f.terminal_slope,
        lower: g.terminal_slope,
    };
    if g.is_identity() {
        return Ok(0.0);
    }
    if outgrows(f, g) {
        return Err(divergent());
    }
    let (_, vf) = f.last_breakpoint();
    let (_, vg) = g.last_breakpoint();
    if g.terminal_slope == 0.0 {
        // g is bounded by vg; f + sigma has to stay below it.
        let f_sup = if f.terminal_slope == 0.0 {
            vf
        } else {
            f64::INFINITY
        };
        if f_sup + sigma > vg {
            return Err(divergent());
        }
    }

    let y = |t: f64| f.at(t) + sigma;
    let mut best = 0.0_f64;
    let mut consider = |x: f64| {
        if x > best {
            best = x;
        }
    };
    for &(t, _) in &f.points {
        let Some(s) = lower_inverse(g, y(t)) else {
            return Err(divergent());
        };
        consider(s - t);
    }
    for &(_, level) in &g.points {
        // first time f + sigma reaches the level
        if let Some(t_first) = lower_inverse(f, level - sigma) {
            if let Some(s) = lower_inverse(g, level) {
                consider(s - t_first);
            }
        }
        // last time f + sigma stays at or below the level, approached from
        // above through the upper inverse of g
        if y(0.0) <= level {
            if let (Some(t_last), Some(s)) =
                (upper_inverse(f, level - sigma), upper_inverse(g, level))
            {
                consider(s - t_last);
            }
        }
    }
    Ok(best)
}

/// `inf { s >= 0 : c(s) >= y }`, `None` when `c` never reaches `y`.
pub(crate) fn lower_inverse(c: &Curve, y: f64) -> Option<f64> {
    if y <= c.intercept() {
        return Some(0.0);
    }
    for seg in c.segments() {
        let end_value = if seg.end.is_finite() {
            seg.at(seg.end)
        } else if seg.slope > 0.0 {
            f64::INFINITY
        } else {
            seg.value
        };
        if end_value >= y {
            return Some(seg.start + (y - seg.value) / seg.slope);
        }
    }
    None
}

/// `sup { s >= 0 : c(s) <= y }`, `None` when `c` stays at or below `y`
/// forever or starts above it.
pub(crate) fn upper_inverse(c: &Curve, y: f64) -> Option<f64> {
    if c.intercept() > y {
        return None;
    }
    for seg in c.segments() {
        let end_value = if seg.end.is_finite() {
            seg.at(seg.end)
        } else if seg.slope > 0.0 {
            f64::INFINITY
        } else {
            seg.value
        };
        if end_value > y {
            return Some(seg.start + (y - seg.value) / seg.slope);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn eval_affine_and_flat_extension() {
        let c = Curve::affine(5.0, 2.0).unwrap();
        assert_eq!(c.eval(3.0).unwrap(), 17.0);
        assert_eq!(c.eval(0.0).unwrap(), 2.0);
        let c = Curve::new(vec![(0.0, 0.0), (1.0, 1e6)], 0.0).unwrap();
        assert_eq!(c.eval(2.0).unwrap(), 1e6);
        assert_eq!(c.eval(0.5).unwrap(), 5e5);
        assert!(matches!(c.eval(-1.0), Err(Error::NegativeTime(_))));
    }

    #[test]
    fn rejects_malformed_curves() {
        assert!(Curve::new(vec![], 1.0).is_err());
        assert!(Curve::new(vec![(1.0, 0.0)], 1.0).is_err());
        assert!(Curve::new(vec![(0.0, 1.0), (1.0, 0.0)], 1.0).is_err());
        assert!(Curve::new(vec![(0.0, 0.0), (0.0, 1.0)], 1.0).is_err());
        assert!(Curve::new(vec![(0.0, 0.0)], -1.0).is_err());
        assert!(Curve::new(vec![(0.0, 0.0)], f64::INFINITY).is_err());
    }

    #[test]
    fn normalization_merges_collinear_points() {
        let c = Curve::new(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)], 2.0).unwrap();
        assert_eq!(c.points(), &[(0.0, 1.0)]);
        assert_eq!(c.terminal_slope(), 2.0);
    }

    #[test]
    fn convolve_affine_pair() {
        let f = Curve::affine(5.0, 2.0).unwrap();
        let g = Curve::affine(3.0, 4.0).unwrap();
        let h = convolve(&f, &g);
        assert_eq!(h, Curve::affine(3.0, 6.0).unwrap());
    }

    #[test]
    fn convolve_with_identity() {
        let f = Curve::new(vec![(0.0, 1.0), (2.0, 3.0)], 4.0).unwrap();
        assert_eq!(convolve(&f, &Curve::identity()), f);
        assert_eq!(convolve(&Curve::identity(), &f), f);
    }

    #[test]
    fn convolve_linear_with_itself() {
        let c = Curve::linear(7.0).unwrap();
        assert_eq!(convolve(&c, &c), c);
    }

    #[test]
    fn convolve_rate_latency_adds_latencies() {
        let a = Curve::rate_latency(4.0, 1.0).unwrap();
        let b = Curve::rate_latency(2.0, 3.0).unwrap();
        let h = convolve(&a, &b);
        assert_eq!(h, Curve::rate_latency(2.0, 4.0).unwrap());
    }

    #[test]
    fn deconvolve_affine() {
        let f = Curve::affine(2.0, 3.0).unwrap();
        let g = Curve::affine(5.0, -4.0).unwrap();
        assert!(close(deconvolve_at(&f, &g, 1.0).unwrap(), 9.0, 1e-15));
        assert!(close(deconvolve_at(&f, &g, 0.0).unwrap(), 7.0, 1e-15));
        // f ⊘ f (Δ) = ρΔ
        assert!(close(deconvolve_at(&f, &f, 2.5).unwrap(), 5.0, 1e-15));
        assert!(matches!(
            deconvolve_at(&g, &f, 0.0),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn deconvolve_by_identity_is_passthrough() {
        let f = Curve::affine(2.0, 3.0).unwrap();
        assert_eq!(deconvolve_at(&f, &Curve::identity(), 4.0).unwrap(), 11.0);
    }

    #[test]
    fn horizontal_deviation_affine() {
        let f = Curve::affine(1.0, 1.0).unwrap();
        let g = Curve::linear(2.0).unwrap();
        assert!(close(
            horizontal_deviation(&f, &g, 1.0).unwrap(),
            1.0,
            1e-15
        ));
        let h = Curve::linear(3.0).unwrap();
        assert_eq!(horizontal_deviation(&h, &h, 0.0).unwrap(), 0.0);
        // (σ + σ_f + σ_g) / R
        let g = Curve::affine(4.0, -2.0).unwrap();
        assert!(close(
            horizontal_deviation(&f, &g, 5.0).unwrap(),
            2.0,
            1e-15
        ));
    }

    #[test]
    fn horizontal_deviation_through_flat_service() {
        // g is flat at 2 on [1, 3]; f + σ crosses 2 at t = 1.
        let f = Curve::affine(1.0, 0.0).unwrap();
        let g = Curve::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0)], 2.0).unwrap();
        // Just after t = 1 the demand exceeds 2, reached by g only after s = 3.
        let d = horizontal_deviation(&f, &g, 1.0).unwrap();
        assert!(close(d, 2.0, 1e-12), "{d}");
    }

    #[test]
    fn horizontal_deviation_divergence() {
        let f = Curve::linear(3.0).unwrap();
        let g = Curve::linear(2.0).unwrap();
        assert!(horizontal_deviation(&f, &g, 0.0).is_err());
        let bounded = Curve::new(vec![(0.0, 0.0), (1.0, 5.0)], 0.0).unwrap();
        let flat = Curve::affine(0.0, 4.0).unwrap();
        assert!(horizontal_deviation(&flat, &bounded, 0.5).is_ok());
        assert!(horizontal_deviation(&flat, &bounded, 2.0).is_err());
    }

    #[test]
    fn sub_closes_to_non_decreasing() {
        let a = Curve::linear(10.0).unwrap();
        let b = Curve::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 15.0)], 1.0).unwrap();
        let d = a.sub(&b).unwrap();
        // raw difference: 10t on [0,1], 10 at 1 -> 5 at 2, then 9t-... rising
        for &t in &[0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 10.0] {
            let raw = a.at(t) - b.at(t);
            assert!(d.at(t) <= raw + 1e-12);
        }
        assert_eq!(d.at(2.0), 5.0);
        assert_eq!(d.at(1.0), 5.0);
        assert_eq!(d.at(0.5), 5.0);
        assert_eq!(d.at(0.25), 2.5);
        assert_eq!(d.terminal_slope(), 9.0);
    }

    #[test]
    fn add_rate_shifts_slopes() {
        let c = Curve::affine(5.0, -1.0).unwrap();
        assert_eq!(c.add_rate(-2.0).unwrap(), Curve::affine(3.0, -1.0).unwrap());
        assert!(c.add_rate(-6.0).is_err());
    }
}
