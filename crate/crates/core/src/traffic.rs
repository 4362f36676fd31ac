//! Traffic descriptions in the effective-bandwidth (σ(θ), ρ(θ)) calculus.
//!
//! Units: rates in bits/second, sizes in bits, θ in 1/bits. With θ in 1/bits
//! the product `P θ` is a frequency and can be mixed with the MMOO
//! transition rates `r10`, `r01`.

use crate::error::{require_positive, Error, Result};
use crate::minplus::Curve;

/// Exponential violation-probability bound `σ -> min(1, a e^{-θ σ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpError {
    amplitude: f64,
    decay: f64,
}

impl ExpError {
    pub fn new(amplitude: f64, decay: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::param(
                "amplitude",
                format!("must be finite and >= 0, got {amplitude}"),
            ));
        }
        require_positive("decay", decay)?;
        Ok(Self { amplitude, decay })
    }

    /// The Chernoff bound `e^{-θσ}` of a (σ(θ), ρ(θ))-constrained source.
    pub fn chernoff(theta: f64) -> Result<Self> {
        Self::new(1.0, theta)
    }

    /// An error function that is identically zero (deterministic guarantee).
    pub fn zero() -> Self {
        Self {
            amplitude: 0.0,
            decay: 1.0,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0
    }

    /// `min(1, a e^{-θσ})`.
    pub fn eval(&self, sigma: f64) -> f64 {
        self.uncapped(sigma).min(1.0)
    }

    /// `a e^{-θσ}` without the cap at one.
    pub fn uncapped(&self, sigma: f64) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.amplitude * (-self.decay * sigma).exp()
        }
    }

    /// `∫_0^∞ a e^{-θu} du = a / θ`, finite for every valid error.
    pub fn integral(&self) -> f64 {
        self.amplitude / self.decay
    }
}

/// Geometric tail sum `Σ_{u >= 0} ε(σ + δ·slot·u)` of an exponential error,
/// which is again exponential with amplitude `a / (1 - e^{-θ δ slot})`.
///
/// This turns a per-instant envelope guarantee into a sample-path one; each
/// discrete step advances one slot and carries `δ·slot` bits.
pub fn tail_sum(error: &ExpError, delta: f64, slot: f64) -> Result<ExpError> {
    require_positive("delta", delta)?;
    require_positive("slot", slot)?;
    if error.is_zero() {
        return Ok(*error);
    }
    let step = error.decay * delta * slot;
    // -expm1(-x) = 1 - e^{-x}, accurate for small x
    let amplitude = error.amplitude / -(-step).exp_m1();
    ExpError::new(amplitude, error.decay)
}

/// Markov-modulated on-off source: sends at `peak` while On, nothing while Off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmooParams {
    /// Peak rate P, bits/second.
    pub peak: f64,
    /// On -> Off transition rate, 1 / E[T_on].
    pub r10: f64,
    /// Off -> On transition rate, 1 / E[T_off].
    pub r01: f64,
}

impl MmooParams {
    pub fn new(peak: f64, r10: f64, r01: f64) -> Result<Self> {
        require_positive("peak", peak)?;
        require_positive("r10", r10)?;
        require_positive("r01", r01)?;
        Ok(Self { peak, r10, r01 })
    }

    /// From the peak rate and mean On/Off durations in seconds.
    pub fn from_durations(peak: f64, mean_on: f64, mean_off: f64) -> Result<Self> {
        require_positive("mean_on", mean_on)?;
        require_positive("mean_off", mean_off)?;
        Self::new(peak, 1.0 / mean_on, 1.0 / mean_off)
    }

    /// 1.5 Mb/s peak, 10 ms On, 90 ms Off.
    pub fn high_burstiness() -> Self {
        Self::from_durations(1.5e6, 10e-3, 90e-3).expect("valid preset")
    }

    /// 1.5 Mb/s peak, 1 ms On, 9 ms Off.
    pub fn low_burstiness() -> Self {
        Self::from_durations(1.5e6, 1e-3, 9e-3).expect("valid preset")
    }

    pub fn mean_on(&self) -> f64 {
        1.0 / self.r10
    }

    pub fn mean_off(&self) -> f64 {
        1.0 / self.r01
    }

    /// Stationary probability of the On state.
    pub fn on_probability(&self) -> f64 {
        self.r01 / (self.r01 + self.r10)
    }

    /// Long-run average rate `m = P r01 / (r01 + r10)`.
    pub fn mean_rate(&self) -> f64 {
        self.peak * self.on_probability()
    }
}

/// Effective bandwidth α(θ) of one MMOO source:
///
/// `α(θ) = (Pθ - r10 - r01 + sqrt((Pθ - r10 + r01)^2 + 4 r10 r01)) / (2θ)`.
///
/// For small θ the leading terms cancel; there the algebraically equal form
/// `2 r01 P / (sqrt(..) - (Pθ - r10 - r01))` is used instead.
pub fn mmoo_alpha(p: &MmooParams, theta: f64) -> Result<f64> {
    require_positive("theta", theta)?;
    let pt = p.peak * theta;
    let x = pt - p.r10 - p.r01;
    let y = pt - p.r10 + p.r01;
    let root = (y * y + 4.0 * p.r10 * p.r01).sqrt();
    let alpha = if x < 0.0 {
        2.0 * p.r01 * p.peak / (root - x)
    } else {
        (x + root) / (2.0 * theta)
    };
    Ok(alpha)
}

/// Tabulated `θ -> (σ(θ), ρ(θ))`, interpolated linearly in `ln θ`.
///
/// A single-row table is constant in θ.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaRhoTable {
    rows: Vec<SigmaRhoRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaRhoRow {
    pub theta: f64,
    /// bits
    pub sigma: f64,
    /// bits/second
    pub rho: f64,
}

impl SigmaRhoTable {
    pub fn new(mut rows: Vec<SigmaRhoRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("sigma-rho table"));
        }
        for r in &rows {
            require_positive("theta", r.theta)?;
            require_positive("rho", r.rho)?;
            if !(r.sigma.is_finite() && r.sigma >= 0.0) {
                return Err(Error::param(
                    "sigma",
                    format!("must be finite and >= 0, got {}", r.sigma),
                ));
            }
        }
        rows.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        if rows.windows(2).any(|w| w[0].theta == w[1].theta) {
            return Err(Error::param("theta", "duplicate theta in sigma-rho table"));
        }
        Ok(Self { rows })
    }

    /// Constant `(σ, ρ)` for every θ.
    pub fn constant(sigma: f64, rho: f64) -> Result<Self> {
        Self::new(vec![SigmaRhoRow {
            theta: 1.0,
            sigma,
            rho,
        }])
    }

    pub fn rows(&self) -> &[SigmaRhoRow] {
        &self.rows
    }

    pub fn lookup(&self, theta: f64) -> Result<(f64, f64)> {
        require_positive("theta", theta)?;
        if let [only] = self.rows.as_slice() {
            return Ok((only.sigma, only.rho));
        }
        let (lo, hi) = (self.rows[0].theta, self.rows[self.rows.len() - 1].theta);
        if theta < lo || theta > hi {
            return Err(Error::param(
                "theta",
                format!("{theta:e} outside tabulated range [{lo:e}, {hi:e}]"),
            ));
        }
        let i = self
            .rows
            .partition_point(|r| r.theta <= theta)
            .clamp(1, self.rows.len() - 1);
        let (a, b) = (self.rows[i - 1], self.rows[i]);
        let w = (theta.ln() - a.theta.ln()) / (b.theta.ln() - a.theta.ln());
        Ok((
            a.sigma + w * (b.sigma - a.sigma),
            a.rho + w * (b.rho - a.rho),
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrafficKind {
    Mmoo(MmooParams),
    SigmaRho(SigmaRhoTable),
}

/// `count` independent, identically distributed flows of one kind.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficModel {
    pub kind: TrafficKind,
    pub count: u32,
}

impl TrafficModel {
    pub fn new(kind: TrafficKind, count: u32) -> Result<Self> {
        if count == 0 {
            return Err(Error::param("count", "at least one flow required"));
        }
        Ok(Self { kind, count })
    }

    pub fn mmoo(params: MmooParams, count: u32) -> Result<Self> {
        Self::new(TrafficKind::Mmoo(params), count)
    }

    pub fn sigma_rho(table: SigmaRhoTable, count: u32) -> Result<Self> {
        Self::new(TrafficKind::SigmaRho(table), count)
    }

    /// Aggregate `(σ(θ), ρ(θ))`. Effective bandwidths of independent flows
    /// add, so both are scaled by the flow count.
    pub fn sigma_rho_at(&self, theta: f64) -> Result<(f64, f64)> {
        let n = f64::from(self.count);
        match &self.kind {
            TrafficKind::Mmoo(p) => Ok((0.0, n * mmoo_alpha(p, theta)?)),
            TrafficKind::SigmaRho(t) => {
                let (s, r) = t.lookup(theta)?;
                Ok((n * s, n * r))
            }
        }
    }

    /// Long-run aggregate rate, when the model knows it.
    pub fn mean_rate(&self) -> Option<f64> {
        match &self.kind {
            TrafficKind::Mmoo(p) => Some(f64::from(self.count) * p.mean_rate()),
            TrafficKind::SigmaRho(_) => None,
        }
    }
}

/// A curve bounding cumulative arrivals over any window, together with the
/// error function bounding the probability of exceeding it by more than σ.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalEnvelope {
    pub curve: Curve,
    pub error: ExpError,
}

/// Statistical arrival envelope `G(t) = ρ(θ) t + σ(θ)` with Chernoff error
/// `e^{-θσ}`.
pub fn arrival_envelope(model: &TrafficModel, theta: f64) -> Result<ArrivalEnvelope> {
    let (sigma, rho) = model.sigma_rho_at(theta)?;
    Ok(ArrivalEnvelope {
        curve: Curve::affine(rho, sigma)?,
        error: ExpError::chernoff(theta)?,
    })
}
