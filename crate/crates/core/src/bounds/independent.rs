//! Violation probability when the arrival and every hop are statistically
//! independent.
//!
//! Each tail-summed term `T_i(σ) = min(1, A_i e^{-θ_i σ})` is read as the tail
//! of a non-negative random variable `X_i`; the bound on `P{Σ X_i > σ}` is
//! the tail of the sum of independent copies, i.e. one minus the Stieltjes
//! convolution of the complementary functions `1 - T_i`.
//!
//! Every such `X_i` is a shifted exponential: for `A_i >= 1` it is
//! `ln(A_i)/θ_i + Exp(θ_i)`; for `A_i < 1` it has an atom `1 - A_i` at zero
//! and density `A_i θ_i e^{-θ_i x}`. Shifts add, so only the unshifted parts
//! are convolved numerically. The fold works on tails directly,
//!
//! `P{X + Y > y} = P{Y > y} + ∫_{[0,y]} P{X > y - u} dF_Y(u)`,
//!
//! which keeps small probabilities free of cancellation.

use crate::error::{require_positive, Error, Result};
use crate::traffic::ExpError;

/// Uniform σ grid for the numeric convolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesGrid {
    pub points: usize,
    /// Maximum relative quadrature error, estimated by comparing against a
    /// grid of half the resolution.
    pub tolerance: f64,
}

impl Default for StieltjesGrid {
    fn default() -> Self {
        Self {
            points: 4096,
            tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Base {
    /// P{X > 0}
    mass: f64,
    decay: f64,
}

impl Base {
    fn tail(&self, y: f64) -> f64 {
        self.mass * (-self.decay * y).exp()
    }
}

fn split(terms: &[ExpError]) -> (f64, Vec<Base>) {
    let mut shift = 0.0;
    let mut bases = Vec::with_capacity(terms.len());
    for e in terms.iter().filter(|e| !e.is_zero()) {
        let a = e.amplitude();
        if a >= 1.0 {
            shift += a.ln() / e.decay();
        }
        bases.push(Base {
            mass: a.min(1.0),
            decay: e.decay(),
        });
    }
    (shift, bases)
}

/// Tail of the independent sum, tabulated on a uniform grid.
#[derive(Debug, Clone)]
pub struct IndependentTail {
    shift: f64,
    step: f64,
    tails: Vec<f64>,
    /// Single-term tails stay analytic.
    exact: Option<Base>,
    /// Largest estimated relative quadrature error over the grid.
    pub error_estimate: f64,
}

impl IndependentTail {
    /// Computes the tail for σ up to `sigma_max`.
    pub fn new(terms: &[ExpError], sigma_max: f64, grid: StieltjesGrid) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Empty("error terms"));
        }
        if grid.points < 16 {
            return Err(Error::param("points", "need at least 16 grid points"));
        }
        require_positive("tolerance", grid.tolerance)?;
        let (shift, bases) = split(terms);
        let span = (sigma_max - shift).max(0.0);
        match bases.as_slice() {
            [] => {
                return Ok(Self {
                    shift,
                    step: 0.0,
                    tails: vec![],
                    exact: Some(Base {
                        mass: 0.0,
                        decay: 1.0,
                    }),
                    error_estimate: 0.0,
                })
            }
            [one] => {
                return Ok(Self {
                    shift,
                    step: 0.0,
                    tails: vec![],
                    exact: Some(*one),
                    error_estimate: 0.0,
                })
            }
            _ => {}
        }
        let theta_max = bases.iter().map(|b| b.decay).fold(0.0, f64::max);
        let span = if span > 0.0 { span } else { 1.0 / theta_max };
        let n = grid.points;
        let step = span / (n - 1) as f64;
        let fine = fold(&bases, step, n);
        let coarse = fold(&bases, 2.0 * step, n.div_ceil(2));
        let mut error_estimate: f64 = 0.0;
        for (k, &c) in coarse.iter().enumerate() {
            let f = fine[2 * k];
            if f > 1e-250 {
                error_estimate = error_estimate.max((f - c).abs() / 3.0 / f);
            }
        }
        if error_estimate > grid.tolerance {
            return Err(Error::GridTooCoarse {
                estimate: error_estimate,
                tolerance: grid.tolerance,
            });
        }
        Ok(Self {
            shift,
            step,
            tails: fine,
            exact: None,
            error_estimate,
        })
    }

    /// Total deterministic shift `Σ ln(A_i)/θ_i` over terms with `A_i >= 1`.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Largest σ covered by the table.
    pub fn sigma_max(&self) -> f64 {
        match self.exact {
            Some(_) => f64::INFINITY,
            None => self.shift + self.step * (self.tails.len() - 1) as f64,
        }
    }

    /// `P{Σ X_i > σ}`, clipped to `[0, 1]`. `None` past the table.
    pub fn eval(&self, sigma: f64) -> Option<f64> {
        let y = sigma - self.shift;
        if y < 0.0 {
            return Some(1.0);
        }
        if let Some(b) = self.exact {
            return Some(b.tail(y).clamp(0.0, 1.0));
        }
        let pos = y / self.step;
        let k = pos.floor() as usize;
        if k + 1 >= self.tails.len() {
            let last = self.tails.len() - 1;
            return (pos <= last as f64 * (1.0 + 1e-9)).then(|| self.tails[last].clamp(0.0, 1.0));
        }
        // tails are close to exponential: interpolate the logarithm
        let (a, b) = (self.tails[k], self.tails[k + 1]);
        let w = pos - k as f64;
        let v = if a > 0.0 && b > 0.0 {
            (a.ln() + w * (b.ln() - a.ln())).exp()
        } else {
            a + w * (b - a)
        };
        Some(v.clamp(0.0, 1.0))
    }

    /// Smallest tabulated σ with tail `<= epsilon`.
    pub fn quantile(&self, epsilon: f64) -> Option<f64> {
        if let Some(b) = self.exact {
            if b.mass <= epsilon {
                return Some(self.shift);
            }
            return Some(self.shift + (b.mass / epsilon).ln() / b.decay);
        }
        let k = self.tails.iter().position(|&t| t <= epsilon)?;
        if k == 0 {
            return Some(self.shift);
        }
        let (a, b) = (self.tails[k - 1], self.tails[k]);
        let w = if b > 0.0 {
            (a.ln() - epsilon.ln()) / (a.ln() - b.ln())
        } else {
            (a - epsilon) / (a - b)
        };
        Some(self.shift + self.step * ((k - 1) as f64 + w))
    }
}

/// Tail of the sum of the unshifted base variables on `n` grid points.
///
/// Between grid points the running tail is taken as exponential (linear
/// in its logarithm), which makes each cell of
/// `∫ T(y - u) b θ e^{-θu} du` an exact integral of an exponential.
fn fold(bases: &[Base], step: f64, n: usize) -> Vec<f64> {
    let mut tail: Vec<f64> = (0..n).map(|k| bases[0].tail(k as f64 * step)).collect();
    let mut next = vec![0.0; n];
    let mut density = vec![0.0; n];
    // weighted[i]: integral over the cell where the argument of T runs
    // from i·step down to (i-1)·step, without the density factor
    let mut weighted = vec![0.0; n];
    for b in &bases[1..] {
        for (m, d) in density.iter_mut().enumerate() {
            *d = b.mass * b.decay * (-b.decay * m as f64 * step).exp();
        }
        for i in 1..n {
            let (lo, hi) = (tail[i], tail[i - 1]);
            weighted[i] = if lo > 0.0 && hi >= lo {
                // T(i·step - v) = lo e^{λ v}, v in [0, step]
                let x = ((hi / lo).ln() / step - b.decay) * step;
                lo * step
                    * if x.abs() < 1e-8 {
                        1.0 + x / 2.0
                    } else {
                        x.exp_m1() / x
                    }
            } else {
                0.5 * step * (lo + hi * (-b.decay * step).exp())
            };
        }
        let atom = 1.0 - b.mass;
        for k in 0..n {
            let mut acc = 0.0;
            for m in 0..k {
                acc += weighted[k - m] * density[m];
            }
            next[k] = b.tail(k as f64 * step) + atom * tail[k] + acc;
        }
        std::mem::swap(&mut tail, &mut next);
    }
    tail
}

/// `P{X_0 + ... + X_n > σ}` for independent variables with the given
/// tail-summed error functions.
pub fn independent_error(terms: &[ExpError], sigma: f64, grid: StieltjesGrid) -> Result<f64> {
    let tail = IndependentTail::new(terms, sigma, grid)?;
    Ok(tail.eval(sigma).expect("sigma inside the table"))
}
