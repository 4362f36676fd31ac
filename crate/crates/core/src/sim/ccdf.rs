use crate::error::{Error, Result};

/// Empirical complementary distribution of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCcdf {
    sorted: Vec<f64>,
}

impl EmpiricalCcdf {
    /// NaN samples are rejected.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::param("samples", "NaN sample"));
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn count(&self) -> usize {
        self.sorted.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples strictly above `x`.
    pub fn ccdf(&self, x: f64) -> f64 {
        if self.sorted.is_empty() {
            return 0.0;
        }
        let above = self.sorted.len() - self.sorted.partition_point(|&v| v <= x);
        above as f64 / self.sorted.len() as f64
    }

    /// Smallest sample value `q` with `ccdf(q) <= p`. Needs `p >= 1/count`.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        let n = self.sorted.len();
        if n == 0 || !(p >= 1.0 / n as f64) || p > 1.0 {
            return None;
        }
        // at most n - rank samples lie above the rank-th order statistic
        // and any smaller value has more than n p above it
        let allowed = ((n as f64 * p) * (1.0 + 1e-12)).floor() as usize;
        let rank = n - allowed.min(n - 1);
        Some(self.sorted[rank - 1])
    }

    pub fn merge(&self, other: &Self) -> Self {
        let (a, b) = (&self.sorted, &other.sorted);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                out.push(a[i]);
                i += 1;
            } else {
                out.push(b[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self { sorted: out }
    }
}
