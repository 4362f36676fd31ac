use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::rng::{stream, StreamKey};
use crate::error::{require_positive, Error, Result};
use crate::traffic::MmooParams;

/// Traffic offered by one class of flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Mmoo {
        params: MmooParams,
        flows: u32,
    },
    /// Deterministic fluid at a fixed rate, bits/second.
    ConstantRate {
        rate: f64,
    },
}

impl Source {
    pub fn mean_rate(&self) -> f64 {
        match self {
            Source::Mmoo { params, flows } => f64::from(*flows) * params.mean_rate(),
            Source::ConstantRate { rate } => *rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Source::Mmoo { flows: 0, .. } => {
                Err(Error::param("flows", "at least one flow required"))
            }
            Source::Mmoo { params, .. } => {
                MmooParams::new(params.peak, params.r10, params.r01).map(|_| ())
            }
            Source::ConstantRate { rate } => {
                if rate.is_finite() && *rate >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param(
                        "rate",
                        format!("must be finite and >= 0, got {rate}"),
                    ))
                }
            }
        }
    }

    /// Bits arriving in each of `horizon` slots, summed over all flows.
    pub(crate) fn generate(&self, horizon: usize, slot: f64, key: StreamKey) -> Vec<f64> {
        match *self {
            Source::Mmoo { params, flows } => generate_mmoo(&params, flows, horizon, slot, key),
            Source::ConstantRate { rate } => vec![rate * slot; horizon],
        }
    }
}

/// One sojourn of an On/Off path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dwell {
    pub on: bool,
    /// seconds
    pub length: f64,
}

/// Alternating On/Off sojourns of one MMOO flow in continuous time,
/// started in the stationary distribution.
pub struct MmooPath<R> {
    rng: R,
    on: bool,
    on_time: Exp<f64>,
    off_time: Exp<f64>,
}

impl<R: Rng> MmooPath<R> {
    pub fn new(params: &MmooParams, mut rng: R) -> Self {
        let on = rng.random_bool(params.on_probability());
        Self {
            rng,
            // sojourns are memoryless, so the first one needs no correction
            on,
            on_time: Exp::new(params.r10).expect("positive rate"),
            off_time: Exp::new(params.r01).expect("positive rate"),
        }
    }
}

impl<R: Rng> Iterator for MmooPath<R> {
    type Item = Dwell;

    fn next(&mut self) -> Option<Dwell> {
        let on = self.on;
        let length = if on {
            self.on_time.sample(&mut self.rng)
        } else {
            self.off_time.sample(&mut self.rng)
        };
        self.on = !on;
        Some(Dwell { on, length })
    }
}

/// Per-slot arrivals of `n_flows` independent MMOO flows. Flow `i` draws
/// from the stream `key` with `flow = i`.
///
/// Each On period contributes `peak` times its overlap with every slot, so
/// the dwell-time distribution is exactly exponential.
pub fn generate_mmoo(
    params: &MmooParams,
    n_flows: u32,
    horizon: usize,
    slot: f64,
    key: StreamKey,
) -> Vec<f64> {
    require_positive("slot", slot).expect("positive slot");
    let end = horizon as f64;
    let full = params.peak * slot;
    let mut partial = vec![0.0; horizon + 1];
    // number of flows On for a whole slot, as a difference array
    let mut steps = vec![0i64; horizon + 1];
    for flow in 0..n_flows {
        let path = MmooPath::new(
            params,
            stream(StreamKey {
                flow: u64::from(flow),
                ..key
            }),
        );
        let mut t = 0.0;
        for dwell in path {
            if t >= end {
                break;
            }
            let next = (t + dwell.length / slot).min(end);
            if dwell.on {
                let (ka, kb) = (t.floor() as usize, next.floor() as usize);
                if ka == kb {
                    partial[ka] += full * (next - t);
                } else {
                    partial[ka] += full * ((ka + 1) as f64 - t);
                    steps[ka + 1] += 1;
                    steps[kb] -= 1;
                    partial[kb] += full * (next - kb as f64);
                }
            }
            t = next;
        }
    }
    let mut level = 0i64;
    let mut out = Vec::with_capacity(horizon);
    for k in 0..horizon {
        level += steps[k];
        out.push(partial[k] + level as f64 * full);
    }
    out
}
