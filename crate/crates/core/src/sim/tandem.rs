use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;

use super::ccdf::EmpiricalCcdf;
use super::rng::StreamKey;
use super::source::Source;
use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// seconds
    pub slot: f64,
    /// number of slots
    pub horizon: usize,
    pub hops: usize,
    /// bits/second
    pub capacity: f64,
    pub through: Source,
    /// Fresh, independent cross traffic at every hop.
    pub cross: Option<Source>,
    pub seed: u64,
    pub replications: usize,
    /// Leading fraction of the horizon excluded from delay samples.
    pub warmup: f64,
    /// Run even when the mean load reaches the capacity.
    pub allow_unstable: bool,
}

impl SimConfig {
    pub fn new(hops: usize, capacity: f64, through: Source, cross: Option<Source>) -> Self {
        Self {
            slot: 1e-4,
            horizon: 1_000_000,
            hops,
            capacity,
            through,
            cross,
            seed: 0,
            replications: 1,
            warmup: 0.1,
            allow_unstable: false,
        }
    }

    pub fn mean_load(&self) -> f64 {
        self.through.mean_rate() + self.cross.map_or(0.0, |c| c.mean_rate())
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("slot", self.slot)?;
        require_positive("capacity", self.capacity)?;
        if self.horizon == 0 {
            return Err(Error::param("horizon", "at least one slot required"));
        }
        if self.hops == 0 {
            return Err(Error::param("hops", "at least one hop required"));
        }
        if self.replications == 0 {
            return Err(Error::param(
                "replications",
                "at least one replication required",
            ));
        }
        if !(0.0..1.0).contains(&self.warmup) {
            return Err(Error::param("warmup", "must lie in [0, 1)"));
        }
        self.through.validate()?;
        if let Some(c) = &self.cross {
            c.validate()?;
        }
        let load = self.mean_load();
        if load >= self.capacity && !self.allow_unstable {
            return Err(Error::Unstable {
                demand: load,
                rate: self.capacity,
            });
        }
        Ok(())
    }

    /// First slot boundary that is sampled.
    pub fn warmup_slots(&self) -> usize {
        (self.warmup * self.horizon as f64).ceil() as usize
    }
}

/// Sample path of one replication.
///
/// `through[0]` holds the cumulative external through arrivals at slot
/// boundaries `0..=horizon`; `through[h]` the cumulative through departures
/// of hop `h`, which are the arrivals of hop `h + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TandemTrace {
    pub slot: f64,
    pub capacity: f64,
    pub warmup: usize,
    pub through: Vec<Vec<f64>>,
    /// Cross-traffic bits arriving in each slot, per hop.
    pub cross: Vec<Vec<f64>>,
    /// Total queued bits (through and cross) at the end of each slot, per hop.
    pub backlog: Vec<Vec<f64>>,
}

impl TandemTrace {
    pub fn hops(&self) -> usize {
        self.through.len() - 1
    }

    pub fn horizon(&self) -> usize {
        self.through[0].len() - 1
    }

    pub fn arrivals(&self) -> &[f64] {
        &self.through[0]
    }

    /// End-to-end through departures.
    pub fn departures(&self) -> &[f64] {
        &self.through[self.hops()]
    }
}

fn cumulative(per_slot: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(per_slot.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for &x in per_slot {
        acc += x;
        out.push(acc);
    }
    out
}

/// FIFO link serving `budget` bits per slot. Bits that arrive in the same
/// slot leave in proportion to their share of that slot's arrivals.
/// Returns per-slot through departures and end-of-slot backlog.
fn fifo(through: &[f64], cross: &[f64], budget: f64) -> (Vec<f64>, Vec<f64>) {
    let mut queue: VecDeque<(f64, f64)> = VecDeque::new();
    let mut out = Vec::with_capacity(through.len());
    let mut backlog = Vec::with_capacity(through.len());
    let mut queued = 0.0;
    for (&a, &c) in through.iter().zip(cross) {
        if a + c > 0.0 {
            queue.push_back((a, c));
            queued += a + c;
        }
        let mut left = budget;
        let mut sent = 0.0;
        while left > 0.0 {
            let Some(front) = queue.front_mut() else {
                break;
            };
            let size = front.0 + front.1;
            if size <= left {
                left -= size;
                sent += front.0;
                queue.pop_front();
            } else {
                let share = left / size;
                sent += front.0 * share;
                front.0 -= front.0 * share;
                front.1 -= front.1 * share;
                left = 0.0;
            }
        }
        queued = if queue.is_empty() {
            0.0
        } else {
            (queued - (budget - left)).max(0.0)
        };
        out.push(sent);
        backlog.push(queued);
    }
    (out, backlog)
}

/// Simulates replication `replication` of the configured tandem.
pub fn run_tandem(cfg: &SimConfig, replication: u64) -> Result<TandemTrace> {
    cfg.validate()?;
    let key = |hop: usize| StreamKey {
        seed: cfg.seed,
        replication,
        hop: hop as u64,
        flow: 0,
    };
    let budget = cfg.capacity * cfg.slot;
    let mut arrivals = cfg.through.generate(cfg.horizon, cfg.slot, key(0));
    let mut through = vec![cumulative(&arrivals)];
    let mut cross_all = Vec::with_capacity(cfg.hops);
    let mut backlog_all = Vec::with_capacity(cfg.hops);
    for h in 1..=cfg.hops {
        let cross = match &cfg.cross {
            Some(c) => c.generate(cfg.horizon, cfg.slot, key(h)),
            None => vec![0.0; cfg.horizon],
        };
        let (out, backlog) = fifo(&arrivals, &cross, budget);
        through.push(cumulative(&out));
        cross_all.push(cross);
        backlog_all.push(backlog);
        arrivals = out;
    }
    Ok(TandemTrace {
        slot: cfg.slot,
        capacity: cfg.capacity,
        warmup: cfg.warmup_slots(),
        through,
        cross: cross_all,
        backlog: backlog_all,
    })
}

/// End-to-end virtual delay `min{d >= 0 : A(t) <= D(t + d)}` at every slot
/// boundary from the warm-up on, in seconds. Departures are linear within a
/// slot. `None` where the horizon ends before the bits leave.
#[allow(clippy::needless_range_loop)]
pub fn virtual_delays(trace: &TandemTrace) -> Vec<Option<f64>> {
    let a = trace.arrivals();
    let d = trace.departures();
    let n = a.len();
    let mut out = Vec::with_capacity(n.saturating_sub(trace.warmup));
    let mut j = trace.warmup;
    for k in trace.warmup..n {
        let target = a[k];
        // cumulative sums of equal traffic may differ in the last bits
        let tol = 1e-9 + 1e-12 * target;
        j = j.max(k);
        while j < n && d[j] < target - tol {
            j += 1;
        }
        if j == n {
            out.push(None);
            continue;
        }
        if j == k {
            out.push(Some(0.0));
            continue;
        }
        let (lo, hi) = (d[j - 1], d[j]);
        let frac = if hi > lo {
            ((target - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            1.0
        };
        out.push(Some(((j - 1 - k) as f64 + frac) * trace.slot));
    }
    out
}

/// Uncensored virtual delays after the warm-up.
pub fn virtual_delay_samples(trace: &TandemTrace) -> Result<EmpiricalCcdf> {
    EmpiricalCcdf::new(virtual_delays(trace).into_iter().flatten().collect())
}

/// Runs every replication, in parallel, and maps each trace through `f`.
/// Results are in replication order.
pub fn replicate<T: Send>(
    cfg: &SimConfig,
    f: impl Fn(u64, &TandemTrace) -> T + Sync,
) -> Result<Vec<T>> {
    cfg.validate()?;
    (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| run_tandem(cfg, r).map(|trace| f(r, &trace)))
        .collect()
}

/// Writes slot index, per-hop backlog and end-to-end virtual delay for
/// every `stride`-th slot boundary after the warm-up. Censored delays are
/// written as `nan`.
pub fn write_trace(trace: &TandemTrace, stride: usize, mut w: impl Write) -> std::io::Result<()> {
    let stride = stride.max(1);
    let mut header = vec!["slot".to_string()];
    header.extend((1..=trace.hops()).map(|h| format!("backlog_hop{h}_bits")));
    header.push("delay_s".to_string());
    writeln!(w, "{}", header.join(" "))?;
    let delays = virtual_delays(trace);
    for (i, delay) in delays.iter().enumerate().step_by(stride) {
        let k = trace.warmup + i;
        write!(w, "{k}")?;
        for b in &trace.backlog {
            // boundary k closes slot k - 1
            let v = if k == 0 { 0.0 } else { b[k - 1] };
            write!(w, " {v}")?;
        }
        match delay {
            Some(d) => writeln!(w, " {d}")?,
            None => writeln!(w, " nan")?,
        }
    }
    Ok(())
}
