//! Inputs shared by the benchmarks in `benches/`.

use snetcalc::sim::{SimConfig, Source};
use snetcalc::{Curve, MmooParams, NetworkSpec, TrafficModel};

/// Concave curve with `segments` pieces: slopes fall geometrically,
/// breakpoints every `step` seconds.
pub fn concave(segments: usize, start: f64, step: f64) -> Curve {
    let mut points = vec![(0.0, start)];
    let mut slope = 1e8;
    for i in 0..segments.saturating_sub(1) {
        let (t, y) = points[i];
        points.push((t + step, y + slope * step));
        slope *= 0.9;
    }
    Curve::new(points, slope).expect("valid curve")
}

/// Convex curve with `segments` pieces and increasing slopes.
pub fn convex(segments: usize, step: f64) -> Curve {
    let mut points = vec![(0.0, 0.0)];
    let mut slope = 1e6;
    for i in 0..segments.saturating_sub(1) {
        let (t, y) = points[i];
        points.push((t + step, y + slope * step));
        slope *= 1.1;
    }
    Curve::new(points, slope).expect("valid curve")
}

/// 134 through and 333 cross MMOO flows on 100 Mb/s links.
pub fn reference_network(hops: usize, params: MmooParams) -> (TrafficModel, NetworkSpec) {
    (
        TrafficModel::mmoo(params, 134).expect("valid"),
        NetworkSpec {
            hops,
            capacity: 100e6,
            cross: Some(TrafficModel::mmoo(params, 333).expect("valid")),
            epsilon: 1e-9,
            slot: 1e-4,
        },
    )
}

/// Tandem of `hops` nodes with 100 low-burstiness flows of each class.
pub fn reference_sim(hops: usize, slots: usize) -> SimConfig {
    let low = MmooParams::low_burstiness();
    let mut cfg = SimConfig::new(
        hops,
        100e6,
        Source::Mmoo {
            params: low,
            flows: 100,
        },
        Some(Source::Mmoo {
            params: low,
            flows: 100,
        }),
    );
    cfg.horizon = slots;
    cfg
}
