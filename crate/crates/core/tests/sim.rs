use snetcalc::sim::checks::{check_causality, dynamic_server_shortfall};
use snetcalc::sim::{
    generate_mmoo, replicate, run_tandem, virtual_delay_samples, virtual_delays, SimConfig, Source,
    StreamKey,
};
use snetcalc::MmooParams;

fn key(seed: u64) -> StreamKey {
    StreamKey {
        seed,
        replication: 0,
        hop: 0,
        flow: 0,
    }
}

fn mmoo(params: MmooParams, flows: u32) -> Source {
    Source::Mmoo { params, flows }
}

#[test]
fn long_run_rate_per_flow() {
    for (params, flows) in [
        (MmooParams::low_burstiness(), 20),
        (MmooParams::high_burstiness(), 100),
    ] {
        let slot = 1e-4;
        let horizon = 10_000_000;
        let bits: f64 = generate_mmoo(&params, flows, horizon, slot, key(7))
            .iter()
            .sum();
        let rate = bits / (horizon as f64 * slot) / f64::from(flows);
        assert!((rate / 0.15e6 - 1.0).abs() < 0.01, "{rate}");
    }
}

#[test]
fn single_hop_utilization() {
    let low = MmooParams::low_burstiness();
    let cfg = SimConfig::new(1, 100e6, mmoo(low, 100), Some(mmoo(low, 100)));
    let trace = run_tandem(&cfg, 0).unwrap();
    let offered = trace.arrivals().last().unwrap() + trace.cross[0].iter().sum::<f64>();
    let served = offered - trace.backlog[0].last().unwrap();
    let utilization = served / (cfg.capacity * cfg.slot * cfg.horizon as f64);
    assert!((utilization / 0.3 - 1.0).abs() < 0.01, "{utilization}");
}

#[test]
fn tandem_is_causal_and_each_hop_is_a_dynamic_server() {
    let high = MmooParams::high_burstiness();
    let mut cfg = SimConfig::new(3, 100e6, mmoo(high, 134), Some(mmoo(high, 333)));
    cfg.horizon = 200_000;
    let trace = run_tandem(&cfg, 0).unwrap();
    assert!(check_causality(&trace, 1e-6));
    for hop in 1..=3 {
        let shortfall = dynamic_server_shortfall(&trace, hop).unwrap();
        assert!(
            shortfall <= 1e-6 * trace.arrivals().last().unwrap(),
            "hop {hop}: {shortfall}"
        );
    }
    let e2e = virtual_delays(&trace);
    assert!(e2e.iter().flatten().all(|&d| d >= 0.0));
}

#[test]
fn same_seed_same_trace() {
    let high = MmooParams::high_burstiness();
    let mut cfg = SimConfig::new(2, 100e6, mmoo(high, 50), Some(mmoo(high, 200)));
    cfg.horizon = 50_000;
    cfg.seed = 42;
    cfg.replications = 3;
    let a = replicate(&cfg, |_, t| t.clone()).unwrap();
    let b = replicate(&cfg, |_, t| t.clone()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a[0], a[1]);
    cfg.seed = 43;
    let c = replicate(&cfg, |_, t| t.clone()).unwrap();
    assert_ne!(a[0], c[0]);
}

#[test]
fn delay_ccdf_is_monotone() {
    let low = MmooParams::low_burstiness();
    let mut cfg = SimConfig::new(2, 40e6, mmoo(low, 100), Some(mmoo(low, 100)));
    cfg.horizon = 200_000;
    let ccdf = virtual_delay_samples(&run_tandem(&cfg, 0).unwrap()).unwrap();
    assert!(ccdf.count() > 170_000);
    let probes: Vec<f64> = (0..50)
        .map(|k| k as f64 * 2e-5)
        .map(|x| ccdf.ccdf(x))
        .collect();
    assert!(probes.windows(2).all(|w| w[1] <= w[0]));
    assert!(ccdf.quantile(1.0 / ccdf.count() as f64).is_some());
    assert!(ccdf.quantile(0.5 / ccdf.count() as f64).is_none());
}
