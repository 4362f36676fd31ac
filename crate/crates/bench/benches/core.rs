use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use snetcalc::sim::{run_tandem, virtual_delay_samples};
use snetcalc::{
    convolve, horizontal_deviation, optimize, optimize_closed_form, optimize_independent,
    MmooParams, Objective, OptimizerSettings, StieltjesGrid, ThetaGrid,
};
use snetcalc_bench::{concave, convex, reference_network, reference_sim};

fn curves(c: &mut Criterion) {
    let mut group = c.benchmark_group("convolve");
    for n in [4, 16, 64, 256] {
        let (f, g) = (concave(n, 1e3, 1e-3), convex(n, 1e-3));
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| convolve(black_box(&f), black_box(&g)))
        });
    }
    group.finish();
    let f = concave(64, 1e4, 1e-3);
    let g = convex(64, 1e-3).add_rate(1e9).unwrap();
    c.bench_function("horizontal_deviation/64", |b| {
        b.iter(|| horizontal_deviation(black_box(&f), black_box(&g), 1e3).unwrap())
    });
}

fn bounds(c: &mut Criterion) {
    let settings = OptimizerSettings::default();
    let mut group = c.benchmark_group("optimize_delay");
    for hops in [1, 5, 20] {
        let (through, spec) = reference_network(hops, MmooParams::high_burstiness());
        group.bench_with_input(BenchmarkId::new("union", hops), &hops, |b, _| {
            b.iter(|| optimize(&through, &spec, Objective::Delay, &settings).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("closed_form", hops), &hops, |b, _| {
            b.iter(|| {
                optimize_closed_form(&through, &spec, Objective::Delay, &ThetaGrid::default())
                    .unwrap()
            })
        });
    }
    group.sample_size(10);
    let (through, spec) = reference_network(3, MmooParams::high_burstiness());
    group.bench_function("independent/3", |b| {
        b.iter(|| {
            optimize_independent(
                &through,
                &spec,
                Objective::Delay,
                &settings,
                StieltjesGrid::default(),
            )
            .unwrap()
        })
    });
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for hops in [1, 4] {
        let cfg = reference_sim(hops, 100_000);
        group.bench_with_input(
            BenchmarkId::new("tandem_100k_slots", hops),
            &hops,
            |b, _| {
                b.iter(|| {
                    virtual_delay_samples(&run_tandem(&cfg, 0).unwrap())
                        .unwrap()
                        .count()
                })
            },
        );
    }
    group.finish();
}

criterion_group!(benches, curves, bounds, simulation);
criterion_main!(benches);
