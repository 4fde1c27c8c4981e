use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hptowec_core::feasibility::linspace;
use hptowec_core::{DesignBounds, DesignVector, Execution, Pipeline, Scenario, Simulator};

fn batch() -> Vec<DesignVector> {
    let b = DesignBounds::default();
    let aps = linspace(b.piston_area[0], b.piston_area[1], 4);
    let vhs = linspace(2.0, b.hpa_volume[1], 4);
    aps.iter()
        .flat_map(|&ap| vhs.iter().map(move |&vh| DesignVector { piston_area: ap, hpa_volume: vh, ..b.center() }))
        .collect()
}

fn batch_evaluation(c: &mut Criterion) {
    let mut scenario = Scenario::default();
    scenario.sim.duration = 200.0;
    scenario.sim.dt = 0.05;
    let sim = Simulator::new(scenario).expect("default scenario is valid");
    let designs = batch();

    let mut group = c.benchmark_group("batch_16_designs");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &exec| {
            bch.iter(|| exec.map(&designs, |d| sim.assess(d)))
        });
    }
    group.finish();
}

criterion_group!(benches, batch_evaluation);
criterion_main!(benches);
