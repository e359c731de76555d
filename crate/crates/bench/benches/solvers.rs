use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lepsim::{compute_rates, filter_diagonalize_real, population_block, renormalized_rates, SolverKind, TransferNormalization};
use lepsim_bench::simulation;

fn rates(c: &mut Criterion) {
    let sim = simulation(200.0, 0.02);
    c.bench_function("compute_rates", |b| b.iter(|| compute_rates(black_box(&sim.bath), black_box(&sim.system)).unwrap()));
    let r = compute_rates(&sim.bath, &sim.system).unwrap();
    let pop = population_block(&r);
    c.bench_function("renormalized_rates", |b| {
        b.iter(|| renormalized_rates(&sim.bath, &sim.system, black_box(&r), &pop, None, TransferNormalization::MarkovConsistent).unwrap())
    });
}

fn trajectories(c: &mut Criterion) {
    let mut g = c.benchmark_group("trajectory");
    g.sample_size(10);
    for (kind, t_end) in [(SolverKind::Bloch, 200.0), (SolverKind::Generalized, 200.0), (SolverKind::NonMarkov, 200.0), (SolverKind::Negf, 50.0)] {
        let sim = simulation(t_end, 0.02);
        g.bench_with_input(BenchmarkId::new(kind.name(), t_end), &sim, |b, sim| b.iter(|| sim.run(kind).unwrap()));
    }
    g.finish();
}

fn eigenmodes(c: &mut Criterion) {
    let sim = simulation(200.0, 0.02);
    let sz = sim.sz(SolverKind::Bloch).unwrap();
    let fd = SolverKind::Bloch.analysis_profile();
    c.bench_function("filter_diagonalize/201", |b| b.iter(|| filter_diagonalize_real(black_box(&sz), &fd).unwrap()));
}

criterion_group!(benches, rates, trajectories, eigenmodes);
criterion_main!(benches);
