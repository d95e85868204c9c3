use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use psybench::calibration::{calibrate_mml_em, CalibrationConfig};
use psybench::estimation::estimate_many;
use psybench::fixtures::{assessment_bank, recovery_items};
use psybench::simulation::{simulate_matrix, SimulationSpec, TakerSpec};
use psybench::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn spec(n: usize) -> SimulationSpec {
    SimulationSpec {
        seed: 9,
        takers: TakerSpec::Normal { n, mean: 0.0, sd: 1.0 },
        item_bank: None,
        missingness: 0.05,
    }
}

fn simulation(c: &mut Criterion) {
    let bank = assessment_bank();
    let s = spec(5000);
    let mut group = c.benchmark_group("simulate_5000x88");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate_matrix(&s, bank.item_set(), exec).unwrap())
        });
    }
    group.finish();
}

fn estimation(c: &mut Criterion) {
    let bank = assessment_bank();
    let patterns = simulate_matrix(&spec(2000), bank.item_set(), Execution::Parallel)
        .unwrap()
        .matrix
        .patterns();
    let mut group = c.benchmark_group("mle_2000x88");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| estimate_many(&patterns, bank.item_set(), exec))
        });
    }
    group.finish();
}

fn calibration(c: &mut Criterion) {
    let truth = recovery_items(40, 3);
    let matrix = simulate_matrix(&spec(2000), &truth, Execution::Parallel).unwrap().matrix;
    let mut group = c.benchmark_group("calibrate_2000x40");
    group.sample_size(10);
    for (name, execution) in MODES {
        let config = CalibrationConfig { execution, ..Default::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| calibrate_mml_em(&matrix, &config).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, simulation, estimation, calibration);
criterion_main!(benches);
