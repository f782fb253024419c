use contagion_bench::{episode_model, portfolio, zipf};
use contagion_core::calibration::{objective_j2, InfectionPanel, ObjectiveConfig};
use contagion_core::portfolio::{simulate_scenario, approx_episode_loss};
use contagion_core::sir::{simulate_sir, TrajectoryMean};
use contagion_core::stochproc::simulate_cir;
use contagion_core::{CirSpec, RngStream, ThetaSpec, TimeGrid};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn cir(c: &mut Criterion) {
    let spec = CirSpec::new(0.4474, 0.73, 0.3, 0.73).unwrap();
    let grid = TimeGrid::daily(100).unwrap();
    let mut rng = RngStream::master(1).rng();
    c.bench_function("cir_path_100d", |b| b.iter(|| simulate_cir(black_box(&spec), &grid, &mut rng)));
}

fn sir(c: &mut Criterion) {
    let model = episode_model(100);
    let params = model.env.simulate(&model.grid, RngStream::master(2)).sir_params();
    c.bench_function("sir_trajectory_100d", |b| {
        b.iter(|| simulate_sir(black_box(&model.initial), &params, &model.grid).unwrap())
    });
}

fn scenario(c: &mut Criterion) {
    let model = episode_model(100);
    let firms = portfolio(10);
    let master = RngStream::master(3);
    let mut m = 0;
    c.bench_function("scenario_110_firms", |b| {
        b.iter(|| {
            m += 1;
            simulate_scenario(&model, &firms, master.stream(m)).unwrap()
        })
    });
    c.bench_function("approx_episode_loss_110_firms", |b| {
        b.iter(|| {
            m += 1;
            approx_episode_loss(&model, &firms, master.stream(m)).unwrap()
        })
    });
}

fn objective(c: &mut Criterion) {
    let model = episode_model(100);
    let h: f64 = model.populations.iter().sum();
    let mut mean = TrajectoryMean::new();
    for m in 0..20 {
        let (_, traj) = model.simulate_contagion(RngStream::master(4).stream(m)).unwrap();
        mean.add(&traj);
    }
    let traj = mean.finish().unwrap();
    let panel = InfectionPanel::new(
        traj.states
            .iter()
            .map(|s| s.i.iter().map(|i| (h * i).round()).collect())
            .collect(),
    )
    .unwrap();
    let zipf = zipf();
    let cfg = ObjectiveConfig {
        scenarios: 20,
        ..Default::default()
    };
    let theta = ThetaSpec::reference();
    let mut group = c.benchmark_group("objective");
    group.sample_size(10);
    group.bench_function("j2_20_scenarios", |b| b.iter(|| objective_j2(black_box(&theta), &panel, &zipf, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, cir, sir, scenario, objective);
criterion_main!(benches);
