use criterion::{black_box, criterion_group, criterion_main, Criterion};
use svbeam_core::beamform::{received_powers, sample_realization};
use svbeam_core::montecarlo::run_trial;
use svbeam_core::planner::plan;
use svbeam_core::rng::stream;
use svbeam_core::{NetworkConfig, SecrecyTarget, Stage2Mode};

fn reference() -> (NetworkConfig, SecrecyTarget) {
    let cfg = NetworkConfig {
        transmit_power: 1.0,
        rayleigh_mu: 0.5,
        pathloss_gamma: 2.0,
        tx_rx_distance: 5.0,
        legit_density: 1.0,
        eaves_density: 0.0,
        n_legit: 1,
    };
    (cfg, SecrecyTarget::new(0.5, 0.35))
}

fn planning(c: &mut Criterion) {
    let (cfg, target) = reference();
    c.bench_function("plan/reference", |b| b.iter(|| plan(black_box(&cfg), black_box(&target)).unwrap()));
}

fn trials(c: &mut Criterion) {
    let (mut cfg, target) = reference();
    let p = plan(&cfg, &target).unwrap();
    cfg.legit_density = p.lambda_l_min;
    cfg.eaves_density = p.lambda_e_max;
    let side_sq = p.n_e_max.unwrap() as f64 / (2.0 * p.lambda_e_max);
    cfg.n_legit = (p.lambda_l_min * side_sq) as u64;

    let mut group = c.benchmark_group("reference");
    group.sample_size(20);
    let mut index = 0u64;
    group.bench_function("run_trial", |b| {
        b.iter(|| {
            index += 1;
            run_trial(&p, &cfg, &target, index, 7).unwrap()
        })
    });
    let realization = sample_realization(&p, &cfg, Stage2Mode::Auto, &mut stream(7, 0)).unwrap();
    group.bench_function("received_powers", |b| b.iter(|| received_powers(black_box(&realization), &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, planning, trials);
criterion_main!(benches);
