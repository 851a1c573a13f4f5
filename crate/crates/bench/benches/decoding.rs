use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use sprinter_bench::{demo_pair, skewed_pair};
use sprinter_core::engine::{run_sd, run_sprinter, run_target_only, Position};
use sprinter_core::harness::{simulate_r_scenario, RScenario};
use sprinter_core::theory::ScenarioParams;
use sprinter_core::{CostModel, RngStream, Verifier, VerifierQuality};

fn sampling(c: &mut Criterion) {
    let (p, q) = skewed_pair(16);
    let pos = Position::new(&q, &p).unwrap();
    let quality = VerifierQuality::new(0.9, 0.2).unwrap();
    let mut rng = RngStream::new(1, 0);
    c.bench_function("categorical_sample_v16", |b| b.iter(|| black_box(q.sample(&mut rng))));
    c.bench_function("oracle_step_v16", |b| b.iter(|| black_box(pos.oracle_step(quality, &mut rng))));
}

fn engines(c: &mut Criterion) {
    let (draft, target, tokens) = demo_pair();
    let prefix = tokens[..32].to_vec();
    let cost = CostModel::default();
    let oracle = Verifier::oracle(VerifierQuality::new(0.9, 0.1).unwrap());
    let mut group = c.benchmark_group("decode_20_tokens");
    group.bench_function("target_only", |b| {
        b.iter_batched(
            || RngStream::new(2, 0),
            |mut rng| run_target_only(&target, &prefix, 20, &cost, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("sd_gamma4", |b| {
        b.iter_batched(
            || RngStream::new(3, 0),
            |mut rng| run_sd(&draft, &target, &prefix, 4, 20, &cost, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("sprinter_oracle", |b| {
        b.iter_batched(
            || RngStream::new(4, 0),
            |mut rng| run_sprinter(&draft, &target, &oracle, &prefix, 20, &cost, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn r_scenario(c: &mut Criterion) {
    let params = ScenarioParams::new(0.9, 0.3, 5, 0.1).unwrap();
    let scenario = RScenario::new(params, 10_000).unwrap();
    c.bench_function("r_scenario_10k_trials", |b| b.iter(|| simulate_r_scenario(&scenario, 7).unwrap()));
}

criterion_group!(benches, sampling, engines, r_scenario);
criterion_main!(benches);
