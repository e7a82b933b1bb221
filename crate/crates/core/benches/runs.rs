use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gossip_bandit::instance::generate_synthetic_instance;
use gossip_bandit::par::{par_map, seq_map};
use gossip_bandit::params::ProtocolParams;
use gossip_bandit::rumor::{spread_time, Variant};
use gossip_bandit::sim::{run_gossip, RunOptions};

fn gossip_runs(c: &mut Criterion) {
    let inst = generate_synthetic_instance(10, 20, 0.2, 1).unwrap();
    let params = ProtocolParams::custom(4, 200, 1000, 3.0).unwrap();
    let seeds: Vec<u64> = (0..16).collect();
    let run = |&s: &u64| {
        run_gossip(&inst, &params, s, RunOptions::horizon(5000))
            .unwrap()
            .mean_final_regret()
    };

    let mut group = c.benchmark_group("gossip_runs");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", seeds.len()), |b| {
        b.iter(|| seq_map(&seeds, run))
    });
    group.bench_function(BenchmarkId::new("parallel", seeds.len()), |b| {
        b.iter(|| par_map(&seeds, run))
    });
    group.finish();
}

fn rumor_trials(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..200).collect();
    let trial = |&s: &u64| spread_time(2048, 0.99, Variant::Delayed, s).unwrap();

    let mut group = c.benchmark_group("rumor_trials");
    group.bench_function("sequential", |b| b.iter(|| seq_map(&seeds, trial)));
    group.bench_function("parallel", |b| b.iter(|| par_map(&seeds, trial)));
    group.finish();
}

criterion_group!(benches, gossip_runs, rumor_trials);
criterion_main!(benches);
