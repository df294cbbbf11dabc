use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dynprune::dataset::BlobMix;
use dynprune::learner::{Arch, LearnerConfig, LearnerState};
use dynprune::policies::compute_el2n_scores_with;
use dynprune::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn per_sample_loss(c: &mut Criterion) {
    let ds = BlobMix::default().generate(1).unwrap().0;
    let mut group = c.benchmark_group("per_sample_loss");
    for arch in [Arch::SoftmaxRegression, Arch::Mlp { hidden: 64 }] {
        let cfg = LearnerConfig {
            arch,
            ..LearnerConfig::default()
        };
        let state = LearnerState::init(&cfg, ds.dim(), ds.num_classes(), 3).unwrap();
        let label = match arch {
            Arch::SoftmaxRegression => "softmax",
            Arch::Mlp { .. } => "mlp64",
        };
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, label), &exec, |b, &exec| {
                b.iter(|| black_box(state.per_sample_loss_with(&ds, exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn el2n_trials(c: &mut Criterion) {
    let ds = BlobMix::default().generate(1).unwrap().0;
    let cfg = LearnerConfig::default();
    let seeds: Vec<u64> = (0..4).collect();
    let mut group = c.benchmark_group("el2n_4_trials");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(compute_el2n_scores_with(&ds, &cfg, 2, &seeds, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, per_sample_loss, el2n_trials);
criterion_main!(benches);
