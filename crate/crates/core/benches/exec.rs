//! Serial against parallel execution of the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mtbp_core::genfun::extinction_curve;
use mtbp_core::model::{Atom, OffspringLaw};
use mtbp_core::simulate::{run_ensemble, SimOptions};
use mtbp_core::spectral::{eigen_sequence, ratio_band};
use mtbp_core::{BranchingModel, Exec};

fn law(atoms: &[([u32; 2], f64)]) -> OffspringLaw {
    let atoms = atoms.iter().map(|(a, p)| Atom { offspring: a.to_vec(), p: *p }).collect();
    OffspringLaw::new(2, atoms, "bench").unwrap()
}

fn model() -> BranchingModel {
    BranchingModel::periodic(vec![
        vec![
            law(&[([0, 0], 0.3), ([2, 0], 0.2), ([1, 1], 0.3), ([0, 2], 0.2)]),
            law(&[([0, 0], 0.4), ([1, 1], 0.3), ([2, 1], 0.1), ([0, 2], 0.2)]),
        ],
        vec![
            law(&[([0, 0], 0.5), ([2, 0], 0.25), ([0, 2], 0.125), ([1, 1], 0.125)]),
            law(&[([0, 0], 0.5), ([2, 0], 0.375), ([0, 2], 0.125)]),
        ],
    ])
    .unwrap()
}

const EXECS: [(&str, Exec); 2] = [("serial", Exec::Serial), ("parallel", Exec::Parallel)];

fn ensemble(c: &mut Criterion) {
    let m = model();
    let opts = SimOptions::new(vec![1, 0]);
    let mut group = c.benchmark_group("run_ensemble");
    group.sample_size(10);
    for (name, exec) in EXECS {
        group.bench_with_input(BenchmarkId::new(name, 20_000), &exec, |b, &exec| {
            b.iter(|| black_box(run_ensemble(&m, 30, 20_000, 1, &opts, exec).unwrap()))
        });
    }
    group.finish();
}

fn extinction(c: &mut Criterion) {
    let m = model();
    let mut group = c.benchmark_group("extinction_curve");
    for (name, exec) in EXECS {
        group.bench_with_input(BenchmarkId::new(name, 4096), &exec, |b, &exec| {
            b.iter(|| black_box(extinction_curve(&m, 4096, exec).unwrap()))
        });
    }
    group.finish();
}

fn band(c: &mut Criterion) {
    let m = model();
    let eigs = eigen_sequence(&m, 1024, None, 1e-12).unwrap();
    let mut group = c.benchmark_group("ratio_band");
    for (name, exec) in EXECS {
        group.bench_with_input(BenchmarkId::new(name, 1024), &exec, |b, &exec| {
            b.iter(|| black_box(ratio_band(&m, &eigs, exec)))
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble, extinction, band);
criterion_main!(benches);
