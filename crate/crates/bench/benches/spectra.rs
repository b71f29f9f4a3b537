use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sphere_spectra::harmonics::{build_grid, GridBasis};
use sphere_spectra::network::{Trainer, TargetFunction};
use sphere_spectra::relu_spectral::{network_spectrum, neuron_spectrum};
use sphere_spectra::{Direction, SpherePoint, Vector3};
use sphere_spectra_bench::{network, short_run};

fn projection(c: &mut Criterion) {
    let mut group = c.benchmark_group("project");
    for ell_max in [8usize, 12, 20] {
        let grid = build_grid(2 * ell_max);
        let basis = GridBasis::new(&grid, ell_max).unwrap();
        let values: Vec<f64> = basis
            .points()
            .iter()
            .map(|p: &SpherePoint| TargetFunction::Trig.eval(p))
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(ell_max), &ell_max, |b, _| {
            b.iter(|| basis.project_values(black_box(&values)))
        });
    }
    group.finish();
}

fn spectra(c: &mut Criterion) {
    let w = Direction::normalize(Vector3::new(0.3, -0.4, 0.8)).unwrap();
    c.bench_function("neuron_spectrum/ell12", |b| {
        b.iter(|| neuron_spectrum(black_box(&w), 12))
    });
    let net = network(100, 7);
    c.bench_function("network_spectrum/m100_ell12", |b| {
        b.iter(|| network_spectrum(black_box(net.a()), black_box(net.w()), 12))
    });
}

fn training(c: &mut Criterion) {
    let trainer = Trainer::new(short_run(10), TargetFunction::Trig).unwrap();
    let start = network(100, 7);
    c.bench_function("train/10_epochs_full_batch", |b| {
        b.iter(|| trainer.run_from(black_box(start.clone())).unwrap())
    });
}

criterion_group!(benches, projection, spectra, training);
criterion_main!(benches);
