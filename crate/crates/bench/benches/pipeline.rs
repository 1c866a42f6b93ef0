use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use poincare_bench::{quadratic, ring_points};
use poincare_core::asymptotics::{extract_f, fourier_coeffs};
use poincare_core::harmonic_measure::{backward_orbit_sample, mellin_mu};
use poincare_core::poincare_series::{evaluate, solve_taylor};
use poincare_core::zeros_zeta::{find_real_zeros, zeta};

fn taylor(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_taylor");
    g.sample_size(10);
    let cheb = quadratic(4.0);
    for order in [16, 32, 64] {
        g.bench_with_input(BenchmarkId::new("exact z^2+4z", order), &order, |b, &n| {
            b.iter(|| solve_taylor(black_box(&cheb), n).unwrap())
        });
    }
    // Exceeds the exact bit budget at this order and finishes in floating point.
    let generic = quadratic(5.0);
    g.bench_function("degraded z^2+5z/64", |b| {
        b.iter(|| solve_taylor(black_box(&generic), 64).unwrap())
    });
    g.finish();
}

fn evaluation(c: &mut Criterion) {
    let sys = quadratic(5.0);
    let ser = solve_taylor(&sys, 48).unwrap();
    let pts = ring_points(50, 20);
    c.bench_function("evaluate 1000 points |z|<=50", |b| {
        b.iter(|| {
            pts.iter()
                .map(|&z| evaluate(&sys, &ser, z).unwrap().value)
                .sum::<Complex64>()
        })
    });
}

fn sampling(c: &mut Criterion) {
    let sys = quadratic(5.0);
    let mut g = c.benchmark_group("measure");
    g.sample_size(10);
    g.bench_function("backward sample 1e5 atoms depth 20", |b| {
        b.iter(|| backward_orbit_sample(&sys, 20, 100_000, black_box(3)).unwrap())
    });
    let sample = backward_orbit_sample(&sys, 20, 100_000, 3).unwrap();
    g.bench_function("mellin M(1) on 1e5 atoms", |b| {
        b.iter(|| mellin_mu(&sys, &sample, black_box(Complex64::new(1.0, 0.0))).unwrap())
    });
    g.finish();
}

fn oscillation(c: &mut Criterion) {
    let sys = quadratic(5.0);
    let ser = solve_taylor(&sys, 48).unwrap();
    let mut g = c.benchmark_group("asymptotics");
    g.sample_size(10);
    g.bench_function("profile 4x32 + fft", |b| {
        b.iter(|| {
            let prof = extract_f(&sys, &ser, 0.0, 4, 32).unwrap();
            fourier_coeffs(&prof, sys.lambda, 3).unwrap()
        })
    });
    g.finish();
}

fn zeros(c: &mut Criterion) {
    let sys = quadratic(4.0);
    let ser = solve_taylor(&sys, 64).unwrap();
    let mut g = c.benchmark_group("zeros");
    g.sample_size(10);
    g.bench_function("zeros to 1e5", |b| {
        b.iter(|| find_real_zeros(&sys, &ser, black_box(1e5)).unwrap())
    });
    let list = find_real_zeros(&sys, &ser, 1e5).unwrap();
    g.bench_function("zeta(2)", |b| {
        b.iter(|| zeta(&sys, &ser, &list, black_box(Complex64::new(2.0, 0.0)), false).unwrap())
    });
    g.finish();
}

criterion_group!(benches, taylor, evaluation, sampling, oscillation, zeros);
criterion_main!(benches);
