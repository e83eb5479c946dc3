use std::hint::black_box;

use afrelay::capacity::{asymptotic_capacity, logdet_capacity_sample, mc_ergodic_capacity};
use afrelay::freeprob::{k_alpha_density, quartic_coefficients, solve_quartic, stieltjes_k_alpha, DensityOptions};
use afrelay::montecarlo::{eigenvalues_k_alpha, sample_channel_pair};
use afrelay::params::derive_coefficients;
use afrelay::Dims;
use afrelay_bench::reference_config;
use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

fn stieltjes(c: &mut Criterion) {
    let co = derive_coefficients(&reference_config(0.0)).unwrap();
    let z = Complex64::new(5e4, 5e-4);
    c.bench_function("solve_quartic", |b| {
        b.iter(|| solve_quartic(&quartic_coefficients(black_box(z), co.beta, co.gamma, co.alpha_bar_c1)))
    });
    c.bench_function("stieltjes_k_alpha", |b| {
        b.iter(|| stieltjes_k_alpha(black_box(z), co.beta, co.gamma, co.alpha_bar_c1).unwrap())
    });
}

fn densities(c: &mut Criterion) {
    let co = derive_coefficients(&reference_config(0.0)).unwrap();
    let mut g = c.benchmark_group("density");
    g.sample_size(10);
    g.bench_function("k_alpha_density", |b| {
        b.iter(|| k_alpha_density(co.beta, co.gamma, black_box(co.alpha_bar_c1), &DensityOptions::default()).unwrap())
    });
    g.bench_function("asymptotic_capacity", |b| b.iter(|| asymptotic_capacity(black_box(&reference_config(0.08))).unwrap()));
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let cfg = reference_config(0.08);
    let co = derive_coefficients(&cfg).unwrap();
    let pair = sample_channel_pair(Dims::of(&cfg), 7).unwrap();
    c.bench_function("eigenvalues_k_alpha", |b| b.iter(|| eigenvalues_k_alpha(black_box(&pair), co.alpha_c1()).unwrap()));
    c.bench_function("logdet_capacity_sample", |b| {
        b.iter(|| logdet_capacity_sample(black_box(&pair.h1), &pair.h2, &co).unwrap())
    });
    let mut g = c.benchmark_group("mc");
    g.sample_size(10);
    g.bench_function("mc_ergodic_capacity_100", |b| b.iter(|| mc_ergodic_capacity(black_box(&cfg), 100, 7).unwrap()));
    g.finish();
}

criterion_group!(benches, stieltjes, densities, monte_carlo);
criterion_main!(benches);
