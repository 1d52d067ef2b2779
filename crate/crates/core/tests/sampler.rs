#![allow(clippy::needless_range_loop)]

use grfopt::gaussian::sample_chi_square;
use grfopt::gsa::{gd, heavy_ball};
use grfopt::kernelspace::{lift_stationary, SchoenbergMixture};
use grfopt::sampler::{
    brute_force_path, empirical_halting_time, simulate_info_path, trajectory_rng, SamplerOptions,
};
use grfopt::Error;

fn se() -> grfopt::kernelspace::KernelModel {
    lift_stationary(SchoenbergMixture::squared_exponential(), 0.0)
}

#[test]
fn gradient_matrix_is_triangular_and_rebuilds_the_gram() {
    let field = se();
    for stream in 0..20 {
        let rec = simulate_info_path(&field, &heavy_ball(0.4, 0.5).unwrap(), 1.0, 64, 6, stream, 11, SamplerOptions::default())
            .unwrap();
        let g = rec.gradient_matrix();
        for k in 0..=rec.steps() {
            for i in rec.dims[k + 1]..g[k].len() {
                assert_eq!(g[k][i].to_bits(), 0);
            }
            for l in 0..=k {
                let ip: f64 = g[k].iter().zip(&g[l]).map(|(a, b)| a * b).sum();
                assert!((ip - rec.grad_gram[k][l]).abs() <= 1e-12 * (1.0 + ip.abs()));
            }
        }
    }
}

#[test]
fn start_point_marginals() {
    let field = se();
    let n = 256u64;
    let m = 2000;
    let mut f = Vec::with_capacity(m);
    let mut g = Vec::with_capacity(m);
    for r in 0..m {
        let rec = simulate_info_path(&field, &gd(0.4).unwrap(), 1.0, n, 0, r as u64, 5, SamplerOptions::default()).unwrap();
        f.push(rec.f_values[0]);
        g.push(rec.grad_norm_sq(0));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let mu = mean(v);
        v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (v.len() - 1) as f64
    };
    // f(x0) ~ N(0, 1/N); |grad f(x0)|^2 ~ chi^2_N / N.
    let sd_f = (1.0 / n as f64).sqrt();
    assert!(mean(&f).abs() < 4.0 * sd_f / (m as f64).sqrt());
    assert!((var(&f) * n as f64 - 1.0).abs() < 0.15);
    let sd_g = (2.0 / n as f64).sqrt();
    assert!((mean(&g) - 1.0).abs() < 4.0 * sd_g / (m as f64).sqrt());
    assert!((var(&g) / (sd_g * sd_g) - 1.0).abs() < 0.15);
}

#[test]
fn start_value_obeys_gaussian_tail_bound() {
    // P(|f_N(x0) - mu| >= t) <= 2 exp(-N t^2 / (2 C(0))), C(0) = 1, mu = 0.
    let n = 256u64;
    let m = 4000;
    let f: Vec<f64> = (0..m)
        .map(|r| {
            simulate_info_path(&se(), &gd(0.4).unwrap(), 1.0, n, 0, r, 21, SamplerOptions::default()).unwrap().f_values[0]
        })
        .collect();
    for t in [0.05, 0.1] {
        let bound: f64 = 2.0 * (-(n as f64) * t * t / 2.0f64).exp();
        let freq = f.iter().filter(|v| v.abs() >= t).count() as f64 / m as f64;
        assert!(freq <= bound.min(1.0), "t = {t}: {freq} > {bound}");
    }
}

#[test]
fn chi_square_concentration_obeys_chernoff_bound() {
    // P(|X/k - 1| >= t) <= 2 exp(-k t^2 / 8) for t in (0, 1).
    let mut rng = trajectory_rng(3, 0);
    let (k, t, m) = (512.0, 0.15, 4000);
    let bound = 2.0 * (-k * t * t / 8.0f64).exp();
    let hits = (0..m)
        .filter(|_| (sample_chi_square(k, &mut rng).unwrap() / k - 1.0).abs() >= t)
        .count();
    let freq = hits as f64 / m as f64;
    assert!(freq <= bound + 4.0 * (bound / m as f64).sqrt(), "{freq} > {bound}");
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let field = se();
    let gsa = gd(0.4).unwrap();
    let a = simulate_info_path(&field, &gsa, 1.0, 128, 5, 3, 9, SamplerOptions::default()).unwrap();
    let b = simulate_info_path(&field, &gsa, 1.0, 128, 5, 3, 9, SamplerOptions::default()).unwrap();
    let c = simulate_info_path(&field, &gsa, 1.0, 128, 5, 4, 9, SamplerOptions::default()).unwrap();
    let d = simulate_info_path(&field, &gsa, 1.0, 128, 5, 3, 10, SamplerOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.f_values, c.f_values);
    assert_ne!(a.f_values, d.f_values);
}

#[test]
fn dimension_must_exceed_steps_plus_two() {
    let e = simulate_info_path(&se(), &gd(0.4).unwrap(), 1.0, 10, 8, 0, 0, SamplerOptions::default()).unwrap_err();
    assert!(matches!(e, Error::Argument(_)));
    assert!(simulate_info_path(&se(), &gd(0.4).unwrap(), 1.0, 11, 8, 0, 0, SamplerOptions::default()).is_ok());
}

#[test]
fn brute_force_record_is_consistent() {
    let mut x0 = vec![0.0; 16];
    x0[0] = 1.0;
    let rec = brute_force_path(&se(), &gd(0.4).unwrap(), &x0, 3, 0, 1, SamplerOptions::default()).unwrap();
    assert_eq!(rec.steps(), 3);
    let g = rec.gradient_matrix();
    for k in 0..=3 {
        for i in rec.dims[k + 1]..g[k].len() {
            assert_eq!(g[k][i], 0.0);
        }
    }
    // gd iterates: X_1 = X_0 - 0.4 grad f(X_0) in span coordinates.
    for i in 0..rec.x_coords[1].len() {
        let x0i = if i == 0 { 1.0 } else { 0.0 };
        let gi = rec.g[0].get(i).copied().unwrap_or(0.0);
        assert!((rec.x_coords[1][i] - (x0i - 0.4 * gi)).abs() < 1e-12);
    }
    let too_big = vec![0.1; 65];
    assert!(brute_force_path(&se(), &gd(0.4).unwrap(), &too_big, 3, 0, 1, SamplerOptions::default()).is_err());
}

#[test]
fn empirical_halting_time_ignores_the_start() {
    let rec = simulate_info_path(&se(), &gd(0.4).unwrap(), 1.0, 1024, 8, 0, 2, SamplerOptions::default()).unwrap();
    assert_eq!(empirical_halting_time(&rec, 1e6), Some(1));
    assert_eq!(empirical_halting_time(&rec, 0.0), None);
}
