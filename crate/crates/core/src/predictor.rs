//! Deterministic limit of the information process as the dimension grows.
//!
//! The recursion mirrors the finite-N sampler with the conditional
//! covariance dropped (it carries a `1/N` factor) and the normalized
//! chi-square replaced by its limit 1.

use crate::assembly::{padded, step_moments};
use crate::error::{Error, Result};
use crate::gaussian::ConditioningPolicy;
use crate::gsa::{GsaSpec, InfoView};
use crate::kernelspace::FieldModel;

/// Residual variances at or below this value count as a rank stall.
pub const RANK_STALL_TOL: f64 = 1e-12;
/// Limiting distances at or below this value count as coincident points.
pub const COINCIDENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PredictOptions {
    pub policy: ConditioningPolicy,
    /// Keep the span dimension fixed instead of failing when the residual
    /// variance vanishes.
    pub freeze_dimension: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCurve {
    pub lambda: f64,
    pub f_limit: Vec<f64>,
    /// `gamma[k]` has `dims[k + 1]` entries; later coordinates are zero.
    pub gamma: Vec<Vec<f64>>,
    /// `y_reps[k]` holds the coordinates of the k-th point, padded to
    /// `dims[k + 1]` entries.
    pub y_reps: Vec<Vec<f64>>,
    pub sigma_w: Vec<f64>,
    /// `dims[n]` is the span dimension before step n; one entry more than
    /// there are steps.
    pub dims: Vec<usize>,
    pub grad_gram_limit: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    /// Steps where the dimension was frozen.
    pub frozen: Vec<bool>,
}

impl LimitCurve {
    /// Index of the last computed step.
    pub fn last_step(&self) -> usize {
        self.f_limit.len() - 1
    }

    pub fn grad_norm_sq(&self, n: usize) -> f64 {
        self.grad_gram_limit[n][n]
    }

    fn push_step(&mut self, f: f64, y: Vec<f64>, gamma: Vec<f64>, sigma_w: f64, frozen: bool) {
        let n = self.gamma.len();
        let d_next = gamma.len();
        let mut gram_row = Vec::with_capacity(n + 1);
        for k in 0..n {
            let g: f64 = self.gamma[k].iter().zip(&gamma).map(|(a, b)| a * b).sum();
            gram_row.push(g);
            self.grad_gram_limit[k].push(g);
        }
        gram_row.push(gamma.iter().map(|a| a * a).sum());
        self.grad_gram_limit.push(gram_row);

        let mut rho_row = Vec::with_capacity(n + 1);
        for k in 0..n {
            let r = distance(&self.y_reps[k], &y);
            rho_row.push(r);
            self.rho[k].push(r);
        }
        rho_row.push(0.0);
        self.rho.push(rho_row);

        self.f_limit.push(f);
        self.y_reps.push(padded(&y, d_next));
        self.gamma.push(gamma);
        self.sigma_w.push(sigma_w);
        self.dims.push(d_next);
        self.frozen.push(frozen);
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    let d = a.len().max(b.len());
    let (a, b) = (padded(a, d), padded(b, d));
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs one step of the shared recursion and turns the moments into the new
/// gradient coordinates.
fn advance<F: FieldModel + ?Sized>(
    curve: &mut LimitCurve,
    field: &F,
    y: Vec<f64>,
    options: PredictOptions,
) -> Result<()> {
    let n = curve.gamma.len();
    let d = *curve.dims.last().expect("dims always holds d_n");
    let mut coords: Vec<Vec<f64>> = curve.y_reps.clone();
    coords.push(y.clone());
    let m = step_moments(field, &coords, &curve.f_limit, &curve.gamma, d, options.policy)?;
    let mut gamma: Vec<f64> = m.mean.iter().skip(1).copied().collect();
    let sigma_sq = m.sigma_w_sq;
    let frozen = if sigma_sq <= RANK_STALL_TOL {
        if n == 0 {
            return Err(Error::DegenerateKernel { kappa3: sigma_sq });
        }
        if !options.freeze_dimension {
            return Err(Error::RankStall { step: n, sigma_sq });
        }
        true
    } else {
        gamma.push(sigma_sq.sqrt());
        false
    };
    curve.push_step(m.mean[0], y, gamma, sigma_sq.max(0.0).sqrt(), frozen);
    Ok(())
}

/// Step 0 of the recursion at an initial point of norm `lambda`.
pub fn limit_init<F: FieldModel + ?Sized>(field: &F, lambda: f64, options: PredictOptions) -> Result<LimitCurve> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Argument(format!("lambda = {lambda} must be finite and >= 0")));
    }
    let s = lambda * lambda / 2.0;
    let kappa3 = field.cov_df_df(s, s, lambda * lambda, 0.0, 0.0, 0.0, 0.0, 1.0)?;
    if kappa3 <= RANK_STALL_TOL {
        return Err(Error::DegenerateKernel { kappa3 });
    }
    let d0 = usize::from(lambda > 0.0);
    let mut curve = LimitCurve {
        lambda,
        f_limit: Vec::new(),
        gamma: Vec::new(),
        y_reps: Vec::new(),
        sigma_w: Vec::new(),
        dims: vec![d0],
        grad_gram_limit: Vec::new(),
        rho: Vec::new(),
        frozen: Vec::new(),
    };
    let y0 = if d0 == 1 { vec![lambda] } else { Vec::new() };
    advance(&mut curve, field, y0, options)?;
    Ok(curve)
}

/// Extends `curve` by one step of `gsa`.
pub fn limit_step<F: FieldModel + ?Sized>(
    curve: &mut LimitCurve,
    field: &F,
    gsa: &GsaSpec,
    options: PredictOptions,
) -> Result<()> {
    let n = curve.f_limit.len();
    let info = limiting_info(curve, n - 1);
    let row = gsa.prefactors(n, &info)?;
    let d = curve.dims[n];
    let mut y = vec![0.0; d];
    if curve.lambda > 0.0 {
        y[0] = row.h_x * curve.lambda;
    }
    for (k, h) in row.h_g.iter().enumerate() {
        for (i, g) in curve.gamma[k].iter().enumerate() {
            y[i] += h * g;
        }
    }
    for k in 0..n {
        let rho = distance(&curve.y_reps[k], &y);
        if rho <= COINCIDENT_TOL {
            return Err(Error::CoincidentPoints { k, l: n, rho });
        }
    }
    advance(curve, field, y, options)
}

/// Limit curve over steps `0..=steps`.
pub fn predict<F: FieldModel + ?Sized>(
    field: &F,
    gsa: &GsaSpec,
    lambda: f64,
    steps: usize,
    options: PredictOptions,
) -> Result<LimitCurve> {
    let mut curve = limit_init(field, lambda, options)?;
    for _ in 0..steps {
        limit_step(&mut curve, field, gsa, options)?;
    }
    Ok(curve)
}

/// Limiting information of the points `0..=n`.
pub fn limiting_info(curve: &LimitCurve, n: usize) -> InfoView {
    let f_values = curve.f_limit[..=n].to_vec();
    let grad_gram = (0..=n).map(|k| curve.grad_gram_limit[k][..=n].to_vec()).collect();
    let x0_grad = (0..=n)
        .map(|k| if curve.lambda > 0.0 { curve.lambda * curve.gamma[k][0] } else { 0.0 })
        .collect();
    InfoView::new(f_values, grad_gram, x0_grad, curve.lambda * curve.lambda)
        .expect("limit information is a Gram matrix by construction")
}

/// First step `n > 0` with `g(n) <= eps` and with `g(n) < eps`; `None`
/// stands for "not within the horizon".
pub fn first_below(grad_norm_sq: &[f64], eps: f64) -> (Option<usize>, Option<usize>) {
    let tau = (1..grad_norm_sq.len()).find(|&n| grad_norm_sq[n] <= eps);
    let tau_plus = (1..grad_norm_sq.len()).find(|&n| grad_norm_sq[n] < eps);
    (tau, tau_plus)
}

pub fn halting_times(curve: &LimitCurve, eps: f64) -> (Option<usize>, Option<usize>) {
    let diag: Vec<f64> = (0..=curve.last_step()).map(|n| curve.grad_norm_sq(n)).collect();
    first_below(&diag, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsa::gd;
    use crate::kernelspace::{
        lift_stationary, quadratic_kernel, spin_glass_kernel, SchoenbergMixture, SpinGlassMixture,
    };

    #[test]
    fn stationary_start() {
        let k = lift_stationary(SchoenbergMixture::squared_exponential(), 0.0);
        for lambda in [0.0, 0.5, 2.0] {
            let c = limit_init(&k, lambda, PredictOptions::default()).unwrap();
            assert_eq!(c.f_limit[0], 0.0);
            assert!((c.grad_norm_sq(0) - 1.0).abs() < 1e-12);
            if lambda > 0.0 {
                assert_eq!(c.gamma[0][0], 0.0);
                assert!((c.gamma[0][1] - 1.0).abs() < 1e-12);
                assert_eq!(c.dims, vec![1, 2]);
            } else {
                assert_eq!(c.dims, vec![0, 1]);
            }
        }
    }

    #[test]
    fn quadratic_start() {
        let q = quadratic_kernel(1.0, 0.0, 1.0).unwrap();
        let c = limit_init(&q, 1.0, PredictOptions::default()).unwrap();
        assert!((c.f_limit[0] - 1.0).abs() < 1e-15);
        assert!((c.gamma[0][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_start() {
        let k = spin_glass_kernel(SpinGlassMixture::pure(2));
        assert!(matches!(
            limit_init(&k, 0.0, PredictOptions::default()),
            Err(Error::DegenerateKernel { .. })
        ));
    }

    #[test]
    fn triangular_gamma_and_info() {
        let k = lift_stationary(SchoenbergMixture::squared_exponential(), 0.0);
        let c = predict(&k, &gd(0.4).unwrap(), 1.0, 5, PredictOptions::default()).unwrap();
        for (n, g) in c.gamma.iter().enumerate() {
            assert_eq!(g.len(), c.dims[n + 1]);
            assert!((g[c.dims[n]] - c.sigma_w[n]).abs() < 1e-15);
            assert!(c.sigma_w[n] > 0.0);
        }
        let info = limiting_info(&c, 0);
        assert!((info.grad_gram(0, 0) - 1.0).abs() < 1e-12);
        let c0 = predict(&k, &gd(0.4).unwrap(), 0.0, 3, PredictOptions::default()).unwrap();
        assert!(limiting_info(&c0, 3).x0_grad().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn halting_definitions() {
        let g = [1.0, 0.5, 0.4, 0.4];
        assert_eq!(first_below(&g, 0.6), (Some(1), Some(1)));
        assert_eq!(first_below(&g, 0.1), (None, None));
        assert_eq!(first_below(&g, 0.4), (Some(2), None));
        assert_eq!(first_below(&g, 0.5), (Some(1), Some(2)));
    }

    #[test]
    fn rank_stall_on_quadratic_without_freezing() {
        let q = quadratic_kernel(1.0, 0.0, 1.0).unwrap();
        let strict = PredictOptions { policy: ConditioningPolicy::pseudo_inverse(), freeze_dimension: false };
        assert!(matches!(
            predict(&q, &gd(0.3).unwrap(), 1.0, 3, strict),
            Err(Error::RankStall { step: 1, .. })
        ));
    }
}
