//! Exact finite-dimensional simulation of the information process.
//!
//! [`simulate_info_path`] never forms an `N`-dimensional vector: it samples
//! the gradient coordinates in the running orthonormal basis and the norm of
//! the component orthogonal to it. [`brute_force_path`] does the same run
//! with explicit coordinates in `R^N` and serves as an oracle for small `N`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assembly::{padded, step_moments};
use crate::error::{Error, Result};
use crate::gaussian::{condition, sample_chi_square, sample_mvn, ConditioningPolicy};
use crate::gsa::{GsaSpec, InfoView};
use crate::kernelspace::FieldModel;
use crate::predictor::first_below;

/// Residual variances below this value are treated as inconsistent rather
/// than rounding noise.
pub const NEGATIVE_VARIANCE_TOL: f64 = 1e-10;

pub const BRUTE_FORCE_MAX_DIM: usize = 64;
pub const BRUTE_FORCE_MAX_STEPS: usize = 6;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SamplerOptions {
    pub policy: ConditioningPolicy,
}

/// One realized run in span coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub dimension: u64,
    pub lambda: f64,
    pub master_seed: u64,
    pub stream_id: u64,
    pub f_values: Vec<f64>,
    /// `g[k]` holds `<grad f(X_k), v_i>` for `i < dims[k + 1]`.
    pub g: Vec<Vec<f64>>,
    /// `x_coords[k]` holds `<X_k, v_i>` for `i < dims[k]`.
    pub x_coords: Vec<Vec<f64>>,
    pub dims: Vec<usize>,
    pub grad_gram: Vec<Vec<f64>>,
    pub x0_grad: Vec<f64>,
}

impl TrajectoryRecord {
    fn empty(dimension: u64, lambda: f64, master_seed: u64, stream_id: u64, d0: usize) -> Self {
        Self {
            dimension,
            lambda,
            master_seed,
            stream_id,
            f_values: Vec::new(),
            g: Vec::new(),
            x_coords: Vec::new(),
            dims: vec![d0],
            grad_gram: Vec::new(),
            x0_grad: Vec::new(),
        }
    }

    pub fn steps(&self) -> usize {
        self.f_values.len() - 1
    }

    pub fn grad_norm_sq(&self, n: usize) -> f64 {
        self.grad_gram[n][n]
    }

    /// `G[k][i] = <grad f(X_k), v_i>` padded with zeros to a
    /// `(steps + 1) x d` matrix, `d` the final span dimension.
    pub fn gradient_matrix(&self) -> Vec<Vec<f64>> {
        let d = self.dims.last().copied().unwrap_or(0);
        self.g.iter().map(|row| padded(row, d)).collect()
    }

    /// Realized information of the points `0..=n`.
    pub fn info(&self, n: usize) -> Result<InfoView> {
        Ok(InfoView::new(
            self.f_values[..=n].to_vec(),
            (0..=n).map(|k| self.grad_gram[k][..=n].to_vec()).collect(),
            self.x0_grad[..=n].to_vec(),
            self.lambda * self.lambda,
        )?)
    }

    fn push_step(&mut self, f: f64, x: Vec<f64>, g: Vec<f64>) {
        let n = self.g.len();
        let mut row = Vec::with_capacity(n + 1);
        for k in 0..n {
            let v: f64 = self.g[k].iter().zip(&g).map(|(a, b)| a * b).sum();
            row.push(v);
            self.grad_gram[k].push(v);
        }
        row.push(g.iter().map(|a| a * a).sum());
        self.grad_gram.push(row);
        self.x0_grad.push(if self.lambda > 0.0 { self.lambda * g[0] } else { 0.0 });
        self.dims.push(g.len());
        self.f_values.push(f);
        self.x_coords.push(x);
        self.g.push(g);
    }
}

/// Independent, reproducible random stream for one trajectory.
pub fn trajectory_rng(master_seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// Coordinates of `h_x x_0 + sum_k h_g[k] grad f(X_k)` in the span basis.
fn next_coords(lambda: f64, d: usize, h_x: f64, h_g: &[f64], g: &[Vec<f64>]) -> Vec<f64> {
    let mut x = vec![0.0; d];
    if lambda > 0.0 {
        x[0] = h_x * lambda;
    }
    for (k, h) in h_g.iter().enumerate() {
        for (i, gi) in g[k].iter().enumerate() {
            x[i] += h * gi;
        }
    }
    x
}

/// Samples one run of `gsa` on the field in dimension `dimension`, started
/// from a point of norm `lambda`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_info_path<F: FieldModel + ?Sized>(
    field: &F,
    gsa: &GsaSpec,
    lambda: f64,
    dimension: u64,
    steps: usize,
    stream_id: u64,
    master_seed: u64,
    options: SamplerOptions,
) -> Result<TrajectoryRecord> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Argument(format!("lambda = {lambda} must be finite and >= 0")));
    }
    if dimension <= steps as u64 + 2 {
        return Err(Error::Argument(format!(
            "dimension {dimension} must exceed steps + 2 = {}",
            steps + 2
        )));
    }
    let mut rng = trajectory_rng(master_seed, stream_id);
    let n_dim = dimension as f64;
    let d0 = usize::from(lambda > 0.0);
    let mut rec = TrajectoryRecord::empty(dimension, lambda, master_seed, stream_id, d0);

    for n in 0..=steps {
        let d = rec.dims[n];
        let x = if n == 0 {
            if d0 == 1 { vec![lambda] } else { Vec::new() }
        } else {
            let row = gsa.prefactors(n, &rec.info(n - 1)?)?;
            next_coords(lambda, d, row.h_x, &row.h_g, &rec.g)
        };
        let mut coords = rec.x_coords.clone();
        coords.push(x.clone());
        let m = step_moments(field, &coords, &rec.f_values, &rec.g, d, options.policy)?;
        let v_block = sample_mvn(&m.mean, &(m.cov / n_dim), options.policy, &mut rng)?;
        if m.sigma_w_sq < -NEGATIVE_VARIANCE_TOL {
            return Err(Error::NumericalConsistency { step: n, sigma_sq: m.sigma_w_sq });
        }
        let chi = sample_chi_square(n_dim - d as f64, &mut rng)?;
        let corner = (m.sigma_w_sq.max(0.0) / n_dim * chi).sqrt();
        let mut g: Vec<f64> = v_block.iter().skip(1).copied().collect();
        g.push(corner);
        rec.push_step(v_block[0], x, g);
    }
    Ok(rec)
}

/// First `n > 0` with realized squared gradient norm `<= eps`.
pub fn empirical_halting_time(record: &TrajectoryRecord, eps: f64) -> Option<usize> {
    let diag: Vec<f64> = (0..=record.steps()).map(|n| record.grad_norm_sq(n)).collect();
    first_below(&diag, eps).0
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `N Cov` between entry `ra` of the observation block at `x` and entry `rb`
/// at `y`, where entry 0 is `f` and entry `1 + i` is `d f / d e_i`.
fn ambient_cov<F: FieldModel + ?Sized>(field: &F, x: &[f64], y: &[f64], ra: usize, rb: usize) -> Result<f64> {
    let (sx, sy, ip) = (dot(x, x) / 2.0, dot(y, y) / 2.0, dot(x, y));
    Ok(match (ra, rb) {
        (0, 0) => field.cov_f_f(sx, sy, ip)?,
        (i, 0) => field.cov_df_f(sx, sy, ip, x[i - 1], y[i - 1])?,
        (0, j) => field.cov_df_f(sy, sx, ip, y[j - 1], x[j - 1])?,
        (i, j) => {
            let vw = if i == j { 1.0 } else { 0.0 };
            field.cov_df_df(sx, sy, ip, x[i - 1], y[i - 1], x[j - 1], y[j - 1], vw)?
        }
    })
}

fn ambient_mean<F: FieldModel + ?Sized>(field: &F, x: &[f64], r: usize) -> f64 {
    let s = dot(x, x) / 2.0;
    if r == 0 {
        field.mean_f(s)
    } else {
        field.mean_df(s, x[r - 1])
    }
}

/// Same run as [`simulate_info_path`] with explicit points in `R^N`,
/// `N = x0.len()`, sampling the full gradient at every step.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_path<F: FieldModel + ?Sized>(
    field: &F,
    gsa: &GsaSpec,
    x0: &[f64],
    steps: usize,
    stream_id: u64,
    master_seed: u64,
    options: SamplerOptions,
) -> Result<TrajectoryRecord> {
    let dim = x0.len();
    if dim == 0 || dim > BRUTE_FORCE_MAX_DIM || steps > BRUTE_FORCE_MAX_STEPS {
        return Err(Error::Argument(format!(
            "brute force needs 1 <= N <= {BRUTE_FORCE_MAX_DIM} and steps <= {BRUTE_FORCE_MAX_STEPS}, got N = {dim}, steps = {steps}"
        )));
    }
    let mut rng = trajectory_rng(master_seed, stream_id);
    let n_dim = dim as f64;
    let block = dim + 1;
    let lambda_sq = dot(x0, x0);

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut grads: Vec<Vec<f64>> = Vec::new();

    for n in 0..=steps {
        let x = if n == 0 {
            x0.to_vec()
        } else {
            let info = InfoView::new(
                values.clone(),
                grads.iter().map(|a| grads.iter().map(|b| dot(a, b)).collect()).collect(),
                grads.iter().map(|g| dot(x0, g)).collect(),
                lambda_sq,
            )?;
            let row = gsa.prefactors(n, &info)?;
            let mut x: Vec<f64> = x0.iter().map(|v| row.h_x * v).collect();
            for (h, g) in row.h_g.iter().zip(&grads) {
                for (xi, gi) in x.iter_mut().zip(g) {
                    *xi += h * gi;
                }
            }
            x
        };
        let h = block * n;
        let mut s11 = DMatrix::zeros(h, h);
        let mut s12 = DMatrix::zeros(h, block);
        let mut s22 = DMatrix::zeros(block, block);
        let mut mu1 = DVector::zeros(h);
        let mut observed = DVector::zeros(h);
        let mu2 = DVector::from_fn(block, |r, _| ambient_mean(field, &x, r));
        for k in 0..n {
            for ra in 0..block {
                let a = k * block + ra;
                mu1[a] = ambient_mean(field, &points[k], ra);
                observed[a] = if ra == 0 { values[k] } else { grads[k][ra - 1] };
                for l in k..n {
                    for rb in 0..block {
                        let b = l * block + rb;
                        if b < a {
                            continue;
                        }
                        let c = ambient_cov(field, &points[k], &points[l], ra, rb)? / n_dim;
                        s11[(a, b)] = c;
                        s11[(b, a)] = c;
                    }
                }
                for rb in 0..block {
                    s12[(a, rb)] = ambient_cov(field, &points[k], &x, ra, rb)? / n_dim;
                }
            }
        }
        for ra in 0..block {
            for rb in ra..block {
                let c = ambient_cov(field, &x, &x, ra, rb)? / n_dim;
                s22[(ra, rb)] = c;
                s22[(rb, ra)] = c;
            }
        }
        let cond = condition(&mu1, &mu2, &s11, &s12, &s22, &observed, options.policy)?;
        let z = sample_mvn(&cond.cond_mean, &cond.cond_cov, options.policy, &mut rng)?;
        values.push(z[0]);
        grads.push(z.iter().skip(1).copied().collect());
        points.push(x);
    }

    Ok(span_record(x0, &points, &values, &grads, stream_id, master_seed))
}

/// Expresses an ambient run in the Gram-Schmidt basis of
/// `x_0, grad f(X_0), grad f(X_1), ..`.
fn span_record(
    x0: &[f64],
    points: &[Vec<f64>],
    values: &[f64],
    grads: &[Vec<f64>],
    stream_id: u64,
    master_seed: u64,
) -> TrajectoryRecord {
    let lambda = dot(x0, x0).sqrt();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if lambda > 0.0 {
        basis.push(x0.iter().map(|v| v / lambda).collect());
    }
    let mut rec = TrajectoryRecord::empty(x0.len() as u64, lambda, master_seed, stream_id, basis.len());
    for (k, g) in grads.iter().enumerate() {
        let x = basis.iter().map(|v| dot(&points[k], v)).collect::<Vec<_>>();
        let mut coords = Vec::with_capacity(basis.len() + 1);
        let mut resid = g.clone();
        for v in &basis {
            let c = dot(g, v);
            coords.push(c);
            for (r, vi) in resid.iter_mut().zip(v) {
                *r -= c * vi;
            }
        }
        // Second pass against the already projected residual.
        for (i, v) in basis.iter().enumerate() {
            let c = dot(&resid, v);
            coords[i] += c;
            for (r, vi) in resid.iter_mut().zip(v) {
                *r -= c * vi;
            }
        }
        let norm = dot(&resid, &resid).sqrt();
        coords.push(norm);
        if norm > 0.0 {
            basis.push(resid.iter().map(|r| r / norm).collect());
        } else {
            basis.push(vec![0.0; resid.len()]);
        }
        rec.push_step(values[k], padded(&x, rec.dims[k]), coords);
    }
    rec
}
