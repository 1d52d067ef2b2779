//! Gradient span algorithms in dimension-free form.
//!
//! An algorithm picks `x_n = h_x x_0 + sum_k h_g[k] grad f(x_k)` where the
//! prefactors are functions of the information observed so far: function
//! values, the gradient Gram matrix and the inner products of `x_0` with the
//! gradients.

use std::cell::Cell;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GsaError {
    #[error("invalid optimizer parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid information vector: {0}")]
    InvalidInfo(String),
    #[error("degenerate projection at step {step}: |x|^2 = {norm_sq:e}")]
    DegenerateProjection { step: usize, norm_sq: f64 },
}

/// Information available after evaluating the points `x_0 .. x_n`.
///
/// Reads of the `x_0` entries are counted so tests can check that
/// x0-agnostic algorithms ignore them.
#[derive(Debug, Clone)]
pub struct InfoView {
    f_values: Vec<f64>,
    grad_gram: Vec<Vec<f64>>,
    x0_grad: Vec<f64>,
    x0_norm_sq: f64,
    x0_reads: Cell<usize>,
}

const CS_SLACK: f64 = 1e-9;

impl InfoView {
    pub fn new(
        f_values: Vec<f64>,
        grad_gram: Vec<Vec<f64>>,
        x0_grad: Vec<f64>,
        x0_norm_sq: f64,
    ) -> Result<Self, GsaError> {
        let n = f_values.len();
        if grad_gram.len() != n || grad_gram.iter().any(|r| r.len() != n) || x0_grad.len() != n {
            return Err(GsaError::InvalidInfo(format!(
                "{n} function values need an {n}x{n} Gram matrix and {n} x0 inner products"
            )));
        }
        if !(x0_norm_sq >= 0.0) {
            return Err(GsaError::InvalidInfo(format!("|x0|^2 = {x0_norm_sq} is negative")));
        }
        for k in 0..n {
            let gkk = grad_gram[k][k];
            if gkk < 0.0 {
                return Err(GsaError::InvalidInfo(format!("Gram diagonal {k} is {gkk}")));
            }
            for l in 0..k {
                let (a, b) = (grad_gram[k][l], grad_gram[l][k]);
                if (a - b).abs() > CS_SLACK * a.abs().max(b.abs()).max(1.0) {
                    return Err(GsaError::InvalidInfo(format!("Gram matrix not symmetric at ({k}, {l})")));
                }
            }
            let bound = x0_norm_sq * gkk;
            if x0_grad[k] * x0_grad[k] > bound + CS_SLACK * bound.max(1.0) {
                return Err(GsaError::InvalidInfo(format!(
                    "<x0, grad f(x_{k})>^2 exceeds |x0|^2 |grad f(x_{k})|^2"
                )));
            }
        }
        Ok(Self { f_values, grad_gram, x0_grad, x0_norm_sq, x0_reads: Cell::new(0) })
    }

    /// Number of evaluated points.
    pub fn len(&self) -> usize {
        self.f_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_values.is_empty()
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    pub fn grad_gram(&self, k: usize, l: usize) -> f64 {
        self.grad_gram[k][l]
    }

    pub fn grad_gram_rows(&self) -> &[Vec<f64>] {
        &self.grad_gram
    }

    pub fn x0_grad(&self) -> &[f64] {
        self.x0_reads.set(self.x0_reads.get() + 1);
        &self.x0_grad
    }

    pub fn x0_norm_sq(&self) -> f64 {
        self.x0_reads.set(self.x0_reads.get() + 1);
        self.x0_norm_sq
    }

    /// How many times `x0_grad` or `x0_norm_sq` were read.
    pub fn x0_reads(&self) -> usize {
        self.x0_reads.get()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorRow {
    pub h_x: f64,
    pub h_g: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Sphere,
    Ball,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GsaKind {
    Gd { alpha: f64 },
    HeavyBall { alpha: f64, beta: f64 },
    Nesterov { alpha: f64, beta: f64 },
    FrCg { alpha: f64 },
    Projected { inner: Box<GsaSpec>, projection: Projection, radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsaSpec {
    kind: GsaKind,
}

impl fmt::Display for GsaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GsaKind::Gd { alpha } => write!(f, "gd(alpha={alpha})"),
            GsaKind::HeavyBall { alpha, beta } => write!(f, "heavy_ball(alpha={alpha}, beta={beta})"),
            GsaKind::Nesterov { alpha, beta } => write!(f, "nesterov(alpha={alpha}, beta={beta})"),
            GsaKind::FrCg { alpha } => write!(f, "fr_cg(alpha={alpha})"),
            GsaKind::Projected { inner, projection, radius } => {
                let p = match projection {
                    Projection::Sphere => "sphere",
                    Projection::Ball => "ball",
                };
                write!(f, "{p}(radius={radius}, {inner})")
            }
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), GsaError> {
    if alpha.is_finite() && alpha != 0.0 {
        Ok(())
    } else {
        Err(GsaError::InvalidParameters(format!("alpha = {alpha} must be finite and non-zero")))
    }
}

fn check_beta(beta: f64) -> Result<(), GsaError> {
    if beta.is_finite() && beta.abs() < 1.0 {
        Ok(())
    } else {
        Err(GsaError::InvalidParameters(format!("beta = {beta} must satisfy |beta| < 1")))
    }
}

pub fn gd(alpha: f64) -> Result<GsaSpec, GsaError> {
    check_alpha(alpha)?;
    Ok(GsaSpec { kind: GsaKind::Gd { alpha } })
}

pub fn heavy_ball(alpha: f64, beta: f64) -> Result<GsaSpec, GsaError> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    Ok(GsaSpec { kind: GsaKind::HeavyBall { alpha, beta } })
}

/// Nesterov momentum with the look-ahead points as evaluation points:
/// `z_{n+1} = x_n - alpha grad f(x_n)`, `x_{n+1} = z_{n+1} + beta (z_{n+1} - z_n)`.
pub fn nesterov(alpha: f64, beta: f64) -> Result<GsaSpec, GsaError> {
    check_alpha(alpha)?;
    check_beta(beta)?;
    Ok(GsaSpec { kind: GsaKind::Nesterov { alpha, beta } })
}

/// Fletcher-Reeves conjugate gradient with fixed step size.
pub fn fr_cg(alpha: f64) -> Result<GsaSpec, GsaError> {
    check_alpha(alpha)?;
    Ok(GsaSpec { kind: GsaKind::FrCg { alpha } })
}

fn check_radius(radius: f64) -> Result<(), GsaError> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(GsaError::InvalidParameters(format!("radius = {radius} must be positive")))
    }
}

pub fn with_sphere_projection(inner: GsaSpec, radius: f64) -> Result<GsaSpec, GsaError> {
    check_radius(radius)?;
    Ok(GsaSpec {
        kind: GsaKind::Projected { inner: Box::new(inner), projection: Projection::Sphere, radius },
    })
}

pub fn with_ball_projection(inner: GsaSpec, radius: f64) -> Result<GsaSpec, GsaError> {
    check_radius(radius)?;
    Ok(GsaSpec {
        kind: GsaKind::Projected { inner: Box::new(inner), projection: Projection::Ball, radius },
    })
}

/// FR-CG search directions `d_0 .. d_{n-1}` as coefficient rows over the
/// gradients.
fn cg_directions(n: usize, info: &InfoView) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut d = vec![0.0; j + 1];
        if j > 0 {
            let denom = info.grad_gram(j - 1, j - 1);
            let beta = if denom < 1e-14 { 0.0 } else { info.grad_gram(j, j) / denom };
            for (k, c) in dirs[j - 1].iter().enumerate() {
                d[k] = beta * c;
            }
        }
        d[j] -= 1.0;
        dirs.push(d);
    }
    dirs
}

impl GsaSpec {
    pub fn kind(&self) -> &GsaKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            GsaKind::Gd { .. } => "gd",
            GsaKind::HeavyBall { .. } => "heavy_ball",
            GsaKind::Nesterov { .. } => "nesterov",
            GsaKind::FrCg { .. } => "fr_cg",
            GsaKind::Projected { projection: Projection::Sphere, .. } => "sphere_projected",
            GsaKind::Projected { projection: Projection::Ball, .. } => "ball_projected",
        }
    }

    /// `h_x = 1` always and only function values and gradient Gram entries
    /// are read.
    pub fn x0_agnostic(&self) -> bool {
        !matches!(self.kind, GsaKind::Projected { .. })
    }

    /// `h_g[n-1] != 0` at every step.
    pub fn uses_latest_gradient(&self) -> bool {
        match &self.kind {
            GsaKind::Projected { inner, .. } => inner.uses_latest_gradient(),
            _ => true,
        }
    }

    /// Prefactors of `x_n` (`n >= 1`) from the information of
    /// `x_0 .. x_{n-1}`.
    pub fn prefactors(&self, n: usize, info: &InfoView) -> Result<PrefactorRow, GsaError> {
        if n == 0 || info.len() != n {
            return Err(GsaError::InvalidInfo(format!(
                "step {n} needs information on exactly {n} points, got {}",
                info.len()
            )));
        }
        match &self.kind {
            GsaKind::Gd { alpha } => Ok(PrefactorRow { h_x: 1.0, h_g: vec![-alpha; n] }),
            GsaKind::HeavyBall { alpha, beta } => {
                let h_g = (0..n)
                    .map(|k| -alpha * (1.0 - beta.powi((n - k) as i32)) / (1.0 - beta))
                    .collect();
                Ok(PrefactorRow { h_x: 1.0, h_g })
            }
            GsaKind::Nesterov { alpha, beta } => {
                // z_m and x_m as coefficient rows over the gradients.
                let mut z_prev: Vec<f64> = Vec::new();
                let mut x: Vec<f64> = Vec::new();
                for m in 1..=n {
                    let mut z = x.clone();
                    z.push(-alpha);
                    x = (0..m)
                        .map(|k| (1.0 + beta) * z[k] - beta * z_prev.get(k).copied().unwrap_or(0.0))
                        .collect();
                    z_prev = z;
                }
                Ok(PrefactorRow { h_x: 1.0, h_g: x })
            }
            GsaKind::FrCg { alpha } => {
                let dirs = cg_directions(n, info);
                let mut h_g = vec![0.0; n];
                for d in &dirs {
                    for (k, c) in d.iter().enumerate() {
                        h_g[k] += alpha * c;
                    }
                }
                Ok(PrefactorRow { h_x: 1.0, h_g })
            }
            GsaKind::Projected { inner, projection, radius } => {
                let row = inner.prefactors(n, info)?;
                let norm_sq = projected_norm_sq(&row, info);
                let norm = norm_sq.max(0.0).sqrt();
                let scale = match projection {
                    Projection::Sphere => {
                        if norm_sq < 1e-20 {
                            return Err(GsaError::DegenerateProjection { step: n, norm_sq });
                        }
                        radius / norm
                    }
                    Projection::Ball => radius / norm.max(*radius),
                };
                Ok(PrefactorRow {
                    h_x: row.h_x * scale,
                    h_g: row.h_g.iter().map(|h| h * scale).collect(),
                })
            }
        }
    }
}

/// `|h_x x_0 + sum_k h_g[k] grad f(x_k)|^2` from the information vector.
pub fn projected_norm_sq(row: &PrefactorRow, info: &InfoView) -> f64 {
    let x0g = info.x0_grad();
    let mut total = row.h_x * row.h_x * info.x0_norm_sq();
    for (k, hk) in row.h_g.iter().enumerate() {
        total += 2.0 * row.h_x * hk * x0g[k];
        for (l, hl) in row.h_g.iter().enumerate() {
            total += hk * hl * info.grad_gram(k, l);
        }
    }
    total
}
