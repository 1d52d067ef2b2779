//! Mean and covariance models of (non-stationary) isotropic Gaussian random
//! functions.
//!
//! A model is described by a mean profile `mu(s)` with `s = |x|^2 / 2` and a
//! kernel `kappa(l1, l2, l3)` evaluated at `(|x|^2/2, |y|^2/2, <x, y>)`. Every
//! covariance between function values and directional derivatives is expressed
//! through inner products only, so nothing here ever touches an ambient
//! coordinate vector.
//!
//! All covariances returned here are `N * Cov(..)`; the `1/N` scaling is
//! applied by callers.

use std::fmt::Debug;

use thiserror::Error;

use crate::quadrature;

/// Relative slack of the domain check `|l3| <= 2 sqrt(l1 l2)`.
pub const DOMAIN_REL_TOL: f64 = 1e-9;
const DOMAIN_ABS_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("point ({l1}, {l2}, {l3}) outside the kernel domain |l3| <= 2 sqrt(l1 l2)")]
    Domain { l1: f64, l2: f64, l3: f64 },
    #[error("invalid kernel parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid spin glass mixture: {0}")]
    InvalidMixture(String),
}

/// Value of `kappa` and the seven partial derivatives the derivative
/// covariances need.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Partials {
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k12: f64,
    pub k13: f64,
    pub k23: f64,
    pub k33: f64,
}

/// Informational flags carried by a kernel model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelTags {
    pub stationary: bool,
    pub spin_glass: bool,
}

/// A (non-stationary) isotropic mean/covariance model.
///
/// Implementors supply analytic partials; finite differences are only used by
/// [`validate_partials`].
pub trait IsotropicKernel: Send + Sync + Debug {
    fn mean(&self, s: f64) -> f64;
    fn mean_prime(&self, s: f64) -> f64;
    /// Kernel value and partials at a point of the domain. Callers are
    /// responsible for the domain check (see [`check_domain`]).
    fn partials(&self, l1: f64, l2: f64, l3: f64) -> Partials;
    fn tags(&self) -> KernelTags {
        KernelTags::default()
    }
}

/// Finite atomic Schoenberg measure `sum_j w_j delta_{t_j}`, giving the
/// completely monotone profile `C(r) = sum_j w_j exp(-t_j^2 r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchoenbergMixture {
    atoms: Vec<(f64, f64)>,
}

impl SchoenbergMixture {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self, KernelError> {
        if atoms.is_empty() {
            return Err(KernelError::InvalidParameters(
                "Schoenberg mixture needs at least one atom".into(),
            ));
        }
        for &(w, t) in &atoms {
            if !(w.is_finite() && w > 0.0) || !(t.is_finite() && t >= 0.0) {
                return Err(KernelError::InvalidParameters(format!(
                    "atom (w={w}, t={t}) needs w > 0 and t >= 0"
                )));
            }
        }
        Ok(Self { atoms })
    }

    /// `C(r) = exp(-r)`.
    pub fn squared_exponential() -> Self {
        Self { atoms: vec![(1.0, 1.0)] }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn c(&self, r: f64) -> f64 {
        self.atoms.iter().map(|&(w, t)| w * (-t * t * r).exp()).sum()
    }

    pub fn c_prime(&self, r: f64) -> f64 {
        self.atoms
            .iter()
            .map(|&(w, t)| -w * t * t * (-t * t * r).exp())
            .sum()
    }

    pub fn c_second(&self, r: f64) -> f64 {
        self.atoms
            .iter()
            .map(|&(w, t)| w * t.powi(4) * (-t * t * r).exp())
            .sum()
    }

    pub fn has_positive_scale(&self) -> bool {
        self.atoms.iter().any(|&(_, t)| t > 0.0)
    }
}

/// Coefficients `c_p` of a mixed p-spin model, `xi(s) = sum_p c_p^2 s^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinGlassMixture {
    coeffs: Vec<f64>,
}

impl SpinGlassMixture {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, KernelError> {
        if coeffs.is_empty() {
            return Err(KernelError::InvalidMixture("no coefficients".into()));
        }
        if let Some(c) = coeffs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(KernelError::InvalidMixture(format!(
                "coefficient {c} is not a finite non-negative number"
            )));
        }
        Ok(Self { coeffs })
    }

    /// Pure p-spin model `xi(s) = s^p`.
    pub fn pure(p: usize) -> Self {
        let mut coeffs = vec![0.0; p + 1];
        coeffs[p] = 1.0;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn xi(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(p, c)| c * c * s.powi(p as i32))
            .sum()
    }

    pub fn xi_prime(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(p, c)| c * c * p as f64 * s.powi(p as i32 - 1))
            .sum()
    }

    pub fn xi_second(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .map(|(p, c)| c * c * (p * (p - 1)) as f64 * s.powi(p as i32 - 2))
            .sum()
    }
}

/// Stationary kernel `kappa(l1, l2, l3) = C(l1 + l2 - l3)` with constant mean.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedStationary {
    pub mixture: SchoenbergMixture,
    pub mean_level: f64,
}

impl IsotropicKernel for LiftedStationary {
    fn mean(&self, _s: f64) -> f64 {
        self.mean_level
    }

    fn mean_prime(&self, _s: f64) -> f64 {
        0.0
    }

    fn partials(&self, l1: f64, l2: f64, l3: f64) -> Partials {
        let r = l1 + l2 - l3;
        let c1 = self.mixture.c_prime(r);
        let c2 = self.mixture.c_second(r);
        Partials {
            k: self.mixture.c(r),
            k1: c1,
            k2: c1,
            k3: -c1,
            k12: c2,
            k13: -c2,
            k23: -c2,
            k33: c2,
        }
    }

    fn tags(&self) -> KernelTags {
        KernelTags { stationary: true, spin_glass: false }
    }
}

/// Mixed p-spin kernel `kappa = xi(l3)` with zero mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinGlassKernel {
    pub mixture: SpinGlassMixture,
}

impl IsotropicKernel for SpinGlassKernel {
    fn mean(&self, _s: f64) -> f64 {
        0.0
    }

    fn mean_prime(&self, _s: f64) -> f64 {
        0.0
    }

    fn partials(&self, _l1: f64, _l2: f64, l3: f64) -> Partials {
        Partials {
            k: self.mixture.xi(l3),
            k3: self.mixture.xi_prime(l3),
            k33: self.mixture.xi_second(l3),
            ..Partials::default()
        }
    }

    fn tags(&self) -> KernelTags {
        KernelTags { stationary: false, spin_glass: true }
    }
}

/// Infinite-data limit of a random linear least-squares loss.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticKernel {
    pub sigma_a: f64,
    pub sigma_eta: f64,
    pub radius: f64,
}

impl QuadraticKernel {
    fn slope(&self) -> f64 {
        self.sigma_a.powi(4) * self.radius * self.radius
    }
}

impl IsotropicKernel for QuadraticKernel {
    fn mean(&self, s: f64) -> f64 {
        let a2 = self.sigma_a * self.sigma_a;
        0.5 * self.sigma_eta * self.sigma_eta + 0.5 * a2 * self.radius * self.radius + a2 * s
    }

    fn mean_prime(&self, _s: f64) -> f64 {
        self.sigma_a * self.sigma_a
    }

    fn partials(&self, _l1: f64, _l2: f64, l3: f64) -> Partials {
        Partials {
            k: self.slope() * l3,
            k3: self.slope(),
            ..Partials::default()
        }
    }
}

/// Built-in kernel families.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelModel {
    Stationary(LiftedStationary),
    SpinGlass(SpinGlassKernel),
    Quadratic(QuadraticKernel),
}

impl KernelModel {
    fn inner(&self) -> &dyn IsotropicKernel {
        match self {
            KernelModel::Stationary(k) => k,
            KernelModel::SpinGlass(k) => k,
            KernelModel::Quadratic(k) => k,
        }
    }
}

impl IsotropicKernel for KernelModel {
    fn mean(&self, s: f64) -> f64 {
        self.inner().mean(s)
    }

    fn mean_prime(&self, s: f64) -> f64 {
        self.inner().mean_prime(s)
    }

    fn partials(&self, l1: f64, l2: f64, l3: f64) -> Partials {
        self.inner().partials(l1, l2, l3)
    }

    fn tags(&self) -> KernelTags {
        self.inner().tags()
    }
}

pub fn lift_stationary(mixture: SchoenbergMixture, mean_level: f64) -> KernelModel {
    KernelModel::Stationary(LiftedStationary { mixture, mean_level })
}

pub fn spin_glass_kernel(mixture: SpinGlassMixture) -> KernelModel {
    KernelModel::SpinGlass(SpinGlassKernel { mixture })
}

pub fn quadratic_kernel(sigma_a: f64, sigma_eta: f64, radius: f64) -> Result<KernelModel, KernelError> {
    if !(sigma_a > 0.0 && sigma_a.is_finite()) {
        return Err(KernelError::InvalidParameters(format!("sigma_A = {sigma_a} must be > 0")));
    }
    if !(sigma_eta >= 0.0 && sigma_eta.is_finite()) {
        return Err(KernelError::InvalidParameters(format!("sigma_eta = {sigma_eta} must be >= 0")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(KernelError::InvalidParameters(format!("R = {radius} must be > 0")));
    }
    Ok(KernelModel::Quadratic(QuadraticKernel { sigma_a, sigma_eta, radius }))
}

/// Checks `(l1, l2, l3)` against `D = {l1, l2 >= 0, |l3| <= 2 sqrt(l1 l2)}`.
pub fn check_domain(l1: f64, l2: f64, l3: f64) -> Result<(), KernelError> {
    let bound = 2.0 * (l1.max(0.0) * l2.max(0.0)).sqrt();
    let ok = l1.is_finite()
        && l2.is_finite()
        && l3.is_finite()
        && l1 >= -DOMAIN_ABS_TOL
        && l2 >= -DOMAIN_ABS_TOL
        && l3.abs() <= bound * (1.0 + DOMAIN_REL_TOL) + DOMAIN_ABS_TOL;
    if ok {
        Ok(())
    } else {
        Err(KernelError::Domain { l1, l2, l3 })
    }
}

/// `N Cov(f(x), f(y))`.
pub fn cov_f_f<K: IsotropicKernel + ?Sized>(
    kernel: &K,
    s_x: f64,
    s_y: f64,
    ip_xy: f64,
) -> Result<f64, KernelError> {
    check_domain(s_x, s_y, ip_xy)?;
    Ok(kernel.partials(s_x, s_y, ip_xy).k)
}

/// `N Cov(D_v f(x), f(y))`.
pub fn cov_df_f<K: IsotropicKernel + ?Sized>(
    kernel: &K,
    s_x: f64,
    s_y: f64,
    ip_xy: f64,
    ip_xv: f64,
    ip_yv: f64,
) -> Result<f64, KernelError> {
    check_domain(s_x, s_y, ip_xy)?;
    let p = kernel.partials(s_x, s_y, ip_xy);
    Ok(p.k1 * ip_xv + p.k3 * ip_yv)
}

/// `N Cov(D_v f(x), D_w f(y))`, obtained by differentiating [`cov_df_f`] in
/// the direction `w` at `y`.
#[allow(clippy::too_many_arguments)]
pub fn cov_df_df<K: IsotropicKernel + ?Sized>(
    kernel: &K,
    s_x: f64,
    s_y: f64,
    ip_xy: f64,
    ip_xv: f64,
    ip_yv: f64,
    ip_xw: f64,
    ip_yw: f64,
    ip_vw: f64,
) -> Result<f64, KernelError> {
    check_domain(s_x, s_y, ip_xy)?;
    let p = kernel.partials(s_x, s_y, ip_xy);
    Ok(p.k12 * ip_xv * ip_yw
        + p.k13 * ip_xv * ip_xw
        + p.k23 * ip_yv * ip_yw
        + p.k33 * ip_yv * ip_xw
        + p.k3 * ip_vw)
}

pub fn mean_f<K: IsotropicKernel + ?Sized>(kernel: &K, s_x: f64) -> f64 {
    kernel.mean(s_x)
}

pub fn mean_df<K: IsotropicKernel + ?Sized>(kernel: &K, s_x: f64, ip_xv: f64) -> f64 {
    kernel.mean_prime(s_x) * ip_xv
}

/// `kappa_3(s, s, 2s)`, the variance scale of a directional derivative
/// orthogonal to the evaluation point. Must be positive for the limit
/// recursion to increase its span.
pub fn kappa3_on_diagonal<K: IsotropicKernel + ?Sized>(kernel: &K, s: f64) -> f64 {
    kernel.partials(s, s, 2.0 * s).k3
}

/// Statistics source used by the shared matrix assembly: the same five
/// quantities, computed either through a kernel `kappa` or directly.
pub trait FieldModel: Send + Sync {
    fn mean_f(&self, s_x: f64) -> f64;
    fn mean_df(&self, s_x: f64, ip_xv: f64) -> f64;
    fn cov_f_f(&self, s_x: f64, s_y: f64, ip_xy: f64) -> Result<f64, KernelError>;
    fn cov_df_f(&self, s_x: f64, s_y: f64, ip_xy: f64, ip_xv: f64, ip_yv: f64)
        -> Result<f64, KernelError>;
    #[allow(clippy::too_many_arguments)]
    fn cov_df_df(
        &self,
        s_x: f64,
        s_y: f64,
        ip_xy: f64,
        ip_xv: f64,
        ip_yv: f64,
        ip_xw: f64,
        ip_yw: f64,
        ip_vw: f64,
    ) -> Result<f64, KernelError>;
}

impl<K: IsotropicKernel + ?Sized> FieldModel for K {
    fn mean_f(&self, s_x: f64) -> f64 {
        mean_f(self, s_x)
    }

    fn mean_df(&self, s_x: f64, ip_xv: f64) -> f64 {
        mean_df(self, s_x, ip_xv)
    }

    fn cov_f_f(&self, s_x: f64, s_y: f64, ip_xy: f64) -> Result<f64, KernelError> {
        cov_f_f(self, s_x, s_y, ip_xy)
    }

    fn cov_df_f(
        &self,
        s_x: f64,
        s_y: f64,
        ip_xy: f64,
        ip_xv: f64,
        ip_yv: f64,
    ) -> Result<f64, KernelError> {
        cov_df_f(self, s_x, s_y, ip_xy, ip_xv, ip_yv)
    }

    fn cov_df_df(
        &self,
        s_x: f64,
        s_y: f64,
        ip_xy: f64,
        ip_xv: f64,
        ip_yv: f64,
        ip_xw: f64,
        ip_yw: f64,
        ip_vw: f64,
    ) -> Result<f64, KernelError> {
        cov_df_df(self, s_x, s_y, ip_xy, ip_xv, ip_yv, ip_xw, ip_yw, ip_vw)
    }
}

/// Stationary isotropic field evaluated with the distance-based formulas
/// (`Delta = x - y`) instead of a lifted kernel. Used as an independent
/// second route for stationary models.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryField {
    pub mixture: SchoenbergMixture,
    pub mean_level: f64,
}

impl StationaryField {
    fn half_dist_sq(s_x: f64, s_y: f64, ip_xy: f64) -> Result<f64, KernelError> {
        check_domain(s_x, s_y, ip_xy)?;
        Ok((s_x + s_y - ip_xy).max(0.0))
    }
}

impl FieldModel for StationaryField {
    fn mean_f(&self, _s_x: f64) -> f64 {
        self.mean_level
    }

    fn mean_df(&self, _s_x: f64, _ip_xv: f64) -> f64 {
        0.0
    }

    fn cov_f_f(&self, s_x: f64, s_y: f64, ip_xy: f64) -> Result<f64, KernelError> {
        Ok(self.mixture.c(Self::half_dist_sq(s_x, s_y, ip_xy)?))
    }

    fn cov_df_f(
        &self,
        s_x: f64,
        s_y: f64,
        ip_xy: f64,
        ip_xv: f64,
        ip_yv: f64,
    ) -> Result<f64, KernelError> {
        let r = Self::half_dist_sq(s_x, s_y, ip_xy)?;
        Ok(self.mixture.c_prime(r) * (ip_xv - ip_yv))
    }

    fn cov_df_df(
        &self,
        s_x: f64,
        s_y: f64,
        ip_xy: f64,
        ip_xv: f64,
        ip_yv: f64,
        ip_xw: f64,
        ip_yw: f64,
        ip_vw: f64,
    ) -> Result<f64, KernelError> {
        let r = Self::half_dist_sq(s_x, s_y, ip_xy)?;
        let delta_v = ip_xv - ip_yv;
        let delta_w = ip_xw - ip_yw;
        Ok(-(self.mixture.c_second(r) * delta_w * delta_v + self.mixture.c_prime(r) * ip_vw))
    }
}

/// Algorithmic threshold `ALG = int_0^1 sqrt(xi''(s)) ds` of a spherical
/// mixed p-spin model, by adaptive Gauss-Kronrod quadrature (absolute
/// tolerance 1e-8) started from `quadrature_points` uniform panels.
pub fn alg_barrier(mixture: &SpinGlassMixture, quadrature_points: usize) -> Result<f64, KernelError> {
    let panels = quadrature_points.max(1);
    for i in 0..=panels.max(16) {
        let s = i as f64 / panels.max(16) as f64;
        let v = mixture.xi_second(s);
        if v < 0.0 || !v.is_finite() {
            return Err(KernelError::InvalidMixture(format!("xi''({s}) = {v} is negative")));
        }
    }
    let mut bad = None;
    let value = quadrature::adaptive_gauss_kronrod(
        |s| {
            let v = mixture.xi_second(s);
            if v < 0.0 {
                bad.get_or_insert(s);
                0.0
            } else {
                v.sqrt()
            }
        },
        0.0,
        1.0,
        panels,
        1e-8,
    );
    if let Some(s) = bad {
        return Err(KernelError::InvalidMixture(format!("xi''({s}) is negative")));
    }
    Ok(value.value)
}

/// Which partial derivative a [`PartialCheck`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialName {
    K1,
    K2,
    K3,
    K12,
    K13,
    K23,
    K33,
}

impl PartialName {
    pub const ALL: [PartialName; 7] = [
        PartialName::K1,
        PartialName::K2,
        PartialName::K3,
        PartialName::K12,
        PartialName::K13,
        PartialName::K23,
        PartialName::K33,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PartialName::K1 => "kappa_1",
            PartialName::K2 => "kappa_2",
            PartialName::K3 => "kappa_3",
            PartialName::K12 => "kappa_12",
            PartialName::K13 => "kappa_13",
            PartialName::K23 => "kappa_23",
            PartialName::K33 => "kappa_33",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialCheck {
    pub name: PartialName,
    /// Largest relative error, floored at a small fraction of the largest
    /// magnitude of this partial over the grid.
    pub max_rel_error: f64,
    /// Grid point where the largest error occurred.
    pub worst_point: [f64; 3],
    /// Analytic and finite-difference values at `worst_point`.
    pub analytic: f64,
    pub finite_difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialsReport {
    pub tol: f64,
    pub checks: Vec<PartialCheck>,
}

impl PartialsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_rel_error <= self.tol)
    }

    pub fn get(&self, name: PartialName) -> &PartialCheck {
        self.checks.iter().find(|c| c.name == name).expect("all partials are checked")
    }
}

/// Relative error with a floor: values smaller than `floor` in magnitude
/// are compared on the scale of `floor`, so isolated zeros of a partial do
/// not turn finite-difference truncation into a relative error of 1.
fn rel_error(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(floor);
    if scale < 1e-12 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Fraction of the largest magnitude of a partial over the grid used as the
/// floor in [`rel_error`].
const FLOOR_FRACTION: f64 = 1e-3;

/// Compares every analytic partial against a central finite difference.
///
/// First partials are differenced from `kappa`; second partials from the
/// analytic first partials, so a mismatch anywhere in the chain shows up.
pub fn validate_partials<K: IsotropicKernel + ?Sized>(
    kernel: &K,
    grid: &[[f64; 3]],
    tol: f64,
) -> PartialsReport {
    let mut checks: Vec<PartialCheck> = PartialName::ALL
        .iter()
        .map(|&name| PartialCheck {
            name,
            max_rel_error: 0.0,
            worst_point: [f64::NAN; 3],
            analytic: f64::NAN,
            finite_difference: f64::NAN,
        })
        .collect();

    let pick = |p: &Partials, name: PartialName| match name {
        PartialName::K1 => p.k1,
        PartialName::K2 => p.k2,
        PartialName::K3 => p.k3,
        PartialName::K12 => p.k12,
        PartialName::K13 => p.k13,
        PartialName::K23 => p.k23,
        PartialName::K33 => p.k33,
    };
    let floors: Vec<f64> = PartialName::ALL
        .iter()
        .map(|&name| {
            grid.iter()
                .map(|q| pick(&kernel.partials(q[0], q[1], q[2]), name).abs())
                .fold(0.0, f64::max)
                * FLOOR_FRACTION
        })
        .collect();

    for &point in grid {
        let p = kernel.partials(point[0], point[1], point[2]);
        let diff = |axis: usize, g: &dyn Fn(&Partials) -> f64| -> f64 {
            let h = 1e-5 * point[axis].abs().max(1.0);
            let mut hi = point;
            let mut lo = point;
            hi[axis] += h;
            lo[axis] -= h;
            let fh = g(&kernel.partials(hi[0], hi[1], hi[2]));
            let fl = g(&kernel.partials(lo[0], lo[1], lo[2]));
            (fh - fl) / (2.0 * h)
        };
        for (check, &floor) in checks.iter_mut().zip(&floors) {
            let (analytic, fd) = match check.name {
                PartialName::K1 => (p.k1, diff(0, &|q| q.k)),
                PartialName::K2 => (p.k2, diff(1, &|q| q.k)),
                PartialName::K3 => (p.k3, diff(2, &|q| q.k)),
                PartialName::K12 => (p.k12, diff(1, &|q| q.k1)),
                PartialName::K13 => (p.k13, diff(2, &|q| q.k1)),
                PartialName::K23 => (p.k23, diff(2, &|q| q.k2)),
                PartialName::K33 => (p.k33, diff(2, &|q| q.k3)),
            };
            let err = rel_error(analytic, fd, floor);
            if err > check.max_rel_error || check.worst_point[0].is_nan() {
                check.max_rel_error = err;
                check.worst_point = point;
                check.analytic = analytic;
                check.finite_difference = fd;
            }
        }
    }
    PartialsReport { tol, checks }
}

/// `n^3` grid strictly inside the kernel domain: `l1, l2` from `radii` and
/// `l3` a fraction of `2 sqrt(l1 l2)`.
pub fn interior_grid(n: usize) -> Vec<[f64; 3]> {
    let lambdas: Vec<f64> = (0..n).map(|i| 0.2 + 1.8 * i as f64 / (n.max(2) - 1) as f64).collect();
    let fracs: Vec<f64> = (0..n).map(|i| -0.8 + 1.6 * i as f64 / (n.max(2) - 1) as f64).collect();
    let mut grid = Vec::with_capacity(n * n * n);
    for &l1 in &lambdas {
        for &l2 in &lambdas {
            for &fr in &fracs {
                grid.push([l1, l2, fr * 2.0 * (l1 * l2).sqrt()]);
            }
        }
    }
    grid
}
