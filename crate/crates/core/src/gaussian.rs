//! Conditional Gaussian linear algebra and sampling primitives.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("matrix is not positive semi-definite (failed at jitter {jitter:e})")]
    NotPsd { jitter: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Diagonal regularization tried when a Cholesky factorization fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JitterPolicy {
    None,
    /// Ladder `0, start, 10 start, ..., max`.
    Escalate { start: f64, max: f64 },
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy::Escalate { start: 1e-12, max: 1e-8 }
    }
}

impl JitterPolicy {
    pub fn ladder(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        if let JitterPolicy::Escalate { start, max } = *self {
            let mut j = start;
            while j <= max * (1.0 + 1e-12) {
                out.push(j);
                j *= 10.0;
            }
        }
        out
    }
}

/// When the eigenvalue-thresholded pseudo-inverse replaces a Cholesky solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PseudoInverse {
    #[default]
    Never,
    /// Only after the jitter ladder is exhausted.
    Fallback,
    /// For every solve; suited to models whose covariances are singular by
    /// construction.
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConditioningPolicy {
    pub jitter: JitterPolicy,
    pub pseudo_inverse: PseudoInverse,
}

impl ConditioningPolicy {
    pub fn pseudo_inverse() -> Self {
        Self { jitter: JitterPolicy::default(), pseudo_inverse: PseudoInverse::Always }
    }
}

/// Relative eigenvalue cutoff of the pseudo-inverse.
pub const PINV_REL_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub l: DMatrix<f64>,
    pub jitter: f64,
}

fn max_abs_diag(a: &DMatrix<f64>) -> f64 {
    a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Cholesky factor of `a + j I` for the smallest `j` of the ladder that
/// factors with pivots above rounding level.
pub fn cholesky_psd(a: &DMatrix<f64>, jitter: JitterPolicy) -> Result<CholeskyFactor, GaussianError> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(GaussianError::Argument(format!("{}x{} matrix is not square", n, a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(GaussianError::Argument("non-finite matrix entry".into()));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Ok(CholeskyFactor { l: DMatrix::zeros(n, n), jitter: 0.0 });
    }
    let floor = (n as f64) * f64::EPSILON * max_abs_diag(a);
    let sym = (a + a.transpose()) * 0.5;
    let ladder = jitter.ladder();
    for &j in &ladder {
        let mut shifted = sym.clone();
        for i in 0..n {
            shifted[(i, i)] += j;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            let l = chol.unpack();
            if l.diagonal().iter().all(|d| d * d > floor) {
                return Ok(CholeskyFactor { l, jitter: j });
            }
        }
    }
    Err(GaussianError::NotPsd { jitter: *ladder.last().unwrap_or(&0.0) })
}

/// Whitening map `W` with `W S W^T = I` on the range of `s`.
enum Whitener {
    Lower(DMatrix<f64>),
    Eigen(DMatrix<f64>),
}

impl Whitener {
    fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Whitener::Lower(l) => l
                .solve_lower_triangular(m)
                .expect("factor has a positive diagonal"),
            Whitener::Eigen(w) => w * m,
        }
    }

    fn apply_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Whitener::Lower(l) => l
                .solve_lower_triangular(v)
                .expect("factor has a positive diagonal"),
            Whitener::Eigen(w) => w * v,
        }
    }
}

fn eigen_whitener(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = PINV_REL_THRESHOLD * scale;
    let kept: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > cutoff).collect();
    let mut w = DMatrix::zeros(kept.len(), n);
    for (r, &i) in kept.iter().enumerate() {
        let inv_sqrt = 1.0 / eig.eigenvalues[i].sqrt();
        for c in 0..n {
            w[(r, c)] = eig.eigenvectors[(c, i)] * inv_sqrt;
        }
    }
    w
}

struct Whitening {
    map: Whitener,
    jitter: f64,
    rank_deficient: bool,
}

fn whiten(s: &DMatrix<f64>, policy: ConditioningPolicy) -> Result<Whitening, GaussianError> {
    if policy.pseudo_inverse == PseudoInverse::Always {
        let w = eigen_whitener(s);
        let rank_deficient = w.nrows() < s.nrows();
        return Ok(Whitening { map: Whitener::Eigen(w), jitter: 0.0, rank_deficient });
    }
    match cholesky_psd(s, policy.jitter) {
        Ok(f) => Ok(Whitening { map: Whitener::Lower(f.l), jitter: f.jitter, rank_deficient: false }),
        Err(GaussianError::NotPsd { .. }) if policy.pseudo_inverse == PseudoInverse::Fallback => {
            let w = eigen_whitener(s);
            Ok(Whitening { map: Whitener::Eigen(w), jitter: 0.0, rank_deficient: true })
        }
        Err(e) => Err(e),
    }
}

/// Solves `s x = b` for symmetric positive (semi-)definite `s`, with the
/// minimum-norm solution on the pseudo-inverse path.
pub fn solve_psd(
    s: &DMatrix<f64>,
    b: &DVector<f64>,
    policy: ConditioningPolicy,
) -> Result<DVector<f64>, GaussianError> {
    let w = whiten(s, policy)?;
    let wb = w.map.apply_vec(b);
    Ok(match &w.map {
        Whitener::Lower(l) => l
            .transpose()
            .solve_upper_triangular(&wb)
            .expect("factor has a positive diagonal"),
        Whitener::Eigen(m) => m.transpose() * wb,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningResult {
    pub cond_mean: DVector<f64>,
    pub cond_cov: DMatrix<f64>,
    /// Jitter added to `S11` (0 when none was needed).
    pub jitter_used: f64,
    pub rank_deficient: bool,
}

impl ConditioningResult {
    pub fn log_jitter_used(&self) -> f64 {
        self.jitter_used.log10()
    }
}

fn check_finite_vec(name: &str, v: &DVector<f64>) -> Result<(), GaussianError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(GaussianError::Argument(format!("{name} has non-finite entries")))
    }
}

fn check_finite_mat(name: &str, m: &DMatrix<f64>) -> Result<(), GaussianError> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(GaussianError::Argument(format!("{name} has non-finite entries")))
    }
}

/// Law of `X2` given `X1 = observed` for a jointly Gaussian `(X1, X2)` with
/// means `mu1, mu2`, covariances `S11, S22` and cross covariance
/// `S12 = Cov(X1, X2)`.
pub fn condition(
    mu1: &DVector<f64>,
    mu2: &DVector<f64>,
    s11: &DMatrix<f64>,
    s12: &DMatrix<f64>,
    s22: &DMatrix<f64>,
    observed: &DVector<f64>,
    policy: ConditioningPolicy,
) -> Result<ConditioningResult, GaussianError> {
    let n1 = mu1.len();
    let n2 = mu2.len();
    if s11.shape() != (n1, n1)
        || s12.shape() != (n1, n2)
        || s22.shape() != (n2, n2)
        || observed.len() != n1
    {
        return Err(GaussianError::Argument(format!(
            "inconsistent block shapes: mu1 {n1}, mu2 {n2}, S11 {:?}, S12 {:?}, S22 {:?}, observed {}",
            s11.shape(),
            s12.shape(),
            s22.shape(),
            observed.len()
        )));
    }
    check_finite_vec("mu1", mu1)?;
    check_finite_vec("mu2", mu2)?;
    check_finite_vec("observed", observed)?;
    check_finite_mat("S11", s11)?;
    check_finite_mat("S12", s12)?;
    check_finite_mat("S22", s22)?;

    let (cond_mean, mut cond_cov, jitter_used, rank_deficient) = if n1 == 0 {
        (mu2.clone(), s22.clone(), 0.0, false)
    } else {
        let w = whiten(s11, policy)?;
        let a = w.map.apply(s12);
        let b = w.map.apply_vec(&(observed - mu1));
        let mean = mu2 + a.transpose() * b;
        let cov = s22 - a.transpose() * &a;
        (mean, cov, w.jitter, w.rank_deficient)
    };

    cond_cov = (&cond_cov + cond_cov.transpose()) * 0.5;
    for i in 0..n2 {
        if cond_cov[(i, i)] < 0.0 {
            cond_cov[(i, i)] = 0.0;
        }
    }
    Ok(ConditioningResult { cond_mean, cond_cov, jitter_used, rank_deficient })
}

/// Square-root factor `L` with `L L^T ~ cov`; falls back to a clamped
/// eigen-decomposition when the policy permits it.
pub fn psd_factor(cov: &DMatrix<f64>, policy: ConditioningPolicy) -> Result<DMatrix<f64>, GaussianError> {
    let chol = if policy.pseudo_inverse == PseudoInverse::Always {
        None
    } else {
        match cholesky_psd(cov, policy.jitter) {
            Ok(f) => Some(f.l),
            Err(e) if policy.pseudo_inverse == PseudoInverse::Never => return Err(e),
            Err(_) => None,
        }
    };
    if let Some(l) = chol {
        return Ok(l);
    }
    check_finite_mat("cov", cov)?;
    let n = cov.nrows();
    let eig = SymmetricEigen::new((cov + cov.transpose()) * 0.5);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut l = eig.eigenvectors.clone();
    for i in 0..n {
        let e = eig.eigenvalues[i];
        if e < -PINV_REL_THRESHOLD * scale.max(1.0) {
            return Err(GaussianError::NotPsd { jitter: 0.0 });
        }
        let s = e.max(0.0).sqrt();
        for r in 0..n {
            l[(r, i)] *= s;
        }
    }
    Ok(l)
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// `mean + L z` with `z` standard normal and `L` from [`psd_factor`].
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    policy: ConditioningPolicy,
    rng: &mut R,
) -> Result<DVector<f64>, GaussianError> {
    if cov.shape() != (mean.len(), mean.len()) {
        return Err(GaussianError::Argument(format!(
            "covariance {:?} does not match mean length {}",
            cov.shape(),
            mean.len()
        )));
    }
    let l = psd_factor(cov, policy)?;
    let z = standard_normal_vector(mean.len(), rng);
    Ok(mean + l * z)
}

/// Chi-square variate with real-valued `dof`, drawn as Gamma(dof/2, 2).
pub fn sample_chi_square<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> Result<f64, GaussianError> {
    let dist = ChiSquared::new(dof)
        .map_err(|e| GaussianError::Argument(format!("chi-square dof {dof}: {e}")))?;
    if !(dof > 0.0) {
        return Err(GaussianError::Argument(format!("chi-square dof {dof} must be positive")));
    }
    Ok(dist.sample(rng))
}
