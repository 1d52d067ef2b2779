//! Block covariance assembly shared by the limit recursion and the finite-N
//! sampler.
//!
//! Points are given by their coordinates in the orthonormal basis
//! `v_0 .. v_{d-1}` of the span built so far; the observations at point `k`
//! are laid out as a column `(f, D_{v_0} f, .., D_{v_{d-1}} f)`. The history
//! matrix of `n` points is flattened row-major, so the entry for row `r` and
//! point `k` sits at `r * n + k`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::gaussian::{condition, ConditioningPolicy};
use crate::kernelspace::FieldModel;

/// Moments of the new observation column given the history.
#[derive(Debug, Clone)]
pub struct StepMoments {
    /// Conditional mean of `(f, D_{v_0} f, .., D_{v_{d-1}} f)` at the new point.
    pub mean: DVector<f64>,
    /// `N` times the conditional covariance of the same column.
    pub cov: DMatrix<f64>,
    /// `N` times the conditional variance of a derivative orthogonal to the
    /// span.
    pub sigma_w_sq: f64,
    pub rank_deficient: bool,
}

pub fn padded(v: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    let m = v.len().min(d);
    out[..m].copy_from_slice(&v[..m]);
    out
}

struct Geometry<'a> {
    coords: &'a [Vec<f64>],
    half_sq: Vec<f64>,
    ip: Vec<Vec<f64>>,
}

impl<'a> Geometry<'a> {
    fn new(coords: &'a [Vec<f64>]) -> Self {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let ip: Vec<Vec<f64>> = coords
            .iter()
            .map(|a| coords.iter().map(|b| dot(a, b)).collect())
            .collect();
        let half_sq = (0..coords.len()).map(|k| ip[k][k] / 2.0).collect();
        Self { coords, half_sq, ip }
    }

    /// `N Cov(Z[ra](k), Z[rb](l))` with row 0 the function value and row
    /// `1 + i` the derivative along `v_i`.
    fn cov<F: FieldModel + ?Sized>(&self, field: &F, ra: usize, k: usize, rb: usize, l: usize) -> Result<f64> {
        let (sk, sl, ip) = (self.half_sq[k], self.half_sq[l], self.ip[k][l]);
        let (yk, yl) = (&self.coords[k], &self.coords[l]);
        Ok(match (ra, rb) {
            (0, 0) => field.cov_f_f(sk, sl, ip)?,
            (i, 0) => field.cov_df_f(sk, sl, ip, yk[i - 1], yl[i - 1])?,
            (0, j) => field.cov_df_f(sl, sk, ip, yl[j - 1], yk[j - 1])?,
            (i, j) => {
                let vw = if i == j { 1.0 } else { 0.0 };
                field.cov_df_df(sk, sl, ip, yk[i - 1], yl[i - 1], yk[j - 1], yl[j - 1], vw)?
            }
        })
    }

    fn mean<F: FieldModel + ?Sized>(&self, field: &F, r: usize, k: usize) -> f64 {
        if r == 0 {
            field.mean_f(self.half_sq[k])
        } else {
            field.mean_df(self.half_sq[k], self.coords[k][r - 1])
        }
    }

    /// `N Cov` of derivatives along a direction orthogonal to the span.
    fn kappa3<F: FieldModel + ?Sized>(&self, field: &F, k: usize, l: usize) -> Result<f64> {
        Ok(field.cov_df_df(self.half_sq[k], self.half_sq[l], self.ip[k][l], 0.0, 0.0, 0.0, 0.0, 1.0)?)
    }
}

/// Conditional moments of the observation column at the last point of
/// `coords` given the values `f_hist` and span coordinates `g_hist` of the
/// gradients at the earlier points.
///
/// `coords` holds `n + 1` points and `g_hist` holds `n` gradients, each
/// zero-padded to `d` coordinates; entries beyond a gradient's own span are
/// observed as exact zeros.
pub fn step_moments<F: FieldModel + ?Sized>(
    field: &F,
    coords: &[Vec<f64>],
    f_hist: &[f64],
    g_hist: &[Vec<f64>],
    d: usize,
    policy: ConditioningPolicy,
) -> Result<StepMoments> {
    let n = f_hist.len();
    assert_eq!(coords.len(), n + 1, "one coordinate vector per point");
    assert_eq!(g_hist.len(), n, "one gradient per earlier point");
    let coords: Vec<Vec<f64>> = coords.iter().map(|c| padded(c, d)).collect();
    let geo = Geometry::new(&coords);
    let rows = d + 1;
    let h = rows * n;
    let idx = |r: usize, k: usize| r * n + k;

    let mut s11 = DMatrix::zeros(h, h);
    let mut s12 = DMatrix::zeros(h, rows);
    let mut s22 = DMatrix::zeros(rows, rows);
    let mut mu1 = DVector::zeros(h);
    let mut mu2 = DVector::zeros(rows);
    let mut observed = DVector::zeros(h);

    for ra in 0..rows {
        for k in 0..n {
            let a = idx(ra, k);
            mu1[a] = geo.mean(field, ra, k);
            observed[a] = if ra == 0 {
                f_hist[k]
            } else {
                g_hist[k].get(ra - 1).copied().unwrap_or(0.0)
            };
            for rb in 0..rows {
                for l in 0..n {
                    let b = idx(rb, l);
                    if b < a {
                        continue;
                    }
                    let c = geo.cov(field, ra, k, rb, l)?;
                    s11[(a, b)] = c;
                    s11[(b, a)] = c;
                }
                s12[(a, rb)] = geo.cov(field, ra, k, rb, n)?;
            }
        }
    }
    for ra in 0..rows {
        mu2[ra] = geo.mean(field, ra, n);
        for rb in ra..rows {
            let c = geo.cov(field, ra, n, rb, n)?;
            s22[(ra, rb)] = c;
            s22[(rb, ra)] = c;
        }
    }
    let v = condition(&mu1, &mu2, &s11, &s12, &s22, &observed, policy)?;

    let mut w11 = DMatrix::zeros(n, n);
    let mut w12 = DMatrix::zeros(n, 1);
    for k in 0..n {
        for l in k..n {
            let c = geo.kappa3(field, k, l)?;
            w11[(k, l)] = c;
            w11[(l, k)] = c;
        }
        w12[(k, 0)] = geo.kappa3(field, k, n)?;
    }
    let w22 = DMatrix::from_element(1, 1, geo.kappa3(field, n, n)?);
    let w = condition(
        &DVector::zeros(n),
        &DVector::zeros(1),
        &w11,
        &w12,
        &w22,
        &DVector::zeros(n),
        policy,
    )?;
    // `condition` clamps a negative diagonal; recompute the raw Schur
    // complement sign so callers can tell rounding from inconsistency.
    let sigma_w_sq = if w.cond_cov[(0, 0)] > 0.0 {
        w.cond_cov[(0, 0)]
    } else {
        raw_schur(&w11, &w12, w22[(0, 0)], policy)?
    };

    Ok(StepMoments {
        mean: v.cond_mean,
        cov: v.cond_cov,
        sigma_w_sq,
        rank_deficient: v.rank_deficient || w.rank_deficient,
    })
}

fn raw_schur(w11: &DMatrix<f64>, w12: &DMatrix<f64>, w22: f64, policy: ConditioningPolicy) -> Result<f64> {
    if w11.nrows() == 0 {
        return Ok(w22);
    }
    let b = w12.column(0).into_owned();
    let x = crate::gaussian::solve_psd(w11, &b, policy)?;
    Ok(w22 - b.dot(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernelspace::{lift_stationary, SchoenbergMixture};

    #[test]
    fn first_step_is_unconditional() {
        let k = lift_stationary(SchoenbergMixture::squared_exponential(), 0.5);
        let m = step_moments(&k, &[vec![1.0]], &[], &[], 1, ConditioningPolicy::default()).unwrap();
        assert_eq!(m.mean.as_slice(), &[0.5, 0.0]);
        assert!((m.cov[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(m.cov[(0, 1)].abs() < 1e-15);
        assert!((m.cov[(1, 1)] - 1.0).abs() < 1e-15);
        assert!((m.sigma_w_sq - 1.0).abs() < 1e-15);
    }

    #[test]
    fn padding() {
        assert_eq!(padded(&[1.0, 2.0], 3), vec![1.0, 2.0, 0.0]);
        assert_eq!(padded(&[1.0, 2.0], 1), vec![1.0]);
    }
}
