use grfopt::gaussian::{cholesky_psd, condition, ConditioningPolicy, JitterPolicy};
use grfopt::kernelspace::{lift_stationary, spin_glass_kernel, FieldModel, SchoenbergMixture, SpinGlassMixture};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Joint covariance of `(f(p), grad f(p))` over all points, gradients in the
/// standard basis of `R^3`.
fn joint_cov<F: FieldModel>(field: &F, points: &[[f64; 3]]) -> DMatrix<f64> {
    let b = 4;
    let e = |i: usize| {
        let mut v = [0.0; 3];
        v[i] = 1.0;
        v
    };
    let mut m = DMatrix::zeros(points.len() * b, points.len() * b);
    for (p, x) in points.iter().enumerate() {
        for (q, y) in points.iter().enumerate() {
            let (sx, sy, ip) = (0.5 * dot(x, x), 0.5 * dot(y, y), dot(x, y));
            m[(p * b, q * b)] = field.cov_f_f(sx, sy, ip).unwrap();
            for i in 0..3 {
                let v = e(i);
                // cov(D_v f(x), f(y))
                m[(p * b + 1 + i, q * b)] = field.cov_df_f(sx, sy, ip, dot(x, &v), dot(y, &v)).unwrap();
                m[(q * b, p * b + 1 + i)] = m[(p * b + 1 + i, q * b)];
                for j in 0..3 {
                    let w = e(j);
                    m[(p * b + 1 + i, q * b + 1 + j)] = field.cov_df_df(
                        sx,
                        sy,
                        ip,
                        dot(x, &v),
                        dot(y, &v),
                        dot(x, &w),
                        dot(y, &w),
                        dot(&v, &w),
                    )
                    .unwrap();
                }
            }
        }
    }
    m
}

fn points_strategy() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-1.5f64..1.5), 1..=6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stationary_joint_covariance_is_psd(points in points_strategy()) {
        let field = lift_stationary(SchoenbergMixture::new(vec![(1.0, 1.0), (0.5, 3.0)]).unwrap(), 0.0);
        let m = joint_cov(&field, &points);
        let jitter = JitterPolicy::Escalate { start: 1e-12, max: 1e-10 };
        let f = cholesky_psd(&m, jitter);
        prop_assert!(f.is_ok(), "{:?}", f.err());
    }

    #[test]
    fn spin_glass_joint_covariance_is_psd(points in points_strategy()) {
        let field = spin_glass_kernel(SpinGlassMixture::new(vec![0.0, 0.0, 1.0, 0.5]).unwrap());
        let m = joint_cov(&field, &points);
        let jitter = JitterPolicy::Escalate { start: 1e-12, max: 1e-10 };
        let f = cholesky_psd(&m, jitter);
        prop_assert!(f.is_ok(), "{:?}", f.err());
    }

    #[test]
    fn conditioning_shrinks_variance(points in points_strategy()) {
        let field = lift_stationary(SchoenbergMixture::squared_exponential(), 0.0);
        let m = joint_cov(&field, &points);
        let k = m.nrows();
        if k < 8 {
            return Ok(());
        }
        // Condition the first point on the others.
        let (a, b) = (4, k - 4);
        let target = m.view((0, 0), (a, a)).into_owned();
        let cross = m.view((a, 0), (b, a)).into_owned();
        let observed_cov = m.view((a, a), (b, b)).into_owned();
        let r = condition(
            &DVector::zeros(b),
            &DVector::zeros(a),
            &observed_cov,
            &cross,
            &target,
            &DVector::from_element(b, 0.1),
            ConditioningPolicy::pseudo_inverse(),
        )
        .unwrap();
        for i in 0..a {
            prop_assert!(r.cond_cov[(i, i)] <= target[(i, i)] + 1e-12);
            prop_assert!(r.cond_cov[(i, i)] >= -1e-9);
        }
    }
}
