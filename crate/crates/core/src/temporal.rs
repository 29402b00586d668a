//! Finite-order temporal model over a scalar motion variable.
//!
//! The filter state is `[q, q', ..., q^(n-1)]`. One step of length `dt`
//! advances it by the Taylor-series transition
//!
//! ```text
//! X(t+1) = A X(t) + B eta,   A[i][j] = dt^(j-i)/(j-i)!  (j >= i),
//!                            B[i]    = dt^(n-i)/(n-i)!
//! ```
//!
//! with scalar process noise `eta`. The prediction is exact for polynomial
//! trajectories of degree below `n`.
//!
//! On naming: "order k" in the experiment harness means the highest modeled
//! derivative, i.e. a state of length `n = k + 1`. Functions here take the
//! state length `n`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{forward_kinematics, landmark_jacobian, ArticulationConfig, Point3};

/// Discrete transition for a state of length `order_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    pub order_n: usize,
    pub dt: f64,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Variance of the scalar process noise injected through `b`.
    pub process_noise_scale: f64,
}

impl TransitionModel {
    /// Process-noise covariance contribution `B * scale * B^T`.
    pub fn process_noise(&self) -> DMatrix<f64> {
        &self.b * self.b.transpose() * self.process_noise_scale
    }
}

/// Gaussian state over the motion variable and its derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionFilterState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl MotionFilterState {
    pub fn order_n(&self) -> usize {
        self.mean.len()
    }

    /// Current motion variable estimate.
    pub fn q(&self) -> f64 {
        self.mean[0]
    }
}

/// Build the Taylor transition for state length `n` and step `dt`.
pub fn build_transition(n: usize, dt: f64, noise_scale: f64) -> Result<TransitionModel> {
    if n < 1 || dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidOrder { n, dt });
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            a[(i, j)] = dt.powi((j - i) as i32) / factorial(j - i);
        }
    }
    let mut b = DVector::zeros(n);
    for i in 0..n {
        let k = n - i;
        b[i] = dt.powi(k as i32) / factorial(k);
    }
    Ok(TransitionModel { order_n: n, dt, a, b, process_noise_scale: noise_scale })
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

/// Initialize the state from uniformly spaced samples of q.
///
/// The series is smoothed with a Gaussian kernel (`smoothing_sigma` in
/// samples, truncated at 3 sigma, odd reflection at the ends so slopes
/// survive the boundary), then backward finite differences at the latest
/// sample populate the derivatives. The covariance starts diagonal at
/// `q_var` for q and `q_var * (2/dt)^(2k)` for the k-th derivative, the
/// noise amplification of k-fold differencing.
pub fn init_from_samples(
    q_series: &[(f64, f64)],
    n: usize,
    smoothing_sigma: f64,
    q_var: f64,
) -> Result<MotionFilterState> {
    if n < 1 {
        return Err(Error::InvalidOrder { n, dt: 0.0 });
    }
    if q_series.len() < n + 1 {
        return Err(Error::InsufficientSamples { got: q_series.len(), need: n + 1 });
    }
    // Use the longest uniformly spaced suffix; tracks coming in and out of
    // view can leave gaps earlier in the buffer.
    let values = uniform_suffix(q_series);
    if values.len() < n + 1 {
        return Err(Error::InsufficientSamples { got: values.len(), need: n + 1 });
    }
    let dt = q_series[q_series.len() - 1].0 - q_series[q_series.len() - 2].0;

    let smoothed = gaussian_smooth_odd_reflect(&values, smoothing_sigma);
    let last = smoothed.len() - 1;
    let mut mean = DVector::zeros(n);
    for k in 0..n {
        // k-th backward difference at the latest sample.
        let mut acc = 0.0;
        for i in 0..=k {
            acc += (-1.0f64).powi(i as i32) * binomial(k, i) * smoothed[last - i];
        }
        mean[k] = acc / dt.powi(k as i32);
    }

    let mut cov = DMatrix::zeros(n, n);
    for k in 0..n {
        cov[(k, k)] = q_var * (2.0 / dt).powi(2 * k as i32);
    }
    Ok(MotionFilterState { mean, cov })
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Longest suffix of the series with uniform time spacing.
fn uniform_suffix(series: &[(f64, f64)]) -> Vec<f64> {
    let m = series.len();
    if m < 2 {
        return series.iter().map(|s| s.1).collect();
    }
    let dt = series[m - 1].0 - series[m - 2].0;
    let mut start = m - 2;
    while start > 0 {
        let step = series[start].0 - series[start - 1].0;
        if (step - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            break;
        }
        start -= 1;
    }
    series[start..].iter().map(|s| s.1).collect()
}

/// Gaussian smoothing with odd (point-symmetric) reflection at both ends:
/// `q[L+k] := 2 q[L] - q[L-k]`. Unlike even reflection this keeps end
/// slopes intact, which the derivative initialization depends on.
fn gaussian_smooth_odd_reflect(values: &[f64], sigma: f64) -> Vec<f64> {
    let len = values.len();
    if sigma <= 0.0 || len < 2 {
        return values.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    let mut norm = 0.0;
    for j in -radius..=radius {
        let w = (-(j as f64).powi(2) / (2.0 * sigma * sigma)).exp();
        kernel.push(w);
        norm += w;
    }
    let last = (len - 1) as i64;
    let fetch = |idx: i64| -> f64 {
        if idx < 0 {
            2.0 * values[0] - values[(-idx).min(last) as usize]
        } else if idx > last {
            2.0 * values[last as usize] - values[(2 * last - idx).max(0) as usize]
        } else {
            values[idx as usize]
        }
    };
    (0..len as i64)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * fetch(i + k as i64 - radius))
                .sum::<f64>()
                / norm
        })
        .collect()
}

/// Time update: `mean' = A mean`, `cov' = A cov A^T + B s B^T`.
pub fn ekf_predict(state: &MotionFilterState, tm: &TransitionModel) -> Result<MotionFilterState> {
    if state.order_n() != tm.order_n {
        return Err(Error::DimensionMismatch { expected: tm.order_n, got: state.order_n() });
    }
    let mean = &tm.a * &state.mean;
    let cov = &tm.a * &state.cov * tm.a.transpose() + tm.process_noise();
    Ok(MotionFilterState { mean, cov })
}

/// Measurement update against a 3D landmark observation.
///
/// The observation function is `forward_kinematics(config, q)`; only the
/// first state entry is observed, so `H = [J_q, 0, ..., 0]`. Returns the
/// updated state together with the innovation and its covariance, which the
/// model-selection layer turns into a likelihood.
pub fn ekf_update(
    state: &MotionFilterState,
    config: &ArticulationConfig,
    z: &Point3,
    obs_cov: &Matrix3<f64>,
) -> Result<(MotionFilterState, Vector3<f64>, Matrix3<f64>)> {
    let n = state.order_n();
    let q = state.mean[0];
    let jac = landmark_jacobian(config, q);
    let innovation = z - forward_kinematics(config, q);

    // S = H P H^T + R with H = [J | 0].
    let p00 = state.cov[(0, 0)];
    let s = jac * jac.transpose() * p00 + obs_cov;
    let s_chol = s.cholesky().ok_or(Error::SingularInnovation)?;

    // K = P H^T S^-1; P H^T is the first covariance column times J^T.
    let p_col0 = state.cov.column(0).into_owned();
    let mut p_ht = DMatrix::zeros(n, 3);
    for i in 0..n {
        for c in 0..3 {
            p_ht[(i, c)] = p_col0[i] * jac[c];
        }
    }
    let s_inv = s_chol.inverse();
    let gain = &p_ht * s_inv;

    let mean = &state.mean + &gain * innovation;

    // Joseph form keeps the covariance PSD under roundoff.
    let mut h = DMatrix::zeros(3, n);
    for c in 0..3 {
        h[(c, 0)] = jac[c];
    }
    let i_kh = DMatrix::identity(n, n) - &gain * &h;
    let mut g_r = DMatrix::zeros(n, n);
    let gain_r = &gain * obs_cov;
    for i in 0..n {
        for j in 0..n {
            for c in 0..3 {
                g_r[(i, j)] += gain_r[(i, c)] * gain[(j, c)];
            }
        }
    }
    let mut cov = &i_kh * &state.cov * i_kh.transpose() + g_r;
    symmetrize(&mut cov);

    Ok((MotionFilterState { mean, cov }, innovation, s))
}

/// Measurement update with the motion variable observed directly
/// (`H = [1, 0, ..., 0]`). Used by the temporal-order study.
pub fn scalar_update(
    state: &MotionFilterState,
    z: f64,
    obs_var: f64,
) -> Result<(MotionFilterState, f64, f64)> {
    let n = state.order_n();
    let innovation = z - state.mean[0];
    let s = state.cov[(0, 0)] + obs_var;
    if s <= 0.0 || !s.is_finite() {
        return Err(Error::SingularInnovation);
    }
    let gain = state.cov.column(0) / s;
    let mean = &state.mean + &gain * innovation;
    let mut i_kh = DMatrix::identity(n, n);
    for i in 0..n {
        i_kh[(i, 0)] -= gain[i];
    }
    let mut cov = &i_kh * &state.cov * i_kh.transpose() + &gain * obs_var * gain.transpose();
    symmetrize(&mut cov);
    Ok((MotionFilterState { mean, cov }, innovation, s))
}

/// Log-density of the innovation under `N(0, S)`.
pub fn observation_log_likelihood(innovation: &Vector3<f64>, s: &Matrix3<f64>) -> Result<f64> {
    let chol = s.cholesky().ok_or(Error::SingularInnovation)?;
    let ln_det = 2.0 * (0..3).map(|i| chol.l()[(i, i)].ln()).sum::<f64>();
    let white = chol.solve(innovation);
    let maha = innovation.dot(&white);
    Ok(-0.5 * (3.0 * (std::f64::consts::TAU).ln() + ln_det + maha))
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Plane, RevoluteConfig, StaticConfig};
    use crate::rng::SplitMix64;
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    #[test]
    fn transition_small_orders() {
        let tm = build_transition(1, 0.1, 0.0).unwrap();
        assert_eq!(tm.a, DMatrix::from_row_slice(1, 1, &[1.0]));
        assert_relative_eq!(tm.b[0], 0.1, epsilon = 1e-15);

        let tm = build_transition(2, 0.1, 0.0).unwrap();
        assert_eq!(tm.a, DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]));
        assert_relative_eq!(tm.b[0], 0.005, epsilon = 1e-15);
        assert_relative_eq!(tm.b[1], 0.1, epsilon = 1e-15);

        let tm = build_transition(3, 1.0, 0.0).unwrap();
        assert_relative_eq!(tm.a[(0, 0)], 1.0);
        assert_relative_eq!(tm.a[(0, 1)], 1.0);
        assert_relative_eq!(tm.a[(0, 2)], 0.5);
        assert_relative_eq!(tm.b[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(tm.b[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(tm.b[2], 1.0, epsilon = 1e-15);

        assert!(matches!(build_transition(0, 0.1, 0.0), Err(Error::InvalidOrder { .. })));
        assert!(matches!(build_transition(2, 0.0, 0.0), Err(Error::InvalidOrder { .. })));
    }

    #[test]
    fn init_constant_series() {
        let series: Vec<(f64, f64)> = (0..10).map(|i| (0.1 * i as f64, 2.0)).collect();
        let st = init_from_samples(&series, 2, 1.5, 1e-4).unwrap();
        assert_relative_eq!(st.mean[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(st.mean[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn init_linear_ramp() {
        let series: Vec<(f64, f64)> = (0..10).map(|i| (0.1 * i as f64, 0.3 * i as f64)).collect();
        // sigma -> 0 disables smoothing; the ramp derivative is exact.
        let st = init_from_samples(&series, 2, 0.0, 1e-4).unwrap();
        assert_relative_eq!(st.mean[0], 2.7, epsilon = 1e-6);
        assert_relative_eq!(st.mean[1], 3.0, epsilon = 1e-6);
        // Odd reflection keeps ramps exact under smoothing too.
        let st = init_from_samples(&series, 2, 1.5, 1e-4).unwrap();
        assert_relative_eq!(st.mean[1], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn init_sine_derivative() {
        let series: Vec<(f64, f64)> = (0..=20).map(|i| {
            let t = 0.05 * i as f64;
            (t, t.sin())
        }).collect();
        let st = init_from_samples(&series, 2, 2.0, 1e-4).unwrap();
        assert!((st.mean[1] - 1.0f64.cos()).abs() < 0.1, "got {}", st.mean[1]);
    }

    #[test]
    fn init_insufficient() {
        let series = [(0.0, 1.0), (0.1, 1.0)];
        assert!(matches!(
            init_from_samples(&series, 2, 1.5, 1e-4),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn init_uses_uniform_suffix() {
        // A gap early in the series must not corrupt the derivatives.
        let mut series: Vec<(f64, f64)> = vec![(0.0, 0.0), (0.5, 1.5)];
        for i in 0..8 {
            let t = 1.0 + 0.1 * i as f64;
            series.push((t, 3.0 * t));
        }
        let st = init_from_samples(&series, 2, 0.0, 1e-4).unwrap();
        assert_relative_eq!(st.mean[1], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn predict_examples() {
        let tm = build_transition(2, 0.1, 0.0).unwrap();
        let st = MotionFilterState {
            mean: DVector::from_row_slice(&[1.0, 2.0]),
            cov: DMatrix::zeros(2, 2),
        };
        let out = ekf_predict(&st, &tm).unwrap();
        assert_relative_eq!(out.mean[0], 1.2, epsilon = 1e-12);
        assert_relative_eq!(out.mean[1], 2.0, epsilon = 1e-12);

        // Zero prior covariance: cov' = B s B^T.
        let tm = build_transition(2, 0.1, 0.3).unwrap();
        let out = ekf_predict(&st, &tm).unwrap();
        let expect = &tm.b * tm.b.transpose() * 0.3;
        assert!((out.cov.clone() - expect).amax() < 1e-15);

        // Structure: cov' - A cov A^T is rank <= 1 and PSD.
        let mut rng = SplitMix64::new(5);
        for _ in 0..50 {
            let m = DMatrix::from_fn(2, 2, |_, _| rng.normal());
            let cov = &m * m.transpose();
            let st = MotionFilterState { mean: DVector::zeros(2), cov: cov.clone() };
            let out = ekf_predict(&st, &tm).unwrap();
            let diff = out.cov - &tm.a * &cov * tm.a.transpose();
            let eig = diff.symmetric_eigen();
            let mut pos = 0;
            for v in eig.eigenvalues.iter() {
                assert!(*v > -1e-12);
                if *v > 1e-12 {
                    pos += 1;
                }
            }
            assert!(pos <= 1);
        }

        let st3 = MotionFilterState { mean: DVector::zeros(3), cov: DMatrix::zeros(3, 3) };
        assert!(matches!(ekf_predict(&st3, &tm), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn polynomial_prediction_is_exact() {
        // Degree-(n-1) polynomials propagate exactly through A.
        for n in 1..=4usize {
            let dt = 0.1;
            let tm = build_transition(n, dt, 0.0).unwrap();
            // q(t) = sum c_k t^k / k!, derivatives at t: X_j = sum_{k>=j} c_k t^(k-j)/(k-j)!
            let coeffs: Vec<f64> = (0..n).map(|k| 1.0 + k as f64 * 0.7).collect();
            let eval = |t: f64, j: usize| -> f64 {
                (j..n)
                    .map(|k| coeffs[k] * t.powi((k - j) as i32) / factorial(k - j))
                    .sum()
            };
            let t0 = 0.4;
            let st = MotionFilterState {
                mean: DVector::from_fn(n, |j, _| eval(t0, j)),
                cov: DMatrix::zeros(n, n),
            };
            let out = ekf_predict(&st, &tm).unwrap();
            assert!((out.mean[0] - eval(t0 + dt, 0)).abs() < 1e-12, "order {n}");
        }
    }

    #[test]
    fn update_zero_prior_covariance_is_inert() {
        let config = ArticulationConfig::Static(StaticConfig { rest: Vector3::zeros() });
        let st = MotionFilterState { mean: DVector::from_row_slice(&[0.2]), cov: DMatrix::zeros(1, 1) };
        let z = Vector3::new(0.9, 0.1, 0.4);
        let (out, innovation, _) = ekf_update(&st, &config, &z, &Matrix3::identity()).unwrap();
        assert_relative_eq!(out.mean[0], 0.2, epsilon = 1e-12);
        let predicted = forward_kinematics(&config, 0.2);
        assert_relative_eq!(innovation, z - predicted, epsilon = 1e-12);
    }

    #[test]
    fn update_near_exact_measurement() {
        let config = ArticulationConfig::Static(StaticConfig { rest: Vector3::zeros() });
        let st = MotionFilterState {
            mean: DVector::from_row_slice(&[0.0]),
            cov: DMatrix::from_row_slice(1, 1, &[1.0]),
        };
        let z = Vector3::new(0.5, 0.5, 0.5);
        let (out, _, _) = ekf_update(&st, &config, &z, &(Matrix3::identity() * 1e-9)).unwrap();
        assert_relative_eq!(out.mean[0], 0.5, epsilon = 1e-6);
    }

    #[test]
    fn update_matches_grid_bayes_oracle() {
        // Dense-grid Bayesian update over q as the independent oracle, in a
        // small-noise regime where the EKF linearization is accurate.
        let mut rng = SplitMix64::new(606);
        for _ in 0..20 {
            let v1 = Vector3::new(rng.normal(), rng.normal(), rng.normal()).normalize();
            let helper = Vector3::new(rng.normal(), rng.normal(), rng.normal());
            let n = v1.cross(&helper).normalize();
            let v2 = n.cross(&v1);
            let config = ArticulationConfig::Revolute(RevoluteConfig {
                plane: Plane { v1, v2, p0: Vector3::new(rng.normal(), rng.normal(), rng.normal()) },
                center2d: Vector2::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)),
                radius: rng.uniform(0.5, 2.0),
            });
            let q0 = rng.uniform(-2.0, 2.0);
            let prior_var: f64 = 1e-4;
            let obs_var: f64 = 1e-6;
            let q_true = q0 + rng.normal_scaled(prior_var.sqrt());
            let z = forward_kinematics(&config, q_true)
                + Vector3::new(
                    rng.normal_scaled(obs_var.sqrt()),
                    rng.normal_scaled(obs_var.sqrt()),
                    rng.normal_scaled(obs_var.sqrt()),
                );

            let st = MotionFilterState {
                mean: DVector::from_row_slice(&[q0]),
                cov: DMatrix::from_row_slice(1, 1, &[prior_var]),
            };
            let (posterior, _, _) =
                ekf_update(&st, &config, &z, &(Matrix3::identity() * obs_var)).unwrap();

            // Grid filter over q with 10^4 points spanning +-6 prior sigmas.
            let half = 6.0 * prior_var.sqrt();
            let m = 10_000;
            let mut weights = Vec::with_capacity(m);
            let mut qs = Vec::with_capacity(m);
            for i in 0..m {
                let q = q0 - half + 2.0 * half * i as f64 / (m - 1) as f64;
                let prior = (-(q - q0).powi(2) / (2.0 * prior_var)).exp();
                let resid = z - forward_kinematics(&config, q);
                let lik = (-resid.norm_squared() / (2.0 * obs_var)).exp();
                weights.push(prior * lik);
                qs.push(q);
            }
            let wsum: f64 = weights.iter().sum();
            let grid_mean: f64 = weights.iter().zip(&qs).map(|(w, q)| w * q).sum::<f64>() / wsum;
            assert!(
                (posterior.mean[0] - grid_mean).abs() < 1e-2,
                "ekf {} vs grid {}",
                posterior.mean[0],
                grid_mean
            );
        }
    }

    #[test]
    fn log_likelihood_examples() {
        let base = -1.5 * std::f64::consts::TAU.ln();
        let ll = observation_log_likelihood(&Vector3::zeros(), &Matrix3::identity()).unwrap();
        assert_relative_eq!(ll, base, epsilon = 1e-12);
        assert_relative_eq!(ll, -2.7568155996140185, epsilon = 1e-9);

        let ll1 = observation_log_likelihood(&Vector3::new(1.0, 0.0, 0.0), &Matrix3::identity()).unwrap();
        assert_relative_eq!(ll1, base - 0.5, epsilon = 1e-12);

        let ll4 = observation_log_likelihood(&Vector3::zeros(), &(Matrix3::identity() * 4.0)).unwrap();
        assert_relative_eq!(ll - ll4, 1.5 * 4.0f64.ln(), epsilon = 1e-12);

        assert!(matches!(
            observation_log_likelihood(&Vector3::zeros(), &Matrix3::zeros()),
            Err(Error::SingularInnovation)
        ));
    }

    #[test]
    fn likelihood_normalizes_on_grid() {
        // exp(log-likelihood) integrates to 1 over a 3D grid for small S.
        let s = Matrix3::identity() * 0.01;
        let half = 0.45;
        let steps = 61;
        let dx = 2.0 * half / (steps - 1) as f64;
        let mut total = 0.0;
        for i in 0..steps {
            for j in 0..steps {
                for k in 0..steps {
                    let v = Vector3::new(
                        -half + i as f64 * dx,
                        -half + j as f64 * dx,
                        -half + k as f64 * dx,
                    );
                    total += observation_log_likelihood(&v, &s).unwrap().exp();
                }
            }
        }
        total *= dx * dx * dx;
        assert!((total - 1.0).abs() < 0.01, "integral {total}");
    }

    #[test]
    fn covariance_stays_psd_through_interleavings() {
        let mut rng = SplitMix64::new(99);
        let config = ArticulationConfig::Static(StaticConfig { rest: Vector3::zeros() });
        for _ in 0..30 {
            let n = 1 + (rng.next_u64() % 3) as usize;
            let tm = build_transition(n, 0.1, 0.01).unwrap();
            let mut st = init_from_samples(
                &(0..n + 2).map(|i| (0.1 * i as f64, 0.5)).collect::<Vec<_>>(),
                n,
                1.0,
                1e-3,
            )
            .unwrap();
            for _ in 0..60 {
                if rng.next_f64() < 0.5 {
                    st = ekf_predict(&st, &tm).unwrap();
                } else {
                    let z = Vector3::new(rng.normal(), rng.normal(), rng.normal()) * 0.5;
                    let (next, _, _) =
                        ekf_update(&st, &config, &z, &(Matrix3::identity() * 0.01)).unwrap();
                    st = next;
                }
                let eig = st.cov.clone().symmetric_eigen();
                for v in eig.eigenvalues.iter() {
                    assert!(*v >= -1e-9, "eigenvalue {v}");
                }
                let asym = (&st.cov - st.cov.transpose()).amax();
                assert!(asym < 1e-9);
            }
        }
    }

    #[test]
    fn second_order_beats_first_on_constant_rate() {
        // Constant nonzero velocity: the n=2 filter's steady-state one-step
        // prediction error must sit strictly below the n=1 filter's.
        let dt = 0.1;
        let rate = 0.8;
        let obs_var = 1e-6;
        let mut errs = Vec::new();
        for n in [1usize, 2] {
            let tm = build_transition(n, dt, 0.01).unwrap();
            let mut st = MotionFilterState {
                mean: DVector::zeros(n),
                cov: DMatrix::identity(n, n) * 0.1,
            };
            let mut sq = 0.0;
            let mut count = 0;
            for step in 0..200 {
                let t = dt * (step + 1) as f64;
                st = ekf_predict(&st, &tm).unwrap();
                let truth = rate * t;
                if step >= 100 {
                    sq += (st.mean[0] - truth).powi(2);
                    count += 1;
                }
                let (next, _, _) = scalar_update(&st, truth, obs_var).unwrap();
                st = next;
            }
            errs.push((sq / count as f64).sqrt());
        }
        assert!(errs[1] < errs[0], "n=2 rmse {} vs n=1 rmse {}", errs[1], errs[0]);
    }
}
