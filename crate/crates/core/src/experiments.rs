//! Experiment drivers: the localization comparison, the joint-vs-separate
//! structure-estimation Monte Carlo, and the temporal-order study.

use nalgebra::{DMatrix, DVector, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fit_circle_2d, unwrap_angle, ModelKind};
use crate::metrics::{compute_metrics, Metrics};
use crate::rng::SplitMix64;
use crate::selection::SelectionParams;
use crate::sim::{simulate, Scenario, SimRun};
use crate::slam::{
    aslam_step, dyn_slam_step, ekf_slam_step, DynSlamState, EkfSlamState, RobotState,
    SelectionBank, SlamParams, SlamState,
};
use crate::temporal::{build_transition, ekf_predict, init_from_samples, scalar_update};

/// Which filter runs the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Aslam,
    Ekf,
    Dyn,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aslam" => Ok(Algorithm::Aslam),
            "ekf" => Ok(Algorithm::Ekf),
            "dyn" => Ok(Algorithm::Dyn),
            other => Err(Error::InvalidScenario(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Aslam => "aslam",
            Algorithm::Ekf => "ekf",
            Algorithm::Dyn => "dyn",
        })
    }
}

/// Harness-level knobs layered on top of a scenario.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub tau: f64,
    pub min_samples: usize,
    /// Temporal state length for committed landmarks.
    pub order_n: usize,
    /// Candidate filters assume this multiple of the scenario's observation
    /// noise standard deviation; see `SelectionParams::obs_cov`.
    pub selection_noise_factor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Aslam,
            tau: 0.6,
            min_samples: crate::geometry::DEFAULT_MIN_SAMPLES,
            order_n: 2,
            selection_noise_factor: 3.75,
        }
    }
}

/// Everything a run produces, ready for the report writers.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub config_hash: u64,
    pub metrics: Metrics,
    pub estimated: Vec<RobotState>,
    pub truth: Vec<RobotState>,
    /// (step, landmark id, probabilities in ModelKind::ALL order).
    pub mu_trace: Vec<(usize, u64, [f64; 3])>,
    /// (time, landmark id, committed model).
    pub commits: Vec<(f64, u64, ModelKind)>,
    pub skipped_observations: usize,
}

/// Derive the filter parameters a scenario implies under the harness knobs.
pub fn slam_params_for(scenario: &Scenario, cfg: &ExperimentConfig) -> SlamParams {
    let sigma = scenario.noise.obs_cov[(0, 0)].sqrt().max(1e-4);
    let assumed = sigma * cfg.selection_noise_factor;
    SlamParams {
        noise: scenario.noise.clone(),
        selection: SelectionParams {
            tau: cfg.tau,
            min_samples: cfg.min_samples,
            order_n: cfg.order_n,
            obs_cov: Matrix3::identity() * assumed * assumed,
            ..Default::default()
        },
        ..Default::default()
    }
}

/// Run one scenario under one filter and score it against the ground truth.
pub fn run_slam_experiment(scenario: &Scenario, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let run: SimRun = simulate(scenario)?;
    let params = slam_params_for(scenario, cfg);
    let start = scenario.robot.initial;
    let steps = scenario.steps();

    let mut estimated = Vec::with_capacity(steps);
    let mut mu_trace = Vec::new();
    let mut commits = Vec::new();
    let skipped;

    match cfg.algorithm {
        Algorithm::Aslam => {
            let mut state = SlamState::new(start);
            let mut bank = SelectionBank::new();
            for k in 0..steps {
                aslam_step(&mut state, &run.commanded[k], &run.observations[k], &mut bank, &params)?;
                estimated.push(state.robot());
                for (id, sel) in &bank.tracks {
                    if sel.committed().is_none() {
                        let mu = &sel.belief.mu;
                        mu_trace.push((k, *id, [mu[0], mu[1], mu[2]]));
                    }
                }
            }
            commits = bank.commits.clone();
            skipped = state.skipped_observations;
        }
        Algorithm::Ekf => {
            let mut state = EkfSlamState::new(start);
            for k in 0..steps {
                ekf_slam_step(&mut state, &run.commanded[k], &run.observations[k], &params)?;
                estimated.push(state.robot());
            }
            skipped = state.skipped_observations;
        }
        Algorithm::Dyn => {
            let mut state = DynSlamState::new(start);
            for k in 0..steps {
                dyn_slam_step(&mut state, &run.commanded[k], &run.observations[k], &params)?;
                estimated.push(state.robot());
            }
            skipped = state.skipped_observations;
        }
    }

    let metrics = compute_metrics(&estimated, &run.truth.poses)?;
    Ok(ExperimentResult {
        algorithm: cfg.algorithm,
        seed: scenario.seed,
        config_hash: scenario.config_hash(),
        metrics,
        estimated,
        truth: run.truth.poses,
        mu_trace,
        commits,
        skipped_observations: skipped,
    })
}

/// Joint-versus-separate structure estimation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub runs: usize,
    pub seed: u64,
    pub noise_var: f64,
    /// Mean L2 center error / mean absolute radius error per method.
    pub separate_center_err: f64,
    pub separate_radius_err: f64,
    pub joint_center_err: f64,
    pub joint_radius_err: f64,
}

/// Protocol constants of the Monte Carlo study: a 2D landmark revolves at
/// constant angular velocity around (2, 2) with radius 1; each run observes
/// `MC_SAMPLES` positions `MC_DT` apart with the configured per-axis noise.
pub const MC_SAMPLES: usize = 24;
pub const MC_DT: f64 = 0.1;
pub const MC_OMEGA: f64 = 2.0;
pub const MC_CENTER: (f64, f64) = (2.0, 2.0);
pub const MC_RADIUS: f64 = 1.0;

/// Monte Carlo comparison of joint nonlinear estimation of
/// (center, radius, initial angle, angular rate) against the separated
/// pipeline (algebraic circle fit, then temporal fit).
pub fn run_joint_vs_separate(runs: usize, noise_var: f64, seed: u64) -> MonteCarloReport {
    let sigma = noise_var.sqrt();
    let center = Vector2::new(MC_CENTER.0, MC_CENTER.1);
    let mut rng = SplitMix64::new(seed).fork(0x3C);

    let mut sep_center = 0.0;
    let mut sep_radius = 0.0;
    let mut joint_center = 0.0;
    let mut joint_radius = 0.0;

    for _ in 0..runs {
        let theta0 = rng.uniform(0.0, std::f64::consts::TAU);
        let pts: Vec<Vector2<f64>> = (0..MC_SAMPLES)
            .map(|k| {
                let a = theta0 + MC_OMEGA * MC_DT * k as f64;
                center
                    + MC_RADIUS * Vector2::new(a.cos(), a.sin())
                    + Vector2::new(rng.normal_scaled(sigma), rng.normal_scaled(sigma))
            })
            .collect();

        // Separate: algebraic circle fit. The temporal part (theta0, omega)
        // is fit afterwards and does not feed back into the structure.
        if let Ok((c, r)) = fit_circle_2d(&pts) {
            sep_center += (c - center).norm();
            sep_radius += (r - MC_RADIUS).abs();
        } else {
            sep_center += center.norm();
            sep_radius += MC_RADIUS;
        }

        // Joint: damped Gauss-Newton over (cx, cy, r, theta0, omega) from
        // the documented cold start.
        let (c, r) = joint_circle_fit(&pts);
        joint_center += (c - center).norm();
        joint_radius += (r - MC_RADIUS).abs();
    }

    let n = runs as f64;
    MonteCarloReport {
        runs,
        seed,
        noise_var,
        separate_center_err: sep_center / n,
        separate_radius_err: sep_radius / n,
        joint_center_err: joint_center / n,
        joint_radius_err: joint_radius / n,
    }
}

/// Damped Gauss-Newton for the constant-angular-velocity model
/// `z_k = c + r e(theta0 + omega t_k)`. Cold start: centroid center, mean
/// centroid distance radius, first-point angle, first finite-difference
/// rate.
fn joint_circle_fit(pts: &[Vector2<f64>]) -> (Vector2<f64>, f64) {
    let n = pts.len();
    let centroid: Vector2<f64> = pts.iter().sum::<Vector2<f64>>() / n as f64;
    let r0 = pts.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n as f64;
    let ang = |p: &Vector2<f64>| (p.y - centroid.y).atan2(p.x - centroid.x);
    let theta0 = ang(&pts[0]);
    let omega0 = (unwrap_angle(theta0, ang(&pts[1])) - theta0) / MC_DT;

    // Parameters: [cx, cy, r, theta0, omega].
    let mut p = DVector::from_row_slice(&[centroid.x, centroid.y, r0, theta0, omega0]);
    let mut lambda = 1e-3;
    let residual = |p: &DVector<f64>| -> (DVector<f64>, f64) {
        let mut r = DVector::zeros(2 * n);
        for (k, z) in pts.iter().enumerate() {
            let a = p[3] + p[4] * MC_DT * k as f64;
            r[2 * k] = z.x - (p[0] + p[2] * a.cos());
            r[2 * k + 1] = z.y - (p[1] + p[2] * a.sin());
        }
        let cost = r.norm_squared();
        (r, cost)
    };
    let (mut res, mut cost) = residual(&p);
    for _ in 0..60 {
        let mut jac = DMatrix::zeros(2 * n, 5);
        for k in 0..n {
            let a = p[3] + p[4] * MC_DT * k as f64;
            let (s, c) = a.sin_cos();
            let t = MC_DT * k as f64;
            // d residual / d params (residual = z - model).
            jac[(2 * k, 0)] = -1.0;
            jac[(2 * k, 2)] = -c;
            jac[(2 * k, 3)] = p[2] * s;
            jac[(2 * k, 4)] = p[2] * s * t;
            jac[(2 * k + 1, 1)] = -1.0;
            jac[(2 * k + 1, 2)] = -s;
            jac[(2 * k + 1, 3)] = -p[2] * c;
            jac[(2 * k + 1, 4)] = -p[2] * c * t;
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &res;
        let damped = &jtj + DMatrix::identity(5, 5) * lambda * jtj.trace() / 5.0;
        let Some(step) = damped.lu().solve(&(-&jtr)) else { break };
        let candidate = &p + &step;
        let (new_res, new_cost) = residual(&candidate);
        if new_cost < cost {
            p = candidate;
            res = new_res;
            cost = new_cost;
            lambda = (lambda * 0.3).max(1e-12);
            if step.norm() < 1e-12 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e9 {
                break;
            }
        }
    }
    (Vector2::new(p[0], p[1]), p[2].abs())
}

/// One-step prediction RMSE of a direct-sensing scalar EKF per temporal
/// order. `orders` counts the highest modeled derivative: order k runs a
/// state of length k + 1.
pub fn run_order_study(
    track: &[(f64, f64)],
    orders: &[usize],
    obs_var: f64,
    process_noise: f64,
) -> Result<Vec<(usize, f64)>> {
    let max_order = orders.iter().copied().max().unwrap_or(0);
    if track.len() < max_order + 2 {
        return Err(Error::InsufficientSamples { got: track.len(), need: max_order + 2 });
    }
    let mut out = Vec::with_capacity(orders.len());
    for &order in orders {
        let n = order + 1;
        let dt = track[1].0 - track[0].0;
        let tm = build_transition(n, dt, process_noise)?;
        let init_len = n + 1;
        let mut state = init_from_samples(&track[..init_len], n, 1.0, obs_var.max(1e-12))?;
        let mut sq = 0.0;
        let mut count = 0usize;
        for &(_, q) in &track[init_len..] {
            state = ekf_predict(&state, &tm)?;
            sq += (state.mean[0] - q).powi(2);
            count += 1;
            let (next, _, _) = scalar_update(&state, q, obs_var)?;
            state = next;
        }
        out.push((order, (sq / count.max(1) as f64).sqrt()));
    }
    Ok(out)
}

/// Built-in stand-in for a spring-loaded door sweep: the angle accelerates,
/// then decelerates to rest, with a touch of sensor noise.
pub fn spring_door_profile(steps: usize, dt: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = SplitMix64::new(seed).fork(0xD00E);
    let duration = steps as f64 * dt;
    let amplitude = 1.2;
    (0..steps)
        .map(|k| {
            let t = k as f64 * dt;
            let q = amplitude * 0.5 * (1.0 - (std::f64::consts::PI * t / duration).cos())
                + rng.normal_scaled(0.005);
            (t, q)
        })
        .collect()
}
