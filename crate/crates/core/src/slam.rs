//! Articulated EKF-SLAM and its two baselines.
//!
//! The articulated filter keeps the robot pose `(x, y, theta)` jointly with
//! the motion-parameter state of every committed landmark; committed models
//! replace the static-map assumption with per-landmark temporal propagation.
//! Observations of uncommitted landmarks are routed to the model-selection
//! bank and only enter the joint state once a model commits.
//!
//! Baselines: standard EKF-SLAM with static landmark positions in the state,
//! and a dynamic variant that gives every landmark a constant-velocity state.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{forward_kinematics, landmark_jacobian, ArticulationConfig, ModelKind, Point3};
use crate::selection::{CommitEvent, SelectionParams, TrackSelector};
use crate::temporal::{build_transition, symmetrize, MotionFilterState, TransitionModel};

/// Angular-velocity magnitude below which the straight-line motion model is
/// used instead of the arc model.
pub const OMEGA_EPS: f64 = 1e-6;

/// Planar robot pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: normalize_angle(theta) }
    }
}

/// Commanded (or executed) velocities over one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub v: f64,
    pub omega: f64,
    pub dt: f64,
}

/// Control and observation noise of the robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Control noise coefficients: Var(v) = a1 v^2 + a2 w^2,
    /// Var(w) = a3 v^2 + a4 w^2.
    pub alphas: [f64; 4],
    /// Depth-observation noise covariance, sensor frame.
    pub obs_cov: Matrix3<f64>,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { alphas: [0.05, 0.01, 0.01, 0.05], obs_cov: Matrix3::identity() * 0.04 }
    }
}

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut r = a % tau;
    if r > std::f64::consts::PI {
        r -= tau;
    } else if r <= -std::f64::consts::PI {
        r += tau;
    }
    r
}

/// Rotation about the z axis by `theta`.
pub fn rotation_z(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Constant-velocity unicycle step. The arc model is used away from
/// `OMEGA_EPS`; its straight-line limit otherwise, with the heading still
/// advanced by `omega * dt` so the two branches meet continuously.
pub fn robot_propagate(r: &RobotState, u: &ControlInput) -> RobotState {
    let theta = r.theta;
    let next = if u.omega.abs() >= OMEGA_EPS {
        let k = u.v / u.omega;
        RobotState {
            x: r.x - k * theta.sin() + k * (theta + u.omega * u.dt).sin(),
            y: r.y + k * theta.cos() - k * (theta + u.omega * u.dt).cos(),
            theta: theta + u.omega * u.dt,
        }
    } else {
        RobotState {
            x: r.x + u.v * u.dt * theta.cos(),
            y: r.y + u.v * u.dt * theta.sin(),
            theta: theta + u.omega * u.dt,
        }
    };
    RobotState { theta: normalize_angle(next.theta), ..next }
}

/// Jacobians of [`robot_propagate`]: `G` with respect to the pose and `V`
/// with respect to `(v, omega)`. The straight-line branch uses the
/// analytic limits of the arc branch so both are continuous across
/// `OMEGA_EPS`.
pub fn robot_jacobians(r: &RobotState, u: &ControlInput) -> (Matrix3<f64>, Matrix3x2<f64>) {
    let theta = r.theta;
    let dt = u.dt;
    let g = if u.omega.abs() >= OMEGA_EPS {
        let k = u.v / u.omega;
        let th1 = theta + u.omega * dt;
        Matrix3::new(
            1.0,
            0.0,
            -k * theta.cos() + k * th1.cos(),
            0.0,
            1.0,
            -k * theta.sin() + k * th1.sin(),
            0.0,
            0.0,
            1.0,
        )
    } else {
        Matrix3::new(
            1.0,
            0.0,
            -u.v * dt * theta.sin(),
            0.0,
            1.0,
            u.v * dt * theta.cos(),
            0.0,
            0.0,
            1.0,
        )
    };
    (g, control_jacobian(u.v, u.omega, dt, theta))
}

/// dPose/d(v, omega). The exact arc expressions divide twice-cancelled
/// differences by omega^2, which loses six digits near the branch point, so
/// small turn angles use the series in phi = omega * dt instead.
fn control_jacobian(v: f64, omega: f64, dt: f64, theta: f64) -> Matrix3x2<f64> {
    let phi = omega * dt;
    let (s, c) = theta.sin_cos();
    if phi.abs() < 1e-3 {
        let dxdv = dt * (c - phi * s / 2.0 - phi * phi * c / 6.0);
        let dydv = dt * (s + phi * c / 2.0 - phi * phi * s / 6.0);
        let dxdw = v * dt * dt * (-s / 2.0 - phi * c / 3.0 + phi * phi * s / 8.0);
        let dydw = v * dt * dt * (c / 2.0 - phi * s / 3.0 - phi * phi * c / 8.0);
        Matrix3x2::new(dxdv, dxdw, dydv, dydw, 0.0, dt)
    } else {
        let w = omega;
        let th1 = theta + phi;
        Matrix3x2::new(
            (th1.sin() - s) / w,
            v * (s - th1.sin()) / (w * w) + v / w * dt * th1.cos(),
            (c - th1.cos()) / w,
            v * (th1.cos() - c) / (w * w) + v / w * dt * th1.sin(),
            0.0,
            dt,
        )
    }
}

/// Diagonal control-noise covariance `S_t` in `(v, omega)` space.
pub fn control_noise_cov(u: &ControlInput, p: &NoiseParams) -> nalgebra::Matrix2<f64> {
    let [a1, a2, a3, a4] = p.alphas;
    nalgebra::Matrix2::new(
        a1 * u.v * u.v + a2 * u.omega * u.omega,
        0.0,
        0.0,
        a3 * u.v * u.v + a4 * u.omega * u.omega,
    )
}

/// Depth observation: landmark in the sensor frame. The robot moves in the
/// plane, so z is rotated but not translated.
pub fn predict_observation(r: &RobotState, m: &Point3) -> Vector3<f64> {
    rotation_z(r.theta).transpose() * Vector3::new(m.x - r.x, m.y - r.y, m.z)
}

/// Jacobian of [`predict_observation`] with respect to the robot pose.
pub fn observation_jacobian_robot(r: &RobotState, m: &Point3) -> Matrix3<f64> {
    let rt = rotation_z(r.theta).transpose();
    let (s, c) = r.theta.sin_cos();
    // d(R^T)/dtheta
    let drt = Matrix3::new(-s, c, 0.0, -c, -s, 0.0, 0.0, 0.0, 0.0);
    let d = Vector3::new(m.x - r.x, m.y - r.y, m.z);
    let col_x = -rt.column(0);
    let col_y = -rt.column(1);
    let col_t = drt * d;
    Matrix3::from_columns(&[col_x.into(), col_y.into(), col_t])
}

/// Jacobian of an articulated-landmark observation: the robot block and the
/// q-column of the landmark block (derivative columns are zero since the
/// observation depends on q only).
pub fn observation_jacobian(
    r: &RobotState,
    config: &ArticulationConfig,
    q: f64,
) -> (Matrix3<f64>, Vector3<f64>) {
    let m = forward_kinematics(config, q);
    let h_robot = observation_jacobian_robot(r, &m);
    let h_q = rotation_z(r.theta).transpose() * landmark_jacobian(config, q);
    (h_robot, h_q)
}

/// Parameters of the SLAM filters.
#[derive(Debug, Clone)]
pub struct SlamParams {
    pub noise: NoiseParams,
    /// Model-selection configuration for uncommitted landmarks.
    pub selection: SelectionParams,
    /// Process-noise variance of committed landmark blocks, per model,
    /// Cartesian units (divided by the squared Jacobian norm per landmark).
    pub landmark_process_noise: [f64; 3],
    /// Acceleration-noise variance of the constant-velocity baseline.
    pub dyn_process_noise: f64,
    /// Initial velocity variance of the constant-velocity baseline.
    pub dyn_init_vel_var: f64,
    /// Enroll unseen landmark ids automatically.
    pub auto_enroll: bool,
}

impl Default for SlamParams {
    fn default() -> Self {
        Self {
            noise: NoiseParams::default(),
            selection: SelectionParams::default(),
            landmark_process_noise: [1e-8, 1e-4, 1e-4],
            dyn_process_noise: 1e-3,
            dyn_init_vel_var: 0.25,
            auto_enroll: true,
        }
    }
}

/// One committed landmark inside the joint state.
#[derive(Debug, Clone)]
pub struct LandmarkEntry {
    pub id: u64,
    pub config: ArticulationConfig,
    pub tm: TransitionModel,
    /// First column of this entry's block in the joint state.
    pub offset: usize,
    pub dim: usize,
}

/// Joint Gaussian over the robot pose and all committed landmark blocks.
#[derive(Debug, Clone)]
pub struct SlamState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub entries: Vec<LandmarkEntry>,
    index: BTreeMap<u64, usize>,
    /// Simulation time, advanced by dt each step; timestamps the selection
    /// buffers.
    pub time: f64,
    /// Observations dropped due to singular innovation covariance.
    pub skipped_observations: usize,
}

impl SlamState {
    pub fn new(initial: RobotState) -> Self {
        let mut mean = DVector::zeros(3);
        mean[0] = initial.x;
        mean[1] = initial.y;
        mean[2] = initial.theta;
        Self {
            mean,
            cov: DMatrix::zeros(3, 3),
            entries: Vec::new(),
            index: BTreeMap::new(),
            time: 0.0,
            skipped_observations: 0,
        }
    }

    pub fn robot(&self) -> RobotState {
        RobotState { x: self.mean[0], y: self.mean[1], theta: self.mean[2] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn entry_of(&self, id: u64) -> Option<&LandmarkEntry> {
        self.index.get(&id).map(|&i| &self.entries[i])
    }

    /// Current position estimate of a committed landmark.
    pub fn landmark_estimate(&self, id: u64) -> Option<Point3> {
        let e = self.entry_of(id)?;
        Some(forward_kinematics(&e.config, self.mean[e.offset]))
    }

    /// Append a landmark block with the given motion-parameter state.
    /// Cross-covariance to the existing state starts at zero.
    pub fn augment(
        &mut self,
        id: u64,
        config: ArticulationConfig,
        tm: TransitionModel,
        state: &MotionFilterState,
    ) {
        let old = self.mean.len();
        let dim = state.mean.len();
        let mut mean = DVector::zeros(old + dim);
        mean.rows_mut(0, old).copy_from(&self.mean);
        mean.rows_mut(old, dim).copy_from(&state.mean);
        let mut cov = DMatrix::zeros(old + dim, old + dim);
        cov.view_mut((0, 0), (old, old)).copy_from(&self.cov);
        cov.view_mut((old, old), (dim, dim)).copy_from(&state.cov);
        self.mean = mean;
        self.cov = cov;
        self.index.insert(id, self.entries.len());
        self.entries.push(LandmarkEntry { id, config, tm, offset: old, dim });
    }
}

/// Per-landmark selection bank used by the articulated filter before commit.
#[derive(Debug, Default, Clone)]
pub struct SelectionBank {
    pub tracks: BTreeMap<u64, TrackSelector>,
    /// Commit log: (time, id, model).
    pub commits: Vec<(f64, u64, ModelKind)>,
}

impl SelectionBank {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Shared joint EKF measurement update. `h` is the dense 3 x dim Jacobian,
/// `innovation` the residual, `q` the observation noise. Returns false when
/// the innovation covariance is singular.
fn joint_update(
    mean: &mut DVector<f64>,
    cov: &mut DMatrix<f64>,
    h: &DMatrix<f64>,
    innovation: &Vector3<f64>,
    q: &Matrix3<f64>,
) -> bool {
    let pht = &*cov * h.transpose();
    let s = h * &pht + q;
    let Some(chol) = s.cholesky() else {
        return false;
    };
    let s_inv = chol.inverse();
    let gain = &pht * s_inv;
    let innov = DVector::from_column_slice(innovation.as_slice());
    *mean += &gain * &innov;
    mean[2] = normalize_angle(mean[2]);
    let n = mean.len();
    let i_kh = DMatrix::identity(n, n) - &gain * h;
    let q_dyn = DMatrix::from_fn(3, 3, |i, j| q[(i, j)]);
    *cov = &i_kh * &*cov * i_kh.transpose() + &gain * q_dyn * gain.transpose();
    symmetrize(cov);
    true
}

/// One articulated EKF-SLAM step: robot and landmark propagation, routing of
/// uncommitted observations through model selection, and assimilation of
/// committed ones.
pub fn aslam_step(
    state: &mut SlamState,
    u: &ControlInput,
    obs: &[(u64, Vector3<f64>)],
    bank: &mut SelectionBank,
    params: &SlamParams,
) -> Result<()> {
    // Propagation. F is block diagonal: G for the robot, each entry's A.
    let robot = state.robot();
    let next = robot_propagate(&robot, u);
    let (g, v) = robot_jacobians(&robot, u);
    let s_t = control_noise_cov(u, &params.noise);
    let n_t = v * s_t * v.transpose();

    let dim = state.dim();
    let mut f = DMatrix::identity(dim, dim);
    f.view_mut((0, 0), (3, 3)).copy_from(&g);
    let mut q_full = DMatrix::zeros(dim, dim);
    q_full.view_mut((0, 0), (3, 3)).copy_from(&n_t);
    for e in &state.entries {
        f.view_mut((e.offset, e.offset), (e.dim, e.dim)).copy_from(&e.tm.a);
        q_full
            .view_mut((e.offset, e.offset), (e.dim, e.dim))
            .copy_from(&e.tm.process_noise());
    }
    state.mean[0] = next.x;
    state.mean[1] = next.y;
    state.mean[2] = next.theta;
    for e in &state.entries {
        let block = state.mean.rows(e.offset, e.dim).into_owned();
        state.mean.rows_mut(e.offset, e.dim).copy_from(&(&e.tm.a * block));
    }
    state.cov = &f * &state.cov * f.transpose() + q_full;
    symmetrize(&mut state.cov);
    state.time += u.dt;

    // Measurement assimilation.
    for &(id, z) in obs {
        if state.index.contains_key(&id) {
            let (offset, dim_l, innovation, h) = {
                let e = state.entry_of(id).unwrap();
                let robot = state.robot();
                let q = state.mean[e.offset];
                let predicted = predict_observation(&robot, &forward_kinematics(&e.config, q));
                let (h_robot, h_q) = observation_jacobian(&robot, &e.config, q);
                let mut h = DMatrix::zeros(3, state.dim());
                h.view_mut((0, 0), (3, 3)).copy_from(&h_robot);
                for r in 0..3 {
                    h[(r, e.offset)] = h_q[r];
                }
                (e.offset, e.dim, z - predicted, h)
            };
            let _ = (offset, dim_l);
            if !joint_update(&mut state.mean, &mut state.cov, &h, &innovation, &params.noise.obs_cov)
            {
                state.skipped_observations += 1;
            }
        } else {
            // Pre-commit: track in the world frame through the current pose
            // estimate; the SLAM state is not touched.
            if !params.auto_enroll && !bank.tracks.contains_key(&id) {
                return Err(Error::UnknownLandmark(id));
            }
            let robot = state.robot();
            let world = rotation_z(robot.theta) * z + Vector3::new(robot.x, robot.y, 0.0);
            let selector = bank.tracks.entry(id).or_insert_with(|| TrackSelector::new(id));
            match selector.step(state.time, world, &params.selection) {
                Ok(Some(event)) => {
                    bank.commits.push((state.time, id, event.model));
                    enroll_committed(state, id, &event, u.dt, params);
                }
                Ok(None) => {}
                Err(Error::AllModelsImplausible) => {
                    state.skipped_observations += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

fn enroll_committed(
    state: &mut SlamState,
    id: u64,
    event: &CommitEvent,
    dt: f64,
    params: &SlamParams,
) {
    let cand = &event.candidate;
    let model_idx = ModelKind::ALL.iter().position(|&m| m == event.model).unwrap();
    let scale = params.landmark_process_noise[model_idx] / cand.config.jacobian_norm_sq();
    // The joint filter steps at the SLAM cadence, whatever spacing the
    // selection buffer happened to have.
    let tm = build_transition(cand.tm.order_n, dt, scale).expect("valid transition");
    state.augment(id, cand.config.clone(), tm, &cand.state);
}

/// Standard EKF-SLAM baseline: static 3D landmark positions in the state.
#[derive(Debug, Clone)]
pub struct EkfSlamState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub ids: Vec<u64>,
    index: BTreeMap<u64, usize>,
    pub skipped_observations: usize,
}

impl EkfSlamState {
    pub fn new(initial: RobotState) -> Self {
        let mut mean = DVector::zeros(3);
        mean[0] = initial.x;
        mean[1] = initial.y;
        mean[2] = initial.theta;
        Self {
            mean,
            cov: DMatrix::zeros(3, 3),
            ids: Vec::new(),
            index: BTreeMap::new(),
            skipped_observations: 0,
        }
    }

    pub fn robot(&self) -> RobotState {
        RobotState { x: self.mean[0], y: self.mean[1], theta: self.mean[2] }
    }

    pub fn landmark_estimate(&self, id: u64) -> Option<Point3> {
        let &i = self.index.get(&id)?;
        let off = 3 + 3 * i;
        Some(Vector3::new(self.mean[off], self.mean[off + 1], self.mean[off + 2]))
    }

    /// Insert a landmark with an explicit mean and covariance block;
    /// cross-covariance starts at zero.
    pub fn insert_landmark(&mut self, id: u64, position: Point3, cov: Matrix3<f64>) {
        let old = self.mean.len();
        let mut mean = DVector::zeros(old + 3);
        mean.rows_mut(0, old).copy_from(&self.mean);
        mean.rows_mut(old, 3).copy_from(&position);
        let mut c = DMatrix::zeros(old + 3, old + 3);
        c.view_mut((0, 0), (old, old)).copy_from(&self.cov);
        c.view_mut((old, old), (3, 3)).copy_from(&cov);
        self.mean = mean;
        self.cov = c;
        self.index.insert(id, self.ids.len());
        self.ids.push(id);
    }
}

/// Landmark initialization shared by the baselines: world position from the
/// observation plus its first-order covariance through the pose and sensor.
fn baseline_landmark_init(
    robot: &RobotState,
    robot_cov: &Matrix3<f64>,
    z: &Vector3<f64>,
    q: &Matrix3<f64>,
) -> (Point3, Matrix3<f64>) {
    let rot = rotation_z(robot.theta);
    let position = rot * z + Vector3::new(robot.x, robot.y, 0.0);
    let (s, c) = robot.theta.sin_cos();
    let dr = Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0);
    let jr = Matrix3::from_columns(&[
        Vector3::x(),
        Vector3::y(),
        dr * z,
    ]);
    let cov = jr * robot_cov * jr.transpose() + rot * q * rot.transpose();
    (position, cov)
}

/// One step of the standard EKF-SLAM baseline.
pub fn ekf_slam_step(
    state: &mut EkfSlamState,
    u: &ControlInput,
    obs: &[(u64, Vector3<f64>)],
    params: &SlamParams,
) -> Result<()> {
    let robot = state.robot();
    let next = robot_propagate(&robot, u);
    let (g, v) = robot_jacobians(&robot, u);
    let n_t = v * control_noise_cov(u, &params.noise) * v.transpose();

    let dim = state.mean.len();
    let mut f = DMatrix::identity(dim, dim);
    f.view_mut((0, 0), (3, 3)).copy_from(&g);
    state.mean[0] = next.x;
    state.mean[1] = next.y;
    state.mean[2] = next.theta;
    state.cov = &f * &state.cov * f.transpose();
    for i in 0..3 {
        for j in 0..3 {
            state.cov[(i, j)] += n_t[(i, j)];
        }
    }
    symmetrize(&mut state.cov);

    for &(id, z) in obs {
        if let Some(&i) = state.index.get(&id) {
            let off = 3 + 3 * i;
            let robot = state.robot();
            let m = Vector3::new(state.mean[off], state.mean[off + 1], state.mean[off + 2]);
            let predicted = predict_observation(&robot, &m);
            let h_robot = observation_jacobian_robot(&robot, &m);
            let rt = rotation_z(robot.theta).transpose();
            let mut h = DMatrix::zeros(3, state.mean.len());
            h.view_mut((0, 0), (3, 3)).copy_from(&h_robot);
            h.view_mut((0, off), (3, 3)).copy_from(&rt);
            let innovation = z - predicted;
            if !joint_update(&mut state.mean, &mut state.cov, &h, &innovation, &params.noise.obs_cov)
            {
                state.skipped_observations += 1;
            }
        } else {
            if !params.auto_enroll {
                return Err(Error::UnknownLandmark(id));
            }
            let robot = state.robot();
            let robot_cov = state.cov.view((0, 0), (3, 3)).into_owned();
            let robot_cov = Matrix3::from_fn(|i, j| robot_cov[(i, j)]);
            let (position, cov) =
                baseline_landmark_init(&robot, &robot_cov, &z, &params.noise.obs_cov);
            state.insert_landmark(id, position, cov);
        }
    }
    Ok(())
}

/// Dynamic EKF-SLAM baseline: every landmark carries position and velocity,
/// propagated at constant velocity.
#[derive(Debug, Clone)]
pub struct DynSlamState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub ids: Vec<u64>,
    index: BTreeMap<u64, usize>,
    pub skipped_observations: usize,
}

impl DynSlamState {
    pub fn new(initial: RobotState) -> Self {
        let mut mean = DVector::zeros(3);
        mean[0] = initial.x;
        mean[1] = initial.y;
        mean[2] = initial.theta;
        Self {
            mean,
            cov: DMatrix::zeros(3, 3),
            ids: Vec::new(),
            index: BTreeMap::new(),
            skipped_observations: 0,
        }
    }

    pub fn robot(&self) -> RobotState {
        RobotState { x: self.mean[0], y: self.mean[1], theta: self.mean[2] }
    }

    pub fn landmark_estimate(&self, id: u64) -> Option<Point3> {
        let &i = self.index.get(&id)?;
        let off = 3 + 6 * i;
        Some(Vector3::new(self.mean[off], self.mean[off + 1], self.mean[off + 2]))
    }
}

/// One step of the constant-velocity baseline.
pub fn dyn_slam_step(
    state: &mut DynSlamState,
    u: &ControlInput,
    obs: &[(u64, Vector3<f64>)],
    params: &SlamParams,
) -> Result<()> {
    let robot = state.robot();
    let next = robot_propagate(&robot, u);
    let (g, v) = robot_jacobians(&robot, u);
    let n_t = v * control_noise_cov(u, &params.noise) * v.transpose();
    let dt = u.dt;

    let dim = state.mean.len();
    let mut f = DMatrix::identity(dim, dim);
    f.view_mut((0, 0), (3, 3)).copy_from(&g);
    let mut q_full = DMatrix::zeros(dim, dim);
    q_full.view_mut((0, 0), (3, 3)).copy_from(&n_t);
    // Per-axis discrete white-acceleration noise.
    let qa = params.dyn_process_noise;
    for i in 0..state.ids.len() {
        let off = 3 + 6 * i;
        for axis in 0..3 {
            f[(off + axis, off + 3 + axis)] = dt;
            q_full[(off + axis, off + axis)] = qa * dt.powi(4) / 4.0;
            q_full[(off + axis, off + 3 + axis)] = qa * dt.powi(3) / 2.0;
            q_full[(off + 3 + axis, off + axis)] = qa * dt.powi(3) / 2.0;
            q_full[(off + 3 + axis, off + 3 + axis)] = qa * dt * dt;
        }
    }
    state.mean[0] = next.x;
    state.mean[1] = next.y;
    state.mean[2] = next.theta;
    for i in 0..state.ids.len() {
        let off = 3 + 6 * i;
        for axis in 0..3 {
            let vel = state.mean[off + 3 + axis];
            state.mean[off + axis] += dt * vel;
        }
    }
    state.cov = &f * &state.cov * f.transpose() + q_full;
    symmetrize(&mut state.cov);

    for &(id, z) in obs {
        if let Some(&i) = state.index.get(&id) {
            let off = 3 + 6 * i;
            let robot = state.robot();
            let m = Vector3::new(state.mean[off], state.mean[off + 1], state.mean[off + 2]);
            let predicted = predict_observation(&robot, &m);
            let h_robot = observation_jacobian_robot(&robot, &m);
            let rt = rotation_z(robot.theta).transpose();
            let mut h = DMatrix::zeros(3, state.mean.len());
            h.view_mut((0, 0), (3, 3)).copy_from(&h_robot);
            h.view_mut((0, off), (3, 3)).copy_from(&rt);
            let innovation = z - predicted;
            if !joint_update(&mut state.mean, &mut state.cov, &h, &innovation, &params.noise.obs_cov)
            {
                state.skipped_observations += 1;
            }
        } else {
            if !params.auto_enroll {
                return Err(Error::UnknownLandmark(id));
            }
            let robot = state.robot();
            let robot_cov = Matrix3::from_fn(|i, j| state.cov[(i, j)]);
            let (position, cov) =
                baseline_landmark_init(&robot, &robot_cov, &z, &params.noise.obs_cov);
            let old = state.mean.len();
            let mut mean = DVector::zeros(old + 6);
            mean.rows_mut(0, old).copy_from(&state.mean);
            mean.rows_mut(old, 3).copy_from(&position);
            let mut c = DMatrix::zeros(old + 6, old + 6);
            c.view_mut((0, 0), (old, old)).copy_from(&state.cov);
            c.view_mut((old, old), (3, 3)).copy_from(&cov);
            for axis in 0..3 {
                c[(old + 3 + axis, old + 3 + axis)] = params.dyn_init_vel_var;
            }
            state.mean = mean;
            state.cov = c;
            state.index.insert(id, state.ids.len());
            state.ids.push(id);
        }
    }
    Ok(())
}
