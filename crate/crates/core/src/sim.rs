//! Deterministic, seedable world simulation: articulated landmarks, a
//! unicycle robot on a scripted control schedule, and a cone-limited depth
//! sensor. Every random stream comes from the crate's portable generator, so
//! a (scenario, seed) pair reproduces byte-identical runs anywhere.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    forward_kinematics, validate_config, ArticulationConfig, Plane, Point3,
    PrismaticConfig, RevoluteConfig, StaticConfig,
};
use crate::rng::SplitMix64;
use crate::slam::{predict_observation, robot_propagate, ControlInput, NoiseParams, RobotState};

/// Field-of-view cone of the depth sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub fov_half_angle: f64,
    pub max_range: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self { fov_half_angle: std::f64::consts::FRAC_PI_4, max_range: 4.0 }
    }
}

/// Ground-truth evolution of a landmark's motion variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MotionSchedule {
    Constant { q0: f64 },
    Linear { q0: f64, rate: f64 },
    /// Per-step values; index k is the value at t = k * dt.
    Scripted { values: Vec<f64> },
}

impl MotionSchedule {
    pub fn q_at(&self, t: f64, dt: f64) -> f64 {
        match self {
            MotionSchedule::Constant { q0 } => *q0,
            MotionSchedule::Linear { q0, rate } => q0 + rate * t,
            MotionSchedule::Scripted { values } => {
                let idx = ((t / dt).round() as usize).min(values.len().saturating_sub(1));
                values[idx]
            }
        }
    }
}

/// One landmark: ground-truth structure and motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLandmark {
    pub id: u64,
    pub config: ArticulationConfig,
    pub schedule: MotionSchedule,
}

/// Piecewise-constant commanded controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSegment {
    pub v: f64,
    pub omega: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotPlan {
    pub initial: RobotState,
    pub segments: Vec<ControlSegment>,
}

/// Declarative world description; the unit of experiment reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub landmarks: Vec<ScenarioLandmark>,
    pub robot: RobotPlan,
    pub sensor: SensorSpec,
    pub noise: NoiseParams,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Commanded (v, omega) at time t.
    pub fn control_at(&self, t: f64) -> Result<(f64, f64)> {
        let mut acc = 0.0;
        for seg in &self.robot.segments {
            acc += seg.duration;
            if t < acc - 1e-9 {
                return Ok((seg.v, seg.omega));
            }
        }
        // The final instant belongs to the last segment.
        if t <= self.duration + 1e-9 {
            if let Some(seg) = self.robot.segments.last() {
                return Ok((seg.v, seg.omega));
            }
        }
        Err(Error::OutOfSchedule { t, duration: self.duration })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(Error::InvalidScenario("dt must be positive".into()));
        }
        let steps = self.duration / self.dt;
        if (steps - steps.round()).abs() > 1e-6 || steps < 1.0 {
            return Err(Error::InvalidScenario(
                "duration must be a positive integer multiple of dt".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for lm in &self.landmarks {
            if !seen.insert(lm.id) {
                return Err(Error::InvalidScenario(format!("duplicate landmark id {}", lm.id)));
            }
            validate_config(&lm.config)?;
            if let MotionSchedule::Scripted { values } = &lm.schedule {
                if values.len() <= self.steps() {
                    return Err(Error::InvalidScenario(format!(
                        "scripted schedule of landmark {} covers {} steps, run has {}",
                        lm.id,
                        values.len(),
                        self.steps() + 1
                    )));
                }
            }
        }
        let total: f64 = self.robot.segments.iter().map(|s| s.duration).sum();
        if total + 1e-9 < self.duration {
            return Err(Error::InvalidScenario(format!(
                "control schedule covers {total:.3} s of a {:.3} s run",
                self.duration
            )));
        }
        if self.sensor.fov_half_angle <= 0.0 || self.sensor.fov_half_angle > std::f64::consts::PI {
            return Err(Error::InvalidScenario("fov_half_angle out of (0, pi]".into()));
        }
        if self.sensor.max_range <= 0.0 {
            return Err(Error::InvalidScenario("max_range must be positive".into()));
        }
        Ok(())
    }

    /// Stable 64-bit hash of the serialized scenario; embedded in reports.
    pub fn config_hash(&self) -> u64 {
        let json = serde_json::to_string(self).expect("scenario serializes");
        fnv1a64(json.as_bytes())
    }
}

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Built-in scenario families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// One landmark per model, stationary robot; the selection study.
    ThreeLandmark,
    /// 40 static + 1 revolute + 1 prismatic landmark, robot on a closed
    /// loop; the localization study.
    DynamicWorld,
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three_landmark" => Ok(ScenarioKind::ThreeLandmark),
            "dynamic_world" => Ok(ScenarioKind::DynamicWorld),
            other => Err(Error::InvalidScenario(format!("unknown scenario kind '{other}'"))),
        }
    }
}

/// Construct one of the built-in scenarios. Pure in (kind, seed).
pub fn generate_default_scenario(kind: ScenarioKind, seed: u64) -> Scenario {
    match kind {
        ScenarioKind::ThreeLandmark => three_landmark_scenario(seed),
        ScenarioKind::DynamicWorld => dynamic_world_scenario(seed),
    }
}

fn three_landmark_scenario(seed: u64) -> Scenario {
    let landmarks = vec![
        ScenarioLandmark {
            id: 0,
            config: ArticulationConfig::Static(StaticConfig { rest: Vector3::new(2.0, 0.6, 1.0) }),
            schedule: MotionSchedule::Constant { q0: 0.0 },
        },
        ScenarioLandmark {
            id: 1,
            config: ArticulationConfig::Prismatic(PrismaticConfig {
                axis: Vector3::new(0.0, 1.0, 0.0),
                origin: Vector3::new(2.2, -0.7, 0.8),
            }),
            schedule: MotionSchedule::Linear { q0: 0.0, rate: 0.2 },
        },
        ScenarioLandmark {
            id: 2,
            config: ArticulationConfig::Revolute(RevoluteConfig {
                plane: Plane {
                    v1: Vector3::new(0.0, 1.0, 0.0),
                    v2: Vector3::new(0.0, 0.0, 1.0),
                    p0: Vector3::new(2.5, 0.0, 1.2),
                },
                center2d: Vector2::new(0.0, 0.0),
                radius: 0.5,
            }),
            schedule: MotionSchedule::Linear { q0: 0.0, rate: 2.0 },
        },
    ];
    Scenario {
        landmarks,
        robot: RobotPlan {
            initial: RobotState::new(0.0, 0.0, 0.0),
            segments: vec![ControlSegment { v: 0.0, omega: 0.0, duration: 15.0 }],
        },
        sensor: SensorSpec::default(),
        noise: NoiseParams { alphas: [0.0; 4], obs_cov: Matrix3::identity() * 4e-4 },
        dt: 0.1,
        duration: 15.0,
        seed,
    }
}

fn dynamic_world_scenario(seed: u64) -> Scenario {
    let mut rng = SplitMix64::new(seed).fork(0xD1CE);
    let mut landmarks = Vec::with_capacity(42);
    // 40 static landmarks uniform over the 10 m x 10 m workspace.
    for id in 0..40u64 {
        landmarks.push(ScenarioLandmark {
            id,
            config: ArticulationConfig::Static(StaticConfig {
                rest: Vector3::new(rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0), rng.uniform(0.0, 2.0)),
            }),
            schedule: MotionSchedule::Constant { q0: 0.0 },
        });
    }
    // One revolute joint near the loop, swinging fast enough that its
    // curvature is visible within the fitting window at the sensor's noise.
    landmarks.push(ScenarioLandmark {
        id: 40,
        config: ArticulationConfig::Revolute(RevoluteConfig {
            plane: Plane {
                v1: Vector3::new(1.0, 0.0, 0.0),
                v2: Vector3::new(0.0, 1.0, 0.0),
                p0: Vector3::new(5.0, 5.0, 1.0),
            },
            center2d: Vector2::new(0.0, 0.0),
            radius: 1.2,
        }),
        schedule: MotionSchedule::Linear { q0: 0.0, rate: 0.8 },
    });
    // One prismatic joint working like a drawer: it slides out and back
    // along its axis, staying within reach of the loop.
    let dt = 0.1;
    let duration = 44.8;
    let steps = (duration / dt) as usize;
    let drawer_period = 14.8;
    let drawer: Vec<f64> = (0..=steps + 1)
        .map(|k| 0.75 * (1.0 - (std::f64::consts::TAU * k as f64 * dt / drawer_period).cos()))
        .collect();
    landmarks.push(ScenarioLandmark {
        id: 41,
        config: ArticulationConfig::Prismatic(PrismaticConfig {
            axis: Vector3::new(-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2, 0.0),
            origin: Vector3::new(7.5, 2.5, 0.6),
        }),
        schedule: MotionSchedule::Scripted { values: drawer },
    });

    // Closed rounded-rectangle loop: four 4 m legs at 0.5 m/s joined by
    // quarter turns of radius ~1 m, traversed once in 44.8 s.
    let leg = ControlSegment { v: 0.5, omega: 0.0, duration: 8.0 };
    let corner = ControlSegment { v: 0.5, omega: std::f64::consts::FRAC_PI_2 / 3.2, duration: 3.2 };
    let segments = vec![
        leg.clone(),
        corner.clone(),
        leg.clone(),
        corner.clone(),
        leg.clone(),
        corner.clone(),
        leg,
        corner,
    ];
    Scenario {
        landmarks,
        robot: RobotPlan { initial: RobotState::new(2.5, 2.5, 0.0), segments },
        sensor: SensorSpec::default(),
        noise: NoiseParams {
            alphas: [0.005, 1e-3, 1e-3, 0.005],
            obs_cov: Matrix3::identity() * 0.04 * 0.04,
        },
        dt: 0.1,
        duration: 44.8,
        seed,
    }
}

/// Noise-free world state at time t: the robot pose integrated from the
/// commanded schedule and every landmark's true position.
pub fn step_world(scenario: &Scenario, t: f64) -> Result<(RobotState, Vec<(u64, Point3)>)> {
    if t < 0.0 || t > scenario.duration + 1e-9 {
        return Err(Error::OutOfSchedule { t, duration: scenario.duration });
    }
    let mut pose = scenario.robot.initial;
    let steps = (t / scenario.dt).round() as usize;
    for k in 0..steps {
        let (v, omega) = scenario.control_at(k as f64 * scenario.dt)?;
        pose = robot_propagate(&pose, &ControlInput { v, omega, dt: scenario.dt });
    }
    let positions = landmark_positions(scenario, t);
    Ok((pose, positions))
}

/// True landmark positions at time t.
pub fn landmark_positions(scenario: &Scenario, t: f64) -> Vec<(u64, Point3)> {
    scenario
        .landmarks
        .iter()
        .map(|lm| (lm.id, forward_kinematics(&lm.config, lm.schedule.q_at(t, scenario.dt))))
        .collect()
}

/// Depth-sensor scan: every landmark inside the range/bearing cone yields a
/// sensor-frame measurement with additive Gaussian noise.
pub fn sense(
    pose: &RobotState,
    positions: &[(u64, Point3)],
    spec: &SensorSpec,
    obs_cov: &Matrix3<f64>,
    rng: &mut SplitMix64,
) -> Vec<(u64, Vector3<f64>)> {
    let chol = obs_cov.cholesky().map(|c| c.l());
    positions
        .iter()
        .filter(|(_, m)| visible(pose, m, spec))
        .map(|(id, m)| {
            let mut z = predict_observation(pose, m);
            if let Some(l) = &chol {
                let w = Vector3::new(rng.normal(), rng.normal(), rng.normal());
                z += l * w;
            }
            (*id, z)
        })
        .collect()
}

/// Visibility is a pure function of the true geometry.
pub fn visible(pose: &RobotState, m: &Point3, spec: &SensorSpec) -> bool {
    let d = Vector3::new(m.x - pose.x, m.y - pose.y, m.z);
    if d.norm() > spec.max_range {
        return false;
    }
    let bearing = crate::slam::normalize_angle((m.y - pose.y).atan2(m.x - pose.x) - pose.theta);
    bearing.abs() <= spec.fov_half_angle
}

/// Sample executed controls: commanded plus control noise `N(0, S_t)`.
/// The truth integrates the executed values; filters receive the commanded.
pub fn noisy_controls(
    v_hat: f64,
    omega_hat: f64,
    dt: f64,
    noise: &NoiseParams,
    rng: &mut SplitMix64,
) -> ControlInput {
    let u_hat = ControlInput { v: v_hat, omega: omega_hat, dt };
    let s = crate::slam::control_noise_cov(&u_hat, noise);
    ControlInput {
        v: v_hat + rng.normal_scaled(s[(0, 0)].sqrt()),
        omega: omega_hat + rng.normal_scaled(s[(1, 1)].sqrt()),
        dt,
    }
}

/// Everything the evaluation needs to know about what actually happened.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthLog {
    /// Pose after each step (executed controls).
    pub poses: Vec<RobotState>,
    /// True landmark positions after each step.
    pub landmarks: Vec<Vec<(u64, Point3)>>,
    /// Ids visible after each step.
    pub visibility: Vec<Vec<u64>>,
}

/// A full simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub truth: GroundTruthLog,
    /// Commanded controls per step (what the filters see).
    pub commanded: Vec<ControlInput>,
    /// Sensor scans per step.
    pub observations: Vec<Vec<(u64, Vector3<f64>)>>,
}

/// Roll out a scenario deterministically.
pub fn simulate(scenario: &Scenario) -> Result<SimRun> {
    scenario.validate()?;
    let base = SplitMix64::new(scenario.seed);
    let mut rng_controls = base.fork(1);
    let mut rng_obs = base.fork(2);

    let steps = scenario.steps();
    let mut pose = scenario.robot.initial;
    let mut truth = GroundTruthLog {
        poses: Vec::with_capacity(steps),
        landmarks: Vec::with_capacity(steps),
        visibility: Vec::with_capacity(steps),
    };
    let mut commanded = Vec::with_capacity(steps);
    let mut observations = Vec::with_capacity(steps);

    for k in 0..steps {
        let t = k as f64 * scenario.dt;
        let (v_hat, omega_hat) = scenario.control_at(t)?;
        let executed = noisy_controls(v_hat, omega_hat, scenario.dt, &scenario.noise, &mut rng_controls);
        pose = robot_propagate(&pose, &executed);
        let t1 = t + scenario.dt;
        let positions = landmark_positions(scenario, t1);
        let scan = sense(&pose, &positions, &scenario.sensor, &scenario.noise.obs_cov, &mut rng_obs);

        truth.poses.push(pose);
        truth.visibility.push(scan.iter().map(|(id, _)| *id).collect());
        truth.landmarks.push(positions);
        commanded.push(ControlInput { v: v_hat, omega: omega_hat, dt: scenario.dt });
        observations.push(scan);
    }
    Ok(SimRun { truth, commanded, observations })
}
