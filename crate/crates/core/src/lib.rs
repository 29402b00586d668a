//! Online spatiotemporal articulation models for dynamic SLAM.
//!
//! The crate estimates per-landmark articulation structure (static /
//! prismatic / revolute) from passive 3D observations, attaches a finite-order
//! temporal model to the motion variable, selects among the candidate models
//! with a multiple-model Bayesian filter, and feeds the committed models into
//! an articulated EKF-SLAM loop. A deterministic simulator and an experiment
//! harness reproduce the selection, Monte Carlo, and localization studies.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod metrics;
pub mod rng;
pub mod selection;
pub mod sim;
pub mod slam;
pub mod temporal;

pub use error::{Error, Result};
pub use geometry::{
    estimate_config, fit_circle_2d, fit_line_3d, fit_plane, forward_kinematics,
    inverse_kinematics, landmark_jacobian, unwrap_angle, ArticulationConfig, ModelKind, Plane,
    Point3, PrismaticConfig, RevoluteConfig, StaticConfig,
};
