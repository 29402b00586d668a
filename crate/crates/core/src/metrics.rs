//! Trajectory error metrics: absolute trajectory error and relative pose
//! error over SE(2) poses. Both trajectories share the world frame and the
//! known starting pose, so no alignment step is applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slam::{normalize_angle, RobotState};

/// Localization error summary for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ate_rmse: f64,
    pub rpe_rmse: f64,
    /// Per-step position error, meters.
    pub ate_series: Vec<f64>,
    /// Per-interval relative translation error, meters.
    pub rpe_series: Vec<f64>,
}

/// RMSE of planar position error over the trajectory.
pub fn compute_ate(est: &[RobotState], truth: &[RobotState]) -> Result<(f64, Vec<f64>)> {
    if est.len() != truth.len() {
        return Err(Error::LengthMismatch { left: est.len(), right: truth.len() });
    }
    if est.is_empty() {
        return Err(Error::LengthMismatch { left: 0, right: 0 });
    }
    let series: Vec<f64> = est
        .iter()
        .zip(truth)
        .map(|(e, t)| ((e.x - t.x).powi(2) + (e.y - t.y).powi(2)).sqrt())
        .collect();
    let rmse = (series.iter().map(|e| e * e).sum::<f64>() / series.len() as f64).sqrt();
    Ok((rmse, series))
}

/// `a^-1 compose b` in SE(2): the motion from pose `a` to pose `b`.
fn relative_motion(a: &RobotState, b: &RobotState) -> (f64, f64, f64) {
    let (s, c) = a.theta.sin_cos();
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    (c * dx + s * dy, -s * dx + c * dy, normalize_angle(b.theta - a.theta))
}

/// RMSE of the translational magnitude of the relative-motion discrepancy
/// over intervals of `delta` steps.
pub fn compute_rpe(est: &[RobotState], truth: &[RobotState], delta: usize) -> Result<(f64, Vec<f64>)> {
    if est.len() != truth.len() {
        return Err(Error::LengthMismatch { left: est.len(), right: truth.len() });
    }
    if est.len() <= delta || delta == 0 {
        return Err(Error::LengthMismatch { left: est.len(), right: delta });
    }
    let mut series = Vec::with_capacity(est.len() - delta);
    for i in 0..est.len() - delta {
        let (gx, gy, _) = relative_motion(&truth[i], &truth[i + delta]);
        let (ex, ey, _) = relative_motion(&est[i], &est[i + delta]);
        // Translation of (truth rel)^-1 compose (est rel); the leading
        // rotation preserves the norm, so the difference suffices.
        series.push(((ex - gx).powi(2) + (ey - gy).powi(2)).sqrt());
    }
    let rmse = (series.iter().map(|e| e * e).sum::<f64>() / series.len() as f64).sqrt();
    Ok((rmse, series))
}

/// Compute both metrics with the default interval of one step.
pub fn compute_metrics(est: &[RobotState], truth: &[RobotState]) -> Result<Metrics> {
    let (ate_rmse, ate_series) = compute_ate(est, truth)?;
    let (rpe_rmse, rpe_series) = compute_rpe(est, truth, 1)?;
    Ok(Metrics { ate_rmse, rpe_rmse, ate_series, rpe_series })
}
