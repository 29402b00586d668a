//! Articulation structure: per-model configuration parameters, least-squares
//! fitting from buffered 3D observations, and forward/inverse kinematics with
//! the landmark Jacobian used by the filters.
//!
//! Three articulation models are supported. Each reduces a landmark's motion
//! to a one-dimensional subspace parameterized by a scalar motion variable q:
//!
//! * static    — rest point `P0`, q perturbs along `[1, 1, 1]`
//! * prismatic — line `origin + q * axis`
//! * revolute  — circle of radius `r` in a fitted plane, q is the angle

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Landmark position in meters.
pub type Point3 = Vector3<f64>;

/// Unit-vector tolerance used by the plane/axis invariants.
pub const UNIT_TOL: f64 = 1e-9;

/// Singular-value ratio below which a fit is declared degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-8;

/// Default minimum buffer length before a configuration is estimated.
pub const DEFAULT_MIN_SAMPLES: usize = 7;

/// The articulation model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Static,
    Prismatic,
    Revolute,
}

impl ModelKind {
    /// All models, in the canonical order used for belief vectors and CSVs.
    pub const ALL: [ModelKind; 3] = [ModelKind::Static, ModelKind::Prismatic, ModelKind::Revolute];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Static => "static",
            ModelKind::Prismatic => "prismatic",
            ModelKind::Revolute => "revolute",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A plane given by an orthonormal in-plane basis and a point on the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub v1: Vector3<f64>,
    pub v2: Vector3<f64>,
    pub p0: Point3,
}

impl Plane {
    /// Unit normal, `v1 × v2`.
    pub fn normal(&self) -> Vector3<f64> {
        self.v1.cross(&self.v2)
    }

    /// Coordinates of `p` in the (v1, v2) basis.
    pub fn project(&self, p: &Point3) -> Vector2<f64> {
        let d = p - self.p0;
        Vector2::new(d.dot(&self.v1), d.dot(&self.v2))
    }

    /// Signed distance of `p` from the plane.
    pub fn distance(&self, p: &Point3) -> f64 {
        (p - self.p0).dot(&self.normal())
    }

    fn check(&self) -> bool {
        (self.v1.norm() - 1.0).abs() < UNIT_TOL
            && (self.v2.norm() - 1.0).abs() < UNIT_TOL
            && self.v1.dot(&self.v2).abs() < UNIT_TOL
    }
}

/// Revolute joint: circle of `radius` around `center2d` in `plane` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevoluteConfig {
    pub plane: Plane,
    pub center2d: Vector2<f64>,
    pub radius: f64,
}

impl RevoluteConfig {
    /// Circle center expressed in world coordinates.
    pub fn center3d(&self) -> Point3 {
        self.plane.p0 + self.center2d.x * self.plane.v1 + self.center2d.y * self.plane.v2
    }

    /// Rotation axis through the center, i.e. the plane normal.
    pub fn axis(&self) -> Vector3<f64> {
        self.plane.normal()
    }
}

/// Prismatic joint: line through `origin` along unit `axis`; q = 0 at origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrismaticConfig {
    pub axis: Vector3<f64>,
    pub origin: Point3,
}

/// Static joint: rest point with a scalar perturbation along `[1, 1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticConfig {
    pub rest: Point3,
}

/// Fitted structure parameters for one landmark, tagged by model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ArticulationConfig {
    Static(StaticConfig),
    Prismatic(PrismaticConfig),
    Revolute(RevoluteConfig),
}

impl ArticulationConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ArticulationConfig::Static(_) => ModelKind::Static,
            ArticulationConfig::Prismatic(_) => ModelKind::Prismatic,
            ArticulationConfig::Revolute(_) => ModelKind::Revolute,
        }
    }

    /// Squared norm of the landmark Jacobian; constant in q for every model.
    pub fn jacobian_norm_sq(&self) -> f64 {
        match self {
            ArticulationConfig::Static(_) => 3.0,
            ArticulationConfig::Prismatic(_) => 1.0,
            ArticulationConfig::Revolute(r) => r.radius * r.radius,
        }
    }
}

/// Eigen-decomposition of the scatter matrix of centered points, sorted by
/// decreasing eigenvalue. Returns (eigenvalues, eigenvectors, centroid).
fn principal_axes(points: &[Point3]) -> ([f64; 3], [Vector3<f64>; 3], Point3) {
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vector3<f64>>() / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vals = [
        eig.eigenvalues[order[0]].max(0.0),
        eig.eigenvalues[order[1]].max(0.0),
        eig.eigenvalues[order[2]].max(0.0),
    ];
    let vecs = [
        canonical_sign(eig.eigenvectors.column(order[0]).into_owned()),
        canonical_sign(eig.eigenvectors.column(order[1]).into_owned()),
        canonical_sign(eig.eigenvectors.column(order[2]).into_owned()),
    ];
    (vals, vecs, centroid)
}

/// Flip a direction vector so its largest-magnitude component is positive.
/// Fixes the sign ambiguity of eigenvectors deterministically.
fn canonical_sign(v: Vector3<f64>) -> Vector3<f64> {
    let mut imax = 0;
    for i in 1..3 {
        if v[i].abs() > v[imax].abs() {
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        -v
    } else {
        v
    }
}

/// Least-squares plane through `points`, minimizing orthogonal distances.
///
/// `p0` is the centroid; `(v1, v2)` are the two principal directions of the
/// centered scatter, so they span the best-fit plane.
pub fn fit_plane(points: &[Point3]) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::InsufficientSamples { got: points.len(), need: 3 });
    }
    let (vals, vecs, centroid) = principal_axes(points);
    // Collinear points leave only one significant singular value.
    let s0 = vals[0].sqrt();
    let s1 = vals[1].sqrt();
    if s0 <= 0.0 || s1 / s0 < DEGENERACY_RATIO {
        return Err(Error::DegenerateGeometry("points are collinear; plane underdetermined"));
    }
    let v1 = vecs[0].normalize();
    // Re-orthogonalize against v1 and fix handedness via the normal.
    let normal = vecs[2] - vecs[2].dot(&v1) * v1;
    let normal = canonical_sign(normal.normalize());
    let v2 = normal.cross(&v1);
    Ok(Plane { v1, v2, p0: centroid })
}

/// Algebraic least-squares circle through 2D points (Kasa fit).
///
/// Expanding `(u - a)^2 + (v - b)^2 = r^2` gives the linear system
/// `2 a u + 2 b v + c = u^2 + v^2` with `c = r^2 - a^2 - b^2`, solved in the
/// normal equations. Linear in (a, b, c), hence convex.
pub fn fit_circle_2d(points2d: &[Vector2<f64>]) -> Result<(Vector2<f64>, f64)> {
    if points2d.len() < 3 {
        return Err(Error::InsufficientSamples { got: points2d.len(), need: 3 });
    }
    // Collinearity leaves the circle underdetermined.
    let n = points2d.len() as f64;
    let centroid: Vector2<f64> = points2d.iter().sum::<Vector2<f64>>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for p in points2d {
        let d = p - centroid;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let l0 = (tr / 2.0 + disc).max(0.0);
    let l1 = (tr / 2.0 - disc).max(0.0);
    if l0 <= 0.0 || (l1 / l0).sqrt() < DEGENERACY_RATIO {
        return Err(Error::DegenerateGeometry("points are collinear; circle underdetermined"));
    }

    // Normal equations for (a, b, c). Solve around the centroid for
    // conditioning, then shift back.
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for p in points2d {
        let d = p - centroid;
        let row = Vector3::new(2.0 * d.x, 2.0 * d.y, 1.0);
        let y = d.x * d.x + d.y * d.y;
        m += row * row.transpose();
        rhs += row * y;
    }
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::DegenerateGeometry("circle normal equations singular"))?;
    let center_local = Vector2::new(sol.x, sol.y);
    let r_sq = sol.z + center_local.norm_squared();
    if r_sq <= 0.0 {
        return Err(Error::DegenerateGeometry("circle radius collapsed"));
    }
    Ok((centroid + center_local, r_sq.sqrt()))
}

/// Least-squares 3D line through `points`: origin at the centroid, axis along
/// the principal direction. The axis sign makes the first-to-last
/// displacement project nonnegatively, so q increases along the track.
pub fn fit_line_3d(points: &[Point3]) -> Result<PrismaticConfig> {
    if points.len() < 2 {
        return Err(Error::InsufficientSamples { got: points.len(), need: 2 });
    }
    let (vals, vecs, centroid) = principal_axes(points);
    let spread = vals[0].sqrt();
    let scale = points.iter().map(|p| (p - centroid).norm()).fold(0.0, f64::max);
    if spread <= DEGENERACY_RATIO * (1.0 + scale) && scale < 1e-9 {
        return Err(Error::DegenerateGeometry("all points coincide; line underdetermined"));
    }
    let mut axis = vecs[0].normalize();
    let sweep = points[points.len() - 1] - points[0];
    if sweep.dot(&axis) < 0.0 {
        axis = -axis;
    }
    Ok(PrismaticConfig { axis, origin: centroid })
}

/// Fit the configuration parameters for `model` from a buffer of positions.
/// Requires at least [`DEFAULT_MIN_SAMPLES`] points; see
/// [`estimate_config_min`] for a configurable floor.
pub fn estimate_config(model: ModelKind, buffer: &[Point3]) -> Result<ArticulationConfig> {
    estimate_config_min(model, buffer, DEFAULT_MIN_SAMPLES)
}

/// As [`estimate_config`] with an explicit minimum sample count.
pub fn estimate_config_min(
    model: ModelKind,
    buffer: &[Point3],
    min_samples: usize,
) -> Result<ArticulationConfig> {
    if buffer.len() < min_samples {
        return Err(Error::InsufficientSamples { got: buffer.len(), need: min_samples });
    }
    match model {
        ModelKind::Static => {
            let rest = buffer.iter().sum::<Vector3<f64>>() / buffer.len() as f64;
            Ok(ArticulationConfig::Static(StaticConfig { rest }))
        }
        ModelKind::Prismatic => Ok(ArticulationConfig::Prismatic(fit_line_3d(buffer)?)),
        ModelKind::Revolute => {
            let plane = fit_plane(buffer)?;
            let projected: Vec<Vector2<f64>> = buffer.iter().map(|p| plane.project(p)).collect();
            let (center2d, radius) = fit_circle_2d(&projected)?;
            Ok(ArticulationConfig::Revolute(RevoluteConfig { plane, center2d, radius }))
        }
    }
}

/// Position of the landmark at motion parameter `q`.
pub fn forward_kinematics(config: &ArticulationConfig, q: f64) -> Point3 {
    match config {
        ArticulationConfig::Static(s) => s.rest + Vector3::new(q, q, q),
        ArticulationConfig::Prismatic(p) => p.origin + q * p.axis,
        ArticulationConfig::Revolute(r) => {
            let u = r.center2d.x + r.radius * q.cos();
            let v = r.center2d.y + r.radius * q.sin();
            r.plane.p0 + u * r.plane.v1 + v * r.plane.v2
        }
    }
}

/// Motion parameter of the closest subspace point to `point`.
///
/// Revolute angles are returned in the principal branch (-pi, pi]; use
/// [`unwrap_angle`] to keep a time series continuous.
pub fn inverse_kinematics(config: &ArticulationConfig, point: &Point3) -> Result<f64> {
    match config {
        ArticulationConfig::Static(s) => {
            let d = point - s.rest;
            Ok((d.x + d.y + d.z) / 3.0)
        }
        ArticulationConfig::Prismatic(p) => Ok((point - p.origin).dot(&p.axis)),
        ArticulationConfig::Revolute(r) => {
            let uv = r.plane.project(point) - r.center2d;
            if uv.norm() < 1e-12 {
                return Err(Error::SingularProjection);
            }
            Ok(uv.y.atan2(uv.x))
        }
    }
}

/// Shift `angle` by a multiple of 2 pi to the branch nearest `reference`.
pub fn unwrap_angle(reference: f64, angle: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let k = ((reference - angle) / tau).round();
    angle + k * tau
}

/// Derivative of [`forward_kinematics`] with respect to q.
pub fn landmark_jacobian(config: &ArticulationConfig, q: f64) -> Vector3<f64> {
    match config {
        ArticulationConfig::Static(_) => Vector3::new(1.0, 1.0, 1.0),
        ArticulationConfig::Prismatic(p) => p.axis,
        ArticulationConfig::Revolute(r) => {
            r.radius * (-q.sin() * r.plane.v1 + q.cos() * r.plane.v2)
        }
    }
}

/// Mean squared per-axis residual of the buffer against the fitted subspace.
/// Feeds the initial motion-variable variance of the temporal filter.
pub fn residual_variance_per_axis(config: &ArticulationConfig, points: &[Point3]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for p in points {
        let q = match inverse_kinematics(config, p) {
            Ok(q) => q,
            Err(_) => 0.0,
        };
        sum += (p - forward_kinematics(config, q)).norm_squared();
    }
    sum / (3.0 * points.len() as f64)
}

/// Validate the structural invariants of a config (unit vectors, positive
/// radius, finite fields). Used when loading scenarios from disk.
pub fn validate_config(config: &ArticulationConfig) -> Result<()> {
    let finite = |v: &Vector3<f64>| v.iter().all(|x| x.is_finite());
    match config {
        ArticulationConfig::Static(s) => {
            if !finite(&s.rest) {
                return Err(Error::InvalidScenario("static rest point not finite".into()));
            }
        }
        ArticulationConfig::Prismatic(p) => {
            if !finite(&p.origin) || !finite(&p.axis) {
                return Err(Error::InvalidScenario("prismatic fields not finite".into()));
            }
            if (p.axis.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidScenario("prismatic axis not unit length".into()));
            }
        }
        ArticulationConfig::Revolute(r) => {
            if !finite(&r.plane.p0) || !r.radius.is_finite() || !r.center2d.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidScenario("revolute fields not finite".into()));
            }
            if r.radius <= 0.0 {
                return Err(Error::InvalidScenario("revolute radius must be positive".into()));
            }
            if !r.plane.check() {
                return Err(Error::InvalidScenario("revolute plane basis not orthonormal".into()));
            }
        }
    }
    Ok(())
}
