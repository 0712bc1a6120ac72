//! Stateless geometric primitives: circumradius, Menger curvature,
//! tangent-point radius, and intrinsic (arclength) distance.
//!
//! Everything here is a pure function of its arguments; no shared state.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative area threshold below which three points are treated as collinear.
///
/// A triple counts as collinear when `2*Area < COLLINEAR_REL_TOL * |b-a| * |c-a|`,
/// which is scale-free and avoids catastrophic cancellation deciding between a
/// finite and an infinite radius.
pub const COLLINEAR_REL_TOL: f64 = 1e-14;

/// Tolerance on `|t| - 1` for unit-tangent arguments.
pub const UNIT_TANGENT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("points must be pairwise distinct")]
    RepeatedPoints,
    #[error("tangent must be a unit vector (|t| = {norm})")]
    NonUnitTangent { norm: f64 },
    #[error("arclength parameter {value} outside [0, 1)")]
    ArcOutOfRange { value: f64 },
    #[error("coordinate is not finite")]
    NonFinite,
}

/// A position (or free vector) in 3-space. Coordinates are dimensionless;
/// curves are normalized to unit length before energies are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: Point3) -> Point3 {
        Point3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(*self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: Point3) -> f64 {
        (*self - other).norm()
    }

    /// Unit vector in the same direction. Caller guarantees a nonzero norm.
    pub fn normalized(&self) -> Point3 {
        *self / self.norm()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// An extended non-negative radius: finite positive, or +inf for degenerate
/// (collinear / on-tangent) configurations. Never zero, never negative.
///
/// The energies only ever consume the reciprocal, which maps +inf to exactly 0.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Radius(f64);

impl Radius {
    pub const INFINITE: Radius = Radius(f64::INFINITY);

    /// Wraps a precomputed radius value. Debug-checked against the invariant.
    pub fn new(value: f64) -> Radius {
        debug_assert!(value > 0.0, "radius must be positive or infinite, got {value}");
        Radius(value)
    }

    /// Builds a radius from its reciprocal curvature value (`kappa >= 0`);
    /// zero curvature maps to the infinite radius.
    pub fn from_reciprocal(kappa: f64) -> Radius {
        debug_assert!(kappa >= 0.0 && kappa.is_finite());
        if kappa == 0.0 {
            Radius::INFINITE
        } else {
            Radius(1.0 / kappa)
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    /// `1/R`, with the infinite radius mapping to exactly 0.
    pub fn reciprocal(&self) -> f64 {
        if self.0.is_finite() {
            1.0 / self.0
        } else {
            0.0
        }
    }

    pub fn min(self, other: Radius) -> Radius {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }
}

/// Circumradius of the circle through three pairwise-distinct points:
/// `R = |a-b| |b-c| |c-a| / (4 Area)`. Collinear triples give the infinite
/// radius (zero curvature).
pub fn circumradius(a: Point3, b: Point3, c: Point3) -> Result<Radius, GeomError> {
    let ab = b - a;
    let ac = c - a;
    let bc = c - b;
    let lab = ab.norm();
    let lac = ac.norm();
    let lbc = bc.norm();
    if lab == 0.0 || lac == 0.0 || lbc == 0.0 {
        return Err(GeomError::RepeatedPoints);
    }
    // twice the triangle area; collinear when Area < tol * |b-a| * |c-a|
    let area2 = ab.cross(ac).norm();
    if 0.5 * area2 < COLLINEAR_REL_TOL * lab * lac {
        return Ok(Radius::INFINITE);
    }
    Ok(Radius::new(lab * lbc * lac / (2.0 * area2)))
}

/// Menger curvature `1/R(a,b,c)`; zero for collinear triples.
pub fn menger_curvature(a: Point3, b: Point3, c: Point3) -> Result<f64, GeomError> {
    Ok(circumradius(a, b, c)?.reciprocal())
}

/// Radius of the unique circle through `x` and `y` that is tangent to the
/// direction `t` at `x`: `1/r_tp = 2 dist(y, x + span{t}) / |y-x|^2`.
/// Returns the infinite radius when `y` lies on the tangent line.
pub fn tangent_point_radius(x: Point3, t: Point3, y: Point3) -> Result<Radius, GeomError> {
    let tnorm = t.norm();
    if (tnorm - 1.0).abs() > UNIT_TANGENT_TOL {
        return Err(GeomError::NonUnitTangent { norm: tnorm });
    }
    let d = y - x;
    let dn = d.norm();
    if dn == 0.0 {
        return Err(GeomError::RepeatedPoints);
    }
    // |d x t| is the distance from y to the tangent line for unit t
    let h = d.cross(t).norm();
    if h < COLLINEAR_REL_TOL * dn {
        return Ok(Radius::INFINITE);
    }
    Ok(Radius::new(dn * dn / (2.0 * h)))
}

/// Reciprocal tangent-point radius `2 dist(y, line(x,t)) / |y-x|^2`, computed
/// directly so degenerate (on-tangent) pairs give exactly 0. The tangent is
/// assumed unit. Coincident pairs also give 0: they carry no circle
/// information and must not contribute to energy sums.
pub(crate) fn inv_tangent_point_radius(x: Point3, t: Point3, y: Point3) -> f64 {
    let d = y - x;
    let d2 = d.norm_sq();
    if d2 == 0.0 {
        return 0.0;
    }
    2.0 * d.cross(t).norm() / d2
}

/// Intrinsic distance `min(|s-t|, 1-|s-t|)` between two arclength positions
/// on a unit-length loop.
pub fn intrinsic_distance(s: f64, t: f64) -> Result<f64, GeomError> {
    for v in [s, t] {
        if !(0.0..1.0).contains(&v) {
            return Err(GeomError::ArcOutOfRange { value: v });
        }
    }
    let d = (s - t).abs();
    Ok(d.min(1.0 - d))
}

/// Unsigned angle between two unit vectors via `atan2(|u x v|, u . v)`,
/// accurate for both near-parallel and near-antiparallel pairs.
pub fn angle_between(u: Point3, v: Point3) -> f64 {
    u.cross(v).norm().atan2(u.dot(v))
}
