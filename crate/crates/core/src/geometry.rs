//! Geometry of the confocal family
//!
//! ```text
//! C_λ :  x² / (a − λ) + y² / (b − λ) = 1,     a > b > 0
//! ```
//!
//! Members are ellipses for `λ < b`, hyperbolae for `b < λ < a`, and
//! degenerate at `λ = b` (the focal segment) and `λ = a` (the minor axis).
//! Every straight line is tangent to exactly one member of the family; the
//! parameter of that member is the caustic of the line and is conserved by
//! reflection off any confocal ellipse.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Residual tolerance for "point lies on a conic" (dimensionless form).
pub const ON_CONIC_TOL: f64 = 1e-9;

/// Relative tangency threshold: a hit is tangential when the scaled
/// discriminant is below `TANGENCY_TOL * a`.
pub const TANGENCY_TOL: f64 = 1e-9;

/// Smallest ray parameter accepted as a forward intersection.
pub const T_MIN: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid confocal family: need a > b > 0, got a = {a}, b = {b}")]
    InvalidFamily { a: f64, b: f64 },
    #[error("λ = {lambda} exceeds a = {a}: the conic is empty")]
    EmptyConic { lambda: f64, a: f64 },
    #[error("λ = {0} is a degenerate member of the family")]
    DegenerateConic(f64),
    #[error("point ({x}, {y}) is not on C_{lambda} (residual {residual:e})")]
    PointNotOnConic {
        x: f64,
        y: f64,
        lambda: f64,
        residual: f64,
    },
}

/// The pair `(a, b)` fixing the confocal family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily")]
pub struct ConfocalFamily {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawFamily {
    a: f64,
    b: f64,
}

impl TryFrom<RawFamily> for ConfocalFamily {
    type Error = GeometryError;

    fn try_from(raw: RawFamily) -> Result<Self, Self::Error> {
        ConfocalFamily::new(raw.a, raw.b)
    }
}

impl ConfocalFamily {
    pub fn new(a: f64, b: f64) -> Result<Self, GeometryError> {
        if a.is_finite() && b.is_finite() && a > b && b > 0.0 {
            Ok(Self { a, b })
        } else {
            Err(GeometryError::InvalidFamily { a, b })
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Semi-axes `(√(a−λ), √(b−λ))` of the ellipse `C_λ`, `λ < b`.
    pub fn semi_axes(&self, lambda: f64) -> (f64, f64) {
        ((self.a - lambda).sqrt(), (self.b - lambda).sqrt())
    }

    /// `x²/(a−λ) + y²/(b−λ) − 1`. Negative strictly inside an ellipse.
    pub fn residual(&self, lambda: f64, p: Point) -> f64 {
        p.x * p.x / (self.a - lambda) + p.y * p.y / (self.b - lambda) - 1.0
    }

    /// Outward (non-normalised) gradient of the conic equation at `p`.
    pub fn gradient(&self, lambda: f64, p: Point) -> (f64, f64) {
        (p.x / (self.a - lambda), p.y / (self.b - lambda))
    }

    /// Radially rescales `p` onto the ellipse `C_λ`.
    pub fn project(&self, lambda: f64, p: Point) -> Point {
        let s = self.residual(lambda, p) + 1.0;
        if s > 0.0 {
            p * (1.0 / s.sqrt())
        } else {
            p
        }
    }

    /// Two-parameter "elliptic coordinates" of `p`: the roots `λ₁ ≤ b ≤ λ₂ ≤ a`
    /// of the confocal conics through `p`.
    pub fn confocal_coordinates(&self, p: Point) -> (f64, f64) {
        // (a−λ)(b−λ) − x²(b−λ) − y²(a−λ) = 0
        // λ² − (a + b − x² − y²) λ + (ab − x² b − y² a) = 0
        let s = self.a + self.b - p.x * p.x - p.y * p.y;
        let c = self.a * self.b - p.x * p.x * self.b - p.y * p.y * self.a;
        let disc = (s * s - 4.0 * c).max(0.0).sqrt();
        let hi = 0.5 * (s + disc);
        let lo = if hi != 0.0 { c / hi } else { 0.5 * (s - disc) };
        (lo.min(hi), lo.max(hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConicKind {
    Ellipse,
    Hyperbola,
    DegenerateFocalSegment,
    DegenerateMinorAxis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicParam {
    pub lambda: f64,
    pub kind: ConicKind,
}

/// Point of the Euclidean plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn advance(self, v: UnitVector, t: f64) -> Point {
        Point::new(self.x + t * v.x, self.y + t * v.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Direction of motion; always of unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitVector {
    x: f64,
    y: f64,
}

impl UnitVector {
    /// Normalises `(x, y)`; `None` for the zero or a non-finite vector.
    pub fn new(x: f64, y: f64) -> Option<Self> {
        let n = x.hypot(y);
        if n.is_finite() && n > 0.0 {
            Some(Self { x: x / n, y: y / n })
        } else {
            None
        }
    }

    pub fn from_angle(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self { x: c, y: s }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(&self, x: f64, y: f64) -> f64 {
        self.x * x + self.y * y
    }
}

impl Neg for UnitVector {
    type Output = UnitVector;
    fn neg(self) -> UnitVector {
        UnitVector {
            x: -self.x,
            y: -self.y,
        }
    }
}

impl<'de> Deserialize<'de> for UnitVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let p = Point::deserialize(d)?;
        UnitVector::new(p.x, p.y).ok_or_else(|| serde::de::Error::custom("zero direction vector"))
    }
}

pub fn classify_conic(family: &ConfocalFamily, lambda: f64) -> Result<ConicParam, GeometryError> {
    let tol = 1e-12 * family.a;
    let kind = if (lambda - family.b).abs() <= tol {
        ConicKind::DegenerateFocalSegment
    } else if (lambda - family.a).abs() <= tol {
        ConicKind::DegenerateMinorAxis
    } else if lambda < family.b {
        ConicKind::Ellipse
    } else if lambda < family.a {
        ConicKind::Hyperbola
    } else {
        return Err(GeometryError::EmptyConic {
            lambda,
            a: family.a,
        });
    };
    Ok(ConicParam { lambda, kind })
}

/// Parameter of the confocal conic tangent to the line through `p` with
/// direction `v`.
pub fn caustic_parameter(family: &ConfocalFamily, p: Point, v: UnitVector) -> f64 {
    let cross = p.x * v.y - p.y * v.x;
    family.a * v.y * v.y + family.b * v.x * v.x - cross * cross
}

/// Coefficients of `qa t² + 2 qb t + qc = 0`, the substitution of the ray
/// `p + t v` into the equation of `C_λ`.
#[derive(Debug, Clone, Copy)]
pub struct RayQuadratic {
    pub qa: f64,
    pub qb: f64,
    pub qc: f64,
    scale: f64,
}

impl RayQuadratic {
    pub fn new(family: &ConfocalFamily, lambda: f64, p: Point, v: UnitVector) -> Self {
        let big_a = family.a - lambda;
        let big_b = family.b - lambda;
        Self {
            qa: v.x * v.x / big_a + v.y * v.y / big_b,
            qb: p.x * v.x / big_a + p.y * v.y / big_b,
            qc: p.x * p.x / big_a + p.y * p.y / big_b - 1.0,
            scale: (big_a * big_b).abs(),
        }
    }

    /// Quarter discriminant scaled by `|(a−λ)(b−λ)|`, in units of length².
    pub fn discriminant(&self) -> f64 {
        (self.qb * self.qb - self.qa * self.qc) * self.scale
    }

    /// Real roots in ascending order, computed without cancellation.
    pub fn roots(&self) -> Option<(f64, f64)> {
        let d = self.qb * self.qb - self.qa * self.qc;
        if d < 0.0 {
            return None;
        }
        let s = d.sqrt();
        let q = -(self.qb + s.copysign(self.qb));
        if q == 0.0 {
            return Some((0.0, 0.0));
        }
        let (r1, r2) = (q / self.qa, self.qc / q);
        Some((r1.min(r2), r1.max(r2)))
    }

    /// Parameter of the vertex of the parabola, i.e. the tangency point for a
    /// double root.
    pub fn vertex(&self) -> f64 {
        -self.qb / self.qa
    }

    /// For a ray starting on the conic (`qc ≈ 0`): the other root.
    pub fn far_root(&self) -> f64 {
        -2.0 * self.qb / self.qa
    }
}

/// Discriminant of the ray/conic quadratic: positive for two intersections,
/// zero for tangency and negative for a miss.
pub fn tangency_oracle(
    family: &ConfocalFamily,
    p: Point,
    v: UnitVector,
    lambda: f64,
) -> Result<f64, GeometryError> {
    match classify_conic(family, lambda) {
        Ok(ConicParam {
            kind: ConicKind::DegenerateFocalSegment | ConicKind::DegenerateMinorAxis,
            ..
        }) => Err(GeometryError::DegenerateConic(lambda)),
        _ => Ok(RayQuadratic::new(family, lambda, p, v).discriminant()),
    }
}

/// Mirrors `v` across the tangent line of the ellipse `C_λ` at `p`.
pub fn reflect(
    family: &ConfocalFamily,
    lambda_boundary: f64,
    p: Point,
    v: UnitVector,
) -> Result<UnitVector, GeometryError> {
    let residual = family.residual(lambda_boundary, p);
    if residual.abs() > ON_CONIC_TOL || !residual.is_finite() {
        return Err(GeometryError::PointNotOnConic {
            x: p.x,
            y: p.y,
            lambda: lambda_boundary,
            residual,
        });
    }
    let (gx, gy) = family.gradient(lambda_boundary, p);
    let gn = gx.hypot(gy);
    let (nx, ny) = (gx / gn, gy / gn);
    let vn = v.dot(nx, ny);
    // renormalise: the mirror is an isometry up to rounding
    Ok(UnitVector::new(v.x - 2.0 * vn * nx, v.y - 2.0 * vn * ny).expect("reflection of a unit vector"))
}

/// First forward intersection (`t > T_MIN`) of the ray `p + t v` with the
/// ellipse `C_λ`.
pub fn next_intersection(
    family: &ConfocalFamily,
    p: Point,
    v: UnitVector,
    lambda_target: f64,
) -> Option<(Point, f64)> {
    let (t1, t2) = RayQuadratic::new(family, lambda_target, p, v).roots()?;
    let t = if t1 > T_MIN {
        t1
    } else if t2 > T_MIN {
        t2
    } else {
        return None;
    };
    Some((p.advance(v, t), t))
}
