//! Oriented circles on the unit two-sphere.
//!
//! A circle is stored as its center axis `n` and spherical radius `r`, and
//! is traversed counterclockwise as seen from `n`. Its geodesic curvature is
//! `cot r`, positive when the circle turns toward the left normal `p × t`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, SymmetricEigen};

use crate::quat::UnitQuaternion;
use crate::{Error, Result, Vec3};

const SPHERE_TOLERANCE: f64 = 1e-12;
const ON_CIRCLE_TOLERANCE: f64 = 1e-9;
/// Crossing values below this are reported as near-tangent.
pub const TANGENCY_TOLERANCE: f64 = 1e-10;

/// A point of the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint(Vec3);

impl SpherePoint {
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !((n - 1.0).abs() <= SPHERE_TOLERANCE) {
            return Err(Error::NotOnSphere(n));
        }
        Ok(Self(v))
    }

    pub fn new_normalize(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotOnSphere(n));
        }
        Ok(Self(v / n))
    }

    pub fn vec(&self) -> Vec3 {
        self.0
    }

    pub fn antipode(&self) -> Self {
        Self(-self.0)
    }
}

/// A point together with an oriented unit tangent direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactElement {
    point: SpherePoint,
    tangent: Vec3,
}

impl ContactElement {
    pub fn new(point: SpherePoint, tangent: Vec3) -> Result<Self> {
        let p = point.vec();
        if (tangent.norm() - 1.0).abs() > SPHERE_TOLERANCE || p.dot(&tangent).abs() > SPHERE_TOLERANCE {
            return Err(Error::InvalidInput("contact tangent must be a unit vector orthogonal to the point".into()));
        }
        Ok(Self { point, tangent })
    }

    /// Normalizes `p` and replaces `t` by the normalized tangential part.
    pub fn from_vectors(p: Vec3, t: Vec3) -> Result<Self> {
        let point = SpherePoint::new_normalize(p)?;
        let p = point.vec();
        let t = t - p * p.dot(&t);
        let n = t.norm();
        if !(n > 1e-14) {
            return Err(Error::InvalidInput("tangent direction is parallel to the point".into()));
        }
        Ok(Self { point, tangent: t / n })
    }

    pub fn point(&self) -> SpherePoint {
        self.point
    }

    pub fn p(&self) -> Vec3 {
        self.point.vec()
    }

    pub fn tangent(&self) -> Vec3 {
        self.tangent
    }

    /// The left unit normal `p × t`.
    pub fn normal(&self) -> Vec3 {
        self.p().cross(&self.tangent)
    }

    pub fn reversed(&self) -> Self {
        Self { point: self.point, tangent: -self.tangent }
    }

    /// The tangent rotated by `angle` toward the left normal.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let t = self.tangent * c + self.normal() * s;
        Self { point: self.point, tangent: t.normalize() }
    }

    /// Moves the point a distance `s` along the normal great circle, with the
    /// tangent parallel-transported (it stays fixed in `R^3`).
    pub fn shifted_along_normal(&self, s: f64) -> Self {
        let (sn, cs) = s.sin_cos();
        let p = (self.p() * cs + self.normal() * sn).normalize();
        Self { point: SpherePoint(p), tangent: self.tangent }
    }
}

/// Deterministic orthonormal tangent frame `(E1, E2)` at `p`, with
/// `E1 = normalize(e_ref × p)` and `E2 = p × E1`. `e_ref` is the third axis,
/// or the first axis within `1e-6` of the poles.
pub fn tangent_frame(p: &Vec3) -> (Vec3, Vec3) {
    let reference = if p.z.abs() > 1.0 - 1e-6 { Vec3::x() } else { Vec3::z() };
    let e1 = reference.cross(p).normalize();
    let e2 = p.cross(&e1);
    (e1, e2)
}

/// Rodrigues rotation of `v` about the unit `axis` by `angle`.
pub fn rotate_about(axis: &Vec3, angle: f64, v: &Vec3) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + axis.cross(v) * s + axis * (axis.dot(v) * (1.0 - c))
}

/// Point at arclength `s` along the great arc from `a` toward `b`, together
/// with the unit velocity there. `a` and `b` must not be antipodal.
pub fn great_arc(a: &Vec3, b: &Vec3) -> Option<(f64, Vec3)> {
    let length = a.cross(b).norm().atan2(a.dot(b));
    let dir = b - a * a.dot(b);
    let n = dir.norm();
    if n < 1e-15 {
        return None;
    }
    Some((length, dir / n))
}

/// An oriented circle: counterclockwise about `axis` at spherical radius
/// `radius` in `(0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereCircle {
    axis: SpherePoint,
    radius: f64,
}

impl SphereCircle {
    pub fn new(axis: SpherePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < PI) {
            return Err(Error::InvalidRadius(radius));
        }
        Ok(Self { axis, radius })
    }

    /// The circle about `axis` with geodesic curvature `kappa = cot r`.
    pub fn with_curvature(axis: SpherePoint, kappa: f64) -> Self {
        Self { axis, radius: 1.0f64.atan2(kappa) }
    }

    /// The oriented circle through `e.p` with unit tangent `e.t` and geodesic
    /// curvature `kappa`: axis `(kappa p + p × t)/sqrt(1 + kappa^2)`.
    pub fn from_contact(e: &ContactElement, kappa: f64) -> Self {
        let scale = 1.0 / (1.0 + kappa * kappa).sqrt();
        let axis = (e.p() * kappa + e.normal()) * scale;
        Self { axis: SpherePoint(axis.normalize()), radius: 1.0f64.atan2(kappa) }
    }

    pub fn axis(&self) -> Vec3 {
        self.axis.vec()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn curvature(&self) -> f64 {
        self.radius.cos() / self.radius.sin()
    }

    pub fn circumference(&self) -> f64 {
        TAU * self.radius.sin()
    }

    pub fn reversed(&self) -> Self {
        Self { axis: self.axis.antipode(), radius: PI - self.radius }
    }

    /// Signed level `x·n - cos r`, zero on the circle.
    pub fn level(&self, x: &Vec3) -> f64 {
        x.dot(&self.axis()) - self.radius.cos()
    }

    fn start_frame(&self) -> (Vec3, Vec3) {
        let n = self.axis();
        let reference = if n.x.abs() > 1.0 - 1e-6 { Vec3::y() } else { Vec3::x() };
        let e1 = (reference - n * n.dot(&reference)).normalize();
        (e1, n.cross(&e1))
    }

    /// Constant-speed arclength parameterization; period `2π sin r`.
    pub fn point(&self, s: f64) -> SpherePoint {
        let (e1, e2) = self.start_frame();
        let (sr, cr) = self.radius.sin_cos();
        let (sa, ca) = (s / sr).sin_cos();
        let x = self.axis() * cr + (e1 * ca + e2 * sa) * sr;
        SpherePoint(x.normalize())
    }

    /// Point at arclength `s` from `start`, which must lie on the circle.
    pub fn point_from(&self, start: &Vec3, s: f64) -> Vec3 {
        rotate_about(&self.axis(), s / self.radius.sin(), start)
    }

    /// Unit tangent at a point of the circle, following the orientation.
    pub fn tangent_at(&self, p: &Vec3) -> Result<Vec3> {
        let off = self.level(p).abs();
        if !(off <= ON_CIRCLE_TOLERANCE) {
            return Err(Error::OffCircle(off));
        }
        Ok(self.axis().cross(p).normalize())
    }

    /// Contact element of the circle at arclength `s`.
    pub fn contact(&self, s: f64) -> ContactElement {
        let p = self.point(s);
        let t = self.axis().cross(&p.vec()).normalize();
        ContactElement { point: p, tangent: t }
    }

    /// Largest angular distance between two circles' axes and radii, as a
    /// comparison metric for oriented circles.
    pub fn distance(&self, other: &SphereCircle) -> f64 {
        let axis = self.axis().cross(&other.axis()).norm().atan2(self.axis().dot(&other.axis()));
        axis.max((self.radius - other.radius).abs())
    }

    /// Same point set, ignoring orientation.
    pub fn unoriented_distance(&self, other: &SphereCircle) -> f64 {
        self.distance(other).min(self.distance(&other.reversed()))
    }
}

/// Least-squares circle through ordered samples, with the maximum level
/// residual `max |x·n - cos r|`. The orientation follows the sample order.
pub fn fit_circle(samples: &[SpherePoint]) -> Result<(SphereCircle, f64)> {
    if samples.len() < 4 {
        return Err(Error::DegenerateSamples("at least four samples are needed"));
    }
    let count = samples.len() as f64;
    let centroid = samples.iter().map(SpherePoint::vec).sum::<Vec3>() / count;
    let covariance = samples.iter().fold(Matrix3::zeros(), |acc, p| {
        let d = p.vec() - centroid;
        acc + d * d.transpose()
    }) / count;
    let eigen = SymmetricEigen::new(covariance);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
    let spread = eigen.eigenvalues[order[2]];
    if !(spread > 1e-24) || eigen.eigenvalues[order[1]] <= 1e-12 * spread {
        return Err(Error::DegenerateSamples("samples do not span a plane"));
    }
    let mut n: Vec3 = eigen.eigenvectors.column(order[0]).into_owned().normalize();
    let turning: f64 = samples
        .iter()
        .zip(samples.iter().cycle().skip(1))
        .map(|(a, b)| (a.vec() - centroid).cross(&(b.vec() - centroid)).dot(&n))
        .sum();
    if turning < 0.0 {
        n = -n;
    }
    let level = centroid.dot(&n);
    if !(level.abs() < 1.0) {
        return Err(Error::DegenerateSamples("fitted plane misses the sphere"));
    }
    let circle = SphereCircle::new(SpherePoint(n), level.acos())?;
    let residual = samples.iter().map(|p| (p.vec().dot(&n) - level).abs()).fold(0.0, f64::max);
    Ok((circle, residual))
}

/// The Hopf image of the great circle `C(q, kappa)`, measured numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfProjection {
    /// Least-squares circle through the sampled image.
    pub circle: SphereCircle,
    /// Speed of `t ↦ hopf(C(q, kappa)(t))` at `t = 0`.
    pub speed: f64,
    pub residual: f64,
}

/// Samples `hopf(great_circle_point(q, kappa, t))` over one period of the
/// image and fits a circle. The image is the circle through `hopf(q)` with
/// tangent `hopf_tangent(q)` and curvature `kappa`, traced at speed
/// `2/sqrt(1 + kappa^2)`.
pub fn hopf_project_circle(q: UnitQuaternion, kappa: f64) -> Result<HopfProjection> {
    const SAMPLES: usize = 64;
    let points: Vec<SpherePoint> = (0..SAMPLES)
        .map(|j| {
            let t = PI * j as f64 / SAMPLES as f64;
            SpherePoint::new_normalize(q.great_circle_point(kappa, t).hopf())
        })
        .collect::<Result<_>>()?;
    let (circle, residual) = fit_circle(&points)?;
    let h = 1e-5;
    let ahead = q.great_circle_point(kappa, h).hopf();
    let behind = q.great_circle_point(kappa, -h).hopf();
    let speed = (ahead - behind).norm() / (2.0 * h);
    Ok(HopfProjection { circle, speed, residual })
}

/// The projected circle `c(q, kappa)` in closed form.
pub fn hopf_circle(q: UnitQuaternion, kappa: f64) -> SphereCircle {
    let e = ContactElement { point: SpherePoint(q.hopf().normalize()), tangent: q.hopf_tangent().normalize() };
    SphereCircle::from_contact(&e, kappa)
}

/// Result of counting circle/polyline crossings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Crossings {
    pub count: usize,
    /// Set when a crossing or vertex lies within the tangency tolerance, in
    /// which case the count is not reliable.
    pub tangency: bool,
}

/// Number of transversal crossings of the polyline (great-arc interpolation
/// between vertices) with the circle.
pub fn count_intersections(circle: &SphereCircle, polyline: &[SpherePoint]) -> Crossings {
    let n = circle.axis();
    let c0 = circle.radius.cos();
    let mut out = Crossings::default();
    for p in polyline {
        if circle.level(&p.vec()).abs() < TANGENCY_TOLERANCE {
            out.tangency = true;
        }
    }
    for pair in polyline.windows(2) {
        let (a, b) = (pair[0].vec(), pair[1].vec());
        let Some((length, dir)) = great_arc(&a, &b) else {
            if a.dot(&b) < 0.0 {
                // Antipodal vertices: the arc is undefined.
                out.tangency = true;
            }
            continue;
        };
        // Along the arc the level is A cos s + B sin s - c0.
        let (ca, cb) = (a.dot(&n), dir.dot(&n));
        let amplitude = ca.hypot(cb);
        let phase = cb.atan2(ca);
        if amplitude <= c0.abs() - TANGENCY_TOLERANCE {
            continue;
        }
        if (amplitude - c0.abs()).abs() < TANGENCY_TOLERANCE {
            let s = (phase + if c0 < 0.0 { PI } else { 0.0 }).rem_euclid(TAU);
            if s <= length {
                out.tangency = true;
            }
            continue;
        }
        let spread = (c0 / amplitude).clamp(-1.0, 1.0).acos();
        for root in [phase - spread, phase + spread] {
            let s = root.rem_euclid(TAU);
            if s < length {
                out.count += 1;
            }
        }
    }
    out
}

/// Intersection of two distinct circles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleIntersection {
    Disjoint,
    Tangent(SpherePoint),
    Crossing(SpherePoint, SpherePoint),
}

impl CircleIntersection {
    pub fn count(&self) -> usize {
        match self {
            Self::Disjoint => 0,
            Self::Tangent(_) => 1,
            Self::Crossing(..) => 2,
        }
    }
}

/// Solves `x·n1 = cos r1`, `x·n2 = cos r2`, `|x| = 1`.
pub fn circle_circle_intersect(c1: &SphereCircle, c2: &SphereCircle) -> Result<CircleIntersection> {
    const TOL: f64 = 1e-12;
    let (n1, n2) = (c1.axis(), c2.axis());
    let (h1, h2) = (c1.radius.cos(), c2.radius.cos());
    let cross = n1.cross(&n2);
    let sin2 = cross.norm_squared();
    if sin2 < 1e-24 {
        let d = n1.dot(&n2).signum();
        if (h1 - d * h2).abs() < TOL {
            return Err(Error::IdenticalCircles);
        }
        return Ok(CircleIntersection::Disjoint);
    }
    let d = n1.dot(&n2);
    let alpha = (h1 - h2 * d) / sin2;
    let beta = (h2 - h1 * d) / sin2;
    let base = n1 * alpha + n2 * beta;
    let gamma2 = (1.0 - base.norm_squared()) / sin2;
    if gamma2 < -TOL {
        Ok(CircleIntersection::Disjoint)
    } else if gamma2 <= TOL {
        Ok(CircleIntersection::Tangent(SpherePoint::new_normalize(base)?))
    } else {
        let g = gamma2.sqrt();
        Ok(CircleIntersection::Crossing(
            SpherePoint::new_normalize(base - cross * g)?,
            SpherePoint::new_normalize(base + cross * g)?,
        ))
    }
}
