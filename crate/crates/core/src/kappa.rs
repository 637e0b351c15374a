//! Circular path geometries from an odd curvature field.
//!
//! A field `kappa` on the unit sphere `S²₊` (the plus half of the bivector
//! coordinates, rescaled to unit length) selects for every point `x̂` the
//! oriented 2-plane with minus half `f_kappa(x̂)` and plus half `x̂/sqrt(2)`.
//! When `kappa` is odd and `|∇kappa| < 1 + kappa²` these planes fibre the
//! three-sphere, and the Hopf images of the fibres form a circular path
//! geometry: exactly one circle `γ(x̂)` is tangent to each contact element.
//! The circle `γ(x̂)` has center axis `x̂` and geodesic curvature `kappa(x̂)`.
//!
//! Gradients are taken in the unit-sphere metric. Between the radius
//! `1/sqrt(2)` spheres the graph map `f` moves along a meridian at angle
//! `atan(kappa)`, so `|df(w)| = |dkappa(√2 w)| / (√2 (1 + kappa²))` and
//! `‖df‖ = |∇kappa| / (1 + kappa²)`: the admissibility ratio below is
//! exactly the operator norm bounded by the great-circle fibration
//! criterion.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use crate::circle::{hopf_circle, tangent_frame, ContactElement, SphereCircle};
use crate::grid::IcoGrid;
use crate::quat::{direction_quaternion, Bivector, Quaternion, RotationMatrix, UnitQuaternion};
use crate::{Error, Result, Vec3};

/// Number of cubic monomials, ordered
/// `x³, y³, z³, x²y, x²z, y²x, y²z, z²x, z²y, xyz`.
pub const CUBIC_TERMS: usize = 10;

type BaseFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;

/// Curvature field on the unit sphere. The exposed value is always the odd
/// part `(kappa0(x) - kappa0(-x))/2` of the base evaluator.
#[derive(Clone)]
pub enum KappaField {
    /// `c + a·x + Σ c_m x^m` over the cubic monomials, with analytic gradient.
    Polynomial { constant: f64, linear: [f64; 3], cubic: [f64; CUBIC_TERMS] },
    /// Arbitrary base evaluator; gradient by central differences.
    Custom { base: BaseFn, h_grad: f64 },
}

impl fmt::Debug for KappaField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polynomial { constant, linear, cubic } => f
                .debug_struct("Polynomial")
                .field("constant", constant)
                .field("linear", linear)
                .field("cubic", cubic)
                .finish(),
            Self::Custom { h_grad, .. } => f.debug_struct("Custom").field("h_grad", h_grad).finish(),
        }
    }
}

fn cubic_monomials(x: &Vec3) -> [f64; CUBIC_TERMS] {
    let (a, b, c) = (x.x, x.y, x.z);
    [a * a * a, b * b * b, c * c * c, a * a * b, a * a * c, b * b * a, b * b * c, c * c * a, c * c * b, a * b * c]
}

fn cubic_gradients(x: &Vec3) -> [Vec3; CUBIC_TERMS] {
    let (a, b, c) = (x.x, x.y, x.z);
    [
        Vec3::new(3.0 * a * a, 0.0, 0.0),
        Vec3::new(0.0, 3.0 * b * b, 0.0),
        Vec3::new(0.0, 0.0, 3.0 * c * c),
        Vec3::new(2.0 * a * b, a * a, 0.0),
        Vec3::new(2.0 * a * c, 0.0, a * a),
        Vec3::new(b * b, 2.0 * a * b, 0.0),
        Vec3::new(0.0, 2.0 * b * c, b * b),
        Vec3::new(c * c, 0.0, 2.0 * a * c),
        Vec3::new(0.0, c * c, 2.0 * b * c),
        Vec3::new(b * c, a * c, a * b),
    ]
}

impl KappaField {
    /// The great-circle geometry, `kappa ≡ 0`.
    pub fn zero() -> Self {
        Self::polynomial(0.0, [0.0; 3], [0.0; CUBIC_TERMS])
    }

    /// `kappa(x) = a·x`.
    pub fn linear(a: [f64; 3]) -> Self {
        Self::polynomial(0.0, a, [0.0; CUBIC_TERMS])
    }

    /// `kappa(x) = a·x + Σ c_m x^m`; missing cubic coefficients are zero.
    pub fn linear_cubic(a: [f64; 3], cubic: &[f64]) -> Result<Self> {
        if cubic.len() > CUBIC_TERMS {
            return Err(Error::InvalidInput(format!("at most {CUBIC_TERMS} cubic coefficients, got {}", cubic.len())));
        }
        let mut c = [0.0; CUBIC_TERMS];
        c[..cubic.len()].copy_from_slice(cubic);
        Ok(Self::polynomial(0.0, a, c))
    }

    pub fn polynomial(constant: f64, linear: [f64; 3], cubic: [f64; CUBIC_TERMS]) -> Self {
        Self::Polynomial { constant, linear, cubic }
    }

    pub fn custom(base: impl Fn(&Vec3) -> f64 + Send + Sync + 'static, h_grad: f64) -> Self {
        Self::Custom { base: Arc::new(base), h_grad }
    }

    fn base(&self, x: &Vec3) -> f64 {
        match self {
            Self::Polynomial { constant, linear, cubic } => {
                let lin = linear[0] * x.x + linear[1] * x.y + linear[2] * x.z;
                let cub: f64 = cubic.iter().zip(cubic_monomials(x)).map(|(c, m)| c * m).sum();
                constant + lin + cub
            }
            Self::Custom { base, .. } => base(x),
        }
    }

    /// The odd part of the base evaluator at a unit vector.
    pub fn eval(&self, x: &Vec3) -> f64 {
        0.5 * (self.base(x) - self.base(&-x))
    }

    /// Tangential gradient of `kappa` in the unit-sphere metric.
    pub fn grad(&self, x: &Vec3) -> Vec3 {
        let g = match self {
            Self::Polynomial { linear, cubic, .. } => {
                let ambient = |y: &Vec3| {
                    let lin = Vec3::new(linear[0], linear[1], linear[2]);
                    cubic.iter().zip(cubic_gradients(y)).fold(lin, |acc, (c, g)| acc + g * *c)
                };
                (ambient(x) + ambient(&-x)) * 0.5
            }
            Self::Custom { h_grad, .. } => {
                let (e1, e2) = tangent_frame(x);
                let h = *h_grad;
                [e1, e2].iter().fold(Vec3::zeros(), |acc, e| {
                    let ahead = (x * h.cos() + e * h.sin()).normalize();
                    let behind = (x * h.cos() - e * h.sin()).normalize();
                    acc + e * ((self.eval(&ahead) - self.eval(&behind)) / (2.0 * h))
                })
            }
        };
        g - x * x.dot(&g)
    }
}

/// Admissibility report over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub ok: bool,
    /// `1 - max |∇kappa| / (1 + kappa²)` over the grid.
    pub margin: f64,
    pub worst_point: Vec3,
}

/// Evaluates `|∇kappa| / (1 + kappa²)` over the vertices of an icosahedral
/// grid of the given level.
pub fn admissibility(field: &KappaField, grid_level: u32) -> Admissibility {
    let grid = IcoGrid::new(grid_level);
    let (worst_point, ratio) = grid
        .vertices()
        .iter()
        .map(|x| {
            let k = field.eval(x);
            (*x, field.grad(x).norm() / (1.0 + k * k))
        })
        .fold((Vec3::z(), f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let margin = 1.0 - ratio;
    Admissibility { ok: margin > 0.0, margin, worst_point }
}

/// `f_kappa` for a curvature value: `(kappa, 0, 1)/sqrt(2 + 2 kappa²)`.
pub fn f_kappa_value(kappa: f64) -> Vec3 {
    Vec3::new(kappa, 0.0, 1.0) / (2.0 + 2.0 * kappa * kappa).sqrt()
}

/// The graph map `S²₊ → S²₋`, evaluated at a unit vector.
pub fn f_kappa(field: &KappaField, x: &Vec3) -> Vec3 {
    f_kappa_value(field.eval(x))
}

/// Normalized plus half of the plane of `C(q, kappa)`, i.e. of
/// `q ∧ q u(kappa)`.
pub fn big_x(q: UnitQuaternion, kappa: f64) -> Vec3 {
    let a = q.quaternion();
    let b = a * direction_quaternion(kappa);
    Bivector::wedge(&a.to_vec4(), &b.to_vec4()).plus().normalize()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSolveSpec {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FiberSolveSpec {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 200 }
    }
}

/// The fibre through a point of the three-sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSolution {
    /// The fixed point `x̂ = big_x(q, kappa(x̂))`.
    pub axis: Vec3,
    pub kappa: f64,
    pub iterations: usize,
    /// Size of the last fixed-point step.
    pub residual: f64,
}

const ROUNDING_FLOOR: f64 = 16.0 * f64::EPSILON;

/// Solves `x̂ = big_x(q, kappa(x̂))` by fixed-point iteration from
/// `big_x(q, 0)`. Admissibility makes the map a contraction with ratio at
/// most `1 - margin`.
pub fn fiber_through(field: &KappaField, q: UnitQuaternion, spec: &FiberSolveSpec) -> Result<FiberSolution> {
    fiber_through_from(field, q, big_x(q, 0.0), spec)
}

/// [`fiber_through`] from an explicit starting guess.
pub fn fiber_through_from(
    field: &KappaField,
    q: UnitQuaternion,
    start: Vec3,
    spec: &FiberSolveSpec,
) -> Result<FiberSolution> {
    if !(spec.tolerance > 0.0) {
        return Err(Error::InvalidInput("fiber solve tolerance must be positive".into()));
    }
    let mut x = start;
    let mut step = f64::INFINITY;
    for iteration in 1..=spec.max_iterations {
        let next = big_x(q, field.eval(&x));
        step = (next - x).norm();
        x = next;
        if !step.is_finite() {
            break;
        }
        // Steps at the rounding floor count as converged even below a
        // tolerance that is too tight to reach.
        if step <= spec.tolerance.max(ROUNDING_FLOOR) {
            return Ok(FiberSolution { axis: x, kappa: field.eval(&x), iterations: iteration, residual: step });
        }
    }
    Err(Error::FiberSolveFailed { iterations: spec.max_iterations, step })
}

/// A unit quaternion whose Hopf frame is `(p, t, p × t)`.
pub fn lift(e: &ContactElement) -> UnitQuaternion {
    let r = RotationMatrix::from_columns(&e.p(), &e.tangent(), &e.normal())
        .expect("contact elements give orthonormal frames");
    r.to_quaternion()
}

/// The unique path of the geometry tangent to a contact element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentCircle {
    pub axis: Vec3,
    pub kappa: f64,
    pub circle: SphereCircle,
    pub iterations: usize,
}

/// Lifts `e` to `q` with `hopf(q) = p`, `hopf_tangent(q) = t`, solves for the
/// fibre through `q` and returns the circle through `e` with the fibre's
/// curvature.
pub fn tangent_circle(field: &KappaField, e: &ContactElement, spec: &FiberSolveSpec) -> Result<TangentCircle> {
    let q = lift(e);
    Ok(tangent_circle_with(e, fiber_through(field, q, spec)?))
}

/// [`tangent_circle`] warm-started from a nearby solution's axis.
pub fn tangent_circle_from(
    field: &KappaField,
    e: &ContactElement,
    start: Vec3,
    spec: &FiberSolveSpec,
) -> Result<TangentCircle> {
    let q = lift(e);
    Ok(tangent_circle_with(e, fiber_through_from(field, q, start, spec)?))
}

fn tangent_circle_with(e: &ContactElement, fiber: FiberSolution) -> TangentCircle {
    TangentCircle {
        axis: fiber.axis,
        kappa: fiber.kappa,
        circle: SphereCircle::from_contact(e, fiber.kappa),
        iterations: fiber.iterations,
    }
}

/// Direction `cos θ E1 + sin θ E2` in the deterministic tangent frame at `p`.
pub fn frame_direction(p: &Vec3, theta: f64) -> Vec3 {
    let (e1, e2) = tangent_frame(p);
    let (s, c) = theta.sin_cos();
    e1 * c + e2 * s
}

/// The circle parameter `x̂` of the path tangent to `(p, t(θ))`.
pub fn pi2_map(field: &KappaField, p: &Vec3, theta: f64, spec: &FiberSolveSpec) -> Result<Vec3> {
    let e = ContactElement::from_vectors(*p, frame_direction(p, theta))?;
    Ok(tangent_circle(field, &e, spec)?.axis)
}

/// The oriented circle `γ(x̂)`: the Hopf image of the plane with minus half
/// `f_kappa(x̂)` and plus half `x̂/sqrt(2)`.
pub fn realize_circle(field: &KappaField, x: &Vec3) -> Result<SphereCircle> {
    let kappa = field.eval(x);
    let plane = Bivector::from_halves(&f_kappa_value(kappa), &(x * FRAC_1_SQRT_2));
    let (a, _) = plane.to_plane()?;
    let q = UnitQuaternion::new_normalize(Quaternion::from_vec4(&a))?;
    Ok(hopf_circle(q, kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z).normalize()
    }

    #[test]
    fn odd_symmetrization() {
        let constant = KappaField::polynomial(3.0, [0.0; 3], [0.0; CUBIC_TERMS]);
        assert_eq!(constant.eval(&unit(0.2, 0.4, 0.9)), 0.0);

        let k = KappaField::linear([0.0, 0.0, 0.7]);
        assert_eq!(k.eval(&Vec3::z()), 0.7);
        assert_eq!(k.grad(&Vec3::z()).norm(), 0.0);

        let k = KappaField::linear([0.0, 0.0, 0.5]);
        assert_eq!(k.eval(&Vec3::x()), 0.0);
        assert!((k.grad(&Vec3::x()).norm() - 0.5).abs() < 1e-15);

        let k = KappaField::linear_cubic([0.1, -0.2, 0.3], &[0.05, 0.0, -0.1, 0.2]).unwrap();
        for x in [unit(1.0, 2.0, 3.0), unit(-0.3, 0.1, 0.2)] {
            assert_eq!(k.eval(&-x), -k.eval(&x));
            assert!(k.grad(&x).dot(&x).abs() < 1e-15);
        }
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let k =
            KappaField::linear_cubic([0.1, -0.2, 0.3], &[0.05, 0.1, -0.1, 0.2, 0.0, 0.3, -0.2, 0.1, 0.0, 0.4]).unwrap();
        let f = k.clone();
        let numeric = KappaField::custom(move |x| f.eval(x), 1e-5);
        for x in [unit(1.0, 2.0, 3.0), unit(-0.3, 0.1, 0.2), Vec3::z()] {
            assert!((k.grad(&x) - numeric.grad(&x)).norm() < 1e-9);
        }
    }

    #[test]
    fn admissibility_examples() {
        let report = admissibility(&KappaField::linear([0.0, 0.0, 0.5]), 4);
        assert!(report.ok);
        assert!((report.margin - 0.5).abs() < 1e-3);
        assert!(report.worst_point.z.abs() < 0.05);

        let report = admissibility(&KappaField::linear([0.0, 0.0, 2.0]), 4);
        assert!(!report.ok);
        assert!((report.margin + 1.0).abs() < 1e-2);

        let report = admissibility(&KappaField::zero(), 2);
        assert_eq!(report.margin, 1.0);
    }

    #[test]
    fn graph_map_examples() {
        assert!((f_kappa_value(0.0) - Vec3::new(0.0, 0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((f_kappa_value(1.0) - Vec3::new(0.5, 0.0, 0.5)).norm() < 1e-15);
        let k = KappaField::linear([0.4, 0.1, -0.3]);
        let x = unit(0.3, -0.5, 0.8);
        let (a, b) = (f_kappa(&k, &x), f_kappa(&k, &-x));
        assert_eq!(a.x, -b.x);
        assert_eq!(a.z, b.z);
        assert!((a.norm() - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn graph_map_norm_is_admissibility_ratio() {
        // ‖df‖ between the radius 1/sqrt(2) spheres, by finite differences.
        let k = KappaField::linear_cubic([0.3, 0.1, -0.4], &[0.0, 0.2, 0.0, 0.1]).unwrap();
        let h = 1e-6;
        for x in [unit(0.2, 0.9, -0.1), unit(-0.7, 0.3, 0.5)] {
            let y = x * FRAC_1_SQRT_2;
            let (e1, e2) = tangent_frame(&x);
            let image = |e: &Vec3, s: f64| {
                let moved = (y + e * (s * FRAC_1_SQRT_2)).normalize();
                f_kappa(&k, &moved)
            };
            let columns = [e1, e2].map(|e| (image(&e, h) - image(&e, -h)) / (2.0 * h * FRAC_1_SQRT_2));
            let jac = nalgebra::Matrix3x2::from_columns(&columns);
            let norm = jac.singular_values().max();
            let kv = k.eval(&x);
            let ratio = k.grad(&x).norm() / (1.0 + kv * kv);
            assert!((norm - ratio).abs() < 1e-8, "{norm} vs {ratio}");
        }
    }

    #[test]
    fn big_x_examples() {
        let one = UnitQuaternion::identity();
        assert!((big_x(one, 0.0) - Vec3::z()).norm() < 1e-15);
        let q = UnitQuaternion::new_normalize(Quaternion::new(0.2, -0.4, 0.7, 0.1)).unwrap();
        assert!((big_x(-q, 0.6) - big_x(q, 0.6)).norm() < 1e-15);
        let qi = UnitQuaternion::new(q.quaternion() * Quaternion::i()).unwrap();
        assert!((big_x(qi, -0.6) + big_x(q, 0.6)).norm() < 1e-14);
    }

    #[test]
    fn fiber_examples() {
        let spec = FiberSolveSpec::default();
        let q = UnitQuaternion::new_normalize(Quaternion::new(0.2, -0.4, 0.7, 0.1)).unwrap();
        let zero = fiber_through(&KappaField::zero(), q, &spec).unwrap();
        assert_eq!(zero.iterations, 1);
        assert_eq!(zero.axis, big_x(q, 0.0));

        let k = KappaField::linear([0.0, 0.0, 0.5]);
        let sol = fiber_through(&k, UnitQuaternion::identity(), &spec).unwrap();
        let residual = (big_x(UnitQuaternion::identity(), k.eval(&sol.axis)) - sol.axis).norm();
        assert!(residual < 1e-12);
        // q lies on the plane (f_kappa(x̂), x̂/sqrt(2)).
        let sol = fiber_through(&k, q, &spec).unwrap();
        let plane = Bivector::wedge(&q.to_vec4(), &(q.quaternion() * direction_quaternion(sol.kappa)).to_vec4());
        let want = Bivector::from_halves(&f_kappa(&k, &sol.axis), &(sol.axis * FRAC_1_SQRT_2));
        assert!(plane.0.iter().zip(want.0).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn inadmissible_fixed_point_fails() {
        // Near the south pole the iteration map has slope close to -2 and
        // falls into a two-cycle.
        let k = KappaField::linear([0.0, 0.0, 2.0]);
        let e = ContactElement::from_vectors(Vec3::new(0.05f64.sin(), 0.0, -0.05f64.cos()), Vec3::y()).unwrap();
        let err = fiber_through(&k, lift(&e), &FiberSolveSpec::default()).unwrap_err();
        assert!(matches!(err, Error::FiberSolveFailed { .. }));
        assert!(err.to_string().starts_with("fibration solve failed"));
    }

    #[test]
    fn tangent_circle_examples() {
        let spec = FiberSolveSpec::default();
        let e = ContactElement::from_vectors(Vec3::new(0.3, -0.8, 0.4), Vec3::new(1.0, 0.2, 0.0)).unwrap();
        let zero = tangent_circle(&KappaField::zero(), &e, &spec).unwrap();
        assert!((zero.circle.axis() - e.normal()).norm() < 1e-12);
        assert!((zero.circle.radius() - FRAC_PI_2).abs() < 1e-12);
        assert!((zero.axis - e.normal()).norm() < 1e-12);

        let k = KappaField::linear([0.1, 0.2, 0.5]);
        let a = tangent_circle(&k, &e, &spec).unwrap();
        let b = tangent_circle(&k, &e.reversed(), &spec).unwrap();
        assert!((a.axis + b.axis).norm() < 1e-11);
        assert!(a.circle.unoriented_distance(&b.circle) < 1e-11);
        assert!(a.circle.level(&e.p()).abs() < 1e-12);
        assert!((a.circle.tangent_at(&e.p()).unwrap() - e.tangent()).norm() < 1e-12);
        // The path parameter is the circle's own center.
        assert!((a.axis - a.circle.axis()).norm() < 1e-12);
    }

    #[test]
    fn lift_sign_is_irrelevant() {
        let k = KappaField::linear([0.1, 0.2, 0.5]);
        let spec = FiberSolveSpec::default();
        let e = ContactElement::from_vectors(Vec3::new(0.3, -0.8, 0.4), Vec3::new(1.0, 0.2, 0.0)).unwrap();
        let q = lift(&e);
        let a = fiber_through(&k, q, &spec).unwrap();
        let b = fiber_through(&k, -q, &spec).unwrap();
        assert_eq!(a.axis, b.axis);
    }

    #[test]
    fn pi2_periodicity_and_antipodes() {
        let k = KappaField::linear([0.2, 0.0, 0.4]);
        let spec = FiberSolveSpec::default();
        let p = unit(0.4, 0.5, -0.2);
        for theta in [0.0, 0.7, 2.5] {
            let a = pi2_map(&k, &p, theta, &spec).unwrap();
            let b = pi2_map(&k, &p, theta + 2.0 * PI, &spec).unwrap();
            let c = pi2_map(&k, &p, theta + PI, &spec).unwrap();
            assert!((a - b).norm() < 1e-11);
            assert!((a + c).norm() < 1e-11);
        }
    }

    #[test]
    fn round_pi2_traces_a_great_circle() {
        let spec = FiberSolveSpec::default();
        for theta in [0.0, 1.0, 2.0, 4.0] {
            let x = pi2_map(&KappaField::zero(), &Vec3::z(), theta, &spec).unwrap();
            assert!(x.z.abs() < 1e-15);
        }
    }

    #[test]
    fn realize_examples() {
        let c = realize_circle(&KappaField::zero(), &Vec3::z()).unwrap();
        assert!(c.level(&Vec3::x()).abs() < 1e-12);
        assert!((c.tangent_at(&Vec3::x()).unwrap() - Vec3::y()).norm() < 1e-12);

        let k = KappaField::linear([0.2, -0.1, 0.5]);
        let x = unit(0.3, 0.3, 0.9);
        let c = realize_circle(&k, &x).unwrap();
        let d = realize_circle(&k, &-x).unwrap();
        assert!(c.distance(&d.reversed()) < 1e-12);
        assert!((c.axis() - x).norm() < 1e-12);
        assert!((c.curvature() - k.eval(&x)).abs() < 1e-12);

        let back = tangent_circle(&k, &c.contact(0.3), &FiberSolveSpec::default()).unwrap();
        assert!((back.axis - x).norm() < 1e-9);
    }
}
