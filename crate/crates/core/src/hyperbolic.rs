//! Horocycles in the hyperboloid model.
//!
//! `H² = {x : [x, x] = 1, x₃ > 0}` with `[x, y] = -x₁y₁ - x₂y₂ + x₃y₃` and
//! metric `g = -[·, ·]` on tangent vectors. A future light-cone vector `ξ`
//! defines the horocycle `{x : [ξ, x] = 1}`; the one through `x` with inner
//! normal `-v` is `ξ = x + v`. The form `dξ₁ ∧ dξ₂ / ξ₃` on the light cone is
//! invariant, and feeding it (times a weight) through the same cosine
//! transform as on the sphere gives a Finsler metric on `H²`.

use std::f64::consts::TAU;

use nalgebra::Matrix2;

use crate::cosine::PlanarNorm;
use crate::geodesic::{integrate, Chart, GeodesicSpec, GeodesicTrace};
use crate::{Error, Result, Vec2, Vec3};

/// `[x, y] = -x₁y₁ - x₂y₂ + x₃y₃`.
pub fn lorentz(x: &Vec3, y: &Vec3) -> f64 {
    -x.x * y.x - x.y * y.y + x.z * y.z
}

/// Point of the upper sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypPoint(Vec3);

impl HypPoint {
    pub fn new(x: Vec3) -> Result<Self> {
        let q = lorentz(&x, &x);
        if (q - 1.0).abs() > 1e-12 || !(x.z > 0.0) {
            return Err(Error::InvalidInput(format!("not on the hyperboloid: [x,x] = {q}, x3 = {}", x.z)));
        }
        Ok(Self(x))
    }

    /// Rescales a future timelike vector onto the hyperboloid.
    pub fn new_normalize(x: Vec3) -> Result<Self> {
        let q = lorentz(&x, &x);
        if !(q > 0.0) || !(x.z > 0.0) {
            return Err(Error::InvalidInput("not a future timelike vector".into()));
        }
        Ok(Self(x / q.sqrt()))
    }

    pub fn apex() -> Self {
        Self(Vec3::z())
    }

    pub fn vec(&self) -> Vec3 {
        self.0
    }
}

/// Unit tangent vector `v` at `x`: `[x, v] = 0`, `[v, v] = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypTangent {
    x: HypPoint,
    v: Vec3,
}

impl HypTangent {
    pub fn new(x: HypPoint, v: Vec3) -> Result<Self> {
        let (a, b) = (lorentz(&x.0, &v), lorentz(&v, &v));
        if a.abs() > 1e-12 || (b + 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("not a unit tangent: [x,v] = {a}, [v,v] = {b}")));
        }
        Ok(Self { x, v })
    }

    /// Projects `v` to the tangent plane at `x` and normalizes it.
    pub fn new_normalize(x: HypPoint, v: Vec3) -> Result<Self> {
        let t = project(&x.0, &v);
        let n = -lorentz(&t, &t);
        if !(n > 1e-24) {
            return Err(Error::ZeroVelocity);
        }
        Ok(Self { x, v: t / n.sqrt() })
    }

    pub fn point(&self) -> HypPoint {
        self.x
    }

    pub fn vec(&self) -> Vec3 {
        self.v
    }
}

/// Point of the future light cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightconePoint(Vec3);

impl LightconePoint {
    pub fn new(xi: Vec3) -> Result<Self> {
        let q = lorentz(&xi, &xi);
        if q.abs() > 1e-10 * xi.norm_squared().max(1.0) || !(xi.z > 0.0) {
            return Err(Error::InvalidInput(format!("not on the future light cone: [xi,xi] = {q}")));
        }
        Ok(Self(xi))
    }

    /// `r (cos φ, sin φ, 1)`.
    pub fn polar(r: f64, phi: f64) -> Self {
        Self(Vec3::new(r * phi.cos(), r * phi.sin(), r))
    }

    pub fn vec(&self) -> Vec3 {
        self.0
    }
}

/// `G(u × v)` with `G = diag(-1, -1, 1)`: Lorentz-orthogonal to `u` and `v`.
fn lorentz_normal(u: &Vec3, v: &Vec3) -> Vec3 {
    let c = u.cross(v);
    Vec3::new(-c.x, -c.y, c.z)
}

fn project(x: &Vec3, v: &Vec3) -> Vec3 {
    v - x * lorentz(x, v)
}

/// Orthonormal tangent frame at `x` from the first two coordinate axes.
pub fn hyp_frame(x: &HypPoint) -> (Vec3, Vec3) {
    frame_from(&x.0, &Vec3::x())
}

fn frame_from(x: &Vec3, reference: &Vec3) -> (Vec3, Vec3) {
    let a = project(x, reference);
    let a = a / (-lorentz(&a, &a)).sqrt();
    let b = lorentz_normal(&a, x);
    let b = b / (-lorentz(&b, &b)).sqrt();
    (a, b)
}

/// The horocycle through `x` with normal `v`: `ξ = x + v`.
pub fn horocycle_of(t: &HypTangent) -> LightconePoint {
    LightconePoint(t.x.0 + t.v)
}

/// `x(s) = x₀ + s w + (s²/2) ξ` with `[w, x₀] = [w, ξ] = 0`, `[w, w] = -1`.
pub fn horocycle_points(xi: &LightconePoint, x0: &HypPoint, s: &[f64]) -> Result<Vec<Vec3>> {
    let (xi, x0) = (xi.0, x0.0);
    let pairing = lorentz(&xi, &x0);
    if (pairing - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!("base point is not on the horocycle: [xi,x0] = {pairing}")));
    }
    let w = lorentz_normal(&x0, &xi);
    let q = -lorentz(&w, &w);
    if !(q > 1e-24) {
        return Err(Error::DegenerateSamples("degenerate horocycle direction"));
    }
    let w = w / q.sqrt();
    Ok(s.iter().map(|&s| x0 + w * s + xi * (0.5 * s * s)).collect())
}

/// The point of the horocycle closest to `m`.
pub fn horocycle_foot(xi: &LightconePoint, m: &HypPoint) -> HypPoint {
    let alpha = 1.0 / lorentz(&xi.0, &m.0);
    HypPoint(m.0 * alpha + xi.0 * (0.5 * (1.0 - alpha * alpha)))
}

/// Density weight on horocycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HorocycleWeight {
    /// Constant multiple of the invariant form.
    Constant(f64),
    /// The invariant form times `ξ₃`, i.e. `dξ₁ ∧ dξ₂`.
    Xi3,
}

impl HorocycleWeight {
    pub fn unit() -> Self {
        Self::Constant(1.0)
    }

    pub fn eval(&self, xi: &Vec3) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Xi3 => xi.z,
        }
    }
}

/// Fiber density at `x` in the frame `(a, b)`: horocycles `ξ(θ) = x + v(θ)`
/// with `v(θ) = cos θ a + sin θ b`, varied by rotation (`∂θ ξ`) and by
/// moving `x` along the geodesic in direction `v` (`∂ξ = ξ`).
pub fn hyp_fiber_density(weight: &HorocycleWeight, x: &Vec3, a: &Vec3, b: &Vec3, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let xi = x + a * c + b * s;
    let u1 = b * c - a * s;
    let u2 = xi;
    weight.eval(&xi) * (u1.x * u2.y - u1.y * u2.x).abs() / xi.z
}

/// `F` at a point of `H²`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypNorm {
    x: Vec3,
    e1: Vec3,
    e2: Vec3,
    norm: PlanarNorm,
}

impl HypNorm {
    pub fn new(weight: &HorocycleWeight, x: &HypPoint, n_theta: usize) -> Result<Self> {
        Self::in_frame(weight, &x.0, &Vec3::x(), n_theta)
    }

    fn in_frame(weight: &HorocycleWeight, x: &Vec3, reference: &Vec3, n_theta: usize) -> Result<Self> {
        let (e1, e2) = frame_from(x, reference);
        let norm = PlanarNorm::from_density(n_theta, 0.0, |t| Ok(hyp_fiber_density(weight, x, &e1, &e2, t)))?;
        Ok(Self { x: *x, e1, e2, norm })
    }

    pub fn coords(&self, u: &Vec3) -> Vec2 {
        Vec2::new(-lorentz(u, &self.e1), -lorentz(u, &self.e2))
    }

    pub fn eval(&self, u: &Vec3) -> f64 {
        self.norm.value(&self.coords(u))
    }
}

/// `F(x, u) = ∫ |g(u, v(θ))| rho(θ) dθ` for the weighted invariant form.
pub fn finsler_f_h(weight: &HorocycleWeight, x: &HypPoint, u: &Vec3, n_theta: usize) -> Result<f64> {
    Ok(HypNorm::new(weight, x, n_theta)?.eval(u))
}

/// `x cosh t + v sinh t`.
pub fn hyp_geodesic(t: &HypTangent, time: f64) -> HypPoint {
    HypPoint(t.x.0 * time.cosh() + t.v * time.sinh())
}

pub fn hyp_distance(x: &HypPoint, y: &HypPoint) -> f64 {
    lorentz(&x.0, &y.0).max(1.0).acosh()
}

/// Distance from `y` to the geodesic line through `t`.
pub fn distance_to_line(t: &HypTangent, y: &Vec3) -> f64 {
    let n = lorentz_normal(&t.x.0, &t.v);
    let n = n / (-lorentz(&n, &n)).sqrt();
    lorentz(y, &n).abs().asinh()
}

/// Chart `y ↦ (c + y₁a + y₂b)/sqrt([·,·])` about `c`.
#[derive(Debug, Clone)]
pub struct HypChart {
    weight: HorocycleWeight,
    n_theta: usize,
    center: Vec3,
    a: Vec3,
    b: Vec3,
}

impl HypChart {
    pub fn new(weight: HorocycleWeight, n_theta: usize, center: &Vec3, reference: &Vec3) -> Self {
        let (a, b) = frame_from(center, reference);
        Self { weight, n_theta, center: *center, a, b }
    }

    fn lifted(&self, y: &Vec2) -> Vec3 {
        self.center + self.a * y.x + self.b * y.y
    }
}

impl Chart for HypChart {
    fn chart_norm(&self, y: &Vec2) -> Result<(PlanarNorm, Matrix2<f64>)> {
        let p = self.point(y);
        let norm = HypNorm::in_frame(&self.weight, &p, &self.a, self.n_theta)?;
        let d = [self.velocity(y, &Vec2::x()), self.velocity(y, &Vec2::y())];
        let (c0, c1) = (norm.coords(&d[0]), norm.coords(&d[1]));
        Ok((norm.norm, Matrix2::new(c0.x, c1.x, c0.y, c1.y)))
    }

    fn point(&self, y: &Vec2) -> Vec3 {
        let x = self.lifted(y);
        x / lorentz(&x, &x).sqrt()
    }

    fn velocity(&self, y: &Vec2, w: &Vec2) -> Vec3 {
        let x = self.lifted(y);
        let q = lorentz(&x, &x);
        let p = x / q.sqrt();
        let dw = self.a * w.x + self.b * w.y;
        (dw - p * lorentz(&p, &dw)) / q.sqrt()
    }

    fn recenter(&self, y: &Vec2, w: &Vec2) -> Result<(Self, Vec2)> {
        let center = self.point(y);
        let v = self.velocity(y, w);
        let next = Self::new(self.weight, self.n_theta, &center, &self.a);
        let w = Vec2::new(-lorentz(&v, &next.a), -lorentz(&v, &next.b));
        Ok((next, w))
    }
}

/// Geodesic of the weighted horocycle metric from `t` with the unit initial
/// velocity `t.v`.
pub fn hyp_geodesic_trace(
    weight: HorocycleWeight,
    t: &HypTangent,
    time: f64,
    n_theta: usize,
    spec: &GeodesicSpec,
) -> Result<GeodesicTrace> {
    let chart = HypChart::new(weight, n_theta, &t.x.0, &t.v);
    integrate(chart, Vec2::x(), time, spec)
}

/// Hyperbolic distance at time `T` between the weighted metric's geodesic
/// and the hyperbolic geodesic with the same initial unit velocity.
pub fn conformal_divergence(
    weight: HorocycleWeight,
    t: &HypTangent,
    time: f64,
    n_theta: usize,
    spec: &GeodesicSpec,
) -> Result<f64> {
    let trace = hyp_geodesic_trace(weight, t, time, n_theta, spec)?;
    let end = HypPoint::new_normalize(*trace.points.last().expect("trace has a start point"))?;
    Ok(hyp_distance(&end, &hyp_geodesic(t, time)))
}

/// Largest distance from the weighted metric's geodesic to the hyperbolic
/// geodesic line with the same initial direction, over time `[0, T]`.
pub fn conformal_separation(
    weight: HorocycleWeight,
    t: &HypTangent,
    time: f64,
    n_theta: usize,
    spec: &GeodesicSpec,
) -> Result<f64> {
    let trace = hyp_geodesic_trace(weight, t, time, n_theta, spec)?;
    Ok(trace.points.iter().map(|p| distance_to_line(t, p)).fold(0.0, f64::max))
}

/// Grid for the horocycle Crofton integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorocycleGrid {
    pub n_phi: usize,
    pub n_r: usize,
    /// Polyline vertices per horocycle.
    pub n_s: usize,
}

impl Default for HorocycleGrid {
    fn default() -> Self {
        Self { n_phi: 360, n_r: 200, n_s: 256 }
    }
}

fn klein(x: &Vec3) -> Vec2 {
    Vec2::new(x.x / x.z, x.y / x.z)
}

fn segments_cross(p: &Vec2, q: &Vec2, a: &Vec2, b: &Vec2) -> bool {
    let cross = |o: &Vec2, u: &Vec2, v: &Vec2| (u.x - o.x) * (v.y - o.y) - (u.y - o.y) * (v.x - o.x);
    let (d1, d2) = (cross(a, b, p), cross(a, b, q));
    let (d3, d4) = (cross(p, q, a), cross(p, q, b));
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

/// Crossings of the horocycle `ξ` with the geodesic segment of length `len`
/// from `t`, counted on polylines in the Klein model.
pub fn horocycle_crossings(xi: &LightconePoint, t: &HypTangent, len: f64, n_s: usize) -> Result<usize> {
    let mid = hyp_geodesic(t, 0.5 * len);
    let foot = horocycle_foot(xi, &mid);
    // Only arcs within len/2 + d(mid, foot) of the foot can reach the segment.
    let reach = 0.5 * len + hyp_distance(&mid, &foot);
    let s_max = (2.0 * (reach.cosh() - 1.0)).sqrt() * 1.01 + 1e-9;
    let s: Vec<f64> = (0..=n_s).map(|j| -s_max + 2.0 * s_max * j as f64 / n_s as f64).collect();
    let points = horocycle_points(xi, &foot, &s)?;
    let (a, b) = (klein(&t.x.0), klein(&hyp_geodesic(t, len).0));
    Ok(points.windows(2).filter(|w| segments_cross(&klein(&w[0]), &klein(&w[1]), &a, &b)).count())
}

/// `∫ #(H_ξ ∩ c) w(ξ) dξ₁∧dξ₂/ξ₃` for the geodesic segment `c` of length
/// `len` from `t`. With `ξ = r(cos φ, sin φ, 1)` the form is `dr dφ`, and a
/// horocycle meets the segment only if its distance to the midpoint `m` is at
/// most `len/2`, i.e. `e^{-len/2} ≤ [ξ, m] ≤ e^{len/2}`; that bounds `r` for
/// each `φ` exactly.
pub fn horocycle_crofton_length(
    weight: &HorocycleWeight,
    t: &HypTangent,
    len: f64,
    grid: &HorocycleGrid,
) -> Result<f64> {
    if !(len > 0.0) {
        return Ok(0.0);
    }
    let m = hyp_geodesic(t, 0.5 * len).0;
    let dphi = TAU / grid.n_phi as f64;
    let mut total = 0.0;
    for i in 0..grid.n_phi {
        let phi = dphi * (i as f64 + 0.5);
        let k = m.z - m.x * phi.cos() - m.y * phi.sin();
        let (r0, r1) = ((-0.5 * len).exp() / k, (0.5 * len).exp() / k);
        let dr = (r1 - r0) / grid.n_r as f64;
        for j in 0..grid.n_r {
            let xi = LightconePoint::polar(r0 + dr * (j as f64 + 0.5), phi);
            let count = horocycle_crossings(&xi, t, len, grid.n_s)?;
            total += count as f64 * weight.eval(&xi.0) * dr * dphi;
        }
    }
    Ok(total)
}
