//! Geodesics of the circle metrics and recovery of the measure from them.
//!
//! Geodesics are integrated in local charts from the Euler-Lagrange
//! equations of the energy `E = F²/2`,
//!
//! ```text
//! ∂²E/∂w² · ẇ = ∂E/∂y - ∂²E/∂w∂y · w,
//! ```
//!
//! with velocity derivatives taken from the sampled norm and position
//! derivatives by central differences across neighbouring charts' norms.

use std::f64::consts::TAU;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circle::{ContactElement, SphereCircle, SpherePoint};
use crate::cosine::PlanarNorm;
use crate::grid::IcoGrid;
use crate::kappa::{realize_circle, tangent_circle, tangent_circle_from};
use crate::metric::CircleMetric;
use crate::{Error, Result, Vec2, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicSpec {
    /// RK4 step.
    pub step: f64,
    /// Chart coordinates beyond this radius trigger a re-centre.
    pub recenter_radius: f64,
    /// Central-difference step for position derivatives and variations.
    pub chart_step: f64,
}

impl Default for GeodesicSpec {
    fn default() -> Self {
        Self { step: 1e-2, recenter_radius: 0.1, chart_step: 1e-3 }
    }
}

impl GeodesicSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.recenter_radius > 0.0 && self.chart_step > 0.0) {
            return Err(Error::InvalidInput("geodesic steps must be positive".into()));
        }
        Ok(())
    }
}

/// A local chart with a velocity norm of the form `F(y, w) = N_y(A(y) w)`.
pub trait Chart: Sized {
    /// The norm at `y` and the matrix taking chart velocities to its frame.
    fn chart_norm(&self, y: &Vec2) -> Result<(PlanarNorm, Matrix2<f64>)>;
    fn point(&self, y: &Vec2) -> Vec3;
    fn velocity(&self, y: &Vec2, w: &Vec2) -> Vec3;
    /// A chart centred at `y`, and `w` expressed in it.
    fn recenter(&self, y: &Vec2, w: &Vec2) -> Result<(Self, Vec2)>;
}

fn energy_parts(norm: &PlanarNorm, a: &Matrix2<f64>, w: &Vec2) -> Result<(f64, Vec2, Matrix2<f64>)> {
    let (e, g, h) = norm.energy(&(a * w))?;
    Ok((e, a.transpose() * g, a.transpose() * h * a))
}

/// `ẇ` from the Euler-Lagrange equations of `F²/2`.
pub fn acceleration<C: Chart>(chart: &C, y: &Vec2, w: &Vec2, delta: f64) -> Result<Vec2> {
    let (norm, a) = chart.chart_norm(y)?;
    let (_, _, hess) = energy_parts(&norm, &a, w)?;
    let mut dy = Vec2::zeros();
    let mut mixed = Matrix2::zeros();
    for j in 0..2 {
        let mut e = Vec2::zeros();
        e[j] = delta;
        let (np, ap) = chart.chart_norm(&(y + e))?;
        let (nm, am) = chart.chart_norm(&(y - e))?;
        let (ep, gp, _) = energy_parts(&np, &ap, w)?;
        let (em, gm, _) = energy_parts(&nm, &am, w)?;
        dy[j] = (ep - em) / (2.0 * delta);
        mixed.set_column(j, &((gp - gm) / (2.0 * delta)));
    }
    let det = hess.determinant();
    if !(det.abs() > 1e-12 * hess.norm_squared()) {
        return Err(Error::SingularHessian(det));
    }
    let acc = hess.try_inverse().ok_or(Error::SingularHessian(det))? * (dy - mixed * w);
    if !acc.iter().all(|a| a.is_finite()) {
        return Err(Error::SingularHessian(det));
    }
    Ok(acc)
}

fn chart_f<C: Chart>(chart: &C, y: &Vec2, w: &Vec2) -> Result<f64> {
    let (norm, a) = chart.chart_norm(y)?;
    Ok(norm.value(&(a * w)))
}

/// Integrated geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicTrace {
    pub points: Vec<Vec3>,
    /// Ambient velocity at each point.
    pub velocities: Vec<Vec3>,
    pub times: Vec<f64>,
    /// `F` of the velocity at each point.
    pub f_values: Vec<f64>,
    pub step: f64,
    /// Step indices after which the chart was re-centred.
    pub recenters: Vec<usize>,
}

impl GeodesicTrace {
    /// `max |F(ẋ) - F(ẋ(0))|`.
    pub fn max_drift(&self) -> f64 {
        let f0 = self.f_values[0];
        self.f_values.iter().map(|f| (f - f0).abs()).fold(0.0, f64::max)
    }

    /// The trace as sphere points; fails for traces not on the unit sphere.
    pub fn polyline(&self) -> Result<Vec<SpherePoint>> {
        self.points.iter().map(|p| SpherePoint::new_normalize(*p)).collect()
    }
}

/// Integrates from chart origin with chart velocity `w0` up to time `t_end`.
pub fn integrate<C: Chart>(mut chart: C, w0: Vec2, t_end: f64, spec: &GeodesicSpec) -> Result<GeodesicTrace> {
    spec.validate()?;
    if !(t_end >= 0.0) {
        return Err(Error::InvalidInput(format!("trace time must be non-negative, got {t_end}")));
    }
    let steps = (t_end / spec.step).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let delta = spec.chart_step;
    let (mut y, mut w) = (Vec2::zeros(), w0);
    let mut trace = GeodesicTrace {
        points: vec![chart.point(&y)],
        velocities: vec![chart.velocity(&y, &w)],
        times: vec![0.0],
        f_values: vec![chart_f(&chart, &y, &w)?],
        step: h,
        recenters: Vec::new(),
    };
    for i in 0..steps {
        let k1 = acceleration(&chart, &y, &w, delta)?;
        let (y2, w2) = (y + w * (h / 2.0), w + k1 * (h / 2.0));
        let k2 = acceleration(&chart, &y2, &w2, delta)?;
        let (y3, w3) = (y + w2 * (h / 2.0), w + k2 * (h / 2.0));
        let k3 = acceleration(&chart, &y3, &w3, delta)?;
        let (y4, w4) = (y + w3 * h, w + k3 * h);
        let k4 = acceleration(&chart, &y4, &w4, delta)?;
        y += (w + w2 * 2.0 + w3 * 2.0 + w4) * (h / 6.0);
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if y.norm() > spec.recenter_radius {
            let (next, wn) = chart.recenter(&y, &w)?;
            chart = next;
            y = Vec2::zeros();
            w = wn;
            trace.recenters.push(i);
        }
        trace.points.push(chart.point(&y));
        trace.velocities.push(chart.velocity(&y, &w));
        trace.times.push(h * (i + 1) as f64);
        trace.f_values.push(chart_f(&chart, &y, &w)?);
    }
    Ok(trace)
}

/// Gnomonic chart `y ↦ normalize(c + y₁e₁ + y₂e₂)` on the sphere.
#[derive(Debug, Clone)]
pub struct SphereChart<'a> {
    metric: &'a CircleMetric,
    center: Vec3,
    e1: Vec3,
    e2: Vec3,
}

impl<'a> SphereChart<'a> {
    /// Chart at `center` with first axis along the tangential part of `reference`.
    pub fn new(metric: &'a CircleMetric, center: &Vec3, reference: &Vec3) -> Result<Self> {
        let t = reference - center * center.dot(reference);
        if !(t.norm() > 1e-12) {
            return Err(Error::InvalidInput("chart reference is normal to the sphere".into()));
        }
        let e1 = t.normalize();
        Ok(Self { metric, center: *center, e1, e2: center.cross(&e1) })
    }

    fn lifted(&self, y: &Vec2) -> Vec3 {
        self.center + self.e1 * y.x + self.e2 * y.y
    }

    /// Chart coordinates of a point in the open hemisphere about the centre.
    pub fn coords(&self, p: &Vec3) -> Vec2 {
        let s = p.dot(&self.center);
        Vec2::new(p.dot(&self.e1) / s, p.dot(&self.e2) / s)
    }

    /// Chart velocity representing the tangent vector `v` at `point(y)`.
    pub fn pull(&self, y: &Vec2, v: &Vec3) -> Vec2 {
        let x = self.lifted(y);
        // d/ds (x + s W)/|x + s W| = (W - P (P·W)) / |x|, invert on span(e1, e2).
        let p = x.normalize();
        let cols = [self.e1, self.e2].map(|e| (e - p * p.dot(&e)) / x.norm());
        let gram =
            Matrix2::new(cols[0].dot(&cols[0]), cols[0].dot(&cols[1]), cols[1].dot(&cols[0]), cols[1].dot(&cols[1]));
        let rhs = Vec2::new(cols[0].dot(v), cols[1].dot(v));
        gram.try_inverse().map(|g| g * rhs).unwrap_or_else(Vec2::zeros)
    }
}

impl Chart for SphereChart<'_> {
    fn chart_norm(&self, y: &Vec2) -> Result<(PlanarNorm, Matrix2<f64>)> {
        let p = self.point(y);
        let norm = self.metric.point_norm_in_frame(&p, &self.e1)?;
        let (f1, f2) = norm.frame();
        let d = [self.velocity(y, &Vec2::x()), self.velocity(y, &Vec2::y())];
        let a = Matrix2::new(f1.dot(&d[0]), f1.dot(&d[1]), f2.dot(&d[0]), f2.dot(&d[1]));
        Ok((norm.planar().clone(), a))
    }

    fn point(&self, y: &Vec2) -> Vec3 {
        self.lifted(y).normalize()
    }

    fn velocity(&self, y: &Vec2, w: &Vec2) -> Vec3 {
        let x = self.lifted(y);
        let p = x.normalize();
        let dw = self.e1 * w.x + self.e2 * w.y;
        (dw - p * p.dot(&dw)) / x.norm()
    }

    fn recenter(&self, y: &Vec2, w: &Vec2) -> Result<(Self, Vec2)> {
        let center = self.point(y);
        let v = self.velocity(y, w);
        let next = Self::new(self.metric, &center, &self.e1)?;
        let w = Vec2::new(v.dot(&next.e1), v.dot(&next.e2));
        Ok((next, w))
    }
}

/// Geodesic from `p` with initial velocity direction `v`, rescaled so that
/// `F = 1`, integrated for time `t_end`.
pub fn geodesic_trace(
    metric: &CircleMetric,
    p: &SpherePoint,
    v: &Vec3,
    t_end: f64,
    spec: &GeodesicSpec,
) -> Result<GeodesicTrace> {
    let v = v - p.vec() * p.vec().dot(v);
    if !(v.norm() > 0.0) {
        return Err(Error::ZeroVelocity);
    }
    let chart = SphereChart::new(metric, &p.vec(), &v)?;
    let f = chart_f(&chart, &Vec2::zeros(), &Vec2::x())?;
    integrate(chart, Vec2::new(1.0 / f, 0.0), t_end, spec)
}

/// [`geodesic_trace`] along the direction of a contact element.
pub fn geodesic_from_contact(
    metric: &CircleMetric,
    e: &ContactElement,
    t_end: f64,
    spec: &GeodesicSpec,
) -> Result<GeodesicTrace> {
    geodesic_trace(metric, &e.point(), &e.tangent(), t_end, spec)
}

/// `max |angle(x, axis) - r|` over the trace points.
pub fn circle_deviation(points: &[Vec3], c: &SphereCircle) -> f64 {
    points.iter().map(|x| (x.normalize().dot(&c.axis()).clamp(-1.0, 1.0).acos() - c.radius()).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimalityReport {
    pub passed: bool,
    /// Length of the circle arc.
    pub arc_length: f64,
    /// Lengths of the perturbed curves.
    pub perturbed: Vec<f64>,
}

impl MinimalityReport {
    pub fn min_excess(&self) -> f64 {
        self.perturbed.iter().map(|l| l - self.arc_length).fold(f64::INFINITY, f64::min)
    }
}

const MINIMALITY_SEGMENTS: usize = 32;
const BUMP_MODES: usize = 3;

fn arc_polyline(circle: &SphereCircle, start: &Vec3, arc: f64, bump: &dyn Fn(f64) -> f64) -> Result<Vec<SpherePoint>> {
    let axis = circle.axis();
    (0..=MINIMALITY_SEGMENTS)
        .map(|j| {
            let s = arc * j as f64 / MINIMALITY_SEGMENTS as f64;
            let x = circle.point_from(start, s);
            // Push along the meridian through the circle's centre.
            let towards = axis - x * x.dot(&axis);
            let shift = bump(s / arc);
            let dir = if towards.norm() > 1e-12 { towards.normalize() } else { Vec3::zeros() };
            SpherePoint::new_normalize(x * shift.cos() + dir * shift.sin())
        })
        .collect()
}

/// Compares the metric length of the path circle's arc of spherical length
/// `arc_len` from `e0` against `k` seeded smooth perturbations with the same
/// endpoints, `Σ a_m sin(mπs)` with `|a_m| ≤ amplitude`.
pub fn local_minimality_check(
    metric: &CircleMetric,
    e0: &ContactElement,
    arc_len: f64,
    k: usize,
    seed: u64,
    amplitude: f64,
) -> Result<MinimalityReport> {
    if !(arc_len > 0.0 && arc_len <= 0.5) {
        return Err(Error::InvalidInput(format!("arc length must be in (0, 0.5], got {arc_len}")));
    }
    let circle = tangent_circle(metric.field(), e0, metric.solve_spec())?.circle;
    let start = e0.p();
    let base = metric.finsler_length(&arc_polyline(&circle, &start, arc_len, &|_| 0.0)?)?;
    let perturbed = (0..k)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let coeffs: Vec<f64> = (0..BUMP_MODES).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
            let bump = move |u: f64| {
                coeffs.iter().enumerate().map(|(m, a)| a * ((m + 1) as f64 * std::f64::consts::PI * u).sin()).sum()
            };
            metric.finsler_length(&arc_polyline(&circle, &start, arc_len, &bump)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let tolerance = 1e-10 * base;
    let passed = perturbed.iter().all(|l| *l >= base - tolerance);
    Ok(MinimalityReport { passed, arc_length: base, perturbed })
}

/// Covector `∂F/∂v` at the `F`-unit vector along a contact element, in the
/// deterministic tangent frame at its point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covector {
    pub frame: (Vec3, Vec3),
    pub components: Vec2,
}

impl Covector {
    pub fn apply(&self, v: &Vec3) -> f64 {
        self.components.x * v.dot(&self.frame.0) + self.components.y * v.dot(&self.frame.1)
    }
}

/// Legendre image of `e` by central differences of `F` (step `fd_step`
/// relative to the vector).
pub fn legendre_covector(metric: &CircleMetric, e: &ContactElement) -> Result<Covector> {
    let norm = metric.point_norm(&e.point())?;
    let c = norm.coords(&e.tangent());
    let unit = c / norm.planar().value(&c);
    let h = metric.quadrature().fd_step * unit.norm();
    let mut xi = Vec2::zeros();
    for i in 0..2 {
        let mut d = Vec2::zeros();
        d[i] = h;
        xi[i] = (norm.planar().value(&(unit + d)) - norm.planar().value(&(unit - d))) / (2.0 * h);
    }
    Ok(Covector { frame: norm.frame(), components: xi })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredSample {
    pub x: Vec3,
    /// The measure the metric was built from.
    pub m: f64,
    pub m_hat: f64,
}

impl RecoveredSample {
    /// Relative error against the even part of the source measure.
    pub fn relative_error(&self, even: f64) -> f64 {
        (self.m_hat - even).abs() / even
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredDensity {
    pub samples: Vec<RecoveredSample>,
}

impl RecoveredDensity {
    /// Maximum relative error against the even part of the source measure.
    pub fn max_relative_error(&self, metric: &CircleMetric) -> f64 {
        let even = metric.measure().even_part();
        self.samples.iter().map(|s| s.relative_error(even.eval(&s.x))).fold(0.0, f64::max)
    }
}

fn variation(e: &ContactElement, which: usize, s: f64) -> Result<ContactElement> {
    match which {
        0 => Ok(e.rotated(s)),
        _ => Ok(e.shifted_along_normal(s)),
    }
}

/// Recovers the measure density at `x̂` from the contact element of
/// `realize_circle(x̂)` at arclength `s0`.
pub fn recover_at(metric: &CircleMetric, x: &Vec3, s0: f64, spec: &GeodesicSpec) -> Result<f64> {
    let circle = realize_circle(metric.field(), x)?;
    let e = circle.contact(s0);
    let chart = SphereChart::new(metric, &e.p(), &e.tangent())?;
    let delta = spec.chart_step;
    let center = chart.chart_norm(&Vec2::zeros())?;
    let mut w_xi = [Vec2::zeros(); 2];
    let mut w_p = [Vec2::zeros(); 2];
    let mut u = [Vec3::zeros(); 2];
    for (i, (wx, (wp, ui))) in w_xi.iter_mut().zip(w_p.iter_mut().zip(u.iter_mut())).enumerate() {
        let mut ends = Vec::with_capacity(2);
        for s in [delta, -delta] {
            let ei = variation(&e, i, s)?;
            let y = chart.coords(&ei.p());
            let (norm, a) = if i == 0 { center.clone() } else { chart.chart_norm(&y)? };
            let w = chart.pull(&y, &ei.tangent());
            let (_, g, _) = energy_parts(&norm, &a, &w)?;
            let f = norm.value(&(a * w));
            // ∂F/∂w = ∂E/∂w / F, degree zero in w.
            let axis = tangent_circle_from(metric.field(), &ei, *x, metric.solve_spec())?.axis;
            ends.push((g / f, y, axis));
        }
        *wx = (ends[0].0 - ends[1].0) / (2.0 * delta);
        *wp = (ends[0].1 - ends[1].1) / (2.0 * delta);
        *ui = (ends[0].2 - ends[1].2) / (2.0 * delta);
    }
    let omega = w_xi[0].dot(&w_p[1]) - w_xi[1].dot(&w_p[0]);
    let area = x.dot(&u[0].cross(&u[1]));
    if !(area.abs() > 1e-8) {
        return Err(Error::DegenerateVariation);
    }
    Ok(omega.abs() / (4.0 * area.abs()))
}

/// Recovers `m̂` on the vertices of an icosahedral grid.
pub fn recover_measure(metric: &CircleMetric, grid_level: u32, spec: &GeodesicSpec) -> Result<RecoveredDensity> {
    let grid = IcoGrid::new(grid_level);
    let samples = grid
        .vertices()
        .par_iter()
        .map(|x| {
            let m_hat = [0.0, 1.0, 2.0]
                .iter()
                .map(|s0| recover_at(metric, x, *s0, spec))
                .find(|r| !matches!(r, Err(Error::DegenerateVariation)))
                .unwrap_or(Err(Error::DegenerateVariation))?;
            Ok(RecoveredSample { x: *x, m: metric.measure().eval(x), m_hat })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveredDensity { samples })
}

/// Seeded uniformly distributed contact elements.
pub fn random_contact_elements(n: usize, seed: u64) -> Vec<ContactElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| loop {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..TAU);
            let r = (1.0 - z * z).sqrt();
            let p = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            let t = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if let Ok(e) = ContactElement::from_vectors(p, t) {
                break e;
            }
        })
        .collect()
}
