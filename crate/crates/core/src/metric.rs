//! The Finsler metric of a circular path geometry and a positive measure on
//! its circles, and the Crofton oracle it must agree with.
//!
//! For a contact element `(p, t(θ))` let `x̂(p, θ)` be the parameter of the
//! tangent circle. Pulling the measure back along `(p, θ) ↦ x̂` and dividing
//! out the normal displacement of `p` leaves a density `rho(p, θ)` on the
//! circle of directions at `p`; the norm is its cosine transform
//!
//! ```text
//! F(p, v) = ∫₀^{2π} |ξ_θ(v)| rho(p, θ) dθ,   ξ_θ(v) = v · (p × t(θ)).
//! ```
//!
//! Densities are declared against the unit-sphere area element of the
//! circle parameters. With that convention the normalization constant is
//! exactly one: the round case has `rho ≡ 1` and `F = 4|v|`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circle::{count_intersections, great_arc, tangent_frame, ContactElement, SpherePoint};
use crate::cosine::PlanarNorm;
use crate::grid::IcoGrid;
use crate::kappa::{realize_circle, tangent_circle_from, FiberSolveSpec, KappaField};
use crate::{Error, Result, Vec2, Vec3};

/// Positive density on the circle parameters, against unit-sphere area.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureDensity {
    Constant(f64),
    /// `base (1 + amplitude · direction · x̂)` with `direction` a unit vector.
    Linear {
        base: f64,
        direction: Vec3,
        amplitude: f64,
    },
    /// `(m(x̂) + m(-x̂)) / 2`.
    EvenPart(Box<MeasureDensity>),
}

impl MeasureDensity {
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidInput(format!("measure must be positive, got {value}")));
        }
        Ok(Self::Constant(value))
    }

    /// `base (1 + amplitude · d̂ · x̂)`; requires `base > 0` and `|amplitude| < 1`.
    pub fn linear(base: f64, direction: Vec3, amplitude: f64) -> Result<Self> {
        let norm = direction.norm();
        if !(base > 0.0) || !base.is_finite() || !(amplitude.abs() < 1.0) || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidInput(format!(
                "linear measure needs base > 0, |amplitude| < 1 and a nonzero direction \
                 (base {base}, amplitude {amplitude})"
            )));
        }
        Ok(Self::Linear { base, direction: direction / norm, amplitude })
    }

    pub fn even_part(&self) -> Self {
        match self {
            Self::Constant(_) | Self::EvenPart(_) => self.clone(),
            Self::Linear { base, .. } => Self::Constant(*base),
        }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            Self::Constant(m) => *m,
            Self::Linear { base, direction, amplitude } => base * (1.0 + amplitude * direction.dot(x)),
            Self::EvenPart(inner) => 0.5 * (inner.eval(x) + inner.eval(&-x)),
        }
    }

    /// Checks positivity on the vertices of an icosahedral grid.
    pub fn check_positive(&self, grid_level: u32) -> Result<()> {
        match IcoGrid::new(grid_level).vertices().iter().find(|x| !(self.eval(x) > 0.0)) {
            Some(x) => Err(Error::NonPositiveMeasure([x.x, x.y, x.z])),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Fiber samples per point.
    pub n_theta: usize,
    /// Central-difference step of the fiber density.
    pub fd_step: f64,
    pub sphere_grid_level: u32,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { n_theta: 256, fd_step: 1e-4, sphere_grid_level: 5, mc_samples: 20_000, seed: 0 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 16 {
            return Err(Error::InvalidInput(format!("n_theta must be at least 16, got {}", self.n_theta)));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.1) {
            return Err(Error::InvalidInput(format!("fd_step must be in (0, 0.1), got {}", self.fd_step)));
        }
        if self.sphere_grid_level > 9 {
            return Err(Error::InvalidInput("sphere_grid_level above 9 is not supported".into()));
        }
        Ok(())
    }
}

/// Fiber solves inside metric evaluations, tighter than the default so that
/// difference quotients of `x̂` stay clean.
pub fn metric_solve_spec() -> FiberSolveSpec {
    FiberSolveSpec { tolerance: 1e-14, max_iterations: 2000 }
}

/// `F` evaluated at a point, for any tangent vector there.
#[derive(Debug, Clone, PartialEq)]
pub struct PointNorm {
    p: Vec3,
    e1: Vec3,
    e2: Vec3,
    norm: PlanarNorm,
}

impl PointNorm {
    pub fn point(&self) -> Vec3 {
        self.p
    }

    pub fn frame(&self) -> (Vec3, Vec3) {
        (self.e1, self.e2)
    }

    pub fn planar(&self) -> &PlanarNorm {
        &self.norm
    }

    /// Frame coordinates of a tangent vector.
    pub fn coords(&self, v: &Vec3) -> Vec2 {
        Vec2::new(v.dot(&self.e1), v.dot(&self.e2))
    }

    pub fn eval(&self, v: &Vec3) -> f64 {
        self.norm.value(&self.coords(v))
    }

    /// Mean of the fiber density.
    pub fn mean_density(&self) -> f64 {
        self.norm.transform().mean()
    }
}

/// A Finsler sample `(p, v, F(p, v))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub p: SpherePoint,
    pub v: Vec3,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianReport {
    /// Orthonormal tangent frame the matrices refer to.
    pub frame: (Vec3, Vec3),
    pub energy: Matrix2<f64>,
    /// Ascending.
    pub energy_eigenvalues: [f64; 2],
    pub f: Matrix2<f64>,
    /// Ascending.
    pub f_eigenvalues: [f64; 2],
    /// Unit eigenvector of the Hessian of `F` with the smallest eigenvalue.
    pub kernel: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CroftonEstimate {
    pub length: f64,
    /// Samples that needed jitter to leave a tangency.
    pub jittered: usize,
}

/// The metric of `(field, measure)`.
#[derive(Debug, Clone)]
pub struct CircleMetric {
    field: KappaField,
    measure: MeasureDensity,
    quad: QuadratureSpec,
    solve: FiberSolveSpec,
}

const GAUSS_4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

const JITTER: f64 = 1e-7;
const MAX_JITTERS: usize = 16;

fn rotate_in_frame(e1: &Vec3, e2: &Vec3, theta: f64) -> Vec3 {
    let (s, c) = theta.sin_cos();
    e1 * c + e2 * s
}

impl CircleMetric {
    pub fn new(field: KappaField, measure: MeasureDensity, quad: QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        Ok(Self { field, measure, quad, solve: metric_solve_spec() })
    }

    pub fn field(&self) -> &KappaField {
        &self.field
    }

    pub fn measure(&self) -> &MeasureDensity {
        &self.measure
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn solve_spec(&self) -> &FiberSolveSpec {
        &self.solve
    }

    /// Same geometry with another quadrature.
    pub fn with_quadrature(&self, quad: QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        Ok(Self { quad, ..self.clone() })
    }

    /// Same geometry with another measure.
    pub fn with_measure(&self, measure: MeasureDensity) -> Self {
        Self { measure, ..self.clone() }
    }

    fn axis(&self, p: &Vec3, t: &Vec3, start: &Vec3) -> Result<Vec3> {
        let e = ContactElement::from_vectors(*p, *t)?;
        Ok(tangent_circle_from(&self.field, &e, *start, &self.solve)?.axis)
    }

    /// Density and circle parameter at `(p, θ)` in the frame `(e1, e2)`.
    /// The normal variation is mixed with `mix` times the rotation, which
    /// must not change the result.
    fn density_sample(
        &self,
        p: &Vec3,
        e1: &Vec3,
        e2: &Vec3,
        theta: f64,
        start: &Vec3,
        mix: f64,
    ) -> Result<(f64, Vec3)> {
        let h = self.quad.fd_step;
        let t = rotate_in_frame(e1, e2, theta);
        let n = p.cross(&t);
        let x = self.axis(p, &t, start)?;
        let turn = |a: f64| self.axis(p, &rotate_in_frame(e1, e2, theta + a), &x);
        let u1 = (turn(h)? - turn(-h)?) / (2.0 * h);
        // Move p along n with t parallel; ξ_θ of this displacement is 1.
        let shift = |s: f64| {
            let (sn, cs) = s.sin_cos();
            let q = p * cs + n * sn;
            let nq = n * cs - p * sn;
            let (sa, ca) = (mix * s).sin_cos();
            self.axis(&q, &(t * ca + nq * sa), &x)
        };
        let u2 = (shift(h)? - shift(-h)?) / (2.0 * h);
        let area = x.dot(&u1.cross(&u2)).abs();
        Ok((self.measure.eval(&x) * area, x))
    }

    /// `rho(p, θ)` in the deterministic tangent frame at `p`.
    pub fn fiber_density(&self, p: &SpherePoint, theta: f64) -> Result<f64> {
        let p = p.vec();
        let (e1, e2) = tangent_frame(&p);
        let start = p.cross(&rotate_in_frame(&e1, &e2, theta));
        Ok(self.density_sample(&p, &e1, &e2, theta, &start, 0.0)?.0)
    }

    #[cfg(test)]
    fn fiber_density_mixed(&self, p: &Vec3, theta: f64, mix: f64) -> Result<f64> {
        let (e1, e2) = tangent_frame(p);
        let start = p.cross(&rotate_in_frame(&e1, &e2, theta));
        Ok(self.density_sample(p, &e1, &e2, theta, &start, mix)?.0)
    }

    /// Samples the fiber density at `p` in the deterministic frame.
    pub fn point_norm(&self, p: &SpherePoint) -> Result<PointNorm> {
        let (e1, _) = tangent_frame(&p.vec());
        self.point_norm_in_frame(&p.vec(), &e1)
    }

    /// Samples the fiber density at `p` with first frame vector along the
    /// tangential part of `reference`.
    pub fn point_norm_in_frame(&self, p: &Vec3, reference: &Vec3) -> Result<PointNorm> {
        let tangential = reference - p * p.dot(reference);
        let norm = tangential.norm();
        if !(norm > 1e-12) {
            return Err(Error::InvalidInput("frame reference is normal to the sphere".into()));
        }
        let e1 = tangential / norm;
        let e2 = p.cross(&e1);
        let mut start = p.cross(&e1);
        let planar = PlanarNorm::from_density(self.quad.n_theta, FRAC_PI_2, |theta| {
            let (rho, x) = self.density_sample(p, &e1, &e2, theta, &start, 0.0)?;
            start = x;
            Ok(rho)
        })?;
        Ok(PointNorm { p: *p, e1, e2, norm: planar })
    }

    pub fn finsler_f(&self, p: &SpherePoint, v: &Vec3) -> Result<f64> {
        if v.norm() == 0.0 {
            return Ok(0.0);
        }
        Ok(self.point_norm(p)?.eval(v))
    }

    pub fn sample(&self, p: &SpherePoint, v: &Vec3) -> Result<MetricSample> {
        let v = v - p.vec() * p.vec().dot(v);
        Ok(MetricSample { p: *p, v, f: self.finsler_f(p, &v)? })
    }

    /// `∫ F(ċ) dt` along great-arc interpolation, four Gauss–Legendre nodes
    /// per segment.
    pub fn finsler_length(&self, poly: &[SpherePoint]) -> Result<f64> {
        let mut total = 0.0;
        for pair in poly.windows(2) {
            let (a, b) = (pair[0].vec(), pair[1].vec());
            let Some((len, dir)) = great_arc(&a, &b) else {
                if a.dot(&b) < 0.0 {
                    return Err(Error::InvalidInput("antipodal polyline vertices".into()));
                }
                continue;
            };
            for (node, weight) in GAUSS_4 {
                let s = 0.5 * len * (node + 1.0);
                let (sn, cs) = s.sin_cos();
                let x = SpherePoint::new_normalize(a * cs + dir * sn)?;
                let v = dir * cs - a * sn;
                total += 0.5 * len * weight * self.finsler_f(&x, &v)?;
            }
        }
        Ok(total)
    }

    fn count_at(&self, x: &Vec3, poly: &[SpherePoint], rng: &mut ChaCha8Rng) -> Result<(f64, bool)> {
        let mut y = *x;
        for attempt in 0..=MAX_JITTERS {
            let crossings = count_intersections(&realize_circle(&self.field, &y)?, poly);
            if !crossings.tangency {
                return Ok((crossings.count as f64 * self.measure.eval(&y), attempt > 0));
            }
            let (e1, e2) = tangent_frame(x);
            let angle = rng.gen::<f64>() * TAU;
            y = (x + rotate_in_frame(&e1, &e2, angle) * JITTER).normalize();
        }
        Err(Error::DegenerateSamples("persistent tangency in the Crofton oracle"))
    }

    fn sample_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.quad.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// `∫ #(γ(x̂) ∩ c) m(x̂) dA(x̂)` by cell quadrature on the icosahedral grid.
    pub fn crofton_length(&self, poly: &[SpherePoint]) -> Result<CroftonEstimate> {
        if poly.len() < 2 {
            return Ok(CroftonEstimate { length: 0.0, jittered: 0 });
        }
        let grid = IcoGrid::new(self.quad.sphere_grid_level);
        let cells = grid.cells();
        let values = cells
            .par_iter()
            .enumerate()
            .map(|(i, (x, area))| {
                let (value, jittered) = self.count_at(x, poly, &mut self.sample_rng(i))?;
                Ok((value * area, jittered))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::sum(&values))
    }

    /// Monte-Carlo variant of [`Self::crofton_length`] with uniform samples.
    pub fn crofton_length_mc(&self, poly: &[SpherePoint]) -> Result<CroftonEstimate> {
        let n = self.quad.mc_samples;
        if poly.len() < 2 || n == 0 {
            return Ok(CroftonEstimate { length: 0.0, jittered: 0 });
        }
        let weight = 4.0 * PI / n as f64;
        let values = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = self.sample_rng(i);
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..TAU);
                let rho = (1.0 - z * z).sqrt();
                let x = Vec3::new(rho * phi.cos(), rho * phi.sin(), z);
                let (value, jittered) = self.count_at(&x, poly, &mut rng)?;
                Ok((value * weight, jittered))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::sum(&values))
    }

    fn sum(values: &[(f64, bool)]) -> CroftonEstimate {
        let mut out = CroftonEstimate { length: 0.0, jittered: 0 };
        for &(v, j) in values {
            out.length += v;
            out.jittered += j as usize;
        }
        out
    }

    /// Central-difference Hessians of `F²/2` and `F` in an orthonormal frame
    /// at `p`, step `fd_step · |v|`.
    pub fn hessian_f2(&self, p: &SpherePoint, v: &Vec3) -> Result<HessianReport> {
        let norm = self.point_norm(p)?;
        hessian_report(&norm, v, self.quad.fd_step)
    }

    /// `(θ, 1/F(p, t(θ)))` at `n` equispaced directions.
    pub fn indicatrix(&self, p: &SpherePoint, n: usize) -> Result<Vec<(f64, f64)>> {
        if n < 8 {
            return Err(Error::InvalidInput(format!("indicatrix needs at least 8 directions, got {n}")));
        }
        let norm = self.point_norm(p)?;
        let (e1, e2) = norm.frame();
        Ok((0..n)
            .map(|j| {
                let theta = TAU * j as f64 / n as f64;
                (theta, 1.0 / norm.eval(&rotate_in_frame(&e1, &e2, theta)))
            })
            .collect())
    }
}

/// Difference Hessians of a sampled norm at `v`.
pub fn hessian_report(norm: &PointNorm, v: &Vec3, fd_step: f64) -> Result<HessianReport> {
    let c = norm.coords(v);
    let r = c.norm();
    if r == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    let h = fd_step * r;
    if !(h > 1e3 * f64::EPSILON * r) {
        return Err(Error::StepUnderflow);
    }
    let f = |c: &Vec2| norm.planar().value(c);
    let energy = |c: &Vec2| 0.5 * f(c).powi(2);
    let fd = |g: &dyn Fn(&Vec2) -> f64| {
        let mut m = Matrix2::zeros();
        let e = [Vec2::new(h, 0.0), Vec2::new(0.0, h)];
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = (g(&(c + e[i] + e[j])) - g(&(c + e[i] - e[j])) - g(&(c - e[i] + e[j]))
                    + g(&(c - e[i] - e[j])))
                    / (4.0 * h * h);
            }
        }
        (m + m.transpose()) * 0.5
    };
    let he = fd(&energy);
    let hf = fd(&f);
    let ascending = |m: &Matrix2<f64>| {
        let eig = SymmetricEigen::new(*m);
        let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
        ([eig.eigenvalues[lo], eig.eigenvalues[hi]], eig.eigenvectors.column(lo).into_owned())
    };
    let (energy_eigenvalues, _) = ascending(&he);
    let (f_eigenvalues, k) = ascending(&hf);
    let (e1, e2) = norm.frame();
    Ok(HessianReport {
        frame: (e1, e2),
        energy: he,
        energy_eigenvalues,
        f: hf,
        f_eigenvalues,
        kernel: (e1 * k[0] + e2 * k[1]).normalize(),
    })
}
