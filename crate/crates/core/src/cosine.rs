//! Cosine transforms of densities on a circle of directions.
//!
//! A density `rho(θ)` sampled at `N` equispaced angles is replaced by its
//! trigonometric interpolant, and `∫₀^{2π} |cos(θ - α)| rho(θ) dθ` is then
//! integrated exactly term by term. Only even harmonics survive, with
//! `∫ |cos φ| cos kφ dφ = 4 (-1)^{k/2} / (1 - k²)`. Compared to the
//! trapezoid rule on the kinked integrand this is smooth in `α`, so
//! the resulting norm can be differentiated.

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::{Error, Result, Vec2};

/// `∫₀^{2π} |cos φ| cos kφ dφ`.
pub fn abs_cos_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let sign = if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    4.0 * sign / (1.0 - (k * k) as f64)
}

/// `α ↦ ∫ |cos(θ - α)| rho(θ) dθ` for a band-limited `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineTransform {
    mean: f64,
    /// `(k, J_k a_k, J_k b_k)` for even `k ≥ 2`.
    terms: Vec<(f64, f64, f64)>,
}

impl CosineTransform {
    /// Builds the transform from samples `rho(2π j / N)`, `j = 0..N`.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 4 {
            return Err(Error::InvalidInput(format!("need at least 4 fiber samples, got {n}")));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput("non-finite fiber sample".into()));
        }
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&s| Complex::new(s, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let mean = buf[0].re * scale;
        let terms = (2..=n / 2)
            .step_by(2)
            .map(|k| {
                let c = buf[k] * scale;
                let j = abs_cos_moment(k);
                if 2 * k == n {
                    (k as f64, j * c.re, 0.0)
                } else {
                    (k as f64, 2.0 * j * c.re, -2.0 * j * c.im)
                }
            })
            .collect();
        Ok(Self { mean, terms })
    }

    /// Average of the density over the circle.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn value(&self, alpha: f64) -> f64 {
        self.derivatives(alpha)[0]
    }

    /// The transform and its first two derivatives in `α`.
    pub fn derivatives(&self, alpha: f64) -> [f64; 3] {
        let mut out = [abs_cos_moment(0) * self.mean, 0.0, 0.0];
        for &(k, a, b) in &self.terms {
            let (s, c) = (k * alpha).sin_cos();
            out[0] += a * c + b * s;
            out[1] += k * (b * c - a * s);
            out[2] -= k * k * (a * c + b * s);
        }
        out
    }
}

/// Norm on a plane, `F(c) = |c| h(arg c + phase)` with `h` a cosine transform.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarNorm {
    transform: CosineTransform,
    phase: f64,
}

impl PlanarNorm {
    pub fn new(transform: CosineTransform, phase: f64) -> Self {
        Self { transform, phase }
    }

    /// Samples `rho` at `N` equispaced angles of `[0, 2π)`.
    pub fn from_density(n: usize, phase: f64, mut rho: impl FnMut(f64) -> Result<f64>) -> Result<Self> {
        let samples = (0..n).map(|j| rho(TAU * j as f64 / n as f64)).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(CosineTransform::from_samples(&samples)?, phase))
    }

    pub fn transform(&self) -> &CosineTransform {
        &self.transform
    }

    pub fn value(&self, c: &Vec2) -> f64 {
        let r = c.norm();
        if r == 0.0 {
            return 0.0;
        }
        r * self.transform.value(c.y.atan2(c.x) + self.phase)
    }

    /// Gradient of `F`; zero at the origin.
    pub fn gradient(&self, c: &Vec2) -> Vec2 {
        let r = c.norm();
        if r == 0.0 {
            return Vec2::zeros();
        }
        let phi = c.y.atan2(c.x);
        let [h, dh, _] = self.transform.derivatives(phi + self.phase);
        let (s, co) = phi.sin_cos();
        Vector2::new(co, s) * h + Vector2::new(-s, co) * dh
    }

    /// Hessian of `F`, `(h + h'')/r e_φ e_φᵀ`.
    pub fn hessian(&self, c: &Vec2) -> Result<Matrix2<f64>> {
        let r = c.norm();
        if r == 0.0 {
            return Err(Error::ZeroVelocity);
        }
        let phi = c.y.atan2(c.x);
        let [h, _, d2h] = self.transform.derivatives(phi + self.phase);
        let (s, co) = phi.sin_cos();
        let e = Vector2::new(-s, co);
        Ok(e * e.transpose() * ((h + d2h) / r))
    }

    /// `E = F²/2` with gradient and Hessian.
    pub fn energy(&self, c: &Vec2) -> Result<(f64, Vec2, Matrix2<f64>)> {
        let f = self.value(c);
        let g = self.gradient(c);
        let h = self.hessian(c)?;
        Ok((0.5 * f * f, g * f, g * g.transpose() + h * f))
    }
}
