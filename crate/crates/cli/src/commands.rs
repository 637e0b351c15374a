use std::f64::consts::TAU;
use std::fmt::Write as _;

use circle_finsler::circle::{great_arc, ContactElement, SpherePoint};
use circle_finsler::geodesic::{circle_deviation, geodesic_trace, recover_measure};
use circle_finsler::grid::IcoGrid;
use circle_finsler::hyperbolic::{conformal_divergence, finsler_f_h, hyp_frame, HorocycleWeight, HypPoint, HypTangent};
use circle_finsler::kappa::{admissibility, f_kappa, realize_circle, tangent_circle};
use circle_finsler::metric::CircleMetric;
use circle_finsler::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::format::{num, round, round3, row};
use crate::CliError;

/// Text to print and whether the command's check passed.
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, passed: true }
    }
}

pub fn validate(config: &RunConfig) -> Result<Outcome, CliError> {
    let report = admissibility(&config.kappa_field()?, config.quadrature.sphere_grid_level);
    let mut text = config.header();
    text.push_str("ok,margin,worst_x,worst_y,worst_z\n");
    let w = report.worst_point;
    let _ = write!(text, "{},{}", report.ok, row(&[report.margin, w.x, w.y, w.z]));
    Ok(Outcome { text, passed: report.ok })
}

/// Builds the metric after checking admissibility.
fn admissible_metric(config: &RunConfig) -> Result<CircleMetric, CliError> {
    let field = config.kappa_field()?;
    let report = admissibility(&field, config.quadrature.sphere_grid_level);
    if !report.ok {
        let w = report.worst_point;
        return Err(CliError::Inadmissible(format!(
            "margin {} at ({}, {}, {})",
            num(report.margin),
            num(w.x),
            num(w.y),
            num(w.z)
        )));
    }
    config.metric()
}

pub enum MetricQuery {
    Value(Vec3),
    Indicatrix(usize),
}

pub fn metric(config: &RunConfig, p: Vec3, query: MetricQuery) -> Result<Outcome, CliError> {
    let metric = admissible_metric(config)?;
    let p = SpherePoint::new_normalize(p)?;
    let mut text = config.header();
    match query {
        MetricQuery::Value(v) => {
            let f = metric.sample(&p, &v)?.f;
            text.push_str("f\n");
            text.push_str(&row(&[f]));
        }
        MetricQuery::Indicatrix(n) => {
            text.push_str("theta,radius\n");
            for (theta, r) in metric.indicatrix(&p, n)? {
                text.push_str(&row(&[theta, r]));
            }
        }
    }
    Ok(Outcome::ok(text))
}

pub enum Curve {
    Equator,
    /// Seeded random walk of short great arcs.
    Random,
    Points(Vec<Vec3>),
}

const WALK_VERTICES: usize = 8;
const WALK_STEP: f64 = 0.3;

/// Short seeded random walk on the sphere.
pub fn random_polyline(seed: u64) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..TAU);
    let r = (1.0 - z * z).sqrt();
    let mut x = Vec3::new(r * phi.cos(), r * phi.sin(), z);
    let mut heading: f64 = rng.gen_range(0.0..TAU);
    let mut out = vec![SpherePoint::new_normalize(x).expect("unit start")];
    for _ in 1..WALK_VERTICES {
        heading += rng.gen_range(-1.0..1.0);
        let (e1, e2) = circle_finsler::circle::tangent_frame(&x);
        let dir = e1 * heading.cos() + e2 * heading.sin();
        let step = WALK_STEP * rng.gen_range(0.5..1.5);
        x = (x * step.cos() + dir * step.sin()).normalize();
        out.push(SpherePoint::new_normalize(x).expect("unit step"));
    }
    out
}

fn equator() -> Vec<SpherePoint> {
    (0..=64)
        .map(|j| {
            let t = TAU * j as f64 / 64.0;
            SpherePoint::new_normalize(Vec3::new(t.cos(), t.sin(), 0.0)).expect("unit")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Oracle {
    Grid,
    MonteCarlo,
}

pub fn crofton_check(config: &RunConfig, curve: Curve, oracle: Oracle, threshold: f64) -> Result<Outcome, CliError> {
    let metric = admissible_metric(config)?;
    let poly = match curve {
        Curve::Equator => equator(),
        Curve::Random => random_polyline(config.seed),
        Curve::Points(points) => {
            let poly = points.into_iter().map(SpherePoint::new_normalize).collect::<Result<Vec<_>, _>>()?;
            if poly.len() < 2 {
                return Err(CliError::Usage("a curve needs at least two points".into()));
            }
            for w in poly.windows(2) {
                if great_arc(&w[0].vec(), &w[1].vec()).is_none() && w[0].vec().dot(&w[1].vec()) < 0.0 {
                    return Err(CliError::Usage("consecutive curve points are antipodal".into()));
                }
            }
            poly
        }
    };
    let finsler = metric.finsler_length(&poly)?;
    let crofton = match oracle {
        Oracle::Grid => metric.crofton_length(&poly)?,
        Oracle::MonteCarlo => metric.crofton_length_mc(&poly)?,
    };
    let gap = (finsler - crofton.length).abs() / crofton.length;
    let mut text = config.header();
    text.push_str("finsler_length,crofton_length,relative_gap,jittered\n");
    text.push_str(&row(&[finsler, crofton.length, gap, crofton.jittered as f64]));
    Ok(Outcome { text, passed: gap < threshold })
}

pub fn geodesic(config: &RunConfig, p: Vec3, t: Vec3, time: f64) -> Result<Outcome, CliError> {
    if !(time > 0.0 && time.is_finite()) {
        return Err(CliError::Usage(format!("time must be positive, got {time}")));
    }
    let metric = admissible_metric(config)?;
    let e = ContactElement::from_vectors(p, t)?;
    let trace = geodesic_trace(&metric, &e.point(), &e.tangent(), time, &config.geodesic_spec())?;
    let circle = tangent_circle(metric.field(), &e, metric.solve_spec())?.circle;
    let mut text = config.header();
    text.push_str("t,x,y,z,f\n");
    for ((s, x), f) in trace.times.iter().zip(&trace.points).zip(&trace.f_values) {
        text.push_str(&row(&[*s, x.x, x.y, x.z, *f]));
    }
    let _ = writeln!(text, "# deviation = {}", num(circle_deviation(&trace.points, &circle)));
    let _ = writeln!(text, "# max_drift = {}", num(trace.max_drift()));
    let _ = writeln!(text, "# circle_axis = {}", row(circle.axis().as_slice()).trim_end());
    let _ = writeln!(text, "# circle_radius = {}", num(circle.radius()));
    Ok(Outcome::ok(text))
}

pub fn roundtrip(config: &RunConfig, grid_level: u32, threshold: f64) -> Result<Outcome, CliError> {
    let metric = admissible_metric(config)?;
    let recovered = recover_measure(&metric, grid_level, &config.geodesic_spec())?;
    let even = metric.measure().even_part();
    let mut text = config.header();
    text.push_str("x,y,z,m,m_even,m_hat,rel_err\n");
    let mut max = 0.0f64;
    for s in &recovered.samples {
        let m_even = even.eval(&s.x);
        let err = s.relative_error(m_even);
        max = max.max(err);
        text.push_str(&row(&[s.x.x, s.x.y, s.x.z, s.m, m_even, s.m_hat, err]));
    }
    let _ = writeln!(text, "# max_rel_err = {}", num(max));
    Ok(Outcome { text, passed: max < threshold })
}

const RATIO_SAMPLES: usize = 20;

/// Seeded point of `H²` with hyperbolic distance below 1.5 from the apex, and
/// a unit tangent there.
fn random_hyp_tangent(rng: &mut ChaCha8Rng) -> Result<HypTangent, CliError> {
    let rapidity: f64 = rng.gen_range(0.0..1.5);
    let angle: f64 = rng.gen_range(0.0..TAU);
    let dir: f64 = rng.gen_range(0.0..TAU);
    let x = HypPoint::new_normalize(Vec3::new(
        rapidity.sinh() * angle.cos(),
        rapidity.sinh() * angle.sin(),
        rapidity.cosh(),
    ))?;
    let (a, b) = hyp_frame(&x);
    Ok(HypTangent::new_normalize(x, a * dir.cos() + b * dir.sin())?)
}

pub fn hyperbolic(config: &RunConfig, weight: HorocycleWeight, time: f64) -> Result<Outcome, CliError> {
    if !(time > 0.0 && time.is_finite()) {
        return Err(CliError::Usage(format!("time must be positive, got {time}")));
    }
    let n = config.quadrature.n_theta;
    let apex = HypTangent::new(HypPoint::apex(), Vec3::x())?;
    let mut text = config.header();
    text.push_str("quantity,x1,x2,x3,value\n");
    let c0 = finsler_f_h(&weight, &apex.point(), &apex.vec(), n)?;
    let _ = write!(text, "c0,{}", row(&[0.0, 0.0, 1.0, c0]));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let samples: Vec<HypTangent> =
        (0..RATIO_SAMPLES).map(|_| random_hyp_tangent(&mut rng)).collect::<Result<_, _>>()?;
    let ratios = samples
        .par_iter()
        .map(|t| {
            let f = finsler_f_h(&weight, &t.point(), &t.vec(), n)?;
            let base = finsler_f_h(&HorocycleWeight::unit(), &t.point(), &t.vec(), n)?;
            Ok(f / base)
        })
        .collect::<Result<Vec<f64>, circle_finsler::Error>>()?;
    for (t, ratio) in samples.iter().zip(ratios) {
        let x = t.point().vec();
        let _ = write!(text, "ratio,{}", row(&[x.x, x.y, x.z, ratio]));
    }
    let divergence = conformal_divergence(weight, &apex, time, n, &config.geodesic_spec())?;
    let _ = write!(text, "divergence,{}", row(&[0.0, 0.0, 1.0, divergence]));
    Ok(Outcome::ok(text))
}

#[derive(Serialize)]
struct ConfigRecord<'a> {
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct CircleRecord {
    index: usize,
    x_hat: [f64; 3],
    axis: [f64; 3],
    radius: f64,
    kappa: f64,
    f_kappa: [f64; 3],
}

pub fn fibration_export(config: &RunConfig, grid_level: u32) -> Result<Outcome, CliError> {
    let metric = admissible_metric(config)?;
    let field = metric.field();
    let grid = IcoGrid::new(grid_level);
    let records = grid
        .vertices()
        .par_iter()
        .enumerate()
        .map(|(index, x)| {
            let circle = realize_circle(field, x)?;
            Ok(CircleRecord {
                index,
                x_hat: round3(x),
                axis: round3(&circle.axis()),
                radius: round(circle.radius()),
                kappa: round(field.eval(x)),
                f_kappa: round3(&f_kappa(field, x)),
            })
        })
        .collect::<Result<Vec<_>, circle_finsler::Error>>()?;
    let mut text = serde_json::to_string(&ConfigRecord { config }).expect("config serializes");
    text.push('\n');
    for r in &records {
        text.push_str(&serde_json::to_string(r).expect("record serializes"));
        text.push('\n');
    }
    Ok(Outcome::ok(text))
}
