//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion; exits nonzero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::Command;
use std::time::Instant;

use circle_finsler::circle::{fit_circle, hopf_circle, tangent_frame, SpherePoint};
use circle_finsler::geodesic::{
    circle_deviation, geodesic_from_contact, local_minimality_check, random_contact_elements, recover_measure,
    GeodesicSpec,
};
use circle_finsler::hyperbolic::{conformal_divergence, finsler_f_h, hyp_frame, HorocycleWeight, HypPoint, HypTangent};
use circle_finsler::kappa::{admissibility, fiber_through, pi2_map, tangent_circle, KappaField};
use circle_finsler::metric::{metric_solve_spec, CircleMetric, MeasureDensity, QuadratureSpec};
use circle_finsler::quat::{Quaternion, UnitQuaternion};
use circle_finsler::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..TAU);
    let r = (1.0 - z * z).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

fn unit_quaternion(rng: &mut ChaCha8Rng) -> UnitQuaternion {
    loop {
        let q = Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if let Ok(u) = UnitQuaternion::new_normalize(q) {
            if q.norm() > 0.1 {
                return u;
            }
        }
    }
}

fn tangent_at(rng: &mut ChaCha8Rng, p: &Vec3) -> Vec3 {
    let (e1, e2) = tangent_frame(p);
    let a: f64 = rng.gen_range(0.0..TAU);
    e1 * a.cos() + e2 * a.sin()
}

fn round_metric() -> CircleMetric {
    CircleMetric::new(KappaField::zero(), MeasureDensity::Constant(1.0), QuadratureSpec::default()).unwrap()
}

/// `κ = 0.5 x₃`, `m = 1`.
fn config_a() -> CircleMetric {
    CircleMetric::new(KappaField::linear([0.0, 0.0, 0.5]), MeasureDensity::Constant(1.0), QuadratureSpec::default())
        .unwrap()
}

/// `κ = 0.3 x₁ + 0.2 x₃`, `m` the even part of `1 + 0.2 x₂`.
fn config_b() -> CircleMetric {
    let m = MeasureDensity::linear(1.0, Vec3::y(), 0.2).unwrap();
    CircleMetric::new(
        KappaField::linear([0.3, 0.0, 0.2]),
        MeasureDensity::EvenPart(Box::new(m)),
        QuadratureSpec::default(),
    )
    .unwrap()
}

fn random_polyline(rng: &mut ChaCha8Rng) -> Vec<SpherePoint> {
    let mut x = unit_vector(rng);
    let mut heading: f64 = rng.gen_range(0.0..TAU);
    let mut out = vec![SpherePoint::new(x).unwrap()];
    for _ in 0..rng.gen_range(3..8) {
        heading += rng.gen_range(-1.0..1.0);
        let (e1, e2) = tangent_frame(&x);
        let dir = e1 * heading.cos() + e2 * heading.sin();
        let step: f64 = rng.gen_range(0.1..0.6);
        x = (x * step.cos() + dir * step.sin()).normalize();
        out.push(SpherePoint::new_normalize(x).unwrap());
    }
    out
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn round_case_constant() -> Check {
    let m = round_metric();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p = unit_vector(&mut rng);
        let v = tangent_at(&mut rng, &p) * rng.gen_range(0.1..5.0);
        let f = m.finsler_f(&SpherePoint::new(p).unwrap(), &v).map_err(|e| e.to_string())?;
        worst = worst.max((f / v.norm() - 4.0).abs() / 4.0);
    }
    let equator: Vec<SpherePoint> = (0..=64)
        .map(|j| {
            let t = TAU * j as f64 / 64.0;
            SpherePoint::new(Vec3::new(t.cos(), t.sin(), 0.0)).unwrap()
        })
        .collect();
    let crofton = m.crofton_length(&equator).map_err(|e| e.to_string())?.length;
    let gap = (crofton - 8.0 * PI).abs() / (8.0 * PI);
    ensure(
        worst < 5e-3 && gap < 1e-2,
        format!("max |F/|v| - 4|/4 = {worst:.2e} (< 5e-3), equator crofton {crofton:.6} vs 8π, rel {gap:.2e} (< 1e-2)"),
    )
}

fn crofton_consistency() -> Check {
    let mut worst = 0.0f64;
    for (seed, m) in [(2, config_a()), (3, config_b())] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let poly = random_polyline(&mut rng);
            let f = m.finsler_length(&poly).map_err(|e| e.to_string())?;
            let c = m.crofton_length(&poly).map_err(|e| e.to_string())?.length;
            worst = worst.max((f - c).abs() / c);
        }
    }
    ensure(worst < 1e-2, format!("max relative gap over 20 polylines {worst:.2e} (< 1e-2)"))
}

fn geodesics_are_circles() -> Check {
    let spec = GeodesicSpec::default();
    let mut worst = 0.0f64;
    let mut min_excess = f64::INFINITY;
    let mut all_minimal = true;
    for (seed, m) in [(4, config_a()), (5, config_b())] {
        for e in random_contact_elements(20, seed) {
            let trace = geodesic_from_contact(&m, &e, 1.0, &spec).map_err(|e| e.to_string())?;
            let circle = tangent_circle(m.field(), &e, m.solve_spec()).map_err(|e| e.to_string())?.circle;
            worst = worst.max(circle_deviation(&trace.points, &circle));
        }
        let e0 = random_contact_elements(1, seed + 100)[0];
        let report = local_minimality_check(&m, &e0, 0.5, 20, seed, 0.02).map_err(|e| e.to_string())?;
        all_minimal &= report.passed;
        min_excess = min_excess.min(report.min_excess());
    }
    ensure(
        worst < 1e-3 && all_minimal,
        format!("max deviation {worst:.2e} (< 1e-3) over 40 traces, minimality K=20 passed={all_minimal}, min excess {min_excess:.2e}"),
    )
}

fn quadratic_convexity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut min_energy, mut worst_kernel, mut worst_align, mut min_pos) =
        (f64::INFINITY, 0.0f64, 0.0f64, f64::INFINITY);
    for m in [config_a(), config_b()] {
        for _ in 0..25 {
            let p = unit_vector(&mut rng);
            let v = tangent_at(&mut rng, &p) * rng.gen_range(0.5..2.0);
            let r = m.hessian_f2(&SpherePoint::new(p).unwrap(), &v).map_err(|e| e.to_string())?;
            min_energy = min_energy.min(r.energy_eigenvalues[0]);
            worst_kernel = worst_kernel.max(r.f_eigenvalues[0].abs() / r.f_eigenvalues[1]);
            worst_align = worst_align.max(1.0 - r.kernel.dot(&v.normalize()).abs());
            min_pos = min_pos.min(r.f_eigenvalues[1]);
        }
    }
    ensure(
        min_energy > 0.0 && worst_kernel < 1e-2 && worst_align < 1e-3 && min_pos > 0.0,
        format!(
            "50 samples: min eig of Hess(F²/2) {min_energy:.3e} (> 0), kernel eig / other {worst_kernel:.2e} (< 1e-2), \
             1 - |kernel·v| {worst_align:.2e} (< 1e-3), min positive eig {min_pos:.3e}"
        ),
    )
}

fn admissibility_boundary() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    let spec = metric_solve_spec();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_pi2 = 0.0f64;
    for a in [0.25, 0.5, 0.75] {
        let field = KappaField::linear([0.0, 0.0, a]);
        let report = admissibility(&field, 5);
        ok &= report.ok && (report.margin - (1.0 - a)).abs() < 1e-3;
        notes.push(format!("a={a}: margin {:.6}", report.margin));
        for _ in 0..20 {
            ok &= fiber_through(&field, unit_quaternion(&mut rng), &spec).is_ok();
            let p = unit_vector(&mut rng);
            let theta: f64 = rng.gen_range(0.0..TAU);
            let x = pi2_map(&field, &p, theta, &spec).map_err(|e| e.to_string())?;
            let y = pi2_map(&field, &p, theta + PI, &spec).map_err(|e| e.to_string())?;
            worst_pi2 = worst_pi2.max((x + y).norm());
        }
    }
    let fails = !admissibility(&KappaField::linear([0.0, 0.0, 2.0]), 5).ok;
    ok &= fails && worst_pi2 < 1e-9;
    notes.push(format!("a=2 rejected={fails}, fiber solves converged, max |π₂(θ+π) + π₂(θ)| {worst_pi2:.1e} (< 1e-9)"));
    ensure(ok, notes.join(", "))
}

fn hopf_projection() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut curv, mut speed, mut frenet) = (0.0f64, 0.0f64, 0.0f64);
    let h = 1e-5;
    for kappa in [0.0, 0.5, -0.5, 1.0, -1.0, 2.0] {
        for _ in 0..10 {
            let q = unit_quaternion(&mut rng);
            let samples: Vec<SpherePoint> = (0..40)
                .map(|j| SpherePoint::new_normalize(q.great_circle_point(kappa, 0.1 * j as f64).hopf()).unwrap())
                .collect();
            let (fit, _) = fit_circle(&samples).map_err(|e| e.to_string())?;
            curv = curv.max((fit.curvature() - kappa).abs());
            curv = curv.max(fit.distance(&hopf_circle(q, kappa)));
            for t in [0.0, 0.7, 2.3] {
                let g = q.great_circle_point(kappa, t);
                let x = g.hopf();
                let dx =
                    (q.great_circle_point(kappa, t + h).hopf() - q.great_circle_point(kappa, t - h).hopf()) / (2.0 * h);
                speed = speed.max((dx.norm() - 2.0 / (1.0 + kappa * kappa).sqrt()).abs());
                let v = dx.normalize();
                let s = g.sigma();
                frenet = frenet
                    .max((s.column(0) - x).norm())
                    .max((s.column(1) - v).norm())
                    .max((s.column(2) - x.cross(&v)).norm());
            }
        }
    }
    ensure(
        curv < 1e-4 && speed < 1e-6 && frenet < 1e-8,
        format!("60 circles: curvature err {curv:.1e} (< 1e-4), speed err {speed:.1e} (< 1e-6), frame err {frenet:.1e} (< 1e-8)"),
    )
}

fn measure_roundtrip() -> Check {
    let spec = GeodesicSpec::default();
    let quad = QuadratureSpec::default();
    let cases = [
        ("round", KappaField::zero(), MeasureDensity::Constant(1.0)),
        ("κ=0.5x₃", KappaField::linear([0.0, 0.0, 0.5]), MeasureDensity::Constant(1.0)),
        ("m=1+0.3x₃", KappaField::zero(), MeasureDensity::linear(1.0, Vec3::z(), 0.3).unwrap()),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, field, measure) in cases {
        let m = CircleMetric::new(field, measure, quad).map_err(|e| e.to_string())?;
        let err = recover_measure(&m, 4, &spec).map_err(|e| e.to_string())?.max_relative_error(&m);
        ok &= err < 2e-2;
        notes.push(format!("{name} {err:.2e}"));
    }
    ensure(ok, format!("level-4 max relative error: {} (< 2e-2)", notes.join(", ")))
}

fn hyperbolic_horocycles() -> Check {
    let n = QuadratureSpec::default().n_theta;
    let unit = HorocycleWeight::unit();
    let err = |e: circle_finsler::Error| e.to_string();
    let apex = HypTangent::new(HypPoint::apex(), Vec3::x()).map_err(err)?;
    let c0 = finsler_f_h(&unit, &apex.point(), &apex.vec(), n).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut boost, mut ratio) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let rapidity: f64 = rng.gen_range(0.0..2.0);
        let angle: f64 = rng.gen_range(0.0..TAU);
        let dir: f64 = rng.gen_range(0.0..TAU);
        let x = HypPoint::new_normalize(Vec3::new(
            rapidity.sinh() * angle.cos(),
            rapidity.sinh() * angle.sin(),
            rapidity.cosh(),
        ))
        .map_err(err)?;
        let (a, b) = hyp_frame(&x);
        let t = HypTangent::new_normalize(x, a * dir.cos() + b * dir.sin()).map_err(err)?;
        let f = finsler_f_h(&unit, &t.point(), &t.vec(), n).map_err(err)?;
        let f2 = finsler_f_h(&HorocycleWeight::Xi3, &t.point(), &t.vec(), n).map_err(err)?;
        boost = boost.max((f - c0).abs() / c0);
        let x3 = t.point().vec().z;
        ratio = ratio.max((f2 / f - x3).abs() / x3);
    }
    let spec = GeodesicSpec::default();
    let divergence = conformal_divergence(HorocycleWeight::Xi3, &apex, 1.0, n, &spec).map_err(err)?;
    let control = conformal_divergence(unit, &apex, 1.0, n, &spec).map_err(err)?;
    let c0_err = (c0 - 4.0).abs();
    ensure(
        c0_err < 1e-3 && boost < 1e-3 && ratio < 1e-3 && divergence > 1e-2 && control < 1e-6,
        format!(
            "c0 {c0:.9} (|c0 - 4| < 1e-3), boost spread {boost:.1e} (< 1e-3), max |F₂/F - x₃|/x₃ {ratio:.1e} (< 1e-3), \
             divergence {divergence:.4} (> 1e-2), control {control:.1e} (< 1e-6)"
        ),
    )
}

fn determinism() -> Check {
    let linear = ["--set", "kappa.family=linear", "--set", "kappa.coefficients=[0.3, 0, 0.2]"];
    let runs: Vec<Vec<&str>> = vec![
        vec!["validate"],
        vec!["metric", "--point", "0.2,-0.4,0.9", "--indicatrix", "32"],
        vec!["crofton-check", "--curve", "random"],
        vec!["crofton-check", "--oracle", "mc", "--set", "quadrature.mc_samples=4000"],
        vec!["geodesic", "--point", "1,0,0", "--tangent", "0,1,0.2", "--time", "0.3", "--set", "quadrature.n_theta=64"],
        vec!["roundtrip", "--grid-level", "2", "--set", "quadrature.n_theta=64"],
        vec!["hyperbolic", "--weight", "xi3", "--time", "0.3", "--set", "quadrature.n_theta=64"],
        vec!["fibration-export", "--grid-level", "3"],
    ];
    let mut mismatched = Vec::new();
    for args in &runs {
        let outputs: Vec<Vec<u8>> = ["1", "4", "8"]
            .iter()
            .map(|threads| {
                let out = Command::new(env!("CARGO_BIN_EXE_circfin"))
                    .args(args)
                    .args(linear)
                    .args(["--set", "seed=17", "--threads", threads])
                    .output()
                    .expect("binary runs");
                let mut bytes = out.status.code().unwrap_or(-1).to_le_bytes().to_vec();
                bytes.extend(out.stdout);
                bytes
            })
            .collect();
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            mismatched.push(args[0]);
        }
    }
    ensure(mismatched.is_empty(), format!("{} commands under 1/4/8 threads, mismatches: {:?}", runs.len(), mismatched))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("round-case constant", round_case_constant),
        ("Crofton consistency", crofton_consistency),
        ("geodesics are the circles", geodesics_are_circles),
        ("quadratic convexity", quadratic_convexity),
        ("admissibility boundary", admissibility_boundary),
        ("Hopf projection", hopf_projection),
        ("measure recovery", measure_roundtrip),
        ("hyperbolic horocycles", hyperbolic_horocycles),
        ("determinism", determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("criterion {} {name}: PASS ({msg}) [{secs:.1} s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({msg}) [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
