//! Property tests for the quaternion, circle and path-geometry layers.

use circle_finsler::circle::{fit_circle, hopf_circle, ContactElement, SphereCircle, SpherePoint};
use circle_finsler::kappa::{
    big_x, fiber_through, fiber_through_from, lift, pi2_map, realize_circle, tangent_circle, FiberSolveSpec, KappaField,
};
use circle_finsler::quat::{Bivector, Quaternion, UnitQuaternion};
use circle_finsler::{Vec3, Vec4};
use proptest::prelude::*;

fn unit_quaternion() -> impl Strategy<Value = UnitQuaternion> {
    prop::array::uniform4(-1.0..1.0f64)
        .prop_filter("not too short", |a| a.iter().map(|x| x * x).sum::<f64>() > 0.01)
        .prop_map(|[w, x, y, z]| UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z)).unwrap())
}

fn unit_vector() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-1.0..1.0f64)
        .prop_filter("not too short", |a| a.iter().map(|x| x * x).sum::<f64>() > 0.01)
        .prop_map(|[x, y, z]| Vec3::new(x, y, z).normalize())
}

fn contact_element() -> impl Strategy<Value = ContactElement> {
    (unit_vector(), unit_vector())
        .prop_filter("independent", |(p, t)| p.cross(t).norm() > 0.1)
        .prop_map(|(p, t)| ContactElement::from_vectors(p, t).unwrap())
}

/// Admissible odd fields: linear part of norm < 0.6 plus a small cubic.
fn admissible_field() -> impl Strategy<Value = KappaField> {
    (unit_vector(), 0.0..0.6f64, prop::array::uniform4(-0.05..0.05f64))
        .prop_map(|(dir, a, cubic)| KappaField::linear_cubic([a * dir.x, a * dir.y, a * dir.z], &cubic).unwrap())
}

proptest! {
    #[test]
    fn sigma_is_a_homomorphism(a in unit_quaternion(), b in unit_quaternion()) {
        let lhs = (a * b).sigma();
        let rhs = a.sigma().matrix() * b.sigma().matrix();
        prop_assert!((lhs.matrix() - rhs).norm() < 1e-12);
    }

    #[test]
    fn sigma_round_trips_up_to_sign(q in unit_quaternion()) {
        let back = q.sigma().to_quaternion().to_vec4();
        let v = q.to_vec4();
        prop_assert!((back - v).norm() < 1e-10 || (back + v).norm() < 1e-10);
    }

    #[test]
    fn great_circles_project_to_frenet_circles(q in unit_quaternion(), kappa in -2.0..2.0f64, t in 0.0..3.0f64) {
        // σ(C(q, κ)(t)) is the moving frame (x, ẋ/|ẋ|, x × ẋ/|ẋ|).
        let h = 1e-6;
        let g = q.great_circle_point(kappa, t);
        let x = g.hopf();
        let dx = (q.great_circle_point(kappa, t + h).hopf() - q.great_circle_point(kappa, t - h).hopf()) / (2.0 * h);
        let speed = dx.norm();
        prop_assert!((speed - 2.0 / (1.0 + kappa * kappa).sqrt()).abs() < 1e-8);
        let frame = g.sigma();
        prop_assert!((frame.column(0) - x).norm() < 1e-12);
        prop_assert!((frame.column(1) - dx / speed).norm() < 1e-8);
        prop_assert!((frame.column(2) - x.cross(&(dx / speed))).norm() < 1e-8);
    }

    #[test]
    fn projected_circle_has_curvature_kappa(q in unit_quaternion(), kappa in -2.0..2.0f64) {
        let samples: Vec<SpherePoint> = (0..40)
            .map(|j| SpherePoint::new_normalize(q.great_circle_point(kappa, 0.07 * j as f64).hopf()).unwrap())
            .collect();
        let (fit, residual) = fit_circle(&samples).unwrap();
        prop_assert!(residual < 1e-10);
        prop_assert!(fit.distance(&hopf_circle(q, kappa)) < 1e-8);
        prop_assert!((fit.curvature() - kappa).abs() < 1e-7);
    }

    #[test]
    fn bivector_plane_round_trip(a in unit_quaternion(), b in unit_quaternion()) {
        let (a, b) = (a.to_vec4(), b.to_vec4());
        prop_assume!((a.dot(&b)).abs() < 0.95);
        let b: Vec4 = (b - a * a.dot(&b)).normalize();
        let bv = Bivector::from_plane(&a, &b).unwrap();
        prop_assert!(bv.is_plane());
        prop_assert!((bv.minus().norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        prop_assert!((bv.plus().norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let (c, d) = bv.to_plane().unwrap();
        let again = Bivector::from_plane(&c, &d).unwrap();
        prop_assert!(bv.0.iter().zip(again.0).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn fit_recovers_random_circles(axis in unit_vector(), radius in 0.1..3.0f64, start in 0.0..6.0f64) {
        let c = SphereCircle::new(SpherePoint::new(axis).unwrap(), radius).unwrap();
        let samples: Vec<SpherePoint> = (0..12).map(|j| c.point(start + 0.2 * j as f64)).collect();
        let (fit, _) = fit_circle(&samples).unwrap();
        prop_assert!(fit.distance(&c) < 1e-9);
    }

    #[test]
    fn tangent_circles_touch_their_element(field in admissible_field(), e in contact_element()) {
        let tc = tangent_circle(&field, &e, &FiberSolveSpec::default()).unwrap();
        prop_assert!(tc.circle.level(&e.p()).abs() < 1e-9);
        prop_assert!((tc.circle.tangent_at(&e.p()).unwrap() - e.tangent()).norm() < 1e-9);
        prop_assert!((tc.circle.axis() - tc.axis).norm() < 1e-9);
    }

    #[test]
    fn fixed_point_is_unique(field in admissible_field(), q in unit_quaternion(), start in unit_vector()) {
        let spec = FiberSolveSpec::default();
        let a = fiber_through(&field, q, &spec).unwrap();
        let b = fiber_through_from(&field, q, start, &spec).unwrap();
        // Both are within tolerance/(1 - ratio) of the fixed point.
        prop_assert!((a.axis - b.axis).norm() < 10.0 * spec.tolerance);
    }

    #[test]
    fn iteration_contracts(q in unit_quaternion(), a in 0.1..0.9f64) {
        let field = KappaField::linear([0.0, 0.0, a]);
        let fixed = fiber_through(&field, q, &FiberSolveSpec { tolerance: 1e-15, max_iterations: 1000 }).unwrap().axis;
        let mut x = big_x(q, 0.0);
        let mut err = (x - fixed).norm();
        for _ in 0..5 {
            x = big_x(q, field.eval(&x));
            let next = (x - fixed).norm();
            if err > 1e-12 {
                prop_assert!(next <= (1.0 - (1.0 - a) / 2.0) * err + 1e-14);
            }
            err = next;
        }
    }

    #[test]
    fn pi2_is_antipodal_under_reversal(field in admissible_field(), p in unit_vector(), theta in 0.0..6.3f64) {
        let spec = FiberSolveSpec::default();
        let a = pi2_map(&field, &p, theta, &spec).unwrap();
        let b = pi2_map(&field, &p, theta + std::f64::consts::PI, &spec).unwrap();
        prop_assert!((a + b).norm() < 1e-9);
    }

    #[test]
    fn realized_circles_round_trip(field in admissible_field(), x in unit_vector(), s in 0.0..6.0f64) {
        let c = realize_circle(&field, &x).unwrap();
        let back = tangent_circle(&field, &c.contact(s), &FiberSolveSpec::default()).unwrap();
        prop_assert!((back.axis - x).norm() < 1e-9);
        let opposite = realize_circle(&field, &-x).unwrap();
        prop_assert!(c.distance(&opposite.reversed()) < 1e-9);
    }

    #[test]
    fn lift_reproduces_the_element(e in contact_element()) {
        let q = lift(&e);
        prop_assert!((q.hopf() - e.p()).norm() < 1e-12);
        prop_assert!((q.hopf_tangent() - e.tangent()).norm() < 1e-12);
    }
}
