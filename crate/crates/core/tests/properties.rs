use petalstar::parametrize::ModelPoint;
use petalstar::star::StarGeometry;
use petalstar::{Point, Rational, Representative, C64};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn negating_the_shift_conjugates_by_minus_identity(lr in 0.1f64..0.95, lt in 0.0f64..std::f64::consts::TAU, ar in -4.0f64..4.0, ai in -4.0f64..4.0, zr in -3.0f64..3.0, zi in -3.0f64..3.0) {
        let lambda = C64::from_polar(lr, lt);
        let shift = C64::new(ar, ai);
        let g = Representative::rational(lambda, shift);
        let h = Representative::rational(lambda, -shift);
        prop_assert!((g.sigma() - h.sigma()).norm() < 1e-9 * g.sigma().norm().max(1.0));
        let z = C64::new(zr, zi);
        prop_assume!(z.norm() > 1e-3);
        let lhs = h.apply(Point::new(-z));
        let rhs = g.apply(Point::new(z));
        prop_assert!(lhs.chordal(&Point::new(-rhs.to_complex())) < 1e-9);
    }

    #[test]
    fn model_points_identify_w_with_its_reflection(lr in 0.1f64..0.95, lt in 0.0f64..std::f64::consts::TAU, wr in -5.0f64..5.0, wi in -5.0f64..5.0) {
        let lambda = C64::from_polar(lr, lt);
        let w = C64::new(wr, wi);
        prop_assume!(w.norm() > 1e-3);
        let a = ModelPoint::canonical(w, lambda);
        let b = ModelPoint::canonical(lambda * lambda / w, lambda);
        prop_assert!(a.distance(&b) < 1e-9 * a.w.norm().max(1.0));
        prop_assert!(a.w.norm() >= lambda.norm() * (1.0 - 1e-12));
    }

    #[test]
    fn strip_height_and_radius_are_reciprocal(r in 0.3f64..0.99, t in -1.0f64..1.0, which in 0usize..3) {
        let pq: Rational = ["1/2", "1/3", "2/5"][which].parse().unwrap();
        let lambda = pq.omega() * C64::from_polar(r, t * 0.5);
        let g = StarGeometry::new(pq, lambda, None).unwrap();
        let q = pq.q() as f64;
        // m r = pi / q^2.
        prop_assert!((g.height * g.r_lambda - std::f64::consts::PI / (q * q)).abs() < 1e-9);
    }
}
