//! Values checked against independent computations kept in this file.

use petalstar::experiments::{run_sequence, RunOptions, Schedule, SchedulePreset, Verdict};
use petalstar::linearize::{CriticalChoice, KoenigsChart};
use petalstar::star::{self, StarGeometry};
use petalstar::{FatouAtlas, Point, Rational, Representative, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `lim lambda^-n P^n(z)`, stopped once the orbit is tiny.
fn raw_koenigs_polynomial(lambda: C64, z: C64) -> C64 {
    let mut w = z;
    let mut scale = c(1.0, 0.0);
    while w.norm() > 1e-13 {
        w = lambda * w + w * w;
        scale *= lambda;
        assert!(w.norm() < 10.0, "orbit escaped");
    }
    w / scale
}

#[test]
fn koenigs_matches_the_limit_formula() {
    for lambda in [c(0.5, 0.0), c(0.0, 0.6), c(-0.3, 0.4)] {
        let chart = KoenigsChart::build(&Representative::polynomial(lambda), CriticalChoice::First).unwrap();
        let norm = raw_koenigs_polynomial(lambda, -lambda / 2.0);
        for z in [c(0.1, 0.05), c(-0.2, 0.15), c(0.05, -0.3)] {
            let expected = raw_koenigs_polynomial(lambda, z) / norm;
            let got = chart.value(Point::new(z)).unwrap();
            assert!((got - expected).norm() < 1e-9, "lambda {lambda}, z {z}: {got} vs {expected}");
        }
    }
}

/// Multipliers of the two finite fixed points of `(z + A + 1/z) / lambda`.
fn finite_multipliers(lambda: C64, shift: C64) -> [C64; 2] {
    let a = c(1.0, 0.0) - lambda;
    let d = (shift * shift - 4.0 * a).sqrt();
    let roots = [(-shift + d) / (2.0 * a), (-shift - d) / (2.0 * a)];
    roots.map(|z| (c(1.0, 0.0) - 1.0 / (z * z)) / lambda)
}

#[test]
fn sigma_is_the_product_of_the_other_multipliers() {
    for (lambda, shift) in [(c(0.3, 0.4), c(1.1, -0.7)), (c(-0.5, 0.0), c(2.0, 0.5)), (c(0.1, -0.8), c(-3.0, 1.0))] {
        let m = finite_multipliers(lambda, shift);
        let rep = Representative::rational(lambda, shift);
        assert!((rep.sigma() - m[0] * m[1]).norm() < 1e-10);
        // Holomorphic index formula.
        let index: C64 = [m[0], m[1], lambda].iter().map(|x| 1.0 / (c(1.0, 0.0) - x)).sum();
        assert!((index - 1.0).norm() < 1e-10);
    }
}

#[test]
fn strip_geometry_closed_forms() {
    let half: Rational = "1/2".parse().unwrap();
    // For real lambda = -r the log step is 2 log r.
    let l = 2.0 * 0.9f64.ln();
    let m = star::strip_height(half, c(-0.9, 0.0)).unwrap();
    assert!((m - std::f64::consts::PI / l.abs()).abs() < 1e-12);
    assert!((m - 14.908_8).abs() < 1e-4);
    let g = StarGeometry::new(half, c(-0.9, 0.0), None).unwrap();
    assert!((g.r_lambda - l.abs() / 4.0).abs() < 1e-12);
    assert!((g.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn fatou_values_along_the_critical_orbit() {
    for pq in ["1/2", "1/3", "2/3", "1/4"] {
        let pq: Rational = pq.parse().unwrap();
        let atlas = FatouAtlas::polynomial(pq).unwrap();
        let q = pq.q() as f64;
        let mut z = Point::new(-pq.omega() / 2.0);
        for k in 1..=6 {
            z = atlas.rep().apply(z);
            let phi = atlas.value(z).unwrap();
            assert!((phi - c(k as f64 / q, 0.0)).norm() < 1e-9, "{pq} step {k}: {phi}");
        }
    }
}

/// Frozen from a converged radial run; the spiral schedule agrees to 1e-6.
const BOUNDED_LIMIT: (f64, f64) = (8.938_754, 0.088_790);

#[test]
fn bounded_limit_regression() {
    let half: Rational = "1/2".parse().unwrap();
    let atlas = FatouAtlas::polynomial(half).unwrap();
    let x = atlas.inverse(0, c(0.3, 0.1)).unwrap();
    let report = run_sequence(&atlas, x, Schedule::new(SchedulePreset::Radial, 5, 60), 2.0, &RunOptions::default()).unwrap();
    assert_eq!(report.verdict, Verdict::BoundedThm1);
    let limit = report.bounded.unwrap().sigma;
    assert!((limit.value - c(BOUNDED_LIMIT.0, BOUNDED_LIMIT.1)).norm() < 1e-5, "{:?}", limit);
    assert!(limit.error < 1e-4);
}
