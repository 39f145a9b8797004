//! Koenigs linearizing coordinates of an attracting fixed point.
//!
//! Near the fixed point the coordinate is a power series computed from the
//! germ of the map; elsewhere in the basin it is extended by the functional
//! equation `phi(f(z)) = lambda phi(z)`. The inverse is obtained by pulling a
//! path back from the local chart, choosing at every step the preimage that
//! continues the path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{MapKind, Point, Representative};
use crate::series::Series;
use crate::C64;

/// Number of series terms of the local coordinate.
const SERIES_DEGREE: usize = 30;
/// Number of test points on the certification circle.
const CIRCLE_POINTS: usize = 64;
pub const DEFAULT_DEPTH_LIMIT: usize = 200_000;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalChoice {
    First,
    Second,
    /// The critical point with the smaller raw coordinate; ties go to the
    /// smaller argument.
    Auto,
}

/// Which continuation path defines the inverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InverseBranch {
    /// Along `t ↦ lambda^t w`, one map step per unit of `t`.
    Radial,
    /// Along `t ↦ exp(t log_step) w`, `period` map steps per unit of `t`.
    /// `exp(log_step)` must equal `lambda^period`.
    Ray { log_step: C64, period: usize },
}

impl InverseBranch {
    fn parts(&self, lambda: C64) -> (C64, usize) {
        match *self {
            InverseBranch::Radial => (lambda.ln(), 1),
            InverseBranch::Ray { log_step, period } => (log_step, period.max(1)),
        }
    }
}

/// Largest radius `r <= 1` such that `|f(u) - lambda u| < (1 - |lambda|)|u|/2`
/// on the circle `|u| = r` of the local coordinate; zero if none is found.
pub fn certified_radius(rep: &Representative) -> f64 {
    let l = rep.lambda;
    let slack = (1.0 - l.norm()) / 2.0;
    if slack <= 0.0 {
        return 0.0;
    }
    let holds = |r: f64| {
        (0..CIRCLE_POINTS).all(|k| {
            let u = C64::from_polar(r, std::f64::consts::TAU * (k as f64 + 0.5) / CIRCLE_POINTS as f64);
            let image = rep.apply(rep.from_local(u));
            if !rep.in_local_chart(&image) {
                return false;
            }
            (rep.to_local(image) - l * u).norm() < slack * r
        })
    };
    let mut hi = 1.0;
    if holds(hi) {
        return hi;
    }
    let mut lo = hi / 2.0;
    while !holds(lo) {
        hi = lo;
        lo /= 2.0;
        if lo < 1e-300 {
            return 0.0;
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Coefficients of the local coordinate with unit derivative at the fixed point.
fn koenigs_series(rep: &Representative, degree: usize) -> Series {
    let l = rep.lambda;
    let germ = rep.local_germ(degree);
    let mut coeffs = vec![C64::new(0.0, 0.0); degree + 1];
    coeffs[1] = C64::new(1.0, 0.0);
    // powers[m] = germ^m
    let mut powers = vec![Series::zero(degree), germ.clone()];
    for m in 2..=degree {
        let next = powers[m - 1].mul(&germ);
        powers.push(next);
    }
    for n in 2..=degree {
        let mut s = C64::new(0.0, 0.0);
        for m in 1..n {
            s += coeffs[m] * powers[m].coeff(n);
        }
        coeffs[n] = s / (l - l.powu(n as u32));
    }
    Series { coeffs }
}

/// Root-test estimate of the convergence radius of a series.
fn radius_estimate(series: &Series) -> f64 {
    let mut rho = f64::INFINITY;
    for n in 2..=series.degree() {
        let c = series.coeff(n).norm();
        if c > 0.0 {
            rho = rho.min(c.powf(-1.0 / (n as f64 - 1.0)));
        }
    }
    rho
}

/// A linearizing coordinate `phi` with `phi(marked point) = 0` and
/// `phi(c1) = 1` for the designated critical point `c1`.
#[derive(Clone, Debug)]
pub struct KoenigsChart {
    pub rep: Representative,
    pub local_radius: f64,
    /// Raw coordinate of the designated critical point.
    pub normalization: C64,
    pub critical: Point,
    pub tol: f64,
    pub depth_limit: usize,
    series: Series,
    image_radius: f64,
}

/// Where an orbit enters the certified disk.
#[derive(Clone, Copy, Debug)]
struct Entry {
    steps: usize,
    local: C64,
}

impl KoenigsChart {
    pub fn build(rep: &Representative, choice: CriticalChoice) -> Result<Self> {
        Self::build_with(rep, choice, DEFAULT_DEPTH_LIMIT, DEFAULT_TOL)
    }

    pub fn build_with(rep: &Representative, choice: CriticalChoice, depth_limit: usize, tol: f64) -> Result<Self> {
        let modulus = rep.lambda.norm();
        if !(modulus > 0.0 && modulus < 1.0) {
            return Err(Error::NotAttracting(modulus));
        }
        let series = koenigs_series(rep, SERIES_DEGREE);
        let local_radius = certified_radius(rep).min(0.25 * radius_estimate(&series));
        if !(local_radius > 0.0) {
            return Err(Error::NoConvergence("no certified disk".into()));
        }
        // Lower bound for |phi| on the boundary circle: the disk of that radius
        // lies in the local image.
        let image_radius = (0..CIRCLE_POINTS)
            .map(|k| {
                let u = C64::from_polar(local_radius, std::f64::consts::TAU * k as f64 / CIRCLE_POINTS as f64);
                series.eval(u).norm()
            })
            .fold(f64::INFINITY, f64::min);
        let mut chart = KoenigsChart {
            rep: *rep,
            local_radius,
            normalization: C64::new(1.0, 0.0),
            critical: rep.critical_points()[0],
            tol,
            depth_limit,
            series,
            image_radius,
        };
        let [c1, c2] = rep.critical_points();
        let raw = |c: Point| chart.raw_value(c).map_err(|_| Error::CriticalNotInBasin);
        let (critical, value) = match (choice, rep.kind) {
            (CriticalChoice::Second, MapKind::PolynomialP) => return Err(Error::CriticalNotInBasin),
            (CriticalChoice::First, _) | (CriticalChoice::Auto, MapKind::PolynomialP) => (c1, raw(c1)?),
            (CriticalChoice::Second, _) => (c2, raw(c2)?),
            (CriticalChoice::Auto, _) => {
                let (a, b) = (raw(c1)?, raw(c2)?);
                let tie = (a.norm() - b.norm()).abs() <= tol * a.norm().max(b.norm());
                if tie {
                    if a.arg() <= b.arg() { (c1, a) } else { (c2, b) }
                } else if a.norm() < b.norm() {
                    (c1, a)
                } else {
                    (c2, b)
                }
            }
        };
        if value.norm() == 0.0 {
            return Err(Error::CriticalNotInBasin);
        }
        chart.critical = critical;
        chart.normalization = value;
        Ok(chart)
    }

    pub fn lambda(&self) -> C64 {
        self.rep.lambda
    }

    pub fn fixed_point(&self) -> Point {
        self.rep.marked_point()
    }

    /// Local series with unit derivative; `phi = series / normalization`.
    pub fn local_series(&self) -> &Series {
        &self.series
    }

    fn in_disk(&self, p: &Point) -> Option<C64> {
        if self.rep.in_local_chart(p) {
            let u = self.rep.to_local(*p);
            if u.norm() < self.local_radius {
                return Some(u);
            }
        }
        None
    }

    fn entry(&self, z: Point) -> Result<Entry> {
        let mut p = z;
        let mut anchor = p;
        let mut next_anchor = 1usize;
        let escape = match self.rep.kind {
            MapKind::PolynomialP => Some(2.0 + self.rep.lambda.norm()),
            _ => None,
        };
        for n in 0..=self.depth_limit {
            if let Some(u) = self.in_disk(&p) {
                return Ok(Entry { steps: n, local: u });
            }
            if let Some(bound) = escape {
                if p.finite().is_none_or(|z| z.norm() > bound) {
                    return Err(Error::NotInBasin);
                }
            }
            if !p.is_finite_value() {
                return Err(Error::NotInBasin);
            }
            if n > 0 && p.chordal(&anchor) < 1e-14 {
                // Closed up on a cycle away from the fixed point.
                return Err(Error::NotInBasin);
            }
            if n == next_anchor {
                anchor = p;
                next_anchor *= 2;
            }
            p = self.rep.apply(p);
        }
        Err(Error::DepthExceeded(self.depth_limit))
    }

    fn scaled(&self, local_value: C64, steps: usize) -> C64 {
        if local_value.norm() == 0.0 {
            return local_value;
        }
        (local_value.ln() - steps as f64 * self.rep.lambda.ln()).exp()
    }

    fn raw_value(&self, z: Point) -> Result<C64> {
        let e = self.entry(z)?;
        Ok(self.scaled(self.series.eval(e.local), e.steps))
    }

    /// `phi(z)`.
    pub fn value(&self, z: Point) -> Result<C64> {
        Ok(self.raw_value(z)? / self.normalization)
    }

    /// `phi(z)` and its derivative with respect to the chart `z` is stored in.
    pub fn value_with_derivative(&self, z: Point) -> Result<(C64, C64)> {
        let e = self.entry(z)?;
        let (s, ds) = self.series.eval_with_derivative(e.local);
        let mut deriv = C64::new(1.0, 0.0);
        let mut p = z;
        for _ in 0..e.steps {
            let (next, d) = self.rep.apply_with_derivative(p);
            deriv *= d;
            p = next;
        }
        // The entry point is in the local chart, so ds is with respect to it.
        let value = self.scaled(s, e.steps) / self.normalization;
        let scale = if s.norm() == 0.0 {
            (-(e.steps as f64) * self.rep.lambda.ln()).exp()
        } else {
            value * self.normalization / s
        };
        Ok((value, ds * deriv * scale / self.normalization))
    }

    /// Solve `series(u) = target` near `guess` by Newton's method.
    fn local_inverse(&self, target: C64, guess: C64) -> Result<C64> {
        let mut u = guess;
        for _ in 0..60 {
            let (v, dv) = self.series.eval_with_derivative(u);
            let step = (v - target) / dv;
            u -= step;
            if step.norm() <= 1e-16 * u.norm().max(1e-300) {
                break;
            }
        }
        let (v, _) = self.series.eval_with_derivative(u);
        if !((v - target).norm() <= 1e-13 * target.norm().max(1e-300) * 10.0) || u.norm() > self.local_radius {
            return Err(Error::Unreachable);
        }
        Ok(u)
    }

    /// `z` with `phi(z) = w`, continued from the local chart along the branch path.
    pub fn inverse(&self, w: C64, branch: InverseBranch) -> Result<Point> {
        if w.norm() == 0.0 {
            return Ok(self.fixed_point());
        }
        let mut samples = 32;
        loop {
            match self.inverse_path(w, branch, samples) {
                Err(Error::BranchAmbiguous) if samples < 1024 => samples *= 2,
                other => return other.map(|path| path[0]),
            }
        }
    }

    /// Points `phi^{-1}(w exp(s log_step))` for `s` in `[0, 1]`, sampled at
    /// `samples + 1` values, continued from the local chart.
    pub fn inverse_path(&self, w: C64, branch: InverseBranch, samples: usize) -> Result<Vec<Point>> {
        let (log_step, period) = branch.parts(self.rep.lambda);
        if log_step.re >= 0.0 {
            return Err(Error::Unreachable);
        }
        let raw = w * self.normalization;
        let bound = 0.5 * self.image_radius;
        // Smallest depth with the whole segment [depth - 1, depth] inside.
        let need = ((bound / raw.norm()).ln() / log_step.re).max(0.0);
        let depth = need.ceil() as usize + 1;
        if depth * period > self.depth_limit {
            return Err(Error::Unreachable);
        }
        let at = |s: f64| (raw.ln() + s * log_step).exp();
        let mut segment = Vec::with_capacity(samples + 1);
        let mut guess = at((depth - 1) as f64);
        for i in 0..=samples {
            let s = (depth - 1) as f64 + i as f64 / samples as f64;
            let u = self.local_inverse(at(s), guess)?;
            guess = u;
            segment.push(self.rep.from_local(u));
        }
        for _ in 1..depth {
            let tip = segment[0];
            segment = pull_back_path(&self.rep, &segment, tip, period)?;
        }
        Ok(segment)
    }

    /// `phi^{-1}(lambda^2 / phi(z))`, exchanging the two sides of the level
    /// curve `|phi| = |lambda|`.
    pub fn involution(&self, z: Point) -> Result<Point> {
        let w = self.value(z)?;
        if w.norm() == 0.0 {
            return Err(Error::Unreachable);
        }
        let l = self.rep.lambda;
        self.inverse(l * l / w, InverseBranch::Radial)
    }
}

/// Prediction `2 a - b` carried out in the chart of `a`.
fn extrapolate(a: Point, b: Point) -> Point {
    match a {
        Point::Affine(x) => Point::new(2.0 * x - b.to_complex()),
        Point::Far(x) => Point::from_inverse(2.0 * x - b.inverse_coordinate()),
    }
}

/// Pulls `image` back under `f^period`. The result ends at `tip`, with
/// `f^period(tip) = image[last]`, and every point maps onto the
/// corresponding image point. Preimages are chosen by continuity along the
/// path, walking backwards from `tip`.
pub fn pull_back_path(rep: &Representative, image: &[Point], tip: Point, period: usize) -> Result<Vec<Point>> {
    let n = image.len();
    // anchors[i] = f^i(tip), the last point of level i.
    let mut anchors = Vec::with_capacity(period + 1);
    let mut p = tip;
    for _ in 0..=period {
        anchors.push(p);
        p = rep.apply(p);
    }
    let mut level: Vec<Point> = image.to_vec();
    for i in (0..period).rev() {
        let mut out = vec![Point::INFINITY; n];
        for idx in (0..n).rev() {
            let roots = rep.preimages(level[idx]);
            let reference = if idx == n - 1 {
                anchors[i]
            } else if idx + 2 < n {
                extrapolate(out[idx + 1], out[idx + 2])
            } else {
                out[idx + 1]
            };
            let d0 = roots[0].chordal(&reference);
            let d1 = roots[1].chordal(&reference);
            let separation = roots[0].chordal(&roots[1]);
            let (pick, near) = if d0 <= d1 { (roots[0], d0) } else { (roots[1], d1) };
            if separation > 1e-7 && near > 0.25 * separation {
                return Err(Error::BranchAmbiguous);
            }
            out[idx] = pick;
        }
        level = out;
    }
    Ok(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Representative;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn p_half() -> KoenigsChart {
        KoenigsChart::build(&Representative::polynomial(c(0.5, 0.0)), CriticalChoice::Auto).unwrap()
    }

    #[test]
    fn polynomial_normalization() {
        let chart = p_half();
        let rep = chart.rep;
        assert_eq!(chart.value(Point::new(c(0.0, 0.0))).unwrap(), c(0.0, 0.0));
        assert!((chart.value(Point::new(c(-0.25, 0.0))).unwrap() - 1.0).norm() < 1e-13);
        let v = rep.apply(Point::new(c(-0.25, 0.0)));
        assert!((chart.value(v).unwrap() - 0.5).norm() < 1e-13);
        let vv = rep.apply(v);
        assert!((chart.value(vv).unwrap() - 0.25).norm() < 1e-13);
        assert!(matches!(chart.value(Point::new(c(3.0, 0.0))), Err(Error::NotInBasin)));
    }

    #[test]
    fn rational_chart_at_infinity() {
        let rep = Representative::rational(c(0.5, 0.0), c(0.0, 0.0));
        let chart = KoenigsChart::build(&rep, CriticalChoice::First).unwrap();
        let one = Point::new(c(1.0, 0.0));
        let at_one = chart.value(one).unwrap();
        let at_image = chart.value(rep.apply(one)).unwrap();
        assert!((at_one - 1.0).norm() < 1e-13);
        assert!((at_image * 2.0 - at_one).norm() < 1e-13);
        assert_eq!(chart.value(Point::INFINITY).unwrap(), c(0.0, 0.0));
        // With A = 0 the map is odd, so phi(-1) = -1.
        assert!((chart.value(Point::new(c(-1.0, 0.0))).unwrap() + 1.0).norm() < 1e-12);
    }

    #[test]
    fn derivative_at_fixed_point_matches_differences() {
        let chart = p_half();
        let h = 1e-6;
        let fd = (chart.value(Point::new(c(h, 0.0))).unwrap() - chart.value(Point::new(c(-h, 0.0))).unwrap()) / (2.0 * h);
        let exact = 1.0 / chart.normalization;
        assert!((fd - exact).norm() / exact.norm() < 1e-6);
        let (_, d) = chart.value_with_derivative(Point::new(c(0.0, 0.0))).unwrap();
        assert!((d - exact).norm() / exact.norm() < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        let chart = p_half();
        assert!(chart.inverse(c(0.0, 0.0), InverseBranch::Radial).unwrap().chordal(&Point::new(c(0.0, 0.0))) < 1e-15);
        let c1 = chart.inverse(c(1.0, 0.0), InverseBranch::Radial).unwrap();
        assert!((c1.to_complex() - c(-0.25, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn involution_fixes_the_critical_value() {
        let chart = p_half();
        let cv = Point::new(c(-0.0625, 0.0));
        let image = chart.involution(cv).unwrap();
        assert!((image.to_complex() - c(-0.0625, 0.0)).norm() < 1e-7);
        let z = Point::new(c(0.1, 0.27));
        let iz = chart.involution(z).unwrap();
        let prod = chart.value(z).unwrap() * chart.value(iz).unwrap();
        assert!((prod - 0.25).norm() < 1e-9);
        assert!(chart.involution(iz).unwrap().chordal(&z) < 1e-9);
    }

    #[test]
    fn critical_value_on_level_curve() {
        // phi(-lambda^2/4) = lambda phi(-lambda/2) = lambda exactly.
        for l in [c(0.5, 0.0), c(0.3, 0.6), c(-0.7, 0.2)] {
            let chart = KoenigsChart::build(&Representative::polynomial(l), CriticalChoice::Auto).unwrap();
            let cv = chart.value(Point::new(-l * l / 4.0)).unwrap();
            assert!((cv.norm() - l.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn auto_choice_prefers_smaller_value() {
        let rep = Representative::rational(c(0.4, 0.1), c(2.0, 1.0));
        let auto = KoenigsChart::build(&rep, CriticalChoice::Auto).unwrap();
        let first = KoenigsChart::build(&rep, CriticalChoice::First).unwrap();
        let second = KoenigsChart::build(&rep, CriticalChoice::Second).unwrap();
        let smaller = if first.normalization.norm() <= second.normalization.norm() { first } else { second };
        assert_eq!(auto.critical, smaller.critical);
        assert!(KoenigsChart::build(&Representative::polynomial(c(0.5, 0.0)), CriticalChoice::Second).is_err());
    }

    fn random_basin_point(chart: &KoenigsChart, re: f64, im: f64) -> Option<Point> {
        let p = Point::new(c(re, im));
        chart.value(p).ok().map(|_| p)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn functional_equation(lr in 0.2f64..0.95, lt in 0.0f64..std::f64::consts::TAU, ar in -3.0f64..3.0, ai in -3.0f64..3.0, zr in -3.0f64..3.0, zi in -3.0f64..3.0) {
            let rep = Representative::rational(C64::from_polar(lr, lt), c(ar, ai));
            if let Ok(chart) = KoenigsChart::build(&rep, CriticalChoice::Auto) {
                if let Some(z) = random_basin_point(&chart, zr, zi) {
                    let a = chart.value(rep.apply(z)).unwrap();
                    let b = chart.value(z).unwrap();
                    prop_assert!((a - rep.lambda * b).norm() <= 1e-10 * b.norm().max(1.0));
                }
            }
        }

        #[test]
        fn inverse_round_trip(r in 0.0f64..1.0, t in 0.0f64..std::f64::consts::TAU) {
            let chart = p_half();
            let w = C64::from_polar(r, t);
            let z = chart.inverse(w, InverseBranch::Radial).unwrap();
            let back = chart.value(z).unwrap();
            prop_assert!((back - w).norm() < 1e-9);
        }
    }
}
