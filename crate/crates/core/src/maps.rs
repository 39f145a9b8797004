//! Moduli coordinates and normal forms of quadratic rational maps.
//!
//! A conjugacy class with a fixed point of multiplier `lambda` is recorded by
//! `sigma`, the product of the multipliers of the two other fixed points. Three
//! normal forms are used:
//!
//! * `P(z) = lambda z + z^2` (the polynomial class `sigma = 0`),
//! * `G(z) = (z + A + 1/z) / lambda`, with the marked fixed point at infinity,
//! * `G(z) = z + T + 1/z`, the parabolic case `lambda = 1`.
//!
//! `A` and `-A` give conjugate maps: `G_{lambda,-A}(-z) = -G_{lambda,A}(z)`,
//! so `z ↦ -z` exchanges the critical points `1` and `-1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{fatou, linearize, C64};

/// A rotation number `p/q` in lowest terms with `0 < p < q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rational {
    p: u32,
    q: u32,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rational {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q < 2 || p <= 0 || p >= q {
            return Err(Error::InvalidRotation(format!("{p}/{q} (need q >= 2 and 0 < p < q)")));
        }
        if gcd(p as u64, q as u64) != 1 {
            return Err(Error::InvalidRotation(format!("{p}/{q} (gcd = {})", gcd(p as u64, q as u64))));
        }
        Ok(Self { p: p as u32, q: q as u32 })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// `exp(2 pi i p / q)`.
    pub fn omega(&self) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * self.p as f64 / self.q as f64)
    }

    /// Inverse of `p` modulo `q`.
    pub fn p_inverse(&self) -> u32 {
        (1..self.q).find(|k| (k * self.p) % self.q == 1).unwrap_or(1)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| Error::InvalidRotation(format!("{s:?} is not of the form p/q")))?;
        let p: i64 = p.trim().parse().map_err(|_| Error::InvalidRotation(s.to_string()))?;
        let q: i64 = q.trim().parse().map_err(|_| Error::InvalidRotation(s.to_string()))?;
        Rational::new(p, q)
    }
}

impl TryFrom<String> for Rational {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Rational> for String {
    fn from(r: Rational) -> String {
        r.to_string()
    }
}

/// A point of the Riemann sphere stored in whichever chart keeps it bounded.
///
/// `Affine(z)` is used for `|z| <= 1` and `Far(w)` for `z = 1/w` with
/// `|w| < 1`; `Far(0)` is infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Affine(C64),
    Far(C64),
}

impl Point {
    pub const INFINITY: Point = Point::Far(C64 { re: 0.0, im: 0.0 });

    pub fn new(z: C64) -> Point {
        if z.norm_sqr() <= 1.0 {
            Point::Affine(z)
        } else {
            Point::Far(1.0 / z)
        }
    }

    /// The point `1/w`.
    pub fn from_inverse(w: C64) -> Point {
        if w.norm_sqr() < 1.0 {
            Point::Far(w)
        } else {
            Point::Affine(1.0 / w)
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Far(w) if w.norm_sqr() == 0.0)
    }

    /// Affine coordinate, `None` at infinity.
    pub fn finite(&self) -> Option<C64> {
        match *self {
            Point::Affine(z) => Some(z),
            Point::Far(w) if w.norm_sqr() == 0.0 => None,
            Point::Far(w) => Some(1.0 / w),
        }
    }

    /// Affine coordinate with infinity mapped to a non-finite value.
    pub fn to_complex(&self) -> C64 {
        self.finite().unwrap_or(C64::new(f64::INFINITY, f64::INFINITY))
    }

    /// The coordinate `1/z`; may be non-finite at the origin.
    pub fn inverse_coordinate(&self) -> C64 {
        match *self {
            Point::Affine(z) => 1.0 / z,
            Point::Far(w) => w,
        }
    }

    pub fn is_finite_value(&self) -> bool {
        match self {
            Point::Affine(z) | Point::Far(z) => z.re.is_finite() && z.im.is_finite(),
        }
    }

    /// Chordal distance on the sphere (diameter 2).
    pub fn chordal(&self, other: &Point) -> f64 {
        match (*self, *other) {
            (Point::Far(a), Point::Far(b)) => chordal_affine(a, b),
            (Point::Affine(a), Point::Affine(b)) => chordal_affine(a, b),
            (Point::Affine(z), Point::Far(w)) | (Point::Far(w), Point::Affine(z)) => {
                // Inversion preserves chordal distance: compare 1/z with w.
                if z.norm_sqr() == 0.0 {
                    2.0 / (1.0 + w.norm_sqr()).sqrt()
                } else {
                    chordal_affine(1.0 / z, w)
                }
            }
        }
    }
}

fn chordal_affine(a: C64, b: C64) -> f64 {
    2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
}

impl From<C64> for Point {
    fn from(z: C64) -> Point {
        Point::new(z)
    }
}

/// A point of a multiplier slice, in the coordinates `(lambda, sigma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapClass {
    pub lambda: C64,
    pub sigma: C64,
    pub pq: Option<Rational>,
}

impl MapClass {
    pub fn new(lambda: C64, sigma: C64) -> Self {
        Self { lambda, sigma, pq: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    PolynomialP,
    RationalG,
    ParabolicGT,
}

/// A concrete normal form; `shift` is `A` for the rational form and `T` for
/// the parabolic one (unused for the polynomial).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Representative {
    pub lambda: C64,
    pub shift: C64,
    pub kind: MapKind,
}

impl Representative {
    pub fn polynomial(lambda: C64) -> Self {
        Self { lambda, shift: C64::new(0.0, 0.0), kind: MapKind::PolynomialP }
    }

    pub fn rational(lambda: C64, shift: C64) -> Self {
        Self { lambda, shift, kind: MapKind::RationalG }
    }

    pub fn parabolic(translation: C64) -> Self {
        Self { lambda: C64::new(1.0, 0.0), shift: translation, kind: MapKind::ParabolicGT }
    }

    pub fn sigma(&self) -> C64 {
        match self.kind {
            MapKind::PolynomialP => C64::new(0.0, 0.0),
            MapKind::RationalG => {
                let l = self.lambda;
                ((l - 2.0) * (l - 2.0) - self.shift * self.shift) / (l * l)
            }
            MapKind::ParabolicGT => 1.0 - self.shift * self.shift,
        }
    }

    pub fn class(&self) -> MapClass {
        MapClass::new(self.lambda, self.sigma())
    }

    /// Critical points; for the polynomial the second one is infinity.
    pub fn critical_points(&self) -> [Point; 2] {
        match self.kind {
            MapKind::PolynomialP => [Point::new(-self.lambda / 2.0), Point::INFINITY],
            _ => [Point::new(C64::new(1.0, 0.0)), Point::new(C64::new(-1.0, 0.0))],
        }
    }

    /// The fixed point whose multiplier is `lambda`.
    pub fn marked_point(&self) -> Point {
        match self.kind {
            MapKind::PolynomialP => Point::Affine(C64::new(0.0, 0.0)),
            _ => Point::INFINITY,
        }
    }

    /// Local coordinate centred at the marked fixed point.
    pub fn to_local(&self, p: Point) -> C64 {
        match self.kind {
            MapKind::PolynomialP => p.to_complex(),
            _ => p.inverse_coordinate(),
        }
    }

    pub fn from_local(&self, u: C64) -> Point {
        match self.kind {
            MapKind::PolynomialP => Point::new(u),
            _ => Point::from_inverse(u),
        }
    }

    /// Whether the chart of `p` is the local chart of the marked point, so that
    /// chart derivatives are derivatives in the local coordinate.
    pub fn in_local_chart(&self, p: &Point) -> bool {
        match self.kind {
            MapKind::PolynomialP => matches!(p, Point::Affine(_)),
            _ => matches!(p, Point::Far(_)),
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        self.apply_with_derivative(p).0
    }

    /// Image and derivative, each expressed in the chart its point is stored in.
    pub fn apply_with_derivative(&self, p: Point) -> (Point, C64) {
        let l = self.lambda;
        match self.kind {
            MapKind::PolynomialP => match p {
                Point::Affine(z) => {
                    let v = z * (l + z);
                    let d = l + 2.0 * z;
                    if v.norm_sqr() <= 1.0 {
                        (Point::Affine(v), d)
                    } else {
                        let w = 1.0 / v;
                        (Point::Far(w), -d * w * w)
                    }
                }
                Point::Far(w) => {
                    // P(1/w) = (1 + lambda w) / w^2
                    let num = 1.0 + l * w;
                    let den = w * w;
                    if num.norm_sqr() <= den.norm_sqr() {
                        (Point::Affine(num / den), -(2.0 + l * w) / (w * w * w))
                    } else {
                        let q = 1.0 + l * w;
                        (Point::Far(den / num), w * (2.0 + l * w) / (q * q))
                    }
                }
            },
            MapKind::RationalG | MapKind::ParabolicGT => {
                let a = self.shift;
                let (x, far_input) = match p {
                    Point::Affine(z) => (z, false),
                    Point::Far(w) => (w, true),
                };
                // In both charts the map reads (x^2 + A x + 1) / (lambda x),
                // possibly followed by inversion: the form is symmetric under z -> 1/z.
                let num = x * x + a * x + 1.0;
                let den = l * x;
                let _ = far_input;
                if num.norm_sqr() <= den.norm_sqr() {
                    (Point::Affine(num / den), (x * x - 1.0) / (l * x * x))
                } else {
                    (Point::Far(den / num), l * (1.0 - x * x) / (num * num))
                }
            }
        }
    }

    /// The two preimages of `p`, counted with multiplicity.
    pub fn preimages(&self, p: Point) -> [Point; 2] {
        let l = self.lambda;
        match self.kind {
            MapKind::PolynomialP => match p {
                Point::Affine(y) => {
                    // z^2 + lambda z - y = 0
                    let d = (l * l + 4.0 * y).sqrt();
                    let r1a = (-l - d) / 2.0;
                    let r1b = (-l + d) / 2.0;
                    let r1 = if r1a.norm_sqr() >= r1b.norm_sqr() { r1a } else { r1b };
                    let r2 = if r1.norm_sqr() == 0.0 { C64::new(0.0, 0.0) } else { -y / r1 };
                    [Point::new(r1), Point::new(r2)]
                }
                Point::Far(v) => {
                    // z = 1/s with s^2 - lambda v s - v = 0
                    let d = (l * l * v * v + 4.0 * v).sqrt();
                    let s1 = (l * v + d) / 2.0;
                    let s2 = (l * v - d) / 2.0;
                    [Point::from_inverse(s1), Point::from_inverse(s2)]
                }
            },
            MapKind::RationalG | MapKind::ParabolicGT => {
                let a = self.shift;
                // z^2 - S z + 1 = 0 with S = lambda y - A; roots t and 1/t.
                let small = match p {
                    Point::Affine(y) => {
                        let s = l * y - a;
                        let d = (s * s - 4.0).sqrt();
                        let den = if (s + d).norm_sqr() >= (s - d).norm_sqr() { s + d } else { s - d };
                        if den.norm_sqr() == 0.0 {
                            C64::new(0.0, 1.0)
                        } else {
                            2.0 / den
                        }
                    }
                    Point::Far(v) => {
                        // S = (lambda - A v) / v
                        let b = l - a * v;
                        let d = (b * b - 4.0 * v * v).sqrt();
                        let den = if (b + d).norm_sqr() >= (b - d).norm_sqr() { b + d } else { b - d };
                        2.0 * v / den
                    }
                };
                [Point::new(small), Point::from_inverse(small)]
            }
        }
    }

    /// Power series of the map in the local coordinate of the marked point.
    pub fn local_germ(&self, degree: usize) -> crate::series::Series {
        use crate::series::Series;
        let l = self.lambda;
        match self.kind {
            MapKind::PolynomialP => {
                let c = vec![C64::new(0.0, 0.0), l, C64::new(1.0, 0.0)];
                Series::from_coeffs(c, degree)
            }
            _ => {
                // lambda w / (1 + A w + w^2)
                let den = Series::from_coeffs(vec![C64::new(1.0, 0.0), self.shift, C64::new(1.0, 0.0)], degree);
                let inv = den.reciprocal();
                let mut c = vec![C64::new(0.0, 0.0); degree + 1];
                for n in 1..=degree {
                    c[n] = l * inv.coeff(n - 1);
                }
                Series { coeffs: c }
            }
        }
    }
}

/// `(lambda, mu, nu)` with `mu nu = sigma` and `mu + nu = lambda sigma - lambda + 2`,
/// ordered so that `mu <= nu` lexicographically on `(Re, Im)`.
pub fn eigen_triple(class: &MapClass) -> Result<(C64, C64, C64)> {
    let (l, s) = (class.lambda, class.sigma);
    if !(l.re.is_finite() && l.im.is_finite() && s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::DegenerateIndex("non-finite multiplier data".into()));
    }
    let sum = l * s - l + 2.0;
    let (a, b) = quadratic_roots(sum, s);
    Ok((l, a, b))
}

/// Roots of `t^2 - sum t + prod = 0`, ordered lexicographically.
fn quadratic_roots(sum: C64, prod: C64) -> (C64, C64) {
    let d = (sum * sum - 4.0 * prod).sqrt();
    let big = if (sum + d).norm_sqr() >= (sum - d).norm_sqr() { (sum + d) / 2.0 } else { (sum - d) / 2.0 };
    let small = if big.norm_sqr() == 0.0 { C64::new(0.0, 0.0) } else { prod / big };
    order_pair(big, small)
}

pub(crate) fn order_pair(a: C64, b: C64) -> (C64, C64) {
    if (a.re, a.im) <= (b.re, b.im) {
        (a, b)
    } else {
        (b, a)
    }
}

/// The rational normal form of a class, with `A` the principal square root of
/// `(lambda - 2)^2 - sigma lambda^2`. The opposite sign represents the same class.
pub fn representative_from_sigma(class: &MapClass) -> Result<Representative> {
    let (l, s) = (class.lambda, class.sigma);
    if l.norm_sqr() == 0.0 {
        return Err(Error::ZeroMultiplier);
    }
    let a = ((l - 2.0) * (l - 2.0) - s * l * l).sqrt();
    if l == C64::new(1.0, 0.0) {
        Ok(Representative::parabolic(a))
    } else {
        Ok(Representative::rational(l, a))
    }
}

/// All fixed points on the sphere with their multipliers, with multiplicity.
pub fn fixed_points(rep: &Representative) -> Vec<(Point, C64)> {
    let l = rep.lambda;
    match rep.kind {
        MapKind::PolynomialP => vec![
            (Point::new(C64::new(0.0, 0.0)), l),
            (Point::new(1.0 - l), 2.0 - l),
            (Point::INFINITY, C64::new(0.0, 0.0)),
        ],
        _ => {
            // (1 - lambda) z^2 + A z + 1 = 0, solved for u = 1/z: u^2 + A u + (1 - lambda) = 0.
            let a = rep.shift;
            let c = 1.0 - l;
            let d = (a * a - 4.0 * c).sqrt();
            let u1 = if (-a - d).norm_sqr() >= (-a + d).norm_sqr() { (-a - d) / 2.0 } else { (-a + d) / 2.0 };
            let u2 = if u1.norm_sqr() == 0.0 { C64::new(0.0, 0.0) } else { c / u1 };
            let mut out = vec![(Point::INFINITY, l)];
            for u in [u1, u2] {
                out.push((Point::from_inverse(u), (1.0 - u * u) / l));
            }
            out
        }
    }
}

/// `[z0, f(z0), ..., f^n(z0)]`.
pub fn orbit(rep: &Representative, z0: Point, n: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(n + 1);
    let mut p = z0;
    out.push(p);
    for _ in 0..n {
        p = rep.apply(p);
        out.push(p);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relatedness {
    InR,
    NotInR,
    Undecided,
}

pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Rotation number `p/q` (allowing `q = 1`) of a root of unity, if `lambda` is one.
pub fn root_of_unity(lambda: C64, max_q: u32) -> Option<(u32, u32)> {
    if (lambda.norm() - 1.0).abs() > 1e-12 {
        return None;
    }
    for q in 1..=max_q {
        let t = lambda.arg() / (2.0 * PI) * q as f64;
        let p = t.round();
        if (t - p).abs() < 1e-10 {
            let p = (p as i64).rem_euclid(q as i64) as u32;
            if gcd(p as u64, q as u64) == 1 || (p == 0 && q == 1) {
                return Some((p, q));
            }
        }
    }
    None
}

/// Whether both critical orbits converge to the marked fixed point.
///
/// The attracting case uses the certified Koenigs disk as trap, the parabolic
/// case the attracting petals of the marked point. `radius` overrides the
/// trap radius in the attracting case.
pub fn classify_relatedness(rep: &Representative, max_iter: usize, radius: Option<f64>) -> Relatedness {
    if rep.kind == MapKind::PolynomialP {
        // The second critical point is the superattracting fixed point at infinity.
        return Relatedness::NotInR;
    }
    let modulus = rep.lambda.norm();
    if modulus < 1.0 - 1e-14 {
        if modulus == 0.0 {
            return Relatedness::NotInR;
        }
        let r = radius.unwrap_or_else(|| linearize::certified_radius(rep));
        let verdicts = rep.critical_points().map(|c| {
            trap_orbit(rep, c, max_iter, |p| rep.in_local_chart(&p) && rep.to_local(p).norm() < r)
        });
        combine(verdicts)
    } else if let Some((p, q)) = root_of_unity(rep.lambda, 64) {
        let germ = match fatou::ParabolicGerm::new(rep, fatou::Rotation { p, q }) {
            Ok(g) => g,
            Err(_) => return Relatedness::Undecided,
        };
        let verdicts = rep.critical_points().map(|c| {
            trap_orbit(rep, c, max_iter, |p| rep.in_local_chart(&p) && germ.trap_sector(rep.to_local(p)).is_some())
        });
        combine(verdicts)
    } else if modulus > 1.0 {
        Relatedness::NotInR
    } else {
        Relatedness::Undecided
    }
}

fn combine(v: [Relatedness; 2]) -> Relatedness {
    if v.contains(&Relatedness::NotInR) {
        Relatedness::NotInR
    } else if v.iter().all(|r| *r == Relatedness::InR) {
        Relatedness::InR
    } else {
        Relatedness::Undecided
    }
}

/// Iterates until the trap is reached; an orbit that closes up on a cycle
/// outside the trap certifies `NotInR`.
fn trap_orbit(rep: &Representative, start: Point, max_iter: usize, in_trap: impl Fn(Point) -> bool) -> Relatedness {
    let mut p = start;
    let mut anchor = p;
    let mut next_anchor = 1usize;
    for n in 0..=max_iter {
        if in_trap(p) {
            return Relatedness::InR;
        }
        if !p.is_finite_value() {
            return Relatedness::Undecided;
        }
        if n > 0 && p.chordal(&anchor) < 1e-13 {
            return Relatedness::NotInR;
        }
        if n == next_anchor {
            anchor = p;
            next_anchor *= 2;
        }
        p = rep.apply(p);
    }
    Relatedness::Undecided
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn rational_validation_and_parsing() {
        assert!(Rational::new(1, 2).is_ok());
        let err = "2/4".parse::<Rational>().unwrap_err();
        assert!(err.to_string().contains("gcd"));
        assert!(Rational::new(0, 3).is_err());
        assert!(Rational::new(1, 1).is_err());
        let r: Rational = "2/3".parse().unwrap();
        assert_eq!((r.p(), r.q()), (2, 3));
        assert_eq!(r.p_inverse(), 2);
        assert!(close(r.omega(), C64::from_polar(1.0, 4.0 * PI / 3.0), 1e-15));
    }

    #[test]
    fn eigen_triple_examples() {
        let (l, m, n) = eigen_triple(&MapClass::new(c(0.0, 0.0), c(0.0, 0.0))).unwrap();
        assert_eq!(l, c(0.0, 0.0));
        assert!(close(m, c(0.0, 0.0), 1e-15) && close(n, c(2.0, 0.0), 1e-15));

        let (_, m, n) = eigen_triple(&MapClass::new(c(0.5, 0.0), c(9.0, 0.0))).unwrap();
        assert!(close(m, c(3.0, 0.0), 1e-7) && close(n, c(3.0, 0.0), 1e-7));

        let (_, m, n) = eigen_triple(&MapClass::new(c(1.0, 0.0), c(1.0, 0.0))).unwrap();
        assert!(close(m + n, c(2.0, 0.0), 1e-12) && close(m * n, c(1.0, 0.0), 1e-12));
        assert!(close(m, c(1.0, 0.0), 1e-7));
    }

    #[test]
    fn representative_examples() {
        let r = representative_from_sigma(&MapClass::new(c(0.5, 0.0), c(0.0, 0.0))).unwrap();
        assert!(close(r.shift * r.shift, c(2.25, 0.0), 1e-14));
        let r = representative_from_sigma(&MapClass::new(c(0.5, 0.0), c(9.0, 0.0))).unwrap();
        assert!(r.shift.norm() < 1e-14);
        let t = c(0.7, -1.3);
        let r = representative_from_sigma(&MapClass::new(c(1.0, 0.0), 1.0 - t * t)).unwrap();
        assert_eq!(r.kind, MapKind::ParabolicGT);
        assert!(close(r.shift * r.shift, t * t, 1e-14));
        assert!(representative_from_sigma(&MapClass::new(c(0.0, 0.0), c(1.0, 0.0))).is_err());
    }

    #[test]
    fn sign_of_shift_is_the_conjugacy_by_negation() {
        let l = c(0.3, 0.4);
        let a = c(1.2, -0.7);
        let plus = Representative::rational(l, a);
        let minus = Representative::rational(l, -a);
        for z in [c(0.3, 0.2), c(-2.0, 1.0), c(0.1, -0.9)] {
            let lhs = minus.apply(Point::new(-z)).to_complex();
            let rhs = -plus.apply(Point::new(z)).to_complex();
            assert!(close(lhs, rhs, 1e-13));
        }
        // z -> 1/z is a symmetry of each map, not the conjugacy between them.
        for z in [c(0.3, 0.2), c(-2.0, 1.0)] {
            let lhs = plus.apply(Point::new(1.0 / z)).to_complex();
            let rhs = plus.apply(Point::new(z)).to_complex();
            assert!(close(lhs, rhs, 1e-12));
        }
    }

    fn has_fixed(list: &[(Point, C64)], z: Point, mult: C64) -> bool {
        list.iter().any(|(p, m)| p.chordal(&z) < 1e-12 && close(*m, mult, 1e-12))
    }

    #[test]
    fn fixed_point_examples() {
        let g = Representative::rational(c(0.5, 0.0), c(0.0, 0.0));
        let fp = fixed_points(&g);
        assert_eq!(fp.len(), 3);
        assert!(has_fixed(&fp, Point::INFINITY, c(0.5, 0.0)));
        assert!(has_fixed(&fp, Point::new(c(0.0, 2f64.sqrt())), c(3.0, 0.0)));
        assert!(has_fixed(&fp, Point::new(c(0.0, -(2f64.sqrt()))), c(3.0, 0.0)));

        let p = Representative::polynomial(c(0.5, 0.0));
        let fp = fixed_points(&p);
        assert!(has_fixed(&fp, Point::new(c(0.0, 0.0)), c(0.5, 0.0)));
        assert!(has_fixed(&fp, Point::new(c(0.5, 0.0)), c(1.5, 0.0)));
        assert!(has_fixed(&fp, Point::INFINITY, c(0.0, 0.0)));

        let gt = Representative::parabolic(c(2.0, 0.0));
        let fp = fixed_points(&gt);
        assert_eq!(fp.iter().filter(|(p, _)| p.is_infinity()).count(), 2);
        assert!(has_fixed(&fp, Point::new(c(-0.5, 0.0)), c(-3.0, 0.0)));

        let g0 = Representative::parabolic(c(0.0, 0.0));
        assert_eq!(fixed_points(&g0).iter().filter(|(p, _)| p.is_infinity()).count(), 3);
    }

    #[test]
    fn orbit_examples() {
        let p = Representative::polynomial(c(-1.0, 0.0));
        let o = orbit(&p, Point::new(c(0.5, 0.0)), 2);
        let o: Vec<C64> = o.iter().map(|p| p.to_complex()).collect();
        assert!(close(o[1], c(-0.25, 0.0), 1e-15) && close(o[2], c(0.3125, 0.0), 1e-15));

        let g = Representative::rational(c(0.5, 0.0), c(0.0, 0.0));
        let o = orbit(&g, Point::new(c(1.0, 0.0)), 1);
        assert!(close(o[1].to_complex(), c(4.0, 0.0), 1e-15));

        let fixed = Point::new(c(0.5, 0.0));
        let p = Representative::polynomial(c(0.5, 0.0));
        assert!(orbit(&p, fixed, 5).iter().all(|q| q.chordal(&fixed) < 1e-15));
    }

    #[test]
    fn orbit_towards_infinity_stays_finite() {
        // Attracting fixed point at infinity: affine coordinates would overflow.
        let g = Representative::rational(c(0.01, 0.0), c(0.0, 0.0));
        let o = orbit(&g, Point::new(c(2.0, 0.0)), 400);
        assert!(o.iter().all(|p| p.is_finite_value()));
        assert!(o.last().unwrap().chordal(&Point::INFINITY) < 1e-100);
    }

    #[test]
    fn relatedness_examples() {
        let p = Representative::polynomial(c(0.5, 0.0));
        assert_eq!(classify_relatedness(&p, DEFAULT_MAX_ITER, None), Relatedness::NotInR);
        // G_{1/2,0}: regression fixture.
        let g = Representative::rational(c(0.5, 0.0), c(0.0, 0.0));
        assert_eq!(classify_relatedness(&g, DEFAULT_MAX_ITER, None), Relatedness::InR);
        // A large shift throws both critical values close to infinity.
        let g = Representative::rational(c(0.5, 0.0), c(30.0, 5.0));
        assert_eq!(classify_relatedness(&g, DEFAULT_MAX_ITER, None), Relatedness::InR);
        // sigma = 0 has a superattracting fixed point capturing one critical orbit.
        let r = representative_from_sigma(&MapClass::new(c(0.5, 0.0), c(0.0, 0.0))).unwrap();
        assert_eq!(classify_relatedness(&r, DEFAULT_MAX_ITER, None), Relatedness::NotInR);
    }

    #[test]
    fn preimages_invert_the_maps() {
        let maps = [
            Representative::polynomial(c(0.4, 0.3)),
            Representative::rational(c(0.4, 0.3), c(1.5, -2.0)),
            Representative::parabolic(c(0.3, 1.0)),
        ];
        for m in maps {
            for y in [c(0.2, 0.1), c(3.0, -4.0), c(-1e5, 2e5), c(1e-7, 0.0)] {
                for x in m.preimages(Point::new(y)) {
                    assert!(m.apply(x).chordal(&Point::new(y)) < 1e-11, "{m:?} {y}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn sigma_round_trip(r in 0.05f64..0.95, t in 0.0f64..(2.0 * PI), sr in 0.0f64..1000.0, st in 0.0f64..(2.0 * PI)) {
            let class = MapClass::new(C64::from_polar(r, t), C64::from_polar(sr, st));
            let rep = representative_from_sigma(&class).unwrap();
            let back = rep.sigma();
            prop_assert!((back - class.sigma).norm() <= 1e-12 * class.sigma.norm().max(1.0));
            let residual = class.sigma * class.lambda * class.lambda
                - ((class.lambda - 2.0) * (class.lambda - 2.0) - rep.shift * rep.shift);
            prop_assert!(residual.norm() <= 1e-12 * class.sigma.norm().max(1.0) * 4.0);
        }

        #[test]
        fn index_formula_holds(lr in -2.0f64..2.0, li in -2.0f64..2.0, sr in -50.0f64..50.0, si in -50.0f64..50.0) {
            let class = MapClass::new(c(lr, li), c(sr, si));
            let (l, m, n) = eigen_triple(&class).unwrap();
            let scale = class.sigma.norm().max(1.0);
            prop_assert!((m * n - class.sigma).norm() < 1e-10 * scale);
            // nu (1 - lambda mu) = 2 - lambda - mu, the index relation without division.
            let resid = n * (1.0 - l * m) - (2.0 - l - m);
            prop_assert!(resid.norm() < 1e-10 * scale * scale);
            prop_assert!((m.re, m.im) <= (n.re, n.im));
        }

        #[test]
        fn fixed_point_multipliers_match_triple(r in 0.05f64..0.95, t in 0.0f64..(2.0 * PI), ar in -5.0f64..5.0, ai in -5.0f64..5.0) {
            let rep = Representative::rational(C64::from_polar(r, t), c(ar, ai));
            let (l, m, n) = eigen_triple(&rep.class()).unwrap();
            let fp = fixed_points(&rep);
            let mut others: Vec<C64> = fp.iter().skip(1).map(|(_, e)| *e).collect();
            others.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
            prop_assert!((fp[0].1 - l).norm() < 1e-12);
            let scale = m.norm().max(n.norm()).max(1.0);
            prop_assert!(((others[0] - m).norm() < 1e-9 * scale && (others[1] - n).norm() < 1e-9 * scale)
                || ((others[0] - n).norm() < 1e-9 * scale && (others[1] - m).norm() < 1e-9 * scale));
            for (p, _) in fp.iter() {
                prop_assert!(rep.apply(*p).chordal(p) < 1e-9);
            }
        }

        #[test]
        fn charts_agree_with_affine_formula(zr in -3.0f64..3.0, zi in -3.0f64..3.0) {
            let z = c(zr, zi);
            prop_assume!(z.norm() > 1e-3);
            let rep = Representative::rational(c(0.6, 0.2), c(-0.4, 1.1));
            let direct = (z + rep.shift + 1.0 / z) / rep.lambda;
            let via = rep.apply(Point::new(z)).to_complex();
            prop_assert!((direct - via).norm() < 1e-12 * direct.norm().max(1.0));
        }
    }
}
