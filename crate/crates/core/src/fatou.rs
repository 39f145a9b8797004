//! Parabolic Fatou coordinates.
//!
//! [`ParabolicGerm`] handles the return map `F = f^q` near a parabolic fixed
//! point with multiplier `exp(2 pi i p/q)`: its attracting directions, a
//! trapping region in each petal and an asymptotic expansion of the Fatou
//! coordinate `Phi(F(u)) = Phi(u) + 1` on it. [`FatouAtlas`] extends the
//! coordinate to the whole basin with `phi(f(x)) = phi(x) + 1/q`, normalised
//! to vanish at a critical point, and carries petal and sector bookkeeping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linearize::pull_back_path;
use crate::maps::{MapKind, Point, Rational, Representative};
use crate::series::Series;
use crate::C64;

/// Number of non-polar terms in the asymptotic expansion.
const EXPANSION_TERMS: usize = 24;
/// `|u|` below which an orbit is declared to have hit the parabolic point.
pub const HIT_RADIUS: f64 = 1e-13;
pub const DEFAULT_DEPTH_LIMIT: usize = 100_000;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Rotation number `p/q` of a parabolic multiplier; unlike [`Rational`]
/// this admits `0/1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rotation {
    pub p: u32,
    pub q: u32,
}

impl From<Rational> for Rotation {
    fn from(r: Rational) -> Self {
        Rotation { p: r.p(), q: r.q() }
    }
}

impl Rotation {
    pub fn omega(&self) -> C64 {
        C64::from_polar(1.0, TAU * self.p as f64 / self.q as f64)
    }

    fn p_inverse(&self) -> u32 {
        if self.q == 1 {
            return 0;
        }
        (1..self.q).find(|k| (k * self.p) % self.q == 1).unwrap_or(1)
    }
}

/// Representative of `j / p` in `Z_q`, lifted to `{2, ..., q+1}`: the twig
/// truncation index.
pub fn twig_index(rot: Rotation, j: u32) -> u32 {
    lift_to_two(rot, (j % rot.q) * rot.p_inverse() % rot.q)
}

/// Representative of `j / p` in `Z_q`, lifted to `{2, ..., q+1}`: the index
/// used for the model space. Numerically the same rule as [`twig_index`],
/// kept apart because the two play different roles.
pub fn model_index(rot: Rotation, j: u32) -> u32 {
    let reduced = (j % rot.q) * rot.p_inverse() % rot.q;
    lift_to_two(rot, reduced)
}

fn lift_to_two(rot: Rotation, reduced: u32) -> u32 {
    if reduced < 2 {
        reduced + rot.q
    } else {
        reduced
    }
}

/// `(j - j') / p` in `{0, ..., q-1}`: the strip shift between a petal and the
/// petal of the marked point.
pub fn transfer_shift(rot: Rotation, j: u32, j_prime: u32) -> u32 {
    let diff = (j + rot.q - j_prime % rot.q) % rot.q;
    diff * rot.p_inverse() % rot.q
}

/// Index `k` in `{0, ..., q-1}` with the slit of petal `j` ending at
/// `1/q + k/q - 1`; it equals `(j - p)/p`.
pub fn slit_index(rot: Rotation, j: u32) -> u32 {
    transfer_shift(rot, j, rot.p)
}

/// Right endpoint of the slit `{Im phi = 0, Re phi <= endpoint}` of petal `j`.
pub fn slit_endpoint(rot: Rotation, j: u32) -> f64 {
    let q = rot.q as f64;
    1.0 / q + slit_index(rot, j) as f64 / q - 1.0
}

/// Asymptotic Fatou coordinate of the return map at a parabolic point.
#[derive(Clone, Debug)]
pub struct ParabolicGerm {
    pub rep: Representative,
    pub rotation: Rotation,
    /// Number of attracting directions.
    pub petals: usize,
    /// Coefficient of `u^{petals+1}` in the return map.
    pub lead: C64,
    pub directions: Vec<C64>,
    /// Trap: `|Im W| < Re W - trap_radius` with `W = -1/(petals lead u^petals)`.
    pub trap_radius: f64,
    polar: Vec<C64>,
    log_coeff: C64,
    regular: Vec<C64>,
}

impl ParabolicGerm {
    pub fn new(rep: &Representative, rotation: Rotation) -> Result<Self> {
        let q = rotation.q as usize;
        if (rep.lambda.powu(rotation.q) - 1.0).norm() > 1e-10 {
            return Err(Error::Unsupported(format!("multiplier {} is not a {}-th root of unity", rep.lambda, q)));
        }
        // First pass finds the number of petals, the second builds the expansion.
        let probe = return_series(rep, q, 4 * q + 4);
        let petals = (2..=probe.degree())
            .find(|&n| probe.coeff(n).norm() > 1e-9)
            .map(|n| n - 1)
            .ok_or_else(|| Error::Unsupported("return map is the identity to working order".into()))?;
        let degree = 2 * petals + EXPANSION_TERMS + 1;
        let ret = return_series(rep, q, degree);
        let lead = ret.coeff(petals + 1);
        let base = (-1.0 / lead).arg();
        let directions = (0..petals)
            .map(|k| C64::from_polar(1.0, (base + TAU * k as f64) / petals as f64))
            .collect();
        let (polar, log_coeff, regular) = solve_expansion(&ret, petals);
        let mut germ = ParabolicGerm {
            rep: *rep,
            rotation,
            petals,
            lead,
            directions,
            trap_radius: 8.0,
            polar,
            log_coeff,
            regular,
        };
        let mut best = (f64::INFINITY, 8.0);
        let mut radius = 8.0;
        while radius <= 16384.0 {
            germ.trap_radius = radius;
            let res = germ.probe_residual();
            if res < best.0 {
                best = (res, radius);
            }
            if res < 5e-12 {
                break;
            }
            radius *= 2.0;
        }
        if !(best.0 < 1e-9) {
            return Err(Error::NoConvergence(format!("Fatou expansion residual {:.2e}", best.0)));
        }
        germ.trap_radius = best.1;
        Ok(germ)
    }

    /// The coordinate `W = -1/(r a u^r)` in which the return map is close to `W + 1`.
    pub fn w_coordinate(&self, u: C64) -> C64 {
        -1.0 / (self.petals as f64 * self.lead * u.powu(self.petals as u32))
    }

    /// The point of sector `k` with `W`-coordinate `w`.
    pub fn from_w_coordinate(&self, w: C64, k: usize) -> C64 {
        let r = self.petals as f64;
        self.directions[k] * (r * self.lead.norm() * w).powf(-1.0 / r)
    }

    /// Sector index of the attracting direction closest to `u`.
    pub fn sector_of(&self, u: C64) -> usize {
        let rel = (u / self.directions[0]).arg();
        let k = (rel * self.petals as f64 / TAU).round() as i64;
        k.rem_euclid(self.petals as i64) as usize
    }

    /// Sector of the trap containing the local point `u`, if any.
    pub fn trap_sector(&self, u: C64) -> Option<usize> {
        if u.norm() == 0.0 {
            return None;
        }
        let w = self.w_coordinate(u);
        if w.im.abs() < w.re - self.trap_radius {
            Some(self.sector_of(u))
        } else {
            None
        }
    }

    /// Applies the return map in the local coordinate.
    pub fn step(&self, u: C64) -> C64 {
        let mut p = self.rep.from_local(u);
        for _ in 0..self.rotation.q {
            p = self.rep.apply(p);
        }
        self.rep.to_local(p)
    }

    /// Asymptotic Fatou coordinate on sector `k`.
    pub fn value(&self, u: C64, k: usize) -> C64 {
        self.value_with_derivative(u, k).0
    }

    pub fn value_with_derivative(&self, u: C64, k: usize) -> (C64, C64) {
        let inv = 1.0 / u;
        let mut v = self.log_coeff * (u / self.directions[k]).ln();
        let mut dv = self.log_coeff * inv;
        let mut pw = C64::new(1.0, 0.0);
        for (i, d) in self.polar.iter().enumerate() {
            let kk = (i + 1) as f64;
            pw *= inv;
            v += d * pw;
            dv -= d * kk * pw * inv;
        }
        let mut pw = C64::new(1.0, 0.0);
        for (i, e) in self.regular.iter().enumerate() {
            let m = (i + 1) as f64;
            dv += e * m * pw;
            pw *= u;
            v += e * pw;
        }
        (v, dv)
    }

    /// Solves `value(u, k) = target` near `guess`.
    pub fn invert(&self, target: C64, k: usize, guess: C64) -> Result<C64> {
        let mut u = guess;
        for _ in 0..80 {
            let (v, dv) = self.value_with_derivative(u, k);
            let step = (v - target) / dv;
            u -= step;
            if step.norm() <= 1e-15 * u.norm() {
                break;
            }
        }
        let v = self.value(u, k);
        if !((v - target).norm() < 1e-11 * target.norm().max(1.0)) || self.trap_sector(u) != Some(k) {
            return Err(Error::OutsideDomain("no solution in the trap".into()));
        }
        Ok(u)
    }

    /// Worst functional-equation residual on the trap boundary.
    fn probe_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.petals {
            for s in [0.0, 0.5, 2.0, 8.0, 32.0] {
                for sign in [-1.0, 0.0, 1.0] {
                    let w = C64::new(self.trap_radius + 1e-9 + s, sign * s);
                    let u = self.from_w_coordinate(w, k);
                    let image = self.step(u);
                    if !(image.re.is_finite() && image.im.is_finite()) {
                        return f64::INFINITY;
                    }
                    let drift = self.w_coordinate(image) - w - 1.0;
                    if drift.norm() > 0.25 || self.sector_of(image) != k {
                        return f64::INFINITY;
                    }
                    let res = (self.value(image, k) - self.value(u, k) - 1.0).norm();
                    worst = worst.max(res);
                }
            }
        }
        worst
    }
}

/// Local series of `f^q` at the marked point.
fn return_series(rep: &Representative, q: usize, degree: usize) -> Series {
    let germ = rep.local_germ(degree);
    let mut acc = germ.clone();
    for _ in 1..q {
        acc = germ.compose(&acc);
    }
    acc
}

/// Coefficients of `Phi(u) = sum d_k u^-k + A log u + sum e_m u^m` with
/// `Phi(F(u)) - Phi(u) = 1` to the order the series allows, solved degree by
/// degree.
fn solve_expansion(ret: &Series, petals: usize) -> (Vec<C64>, C64, Vec<C64>) {
    let r = petals;
    let top = r + EXPANSION_TERMS;
    let hdeg = ret.degree() - 1;
    let zero = C64::new(0.0, 0.0);
    // h = F(u)/u - 1
    let mut h = vec![zero; hdeg + 1];
    for n in 1..=hdeg {
        h[n] = ret.coeff(n + 1);
    }
    let h = Series { coeffs: h };
    let shifted = |s: &Series, offset: i64| -> Vec<C64> {
        (0..=top)
            .map(|t| {
                let idx = t as i64 + offset;
                if idx < 0 {
                    zero
                } else {
                    s.coeff(idx as usize) - if idx == 0 { 1.0 } else { 0.0 }
                }
            })
            .collect()
    };
    // responses[unknown][t]: contribution of a unit coefficient to degree t.
    let mut responses: Vec<Vec<C64>> = Vec::with_capacity(top + 1);
    for t in 0..=top {
        let resp = if t < r {
            let k = (r - t) as i64;
            shifted(&Series::one_plus_pow(&h, -k), k)
        } else if t == r {
            Series::log1p(&h).coeffs.iter().take(top + 1).copied().chain(std::iter::repeat(zero)).take(top + 1).collect()
        } else {
            let m = (t - r) as i64;
            shifted(&Series::one_plus_pow(&h, m), -m)
        };
        responses.push(resp);
    }
    let mut coeffs = vec![zero; top + 1];
    for t in 0..=top {
        let rhs = if t == 0 { C64::new(1.0, 0.0) } else { zero };
        let known: C64 = (0..t).map(|u| coeffs[u] * responses[u][t]).sum();
        coeffs[t] = (rhs - known) / responses[t][t];
    }
    // unknown t < r is d_{r-t}
    let polar = (1..=r).map(|k| coeffs[r - k]).collect();
    let regular = coeffs[r + 1..].to_vec();
    (polar, coeffs[r], regular)
}

/// Membership of a basin point in the immediate basin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PetalIndex {
    Immediate(u32),
    NotImmediate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorScope {
    ImmediateOnly,
    OneStep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorClass {
    InBp,
    InSpNotBp,
    NotInSp,
    OutOfScope,
}

/// Which petals [`FatouAtlas::sample_xi_star`] draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleFilter {
    Any,
    Petal(u32),
    InBp,
    NotInSp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub point: Point,
    pub phi: C64,
    pub petal: u32,
}

/// Extended Fatou coordinate on the parabolic basin of the marked point.
#[derive(Clone, Debug)]
pub struct FatouAtlas {
    pub germ: ParabolicGerm,
    pub rotation: Rotation,
    /// `petal_directions[j]` is the attracting direction of petal `j`.
    pub petal_directions: Vec<C64>,
    /// The critical point where the coordinate vanishes.
    pub critical: Point,
    pub tol: f64,
    pub depth_limit: usize,
    base_sector: usize,
    base_label: u32,
    offset: C64,
    sector_labels: Vec<u32>,
    sector_offsets: Vec<C64>,
}

#[derive(Clone, Copy, Debug)]
struct TrapEntry {
    steps: usize,
    local: C64,
}

impl FatouAtlas {
    /// Atlas of the polynomial `z ↦ omega z + z^2`, normalised at `-omega/2`.
    pub fn polynomial(pq: Rational) -> Result<Self> {
        let rep = Representative::polynomial(pq.omega());
        Self::new(&rep, pq.into(), Point::new(-pq.omega() / 2.0))
    }

    /// Atlas of the marked parabolic point of `rep`, normalised at `critical`.
    pub fn new(rep: &Representative, rotation: Rotation, critical: Point) -> Result<Self> {
        let germ = ParabolicGerm::new(rep, rotation)?;
        let mut atlas = FatouAtlas {
            germ,
            rotation,
            petal_directions: Vec::new(),
            critical,
            tol: DEFAULT_TOL,
            depth_limit: DEFAULT_DEPTH_LIMIT,
            base_sector: 0,
            base_label: 0,
            offset: C64::new(0.0, 0.0),
            sector_labels: Vec::new(),
            sector_offsets: Vec::new(),
        };
        let entry = atlas.first_trap_entry(critical, None)?;
        atlas.base_sector = atlas.germ.sector_of(entry.local);
        atlas.base_label = ((entry.steps as u64 * rotation.p as u64) % rotation.q as u64) as u32;
        atlas.offset = atlas.raw(entry);
        let petals = atlas.germ.petals;
        for k in 0..petals {
            let w = C64::new(atlas.germ.trap_radius + 4.0, 0.0);
            let u = atlas.germ.from_w_coordinate(w, k);
            let y = rep.from_local(u);
            let phi = atlas.value(y)?;
            atlas.sector_labels.push(atlas.label(y)?);
            atlas.sector_offsets.push(atlas.germ.value(u, k) - phi);
        }
        let base_dir = atlas.germ.directions[atlas.base_sector];
        let q = rotation.q;
        atlas.petal_directions = (0..q)
            .map(|j| {
                let shift = (j as i64 - atlas.base_label as i64) as f64 / q as f64;
                base_dir * C64::from_polar(1.0, TAU * shift)
            })
            .collect();
        Ok(atlas)
    }

    pub fn rep(&self) -> &Representative {
        &self.germ.rep
    }

    pub fn omega(&self) -> C64 {
        self.rotation.omega()
    }

    fn first_trap_entry(&self, x: Point, sector: Option<usize>) -> Result<TrapEntry> {
        let rep = &self.germ.rep;
        let escape = rep.kind == MapKind::PolynomialP;
        let mut p = x;
        let mut anchor = p;
        let mut next_anchor = 1usize;
        for n in 0..=self.depth_limit {
            if rep.in_local_chart(&p) {
                let u = rep.to_local(p);
                if u.norm() < HIT_RADIUS {
                    return Err(Error::PrefixedToZero);
                }
                if let Some(k) = self.germ.trap_sector(u) {
                    if sector.is_none_or(|s| s == k) {
                        return Ok(TrapEntry { steps: n, local: u });
                    }
                }
            }
            if escape && p.finite().is_none_or(|z| z.norm() > 4.0) {
                return Err(Error::NotInBasin);
            }
            if !p.is_finite_value() {
                return Err(Error::NotInBasin);
            }
            if n > 0 && p.chordal(&anchor) < 1e-14 {
                return Err(Error::NotInBasin);
            }
            if n == next_anchor {
                anchor = p;
                next_anchor *= 2;
            }
            p = rep.apply(p);
        }
        Err(Error::DepthExceeded(self.depth_limit))
    }

    fn raw(&self, entry: TrapEntry) -> C64 {
        self.germ.value(entry.local, self.base_sector) - entry.steps as f64 / self.rotation.q as f64
    }

    /// The extended coordinate `phi(x)`.
    pub fn value(&self, x: Point) -> Result<C64> {
        let e = self.first_trap_entry(x, Some(self.base_sector))?;
        Ok(self.raw(e) - self.offset)
    }

    /// Label `l` with `f^n(x)` in petal `l + n p` for large `n`; for points of
    /// the immediate basin this is the petal index.
    pub fn label(&self, x: Point) -> Result<u32> {
        let e = self.first_trap_entry(x, Some(self.base_sector))?;
        let q = self.rotation.q as i64;
        let shift = (e.steps as i64 % q) * self.rotation.p as i64;
        Ok((self.base_label as i64 - shift).rem_euclid(q) as u32)
    }

    fn sector_of_petal(&self, j: u32) -> Result<usize> {
        self.sector_labels
            .iter()
            .position(|&l| l == j % self.rotation.q)
            .ok_or_else(|| Error::OutsideDomain(format!("no petal {j}")))
    }

    /// The point of petal `j` with coordinate `phi`, continued from the trap
    /// along the horizontal ray `phi + s`, `s >= 0`.
    pub fn inverse(&self, j: u32, phi: C64) -> Result<Point> {
        if phi.im.abs() < 1e-12 && phi.re <= slit_endpoint(self.rotation, j) + 1e-12 {
            return Err(Error::OutsideDomain(format!("{phi} lies on the slit of petal {j}")));
        }
        let mut samples = 32;
        loop {
            match self.inverse_path(j, phi, samples) {
                Err(Error::BranchAmbiguous) if samples < 1024 => samples *= 2,
                other => return other.map(|path| path[0]),
            }
        }
    }

    fn inverse_path(&self, j: u32, phi: C64, samples: usize) -> Result<Vec<Point>> {
        let k = self.sector_of_petal(j)?;
        let q = self.rotation.q as usize;
        let rep = self.germ.rep;
        let target = |s: f64| phi + s + self.sector_offsets[k];
        let base = target(0.0);
        let margin = self.germ.trap_radius + 4.0 + base.im.abs();
        let first = (margin - base.re).ceil().max(0.0) as usize + 1;
        // The logarithmic term shifts W away from Phi; go deeper until the
        // whole segment solves inside the trap.
        let mut found = None;
        for extra in [0, 8, 32, 128, 512] {
            let depth = first + extra;
            if depth * q > self.depth_limit {
                return Err(Error::DepthExceeded(self.depth_limit));
            }
            let mut guess = self.germ.from_w_coordinate(target((depth - 1) as f64), k);
            let mut segment = Vec::with_capacity(samples + 1);
            let ok = (0..=samples).all(|i| {
                let s = (depth - 1) as f64 + i as f64 / samples as f64;
                match self.germ.invert(target(s), k, guess) {
                    Ok(u) => {
                        guess = u;
                        segment.push(rep.from_local(u));
                        true
                    }
                    Err(_) => false,
                }
            });
            if ok {
                found = Some((depth, segment));
                break;
            }
        }
        let (depth, mut segment) = found.ok_or_else(|| Error::OutsideDomain("no solution in the trap".into()))?;
        for _ in 1..depth {
            let tip = segment[0];
            segment = pull_back_path(&rep, &segment, tip, q)?;
        }
        Ok(segment)
    }

    /// Whether `x` is the point reached by [`FatouAtlas::inverse`] from its own
    /// coordinate and label.
    fn in_tile(&self, x: Point) -> Result<Option<u32>> {
        let phi = self.value(x)?;
        let label = self.label(x)?;
        match self.inverse(label, phi) {
            Ok(y) => {
                let tol = 1e-7;
                Ok(if y.chordal(&x) < tol { Some(label) } else { None })
            }
            // At a critical point the pullback meets a double root; the
            // caller decides from the image instead.
            Err(Error::OutsideDomain(_)) | Err(Error::BranchAmbiguous) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Smallest `n` with `f^n(x)` in the tile of its petal, with that petal.
    pub fn tile_entry(&self, x: Point, budget: usize) -> Result<(usize, u32)> {
        let mut p = x;
        for n in 0..=budget {
            if let Some(j) = self.in_tile(p)? {
                return Ok((n, j));
            }
            p = self.germ.rep.apply(p);
        }
        Err(Error::DepthExceeded(budget))
    }

    /// Petal of the immediate basin containing `x`, or `NotImmediate`.
    pub fn petal_index(&self, x: Point) -> Result<PetalIndex> {
        self.petal_index_depth(x, 0)
    }

    fn petal_index_depth(&self, x: Point, depth: usize) -> Result<PetalIndex> {
        if let Some(j) = self.in_tile(x)? {
            return Ok(PetalIndex::Immediate(j));
        }
        if depth > 4 * self.rotation.q as usize + 64 {
            return Err(Error::Undecidable("petal recursion budget".into()));
        }
        let rep = self.germ.rep;
        let y = rep.apply(x);
        let p = self.rotation.p;
        match self.petal_index_depth(y, depth + 1)? {
            PetalIndex::NotImmediate => Ok(PetalIndex::NotImmediate),
            PetalIndex::Immediate(i) if i == p % self.rotation.q => Ok(PetalIndex::Immediate(0)),
            PetalIndex::Immediate(_) => {
                if self.in_tile(y)?.is_some() {
                    // Petals other than the critical one map injectively onto
                    // their images, tiles onto tiles.
                    return Ok(PetalIndex::NotImmediate);
                }
                if rep.kind == MapKind::PolynomialP {
                    let mirror = Point::new(-rep.lambda - x.to_complex());
                    if self.in_tile(mirror)?.is_some() {
                        return Ok(PetalIndex::NotImmediate);
                    }
                }
                Err(Error::Undecidable("neither the point nor its mirror lies in a tile".into()))
            }
        }
    }

    /// `x` in the basin with `|Im phi| < M/2`, or a preimage of the parabolic point.
    pub fn in_xi(&self, x: Point, height: f64) -> Result<bool> {
        match self.value(x) {
            Ok(phi) => Ok(phi.im.abs() < height / 2.0),
            Err(Error::PrefixedToZero) => Ok(true),
            Err(Error::NotInBasin) => Ok(false),
            Err(Error::DepthExceeded(_)) => Err(Error::Undecidable("orbit did not settle".into())),
            Err(e) => Err(e),
        }
    }

    /// Whether `x` is on the truncated twig: real coordinate at least `k(j)/q`
    /// in petal `j`, or the parabolic point itself.
    pub fn in_truncated_twig(&self, x: Point) -> Result<bool> {
        let rep = self.germ.rep;
        if rep.in_local_chart(&x) && rep.to_local(x).norm() < HIT_RADIUS {
            return Ok(true);
        }
        let j = match self.petal_index(x)? {
            PetalIndex::Immediate(j) => j,
            PetalIndex::NotImmediate => return Ok(false),
        };
        let phi = self.value(x)?;
        let threshold = twig_index(self.rotation, j) as f64 / self.rotation.q as f64;
        Ok(phi.im.abs() <= self.tol && phi.re >= threshold - self.tol)
    }

    /// Position relative to the petal `B^p` and its sector.
    pub fn in_sector_p(&self, x: Point, scope: SectorScope) -> Result<SectorClass> {
        let p = self.rotation.p % self.rotation.q;
        match self.petal_index(x)? {
            PetalIndex::Immediate(j) if j == p => Ok(SectorClass::InBp),
            PetalIndex::Immediate(_) => Ok(SectorClass::NotInSp),
            PetalIndex::NotImmediate => match scope {
                SectorScope::ImmediateOnly => Ok(SectorClass::OutOfScope),
                SectorScope::OneStep => match self.petal_index(self.germ.rep.apply(x))? {
                    // The other preimage of an immediate petal is attached to
                    // the critical petal at the preimage -omega of 0.
                    PetalIndex::Immediate(_) => Ok(SectorClass::NotInSp),
                    PetalIndex::NotImmediate => Ok(SectorClass::OutOfScope),
                },
            },
        }
    }

    /// Deterministic sample of points with `|Im phi| < M/2` off the twig and
    /// the critical value.
    pub fn sample_xi_star(&self, height: f64, n: usize, filter: SampleFilter, seed: u64) -> Vec<SamplePoint> {
        let q = self.rotation.q;
        let p = self.rotation.p % q;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0;
        while out.len() < n && attempts < 50 * n + 100 {
            attempts += 1;
            let petal = match filter {
                SampleFilter::Any => rng.gen_range(0..q),
                SampleFilter::Petal(j) => j % q,
                SampleFilter::InBp => p,
                SampleFilter::NotInSp => {
                    if q == 2 {
                        (p + 1) % q
                    } else {
                        let j = rng.gen_range(0..q - 1);
                        if j >= p {
                            j + 1
                        } else {
                            j
                        }
                    }
                }
            };
            let im = (rng.gen::<f64>() - 0.5) * height * 0.98;
            let re = rng.gen_range(-1.0..2.0);
            if im.abs() < 1e-3 {
                continue;
            }
            let phi = C64::new(re, im);
            if let Ok(point) = self.inverse(petal, phi) {
                out.push(SamplePoint { point, phi, petal });
            }
        }
        out
    }
}
