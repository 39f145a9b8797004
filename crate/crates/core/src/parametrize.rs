//! From parabolic basin points to parameters.
//!
//! A point `x` of the basin of `P_omega` gives the linearizer value
//! `w_x = exp(L phi(x) + 2 pi i j/q)` for each nearby attracting multiplier
//! `lambda`. The parameter attached to `x` is the `A` (equivalently `sigma`)
//! for which the free critical value of `G_{lambda,A}` has exactly that
//! linearizer value, with the branch confirmed by continuing along the star.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::fatou::{self, FatouAtlas, Rotation};
use crate::linearize::{CriticalChoice, InverseBranch, KoenigsChart};
use crate::maps::{self, MapClass, Point, Relatedness, Representative};
use crate::star::StarGeometry;
use crate::C64;

/// Chordal tolerance for the branch checks along the star.
const BRANCH_TOL: f64 = 1e-6;
/// Forward steps allowed before a basin point reaches its tile.
const TILE_BUDGET: usize = 64;

/// The continuation path of the star: `t ↦ w exp(t L)`, `q` steps per unit.
pub fn star_branch(geometry: &StarGeometry) -> InverseBranch {
    InverseBranch::Ray { log_step: geometry.log_step, period: geometry.pq.q() as usize }
}

/// Fatou data of a point: coordinate and petal label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FatouData {
    pub phi: C64,
    pub label: u32,
}

/// `exp(L phi + 2 pi i label / q)`.
pub fn transfer(geometry: &StarGeometry, data: FatouData) -> C64 {
    let q = geometry.pq.q() as f64;
    (geometry.log_step * data.phi + C64::new(0.0, TAU * data.label as f64 / q)).exp()
}

/// Fatou data of `x` after checking that it lies in the region where the
/// target is defined: `|Im phi| < m/2`, off the truncated twig and away from
/// the critical value.
pub fn xi_star_data(atlas: &FatouAtlas, geometry: &StarGeometry, x: Point) -> Result<FatouData> {
    let phi = atlas.value(x)?;
    let label = atlas.label(x)?;
    if phi.im.abs() >= geometry.height / 2.0 {
        return Err(Error::NotInXiStar(format!("|Im phi| = {} exceeds m/2 = {}", phi.im.abs(), geometry.height / 2.0)));
    }
    let cv = atlas.rep().apply(atlas.critical);
    if x.chordal(&cv) < 1e-9 {
        return Err(Error::NotInXiStar("critical value".into()));
    }
    if phi.im.abs() <= atlas.tol && atlas.in_truncated_twig(x)? {
        return Err(Error::NotInXiStar("truncated twig".into()));
    }
    Ok(FatouData { phi, label })
}

/// The linearizer value `w_x` attached to `x`.
pub fn target_value(atlas: &FatouAtlas, geometry: &StarGeometry, x: Point) -> Result<C64> {
    Ok(transfer(geometry, xi_star_data(atlas, geometry, x)?))
}

/// A point of the model space, stored by a linearizer value; `w` and
/// `lambda^2 / w` represent the same point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub w: C64,
    pub lambda: C64,
    pub canonical: bool,
}

impl ModelPoint {
    /// The representative with `|w| >= |lambda|`, and `Im(w / lambda) >= 0`
    /// on the circle `|w| = |lambda|`.
    pub fn canonical(w: C64, lambda: C64) -> Self {
        let other = lambda * lambda / w;
        let tol = 1e-12 * lambda.norm();
        let w = if (w.norm() - lambda.norm()).abs() <= tol {
            if (w / lambda).im >= 0.0 { w } else { other }
        } else if w.norm() < lambda.norm() {
            other
        } else {
            w
        };
        ModelPoint { w, lambda, canonical: true }
    }

    pub fn distance(&self, other: &ModelPoint) -> f64 {
        (self.w - other.w).norm()
    }
}

/// Linearizer value of the free critical value and the model point it defines.
pub fn chi_with(class: &MapClass, choice: CriticalChoice) -> Result<ModelPoint> {
    let rep = maps::representative_from_sigma(class)?;
    if maps::classify_relatedness(&rep, maps::DEFAULT_MAX_ITER, None) != Relatedness::InR {
        return Err(Error::NotInR);
    }
    let chart = KoenigsChart::build(&rep, choice)?;
    let [c1, c2] = rep.critical_points();
    let free = if chart.critical == c1 { c2 } else { c1 };
    let w = chart.value(rep.apply(free))?;
    Ok(ModelPoint::canonical(w, class.lambda))
}

pub fn chi(class: &MapClass) -> Result<ModelPoint> {
    chi_with(class, CriticalChoice::Auto)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedSource {
    GridScan,
    Continuation,
}

/// Which of the two equivalent targets was matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveBranch {
    Direct,
    Involuted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiSolve {
    pub x: Point,
    pub x_data: FatouData,
    pub lambda: C64,
    pub sigma: C64,
    pub shift: C64,
    pub target: C64,
    pub residual: f64,
    pub newton_iters: usize,
    pub seed_source: SeedSource,
    pub branch: SolveBranch,
}

impl PhiSolve {
    pub fn representative(&self) -> Representative {
        Representative::rational(self.lambda, self.shift)
    }

    /// The shift for which the critical point `+1` plays the role of the
    /// polynomial's critical point. Conjugating by `z ↦ -z` turns an
    /// involuted solution into a direct one.
    pub fn normalized_shift(&self) -> C64 {
        match self.branch {
            SolveBranch::Direct => self.shift,
            SolveBranch::Involuted => -self.shift,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub grid_radius: f64,
    pub grid_points: usize,
    pub seeds: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-10, max_iter: 40, grid_radius: 8.0, grid_points: 17, seeds: 16 }
    }
}

/// `phi_A(-1) / phi_A(1)` for `G_{lambda,A}`.
pub fn critical_ratio(lambda: C64, shift: C64) -> Result<C64> {
    let chart = KoenigsChart::build(&Representative::rational(lambda, shift), CriticalChoice::First)?;
    chart.value(Point::new(C64::new(-1.0, 0.0)))
}

struct Problem<'a> {
    geometry: &'a StarGeometry,
    lambda: C64,
    target: C64,
    /// Linearizer value and expected point after `tile_steps` forward steps.
    tile_steps: usize,
}

impl Problem<'_> {
    fn residual(&self, a: C64) -> Result<C64> {
        Ok(self.lambda * critical_ratio(self.lambda, a)? - self.target)
    }

    /// Newton's method with a central-difference derivative and step halving.
    fn newton(&self, seed: C64, opts: &SolveOptions) -> Result<(C64, f64, usize)> {
        let mut a = seed;
        let mut fa = self.residual(a).map_err(|_| Error::LeftR)?;
        for it in 0..opts.max_iter {
            if fa.norm() < opts.tol {
                return Ok((a, fa.norm(), it));
            }
            let h = 1e-6 * a.norm().max(1.0);
            let fp = self.residual(a + h).map_err(|_| Error::LeftR)?;
            let fm = self.residual(a - h).map_err(|_| Error::LeftR)?;
            let d = (fp - fm) / (2.0 * h);
            let step = fa / d;
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..16 {
                let cand = a - step * t;
                if let Ok(fc) = self.residual(cand) {
                    if fc.norm() < fa.norm() {
                        a = cand;
                        fa = fc;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if fa.norm() < opts.tol {
            Ok((a, fa.norm(), opts.max_iter))
        } else {
            Err(Error::NoConvergence(format!("Newton stalled at residual {:.2e}", fa.norm())))
        }
    }

    /// The solution is reached by continuing along the star: the transferred
    /// critical value and the target both pull back to the right points.
    fn branch_ok(&self, a: C64, swapped: bool) -> bool {
        let rep = Representative::rational(self.lambda, a);
        let choice = if swapped { CriticalChoice::Second } else { CriticalChoice::First };
        let chart = match KoenigsChart::build(&rep, choice) {
            Ok(c) => c,
            Err(_) => return false,
        };
        let [c1, c2] = rep.critical_points();
        let (marked, free) = if swapped { (c2, c1) } else { (c1, c2) };
        let branch = star_branch(self.geometry);
        let v1 = rep.apply(marked);
        let first = chart.inverse(self.lambda, branch).map(|p| p.chordal(&v1) < BRANCH_TOL).unwrap_or(false);
        if !first {
            return false;
        }
        let mut expected = rep.apply(free);
        for _ in 0..self.tile_steps {
            expected = rep.apply(expected);
        }
        let w = chart.value(rep.apply(free)).unwrap_or(self.target);
        let w = w * (self.tile_steps as f64 * self.lambda.ln()).exp();
        chart.inverse(w, branch).map(|p| p.chordal(&expected) < BRANCH_TOL).unwrap_or(false)
    }
}

/// Solves for the parameter attached to `x`. A `seed` is a normalized shift,
/// typically the previous solution along a sequence of multipliers.
pub fn solve_phi(atlas: &FatouAtlas, geometry: &StarGeometry, x: Point, seed: Option<C64>) -> Result<PhiSolve> {
    solve_phi_with(atlas, geometry, x, seed, &SolveOptions::default())
}

pub fn solve_phi_with(
    atlas: &FatouAtlas,
    geometry: &StarGeometry,
    x: Point,
    seed: Option<C64>,
    opts: &SolveOptions,
) -> Result<PhiSolve> {
    let data = xi_star_data(atlas, geometry, x)?;
    let (tile_steps, _) = atlas.tile_entry(x, TILE_BUDGET)?;
    let lambda = geometry.lambda;
    let direct = transfer(geometry, data);
    let finish = |a: C64, residual: f64, iters: usize, source: SeedSource, branch: SolveBranch, target: C64| PhiSolve {
        x,
        x_data: data,
        lambda,
        sigma: Representative::rational(lambda, a).sigma(),
        shift: a,
        target,
        residual,
        newton_iters: iters,
        seed_source: source,
        branch,
    };
    let accepts = |problem: &Problem, a: C64, swapped: bool| {
        maps::classify_relatedness(&Representative::rational(lambda, a), maps::DEFAULT_MAX_ITER, None) == Relatedness::InR
            && problem.branch_ok(a, swapped)
    };
    for (branch, target) in [(SolveBranch::Direct, direct), (SolveBranch::Involuted, lambda * lambda / direct)] {
        let problem = Problem { geometry, lambda, target, tile_steps };
        let swapped = branch == SolveBranch::Involuted;
        if let Some(s) = seed {
            let s = if swapped { -s } else { s };
            if let Ok((a, res, it)) = problem.newton(s, opts) {
                if accepts(&problem, a, swapped) {
                    return Ok(finish(a, res, it, SeedSource::Continuation, branch, target));
                }
            }
        }
        let mut seeds = grid_seeds(&problem, opts);
        seeds.truncate(opts.seeds);
        let mut roots: Vec<(C64, f64, usize)> = Vec::new();
        for s in seeds {
            if let Ok(root) = problem.newton(s, opts) {
                if roots.iter().all(|r| (r.0 - root.0).norm() > 1e-6 * root.0.norm().max(1.0)) {
                    if accepts(&problem, root.0, swapped) {
                        return Ok(finish(root.0, root.1, root.2, SeedSource::GridScan, branch, target));
                    }
                    roots.push(root);
                }
            }
        }
    }
    Err(Error::NoConvergence("no root passed the relatedness and branch checks".into()))
}

fn grid_seeds(problem: &Problem, opts: &SolveOptions) -> Vec<C64> {
    let n = opts.grid_points.max(2);
    let r = opts.grid_radius;
    let mut scored = Vec::new();
    for i in 0..n {
        for k in 0..n {
            let a = C64::new(-r + 2.0 * r * i as f64 / (n - 1) as f64, -r + 2.0 * r * k as f64 / (n - 1) as f64);
            if a.norm() > r * (1.0 + 1e-12) {
                continue;
            }
            if let Ok(f) = problem.residual(a) {
                if f.norm().is_finite() {
                    scored.push((f.norm(), a));
                }
            }
        }
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    scored.into_iter().map(|s| s.1).collect()
}

/// Whether `z` lies in the domain of the conjugacy attached to `solve`.
pub fn conjugacy_domain(atlas: &FatouAtlas, geometry: &StarGeometry, solve: &PhiSolve, z: Point) -> Result<FatouData> {
    let phi = atlas.value(z)?;
    let (steps, label) = atlas.tile_entry(z, 0).map_err(|_| Error::OutsideDomain("not in a tile".into()))?;
    debug_assert_eq!(steps, 0);
    if phi.im.abs() >= geometry.height / 2.0 {
        return Err(Error::OutsideDomain("outside the strip".into()));
    }
    let rot: Rotation = geometry.pq.into();
    let tol = 1e-12;
    if phi.im.abs() < tol && phi.re <= fatou::slit_endpoint(rot, label) + tol {
        return Err(Error::OutsideDomain("on the critical slit".into()));
    }
    let shift = fatou::transfer_shift(rot, label, solve.x_data.label) as f64 / rot.q as f64;
    if (phi.im - solve.x_data.phi.im).abs() < tol && phi.re <= solve.x_data.phi.re + shift - 1.0 + tol {
        return Err(Error::OutsideDomain("on the slit of the marked point".into()));
    }
    Ok(FatouData { phi, label })
}

/// The conjugacy from the parabolic basin to the basin of `G_{lambda,A}`.
pub fn conjugacy_value(atlas: &FatouAtlas, geometry: &StarGeometry, solve: &PhiSolve, z: Point) -> Result<Point> {
    let data = conjugacy_domain(atlas, geometry, solve, z)?;
    let chart = KoenigsChart::build(&solve.representative(), CriticalChoice::First)?;
    chart.inverse(transfer(geometry, data), star_branch(geometry))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Rational;
    use std::sync::OnceLock;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn half_atlas() -> &'static FatouAtlas {
        static A: OnceLock<FatouAtlas> = OnceLock::new();
        A.get_or_init(|| FatouAtlas::polynomial("1/2".parse().unwrap()).unwrap())
    }

    #[test]
    fn target_of_the_critical_value_is_lambda() {
        let atlas = half_atlas();
        let pq: Rational = "1/2".parse().unwrap();
        let g = StarGeometry::new(pq, c(-0.9, 0.0), None).unwrap();
        // P(-omega/2) is the critical value itself, so use the transfer directly.
        let w = transfer(&g, FatouData { phi: c(0.5, 0.0), label: 1 });
        assert!((w - c(-0.9, 0.0)).norm() < 1e-14);
        assert!(matches!(target_value(atlas, &g, Point::new(c(-0.25, 0.0))), Err(Error::NotInXiStar(_))));
        let x = atlas.inverse(0, c(0.3, 0.1)).unwrap();
        let wx = target_value(atlas, &g, x).unwrap();
        let wpx = target_value(atlas, &g, atlas.rep().apply(x)).unwrap();
        assert!((wpx - g.lambda * wx).norm() < 1e-9);
    }

    #[test]
    fn model_point_identification() {
        let l = c(-0.5, 0.0);
        let w = c(0.3, 0.9);
        let a = ModelPoint::canonical(w, l);
        let b = ModelPoint::canonical(l * l / w, l);
        assert!(a.distance(&b) < 1e-15);
        assert!(a.w.norm() >= l.norm());
        let on = l * C64::from_polar(1.0, 0.4);
        let x = ModelPoint::canonical(on, l);
        let y = ModelPoint::canonical(l * l / on, l);
        assert!(x.distance(&y) < 1e-15 && (x.w / l).im >= 0.0);
    }

    #[test]
    fn chi_is_invariant_under_normalization_swap() {
        let class = Representative::rational(c(-0.5, 0.0), c(3.0, 4.0)).class();
        let a = chi_with(&class, CriticalChoice::First).unwrap();
        let b = chi_with(&class, CriticalChoice::Second).unwrap();
        assert!(a.distance(&b) < 1e-9);
        let outside = MapClass::new(c(-0.5, 0.0), c(0.0, 0.0));
        assert_eq!(chi(&outside).unwrap_err(), Error::NotInR);
    }

    #[test]
    fn chi_tends_to_lambda_as_sigma_grows() {
        let l = c(-0.5, 0.0);
        let d: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|s| (chi(&MapClass::new(l, c(*s, 0.3 * s))).unwrap().w - l).norm())
            .collect();
        assert!(d[0] > d[1] && d[1] > d[2]);
    }

    #[test]
    fn radial_solve_has_the_defining_identity() {
        let atlas = half_atlas();
        let pq: Rational = "1/2".parse().unwrap();
        let lambda = -(-0.2f64).exp();
        let g = StarGeometry::new(pq, c(lambda, 0.0), None).unwrap();
        let x = atlas.inverse(0, c(0.3, 0.1)).unwrap();
        let s = solve_phi(atlas, &g, x, None).unwrap();
        assert!(s.residual < 1e-10);
        let chart = KoenigsChart::build(&s.representative(), CriticalChoice::First).unwrap();
        let v2 = s.representative().apply(Point::new(c(-1.0, 0.0)));
        assert!((chart.value(v2).unwrap() - s.target).norm() < 1e-9);
        assert_eq!(maps::classify_relatedness(&s.representative(), maps::DEFAULT_MAX_ITER, None), Relatedness::InR);
        // The model point of the solution is the class of the target.
        let m = chi(&MapClass::new(s.lambda, s.sigma)).unwrap();
        assert!(m.distance(&ModelPoint::canonical(s.target, s.lambda)) < 1e-8);
        // A nearby multiplier continues the solution.
        let g2 = StarGeometry::new(pq, c(-(-0.19f64).exp(), 0.0), None).unwrap();
        let s2 = solve_phi(atlas, &g2, x, Some(s.normalized_shift())).unwrap();
        assert_eq!(s2.seed_source, SeedSource::Continuation);
        assert!((s2.sigma - s.sigma).norm() < 0.1 * s.sigma.norm());
    }

    #[test]
    fn conjugacy_matches_critical_points_and_dynamics() {
        let atlas = half_atlas();
        let pq: Rational = "1/2".parse().unwrap();
        let g = StarGeometry::new(pq, c(-(-0.2f64).exp(), 0.0), None).unwrap();
        let x = atlas.inverse(0, c(0.3, 0.1)).unwrap();
        let s = solve_phi(atlas, &g, x, None).unwrap();
        let rep = s.representative();
        let free_value = rep.apply(Point::new(c(-1.0, 0.0)));
        assert!(conjugacy_value(atlas, &g, &s, x).unwrap().chordal(&free_value) < 1e-7);
        let v = conjugacy_value(atlas, &g, &s, atlas.rep().apply(x)).unwrap();
        assert!(v.chordal(&rep.apply(free_value)) < 1e-7);
        for phi in [c(0.4, 0.5), c(0.9, -0.3), c(1.3, 0.2)] {
            let z = atlas.inverse(1, phi).unwrap();
            let lhs = conjugacy_value(atlas, &g, &s, atlas.rep().apply(z)).unwrap();
            let rhs = rep.apply(conjugacy_value(atlas, &g, &s, z).unwrap());
            assert!(lhs.chordal(&rhs) < 1e-8);
        }
    }
}
