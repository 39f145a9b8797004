//! Boundary sequences: multipliers `lambda_k → omega`, the parameters
//! attached to a fixed basin point, and what they converge to.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fatou::{FatouAtlas, PetalIndex, Rotation, SectorClass, SectorScope, SampleFilter};
use crate::linearize::{CriticalChoice, KoenigsChart};
use crate::maps::{self, Point, Rational, Relatedness, Representative};
use crate::parametrize::{self, PhiSolve, SeedSource, SolveBranch, SolveOptions};
use crate::star::{self, StarGeometry};
use crate::C64;

/// `|sigma|` beyond which a sequence is declared divergent.
pub const DIVERGENCE_CAP: f64 = 1e6;
/// Number of final terms examined for monotone tails.
pub const TAIL: usize = 8;
/// Test circle size for rescaling fits.
pub const TEST_POINTS: usize = 16;
/// Slack for the modulus inequalities.
/// Bound on the final tangential ratio of an accepted schedule.
pub const SUBHOROCYCLIC_THRESHOLD: f64 = 0.25;
pub const MODULUS_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePreset {
    /// `omega exp(-1/k)`.
    Radial,
    /// `omega exp(-1/k + i/k)`, inside every horodisk eventually.
    Spiral,
    /// `omega exp(-1/k^2 + i/k)`, tangential; a control that breaks the
    /// hypotheses on purpose.
    Tangential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub preset: SchedulePreset,
    pub k_start: usize,
    pub k_end: usize,
}

impl Schedule {
    pub fn new(preset: SchedulePreset, k_start: usize, k_end: usize) -> Self {
        Schedule { preset, k_start, k_end }
    }

    pub fn lambda(&self, pq: Rational, k: usize) -> C64 {
        let k = k as f64;
        let exponent = match self.preset {
            SchedulePreset::Radial => C64::new(-1.0 / k, 0.0),
            SchedulePreset::Spiral => C64::new(-1.0 / k, 1.0 / k),
            SchedulePreset::Tangential => C64::new(-1.0 / (k * k), 1.0 / k),
        };
        pq.omega() * exponent.exp()
    }

    pub fn terms(&self, pq: Rational) -> Vec<(usize, C64)> {
        (self.k_start..=self.k_end).map(|k| (k, self.lambda(pq, k))).collect()
    }

    /// Accepted when the tangential ratio is non-increasing over the tail and
    /// ends below `threshold`.
    pub fn is_subhorocyclic(&self, pq: Rational, threshold: f64) -> bool {
        let lambdas: Vec<C64> = self.terms(pq).into_iter().map(|t| t.1).collect();
        let rates = star::subhorocyclic_rate(pq, &lambdas);
        let tail = &rates[rates.len().saturating_sub(TAIL)..];
        tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) && tail.last().is_some_and(|r| *r < threshold)
    }
}

/// Least-squares polynomial extrapolation to `s = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub value: C64,
    pub error: f64,
    pub degree: usize,
}

fn polynomial_intercept(xs: &[C64], ys: &[C64], degree: usize) -> Option<C64> {
    let scale = xs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 || xs.len() <= degree {
        return None;
    }
    let v = DMatrix::from_fn(xs.len(), degree + 1, |i, j| (xs[i] / scale).powu(j as u32));
    let y = DVector::from_column_slice(ys);
    let coef = v.svd(true, true).solve(&y, 1e-14).ok()?;
    Some(coef[0])
}

/// Fits `values` as a polynomial in `params` over the last `window` terms and
/// evaluates it at zero. The degree (1 to 3) is the one whose intercept moves
/// least when the degree is raised; that movement is the error estimate.
pub fn extrapolate_limit(params: &[C64], values: &[C64], window: usize) -> Result<Extrapolation> {
    let n = params.len().min(values.len());
    if n < 6 || window < 6 {
        return Err(Error::FitUnstable("too few terms".into()));
    }
    let start = n - window.min(n);
    let (xs, ys) = (&params[start..n], &values[start..n]);
    let intercepts: Vec<Option<C64>> = (1..=4).map(|d| polynomial_intercept(xs, ys, d)).collect();
    let mut best: Option<Extrapolation> = None;
    for d in 1..=3 {
        if let (Some(a), Some(b)) = (intercepts[d - 1], intercepts[d]) {
            let error = (a - b).norm();
            if best.is_none_or(|e| error < e.error) {
                best = Some(Extrapolation { value: b, error, degree: d + 1 });
            }
        }
    }
    best.ok_or_else(|| Error::FitUnstable("singular fit".into()))
}

/// `G(z)` and `G'(z)` in the affine coordinate.
fn affine_step(rep: &Representative, z: C64) -> (C64, C64) {
    match rep.kind {
        maps::MapKind::PolynomialP => (z * (rep.lambda + z), rep.lambda + 2.0 * z),
        _ => ((z * z + rep.shift * z + 1.0) / (rep.lambda * z), (z * z - 1.0) / (rep.lambda * z * z)),
    }
}

/// `g^n(z)` and its derivative.
pub fn iterate_affine(rep: &Representative, z: C64, n: usize) -> (C64, C64) {
    let mut v = z;
    let mut d = C64::new(1.0, 0.0);
    for _ in 0..n {
        let (nv, nd) = affine_step(rep, v);
        v = nv;
        d *= nd;
    }
    (v, d)
}

/// Newton's method for a fixed point of `g^n` near `seed`.
pub fn periodic_point(rep: &Representative, seed: C64, n: usize) -> Result<C64> {
    let mut z = seed;
    for _ in 0..100 {
        let (v, d) = iterate_affine(rep, z, n);
        let step = (v - z) / (d - 1.0);
        if !step.norm().is_finite() {
            return Err(Error::NewtonDiverged);
        }
        z -= step;
        if step.norm() < 1e-14 * z.norm().max(1.0) {
            return Ok(z);
        }
    }
    let (v, _) = iterate_affine(rep, z, n);
    if (v - z).norm() < 1e-10 * z.norm().max(1.0) {
        Ok(z)
    } else {
        Err(Error::NewtonDiverged)
    }
}

/// A cycle of wires followed to its end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireLanding {
    pub strip: usize,
    /// The landing cycle, starting at the end of the traced wire.
    pub cycle: Vec<C64>,
    pub period: usize,
    /// Multiplier of the landing point under its own period: `mu` for a
    /// fixed point, `rho` for a `q`-cycle.
    pub multiplier: C64,
    /// Logarithm of the return multiplier `(g^q)'` on the branch traced out
    /// by one return of the wire.
    pub winding: C64,
    /// Number of `g^q` pullbacks traced before the wire settled.
    pub levels: usize,
}

/// Follows the wire of `strip` from the star towards the Julia set by
/// pulling back one fundamental segment under `g^q`, then snaps to the
/// periodic point it lands on.
pub fn trace_wire_landing(
    rep: &Representative,
    chart: &KoenigsChart,
    geometry: &StarGeometry,
    strip: usize,
    budget: usize,
) -> Result<WireLanding> {
    let q = geometry.pq.q() as usize;
    let branch = parametrize::star_branch(geometry);
    let start = geometry.wire_log_point(strip, 0.0).exp();
    let mut samples = 64;
    let mut segment = loop {
        match chart.inverse_path(start, branch, samples) {
            Err(Error::BranchAmbiguous) if samples < 1024 => samples *= 2,
            other => break other?,
        }
    };
    let mut levels = 0;
    loop {
        let next = linearize_pull_back(rep, &segment, q)?;
        let moved = next[0].chordal(&segment[0]);
        segment = next;
        levels += 1;
        if moved < 1e-9 {
            break;
        }
        if levels >= budget {
            return Err(Error::NoLanding);
        }
    }
    let end = segment[0].finite().ok_or(Error::NoLanding)?;
    let landing = periodic_point(rep, end, q)?;
    if (landing - end).norm() > 1e-5 * landing.norm().max(1.0) {
        return Err(Error::NoLanding);
    }
    let period = (1..=q)
        .find(|d| q.is_multiple_of(*d) && (iterate_affine(rep, landing, *d).0 - landing).norm() < 1e-9 * landing.norm().max(1.0))
        .unwrap_or(q);
    let multiplier = iterate_affine(rep, landing, period).1;
    let ret = iterate_affine(rep, landing, q).1;
    // Continuous log of (gamma - landing) along one return of the wire.
    let mut traced = C64::new(0.0, 0.0);
    let pts: Vec<C64> = segment.iter().map(|p| p.to_complex() - landing).collect();
    for w in pts.windows(2) {
        traced += (w[1] / w[0]).ln();
    }
    let turns = ((traced - ret.ln()).im / TAU).round();
    let winding = ret.ln() + C64::new(0.0, TAU * turns);
    let mut cycle = vec![landing];
    for _ in 1..period {
        cycle.push(affine_step(rep, *cycle.last().unwrap()).0);
    }
    Ok(WireLanding { strip, cycle, period, multiplier, winding, levels })
}

fn linearize_pull_back(rep: &Representative, segment: &[Point], q: usize) -> Result<Vec<Point>> {
    crate::linearize::pull_back_path(rep, segment, segment[0], q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModulusCase {
    /// Fixed-point landing, one line family: `r_mu <= r_lambda`.
    FixedSingle,
    /// Fixed-point landing, two families: `pi/(q r_mu) >= q (m - h)`.
    FixedDouble,
    /// Cycle landing, one family: `r_rho <= q^2 r_lambda`.
    CycleSingle,
    /// Cycle landing, two families: `pi/r_rho >= m - h`.
    CycleDouble,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusCheck {
    pub case: ModulusCase,
    /// Horocyclic radius of the landing multiplier.
    pub r_landing: f64,
    pub r_lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Horocyclic radius of the landing multiplier, from the wire's winding:
/// `|M|^2 / (2 q |Re M|)` at a fixed point, `|R|^2 / (2 |Re R|)` on a cycle.
pub fn landing_radius(landing: &WireLanding, q: usize) -> f64 {
    let w = landing.winding;
    let r = w.norm_sqr() / (2.0 * w.re.abs());
    if landing.period == 1 {
        r / q as f64
    } else {
        r
    }
}

pub fn modulus_inequality_check(geometry: &StarGeometry, landing: &WireLanding) -> ModulusCheck {
    let q = geometry.pq.q() as usize;
    let qf = q as f64;
    let r_landing = landing_radius(landing, q);
    let r_lambda = geometry.r_lambda;
    let h = geometry.gap.unwrap_or(0.0);
    let m = geometry.height;
    let (case, lhs, rhs, pass) = match (landing.period == 1, geometry.families == 2) {
        (true, false) => (ModulusCase::FixedSingle, r_landing, r_lambda, r_landing <= r_lambda * (1.0 + MODULUS_SLACK)),
        (true, true) => {
            let (l, r) = (PI / (qf * r_landing), qf * (m - h));
            (ModulusCase::FixedDouble, l, r, l >= r * (1.0 - MODULUS_SLACK))
        }
        (false, false) => {
            let r = qf * qf * r_lambda;
            (ModulusCase::CycleSingle, r_landing, r, r_landing <= r * (1.0 + MODULUS_SLACK))
        }
        (false, true) => {
            let (l, r) = (PI / r_landing, m - h);
            (ModulusCase::CycleDouble, l, r, l >= r * (1.0 - MODULUS_SLACK))
        }
    };
    ModulusCheck { case, r_landing, r_lambda, lhs, rhs, pass }
}

/// Star of `g` normalized at `+1`, with the free critical point as second family.
pub fn star_of(rep: &Representative, pq: Rational) -> Result<(KoenigsChart, StarGeometry)> {
    let chart = KoenigsChart::build(rep, CriticalChoice::First)?;
    let v2 = rep.apply(Point::new(C64::new(-1.0, 0.0)));
    let zeta2 = (chart.value(v2)? / rep.lambda).ln();
    let geometry = StarGeometry::new(pq, rep.lambda, Some(zeta2))?;
    Ok((chart, geometry))
}

/// Test circle `|z| = 1`, offset half a step from the critical points.
pub fn test_circle(n: usize) -> Vec<C64> {
    (0..n).map(|j| C64::from_polar(1.0, TAU * (j as f64 + 0.5) / n as f64)).collect()
}

/// Mean of `g^q(z) - z - 1/z` over the test circle.
pub fn translation_estimate(rep: &Representative, q: usize, points: usize) -> C64 {
    let circle = test_circle(points);
    circle.iter().map(|z| iterate_affine(rep, *z, q).0 - z - 1.0 / z).sum::<C64>() / points as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescalingFit {
    pub translation: C64,
    pub fit_error: f64,
    /// Per-term estimates `T_k`.
    pub translation_trace: Vec<C64>,
    /// `sup |g_k^q - G_T|` on the test circle.
    pub sup_error_trace: Vec<f64>,
    /// `min |g_k^l|` on the test circle over `0 < l < q`.
    pub intermediate_min: Vec<f64>,
    /// Change of the fitted translation when the test circle is doubled.
    pub doubling_change: f64,
}

/// Fits the rescaling limit `g_k^q → z + T + 1/z`; `params` are the
/// extrapolation variables (the log steps).
pub fn fit_rescaling_limit(reps: &[Representative], params: &[C64], pq: Rational) -> Result<RescalingFit> {
    let q = pq.q() as usize;
    let shifts: Vec<f64> = reps.iter().map(|r| r.shift.norm()).collect();
    let tail = &shifts[shifts.len().saturating_sub(TAIL)..];
    if tail.len() < 2 || !tail.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::NotDiverging);
    }
    let trace: Vec<C64> = reps.iter().map(|r| translation_estimate(r, q, TEST_POINTS)).collect();
    let doubled: Vec<C64> = reps.iter().map(|r| translation_estimate(r, q, 2 * TEST_POINTS)).collect();
    let window = reps.len().min(16);
    let fit = extrapolate_limit(params, &trace, window)?;
    let fit2 = extrapolate_limit(params, &doubled, window)?;
    let circle = test_circle(TEST_POINTS);
    let t = fit.value;
    let sup_error_trace = reps
        .iter()
        .map(|r| circle.iter().map(|z| (iterate_affine(r, *z, q).0 - (z + t + 1.0 / z)).norm()).fold(0.0, f64::max))
        .collect();
    let intermediate_min = reps
        .iter()
        .map(|r| {
            circle
                .iter()
                .flat_map(|z| (1..q).map(move |l| iterate_affine(r, *z, l).0.norm()))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(RescalingFit {
        translation: t,
        fit_error: fit.error,
        translation_trace: trace,
        sup_error_trace,
        intermediate_min,
        doubling_change: (fit2.value - t).norm(),
    })
}

/// The `q`-cycle of `g` near the fixed point `-1/T` of the rescaling limit,
/// and its multiplier.
pub fn rescaled_cycle(rep: &Representative, translation: C64, q: usize) -> Result<(C64, C64)> {
    let z = periodic_point(rep, -1.0 / translation, q)?;
    Ok((z, iterate_affine(rep, z, q).1))
}

/// Dynamics of the limit `G_T(z) = z + T + 1/z` at its parabolic point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitDynamics {
    pub translation: C64,
    pub sigma: C64,
    pub relatedness: Relatedness,
    /// Petal of `+1` and `-1` in the parabolic basin of infinity.
    pub petals: [Option<PetalIndex>; 2],
    /// Smallest `n` with `G_T^n(-1)` within tolerance of zero.
    pub hits_zero: Option<usize>,
}

pub fn limit_dynamics(translation: C64) -> LimitDynamics {
    let rep = Representative::parabolic(translation);
    let relatedness = maps::classify_relatedness(&rep, maps::DEFAULT_MAX_ITER, None);
    let atlas = FatouAtlas::new(&rep, Rotation { p: 0, q: 1 }, Point::new(C64::new(1.0, 0.0))).ok();
    let petal = |z: f64| atlas.as_ref().and_then(|a| a.petal_index(Point::new(C64::new(z, 0.0))).ok());
    let mut z = Point::new(C64::new(-1.0, 0.0));
    let mut hits_zero = None;
    for n in 1..=64 {
        z = rep.apply(z);
        if z.chordal(&Point::new(C64::new(0.0, 0.0))) < 1e-8 {
            hits_zero = Some(n);
            break;
        }
    }
    LimitDynamics { translation, sigma: 1.0 - translation * translation, relatedness, petals: [petal(1.0), petal(-1.0)], hits_zero }
}

/// Residuals of the limiting conjugacy for a bounded sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitConjugacy {
    /// Chordal distance from the image of the basin point to the free
    /// critical value of the limit map.
    pub critical_value_error: f64,
    /// Same for the polynomial's critical value and the marked one.
    pub marked_value_error: f64,
    pub samples: usize,
    /// `sup |Psi(P z) - f(Psi z)|` over the samples.
    pub equation_residual: f64,
}

/// Transfers basin points of the polynomial to the parabolic basin of
/// `G_{omega,A}` through the two Fatou coordinates.
pub fn limit_conjugacy_check(
    atlas: &FatouAtlas,
    x: Point,
    shift: C64,
    height: f64,
    samples: usize,
    seed: u64,
) -> Result<LimitConjugacy> {
    let rot = atlas.rotation;
    let rep = Representative::rational(rot.omega(), shift);
    let target = FatouAtlas::new(&rep, rot, Point::new(C64::new(1.0, 0.0)))?;
    let psi = |z: Point| -> Result<Point> { target.inverse(atlas.label(z)?, atlas.value(z)?) };
    let critical_value_error = psi(x)?.chordal(&rep.apply(Point::new(C64::new(-1.0, 0.0))));
    let cv = atlas.rep().apply(atlas.critical);
    let marked_value_error = psi(cv)?.chordal(&rep.apply(Point::new(C64::new(1.0, 0.0))));
    let mut residual: f64 = 0.0;
    let mut used = 0;
    for s in atlas.sample_xi_star(height, samples, SampleFilter::Any, seed) {
        let (Ok(a), Ok(b)) = (psi(atlas.rep().apply(s.point)), psi(s.point)) else { continue };
        residual = residual.max(a.chordal(&rep.apply(b)));
        used += 1;
    }
    Ok(LimitConjugacy { critical_value_error, marked_value_error, samples: used, equation_residual: residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    BoundedThm1,
    #[serde(rename = "UnboundedThm2_Bp")]
    UnboundedThm2Bp,
    #[serde(rename = "UnboundedThm2_SpNotBp")]
    UnboundedThm2SpNotBp,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub k: usize,
    pub lambda: C64,
    pub sigma: C64,
    /// Normalized shift.
    pub shift: C64,
    pub residual: f64,
    pub newton_iters: usize,
    pub seed_source: SeedSource,
    pub branch: SolveBranch,
    pub related: bool,
    pub landing: Option<WireLanding>,
    pub modulus: Option<ModulusCheck>,
    /// Multiplier of the `q`-cycle near `-1/T` for divergent sequences.
    pub rescaled_multiplier: Option<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedLimit {
    pub sigma: Extrapolation,
    pub shift: Extrapolation,
    /// Relatedness of `G_{omega, A}` at the extrapolated shift.
    pub relatedness: Relatedness,
    pub conjugacy: Option<LimitConjugacy>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnboundedLimit {
    pub fit: RescalingFit,
    pub dynamics: LimitDynamics,
    /// Extrapolated limit of the rescaled cycle multipliers and its distance
    /// to `1 - T^2`.
    pub multiplier_limit: Option<C64>,
    pub multiplier_gap: Option<f64>,
    /// Multiplier of the `q`-cycle near `-1/T_k` per term.
    pub multipliers: Vec<Option<C64>>,
    /// `|rho_k - (1 - T^2)|` per term.
    pub multiplier_trace: Vec<f64>,
    /// `|Psi_k(P^{q-1} x) - G_T(-1)|` and `|Psi_k(P^q(c)) - G_T(1)|` per term.
    pub critical_trace: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub pq: Rational,
    pub schedule: Schedule,
    pub horodisk: f64,
    pub x: Point,
    pub x_phi: C64,
    pub x_label: u32,
    pub x_petal: PetalIndex,
    pub x_sector: SectorClass,
    pub steps: Vec<StepRecord>,
    /// Terms whose solve failed, with the error.
    pub failures: Vec<(usize, String)>,
    pub verdict: Verdict,
    pub bounded: Option<BoundedLimit>,
    pub unbounded: Option<UnboundedLimit>,
}

impl SequenceReport {
    pub fn lambdas(&self) -> Vec<C64> {
        self.steps.iter().map(|s| s.lambda).collect()
    }

    pub fn sigmas(&self) -> Vec<C64> {
        self.steps.iter().map(|s| s.sigma).collect()
    }

    pub fn log_steps(&self) -> Vec<C64> {
        self.steps.iter().map(|s| star::log_step(self.pq, s.lambda).unwrap_or_default()).collect()
    }

    /// `|sigma_{k+1} - sigma_k|` over the steps.
    pub fn cauchy_tail(&self) -> Vec<f64> {
        self.steps.windows(2).map(|w| (w[1].sigma - w[0].sigma).norm()).collect()
    }

    pub fn all_modulus_checks_pass(&self) -> bool {
        self.steps.iter().all(|s| s.modulus.is_some_and(|m| m.pass))
    }

    pub fn landing_radii(&self) -> Vec<f64> {
        self.steps.iter().filter_map(|s| s.modulus.map(|m| m.r_landing)).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub solve: SolveOptions,
    pub cap: f64,
    pub trace_wires: bool,
    pub wire_budget: usize,
    pub conjugacy_samples: usize,
    pub seed: u64,
    /// Allow schedules that fail the subhorocyclic test.
    pub control: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            solve: SolveOptions::default(),
            cap: DIVERGENCE_CAP,
            trace_wires: true,
            wire_budget: 20_000,
            conjugacy_samples: 50,
            seed: 0,
            control: false,
        }
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn tail(v: &[f64]) -> &[f64] {
    &v[v.len().saturating_sub(TAIL)..]
}

/// Solves along the schedule with continuation, classifies the outcome and
/// computes the applicable limit data.
pub fn run_sequence(atlas: &FatouAtlas, x: Point, schedule: Schedule, horodisk: f64, opts: &RunOptions) -> Result<SequenceReport> {
    let rot = atlas.rotation;
    let pq = Rational::new(rot.p as i64, rot.q as i64)?;
    let q = rot.q as usize;
    if horodisk <= 1.0 / (q * q) as f64 {
        return Err(Error::Unsupported(format!("horodisk parameter must exceed 1/q^2, got {horodisk}")));
    }
    if !opts.control && !schedule.is_subhorocyclic(pq, SUBHOROCYCLIC_THRESHOLD) {
        return Err(Error::Unsupported("schedule is not subhorocyclic".into()));
    }
    let terms = schedule.terms(pq);
    // Control runs may leave the horodisk; their failures are reported per term.
    for (k, lambda) in terms.iter().filter(|_| !opts.control) {
        if !star::in_horodisk(pq, *lambda, horodisk)? {
            return Err(Error::Unsupported(format!("lambda_{k} lies outside the horodisk")));
        }
    }
    let x_phi = atlas.value(x)?;
    let x_label = atlas.label(x)?;
    let x_petal = atlas.petal_index(x)?;
    let x_sector = atlas.in_sector_p(x, SectorScope::OneStep)?;
    if x_phi.im.abs() >= horodisk / 2.0 {
        return Err(Error::NotInXiStar("basin point outside the horodisk strip".into()));
    }

    let mut steps: Vec<StepRecord> = Vec::new();
    let mut solves: Vec<PhiSolve> = Vec::new();
    let mut failures = Vec::new();
    let mut seed = None;
    for (k, lambda) in terms {
        let geometry = StarGeometry::new(pq, lambda, None)?;
        let solve = match parametrize::solve_phi_with(atlas, &geometry, x, seed, &opts.solve) {
            Ok(s) => s,
            Err(e) => {
                failures.push((k, e.to_string()));
                continue;
            }
        };
        let shift = solve.normalized_shift();
        seed = Some(shift);
        let rep = Representative::rational(lambda, shift);
        let related = maps::classify_relatedness(&rep, maps::DEFAULT_MAX_ITER, None) == Relatedness::InR;
        let (landing, modulus) = if opts.trace_wires {
            match star_of(&rep, pq).and_then(|(chart, g)| {
                let landing = trace_wire_landing(&rep, &chart, &g, g.fat_strip(), opts.wire_budget)?;
                let check = modulus_inequality_check(&g, &landing);
                Ok((landing, check))
            }) {
                Ok((l, m)) => (Some(l), Some(m)),
                Err(e) => {
                    failures.push((k, format!("wire: {e}")));
                    (None, None)
                }
            }
        } else {
            (None, None)
        };
        steps.push(StepRecord {
            k,
            lambda,
            sigma: solve.sigma,
            shift,
            residual: solve.residual,
            newton_iters: solve.newton_iters,
            seed_source: solve.seed_source,
            branch: solve.branch,
            related,
            landing,
            modulus,
            rescaled_multiplier: None,
        });
        solves.push(solve);
    }

    let mut report = SequenceReport {
        pq,
        schedule,
        horodisk,
        x,
        x_phi,
        x_label,
        x_petal,
        x_sector,
        steps,
        failures,
        verdict: Verdict::Inconclusive,
        bounded: None,
        unbounded: None,
    };
    let sizes: Vec<f64> = report.steps.iter().map(|s| s.sigma.norm()).collect();
    if sizes.len() < TAIL + 1 {
        return Ok(report);
    }
    let max = sizes.iter().cloned().fold(0.0, f64::max);
    let growing = tail(&sizes).windows(2).all(|w| w[1] > w[0]);
    let cauchy = report.cauchy_tail();
    if max > opts.cap && growing {
        report.verdict = if x_petal == PetalIndex::Immediate(rot.p % rot.q) || x_sector == SectorClass::InBp {
            Verdict::UnboundedThm2Bp
        } else {
            Verdict::UnboundedThm2SpNotBp
        };
        report.unbounded = unbounded_limit(&report, &solves).ok();
        if let Some(u) = &report.unbounded {
            for (step, m) in report.steps.iter_mut().zip(&u.multipliers) {
                step.rescaled_multiplier = *m;
            }
        }
    } else if max < opts.cap && strictly_decreasing(tail(&cauchy)) {
        report.verdict = Verdict::BoundedThm1;
        report.bounded = bounded_limit(atlas, &report, opts).ok();
    }
    Ok(report)
}

fn bounded_limit(atlas: &FatouAtlas, report: &SequenceReport, opts: &RunOptions) -> Result<BoundedLimit> {
    let params = report.log_steps();
    let window = report.steps.len().min(16);
    let sigma = extrapolate_limit(&params, &report.sigmas(), window)?;
    let shifts: Vec<C64> = report.steps.iter().map(|s| s.shift).collect();
    let shift = extrapolate_limit(&params, &shifts, window)?;
    let omega = report.pq.omega();
    let relatedness = maps::classify_relatedness(&Representative::rational(omega, shift.value), maps::DEFAULT_MAX_ITER, None);
    let conjugacy = if opts.conjugacy_samples > 0 {
        limit_conjugacy_check(atlas, report.x, shift.value, report.horodisk, opts.conjugacy_samples, opts.seed).ok()
    } else {
        None
    };
    Ok(BoundedLimit { sigma, shift, relatedness, conjugacy })
}

fn unbounded_limit(report: &SequenceReport, solves: &[PhiSolve]) -> Result<UnboundedLimit> {
    let q = report.pq.q() as usize;
    let reps: Vec<Representative> = report.steps.iter().map(|s| Representative::rational(s.lambda, s.shift)).collect();
    let params = report.log_steps();
    let fit = fit_rescaling_limit(&reps, &params, report.pq)?;
    let t = fit.translation;
    let dynamics = limit_dynamics(t);
    let limit_multiplier = 1.0 - t * t;
    let mut multipliers = Vec::new();
    let mut multiplier_trace = Vec::new();
    for (rep, tk) in reps.iter().zip(&fit.translation_trace) {
        match rescaled_cycle(rep, *tk, q) {
            Ok((_, rho)) => {
                multipliers.push(Some(rho));
                multiplier_trace.push((rho - limit_multiplier).norm());
            }
            Err(_) => {
                multipliers.push(None);
                multiplier_trace.push(f64::NAN);
            }
        }
    }
    let known: Vec<(C64, C64)> = params.iter().zip(&multipliers).filter_map(|(l, m)| m.map(|m| (*l, m))).collect();
    let multiplier_limit = if known.len() >= 6 {
        let (ls, ms): (Vec<C64>, Vec<C64>) = known.into_iter().unzip();
        extrapolate_limit(&ls, &ms, ls.len().min(16)).ok().map(|e| e.value)
    } else {
        None
    };
    let gt = Representative::parabolic(t);
    let gt_minus = gt.apply(Point::new(C64::new(-1.0, 0.0)));
    let gt_plus = gt.apply(Point::new(C64::new(1.0, 0.0)));
    let critical_trace = report
        .steps
        .iter()
        .zip(solves)
        .map(|(step, solve)| {
            let rep = Representative::rational(step.lambda, step.shift);
            let Ok(chart) = KoenigsChart::build(&rep, CriticalChoice::First) else { return [f64::NAN; 2] };
            let Ok(geometry) = StarGeometry::new(report.pq, step.lambda, None) else { return [f64::NAN; 2] };
            let branch = parametrize::star_branch(&geometry);
            let carry = step.lambda.powu(q as u32 - 1);
            let a = chart.inverse(carry * parametrize::transfer(&geometry, solve.x_data), branch).map(|p| p.chordal(&gt_minus));
            let b = chart.inverse(carry * step.lambda, branch).map(|p| p.chordal(&gt_plus));
            [a.unwrap_or(f64::NAN), b.unwrap_or(f64::NAN)]
        })
        .collect();
    Ok(UnboundedLimit {
        multiplier_gap: multiplier_limit.map(|m| (m - limit_multiplier).norm()),
        multiplier_limit,
        multipliers,
        fit,
        dynamics,
        multiplier_trace,
        critical_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn schedules_and_their_rates() {
        let pq: Rational = "1/2".parse().unwrap();
        assert!(Schedule::new(SchedulePreset::Radial, 5, 60).is_subhorocyclic(pq, 0.25));
        assert!(Schedule::new(SchedulePreset::Spiral, 5, 60).is_subhorocyclic(pq, 0.25));
        assert!(!Schedule::new(SchedulePreset::Tangential, 5, 60).is_subhorocyclic(pq, 0.25));
        let l = Schedule::new(SchedulePreset::Radial, 5, 60).lambda(pq, 10);
        assert!((l - c(-(-0.1f64).exp(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn extrapolation_recovers_a_polynomial() {
        let xs: Vec<C64> = (5..30).map(|k| c(-1.0 / k as f64, 0.3 / k as f64)).collect();
        let ys: Vec<C64> = xs.iter().map(|x| c(2.0, 1.0) + 3.0 * x - x * x * c(0.0, 5.0)).collect();
        let e = extrapolate_limit(&xs, &ys, 16).unwrap();
        assert!((e.value - c(2.0, 1.0)).norm() < 1e-10, "{e:?}");
    }

    #[test]
    fn periodic_points_of_the_rational_map() {
        let rep = Representative::rational(c(-0.5, 0.1), c(2.0, 1.0));
        for (p, mult) in maps::fixed_points(&rep) {
            if let Some(z) = p.finite() {
                let found = periodic_point(&rep, z + 1e-3, 1).unwrap();
                assert!((found - z).norm() < 1e-10);
                assert!((iterate_affine(&rep, found, 1).1 - mult).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn rescaling_limit_of_the_identity_family() {
        // G_T itself: the estimate is exact.
        let rep = Representative::parabolic(c(0.3, 2.0));
        assert!((translation_estimate(&rep, 1, 16) - c(0.3, 2.0)).norm() < 1e-12);
        let d = limit_dynamics(c(0.3, 2.0));
        assert!((d.sigma - (1.0 - c(0.3, 2.0) * c(0.3, 2.0))).norm() < 1e-15);
        // A period-one cycle of the limit sits at -1/T with multiplier 1 - T^2.
        let t = c(0.3, 2.0);
        let (z, m) = rescaled_cycle(&rep, t, 1).unwrap();
        assert!((z + 1.0 / t).norm() < 1e-12 && (m - (1.0 - t * t)).norm() < 1e-10);
    }

    #[test]
    fn landing_of_a_fat_wire() {
        let atlas = FatouAtlas::polynomial("1/2".parse().unwrap()).unwrap();
        let pq: Rational = "1/2".parse().unwrap();
        let g = StarGeometry::new(pq, c(-(-0.1f64).exp(), 0.0), None).unwrap();
        let x = atlas.inverse(0, c(0.3, 0.1)).unwrap();
        let s = parametrize::solve_phi(&atlas, &g, x, None).unwrap();
        let rep = Representative::rational(g.lambda, s.normalized_shift());
        let (chart, geometry) = star_of(&rep, pq).unwrap();
        let landing = trace_wire_landing(&rep, &chart, &geometry, geometry.fat_strip(), 20_000).unwrap();
        assert!(landing.multiplier.norm() > 1.0);
        assert!((landing.winding.exp() - iterate_affine(&rep, landing.cycle[0], 2).1).norm() < 1e-8);
        let check = modulus_inequality_check(&geometry, &landing);
        assert!(check.pass, "{check:?} {landing:?}");
    }
}
