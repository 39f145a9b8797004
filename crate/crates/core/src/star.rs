//! Strip and wire geometry of the star of an attracting multiplier close to
//! a root of unity.
//!
//! In the normalized coordinate `Z = log w / L`, with `L = q Log(lambda
//! omega^-p)`, the lattice lines through critical log-values become the
//! horizontal lines `Im Z = -j m`, where `m` is the strip height. Strips are
//! indexed downwards from the line through `0`; wires are their midlines.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::maps::Rational;
use crate::C64;

pub const DEFAULT_LINE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarGeometry {
    pub pq: Rational,
    pub lambda: C64,
    /// `L = q Log(lambda omega^-p)`.
    pub log_step: C64,
    /// Angle between `L` and `2 pi i`.
    pub theta: f64,
    /// Strip height `2 pi sin(theta) / (q |L|)`.
    pub height: f64,
    /// Radius `|L| / (2 q sin(theta))` of the circle tangent to the imaginary
    /// axis at `2 pi i p/q` through `log lambda`.
    pub r_lambda: f64,
    /// Log-values of the critical linearizer values; the first is 0.
    pub zeta: Vec<C64>,
    /// Number of line families (1 or 2).
    pub families: usize,
    /// Least distance between the two normalized line families.
    pub gap: Option<f64>,
    /// Depth in `(0, m)` of the first second-family line below `Im Z = 0`.
    second_offset: Option<f64>,
    pub line_tol: f64,
}

/// Where a log-value sits among the strips.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripLocation {
    pub strip: usize,
    /// Signed distance (normalized units) above the nearest line.
    pub line_distance: f64,
    /// Signed distance (normalized units) above the strip's wire.
    pub wire_distance: f64,
}

/// `L = q Log(lambda omega^-p)`, rejecting the ray where it hits the branch cut.
pub fn log_step(pq: Rational, lambda: C64) -> Result<C64> {
    if !(lambda.norm() > 0.0 && lambda.norm() < 1.0) {
        return Err(Error::NotAttracting(lambda.norm()));
    }
    let rotated = lambda * pq.omega().conj();
    if rotated.im == 0.0 && rotated.re < 0.0 {
        return Err(Error::OnExcludedRay);
    }
    Ok(pq.q() as f64 * rotated.ln())
}

/// Strip height for `lambda` at the root of unity `pq`.
pub fn strip_height(pq: Rational, lambda: C64) -> Result<f64> {
    let l = log_step(pq, lambda)?;
    Ok(TAU * l.re.abs() / (pq.q() as f64 * l.norm_sqr()))
}

/// `m(lambda) >= M`.
pub fn in_horodisk(pq: Rational, lambda: C64, height: f64) -> Result<bool> {
    Ok(strip_height(pq, lambda)? >= height)
}

/// The equivalent test `lambda in exp(D(-r + 2 pi i p/q, r))`, `r = pi/(q^2 M)`.
pub fn in_exp_disk(pq: Rational, lambda: C64, height: f64) -> Result<bool> {
    let q = pq.q() as f64;
    let r = PI / (q * q * height);
    let log_lambda = log_step(pq, lambda)? / q + C64::new(0.0, TAU * pq.p() as f64 / q);
    Ok((log_lambda - C64::new(-r, TAU * pq.p() as f64 / q)).norm() <= r)
}

/// `|Im(conj(omega) lambda_k)| / sqrt(1 - |lambda_k|^2)` for each term.
pub fn subhorocyclic_rate(pq: Rational, lambdas: &[C64]) -> Vec<f64> {
    let w = pq.omega().conj();
    lambdas.iter().map(|l| (w * l).im.abs() / (1.0 - l.norm_sqr()).sqrt()).collect()
}

impl StarGeometry {
    pub fn new(pq: Rational, lambda: C64, zeta2: Option<C64>) -> Result<Self> {
        let l = log_step(pq, lambda)?;
        let q = pq.q() as f64;
        let sin = l.re.abs() / l.norm();
        let theta = (l.im / l.norm()).clamp(-1.0, 1.0).acos();
        let height = TAU * sin / (q * l.norm());
        let r_lambda = l.norm() / (2.0 * q * sin);
        let mut geom = StarGeometry {
            pq,
            lambda,
            log_step: l,
            theta,
            height,
            r_lambda,
            zeta: vec![C64::new(0.0, 0.0)],
            families: 1,
            gap: None,
            second_offset: None,
            line_tol: DEFAULT_LINE_TOL,
        };
        if let Some(z2) = zeta2 {
            geom.zeta.push(z2);
            let depth = (-(z2 / l).im).rem_euclid(height);
            let dist = depth.min(height - depth);
            if dist > geom.line_tol {
                geom.families = 2;
                geom.gap = Some(dist);
                geom.second_offset = Some(depth);
            }
        }
        Ok(geom)
    }

    /// Number of strips modulo the action of `2 pi i`.
    pub fn strip_count(&self) -> usize {
        self.families * self.pq.q() as usize
    }

    /// Lines `Im Z` in one period `[−m, 0]`, from the top.
    fn period_lines(&self) -> Vec<f64> {
        match self.second_offset {
            Some(d) => vec![0.0, -d, -self.height],
            None => vec![0.0, -self.height],
        }
    }

    /// Height (normalized units) of strip `n`.
    pub fn strip_height_of(&self, n: usize) -> f64 {
        let lines = self.period_lines();
        let i = n % self.families;
        lines[i] - lines[i + 1]
    }

    /// Normalized `Im Z` of the wire of strip `n`.
    pub fn wire_level(&self, n: usize) -> f64 {
        let lines = self.period_lines();
        let i = n % self.families;
        let period = (n / self.families) as f64;
        0.5 * (lines[i] + lines[i + 1]) - period * self.height
    }

    /// Strip whose wire is fattest; the lowest index among equals.
    pub fn fat_strip(&self) -> usize {
        (0..self.families)
            .fold((0, f64::NEG_INFINITY), |best, n| {
                let h = self.strip_height_of(n);
                if h > best.1 + 1e-12 { (n, h) } else { best }
            })
            .0
    }

    /// Log-linearizer value on the wire of strip `n` at parameter `t`.
    pub fn wire_log_point(&self, n: usize, t: f64) -> C64 {
        self.log_step * C64::new(t, self.wire_level(n))
    }

    pub fn normalized(&self, logw: C64) -> C64 {
        logw / self.log_step
    }

    pub fn strip_and_wire(&self, logw: C64) -> Result<StripLocation> {
        let y = self.normalized(logw).im;
        let period = (-y / self.height).floor();
        let local = y + period * self.height; // in (-m, 0]
        let lines = self.period_lines();
        let mut i = 0;
        while i + 1 < lines.len() - 1 && local <= lines[i + 1] {
            i += 1;
        }
        let (top, bottom) = (lines[i], lines[i + 1]);
        let above_bottom = local - bottom;
        let below_top = top - local;
        let line_distance = if above_bottom <= below_top { above_bottom } else { -below_top };
        if line_distance.abs() < self.line_tol {
            return Err(Error::OnLine(line_distance));
        }
        let strip_raw = period as i64 * self.families as i64 + i as i64;
        let count = (self.families as i64) * self.pq.q() as i64;
        Ok(StripLocation {
            strip: strip_raw.rem_euclid(count) as usize,
            line_distance,
            wire_distance: local - 0.5 * (top + bottom),
        })
    }
}
