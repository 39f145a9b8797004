//! Raster renderings of basins, stars and parameter slices.

use petalstar::linearize::{CriticalChoice, KoenigsChart};
use petalstar::maps::{self, MapClass, Relatedness};
use petalstar::parametrize;
use petalstar::{Error, FatouAtlas, PetalIndex, Point, Rational, Representative, StarGeometry, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::Path;

pub const MAX_RESOLUTION: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RasterKind {
    ParabolicBasin,
    StarOfPlambda,
    XiRegion,
    Per1Slice,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coloring {
    /// Hue by petal or strip, banded by the real part of the coordinate.
    Bands,
    /// Flat hue per class.
    Flat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Overlays {
    pub wires: bool,
    pub twig: bool,
    pub critical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterJob {
    pub kind: RasterKind,
    pub pq: Rational,
    /// Multiplier for star and slice renderings.
    #[serde(default)]
    pub lambda: Option<C64>,
    /// Horodisk parameter for the admissible region.
    #[serde(default)]
    pub horodisk: Option<f64>,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub coloring: Coloring,
    #[serde(default)]
    pub overlays: Overlays,
    /// Iteration budget per pixel for slice renderings.
    #[serde(default = "default_budget")]
    pub max_iter: usize,
}

fn default_budget() -> usize {
    500
}

impl RasterJob {
    pub fn validate(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 || self.width > MAX_RESOLUTION || self.height > MAX_RESOLUTION {
            return Err(format!("resolution {}x{} outside 1..={MAX_RESOLUTION}", self.width, self.height));
        }
        let w = self.window;
        if !(w.re_max > w.re_min && w.im_max > w.im_min) {
            return Err("window is degenerate".into());
        }
        Ok(())
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> C64 {
        let w = self.window;
        C64::new(
            w.re_min + (i as f64 + 0.5) * (w.re_max - w.re_min) / self.width as f64,
            w.im_max - (j as f64 + 0.5) * (w.im_max - w.im_min) / self.height as f64,
        )
    }

    pub fn pixel_diagonal(&self) -> f64 {
        let w = self.window;
        let dx = (w.re_max - w.re_min) / self.width as f64;
        let dy = (w.im_max - w.im_min) / self.height as f64;
        dx.hypot(dy)
    }

    /// Default job for each kind, matching the shipped examples.
    pub fn preset(kind: RasterKind, size: usize) -> Self {
        let third: Rational = "1/3".parse().unwrap();
        let half: Rational = "1/2".parse().unwrap();
        let (pq, lambda, window) = match kind {
            RasterKind::ParabolicBasin | RasterKind::XiRegion => {
                (half, None, Window { re_min: -1.2, re_max: 2.2, im_min: -1.7, im_max: 1.7 })
            }
            RasterKind::StarOfPlambda => (third, Some(third.omega() * 0.66), Window { re_min: -1.2, re_max: 0.8, im_min: -1.1, im_max: 0.9 }),
            RasterKind::Per1Slice => (half, Some(C64::new(-0.5, 0.0)), Window { re_min: -16.0, re_max: 8.0, im_min: -12.0, im_max: 12.0 }),
        };
        RasterJob {
            kind,
            pq,
            lambda,
            horodisk: Some(2.0),
            window,
            width: size,
            height: size,
            coloring: Coloring::Bands,
            overlays: Overlays { wires: kind == RasterKind::StarOfPlambda, twig: false, critical: true },
            max_iter: default_budget(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Raster {
    fn new(width: usize, height: usize) -> Self {
        Raster { width, height, pixels: vec![[0, 0, 0]; width * height] }
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn write_png(&self, path: &Path) -> image::ImageResult<()> {
        let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        image::save_buffer(path, &flat, self.width as u32, self.height as u32, image::ColorType::Rgb8)
    }
}

/// What a pixel center was classified as.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PixelClass {
    /// Left every bounded region; escape time.
    Escape(u32),
    /// Attracted, with a label and a real coordinate for banding.
    Basin { label: u32, band: f64 },
    /// Attracted, in the immediate component of the given petal.
    Immediate { petal: u32, band: f64 },
    /// Could not be decided.
    Unknown,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RenderStats {
    /// Probes compared against the direct petal computation.
    pub probes_checked: usize,
    pub probes_agreeing: usize,
    pub probes_skipped: usize,
    pub wire_pixels: usize,
    /// Wire pixels with a corner outside the wire's strip.
    pub wire_violations: usize,
}

pub struct Rendering {
    pub raster: Raster,
    pub classes: Vec<PixelClass>,
    pub stats: RenderStats,
}

fn hue(index: u32, count: u32, shade: f64) -> [u8; 3] {
    let palette: [[f64; 3]; 6] = [
        [0.90, 0.35, 0.25],
        [0.25, 0.55, 0.90],
        [0.30, 0.75, 0.35],
        [0.85, 0.70, 0.20],
        [0.65, 0.35, 0.80],
        [0.25, 0.75, 0.75],
    ];
    let c = palette[(index % count.max(1)) as usize % palette.len()];
    let s = shade.clamp(0.0, 1.0);
    [(c[0] * s * 255.0) as u8, (c[1] * s * 255.0) as u8, (c[2] * s * 255.0) as u8]
}

fn band_shade(coloring: Coloring, band: f64) -> f64 {
    match coloring {
        Coloring::Flat => 1.0,
        Coloring::Bands => 0.7 + 0.3 * band.rem_euclid(1.0),
    }
}

fn escape_shade(steps: u32) -> [u8; 3] {
    let g = (20.0 + 200.0 * (1.0 - (-(steps as f64) / 30.0).exp())) as u8;
    [g, g, g]
}

fn escape_time(rep: &Representative, z: C64, budget: u32) -> u32 {
    let mut p = Point::new(z);
    for n in 0..budget {
        if p.to_complex().norm() > 4.0 {
            return n;
        }
        p = rep.apply(p);
    }
    budget
}

fn classify_parabolic(atlas: &FatouAtlas, z: C64) -> PixelClass {
    let p = Point::new(z);
    match (atlas.value(p), atlas.label(p)) {
        (Ok(phi), Ok(label)) => PixelClass::Basin { label, band: phi.re },
        (Err(Error::NotInBasin), _) | (_, Err(Error::NotInBasin)) => PixelClass::Escape(escape_time(atlas.rep(), z, 200)),
        _ => PixelClass::Unknown,
    }
}

fn grid<T: Send>(job: &RasterJob, f: impl Fn(C64) -> T + Sync) -> Vec<T> {
    (0..job.height)
        .into_par_iter()
        .flat_map_iter(|j| (0..job.width).map(move |i| (i, j)).collect::<Vec<_>>())
        .map(|(i, j)| f(job.pixel_center(i, j)))
        .collect()
}

/// Labels the immediate petals by flood-filling same-label pixels from a seed
/// pixel inside each petal.
fn mark_immediate(job: &RasterJob, atlas: &FatouAtlas, classes: &mut [PixelClass]) {
    let (w, h) = (job.width, job.height);
    let win = job.window;
    for petal in 0..atlas.rotation.q {
        let Ok(seed) = atlas.inverse(petal, C64::new(0.5, 0.0)) else { continue };
        let z = seed.to_complex();
        let i = ((z.re - win.re_min) / (win.re_max - win.re_min) * w as f64).floor();
        let j = ((win.im_max - z.im) / (win.im_max - win.im_min) * h as f64).floor();
        if i < 0.0 || j < 0.0 || i >= w as f64 || j >= h as f64 {
            continue;
        }
        let start = j as usize * w + i as usize;
        if !matches!(classes[start], PixelClass::Basin { label, .. } if label == petal) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        while let Some(idx) = queue.pop_front() {
            let PixelClass::Basin { label, band } = classes[idx] else { continue };
            if label != petal {
                continue;
            }
            classes[idx] = PixelClass::Immediate { petal, band };
            let (x, y) = (idx % w, idx / w);
            if x > 0 {
                queue.push_back(idx - 1);
            }
            if x + 1 < w {
                queue.push_back(idx + 1);
            }
            if y > 0 {
                queue.push_back(idx - w);
            }
            if y + 1 < h {
                queue.push_back(idx + w);
            }
        }
    }
}

fn same_class_kind(a: PixelClass, b: PixelClass) -> bool {
    match (a, b) {
        (PixelClass::Immediate { petal: x, .. }, PixelClass::Immediate { petal: y, .. }) => x == y,
        (PixelClass::Escape(_), PixelClass::Escape(_)) => true,
        (PixelClass::Basin { label: x, .. }, PixelClass::Basin { label: y, .. }) => x == y,
        _ => false,
    }
}

/// Compares random interior pixels with a direct petal computation.
fn cross_check(job: &RasterJob, atlas: &FatouAtlas, classes: &[PixelClass], probes: usize, seed: u64) -> (usize, usize, usize) {
    let (w, h) = (job.width, job.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut checked, mut agree, mut skipped) = (0, 0, 0);
    let mut attempts = 0;
    while checked < probes && attempts < 100 * probes {
        attempts += 1;
        let (x, y) = (rng.gen_range(1..w - 1), rng.gen_range(1..h - 1));
        let idx = y * w + x;
        let class = classes[idx];
        let interior = [idx - 1, idx + 1, idx - w, idx + w].iter().all(|n| same_class_kind(classes[*n], class));
        if !interior || class == PixelClass::Unknown {
            skipped += 1;
            continue;
        }
        let direct = atlas.petal_index(Point::new(job.pixel_center(x, y)));
        let verdict = match (direct, class) {
            (Ok(PetalIndex::Immediate(j)), PixelClass::Immediate { petal, .. }) => Some(j == petal),
            (Ok(PetalIndex::Immediate(_)), _) => Some(false),
            (Ok(PetalIndex::NotImmediate), c) => Some(!matches!(c, PixelClass::Immediate { .. } | PixelClass::Escape(_))),
            (Err(Error::NotInBasin), c) => Some(matches!(c, PixelClass::Escape(_))),
            _ => None,
        };
        match verdict {
            Some(ok) => {
                checked += 1;
                if ok {
                    agree += 1;
                }
            }
            None => skipped += 1,
        }
    }
    (checked, agree, skipped)
}

fn paint_class(coloring: Coloring, q: u32, class: PixelClass) -> [u8; 3] {
    match class {
        PixelClass::Escape(n) => escape_shade(n),
        PixelClass::Immediate { petal, band } => hue(petal, q, band_shade(coloring, band)),
        PixelClass::Basin { label, band } => hue(label, q, 0.45 * band_shade(coloring, band)),
        PixelClass::Unknown => [255, 255, 255],
    }
}

fn mark_disc(job: &RasterJob, raster: &mut Raster, center: C64, radius_px: f64, color: [u8; 3]) {
    for j in 0..job.height {
        for i in 0..job.width {
            let d = (job.pixel_center(i, j) - center).norm() / job.pixel_diagonal();
            if d <= radius_px {
                raster.pixels[j * job.width + i] = color;
            }
        }
    }
}

fn render_parabolic(job: &RasterJob, probes: usize, seed: u64, admissible: Option<f64>) -> petalstar::Result<Rendering> {
    let atlas = FatouAtlas::polynomial(job.pq)?;
    let q = job.pq.q();
    let mut classes = grid(job, |z| classify_parabolic(&atlas, z));
    mark_immediate(job, &atlas, &mut classes);
    let (checked, agree, skipped) = if probes > 0 { cross_check(job, &atlas, &classes, probes, seed) } else { (0, 0, 0) };
    let mut raster = Raster::new(job.width, job.height);
    let heights: Option<Vec<bool>> = admissible.map(|m| {
        grid(job, |z| atlas.value(Point::new(z)).map(|phi| phi.im.abs() < m / 2.0).unwrap_or(false))
    });
    for (idx, class) in classes.iter().enumerate() {
        let mut color = paint_class(job.coloring, q, *class);
        if let Some(h) = &heights {
            if !h[idx] && !matches!(class, PixelClass::Escape(_)) {
                color = [color[0] / 3 + 60, color[1] / 3 + 60, color[2] / 3 + 60];
            }
        }
        raster.pixels[idx] = color;
    }
    if job.overlays.critical {
        let omega = job.pq.omega();
        mark_disc(job, &mut raster, -omega / 2.0, 1.5, [255, 255, 255]);
        mark_disc(job, &mut raster, -omega * omega / 4.0, 1.5, [255, 255, 0]);
    }
    let stats = RenderStats { probes_checked: checked, probes_agreeing: agree, probes_skipped: skipped, ..Default::default() };
    Ok(Rendering { raster, classes, stats })
}

/// Local data of the star at a pixel.
#[derive(Clone, Copy, Debug)]
struct StarPixel {
    class: PixelClass,
    /// Strip, signed distance to the wire and strip half-width, both in the
    /// plane, when the pixel center is in the star.
    strip: Option<(usize, f64, f64)>,
    on_line: bool,
}

fn plane_derivative(chart: &KoenigsChart, z: C64) -> petalstar::Result<(C64, C64)> {
    let p = Point::new(z);
    let (w, d) = chart.value_with_derivative(p)?;
    // Derivatives come in the chart of the point; convert to d/dz.
    let d = match p {
        Point::Far(u) => -d * u * u,
        Point::Affine(_) => d,
    };
    Ok((w, d))
}

fn star_pixel(chart: &KoenigsChart, geometry: &StarGeometry, z: C64) -> StarPixel {
    let unknown = StarPixel { class: PixelClass::Unknown, strip: None, on_line: false };
    let (w, dw) = match plane_derivative(chart, z) {
        Ok(v) => v,
        Err(Error::NotInBasin) => {
            return StarPixel { class: PixelClass::Escape(escape_time(&chart.rep, z, 200)), strip: None, on_line: false }
        }
        Err(_) => return unknown,
    };
    let logw = w.ln();
    let branch = parametrize::star_branch(geometry);
    let in_star = chart.inverse(w, branch).map(|p| p.chordal(&Point::new(z)) < 1e-7).unwrap_or(false);
    let band = geometry.normalized(logw).re;
    match geometry.strip_and_wire(logw) {
        Ok(loc) if in_star => {
            let scale = geometry.log_step.norm() * (w / dw).norm();
            let half = geometry.strip_height_of(loc.strip) / 2.0 * scale;
            StarPixel {
                class: PixelClass::Immediate { petal: loc.strip as u32, band },
                strip: Some((loc.strip, loc.wire_distance * scale, half)),
                on_line: false,
            }
        }
        Ok(loc) => StarPixel { class: PixelClass::Basin { label: loc.strip as u32, band }, strip: None, on_line: false },
        Err(Error::OnLine(_)) => StarPixel { class: PixelClass::Unknown, strip: None, on_line: true },
        Err(_) => unknown,
    }
}

fn render_star(job: &RasterJob) -> petalstar::Result<Rendering> {
    let lambda = job.lambda.ok_or_else(|| Error::Unsupported("star rendering needs a multiplier".into()))?;
    let rep = Representative::polynomial(lambda);
    let chart = KoenigsChart::build(&rep, CriticalChoice::First)?;
    let geometry = StarGeometry::new(job.pq, lambda, None)?;
    let pixels = grid(job, |z| star_pixel(&chart, &geometry, z));
    let count = geometry.strip_count() as u32;
    let diag = job.pixel_diagonal();
    let mut raster = Raster::new(job.width, job.height);
    let mut stats = RenderStats::default();
    let corner = |i: usize, j: usize, dx: f64, dy: f64| job.pixel_center(i, j) + C64::new(dx, dy) * (diag / std::f64::consts::SQRT_2) * 0.5;
    for (idx, px) in pixels.iter().enumerate() {
        let mut color = paint_class(job.coloring, count, px.class);
        if px.on_line && job.overlays.twig {
            color = [255, 255, 255];
        }
        raster.pixels[idx] = color;
        let Some((strip, dist, half)) = px.strip else { continue };
        if job.overlays.wires && half >= 2.0 * diag && dist.abs() <= 0.5 * diag {
            raster.pixels[idx] = [10, 10, 10];
            stats.wire_pixels += 1;
            let (i, j) = (idx % job.width, idx / job.width);
            let inside = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)].iter().all(|(dx, dy)| {
                let c = corner(i, j, *dx, *dy);
                chart
                    .value(Point::new(c))
                    .ok()
                    .and_then(|w| geometry.strip_and_wire(w.ln()).ok())
                    .is_some_and(|loc| loc.strip == strip)
            });
            if !inside {
                stats.wire_violations += 1;
            }
        }
    }
    if job.overlays.critical {
        mark_disc(job, &mut raster, -lambda / 2.0, 1.5, [255, 255, 255]);
    }
    let classes = pixels.iter().map(|p| p.class).collect();
    Ok(Rendering { raster, classes, stats })
}

fn render_slice(job: &RasterJob) -> petalstar::Result<Rendering> {
    let lambda = job.lambda.ok_or_else(|| Error::Unsupported("slice rendering needs a multiplier".into()))?;
    let classes = grid(job, |sigma| {
        let class = MapClass::new(lambda, sigma);
        match maps::representative_from_sigma(&class) {
            Ok(rep) => match maps::classify_relatedness(&rep, job.max_iter, None) {
                Relatedness::InR => PixelClass::Immediate { petal: 1, band: 0.0 },
                Relatedness::NotInR => PixelClass::Basin { label: 0, band: 0.0 },
                Relatedness::Undecided => PixelClass::Unknown,
            },
            Err(_) => PixelClass::Unknown,
        }
    });
    let mut raster = Raster::new(job.width, job.height);
    for (idx, c) in classes.iter().enumerate() {
        raster.pixels[idx] = match c {
            PixelClass::Immediate { .. } => [40, 90, 200],
            PixelClass::Basin { .. } => [235, 225, 200],
            _ => [120, 120, 120],
        };
    }
    Ok(Rendering { raster, classes, stats: RenderStats::default() })
}

/// Renders `job`; `probes` random pixels of a basin rendering are
/// cross-checked against the direct petal computation.
pub fn render(job: &RasterJob, probes: usize, seed: u64) -> petalstar::Result<Rendering> {
    job.validate().map_err(Error::Unsupported)?;
    match job.kind {
        RasterKind::ParabolicBasin => render_parabolic(job, probes, seed, None),
        RasterKind::XiRegion => render_parabolic(job, probes, seed, Some(job.horodisk.unwrap_or(2.0))),
        RasterKind::StarOfPlambda => render_star(job),
        RasterKind::Per1Slice => render_slice(job),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_header_and_size() {
        let r = Raster::new(3, 2);
        let ppm = r.to_ppm();
        assert!(ppm.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(ppm.len(), 11 + 18);
    }

    #[test]
    fn jobs_are_validated() {
        let mut job = RasterJob::preset(RasterKind::ParabolicBasin, 16);
        assert!(job.validate().is_ok());
        job.width = MAX_RESOLUTION + 1;
        assert!(job.validate().is_err());
        let mut job = RasterJob::preset(RasterKind::ParabolicBasin, 16);
        job.window.re_max = job.window.re_min;
        assert!(job.validate().is_err());
    }

    #[test]
    fn small_basin_rendering_is_deterministic() {
        let job = RasterJob::preset(RasterKind::ParabolicBasin, 24);
        let a = render(&job, 0, 1).unwrap();
        let b = render(&job, 0, 1).unwrap();
        assert_eq!(a.raster.to_ppm(), b.raster.to_ppm());
        assert!(a.classes.iter().any(|c| matches!(c, PixelClass::Immediate { petal: 0, .. })));
        assert!(a.classes.iter().any(|c| matches!(c, PixelClass::Immediate { petal: 1, .. })));
    }
}
