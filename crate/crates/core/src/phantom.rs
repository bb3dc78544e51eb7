//! Test images and measurement noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::{BoundaryData, Image};
use crate::receivers::Point;

/// Largest radius about `center` that stays strictly inside the interior,
/// one point clear of its outer ring.
fn interior_clearance(grid: &Grid, center: Point) -> f64 {
    (0..2)
        .flat_map(|a| {
            let lo = grid.interior_coordinate(a, 1.0);
            let hi = grid.interior_coordinate(a, (grid.dims[a] - 2) as f64);
            [center[a] - lo, hi - center[a]]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Disc of i.i.d. uniform values on `[lo, hi]`, zero outside.
pub fn make_disc_phantom(grid: &Grid, radius: f64, center: Point, range: (f64, f64), seed: u64) -> Result<Image> {
    if radius < 0.0 || range.0 > range.1 {
        return Err(Error::InvalidSource(format!("bad disc radius {radius} or range {range:?}")));
    }
    if radius >= interior_clearance(grid, center) {
        return Err(Error::InvalidSource(format!(
            "disc of radius {radius} m at {center:?} exceeds the grid interior"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [nx, ny] = grid.dims;
    let mut img = Image::zeros(grid);
    for i in 0..nx {
        let x = grid.interior_coordinate(0, i as f64) - center[0];
        for j in 0..ny {
            let y = grid.interior_coordinate(1, j as f64) - center[1];
            if x.hypot(y) <= radius && radius > 0.0 {
                img.values[i * ny + j] = if range.0 == range.1 { range.0 } else { rng.random_range(range.0..=range.1) };
            }
        }
    }
    Ok(img)
}

/// Parameters of the procedural vessel phantom.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VesselSpec {
    pub n_branches: usize,
    /// Tube half-width range in metres.
    pub width_range: (f64, f64),
    /// The support stays inside this radius about the origin.
    pub max_radius: f64,
}

struct Segment {
    a: Point,
    b: Point,
    width: f64,
}

/// A branching tree of smooth tubes, normalized to a peak of 1.
///
/// The trunk is a random walk across the disc of `max_radius`; each branch
/// starts at a random point of an existing vessel, turns off at 25 to 60
/// degrees and is thinner than its parent. Walks stop before the tube edge
/// would cross `max_radius`.
pub fn make_vessel_phantom(grid: &Grid, seed: u64, spec: &VesselSpec) -> Result<Image> {
    let (w_lo, w_hi) = spec.width_range;
    if !(w_lo > 0.0 && w_lo <= w_hi && spec.max_radius > w_hi) {
        return Err(Error::InvalidSource(format!("bad vessel parameters {spec:?}")));
    }
    if spec.max_radius >= interior_clearance(grid, [0.0, 0.0]) {
        return Err(Error::InvalidSource("vessel disc exceeds the grid interior".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = spec.max_radius;
    let step = 0.04 * r;
    let mut segments: Vec<Segment> = Vec::new();

    let start_angle = rng.random_range(0.0..std::f64::consts::TAU);
    let trunk_start = [0.8 * r * start_angle.cos(), 0.8 * r * start_angle.sin()];
    let heading = start_angle + std::f64::consts::PI + rng.random_range(-0.3..0.3);
    walk(&mut segments, &mut rng, trunk_start, heading, w_hi, 2.0 * r, step, r);

    for _ in 0..spec.n_branches {
        if segments.is_empty() {
            break;
        }
        let parent = &segments[rng.random_range(0..segments.len())];
        let (a, b, pw) = (parent.a, parent.b, parent.width);
        let dir = (b[1] - a[1]).atan2(b[0] - a[0]);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let turn = sign * rng.random_range(25f64.to_radians()..60f64.to_radians());
        let width = (pw * rng.random_range(0.55..0.85)).max(w_lo);
        let length = rng.random_range(0.3..0.9) * r;
        walk(&mut segments, &mut rng, b, dir + turn, width, length, step, r);
    }

    let mut img = Image::zeros(grid);
    for s in &segments {
        stamp(&mut img, grid, s);
    }
    let peak = img.values.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        for v in img.values.iter_mut() {
            *v /= peak;
        }
    }
    Ok(img)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    out: &mut Vec<Segment>,
    rng: &mut ChaCha8Rng,
    start: Point,
    mut heading: f64,
    width: f64,
    length: f64,
    step: f64,
    max_radius: f64,
) {
    let mut p = start;
    let mut travelled = 0.0;
    while travelled < length {
        heading += rng.random_range(-0.25..0.25);
        let q = [p[0] + step * heading.cos(), p[1] + step * heading.sin()];
        if q[0].hypot(q[1]) + width >= max_radius {
            break;
        }
        if p[0].hypot(p[1]) + width < max_radius {
            out.push(Segment { a: p, b: q, width });
        }
        p = q;
        travelled += step;
    }
}

/// Raised-cosine tube profile of half-width `width` around the segment.
fn stamp(img: &mut Image, grid: &Grid, s: &Segment) {
    let ny = grid.dims[1];
    let lo = |a: usize| grid.interior_index_of(a, s.a[a].min(s.b[a]) - s.width).floor().max(0.0) as usize;
    let hi = |a: usize| {
        (grid.interior_index_of(a, s.a[a].max(s.b[a]) + s.width).ceil() as usize).min(grid.dims[a] - 1)
    };
    let (dx, dy) = (s.b[0] - s.a[0], s.b[1] - s.a[1]);
    let len2 = dx * dx + dy * dy;
    for i in lo(0)..=hi(0) {
        let x = grid.interior_coordinate(0, i as f64);
        for j in lo(1)..=hi(1) {
            let y = grid.interior_coordinate(1, j as f64);
            let t = (((x - s.a[0]) * dx + (y - s.a[1]) * dy) / len2).clamp(0.0, 1.0);
            let d = (x - s.a[0] - t * dx).hypot(y - s.a[1] - t * dy);
            if d < s.width {
                let v = 0.5 * (1.0 + (std::f64::consts::PI * d / s.width).cos());
                let cell = &mut img.values[i * ny + j];
                *cell = cell.max(v);
            }
        }
    }
}

/// Adds white Gaussian noise per trace with `sigma = peak * 10^(-snr_db/20)`.
/// `None` returns the data unchanged.
pub fn add_awgn(data: &BoundaryData, snr_db: Option<f64>, seed: u64) -> Result<BoundaryData> {
    let Some(snr) = snr_db else {
        return Ok(data.clone());
    };
    if !snr.is_finite() {
        return Err(Error::Config(format!("snr_db must be finite, got {snr}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    let factor = 10f64.powf(-snr / 20.0);
    for j in 0..out.n_nodes {
        let trace = out.trace_mut(j);
        let sigma = trace.iter().fold(0.0f64, |m, v| m.max(v.abs())) * factor;
        if sigma == 0.0 {
            continue;
        }
        let normal = Normal::new(0.0, sigma).expect("positive sigma");
        for v in trace.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(out)
}
