//! Boundary-based shape descriptors.

use std::f64::consts::PI;

use super::contour::Contour;
use super::stats::{shannon_entropy, stats7};
use crate::error::{Error, Result};
use crate::segmentation::MassMask;

/// Angles sampled by the variation function when computing shape features.
pub const VARIATION_SAMPLES: usize = 180;

/// Turns smaller than this are treated as pixel-grid jitter.
pub const TURN_TOLERANCE_RAD: f64 = 10.0 * PI / 180.0;

/// Chord span (in contour points) used to measure turning direction.
pub const TURN_SPAN: usize = 6;

type Pt = (i64, i64);

fn cross(o: Pt, a: Pt, b: Pt) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull (Andrew's monotone chain) of integer points, counterclockwise
/// in `(x, y)` order without collinear vertices.
pub fn convex_hull(points: &[Pt]) -> Vec<Pt> {
    let mut pts: Vec<Pt> = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Pt> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Pt> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

/// Number of lattice points inside or on a convex hull given counterclockwise.
pub fn hull_pixel_area(hull: &[Pt]) -> usize {
    match hull.len() {
        0 => 0,
        1 => 1,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            (gcd(b.0 - a.0, b.1 - a.1) + 1) as usize
        }
        n => {
            // Pick's theorem: A = I + B/2 - 1, count = I + B.
            let twice_area: i64 = (0..n)
                .map(|i| {
                    let (a, b) = (hull[i], hull[(i + 1) % n]);
                    a.0 * b.1 - b.0 * a.1
                })
                .sum();
            let boundary: i64 = (0..n)
                .map(|i| {
                    let (a, b) = (hull[i], hull[(i + 1) % n]);
                    gcd(b.0 - a.0, b.1 - a.1)
                })
                .sum();
            let interior = (twice_area.abs() - boundary + 2) / 2;
            (interior + boundary) as usize
        }
    }
}

fn mask_hull(mask: &MassMask) -> Vec<Pt> {
    // Every hull vertex is a boundary pixel, so scanning the row extremes suffices.
    let mut extremes = Vec::new();
    for r in 0..mask.height() {
        let row = (0..mask.width()).filter(|&c| mask.get(r, c));
        let (mut lo, mut hi) = (None, None);
        for c in row {
            lo.get_or_insert(c);
            hi = Some(c);
        }
        if let (Some(lo), Some(hi)) = (lo, hi) {
            extremes.push((lo as i64, r as i64));
            extremes.push((hi as i64, r as i64));
        }
    }
    convex_hull(&extremes)
}

/// Extent of the mask's projection onto direction `theta_k = k*pi/n` for
/// `k = 0..n`, with `proj(p) = x*cos(theta) + y*sin(theta)`.
pub fn variation_function(mask: &MassMask, angle_samples: usize) -> Result<Vec<f64>> {
    if mask.pixel_count() < 2 {
        return Err(Error::DegenerateMask("variation function needs >= 2 pixels".into()));
    }
    if angle_samples < 2 {
        return Err(Error::InvalidInput("angle_samples must be >= 2".into()));
    }
    let hull = mask_hull(mask);
    Ok((0..angle_samples)
        .map(|k| {
            let theta = k as f64 * PI / angle_samples as f64;
            let (s, c) = theta.sin_cos();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(x, y) in &hull {
                let p = x as f64 * c + y as f64 * s;
                lo = lo.min(p);
                hi = hi.max(p);
            }
            hi - lo
        })
        .collect())
}

/// Signed turning angle at each contour point, measured between the chords
/// arriving from and leaving towards points `span` steps away.
pub fn turning_angles(contour: &Contour, span: usize) -> Vec<f64> {
    let pts = contour.xy();
    let n = pts.len();
    (0..n)
        .map(|i| {
            let prev = pts[(i + n - span % n) % n];
            let cur = pts[i];
            let next = pts[(i + span) % n];
            let (ax, ay) = (cur.0 - prev.0, cur.1 - prev.1);
            let (bx, by) = (next.0 - cur.0, next.1 - cur.1);
            (ax * by - ay * bx).atan2(ax * bx + ay * by)
        })
        .collect()
}

/// Number of points where the turning direction flips sign, ignoring turns
/// below [`TURN_TOLERANCE_RAD`].
pub fn direction_changes(contour: &Contour) -> usize {
    let significant: Vec<f64> = turning_angles(contour, TURN_SPAN)
        .into_iter()
        .filter(|a| a.abs() > TURN_TOLERANCE_RAD)
        .collect();
    let n = significant.len();
    if n < 2 {
        return 0;
    }
    (0..n).filter(|&i| significant[i].signum() != significant[(i + n - 1) % n].signum()).count()
}

/// The nine shape values: continuity, curvature, irregularity, difference
/// area, then mean/variance/skewness/kurtosis/entropy of the variation
/// function.
pub fn shape_features(mask: &MassMask, contour: &Contour) -> Result<[f64; 9]> {
    if contour.len() < 4 {
        return Err(Error::DegenerateMask("contour has fewer than 4 points".into()));
    }
    let pts = contour.xy();
    let n = pts.len();
    let seg: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (pts[(i + n - 1) % n], pts[i]);
            (b.0 - a.0).hypot(b.1 - a.1)
        })
        .collect();
    let mean_seg = seg.iter().sum::<f64>() / n as f64;
    let continuity = seg.iter().map(|s| (s - mean_seg).abs()).sum::<f64>() / n as f64;
    let curvature = (0..n)
        .map(|i| {
            let (a, b, c) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
            (a.0 - 2.0 * b.0 + c.0).hypot(a.1 - 2.0 * b.1 + c.1)
        })
        .sum::<f64>()
        / n as f64;
    let irregularity = direction_changes(contour) as f64;

    let hull = mask_hull(mask);
    let difference_area = hull_pixel_area(&hull) as f64 - mask.pixel_count() as f64;

    let variation = variation_function(mask, VARIATION_SAMPLES)?;
    let s = stats7(&variation)?;
    let entropy = shannon_entropy(&variation);
    Ok([continuity, curvature, irregularity, difference_area, s[0], s[4], s[5], s[6], entropy])
}
