//! Laser-scan ingestion, synthetic scan generation, and truncated
//! signed-distance labels along rays.

use crate::config::{CliError, SynthShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

/// Sensor pose: position and heading in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Default for Pose {
    fn default() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        }
    }
}

impl Pose {
    /// World-frame point at distance `range` along the ray at angle `theta`
    /// relative to the heading.
    pub fn project(&self, theta: f64, range: f64) -> (f64, f64) {
        let a = self.heading + theta;
        (self.x + range * a.cos(), self.y + range * a.sin())
    }
}

/// One scan: strictly increasing beam angles (radians, relative to the
/// heading) with positive ranges (meters).
#[derive(Debug, Clone)]
pub struct LaserScan {
    pub pose: Pose,
    records: Vec<(f64, f64)>,
}

impl LaserScan {
    pub fn new(pose: Pose, records: Vec<(f64, f64)>) -> Result<Self, CliError> {
        if records.is_empty() {
            return Err(CliError::Validation("scan has no rays".into()));
        }
        for (i, &(theta, range)) in records.iter().enumerate() {
            if !theta.is_finite() || !range.is_finite() {
                return Err(CliError::Validation(format!("ray {i}: non-finite value")));
            }
            if range <= 0.0 {
                return Err(CliError::Validation(format!(
                    "ray {i}: range must be positive, got {range}"
                )));
            }
            if i > 0 && theta <= records[i - 1].0 {
                return Err(CliError::Validation(format!(
                    "ray {i}: theta must be strictly increasing"
                )));
            }
        }
        Ok(Self { pose, records })
    }

    pub fn records(&self) -> &[(f64, f64)] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Parses a scan from CSV with header `theta,range` (radians, meters).
/// Malformed rows are rejected with their line number.
pub fn load_scan(path: &Path) -> Result<LaserScan, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    read_scan(file)
}

pub fn read_scan<R: Read>(input: R) -> Result<LaserScan, CliError> {
    let reader = BufReader::new(input);
    let mut records = Vec::new();
    let mut previous_theta = f64::NEG_INFINITY;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::Validation(e.to_string()))?;
        let line_no = idx + 1;
        if idx == 0 {
            let header: Vec<&str> = line.split(',').map(str::trim).collect();
            if header != ["theta", "range"] {
                return Err(CliError::Validation(format!(
                    "line {line_no}: expected header \"theta,range\", got {line:?}"
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(CliError::Validation(format!(
                "line {line_no}: expected 2 fields, found {}",
                fields.len()
            )));
        }
        let theta: f64 = fields[0].trim().parse().map_err(|_| {
            CliError::Validation(format!("line {line_no}: not a number: {:?}", fields[0]))
        })?;
        let range: f64 = fields[1].trim().parse().map_err(|_| {
            CliError::Validation(format!("line {line_no}: not a number: {:?}", fields[1]))
        })?;
        if range <= 0.0 {
            return Err(CliError::Validation(format!(
                "line {line_no}: range must be positive, got {range}"
            )));
        }
        if theta <= previous_theta {
            return Err(CliError::Validation(format!(
                "line {line_no}: theta must be strictly increasing"
            )));
        }
        previous_theta = theta;
        records.push((theta, range));
    }
    LaserScan::new(Pose::default(), records)
}

/// Exact range of the ray at angle `theta` (relative to the heading) to an
/// obstacle of the given shape centered `dist` ahead of the sensor, or
/// `None` on a miss. `radius` is the circle radius / box half-side.
pub fn ray_range(shape: SynthShape, radius: f64, dist: f64, theta: f64) -> Option<f64> {
    let (ux, uy) = (theta.cos(), theta.sin());
    match shape {
        SynthShape::Circle => {
            // |t u - c| = r with c = (dist, 0)
            let b = ux * dist;
            let disc = b * b - (dist * dist - radius * radius);
            if disc < 0.0 {
                return None;
            }
            let t = b - disc.sqrt();
            (t > 0.0).then_some(t)
        }
        SynthShape::Box => {
            // slab method against [dist - r, dist + r] x [-r, r]
            let mut t_min = f64::NEG_INFINITY;
            let mut t_max = f64::INFINITY;
            for (dir, lo, hi) in [(ux, dist - radius, dist + radius), (uy, -radius, radius)] {
                if dir.abs() < 1e-300 {
                    if lo > 0.0 || hi < 0.0 {
                        return None;
                    }
                } else {
                    let (mut a, mut b) = (lo / dir, hi / dir);
                    if a > b {
                        std::mem::swap(&mut a, &mut b);
                    }
                    t_min = t_min.max(a);
                    t_max = t_max.min(b);
                }
            }
            (t_min <= t_max && t_min > 0.0).then_some(t_min)
        }
    }
}

/// Half-angle of the cone of rays hitting the obstacle.
pub fn hit_half_angle(shape: SynthShape, radius: f64, dist: f64) -> f64 {
    match shape {
        SynthShape::Circle => (radius / dist).asin(),
        SynthShape::Box => (radius / (dist - radius)).atan(),
    }
}

/// Synthetic scan of an obstacle centered `dist` ahead: `n_rays` beams spread
/// over the hit cone (with a 5% inward margin), interior angles jittered by
/// up to 20% of the spacing from the seed. Ranges are exact ray casts.
pub fn synth_scan(
    shape: SynthShape,
    pose: Pose,
    radius: f64,
    dist: f64,
    n_rays: usize,
    seed: u64,
) -> Result<LaserScan, CliError> {
    if n_rays < 2 {
        return Err(CliError::Validation(format!(
            "need at least 2 rays, got {n_rays}"
        )));
    }
    if radius >= dist {
        return Err(CliError::Validation(
            "obstacle must be strictly in front of the sensor (radius < dist)".into(),
        ));
    }
    let half = 0.95 * hit_half_angle(shape, radius, dist);
    let spacing = 2.0 * half / (n_rays - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n_rays);
    for i in 0..n_rays {
        let mut theta = -half + i as f64 * spacing;
        if i > 0 && i + 1 < n_rays {
            theta += rng.gen_range(-0.2..0.2) * spacing;
        }
        if let Some(range) = ray_range(shape, radius, dist, theta) {
            records.push((theta, range));
        }
    }
    LaserScan::new(pose, records)
}

/// Spacing of SDF samples along each ray.
pub const SDF_STEP: f64 = 0.1;
/// Truncation distance of the signed-distance labels.
pub const SDF_TRUNCATION: f64 = 0.5;

/// Truncated signed-distance training set: samples every [`SDF_STEP`] along
/// each ray within ±[`SDF_TRUNCATION`] of the hit point, zero at the hit,
/// positive before it, negative beyond it.
pub fn sdf_dataset(scan: &LaserScan) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let steps = (SDF_TRUNCATION / SDF_STEP).round() as i64;
    for &(theta, range) in scan.records() {
        for step in -steps..=steps {
            let offset = step as f64 * SDF_STEP;
            let d = range + offset;
            if d <= 0.0 {
                continue;
            }
            let (px, py) = scan.pose.project(theta, d);
            let sdf = (range - d).clamp(-SDF_TRUNCATION, SDF_TRUNCATION);
            inputs.push(vec![px, py]);
            targets.push(sdf);
        }
    }
    (inputs, targets)
}

/// Knot abscissae at the quantiles of `values`: deduplicated, spanning the
/// observed range; falls back to a uniform grid when the data cannot support
/// `count` distinct quantiles (e.g. a degenerate single-ray scan).
pub fn quantile_knots(values: &[f64], count: usize) -> Vec<f64> {
    assert!(count >= 2);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let (lo, hi) = match (sorted.first(), sorted.last()) {
        (Some(&lo), Some(&hi)) if hi - lo > 1e-9 => (lo, hi),
        (Some(&v), _) => (v - 0.5, v + 0.5),
        _ => (0.0, 1.0),
    };
    if sorted.len() < count {
        return (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect();
    }
    let mut knots: Vec<f64> = (0..count)
        .map(|i| {
            let pos = i as f64 / (count - 1) as f64 * (sorted.len() - 1) as f64;
            sorted[pos.round() as usize]
        })
        .collect();
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if knots.len() < count {
        return (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect();
    }
    knots
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_straight_ahead() {
        let r = ray_range(SynthShape::Circle, 1.0, 3.0, 0.0).unwrap();
        assert_relative_eq!(r, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn box_straight_ahead() {
        // side 2 centered 3 ahead -> front face at x = 2
        let r = ray_range(SynthShape::Box, 1.0, 3.0, 0.0).unwrap();
        assert_relative_eq!(r, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn rays_outside_the_cone_miss() {
        let beyond = 1.05 * hit_half_angle(SynthShape::Circle, 1.0, 3.0);
        assert!(ray_range(SynthShape::Circle, 1.0, 3.0, beyond).is_none());
        assert!(ray_range(SynthShape::Box, 1.0, 3.0, std::f64::consts::FRAC_PI_2).is_none());
    }

    #[test]
    fn synth_scan_is_seeded_and_monotone() {
        let a = synth_scan(SynthShape::Circle, Pose::default(), 1.0, 3.0, 30, 5).unwrap();
        let b = synth_scan(SynthShape::Circle, Pose::default(), 1.0, 3.0, 30, 5).unwrap();
        assert_eq!(a.records(), b.records());
        assert!(a.records().windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(a.len(), 30);
        // every recorded range matches an exact re-cast
        for &(theta, range) in a.records() {
            let expect = ray_range(SynthShape::Circle, 1.0, 3.0, theta).unwrap();
            assert_relative_eq!(range, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn scan_csv_round_trip_and_rejections() {
        let good = "theta,range\n-0.2,2.5\n0.0,2.0\n0.2,2.5\n";
        let scan = read_scan(good.as_bytes()).unwrap();
        assert_eq!(scan.len(), 3);
        assert_eq!(scan.records()[1], (0.0, 2.0));

        let negative = "theta,range\n0.0,2.0\n0.1,-1\n";
        let err = read_scan(negative.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");

        let unsorted = "theta,range\n0.2,2.0\n0.1,2.0\n";
        let err = read_scan(unsorted.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");

        let garbled = "theta,range\nzero,2.0\n";
        let err = read_scan(garbled.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let empty = "theta,range\n";
        assert!(read_scan(empty.as_bytes()).is_err());
    }

    #[test]
    fn sdf_labels_are_zero_at_hits_and_signed_along_rays() {
        let scan = synth_scan(SynthShape::Circle, Pose::default(), 1.0, 3.0, 9, 0).unwrap();
        let (inputs, targets) = sdf_dataset(&scan);
        assert_eq!(inputs.len(), targets.len());
        assert_eq!(inputs.len(), 9 * 11);
        // offsets run +0.5 .. -0.5 in steps of 0.1; the middle sample is the hit
        for ray in 0..9 {
            let chunk = &targets[ray * 11..(ray + 1) * 11];
            assert_relative_eq!(chunk[5], 0.0, epsilon = 1e-12);
            assert!(chunk[0] > 0.0 && chunk[10] < 0.0);
            assert!(chunk.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn quantile_knots_cover_the_range_and_handle_degenerate_data() {
        let values: Vec<f64> = (0..100).map(|i| (i as f64 / 99.0).powi(2)).collect();
        let knots = quantile_knots(&values, 10);
        assert_eq!(knots.len(), 10);
        assert_eq!(knots[0], 0.0);
        assert_relative_eq!(knots[9], 1.0, max_relative = 1e-12);
        assert!(knots.windows(2).all(|w| w[0] < w[1]));

        let flat = vec![2.0; 50];
        let knots = quantile_knots(&flat, 5);
        assert_eq!(knots.len(), 5);
        assert!(knots.windows(2).all(|w| w[0] < w[1]));
        assert_relative_eq!(knots[0], 1.5);
        assert_relative_eq!(knots[4], 2.5);
    }
}
