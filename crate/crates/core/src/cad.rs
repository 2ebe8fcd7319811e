//! The generalized car model: loading, canonicalization, farthest-point
//! downsampling, and alignment into a predicted box.
//!
//! Alignment scales the canonical cloud per axis by `kappa * S_box / S_cad`,
//! rotates it by the box yaw about z, then translates it to the box center,
//! in that order.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{yaw_rotate, Point3};
use crate::shapes::{sample_triangle, triangle_area, Hexahedron};

/// Default CAD shrink ratio.
pub const DEFAULT_KAPPA: f64 = 0.82;
/// Default number of CAD points kept after downsampling.
pub const DEFAULT_CAD_POINTS: usize = 500;

/// Box dimensions in meters: width (along y in the box frame), length
/// (along x, the heading), height (along z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSize {
    pub w: f64,
    pub l: f64,
    pub h: f64,
}

impl BoxSize {
    pub const fn new(w: f64, l: f64, h: f64) -> Self {
        BoxSize { w, l, h }
    }

    /// Extents along the box-frame x, y, z axes.
    pub fn axis_extents(&self) -> Point3 {
        Point3::new(self.l, self.w, self.h)
    }

    pub fn from_axis_extents(e: Point3) -> Self {
        BoxSize::new(e.y, e.x, e.z)
    }

    pub fn volume(&self) -> f64 {
        self.w * self.l * self.h
    }

    fn is_positive(&self) -> bool {
        self.w > 0.0 && self.l > 0.0 && self.h > 0.0
    }
}

/// A yaw-rotated 3D box in the LiDAR frame. `center` is the volumetric center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox3 {
    pub center: Point3,
    pub size: BoxSize,
    pub yaw: f64,
}

impl OrientedBox3 {
    pub fn new(center: Point3, size: BoxSize, yaw: f64) -> Result<Self> {
        if !size.is_positive() || !size.w.is_finite() || !size.l.is_finite() || !size.h.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "box size must be positive, got {size:?}"
            )));
        }
        if !center.is_finite() || !yaw.is_finite() {
            return Err(Error::InvalidGeometry("non-finite box pose".into()));
        }
        Ok(OrientedBox3 { center, size, yaw })
    }

    /// Coordinates of a LiDAR-frame point relative to the box, heading along +x.
    pub fn to_box_frame(&self, p: Point3) -> Point3 {
        yaw_rotate(p - self.center, -self.yaw)
    }

    pub fn from_box_frame(&self, p: Point3) -> Point3 {
        yaw_rotate(p, self.yaw) + self.center
    }

    /// True if `p` lies inside the closed box.
    pub fn contains(&self, p: Point3) -> bool {
        let q = self.to_box_frame(p);
        let e = self.size.axis_extents();
        q.x.abs() <= e.x / 2.0 && q.y.abs() <= e.y / 2.0 && q.z.abs() <= e.z / 2.0
    }

    pub fn hexahedron(&self) -> Hexahedron {
        Hexahedron::axis_aligned(self.size.axis_extents()).map(|p| self.from_box_frame(p))
    }
}

/// A scored detector output.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: OrientedBox3,
    pub score: f64,
    pub class: String,
}

/// Canonical car cloud: length along +x, width along +y, height along +z,
/// bounding-box center at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CadModel {
    points: Vec<Point3>,
    size: BoxSize,
}

impl CadModel {
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn size(&self) -> BoxSize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The built-in sedan, downsampled to the default point count.
    pub fn default_sedan() -> Self {
        let raw = sedan::surface_points(sedan::DEFAULT_SIZE, 2000, 0);
        let model = canonicalize(raw).expect("procedural sedan is non-degenerate");
        downsample(&model, DEFAULT_CAD_POINTS).expect("n >= 3")
    }
}

/// Reads a CAD point file: one `x y z` triple per line, `#` comments and
/// blank lines ignored.
pub fn load_cad(path: impl AsRef<Path>) -> Result<Vec<Point3>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cad(&text, path)
}

pub fn parse_cad(text: &str, path: &Path) -> Result<Vec<Point3>> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected 3 coordinates, found {}", fields.len()),
            ));
        }
        let mut xyz = [0.0; 3];
        for (slot, field) in xyz.iter_mut().zip(&fields) {
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(path, i + 1, format!("bad coordinate {field:?}")))?;
        }
        points.push(Point3::from(xyz));
    }
    if points.len() < 3 {
        return Err(Error::InsufficientModel { found: points.len() });
    }
    Ok(points)
}

fn bounds(points: &[Point3]) -> (Point3, Point3) {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Point3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Point3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    (lo, hi)
}

/// Centers the cloud on its bounding box and records its extents.
/// The input must already be oriented with length along x.
pub fn canonicalize(points: Vec<Point3>) -> Result<CadModel> {
    if points.len() < 3 {
        return Err(Error::InsufficientModel { found: points.len() });
    }
    let (lo, hi) = bounds(&points);
    let extents = hi - lo;
    for (axis, e) in [("x", extents.x), ("y", extents.y), ("z", extents.z)] {
        if e <= 0.0 || !e.is_finite() {
            return Err(Error::DegenerateModel(format!("zero extent along {axis}")));
        }
    }
    let center = (hi + lo) * 0.5;
    let points: Vec<Point3> = if center == Point3::ORIGIN {
        points
    } else {
        points.into_iter().map(|p| p - center).collect()
    };
    Ok(CadModel {
        points,
        size: BoxSize::from_axis_extents(extents),
    })
}

/// Farthest-point sampling down to `n` points, seeded at the point of
/// largest norm (lowest index on ties). Models with `n` or fewer points are
/// returned unchanged.
pub fn downsample(model: &CadModel, n: usize) -> Result<CadModel> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "downsample target must be at least 3, got {n}"
        )));
    }
    if model.len() <= n {
        return Ok(model.clone());
    }
    let picked = farthest_point_indices(&model.points, n);
    canonicalize(picked.into_iter().map(|i| model.points[i]).collect())
}

/// Indices chosen by farthest-point sampling, in pick order.
pub fn farthest_point_indices(points: &[Point3], n: usize) -> Vec<usize> {
    let mut seed = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = p.dot(p);
        if d > best {
            best = d;
            seed = i;
        }
    }
    let mut picked = Vec::with_capacity(n);
    let mut nearest = vec![f64::INFINITY; points.len()];
    let mut current = seed;
    for _ in 0..n.min(points.len()) {
        picked.push(current);
        let anchor = points[current];
        let mut next = current;
        let mut far = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let d = (*p - anchor).dot(&(*p - anchor));
            if d < nearest[i] {
                nearest[i] = d;
            }
            if nearest[i] > far {
                far = nearest[i];
                next = i;
            }
        }
        current = next;
    }
    picked
}

/// Places the model inside `bbox`, shrunk by `kappa`.
pub fn align_cad(model: &CadModel, bbox: &OrientedBox3, kappa: f64) -> Result<Vec<Point3>> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa must be in (0, 1], got {kappa}"
        )));
    }
    let b = bbox.size.axis_extents();
    let c = model.size.axis_extents();
    let scale = Point3::new(kappa * b.x / c.x, kappa * b.y / c.y, kappa * b.z / c.z);
    Ok(model
        .points
        .iter()
        .map(|p| yaw_rotate(p.hadamard(&scale), bbox.yaw) + bbox.center)
        .collect())
}

/// A procedural sedan: a lower body slab with a tapered cabin on top.
pub mod sedan {
    use super::*;

    pub const DEFAULT_SIZE: BoxSize = BoxSize::new(1.8, 4.5, 1.5);

    /// Convex parts of a sedan exactly filling a `size` box centered at the
    /// origin, heading +x. The cabin footprint contains the box center, so
    /// the union is star-shaped about it.
    pub fn parts(size: BoxSize) -> Vec<Hexahedron> {
        let (l, w, h) = (size.l, size.w, size.h);
        let bottom = -h / 2.0;
        let deck = bottom + 0.58 * h;
        let top = h / 2.0;
        let body = Hexahedron::new([
            Point3::new(-l / 2.0, -w / 2.0, bottom),
            Point3::new(l / 2.0, -w / 2.0, bottom),
            Point3::new(l / 2.0, w / 2.0, bottom),
            Point3::new(-l / 2.0, w / 2.0, bottom),
            Point3::new(-l / 2.0, -w / 2.0, deck),
            Point3::new(l / 2.0, -w / 2.0, deck),
            Point3::new(l / 2.0, w / 2.0, deck),
            Point3::new(-l / 2.0, w / 2.0, deck),
        ]);
        let (rear_lo, front_lo, half_w_lo) = (-0.32 * l, 0.22 * l, 0.47 * w);
        let (rear_hi, front_hi, half_w_hi) = (-0.20 * l, 0.08 * l, 0.40 * w);
        let cabin = Hexahedron::new([
            Point3::new(rear_lo, -half_w_lo, deck),
            Point3::new(front_lo, -half_w_lo, deck),
            Point3::new(front_lo, half_w_lo, deck),
            Point3::new(rear_lo, half_w_lo, deck),
            Point3::new(rear_hi, -half_w_hi, top),
            Point3::new(front_hi, -half_w_hi, top),
            Point3::new(front_hi, half_w_hi, top),
            Point3::new(rear_hi, half_w_hi, top),
        ]);
        vec![body, cabin]
    }

    /// About `n` points spread uniformly over the exposed surface,
    /// deterministic in `seed`.
    pub fn surface_points(size: BoxSize, n: usize, seed: u64) -> Vec<Point3> {
        let parts = parts(size);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let triangles: Vec<(usize, [Point3; 3])> = parts
            .iter()
            .enumerate()
            .flat_map(|(k, part)| part.surface_triangles().into_iter().map(move |t| (k, t)))
            .collect();
        let total: f64 = triangles.iter().map(|(_, t)| triangle_area(t)).sum();
        let mut points = Vec::with_capacity(n);
        for (k, tri) in &triangles {
            let count = (n as f64 * triangle_area(tri) / total).round() as usize;
            for _ in 0..count {
                let p = sample_triangle(tri, &mut rng);
                // Skip points buried inside another part.
                let buried = parts
                    .iter()
                    .enumerate()
                    .any(|(j, other)| j != *k && other.contains(p, -1e-9));
                if !buried {
                    points.push(p);
                }
            }
        }
        // Pin the bounding box so canonicalization reproduces `size` exactly.
        points.extend(parts[0].vertices().iter().copied());
        points.push(Point3::new(0.0, 0.0, size.h / 2.0));
        points
    }
}
