//! Seeded scenes reproducing the failure mode the classifier targets:
//! detections floating in free space in front of opaque surfaces, next to
//! correctly boxed cars.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{raycast, Axis, LidarGrid, PlanePatch, Primitive, RayCast, Scene};
use crate::cad::{BoxSize, Detection, OrientedBox3};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::kitti::{self, format_labels, label_from_box, CalibrationSet, KittiLabel};
use crate::search_area::box_spherical_extent;

/// Ground height below a roof-mounted sensor.
pub const GROUND_Z: f64 = -1.73;
const WALL_THICKNESS: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOptions {
    pub ground: bool,
    /// Place an opaque wall behind every spurious box.
    pub backdrop: bool,
    pub cars: (usize, usize),
    pub spurious: (usize, usize),
    pub grid: LidarGrid,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        ScenarioOptions {
            ground: true,
            backdrop: true,
            cars: (1, 3),
            spurious: (1, 3),
            grid: LidarGrid {
                az_min: -0.75,
                az_max: 0.75,
                ..LidarGrid::default()
            },
        }
    }
}

/// A cast scene with its annotations and detections.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub scene: Scene,
    pub grid: LidarGrid,
    pub cast: RayCast,
    /// Boxes exactly enclosing the placed cars, with their scene ids.
    pub ground_truth: Vec<(u32, OrientedBox3)>,
    /// Empty boxes planted as false positives, with the id of the surface
    /// behind each (if any).
    pub spurious: Vec<(Option<u32>, OrientedBox3)>,
    /// Ground-truth boxes first, then spurious ones.
    pub detections: Vec<Detection>,
}

impl Scenario {
    pub fn is_spurious(&self, detection: usize) -> bool {
        detection >= self.ground_truth.len()
    }
}

fn random_size(rng: &mut ChaCha8Rng) -> BoxSize {
    BoxSize::new(
        rng.gen_range(1.6..1.9),
        rng.gen_range(3.8..4.7),
        rng.gen_range(1.4..1.65),
    )
}

fn azimuth_span(b: &OrientedBox3) -> Result<(f64, f64)> {
    let e = box_spherical_extent(b)?;
    Ok((e.theta_min, e.theta_max))
}

fn overlaps(taken: &[(f64, f64)], span: (f64, f64), margin: f64) -> bool {
    taken
        .iter()
        .any(|&(lo, hi)| span.0 < hi + margin && span.1 > lo - margin)
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// A wall perpendicular to the horizontal view direction `az`, its near
/// face `distance` meters out, spanning `half_width` either side and
/// `bottom..top` vertically.
fn facing_wall(az: f64, distance: f64, half_width: f64, bottom: f64, top: f64) -> Result<OrientedBox3> {
    let r = distance + WALL_THICKNESS / 2.0;
    OrientedBox3::new(
        Point3::new(r * az.cos(), r * az.sin(), (bottom + top) / 2.0),
        BoxSize::new(WALL_THICKNESS, 2.0 * half_width, top - bottom),
        az + FRAC_PI_2,
    )
}

pub fn make_fp_scenario(seed: u64) -> Result<Scenario> {
    make_scenario(seed, &ScenarioOptions::default())
}

pub fn make_scenario(seed: u64, options: &ScenarioOptions) -> Result<Scenario> {
    options.grid.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scene = Scene::default();
    if options.ground {
        scene.add(Primitive::Wall(PlanePatch {
            axis: Axis::Z,
            offset: GROUND_Z,
            center: [60.0, 0.0],
            half: [62.0, 80.0],
        }))?;
    }
    let n_cars = rng.gen_range(options.cars.0..=options.cars.1);
    let n_spurious = rng.gen_range(options.spurious.0..=options.spurious.1);
    let az_limit: f64 = 0.55;
    let mut taken: Vec<(f64, f64)> = Vec::new();

    let mut ground_truth = Vec::new();
    for _ in 0..n_cars {
        for _attempt in 0..200 {
            let range = rng.gen_range(10.0..38.0);
            let az: f64 = rng.gen_range(-az_limit..az_limit);
            let size = random_size(&mut rng);
            let yaw = rng.gen_range(-PI..PI);
            let center = Point3::new(range * az.cos(), range * az.sin(), GROUND_Z + size.h / 2.0);
            let pose = OrientedBox3::new(center, size, yaw)?;
            let span = azimuth_span(&pose)?;
            if overlaps(&taken, span, 0.03) {
                continue;
            }
            taken.push(span);
            let id = scene.add(Primitive::Car {
                pose,
                bounds_only: false,
            })?;
            ground_truth.push((id, pose));
            break;
        }
    }

    let mut spurious = Vec::new();
    for _ in 0..n_spurious {
        for _attempt in 0..200 {
            let range = rng.gen_range(10.0..30.0);
            let az: f64 = rng.gen_range(-az_limit..az_limit);
            let size = random_size(&mut rng);
            let yaw = rng.gen_range(-PI..PI);
            let center = Point3::new(range * az.cos(), range * az.sin(), GROUND_Z + size.h / 2.0);
            let bbox = OrientedBox3::new(center, size, yaw)?;
            let ext = box_spherical_extent(&bbox)?;
            let mut span = (ext.theta_min, ext.theta_max);
            let mut wall = None;
            if options.backdrop {
                let distance = ext.r_max + rng.gen_range(3.0..10.0);
                let half_angle = (ext.theta_max - az).abs().max((az - ext.theta_min).abs());
                let half_width = distance * half_angle.tan() * 1.25 + 0.5;
                let top = distance * ext.phi_max.tan() * 1.2 + 0.5;
                let w = facing_wall(az, distance, half_width, GROUND_Z, top.max(GROUND_Z + 1.0))?;
                let ws = azimuth_span(&w)?;
                span = (span.0.min(ws.0), span.1.max(ws.1));
                wall = Some(w);
            }
            if overlaps(&taken, span, 0.03) {
                continue;
            }
            taken.push(span);
            let wall_id = match wall {
                Some(w) => Some(scene.add(Primitive::Box(w))?),
                None => None,
            };
            spurious.push((wall_id, bbox));
            break;
        }
    }

    let cast = raycast(&scene, &options.grid);
    let mut detections: Vec<Detection> = ground_truth
        .iter()
        .map(|(_, b)| Detection {
            bbox: *b,
            score: round4(rng.gen_range(0.5..0.99)),
            class: "Car".into(),
        })
        .collect();
    detections.extend(spurious.iter().map(|(_, b)| Detection {
        bbox: *b,
        score: round4(rng.gen_range(0.3..0.9)),
        class: "Car".into(),
    }));
    Ok(Scenario {
        seed,
        scene,
        grid: options.grid,
        cast,
        ground_truth,
        spurious,
        detections,
    })
}

/// One empty box with a rectangular frame target behind it, centered on
/// the box-center view ray. The frame's hole spans `hole_fraction` of the
/// box's angular half-extents, so small CAD ratios see only the hole and
/// large ones reach the frame.
pub fn make_planar_target(seed: u64, hole_fraction: f64) -> Result<Scenario> {
    if hole_fraction.is_nan() || hole_fraction <= 0.0 {
        return Err(Error::InvalidArgument("hole fraction must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = rng.gen_range(12.0..25.0);
    let az: f64 = rng.gen_range(-0.4..0.4);
    let size = random_size(&mut rng);
    let yaw = rng.gen_range(-PI..PI);
    let center = Point3::new(range * az.cos(), range * az.sin(), GROUND_Z + size.h / 2.0);
    let bbox = OrientedBox3::new(center, size, yaw)?;
    let ext = box_spherical_extent(&bbox)?;

    let distance = ext.r_max + 6.0;
    // Where the box-center view ray meets the target plane.
    let horizontal = center.x.hypot(center.y);
    let mid_z = center.z * distance / horizontal;
    let half_u = distance * (ext.theta_max - ext.theta_min).max(0.0).tan() / 2.0;
    let half_v = distance * ((ext.phi_max - ext.phi_min) / 2.0).tan();
    let (hole_u, hole_v) = (hole_fraction * half_u, hole_fraction * half_v);
    let (outer_u, outer_v) = (2.0 * half_u.max(hole_u) + 1.0, 2.0 * half_v.max(hole_v) + 1.0);

    // Frame pieces in (u, v) wall coordinates: left, right, bottom, top.
    let pieces = [
        (-outer_u, -hole_u, -outer_v, outer_v),
        (hole_u, outer_u, -outer_v, outer_v),
        (-hole_u, hole_u, -outer_v, -hole_v),
        (-hole_u, hole_u, hole_v, outer_v),
    ];
    let mut scene = Scene::default();
    let mut frame_ids = Vec::new();
    let r = distance + WALL_THICKNESS / 2.0;
    let (tangent_x, tangent_y) = (-az.sin(), az.cos());
    for (u0, u1, v0, v1) in pieces {
        let (uc, vc) = ((u0 + u1) / 2.0, (v0 + v1) / 2.0);
        let c = Point3::new(
            r * az.cos() + uc * tangent_x,
            r * az.sin() + uc * tangent_y,
            mid_z + vc,
        );
        let piece = OrientedBox3::new(c, BoxSize::new(WALL_THICKNESS, u1 - u0, v1 - v0), az + FRAC_PI_2)?;
        frame_ids.push(scene.add(Primitive::Box(piece))?);
    }
    let grid = LidarGrid {
        az_min: -0.75,
        az_max: 0.75,
        el_min: -0.6,
        el_max: 0.3,
        el_step: 0.9 / 127.0,
        ..LidarGrid::default()
    };
    let cast = raycast(&scene, &grid);
    Ok(Scenario {
        seed,
        scene,
        grid,
        cast,
        ground_truth: vec![],
        spurious: vec![(frame_ids.first().copied(), bbox)],
        detections: vec![Detection {
            bbox,
            score: 0.5,
            class: "Car".into(),
        }],
    })
}

fn fallback_label(bbox: &OrientedBox3, calib: &CalibrationSet, score: Option<f64>) -> KittiLabel {
    let (location, dims, rotation_y) = kitti::lidar_to_camera_box(bbox, calib);
    KittiLabel {
        kind: "Car".into(),
        truncated: 1.0,
        occluded: 0,
        alpha: 0.0,
        bbox: [0.0; 4],
        dims,
        location,
        rotation_y,
        score,
    }
}

/// Writes one frame in KITTI layout under `root`: `velodyne/`, `label_2/`,
/// `calib/`, and `pred/` (detections with scores).
pub fn write_frame(
    root: &Path,
    id: &str,
    points: &[Point3],
    ground_truth: &[OrientedBox3],
    detections: &[Detection],
    calib: &CalibrationSet,
) -> Result<()> {
    for sub in ["velodyne", "label_2", "calib", "pred"] {
        let dir = root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    kitti::write_velodyne(root.join("velodyne").join(format!("{id}.bin")), points, &[])?;
    let labels: Vec<KittiLabel> = ground_truth
        .iter()
        .map(|b| label_from_box(b, calib, "Car", 0, None).unwrap_or_else(|| fallback_label(b, calib, None)))
        .collect();
    let preds: Vec<KittiLabel> = detections
        .iter()
        .map(|d| {
            label_from_box(&d.bbox, calib, &d.class, 0, Some(d.score))
                .unwrap_or_else(|| fallback_label(&d.bbox, calib, Some(d.score)))
        })
        .collect();
    let label_path = root.join("label_2").join(format!("{id}.txt"));
    fs::write(&label_path, format_labels(&labels)).map_err(|e| Error::io(&label_path, e))?;
    let pred_path = root.join("pred").join(format!("{id}.txt"));
    fs::write(&pred_path, format_labels(&preds)).map_err(|e| Error::io(&pred_path, e))?;
    kitti::write_calib(calib, root.join("calib").join(format!("{id}.txt")))
}
