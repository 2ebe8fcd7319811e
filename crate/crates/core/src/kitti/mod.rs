//! KITTI object-benchmark file formats and the camera/LiDAR box conventions.

mod calib;
mod label;
mod velodyne;

use std::collections::BTreeSet;
use std::path::Path;

pub use calib::{
    camera_to_lidar_box, lidar_to_camera_box, parse_calib, parse_calib_str, write_calib, CalibrationSet,
};
pub use label::{
    assign_difficulty, format_label, format_labels, parse_label_line, parse_labels, parse_labels_str,
    write_labels, Difficulty, KittiLabel,
};
pub use velodyne::{decode_velodyne, encode_velodyne, parse_velodyne, write_velodyne, VelodyneScan};

use crate::cad::OrientedBox3;
use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::search_area::box_corners;

pub const IMAGE_WIDTH: f64 = 1242.0;
pub const IMAGE_HEIGHT: f64 = 375.0;

/// Image-plane box of a LiDAR-frame box: the clipped 2D bbox and the
/// fraction of the unclipped bbox area outside the image. `None` when any
/// corner is behind the camera or nothing is visible.
pub fn project_box(bbox: &OrientedBox3, calib: &CalibrationSet) -> Option<([f64; 4], f64)> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in box_corners(bbox) {
        let px = calib.project_rect(calib.velo_point_to_rect(c))?;
        for k in 0..2 {
            lo[k] = lo[k].min(px[k]);
            hi[k] = hi[k].max(px[k]);
        }
    }
    let full = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    let clipped = [
        lo[0].clamp(0.0, IMAGE_WIDTH - 1.0),
        lo[1].clamp(0.0, IMAGE_HEIGHT - 1.0),
        hi[0].clamp(0.0, IMAGE_WIDTH - 1.0),
        hi[1].clamp(0.0, IMAGE_HEIGHT - 1.0),
    ];
    let visible = (clipped[2] - clipped[0]) * (clipped[3] - clipped[1]);
    if visible <= 0.0 || full <= 0.0 {
        return None;
    }
    Some((clipped, (1.0 - visible / full).clamp(0.0, 1.0)))
}

/// Builds a camera-frame label for a LiDAR-frame box. Returns `None` when
/// the box does not project into the image.
pub fn label_from_box(
    bbox: &OrientedBox3,
    calib: &CalibrationSet,
    kind: &str,
    occluded: i32,
    score: Option<f64>,
) -> Option<KittiLabel> {
    let (bbox2d, truncated) = project_box(bbox, calib)?;
    let (location, dims, rotation_y) = lidar_to_camera_box(bbox, calib);
    let alpha = wrap_angle(rotation_y - location[0].atan2(location[2]));
    Some(KittiLabel {
        kind: kind.to_string(),
        truncated,
        occluded,
        alpha,
        bbox: bbox2d,
        dims,
        location,
        rotation_y,
        score,
    })
}

/// Frame ids (file stems) of the files with extension `ext` in `dir`.
pub fn frame_ids(dir: &Path, ext: &str) -> Result<BTreeSet<String>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut ids = BTreeSet::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.insert(stem.to_string());
            }
        }
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::BoxSize;
    use crate::geometry::Point3;

    #[test]
    fn box_ahead_projects_near_principal_point() {
        let calib = CalibrationSet::nominal();
        let b = OrientedBox3::new(Point3::new(20.0, 0.0, -0.9), BoxSize::new(1.8, 4.5, 1.5), 0.0).unwrap();
        let (bb, trunc) = project_box(&b, &calib).unwrap();
        assert_eq!(trunc, 0.0);
        assert!(bb[0] < 609.6 + 44.9 / 20.0 && bb[2] > 609.6);
        assert!(bb[3] - bb[1] > 40.0);
    }

    #[test]
    fn box_behind_camera_does_not_project() {
        let b = OrientedBox3::new(Point3::new(-20.0, 0.0, -0.9), BoxSize::new(1.8, 4.5, 1.5), 0.0).unwrap();
        assert!(project_box(&b, &CalibrationSet::nominal()).is_none());
    }
}
