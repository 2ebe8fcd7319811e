use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra as na;

use crate::cad::{BoxSize, OrientedBox3};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Point3};
use crate::kitti::label::KittiLabel;

/// The subset of a KITTI object calibration file the pipeline needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    pub p2: na::Matrix3x4<f64>,
    pub r0_rect: na::Matrix3<f64>,
    pub tr_velo_to_cam: na::Matrix3x4<f64>,
}

impl CalibrationSet {
    /// Ideal sensor alignment: LiDAR x forward maps to camera z, y left to
    /// camera -x, z up to camera -y, no offset. Uses typical KITTI left
    /// color camera intrinsics.
    pub fn nominal() -> Self {
        #[rustfmt::skip]
        let tr = na::Matrix3x4::new(
            0.0, -1.0, 0.0, 0.0,
            0.0, 0.0, -1.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
        );
        #[rustfmt::skip]
        let p2 = na::Matrix3x4::new(
            721.5377, 0.0, 609.5593, 44.85728,
            0.0, 721.5377, 172.854, 0.2163791,
            0.0, 0.0, 1.0, 0.002745884,
        );
        CalibrationSet {
            p2,
            r0_rect: na::Matrix3::identity(),
            tr_velo_to_cam: tr,
        }
    }

    /// Homogeneous LiDAR to rectified-camera transform.
    pub fn velo_to_rect(&self) -> na::Matrix4<f64> {
        let mut r0 = na::Matrix4::identity();
        r0.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.r0_rect);
        let mut tr = na::Matrix4::identity();
        tr.fixed_view_mut::<3, 4>(0, 0).copy_from(&self.tr_velo_to_cam);
        r0 * tr
    }

    pub fn rect_to_velo(&self) -> Result<na::Matrix4<f64>> {
        let m = self.velo_to_rect();
        let det = m.determinant();
        if !det.is_finite() || det.abs() < 1e-9 {
            return Err(Error::InvalidCalibration(format!(
                "velo-to-rect transform is singular (det {det:e})"
            )));
        }
        m.try_inverse()
            .ok_or_else(|| Error::InvalidCalibration("velo-to-rect transform is singular".into()))
    }

    pub fn velo_point_to_rect(&self, p: Point3) -> Point3 {
        let v = self.velo_to_rect() * na::Vector4::new(p.x, p.y, p.z, 1.0);
        Point3::new(v.x, v.y, v.z)
    }

    pub fn rect_point_to_velo(&self, p: Point3) -> Result<Point3> {
        let v = self.rect_to_velo()? * na::Vector4::new(p.x, p.y, p.z, 1.0);
        Ok(Point3::new(v.x, v.y, v.z))
    }

    /// Pixel coordinates of a rectified-camera point, `None` behind the camera.
    pub fn project_rect(&self, p: Point3) -> Option<[f64; 2]> {
        let v = self.p2 * na::Vector4::new(p.x, p.y, p.z, 1.0);
        (v.z > 1e-6).then(|| [v.x / v.z, v.y / v.z])
    }

    pub fn format(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, key: &str, vals: &[f64]| {
            let _ = write!(s, "{key}:");
            for v in vals {
                let _ = write!(s, " {v:.12e}");
            }
            s.push('\n');
        };
        let p2: Vec<f64> = self.p2.transpose().iter().copied().collect();
        let r0: Vec<f64> = self.r0_rect.transpose().iter().copied().collect();
        let tr: Vec<f64> = self.tr_velo_to_cam.transpose().iter().copied().collect();
        row(&mut s, "P2", &p2);
        row(&mut s, "R0_rect", &r0);
        row(&mut s, "Tr_velo_to_cam", &tr);
        s
    }
}

pub fn parse_calib(path: impl AsRef<Path>) -> Result<CalibrationSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_calib_str(&text, path)
}

/// Parses `KEY: v1 v2 ...` lines. Matrices are row-major; unknown keys are
/// ignored.
pub fn parse_calib_str(text: &str, path: &Path) -> Result<CalibrationSet> {
    let mut rows: HashMap<&str, (usize, Vec<f64>)> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let Some((key, values)) = line.split_once(':') else {
            continue;
        };
        let key = key.trim();
        if !matches!(key, "P2" | "R0_rect" | "Tr_velo_to_cam") {
            continue;
        }
        let vals = values
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, i + 1, format!("{key}: {e}")))?;
        rows.insert(key, (i + 1, vals));
    }
    let mut take = |key: &str, n: usize| -> Result<Vec<f64>> {
        let (line, vals) = rows.remove(key).ok_or_else(|| Error::MissingCalibration {
            path: path.to_path_buf(),
            key: key.to_string(),
        })?;
        if vals.len() != n {
            return Err(Error::parse(
                path,
                line,
                format!("{key}: expected {n} values, found {}", vals.len()),
            ));
        }
        Ok(vals)
    };
    Ok(CalibrationSet {
        p2: na::Matrix3x4::from_row_slice(&take("P2", 12)?),
        r0_rect: na::Matrix3::from_row_slice(&take("R0_rect", 9)?),
        tr_velo_to_cam: na::Matrix3x4::from_row_slice(&take("Tr_velo_to_cam", 12)?),
    })
}

pub fn write_calib(calib: &CalibrationSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, calib.format()).map_err(|e| Error::io(path, e))
}

/// Converts a camera-frame label to a LiDAR-frame box with a volumetric
/// center and `[w, l, h]` size.
pub fn camera_to_lidar_box(label: &KittiLabel, calib: &CalibrationSet) -> Result<OrientedBox3> {
    let [h, w, l] = label.dims;
    let bottom = calib.rect_point_to_velo(Point3::from(label.location))?;
    let center = bottom + Point3::new(0.0, 0.0, h / 2.0);
    OrientedBox3::new(
        center,
        BoxSize::new(w, l, h),
        wrap_angle(-label.rotation_y - std::f64::consts::FRAC_PI_2),
    )
}

/// Inverse of [`camera_to_lidar_box`]: bottom-face center in the rectified
/// camera frame, `(h, w, l)` dims, and `rotation_y`.
pub fn lidar_to_camera_box(bbox: &OrientedBox3, calib: &CalibrationSet) -> ([f64; 3], [f64; 3], f64) {
    let bottom = bbox.center - Point3::new(0.0, 0.0, bbox.size.h / 2.0);
    let loc = calib.velo_point_to_rect(bottom);
    (
        loc.to_array(),
        [bbox.size.h, bbox.size.w, bbox.size.l],
        wrap_angle(-bbox.yaw - std::f64::consts::FRAC_PI_2),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kitti::label::parse_label_line;
    use std::f64::consts::FRAC_PI_2;

    const MINIMAL: &str = "\
P2: 7.215377e+02 0.000000e+00 6.095593e+02 4.485728e+01 0.000000e+00 7.215377e+02 1.728540e+02 2.163791e-01 0.000000e+00 0.000000e+00 1.000000e+00 2.745884e-03
R0_rect: 9.999239e-01 9.837760e-03 -7.445048e-03 -9.869795e-03 9.999421e-01 -4.278459e-03 7.402527e-03 4.351614e-03 9.999631e-01
Tr_velo_to_cam: 7.533745e-03 -9.999714e-01 -6.166020e-04 -4.069766e-03 1.480249e-02 7.280733e-04 -9.998902e-01 -7.631618e-02 9.998621e-01 7.523790e-03 1.480755e-02 -2.717806e-01
";

    #[test]
    fn parses_minimal_file() {
        let c = parse_calib_str(MINIMAL, Path::new("c.txt")).unwrap();
        assert_eq!(c.p2[(0, 0)], 721.5377);
        assert_eq!(c.p2[(1, 3)], 0.2163791);
        assert_eq!(c.r0_rect[(0, 1)], 9.837760e-03);
        assert_eq!(c.tr_velo_to_cam[(2, 3)], -2.717806e-01);
    }

    #[test]
    fn missing_key_is_reported() {
        let text: String = MINIMAL
            .lines()
            .filter(|l| !l.starts_with("Tr_velo"))
            .map(|l| format!("{l}\n"))
            .collect();
        match parse_calib_str(&text, Path::new("c.txt")) {
            Err(Error::MissingCalibration { key, .. }) => assert_eq!(key, "Tr_velo_to_cam"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn format_parse_round_trip() {
        let c = parse_calib_str(MINIMAL, Path::new("c.txt")).unwrap();
        let back = parse_calib_str(&c.format(), Path::new("c.txt")).unwrap();
        assert!((c.velo_to_rect() - back.velo_to_rect()).abs().max() < 1e-12);
        assert!((c.p2 - back.p2).abs().max() < 1e-9);
    }

    #[test]
    fn nominal_calibration_is_an_axis_permutation() {
        let mut label =
            parse_label_line("Car 0.00 0 0.00 0 0 10 10 1.50 1.80 4.50 0.00 0.00 10.00 -1.5707963267948966")
                .unwrap();
        let b = camera_to_lidar_box(&label, &CalibrationSet::nominal()).unwrap();
        assert!(b.center.distance(&Point3::new(10.0, 0.0, 0.75)) < 1e-12);
        assert!(b.yaw.abs() < 1e-12);
        assert_eq!(b.size, BoxSize::new(1.8, 4.5, 1.5));

        label.rotation_y = 0.0;
        let b = camera_to_lidar_box(&label, &CalibrationSet::nominal()).unwrap();
        assert!((b.yaw + FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn singular_calibration_is_rejected() {
        let mut c = CalibrationSet::nominal();
        c.r0_rect = na::Matrix3::zeros();
        let label = parse_label_line("Car 0.00 0 0.00 0 0 10 10 1.50 1.80 4.50 0.00 0.00 10.00 0.0").unwrap();
        assert!(matches!(
            camera_to_lidar_box(&label, &c),
            Err(Error::InvalidCalibration(_))
        ));
    }
}
