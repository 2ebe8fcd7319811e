//! The frustum of scene points behind a predicted box.
//!
//! A point belongs to the search area when it is farther than every box
//! corner and its azimuth and elevation fall strictly inside the corners'
//! ranges. Azimuths are unwrapped about the box-center azimuth so boxes
//! straddling the +-pi seam behave like any other.

use std::f64::consts::{PI, TAU};

use crate::cad::OrientedBox3;
use crate::error::{Error, Result};
use crate::geometry::{cartesian_to_spherical, wrap_angle, Point3, SphericalCoord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalExtent {
    pub r_max: f64,
    /// Azimuth about which `theta_min..theta_max` is unwrapped.
    pub theta_center: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
}

impl SphericalExtent {
    /// Strict frustum membership of a point already in spherical form.
    #[inline]
    pub fn contains(&self, s: &SphericalCoord) -> bool {
        if !(s.r > self.r_max && s.phi > self.phi_min && s.phi < self.phi_max) {
            return false;
        }
        let theta = self.theta_center + wrap_angle(s.theta - self.theta_center);
        theta > self.theta_min && theta < self.theta_max
    }
}

/// The 8 vertices of the box: bottom face first, counter-clockwise from
/// the rear-right corner, then the top face in the same order.
pub fn box_corners(bbox: &OrientedBox3) -> [Point3; 8] {
    let e = bbox.size.axis_extents();
    let (hx, hy, hz) = (e.x / 2.0, e.y / 2.0, e.z / 2.0);
    [
        Point3::new(-hx, -hy, -hz),
        Point3::new(hx, -hy, -hz),
        Point3::new(hx, hy, -hz),
        Point3::new(-hx, hy, -hz),
        Point3::new(-hx, -hy, hz),
        Point3::new(hx, -hy, hz),
        Point3::new(hx, hy, hz),
        Point3::new(-hx, hy, hz),
    ]
    .map(|p| bbox.from_box_frame(p))
}

/// Spherical extent of the box corners as seen from the sensor.
///
/// Fails when the sensor lies inside the box footprint, where the azimuth
/// range is no longer an interval.
pub fn box_spherical_extent(bbox: &OrientedBox3) -> Result<SphericalExtent> {
    let origin = bbox.to_box_frame(Point3::ORIGIN);
    let e = bbox.size.axis_extents();
    if origin.x.abs() <= e.x / 2.0 && origin.y.abs() <= e.y / 2.0 {
        return Err(Error::InvalidGeometry(
            "sensor origin lies inside the box footprint".into(),
        ));
    }
    let center = cartesian_to_spherical(bbox.center)?;
    let theta_center = center.theta;
    let mut ext = SphericalExtent {
        r_max: 0.0,
        theta_center,
        theta_min: f64::INFINITY,
        theta_max: f64::NEG_INFINITY,
        phi_min: f64::INFINITY,
        phi_max: f64::NEG_INFINITY,
    };
    for corner in box_corners(bbox) {
        let s = cartesian_to_spherical(corner)?;
        let theta = theta_center + wrap_angle(s.theta - theta_center);
        ext.r_max = ext.r_max.max(s.r);
        ext.theta_min = ext.theta_min.min(theta);
        ext.theta_max = ext.theta_max.max(theta);
        ext.phi_min = ext.phi_min.min(s.phi);
        ext.phi_max = ext.phi_max.max(s.phi);
    }
    Ok(ext)
}

/// A scan converted to spherical form once, for cropping against many boxes.
/// Points at the sensor origin carry no direction and never match.
#[derive(Debug, Clone)]
pub struct SphericalCloud {
    coords: Vec<Option<SphericalCoord>>,
    /// Indices of directed points ordered by raw azimuth, with those azimuths.
    by_theta: Vec<(f64, usize)>,
}

impl SphericalCloud {
    pub fn new(cloud: &[Point3]) -> Self {
        let coords: Vec<Option<SphericalCoord>> =
            cloud.iter().map(|p| cartesian_to_spherical(*p).ok()).collect();
        let mut by_theta: Vec<(f64, usize)> = coords
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.map(|s| (s.theta, i)))
            .collect();
        by_theta.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        SphericalCloud { coords, by_theta }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&SphericalCoord> {
        self.coords[i].as_ref()
    }

    /// Ascending indices of points inside `extent`.
    ///
    /// Only the azimuth window (padded against rounding, and shifted by a
    /// full turn either way to cover the seam) is scanned; every candidate
    /// still goes through the exact membership test.
    pub fn crop(&self, extent: &SphericalExtent) -> Vec<usize> {
        const PAD: f64 = 1e-9;
        let (lo, hi) = (extent.theta_min - PAD, extent.theta_max + PAD);
        let mut out = Vec::new();
        let mut scan = |a: f64, b: f64| {
            let start = self.by_theta.partition_point(|&(t, _)| t < a);
            for &(t, i) in &self.by_theta[start..] {
                if t > b {
                    break;
                }
                let s = self.coords[i].as_ref().expect("indexed points have a direction");
                if extent.contains(s) {
                    out.push(i);
                }
            }
        };
        if hi - lo >= TAU - 4.0 * PAD {
            scan(f64::NEG_INFINITY, f64::INFINITY);
        } else {
            // The window and its images one turn away; they cannot overlap.
            for shift in [-TAU, 0.0, TAU] {
                let (a, b) = (lo + shift, hi + shift);
                if b >= -PI && a < PI {
                    scan(a, b);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Ascending indices of the points of `cloud` behind `bbox`.
pub fn crop_search_area(cloud: &[Point3], bbox: &OrientedBox3) -> Result<Vec<usize>> {
    let extent = box_spherical_extent(bbox)?;
    Ok(SphericalCloud::new(cloud).crop(&extent))
}
