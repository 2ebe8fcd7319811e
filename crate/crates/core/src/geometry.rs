//! Coordinate conventions shared by the whole crate.
//!
//! Everything lives in the LiDAR frame: sensor at the origin, x forward,
//! y left, z up. Spherical coordinates use azimuth `theta = atan2(y, x)` in
//! `[-pi, pi)` and elevation `phi = atan2(z, hypot(x, y))` in
//! `[-pi/2, pi/2]`. Elevation rather than zenith angle keeps the pole
//! regular; every interval test downstream is invariant under that choice.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    /// Componentwise product.
    pub fn hadamard(&self, other: &Point3) -> Point3 {
        Point3::new(self.x * other.x, self.y * other.y, self.z * other.z)
    }

    /// Unit vector in the same direction; zero stays zero.
    pub fn normalized(&self) -> Point3 {
        let n = self.norm();
        if n == 0.0 {
            *self
        } else {
            *self * (1.0 / n)
        }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Range, azimuth and elevation of a point as seen from the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoord {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalCoord {
    /// Drops the range, keeping the direction on the (theta, phi) plane.
    pub fn plane(&self) -> PlanePoint {
        PlanePoint {
            theta: self.theta,
            phi: self.phi,
        }
    }
}

/// A direction on the (theta, phi) projection plane, range discarded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanePoint {
    pub theta: f64,
    pub phi: f64,
}

impl PlanePoint {
    pub const fn new(theta: f64, phi: f64) -> Self {
        PlanePoint { theta, phi }
    }
}

/// Polar coordinates on the projection plane about some chosen center.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolarPlanePoint {
    pub rho: f64,
    pub t: f64,
}

/// Maps any angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(TAU) - PI;
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

pub fn cartesian_to_spherical(p: Point3) -> Result<SphericalCoord> {
    let r = p.norm();
    if r == 0.0 {
        return Err(Error::DegeneratePoint);
    }
    Ok(SphericalCoord {
        r,
        theta: wrap_angle(p.y.atan2(p.x)),
        phi: p.z.atan2(p.x.hypot(p.y)),
    })
}

pub fn spherical_to_cartesian(s: SphericalCoord) -> Point3 {
    let horizontal = s.r * s.phi.cos();
    Point3::new(
        horizontal * s.theta.cos(),
        horizontal * s.theta.sin(),
        s.r * s.phi.sin(),
    )
}

/// Rotates `p` counter-clockwise about the z axis by `theta`.
pub fn yaw_rotate(p: Point3, theta: f64) -> Point3 {
    let (s, c) = theta.sin_cos();
    Point3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
}

/// Expresses `p` in polar coordinates about `origin`. The azimuth offset is
/// wrapped so points straddling the +-pi seam stay adjacent.
pub fn plane_to_polar(p: PlanePoint, origin: PlanePoint) -> PolarPlanePoint {
    let d_theta = wrap_angle(p.theta - origin.theta);
    let d_phi = p.phi - origin.phi;
    let rho = d_theta.hypot(d_phi);
    if rho == 0.0 {
        return PolarPlanePoint { rho: 0.0, t: 0.0 };
    }
    PolarPlanePoint {
        rho,
        t: wrap_angle(d_phi.atan2(d_theta)),
    }
}

/// Smallest unsigned difference between two angles, in `[0, pi]`.
pub fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}
