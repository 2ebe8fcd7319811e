//! Exact membership in the convex hull of a projected CAD cloud. Serves as
//! the independent reference for the nearest-angle classifier.

use crate::cad::OrientedBox3;
use crate::error::{Error, Result};
use crate::geometry::{cartesian_to_spherical, wrap_angle, PlanePoint, Point3};

/// Counter-clockwise convex polygon on the (theta, phi) plane, stored
/// relative to `center` with the azimuth offset wrapped.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexHull2 {
    pub center: PlanePoint,
    pub vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl ConvexHull2 {
    /// Monotone-chain hull of points already expressed relative to `center`.
    pub fn from_offsets(center: PlanePoint, mut pts: Vec<[f64; 2]>) -> Result<Self> {
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::InvalidGeometry(
                "hull needs at least 3 distinct points".into(),
            ));
        }
        let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
                Box::new(pts.iter())
            } else {
                Box::new(pts.iter().rev())
            };
            for &p in iter {
                while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                    hull.pop();
                }
                hull.push(p);
            }
            hull.pop();
        }
        if hull.len() < 3 {
            return Err(Error::InvalidGeometry(
                "degenerate hull (collinear points)".into(),
            ));
        }
        Ok(ConvexHull2 {
            center,
            vertices: hull,
        })
    }

    pub fn offset_of(&self, q: PlanePoint) -> [f64; 2] {
        [wrap_angle(q.theta - self.center.theta), q.phi - self.center.phi]
    }

    /// Closed membership of an offset point.
    pub fn contains_offset(&self, q: [f64; 2]) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % n], q) >= 0.0)
    }

    pub fn contains(&self, q: PlanePoint) -> bool {
        self.contains_offset(self.offset_of(q))
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn centroid(&self) -> [f64; 2] {
        // Area-weighted polygon centroid.
        let n = self.vertices.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let (p, q) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let c = p[0] * q[1] - q[0] * p[1];
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
            a2 += c;
        }
        [cx / (3.0 * a2), cy / (3.0 * a2)]
    }
}

/// Convex hull of an aligned CAD cloud projected onto the (theta, phi)
/// plane, relative to the projected box center.
pub fn projected_hull(aligned_cad: &[Point3], bbox: &OrientedBox3) -> Result<ConvexHull2> {
    let center = cartesian_to_spherical(bbox.center)?.plane();
    let offsets = aligned_cad
        .iter()
        .map(|p| {
            let s = cartesian_to_spherical(*p)?;
            Ok([wrap_angle(s.theta - center.theta), s.phi - center.phi])
        })
        .collect::<Result<Vec<_>>>()?;
    ConvexHull2::from_offsets(center, offsets)
}

pub fn oracle_in_silhouette(query: PlanePoint, hull: &ConvexHull2) -> bool {
    hull.contains(query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::{align_cad, BoxSize, CadModel};
    use proptest::prelude::*;

    fn square() -> ConvexHull2 {
        ConvexHull2::from_offsets(
            PlanePoint::default(),
            vec![
                [-1.0, -1.0],
                [1.0, -1.0],
                [1.0, 1.0],
                [-1.0, 1.0],
                [0.0, 0.0],
                [0.5, 0.2],
            ],
        )
        .unwrap()
    }

    #[test]
    fn hull_drops_interior_points() {
        let h = square();
        assert_eq!(h.vertices.len(), 4);
        assert!((h.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_inside_and_far_point_outside() {
        let h = square();
        let c = h.centroid();
        assert!(h.contains_offset(c));
        assert!(!h.contains(PlanePoint::new(3.0, 0.0)));
    }

    #[test]
    fn collinear_points_are_rejected() {
        let r = ConvexHull2::from_offsets(PlanePoint::default(), vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        assert!(r.is_err());
    }

    #[test]
    fn projected_car_hull_contains_center() {
        let b = OrientedBox3::new(Point3::new(12.0, -4.0, -0.9), BoxSize::new(1.8, 4.4, 1.5), 0.6).unwrap();
        let aligned = align_cad(&CadModel::default_sedan(), &b, 0.82).unwrap();
        let hull = projected_hull(&aligned, &b).unwrap();
        assert!(hull.contains_offset([0.0, 0.0]));
        assert!(hull.area() > 0.0);
    }

    /// Membership as the intersection of the half-planes bounding each edge,
    /// written against the implicit line equation instead of cross products.
    fn half_plane_contains(h: &ConvexHull2, q: [f64; 2]) -> bool {
        let n = h.vertices.len();
        (0..n).all(|i| {
            let (a, b) = (h.vertices[i], h.vertices[(i + 1) % n]);
            // Inward normal of a counter-clockwise edge.
            let normal = [-(b[1] - a[1]), b[0] - a[0]];
            normal[0] * q[0] + normal[1] * q[1] >= normal[0] * a[0] + normal[1] * a[1] - 1e-12
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn agrees_with_half_plane_intersection(
            pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..40),
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let Ok(h) = ConvexHull2::from_offsets(PlanePoint::default(), pts.iter().map(|&(a, b)| [a, b]).collect()) else {
                return Ok(());
            };
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..10_000 {
                let q = [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)];
                // Skip queries within rounding distance of an edge.
                let n = h.vertices.len();
                let near = (0..n).any(|i| {
                    let (a, b) = (h.vertices[i], h.vertices[(i + 1) % n]);
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    (cross(a, b, q) / len).abs() < 1e-9
                });
                if !near {
                    prop_assert_eq!(h.contains_offset(q), half_plane_contains(&h, q));
                }
            }
        }
    }
}
