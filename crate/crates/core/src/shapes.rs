//! Convex hexahedra: the building block for boxes, the procedural sedan,
//! and every opaque object the simulator casts rays against.

use rand::Rng;

use crate::geometry::Point3;

/// Face vertex indices, bottom face first. Bottom vertices are 0..4 and top
/// vertices 4..8, both wound counter-clockwise seen from above.
const FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [3, 0, 4, 7],
];

/// Outward half-space `normal . p <= offset`.
#[derive(Debug, Clone, Copy)]
struct HalfSpace {
    normal: Point3,
    offset: f64,
}

#[derive(Debug, Clone)]
pub struct Hexahedron {
    vertices: [Point3; 8],
    planes: [HalfSpace; 6],
}

impl Hexahedron {
    /// Builds a convex hexahedron from its 8 vertices. Each face must be
    /// planar; the caller is responsible for convexity.
    pub fn new(vertices: [Point3; 8]) -> Self {
        let centroid = vertices.iter().fold(Point3::ORIGIN, |acc, v| acc + *v) * 0.125;
        let planes = FACES.map(|face| {
            let a = vertices[face[0]];
            let b = vertices[face[1]];
            let c = vertices[face[2]];
            let d = vertices[face[3]];
            // Newell-style normal from both diagonals tolerates a degenerate edge.
            let mut normal = (c - a).cross(&(d - b));
            let len = normal.norm();
            normal = normal * (1.0 / len);
            let face_center = (a + b + c + d) * 0.25;
            if normal.dot(&(face_center - centroid)) < 0.0 {
                normal = -normal;
            }
            HalfSpace {
                normal,
                offset: normal.dot(&face_center),
            }
        });
        Hexahedron { vertices, planes }
    }

    /// Axis-aligned box centered at the origin with the given x/y/z extents.
    pub fn axis_aligned(extents: Point3) -> Self {
        let (hx, hy, hz) = (extents.x / 2.0, extents.y / 2.0, extents.z / 2.0);
        Hexahedron::new([
            Point3::new(-hx, -hy, -hz),
            Point3::new(hx, -hy, -hz),
            Point3::new(hx, hy, -hz),
            Point3::new(-hx, hy, -hz),
            Point3::new(-hx, -hy, hz),
            Point3::new(hx, -hy, hz),
            Point3::new(hx, hy, hz),
            Point3::new(-hx, hy, hz),
        ])
    }

    pub fn vertices(&self) -> &[Point3; 8] {
        &self.vertices
    }

    pub fn map(&self, f: impl Fn(Point3) -> Point3) -> Self {
        Hexahedron::new(self.vertices.map(f))
    }

    /// True when `p` is inside or within `tol` of the surface.
    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        self.planes.iter().all(|h| h.normal.dot(&p) <= h.offset + tol)
    }

    /// Distance along the unit ray `origin + s * dir` to the first surface
    /// crossing with `s >= 0`. A ray starting inside reports the exit.
    pub fn ray_hit(&self, origin: Point3, dir: Point3) -> Option<f64> {
        let mut enter = f64::NEG_INFINITY;
        let mut exit = f64::INFINITY;
        for h in &self.planes {
            let denom = h.normal.dot(&dir);
            let num = h.offset - h.normal.dot(&origin);
            if denom == 0.0 {
                if num < 0.0 {
                    return None;
                }
                continue;
            }
            let s = num / denom;
            if denom < 0.0 {
                enter = enter.max(s);
            } else {
                exit = exit.min(s);
            }
            if enter > exit {
                return None;
            }
        }
        if enter >= 0.0 {
            Some(enter)
        } else if exit >= 0.0 {
            Some(exit)
        } else {
            None
        }
    }

    pub fn bounding_radius(&self, about: Point3) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.distance(&about))
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self) -> Point3 {
        self.vertices.iter().fold(Point3::ORIGIN, |acc, v| acc + *v) * 0.125
    }

    /// Triangles covering the surface, two per face.
    pub fn surface_triangles(&self) -> Vec<[Point3; 3]> {
        FACES
            .iter()
            .flat_map(|f| {
                let v = f.map(|i| self.vertices[i]);
                [[v[0], v[1], v[2]], [v[0], v[2], v[3]]]
            })
            .collect()
    }
}

pub fn triangle_area(t: &[Point3; 3]) -> f64 {
    (t[1] - t[0]).cross(&(t[2] - t[0])).norm() * 0.5
}

/// Uniform sample on a triangle.
pub fn sample_triangle<R: Rng>(t: &[Point3; 3], rng: &mut R) -> Point3 {
    let mut a: f64 = rng.gen();
    let mut b: f64 = rng.gen();
    if a + b > 1.0 {
        a = 1.0 - a;
        b = 1.0 - b;
    }
    t[0] + (t[1] - t[0]) * a + (t[2] - t[0]) * b
}
