//! A ray-casting LiDAR simulator over opaque boxes, wall patches and posed
//! sedan solids.
//!
//! Each ray returns only its nearest intersection, so no return ever lies
//! behind a surface along its own ray. That makes the simulator a physical
//! ground truth for the classifier: a correctly placed car box can never
//! have a return inside its silhouette behind it.

mod oracle;
mod scenario;
mod scene_file;

use rayon::prelude::*;

pub use oracle::{oracle_in_silhouette, projected_hull, ConvexHull2};
pub use scenario::{
    make_fp_scenario, make_planar_target, make_scenario, write_frame, Scenario, ScenarioOptions,
};
pub use scene_file::{parse_scene, parse_scene_str, SceneFile};

use crate::cad::{sedan, BoxSize, OrientedBox3};
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::shapes::Hexahedron;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// An axis-perpendicular rectangle: `axis` coordinate fixed at `offset`,
/// the other two coordinates (in x, y, z order) within `half` of `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePatch {
    pub axis: Axis,
    pub offset: f64,
    pub center: [f64; 2],
    pub half: [f64; 2],
}

impl PlanePatch {
    fn in_plane(&self, p: Point3) -> [f64; 2] {
        let c = p.to_array();
        match self.axis {
            Axis::X => [c[1], c[2]],
            Axis::Y => [c[0], c[2]],
            Axis::Z => [c[0], c[1]],
        }
    }

    pub fn ray_hit(&self, origin: Point3, dir: Point3) -> Option<f64> {
        let k = self.axis.index();
        let d = dir.to_array()[k];
        if d == 0.0 {
            return None;
        }
        let s = (self.offset - origin.to_array()[k]) / d;
        if s < 0.0 {
            return None;
        }
        let uv = self.in_plane(origin + dir * s);
        ((uv[0] - self.center[0]).abs() <= self.half[0] && (uv[1] - self.center[1]).abs() <= self.half[1])
            .then_some(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Box(OrientedBox3),
    Wall(PlanePatch),
    /// A sedan solid filling `pose`. `bounds_only` casts against the pose
    /// box itself, used for CAD files without a known surface.
    Car {
        pose: OrientedBox3,
        bounds_only: bool,
    },
}

#[derive(Debug, Clone)]
pub struct SceneObject {
    pub id: u32,
    pub primitive: Primitive,
    solids: Vec<Hexahedron>,
}

impl SceneObject {
    pub fn new(id: u32, primitive: Primitive) -> Result<Self> {
        let solids = match &primitive {
            Primitive::Box(b) => vec![b.hexahedron()],
            Primitive::Wall(w) => {
                if !(w.half[0] > 0.0 && w.half[1] > 0.0) {
                    return Err(Error::InvalidGeometry("wall extents must be positive".into()));
                }
                vec![]
            }
            Primitive::Car { pose, bounds_only } => {
                if *bounds_only {
                    vec![pose.hexahedron()]
                } else {
                    sedan::parts(pose.size)
                        .into_iter()
                        .map(|h| h.map(|p| pose.from_box_frame(p)))
                        .collect()
                }
            }
        };
        Ok(SceneObject {
            id,
            primitive,
            solids,
        })
    }

    pub fn ray_hit(&self, origin: Point3, dir: Point3) -> Option<f64> {
        match &self.primitive {
            Primitive::Wall(w) => w.ray_hit(origin, dir),
            _ => self
                .solids
                .iter()
                .filter_map(|s| s.ray_hit(origin, dir))
                .min_by(f64::total_cmp),
        }
    }

    /// True if `p` is inside the object's solid volume (walls have none).
    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        self.solids.iter().any(|s| s.contains(p, tol))
    }
}

#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn add(&mut self, primitive: Primitive) -> Result<u32> {
        let id = self.objects.iter().map(|o| o.id + 1).max().unwrap_or(0);
        self.objects.push(SceneObject::new(id, primitive)?);
        Ok(id)
    }

    pub fn add_with_id(&mut self, id: u32, primitive: Primitive) -> Result<()> {
        if self.objects.iter().any(|o| o.id == id) {
            return Err(Error::InvalidArgument(format!("duplicate object id {id}")));
        }
        self.objects.push(SceneObject::new(id, primitive)?);
        Ok(())
    }

    pub fn add_car(&mut self, center: Point3, size: BoxSize, yaw: f64) -> Result<u32> {
        let pose = OrientedBox3::new(center, size, yaw)?;
        self.add(Primitive::Car {
            pose,
            bounds_only: false,
        })
    }

    /// Nearest hit along a unit ray from the sensor origin.
    pub fn cast(&self, dir: Point3, max_range: f64) -> Option<(f64, u32)> {
        self.objects
            .iter()
            .filter_map(|o| o.ray_hit(Point3::ORIGIN, dir).map(|s| (s, o.id)))
            .filter(|&(s, _)| s <= max_range)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
    }
}

/// Scan pattern: azimuth over `[az_min, az_max)`, elevation over
/// `[el_min, el_max]` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarGrid {
    pub az_min: f64,
    pub az_max: f64,
    pub az_step: f64,
    pub el_min: f64,
    pub el_max: f64,
    pub el_step: f64,
    pub max_range: f64,
}

impl Default for LidarGrid {
    /// A 64-beam scanner sweeping the full circle at 0.003 rad.
    fn default() -> Self {
        LidarGrid {
            az_min: -std::f64::consts::PI,
            az_max: std::f64::consts::PI,
            az_step: 0.003,
            el_min: -0.43,
            el_max: 0.06,
            el_step: 0.49 / 63.0,
            max_range: 120.0,
        }
    }
}

impl LidarGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.az_step > 0.0 && self.el_step > 0.0 && self.max_range > 0.0) {
            return Err(Error::InvalidArgument(
                "lidar steps and range must be positive".into(),
            ));
        }
        if !(self.az_max > self.az_min && self.el_max >= self.el_min) {
            return Err(Error::InvalidArgument("lidar ranges are empty".into()));
        }
        Ok(())
    }

    pub fn azimuths(&self) -> Vec<f64> {
        let n = ((self.az_max - self.az_min) / self.az_step - 1e-9)
            .ceil()
            .max(1.0) as usize;
        (0..n).map(|k| self.az_min + k as f64 * self.az_step).collect()
    }

    pub fn elevations(&self) -> Vec<f64> {
        let n = ((self.el_max - self.el_min) / self.el_step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.el_min + k as f64 * self.el_step).collect()
    }

    pub fn ray_count(&self) -> usize {
        self.azimuths().len() * self.elevations().len()
    }

    /// Unit ray directions, azimuth-major.
    pub fn directions(&self) -> Vec<Point3> {
        let els = self.elevations();
        self.azimuths()
            .into_iter()
            .flat_map(|az| {
                els.iter().map(move |&el| {
                    let (se, ce) = el.sin_cos();
                    let (sa, ca) = az.sin_cos();
                    Point3::new(ce * ca, ce * sa, se)
                })
            })
            .collect()
    }
}

/// Returns of one sweep. `ray` holds the grid index of each return.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RayCast {
    pub points: Vec<Point3>,
    pub hit_ids: Vec<u32>,
    pub rays: Vec<usize>,
}

pub fn raycast(scene: &Scene, grid: &LidarGrid) -> RayCast {
    let dirs = grid.directions();
    let hits: Vec<Option<(Point3, u32)>> = dirs
        .par_iter()
        .map(|d| scene.cast(*d, grid.max_range).map(|(s, id)| (*d * s, id)))
        .collect();
    let mut out = RayCast::default();
    for (ray, hit) in hits.into_iter().enumerate() {
        if let Some((p, id)) = hit {
            out.points.push(p);
            out.hit_ids.push(id);
            out.rays.push(ray);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wall_x(offset: f64) -> Primitive {
        Primitive::Wall(PlanePatch {
            axis: Axis::X,
            offset,
            center: [0.0, 0.0],
            half: [5.0, 5.0],
        })
    }

    fn single_ray_grid() -> LidarGrid {
        LidarGrid {
            az_min: 0.0,
            az_max: 0.001,
            az_step: 0.01,
            el_min: 0.0,
            el_max: 0.0,
            el_step: 0.01,
            max_range: 100.0,
        }
    }

    #[test]
    fn nearest_wall_wins() {
        let mut scene = Scene::default();
        scene.add(wall_x(10.0)).unwrap();
        let grid = single_ray_grid();
        assert_eq!(grid.ray_count(), 1);
        let out = raycast(&scene, &grid);
        assert_eq!(out.points, vec![Point3::new(10.0, 0.0, 0.0)]);

        scene.add(wall_x(20.0)).unwrap();
        let out = raycast(&scene, &grid);
        assert_eq!(out.points, vec![Point3::new(10.0, 0.0, 0.0)]);
        assert_eq!(out.hit_ids, vec![0]);
    }

    #[test]
    fn missing_ray_has_no_return() {
        let mut scene = Scene::default();
        scene.add(wall_x(-10.0)).unwrap();
        assert!(raycast(&scene, &single_ray_grid()).points.is_empty());
        scene.add(wall_x(150.0)).unwrap();
        assert!(raycast(&scene, &single_ray_grid()).points.is_empty());
    }

    #[test]
    fn default_grid_shape() {
        let g = LidarGrid::default();
        assert_eq!(g.elevations().len(), 64);
        assert!((g.elevations()[63] - 0.06).abs() < 1e-12);
        assert_eq!(g.azimuths().len(), 2095);
    }

    #[test]
    fn car_surface_blocks_rays() {
        let mut scene = Scene::default();
        scene
            .add_car(Point3::new(10.0, 0.0, -0.98), BoxSize::new(1.8, 4.5, 1.5), 0.3)
            .unwrap();
        let (s, id) = scene
            .cast(Point3::new(1.0, 0.0, -0.1).normalized(), 100.0)
            .unwrap();
        assert_eq!(id, 0);
        assert!(s > 7.0 && s < 12.0);
    }
}
