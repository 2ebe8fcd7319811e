//! Rejects false-positive vehicle detections in LiDAR scans by looking for
//! returns that pass through the space a car would occupy.
//!
//! A detection is kept only if no point behind it, within its angular
//! footprint, falls inside the projected silhouette of a car model scaled to
//! the box. Such a point would be a ray that travelled through the supposed
//! car, which a real car would have stopped.
//!
//! Also included: KITTI file I/O, a 40-point AP evaluator, and a small
//! ray-casting simulator used to build seeded test scenes.

pub mod cad;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod kitti;
pub mod ppc;
pub mod search_area;
pub mod shapes;
pub mod synth;

pub use cad::{align_cad, BoxSize, CadModel, Detection, OrientedBox3, DEFAULT_KAPPA};
pub use error::{Error, Result};
pub use eval::{EvalReport, GroundTruth, Metric};
pub use geometry::{PlanePoint, Point3, PolarPlanePoint, SphericalCoord};
pub use kitti::Difficulty;
pub use ppc::{filter_detections, filter_detections_with, FilterOptions, FilterOutcome, Frame, Verdict};
pub use search_area::crop_search_area;
