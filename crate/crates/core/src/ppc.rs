//! The penetrated-point classifier.
//!
//! For every detection the CAD model is aligned inside the box, the scan
//! points behind the box are cropped, and both are projected onto the
//! (theta, phi) plane and expressed in polar form about the projection of
//! the box center. A search-area point is penetrated when the CAD point
//! with the nearest polar angle lies farther from the center than it does.
//! A single penetrated point removes the box: an opaque car cannot let a
//! laser return through its own silhouette.

use rayon::prelude::*;

use crate::cad::{align_cad, CadModel, Detection, OrientedBox3};
use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::geometry::{
    angular_gap, cartesian_to_spherical, plane_to_polar, PlanePoint, Point3, PolarPlanePoint,
};
use crate::search_area::{box_spherical_extent, SphericalCloud};

/// One LiDAR scan with the detections made on it.
#[derive(Debug, Clone, Default)]
pub struct Frame {
    pub id: String,
    pub points: Vec<Point3>,
    pub detections: Vec<Detection>,
    pub ground_truths: Option<Vec<GroundTruth>>,
}

/// The aligned CAD cloud in polar form about the projected box center.
#[derive(Debug, Clone)]
pub struct Silhouette {
    center: PlanePoint,
    points: Vec<PolarPlanePoint>,
    min_rho: f64,
    /// Distinct angles in ascending order, each with the lowest CAD index
    /// carrying that angle.
    by_angle: Vec<(f64, usize)>,
}

impl Silhouette {
    /// Wraps polar points that are already expressed about `center`.
    pub fn from_polar(center: PlanePoint, points: Vec<PolarPlanePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty silhouette".into()));
        }
        if points.iter().any(|p| !p.rho.is_finite() || !p.t.is_finite()) {
            return Err(Error::InvalidArgument("non-finite silhouette point".into()));
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| points[a].t.total_cmp(&points[b].t).then(a.cmp(&b)));
        let mut by_angle: Vec<(f64, usize)> = Vec::with_capacity(points.len());
        for i in order {
            match by_angle.last() {
                Some(&(t, _)) if t == points[i].t => {}
                _ => by_angle.push((points[i].t, i)),
            }
        }
        let min_rho = points.iter().map(|p| p.rho).fold(f64::INFINITY, f64::min);
        Ok(Silhouette {
            center,
            points,
            min_rho,
            by_angle,
        })
    }

    pub fn center(&self) -> PlanePoint {
        self.center
    }

    pub fn points(&self) -> &[PolarPlanePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the CAD point whose angle is nearest to `t`, lowest index on
    /// ties.
    pub fn nearest_angle(&self, t: f64) -> usize {
        let m = self.by_angle.len();
        let better = |best: Option<(f64, usize)>, k: usize| {
            let (tk, ik) = self.by_angle[k];
            let gap = angular_gap(t, tk);
            match best {
                Some((g, i)) if g < gap || (g == gap && i < ik) => best,
                _ => Some((gap, ik)),
            }
        };
        let mut best = None;
        if m <= 4 {
            for k in 0..m {
                best = better(best, k);
            }
        } else {
            let pos = self.by_angle.partition_point(|&(tk, _)| tk < t);
            for offset in [m - 2, m - 1, 0, 1] {
                best = better(best, (pos + offset) % m);
            }
        }
        best.map(|(_, i)| i).expect("silhouette is non-empty")
    }
}

/// Projects the aligned CAD cloud onto the (theta, phi) plane, polar about
/// the projection of the box center.
pub fn build_silhouette(aligned_cad: &[Point3], bbox: &OrientedBox3) -> Result<Silhouette> {
    let center = cartesian_to_spherical(bbox.center)?.plane();
    let points = aligned_cad
        .iter()
        .map(|p| Ok(plane_to_polar(cartesian_to_spherical(*p)?.plane(), center)))
        .collect::<Result<Vec<_>>>()?;
    Silhouette::from_polar(center, points)
}

/// Nearest-angle radial test. Returns the decision and the matched CAD index.
pub fn is_penetrated(sa_point: PolarPlanePoint, sil: &Silhouette) -> (bool, usize) {
    let j = sil.nearest_angle(sa_point.t);
    if sa_point.rho == 0.0 {
        // Exactly on the center: interior to any closed silhouette.
        return (sil.min_rho > 0.0, j);
    }
    (sil.points[j].rho > sa_point.rho, j)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    pub kappa: f64,
    /// Enumerate every penetrated point instead of stopping at the first.
    pub diagnostics: bool,
    /// Evaluate detections on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for FilterOptions {
    fn default() -> Self {
        FilterOptions {
            kappa: crate::cad::DEFAULT_KAPPA,
            diagnostics: false,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Penetration {
    /// Index into the frame's point cloud of the first penetrated point.
    pub point_index: usize,
    pub polar: PolarPlanePoint,
    pub cad_index: usize,
    /// Every penetrated point, only filled in diagnostics mode.
    pub all_points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Kept {
        search_area: usize,
    },
    Removed(Penetration),
    /// The geometry could not be evaluated; the detection is kept.
    Skipped(String),
}

impl Verdict {
    pub fn is_removed(&self) -> bool {
        matches!(self, Verdict::Removed(_))
    }
}

/// Per-detection verdicts, in the frame's detection order.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub verdicts: Vec<Verdict>,
}

impl FilterOutcome {
    pub fn kept_indices(&self) -> Vec<usize> {
        (0..self.verdicts.len())
            .filter(|&i| !self.verdicts[i].is_removed())
            .collect()
    }

    pub fn removed_indices(&self) -> Vec<usize> {
        (0..self.verdicts.len())
            .filter(|&i| self.verdicts[i].is_removed())
            .collect()
    }

    pub fn kept<'a>(&'a self, detections: &'a [Detection]) -> Vec<&'a Detection> {
        self.kept_indices().into_iter().map(|i| &detections[i]).collect()
    }

    pub fn removed<'a>(&'a self, detections: &'a [Detection]) -> Vec<&'a Detection> {
        self.removed_indices()
            .into_iter()
            .map(|i| &detections[i])
            .collect()
    }

    pub fn removed_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_removed()).count()
    }
}

/// Classifies one box against a prepared scan.
pub fn classify_box(
    cloud: &SphericalCloud,
    bbox: &OrientedBox3,
    cad: &CadModel,
    options: &FilterOptions,
) -> Result<Verdict> {
    let extent = box_spherical_extent(bbox)?;
    let search_area = cloud.crop(&extent);
    if search_area.is_empty() {
        return Ok(Verdict::Kept { search_area: 0 });
    }
    let aligned = align_cad(cad, bbox, options.kappa)?;
    let sil = build_silhouette(&aligned, bbox)?;
    let mut found: Option<Penetration> = None;
    for &i in &search_area {
        let s = cloud.get(i).expect("cropped points have a direction");
        let polar = plane_to_polar(s.plane(), sil.center());
        let (hit, cad_index) = is_penetrated(polar, &sil);
        if !hit {
            continue;
        }
        match found.as_mut() {
            None => {
                found = Some(Penetration {
                    point_index: i,
                    polar,
                    cad_index,
                    all_points: if options.diagnostics { vec![i] } else { vec![] },
                });
                if !options.diagnostics {
                    break;
                }
            }
            Some(p) => p.all_points.push(i),
        }
    }
    Ok(match found {
        Some(p) => Verdict::Removed(p),
        None => Verdict::Kept {
            search_area: search_area.len(),
        },
    })
}

/// Runs the classifier over every detection of a frame. Detections are
/// independent: removing one never changes the verdict on another.
pub fn filter_detections(frame: &Frame, cad: &CadModel, kappa: f64) -> Result<FilterOutcome> {
    filter_detections_with(
        frame,
        cad,
        &FilterOptions {
            kappa,
            ..FilterOptions::default()
        },
    )
}

pub fn filter_detections_with(
    frame: &Frame,
    cad: &CadModel,
    options: &FilterOptions,
) -> Result<FilterOutcome> {
    if !(options.kappa > 0.0 && options.kappa <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa must be in (0, 1], got {}",
            options.kappa
        )));
    }
    let cloud = SphericalCloud::new(&frame.points);
    let judge = |d: &Detection| {
        classify_box(&cloud, &d.bbox, cad, options).unwrap_or_else(|e| Verdict::Skipped(e.to_string()))
    };
    let verdicts = if options.parallel {
        frame.detections.par_iter().map(judge).collect()
    } else {
        frame.detections.iter().map(judge).collect()
    };
    Ok(FilterOutcome { verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::BoxSize;
    use crate::search_area::box_corners;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn circle(n: usize, rho: f64) -> Silhouette {
        let pts = (0..n)
            .map(|k| PolarPlanePoint {
                rho,
                t: crate::geometry::wrap_angle(k as f64 * TAU / n as f64),
            })
            .collect();
        Silhouette::from_polar(PlanePoint::default(), pts).unwrap()
    }

    fn naive_nearest(sil: &Silhouette, t: f64) -> usize {
        let mut best = 0;
        for (j, p) in sil.points().iter().enumerate() {
            if angular_gap(t, p.t) < angular_gap(t, sil.points()[best].t) {
                best = j;
            }
        }
        best
    }

    #[test]
    fn circle_inside_and_outside() {
        let sil = circle(360, 0.1);
        assert!(is_penetrated(PolarPlanePoint { rho: 0.05, t: 1.0 }, &sil).0);
        assert!(!is_penetrated(PolarPlanePoint { rho: 0.15, t: 1.0 }, &sil).0);
    }

    #[test]
    fn center_point_counts_as_inside() {
        let sil = circle(8, 0.1);
        assert!(is_penetrated(PolarPlanePoint { rho: 0.0, t: 0.0 }, &sil).0);
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        let pts = vec![
            PolarPlanePoint { rho: 1.0, t: 0.2 },
            PolarPlanePoint { rho: 2.0, t: -0.2 },
            PolarPlanePoint { rho: 3.0, t: 0.2 },
        ];
        let sil = Silhouette::from_polar(PlanePoint::default(), pts).unwrap();
        assert_eq!(sil.nearest_angle(0.0), 0);
        assert_eq!(sil.nearest_angle(0.3), 0);
        assert_eq!(sil.nearest_angle(-0.3), 1);
    }

    #[test]
    fn silhouette_of_cube_corners_is_point_symmetric() {
        let b = OrientedBox3::new(Point3::new(10.0, 0.0, 0.0), BoxSize::new(2.0, 2.0, 2.0), 0.0).unwrap();
        let sil = build_silhouette(&box_corners(&b), &b).unwrap();
        for p in sil.points() {
            let mirrored = crate::geometry::wrap_angle(p.t + PI);
            assert!(sil
                .points()
                .iter()
                .any(|q| (q.rho - p.rho).abs() < 1e-6 && angular_gap(q.t, mirrored) < 1e-6));
        }
    }

    #[test]
    fn cad_point_at_box_center_maps_to_pole() {
        let b = OrientedBox3::new(Point3::new(7.0, -3.0, 0.5), BoxSize::new(2.0, 4.0, 1.5), 0.4).unwrap();
        let sil = build_silhouette(&[b.center], &b).unwrap();
        assert_eq!(sil.points()[0], PolarPlanePoint { rho: 0.0, t: 0.0 });
    }

    #[test]
    fn cad_point_at_sensor_is_an_error() {
        let b = OrientedBox3::new(Point3::new(7.0, 0.0, 0.0), BoxSize::new(2.0, 4.0, 1.5), 0.0).unwrap();
        assert!(matches!(
            build_silhouette(&[Point3::ORIGIN], &b),
            Err(Error::DegeneratePoint)
        ));
    }

    #[test]
    fn doubling_offsets_doubles_rho_at_small_angles() {
        let b = OrientedBox3::new(Point3::new(30.0, 4.0, -0.5), BoxSize::new(2.0, 4.0, 1.5), 0.7).unwrap();
        let offsets = [
            Point3::new(0.0, 0.6, 0.3),
            Point3::new(0.2, -0.8, 0.1),
            Point3::new(-0.4, 0.3, -0.5),
        ];
        let single: Vec<Point3> = offsets.iter().map(|o| b.center + *o).collect();
        let double: Vec<Point3> = offsets.iter().map(|o| b.center + *o * 2.0).collect();
        let s1 = build_silhouette(&single, &b).unwrap();
        let s2 = build_silhouette(&double, &b).unwrap();
        for (p, q) in s1.points().iter().zip(s2.points()) {
            assert!(q.rho < 0.1);
            assert!((q.rho / p.rho - 2.0).abs() < 0.04, "{} {}", p.rho, q.rho);
        }
    }

    #[test]
    fn empty_search_area_keeps_box() {
        let frame = Frame {
            detections: vec![Detection {
                bbox: OrientedBox3::new(Point3::new(10.0, 0.0, 0.0), BoxSize::new(1.8, 4.5, 1.5), 0.0)
                    .unwrap(),
                score: 0.9,
                class: "Car".into(),
            }],
            points: vec![Point3::new(5.0, 0.0, 0.0)],
            ..Frame::default()
        };
        let out = filter_detections(&frame, &CadModel::default_sedan(), 0.82).unwrap();
        assert_eq!(out.verdicts, vec![Verdict::Kept { search_area: 0 }]);
    }

    #[test]
    fn box_around_sensor_is_skipped_not_fatal() {
        let frame = Frame {
            detections: vec![Detection {
                bbox: OrientedBox3::new(Point3::ORIGIN, BoxSize::new(1.8, 4.5, 1.5), 0.0).unwrap(),
                score: 0.9,
                class: "Car".into(),
            }],
            points: vec![Point3::new(5.0, 0.0, 0.0)],
            ..Frame::default()
        };
        let out = filter_detections(&frame, &CadModel::default_sedan(), 0.82).unwrap();
        assert!(matches!(out.verdicts[0], Verdict::Skipped(_)));
        assert_eq!(out.kept_indices(), vec![0]);
    }

    #[test]
    fn point_straight_behind_removes_box() {
        let b = OrientedBox3::new(Point3::new(15.0, 2.0, -0.8), BoxSize::new(1.8, 4.5, 1.5), 1.0).unwrap();
        let behind = b.center * 2.0;
        let frame = Frame {
            detections: vec![Detection {
                bbox: b,
                score: 0.5,
                class: "Car".into(),
            }],
            points: vec![Point3::new(1.0, 1.0, 1.0), behind, behind * 1.1],
            ..Frame::default()
        };
        let opts = FilterOptions {
            diagnostics: true,
            ..FilterOptions::default()
        };
        let out = filter_detections_with(&frame, &CadModel::default_sedan(), &opts).unwrap();
        match &out.verdicts[0] {
            Verdict::Removed(p) => {
                assert_eq!(p.point_index, 1);
                assert_eq!(p.all_points, vec![1, 2]);
                assert!(p.polar.rho < 1e-12);
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    proptest! {
        #[test]
        fn nearest_angle_matches_linear_scan(
            raw in prop::collection::vec((0.0f64..1.0, -PI..PI), 1..80),
            dupes in prop::collection::vec(0usize..80, 0..10),
            queries in prop::collection::vec(-PI..PI, 1..50),
        ) {
            let mut pts: Vec<PolarPlanePoint> = raw.iter().map(|&(rho, t)| PolarPlanePoint { rho, t }).collect();
            for d in dupes {
                let t = pts[d % pts.len()].t;
                pts.push(PolarPlanePoint { rho: 0.5, t });
            }
            let sil = Silhouette::from_polar(PlanePoint::default(), pts).unwrap();
            for q in queries.iter().chain(sil.points().iter().map(|p| &p.t).take(5)) {
                prop_assert_eq!(sil.nearest_angle(*q), naive_nearest(&sil, *q));
            }
        }

        #[test]
        fn parallel_matches_sequential(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<Point3> = (0..2000)
                .map(|_| Point3::new(rng.gen_range(2.0..60.0), rng.gen_range(-30.0..30.0), rng.gen_range(-2.0..1.0)))
                .collect();
            let detections: Vec<Detection> = (0..12)
                .map(|_| Detection {
                    bbox: OrientedBox3::new(
                        Point3::new(rng.gen_range(5.0..40.0), rng.gen_range(-15.0..15.0), -0.9),
                        BoxSize::new(1.7, 4.2, 1.5),
                        rng.gen_range(-PI..PI),
                    ).unwrap(),
                    score: rng.gen(),
                    class: "Car".into(),
                })
                .collect();
            let frame = Frame { points, detections, ..Frame::default() };
            let cad = CadModel::default_sedan();
            let seq = filter_detections(&frame, &cad, 0.82).unwrap();
            let par = filter_detections_with(&frame, &cad, &FilterOptions { parallel: true, ..FilterOptions::default() }).unwrap();
            prop_assert_eq!(&seq, &par);
            // Filtering each detection alone yields the same verdict.
            for (i, d) in frame.detections.iter().enumerate() {
                let alone = Frame { detections: vec![d.clone()], points: frame.points.clone(), ..Frame::default() };
                let v = filter_detections(&alone, &cad, 0.82).unwrap();
                prop_assert_eq!(&v.verdicts[0], &seq.verdicts[i]);
            }
        }
    }
}
