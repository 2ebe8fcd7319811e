use std::f64::consts::PI;
use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ppc_core::cad::{
    align_cad, canonicalize, downsample, farthest_point_indices, load_cad, sedan, BoxSize, CadModel,
    OrientedBox3,
};
use ppc_core::geometry::Point3;
use ppc_core::Error;

fn min_pairwise(points: &[Point3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min(points[i].distance(&points[j]));
        }
    }
    best
}

#[test]
fn farthest_point_sampling_beats_random_subsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // Dense, roughly uniform sampling of the unit sphere.
    let sphere: Vec<Point3> = (0..4000)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let a: f64 = rng.gen_range(-PI..PI);
            let r = (1.0 - z * z).sqrt();
            Point3::new(r * a.cos(), r * a.sin(), z)
        })
        .collect();
    let picked: Vec<Point3> = farthest_point_indices(&sphere, 100)
        .into_iter()
        .map(|i| sphere[i])
        .collect();
    let fps = min_pairwise(&picked);
    for _ in 0..1000 {
        let subset: Vec<Point3> = sample(&mut rng, sphere.len(), 100)
            .into_iter()
            .map(|i| sphere[i])
            .collect();
        assert!(fps >= min_pairwise(&subset));
    }
}

#[test]
fn sedan_downsample_keeps_extents_within_five_percent() {
    let raw = canonicalize(sedan::surface_points(sedan::DEFAULT_SIZE, 2000, 0)).unwrap();
    let small = downsample(&raw, 500).unwrap();
    assert_eq!(small.len(), 500);
    let (a, b) = (raw.size(), small.size());
    for (x, y) in [(a.w, b.w), (a.l, b.l), (a.h, b.h)] {
        assert!((x - y).abs() <= 0.05 * x, "{x} vs {y}");
    }
    assert_eq!(small, downsample(&raw, 500).unwrap());
    assert_eq!(small, CadModel::default_sedan());
}

#[test]
fn load_cad_from_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# corners\n0 0 0\n1 0 0\n0 1 0\n\n0 0 1").unwrap();
    let pts = load_cad(f.path()).unwrap();
    assert_eq!(pts.len(), 4);
    assert_eq!(pts[3], Point3::new(0.0, 0.0, 1.0));

    let mut g = tempfile::NamedTempFile::new().unwrap();
    writeln!(g, "0 0 0\n1 2 3").unwrap();
    assert!(matches!(
        load_cad(g.path()),
        Err(Error::InsufficientModel { found: 2 })
    ));
    assert!(matches!(load_cad("/nonexistent/cad.txt"), Err(Error::Io { .. })));
}

#[test]
fn aligned_volume_scales_with_kappa_cubed() {
    let cad = CadModel::default_sedan();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let bbox = OrientedBox3::new(
            Point3::new(
                rng.gen_range(-30.0..30.0),
                rng.gen_range(-30.0..30.0),
                rng.gen_range(-2.0..1.0),
            ),
            BoxSize::new(
                rng.gen_range(1.4..2.2),
                rng.gen_range(3.0..5.5),
                rng.gen_range(1.2..2.0),
            ),
            rng.gen_range(-PI..PI),
        )
        .unwrap();
        let kappa = rng.gen_range(0.3..1.0);
        let local: Vec<Point3> = align_cad(&cad, &bbox, kappa)
            .unwrap()
            .into_iter()
            .map(|p| bbox.to_box_frame(p))
            .collect();
        let extent = |f: fn(&Point3) -> f64| {
            let (lo, hi) = local
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            hi - lo
        };
        let volume = extent(|p| p.x) * extent(|p| p.y) * extent(|p| p.z);
        let expected = kappa.powi(3) * bbox.size.volume();
        assert!(
            (volume - expected).abs() < 1e-8 * expected.max(1.0),
            "{volume} vs {expected}"
        );
    }
}
