use std::collections::HashSet;

use ppc_core::cad::{align_cad, BoxSize, CadModel, OrientedBox3};
use ppc_core::geometry::Point3;
use ppc_core::ppc::{filter_detections, Frame, Verdict};
use ppc_core::synth::{make_fp_scenario, make_scenario, raycast, LidarGrid, ScenarioOptions};

fn frame(s: &ppc_core::synth::Scenario) -> Frame {
    Frame {
        id: s.seed.to_string(),
        points: s.cast.points.clone(),
        detections: s.detections.clone(),
        ground_truths: None,
    }
}

#[test]
fn returns_are_nearest_hits_one_per_ray() {
    for seed in 0..10 {
        let s = make_fp_scenario(seed).unwrap();
        let rays = s.grid.ray_count();
        assert!(s.cast.points.len() <= rays);
        let unique: HashSet<usize> = s.cast.rays.iter().copied().collect();
        assert_eq!(unique.len(), s.cast.rays.len());
        let dirs = s.grid.directions();
        for ((p, &ray), &id) in s
            .cast
            .points
            .iter()
            .zip(&s.cast.rays)
            .zip(&s.cast.hit_ids)
            .step_by(37)
        {
            let r = p.norm();
            assert!(r <= s.grid.max_range);
            for o in &s.scene.objects {
                if let Some(d) = o.ray_hit(Point3::ORIGIN, dirs[ray]) {
                    assert!(d >= r - 1e-9, "object {} in front of return from {id}", o.id);
                }
            }
        }
    }
}

#[test]
fn aligned_cad_lies_inside_the_car_it_boxes() {
    let cad = CadModel::default_sedan();
    for seed in 0..20 {
        let s = make_fp_scenario(seed).unwrap();
        for (id, bbox) in &s.ground_truth {
            let car = s.scene.objects.iter().find(|o| o.id == *id).unwrap();
            for p in align_cad(&cad, bbox, 0.82).unwrap() {
                assert!(car.contains(p, 1e-9));
            }
        }
    }
}

#[test]
fn one_car_one_spurious_box() {
    let opts = ScenarioOptions {
        cars: (1, 1),
        spurious: (1, 1),
        ..ScenarioOptions::default()
    };
    let cad = CadModel::default_sedan();
    for seed in 0..20 {
        let s = make_scenario(seed, &opts).unwrap();
        assert_eq!(s.detections.len(), 2);
        let out = filter_detections(&frame(&s), &cad, 0.82).unwrap();
        assert_eq!(out.removed_indices(), vec![1], "seed {seed}");
    }
}

#[test]
fn box_with_nothing_behind_it_is_kept() {
    let opts = ScenarioOptions {
        ground: false,
        backdrop: false,
        ..ScenarioOptions::default()
    };
    let cad = CadModel::default_sedan();
    for seed in 0..10 {
        let s = make_scenario(seed, &opts).unwrap();
        let out = filter_detections(&frame(&s), &cad, 0.82).unwrap();
        for (k, v) in out.verdicts.iter().enumerate().skip(s.ground_truth.len()) {
            assert_eq!(*v, Verdict::Kept { search_area: 0 }, "seed {seed} box {k}");
        }
    }
}

#[test]
fn a_detection_exactly_on_a_car_survives_any_kappa() {
    let mut scene = ppc_core::synth::Scene::default();
    let pose = OrientedBox3::new(Point3::new(12.0, 2.0, -0.98), BoxSize::new(1.8, 4.5, 1.5), 0.7).unwrap();
    scene.add_car(pose.center, pose.size, pose.yaw).unwrap();
    scene
        .add(ppc_core::synth::Primitive::Box(
            OrientedBox3::new(Point3::new(25.0, 4.0, 0.0), BoxSize::new(0.3, 20.0, 6.0), 1.7).unwrap(),
        ))
        .unwrap();
    let grid = LidarGrid {
        az_min: -0.5,
        az_max: 0.8,
        ..LidarGrid::default()
    };
    let cast = raycast(&scene, &grid);
    let cad = CadModel::default_sedan();
    let f = Frame {
        id: String::new(),
        points: cast.points,
        detections: vec![ppc_core::cad::Detection {
            bbox: pose,
            score: 0.9,
            class: "Car".into(),
        }],
        ground_truths: None,
    };
    for kappa in [0.5, 0.7, 0.82, 0.9, 0.95] {
        assert_eq!(
            filter_detections(&f, &cad, kappa).unwrap().removed_count(),
            0,
            "kappa {kappa}"
        );
    }
}
