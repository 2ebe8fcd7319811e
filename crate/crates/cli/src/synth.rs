use std::path::PathBuf;

use ppc_core::kitti::CalibrationSet;
use ppc_core::synth::{make_fp_scenario, parse_scene, raycast, write_frame};

use crate::failure::{Failure, Outcome};

pub struct SynthArgs {
    pub scene: Option<PathBuf>,
    pub seed: u64,
    pub frames: usize,
    pub out: PathBuf,
}

/// Writes KITTI-layout frames under `out`. A scene file gives one frame
/// named after the seed; otherwise `frames` random scenarios are drawn
/// from consecutive seeds.
pub fn run(args: &SynthArgs) -> Outcome {
    let calib = CalibrationSet::nominal();
    let mut written = Vec::new();
    if let Some(path) = &args.scene {
        let file = parse_scene(path)?;
        let cast = raycast(&file.scene, &file.grid);
        let id = format!("{:06}", args.seed);
        write_frame(
            &args.out,
            &id,
            &cast.points,
            &file.ground_truth,
            &file.detections,
            &calib,
        )?;
        written.push((
            id,
            cast.points.len(),
            file.ground_truth.len(),
            file.detections.len(),
        ));
    } else {
        if args.frames == 0 {
            return Err(Failure::usage("--frames must be at least 1"));
        }
        for k in 0..args.frames as u64 {
            let seed = args.seed + k;
            let s = make_fp_scenario(seed)?;
            let id = format!("{seed:06}");
            let gts: Vec<_> = s.ground_truth.iter().map(|(_, b)| *b).collect();
            write_frame(&args.out, &id, &s.cast.points, &gts, &s.detections, &calib)?;
            written.push((id, s.cast.points.len(), gts.len(), s.detections.len()));
        }
    }
    println!("ppc synth  out={}  frames={}", args.out.display(), written.len());
    println!(
        "{:<10} {:>8} {:>6} {:>11}",
        "frame", "points", "cars", "detections"
    );
    for (id, points, cars, dets) in written {
        println!("{id:<10} {points:>8} {cars:>6} {dets:>11}");
    }
    Ok(())
}
