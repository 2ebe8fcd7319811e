use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use ppc_core::cad::{CadModel, Detection, OrientedBox3};
use ppc_core::kitti::camera_to_lidar_box;
use ppc_core::ppc::{filter_detections_with, FilterOptions, Frame, Penetration, Verdict};
use ppc_core::Point3;

use crate::dataset::{write_atomic, LabelLine, ScanDirs, ScanFrame};
use crate::failure::Outcome;
use crate::{worker_pool, CadChoice};

/// Classes the classifier judges. Everything else passes through.
pub const VEHICLE_CLASSES: [&str; 1] = ["Car"];

#[derive(Debug)]
pub struct Removal {
    pub line: LabelLine,
    pub bbox: OrientedBox3,
    pub penetration: Penetration,
    pub evidence: Point3,
}

#[derive(Debug)]
pub struct FrameResult {
    pub id: String,
    pub kept: Vec<LabelLine>,
    pub removals: Vec<Removal>,
    pub judged: usize,
    pub skipped: Vec<(usize, String)>,
}

impl FrameResult {
    pub fn kept_text(&self) -> String {
        self.kept.iter().map(|l| format!("{}\n", l.text)).collect()
    }
}

pub fn filter_frame(frame: &ScanFrame, cad: &CadModel, options: &FilterOptions) -> Outcome<FrameResult> {
    let mut judged = Vec::new();
    let mut detections = Vec::new();
    for (k, line) in frame.predictions.iter().enumerate() {
        if VEHICLE_CLASSES.contains(&line.label.kind.as_str()) {
            detections.push(Detection {
                bbox: camera_to_lidar_box(&line.label, &frame.calib)?,
                score: line.label.score.unwrap_or(1.0),
                class: line.label.kind.clone(),
            });
            judged.push(k);
        }
    }
    let scan = Frame {
        id: frame.id.clone(),
        points: frame.points.clone(),
        detections,
        ground_truths: None,
    };
    let outcome = filter_detections_with(&scan, cad, options)?;
    let mut removed_lines = vec![false; frame.predictions.len()];
    let mut removals = Vec::new();
    let mut skipped = Vec::new();
    for (j, verdict) in outcome.verdicts.into_iter().enumerate() {
        let line = &frame.predictions[judged[j]];
        match verdict {
            Verdict::Removed(p) => {
                removed_lines[judged[j]] = true;
                removals.push(Removal {
                    line: line.clone(),
                    bbox: scan.detections[j].bbox,
                    evidence: frame.points[p.point_index],
                    penetration: p,
                });
            }
            Verdict::Skipped(reason) => skipped.push((line.line_no, reason)),
            Verdict::Kept { .. } => {}
        }
    }
    let kept = frame
        .predictions
        .iter()
        .zip(&removed_lines)
        .filter(|(_, removed)| !**removed)
        .map(|(l, _)| l.clone())
        .collect();
    Ok(FrameResult {
        id: frame.id.clone(),
        kept,
        removals,
        judged: judged.len(),
        skipped,
    })
}

pub const LOG_HEADER: &str =
    "frame\tline\tscore\tx\ty\tz\tw\tl\th\tyaw\tpoint\tpx\tpy\tpz\trho\tt\tcad_point\tpenetrated";

pub fn format_log(results: &[FrameResult]) -> String {
    let mut s = format!("{LOG_HEADER}\n");
    for r in results {
        for m in &r.removals {
            let b = &m.bbox;
            let p = &m.penetration;
            let count = if p.all_points.is_empty() {
                1
            } else {
                p.all_points.len()
            };
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.4}\t{}\t{:.3}\t{:.3}\t{:.3}\t{:.6}\t{:.6}\t{}\t{}",
                r.id,
                m.line.line_no,
                m.line.label.score.map_or_else(|| "-".to_string(), |v| v.to_string()),
                b.center.x,
                b.center.y,
                b.center.z,
                b.size.w,
                b.size.l,
                b.size.h,
                b.yaw,
                p.point_index,
                m.evidence.x,
                m.evidence.y,
                m.evidence.z,
                p.polar.rho,
                p.polar.t,
                p.cad_index,
                count,
            );
        }
    }
    s
}

pub struct FilterArgs {
    pub pred: PathBuf,
    pub velo: PathBuf,
    pub calib: PathBuf,
    pub cad: CadChoice,
    pub kappa: f64,
    pub workers: usize,
    pub diagnostics: bool,
    pub out: PathBuf,
}

/// Loads and filters every frame on a bounded pool. Results come back in
/// frame-id order whatever the worker count.
pub fn filter_all(
    dirs: &ScanDirs,
    cad: &CadModel,
    options: &FilterOptions,
    workers: usize,
) -> Outcome<Vec<FrameResult>> {
    let ids: Vec<String> = dirs.frame_ids()?.into_iter().collect();
    worker_pool(workers)?.install(|| {
        ids.par_iter()
            .map(|id| filter_frame(&dirs.load(id)?, cad, options))
            .collect()
    })
}

pub fn run(args: &FilterArgs) -> Outcome {
    let cad = args.cad.load()?;
    let options = FilterOptions {
        kappa: args.kappa,
        diagnostics: args.diagnostics,
        parallel: false,
    };
    let dirs = ScanDirs {
        pred: &args.pred,
        velo: &args.velo,
        calib: &args.calib,
    };
    let results = filter_all(&dirs, &cad, &options, args.workers)?;
    for r in &results {
        write_atomic(&args.out.join(format!("{}.txt", r.id)), r.kept_text().as_bytes())?;
        for (line, reason) in &r.skipped {
            eprintln!("warning: frame {} line {line}: kept unjudged: {reason}", r.id);
        }
        if args.diagnostics {
            for m in &r.removals {
                eprintln!(
                    "frame {} line {}: {} penetrated points, first #{} at rho {:.5} t {:.4}",
                    r.id,
                    m.line.line_no,
                    m.penetration.all_points.len(),
                    m.penetration.point_index,
                    m.penetration.polar.rho,
                    m.penetration.polar.t,
                );
            }
        }
    }
    write_atomic(&args.out.join("removal_log.tsv"), format_log(&results).as_bytes())?;

    let total: usize = results.iter().map(|r| r.kept.len() + r.removals.len()).sum();
    let judged: usize = results.iter().map(|r| r.judged).sum();
    let removed: usize = results.iter().map(|r| r.removals.len()).sum();
    let mut report = format!(
        "ppc filter  kappa={:.2}  cad={}  frames={}\n",
        args.kappa,
        args.cad.describe(&cad),
        results.len()
    );
    let _ = writeln!(
        report,
        "{:<10} {:>10} {:>8} {:>8}",
        "frame", "predicted", "judged", "removed"
    );
    for r in &results {
        let _ = writeln!(
            report,
            "{:<10} {:>10} {:>8} {:>8}",
            r.id,
            r.kept.len() + r.removals.len(),
            r.judged,
            r.removals.len()
        );
    }
    let share = if judged == 0 {
        0.0
    } else {
        removed as f64 / judged as f64 * 100.0
    };
    let _ = writeln!(
        report,
        "{:<10} {:>10} {:>8} {:>8}  ({share:.2}% of judged boxes removed)",
        "total", total, judged, removed
    );
    print!("{report}");
    Ok(())
}
