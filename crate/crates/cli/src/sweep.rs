use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use ppc_core::eval::{EvalFrame, EvalReport, Metric};
use ppc_core::kitti::Difficulty;
use ppc_core::ppc::FilterOptions;

use crate::dataset::{require_ids, write_atomic, ScanDirs, ScanFrame};
use crate::evaluate::{evaluate_or_explain, load_ground_truth, scored_boxes};
use crate::failure::{Failure, Outcome};
use crate::filter::filter_frame;
use crate::{worker_pool, CadChoice};

pub struct SweepArgs {
    pub pred: PathBuf,
    pub label: PathBuf,
    pub velo: PathBuf,
    pub calib: PathBuf,
    pub cad: CadChoice,
    pub kappas: Vec<f64>,
    pub difficulty: Difficulty,
    pub metric: Metric,
    pub workers: usize,
    pub out: Option<PathBuf>,
}

/// Sorted distinct values. Duplicates are dropped with a warning; fewer
/// than two distinct values is a usage error.
pub fn distinct_kappas(raw: &[f64]) -> Outcome<Vec<f64>> {
    if let Some(bad) = raw.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
        return Err(Failure::usage(format!("kappa must be positive, got {bad}")));
    }
    let mut ks = raw.to_vec();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    if ks.len() < raw.len() {
        eprintln!("warning: dropped {} duplicate kappa values", raw.len() - ks.len());
    }
    if ks.len() < 2 {
        return Err(Failure::usage("a sweep needs at least two distinct kappa values"));
    }
    Ok(ks)
}

struct Row {
    name: String,
    report: EvalReport,
    removed: usize,
}

pub fn run(args: &SweepArgs) -> Outcome {
    let kappas = distinct_kappas(&args.kappas)?;
    let cad = args.cad.load()?;
    let gts = load_ground_truth(&args.label)?;
    let dirs = ScanDirs {
        pred: &args.pred,
        velo: &args.velo,
        calib: &args.calib,
    };
    let ids = dirs.frame_ids()?;
    require_ids(&ids, &gts.keys().cloned().collect(), "label")?;
    let pool = worker_pool(args.workers)?;
    let scans: Vec<ScanFrame> =
        pool.install(|| ids.par_iter().map(|id| dirs.load(id)).collect::<Outcome<_>>())?;

    // Frames with labels but no predictions still contribute ground truth.
    let eval_frames = |kept: &[(String, Vec<ppc_core::eval::ScoredBox>)]| -> Vec<EvalFrame> {
        gts.iter()
            .map(|(id, g)| EvalFrame {
                id: id.clone(),
                predictions: kept
                    .iter()
                    .find(|(k, _)| k == id)
                    .map(|(_, p)| p.clone())
                    .unwrap_or_default(),
                ground_truths: g.clone(),
            })
            .collect()
    };

    let baseline: Vec<_> = scans
        .iter()
        .map(|s| Ok((s.id.clone(), scored_boxes(&s.predictions)?)))
        .collect::<Outcome<_>>()?;
    let mut rows = vec![Row {
        name: "baseline".into(),
        report: evaluate_or_explain(&eval_frames(&baseline), args.difficulty, args.metric)?,
        removed: 0,
    }];
    for &kappa in &kappas {
        let options = FilterOptions {
            kappa,
            ..FilterOptions::default()
        };
        let results = pool.install(|| {
            scans
                .par_iter()
                .map(|s| filter_frame(s, &cad, &options))
                .collect::<Outcome<Vec<_>>>()
        })?;
        let kept: Vec<_> = results
            .iter()
            .map(|r| Ok((r.id.clone(), scored_boxes(&r.kept)?)))
            .collect::<Outcome<_>>()?;
        rows.push(Row {
            name: format!("{kappa:.2}"),
            report: evaluate_or_explain(&eval_frames(&kept), args.difficulty, args.metric)?,
            removed: results.iter().map(|r| r.removals.len()).sum(),
        });
    }

    let mut table = format!(
        "ppc sweep  metric={}  difficulty={}  cad={}  frames={}\n",
        args.metric.name(),
        args.difficulty.name(),
        args.cad.describe(&cad),
        scans.len()
    );
    let _ = writeln!(
        table,
        "{:<10} {:>8} {:>13} {:>11} {:>8}",
        "kappa", "AP", "HR-Precision", "max recall", "removed"
    );
    for r in &rows {
        let _ = writeln!(
            table,
            "{:<10} {:>8.2} {:>13} {:>11.4} {:>8}",
            r.name,
            r.report.ap,
            r.report
                .hr_precision
                .map_or_else(|| "-".to_string(), |v| format!("{v:.2}")),
            r.report.curve.max_recall,
            r.removed
        );
    }
    print!("{table}");

    if let Some(out) = &args.out {
        let mut dat = String::from("# kappa hr_precision\n");
        for (k, r) in kappas.iter().zip(&rows[1..]) {
            // An unreachable curve has no precision to plot; 0 keeps the column numeric.
            let _ = writeln!(dat, "{k} {:.6}", r.report.hr_precision.unwrap_or(0.0));
        }
        write_atomic(&out.join("sweep.dat"), dat.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappas_are_sorted_and_deduplicated() {
        assert_eq!(distinct_kappas(&[0.9, 0.5, 0.9]).unwrap(), vec![0.5, 0.9]);
        assert!(distinct_kappas(&[0.8, 0.8]).is_err());
        assert!(distinct_kappas(&[0.8, -1.0]).is_err());
    }
}
