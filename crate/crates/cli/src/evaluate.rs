use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ppc_core::eval::{
    evaluate, format_curve_csv, format_decrement, format_report_table, fp_tp_sums, EvalFrame, EvalReport,
    GroundTruth, Metric, ScoredBox, DEFAULT_IOU_THRESHOLD, RECALL_POSITIONS,
};
use ppc_core::kitti::Difficulty;

use crate::dataset::{ids_in, read_label_lines, require_ids, LabelLine};
use crate::failure::{Failure, Outcome};
use crate::filter::VEHICLE_CLASSES;

pub fn ground_truths(lines: &[LabelLine]) -> Outcome<Vec<GroundTruth>> {
    Ok(lines
        .iter()
        .map(|l| GroundTruth::from_label(&l.label))
        .collect::<Result<_, _>>()?)
}

pub fn scored_boxes<'a>(lines: impl IntoIterator<Item = &'a LabelLine>) -> Outcome<Vec<ScoredBox>> {
    Ok(lines
        .into_iter()
        .filter(|l| VEHICLE_CLASSES.contains(&l.label.kind.as_str()))
        .map(|l| ScoredBox::from_label(&l.label))
        .collect::<Result<_, _>>()?)
}

/// Ground truth per frame id for every label file in `dir`.
pub fn load_ground_truth(dir: &Path) -> Outcome<BTreeMap<String, Vec<GroundTruth>>> {
    ids_in(dir, "txt")?
        .into_iter()
        .map(|id| {
            let gts = ground_truths(&read_label_lines(&dir.join(format!("{id}.txt")))?)?;
            Ok((id, gts))
        })
        .collect()
}

/// Pairs predictions with ground truth. Every prediction file needs a
/// label file; label frames without predictions count as empty.
pub fn load_eval_frames(
    gts: &BTreeMap<String, Vec<GroundTruth>>,
    pred_dir: &Path,
) -> Outcome<Vec<EvalFrame>> {
    let pred_ids = ids_in(pred_dir, "txt")?;
    let label_ids = gts.keys().cloned().collect();
    require_ids(&pred_ids, &label_ids, "label")?;
    gts.iter()
        .map(|(id, g)| {
            let predictions = if pred_ids.contains(id) {
                scored_boxes(&read_label_lines(&pred_dir.join(format!("{id}.txt")))?)?
            } else {
                Vec::new()
            };
            Ok(EvalFrame {
                id: id.clone(),
                predictions,
                ground_truths: g.clone(),
            })
        })
        .collect()
}

pub fn evaluate_or_explain(
    frames: &[EvalFrame],
    difficulty: Difficulty,
    metric: Metric,
) -> Outcome<EvalReport> {
    evaluate(frames, difficulty, metric, DEFAULT_IOU_THRESHOLD).map_err(|e| match Failure::from(e) {
        Failure::NoGroundTruth(_) => Failure::NoGroundTruth(format!(
            "no Car ground truth at {} difficulty in {} frames",
            difficulty.name(),
            frames.len()
        )),
        other => other,
    })
}

pub struct EvalArgs {
    pub label: PathBuf,
    pub pred: PathBuf,
    pub compare: Option<PathBuf>,
    pub difficulties: Vec<Difficulty>,
    pub metrics: Vec<Metric>,
    pub out: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> Outcome {
    let gts = load_ground_truth(&args.label)?;
    let mut runs = vec![("baseline", load_eval_frames(&gts, &args.pred)?)];
    if let Some(dir) = &args.compare {
        runs.push(("filtered", load_eval_frames(&gts, dir)?));
    }

    let mut report = format!(
        "ppc eval  iou_threshold={DEFAULT_IOU_THRESHOLD:.2}  recall_positions={RECALL_POSITIONS}  frames={}\n",
        gts.len()
    );
    let mut decrements = String::new();
    let mut rows: Vec<(String, EvalReport)> = Vec::new();
    for &metric in &args.metrics {
        for &difficulty in &args.difficulties {
            let reports: Vec<EvalReport> = runs
                .iter()
                .map(|(_, frames)| evaluate_or_explain(frames, difficulty, metric))
                .collect::<Outcome<_>>()?;
            if let [before, after] = reports.as_slice() {
                let d = fp_tp_sums(before, after)?;
                let label = format!("{} {}", metric.name(), difficulty.name());
                decrements.push_str(&format_decrement(&label, &d));
            }
            for ((name, _), r) in runs.iter().zip(reports) {
                rows.push((name.to_string(), r));
            }
        }
    }
    let table: Vec<(&str, &EvalReport)> = rows.iter().map(|(n, r)| (n.as_str(), r)).collect();
    report.push_str(&format_report_table(&table));
    if !decrements.is_empty() {
        let _ = writeln!(report, "\nFP/TP sums over {RECALL_POSITIONS} recall positions");
        report.push_str(&decrements);
    }

    if let Some(out) = &args.out {
        for (name, r) in &rows {
            let file = format!("{name}_{}_{}.csv", r.metric.name(), r.difficulty.name());
            crate::dataset::write_atomic(&out.join(file), format_curve_csv(&r.curve).as_bytes())?;
        }
        crate::dataset::write_atomic(&out.join("report.txt"), report.as_bytes())?;
    }
    print!("{report}");
    Ok(())
}
