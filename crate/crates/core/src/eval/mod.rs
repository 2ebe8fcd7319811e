//! KITTI-style detection evaluation at 40 recall positions.
//!
//! Predictions are matched greedily in descending score order against the
//! ground truths of the evaluated difficulty. Precision at recall sample
//! `k/40` is the maximum precision reached at any recall of at least `k/40`;
//! AP is the mean over the 40 samples with unreachable samples counting as
//! zero. HR-Precision is the interpolated precision at the highest sample
//! the detector reaches.

mod iou;
mod report;

use std::cmp::Ordering;

use rayon::prelude::*;

pub use iou::{bev_intersection, clip_convex, footprint, iou_3d, iou_bev, polygon_area};
pub use report::{format_curve_csv, format_decrement, format_report_table};

use crate::cad::OrientedBox3;
use crate::error::{Error, Result};
use crate::kitti::{assign_difficulty, camera_to_lidar_box, CalibrationSet, Difficulty, KittiLabel};

pub const RECALL_POSITIONS: usize = 40;
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.7;
/// Fraction of a prediction's 2D box inside a DontCare region that mutes it.
const DONT_CARE_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    ThreeD,
    Bev,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::ThreeD => "3d",
            Metric::Bev => "bev",
        }
    }

    pub fn iou(&self, a: &OrientedBox3, b: &OrientedBox3) -> f64 {
        match self {
            Metric::ThreeD => iou_3d(a, b),
            Metric::Bev => iou_bev(a, b),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "3d" => Ok(Metric::ThreeD),
            "bev" => Ok(Metric::Bev),
            _ => Err(Error::InvalidArgument(format!("unknown metric {s:?}"))),
        }
    }
}

/// An annotated object. DontCare regions carry only a 2D box.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub class: String,
    pub bbox: Option<OrientedBox3>,
    pub bbox2d: [f64; 4],
    pub difficulty: Difficulty,
}

impl GroundTruth {
    /// Boxes are placed with the nominal axis permutation, so BEV is the
    /// camera x-z ground plane exactly as the devkit measures it.
    pub fn from_label(label: &KittiLabel) -> Result<Self> {
        let bbox = if label.is_dont_care() {
            None
        } else {
            Some(camera_to_lidar_box(label, &CalibrationSet::nominal())?)
        };
        Ok(GroundTruth {
            class: label.kind.clone(),
            bbox,
            bbox2d: label.bbox,
            difficulty: assign_difficulty(label),
        })
    }
}

/// A prediction as seen by the evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredBox {
    pub bbox: OrientedBox3,
    pub score: f64,
    pub bbox2d: Option<[f64; 4]>,
}

impl ScoredBox {
    pub fn from_label(label: &KittiLabel) -> Result<Self> {
        Ok(ScoredBox {
            bbox: camera_to_lidar_box(label, &CalibrationSet::nominal())?,
            score: label.score.unwrap_or(1.0),
            bbox2d: Some(label.bbox),
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalFrame {
    pub id: String,
    pub predictions: Vec<ScoredBox>,
    pub ground_truths: Vec<GroundTruth>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchFlag {
    TruePositive,
    FalsePositive,
    /// Matched an ignored object or a DontCare region; counts as neither.
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GtRole {
    Valid,
    Ignored,
    Unrelated,
}

fn gt_role(gt: &GroundTruth, difficulty: Difficulty) -> GtRole {
    match gt.class.as_str() {
        "Car" if gt.difficulty != Difficulty::Ignored && gt.difficulty <= difficulty => GtRole::Valid,
        "Car" | "Van" | "DontCare" => GtRole::Ignored,
        _ => GtRole::Unrelated,
    }
}

/// Number of ground truths that count toward recall at `difficulty`.
pub fn valid_gt_count(gts: &[GroundTruth], difficulty: Difficulty) -> usize {
    gts.iter()
        .filter(|g| gt_role(g, difficulty) == GtRole::Valid)
        .count()
}

fn overlap_fraction(det: &[f64; 4], region: &[f64; 4]) -> f64 {
    let w = det[2].min(region[2]) - det[0].max(region[0]);
    let h = det[3].min(region[3]) - det[1].max(region[1]);
    let area = (det[2] - det[0]) * (det[3] - det[1]);
    if w <= 0.0 || h <= 0.0 || area <= 0.0 {
        0.0
    } else {
        w * h / area
    }
}

fn by_score_desc(preds: &[ScoredBox]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .score
            .partial_cmp(&preds[a].score)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Flags each prediction (in input order) as TP, FP, or ignored.
pub fn match_frame(
    preds: &[ScoredBox],
    gts: &[GroundTruth],
    difficulty: Difficulty,
    threshold: f64,
    metric: Metric,
) -> Vec<MatchFlag> {
    let roles: Vec<GtRole> = gts.iter().map(|g| gt_role(g, difficulty)).collect();
    let mut taken = vec![false; gts.len()];
    let mut flags = vec![MatchFlag::FalsePositive; preds.len()];
    for i in by_score_desc(preds) {
        let pred = &preds[i];
        let mut best: [Option<(f64, usize)>; 2] = [None, None];
        for (j, gt) in gts.iter().enumerate() {
            let slot = match roles[j] {
                GtRole::Valid => 0,
                GtRole::Ignored => 1,
                GtRole::Unrelated => continue,
            };
            let Some(gt_box) = gt.bbox.as_ref() else {
                continue;
            };
            if taken[j] {
                continue;
            }
            let iou = metric.iou(&pred.bbox, gt_box);
            if iou >= threshold && best[slot].is_none_or(|(b, _)| iou > b) {
                best[slot] = Some((iou, j));
            }
        }
        flags[i] = if let Some((_, j)) = best[0] {
            taken[j] = true;
            MatchFlag::TruePositive
        } else if let Some((_, j)) = best[1] {
            taken[j] = true;
            MatchFlag::Ignored
        } else if pred.bbox2d.is_some_and(|d| {
            gts.iter()
                .any(|g| g.class == "DontCare" && overlap_fraction(&d, &g.bbox2d) > DONT_CARE_OVERLAP)
        }) {
            MatchFlag::Ignored
        } else {
            MatchFlag::FalsePositive
        };
    }
    flags
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecallSample {
    pub recall: f64,
    /// Right-interpolated precision, `None` when the recall is never reached.
    pub precision: Option<f64>,
    /// Cumulative TP and FP at the loosest score threshold that first
    /// reaches this recall; zero when unreachable.
    pub tp: usize,
    pub fp: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub samples: Vec<RecallSample>,
    pub max_recall: f64,
    pub gt_count: usize,
}

impl PrCurve {
    pub fn highest_reachable(&self) -> Option<&RecallSample> {
        self.samples.iter().rev().find(|s| s.precision.is_some())
    }
}

/// Builds the 40-position curve and AP (percent) from scored match flags
/// pooled across frames.
pub fn pr_and_ap(flags: &[(f64, MatchFlag)], gt_count: usize) -> Result<(PrCurve, f64)> {
    if gt_count == 0 {
        return Err(Error::UndefinedRecall);
    }
    let mut scored: Vec<(f64, bool)> = flags
        .iter()
        .filter(|(_, f)| *f != MatchFlag::Ignored)
        .map(|&(s, f)| (s, f == MatchFlag::TruePositive))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));

    // One cut point per distinct score.
    let mut cuts: Vec<(usize, usize)> = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (k, &(score, is_tp)) in scored.iter().enumerate() {
        if is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        if scored.get(k + 1).is_none_or(|next| next.0 != score) {
            cuts.push((tp, fp));
        }
    }

    let mut samples = Vec::with_capacity(RECALL_POSITIONS);
    for k in 1..=RECALL_POSITIONS {
        let reaches = |tp: usize| tp * RECALL_POSITIONS >= k * gt_count;
        let first = cuts.iter().find(|(tp, _)| reaches(*tp));
        let precision = cuts
            .iter()
            .filter(|(tp, _)| reaches(*tp))
            .map(|&(tp, fp)| tp as f64 / (tp + fp) as f64)
            .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))));
        let (tp, fp) = first.copied().unwrap_or((0, 0));
        samples.push(RecallSample {
            recall: k as f64 / RECALL_POSITIONS as f64,
            precision,
            tp,
            fp,
        });
    }
    let ap =
        samples.iter().map(|s| s.precision.unwrap_or(0.0)).sum::<f64>() / RECALL_POSITIONS as f64 * 100.0;
    let max_recall = cuts.last().map_or(0.0, |&(tp, _)| tp as f64 / gt_count as f64);
    Ok((
        PrCurve {
            samples,
            max_recall,
            gt_count,
        },
        ap,
    ))
}

/// Interpolated precision (percent) at the highest reachable recall sample.
pub fn hr_precision(curve: &PrCurve) -> Result<f64> {
    curve
        .highest_reachable()
        .and_then(|s| s.precision)
        .map(|p| p * 100.0)
        .ok_or_else(|| Error::InvalidArgument("no reachable recall sample".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metric: Metric,
    pub difficulty: Difficulty,
    pub iou_threshold: f64,
    pub ap: f64,
    pub hr_precision: Option<f64>,
    pub curve: PrCurve,
    pub frame_ids: Vec<String>,
}

impl EvalReport {
    pub fn fp_sum(&self) -> usize {
        self.curve.samples.iter().map(|s| s.fp).sum()
    }

    pub fn tp_sum(&self) -> usize {
        self.curve.samples.iter().map(|s| s.tp).sum()
    }

    /// Recall of the highest reachable sample, 0 when none is reached.
    pub fn hr_recall(&self) -> f64 {
        self.curve.highest_reachable().map_or(0.0, |s| s.recall)
    }
}

/// Matches every frame (in parallel) and reduces into one report.
pub fn evaluate(
    frames: &[EvalFrame],
    difficulty: Difficulty,
    metric: Metric,
    threshold: f64,
) -> Result<EvalReport> {
    let per_frame: Vec<Vec<(f64, MatchFlag)>> = frames
        .par_iter()
        .map(|f| {
            let flags = match_frame(&f.predictions, &f.ground_truths, difficulty, threshold, metric);
            f.predictions.iter().map(|p| p.score).zip(flags).collect()
        })
        .collect();
    let flags: Vec<(f64, MatchFlag)> = per_frame.into_iter().flatten().collect();
    let gt_count: usize = frames
        .iter()
        .map(|f| valid_gt_count(&f.ground_truths, difficulty))
        .sum();
    let (curve, ap) = pr_and_ap(&flags, gt_count)?;
    let hr = hr_precision(&curve).ok();
    Ok(EvalReport {
        metric,
        difficulty,
        iou_threshold: threshold,
        ap,
        hr_precision: hr,
        curve,
        frame_ids: frames.iter().map(|f| f.id.clone()).collect(),
    })
}

/// Change in FP and TP totals (summed over the 40 recall positions)
/// between a baseline and a filtered run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decrement {
    pub fp_before: usize,
    pub fp_after: usize,
    pub tp_before: usize,
    pub tp_after: usize,
    pub fp_change_pct: f64,
    pub tp_change_pct: f64,
}

pub fn percent_change(before: usize, after: usize) -> f64 {
    if before == 0 {
        return 0.0;
    }
    (after as f64 - before as f64) / before as f64 * 100.0
}

pub fn fp_tp_sums(before: &EvalReport, after: &EvalReport) -> Result<Decrement> {
    if before.frame_ids != after.frame_ids {
        return Err(Error::InvalidComparison(
            "reports cover different frame sets".into(),
        ));
    }
    if before.curve.gt_count != after.curve.gt_count
        || before.difficulty != after.difficulty
        || before.metric != after.metric
    {
        return Err(Error::InvalidComparison(
            "reports use different ground truths or settings".into(),
        ));
    }
    let (fb, fa, tb, ta) = (before.fp_sum(), after.fp_sum(), before.tp_sum(), after.tp_sum());
    Ok(Decrement {
        fp_before: fb,
        fp_after: fa,
        tp_before: tb,
        tp_after: ta,
        fp_change_pct: percent_change(fb, fa),
        tp_change_pct: percent_change(tb, ta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cad::BoxSize;
    use crate::geometry::Point3;

    fn car(x: f64, difficulty: Difficulty) -> GroundTruth {
        GroundTruth {
            class: "Car".into(),
            bbox: Some(
                OrientedBox3::new(Point3::new(x, 0.0, 0.0), BoxSize::new(1.0, 1.0, 1.0), 0.0).unwrap(),
            ),
            bbox2d: [0.0, 0.0, 10.0, 50.0],
            difficulty,
        }
    }

    /// A unit cube shifted along x so its 3D IoU with `car(0)` equals `iou`.
    fn pred_with_iou(iou: f64, score: f64) -> ScoredBox {
        // Overlap 1-d over union 1+d: d = (1-iou)/(1+iou).
        let d = (1.0 - iou) / (1.0 + iou);
        ScoredBox {
            bbox: OrientedBox3::new(Point3::new(d, 0.0, 0.0), BoxSize::new(1.0, 1.0, 1.0), 0.0).unwrap(),
            score,
            bbox2d: None,
        }
    }

    #[test]
    fn threshold_boundary() {
        let gts = [car(0.0, Difficulty::Easy)];
        let tp = match_frame(
            &[pred_with_iou(0.71, 0.9)],
            &gts,
            Difficulty::Moderate,
            0.7,
            Metric::ThreeD,
        );
        assert_eq!(tp, vec![MatchFlag::TruePositive]);
        let fp = match_frame(
            &[pred_with_iou(0.69, 0.9)],
            &gts,
            Difficulty::Moderate,
            0.7,
            Metric::ThreeD,
        );
        assert_eq!(fp, vec![MatchFlag::FalsePositive]);
    }

    #[test]
    fn higher_score_wins_the_match() {
        let gts = [car(0.0, Difficulty::Easy)];
        let preds = [pred_with_iou(0.95, 0.3), pred_with_iou(0.75, 0.8)];
        let flags = match_frame(&preds, &gts, Difficulty::Hard, 0.7, Metric::ThreeD);
        assert_eq!(flags, vec![MatchFlag::FalsePositive, MatchFlag::TruePositive]);
    }

    #[test]
    fn harder_objects_are_ignored_at_easier_levels() {
        let gts = [car(0.0, Difficulty::Hard)];
        let preds = [pred_with_iou(0.9, 0.9)];
        assert_eq!(
            match_frame(&preds, &gts, Difficulty::Moderate, 0.7, Metric::ThreeD),
            vec![MatchFlag::Ignored]
        );
        assert_eq!(
            match_frame(&preds, &gts, Difficulty::Hard, 0.7, Metric::ThreeD),
            vec![MatchFlag::TruePositive]
        );
        assert_eq!(valid_gt_count(&gts, Difficulty::Moderate), 0);
    }

    #[test]
    fn dont_care_region_mutes_detection() {
        let gts = [GroundTruth {
            class: "DontCare".into(),
            bbox: None,
            bbox2d: [100.0, 100.0, 200.0, 200.0],
            difficulty: Difficulty::Ignored,
        }];
        let mut p = pred_with_iou(0.9, 0.5);
        p.bbox2d = Some([110.0, 110.0, 190.0, 190.0]);
        assert_eq!(
            match_frame(&[p.clone()], &gts, Difficulty::Hard, 0.7, Metric::Bev),
            vec![MatchFlag::Ignored]
        );
        p.bbox2d = Some([300.0, 110.0, 390.0, 190.0]);
        assert_eq!(
            match_frame(&[p], &gts, Difficulty::Hard, 0.7, Metric::Bev),
            vec![MatchFlag::FalsePositive]
        );
    }

    #[test]
    fn perfect_and_empty_detectors() {
        let flags: Vec<(f64, MatchFlag)> = (0..7).map(|i| (i as f64, MatchFlag::TruePositive)).collect();
        let (curve, ap) = pr_and_ap(&flags, 7).unwrap();
        assert!((ap - 100.0).abs() < 1e-12);
        assert_eq!(hr_precision(&curve).unwrap(), 100.0);
        assert_eq!(curve.highest_reachable().unwrap().recall, 1.0);

        let (curve, ap) = pr_and_ap(&[], 5).unwrap();
        assert_eq!(ap, 0.0);
        assert!(hr_precision(&curve).is_err());
        assert!(matches!(pr_and_ap(&[], 0), Err(Error::UndefinedRecall)));
    }

    #[test]
    fn table_three_percentage() {
        assert!((percent_change(18_610, 14_973) - -19.54).abs() < 0.005);
        assert!((percent_change(123_870, 123_828) - -0.03).abs() < 0.005);
        assert_eq!(percent_change(10, 10), 0.0);
    }

    #[test]
    fn mismatched_frames_cannot_be_compared() {
        let frame = |id: &str| EvalFrame {
            id: id.into(),
            predictions: vec![pred_with_iou(0.9, 0.9)],
            ground_truths: vec![car(0.0, Difficulty::Easy)],
        };
        let a = evaluate(&[frame("000001")], Difficulty::Moderate, Metric::ThreeD, 0.7).unwrap();
        let b = evaluate(&[frame("000002")], Difficulty::Moderate, Metric::ThreeD, 0.7).unwrap();
        assert!(matches!(fp_tp_sums(&a, &b), Err(Error::InvalidComparison(_))));
        let d = fp_tp_sums(&a, &a).unwrap();
        assert_eq!((d.fp_change_pct, d.tp_change_pct), (0.0, 0.0));
    }
}
