use std::fmt::Write as _;

use super::{Decrement, EvalReport, PrCurve};

/// One row per recall position: `recall,precision,cum_tp,cum_fp`.
/// Unreachable positions leave the precision empty.
pub fn format_curve_csv(curve: &PrCurve) -> String {
    let mut s = String::from("recall,precision,cum_tp,cum_fp\n");
    for sample in &curve.samples {
        let precision = sample.precision.map(|p| format!("{p:.6}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{:.3},{},{},{}",
            sample.recall, precision, sample.tp, sample.fp
        );
    }
    s
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

/// Aligned plain-text summary of several reports, one row each.
pub fn format_report_table(rows: &[(&str, &EvalReport)]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:<6} {:<9} {:>8} {:>8} {:>9} {:>9} {:>9}",
        "run", "metric", "level", "AP", "HR-Prec", "HR-recall", "FP-sum", "TP-sum"
    );
    for (name, r) in rows {
        let _ = writeln!(
            s,
            "{:<12} {:<6} {:<9} {:>8.2} {:>8} {:>9.3} {:>9} {:>9}",
            name,
            r.metric.name(),
            r.difficulty.name(),
            r.ap,
            pct(r.hr_precision),
            r.hr_recall(),
            r.fp_sum(),
            r.tp_sum(),
        );
    }
    s
}

pub fn format_decrement(label: &str, d: &Decrement) -> String {
    format!(
        "{label}: FP {} -> {} ({:+.2}%), TP {} -> {} ({:+.2}%)\n",
        d.fp_before, d.fp_after, d.fp_change_pct, d.tp_before, d.tp_after, d.tp_change_pct
    )
}
