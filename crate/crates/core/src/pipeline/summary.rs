use std::fmt::Write;

use crate::persistence::{RunReport, SplitMetrics, SweepReport};

fn metrics_row(out: &mut String, label: &str, m: Option<&SplitMetrics>) {
    match m {
        Some(m) => writeln!(
            out,
            "{label:<22} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            m.train.mse, m.train.mae, m.val.mse, m.val.mae, m.test.mse, m.test.mae
        ),
        None => writeln!(out, "{label:<22} {:>10}", "failed"),
    }
    .expect("writing to a String");
}

/// Plain-text table of model × split × metric.
pub fn format_run_summary(report: &RunReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<22} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "model", "train MSE", "train MAE", "val MSE", "val MAE", "test MSE", "test MAE"
    )
    .expect("writing to a String");
    for entry in &report.models {
        metrics_row(&mut out, &entry.name, entry.metrics.as_ref());
        if let Some(e) = &entry.ensemble {
            for (i, m) in e.members.iter().enumerate() {
                metrics_row(&mut out, &format!("  {} member {}", e.method, i + 1), Some(&m.metrics));
            }
            metrics_row(&mut out, "  mean", Some(&e.combined));
            if let Some(s) = &e.stacked {
                metrics_row(&mut out, "  stacked", Some(&s.metrics));
            }
        }
    }
    out
}

/// Plain-text table of proportion × split MSE.
pub fn format_sweep_summary(report: &SweepReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<12} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "proportion", "discarded", "kept", "train MSE", "val MSE", "test MSE"
    )
    .expect("writing to a String");
    for row in &report.rows {
        let label = format!("{:.0}%", row.proportion * 100.0);
        match &row.metrics {
            Some(m) => writeln!(
                out,
                "{label:<12} {:>10} {:>10} {:>10.5} {:>10.5} {:>10.5}",
                row.filter.discarded_count, row.filter.kept, m.train.mse, m.val.mse, m.test.mse
            ),
            None => writeln!(out, "{label:<12} {:>10} {:>10} {:>10}", row.filter.discarded_count, row.filter.kept, "failed"),
        }
        .expect("writing to a String");
    }
    out
}
