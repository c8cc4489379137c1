use std::fmt::Write as _;
use std::io::Write;

use super::{CalibrationRow, MetricsReport, SweepRow};

pub const METRICS_HEADER: &str = "revenue,match_rate,social_welfare,buyer_welfare,\
relative_revenue,relative_match_rate,relative_social_welfare,relative_buyer_welfare,\
underprediction_below_median,underprediction_above_median,record_count";

pub const REPORT_HEADER: &str = "loss,lambda,gamma,revenue,match_rate,social_welfare,buyer_welfare,\
relative_revenue,relative_match_rate,relative_social_welfare,relative_buyer_welfare,\
underprediction_below_median,underprediction_above_median,record_count";

fn metric_fields(r: &MetricsReport) -> [f64; 10] {
    [
        r.revenue,
        r.match_rate,
        r.social_welfare,
        r.buyer_welfare,
        r.relative_revenue,
        r.relative_match_rate,
        r.relative_social_welfare,
        r.relative_buyer_welfare,
        r.underprediction_below_median,
        r.underprediction_above_median,
    ]
}

/// One CSV row per sweep configuration; `gamma` is empty when unused.
pub fn write_report_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for row in rows {
        let gamma = row.loss.gamma().map(|g| g.to_string()).unwrap_or_default();
        write!(out, "{},{},{}", row.loss.kind(), row.loss.lambda(), gamma)?;
        for v in metric_fields(&row.report) {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",{}", row.report.record_count)?;
    }
    out.flush()
}

/// Single-model report: `model,<metrics>` header and one row.
pub fn write_metrics_csv<W: Write>(label: &str, report: &MetricsReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "model,{METRICS_HEADER}")?;
    write!(out, "{label}")?;
    for v in metric_fields(report) {
        write!(out, ",{v}")?;
    }
    writeln!(out, ",{}", report.record_count)?;
    out.flush()
}

pub fn render_report(report: &MetricsReport) -> String {
    let mut s = String::new();
    let rows = [
        ("records", report.record_count as f64),
        ("revenue", report.revenue),
        ("match rate", report.match_rate),
        ("social welfare", report.social_welfare),
        ("buyer welfare", report.buyer_welfare),
        ("relative revenue", report.relative_revenue),
        ("relative match rate", report.relative_match_rate),
        ("relative social welfare", report.relative_social_welfare),
        ("relative buyer welfare", report.relative_buyer_welfare),
        ("underpredicted below median", report.underprediction_below_median),
        ("underpredicted above median", report.underprediction_above_median),
    ];
    for (name, value) in rows {
        let _ = writeln!(s, "{name:<28} {value:>12.6}");
    }
    for (ctx, mr) in &report.per_context_match_rate {
        let _ = writeln!(s, "{:<28} {mr:>12.6}", format!("match rate [feature {ctx}]"));
    }
    s
}

/// `lambda,target_mr,realized_mr,context,context_mr`, one line per context.
pub fn write_calibration_csv<W: Write>(rows: &[CalibrationRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "lambda,target_mr,realized_mr,context,context_mr")?;
    for row in rows {
        if row.per_context.is_empty() {
            writeln!(out, "{},{},{},all,{}", row.lambda, row.target_match_rate, row.realized_match_rate, row.realized_match_rate)?;
        }
        for (ctx, mr) in &row.per_context {
            writeln!(out, "{},{},{},{ctx},{mr}", row.lambda, row.target_match_rate, row.realized_match_rate)?;
        }
    }
    out.flush()
}

pub fn render_table(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:>7} {:>6} {:>10} {:>7} {:>10} {:>10} {:>8} {:>8} {:>8} {:>8}",
        "loss", "lambda", "gamma", "revenue", "MR", "SW", "BW", "rel.rev", "rel.MR", "rel.SW", "rel.BW"
    );
    for row in rows {
        let r = &row.report;
        let gamma = row.loss.gamma().map(|g| format!("{g}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<10} {:>7.3} {:>6} {:>10.5} {:>7.4} {:>10.5} {:>10.5} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            row.loss.kind().name(),
            row.loss.lambda(),
            gamma,
            r.revenue,
            r.match_rate,
            r.social_welfare,
            r.buyer_welfare,
            r.relative_revenue,
            r.relative_match_rate,
            r.relative_social_welfare,
            r.relative_buyer_welfare,
        );
    }
    s
}
