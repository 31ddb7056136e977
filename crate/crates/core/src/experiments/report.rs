//! Text renderings of metric tables.

use std::fmt::Write;

use super::{Metrics, MetricsTable};

const HEADER: [&str; 6] = ["estimator", "rho1", "rho2", "rho3", "rho4", "rho5"];

fn cells(m: &Metrics, fmt: impl Fn(f64) -> String, missing: &str) -> [String; 5] {
    let opt = |v: Option<f64>| v.map(&fmt).unwrap_or_else(|| missing.to_string());
    [fmt(m.rho1), fmt(m.rho2), opt(m.rho3), opt(m.rho4), opt(m.rho5)]
}

/// CSV with shortest round-trip floats; undefined values are empty fields.
pub fn table_csv(table: &MetricsTable) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for row in &table.rows {
        let c = cells(&row.metrics, |v| format!("{v}"), "");
        let _ = writeln!(out, "{},{}", row.estimator, c.join(","));
    }
    out
}

/// Aligned markdown table with three decimals.
pub fn table_markdown(table: &MetricsTable, title: &str) -> String {
    let body: Vec<[String; 6]> = table
        .rows
        .iter()
        .map(|row| {
            let [a, b, c, d, e] = cells(&row.metrics, |v| format!("{v:.3}"), "n/a");
            [row.estimator.to_string(), a, b, c, d, e]
        })
        .collect();
    let mut width = HEADER.map(str::len);
    for r in &body {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cols: &[String]| {
        let parts: Vec<String> = cols
            .iter()
            .enumerate()
            .map(|(j, c)| if j == 0 { format!("{c:<w$}", w = width[j]) } else { format!("{c:>w$}", w = width[j]) })
            .collect();
        format!("| {} |\n", parts.join(" | "))
    };
    let mut out = format!("### {title}\n\n");
    out += &line(&HEADER.map(String::from));
    let rule: Vec<String> = width
        .iter()
        .enumerate()
        .map(|(j, &w)| if j == 0 { format!(":{}", "-".repeat(w + 1)) } else { format!("{}:", "-".repeat(w + 1)) })
        .collect();
    out += &format!("|{}|\n", rule.join("|"));
    for r in &body {
        out += &line(r);
    }
    let _ = writeln!(out, "\n{} portfolios averaged", table.portfolios);
    for (label, why) in &table.excluded {
        let _ = writeln!(out, "excluded {label}: {why}");
    }
    out
}
