//! Rendering of stratified reports: a plain-text table laid out like the
//! usual Total / Question Overlap / Answer Overlap Only / No Overlap results
//! table, and a stable JSON form.

use std::fmt::Write;

use qaleak_core::{BucketScore, StratifiedReport, Stratum};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Machine,
}

pub fn render_report(report: &StratifiedReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => render_table(std::slice::from_ref(report)),
        ReportFormat::Machine => {
            let mut text = serde_json::to_string_pretty(report).expect("report serializes");
            text.push('\n');
            text
        }
    }
}

pub fn parse_machine(text: &str) -> Result<StratifiedReport> {
    serde_json::from_str(text).map_err(|e| Error::Invalid(format!("bad report: {e}")))
}

fn em_cell(score: &BucketScore) -> String {
    match score.em {
        Some(em) => format!("{em:.1}"),
        None => "n/a".to_string(),
    }
}

/// One EM row per report followed by a row of item counts.
pub fn render_table(reports: &[StratifiedReport]) -> String {
    let mut header = vec!["Model".to_string(), "Total".to_string()];
    header.extend(Stratum::ALL.iter().map(|s| s.title().to_string()));

    let mut rows: Vec<Vec<String>> = Vec::new();
    for report in reports {
        let mut row = vec![report.model.clone(), em_cell(&report.total)];
        row.extend(Stratum::ALL.iter().map(|s| em_cell(report.bucket(*s))));
        rows.push(row);
    }
    if let Some(first) = reports.first() {
        let mut counts = vec!["(count)".to_string(), first.total.count.to_string()];
        counts.extend(Stratum::ALL.iter().map(|s| first.bucket(*s).count.to_string()));
        rows.push(counts);
    }

    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut out = String::new();
    if let Some(first) = reports.first() {
        let _ = writeln!(out, "Dataset: {}", first.dataset);
    }
    for row in std::iter::once(&header).chain(rows.iter()) {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
