use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{AlgorithmCells, Cell, EvaluationReport, NdcgValue};
use crate::metrics::MetricValue;
use crate::{Algorithm, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Markdown];
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidConfig(format!("unknown report format {other:?}"))),
        }
    }
}

/// Exact integers print bare ("0", "1"); everything else to `decimals`.
fn num(v: f64, decimals: usize) -> String {
    if v.is_finite() && v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.decimals$}")
    }
}

/// `value(%Δ)` as in "0.126(620.3%)".
pub fn format_ndcg(v: &NdcgValue) -> String {
    format!("{}({}%)", num(v.value.point, 3), num(v.percent_over_random, 1))
}

/// `mean(SD)` as in "15.9(2.8)".
pub fn format_mean_sd(v: &MetricValue<f64>, decimals: usize) -> String {
    format!("{}({})", num(v.point, decimals), num(v.dispersion, decimals))
}

fn cell<V>(c: &Cell<V>, f: impl Fn(&V) -> String) -> String {
    match c {
        Cell::Value(v) => f(v),
        Cell::NotAvailable => "-".to_string(),
    }
}

type CellFormatter = fn(&AlgorithmCells) -> String;

const TABLES: [(&str, &str, CellFormatter); 3] = [
    ("ndcg", "NDCG", |c| cell(&c.ndcg, format_ndcg)),
    ("ad", "AD", |c| cell(&c.ad, |v| format_mean_sd(v, 1))),
    ("rp", "RP", |c| cell(&c.rp, |v| format_mean_sd(v, 2))),
];

fn table_rows(report: &EvaluationReport, f: CellFormatter) -> (Vec<Algorithm>, Vec<Vec<String>>) {
    let algs = report.algorithms();
    let rows = report
        .rows
        .iter()
        .map(|r| {
            let mut line = vec![r.segment.label().to_string(), r.n_users.to_string()];
            for a in &algs {
                line.push(r.cells.iter().find(|c| c.algorithm == *a).map_or("-".into(), f));
            }
            line
        })
        .collect();
    (algs, rows)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record(header).map_err(ser)?;
    for r in rows {
        w.write_record(r).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `report.json`, `tables/*.csv` or `report.md` under `out_dir` and
/// returns the paths written.
pub fn render_report(report: &EvaluationReport, format: ReportFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    match format {
        ReportFormat::Json => {
            let p = out_dir.join("report.json");
            write_file(&p, &(serde_json::to_string_pretty(report)? + "\n"))?;
            Ok(vec![p])
        }
        ReportFormat::Csv => {
            let mut written = Vec::new();
            for (name, _, f) in TABLES {
                let (algs, rows) = table_rows(report, f);
                let mut header = vec!["segment".to_string(), "n_users".to_string()];
                header.extend(algs.iter().map(|a| a.to_string()));
                let p = out_dir.join("tables").join(format!("{name}.csv"));
                write_file(&p, &csv_text(&header, &rows)?)?;
                written.push(p);
            }
            let sh = &report.short_head;
            let rows: Vec<Vec<String>> = sh
                .items
                .iter()
                .enumerate()
                .map(|(n, id)| {
                    vec![
                        (n + 1).to_string(),
                        id.clone(),
                        sh.quantities[n].to_string(),
                        format!("{}", sh.cumulative_share[n]),
                    ]
                })
                .collect();
            let header = ["rank", "item_id", "quantity", "cumulative_share"].map(String::from);
            let p = out_dir.join("tables").join("short_head.csv");
            write_file(&p, &csv_text(&header, &rows)?)?;
            written.push(p);
            Ok(written)
        }
        ReportFormat::Markdown => {
            let p = out_dir.join("report.md");
            write_file(&p, &markdown(report))?;
            Ok(vec![p])
        }
    }
}

pub fn read_report(path: &Path) -> Result<EvaluationReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn md_table(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
    out.push_str(&line(header));
    out.push_str(&line(&vec!["---".to_string(); header.len()]));
    for r in rows {
        out.push_str(&line(r));
    }
    out.push('\n');
}

fn markdown(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Evaluation report (k = {})\n", report.k);
    let _ = writeln!(out, "Train/test boundary: {}\n", report.boundary.to_rfc3339());
    let _ = writeln!(out, "## Dataset\n\n```\n{}```\n", report.stats);
    let _ = writeln!(out, "## Coverage\n");
    let header = ["Algorithm", "Covered", "Uncovered", "Coverage"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .coverage
        .iter()
        .map(|c| {
            vec![
                c.algorithm.to_string(),
                c.covered.to_string(),
                c.uncovered.to_string(),
                format!("{:.1}%", 100.0 * c.covered as f64 / c.total.max(1) as f64),
            ]
        })
        .collect();
    md_table(&mut out, &header, &rows);
    for (_, title, f) in TABLES {
        let _ = writeln!(out, "## {title}@{}\n", report.k);
        let (algs, rows) = table_rows(report, f);
        let mut header = vec!["Segment".to_string(), "Users".to_string()];
        header.extend(algs.iter().map(|a| a.to_string()));
        md_table(&mut out, &header, &rows);
    }
    let sh = &report.short_head;
    let _ = writeln!(
        out,
        "## Short head\n\n{} of {} items ({:.1}%) account for one third of sales.",
        sh.short_head_items,
        sh.items.len(),
        100.0 * sh.short_head_fraction
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(point: f64, sd: f64) -> MetricValue<f64> {
        MetricValue {
            point,
            dispersion: sd,
            ci_low: point,
            ci_high: point,
            n_units: 3,
        }
    }

    #[test]
    fn cell_formats() {
        let n = NdcgValue {
            value: mv(0.126, 0.01),
            baseline: 0.0175,
            percent_over_random: 620.3,
            excluded: 0,
        };
        assert_eq!(format_ndcg(&n), "0.126(620.3%)");
        assert_eq!(format_mean_sd(&mv(15.94, 2.81), 1), "15.9(2.8)");
        assert_eq!(format_mean_sd(&mv(0.0, 0.0), 1), "0(0)");
        assert_eq!(format_mean_sd(&mv(1.0, 0.0), 2), "1(0)");
        assert_eq!(format_mean_sd(&mv(0.456, 0.123), 2), "0.46(0.12)");
        assert_eq!(cell::<NdcgValue>(&Cell::NotAvailable, format_ndcg), "-");
    }

    #[test]
    fn format_names() {
        assert_eq!("md".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
