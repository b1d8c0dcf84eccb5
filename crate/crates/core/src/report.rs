//! Long-format result rows and their CSV / Markdown renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROW_HEADER: &str = "dataset,N,method,replicate,metric,mean,lo,hi";

/// Label of the across-replicate mean rows.
pub const MEAN_REPLICATE: &str = "mean";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub n: usize,
    pub method: String,
    pub replicate: String,
    pub metric: String,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ReportRow {
    pub fn excludes_zero(&self) -> bool {
        self.hi < 0.0 || self.lo > 0.0
    }
}

fn check_field(s: &str) -> Result<()> {
    if s.contains([',', '\n', '"']) {
        return Err(Error::invalid(format!("field `{s}` contains a separator")));
    }
    Ok(())
}

pub fn rows_to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut s = String::from(ROW_HEADER);
    s.push('\n');
    for r in rows {
        for f in [&r.dataset, &r.method, &r.replicate, &r.metric] {
            check_field(f)?;
        }
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.dataset, r.n, r.method, r.replicate, r.metric, r.mean, r.lo, r.hi
        )
        .unwrap();
    }
    Ok(s)
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !crate::dataio::skip_line(l));
    match lines.next() {
        Some((_, h)) if h.trim() == ROW_HEADER => {}
        _ => {
            return Err(Error::Header {
                line: 1,
                msg: format!("expected `{ROW_HEADER}`"),
            })
        }
    }
    lines
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            if f.len() != 8 {
                return Err(Error::RowLength {
                    line: i + 1,
                    expected: 8,
                    found: f.len(),
                });
            }
            let num = |k: usize, name: &str| {
                f[k].parse::<f64>().map_err(|_| Error::NonNumeric {
                    line: i + 1,
                    column: name.into(),
                    value: f[k].into(),
                })
            };
            Ok(ReportRow {
                dataset: f[0].into(),
                n: f[1].parse().map_err(|_| Error::NonNumeric {
                    line: i + 1,
                    column: "N".into(),
                    value: f[1].into(),
                })?,
                method: f[2].into(),
                replicate: f[3].into(),
                metric: f[4].into(),
                mean: num(5, "mean")?,
                lo: num(6, "lo")?,
                hi: num(7, "hi")?,
            })
        })
        .collect()
}

/// Across-replicate arithmetic mean of `mean`, `lo` and `hi` for every
/// `(dataset, method, metric)`; input rows labelled `mean` are ignored.
pub fn replicate_means(rows: &[ReportRow]) -> Vec<ReportRow> {
    let mut groups: BTreeMap<(String, String, String), (ReportRow, usize)> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rows.iter().filter(|r| r.replicate != MEAN_REPLICATE) {
        let key = (r.dataset.clone(), r.method.clone(), r.metric.clone());
        match groups.get_mut(&key) {
            Some((acc, c)) => {
                acc.mean += r.mean;
                acc.lo += r.lo;
                acc.hi += r.hi;
                *c += 1;
            }
            None => {
                order.push(key.clone());
                groups.insert(key, (r.clone(), 1));
            }
        }
    }
    order
        .into_iter()
        .map(|k| {
            let (mut r, c) = groups.remove(&k).unwrap();
            let c = c as f64;
            r.mean /= c;
            r.lo /= c;
            r.hi /= c;
            r.replicate = MEAN_REPLICATE.into();
            r
        })
        .collect()
}

/// How a metric is shown in Markdown tables.
fn display_scale(metric: &str) -> (f64, usize, bool) {
    match metric {
        "symkl" | "delta_symkl" | "head_symkl" | "mae" | "delta_mae" => (1.0, 4, metric.starts_with("delta")),
        m if m.starts_with("delta") => (100.0, 1, true),
        _ => (100.0, 1, false),
    }
}

fn fmt_val(v: f64, scale: f64, digits: usize, signed: bool) -> String {
    let x = v * scale;
    if signed {
        format!("{x:+.digits$}")
    } else {
        format!("{x:.digits$}")
    }
}

/// One cell: `mean [lo, hi]`, percentages for rates.
pub fn format_cell(row: &ReportRow) -> String {
    let (s, d, signed) = display_scale(&row.metric);
    format!(
        "{} [{}, {}]",
        fmt_val(row.mean, s, d, signed),
        fmt_val(row.lo, s, d, signed),
        fmt_val(row.hi, s, d, signed)
    )
}

/// Dataset × method grid of one metric at one replicate label.
pub fn markdown_table(rows: &[ReportRow], metric: &str, replicate: &str) -> String {
    let sel: Vec<&ReportRow> = rows
        .iter()
        .filter(|r| r.metric == metric && r.replicate == replicate)
        .collect();
    let mut methods: Vec<&str> = Vec::new();
    let mut datasets: Vec<(&str, usize)> = Vec::new();
    for r in &sel {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if !datasets.iter().any(|(d, _)| *d == r.dataset) {
            datasets.push((&r.dataset, r.n));
        }
    }
    let mut s = format!("| Dataset | N | {} |\n", methods.join(" | "));
    s.push_str(&format!("|---|---:|{}\n", "---|".repeat(methods.len())));
    for (d, n) in datasets {
        let cells: Vec<String> = methods
            .iter()
            .map(|m| {
                sel.iter()
                    .find(|r| r.dataset == d && r.method == *m)
                    .map(|r| format_cell(r))
                    .unwrap_or_else(|| "—".into())
            })
            .collect();
        s.push_str(&format!("| {d} | {n} | {} |\n", cells.join(" | ")));
    }
    s
}
