//! Aggregates a results CSV into a per-`(algo, n)` rate table and plot data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use dpsco::stats::MeanAccumulator;

use crate::runner::{read_csv, CsvRow};

/// Mean excess population loss over the completed trials of one `(algo, n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub algo: String,
    pub n: usize,
    pub trials: usize,
    pub failed: usize,
    pub mean_excess_pop: f64,
    pub std_error: f64,
    pub theory_bound: f64,
}

impl TableRow {
    pub fn ratio(&self) -> f64 {
        self.mean_excess_pop / self.theory_bound
    }
}

/// Groups by `(algo, n)` in sorted order. Rows with a non-finite loss count
/// as failed and are left out of the mean.
pub fn aggregate(rows: &[CsvRow]) -> Vec<TableRow> {
    let mut keys: Vec<(&str, usize)> = rows.iter().map(|r| (r.algo.as_str(), r.n)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(algo, n)| {
            let group: Vec<&CsvRow> = rows.iter().filter(|r| r.algo == algo && r.n == n).collect();
            let acc: MeanAccumulator =
                group.iter().map(|r| r.excess_pop).filter(|x| x.is_finite()).collect();
            TableRow {
                algo: algo.to_string(),
                n,
                trials: acc.count(),
                failed: group.len() - acc.count(),
                mean_excess_pop: if acc.count() == 0 { f64::NAN } else { acc.mean() },
                std_error: acc.std_error(),
                theory_bound: group[0].theory_bound,
            }
        })
        .collect()
}

const COLUMNS: [&str; 8] = ["algo", "n", "trials", "failed", "mean_excess_pop", "std_error", "theory_bound", "ratio"];

/// Right-aligned text table, one line per row after the header.
pub fn format_table(rows: &[TableRow]) -> String {
    let cells: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.algo.clone(),
                r.n.to_string(),
                r.trials.to_string(),
                r.failed.to_string(),
                format!("{:.4e}", r.mean_excess_pop),
                format!("{:.4e}", r.std_error),
                format!("{:.4e}", r.theory_bound),
                format!("{:.4}", r.ratio()),
            ]
        })
        .collect();
    let mut widths = COLUMNS.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, fields: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = fields.zip(widths).map(|(f, w)| format!("{f:>w$}")).collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut out, &mut COLUMNS.iter().copied());
    for row in &cells {
        line(&mut out, &mut row.iter().map(String::as_str));
    }
    out
}

/// Two-column `n value` blocks, one for the measured mean and one for the
/// bound of each algorithm, separated by blank lines.
pub fn plot_data(rows: &[TableRow]) -> String {
    let mut algos: Vec<&str> = rows.iter().map(|r| r.algo.as_str()).collect();
    algos.dedup();
    let mut out = String::new();
    for algo in algos {
        let series: Vec<&TableRow> = rows.iter().filter(|r| r.algo == algo).collect();
        for (label, pick) in [("excess_pop", 0), ("theory_bound", 1)] {
            if !out.is_empty() {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# {algo} {label}");
            for r in &series {
                let y = if pick == 0 { r.mean_excess_pop } else { r.theory_bound };
                let _ = writeln!(out, "{} {:e}", r.n, y);
            }
        }
    }
    out
}

/// `<stem>.plot.dat` next to the CSV.
pub fn plot_path(csv: &Path) -> PathBuf {
    csv.with_extension("plot.dat")
}

#[derive(Debug)]
pub struct RateTable {
    pub rows: Vec<TableRow>,
    pub text: String,
    pub plot_path: PathBuf,
}

/// Reads the CSV, writes the plot file and returns the table.
pub fn emit_rate_table(csv: &Path) -> anyhow::Result<RateTable> {
    let rows = aggregate(&read_csv(csv)?);
    let plot = plot_path(csv);
    std::fs::write(&plot, plot_data(&rows)).with_context(|| format!("cannot write {}", plot.display()))?;
    Ok(RateTable { text: format_table(&rows), rows, plot_path: plot })
}
