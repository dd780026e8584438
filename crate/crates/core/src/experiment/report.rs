//! Aggregation and output of experiment records.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::grid::{Method, RunRecord};
use super::stats::{paired_ttest, Significance};
use crate::error::Result;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Mean accuracy of one method, with its significance group.
#[derive(Clone, Debug, Serialize)]
pub struct MethodSummary {
    pub dataset: String,
    pub method: Method,
    pub mean: f64,
    /// `top` when indistinguishable from the best method on the dataset, else `rest`.
    pub significance_group: &'static str,
    #[serde(skip)]
    pub accuracies: Vec<f64>,
    #[serde(skip)]
    pub non_converged: usize,
}

/// Per-dataset, per-method means. The best method and every method a paired
/// t-test cannot tell apart from it form the `top` group.
pub fn summarize(records: &[RunRecord]) -> Result<Vec<MethodSummary>> {
    let mut cells: BTreeMap<(String, Method), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        cells.entry((r.dataset.clone(), r.method)).or_default().push(r);
    }
    let mut out: Vec<MethodSummary> = cells
        .into_iter()
        .map(|((dataset, method), mut rs)| {
            rs.sort_by_key(|r| r.split_seed);
            let accuracies: Vec<f64> = rs.iter().map(|r| r.accuracy).collect();
            MethodSummary {
                dataset,
                method,
                mean: accuracies.iter().sum::<f64>() / accuracies.len() as f64,
                significance_group: "rest",
                non_converged: rs.iter().filter(|r| !r.converged).count(),
                accuracies,
            }
        })
        .collect();

    let datasets: Vec<String> = out.iter().map(|s| s.dataset.clone()).collect();
    for dataset in datasets {
        let rows: Vec<usize> = (0..out.len()).filter(|&i| out[i].dataset == dataset).collect();
        let Some(&best) = rows.iter().max_by(|&&a, &&b| out[a].mean.total_cmp(&out[b].mean)) else {
            continue;
        };
        let reference = out[best].accuracies.clone();
        for &i in &rows {
            let tied = i == best
                || (out[i].accuracies.len() == reference.len()
                    && reference.len() >= 2
                    && paired_ttest(&out[i].accuracies, &reference, SIGNIFICANCE_LEVEL)?.outcome
                        == Significance::Indistinguishable);
            out[i].significance_group = if tied { "top" } else { "rest" };
        }
    }
    Ok(out)
}

/// Writes any serializable records as CSV with a header row.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `dataset,method,split_seed,accuracy,converged`.
pub fn write_results_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        dataset: &'a str,
        method: Method,
        split_seed: u64,
        accuracy: f64,
        converged: bool,
    }
    let rows: Vec<Row> = records
        .iter()
        .map(|r| Row {
            dataset: &r.dataset,
            method: r.method,
            split_seed: r.split_seed,
            accuracy: r.accuracy,
            converged: r.converged,
        })
        .collect();
    write_csv(&rows, out)
}

/// Columns `dataset,method,mean,significance_group`.
pub fn write_summary_csv<W: Write>(summary: &[MethodSummary], out: W) -> Result<()> {
    write_csv(summary, out)
}

/// One row per dataset, one column per method; `*` marks the top group and
/// `!` marks cells with non-converged splits.
pub fn format_table(summary: &[MethodSummary]) -> String {
    let mut methods: Vec<Method> = summary.iter().map(|s| s.method).collect();
    methods.sort_by_key(|m| (order(*m), m.k()));
    methods.dedup();
    let mut datasets: Vec<&str> = summary.iter().map(|s| s.dataset.as_str()).collect();
    datasets.dedup();

    let name_width = datasets.iter().map(|d| d.len()).max().unwrap_or(0).max("dataset".len());
    let mut text = format!("{:<name_width$}", "dataset");
    for m in &methods {
        text.push_str(&format!(" {:>8}", m.to_string()));
    }
    text.push('\n');
    for d in datasets {
        text.push_str(&format!("{d:<name_width$}"));
        for m in &methods {
            let cell = summary
                .iter()
                .find(|s| s.dataset == d && s.method == *m)
                .map(|s| {
                    let mark = if s.significance_group == "top" { "*" } else { " " };
                    let flag = if s.non_converged > 0 { "!" } else { " " };
                    format!("{:.3}{mark}{flag}", s.mean)
                })
                .unwrap_or_else(|| "-".into());
            text.push_str(&format!(" {cell:>8}"));
        }
        text.push('\n');
    }
    text
}

fn order(m: Method) -> u8 {
    match m {
        Method::All(_) => 0,
        Method::Ge(_) => 1,
        Method::Avg(_) => 2,
        Method::Ws(_) => 3,
    }
}
