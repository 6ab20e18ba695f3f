//! Tabular report files for external plotting.
//!
//! Every aggregate report row uses the same stable columns:
//! `lambda,seed_count,acc_mean,acc_std,cost_mean,cost_std,policy,condition`.
//! Missing cost fields are left empty. Assignment-share files keep the
//! convention with `share_*`/`model` in place of the accuracy columns, and
//! training curves use `epoch,train_loss,val_loss`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::studies::StudyReport;
use super::FrontierPoint;
use crate::error::Result;
use crate::training::TrainingCurve;

pub const REPORT_COLUMNS: &str =
    "lambda,seed_count,acc_mean,acc_std,cost_mean,cost_std,policy,condition";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub lambda: f64,
    pub seed_count: usize,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub cost_mean: Option<f64>,
    pub cost_std: Option<f64>,
    pub policy: String,
    pub condition: String,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{REPORT_COLUMNS}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.lambda,
            r.seed_count,
            r.acc_mean,
            r.acc_std,
            opt(r.cost_mean),
            opt(r.cost_std),
            r.policy,
            r.condition
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Frontier (or raw per-lambda) points under the shared report convention.
pub fn write_frontier_csv(path: &Path, policy: &str, points: &[FrontierPoint]) -> Result<()> {
    let rows: Vec<ReportRow> = points
        .iter()
        .map(|p| ReportRow {
            lambda: p.lambda,
            seed_count: p.seed_count,
            acc_mean: p.acc_mean,
            acc_std: p.acc_std,
            cost_mean: Some(p.cost_mean),
            cost_std: Some(p.cost_std),
            policy: policy.to_string(),
            condition: "frontier".to_string(),
        })
        .collect();
    write_report_csv(path, &rows)
}

/// Study conditions under the shared report convention (no cost columns).
pub fn study_rows(report: &StudyReport, policy: &str) -> Vec<ReportRow> {
    report
        .conditions
        .iter()
        .map(|c| ReportRow {
            lambda: c.lambda,
            seed_count: c.samples.len(),
            acc_mean: c.mean,
            acc_std: c.std,
            cost_mean: None,
            cost_std: None,
            policy: policy.to_string(),
            condition: c.condition.clone(),
        })
        .collect()
}

/// Per-model assignment shares, one row per (lambda, model).
pub fn write_share_csv(
    path: &Path,
    policy: &str,
    rows: &[(f64, usize, String, f64, f64)],
) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "lambda,seed_count,share_mean,share_std,policy,model")?;
    for (lambda, seed_count, model, mean, std) in rows {
        writeln!(out, "{lambda},{seed_count},{mean},{std},{policy},{model}")?;
    }
    out.flush()?;
    Ok(())
}

/// Training curve: one row per epoch.
pub fn write_curve_csv(path: &Path, curve: &TrainingCurve) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "epoch,train_loss,val_loss")?;
    for stats in curve {
        writeln!(out, "{},{},{}", stats.epoch, stats.train_loss, stats.val_loss)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_csv_has_stable_header_and_empty_costs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        write_report_csv(
            &path,
            &[ReportRow {
                lambda: 0.1,
                seed_count: 5,
                acc_mean: 0.625,
                acc_std: 0.01,
                cost_mean: None,
                cost_std: None,
                policy: "bottleneck".into(),
                condition: "baseline".into(),
            }],
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_COLUMNS);
        assert_eq!(lines.next().unwrap(), "0.1,5,0.625,0.01,,,bottleneck,baseline");
    }
}
