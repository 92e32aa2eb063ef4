//! Timing metrics: MAE, success rates at annotator-noise thresholds, and
//! per-scenario report tables.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::math::{abs, sqrt};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipEval {
    pub clip_id: String,
    pub scenario_id: String,
    pub t_est_ms: f64,
    pub t_gt_ms: f64,
    pub abs_err_ms: f64,
}

impl ClipEval {
    pub fn new(clip_id: impl Into<String>, scenario_id: impl Into<String>, t_est_ms: f64, t_gt_ms: f64) -> Self {
        ClipEval {
            clip_id: clip_id.into(),
            scenario_id: scenario_id.into(),
            t_est_ms,
            t_gt_ms,
            abs_err_ms: abs(t_est_ms - t_gt_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub sigma_ms: f64,
    pub multiples: Vec<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            sigma_ms: 0.513,
            multiples: alloc::vec![1.0, 2.0],
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_ms > 0.0 && self.sigma_ms.is_finite()) {
            return Err(Error::config("sigma_ms", "must be > 0"));
        }
        if self.multiples.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::config("multiples", "must be > 0"));
        }
        Ok(())
    }

    pub fn values_ms(&self) -> impl Iterator<Item = f64> + '_ {
        self.multiples.iter().map(|m| m * self.sigma_ms)
    }
}

/// Mean of one clip's annotation times.
pub fn gt_from_annotations(times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::Empty("annotation list"));
    }
    Ok(times.iter().sum::<f64>() / times.len() as f64)
}

/// Per-clip sample standard deviation, averaged over clips.
pub fn annotator_sigma(annotations: &[Vec<f64>]) -> Result<f64> {
    if annotations.is_empty() {
        return Err(Error::Empty("annotation sets"));
    }
    let mut total = 0.0;
    for (clip, times) in annotations.iter().enumerate() {
        if times.len() < 2 {
            return Err(Error::TooFewAnnotations {
                clip,
                count: times.len(),
            });
        }
        let mean = gt_from_annotations(times)?;
        let ss: f64 = times.iter().map(|t| (t - mean) * (t - mean)).sum();
        total += sqrt(ss / (times.len() - 1) as f64);
    }
    Ok(total / annotations.len() as f64)
}

pub fn mae(evals: &[ClipEval]) -> Result<f64> {
    if evals.is_empty() {
        return Err(Error::Empty("eval list"));
    }
    Ok(evals.iter().map(|e| e.abs_err_ms).sum::<f64>() / evals.len() as f64)
}

/// Percentage of clips with error strictly below `threshold_ms`.
pub fn success_rate(evals: &[ClipEval], threshold_ms: f64) -> Result<f64> {
    if evals.is_empty() {
        return Err(Error::Empty("eval list"));
    }
    let hits = evals.iter().filter(|e| e.abs_err_ms < threshold_ms).count();
    Ok(100.0 * hits as f64 / evals.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub mae_ms: f64,
    /// Success rate per threshold multiple, percent.
    pub sr_pct: Vec<f64>,
    pub n_clips: usize,
}

impl ReportRow {
    fn from_evals(scenario: String, evals: &[ClipEval], th: &Thresholds) -> Result<Self> {
        Ok(ReportRow {
            scenario,
            mae_ms: mae(evals)?,
            sr_pct: th.values_ms().map(|t| success_rate(evals, t)).collect::<Result<_>>()?,
            n_clips: evals.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub thresholds: Thresholds,
    /// Scenario rows in ascending id order, then the clip-pooled `avg` row.
    pub rows: Vec<ReportRow>,
}

pub const AVG_ROW: &str = "avg";

/// Groups evals by scenario and appends a clip-pooled average row.
pub fn report(evals: &[ClipEval], th: &Thresholds) -> Result<Report> {
    th.validate()?;
    let mut groups: BTreeMap<&str, Vec<ClipEval>> = BTreeMap::new();
    for e in evals {
        groups.entry(&e.scenario_id).or_default().push(e.clone());
    }
    let mut rows = Vec::with_capacity(groups.len() + 1);
    for (scenario, group) in &groups {
        rows.push(ReportRow::from_evals(String::from(*scenario), group, th)?);
    }
    if !evals.is_empty() {
        rows.push(ReportRow::from_evals(String::from(AVG_ROW), evals, th)?);
    }
    Ok(Report {
        thresholds: th.clone(),
        rows,
    })
}

impl Report {
    pub fn avg(&self) -> Option<&ReportRow> {
        self.rows.last().filter(|r| r.scenario == AVG_ROW)
    }

    /// CSV with one `sr_<m>sigma_pct` column per threshold multiple.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,mae_ms");
        for m in &self.thresholds.multiples {
            let _ = write!(out, ",sr_{m}sigma_pct");
        }
        out.push_str(",n_clips\n");
        for r in &self.rows {
            let _ = write!(out, "{},{:.4}", r.scenario, r.mae_ms);
            for sr in &r.sr_pct {
                let _ = write!(out, ",{sr:.2}");
            }
            let _ = writeln!(out, ",{}", r.n_clips);
        }
        out
    }
}
