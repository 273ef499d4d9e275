//! Experiment report rows, CSV output and log-log slope fitting.

use std::io::Write;

use crate::io::format_f64;
use crate::{Error, Result};

/// One record of a Monte-Carlo experiment. Summary records (fitted slopes,
/// inequality checks) use the same schema with `replicate = 0` and a
/// dedicated metric name.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub n: usize,
    pub p: usize,
    pub gamma: f64,
    pub replicate: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Ordinary least squares of `log y` on `log x`, with the standard error of
/// the slope estimate.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidMeasure("slope fit needs at least two points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidMeasure("log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if lx.len() > 2 {
        let ss_res: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit { slope, stderr, intercept })
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn new() -> Self {
        Self { rows: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        experiment: &str,
        n: usize,
        p: usize,
        gamma: f64,
        replicate: usize,
        metric: &str,
        value: f64,
    ) {
        self.rows.push(ReportRow {
            experiment: experiment.to_string(),
            n,
            p,
            gamma,
            replicate,
            metric: metric.to_string(),
            value,
        });
    }

    pub fn values_where<F: Fn(&ReportRow) -> bool>(&self, metric: &str, pred: F) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.metric == metric && pred(r))
            .map(|r| r.value)
            .collect()
    }

    pub fn mean_where<F: Fn(&ReportRow) -> bool>(&self, metric: &str, pred: F) -> Option<f64> {
        let v = self.values_where(metric, pred);
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    }

    pub fn first_value(&self, metric: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.metric == metric).map(|r| r.value)
    }

    /// CSV with header `experiment,n,p,gamma,replicate,metric,value`, floats
    /// with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["experiment", "n", "p", "gamma", "replicate", "metric", "value"])?;
        for r in &self.rows {
            w.write_record([
                r.experiment.as_str(),
                &r.n.to_string(),
                &r.p.to_string(),
                &format_f64(r.gamma),
                &r.replicate.to_string(),
                r.metric.as_str(),
                &format_f64(r.value),
            ])?;
        }
        w.flush()
    }
}
