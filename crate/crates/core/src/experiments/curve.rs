//! Replication summaries: Student-t ribbons and Epps curves with their CSV/JSON forms.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::estimators::CompensatedSum;

/// Mean of a replication ensemble with a band of `t_{(1+conf)/2, n-1}` sample standard
/// deviations either side.
///
/// The band uses the spread of the estimates, not the standard error of their mean, so it
/// approximates the region holding `conf` of the individual estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ribbon {
    pub mean: f64,
    pub half_width: f64,
    pub sd: f64,
    pub multiplier: f64,
}

/// Two-sided Student-t quantile `t_{(1+conf)/2, df}`.
pub fn t_multiplier(confidence: f64, df: usize) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param("confidence", "must lie in (0, 1)"));
    }
    if df == 0 {
        return Err(Error::InsufficientData("need at least one degree of freedom".into()));
    }
    let t = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok(t.inverse_cdf((1.0 + confidence) / 2.0))
}

/// Order-independent mean: values are sorted before a compensated sum.
fn stable_mean(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut acc = CompensatedSum::default();
    for v in &sorted {
        acc.add(*v);
    }
    acc.value() / values.len() as f64
}

pub fn ribbon(values: &[f64], confidence: f64) -> Result<Ribbon> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("ribbon needs >= 2 values, got {n}")));
    }
    let mean = stable_mean(values);
    let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let sd = (stable_mean(&squares) * n as f64 / (n - 1) as f64).sqrt();
    let multiplier = t_multiplier(confidence, n - 1)?;
    Ok(Ribbon {
        mean,
        half_width: multiplier * sd,
        sd,
        multiplier,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Sampling interval in seconds.
    Dt,
    /// Mean inter-arrival time of the sampling process in seconds.
    MeanInterarrival,
    /// k-skip thinning factor.
    Skip,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::Dt => "dt",
            Axis::MeanInterarrival => "mean_interarrival",
            Axis::Skip => "k",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub axis: f64,
    pub estimator: String,
    /// Absent when every replication failed.
    pub mean: Option<f64>,
    /// Absent with fewer than two successful replications.
    pub half_width: Option<f64>,
    pub n_ok: usize,
    pub n_fail: usize,
}

impl CurvePoint {
    /// Summarises the successful estimates of one point; non-finite values count as failures.
    pub fn summarise(axis: f64, estimator: impl Into<String>, estimates: &[Option<f64>], confidence: f64) -> Result<Self> {
        let ok: Vec<f64> = estimates.iter().flatten().copied().filter(|v| v.is_finite()).collect();
        let n_fail = estimates.len() - ok.len();
        let (mean, half_width) = match ok.len() {
            0 => (None, None),
            1 => (Some(ok[0]), None),
            _ => {
                let r = ribbon(&ok, confidence)?;
                (Some(r.mean), Some(r.half_width))
            }
        };
        Ok(CurvePoint {
            axis,
            estimator: estimator.into(),
            mean,
            half_width,
            n_ok: ok.len(),
            n_fail,
        })
    }
}

/// Analytic companion value plotted with a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub axis: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EppsCurve {
    pub axis: Axis,
    pub confidence: f64,
    pub points: Vec<CurvePoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference: Vec<ReferencePoint>,
    /// Divisor applied by saturation scaling, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation_level: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EppsCurve {
    pub fn new(axis: Axis, confidence: f64) -> Self {
        EppsCurve {
            axis,
            confidence,
            points: Vec::new(),
            reference: Vec::new(),
            saturation_level: None,
            notes: Vec::new(),
        }
    }

    /// Points of one estimator in axis order.
    pub fn series(&self, estimator: &str) -> Vec<&CurvePoint> {
        let mut pts: Vec<&CurvePoint> = self.points.iter().filter(|p| p.estimator == estimator).collect();
        pts.sort_by(|a, b| a.axis.total_cmp(&b.axis));
        pts
    }

    pub fn point(&self, estimator: &str, axis: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.estimator == estimator && p.axis == axis)
    }

    /// Distinct estimator labels in first-appearance order.
    pub fn estimators(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.points {
            if !out.contains(&p.estimator.as_str()) {
                out.push(&p.estimator);
            }
        }
        out
    }

    /// Writes `axis,estimator,mean,half_width,n_ok,n_fail`; reference values use the estimator
    /// name `reference` with empty counts. Missing values are empty fields.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(out, "axis,estimator,mean,half_width,n_ok,n_fail")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.axis,
                p.estimator,
                opt(p.mean),
                opt(p.half_width),
                p.n_ok,
                p.n_fail
            )?;
        }
        for r in &self.reference {
            writeln!(out, "{},reference,{},,,", r.axis, r.value)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Numeric(e.to_string()))
    }
}
