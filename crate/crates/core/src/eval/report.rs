use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SketchError};
use crate::ItemId;

/// Items scored by MSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSet {
    /// Distinct items appearing in the stream's insertions.
    #[default]
    Inserted,
    /// Every id in `[0, 2^L)`; limited to `L <= 20`.
    Universe,
}

/// Metrics for one sketch configuration, averaged over repetitions.
///
/// `mse`, `recall`, `precision`, `recall_positive` and `ks` are means over
/// repetitions; `max_abs_error` and `max_rank_error` are maxima;
/// `violations` is a sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sketch_name: String,
    pub policy: String,
    pub counters: usize,
    pub space_bits: u64,
    pub epsilon: f64,
    pub alpha: f64,
    pub delete_ratio: f64,
    /// phi: items with `f >= phi |F|_1` are the truth set.
    pub threshold: f64,
    pub eval_set: EvalSet,
    pub mse: f64,
    pub max_abs_error: u64,
    /// Threshold-mode recall: reported iff estimate `>= phi (I - D)`.
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    /// Positive-estimate-mode recall, counter sketches only.
    pub recall_positive: Option<f64>,
    pub ks: Option<f64>,
    pub max_rank_error: Option<u64>,
    pub ns_per_update: Option<f64>,
    pub seed: u64,
    pub reps: usize,
    pub violations: u64,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub fn reports_to_json(reports: &[EvalReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

/// Writes a header row followed by one row per report.
pub fn write_csv<W: Write>(reports: &[EvalReport], sink: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(sink);
    for report in reports {
        out.serialize(report).map_err(|e| SketchError::Io(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileAnswer {
    pub q: f64,
    pub estimate: Option<ItemId>,
    pub exact: Option<ItemId>,
}

/// Rank-sketch accuracy on one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileReport {
    pub sketch_name: String,
    pub universe_bits: u32,
    pub counters: usize,
    pub space_bits: u64,
    pub epsilon: f64,
    pub alpha: f64,
    pub inserted: u64,
    pub deleted: u64,
    pub ks: f64,
    pub max_rank_error: u64,
    pub seed: u64,
    pub violations: u64,
    pub quantiles: Vec<QuantileAnswer>,
}

impl QuantileReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EvalReport {
        EvalReport {
            sketch_name: "ssp".into(),
            policy: "ActiveDelete".into(),
            counters: 2,
            space_bits: 256,
            epsilon: 0.5,
            alpha: 2.0,
            delete_ratio: 0.5,
            threshold: 0.5,
            eval_set: EvalSet::Inserted,
            mse: 0.0,
            max_abs_error: 0,
            recall: Some(1.0),
            precision: None,
            recall_positive: Some(1.0),
            ks: None,
            max_rank_error: None,
            ns_per_update: None,
            seed: 7,
            reps: 1,
            violations: 0,
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().contains("\"precision\": null"));
    }

    #[test]
    fn csv_row() {
        let mut buf = Vec::new();
        write_csv(&[sample()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sketch_name,policy,counters,space_bits,epsilon,alpha,delete_ratio,threshold,eval_set,mse,\
             max_abs_error,recall,precision,recall_positive,ks,max_rank_error,ns_per_update,seed,reps,violations"
        );
        assert_eq!(lines.next().unwrap(), "ssp,ActiveDelete,2,256,0.5,2.0,0.5,0.5,inserted,0.0,0,1.0,,1.0,,,,7,1,0");
    }
}
