//! Serializable result of one experiment.

use serde::{Deserialize, Serialize};

use crate::convergence::SpectralReport;
use crate::error::{Error, Result};
use crate::solvers::{TrajectoryRow, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Complete configuration with every default filled in.
    pub config: serde_json::Value,
    pub rows: Vec<TrajectoryRow>,
    pub verdict: Verdict,
    pub spectral: Option<SpectralReport>,
}

pub const CSV_HEADER: &str = "iter,wall_time,field_norm,distance,value,metric";

// shortest round-trip representation, same as the JSON writer
fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite float")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

impl RunRecord {
    pub fn new<C: Serialize>(config: &C, rows: Vec<TrajectoryRow>, verdict: Verdict) -> Result<Self> {
        let config = serde_json::to_value(config).map_err(|e| Error::Snapshot(e.to_string()))?;
        Ok(Self { config, rows, verdict, spectral: None })
    }

    /// Rows as CSV with a header line and LF endings.
    pub fn rows_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let fields = [
                r.iter.to_string(),
                fmt_f64(r.wall_time),
                fmt_f64(r.field_norm),
                fmt_opt(r.distance),
                fmt_f64(r.value),
                fmt_opt(r.metric),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn timing_masked(&self) -> RunRecord {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.wall_time = 0.0;
        }
        r
    }

    pub fn final_row(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }

    /// Last logged task metric.
    pub fn final_metric(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.metric)
    }
}
