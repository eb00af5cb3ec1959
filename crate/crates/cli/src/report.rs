//! Scaling reports: one row per (workers, data scale) cell, stored as CSV
//! with the header `mode,workers,scale,seconds,metric`.

use std::io::{Read, Write};

use mlkit::{Error, Result};

use crate::config::Mode;

const HEADER: [&str; 5] = ["mode", "workers", "scale", "seconds", "metric"];

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub mode: Mode,
    pub workers: usize,
    /// Points for logistic regression, the tiling factor for ALS, documents
    /// for text clustering.
    pub scale: usize,
    /// Wall time of the training call alone.
    pub seconds: f64,
    /// Training accuracy, observed RMSE, or final k-means cost.
    pub metric: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(HEADER)?;
        for r in &self.rows {
            // `f64` displays in shortest round-trip form, so parsing the
            // file back recovers every value exactly
            w.write_record([
                r.mode.to_string(),
                r.workers.to_string(),
                r.scale.to_string(),
                r.seconds.to_string(),
                r.metric.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<scaling report>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<ScalingReport> {
        let mut r = csv::Reader::from_reader(reader);
        if r.headers()?.iter().ne(HEADER) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header {}", HEADER.join(",")),
            });
        }
        let mut rows = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let field = |j: usize| record.get(j).unwrap_or_default();
            let err = |j: usize, e: String| Error::Parse {
                line,
                message: format!("bad {} {:?}: {e}", HEADER[j], field(j)),
            };
            rows.push(ScalingRow {
                mode: field(0).parse().map_err(|e| err(0, e))?,
                workers: field(1).parse().map_err(|e| err(1, format!("{e}")))?,
                scale: field(2).parse().map_err(|e| err(2, format!("{e}")))?,
                seconds: field(3).parse().map_err(|e| err(3, format!("{e}")))?,
                metric: field(4).parse().map_err(|e| err(4, format!("{e}")))?,
            });
        }
        Ok(ScalingReport { rows })
    }

    /// Time of the first row divided by the time of every row, paired with
    /// that row's worker count. Meaningful for strong scaling, where all
    /// rows process the same data.
    pub fn speedups(&self) -> Vec<(usize, f64)> {
        let Some(base) = self.rows.first() else {
            return Vec::new();
        };
        self.rows
            .iter()
            .map(|r| (r.workers, base.seconds / r.seconds))
            .collect()
    }
}
