//! Per-epoch training metrics as CSV: a fixed header, one row per epoch,
//! UTF-8 with LF line endings. Floats are written in Rust's shortest
//! round-trip form, so a parsed file reproduces the values bit for bit.

use std::fs;
use std::path::Path;

use crate::error::{AppError, Result};

pub const METRICS_HEADER: &str = "epoch,step,lr,train_loss,train_acc,val_acc,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    /// 1-based epoch index.
    pub epoch: usize,
    /// Global optimizer step count at the end of the epoch.
    pub step: u64,
    /// Learning rate of the final step of the epoch.
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    /// Wall-clock milliseconds; zero in reference mode, where output files
    /// must be identical across reruns and timing goes to the console.
    pub wall_ms: u64,
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.epoch, self.step, self.lr, self.train_loss, self.train_acc, self.val_acc,
            self.wall_ms
        )
    }
}

/// Renders header plus rows, LF-terminated.
pub fn render_metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    fs::write(path, render_metrics_csv(rows)).map_err(|e| AppError::io(path, e))
}

fn parse_field<T: core::str::FromStr>(field: &str, name: &str, line_no: usize) -> Result<T> {
    field.parse().map_err(|_| {
        AppError::Format(format!(
            "metrics line {line_no}: cannot parse {name} from {field:?}"
        ))
    })
}

/// Parses a metrics CSV produced by [`render_metrics_csv`], validating the
/// header and every field.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == METRICS_HEADER => {}
        other => {
            return Err(AppError::Format(format!(
                "bad metrics header: {other:?} (expected {METRICS_HEADER:?})"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(AppError::Format(format!(
                "metrics line {line_no}: expected 7 fields, got {}",
                fields.len()
            )));
        }
        rows.push(MetricsRow {
            epoch: parse_field(fields[0], "epoch", line_no)?,
            step: parse_field(fields[1], "step", line_no)?,
            lr: parse_field(fields[2], "lr", line_no)?,
            train_loss: parse_field(fields[3], "train_loss", line_no)?,
            train_acc: parse_field(fields[4], "train_acc", line_no)?,
            val_acc: parse_field(fields[5], "val_acc", line_no)?,
            wall_ms: parse_field(fields[6], "wall_ms", line_no)?,
        });
    }
    Ok(rows)
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    parse_metrics_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<MetricsRow> {
        vec![
            MetricsRow {
                epoch: 1,
                step: 7,
                lr: 0.004,
                train_loss: 2.302585092994046,
                train_acc: 0.1015625,
                val_acc: 0.1,
                wall_ms: 0,
            },
            MetricsRow {
                epoch: 2,
                step: 14,
                lr: 0.0021333333333333334,
                train_loss: 1.75,
                train_acc: 0.5,
                val_acc: 0.42,
                wall_ms: 0,
            },
        ]
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let rows = sample_rows();
        let text = render_metrics_csv(&rows);
        assert!(text.starts_with(METRICS_HEADER));
        assert!(text.ends_with('\n'));
        assert!(!text.contains('\r'));
        assert_eq!(parse_metrics_csv(&text).unwrap(), rows);
    }

    #[test]
    fn shortest_float_form_survives_reparse_bitwise() {
        let rows = sample_rows();
        let reparsed = parse_metrics_csv(&render_metrics_csv(&rows)).unwrap();
        for (a, b) in rows.iter().zip(&reparsed) {
            assert_eq!(a.lr.to_bits(), b.lr.to_bits());
            assert_eq!(a.train_loss.to_bits(), b.train_loss.to_bits());
        }
    }

    #[test]
    fn header_and_field_errors_are_rejected() {
        assert!(parse_metrics_csv("nope\n1,2,3,4,5,6,7\n").is_err());
        assert!(parse_metrics_csv(&format!("{METRICS_HEADER}\n1,2,3\n")).is_err());
        assert!(parse_metrics_csv(&format!("{METRICS_HEADER}\nx,2,3,4,5,6,7\n")).is_err());
        assert!(parse_metrics_csv(&format!("{METRICS_HEADER}\n")).unwrap().is_empty());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metrics_csv(&path, &sample_rows()).unwrap();
        assert_eq!(read_metrics_csv(&path).unwrap(), sample_rows());
    }
}
