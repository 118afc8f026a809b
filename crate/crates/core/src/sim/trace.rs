//! Per-frame trace records and their serialisations.
//!
//! CSV columns, in order: `t_s, target_x_px, target_y_px, detected,
//! confidence, dev_h_deg, dev_v_deg, gain_k, pwm_h_us, pwm_v_us,
//! servo_h_deg, servo_v_deg, mode, iou`. Absent values are empty cells.

use serde::Serialize;

use crate::angle_map::{CameraModel, PwmConfig};

/// CSV header, fixed.
pub const CSV_COLUMNS: [&str; 14] = [
    "t_s",
    "target_x_px",
    "target_y_px",
    "detected",
    "confidence",
    "dev_h_deg",
    "dev_v_deg",
    "gain_k",
    "pwm_h_us",
    "pwm_v_us",
    "servo_h_deg",
    "servo_v_deg",
    "mode",
    "iou",
];

/// State of one frame.
///
/// Capture fields (`target_*`, `detected`, `confidence`, `dev_*`, `iou`,
/// `servo_*`) describe the image taken at `t_s`. Control fields (`gain_k`,
/// `pwm_*`, `mode`) describe the controller after it processed the
/// previous frame's detection — the command held during `[t_s, t_s + 1/fps)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t_s: f64,
    /// True target center in pixels; absent when out of frame.
    pub target_x_px: Option<f64>,
    pub target_y_px: Option<f64>,
    pub detected: bool,
    pub confidence: Option<f64>,
    /// Deviation measured from this frame's detection.
    pub dev_h_deg: Option<f64>,
    pub dev_v_deg: Option<f64>,
    pub gain_k: f64,
    pub pwm_h_us: f64,
    pub pwm_v_us: f64,
    pub servo_h_deg: f64,
    pub servo_v_deg: f64,
    pub mode: &'static str,
    pub iou: Option<f64>,
}

/// Run parameters needed to interpret a trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMeta {
    pub name: String,
    pub seed: u64,
    pub frame_period_s: f64,
    pub camera: CameraModel,
    pub pwm: PwmConfig,
    /// Band used for the settle-time metric.
    pub deadband_deg: f64,
    /// Full round-trip period of the recapture sweep.
    pub sweep_period_s: f64,
}

/// One scenario run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    /// CSV rendering with the fixed header.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.records {
            w.serialize(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
    }

    /// JSON array of records.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.records).expect("records serialise to JSON")
    }
}
