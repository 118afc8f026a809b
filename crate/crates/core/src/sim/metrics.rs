//! Scalar summaries of a trace.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::angle_map::{compute_deviation, BoundingBox};
use crate::error::{Error, Result};
use crate::gain::efficiency;

use super::detector::in_center_region;
use super::trace::{Trace, TraceRecord};

/// How long the target must stay inside the band to count as settled.
pub const SETTLE_DWELL_S: f64 = 0.5;

/// Confidence thresholds reported in [`Metrics::confidence_retention`].
pub const RETENTION_THRESHOLDS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

/// Fraction of in-frame samples whose confidence reaches a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Retention {
    pub threshold: f64,
    pub fraction: f64,
}

/// Summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// Start of the first 0.5 s window in which the true deviation stays
    /// inside the dead-band on both axes; absent if that never happens.
    pub settle_time_s: Option<f64>,
    /// RMS pixel distance of the true target from the image center over
    /// in-frame frames.
    pub rms_error_px: Option<f64>,
    /// `√(σ²_h + σ²_v)` of frame-to-frame command changes from the settle
    /// frame on (whole run if never settled).
    pub pwm_jitter_us: f64,
    pub mean_iou_center: Option<f64>,
    pub mean_iou_edge: Option<f64>,
    pub confidence_retention: Vec<Retention>,
    /// Efficiency against a paired baseline; only set by [`compare`].
    pub eta_vs: Option<f64>,
}

/// True per-axis deviation of a record, if the target is in frame.
fn true_deviation(r: &TraceRecord, trace: &Trace) -> Option<(f64, f64)> {
    let (x, y) = (r.target_x_px?, r.target_y_px?);
    let d = compute_deviation(&BoundingBox::new(x, y, 0.0, 0.0), &trace.meta.camera).ok()?;
    Some((d.h_deg, d.v_deg))
}

/// Index of the first frame that opens a full in-band dwell window.
pub fn settle_index(trace: &Trace) -> Option<usize> {
    let band = trace.meta.deadband_deg;
    let dwell = (SETTLE_DWELL_S / trace.meta.frame_period_s - 1e-9).ceil().max(1.0) as usize;
    let inside: Vec<bool> = trace
        .records
        .iter()
        .map(|r| true_deviation(r, trace).is_some_and(|(h, v)| h.abs() < band && v.abs() < band))
        .collect();
    let mut run = 0;
    for (i, &ok) in inside.iter().enumerate() {
        run = if ok { run + 1 } else { 0 };
        if run == dwell {
            return Some(i + 1 - dwell);
        }
    }
    None
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Jitter of the command sequence from record `from` on.
pub fn pwm_jitter(records: &[TraceRecord], from: usize) -> f64 {
    let tail = &records[from.min(records.len())..];
    let deltas = |f: fn(&TraceRecord) -> f64| -> Vec<f64> { tail.windows(2).map(|w| f(&w[1]) - f(&w[0])).collect() };
    let h = std_dev(&deltas(|r| r.pwm_h_us));
    let v = std_dev(&deltas(|r| r.pwm_v_us));
    h.hypot(v)
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// IOUs of detected frames, split by where the true target sat.
pub fn iou_by_region(trace: &Trace) -> (Vec<f64>, Vec<f64>) {
    let (mut center, mut edge) = (Vec::new(), Vec::new());
    for r in &trace.records {
        if let (Some(x), Some(y), Some(iou)) = (r.target_x_px, r.target_y_px, r.iou) {
            if in_center_region(x, y, &trace.meta.camera) {
                center.push(iou);
            } else {
                edge.push(iou);
            }
        }
    }
    (center, edge)
}

/// Mean IOU of `n` frames drawn without replacement from each region.
///
/// Fails if either region has fewer than `n` detected frames.
pub fn sampled_iou_means(trace: &Trace, n: usize, seed: u64) -> Result<(f64, f64)> {
    let (mut center, mut edge) = iou_by_region(trace);
    if center.len() < n || edge.len() < n || n == 0 {
        return Err(Error::Domain(format!(
            "need {n} detected frames per region, have {} center and {} edge",
            center.len(),
            edge.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    center.shuffle(&mut rng);
    edge.shuffle(&mut rng);
    let m = |xs: &[f64]| xs[..n].iter().sum::<f64>() / n as f64;
    Ok((m(&center), m(&edge)))
}

impl Metrics {
    /// Summarises one trace.
    pub fn from_trace(trace: &Trace) -> Result<Self> {
        if trace.records.is_empty() {
            return Err(Error::Domain("cannot summarise an empty trace".into()));
        }
        let settle = settle_index(trace);
        let period = trace.meta.frame_period_s;
        let cam = &trace.meta.camera;
        let (x0, y0) = cam.center();

        let sq: Vec<f64> = trace
            .records
            .iter()
            .filter_map(|r| Some((r.target_x_px? - x0).powi(2) + (r.target_y_px? - y0).powi(2)))
            .collect();
        let (center, edge) = iou_by_region(trace);

        let in_frame: Vec<&TraceRecord> = trace.records.iter().filter(|r| r.target_x_px.is_some()).collect();
        let confidence_retention = RETENTION_THRESHOLDS
            .iter()
            .map(|&threshold| {
                let kept = in_frame.iter().filter(|r| r.confidence.is_some_and(|c| c >= threshold)).count();
                let fraction = if in_frame.is_empty() { 0.0 } else { kept as f64 / in_frame.len() as f64 };
                Retention { threshold, fraction }
            })
            .collect();

        Ok(Self {
            settle_time_s: settle.map(|i| i as f64 * period),
            rms_error_px: mean(&sq).map(f64::sqrt),
            pwm_jitter_us: pwm_jitter(&trace.records, settle.unwrap_or(0)),
            mean_iou_center: mean(&center),
            mean_iou_edge: mean(&edge),
            confidence_retention,
            eta_vs: None,
        })
    }
}

/// Paired summary of a baseline and a candidate run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: Metrics,
    pub candidate: Metrics,
    /// `candidate − baseline`.
    pub jitter_delta_us: f64,
    /// `candidate − baseline`, when both are present.
    pub rms_delta_px: Option<f64>,
}

/// Compares two traces; the candidate's `eta_vs` is its efficiency against
/// the baseline settle time (absent unless both settled and the baseline
/// took a positive time).
pub fn compare(baseline: &Trace, candidate: &Trace) -> Result<Comparison> {
    let base = Metrics::from_trace(baseline)?;
    let mut cand = Metrics::from_trace(candidate)?;
    cand.eta_vs = match (cand.settle_time_s, base.settle_time_s) {
        (Some(tw), Some(tw0)) if tw0 > 0.0 => Some(efficiency(tw, tw0)?),
        (Some(tw), Some(tw0)) if tw == tw0 => Some(0.0),
        _ => None,
    };
    Ok(Comparison {
        jitter_delta_us: cand.pwm_jitter_us - base.pwm_jitter_us,
        rms_delta_px: cand.rms_error_px.zip(base.rms_error_px).map(|(c, b)| c - b),
        baseline: base,
        candidate: cand,
    })
}
