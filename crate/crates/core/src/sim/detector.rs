//! Synthetic detector.
//!
//! Every frame consumes the same fixed number of random draws whether or
//! not the target is visible, so two runs that differ only in control
//! settings see identical noise sequences.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::angle_map::{BoundingBox, CameraModel};
use crate::gain::iou;

use super::scenario::DetectorModel;

/// Random numbers for one frame.
#[derive(Debug, Clone, Copy)]
pub struct FrameDraws {
    noise_x: f64,
    noise_y: f64,
    miss: f64,
    iou: f64,
    confidence: f64,
}

impl FrameDraws {
    pub fn sample(rng: &mut ChaCha8Rng) -> Self {
        let mut n = || -> f64 { StandardNormal.sample(rng) };
        let (noise_x, noise_y) = (n(), n());
        let (iou, confidence) = (n(), n());
        Self { noise_x, noise_y, miss: rng.gen::<f64>(), iou, confidence }
    }
}

/// One detector output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub confidence: f64,
    /// Overlap with the ground-truth box.
    pub iou: f64,
}

/// `true` when `(x, y)` lies in the central third of the image in both axes.
pub fn in_center_region(x: f64, y: f64, cam: &CameraModel) -> bool {
    (x - cam.width_px / 2.0).abs() <= cam.width_px / 6.0 && (y - cam.height_px / 2.0).abs() <= cam.height_px / 6.0
}

impl DetectorModel {
    /// Detects a visible ground-truth box.
    ///
    /// The detected box is the true box enlarged concentrically by
    /// `1/√iou` for an IOU drawn around the regional mean, then shifted by
    /// Gaussian center noise (wider in the edge region).
    pub fn detect(&self, truth: &BoundingBox, cam: &CameraModel, draws: &FrameDraws) -> Option<Detection> {
        let central = in_center_region(truth.cx, truth.cy, cam);
        let (miss_p, iou_mean, sigma) = if central {
            (self.miss_prob_center, self.iou_center_mean, self.center_noise_px)
        } else {
            (self.miss_prob_edge, self.iou_edge_mean, self.center_noise_px * self.edge_noise_scale)
        };
        if draws.miss < miss_p {
            return None;
        }
        let size_iou = (iou_mean + self.iou_std * draws.iou).clamp(0.05, 1.0);
        let scale = 1.0 / size_iou.sqrt();
        let bbox = BoundingBox::new(
            truth.cx + sigma * draws.noise_x,
            truth.cy + sigma * draws.noise_y,
            truth.w * scale,
            truth.h * scale,
        );
        let r = (bbox.cx - cam.width_px / 2.0).hypot(bbox.cy - cam.height_px / 2.0) / (cam.diagonal() / 2.0);
        let c = &self.confidence;
        let confidence = (c.at_center + c.slope * r + c.noise_std * draws.confidence).clamp(0.0, 1.0);
        Some(Detection { bbox, confidence, iou: iou(&bbox, truth) })
    }
}
