//! Adaptive intelligent coefficient, dead-band decision and scalar metrics.
//!
//! The coefficient `K` scales deviation angles before pulse conversion.
//! Each observation of the target's pixel distance `d` from the image
//! center nudges it by `±γ`:
//!
//! ```text
//! Δd = d_t − d_{t−1}·(1 − K_{t−1})
//! K_t = clamp(K_{t−1} + γ·sgn(Δd), K_min, K_max),   sgn(0) = +1
//! ```
//!
//! A target receding faster than the last correction predicts raises `K`;
//! one closing in lowers it.

use serde::{Deserialize, Serialize};

use crate::angle_map::{BoundingBox, DeviationAngles};
use crate::error::{ensure_finite, Error, Result};

/// Coefficient state for one tracker (both axes share a single `K`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainState {
    pub gain_k: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub gamma: f64,
    /// Distance observed at the previous update, pixels.
    pub prev_distance: f64,
}

impl Default for GainState {
    /// `K = 0.4` within `[0.2, 0.6]`, `γ = 0.1`.
    fn default() -> Self {
        Self { gain_k: 0.4, k_min: 0.2, k_max: 0.6, gamma: 0.1, prev_distance: 0.0 }
    }
}

impl GainState {
    pub fn validate(&self) -> Result<()> {
        let ok = self.k_min <= self.gain_k
            && self.gain_k <= self.k_max
            && self.gamma > 0.0
            && self.prev_distance >= 0.0
            && [self.gain_k, self.k_min, self.k_max, self.gamma, self.prev_distance].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "gain state needs k_min ≤ gain_k ≤ k_max, gamma > 0, prev_distance ≥ 0, got {self:?}"
            )))
        }
    }
}

/// One coefficient update from the current target distance.
pub fn update_gain(state: &GainState, distance_now: f64) -> Result<GainState> {
    ensure_finite("distance", distance_now)?;
    if distance_now < 0.0 {
        return Err(Error::Domain(format!("distance must be non-negative, got {distance_now}")));
    }
    let delta = distance_now - state.prev_distance * (1.0 - state.gain_k);
    let sign = if delta >= 0.0 { 1.0 } else { -1.0 };
    let gain_k = (state.gain_k + state.gamma * sign).clamp(state.k_min, state.k_max);
    Ok(GainState { gain_k, prev_distance: distance_now, ..*state })
}

/// Scales both deviation axes by `K`.
pub fn apply_gain(dev: &DeviationAngles, gain_k: f64) -> DeviationAngles {
    DeviationAngles::new(dev.h_deg * gain_k, dev.v_deg * gain_k)
}

/// Angular decision boundary inside which no correction is issued.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeadBand {
    pub threshold_deg: f64,
}

impl Default for DeadBand {
    fn default() -> Self {
        Self { threshold_deg: 2.0 }
    }
}

impl DeadBand {
    pub fn validate(&self) -> Result<()> {
        if self.threshold_deg >= 0.0 && self.threshold_deg.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("dead-band threshold must be ≥ 0, got {}", self.threshold_deg)))
        }
    }

    /// Strict per-axis containment test.
    pub fn contains(&self, dev: &DeviationAngles) -> bool {
        dev.h_deg.abs() < self.threshold_deg && dev.v_deg.abs() < self.threshold_deg
    }
}

/// Outcome of the dead-band test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeadBandDecision {
    /// Target treated as centered; keep the current command.
    Hold,
    /// Correct by the (unchanged) deviation.
    Adjust(DeviationAngles),
}

/// `Hold` iff `|H| < threshold` and `|V| < threshold`.
pub fn apply_deadband(dev: &DeviationAngles, db: &DeadBand) -> DeadBandDecision {
    if db.contains(dev) {
        DeadBandDecision::Hold
    } else {
        DeadBandDecision::Adjust(*dev)
    }
}

/// Intersection over union of two center-format boxes; 0 for a zero union.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let overlap = |c1: f64, s1: f64, c2: f64, s2: f64| {
        let lo = (c1 - s1 / 2.0).max(c2 - s2 / 2.0);
        let hi = (c1 + s1 / 2.0).min(c2 + s2 / 2.0);
        (hi - lo).max(0.0)
    };
    let inter = overlap(a.cx, a.w, b.cx, b.w) * overlap(a.cy, a.h, b.cy, b.h);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Tracking-efficiency improvement `η = (1 − T_w/T_w0)·100` in percent.
pub fn efficiency(t_with: f64, t_without: f64) -> Result<f64> {
    ensure_finite("t_with", t_with)?;
    ensure_finite("t_without", t_without)?;
    if t_without <= 0.0 {
        return Err(Error::Domain(format!("baseline time must be positive, got {t_without}")));
    }
    if t_with < 0.0 {
        return Err(Error::Domain(format!("time must be non-negative, got {t_with}")));
    }
    Ok((1.0 - t_with / t_without) * 100.0)
}
