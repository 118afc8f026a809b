//! Pixel position → deviation angles → servo pulse widths.
//!
//! Sign convention: `dx = cx − width/2` is positive to the right and
//! `dy = cy − height/2` is positive downwards. The horizontal pulse width
//! *decreases* for a positive horizontal deviation and the vertical pulse
//! width *increases* for a positive vertical deviation; either axis can be
//! flipped through [`PwmConfig`].

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Pinhole-free camera description: field of view and sensor resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    /// Horizontal field of view in degrees.
    pub fov_h_deg: f64,
    /// Vertical field of view in degrees.
    pub fov_v_deg: f64,
    /// Image width in pixels.
    pub width_px: f64,
    /// Image height in pixels.
    pub height_px: f64,
}

impl Default for CameraModel {
    /// 60°×45° field of view at 640×480.
    fn default() -> Self {
        Self { fov_h_deg: 60.0, fov_v_deg: 45.0, width_px: 640.0, height_px: 480.0 }
    }
}

impl CameraModel {
    /// Checks field-of-view and resolution invariants.
    pub fn validate(&self) -> Result<()> {
        for (name, fov) in [("fov_h_deg", self.fov_h_deg), ("fov_v_deg", self.fov_v_deg)] {
            if !(fov > 0.0 && fov < 180.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 180), got {fov}")));
            }
        }
        for (name, px) in [("width_px", self.width_px), ("height_px", self.height_px)] {
            if !(px > 0.0 && px.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {px}")));
            }
        }
        Ok(())
    }

    /// Image center in pixels.
    pub fn center(&self) -> (f64, f64) {
        (self.width_px / 2.0, self.height_px / 2.0)
    }

    /// Length of the image diagonal in pixels.
    pub fn diagonal(&self) -> f64 {
        self.width_px.hypot(self.height_px)
    }
}

/// Axis-aligned box in center format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { cx, cy, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// Horizontal and vertical deviation of the target from the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DeviationAngles {
    /// Positive when the target is right of center.
    pub h_deg: f64,
    /// Positive when the target is below center.
    pub v_deg: f64,
}

impl DeviationAngles {
    pub fn new(h_deg: f64, v_deg: f64) -> Self {
        Self { h_deg, v_deg }
    }
}

/// Servo pulse-width constants and output limits.
///
/// `a_max_us`/`b_min_us` span the full mechanical travel of `range_deg`;
/// `c_center_us` is the neutral pulse. `pwm_min_us`/`pwm_max_us` are the
/// saturation limits and may be tighter than the mechanical span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PwmConfig {
    pub a_max_us: f64,
    pub b_min_us: f64,
    pub c_center_us: f64,
    pub range_deg: f64,
    pub pwm_min_us: f64,
    pub pwm_max_us: f64,
    /// Flip the horizontal mapping (`C + …` instead of `C − …`).
    pub invert_h: bool,
    /// Flip the vertical mapping (`C − …` instead of `C + …`).
    pub invert_v: bool,
}

impl Default for PwmConfig {
    /// Standard 270° digital RC servo: 500–2500 µs, neutral 1500 µs.
    fn default() -> Self {
        Self {
            a_max_us: 2500.0,
            b_min_us: 500.0,
            c_center_us: 1500.0,
            range_deg: 270.0,
            pwm_min_us: 500.0,
            pwm_max_us: 2500.0,
            invert_h: false,
            invert_v: false,
        }
    }
}

impl PwmConfig {
    /// Checks `a > b` and `b ≤ min ≤ c ≤ max ≤ a`.
    pub fn validate(&self) -> Result<()> {
        let all = [self.a_max_us, self.b_min_us, self.c_center_us, self.range_deg, self.pwm_min_us, self.pwm_max_us];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("pwm constants must be finite".into()));
        }
        if self.a_max_us <= self.b_min_us {
            return Err(Error::Config(format!(
                "a_max_us ({}) must exceed b_min_us ({})",
                self.a_max_us, self.b_min_us
            )));
        }
        if self.range_deg <= 0.0 {
            return Err(Error::Config(format!("range_deg must be positive, got {}", self.range_deg)));
        }
        let ordered = self.b_min_us <= self.pwm_min_us
            && self.pwm_min_us <= self.c_center_us
            && self.c_center_us <= self.pwm_max_us
            && self.pwm_max_us <= self.a_max_us;
        if !ordered {
            return Err(Error::Config(format!(
                "pwm limits must satisfy b ≤ min ≤ c ≤ max ≤ a, got {} ≤ {} ≤ {} ≤ {} ≤ {}",
                self.b_min_us, self.pwm_min_us, self.c_center_us, self.pwm_max_us, self.a_max_us
            )));
        }
        Ok(())
    }

    /// Microseconds of pulse width per degree of shaft rotation.
    pub fn us_per_deg(&self) -> f64 {
        (self.a_max_us - self.b_min_us) / self.range_deg
    }

    /// Sign relating horizontal deviation to horizontal pulse change
    /// (−1 unless inverted).
    pub fn h_sign(&self) -> f64 {
        if self.invert_h {
            1.0
        } else {
            -1.0
        }
    }

    /// Sign relating vertical deviation to vertical pulse change
    /// (+1 unless inverted).
    pub fn v_sign(&self) -> f64 {
        if self.invert_v {
            -1.0
        } else {
            1.0
        }
    }
}

/// A pair of pulse widths, one per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwmCommand {
    pub pwm_h_us: f64,
    pub pwm_v_us: f64,
}

impl PwmCommand {
    pub fn new(pwm_h_us: f64, pwm_v_us: f64) -> Self {
        Self { pwm_h_us, pwm_v_us }
    }

    /// Both axes at the neutral pulse.
    pub fn neutral(cfg: &PwmConfig) -> Self {
        Self::new(cfg.c_center_us, cfg.c_center_us)
    }

    /// Saturates both axes.
    pub fn saturated(self, cfg: &PwmConfig) -> Self {
        Self::new(saturate(self.pwm_h_us, cfg), saturate(self.pwm_v_us, cfg))
    }
}

/// Deviation angles of a target center: `H = dx·θx/w`, `V = dy·θy/h`.
pub fn compute_deviation(target: &BoundingBox, cam: &CameraModel) -> Result<DeviationAngles> {
    ensure_finite("target cx", target.cx)?;
    ensure_finite("target cy", target.cy)?;
    let (x0, y0) = cam.center();
    Ok(DeviationAngles {
        h_deg: (target.cx - x0) * cam.fov_h_deg / cam.width_px,
        v_deg: (target.cy - y0) * cam.fov_v_deg / cam.height_px,
    })
}

/// Unsaturated pulse widths: `C − (A−B)·H/270`, `C + (A−B)·V/270`.
pub fn angle_to_pwm(dev: &DeviationAngles, cfg: &PwmConfig) -> PwmCommand {
    let span = cfg.a_max_us - cfg.b_min_us;
    PwmCommand {
        pwm_h_us: cfg.c_center_us + cfg.h_sign() * (span * dev.h_deg) / cfg.range_deg,
        pwm_v_us: cfg.c_center_us + cfg.v_sign() * (span * dev.v_deg) / cfg.range_deg,
    }
}

/// Clamps a pulse width into `[pwm_min_us, pwm_max_us]`.
pub fn saturate(pwm: f64, cfg: &PwmConfig) -> f64 {
    pwm.max(cfg.pwm_min_us).min(cfg.pwm_max_us)
}

/// Shaft angle commanded by a pulse width: `(pwm − C)·270/(A−B)` degrees.
pub fn pwm_to_angle(pwm: f64, cfg: &PwmConfig) -> Result<f64> {
    ensure_finite("pwm", pwm)?;
    if pwm < cfg.b_min_us || pwm > cfg.a_max_us {
        return Err(Error::Domain(format!("pwm {pwm} µs outside [{}, {}]", cfg.b_min_us, cfg.a_max_us)));
    }
    Ok((pwm - cfg.c_center_us) * cfg.range_deg / (cfg.a_max_us - cfg.b_min_us))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraModel {
        CameraModel::default()
    }

    #[test]
    fn centered_target_has_zero_deviation() {
        let d = compute_deviation(&BoundingBox::new(320.0, 240.0, 10.0, 10.0), &cam()).unwrap();
        assert_eq!(d, DeviationAngles::new(0.0, 0.0));
    }

    #[test]
    fn right_border_is_half_fov() {
        let d = compute_deviation(&BoundingBox::new(640.0, 240.0, 0.0, 0.0), &cam()).unwrap();
        assert_eq!(d.h_deg, 30.0);
        assert_eq!(d.v_deg, 0.0);
    }

    #[test]
    fn top_border_is_negative_half_vertical_fov() {
        let d = compute_deviation(&BoundingBox::new(320.0, 0.0, 0.0, 0.0), &cam()).unwrap();
        assert_eq!(d.v_deg, -22.5);
    }

    #[test]
    fn non_finite_center_is_rejected() {
        let r = compute_deviation(&BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0), &cam());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn pwm_examples() {
        let cfg = PwmConfig::default();
        assert_eq!(angle_to_pwm(&DeviationAngles::new(0.0, 0.0), &cfg), PwmCommand::new(1500.0, 1500.0));
        assert_eq!(angle_to_pwm(&DeviationAngles::new(27.0, 0.0), &cfg).pwm_h_us, 1300.0);
        assert_eq!(angle_to_pwm(&DeviationAngles::new(0.0, -13.5), &cfg).pwm_v_us, 1400.0);
    }

    #[test]
    fn inverted_axes_flip_around_center() {
        let cfg = PwmConfig { invert_h: true, invert_v: true, ..PwmConfig::default() };
        let p = angle_to_pwm(&DeviationAngles::new(27.0, -13.5), &cfg);
        assert_eq!(p, PwmCommand::new(1700.0, 1600.0));
    }

    #[test]
    fn saturate_examples() {
        let cfg = PwmConfig::default();
        assert_eq!(saturate(1500.0, &cfg), 1500.0);
        assert_eq!(saturate(3000.0, &cfg), 2500.0);
        assert_eq!(saturate(100.0, &cfg), 500.0);
    }

    #[test]
    fn inverse_mapping_examples() {
        let cfg = PwmConfig::default();
        assert_eq!(pwm_to_angle(1500.0, &cfg).unwrap(), 0.0);
        assert_eq!(pwm_to_angle(1300.0, &cfg).unwrap(), -27.0);
        assert_eq!(pwm_to_angle(2500.0, &cfg).unwrap(), 135.0);
        assert!(matches!(pwm_to_angle(2600.0, &cfg), Err(Error::Domain(_))));
        assert!(matches!(pwm_to_angle(499.0, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn config_validation() {
        assert!(PwmConfig::default().validate().is_ok());
        let bad = PwmConfig { pwm_min_us: 1600.0, ..PwmConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = PwmConfig { a_max_us: 400.0, ..PwmConfig::default() };
        assert!(bad.validate().is_err());
        assert!(cam().validate().is_ok());
        assert!(CameraModel { fov_h_deg: 180.0, ..cam() }.validate().is_err());
        assert!(CameraModel { width_px: 0.0, ..cam() }.validate().is_err());
    }
}
