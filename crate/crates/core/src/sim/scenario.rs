//! Scenario description and its TOML file format.

use serde::{Deserialize, Serialize};

use crate::angle_map::{CameraModel, PwmConfig};
use crate::error::{Error, Result};
use crate::gain::{DeadBand, GainState};
use crate::recapture::SearchConfig;
use crate::servo::{PidGains, ServoParams};

/// Version of the scenario file schema understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

/// Target motion, expressed in the mount's world frame (x right, y down,
/// z forward, metres). All targets sit level with the camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trajectory {
    /// Constant-speed pass from left to right at a fixed depth, starting
    /// just outside the left edge of the initial field of view unless
    /// `start_x_m` is given.
    LinearPass {
        depth_m: f64,
        speed_m_s: f64,
        #[serde(default)]
        start_x_m: Option<f64>,
    },
    /// At rest on the optical axis until `start_s`, then constant lateral
    /// acceleration to the right until `end_m` of travel, then at rest.
    Accelerating {
        accel_m_s2: f64,
        end_m: f64,
        #[serde(default = "default_depth")]
        depth_m: f64,
        #[serde(default = "default_accel_start")]
        start_s: f64,
    },
    /// Stationary target `offset_deg` to the right of the initial axis.
    Step {
        offset_deg: f64,
        #[serde(default = "default_depth")]
        depth_m: f64,
    },
    /// Stationary target hidden during `[start_s, end_s)`; it reappears at
    /// `reappear_bearing_deg` (it moved while occluded).
    Occlusion {
        start_s: f64,
        end_s: f64,
        #[serde(default)]
        bearing_deg: f64,
        #[serde(default = "default_reappear")]
        reappear_bearing_deg: f64,
        #[serde(default = "default_depth")]
        depth_m: f64,
    },
}

fn default_depth() -> f64 {
    4.0
}

fn default_accel_start() -> f64 {
    1.0
}

fn default_reappear() -> f64 {
    40.0
}

/// Affine confidence model on the normalised distance `r ∈ [0, 1]` of the
/// detection from the image center (`r = 1` at a corner).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfidenceModel {
    pub at_center: f64,
    pub slope: f64,
    pub noise_std: f64,
}

impl Default for ConfidenceModel {
    fn default() -> Self {
        Self { at_center: 0.92, slope: -0.35, noise_std: 0.02 }
    }
}

/// Synthetic detector with explicit center-versus-edge degradation.
///
/// The "center" region is the central third of the image in each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorModel {
    /// Standard deviation of the detected center in the center region,
    /// pixels per axis.
    pub center_noise_px: f64,
    /// Multiplier on `center_noise_px` in the edge region (≥ 1): detectors
    /// localise worse off-center.
    pub edge_noise_scale: f64,
    pub miss_prob_center: f64,
    pub miss_prob_edge: f64,
    pub iou_center_mean: f64,
    pub iou_edge_mean: f64,
    /// Spread of the per-frame box-size IOU around its regional mean.
    pub iou_std: f64,
    pub confidence: ConfidenceModel,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            center_noise_px: 1.0,
            edge_noise_scale: 1.5,
            miss_prob_center: 0.0,
            miss_prob_edge: 0.02,
            iou_center_mean: 0.93,
            iou_edge_mean: 0.91,
            iou_std: 0.01,
            confidence: ConfidenceModel::default(),
        }
    }
}

/// Which control features are active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub deadband_on: bool,
    pub adaptive_k: bool,
    /// Coefficient used when `adaptive_k` is off.
    pub fixed_k: f64,
    /// When off the mount never moves (camera held at the neutral pose).
    pub servo_enabled: bool,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self { deadband_on: true, adaptive_k: true, fixed_k: 0.6, servo_enabled: true }
    }
}

/// Physical target size, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSize {
    pub width_m: f64,
    pub height_m: f64,
}

impl Default for TargetSize {
    /// A small ground robot seen side-on.
    fn default() -> Self {
        Self { width_m: 0.271, height_m: 0.151 }
    }
}

/// Servo plant for simulated runs: the bare servo plus a camera payload,
/// which triples the rotational inertia.
pub fn payload_servo() -> ServoParams {
    ServoParams { inertia: 3e-3, ..ServoParams::default() }
}

/// A complete, self-contained simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Used for the trace file name.
    #[serde(default = "default_name")]
    pub name: String,
    pub duration_s: f64,
    #[serde(default = "default_frame_rate")]
    pub frame_rate_hz: f64,
    #[serde(default)]
    pub seed: u64,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub detector: DetectorModel,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default)]
    pub pwm: PwmConfig,
    #[serde(default = "payload_servo")]
    pub servo: ServoParams,
    #[serde(default)]
    pub pid: PidGains,
    #[serde(default)]
    pub gain: GainState,
    #[serde(default)]
    pub deadband: DeadBand,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub target: TargetSize,
}

fn default_name() -> String {
    "trace".into()
}

fn default_frame_rate() -> f64 {
    30.0
}

impl Scenario {
    /// A scenario with default models around the given trajectory.
    pub fn new(name: &str, duration_s: f64, trajectory: Trajectory) -> Self {
        Self {
            name: name.into(),
            duration_s,
            frame_rate_hz: default_frame_rate(),
            seed: 0,
            trajectory,
            detector: DetectorModel::default(),
            control: ControlConfig::default(),
            camera: CameraModel::default(),
            pwm: PwmConfig::default(),
            servo: payload_servo(),
            pid: PidGains::default(),
            gain: GainState::default(),
            deadband: DeadBand::default(),
            search: SearchConfig::default(),
            target: TargetSize::default(),
        }
    }

    /// Checks every invariant; run before any simulation.
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(format!("scenario '{}': {msg}", self.name)));
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return cfg(format!("name {:?} is not a plain file stem", self.name));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return cfg(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.frame_rate_hz > 0.0 && self.frame_rate_hz.is_finite()) {
            return cfg(format!("frame_rate_hz must be positive, got {}", self.frame_rate_hz));
        }
        if self.frame_count() == 0 {
            return cfg("scenario is shorter than one frame".into());
        }
        self.camera.validate()?;
        self.pwm.validate()?;
        self.servo.validate()?;
        self.pid.validate()?;
        self.gain.validate()?;
        self.deadband.validate()?;
        self.search.validate()?;
        let c = &self.control;
        if !c.adaptive_k && !(self.gain.k_min <= c.fixed_k && c.fixed_k <= self.gain.k_max) {
            return cfg(format!("fixed_k {} outside [{}, {}]", c.fixed_k, self.gain.k_min, self.gain.k_max));
        }
        let d = &self.detector;
        for (name, p) in [("miss_prob_center", d.miss_prob_center), ("miss_prob_edge", d.miss_prob_edge)] {
            if !(0.0..=1.0).contains(&p) {
                return cfg(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, m) in [("iou_center_mean", d.iou_center_mean), ("iou_edge_mean", d.iou_edge_mean)] {
            if !(m > 0.0 && m <= 1.0) {
                return cfg(format!("{name} must lie in (0, 1], got {m}"));
            }
        }
        if d.iou_center_mean < d.iou_edge_mean {
            return cfg("iou_center_mean must be ≥ iou_edge_mean".into());
        }
        let spreads = [d.center_noise_px, d.iou_std, d.confidence.noise_std];
        if spreads.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return cfg("noise standard deviations must be finite and ≥ 0".into());
        }
        if !(d.edge_noise_scale >= 1.0 && d.edge_noise_scale.is_finite()) {
            return cfg(format!("edge_noise_scale must be ≥ 1, got {}", d.edge_noise_scale));
        }
        if !(d.confidence.at_center.is_finite() && d.confidence.slope.is_finite()) {
            return cfg("confidence model must be finite".into());
        }
        if !(self.target.width_m > 0.0 && self.target.height_m > 0.0) {
            return cfg("target size must be positive".into());
        }
        self.validate_trajectory()
    }

    fn validate_trajectory(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("scenario '{}': trajectory {msg}", self.name)));
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let bearing = |v: f64| v.is_finite() && v.abs() < 90.0;
        match self.trajectory {
            Trajectory::LinearPass { depth_m, speed_m_s, start_x_m } => {
                if !positive(depth_m) {
                    return bad("depth_m must be positive");
                }
                if !speed_m_s.is_finite() || start_x_m.is_some_and(|x| !x.is_finite()) {
                    return bad("speed and start must be finite");
                }
            }
            Trajectory::Accelerating { accel_m_s2, end_m, depth_m, start_s } => {
                if !positive(depth_m) || !positive(accel_m_s2) || !positive(end_m) {
                    return bad("accel_m_s2, end_m and depth_m must be positive");
                }
                if !(start_s >= 0.0 && start_s.is_finite()) {
                    return bad("start_s must be ≥ 0");
                }
            }
            Trajectory::Step { offset_deg, depth_m } => {
                if !positive(depth_m) || !bearing(offset_deg) {
                    return bad("needs depth_m > 0 and |offset_deg| < 90");
                }
            }
            Trajectory::Occlusion { start_s, end_s, bearing_deg, reappear_bearing_deg, depth_m } => {
                if !positive(depth_m) || !bearing(bearing_deg) || !bearing(reappear_bearing_deg) {
                    return bad("needs depth_m > 0 and bearings within ±90°");
                }
                if !(start_s >= 0.0 && start_s < end_s && end_s.is_finite()) {
                    return bad("needs 0 ≤ start_s < end_s");
                }
            }
        }
        Ok(())
    }

    pub fn frame_period(&self) -> f64 {
        1.0 / self.frame_rate_hz
    }

    /// Number of simulated frames (`duration·rate`, rounded).
    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.frame_rate_hz).round() as usize
    }

    /// `true` when the two scenarios differ at most in name and
    /// [`ControlConfig`], i.e. they form a meaningful comparison pair.
    pub fn same_setup(&self, other: &Scenario) -> bool {
        let strip = |s: &Scenario| Scenario { name: String::new(), control: ControlConfig::default(), ..s.clone() };
        strip(self) == strip(other)
    }
}

/// On-disk document: a schema version plus one or more scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    /// Parses and validates a TOML document.
    ///
    /// Syntax and type errors come back as [`Error::Parse`] with a 1-based
    /// position; semantic problems as [`Error::Config`].
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map(|span| line_column(text, span.start)).unwrap_or((1, 1));
            Error::Parse { line, column, message: e.message().to_string() }
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("file defines no scenarios".into()));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            s.validate()?;
            if self.scenarios[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Config(format!("duplicate scenario name '{}'", s.name)));
            }
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario types serialise to TOML")
    }
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1

[[scenario]]
duration_s = 2.0

[scenario.trajectory]
kind = "step"
offset_deg = 10.0
"#;

    #[test]
    fn minimal_file_uses_defaults() {
        let f = ScenarioFile::from_toml_str(MINIMAL).unwrap();
        let s = &f.scenarios[0];
        assert_eq!(s.name, "trace");
        assert_eq!(s.frame_rate_hz, 30.0);
        assert_eq!(s.trajectory, Trajectory::Step { offset_deg: 10.0, depth_m: 4.0 });
        assert_eq!(s.servo.inertia, 3e-3);
        assert_eq!(s.frame_count(), 60);
    }

    #[test]
    fn round_trips_through_toml() {
        let f = ScenarioFile::from_toml_str(MINIMAL).unwrap();
        let again = ScenarioFile::from_toml_str(&f.to_toml_string()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = "schema_version = 1\n[[scenario]]\nduration_s = = 2\n";
        match ScenarioFile::from_toml_str(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_parse_error() {
        let text = MINIMAL.replace("duration_s = 2.0", "duration_s = 2.0\nbogus = 1");
        assert!(matches!(ScenarioFile::from_toml_str(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn semantic_problems_are_config_errors() {
        let text = MINIMAL.replace("duration_s = 2.0", "duration_s = -2.0");
        assert!(matches!(ScenarioFile::from_toml_str(&text), Err(Error::Config(_))));
        let text = MINIMAL.replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(ScenarioFile::from_toml_str(&text), Err(Error::Config(_))));
        let text = format!("{MINIMAL}\n[scenario.control]\nadaptive_k = false\nfixed_k = 0.9\n");
        assert!(matches!(ScenarioFile::from_toml_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn same_setup_ignores_control_only() {
        let a = Scenario::new("a", 1.0, Trajectory::Step { offset_deg: 5.0, depth_m: 4.0 });
        let mut b = a.clone();
        b.name = "b".into();
        b.control.deadband_on = false;
        assert!(a.same_setup(&b));
        b.trajectory = Trajectory::Step { offset_deg: 6.0, depth_m: 4.0 };
        assert!(!a.same_setup(&b));
    }

    #[test]
    fn line_column_is_one_based() {
        assert_eq!(line_column("ab\ncd", 0), (1, 1));
        assert_eq!(line_column("ab\ncd", 4), (2, 2));
    }
}
