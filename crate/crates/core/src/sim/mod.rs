//! Closed-loop tracking simulation.
//!
//! A scenario places a target in front of the mount, runs a synthetic
//! detector on every frame and closes the loop through the same control
//! stack a real mount would use:
//!
//! ```text
//! project → detect → (recapture state machine) → deviation → dead-band
//!         → adaptive gain → incremental PWM → saturate → servo substeps
//! ```
//!
//! Frames run at `frame_rate_hz` (30 Hz by default); the servos integrate
//! at roughly 1 ms with the command held constant between frames, and a
//! detection is acted upon one frame after it was captured. All randomness
//! comes from a ChaCha8 generator seeded by the scenario, so identical
//! scenarios give bit-identical traces.

mod detector;
mod engine;
mod metrics;
mod scenario;
mod trace;
mod world;

pub use detector::{in_center_region, Detection, FrameDraws};
pub use engine::{run_scenario, NOMINAL_SERVO_DT};
pub use metrics::{
    compare, iou_by_region, pwm_jitter, sampled_iou_means, settle_index, Comparison, Metrics, Retention,
    RETENTION_THRESHOLDS, SETTLE_DWELL_S,
};
pub use scenario::{
    payload_servo, ConfidenceModel, ControlConfig, DetectorModel, Scenario, ScenarioFile, TargetSize, Trajectory,
    SCHEMA_VERSION,
};
pub use trace::{Trace, TraceMeta, TraceRecord, CSV_COLUMNS};
pub use world::{project_target, relative_bearing, target_box, Pose, Projection, WorldPos};
