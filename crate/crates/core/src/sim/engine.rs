//! Closed-loop scenario runner.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::angle_map::{angle_to_pwm, compute_deviation, PwmCommand};
use crate::error::Result;
use crate::gain::{apply_deadband, apply_gain, update_gain, DeadBandDecision};
use crate::recapture::{on_frame, search_step, TrackerMode};
use crate::servo::{servo_track, PidState, ServoState};

use super::detector::{Detection, FrameDraws};
use super::scenario::Scenario;
use super::trace::{Trace, TraceMeta, TraceRecord};
use super::world::{project_target, target_box, Pose, Projection};

/// Nominal servo integration step; the actual step divides the frame
/// period evenly.
pub const NOMINAL_SERVO_DT: f64 = 1e-3;

/// Controller memory carried from frame to frame.
struct Controller<'a> {
    s: &'a Scenario,
    mode: TrackerMode,
    frames_missed: u32,
    gain: crate::gain::GainState,
    /// Whether `gain.prev_distance` holds an observation from the current
    /// tracking episode.
    gain_primed: bool,
    command: PwmCommand,
}

impl<'a> Controller<'a> {
    fn new(s: &'a Scenario) -> Self {
        Self {
            s,
            // No correction has been issued yet: the mount holds its pose.
            mode: TrackerMode::Holding,
            frames_missed: 0,
            gain: s.gain,
            gain_primed: false,
            command: PwmCommand::neutral(&s.pwm),
        }
    }

    fn gain_k(&self) -> f64 {
        if self.s.control.adaptive_k {
            self.gain.gain_k
        } else {
            self.s.control.fixed_k
        }
    }

    /// Processes one (possibly missing) detection and updates the command.
    fn process(&mut self, detection: Option<&Detection>) -> Result<()> {
        let s = self.s;
        self.frames_missed = if detection.is_some() { 0 } else { self.frames_missed.saturating_add(1) };
        let was_searching = self.mode.is_searching();
        self.mode =
            on_frame(self.mode, detection.is_some(), self.frames_missed, &s.search, self.command.pwm_h_us, &s.pwm);

        if let TrackerMode::Searching(dir) = self.mode {
            if !was_searching {
                // A new episode starts at reacquisition; the old distance
                // says nothing about where the target will reappear.
                self.gain_primed = false;
            }
            if s.control.servo_enabled {
                let (pwm_h, next_dir) = search_step(dir, self.command.pwm_h_us, &s.search, &s.pwm, s.frame_period())?;
                self.command.pwm_h_us = pwm_h;
                self.mode = TrackerMode::Searching(next_dir);
            }
            return Ok(());
        }

        // Tracking or holding; without a detection the last command coasts.
        let Some(det) = detection else { return Ok(()) };
        let dev = compute_deviation(&det.bbox, &s.camera)?;
        if s.control.adaptive_k {
            let (x0, y0) = s.camera.center();
            let distance = (det.bbox.cx - x0).hypot(det.bbox.cy - y0);
            if self.gain_primed {
                self.gain = update_gain(&self.gain, distance)?;
            } else {
                self.gain.prev_distance = distance;
                self.gain_primed = true;
            }
        }
        let decision =
            if s.control.deadband_on { apply_deadband(&dev, &s.deadband) } else { DeadBandDecision::Adjust(dev) };
        match decision {
            DeadBandDecision::Hold => self.mode = TrackerMode::Holding,
            DeadBandDecision::Adjust(dev) => {
                self.mode = TrackerMode::Tracking;
                if s.control.servo_enabled {
                    // Corrections are relative to the current command: the
                    // deviation is measured from where the camera points.
                    let target = angle_to_pwm(&apply_gain(&dev, self.gain_k()), &s.pwm);
                    let c = s.pwm.c_center_us;
                    self.command = PwmCommand::new(
                        self.command.pwm_h_us + (target.pwm_h_us - c),
                        self.command.pwm_v_us + (target.pwm_v_us - c),
                    )
                    .saturated(&s.pwm);
                }
            }
        }
        Ok(())
    }
}

/// One axis of the mount.
struct Axis {
    state: ServoState,
    pid: PidState,
}

/// Runs a scenario to completion.
///
/// Per frame: capture (project → detect), process the previous frame's
/// detection (one frame of latency), record, then integrate both servos
/// over the frame with the command held constant.
pub fn run_scenario(s: &Scenario) -> Result<Trace> {
    s.validate()?;
    let period = s.frame_period();
    let substeps = (period / NOMINAL_SERVO_DT - 1e-9).ceil().max(1.0) as usize;
    let dt = period / substeps as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut ctl = Controller::new(s);
    let mut pan = Axis { state: ServoState::default(), pid: PidState::default() };
    let mut tilt = Axis { state: ServoState::default(), pid: PidState::default() };
    let mut pending: Option<Option<Detection>> = None;
    let mut records = Vec::with_capacity(s.frame_count());

    for n in 0..s.frame_count() {
        let t = n as f64 * period;
        let servo_h_deg = pan.state.angle_rad.to_degrees();
        let servo_v_deg = tilt.state.angle_rad.to_degrees();
        let pose = Pose { pan_right_deg: s.pwm.h_sign() * servo_h_deg, tilt_down_deg: s.pwm.v_sign() * servo_v_deg };
        let pos = s.trajectory.position(t, &s.camera);
        let draws = FrameDraws::sample(&mut rng);
        let projected = match project_target(&pos, &pose, &s.camera) {
            Projection::InFrame { x_px, y_px } => Some((x_px, y_px)),
            Projection::OutOfFrame => None,
        };
        let detection = projected
            .filter(|_| s.trajectory.visible(t))
            .and_then(|(x, y)| s.detector.detect(&target_box(x, y, &pos, &s.target, &s.camera), &s.camera, &draws));

        if let Some(prev) = pending.take() {
            ctl.process(prev.as_ref())?;
        }

        let dev = detection.map(|d| compute_deviation(&d.bbox, &s.camera)).transpose()?;
        records.push(TraceRecord {
            t_s: t,
            target_x_px: projected.map(|p| p.0),
            target_y_px: projected.map(|p| p.1),
            detected: detection.is_some(),
            confidence: detection.map(|d| d.confidence),
            dev_h_deg: dev.map(|d| d.h_deg),
            dev_v_deg: dev.map(|d| d.v_deg),
            gain_k: ctl.gain_k(),
            pwm_h_us: ctl.command.pwm_h_us,
            pwm_v_us: ctl.command.pwm_v_us,
            servo_h_deg,
            servo_v_deg,
            mode: ctl.mode.label(),
            iou: detection.map(|d| d.iou),
        });
        pending = Some(detection);

        for _ in 0..substeps {
            (pan.state, pan.pid) =
                servo_track(&s.servo, &s.pid, &pan.pid, &pan.state, ctl.command.pwm_h_us, &s.pwm, dt)?;
            (tilt.state, tilt.pid) =
                servo_track(&s.servo, &s.pid, &tilt.pid, &tilt.state, ctl.command.pwm_v_us, &s.pwm, dt)?;
        }
    }

    Ok(Trace {
        meta: TraceMeta {
            name: s.name.clone(),
            seed: s.seed,
            frame_period_s: period,
            camera: s.camera,
            pwm: s.pwm,
            deadband_deg: s.deadband.threshold_deg,
            sweep_period_s: s.search.sweep_period(&s.pwm),
        },
        records,
    })
}
