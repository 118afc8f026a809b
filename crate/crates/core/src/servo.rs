//! One servo axis: a second-order rotational plant closed by a PID loop.
//!
//! Plant: `J·θ'' + b·θ' + K·θ + τ_ext = τ`, integrated with classical RK4.
//! The applied torque is clamped to `±torque_limit` and the shaft stops hard
//! at `±3π/4` (the 270° travel of the servo), losing all velocity there.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angle_map::{pwm_to_angle, PwmConfig};
use crate::error::{ensure_finite, Error, Result};

/// Mechanical travel limit, ±135°.
pub const MECHANICAL_LIMIT_RAD: f64 = 3.0 * PI / 4.0;

/// Physical constants of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServoParams {
    /// Moment of inertia J, kg·m².
    pub inertia: f64,
    /// Viscous damping b, N·m·s/rad.
    pub damping: f64,
    /// Restoring stiffness, N·m/rad.
    pub stiffness: f64,
    /// Constant external load torque, N·m.
    pub ext_torque: f64,
    /// Actuator torque saturation, N·m.
    pub torque_limit: f64,
}

impl Default for ServoParams {
    fn default() -> Self {
        Self { inertia: 1e-3, damping: 0.05, stiffness: 0.2, ext_torque: 0.0, torque_limit: 0.5 }
    }
}

impl ServoParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.inertia > 0.0
            && self.damping >= 0.0
            && self.stiffness >= 0.0
            && self.torque_limit > 0.0
            && [self.inertia, self.damping, self.stiffness, self.ext_torque, self.torque_limit]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "servo params need inertia > 0, damping ≥ 0, stiffness ≥ 0, torque_limit > 0 (all finite), got {self:?}"
            )))
        }
    }

    /// Angular acceleration for a given state and (already clamped) torque.
    fn accel(&self, angle: f64, omega: f64, torque: f64) -> f64 {
        (torque - self.damping * omega - self.stiffness * angle - self.ext_torque) / self.inertia
    }
}

/// Shaft angle and angular velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ServoState {
    pub angle_rad: f64,
    pub omega_rad_s: f64,
}

impl ServoState {
    pub fn new(angle_rad: f64, omega_rad_s: f64) -> Self {
        Self { angle_rad, omega_rad_s }
    }

    /// `½Jω² + ½Kθ²`.
    pub fn energy(&self, params: &ServoParams) -> f64 {
        0.5 * params.inertia * self.omega_rad_s.powi(2) + 0.5 * params.stiffness * self.angle_rad.powi(2)
    }
}

/// PID gains plus the anti-windup bound on the error integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Largest permitted |∫e dt|, rad·s.
    pub integral_limit: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self { kp: 2.0, ki: 1.0, kd: 0.05, integral_limit: 1.0 }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kp, self.ki, self.kd, self.integral_limit];
        if all.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(Error::Config(format!("pid gains and integral limit must be finite and ≥ 0, got {self:?}")))
        }
    }
}

/// Controller memory: error integral and the previous error sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
}

/// One PID update: `u = kp·e + ki·I + kd·(e − e_prev)/dt` with
/// `I = clamp(I_prev + e·dt, ±integral_limit)`.
pub fn pid_step(gains: &PidGains, state: &PidState, error: f64, dt: f64) -> Result<(f64, PidState)> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Domain(format!("pid dt must be positive, got {dt}")));
    }
    ensure_finite("pid error", error)?;
    let limit = gains.integral_limit;
    let integral = (state.integral + error * dt).clamp(-limit, limit);
    let derivative = (error - state.prev_error) / dt;
    let u = gains.kp * error + gains.ki * integral + gains.kd * derivative;
    Ok((u, PidState { integral, prev_error: error }))
}

/// Advances the plant by `dt` under a constant applied torque (RK4).
pub fn servo_step(params: &ServoParams, state: &ServoState, applied_torque: f64, dt: f64) -> Result<ServoState> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Domain(format!("servo dt must be positive, got {dt}")));
    }
    ensure_finite("servo angle", state.angle_rad)?;
    ensure_finite("servo omega", state.omega_rad_s)?;
    ensure_finite("applied torque", applied_torque)?;

    let tau = applied_torque.clamp(-params.torque_limit, params.torque_limit);
    let (th, w) = (state.angle_rad, state.omega_rad_s);

    let k1_th = w;
    let k1_w = params.accel(th, w, tau);
    let k2_th = w + 0.5 * dt * k1_w;
    let k2_w = params.accel(th + 0.5 * dt * k1_th, k2_th, tau);
    let k3_th = w + 0.5 * dt * k2_w;
    let k3_w = params.accel(th + 0.5 * dt * k2_th, k3_th, tau);
    let k4_th = w + dt * k3_w;
    let k4_w = params.accel(th + dt * k3_th, k4_th, tau);

    let mut angle = th + dt / 6.0 * (k1_th + 2.0 * k2_th + 2.0 * k3_th + k4_th);
    let mut omega = w + dt / 6.0 * (k1_w + 2.0 * k2_w + 2.0 * k3_w + k4_w);

    if angle.abs() >= MECHANICAL_LIMIT_RAD {
        angle = angle.clamp(-MECHANICAL_LIMIT_RAD, MECHANICAL_LIMIT_RAD);
        omega = 0.0;
    }
    Ok(ServoState::new(angle, omega))
}

/// One control substep: converts the pulse setpoint to a shaft angle, runs
/// the PID on the angle error and applies the output as plant torque.
pub fn servo_track(
    params: &ServoParams,
    gains: &PidGains,
    pid_state: &PidState,
    state: &ServoState,
    pwm_setpoint: f64,
    pwm_cfg: &PwmConfig,
    dt: f64,
) -> Result<(ServoState, PidState)> {
    let setpoint = pwm_to_angle(pwm_setpoint, pwm_cfg)?.to_radians();
    let (u, pid_next) = pid_step(gains, pid_state, setpoint - state.angle_rad, dt)?;
    let next = servo_step(params, state, u, dt)?;
    Ok((next, pid_next))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pid_zero_error_fresh_state() {
        let (u, _) = pid_step(&PidGains::default(), &PidState::default(), 0.0, 1e-3).unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn pid_proportional_only() {
        let g = PidGains { kp: 2.0, ki: 0.0, kd: 0.0, integral_limit: 1.0 };
        let (u, _) = pid_step(&g, &PidState::default(), 1.5, 1e-3).unwrap();
        assert_eq!(u, 3.0);
    }

    #[test]
    fn pid_one_rectangle_of_integral() {
        let g = PidGains { kp: 0.0, ki: 1.0, kd: 0.0, integral_limit: 1.0 };
        let (u, s) = pid_step(&g, &PidState::default(), 1.0, 0.1).unwrap();
        assert_eq!(u, 0.1);
        assert_eq!(s.integral, 0.1);
        assert_eq!(s.prev_error, 1.0);
    }

    #[test]
    fn pid_rejects_non_positive_dt() {
        let g = PidGains::default();
        assert!(matches!(pid_step(&g, &PidState::default(), 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(pid_step(&g, &PidState::default(), 1.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn integral_is_clamped() {
        let g = PidGains { kp: 0.0, ki: 1.0, kd: 0.0, integral_limit: 0.25 };
        let mut s = PidState::default();
        for _ in 0..100 {
            s = pid_step(&g, &s, 1.0, 0.01).unwrap().1;
            assert!(s.integral <= 0.25);
        }
        assert_eq!(s.integral, 0.25);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        // Dyadic values keep K·θ + τ_ext exact.
        let p = ServoParams { stiffness: 0.25, ext_torque: 0.125, ..ServoParams::default() };
        let s = ServoState::new(0.5, 0.0);
        let tau = p.stiffness * s.angle_rad + p.ext_torque;
        let next = servo_step(&p, &s, tau, 1e-3).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn servo_rejects_bad_input() {
        let p = ServoParams::default();
        assert!(servo_step(&p, &ServoState::new(f64::NAN, 0.0), 0.0, 1e-3).is_err());
        assert!(servo_step(&p, &ServoState::default(), 0.0, 0.0).is_err());
    }

    #[test]
    fn torque_is_clamped_before_integration() {
        let p = ServoParams { damping: 0.0, stiffness: 0.0, ..ServoParams::default() };
        let a = servo_step(&p, &ServoState::default(), 100.0, 1e-3).unwrap();
        let b = servo_step(&p, &ServoState::default(), p.torque_limit, 1e-3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn track_holds_at_setpoint() {
        let cfg = PwmConfig::default();
        let s = ServoState::default();
        let (next, pid) = servo_track(
            &ServoParams::default(),
            &PidGains::default(),
            &PidState::default(),
            &s,
            cfg.c_center_us,
            &cfg,
            1e-3,
        )
        .unwrap();
        assert_eq!(next, s);
        assert_eq!(pid, PidState::default());
    }

    #[test]
    fn setpoint_beyond_travel_parks_at_stop() {
        // A 300° pulse mapping puts 2500 µs at +150°, past the 135° stop.
        let cfg = PwmConfig { range_deg: 300.0, ..PwmConfig::default() };
        let params = ServoParams::default();
        let gains = PidGains::default();
        let (mut s, mut pid) = (ServoState::default(), PidState::default());
        for _ in 0..5000 {
            (s, pid) = servo_track(&params, &gains, &pid, &s, 2500.0, &cfg, 1e-3).unwrap();
            assert!(s.angle_rad.abs() <= MECHANICAL_LIMIT_RAD);
        }
        assert_eq!(s.angle_rad, MECHANICAL_LIMIT_RAD);
        assert_eq!(s.omega_rad_s, 0.0);
    }
}
