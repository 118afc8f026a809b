//! Lost-target recapture: a small tracking/search state machine and the
//! horizontal sweep that runs while the target is missing.
//!
//! The sweep bounces between `pwm_min_us` and `pwm_max_us`. It moves slowly
//! inside a window around the home pulse (the mount's initial pose, assumed
//! to be where the target most likely reappears) and quickly outside it, so
//! the home region receives `fast/slow` times more dwell per microsecond.

use serde::{Deserialize, Serialize};

use crate::angle_map::PwmConfig;
use crate::error::{Error, Result};

/// Sweep profile and loss detection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub fast_speed_us_per_s: f64,
    pub slow_speed_us_per_s: f64,
    pub home_pwm_us: f64,
    /// Half-width of the slow region around `home_pwm_us`.
    pub home_window_us: f64,
    /// Consecutive missed frames before the target counts as lost.
    pub loss_timeout_frames: u32,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            fast_speed_us_per_s: 600.0,
            slow_speed_us_per_s: 200.0,
            home_pwm_us: 1500.0,
            home_window_us: 200.0,
            loss_timeout_frames: 5,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.slow_speed_us_per_s > 0.0
            && self.fast_speed_us_per_s >= self.slow_speed_us_per_s
            && self.fast_speed_us_per_s.is_finite()
            && self.home_window_us >= 0.0
            && self.home_pwm_us.is_finite()
            && self.loss_timeout_frames >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "search config needs fast ≥ slow > 0, home_window ≥ 0, loss_timeout ≥ 1, got {self:?}"
            )))
        }
    }

    /// Sweep speed at a given pulse width.
    pub fn speed_at(&self, pwm: f64) -> f64 {
        if (pwm - self.home_pwm_us).abs() <= self.home_window_us {
            self.slow_speed_us_per_s
        } else {
            self.fast_speed_us_per_s
        }
    }

    /// Time for one full round trip `min → max → min`:
    /// `2·(span_inside/slow + span_outside/fast)`.
    pub fn sweep_period(&self, pwm_cfg: &PwmConfig) -> f64 {
        let (lo, hi) = (pwm_cfg.pwm_min_us, pwm_cfg.pwm_max_us);
        let win_lo = (self.home_pwm_us - self.home_window_us).max(lo);
        let win_hi = (self.home_pwm_us + self.home_window_us).min(hi);
        let inside = (win_hi - win_lo).max(0.0);
        let outside = (hi - lo) - inside;
        2.0 * (inside / self.slow_speed_us_per_s + outside / self.fast_speed_us_per_s)
    }
}

/// Sweep direction: `+1` towards `pwm_max_us`, `−1` towards `pwm_min_us`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    /// Towards whichever limit is closer; ties go up.
    pub fn toward_nearer_extreme(pwm: f64, pwm_cfg: &PwmConfig) -> Self {
        if pwm_cfg.pwm_max_us - pwm <= pwm - pwm_cfg.pwm_min_us {
            Direction::Up
        } else {
            Direction::Down
        }
    }
}

/// Tracker operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackerMode {
    /// Following detections and issuing corrections.
    Tracking,
    /// Tracking, but the target sits inside the dead-band.
    Holding,
    /// Target lost; sweeping horizontally.
    Searching(Direction),
}

impl TrackerMode {
    /// Lower-case label used in traces.
    pub fn label(&self) -> &'static str {
        match self {
            TrackerMode::Tracking => "tracking",
            TrackerMode::Holding => "holding",
            TrackerMode::Searching(_) => "searching",
        }
    }

    pub fn is_searching(&self) -> bool {
        matches!(self, TrackerMode::Searching(_))
    }
}

/// Mode transition for one processed frame.
///
/// `frames_missed` counts consecutive frames without a detection, including
/// the current one. `current_pwm_h` picks the initial sweep direction when
/// the target is declared lost.
pub fn on_frame(
    mode: TrackerMode,
    detection_present: bool,
    frames_missed: u32,
    cfg: &SearchConfig,
    current_pwm_h: f64,
    pwm_cfg: &PwmConfig,
) -> TrackerMode {
    match mode {
        TrackerMode::Searching(_) if detection_present => TrackerMode::Tracking,
        TrackerMode::Searching(_) => mode,
        TrackerMode::Tracking | TrackerMode::Holding => {
            if !detection_present && frames_missed >= cfg.loss_timeout_frames {
                TrackerMode::Searching(Direction::toward_nearer_extreme(current_pwm_h, pwm_cfg))
            } else {
                mode
            }
        }
    }
}

/// Advances the sweep by `dt`.
///
/// Speed is chosen from the starting position. A step that reaches a limit
/// stops exactly on it and reverses; a step that starts on the limit it is
/// heading into reverses first and then moves.
pub fn search_step(
    direction: Direction,
    current_pwm_h: f64,
    cfg: &SearchConfig,
    pwm_cfg: &PwmConfig,
    dt: f64,
) -> Result<(f64, Direction)> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Domain(format!("search dt must be positive, got {dt}")));
    }
    let (lo, hi) = (pwm_cfg.pwm_min_us, pwm_cfg.pwm_max_us);
    let pwm = current_pwm_h.clamp(lo, hi);
    let mut dir = direction;
    let at_limit = |d: Direction| match d {
        Direction::Up => pwm >= hi,
        Direction::Down => pwm <= lo,
    };
    if at_limit(dir) {
        dir = dir.reversed();
    }
    let next = pwm + dir.sign() * cfg.speed_at(pwm) * dt;
    if next >= hi {
        Ok((hi, Direction::Down))
    } else if next <= lo {
        Ok((lo, Direction::Up))
    } else {
        Ok((next, dir))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfgs() -> (SearchConfig, PwmConfig) {
        (SearchConfig::default(), PwmConfig::default())
    }

    #[test]
    fn loss_after_timeout_starts_search() {
        let (s, p) = cfgs();
        let m = on_frame(TrackerMode::Tracking, false, 5, &s, 2000.0, &p);
        assert_eq!(m, TrackerMode::Searching(Direction::Up));
        let m = on_frame(TrackerMode::Holding, false, 5, &s, 800.0, &p);
        assert_eq!(m, TrackerMode::Searching(Direction::Down));
    }

    #[test]
    fn short_loss_coasts() {
        let (s, p) = cfgs();
        assert_eq!(on_frame(TrackerMode::Tracking, false, 4, &s, 1500.0, &p), TrackerMode::Tracking);
        assert_eq!(on_frame(TrackerMode::Holding, false, 1, &s, 1500.0, &p), TrackerMode::Holding);
    }

    #[test]
    fn detection_ends_search() {
        let (s, p) = cfgs();
        let m = on_frame(TrackerMode::Searching(Direction::Down), true, 0, &s, 1500.0, &p);
        assert_eq!(m, TrackerMode::Tracking);
        let m = on_frame(TrackerMode::Searching(Direction::Down), false, 50, &s, 1500.0, &p);
        assert_eq!(m, TrackerMode::Searching(Direction::Down));
    }

    #[test]
    fn reverses_at_max() {
        let (s, p) = cfgs();
        let (pwm, dir) = search_step(Direction::Up, 2500.0, &s, &p, 0.01).unwrap();
        assert_eq!(dir, Direction::Down);
        assert_eq!(pwm, 2500.0 - 600.0 * 0.01);
        let (pwm, dir) = search_step(Direction::Up, 2499.0, &s, &p, 0.01).unwrap();
        assert_eq!((pwm, dir), (2500.0, Direction::Down));
        let (pwm, dir) = search_step(Direction::Down, 500.0, &s, &p, 0.01).unwrap();
        assert_eq!((pwm, dir), (506.0, Direction::Up));
    }

    #[test]
    fn slow_inside_home_window() {
        let (s, p) = cfgs();
        let (pwm, _) = search_step(Direction::Up, 1500.0, &s, &p, 0.1).unwrap();
        assert_eq!(pwm - 1500.0, 20.0);
        let (pwm, _) = search_step(Direction::Up, 2000.0, &s, &p, 0.1).unwrap();
        assert_eq!(pwm - 2000.0, 60.0);
    }

    #[test]
    fn sweep_period_formula() {
        let (s, p) = cfgs();
        // inside span 400 µs at 200 µs/s, outside 1600 µs at 600 µs/s
        let expected = 2.0 * (400.0 / 200.0 + 1600.0 / 600.0);
        assert!((s.sweep_period(&p) - expected).abs() < 1e-12);
    }

    #[test]
    fn nearer_extreme_direction() {
        let p = PwmConfig::default();
        assert_eq!(Direction::toward_nearer_extreme(1500.0, &p), Direction::Up);
        assert_eq!(Direction::toward_nearer_extreme(1499.0, &p), Direction::Down);
        assert_eq!(Direction::toward_nearer_extreme(2400.0, &p), Direction::Up);
    }
}
