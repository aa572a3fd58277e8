//! Debounced gesture state machine.
//!
//! Pose table (thumb ignored except for scroll):
//!
//! | pose        | fingers up                 | extra condition          |
//! |-------------|----------------------------|--------------------------|
//! | `Move`      | index only                 |                          |
//! | `ClickArm`  | index + middle             | tips pinched together    |
//! | `RightArm`  | middle only                |                          |
//! | `Scroll`    | all five                   |                          |
//! | `Idle`      | anything else              |                          |
//!
//! A raw pose must be seen for `stable_frames` consecutive frames before it
//! replaces the accepted pose. Clicks fire on entry to an arm pose, subject
//! to a refractory period shared by both buttons. Scroll output is driven by
//! displacement from an anchor, so the total step count does not depend on
//! the frame rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;
use crate::fingers::{fingers_up, FingerState};
use crate::landmark::{HandFrame, INDEX_TIP, MIDDLE_TIP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Pose {
    Idle,
    Move,
    ClickArm,
    RightArm,
    Scroll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FsmConfig {
    /// Pinch threshold on the index/middle tip distance, normalized units.
    pub click_dist: f64,
    /// Consecutive frames before a pose change is accepted.
    pub stable_frames: u32,
    /// Minimum time between two click events of either button.
    pub click_refractory_ms: u64,
    /// Vertical deadzone around the scroll anchor, normalized units.
    pub scroll_deadzone: f64,
    /// Scroll steps per normalized unit beyond the deadzone.
    pub scroll_gain: f64,
}

impl Default for FsmConfig {
    fn default() -> Self {
        Self {
            click_dist: 0.04,
            stable_frames: 3,
            click_refractory_ms: 300,
            scroll_deadzone: 0.03,
            scroll_gain: 40.0,
        }
    }
}

impl FsmConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, format!("must be > 0, got {v}")))
            }
        };
        positive("click_dist", self.click_dist)?;
        positive("scroll_deadzone", self.scroll_deadzone)?;
        positive("scroll_gain", self.scroll_gain)?;
        if self.stable_frames < 1 {
            return Err(ConfigError::invalid("stable_frames", "must be >= 1"));
        }
        if self.click_refractory_ms == 0 {
            return Err(ConfigError::invalid("click_refractory_ms", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GestureKind {
    /// Raw normalized index-tip position.
    Move { x: f64, y: f64 },
    LeftClick,
    RightClick,
    /// Signed step count, positive scrolls up. Never zero.
    Scroll { dy: i32 },
    None,
}

impl GestureKind {
    pub fn is_click(&self) -> bool {
        matches!(self, GestureKind::LeftClick | GestureKind::RightClick)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub t_ms: u64,
    #[serde(flatten)]
    pub kind: GestureKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GestureError {
    #[error("frame time went backwards: {got} ms after {prev} ms")]
    NonMonotonicTime { prev: u64, got: u64 },
}

/// Maps a finger state (plus pinch geometry) to a raw pose.
pub fn classify_pose(fs: &FingerState, frame: &HandFrame, cfg: &FsmConfig) -> Pose {
    let FingerState {
        thumb,
        index,
        middle,
        ring,
        pinky,
    } = *fs;
    if thumb && index && middle && ring && pinky {
        return Pose::Scroll;
    }
    if ring || pinky {
        return Pose::Idle;
    }
    match (index, middle) {
        (true, false) => Pose::Move,
        (false, true) => Pose::RightArm,
        (true, true) => {
            let pinch = frame.lm[INDEX_TIP].planar_distance(&frame.lm[MIDDLE_TIP]);
            if pinch < cfg.click_dist {
                Pose::ClickArm
            } else {
                // Two fingers apart is a hover, not a move.
                Pose::Idle
            }
        }
        (false, false) => Pose::Idle,
    }
}

/// Machine state carried between frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FsmState {
    /// Accepted pose; governs output.
    pub pose: Pose,
    /// Raw pose currently accumulating stability.
    pub candidate: Pose,
    /// Consecutive frames `candidate` has been seen; in `[0, stable_frames]`.
    pub stable_count: u32,
    /// Index-tip y at the first frame of the candidate run.
    pub candidate_onset_y: f64,
    pub last_click_ms: Option<u64>,
    pub scroll_anchor_y: f64,
    /// Steps already emitted since the scroll anchor was set.
    pub scroll_emitted: i64,
    pub last_fingers: Option<FingerState>,
    pub last_t_ms: Option<u64>,
}

impl Default for FsmState {
    fn default() -> Self {
        Self {
            pose: Pose::Idle,
            candidate: Pose::Idle,
            stable_count: 0,
            candidate_onset_y: 0.0,
            last_click_ms: None,
            scroll_anchor_y: 0.0,
            scroll_emitted: 0,
            last_fingers: None,
            last_t_ms: None,
        }
    }
}

impl FsmState {
    /// Advances the machine by one frame.
    pub fn step(&mut self, frame: &HandFrame, cfg: &FsmConfig) -> Result<GestureEvent, GestureError> {
        if let Some(prev) = self.last_t_ms {
            if frame.t_ms < prev {
                return Err(GestureError::NonMonotonicTime {
                    prev,
                    got: frame.t_ms,
                });
            }
        }
        self.last_t_ms = Some(frame.t_ms);

        let fs = fingers_up(frame);
        self.last_fingers = Some(fs);
        let raw = classify_pose(&fs, frame, cfg);
        let tip = frame.lm[INDEX_TIP];

        let mut entered = false;
        if raw == self.pose {
            self.candidate = raw;
            self.stable_count = 0;
        } else {
            if raw == self.candidate {
                self.stable_count += 1;
            } else {
                self.candidate = raw;
                self.stable_count = 1;
                self.candidate_onset_y = tip.y;
            }
            if self.stable_count >= cfg.stable_frames {
                self.pose = raw;
                self.stable_count = 0;
                entered = true;
            }
        }

        let t = frame.t_ms;
        let kind = match self.pose {
            Pose::Idle => GestureKind::None,
            Pose::Move => GestureKind::Move { x: tip.x, y: tip.y },
            Pose::ClickArm if entered && self.click_allowed(t, cfg) => {
                self.last_click_ms = Some(t);
                GestureKind::LeftClick
            }
            Pose::RightArm if entered && self.click_allowed(t, cfg) => {
                self.last_click_ms = Some(t);
                GestureKind::RightClick
            }
            Pose::ClickArm | Pose::RightArm => GestureKind::None,
            Pose::Scroll => {
                if entered {
                    self.scroll_anchor_y = self.candidate_onset_y;
                    self.scroll_emitted = 0;
                }
                self.scroll_step(tip.y, cfg)
            }
        };
        Ok(GestureEvent { t_ms: t, kind })
    }

    fn click_allowed(&self, t: u64, cfg: &FsmConfig) -> bool {
        self.last_click_ms
            .is_none_or(|last| t.saturating_sub(last) >= cfg.click_refractory_ms)
    }

    /// Emits the difference between the displacement-determined step total
    /// and what has already been emitted. Frames inside the deadzone emit
    /// nothing and leave the running total untouched.
    fn scroll_step(&mut self, y: f64, cfg: &FsmConfig) -> GestureKind {
        let displacement = self.scroll_anchor_y - y;
        let beyond = displacement.abs() - cfg.scroll_deadzone;
        if beyond <= 0.0 {
            return GestureKind::None;
        }
        let target = (cfg.scroll_gain * beyond).round() as i64 * displacement.signum() as i64;
        let dy = target - self.scroll_emitted;
        if dy == 0 {
            return GestureKind::None;
        }
        self.scroll_emitted = target;
        GestureKind::Scroll { dy: dy as i32 }
    }
}

/// A state machine bound to its configuration.
#[derive(Debug, Clone)]
pub struct GestureEngine {
    cfg: FsmConfig,
    state: FsmState,
}

impl GestureEngine {
    pub fn new(cfg: FsmConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: FsmState::default(),
        })
    }

    pub fn config(&self) -> &FsmConfig {
        &self.cfg
    }

    pub fn state(&self) -> &FsmState {
        &self.state
    }

    pub fn step(&mut self, frame: &HandFrame) -> Result<GestureEvent, GestureError> {
        self.state.step(frame, &self.cfg)
    }

    /// Runs a whole sequence, returning every event including `None`s.
    pub fn run<'a>(
        &mut self,
        frames: impl IntoIterator<Item = &'a HandFrame>,
    ) -> Result<Vec<GestureEvent>, GestureError> {
        frames.into_iter().map(|f| self.step(f)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmark::*;

    /// Minimal frame: index tip at `(x, y)`, middle tip level with it and
    /// `pinch` to the right, each PIP 0.1 below its tip when the finger is
    /// up and 0.1 above when folded.
    fn frame(t: u64, bits: [u8; 5], x: f64, y: f64, pinch: f64) -> HandFrame {
        let mut lm = [Landmark::new(0.5, 0.5, 0.0); LANDMARK_COUNT];
        let pip_y = |up: u8| if up != 0 { y + 0.1 } else { y - 0.1 };
        lm[INDEX_TIP] = Landmark::new(x, y, 0.0);
        lm[MIDDLE_TIP] = Landmark::new(x + pinch, y, 0.0);
        lm[RING_TIP].y = y;
        lm[PINKY_TIP].y = y;
        lm[INDEX_PIP].y = pip_y(bits[1]);
        lm[MIDDLE_PIP].y = pip_y(bits[2]);
        lm[RING_PIP].y = pip_y(bits[3]);
        lm[PINKY_PIP].y = pip_y(bits[4]);
        lm[PINKY_MCP].x = x + 0.1;
        lm[THUMB_IP].x = x - 0.05;
        lm[THUMB_TIP].x = if bits[0] != 0 { x - 0.1 } else { x };
        HandFrame {
            t_ms: t,
            hand: Handedness::Right,
            lm,
        }
    }

    fn pose_of(bits: [u8; 5], pinch: f64) -> Pose {
        let f = frame(1, bits, 0.5, 0.5, pinch);
        classify_pose(&fingers_up(&f), &f, &FsmConfig::default())
    }

    #[test]
    fn helper_builds_the_requested_fingers() {
        for bits in [[0, 1, 0, 0, 0], [1, 1, 1, 1, 1], [0, 0, 1, 0, 0], [0, 1, 1, 0, 0]] {
            let f = frame(1, bits, 0.4, 0.6, 0.02);
            assert_eq!(fingers_up(&f), FingerState::from_bits(bits));
        }
    }

    #[test]
    fn pose_table() {
        assert_eq!(pose_of([0, 1, 0, 0, 0], 0.1), Pose::Move);
        assert_eq!(pose_of([1, 1, 0, 0, 0], 0.1), Pose::Move);
        assert_eq!(pose_of([0, 0, 1, 0, 0], 0.1), Pose::RightArm);
        assert_eq!(pose_of([0, 1, 1, 0, 0], 0.02), Pose::ClickArm);
        assert_eq!(pose_of([0, 1, 1, 0, 0], 0.10), Pose::Idle);
        assert_eq!(pose_of([1, 1, 1, 1, 1], 0.1), Pose::Scroll);
        assert_eq!(pose_of([0, 1, 1, 1, 1], 0.1), Pose::Idle);
        assert_eq!(pose_of([0, 0, 0, 0, 0], 0.1), Pose::Idle);
        assert_eq!(pose_of([0, 1, 0, 0, 1], 0.1), Pose::Idle);
    }

    #[test]
    fn pinch_threshold_is_strict() {
        // 0.04 itself is not a pinch.
        let f = frame(1, [0, 1, 1, 0, 0], 0.25, 0.5, 0.04);
        let d = f.lm[INDEX_TIP].planar_distance(&f.lm[MIDDLE_TIP]);
        let cfg = FsmConfig {
            click_dist: d,
            ..FsmConfig::default()
        };
        assert_eq!(classify_pose(&fingers_up(&f), &f, &cfg), Pose::Idle);
    }

    #[test]
    fn scroll_accumulates_displacement() {
        // Open palm, index tip rising 0.05 per frame from y = 0.6. The
        // candidate run starts at frame 0, so the anchor is 0.6 and the
        // pose is accepted on frame 2. Hand-simulated targets for frames
        // 2..=9 are round(40 * (0.05k - 0.03)) = 3,5,7,9,11,13,15,17.
        let cfg = FsmConfig::default();
        let mut eng = GestureEngine::new(cfg).unwrap();
        let mut dys = Vec::new();
        for k in 0..10u64 {
            let y = 0.6 - 0.05 * k as f64;
            let ev = eng.step(&frame(100 + 33 * k, [1, 1, 1, 1, 1], 0.5, y, 0.1)).unwrap();
            match ev.kind {
                GestureKind::Scroll { dy } => dys.push(dy),
                GestureKind::None => {}
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(dys, vec![3, 2, 2, 2, 2, 2, 2, 2]);
        assert_eq!(dys.iter().sum::<i32>(), 17);
    }

    #[test]
    fn scroll_down_is_negative_and_deadzone_is_silent() {
        let mut eng = GestureEngine::new(FsmConfig::default()).unwrap();
        let mut out = Vec::new();
        for (k, y) in [0.5, 0.5, 0.5, 0.52, 0.53, 0.6].into_iter().enumerate() {
            out.push(eng.step(&frame(10 + k as u64, [1, 1, 1, 1, 1], 0.5, y, 0.1)).unwrap().kind);
        }
        assert_eq!(out[..5], [GestureKind::None; 5]);
        // 0.1 below the anchor: round(40 * 0.07) = 3 steps down.
        assert_eq!(out[5], GestureKind::Scroll { dy: -3 });
    }

    #[test]
    fn held_pinch_clicks_once() {
        let mut eng = GestureEngine::new(FsmConfig::default()).unwrap();
        let mut clicks = 0;
        for k in 0..60u64 {
            let t = 1 + k * 1000 / 30;
            let ev = eng.step(&frame(t, [0, 1, 1, 0, 0], 0.5, 0.5, 0.02)).unwrap();
            if ev.kind == GestureKind::LeftClick {
                clicks += 1;
            }
        }
        assert_eq!(clicks, 1);
    }

    #[test]
    fn right_click_on_middle_finger() {
        let mut eng = GestureEngine::new(FsmConfig::default()).unwrap();
        let kinds: Vec<_> = (0..5u64)
            .map(|k| eng.step(&frame(1 + k, [0, 0, 1, 0, 0], 0.5, 0.5, 0.1)).unwrap().kind)
            .collect();
        assert_eq!(
            kinds,
            vec![
                GestureKind::None,
                GestureKind::None,
                GestureKind::RightClick,
                GestureKind::None,
                GestureKind::None
            ]
        );
    }

    #[test]
    fn refractory_suppresses_quick_reclick() {
        let cfg = FsmConfig {
            stable_frames: 1,
            ..FsmConfig::default()
        };
        let mut eng = GestureEngine::new(cfg).unwrap();
        let pinch = |t| frame(t, [0, 1, 1, 0, 0], 0.5, 0.5, 0.02);
        let fist = |t| frame(t, [0, 0, 0, 0, 0], 0.5, 0.5, 0.1);
        assert_eq!(eng.step(&pinch(1000)).unwrap().kind, GestureKind::LeftClick);
        eng.step(&fist(1100)).unwrap();
        // 200 ms after the last click: suppressed, and not deferred.
        assert_eq!(eng.step(&pinch(1200)).unwrap().kind, GestureKind::None);
        assert_eq!(eng.step(&pinch(1400)).unwrap().kind, GestureKind::None);
        eng.step(&fist(1500)).unwrap();
        assert_eq!(eng.step(&pinch(1600)).unwrap().kind, GestureKind::LeftClick);
        // Right click shares the refractory window.
        eng.step(&fist(1650)).unwrap();
        let right = frame(1700, [0, 0, 1, 0, 0], 0.5, 0.5, 0.1);
        assert_eq!(eng.step(&right).unwrap().kind, GestureKind::None);
    }

    #[test]
    fn alternating_poses_never_change_state() {
        let mut eng = GestureEngine::new(FsmConfig::default()).unwrap();
        for k in 0..40u64 {
            let bits = if k % 2 == 0 { [0, 1, 0, 0, 0] } else { [0, 0, 0, 0, 0] };
            let ev = eng.step(&frame(1 + k, bits, 0.5, 0.5, 0.1)).unwrap();
            assert_eq!(ev.kind, GestureKind::None);
            assert_eq!(eng.state().pose, Pose::Idle);
            assert!(eng.state().stable_count <= 3);
        }
    }

    #[test]
    fn move_reports_raw_index_tip() {
        let cfg = FsmConfig {
            stable_frames: 1,
            ..FsmConfig::default()
        };
        let mut eng = GestureEngine::new(cfg).unwrap();
        let ev = eng.step(&frame(5, [0, 1, 0, 0, 0], 0.31, 0.72, 0.1)).unwrap();
        assert_eq!(ev, GestureEvent { t_ms: 5, kind: GestureKind::Move { x: 0.31, y: 0.72 } });
    }

    #[test]
    fn time_going_backwards_is_an_error() {
        let mut eng = GestureEngine::new(FsmConfig::default()).unwrap();
        eng.step(&frame(50, [0; 5], 0.5, 0.5, 0.1)).unwrap();
        assert_eq!(
            eng.step(&frame(40, [0; 5], 0.5, 0.5, 0.1)),
            Err(GestureError::NonMonotonicTime { prev: 50, got: 40 })
        );
    }

    #[test]
    fn config_validation() {
        assert!(FsmConfig::default().validate().is_ok());
        let bad = [
            FsmConfig { click_dist: 0.0, ..FsmConfig::default() },
            FsmConfig { stable_frames: 0, ..FsmConfig::default() },
            FsmConfig { click_refractory_ms: 0, ..FsmConfig::default() },
            FsmConfig { scroll_deadzone: -1.0, ..FsmConfig::default() },
            FsmConfig { scroll_gain: f64::NAN, ..FsmConfig::default() },
        ];
        for cfg in bad {
            assert!(GestureEngine::new(cfg).is_err());
        }
    }
}
