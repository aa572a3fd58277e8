//! Camera-to-screen mapping with mirroring, incremental smoothing, and a
//! jitter deadzone.

use serde::{Deserialize, Serialize};

use crate::config::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    /// Normalized inset of the active region on each side.
    pub margin: f64,
    pub screen_w: u32,
    pub screen_h: u32,
    /// Smoothing divisor; 1 disables smoothing.
    pub smooth: f64,
    /// Minimum pixel distance from the last emitted position to emit again.
    pub deadzone_px: f64,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            margin: 0.1,
            screen_w: 1920,
            screen_h: 1080,
            smooth: 5.0,
            deadzone_px: 2.0,
        }
    }
}

impl MapConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..0.5).contains(&self.margin) {
            return Err(ConfigError::invalid("margin", "must be in [0, 0.5)"));
        }
        if self.screen_w < 1 {
            return Err(ConfigError::invalid("screen_w", "must be >= 1"));
        }
        if self.screen_h < 1 {
            return Err(ConfigError::invalid("screen_h", "must be >= 1"));
        }
        if !(self.smooth >= 1.0 && self.smooth.is_finite()) {
            return Err(ConfigError::invalid("smooth", "must be >= 1"));
        }
        if !(self.deadzone_px >= 0.0 && self.deadzone_px.is_finite()) {
            return Err(ConfigError::invalid("deadzone_px", "must be >= 0"));
        }
        Ok(())
    }

    fn max_x(&self) -> f64 {
        f64::from(self.screen_w - 1)
    }

    fn max_y(&self) -> f64 {
        f64::from(self.screen_h - 1)
    }
}

/// Round half up.
fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Unrounded screen position of a normalized camera point, mirrored
/// horizontally and clamped to the screen.
pub fn map_to_screen_f(x: f64, y: f64, cfg: &MapConfig) -> (f64, f64) {
    let span = 1.0 - 2.0 * cfg.margin;
    let u = ((x - cfg.margin) / span).clamp(0.0, 1.0);
    let v = ((y - cfg.margin) / span).clamp(0.0, 1.0);
    ((1.0 - u) * cfg.max_x(), v * cfg.max_y())
}

/// Maps a normalized camera point to a screen pixel.
pub fn map_to_screen(x: f64, y: f64, cfg: &MapConfig) -> (u32, u32) {
    let (px, py) = map_to_screen_f(x, y, cfg);
    (round_half_up(px) as u32, round_half_up(py) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothed {
    Moved(u32, u32),
    NoMotion,
}

/// Smoothed cursor position. The internal position is real-valued; the
/// emitted position is what the cursor was last moved to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerState {
    pub sx: f64,
    pub sy: f64,
    pub emitted: (u32, u32),
}

impl Default for PointerState {
    fn default() -> Self {
        Self::at(0, 0)
    }
}

impl PointerState {
    /// A pointer resting at a known pixel.
    pub fn at(px: u32, py: u32) -> Self {
        Self {
            sx: f64::from(px),
            sy: f64::from(py),
            emitted: (px, py),
        }
    }

    /// Moves `1/smooth` of the way toward `target`. The internal position
    /// always advances; output is suppressed while the rounded position
    /// stays within the deadzone of the last emitted one.
    pub fn smooth(&mut self, target: (u32, u32), cfg: &MapConfig) -> Smoothed {
        let (tx, ty) = (f64::from(target.0), f64::from(target.1));
        self.sx = (self.sx + (tx - self.sx) / cfg.smooth).clamp(0.0, cfg.max_x());
        self.sy = (self.sy + (ty - self.sy) / cfg.smooth).clamp(0.0, cfg.max_y());
        let rx = round_half_up(self.sx) as u32;
        let ry = round_half_up(self.sy) as u32;
        let dx = f64::from(rx) - f64::from(self.emitted.0);
        let dy = f64::from(ry) - f64::from(self.emitted.1);
        if dx.hypot(dy) < cfg.deadzone_px {
            return Smoothed::NoMotion;
        }
        self.emitted = (rx, ry);
        Smoothed::Moved(rx, ry)
    }
}
