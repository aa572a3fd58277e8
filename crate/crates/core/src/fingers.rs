//! "Fingers up" classification from a single frame.

use std::fmt;

use crate::landmark::*;

/// Which fingers are extended, thumb first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FingerState {
    pub thumb: bool,
    pub index: bool,
    pub middle: bool,
    pub ring: bool,
    pub pinky: bool,
}

impl FingerState {
    pub const fn new(thumb: bool, index: bool, middle: bool, ring: bool, pinky: bool) -> Self {
        Self {
            thumb,
            index,
            middle,
            ring,
            pinky,
        }
    }

    /// Builds a state from a `[thumb, index, middle, ring, pinky]` bit array.
    pub const fn from_bits(bits: [u8; 5]) -> Self {
        Self::new(
            bits[0] != 0,
            bits[1] != 0,
            bits[2] != 0,
            bits[3] != 0,
            bits[4] != 0,
        )
    }

    pub const fn as_array(&self) -> [bool; 5] {
        [self.thumb, self.index, self.middle, self.ring, self.pinky]
    }

    pub fn count(&self) -> usize {
        self.as_array().iter().filter(|&&up| up).count()
    }
}

impl fmt::Display for FingerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for up in self.as_array() {
            f.write_str(if up { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Classifies each finger as extended or folded.
///
/// A non-thumb finger is extended when its tip is strictly above its PIP
/// joint (image y grows downward). The thumb is extended when its tip is
/// farther from the pinky MCP along x than its IP joint is, which needs no
/// handedness or mirroring special cases.
pub fn fingers_up(frame: &HandFrame) -> FingerState {
    let lm = &frame.lm;
    let above = |tip: usize, pip: usize| lm[tip].y < lm[pip].y;
    let palm_x = lm[PINKY_MCP].x;
    let thumb = (lm[THUMB_TIP].x - palm_x).abs() > (lm[THUMB_IP].x - palm_x).abs();
    FingerState {
        thumb,
        index: above(INDEX_TIP, INDEX_PIP),
        middle: above(MIDDLE_TIP, MIDDLE_PIP),
        ring: above(RING_TIP, RING_PIP),
        pinky: above(PINKY_TIP, PINKY_PIP),
    }
}
