//! Hand-landmark data model and the JSONL frame wire format.
//!
//! A frame record looks like
//! `{"t": 100, "hand": "Right", "lm": [[x, y, z], ...21 entries]}`.
//! Coordinates are normalized image coordinates with y growing downward.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of keypoints in the hand topology.
pub const LANDMARK_COUNT: usize = 21;

/// Inclusive band accepted for normalized x and y. Detectors overshoot the
/// frame slightly; clamping happens in pointer mapping, not here.
pub const COORD_MIN: f64 = -0.5;
pub const COORD_MAX: f64 = 1.5;

pub const WRIST: usize = 0;
pub const THUMB_CMC: usize = 1;
pub const THUMB_MCP: usize = 2;
pub const THUMB_IP: usize = 3;
pub const THUMB_TIP: usize = 4;
pub const INDEX_MCP: usize = 5;
pub const INDEX_PIP: usize = 6;
pub const INDEX_DIP: usize = 7;
pub const INDEX_TIP: usize = 8;
pub const MIDDLE_MCP: usize = 9;
pub const MIDDLE_PIP: usize = 10;
pub const MIDDLE_DIP: usize = 11;
pub const MIDDLE_TIP: usize = 12;
pub const RING_MCP: usize = 13;
pub const RING_PIP: usize = 14;
pub const RING_DIP: usize = 15;
pub const RING_TIP: usize = 16;
pub const PINKY_MCP: usize = 17;
pub const PINKY_PIP: usize = 18;
pub const PINKY_DIP: usize = 19;
pub const PINKY_TIP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Landmark {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Euclidean distance in the image plane; z is ignored.
    pub fn planar_distance(&self, other: &Landmark) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Handedness {
    Left,
    Right,
}

impl Handedness {
    pub fn flipped(self) -> Self {
        match self {
            Handedness::Left => Handedness::Right,
            Handedness::Right => Handedness::Left,
        }
    }
}

/// One timestamped sample of a tracked hand.
#[derive(Debug, Clone, PartialEq)]
pub struct HandFrame {
    pub t_ms: u64,
    pub hand: Handedness,
    pub lm: [Landmark; LANDMARK_COUNT],
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("expected {LANDMARK_COUNT} landmarks, found {0}")]
    WrongArity(usize),
    #[error("landmark {index} {axis} = {value} outside accepted band")]
    OutOfRange {
        index: usize,
        axis: char,
        value: f64,
    },
    #[error("timestamp must be positive, got {0}")]
    BadTimestamp(i64),
}

#[derive(Serialize, Deserialize)]
struct WireFrame {
    t: i64,
    hand: Handedness,
    lm: Vec<[f64; 3]>,
}

impl HandFrame {
    /// Checks every frame invariant. Frames built in code (synthetic or
    /// transformed) are not validated until they are serialized and parsed.
    pub fn validate(&self) -> Result<(), FrameError> {
        if self.t_ms == 0 {
            return Err(FrameError::BadTimestamp(0));
        }
        for (index, p) in self.lm.iter().enumerate() {
            for (axis, value) in [('x', p.x), ('y', p.y)] {
                if !value.is_finite() || !(COORD_MIN..=COORD_MAX).contains(&value) {
                    return Err(FrameError::OutOfRange { index, axis, value });
                }
            }
            if !p.z.is_finite() {
                return Err(FrameError::OutOfRange {
                    index,
                    axis: 'z',
                    value: p.z,
                });
            }
        }
        Ok(())
    }

    pub fn tip(&self, index: usize) -> &Landmark {
        &self.lm[index]
    }

    /// Serializes to a single JSONL record (no trailing newline).
    pub fn to_json_line(&self) -> String {
        let wire = WireFrame {
            t: self.t_ms as i64,
            hand: self.hand,
            lm: self.lm.iter().map(|p| [p.x, p.y, p.z]).collect(),
        };
        serde_json::to_string(&wire).expect("frame serialization is infallible")
    }
}

/// Parses and validates one JSONL frame record.
pub fn parse_frame(line: &str) -> Result<HandFrame, FrameError> {
    let wire: WireFrame =
        serde_json::from_str(line).map_err(|e| FrameError::MalformedRecord(e.to_string()))?;
    if wire.t <= 0 {
        return Err(FrameError::BadTimestamp(wire.t));
    }
    if wire.lm.len() != LANDMARK_COUNT {
        return Err(FrameError::WrongArity(wire.lm.len()));
    }
    let mut lm = [Landmark::default(); LANDMARK_COUNT];
    for (slot, [x, y, z]) in lm.iter_mut().zip(wire.lm) {
        *slot = Landmark::new(x, y, z);
    }
    let frame = HandFrame {
        t_ms: wire.t as u64,
        hand: wire.hand,
        lm,
    };
    frame.validate()?;
    Ok(frame)
}
