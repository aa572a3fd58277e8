//! Seeded synthetic hand trajectories.
//!
//! Hands are built from fixed wrist-relative offsets, so a noiseless clip
//! satisfies the pose table on every frame. Noise is i.i.d. Gaussian on
//! every coordinate from a ChaCha8 generator seeded with the caller's seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{GestureLabel, LabeledSegment};
use crate::landmark::{
    Handedness, HandFrame, Landmark, COORD_MAX, COORD_MIN, INDEX_DIP, INDEX_MCP, INDEX_PIP, INDEX_TIP,
    LANDMARK_COUNT, MIDDLE_DIP, MIDDLE_MCP, MIDDLE_PIP, MIDDLE_TIP, PINKY_DIP, PINKY_MCP, PINKY_PIP,
    PINKY_TIP, RING_DIP, RING_MCP, RING_PIP, RING_TIP, THUMB_CMC, THUMB_IP, THUMB_MCP, THUMB_TIP, WRIST,
};

/// Timestamp of the first frame of a stand-alone clip or suite.
pub const SYNTH_T0_MS: u64 = 1000;

/// Canonical hand shapes the generator can draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandPose {
    Fist,
    /// Index finger only.
    Point,
    MiddleOnly,
    /// All five fingers extended.
    Open,
    /// Index and middle extended with their tips 0.01 apart.
    Pinch,
}

impl HandPose {
    /// Extended fingers, thumb to pinky.
    fn extended(self) -> [bool; 5] {
        match self {
            HandPose::Fist => [false; 5],
            HandPose::Point => [false, true, false, false, false],
            HandPose::MiddleOnly => [false, false, true, false, false],
            HandPose::Open => [true; 5],
            HandPose::Pinch => [false, true, true, false, false],
        }
    }
}

/// MCP x offsets from the wrist, index to pinky.
const MCP_X: [f64; 4] = [0.04, 0.0, -0.04, -0.08];
const MCP_DY: f64 = -0.10;
/// PIP, DIP, tip y offsets from the wrist.
const EXTENDED_DY: [f64; 3] = [-0.14, -0.17, -0.20];
const FOLDED_DY: [f64; 3] = [-0.14, -0.11, -0.08];
/// Index and middle tip x offsets when pinched; 0.01 apart.
const PINCH_TIP_X: [f64; 2] = [0.025, 0.015];

/// Noiseless landmarks for `pose` with the wrist at `(wx, wy)`. The hand
/// spans about 0.2 units upward and 0.1 to either side of the wrist.
pub fn hand_landmarks(pose: HandPose, wx: f64, wy: f64) -> [Landmark; LANDMARK_COUNT] {
    let [thumb, index, middle, ring, pinky] = pose.extended();
    let mut lm = [Landmark::default(); LANDMARK_COUNT];
    let at = |dx: f64, dy: f64| Landmark::new(wx + dx, wy + dy, 0.0);
    lm[WRIST] = at(0.0, 0.0);
    lm[THUMB_CMC] = at(0.04, -0.03);
    lm[THUMB_MCP] = at(0.06, -0.06);
    if thumb {
        lm[THUMB_IP] = at(0.08, -0.08);
        lm[THUMB_TIP] = at(0.12, -0.10);
    } else {
        lm[THUMB_IP] = at(0.07, -0.08);
        lm[THUMB_TIP] = at(0.03, -0.09);
    }
    let fingers = [
        (index, [INDEX_MCP, INDEX_PIP, INDEX_DIP, INDEX_TIP]),
        (middle, [MIDDLE_MCP, MIDDLE_PIP, MIDDLE_DIP, MIDDLE_TIP]),
        (ring, [RING_MCP, RING_PIP, RING_DIP, RING_TIP]),
        (pinky, [PINKY_MCP, PINKY_PIP, PINKY_DIP, PINKY_TIP]),
    ];
    for (f, (up, [mcp, pip, dip, tip])) in fingers.into_iter().enumerate() {
        let x = MCP_X[f];
        let dys = if up { EXTENDED_DY } else { FOLDED_DY };
        lm[mcp] = at(x, MCP_DY);
        lm[pip] = at(x, dys[0]);
        lm[dip] = at(x, dys[1]);
        lm[tip] = at(x, dys[2]);
    }
    if pose == HandPose::Pinch {
        lm[INDEX_TIP].x = wx + PINCH_TIP_X[0];
        lm[MIDDLE_TIP].x = wx + PINCH_TIP_X[1];
        lm[INDEX_DIP].x = wx + (MCP_X[0] + PINCH_TIP_X[0]) / 2.0;
        lm[MIDDLE_DIP].x = wx + (MCP_X[1] + PINCH_TIP_X[1]) / 2.0;
    }
    lm
}

/// Pose and wrist position of `gesture` at progress `p` in `[0, 1)`.
/// Scroll clips hold still for the first 30%, move over the next 50% and
/// hold again, so every frame rate samples the same start and end.
fn script(gesture: GestureLabel, p: f64) -> (HandPose, f64, f64) {
    let lerp = |a: f64, b: f64, s: f64| a + (b - a) * s;
    let ramp = ((p - 0.3) / 0.5).clamp(0.0, 1.0);
    match gesture {
        GestureLabel::Move => (HandPose::Point, lerp(0.40, 0.60, p), lerp(0.65, 0.55, p)),
        GestureLabel::LeftClick => (if p < 0.4 { HandPose::Fist } else { HandPose::Pinch }, 0.5, 0.65),
        GestureLabel::RightClick => (if p < 0.4 { HandPose::Fist } else { HandPose::MiddleOnly }, 0.5, 0.65),
        GestureLabel::ScrollUp => (HandPose::Open, 0.5, lerp(0.70, 0.50, ramp)),
        GestureLabel::ScrollDown => (HandPose::Open, 0.5, lerp(0.50, 0.70, ramp)),
    }
}

fn frame_count(duration_ms: u64, fps: u32) -> u64 {
    duration_ms * u64::from(fps) / 1000
}

fn frame_time(start_ms: u64, k: u64, fps: u32) -> u64 {
    start_ms + ((k as f64) * 1000.0 / f64::from(fps)).round() as u64
}

/// Appends one `n`-frame clip whose first frame has global index `k0`.
fn clip_into(
    out: &mut Vec<HandFrame>,
    gesture: GestureLabel,
    n: u64,
    fps: u32,
    noise: Option<&Normal<f64>>,
    rng: &mut ChaCha8Rng,
    k0: u64,
) {
    for k in 0..n {
        let (pose, wx, wy) = script(gesture, k as f64 / n as f64);
        let mut lm = hand_landmarks(pose, wx, wy);
        if let Some(dist) = noise {
            for p in &mut lm {
                p.x = (p.x + dist.sample(rng)).clamp(COORD_MIN, COORD_MAX);
                p.y = (p.y + dist.sample(rng)).clamp(COORD_MIN, COORD_MAX);
                p.z += dist.sample(rng);
            }
        }
        out.push(HandFrame {
            t_ms: frame_time(SYNTH_T0_MS, k0 + k, fps),
            hand: Handedness::Right,
            lm,
        });
    }
}

fn noise(sigma: f64) -> Option<Normal<f64>> {
    assert!(sigma >= 0.0 && sigma.is_finite(), "noise sigma must be finite and >= 0");
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("valid sigma"))
}

/// One clip of `duration_ms * fps / 1000` frames performing `gesture`,
/// starting at [`SYNTH_T0_MS`]. Panics if `sigma` is negative or not finite
/// or `fps` is zero.
pub fn synthesize(gesture: GestureLabel, duration_ms: u64, fps: u32, sigma: f64, seed: u64) -> Vec<HandFrame> {
    assert!(fps > 0, "fps must be > 0");
    let dist = noise(sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let n = frame_count(duration_ms, fps);
    clip_into(&mut out, gesture, n, fps, dist.as_ref(), &mut rng, 0);
    out
}

/// Parameters for a labeled multi-clip suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub reps: u32,
    pub clip_ms: u64,
    pub fps: u32,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            reps: 10,
            clip_ms: 1000,
            fps: 30,
            sigma: 0.0,
            seed: 1,
        }
    }
}

/// `reps` rounds of every gesture in [`GestureLabel::ALL`] order, back to
/// back, with one label per clip covering exactly that clip's frames.
pub fn synthesize_suite(spec: &SuiteSpec) -> (Vec<HandFrame>, Vec<LabeledSegment>) {
    assert!(spec.fps > 0, "fps must be > 0");
    let dist = noise(spec.sigma);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut frames = Vec::new();
    let mut labels = Vec::new();
    let n = frame_count(spec.clip_ms, spec.fps);
    let mut clip_index = 0u64;
    for _ in 0..spec.reps {
        for gesture in GestureLabel::ALL {
            let start = frame_time(SYNTH_T0_MS, clip_index * n, spec.fps);
            let end = frame_time(SYNTH_T0_MS, (clip_index + 1) * n, spec.fps);
            clip_into(&mut frames, gesture, n, spec.fps, dist.as_ref(), &mut rng, clip_index * n);
            labels.push(LabeledSegment {
                start_ms: start,
                end_ms: end,
                expect: gesture,
            });
            clip_index += 1;
        }
    }
    (frames, labels)
}
