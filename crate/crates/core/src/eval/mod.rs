//! Per-gesture accuracy scoring over labeled frame sequences, plus seeded
//! synthetic trajectories to score.

mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gesture::{FsmConfig, GestureEngine, GestureError, GestureEvent, GestureKind};
use crate::landmark::HandFrame;

pub use synth::{hand_landmarks, synthesize, synthesize_suite, HandPose, SuiteSpec, SYNTH_T0_MS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GestureLabel {
    #[serde(alias = "move", alias = "MOVE")]
    Move,
    #[serde(alias = "left_click")]
    LeftClick,
    #[serde(alias = "right_click")]
    RightClick,
    #[serde(alias = "scroll_up")]
    ScrollUp,
    #[serde(alias = "scroll_down")]
    ScrollDown,
}

impl GestureLabel {
    pub const ALL: [GestureLabel; 5] = [
        GestureLabel::Move,
        GestureLabel::LeftClick,
        GestureLabel::RightClick,
        GestureLabel::ScrollUp,
        GestureLabel::ScrollDown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GestureLabel::Move => "Move",
            GestureLabel::LeftClick => "LeftClick",
            GestureLabel::RightClick => "RightClick",
            GestureLabel::ScrollUp => "ScrollUp",
            GestureLabel::ScrollDown => "ScrollDown",
        }
    }

    /// Whether `kind` is the event this label expects.
    pub fn expects(self, kind: &GestureKind) -> bool {
        match (self, kind) {
            (GestureLabel::Move, GestureKind::Move { .. }) => true,
            (GestureLabel::LeftClick, GestureKind::LeftClick) => true,
            (GestureLabel::RightClick, GestureKind::RightClick) => true,
            (GestureLabel::ScrollUp, GestureKind::Scroll { dy }) => *dy > 0,
            (GestureLabel::ScrollDown, GestureKind::Scroll { dy }) => *dy < 0,
            _ => false,
        }
    }

    /// Whether `kind` disqualifies a segment with this label. Only clicks
    /// can contradict: any click outside a click segment, or the other
    /// button inside one.
    pub fn contradicted_by(self, kind: &GestureKind) -> bool {
        kind.is_click() && !self.expects(kind)
    }
}

impl fmt::Display for GestureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Half-open interval `[start_ms, end_ms)` in which `expect` should occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSegment {
    #[serde(rename = "start")]
    pub start_ms: u64,
    #[serde(rename = "end")]
    pub end_ms: u64,
    pub expect: GestureLabel,
}

impl LabeledSegment {
    pub fn contains(&self, t_ms: u64) -> bool {
        (self.start_ms..self.end_ms).contains(&t_ms)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("segment serialization is infallible")
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no labels to score")]
    NoLabels,
    #[error("no frames to score")]
    NoFrames,
    #[error("label {start}..{end} ms lies outside the frames' time range {first}..={last} ms")]
    LabelOutOfRange { start: u64, end: u64, first: u64, last: u64 },
    #[error("label {start}..{end} ms is empty or reversed")]
    EmptySegment { start: u64, end: u64 },
    #[error("labels {0}..{1} ms and {2}..{3} ms overlap")]
    Overlap(u64, u64, u64, u64),
    #[error("label line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("cannot read labels: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Gesture(#[from] GestureError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
}

/// Reads a label JSONL file, skipping blank lines.
pub fn load_labels(reader: impl BufRead) -> Result<Vec<LabeledSegment>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GestureScore {
    pub gesture: GestureLabel,
    pub attempts: u32,
    pub correct: u32,
    /// Percent in `[0, 100]`.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    /// One row per gesture that has at least one labeled segment, in
    /// [`GestureLabel::ALL`] order.
    pub gestures: Vec<GestureScore>,
    /// Unweighted mean of the per-gesture accuracies.
    pub overall: f64,
}

impl AccuracyReport {
    pub fn get(&self, g: GestureLabel) -> Option<&GestureScore> {
        self.gestures.iter().find(|s| s.gesture == g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

impl fmt::Display for AccuracyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>8} {:>8} {:>9}", "gesture", "attempts", "correct", "accuracy")?;
        for s in &self.gestures {
            writeln!(
                f,
                "{:<12} {:>8} {:>8} {:>8.1}%",
                s.gesture.as_str(),
                s.attempts,
                s.correct,
                s.accuracy
            )?;
        }
        write!(f, "{:<12} {:>8} {:>8} {:>8.1}%", "overall", "", "", self.overall)
    }
}

/// Scores recognized events against labels. Labels may come in any order;
/// they are sorted before checking for overlap, so the result does not
/// depend on their order.
pub fn score(events: &[GestureEvent], labels: &[LabeledSegment]) -> Result<AccuracyReport, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::NoLabels);
    }
    let mut sorted = labels.to_vec();
    sorted.sort_by_key(|s| (s.start_ms, s.end_ms, s.expect));
    for s in &sorted {
        if s.start_ms >= s.end_ms {
            return Err(EvalError::EmptySegment {
                start: s.start_ms,
                end: s.end_ms,
            });
        }
    }
    for w in sorted.windows(2) {
        if w[1].start_ms < w[0].end_ms {
            return Err(EvalError::Overlap(w[0].start_ms, w[0].end_ms, w[1].start_ms, w[1].end_ms));
        }
    }
    let mut tally: BTreeMap<GestureLabel, (u32, u32)> = BTreeMap::new();
    for seg in &sorted {
        let inside = events.iter().filter(|e| seg.contains(e.t_ms));
        let mut hit = false;
        let mut contradicted = false;
        for e in inside {
            hit |= seg.expect.expects(&e.kind);
            contradicted |= seg.expect.contradicted_by(&e.kind);
        }
        let entry = tally.entry(seg.expect).or_default();
        entry.0 += 1;
        if hit && !contradicted {
            entry.1 += 1;
        }
    }
    let gestures: Vec<GestureScore> = GestureLabel::ALL
        .into_iter()
        .filter_map(|g| {
            tally.get(&g).map(|&(attempts, correct)| GestureScore {
                gesture: g,
                attempts,
                correct,
                accuracy: 100.0 * f64::from(correct) / f64::from(attempts),
            })
        })
        .collect();
    let overall = gestures.iter().map(|s| s.accuracy).sum::<f64>() / gestures.len() as f64;
    Ok(AccuracyReport { gestures, overall })
}

/// Runs the gesture engine over `frames` and scores the result. Every
/// label must start within the frames' time range.
pub fn evaluate(frames: &[HandFrame], labels: &[LabeledSegment], cfg: &FsmConfig) -> Result<AccuracyReport, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::NoLabels);
    }
    let (Some(first), Some(last)) = (frames.first(), frames.last()) else {
        return Err(EvalError::NoFrames);
    };
    let (first, last) = (first.t_ms, last.t_ms);
    if let Some(s) = labels.iter().find(|s| s.start_ms < first || s.start_ms > last) {
        return Err(EvalError::LabelOutOfRange {
            start: s.start_ms,
            end: s.end_ms,
            first,
            last,
        });
    }
    let events = recognize(frames, cfg)?;
    score(&events, labels)
}

/// Non-`None` events the engine emits for `frames`.
pub fn recognize(frames: &[HandFrame], cfg: &FsmConfig) -> Result<Vec<GestureEvent>, EvalError> {
    let mut engine = GestureEngine::new(cfg.clone())?;
    let mut out = Vec::new();
    for f in frames {
        let ev = engine.step(f)?;
        if ev.kind != GestureKind::None {
            out.push(ev);
        }
    }
    Ok(out)
}
