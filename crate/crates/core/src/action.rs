//! Backend-level actions and their JSONL log form:
//! `{"t": <ms>, "action": "<kind>", "args": {...}}`.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MouseButton {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "args", rename_all = "snake_case")]
pub enum ActionKind {
    MoveTo { x: u32, y: u32 },
    Click { button: MouseButton },
    /// Positive scrolls up. Never zero.
    Scroll { dy: i32 },
    KeyTap { key: String },
    BrightnessDelta { percent: i32 },
    Screenshot { path: String },
    OpenUrl { url: String },
    Say { text: String },
    QueryWeather { city: String },
}

/// Fieldless mirror of [`ActionKind`], used for capability flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionTag {
    MoveTo,
    Click,
    Scroll,
    KeyTap,
    BrightnessDelta,
    Screenshot,
    OpenUrl,
    Say,
    QueryWeather,
}

impl ActionTag {
    pub const ALL: [ActionTag; 9] = [
        ActionTag::MoveTo,
        ActionTag::Click,
        ActionTag::Scroll,
        ActionTag::KeyTap,
        ActionTag::BrightnessDelta,
        ActionTag::Screenshot,
        ActionTag::OpenUrl,
        ActionTag::Say,
        ActionTag::QueryWeather,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionTag::MoveTo => "move_to",
            ActionTag::Click => "click",
            ActionTag::Scroll => "scroll",
            ActionTag::KeyTap => "key_tap",
            ActionTag::BrightnessDelta => "brightness_delta",
            ActionTag::Screenshot => "screenshot",
            ActionTag::OpenUrl => "open_url",
            ActionTag::Say => "say",
            ActionTag::QueryWeather => "query_weather",
        }
    }
}

impl fmt::Display for ActionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl ActionKind {
    pub fn tag(&self) -> ActionTag {
        match self {
            ActionKind::MoveTo { .. } => ActionTag::MoveTo,
            ActionKind::Click { .. } => ActionTag::Click,
            ActionKind::Scroll { .. } => ActionTag::Scroll,
            ActionKind::KeyTap { .. } => ActionTag::KeyTap,
            ActionKind::BrightnessDelta { .. } => ActionTag::BrightnessDelta,
            ActionKind::Screenshot { .. } => ActionTag::Screenshot,
            ActionKind::OpenUrl { .. } => ActionTag::OpenUrl,
            ActionKind::Say { .. } => ActionTag::Say,
            ActionKind::QueryWeather { .. } => ActionTag::QueryWeather,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    #[serde(rename = "t")]
    pub t_ms: u64,
    #[serde(flatten)]
    pub kind: ActionKind,
}

impl Action {
    pub fn new(t_ms: u64, kind: ActionKind) -> Self {
        Self { t_ms, kind }
    }

    /// One action-log line, without the trailing newline.
    pub fn to_log_line(&self) -> String {
        serde_json::to_string(self).expect("action serialization is infallible")
    }

    pub fn from_log_line(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }
}
