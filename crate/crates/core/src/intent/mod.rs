//! Utterance-to-intent parsing over an ordered keyword rule table.

mod rules;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::Value;

pub use rules::{IntentCtor, Rule, RuleError, RuleTable, SlotValue, Template, DEFAULT_BRIGHTNESS_STEP};

/// A parsed assistant command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Intent {
    MediaPlayPause,
    SeekForward,
    SeekBackward,
    SpeedUp,
    SlowDown,
    Fullscreen,
    YoutubeSearch(String),
    GoogleSearch(String),
    OpenUrl(String),
    /// Signed percent in `[-100, 100]`, never zero.
    BrightnessDelta(i32),
    Screenshot,
    TemperatureQuery(Option<String>),
    BatteryStatus,
    Unknown(String),
}

impl Intent {
    pub fn name(&self) -> &'static str {
        match self {
            Intent::MediaPlayPause => "MediaPlayPause",
            Intent::SeekForward => "SeekForward",
            Intent::SeekBackward => "SeekBackward",
            Intent::SpeedUp => "SpeedUp",
            Intent::SlowDown => "SlowDown",
            Intent::Fullscreen => "Fullscreen",
            Intent::YoutubeSearch(_) => "YoutubeSearch",
            Intent::GoogleSearch(_) => "GoogleSearch",
            Intent::OpenUrl(_) => "OpenUrl",
            Intent::BrightnessDelta(_) => "BrightnessDelta",
            Intent::Screenshot => "Screenshot",
            Intent::TemperatureQuery(_) => "TemperatureQuery",
            Intent::BatteryStatus => "BatteryStatus",
            Intent::Unknown(_) => "Unknown",
        }
    }

    pub fn slots(&self) -> BTreeMap<&'static str, Value> {
        let mut m = BTreeMap::new();
        match self {
            Intent::YoutubeSearch(q) | Intent::GoogleSearch(q) => {
                m.insert("query", Value::from(q.as_str()));
            }
            Intent::OpenUrl(site) => {
                m.insert("site", Value::from(site.as_str()));
            }
            Intent::BrightnessDelta(d) => {
                m.insert("percent", Value::from(*d));
            }
            Intent::TemperatureQuery(Some(city)) => {
                m.insert("city", Value::from(city.as_str()));
            }
            Intent::Unknown(raw) => {
                m.insert("raw", Value::from(raw.as_str()));
            }
            _ => {}
        }
        m
    }
}

/// `{"intent": "<name>", "slots": {...}}`
impl Serialize for Intent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2))?;
        map.serialize_entry("intent", self.name())?;
        map.serialize_entry("slots", &self.slots())?;
        map.end()
    }
}

/// Lowercases one whitespace-free word and drops non-alphanumerics.
pub(crate) fn normalize_token(word: &str) -> String {
    word.chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric())
        .collect()
}

/// Lowercase, strip punctuation, collapse whitespace, split into tokens.
pub fn normalize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Normalized tokens kept aligned with the original words they came from,
/// so slots can be reported in the speaker's own spelling.
#[derive(Debug, Clone)]
pub struct Utterance<'a> {
    pub raw: &'a str,
    pub tokens: Vec<String>,
    pub raw_words: Vec<&'a str>,
}

impl<'a> Utterance<'a> {
    pub fn new(raw: &'a str) -> Self {
        let (tokens, raw_words) = raw
            .split_whitespace()
            .filter_map(|w| {
                let t = normalize_token(w);
                (!t.is_empty()).then_some((t, w))
            })
            .unzip();
        Self {
            raw,
            tokens,
            raw_words,
        }
    }
}

fn builtin_table() -> &'static RuleTable {
    static TABLE: OnceLock<RuleTable> = OnceLock::new();
    TABLE.get_or_init(RuleTable::builtin)
}

/// Parses with the built-in rule table. Total: unmatched text becomes
/// [`Intent::Unknown`].
pub fn parse_intent(text: &str) -> Intent {
    builtin_table().parse(text)
}
