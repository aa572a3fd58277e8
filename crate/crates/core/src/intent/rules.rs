//! Ordered keyword rules with optional slot templates.
//!
//! Rule files hold one rule per line:
//!
//! ```text
//! priority | keyword groups | template | intent
//! 11       | search youtube | search <q> on youtube | YoutubeSearch
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use super::{normalize_token, Intent, Utterance};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("rule table: {0}")]
    Table(String),
    #[error("cannot read rule file: {0}")]
    Io(#[from] std::io::Error),
}

/// Intent constructors a rule can name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntentCtor {
    MediaPlayPause,
    SeekForward,
    SeekBackward,
    SpeedUp,
    SlowDown,
    Fullscreen,
    YoutubeSearch,
    GoogleSearch,
    OpenUrl,
    BrightnessUp,
    BrightnessDown,
    Screenshot,
    TemperatureQuery,
    BatteryStatus,
    Unknown,
}

/// Brightness step when no amount is spoken.
pub const DEFAULT_BRIGHTNESS_STEP: i32 = 10;

impl IntentCtor {
    /// The slot this constructor reads, if any.
    fn slot(self) -> Option<&'static str> {
        match self {
            IntentCtor::YoutubeSearch | IntentCtor::GoogleSearch => Some("q"),
            IntentCtor::OpenUrl => Some("site"),
            IntentCtor::BrightnessUp | IntentCtor::BrightnessDown => Some("n"),
            IntentCtor::TemperatureQuery => Some("city"),
            _ => None,
        }
    }

    /// Whether the constructor can build an intent without its slot.
    fn slot_optional(self) -> bool {
        matches!(
            self,
            IntentCtor::BrightnessUp | IntentCtor::BrightnessDown | IntentCtor::TemperatureQuery
        )
    }

    /// Builds the intent; `None` means the slot value is unusable and the
    /// rule should not match.
    fn build(self, slot: Option<&SlotValue>, raw: &str) -> Option<Intent> {
        let text = || slot.map(|s| s.text.clone());
        Some(match self {
            IntentCtor::MediaPlayPause => Intent::MediaPlayPause,
            IntentCtor::SeekForward => Intent::SeekForward,
            IntentCtor::SeekBackward => Intent::SeekBackward,
            IntentCtor::SpeedUp => Intent::SpeedUp,
            IntentCtor::SlowDown => Intent::SlowDown,
            IntentCtor::Fullscreen => Intent::Fullscreen,
            IntentCtor::YoutubeSearch => Intent::YoutubeSearch(text()?),
            IntentCtor::GoogleSearch => Intent::GoogleSearch(text()?),
            IntentCtor::OpenUrl => Intent::OpenUrl(text()?),
            IntentCtor::BrightnessUp => Intent::BrightnessDelta(brightness_amount(slot)?),
            IntentCtor::BrightnessDown => Intent::BrightnessDelta(-brightness_amount(slot)?),
            IntentCtor::Screenshot => Intent::Screenshot,
            IntentCtor::TemperatureQuery => Intent::TemperatureQuery(text()),
            IntentCtor::BatteryStatus => Intent::BatteryStatus,
            IntentCtor::Unknown => Intent::Unknown(raw.to_string()),
        })
    }
}

/// Leading integer of the slot, capped at 100. No slot or a non-numeric
/// slot gives the default step; zero rejects the match.
fn brightness_amount(slot: Option<&SlotValue>) -> Option<i32> {
    let Some(n) = slot.and_then(|s| s.tokens.first()).and_then(|t| t.parse::<u64>().ok()) else {
        return Some(DEFAULT_BRIGHTNESS_STEP);
    };
    match n {
        0 => None,
        n => Some(n.min(100) as i32),
    }
}

impl FromStr for IntentCtor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "MediaPlayPause" => IntentCtor::MediaPlayPause,
            "SeekForward" => IntentCtor::SeekForward,
            "SeekBackward" => IntentCtor::SeekBackward,
            "SpeedUp" => IntentCtor::SpeedUp,
            "SlowDown" => IntentCtor::SlowDown,
            "Fullscreen" => IntentCtor::Fullscreen,
            "YoutubeSearch" => IntentCtor::YoutubeSearch,
            "GoogleSearch" => IntentCtor::GoogleSearch,
            "OpenUrl" => IntentCtor::OpenUrl,
            "BrightnessUp" => IntentCtor::BrightnessUp,
            "BrightnessDown" => IntentCtor::BrightnessDown,
            "Screenshot" => IntentCtor::Screenshot,
            "TemperatureQuery" => IntentCtor::TemperatureQuery,
            "BatteryStatus" => IntentCtor::BatteryStatus,
            "Unknown" => IntentCtor::Unknown,
            other => return Err(format!("unknown intent `{other}`")),
        })
    }
}

/// Literal prefix, one slot, literal suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    prefix: Vec<String>,
    slot: String,
    optional: bool,
    suffix: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotValue {
    /// Normalized tokens of the span.
    pub tokens: Vec<String>,
    /// Original text of the span with surrounding punctuation trimmed.
    pub text: String,
}

impl Template {
    pub fn parse(src: &str) -> Result<Self, String> {
        let mut prefix = Vec::new();
        let mut suffix = Vec::new();
        let mut slot: Option<(String, bool)> = None;
        for word in src.split_whitespace() {
            if let Some(inner) = word.strip_prefix('<').and_then(|w| w.strip_suffix('>')) {
                if slot.is_some() {
                    return Err("template has more than one slot".into());
                }
                let (name, optional) = match inner.strip_suffix('?') {
                    Some(name) => (name, true),
                    None => (inner, false),
                };
                if name.is_empty() {
                    return Err("empty slot name".into());
                }
                slot = Some((name.to_string(), optional));
            } else {
                let tok = normalize_token(word);
                if tok.is_empty() {
                    return Err(format!("template literal `{word}` is empty after normalization"));
                }
                if slot.is_some() { &mut suffix } else { &mut prefix }.push(tok);
            }
        }
        let (slot, optional) = slot.ok_or("template has no slot")?;
        Ok(Self {
            prefix,
            slot,
            optional,
            suffix,
        })
    }

    pub fn slot_name(&self) -> &str {
        &self.slot
    }

    pub fn is_optional(&self) -> bool {
        self.optional
    }

    /// Captures the token span between the first occurrence of the prefix
    /// and the last occurrence of the suffix after it. Empty spans fail.
    pub fn capture(&self, utt: &Utterance<'_>) -> Option<SlotValue> {
        let toks = &utt.tokens;
        let start = find_seq(toks, &self.prefix, 0, false)? + self.prefix.len();
        let end = if self.suffix.is_empty() {
            toks.len()
        } else {
            find_seq(toks, &self.suffix, start, true)?
        };
        if end <= start {
            return None;
        }
        let text = utt.raw_words[start..end].join(" ");
        let text = text
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_string();
        if text.is_empty() {
            return None;
        }
        Some(SlotValue {
            tokens: toks[start..end].to_vec(),
            text,
        })
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.prefix.clone();
        parts.push(format!("<{}{}>", self.slot, if self.optional { "?" } else { "" }));
        parts.extend(self.suffix.iter().cloned());
        f.write_str(&parts.join(" "))
    }
}

/// Position of `needle` in `hay` at or after `from`; first or last match.
fn find_seq(hay: &[String], needle: &[String], from: usize, last: bool) -> Option<usize> {
    if needle.is_empty() {
        return Some(from);
    }
    if hay.len() < needle.len() {
        return None;
    }
    let mut hits = (from..=hay.len() - needle.len()).filter(|&i| hay[i..i + needle.len()] == *needle);
    if last {
        hits.last()
    } else {
        hits.next()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub priority: u32,
    /// Each group matches when any of its alternatives is a token.
    pub keywords: Vec<Vec<String>>,
    pub template: Option<Template>,
    pub ctor: IntentCtor,
}

impl Rule {
    fn keywords_match(&self, utt: &Utterance<'_>) -> bool {
        self.keywords
            .iter()
            .all(|group| group.iter().any(|alt| utt.tokens.contains(alt)))
    }

    /// The intent this rule yields for `utt`, if it matches.
    pub fn apply(&self, utt: &Utterance<'_>) -> Option<Intent> {
        if !self.keywords_match(utt) {
            return None;
        }
        let slot = match &self.template {
            Some(t) => match t.capture(utt) {
                Some(v) => Some(v),
                None if t.is_optional() => None,
                None => return None,
            },
            None => None,
        };
        self.ctor.build(slot.as_ref(), utt.raw)
    }

    fn parse_line(line_no: usize, line: &str) -> Result<Self, RuleError> {
        let err = |reason: String| RuleError::Syntax {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        let [priority, keywords, template, intent] = fields[..] else {
            return Err(err(format!("expected 4 `|`-separated fields, got {}", fields.len())));
        };
        let priority: u32 = priority
            .parse()
            .map_err(|_| err(format!("bad priority `{priority}`")))?;
        let ctor: IntentCtor = intent.parse().map_err(err)?;
        let keywords: Vec<Vec<String>> = if keywords == "*" {
            Vec::new()
        } else {
            keywords
                .split_whitespace()
                .map(|group| {
                    group
                        .split('/')
                        .map(normalize_token)
                        .filter(|t| !t.is_empty())
                        .collect::<Vec<_>>()
                })
                .filter(|g| !g.is_empty())
                .collect()
        };
        if keywords.is_empty() && ctor != IntentCtor::Unknown {
            return Err(err("only the Unknown rule may have no keywords".into()));
        }
        let template = match template {
            "-" | "" => None,
            t => Some(Template::parse(t).map_err(err)?),
        };
        match (ctor.slot(), &template) {
            (Some(name), Some(t)) if t.slot_name() != name => {
                return Err(err(format!("{intent} reads slot <{name}>, template has <{}>", t.slot_name())));
            }
            (Some(name), None) if !ctor.slot_optional() => {
                return Err(err(format!("{intent} needs a template with slot <{name}>")));
            }
            (Some(_), Some(t)) if t.is_optional() && !ctor.slot_optional() => {
                return Err(err(format!("{intent} cannot take an optional slot")));
            }
            (None, Some(_)) => return Err(err(format!("{intent} takes no slot"))),
            _ => {}
        }
        Ok(Rule {
            priority,
            keywords,
            template,
            ctor,
        })
    }
}

/// Immutable ordered rule list ending in the catch-all.
#[derive(Debug, Clone)]
pub struct RuleTable {
    rules: Vec<Rule>,
}

impl RuleTable {
    /// The vocabulary shipped with the engine.
    pub fn builtin() -> Self {
        include_str!("default_rules.txt")
            .parse()
            .expect("built-in rule table is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self, RuleError> {
        std::fs::read_to_string(path)?.parse()
    }

    /// Sorts by priority and checks the table invariants: unique
    /// priorities and exactly one `Unknown` rule, which comes last.
    pub fn new(mut rules: Vec<Rule>) -> Result<Self, RuleError> {
        rules.sort_by_key(|r| r.priority);
        if let Some(w) = rules.windows(2).find(|w| w[0].priority == w[1].priority) {
            return Err(RuleError::Table(format!("duplicate priority {}", w[0].priority)));
        }
        let unknowns = rules.iter().filter(|r| r.ctor == IntentCtor::Unknown).count();
        if unknowns != 1 {
            return Err(RuleError::Table(format!(
                "need exactly one Unknown rule, found {unknowns}"
            )));
        }
        if rules.last().map(|r| r.ctor) != Some(IntentCtor::Unknown) {
            return Err(RuleError::Table("the Unknown rule must have the highest priority number".into()));
        }
        if !rules.last().is_some_and(|r| r.keywords.is_empty() && r.template.is_none()) {
            return Err(RuleError::Table("the Unknown rule must be `* | -`".into()));
        }
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// First matching rule and the intent it produced. The catch-all
    /// guarantees a match.
    pub fn matching(&self, text: &str) -> (&Rule, Intent) {
        let utt = Utterance::new(text);
        self.rules
            .iter()
            .find_map(|r| r.apply(&utt).map(|i| (r, i)))
            .expect("rule table ends with a catch-all")
    }

    pub fn parse(&self, text: &str) -> Intent {
        self.matching(text).1
    }
}

impl FromStr for RuleTable {
    type Err = RuleError;

    fn from_str(src: &str) -> Result<Self, Self::Err> {
        let rules = src
            .lines()
            .enumerate()
            .filter(|(_, l)| {
                let l = l.trim();
                !l.is_empty() && !l.starts_with('#')
            })
            .map(|(i, l)| Rule::parse_line(i + 1, l))
            .collect::<Result<Vec<_>, _>>()?;
        RuleTable::new(rules)
    }
}
