//! The session event loop: frames and utterances merged by timestamp,
//! planned into actions, executed on a backend, and logged as JSONL.

use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::Action;
use crate::backend::InjectionBackend;
use crate::config::{ConfigError, EngineConfig, WeatherKind};
use crate::gesture::{FsmConfig, GestureEngine, GestureKind};
use crate::intent::{RuleError, RuleTable};
use crate::landmark::HandFrame;
use crate::plan::{gesture_to_actions, intent_to_actions, PlanContext};
use crate::pointer::{MapConfig, PointerState};
use crate::stream::{FrameStream, StreamError};
use crate::weather::{HttpWeather, StubWeather, WeatherError, WeatherProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    /// Every frame is processed.
    #[default]
    Replay,
    /// Stale queued frames are discarded in favor of the newest.
    Live,
}

/// One transcribed utterance: `{"t": <ms>, "text": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedUtterance {
    #[serde(rename = "t")]
    pub t_ms: u64,
    pub text: String,
}

#[derive(Debug, Error)]
pub enum UtteranceError {
    #[error("utterance line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("cannot read utterances: {0}")]
    Io(#[from] io::Error),
}

/// Reads an utterance JSONL file, skipping blank lines. The result is
/// stably sorted by timestamp.
pub fn load_utterances(reader: impl BufRead) -> Result<Vec<TimedUtterance>, UtteranceError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let u: TimedUtterance = serde_json::from_str(&line).map_err(|e| UtteranceError::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(u);
    }
    out.sort_by_key(|u| u.t_ms);
    Ok(out)
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("cannot write action log: {0}")]
    Log(#[from] io::Error),
}

pub struct SessionConfig {
    pub fsm: FsmConfig,
    pub map: MapConfig,
    pub rules: RuleTable,
    pub weather: Box<dyn WeatherProvider>,
    pub default_city: Option<String>,
    pub screenshot_dir: String,
    pub mode: RunMode,
}

impl SessionConfig {
    /// Validates `cfg` and loads the rule table and weather provider it
    /// names.
    pub fn from_engine(cfg: &EngineConfig, mode: RunMode) -> Result<Self, SessionError> {
        cfg.validate()?;
        let rules = match &cfg.rules {
            Some(path) => RuleTable::from_file(path)?,
            None => RuleTable::builtin(),
        };
        let weather: Box<dyn WeatherProvider> = match cfg.weather {
            WeatherKind::Stub => match &cfg.weather_fixtures {
                Some(path) => Box::new(StubWeather::from_file(path)?),
                None => Box::new(StubWeather::builtin()),
            },
            WeatherKind::Http => Box::new(HttpWeather::new(
                cfg.weather_url.clone().unwrap_or_default(),
                Duration::from_millis(cfg.weather_timeout_ms),
            )),
        };
        Ok(Self {
            fsm: cfg.fsm.clone(),
            map: cfg.map.clone(),
            rules,
            weather,
            default_city: cfg.default_city.clone(),
            screenshot_dir: cfg.screenshot_dir.clone(),
            mode,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SessionMetrics {
    pub frames: u64,
    /// Out-of-order frames plus live-mode lag drops.
    pub dropped_frames: u64,
    pub lag_dropped: u64,
    pub malformed: u64,
    /// Gesture events other than `None`.
    pub events: u64,
    pub utterances: u64,
    pub actions: u64,
    pub backend_errors: u64,
    /// Mean per-frame latency, from the start of parsing to the last
    /// executed action, in microseconds.
    pub mean_latency_us: f64,
    pub max_latency_us: f64,
}

struct Loop<'a, W: Write> {
    cfg: &'a SessionConfig,
    backend: &'a mut dyn InjectionBackend,
    log: &'a mut W,
    engine: GestureEngine,
    pointer: PointerState,
    metrics: SessionMetrics,
    latency_total: Duration,
}

impl<W: Write> Loop<'_, W> {
    fn execute(&mut self, actions: Vec<Action>) -> io::Result<()> {
        for action in actions {
            match self.backend.execute(&action) {
                Ok(()) => {
                    writeln!(self.log, "{}", action.to_log_line())?;
                    self.metrics.actions += 1;
                }
                Err(e) => {
                    tracing::warn!(t = action.t_ms, "action failed: {e}");
                    self.metrics.backend_errors += 1;
                }
            }
        }
        Ok(())
    }

    fn frame(&mut self, frame: &HandFrame, parse: Duration) -> io::Result<()> {
        let started = Instant::now();
        self.metrics.frames += 1;
        let ev = match self.engine.step(frame) {
            Ok(ev) => ev,
            Err(e) => {
                tracing::warn!("frame skipped: {e}");
                return Ok(());
            }
        };
        if ev.kind != GestureKind::None {
            self.metrics.events += 1;
        }
        let actions = gesture_to_actions(&ev, &mut self.pointer, &self.cfg.map);
        self.execute(actions)?;
        let latency = parse + started.elapsed();
        self.latency_total += latency;
        let us = latency.as_secs_f64() * 1e6;
        if us > self.metrics.max_latency_us {
            self.metrics.max_latency_us = us;
        }
        Ok(())
    }

    fn utterance(&mut self, u: &TimedUtterance) -> io::Result<()> {
        self.metrics.utterances += 1;
        let intent = self.cfg.rules.parse(&u.text);
        tracing::debug!(t = u.t_ms, intent = intent.name(), "utterance");
        let ctx = PlanContext {
            weather: self.cfg.weather.as_ref(),
            default_city: self.cfg.default_city.as_deref(),
            screenshot_dir: &self.cfg.screenshot_dir,
        };
        let actions = intent_to_actions(&intent, u.t_ms, &ctx, self.backend);
        self.execute(actions)
    }
}

/// Runs one session to completion. Utterances are interleaved with frames
/// by timestamp; on equal timestamps the frame goes first. The loop ends
/// when the frame source closes, or when `shutdown` is set, after which
/// remaining utterances are not processed. A stream error stops the
/// session after everything before it has been logged and flushed.
pub fn run_session<W: Write>(
    frames: Option<&mut FrameStream>,
    utterances: &[TimedUtterance],
    cfg: &SessionConfig,
    backend: &mut dyn InjectionBackend,
    log: &mut W,
    shutdown: Option<Arc<AtomicBool>>,
) -> Result<SessionMetrics, SessionError> {
    let stopped = || shutdown.as_ref().is_some_and(|f| f.load(Ordering::Relaxed));
    let mut lp = Loop {
        cfg,
        backend,
        log,
        engine: GestureEngine::new(cfg.fsm.clone())?,
        pointer: PointerState::default(),
        metrics: SessionMetrics::default(),
        latency_total: Duration::ZERO,
    };
    let mut pending = utterances.iter().peekable();
    let mut outcome = Ok(());
    if let Some(stream) = frames {
        loop {
            if stopped() {
                break;
            }
            let next = match cfg.mode {
                RunMode::Replay => stream.next_frame(),
                RunMode::Live => stream.next_latest(),
            };
            let frame = match next {
                Ok(Some(f)) => f,
                Ok(None) => break,
                Err(e) => {
                    outcome = Err(SessionError::from(e));
                    break;
                }
            };
            while let Some(u) = pending.next_if(|u| u.t_ms < frame.t_ms) {
                lp.utterance(u)?;
            }
            lp.frame(&frame, stream.last_parse_time())?;
        }
        let stats = stream.stats();
        lp.metrics.dropped_frames = stats.out_of_order + stats.lag_dropped;
        lp.metrics.lag_dropped = stats.lag_dropped;
        lp.metrics.malformed = stats.malformed;
    }
    if outcome.is_ok() && !stopped() {
        for u in pending {
            lp.utterance(u)?;
        }
    }
    lp.log.flush()?;
    outcome?;
    let mut metrics = lp.metrics;
    if metrics.frames > 0 {
        metrics.mean_latency_us = lp.latency_total.as_secs_f64() * 1e6 / metrics.frames as f64;
    }
    Ok(metrics)
}
