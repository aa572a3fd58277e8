//! Injection backends: the executors of [`Action`]s.
//!
//! [`MockBackend`] is the reference implementation and records everything it
//! accepts. [`OsBackend`] shells out to common desktop tools when they are
//! installed and reports every other action kind as unsupported.

use std::collections::BTreeSet;
use std::env;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::Serialize;
use thiserror::Error;

use crate::action::{Action, ActionKind, ActionTag, MouseButton};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend does not support `{0}`")]
    UnsupportedAction(ActionTag),
    #[error("backend failure: {0}")]
    Failed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BatteryInfo {
    pub percent: u8,
    pub charging: bool,
}

pub trait InjectionBackend {
    fn name(&self) -> &str;

    /// Capability flag for one action kind.
    fn supports(&self, tag: ActionTag) -> bool;

    /// Executes one action. Kinds the backend does not implement must be
    /// rejected with [`BackendError::UnsupportedAction`], never dropped.
    fn execute(&mut self, action: &Action) -> Result<(), BackendError>;

    fn battery(&mut self) -> Result<BatteryInfo, BackendError>;

    /// Screen size when the backend can detect it.
    fn screen_size(&self) -> Option<(u32, u32)> {
        None
    }
}

/// Records accepted actions in memory. Individual kinds can be configured
/// to fail or to be unsupported, for exercising error isolation.
#[derive(Debug, Clone)]
pub struct MockBackend {
    executed: Vec<Action>,
    failing: BTreeSet<ActionTag>,
    unsupported: BTreeSet<ActionTag>,
    battery: BatteryInfo,
}

impl Default for MockBackend {
    fn default() -> Self {
        Self {
            executed: Vec::new(),
            failing: BTreeSet::new(),
            unsupported: BTreeSet::new(),
            battery: BatteryInfo {
                percent: 80,
                charging: false,
            },
        }
    }
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn failing(mut self, tag: ActionTag) -> Self {
        self.failing.insert(tag);
        self
    }

    pub fn without(mut self, tag: ActionTag) -> Self {
        self.unsupported.insert(tag);
        self
    }

    pub fn with_battery(mut self, battery: BatteryInfo) -> Self {
        self.battery = battery;
        self
    }

    pub fn executed(&self) -> &[Action] {
        &self.executed
    }

    pub fn take_executed(&mut self) -> Vec<Action> {
        std::mem::take(&mut self.executed)
    }
}

impl InjectionBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn supports(&self, tag: ActionTag) -> bool {
        !self.unsupported.contains(&tag)
    }

    fn execute(&mut self, action: &Action) -> Result<(), BackendError> {
        let tag = action.kind.tag();
        if !self.supports(tag) {
            return Err(BackendError::UnsupportedAction(tag));
        }
        if self.failing.contains(&tag) {
            return Err(BackendError::Failed(format!("mock failure for {tag}")));
        }
        self.executed.push(action.clone());
        Ok(())
    }

    fn battery(&mut self) -> Result<BatteryInfo, BackendError> {
        Ok(self.battery)
    }
}

fn find_in_path(tool: &str) -> Option<PathBuf> {
    let paths = env::var_os("PATH")?;
    env::split_paths(&paths)
        .map(|dir| dir.join(tool))
        .find(|p| p.is_file())
}

/// Thin adapter over desktop command-line tools (`xdotool`,
/// `brightnessctl`, `xdg-open`, a screenshot tool, a speech tool).
#[derive(Debug, Clone, Default)]
pub struct OsBackend {
    xdotool: Option<PathBuf>,
    brightnessctl: Option<PathBuf>,
    opener: Option<PathBuf>,
    screenshot: Option<(PathBuf, &'static [&'static str])>,
    speech: Option<PathBuf>,
    battery_dir: Option<PathBuf>,
}

impl OsBackend {
    /// Probes `PATH` and `/sys` for the tools this backend drives.
    pub fn detect() -> Self {
        let screenshot = [
            ("scrot", &[][..]),
            ("grim", &[][..]),
            ("import", &["-window", "root"][..]),
        ]
        .into_iter()
        .find_map(|(tool, args)| find_in_path(tool).map(|p| (p, args)));
        let battery_dir = std::fs::read_dir("/sys/class/power_supply")
            .ok()
            .into_iter()
            .flatten()
            .filter_map(Result::ok)
            .map(|e| e.path())
            .find(|p| p.join("capacity").is_file());
        Self {
            xdotool: find_in_path("xdotool"),
            brightnessctl: find_in_path("brightnessctl"),
            opener: find_in_path("xdg-open"),
            screenshot,
            speech: find_in_path("espeak").or_else(|| find_in_path("spd-say")),
            battery_dir,
        }
    }

    fn run(tool: &Path, args: &[String]) -> Result<(), BackendError> {
        let status = Command::new(tool)
            .args(args)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map_err(|e| BackendError::Failed(format!("{}: {e}", tool.display())))?;
        if status.success() {
            Ok(())
        } else {
            Err(BackendError::Failed(format!("{} exited with {status}", tool.display())))
        }
    }

    fn xdotool_key(key: &str) -> String {
        match key {
            "<" => "less".into(),
            ">" => "greater".into(),
            other => other.into(),
        }
    }
}

impl InjectionBackend for OsBackend {
    fn name(&self) -> &str {
        "os"
    }

    fn supports(&self, tag: ActionTag) -> bool {
        match tag {
            ActionTag::MoveTo | ActionTag::Click | ActionTag::Scroll | ActionTag::KeyTap => {
                self.xdotool.is_some()
            }
            ActionTag::BrightnessDelta => self.brightnessctl.is_some(),
            ActionTag::Screenshot => self.screenshot.is_some(),
            ActionTag::OpenUrl => self.opener.is_some(),
            ActionTag::Say => self.speech.is_some(),
            // The provider has already answered by the time this runs.
            ActionTag::QueryWeather => true,
        }
    }

    fn execute(&mut self, action: &Action) -> Result<(), BackendError> {
        let tag = action.kind.tag();
        if !self.supports(tag) {
            return Err(BackendError::UnsupportedAction(tag));
        }
        let unsupported = || BackendError::UnsupportedAction(tag);
        match &action.kind {
            ActionKind::MoveTo { x, y } => {
                let tool = self.xdotool.as_ref().ok_or_else(unsupported)?;
                Self::run(tool, &["mousemove".into(), x.to_string(), y.to_string()])
            }
            ActionKind::Click { button } => {
                let tool = self.xdotool.as_ref().ok_or_else(unsupported)?;
                let b = match button {
                    MouseButton::Left => "1",
                    MouseButton::Right => "3",
                };
                Self::run(tool, &["click".into(), b.into()])
            }
            ActionKind::Scroll { dy } => {
                let tool = self.xdotool.as_ref().ok_or_else(unsupported)?;
                let button = if *dy > 0 { "4" } else { "5" };
                Self::run(
                    tool,
                    &[
                        "click".into(),
                        "--repeat".into(),
                        dy.unsigned_abs().to_string(),
                        button.into(),
                    ],
                )
            }
            ActionKind::KeyTap { key } => {
                let tool = self.xdotool.as_ref().ok_or_else(unsupported)?;
                Self::run(tool, &["key".into(), Self::xdotool_key(key)])
            }
            ActionKind::BrightnessDelta { percent } => {
                let tool = self.brightnessctl.as_ref().ok_or_else(unsupported)?;
                let arg = if *percent >= 0 {
                    format!("+{percent}%")
                } else {
                    format!("{}%-", percent.unsigned_abs())
                };
                Self::run(tool, &["set".into(), arg])
            }
            ActionKind::Screenshot { path } => {
                let (tool, args) = self.screenshot.as_ref().ok_or_else(unsupported)?;
                if let Some(dir) = Path::new(path).parent() {
                    std::fs::create_dir_all(dir).map_err(|e| BackendError::Failed(e.to_string()))?;
                }
                let mut argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
                argv.push(path.clone());
                Self::run(tool, &argv)
            }
            ActionKind::OpenUrl { url } => {
                let tool = self.opener.as_ref().ok_or_else(unsupported)?;
                Self::run(tool, &[url.clone()])
            }
            ActionKind::Say { text } => {
                let tool = self.speech.as_ref().ok_or_else(unsupported)?;
                Self::run(tool, &[text.clone()])
            }
            ActionKind::QueryWeather { .. } => Ok(()),
        }
    }

    fn battery(&mut self) -> Result<BatteryInfo, BackendError> {
        let dir = self
            .battery_dir
            .as_ref()
            .ok_or_else(|| BackendError::Failed("no battery found".into()))?;
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map(|s| s.trim().to_string())
                .map_err(|e| BackendError::Failed(e.to_string()))
        };
        let percent = read("capacity")?
            .parse::<u8>()
            .map_err(|e| BackendError::Failed(e.to_string()))?;
        let charging = read("status").map(|s| s == "Charging").unwrap_or(false);
        Ok(BatteryInfo { percent, charging })
    }

    fn screen_size(&self) -> Option<(u32, u32)> {
        let tool = self.xdotool.as_ref()?;
        let out = Command::new(tool).arg("getdisplaygeometry").output().ok()?;
        let text = String::from_utf8(out.stdout).ok()?;
        let mut it = text.split_whitespace().map(|v| v.parse::<u32>());
        match (it.next(), it.next()) {
            (Some(Ok(w)), Some(Ok(h))) if w > 0 && h > 0 => Some((w, h)),
            _ => None,
        }
    }
}
