//! Planning: gesture events and intents become backend [`Action`]s.

use percent_encoding::{AsciiSet, NON_ALPHANUMERIC};

use crate::action::{Action, ActionKind, MouseButton};
use crate::backend::InjectionBackend;
use crate::gesture::{GestureEvent, GestureKind};
use crate::intent::Intent;
use crate::pointer::{map_to_screen, MapConfig, PointerState, Smoothed};
use crate::weather::{WeatherError, WeatherProvider};

/// Everything except RFC 3986 unreserved characters is escaped, so a space
/// becomes `%20`.
pub const QUERY_ENCODE_SET: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

pub const YOUTUBE_SEARCH_URL: &str = "https://www.youtube.com/results?search_query=";
pub const GOOGLE_SEARCH_URL: &str = "https://www.google.com/search?q=";

pub fn encode_query(q: &str) -> String {
    percent_encoding::utf8_percent_encode(q, QUERY_ENCODE_SET).to_string()
}

pub fn youtube_search_url(q: &str) -> String {
    format!("{YOUTUBE_SEARCH_URL}{}", encode_query(q))
}

pub fn google_search_url(q: &str) -> String {
    format!("{GOOGLE_SEARCH_URL}{}", encode_query(q))
}

/// Resolves a spoken site name to a URL: full URLs pass through, dotted
/// hosts get `https://`, bare names become `https://www.<name>.com`.
pub fn site_url(site: &str) -> String {
    let site = site.trim();
    if site.contains("://") {
        return site.to_string();
    }
    let compact: String = site
        .split_whitespace()
        .collect::<String>()
        .to_lowercase();
    if compact.contains('.') {
        format!("https://{compact}")
    } else {
        let name: String = compact.chars().filter(|c| c.is_alphanumeric() || *c == '-').collect();
        format!("https://www.{name}.com")
    }
}

pub fn screenshot_path(dir: &str, t_ms: u64) -> String {
    let dir = dir.trim_end_matches('/');
    if dir.is_empty() {
        format!("shot-{t_ms}.png")
    } else {
        format!("{dir}/shot-{t_ms}.png")
    }
}

/// Translates one gesture event. Move events advance the pointer state and
/// yield a `MoveTo` only when the smoothed cursor leaves the deadzone.
pub fn gesture_to_actions(ev: &GestureEvent, ptr: &mut PointerState, cfg: &MapConfig) -> Vec<Action> {
    let kind = match ev.kind {
        GestureKind::Move { x, y } => match ptr.smooth(map_to_screen(x, y, cfg), cfg) {
            Smoothed::Moved(x, y) => ActionKind::MoveTo { x, y },
            Smoothed::NoMotion => return Vec::new(),
        },
        GestureKind::LeftClick => ActionKind::Click { button: MouseButton::Left },
        GestureKind::RightClick => ActionKind::Click { button: MouseButton::Right },
        GestureKind::Scroll { dy } if dy != 0 => ActionKind::Scroll { dy },
        GestureKind::Scroll { .. } | GestureKind::None => return Vec::new(),
    };
    vec![Action::new(ev.t_ms, kind)]
}

pub const UNKNOWN_REPLY: &str = "command not recognized";
pub const NO_CITY_REPLY: &str = "please name a city";

/// Inputs to intent planning that come from outside the intent itself.
pub struct PlanContext<'a> {
    pub weather: &'a dyn WeatherProvider,
    pub default_city: Option<&'a str>,
    pub screenshot_dir: &'a str,
}

/// Translates one intent. Weather and battery lookups happen here so that
/// the spoken reply is part of the plan; lookup failures become replies,
/// never errors.
pub fn intent_to_actions(
    intent: &Intent,
    t_ms: u64,
    ctx: &PlanContext<'_>,
    backend: &mut dyn InjectionBackend,
) -> Vec<Action> {
    let key = |k: &str| vec![Action::new(t_ms, ActionKind::KeyTap { key: k.into() })];
    let say = |text: String| Action::new(t_ms, ActionKind::Say { text });
    match intent {
        Intent::MediaPlayPause => key("k"),
        Intent::SeekForward => key("l"),
        Intent::SeekBackward => key("j"),
        Intent::SpeedUp => key(">"),
        Intent::SlowDown => key("<"),
        Intent::Fullscreen => key("f"),
        Intent::YoutubeSearch(q) => vec![Action::new(t_ms, ActionKind::OpenUrl { url: youtube_search_url(q) })],
        Intent::GoogleSearch(q) => vec![Action::new(t_ms, ActionKind::OpenUrl { url: google_search_url(q) })],
        Intent::OpenUrl(site) => vec![Action::new(t_ms, ActionKind::OpenUrl { url: site_url(site) })],
        Intent::BrightnessDelta(d) => vec![Action::new(t_ms, ActionKind::BrightnessDelta { percent: *d })],
        Intent::Screenshot => vec![Action::new(
            t_ms,
            ActionKind::Screenshot {
                path: screenshot_path(ctx.screenshot_dir, t_ms),
            },
        )],
        Intent::TemperatureQuery(city) => {
            let Some(city) = city.as_deref().or(ctx.default_city) else {
                return vec![say(NO_CITY_REPLY.into())];
            };
            let reply = match ctx.weather.query(city) {
                Ok(report) => report.to_string(),
                Err(WeatherError::CityUnknown(c)) => format!("I have no weather for {c}"),
                Err(e) => {
                    tracing::warn!("weather lookup failed: {e}");
                    "the weather service is unavailable".to_string()
                }
            };
            vec![
                Action::new(t_ms, ActionKind::QueryWeather { city: city.to_string() }),
                say(reply),
            ]
        }
        Intent::BatteryStatus => {
            let text = match backend.battery() {
                Ok(b) if b.charging => format!("battery is at {} percent and charging", b.percent),
                Ok(b) => format!("battery is at {} percent", b.percent),
                Err(e) => {
                    tracing::warn!("battery lookup failed: {e}");
                    "battery status is unavailable".to_string()
                }
            };
            vec![say(text)]
        }
        Intent::Unknown(_) => vec![say(UNKNOWN_REPLY.into())],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{BatteryInfo, MockBackend};
    use crate::weather::StubWeather;

    fn ctx(w: &StubWeather) -> PlanContext<'_> {
        PlanContext {
            weather: w,
            default_city: None,
            screenshot_dir: "shots",
        }
    }

    fn kinds(actions: Vec<Action>) -> Vec<ActionKind> {
        actions.into_iter().map(|a| a.kind).collect()
    }

    #[test]
    fn key_bindings() {
        let w = StubWeather::builtin();
        let mut b = MockBackend::new();
        for (intent, k) in [
            (Intent::MediaPlayPause, "k"),
            (Intent::SeekForward, "l"),
            (Intent::SeekBackward, "j"),
            (Intent::SpeedUp, ">"),
            (Intent::SlowDown, "<"),
            (Intent::Fullscreen, "f"),
        ] {
            assert_eq!(
                kinds(intent_to_actions(&intent, 5, &ctx(&w), &mut b)),
                vec![ActionKind::KeyTap { key: k.into() }]
            );
        }
    }

    #[test]
    fn searches_and_sites() {
        let w = StubWeather::builtin();
        let mut b = MockBackend::new();
        assert_eq!(
            kinds(intent_to_actions(&Intent::YoutubeSearch("cats".into()), 1, &ctx(&w), &mut b)),
            vec![ActionKind::OpenUrl {
                url: "https://www.youtube.com/results?search_query=cats".into()
            }]
        );
        assert_eq!(google_search_url("rust & c++"), "https://www.google.com/search?q=rust%20%26%20c%2B%2B");
        assert_eq!(site_url("YouTube"), "https://www.youtube.com");
        assert_eq!(site_url("docs.rs"), "https://docs.rs");
        assert_eq!(site_url("http://a.b/c"), "http://a.b/c");
        assert_eq!(site_url("stack overflow"), "https://www.stackoverflow.com");
    }

    #[test]
    fn brightness_and_screenshot() {
        let w = StubWeather::builtin();
        let mut b = MockBackend::new();
        assert_eq!(
            kinds(intent_to_actions(&Intent::BrightnessDelta(-10), 1, &ctx(&w), &mut b)),
            vec![ActionKind::BrightnessDelta { percent: -10 }]
        );
        assert_eq!(
            kinds(intent_to_actions(&Intent::Screenshot, 1234, &ctx(&w), &mut b)),
            vec![ActionKind::Screenshot { path: "shots/shot-1234.png".into() }]
        );
        assert_eq!(screenshot_path("", 3), "shot-3.png");
    }

    #[test]
    fn weather_replies() {
        let w = StubWeather::builtin();
        let mut b = MockBackend::new();
        let got = kinds(intent_to_actions(&Intent::TemperatureQuery(Some("meerut".into())), 1, &ctx(&w), &mut b));
        assert_eq!(
            got,
            vec![
                ActionKind::QueryWeather { city: "meerut".into() },
                ActionKind::Say { text: "it is 31.5 degrees C in Meerut with clear sky".into() },
            ]
        );
        let got = kinds(intent_to_actions(&Intent::TemperatureQuery(Some("Atlantis".into())), 1, &ctx(&w), &mut b));
        assert_eq!(got[1], ActionKind::Say { text: "I have no weather for Atlantis".into() });
        let got = kinds(intent_to_actions(&Intent::TemperatureQuery(None), 1, &ctx(&w), &mut b));
        assert_eq!(got, vec![ActionKind::Say { text: NO_CITY_REPLY.into() }]);
        let c = PlanContext { default_city: Some("Pune"), ..ctx(&w) };
        let got = kinds(intent_to_actions(&Intent::TemperatureQuery(None), 1, &c, &mut b));
        assert_eq!(got[0], ActionKind::QueryWeather { city: "Pune".into() });
    }

    #[test]
    fn battery_and_unknown() {
        let w = StubWeather::builtin();
        let mut b = MockBackend::new().with_battery(BatteryInfo { percent: 42, charging: true });
        assert_eq!(
            kinds(intent_to_actions(&Intent::BatteryStatus, 1, &ctx(&w), &mut b)),
            vec![ActionKind::Say { text: "battery is at 42 percent and charging".into() }]
        );
        assert_eq!(
            kinds(intent_to_actions(&Intent::Unknown("x".into()), 1, &ctx(&w), &mut b)),
            vec![ActionKind::Say { text: UNKNOWN_REPLY.into() }]
        );
    }

    #[test]
    fn gesture_translation() {
        let cfg = MapConfig::default();
        let mut ptr = PointerState::default();
        let ev = |kind| GestureEvent { t_ms: 9, kind };
        assert_eq!(
            kinds(gesture_to_actions(&ev(GestureKind::LeftClick), &mut ptr, &cfg)),
            vec![ActionKind::Click { button: MouseButton::Left }]
        );
        assert_eq!(
            kinds(gesture_to_actions(&ev(GestureKind::RightClick), &mut ptr, &cfg)),
            vec![ActionKind::Click { button: MouseButton::Right }]
        );
        assert_eq!(
            kinds(gesture_to_actions(&ev(GestureKind::Scroll { dy: -2 }), &mut ptr, &cfg)),
            vec![ActionKind::Scroll { dy: -2 }]
        );
        assert!(gesture_to_actions(&ev(GestureKind::None), &mut ptr, &cfg).is_empty());
    }

    #[test]
    fn move_converges_to_centre() {
        let cfg = MapConfig::default();
        let mut ptr = PointerState::default();
        let mut last = (0, 0);
        let mut dist = f64::INFINITY;
        for i in 0..60 {
            let ev = GestureEvent { t_ms: i, kind: GestureKind::Move { x: 0.5, y: 0.5 } };
            for a in gesture_to_actions(&ev, &mut ptr, &cfg) {
                let ActionKind::MoveTo { x, y } = a.kind else { panic!() };
                let d = (f64::from(x) - 960.0).hypot(f64::from(y) - 540.0);
                assert!(d < dist);
                dist = d;
                last = (x, y);
            }
        }
        let d = (f64::from(last.0) - 960.0).hypot(f64::from(last.1) - 540.0);
        assert!(d < cfg.deadzone_px + 1.0, "{last:?}");
    }
}
