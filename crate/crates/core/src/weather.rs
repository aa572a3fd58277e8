//! Weather providers behind one trait: an offline fixtures stub and an HTTP
//! provider driven by a URL template.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUILTIN_FIXTURES: &str = include_str!("../fixtures/weather.json");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeatherReport {
    pub city: String,
    pub temp_c: f64,
    pub unit: &'static str,
    pub condition: String,
}

impl fmt::Display for WeatherReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "it is {:.1} degrees {} in {} with {}",
            self.temp_c, self.unit, self.city, self.condition
        )
    }
}

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("no weather known for city `{0}`")]
    CityUnknown(String),
    #[error("weather provider unreachable: {0}")]
    ProviderUnreachable(String),
    #[error("bad weather response: {0}")]
    BadResponse(String),
    #[error("cannot load weather fixtures: {0}")]
    Fixtures(String),
}

pub trait WeatherProvider {
    fn query(&self, city: &str) -> Result<WeatherReport, WeatherError>;
}

/// One record of the fixtures map and of the HTTP response body.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct WeatherRecord {
    pub temp_c: f64,
    pub condition: String,
}

/// Canned answers from a JSON map `city -> {temp_c, condition}`. City
/// lookup ignores case and surrounding whitespace.
#[derive(Debug, Clone)]
pub struct StubWeather {
    records: BTreeMap<String, (String, WeatherRecord)>,
}

impl StubWeather {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_FIXTURES).expect("built-in weather fixtures are valid")
    }

    pub fn from_json(text: &str) -> Result<Self, WeatherError> {
        let map: BTreeMap<String, WeatherRecord> =
            serde_json::from_str(text).map_err(|e| WeatherError::Fixtures(e.to_string()))?;
        let records = map
            .into_iter()
            .map(|(city, rec)| (city.trim().to_lowercase(), (city, rec)))
            .collect();
        Ok(Self { records })
    }

    pub fn from_file(path: &Path) -> Result<Self, WeatherError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| WeatherError::Fixtures(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn cities(&self) -> impl Iterator<Item = &str> {
        self.records.values().map(|(c, _)| c.as_str())
    }
}

impl WeatherProvider for StubWeather {
    fn query(&self, city: &str) -> Result<WeatherReport, WeatherError> {
        let (name, rec) = self
            .records
            .get(&city.trim().to_lowercase())
            .ok_or_else(|| WeatherError::CityUnknown(city.to_string()))?;
        Ok(WeatherReport {
            city: name.clone(),
            temp_c: rec.temp_c,
            unit: "C",
            condition: rec.condition.clone(),
        })
    }
}

/// GETs `url_template` with `{city}` replaced by the percent-encoded city
/// name and expects a `{temp_c, condition}` JSON body. A 404 means the city
/// is unknown; timeouts and connection failures mean unreachable.
#[derive(Debug)]
pub struct HttpWeather {
    url_template: String,
    agent: ureq::Agent,
}

impl HttpWeather {
    pub fn new(url_template: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            url_template: url_template.into(),
            agent,
        }
    }

    pub fn url_for(&self, city: &str) -> String {
        let encoded = percent_encoding::utf8_percent_encode(city.trim(), crate::plan::QUERY_ENCODE_SET);
        self.url_template.replace("{city}", &encoded.to_string())
    }
}

impl WeatherProvider for HttpWeather {
    fn query(&self, city: &str) -> Result<WeatherReport, WeatherError> {
        let url = self.url_for(city);
        let mut resp = match self.agent.get(&url).call() {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(404)) => {
                return Err(WeatherError::CityUnknown(city.to_string()))
            }
            Err(ureq::Error::StatusCode(code)) => {
                return Err(WeatherError::BadResponse(format!("HTTP {code}")))
            }
            Err(e) => return Err(WeatherError::ProviderUnreachable(e.to_string())),
        };
        let rec: WeatherRecord = resp
            .body_mut()
            .read_json()
            .map_err(|e| WeatherError::BadResponse(e.to_string()))?;
        Ok(WeatherReport {
            city: city.trim().to_string(),
            temp_c: rec.temp_c,
            unit: "C",
            condition: rec.condition,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;
    use std::thread;

    #[test]
    fn stub_hit_and_miss() {
        let w = StubWeather::builtin();
        let r = w.query("  meerut ").unwrap();
        assert_eq!(r.city, "Meerut");
        assert_eq!(r.temp_c, 31.5);
        assert_eq!(r.condition, "clear sky");
        assert!(matches!(w.query("Atlantis"), Err(WeatherError::CityUnknown(c)) if c == "Atlantis"));
    }

    #[test]
    fn stub_from_custom_json() {
        let w = StubWeather::from_json(r#"{"Oslo": {"temp_c": -3.0, "condition": "snow"}}"#).unwrap();
        assert_eq!(w.cities().collect::<Vec<_>>(), vec!["Oslo"]);
        assert_eq!(w.query("OSLO").unwrap().to_string(), "it is -3.0 degrees C in Oslo with snow");
        assert!(matches!(StubWeather::from_json("[1]"), Err(WeatherError::Fixtures(_))));
    }

    #[test]
    fn http_url_template() {
        let w = HttpWeather::new("http://x/w?city={city}", Duration::from_millis(10));
        assert_eq!(w.url_for("New York"), "http://x/w?city=New%20York");
    }

    #[test]
    fn http_timeout_is_unreachable() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hold = thread::spawn(move || {
            let (s, _) = listener.accept().unwrap();
            thread::sleep(Duration::from_millis(600));
            drop(s);
        });
        let w = HttpWeather::new(format!("http://{addr}/{{city}}"), Duration::from_millis(150));
        assert!(matches!(w.query("Pune"), Err(WeatherError::ProviderUnreachable(_))));
        hold.join().unwrap();
    }

    #[test]
    fn http_success_and_not_found() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let server = thread::spawn(move || {
            for _ in 0..2 {
                let (mut s, _) = listener.accept().unwrap();
                let mut buf = [0u8; 1024];
                let n = s.read(&mut buf).unwrap();
                let req = String::from_utf8_lossy(&buf[..n]).to_string();
                let resp = if req.starts_with("GET /Pune ") {
                    let body = r#"{"temp_c": 27.5, "condition": "fog"}"#;
                    format!(
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                        body.len()
                    )
                } else {
                    "HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n".to_string()
                };
                s.write_all(resp.as_bytes()).unwrap();
            }
        });
        let w = HttpWeather::new(format!("http://{addr}/{{city}}"), Duration::from_secs(5));
        let r = w.query("Pune").unwrap();
        assert_eq!((r.temp_c, r.condition.as_str()), (27.5, "fog"));
        assert!(matches!(w.query("Nowhere"), Err(WeatherError::CityUnknown(_))));
        server.join().unwrap();
    }
}
