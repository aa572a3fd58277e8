use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use gestura_core::eval::{synthesize_suite, SuiteSpec};

fn gestura() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gestura"));
    c.env_remove("GESTURA_CONFIG");
    for (k, _) in std::env::vars() {
        if k.starts_with("GESTURA_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str]) -> Output {
    gestura().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_suite(dir: &Path, reps: u32) -> std::path::PathBuf {
    let (frames, _) = synthesize_suite(&SuiteSpec {
        reps,
        sigma: 0.005,
        seed: 11,
        ..SuiteSpec::default()
    });
    let path = dir.join("frames.jsonl");
    let text: String = frames.iter().map(|f| f.to_json_line() + "\n").collect();
    fs::write(&path, text).unwrap();
    path
}

fn summary(o: &Output) -> serde_json::Value {
    let line = stderr(o)
        .lines()
        .find_map(|l| l.strip_prefix("summary ").map(str::to_string))
        .expect("summary line");
    serde_json::from_str(&line).unwrap()
}

#[test]
fn parse_prints_intents() {
    let o = run(&["parse", "play music"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), r#"{"intent":"MediaPlayPause","slots":{}}"#);
    assert_eq!(stdout(&run(&["parse", "battery status"])).trim(), r#"{"intent":"BatteryStatus","slots":{}}"#);
    assert_eq!(stdout(&run(&["parse", ""])).trim(), r#"{"intent":"Unknown","slots":{"raw":""}}"#);
}

#[test]
fn parse_with_custom_rules() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.txt");
    fs::write(&rules, "5 | lights | - | Fullscreen\n999 | * | - | Unknown\n").unwrap();
    let o = run(&["parse", "--rules", rules.to_str().unwrap(), "lights please"]);
    assert_eq!(stdout(&o).trim(), r#"{"intent":"Fullscreen","slots":{}}"#);
    fs::write(&rules, "5 | lights | - | Fullscreen\n").unwrap();
    let o = run(&["parse", "--rules", rules.to_str().unwrap(), "x"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn replay_twice_gives_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    let frames = write_suite(dir.path(), 2);
    let utt = dir.path().join("utt.jsonl");
    fs::write(&utt, "{\"t\": 1200, \"text\": \"take a screenshot\"}\n{\"t\": 3000, \"text\": \"increase brightness by 20\"}\n").unwrap();
    let mut logs = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let out = dir.path().join(name);
        let o = run(&[
            "replay",
            "--frames",
            frames.to_str().unwrap(),
            "--utterances",
            utt.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        logs.push(fs::read(&out).unwrap());
    }
    assert_eq!(logs[0], logs[1]);
    let text = String::from_utf8(logs[0].clone()).unwrap();
    assert_eq!(text.matches("\"action\":\"screenshot\"").count(), 1);
    assert!(text.contains(r#"{"t":3000,"action":"brightness_delta","args":{"percent":20}}"#));
}

#[test]
fn frames_only_replay_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let frames = write_suite(dir.path(), 1);
    let o = run(&["replay", "--frames", frames.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(!text.is_empty());
    for l in text.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v["t"].is_u64() && v["action"].is_string() && v["args"].is_object());
    }
    assert_eq!(summary(&o)["frames"], 150);
}

#[test]
fn corrupt_line_is_reported_by_number() {
    let dir = tempfile::tempdir().unwrap();
    let frames = write_suite(dir.path(), 1);
    let mut lines: Vec<String> = fs::read_to_string(&frames).unwrap().lines().map(String::from).collect();
    lines[16] = "{\"t\": 5, \"hand\": \"Right\", \"lm\": [[0,0,0]]}".into();
    fs::write(&frames, lines.join("\n")).unwrap();
    let o = run(&["replay", "--frames", frames.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("line 17"), "{}", stderr(&o));
}

#[test]
fn bad_utterance_file() {
    let dir = tempfile::tempdir().unwrap();
    let utt = dir.path().join("u.jsonl");
    fs::write(&utt, "{\"t\": 1, \"text\": \"pause\"}\n{\"t\": \"x\"}\n").unwrap();
    let o = run(&["replay", "--utterances", utt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("utterance line 2"));
    let o = run(&["replay", "--utterances", "/definitely/missing.jsonl"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn eval_synthetic_and_from_files() {
    let o = run(&["eval", "--synthetic", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["overall"], 100.0);

    let dir = tempfile::tempdir().unwrap();
    let o = run(&["eval", "--synthetic", "--sigma", "0.01", "--export", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let table = stdout(&o);
    for g in ["Move", "LeftClick", "RightClick", "ScrollUp", "ScrollDown", "overall"] {
        assert!(table.contains(g), "{table}");
    }
    let frames = dir.path().join("frames.jsonl");
    let labels = dir.path().join("labels.jsonl");
    let o = run(&["eval", "--frames", frames.to_str().unwrap(), "--labels", labels.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), table);
}

#[test]
fn eval_errors() {
    let dir = tempfile::tempdir().unwrap();
    let frames = write_suite(dir.path(), 1);
    let o = run(&["eval", "--frames", frames.to_str().unwrap(), "--labels", "/no/such/labels.jsonl"]);
    assert_ne!(o.status.code(), Some(0));
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = run(&["eval", "--frames", frames.to_str().unwrap(), "--labels", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(6));
    let far = dir.path().join("far.jsonl");
    fs::write(&far, "{\"start\": 999999, \"end\": 1000000, \"expect\": \"Move\"}\n").unwrap();
    let o = run(&["eval", "--frames", frames.to_str().unwrap(), "--labels", far.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(6));
    assert_eq!(run(&["eval"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--synthetic", "--sigma", "-1"]).status.code(), Some(2));
}

#[test]
fn config_precedence_file_env_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.toml");
    fs::write(&cfg, "click_dist = 0.05\nsmooth = 3.0\nscreen_w = 800\n").unwrap();
    let frames = write_suite(dir.path(), 1);
    let o = gestura()
        .args(["replay", "--frames", frames.to_str().unwrap(), "--config", cfg.to_str().unwrap()])
        .args(["--set", "smooth=2.0", "--screen", "1280x720"])
        .env("GESTURA_SMOOTH", "4.0")
        .env("GESTURA_STABLE_FRAMES", "4")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    for want in ["click_dist = 0.05", "smooth = 2.0", "stable_frames = 4", "screen_w = 1280", "screen_h = 720"] {
        assert!(err.contains(want), "missing `{want}` in\n{err}");
    }
    let o = gestura()
        .args(["replay", "--frames", frames.to_str().unwrap()])
        .env("GESTURA_CLIK_DIST", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(5));
    let o = run(&["replay", "--frames", frames.to_str().unwrap(), "--set", "margin=0.7"]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(run(&["replay", "--screen", "0x5"]).status.code(), Some(2));
}

#[test]
fn run_from_file_reports_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let frames = write_suite(dir.path(), 1);
    let log = dir.path().join("log.jsonl");
    let o = run(&[
        "run",
        "--source",
        &format!("file:{}", frames.display()),
        "--backend",
        "mock",
        "--screen",
        "1920x1080",
        "--out",
        log.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = summary(&o);
    for key in ["frames", "dropped_frames", "events", "actions", "mean_latency_us"] {
        assert!(m.get(key).is_some(), "{m}");
    }
    assert_eq!(m["frames"], 150);
    assert!(!fs::read(&log).unwrap().is_empty());
}

#[test]
fn unreachable_source_fails() {
    let o = run(&["run", "--source", "tcp:999.0.0.1:7878"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("source unavailable"));
    let o = run(&["run", "--source", "/no/such/frames.jsonl"]);
    assert_eq!(o.status.code(), Some(3));
}

/// Starts a TCP-sourced subcommand, streams `lines` into it with `pace`
/// between lines, closes the connection and waits.
fn drive_tcp(args: &[&str], lines: &[String], pace: Duration) -> (std::process::ExitStatus, String, String) {
    let mut child = gestura()
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut err = BufReader::new(child.stderr.take().unwrap());
    let mut captured = String::new();
    let addr = loop {
        let mut line = String::new();
        assert!(err.read_line(&mut line).unwrap() > 0, "no listen line: {captured}");
        captured.push_str(&line);
        if let Some(a) = line.trim().strip_prefix("listening on tcp:") {
            break a.to_string();
        }
    };
    let mut s = TcpStream::connect(&addr).unwrap();
    for l in lines {
        writeln!(s, "{l}").unwrap();
        std::thread::sleep(pace);
    }
    drop(s);
    let mut rest = String::new();
    std::io::Read::read_to_string(&mut err, &mut rest).unwrap();
    captured.push_str(&rest);
    let out = child.wait_with_output().unwrap();
    (out.status, String::from_utf8_lossy(&out.stdout).into_owned(), captured)
}

#[test]
fn record_then_replay_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let frames = write_suite(dir.path(), 1);
    let lines: Vec<String> = fs::read_to_string(&frames).unwrap().lines().map(String::from).collect();
    let rec = dir.path().join("rec.jsonl");
    let (status, _, err) = drive_tcp(&["record", "--source", "tcp:127.0.0.1:0", "--out", rec.to_str().unwrap()], &lines, Duration::ZERO);
    assert!(status.success(), "{err}");
    assert!(err.contains("recorded 150 frames"), "{err}");
    assert_eq!(fs::read_to_string(&rec).unwrap(), fs::read_to_string(&frames).unwrap());
}

#[test]
fn live_run_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let frames = write_suite(dir.path(), 1);
    let lines: Vec<String> = fs::read_to_string(&frames).unwrap().lines().map(String::from).collect();
    let (status, out, err) = drive_tcp(&["run", "--source", "tcp:127.0.0.1:0", "--backend", "mock"], &lines, Duration::from_millis(3));
    assert!(status.success(), "{err}");
    assert!(!out.is_empty());
    let line = err.lines().find_map(|l| l.strip_prefix("summary ")).unwrap();
    let m: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(m["frames"].as_u64().unwrap() + m["lag_dropped"].as_u64().unwrap(), 150);
}
