//! `gestura`: run, record, replay and evaluate gesture sessions, or parse
//! a single utterance.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage error, 3 source or input
//! file unavailable, 4 malformed record, 5 invalid configuration, 6 invalid
//! labels.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use gestura_core::backend::{InjectionBackend, MockBackend, OsBackend};
use gestura_core::config::{BackendKind, ConfigError, ConfigLoader, EngineConfig, ENV_PREFIX};
use gestura_core::eval::{self, EvalError, SuiteSpec};
use gestura_core::intent::{RuleError, RuleTable};
use gestura_core::session::{
    load_utterances, run_session, RunMode, SessionConfig, SessionError, SessionMetrics, TimedUtterance, UtteranceError,
};
use gestura_core::stream::{FrameStream, GapPolicy, SourceSpec, StreamError};
use gestura_core::weather::WeatherError;

const EXIT_OTHER: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SOURCE: u8 = 3;
const EXIT_MALFORMED: u8 = 4;
const EXIT_CONFIG: u8 = 5;
const EXIT_LABELS: u8 = 6;

/// Environment variables with the config prefix that are not config keys.
const RESERVED_ENV: &[&str] = &["GESTURA_CONFIG", "GESTURA_LOG"];

#[derive(Parser)]
#[command(name = "gestura", version, about = "Gesture and voice input control engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a live session, discarding stale frames when processing lags.
    Run(RunArgs),
    /// Save a live landmark stream to a frame file.
    Record(RecordArgs),
    /// Replay a frame file deterministically and write the action log.
    Replay(ReplayArgs),
    /// Score gesture recognition against labeled segments.
    Eval(EvalArgs),
    /// Parse one utterance and print the intent as JSON.
    Parse(ParseArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long, env = "GESTURA_CONFIG")]
    config: Option<PathBuf>,
    /// Override any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Injection backend.
    #[arg(long, value_parser = ["mock", "os"])]
    backend: Option<String>,
    /// Screen size, e.g. 1920x1080.
    #[arg(long, value_name = "WxH", value_parser = parse_screen)]
    screen: Option<(u32, u32)>,
}

#[derive(Args)]
struct RunArgs {
    /// Frame source: `tcp:HOST:PORT`, `stdin`, `file:PATH` or a path.
    #[arg(long)]
    source: String,
    /// Utterance JSONL file.
    #[arg(long)]
    utterances: Option<PathBuf>,
    /// Action log path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct RecordArgs {
    #[arg(long)]
    source: String,
    /// Frame file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Frame JSONL file.
    #[arg(long)]
    frames: Option<PathBuf>,
    #[arg(long)]
    utterances: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, requires = "labels", conflicts_with = "synthetic")]
    frames: Option<PathBuf>,
    /// Label JSONL file: `{"start": ms, "end": ms, "expect": "<gesture>"}`.
    #[arg(long, requires = "frames")]
    labels: Option<PathBuf>,
    /// Generate a seeded synthetic suite instead of reading files.
    #[arg(long)]
    synthetic: bool,
    /// Gaussian noise in normalized units.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Rounds of all five gestures.
    #[arg(long, default_value_t = 10)]
    reps: u32,
    #[arg(long, default_value_t = 30)]
    fps: u32,
    /// Also write the synthetic frames and labels into this directory.
    #[arg(long, requires = "synthetic")]
    export: Option<PathBuf>,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct ParseArgs {
    text: String,
    /// Rule table file instead of the built-in vocabulary.
    #[arg(long)]
    rules: Option<PathBuf>,
}

fn parse_screen(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: u32 = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: u32 = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
    if w == 0 || h == 0 {
        return Err("screen dimensions must be positive".into());
    }
    Ok((w, h))
}

/// Resolves defaults, file, environment and flags, in that order.
fn load_config(args: &ConfigArgs) -> Result<(EngineConfig, ConfigLoader)> {
    let mut loader = ConfigLoader::new();
    if let Some(path) = &args.config {
        loader = loader.file(path)?;
    }
    let env = std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX) && !RESERVED_ENV.contains(&k.as_str()));
    loader = loader.env(env)?;
    for pair in &args.set {
        loader = loader.set_pair(pair)?;
    }
    if let Some(b) = &args.backend {
        loader = loader.set("backend", b)?;
    }
    if let Some((w, h)) = args.screen {
        loader = loader.set("screen_w", &w.to_string())?.set("screen_h", &h.to_string())?;
    }
    let cfg = loader.build()?;
    Ok((cfg, loader))
}

fn echo_config(cfg: &EngineConfig) {
    eprintln!("# effective configuration");
    for line in cfg.to_toml().lines() {
        eprintln!("#   {line}");
    }
}

/// Builds the configured backend. With `detect_screen`, an OS backend
/// fills in the screen size unless some config layer set it.
fn make_backend(cfg: &mut EngineConfig, loader: &ConfigLoader, detect_screen: bool) -> Box<dyn InjectionBackend> {
    match cfg.backend {
        BackendKind::Mock => Box::new(MockBackend::new()),
        BackendKind::Os => {
            let os = OsBackend::detect();
            if detect_screen && !loader.is_set("screen_w") && !loader.is_set("screen_h") {
                if let Some((w, h)) = os.screen_size() {
                    cfg.map.screen_w = w;
                    cfg.map.screen_h = h;
                }
            }
            Box::new(os)
        }
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| StreamError::SourceUnavailable(format!("{}: {e}", path.display())).into())
}

fn read_utterances(path: Option<&Path>) -> Result<Vec<TimedUtterance>> {
    match path {
        Some(p) => Ok(load_utterances(open_input(p)?)?),
        None => Ok(Vec::new()),
    }
}

fn log_writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn shutdown_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let f = flag.clone();
    if let Err(e) = ctrlc::set_handler(move || f.store(true, Ordering::Relaxed)) {
        eprintln!("warning: cannot install interrupt handler: {e}");
    }
    flag
}

/// Prints one line to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print_summary(m: &SessionMetrics) {
    eprintln!("summary {}", serde_json::to_string(m).expect("metrics serialize"));
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (mut cfg, loader) = load_config(&args.cfg)?;
    let mut backend = make_backend(&mut cfg, &loader, true);
    echo_config(&cfg);
    let session = SessionConfig::from_engine(&cfg, RunMode::Live)?;
    let utterances = read_utterances(args.utterances.as_deref())?;
    let spec: SourceSpec = args.source.parse()?;
    let flag = shutdown_flag();
    let mut stream = FrameStream::open(&spec, GapPolicy::SkipAndCount)?.with_shutdown(flag.clone());
    if let Some(addr) = stream.local_addr() {
        eprintln!("listening on tcp:{addr}");
    }
    let mut log = log_writer(args.out.as_deref())?;
    let metrics = run_session(Some(&mut stream), &utterances, &session, backend.as_mut(), &mut log, Some(flag))?;
    print_summary(&metrics);
    Ok(())
}

fn cmd_record(args: RecordArgs) -> Result<()> {
    let spec: SourceSpec = args.source.parse()?;
    let flag = shutdown_flag();
    let mut stream = FrameStream::open(&spec, GapPolicy::SkipAndCount)?.with_shutdown(flag);
    if let Some(addr) = stream.local_addr() {
        eprintln!("listening on tcp:{addr}");
    }
    let mut out = log_writer(Some(&args.out))?;
    while let Some(frame) = stream.next_frame()? {
        writeln!(out, "{}", frame.to_json_line())?;
    }
    out.flush()?;
    let s = stream.stats();
    eprintln!(
        "recorded {} frames ({} out of order, {} malformed skipped)",
        s.delivered, s.out_of_order, s.malformed
    );
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let (mut cfg, loader) = load_config(&args.cfg)?;
    let mut backend = make_backend(&mut cfg, &loader, false);
    echo_config(&cfg);
    let session = SessionConfig::from_engine(&cfg, RunMode::Replay)?;
    let utterances = read_utterances(args.utterances.as_deref())?;
    if args.frames.is_none() && utterances.is_empty() {
        return Err(anyhow!(Usage("replay needs --frames, --utterances or both".into())));
    }
    let mut stream = match &args.frames {
        Some(p) => Some(FrameStream::open(&SourceSpec::File(p.clone()), GapPolicy::Fail)?),
        None => None,
    };
    let mut log = log_writer(args.out.as_deref())?;
    let metrics = run_session(stream.as_mut(), &utterances, &session, backend.as_mut(), &mut log, None)?;
    print_summary(&metrics);
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let (cfg, _) = load_config(&args.cfg)?;
    let (frames, labels) = if args.synthetic {
        if !(args.sigma >= 0.0 && args.sigma.is_finite()) {
            return Err(anyhow!(Usage("--sigma must be finite and >= 0".into())));
        }
        if args.fps == 0 {
            return Err(anyhow!(Usage("--fps must be > 0".into())));
        }
        let (frames, labels) = eval::synthesize_suite(&SuiteSpec {
            reps: args.reps,
            clip_ms: 1000,
            fps: args.fps,
            sigma: args.sigma,
            seed: args.seed,
        });
        if let Some(dir) = &args.export {
            std::fs::create_dir_all(dir)?;
            let mut f = BufWriter::new(File::create(dir.join("frames.jsonl"))?);
            for fr in &frames {
                writeln!(f, "{}", fr.to_json_line())?;
            }
            f.flush()?;
            let mut l = BufWriter::new(File::create(dir.join("labels.jsonl"))?);
            for s in &labels {
                writeln!(l, "{}", s.to_json_line())?;
            }
            l.flush()?;
        }
        (frames, labels)
    } else {
        let (Some(fp), Some(lp)) = (&args.frames, &args.labels) else {
            return Err(anyhow!(Usage("eval needs --frames and --labels, or --synthetic".into())));
        };
        let labels = eval::load_labels(open_input(lp)?)?;
        let mut stream = FrameStream::open(&SourceSpec::File(fp.clone()), GapPolicy::Fail)?;
        let mut frames = Vec::new();
        while let Some(f) = stream.next_frame()? {
            frames.push(f);
        }
        (frames, labels)
    };
    let report = eval::evaluate(&frames, &labels, &cfg.fsm)?;
    if args.json {
        emit(&report.to_json())
    } else {
        emit(&report.to_string())
    }
}

fn cmd_parse(args: ParseArgs) -> Result<()> {
    let table = match &args.rules {
        Some(p) => RuleTable::from_file(p)?,
        None => RuleTable::builtin(),
    };
    let intent = table.parse(&args.text);
    emit(&serde_json::to_string(&intent)?)
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn stream_code(e: &StreamError) -> u8 {
    match e {
        StreamError::SourceUnavailable(_) => EXIT_SOURCE,
        StreamError::Malformed { .. } => EXIT_MALFORMED,
        StreamError::Io(_) => EXIT_OTHER,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<Usage>() {
        return EXIT_USAGE;
    }
    if let Some(e) = err.downcast_ref::<StreamError>() {
        return stream_code(e);
    }
    if err.is::<ConfigError>() || err.is::<RuleError>() {
        return EXIT_CONFIG;
    }
    if let Some(e) = err.downcast_ref::<WeatherError>() {
        return match e {
            WeatherError::Fixtures(_) => EXIT_CONFIG,
            _ => EXIT_OTHER,
        };
    }
    if let Some(e) = err.downcast_ref::<UtteranceError>() {
        return match e {
            UtteranceError::Malformed { .. } => EXIT_MALFORMED,
            UtteranceError::Io(_) => EXIT_OTHER,
        };
    }
    if let Some(e) = err.downcast_ref::<SessionError>() {
        return match e {
            SessionError::Config(_) | SessionError::Rules(_) | SessionError::Weather(_) => EXIT_CONFIG,
            SessionError::Stream(s) => stream_code(s),
            SessionError::Log(_) => EXIT_OTHER,
        };
    }
    if let Some(e) = err.downcast_ref::<EvalError>() {
        return match e {
            EvalError::Io(_) | EvalError::Gesture(_) => EXIT_OTHER,
            EvalError::Config(_) => EXIT_CONFIG,
            _ => EXIT_LABELS,
        };
    }
    EXIT_OTHER
}

/// The error and its causes, skipping causes already quoted by the
/// message above them.
fn describe(err: &anyhow::Error) -> String {
    let mut text = err.to_string();
    for cause in err.chain().skip(1) {
        let c = cause.to_string();
        if !text.contains(&c) {
            text = format!("{text}: {c}");
        }
    }
    text
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("GESTURA_LOG").unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Record(a) => cmd_record(a),
        Command::Replay(a) => cmd_replay(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Parse(a) => cmd_parse(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
