//! Frame ingestion from files, stdin, or a TCP line socket.
//!
//! Every source is read as newline-delimited frame records. Frames that go
//! backwards in time are dropped and counted; malformed records are either
//! skipped and counted or reported with their line number, depending on the
//! [`GapPolicy`].

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, TryRecvError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;
use tracing::{debug, warn};

use crate::landmark::{parse_frame, FrameError, HandFrame};

/// Where frames come from, as written on the command line:
/// `-` or `stdin`, `tcp:HOST:PORT`, `file:PATH`, or a bare path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceSpec {
    File(PathBuf),
    Stdin,
    Tcp(String),
}

impl FromStr for SourceSpec {
    type Err = StreamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(StreamError::SourceUnavailable("empty source".into()));
        }
        Ok(match s {
            "-" | "stdin" => SourceSpec::Stdin,
            _ => {
                if let Some(addr) = s.strip_prefix("tcp:") {
                    SourceSpec::Tcp(addr.to_string())
                } else if let Some(path) = s.strip_prefix("file:") {
                    SourceSpec::File(path.into())
                } else {
                    SourceSpec::File(s.into())
                }
            }
        })
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::File(p) => write!(f, "file:{}", p.display()),
            SourceSpec::Stdin => f.write_str("stdin"),
            SourceSpec::Tcp(a) => write!(f, "tcp:{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    File,
    Stdin,
    Socket,
}

/// Handling of records that fail validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapPolicy {
    /// Skip the record and count it. Live capture uses this.
    #[default]
    SkipAndCount,
    /// Stop with an error naming the offending line.
    Fail,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StreamStats {
    pub delivered: u64,
    pub out_of_order: u64,
    pub malformed: u64,
    /// Valid frames discarded by [`FrameStream::next_latest`] because a newer
    /// frame was already queued.
    pub lag_dropped: u64,
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("line {line}: {source}")]
    Malformed { line: usize, source: FrameError },
    #[error("read error: {0}")]
    Io(#[from] io::Error),
}

enum Feed {
    Reader(Box<dyn BufRead + Send>),
    Channel(Receiver<io::Result<String>>),
}

enum Pull {
    Line(String),
    Empty,
    Closed,
}

pub struct FrameStream {
    kind: SourceKind,
    feed: Feed,
    policy: GapPolicy,
    shutdown: Option<Arc<AtomicBool>>,
    local_addr: Option<SocketAddr>,
    line_no: usize,
    last_t: Option<u64>,
    last_parse: Duration,
    stats: StreamStats,
}

impl FrameStream {
    /// Opens a source. TCP sources bind immediately and accept a single
    /// producer connection in the background; the stream ends when that
    /// connection closes.
    pub fn open(spec: &SourceSpec, policy: GapPolicy) -> Result<Self, StreamError> {
        match spec {
            SourceSpec::File(path) => {
                let file = File::open(path).map_err(|e| {
                    StreamError::SourceUnavailable(format!("{}: {e}", path.display()))
                })?;
                Ok(Self::new(
                    SourceKind::File,
                    Feed::Reader(Box::new(BufReader::new(file))),
                    policy,
                ))
            }
            SourceSpec::Stdin => {
                let (tx, rx) = mpsc::channel();
                thread::spawn(move || {
                    for line in io::stdin().lock().lines() {
                        if tx.send(line).is_err() {
                            break;
                        }
                    }
                });
                Ok(Self::new(SourceKind::Stdin, Feed::Channel(rx), policy))
            }
            SourceSpec::Tcp(addr) => {
                let listener = TcpListener::bind(addr.as_str())
                    .map_err(|e| StreamError::SourceUnavailable(format!("tcp:{addr}: {e}")))?;
                let local = listener.local_addr()?;
                let (tx, rx) = mpsc::channel();
                thread::spawn(move || match listener.accept() {
                    Ok((conn, peer)) => {
                        debug!(%peer, "frame producer connected");
                        for line in BufReader::new(conn).lines() {
                            if tx.send(line).is_err() {
                                break;
                            }
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                    }
                });
                let mut stream = Self::new(SourceKind::Socket, Feed::Channel(rx), policy);
                stream.local_addr = Some(local);
                Ok(stream)
            }
        }
    }

    /// Wraps any buffered reader, e.g. an in-memory buffer.
    pub fn from_reader(reader: impl BufRead + Send + 'static, policy: GapPolicy) -> Self {
        Self::new(SourceKind::File, Feed::Reader(Box::new(reader)), policy)
    }

    /// Wraps a channel fed by another thread. Lines queued on the channel
    /// form the backlog that [`FrameStream::next_latest`] skips over.
    pub fn from_channel(rx: Receiver<io::Result<String>>, policy: GapPolicy) -> Self {
        Self::new(SourceKind::Stdin, Feed::Channel(rx), policy)
    }

    fn new(kind: SourceKind, feed: Feed, policy: GapPolicy) -> Self {
        Self {
            kind,
            feed,
            policy,
            shutdown: None,
            local_addr: None,
            line_no: 0,
            last_t: None,
            last_parse: Duration::ZERO,
            stats: StreamStats::default(),
        }
    }

    /// Ends the stream once `flag` is set. Only channel-fed sources block,
    /// so only they poll the flag.
    pub fn with_shutdown(mut self, flag: Arc<AtomicBool>) -> Self {
        self.shutdown = Some(flag);
        self
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.local_addr
    }

    pub fn stats(&self) -> StreamStats {
        self.stats
    }

    /// Time spent parsing and validating the most recently delivered frame.
    pub fn last_parse_time(&self) -> Duration {
        self.last_parse
    }

    /// Next frame in order. Never skips a valid in-order frame.
    pub fn next_frame(&mut self) -> Result<Option<HandFrame>, StreamError> {
        loop {
            match self.pull(true)? {
                Pull::Line(line) => {
                    if let Some(frame) = self.accept(&line)? {
                        self.stats.delivered += 1;
                        return Ok(Some(frame));
                    }
                }
                Pull::Empty => continue,
                Pull::Closed => return Ok(None),
            }
        }
    }

    /// Latest-frame-wins: blocks for one frame, then drains whatever is
    /// already queued and returns the newest, counting the rest as lag
    /// drops. Reader-backed sources have no backlog and behave like
    /// [`FrameStream::next_frame`].
    pub fn next_latest(&mut self) -> Result<Option<HandFrame>, StreamError> {
        let Some(mut newest) = self.next_frame()? else {
            return Ok(None);
        };
        loop {
            match self.pull(false)? {
                Pull::Line(line) => {
                    if let Some(frame) = self.accept(&line)? {
                        self.stats.lag_dropped += 1;
                        newest = frame;
                    }
                }
                Pull::Empty | Pull::Closed => return Ok(Some(newest)),
            }
        }
    }

    fn pull(&mut self, block: bool) -> Result<Pull, StreamError> {
        match &mut self.feed {
            Feed::Reader(reader) => {
                if !block {
                    return Ok(Pull::Empty);
                }
                let mut buf = String::new();
                if reader.read_line(&mut buf)? == 0 {
                    return Ok(Pull::Closed);
                }
                Ok(Pull::Line(buf))
            }
            Feed::Channel(rx) => {
                let received = if !block {
                    match rx.try_recv() {
                        Ok(line) => line,
                        Err(TryRecvError::Empty) => return Ok(Pull::Empty),
                        Err(TryRecvError::Disconnected) => return Ok(Pull::Closed),
                    }
                } else if let Some(flag) = &self.shutdown {
                    loop {
                        if flag.load(Ordering::Relaxed) {
                            return Ok(Pull::Closed);
                        }
                        match rx.recv_timeout(Duration::from_millis(50)) {
                            Ok(line) => break line,
                            Err(RecvTimeoutError::Timeout) => continue,
                            Err(RecvTimeoutError::Disconnected) => return Ok(Pull::Closed),
                        }
                    }
                } else {
                    match rx.recv() {
                        Ok(line) => line,
                        Err(_) => return Ok(Pull::Closed),
                    }
                };
                Ok(Pull::Line(received?))
            }
        }
    }

    /// Applies validation and the ordering rule to one raw line.
    fn accept(&mut self, line: &str) -> Result<Option<HandFrame>, StreamError> {
        self.line_no += 1;
        let line = line.trim();
        if line.is_empty() {
            return Ok(None);
        }
        let started = Instant::now();
        let parsed = parse_frame(line);
        self.last_parse = started.elapsed();
        let frame = match parsed {
            Ok(frame) => frame,
            Err(source) => match self.policy {
                GapPolicy::Fail => {
                    return Err(StreamError::Malformed {
                        line: self.line_no,
                        source,
                    })
                }
                GapPolicy::SkipAndCount => {
                    warn!(line = self.line_no, error = %source, "skipping malformed frame");
                    self.stats.malformed += 1;
                    return Ok(None);
                }
            },
        };
        if self.last_t.is_some_and(|last| frame.t_ms < last) {
            self.stats.out_of_order += 1;
            return Ok(None);
        }
        self.last_t = Some(frame.t_ms);
        Ok(Some(frame))
    }
}

impl Iterator for FrameStream {
    type Item = Result<HandFrame, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}
