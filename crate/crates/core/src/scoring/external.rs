//! Client for out-of-process scorers.
//!
//! Protocol (one JSON object per line, both directions):
//!
//! ```text
//! scorer -> {"ready": true, "name": "..."}          handshake, first line
//! client -> {"id": 7, "src": "...", "hyp": "..."}
//! scorer -> {"id": 7, "score": 0.81}
//! scorer -> {"id": 7, "error": "..."}               fails the session
//! ```
//!
//! The client closes its write side to shut down; the scorer flushes and
//! exits 0. Replies may arrive in any order and are matched by id. Wire ids
//! are assigned by the session and increase monotonically across batches.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Mutex, PoisonError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_distinct_ids, ScoreRequest, ScoreResponse, Scorer};
use crate::error::{Result, SlideError};

#[derive(Debug, Clone, Copy)]
pub struct ExternalOptions {
    /// Maximum wait for the handshake or any single reply.
    pub timeout: Duration,
    /// Maximum number of requests in flight.
    pub window: usize,
}

impl Default for ExternalOptions {
    fn default() -> Self {
        ExternalOptions {
            timeout: Duration::from_secs(120),
            window: 64,
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    id: u64,
    src: &'a str,
    hyp: &'a str,
}

#[derive(Deserialize)]
struct WireMessage {
    id: Option<u64>,
    score: Option<f64>,
    error: Option<String>,
    ready: Option<bool>,
    name: Option<String>,
}

enum Transport {
    Process(Child),
    Tcp(TcpStream),
}

struct Session {
    writer: Option<BufWriter<Box<dyn Write + Send>>>,
    lines: Receiver<std::io::Result<String>>,
    transport: Transport,
    next_wire_id: u64,
    failure: Option<String>,
}

pub struct ExternalScorer {
    name: String,
    opts: ExternalOptions,
    session: Mutex<Session>,
    closed: bool,
}

fn scorer_err(msg: impl Into<String>) -> SlideError {
    SlideError::Scorer(msg.into())
}

fn spawn_line_reader(reader: impl Read + Send + 'static) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(reader);
        loop {
            let mut line = String::new();
            match reader.read_line(&mut line) {
                Ok(0) => break,
                Ok(_) => {
                    if tx.send(Ok(line)).is_err() {
                        break;
                    }
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                    break;
                }
            }
        }
    });
    rx
}

impl ExternalScorer {
    /// Launch `argv` and complete the handshake over its stdin/stdout.
    pub fn spawn(argv: &[String], opts: ExternalOptions) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| SlideError::Config("empty scorer command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| scorer_err(format!("cannot start `{program}`: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take().expect("piped stdin");
        Self::start(
            Box::new(stdin),
            spawn_line_reader(stdout),
            Transport::Process(child),
            opts,
        )
    }

    /// Connect to a scorer listening on `addr` (`host:port`).
    pub fn connect(addr: &str, opts: ExternalOptions) -> Result<Self> {
        let stream = TcpStream::connect(addr)
            .map_err(|e| scorer_err(format!("cannot connect to {addr}: {e}")))?;
        let read_half = stream
            .try_clone()
            .map_err(|e| scorer_err(e.to_string()))?;
        let write_half = stream
            .try_clone()
            .map_err(|e| scorer_err(e.to_string()))?;
        Self::start(
            Box::new(write_half),
            spawn_line_reader(read_half),
            Transport::Tcp(stream),
            opts,
        )
    }

    fn start(
        writer: Box<dyn Write + Send>,
        lines: Receiver<std::io::Result<String>>,
        transport: Transport,
        opts: ExternalOptions,
    ) -> Result<Self> {
        let mut session = Session {
            writer: Some(BufWriter::new(writer)),
            lines,
            transport,
            next_wire_id: 0,
            failure: None,
        };
        let name = match session.handshake(opts.timeout) {
            Ok(name) => name,
            Err(e) => {
                session.abort();
                return Err(e);
            }
        };
        Ok(ExternalScorer {
            name,
            opts,
            session: Mutex::new(session),
            closed: false,
        })
    }

    /// Close the write side, wait for the scorer to drain and exit.
    pub fn close(mut self) -> Result<()> {
        self.closed = true;
        let timeout = self.opts.timeout;
        self.session
            .get_mut()
            .unwrap_or_else(PoisonError::into_inner)
            .shutdown(timeout)
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if self.closed {
            return;
        }
        let session = self.session.get_mut().unwrap_or_else(PoisonError::into_inner);
        if session.failure.is_some() {
            session.abort();
        } else {
            let _ = session.shutdown(self.opts.timeout);
        }
    }
}

impl Session {
    fn recv_line(&self, timeout: Duration) -> Result<String> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(scorer_err(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(SlideError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(scorer_err("scorer closed its output")),
        }
    }

    fn handshake(&mut self, timeout: Duration) -> Result<String> {
        let line = self.recv_line(timeout)?;
        let msg: WireMessage = serde_json::from_str(line.trim_end())
            .map_err(|e| scorer_err(format!("bad handshake {:?}: {e}", line.trim_end())))?;
        if msg.ready != Some(true) {
            return Err(scorer_err(format!(
                "expected ready handshake, got {:?}",
                line.trim_end()
            )));
        }
        Ok(msg.name.unwrap_or_else(|| "external".into()))
    }

    fn send(&mut self, id: u64, req: &ScoreRequest) -> Result<()> {
        let writer = self
            .writer
            .as_mut()
            .ok_or_else(|| scorer_err("session is closed"))?;
        let line = serde_json::to_string(&WireRequest {
            id,
            src: &req.src_text,
            hyp: &req.hyp_text,
        })
        .expect("serializable request");
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| scorer_err(format!("write failed: {e}")))
    }

    fn flush(&mut self) -> Result<()> {
        if let Some(w) = self.writer.as_mut() {
            w.flush()
                .map_err(|e| scorer_err(format!("write failed: {e}")))?;
        }
        Ok(())
    }

    fn run(&mut self, reqs: &[ScoreRequest], opts: &ExternalOptions) -> Result<Vec<ScoreResponse>> {
        let n = reqs.len();
        let base = self.next_wire_id;
        self.next_wire_id += n as u64;
        let mut scores: Vec<Option<f64>> = vec![None; n];
        let (mut sent, mut received) = (0usize, 0usize);
        while received < n {
            let before = sent;
            while sent < n && sent - received < opts.window {
                self.send(base + sent as u64, &reqs[sent])?;
                sent += 1;
            }
            if sent > before {
                self.flush()?;
            }

            let line = self.recv_line(opts.timeout)?;
            let text = line.trim_end();
            let msg: WireMessage = serde_json::from_str(text)
                .map_err(|e| scorer_err(format!("malformed reply {text:?}: {e}")))?;
            let id = msg
                .id
                .ok_or_else(|| scorer_err(format!("reply without id: {text:?}")))?;
            if let Some(err) = msg.error {
                return Err(scorer_err(format!("request {id} failed: {err}")));
            }
            let slot = id
                .checked_sub(base)
                .map(|k| k as usize)
                .filter(|&k| k < sent)
                .ok_or_else(|| scorer_err(format!("reply for unknown id {id}")))?;
            let score = msg
                .score
                .filter(|s| s.is_finite())
                .ok_or_else(|| scorer_err(format!("reply {id} has no finite score")))?;
            if scores[slot].replace(score).is_some() {
                return Err(scorer_err(format!("duplicate reply for id {id}")));
            }
            received += 1;
        }
        Ok(reqs
            .iter()
            .zip(scores)
            .map(|(r, s)| ScoreResponse {
                request_id: r.request_id,
                score: s.expect("all slots filled"),
            })
            .collect())
    }

    fn shutdown(&mut self, timeout: Duration) -> Result<()> {
        if let Some(mut w) = self.writer.take() {
            let _ = w.flush();
        }
        if let Transport::Tcp(stream) = &self.transport {
            let _ = stream.shutdown(Shutdown::Write);
        }
        // drain anything the scorer still emits until it closes its side
        loop {
            match self.lines.recv_timeout(timeout) {
                Ok(Ok(_)) => continue,
                Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => break,
                Err(RecvTimeoutError::Timeout) => {
                    self.abort();
                    return Err(SlideError::Timeout(timeout));
                }
            }
        }
        match &mut self.transport {
            Transport::Process(child) => {
                let status = child.wait().map_err(|e| scorer_err(e.to_string()))?;
                if !status.success() {
                    return Err(scorer_err(format!("scorer exited with {status}")));
                }
            }
            Transport::Tcp(stream) => {
                let _ = stream.shutdown(Shutdown::Both);
            }
        }
        Ok(())
    }

    fn abort(&mut self) {
        self.writer = None;
        match &mut self.transport {
            Transport::Process(child) => {
                let _ = child.kill();
                let _ = child.wait();
            }
            Transport::Tcp(stream) => {
                let _ = stream.shutdown(Shutdown::Both);
            }
        }
    }
}

impl Scorer for ExternalScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score_batch(&self, reqs: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
        check_distinct_ids(reqs)?;
        let mut session = self.session.lock().unwrap_or_else(PoisonError::into_inner);
        if let Some(reason) = &session.failure {
            return Err(scorer_err(format!("session already failed: {reason}")));
        }
        let result = session.run(reqs, &self.opts);
        if let Err(e) = &result {
            session.failure = Some(e.to_string());
        }
        result
    }
}
