//! External evaluators: child processes speaking newline-delimited JSON.
//!
//! The engine opens each channel with
//! `{"protocol":"theta-dse-eval","version":1,"space_hash":"<hex>"}` and
//! expects `{"ok":true}` back. Each request is `{"id":n,"design":{dim:label}}`;
//! the answer is `{"id":n,"objectives":{..}}` or `{"id":n,"error":"reason"}`.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use theta_dse_core::envs::{Environment, EvalResult, Objectives};
use theta_dse_core::space::{DesignPoint, DesignSpace};
use theta_dse_core::Error;

pub const PROTOCOL: &str = "theta-dse-eval";
pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT_SECS: f64 = 300.0;

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECS
}

fn default_workers() -> usize {
    1
}

/// How to launch the evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSpec {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Number of evaluator processes; batches are spread across them.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl ExternalSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.command.is_empty() || self.command[0].is_empty() {
            return Err("external evaluator command is empty".into());
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err("timeout_secs must be positive".into());
        }
        if self.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        Ok(())
    }
}

fn env_error(msg: impl Into<String>) -> Error {
    Error::Environment(msg.into())
}

/// One single-flight channel to an evaluator process.
pub struct EvaluatorProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    space: DesignSpace,
    timeout: Duration,
    next_id: u64,
    /// Ids whose answers are no longer awaited (timed out or superseded).
    abandoned: HashSet<u64>,
}

impl EvaluatorProcess {
    /// Starts the process and performs the handshake.
    pub fn spawn(spec: &ExternalSpec, space: &DesignSpace) -> theta_dse_core::Result<Self> {
        let mut child = Command::new(&spec.command[0])
            .args(&spec.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| env_error(format!("cannot start evaluator {:?}: {e}", spec.command[0])))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut p = Self {
            child,
            stdin,
            lines: rx,
            space: space.clone(),
            timeout: Duration::from_secs_f64(spec.timeout_secs),
            next_id: 0,
            abandoned: HashSet::new(),
        };
        p.handshake()?;
        Ok(p)
    }

    fn send(&mut self, v: &Value) -> theta_dse_core::Result<()> {
        let mut line = v.to_string();
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| env_error(format!("evaluator stdin closed: {e}")))
    }

    fn recv(&mut self, deadline: Instant) -> theta_dse_core::Result<Option<String>> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(line)) => Ok(Some(line)),
            Ok(Err(e)) => Err(env_error(format!("reading evaluator output failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(self.exit_error()),
        }
    }

    fn exit_error(&mut self) -> Error {
        let status = self.child.wait().map(|s| s.to_string()).unwrap_or_else(|e| e.to_string());
        env_error(format!("evaluator exited ({status})"))
    }

    fn handshake(&mut self) -> theta_dse_core::Result<()> {
        self.send(&json!({
            "protocol": PROTOCOL,
            "version": PROTOCOL_VERSION,
            "space_hash": self.space.hash_hex(),
        }))?;
        let deadline = Instant::now() + self.timeout;
        let line = self.recv(deadline)?.ok_or_else(|| env_error("evaluator did not answer the handshake"))?;
        let v: Value = serde_json::from_str(&line).map_err(|e| env_error(format!("bad handshake reply {line:?}: {e}")))?;
        if v.get("ok") == Some(&Value::Bool(true)) {
            Ok(())
        } else {
            let why = v.get("error").and_then(Value::as_str).unwrap_or("no reason given");
            Err(env_error(format!("evaluator refused the handshake: {why}")))
        }
    }

    /// Sends one design and waits for its answer.
    pub fn evaluate(&mut self, design: &DesignPoint) -> theta_dse_core::Result<EvalResult> {
        let labels = self.space.point_to_labels(design)?;
        let id = self.next_id;
        self.next_id += 1;
        self.send(&json!({ "id": id, "design": labels }))?;
        let deadline = Instant::now() + self.timeout;
        loop {
            let Some(line) = self.recv(deadline)? else {
                self.abandoned.insert(id);
                return Ok(EvalResult::Anomaly("timeout".into()));
            };
            let Ok(v) = serde_json::from_str::<Value>(&line) else {
                self.abandoned.insert(id);
                return Ok(EvalResult::Anomaly("protocol".into()));
            };
            match v.get("id").and_then(Value::as_u64) {
                Some(got) if got == id => return Ok(parse_answer(&v)),
                Some(got) if self.abandoned.remove(&got) => continue,
                _ => {
                    self.abandoned.insert(id);
                    return Ok(EvalResult::Anomaly("protocol".into()));
                }
            }
        }
    }
}

fn parse_answer(v: &Value) -> EvalResult {
    if let Some(reason) = v.get("error") {
        let reason = reason.as_str().map_or_else(|| reason.to_string(), str::to_owned);
        return EvalResult::Anomaly(reason);
    }
    match v.get("objectives").map(|o| serde_json::from_value::<Objectives>(o.clone())) {
        Some(Ok(o)) if o.values().all(|x| x.is_finite()) => EvalResult::Objectives(o),
        _ => EvalResult::Anomaly("protocol".into()),
    }
}

impl Drop for EvaluatorProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A pool of evaluator processes behind the [`Environment`] contract.
///
/// Batches are dealt round-robin to the workers, evaluated concurrently and
/// reassembled in input order.
pub struct ExternalEnv {
    space: DesignSpace,
    workers: Vec<EvaluatorProcess>,
}

impl ExternalEnv {
    pub fn spawn(spec: &ExternalSpec, space: &DesignSpace) -> theta_dse_core::Result<Self> {
        spec.validate().map_err(env_error)?;
        let workers = (0..spec.workers)
            .map(|_| EvaluatorProcess::spawn(spec, space))
            .collect::<theta_dse_core::Result<Vec<_>>>()?;
        Ok(Self {
            space: space.clone(),
            workers,
        })
    }

    pub fn workers(&self) -> usize {
        self.workers.len()
    }
}

impl Environment for ExternalEnv {
    fn space(&self) -> &DesignSpace {
        &self.space
    }

    fn evaluate(&mut self, design: &DesignPoint) -> theta_dse_core::Result<EvalResult> {
        self.workers[0].evaluate(design)
    }

    fn evaluate_batch(&mut self, designs: &[DesignPoint]) -> theta_dse_core::Result<Vec<EvalResult>> {
        let n = self.workers.len();
        if n == 1 || designs.len() <= 1 {
            return designs.iter().map(|d| self.workers[0].evaluate(d)).collect();
        }
        let per_worker: Vec<theta_dse_core::Result<Vec<(usize, EvalResult)>>> = thread::scope(|s| {
            let handles: Vec<_> = self
                .workers
                .iter_mut()
                .enumerate()
                .map(|(w, proc_)| {
                    s.spawn(move || {
                        (w..designs.len())
                            .step_by(n)
                            .map(|i| proc_.evaluate(&designs[i]).map(|r| (i, r)))
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("evaluator worker panicked")).collect()
        });
        let mut out: Vec<Option<EvalResult>> = vec![None; designs.len()];
        for chunk in per_worker {
            for (i, r) in chunk? {
                out[i] = Some(r);
            }
        }
        Ok(out.into_iter().map(|r| r.expect("every index assigned")).collect())
    }
}
