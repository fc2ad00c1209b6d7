//! Out-of-process vulnerability model.
//!
//! The child reads one JSON request per line on stdin and answers one JSON
//! line on stdout:
//!
//! ```text
//! -> {"function_name": "f", "body": "{ ... }", "params": [["data", "const uint8_t *"], ...]}
//! <- {"score": 0.9, "predicted_cwes": ["CWE-415"]}
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Assessment, OracleError};
use crate::cwe::Cwe;
use crate::inventory::FunctionRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRequest {
    pub function_name: String,
    pub body: String,
    pub params: Vec<(String, String)>,
}

impl From<&FunctionRecord> for OracleRequest {
    fn from(r: &FunctionRecord) -> Self {
        OracleRequest {
            function_name: r.name.clone(),
            body: r.body.clone(),
            params: r.params.iter().map(|p| (p.name.clone(), p.ty.clone())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReply {
    pub score: f64,
    #[serde(default)]
    pub predicted_cwes: Vec<String>,
}

impl OracleReply {
    /// Parses and range-checks one response line.
    pub fn parse(line: &str) -> Result<Assessment, OracleError> {
        let reply: OracleReply = serde_json::from_str(line.trim())
            .map_err(|e| OracleError::OracleProtocolError(format!("{e}: {line:?}")))?;
        if !reply.score.is_finite() || !(0.0..=1.0).contains(&reply.score) {
            return Err(OracleError::OracleProtocolError(format!(
                "score {} outside [0,1]",
                reply.score
            )));
        }
        let predicted_cwes = reply
            .predicted_cwes
            .iter()
            .map(|s| s.parse::<Cwe>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| OracleError::OracleProtocolError(e.to_string()))?;
        Ok(Assessment {
            score: reply.score,
            predicted_cwes,
        })
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Session {
    fn spawn(argv: &[String]) -> Result<Self, OracleError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| OracleError::OracleUnavailable("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| OracleError::OracleUnavailable(format!("spawning {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Session { child, stdin, lines })
    }

    fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A long-lived external scoring process. Requests are serialized: at most
/// one is in flight.
pub struct ExternalOracle {
    argv: Vec<String>,
    timeout: Duration,
    session: Mutex<Option<Session>>,
}

impl ExternalOracle {
    pub fn new(command: &str, timeout: Duration) -> Result<Self, OracleError> {
        let argv = shell_words::split(command)
            .map_err(|e| OracleError::InvalidConfig(format!("external oracle command: {e}")))?;
        if argv.is_empty() {
            return Err(OracleError::InvalidConfig("external oracle command is empty".into()));
        }
        Ok(ExternalOracle {
            argv,
            timeout,
            session: Mutex::new(None),
        })
    }

    /// Sends one request and waits for its response line.
    ///
    /// A dead or hung child is discarded; the next query spawns a fresh one.
    pub fn query(&self, record: &FunctionRecord) -> Result<Assessment, OracleError> {
        let mut line = serde_json::to_string(&OracleRequest::from(record))
            .map_err(|e| OracleError::OracleProtocolError(e.to_string()))?;
        line.push('\n');

        let mut guard = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(Session::spawn(&self.argv)?);
        }
        let session = guard.as_mut().expect("session present");

        let outcome = session
            .stdin
            .write_all(line.as_bytes())
            .and_then(|()| session.stdin.flush())
            .map_err(|e| OracleError::OracleUnavailable(format!("writing request: {e}")))
            .and_then(|()| match session.lines.recv_timeout(self.timeout) {
                Ok(Ok(reply)) => Ok(reply),
                Ok(Err(e)) => Err(OracleError::OracleUnavailable(format!("reading reply: {e}"))),
                Err(RecvTimeoutError::Timeout) => Err(OracleError::OracleUnavailable(format!(
                    "no reply within {:?}",
                    self.timeout
                ))),
                Err(RecvTimeoutError::Disconnected) => {
                    let status = session.child.try_wait().ok().flatten();
                    Err(OracleError::OracleUnavailable(match status {
                        Some(s) => format!("oracle exited ({s}) without replying"),
                        None => "oracle closed its output".to_string(),
                    }))
                }
            });

        match outcome {
            Ok(reply) => OracleReply::parse(&reply),
            Err(e) => {
                if let Some(mut s) = guard.take() {
                    s.kill();
                }
                Err(e)
            }
        }
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.session.lock() {
            if let Some(mut s) = guard.take() {
                // Closing stdin first lets well-behaved oracles exit on EOF.
                drop(s.stdin);
                if s.child.try_wait().ok().flatten().is_none() {
                    thread::sleep(Duration::from_millis(10));
                }
                let _ = s.child.kill();
                let _ = s.child.wait();
            }
        }
    }
}
