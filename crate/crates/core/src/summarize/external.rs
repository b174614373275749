//! Clients for the summarizer wire protocol.
//!
//! Request: `{"text": ..., "decoding": {...}}`. Response: `{"summary": ...}`
//! or `{"error": ...}`. Over HTTP the request is POSTed to `/summarize` and
//! errors come with a non-2xx status. Over a subprocess each request and
//! response is a single JSON line on stdin/stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{DecodingConfig, ExternalOptions, SummarizeError, Summarizer, WireDecoding};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizeRequest {
    pub text: String,
    pub decoding: WireDecoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SummarizeResponse {
    Summary { summary: String },
    Error { error: String },
}

fn backend_err(message: impl Into<String>, retryable: bool) -> SummarizeError {
    SummarizeError::Backend {
        message: message.into(),
        retryable,
        attempts: 1,
    }
}

/// Runs `call` up to `options.attempts` times with exponential backoff,
/// retrying only retryable failures.
fn with_retries<F>(options: &ExternalOptions, mut call: F) -> Result<String, SummarizeError>
where
    F: FnMut() -> Result<String, SummarizeError>,
{
    let attempts = options.attempts.max(1);
    let mut delay = options.backoff;
    let mut attempt = 1;
    loop {
        match call() {
            Ok(summary) => return Ok(summary),
            Err(err) if err.is_retryable() && attempt < attempts => {
                warn!("summarizer attempt {attempt}/{attempts} failed: {err}; retrying in {delay:?}");
                thread::sleep(delay);
                delay *= 2;
                attempt += 1;
            }
            Err(SummarizeError::Backend {
                message, retryable, ..
            }) => {
                return Err(SummarizeError::Backend {
                    message,
                    retryable,
                    attempts: attempt,
                })
            }
            Err(other) => return Err(other),
        }
    }
}

fn parse_response(body: &str) -> Result<String, SummarizeError> {
    match serde_json::from_str::<SummarizeResponse>(body) {
        Ok(SummarizeResponse::Summary { summary }) => Ok(summary),
        Ok(SummarizeResponse::Error { error }) => Err(backend_err(error, false)),
        Err(e) => Err(backend_err(format!("malformed response: {e}"), false)),
    }
}

/// HTTP client for a `/summarize` endpoint.
pub struct HttpSummarizer {
    url: String,
    decoding: DecodingConfig,
    options: ExternalOptions,
    client: reqwest::blocking::Client,
}

impl HttpSummarizer {
    pub fn new(
        base: &str,
        decoding: DecodingConfig,
        options: ExternalOptions,
    ) -> Result<Self, SummarizeError> {
        decoding.validate()?;
        let base = base.trim_end_matches('/');
        let url = if base.ends_with("/summarize") {
            base.to_owned()
        } else {
            format!("{base}/summarize")
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(options.timeout)
            .build()
            .map_err(|e| SummarizeError::InvalidConfig(format!("http client: {e}")))?;
        Ok(Self {
            url,
            decoding,
            options,
            client,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn call_once(&self, request: &SummarizeRequest) -> Result<String, SummarizeError> {
        let response = self.client.post(&self.url).json(request).send().map_err(|e| {
            if e.is_timeout() {
                SummarizeError::Timeout(self.options.timeout)
            } else {
                backend_err(format!("POST {}: {e}", self.url), true)
            }
        })?;
        let status = response.status();
        let body = response.text().map_err(|e| {
            if e.is_timeout() {
                SummarizeError::Timeout(self.options.timeout)
            } else {
                backend_err(format!("reading response: {e}"), true)
            }
        })?;
        if status.is_success() {
            return parse_response(&body);
        }
        let detail = match serde_json::from_str::<SummarizeResponse>(&body) {
            Ok(SummarizeResponse::Error { error }) => error,
            _ => body.chars().take(200).collect(),
        };
        let retryable = status.is_server_error() || status.as_u16() == 429;
        Err(backend_err(format!("HTTP {status}: {detail}"), retryable))
    }
}

impl Summarizer for HttpSummarizer {
    fn summarize(&self, text: &str) -> Result<String, SummarizeError> {
        let request = SummarizeRequest {
            text: text.to_owned(),
            decoding: self.decoding.to_wire(),
        };
        with_retries(&self.options, || self.call_once(&request))
    }
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Running {
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Long-lived child process speaking line-delimited JSON. Requests are
/// serialized; a timed-out or exited process is restarted on the next call.
pub struct SubprocessSummarizer {
    program: String,
    args: Vec<String>,
    decoding: DecodingConfig,
    options: ExternalOptions,
    process: Mutex<Option<Running>>,
}

impl SubprocessSummarizer {
    pub fn new(
        command: &str,
        decoding: DecodingConfig,
        options: ExternalOptions,
    ) -> Result<Self, SummarizeError> {
        decoding.validate()?;
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| SummarizeError::InvalidConfig("empty summarizer command".into()))?;
        Ok(Self {
            program,
            args: parts.collect(),
            decoding,
            options,
            process: Mutex::new(None),
        })
    }

    fn spawn(&self) -> Result<Running, SummarizeError> {
        debug!("starting summarizer subprocess {} {:?}", self.program, self.args);
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| backend_err(format!("spawning '{}': {e}", self.program), false))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Running {
            child,
            stdin,
            lines: rx,
        })
    }

    fn call_once(&self, line: &str) -> Result<String, SummarizeError> {
        let mut guard = self.process.lock().expect("subprocess lock");
        let mut running = match guard.take() {
            Some(r) => r,
            None => self.spawn()?,
        };
        if let Err(e) = writeln!(running.stdin, "{line}").and_then(|_| running.stdin.flush()) {
            running.kill();
            return Err(backend_err(format!("writing to summarizer: {e}"), true));
        }
        match running.lines.recv_timeout(self.options.timeout) {
            Ok(Ok(reply)) => {
                *guard = Some(running);
                parse_response(&reply)
            }
            Ok(Err(e)) => {
                running.kill();
                Err(backend_err(format!("reading from summarizer: {e}"), true))
            }
            Err(RecvTimeoutError::Timeout) => {
                running.kill();
                Err(SummarizeError::Timeout(self.options.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                running.kill();
                Err(backend_err("summarizer process exited", true))
            }
        }
    }
}

impl Summarizer for SubprocessSummarizer {
    fn summarize(&self, text: &str) -> Result<String, SummarizeError> {
        let request = SummarizeRequest {
            text: text.to_owned(),
            decoding: self.decoding.to_wire(),
        };
        let line = serde_json::to_string(&request).expect("request serializes");
        with_retries(&self.options, || self.call_once(&line))
    }
}

impl Drop for SubprocessSummarizer {
    fn drop(&mut self) {
        if let Some(running) = self.process.get_mut().ok().and_then(Option::take) {
            running.kill();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn response_shapes() {
        assert_eq!(parse_response(r#"{"summary": "x y"}"#).unwrap(), "x y");
        assert!(matches!(
            parse_response(r#"{"error": "boom"}"#),
            Err(SummarizeError::Backend { retryable: false, .. })
        ));
        assert!(parse_response("").is_err());
        assert!(parse_response("{}").is_err());
    }

    #[test]
    fn request_shape() {
        let req = SummarizeRequest {
            text: "hello".into(),
            decoding: DecodingConfig::default().to_wire(),
        };
        let json = serde_json::to_value(&req).unwrap();
        assert_eq!(json["text"], "hello");
        assert_eq!(json["decoding"]["beam_width"], 6);
    }

    #[test]
    fn retries_only_retryable_errors() {
        let options = ExternalOptions {
            timeout: Duration::from_millis(10),
            attempts: 3,
            backoff: Duration::from_millis(1),
        };
        let mut calls = 0;
        let err = with_retries(&options, || {
            calls += 1;
            Err(backend_err("down", true))
        })
        .unwrap_err();
        assert_eq!(calls, 3);
        assert!(matches!(err, SummarizeError::Backend { attempts: 3, .. }));

        let mut calls = 0;
        with_retries(&options, || {
            calls += 1;
            Err(backend_err("bad request", false))
        })
        .unwrap_err();
        assert_eq!(calls, 1);

        let mut calls = 0;
        let ok = with_retries(&options, || {
            calls += 1;
            if calls < 2 {
                Err(SummarizeError::Timeout(Duration::from_millis(10)))
            } else {
                Ok("fine".into())
            }
        })
        .unwrap();
        assert_eq!(ok, "fine");
    }

    #[test]
    fn url_gets_summarize_path() {
        let s = HttpSummarizer::new("http://localhost:9/", DecodingConfig::default(), ExternalOptions::default()).unwrap();
        assert_eq!(s.url(), "http://localhost:9/summarize");
        let s = HttpSummarizer::new("http://h/summarize", DecodingConfig::default(), ExternalOptions::default()).unwrap();
        assert_eq!(s.url(), "http://h/summarize");
    }
}
