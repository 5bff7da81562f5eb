use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{Message, PredictRequest, Rays, WireTensor, PROTOCOL_VERSION};
use super::{CostMapProvider, PredictionContext, PredictionResponse};
use crate::error::{Error, Result};
use crate::mapping::LOCAL_SIZE;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// Where the predictor lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// `host:port`.
    Tcp(String),
    /// A process speaking the protocol on its stdin and stdout.
    Process { program: String, args: Vec<String> },
}

impl FromStr for Endpoint {
    type Err = Error;

    /// `cmd:program arg...` spawns a process; anything else is `host:port`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(cmd) = s.strip_prefix("cmd:") {
            let mut parts = cmd.split_whitespace().map(String::from);
            let program = parts
                .next()
                .ok_or_else(|| Error::InvalidParam("empty predictor command".into()))?;
            return Ok(Endpoint::Process {
                program,
                args: parts.collect(),
            });
        }
        if !s.contains(':') {
            return Err(Error::InvalidParam(format!("endpoint {s:?} is not host:port or cmd:...")));
        }
        Ok(Endpoint::Tcp(s.to_string()))
    }
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(c) = self.child.as_mut() {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

enum Failure {
    Broken(String),
    Fatal(Error),
}

impl Connection {
    fn open(endpoint: &Endpoint, timeout: Duration) -> Result<Self> {
        let (reader, writer, child): (Box<dyn io::Read + Send>, Box<dyn Write + Send>, Option<Child>) = match endpoint {
            Endpoint::Tcp(addr) => {
                let sock = addr
                    .to_socket_addrs()?
                    .next()
                    .ok_or_else(|| Error::InvalidParam(format!("cannot resolve {addr}")))?;
                let stream = TcpStream::connect_timeout(&sock, timeout)?;
                stream.set_nodelay(true)?;
                (Box::new(stream.try_clone()?), Box::new(stream), None)
            }
            Endpoint::Process { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()?;
                let stdout = child.stdout.take().expect("piped stdout");
                let stdin = child.stdin.take().expect("piped stdin");
                (Box::new(stdout), Box::new(stdin), Some(child))
            }
        };
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut conn = Connection {
            writer,
            lines: rx,
            child,
        };
        let reply = conn
            .exchange(&Message::Hello {
                version: PROTOCOL_VERSION,
            }, timeout)
            .map_err(|f| match f {
                Failure::Broken(m) => Error::Protocol(format!("handshake failed: {m}")),
                Failure::Fatal(e) => e,
            })?;
        match reply {
            Message::Hello { version } if version == PROTOCOL_VERSION => Ok(conn),
            Message::Hello { version } => Err(Error::Protocol(format!(
                "server speaks version {version}, expected {PROTOCOL_VERSION}"
            ))),
            Message::Error { message } => Err(Error::Protocol(format!("handshake rejected: {message}"))),
            other => Err(Error::Protocol(format!("unexpected handshake reply {}", kind(&other)))),
        }
    }

    fn exchange(&mut self, msg: &Message, timeout: Duration) -> std::result::Result<Message, Failure> {
        let line = msg.to_line().map_err(Failure::Fatal)?;
        if let Err(e) = self
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
        {
            return Err(Failure::Broken(e.to_string()));
        }
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => Message::from_line(&reply).map_err(Failure::Fatal),
            Ok(Err(e)) => Err(Failure::Broken(e.to_string())),
            Err(RecvTimeoutError::Disconnected) => Err(Failure::Broken("stream closed".into())),
            Err(RecvTimeoutError::Timeout) => Err(Failure::Fatal(Error::Timeout(timeout))),
        }
    }
}

fn kind(m: &Message) -> &'static str {
    match m {
        Message::Hello { .. } => "hello",
        Message::Predict(_) => "predict",
        Message::Costmap { .. } => "costmap",
        Message::Error { .. } => "error",
    }
}

/// Client for an out-of-process predictor. One connection per instance;
/// a broken stream is reopened once per request before giving up.
pub struct RemotePredictor {
    endpoint: Endpoint,
    timeout: Duration,
    conn: Option<Connection>,
}

impl RemotePredictor {
    pub fn new(endpoint: Endpoint) -> Self {
        Self::with_timeout(endpoint, DEFAULT_TIMEOUT)
    }

    pub fn with_timeout(endpoint: Endpoint, timeout: Duration) -> Self {
        Self {
            endpoint,
            timeout,
            conn: None,
        }
    }

    /// Opens the connection and performs the handshake now.
    pub fn connect(&mut self) -> Result<()> {
        if self.conn.is_none() {
            self.conn = Some(Connection::open(&self.endpoint, self.timeout)?);
        }
        Ok(())
    }

    pub fn request(&mut self, req: PredictRequest) -> Result<PredictionResponse> {
        let start = Instant::now();
        let msg = Message::Predict(req);
        let mut retried = false;
        let reply = loop {
            self.connect()?;
            let conn = self.conn.as_mut().expect("connected");
            match conn.exchange(&msg, self.timeout) {
                Ok(m) => break m,
                Err(Failure::Fatal(e)) => {
                    self.conn = None;
                    return Err(e);
                }
                Err(Failure::Broken(why)) => {
                    self.conn = None;
                    if retried {
                        return Err(Error::Protocol(format!("predictor stream broken: {why}")));
                    }
                    log::warn!("predictor stream broken ({why}); reconnecting");
                    retried = true;
                }
            }
        };
        match reply {
            Message::Costmap { nav, occ } => {
                let resp = PredictionResponse {
                    nav: nav.to_grid(LOCAL_SIZE, LOCAL_SIZE)?,
                    occ: occ.to_grid(LOCAL_SIZE, LOCAL_SIZE)?,
                    latency: start.elapsed(),
                };
                resp.validate()?;
                Ok(resp)
            }
            Message::Error { message } => Err(Error::Protocol(format!("predictor error: {message}"))),
            other => Err(Error::Protocol(format!("unexpected reply {}", kind(&other)))),
        }
    }
}

/// Wire request for a prediction context.
pub fn build_request(ctx: &PredictionContext<'_>) -> PredictRequest {
    let pooled = ctx.global.pool_global();
    PredictRequest {
        episode: ctx.episode,
        step: ctx.step,
        target: ctx.target.id(),
        orientation_bin: ctx.orientation_bin(),
        local: WireTensor::encode(&ctx.local.shape(), ctx.local.as_slice()),
        global: WireTensor::encode(&pooled.shape(), pooled.as_slice()),
        rays: Rays {
            depth: ctx.observation.depths(),
            class: ctx.observation.classes(),
        },
    }
}

impl CostMapProvider for RemotePredictor {
    fn name(&self) -> &str {
        "remote"
    }

    fn predict(&mut self, ctx: &PredictionContext<'_>) -> Result<PredictionResponse> {
        self.request(build_request(ctx))
    }
}
