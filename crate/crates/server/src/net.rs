//! TCP transport: line-delimited JSON, one owner thread per session.
//! A connection whose first line is an HTTP `GET` gets a health reply.

use std::collections::HashMap;
use std::io;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Duration;

use serde_json::json;
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc::{unbounded_channel, UnboundedSender};
use tracing::{debug, info, warn};

use crate::protocol::{decode, encode, CreatePayload, ErrorCode, ErrorPayload, Kind, Message, ProtocolError};
use crate::worker::{drive, Worker};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServerOptions {
    /// Longest accepted line, bytes.
    pub max_line: usize,
    /// Largest graph a session may be created on.
    pub max_nodes: usize,
}

impl Default for ServerOptions {
    fn default() -> Self {
        ServerOptions { max_line: 4 << 20, max_nodes: 20_000 }
    }
}

struct Shared {
    options: ServerOptions,
    next_session: AtomicU64,
    active: Arc<AtomicUsize>,
}

/// Accepts connections until the listener fails.
pub async fn serve(listener: TcpListener, options: ServerOptions) -> io::Result<()> {
    let shared = Arc::new(Shared {
        options,
        next_session: AtomicU64::new(1),
        active: Arc::new(AtomicUsize::new(0)),
    });
    if let Ok(addr) = listener.local_addr() {
        info!(%addr, "listening");
    }
    loop {
        match listener.accept().await {
            Ok((stream, peer)) => {
                debug!(%peer, "connection");
                let shared = shared.clone();
                tokio::spawn(async move {
                    if let Err(e) = connection(stream, shared).await {
                        debug!(%peer, error = %e, "connection ended");
                    }
                });
            }
            // Typically out of file descriptors; back off instead of dying.
            Err(e) => {
                warn!(error = %e, "accept failed");
                tokio::time::sleep(Duration::from_millis(50)).await;
            }
        }
    }
}

enum Line {
    Text(Vec<u8>),
    TooLong,
    Eof,
}

async fn read_line(reader: &mut BufReader<OwnedReadHalf>, max: usize) -> io::Result<Line> {
    let mut buf = Vec::new();
    let n = (&mut *reader).take(max as u64 + 1).read_until(b'\n', &mut buf).await?;
    if n == 0 {
        return Ok(Line::Eof);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
        return Ok(Line::Text(buf));
    }
    if buf.len() <= max {
        // Last line without a newline.
        return Ok(Line::Text(buf));
    }
    // Discard the rest of the oversized line.
    loop {
        buf.clear();
        let n = (&mut *reader).take(max as u64).read_until(b'\n', &mut buf).await?;
        if n == 0 || buf.last() == Some(&b'\n') {
            return Ok(Line::TooLong);
        }
    }
}

async fn health(out: &mut OwnedWriteHalf, reader: &mut BufReader<OwnedReadHalf>, shared: &Shared) -> io::Result<()> {
    // Skip the request headers.
    for _ in 0..100 {
        match read_line(reader, 8192).await? {
            Line::Text(l) if !l.is_empty() => continue,
            _ => break,
        }
    }
    let body = json!({
        "status": "ok",
        "protocol": crate::protocol::PROTOCOL_VERSION,
        "sessions": shared.active.load(Ordering::Relaxed),
    })
    .to_string();
    let response = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    out.write_all(response.as_bytes()).await?;
    out.shutdown().await
}

struct Connection {
    out: UnboundedSender<Message>,
    sessions: HashMap<String, mpsc::Sender<Message>>,
    seq: u64,
    shared: Arc<Shared>,
}

impl Connection {
    fn send(&mut self, kind: Kind, payload: impl serde::Serialize) {
        self.seq += 1;
        let _ = self.out.send(Message::new(kind, None, self.seq, payload));
    }

    fn error(&mut self, e: ProtocolError, session: Option<String>) {
        let payload = ErrorPayload { session, ..e.payload() };
        self.send(Kind::Error, payload);
    }

    fn line(&mut self, line: &[u8]) {
        let text = match std::str::from_utf8(line) {
            Ok(t) => t,
            Err(_) => return self.error(ProtocolError::new(ErrorCode::BadJson, "line is not UTF-8"), None),
        };
        if text.trim().is_empty() {
            return;
        }
        match decode(text) {
            Ok(msg) => self.dispatch(msg),
            Err(e) => self.error(e, None),
        }
    }

    fn dispatch(&mut self, msg: Message) {
        let seq = Some(msg.seq);
        match msg.kind {
            Kind::Ping => self.send(Kind::Pong, msg.payload),
            Kind::SessionCreate => self.create(msg),
            kind if kind.is_session_scoped() => {
                let Some(id) = msg.session.clone() else {
                    let e = ProtocolError::new(ErrorCode::MissingSession, format!("{kind} needs a session"));
                    return self.error(e.with_seq(seq), None);
                };
                let delivered = match self.sessions.get(&id) {
                    Some(tx) => tx.send(msg).is_ok(),
                    None => false,
                };
                if !delivered {
                    self.sessions.remove(&id);
                    let e = ProtocolError::new(ErrorCode::UnknownSession, format!("no session {id:?}"));
                    return self.error(e.with_seq(seq), Some(id));
                }
                if kind == Kind::SessionClose {
                    self.sessions.remove(&id);
                }
            }
            kind => {
                let e = ProtocolError::new(ErrorCode::UnexpectedKind, format!("{kind} is sent by the server only"));
                self.error(e.with_seq(seq), None)
            }
        }
    }

    fn create(&mut self, msg: Message) {
        let seq = Some(msg.seq);
        let payload: CreatePayload = match msg.payload_as() {
            Ok(p) => p,
            Err(e) => {
                let e = ProtocolError::new(ErrorCode::BadPayload, format!("session.create: {e}"));
                return self.error(e.with_seq(seq), None);
            }
        };
        let id = format!("s{}", self.shared.next_session.fetch_add(1, Ordering::Relaxed));
        let worker = match Worker::create(&id, payload, self.shared.options.max_nodes) {
            Ok(w) => w.answering(msg.seq),
            Err(e) => return self.error(e.with_seq(seq), None),
        };
        let (tx, rx) = mpsc::channel();
        let out = self.out.clone();
        let active = self.shared.active.clone();
        active.fetch_add(1, Ordering::Relaxed);
        let spawned = std::thread::Builder::new().name(format!("session-{id}")).spawn(move || {
            drive(worker, rx, |m| out.send(m).is_ok());
            active.fetch_sub(1, Ordering::Relaxed);
        });
        match spawned {
            Ok(_) => {
                info!(session = %id, "session created");
                self.sessions.insert(id, tx);
            }
            Err(e) => {
                self.shared.active.fetch_sub(1, Ordering::Relaxed);
                let e = ProtocolError::new(ErrorCode::BadPayload, format!("cannot start session: {e}"));
                self.error(e.with_seq(seq), None);
            }
        }
    }
}

async fn connection(stream: TcpStream, shared: Arc<Shared>) -> io::Result<()> {
    let max = shared.options.max_line;
    let (rd, mut wr) = stream.into_split();
    let mut reader = BufReader::new(rd);
    let first = read_line(&mut reader, max).await?;
    if let Line::Text(l) = &first {
        if l.starts_with(b"GET ") {
            return health(&mut wr, &mut reader, &shared).await;
        }
    }

    let (out, mut rx) = unbounded_channel::<Message>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            let mut line = encode(&msg);
            line.push('\n');
            if wr.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut conn = Connection { out, sessions: HashMap::new(), seq: 0, shared };
    let mut next = first;
    loop {
        match next {
            Line::Text(l) => conn.line(&l),
            Line::TooLong => {
                let e = ProtocolError::new(ErrorCode::LineTooLong, format!("line exceeds {max} bytes"));
                conn.error(e, None);
            }
            Line::Eof => break,
        }
        next = read_line(&mut reader, max).await?;
    }
    // Dropping the command senders stops every session of this connection.
    drop(conn);
    let _ = writer.await;
    Ok(())
}
