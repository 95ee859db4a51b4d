#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::Duration;

use serde_json::{json, Value};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader, Lines};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::{TcpListener, TcpStream};

use marll_server::protocol::{decode, encode, Kind, Message};
use marll_server::{serve, ServerOptions};

pub const WAIT: Duration = Duration::from_secs(20);

pub async fn start() -> SocketAddr {
    start_with(ServerOptions::default()).await
}

pub async fn start_with(options: ServerOptions) -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, options));
    addr
}

pub struct Client {
    lines: Lines<BufReader<OwnedReadHalf>>,
    writer: OwnedWriteHalf,
    seq: u64,
}

impl Client {
    pub async fn connect(addr: SocketAddr) -> Client {
        let (rd, writer) = TcpStream::connect(addr).await.unwrap().into_split();
        Client { lines: BufReader::new(rd).lines(), writer, seq: 0 }
    }

    pub async fn raw(&mut self, line: &str) {
        self.writer.write_all(line.as_bytes()).await.unwrap();
        self.writer.write_all(b"\n").await.unwrap();
    }

    /// Sends a request and returns its seq.
    pub async fn send(&mut self, kind: Kind, session: Option<&str>, payload: Value) -> u64 {
        self.seq += 1;
        let msg = Message::new(kind, session.map(str::to_string), self.seq, payload);
        self.raw(&encode(&msg)).await;
        self.seq
    }

    pub async fn recv(&mut self) -> Message {
        let line = tokio::time::timeout(WAIT, self.lines.next_line())
            .await
            .expect("server answered in time")
            .unwrap()
            .expect("connection open");
        decode(&line).unwrap()
    }

    /// Next message within `d`, if any.
    pub async fn recv_within(&mut self, d: Duration) -> Option<Message> {
        match tokio::time::timeout(d, self.lines.next_line()).await {
            Ok(line) => Some(decode(&line.unwrap()?).unwrap()),
            Err(_) => None,
        }
    }

    pub async fn recv_kind(&mut self, kind: Kind) -> Message {
        loop {
            let m = self.recv().await;
            if m.kind == kind {
                return m;
            }
        }
    }

    /// Creates a session and returns its id, consuming `session.created`
    /// and the initial frame.
    pub async fn create(&mut self, payload: Value) -> (String, Message, Message) {
        let seq = self.send(Kind::SessionCreate, None, payload).await;
        let created = self.recv().await;
        assert_eq!(created.kind, Kind::SessionCreated, "{created:?}");
        assert_eq!(created.payload["request_seq"], json!(seq));
        let id = created.session.clone().unwrap();
        let frame = self.recv().await;
        assert_eq!(frame.kind, Kind::Frame);
        (id, created, frame)
    }
}

pub fn positions(frame: &Message) -> Vec<[f64; 2]> {
    serde_json::from_value(frame.payload["positions"].clone()).unwrap()
}

/// Reads frames until the one at iteration `t`, returning all of them.
pub async fn frames_until(c: &mut Client, t: u64) -> Vec<Message> {
    let mut out = Vec::new();
    loop {
        let f = c.recv_kind(Kind::Frame).await;
        let at = f.payload["t"].as_u64().unwrap();
        out.push(f);
        if at == t {
            return out;
        }
    }
}
