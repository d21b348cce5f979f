#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::{Duration, Instant};

use serde_json::Value;
use slugbot::telemetry::{ServerMessage, StateFrame};

pub struct Client {
    stream: TcpStream,
    reader: BufReader<TcpStream>,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> Self {
        let stream = TcpStream::connect(addr).unwrap();
        stream.set_read_timeout(Some(Duration::from_millis(50))).unwrap();
        let reader = BufReader::new(stream.try_clone().unwrap());
        Self { stream, reader }
    }

    pub fn send_raw(&mut self, line: &str) {
        self.stream.write_all(line.as_bytes()).unwrap();
        self.stream.write_all(b"\n").unwrap();
    }

    pub fn send(&mut self, cmd: Value) {
        self.send_raw(&cmd.to_string());
    }

    /// Next message, or `None` once `timeout` passes without one.
    pub fn recv(&mut self, timeout: Duration) -> Option<ServerMessage> {
        let deadline = Instant::now() + timeout;
        let mut line = String::new();
        loop {
            match self.reader.read_line(&mut line) {
                Ok(0) => return None,
                Ok(_) => return Some(serde_json::from_str(&line).expect("server sent valid JSON")),
                Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                    if Instant::now() > deadline {
                        return None;
                    }
                }
                Err(e) => panic!("read failed: {e}"),
            }
        }
    }

    /// Read until the reply with this id arrives; frames seen meanwhile are returned too.
    pub fn await_reply(&mut self, id: i64) -> (ServerMessage, Vec<StateFrame>) {
        let mut frames = Vec::new();
        loop {
            match self.recv(Duration::from_secs(10)).expect("reply before timeout") {
                ServerMessage::Frame { frame } => frames.push(frame),
                m @ (ServerMessage::Ok { .. } | ServerMessage::Err { .. }) => {
                    let got = match &m {
                        ServerMessage::Ok { id, .. } | ServerMessage::Err { id, .. } => id.clone(),
                        _ => unreachable!(),
                    };
                    if got == id {
                        return (m, frames);
                    }
                }
            }
        }
    }

    pub fn frames_until(&mut self, pred: impl Fn(&StateFrame) -> bool) -> Vec<StateFrame> {
        let mut frames = Vec::new();
        loop {
            match self.recv(Duration::from_secs(10)).expect("frame before timeout") {
                ServerMessage::Frame { frame } => {
                    let done = pred(&frame);
                    frames.push(frame);
                    if done {
                        return frames;
                    }
                }
                other => panic!("unexpected message {other:?}"),
            }
        }
    }

    /// Everything that arrives within `window`.
    pub fn drain(&mut self, window: Duration) -> Vec<ServerMessage> {
        let end = Instant::now() + window;
        let mut out = Vec::new();
        while Instant::now() < end {
            if let Some(m) = self.recv(Duration::from_millis(60)) {
                out.push(m);
            }
        }
        out
    }
}

pub fn frames_of(msgs: &[ServerMessage]) -> Vec<&StateFrame> {
    msgs.iter()
        .filter_map(|m| match m {
            ServerMessage::Frame { frame } => Some(frame),
            _ => None,
        })
        .collect()
}
