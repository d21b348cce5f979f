//! Live session over TCP.
//!
//! One thread owns the simulation and advances it tick by tick, paced to
//! wall clock times the speed multiplier. Client readers feed commands into
//! a single ordered channel that the simulation thread drains between ticks,
//! so every command lands atomically before the next tick. Outgoing messages
//! go to per-client bounded queues drained by writer threads; when a queue is
//! full its oldest frame is dropped and the client sees a sequence gap.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use slugbot_core::{SimConfig, Simulation, StimulusEvent};

use super::protocol::{parse_command, Command, CommandKind, ProtocolError, ServerMessage, StateFrame};
use crate::error::{AppError, Result};

const POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServeOptions {
    /// Frame rate in simulated time.
    pub frame_hz: f64,
    pub speed: f64,
    /// Start advancing immediately instead of waiting for `start`.
    pub autostart: bool,
    /// Messages buffered per client before frames are dropped.
    pub queue_capacity: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { frame_hz: 50.0, speed: 1.0, autostart: false, queue_capacity: 256 }
    }
}

struct ClientQueue {
    id: u64,
    messages: Mutex<VecDeque<ServerMessage>>,
    ready: Condvar,
    closed: AtomicBool,
    capacity: usize,
}

impl ClientQueue {
    fn push(&self, msg: ServerMessage) {
        let mut q = self.messages.lock().unwrap();
        if q.len() >= self.capacity {
            if let Some(i) = q.iter().position(ServerMessage::is_frame) {
                q.remove(i);
            }
        }
        q.push_back(msg);
        self.ready.notify_one();
    }

    fn close(&self) {
        self.closed.store(true, Ordering::SeqCst);
        self.ready.notify_all();
    }
}

type Clients = Arc<Mutex<Vec<Arc<ClientQueue>>>>;

/// Client lines in arrival order; rejected lines travel the same path so
/// every reply keeps the order of the requests.
enum Inbound {
    Command(u64, Command),
    Rejected(u64, ProtocolError),
}

/// Stimulus changes applied since the last reset, as a replayable schedule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionLog {
    pub schedule: Vec<StimulusEvent>,
    pub ticks: u64,
}

pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    log: Arc<Mutex<SessionLog>>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn session_log(&self) -> SessionLog {
        self.log.lock().unwrap().clone()
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    /// Block until the session ends (it only ends via [`ServerHandle::shutdown`]).
    pub fn join(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

pub fn serve(config: SimConfig, addr: impl ToSocketAddrs, opts: ServeOptions) -> Result<ServerHandle> {
    config.validate()?;
    let sim = Simulation::new(config.clone())?;
    let listener = TcpListener::bind(addr).map_err(|e| AppError::io("<listen>", e))?;
    let addr = listener.local_addr().map_err(|e| AppError::io("<listen>", e))?;
    listener.set_nonblocking(true).map_err(|e| AppError::io("<listen>", e))?;

    let shutdown = Arc::new(AtomicBool::new(false));
    let clients: Clients = Arc::default();
    let log = Arc::new(Mutex::new(SessionLog::default()));
    let (tx, rx) = mpsc::channel();

    let sim_thread = {
        let (clients, shutdown, log) = (clients.clone(), shutdown.clone(), log.clone());
        thread::spawn(move || SimLoop::new(sim, config, opts, clients, log).run(rx, &shutdown))
    };
    let accept_thread = {
        let shutdown = shutdown.clone();
        thread::spawn(move || accept_loop(listener, tx, clients, opts.queue_capacity, &shutdown))
    };
    log::info!("telemetry listening on {addr}");
    Ok(ServerHandle { addr, shutdown, log, threads: vec![sim_thread, accept_thread] })
}

fn accept_loop(listener: TcpListener, tx: Sender<Inbound>, clients: Clients, capacity: usize, shutdown: &AtomicBool) {
    static NEXT_ID: AtomicU64 = AtomicU64::new(1);
    let mut workers: Vec<JoinHandle<()>> = Vec::new();
    let shutdown_flag = Arc::new(AtomicBool::new(false));
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let id = NEXT_ID.fetch_add(1, Ordering::Relaxed);
                log::info!("client {id} connected from {peer}");
                let queue = Arc::new(ClientQueue {
                    id,
                    messages: Mutex::default(),
                    ready: Condvar::new(),
                    closed: AtomicBool::new(false),
                    capacity: capacity.max(1),
                });
                clients.lock().unwrap().push(queue.clone());
                match spawn_client(stream, queue.clone(), tx.clone(), shutdown_flag.clone()) {
                    Ok(mut handles) => workers.append(&mut handles),
                    Err(e) => {
                        log::warn!("client {id}: {e}");
                        queue.close();
                    }
                }
                clients.lock().unwrap().retain(|c| !c.closed.load(Ordering::SeqCst));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(Duration::from_millis(5));
            }
        }
    }
    shutdown_flag.store(true, Ordering::SeqCst);
    for c in clients.lock().unwrap().drain(..) {
        c.close();
    }
    for w in workers {
        let _ = w.join();
    }
}

fn spawn_client(
    stream: TcpStream,
    queue: Arc<ClientQueue>,
    tx: Sender<Inbound>,
    shutdown: Arc<AtomicBool>,
) -> std::io::Result<Vec<JoinHandle<()>>> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(POLL))?;
    let mut write_half = stream.try_clone()?;

    let reader = {
        let queue = queue.clone();
        thread::spawn(move || {
            let mut lines = BufReader::new(stream);
            let mut buf = String::new();
            while !shutdown.load(Ordering::SeqCst) && !queue.closed.load(Ordering::SeqCst) {
                match lines.read_line(&mut buf) {
                    Ok(0) => break,
                    Ok(_) => {
                        let line = buf.trim();
                        if !line.is_empty() {
                            let msg = match parse_command(line) {
                                Ok(cmd) => Inbound::Command(queue.id, cmd),
                                Err(e) => Inbound::Rejected(queue.id, e),
                            };
                            if tx.send(msg).is_err() {
                                break;
                            }
                        }
                        buf.clear();
                    }
                    // A timeout may leave a partial line in `buf`; keep it.
                    Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
                    Err(e) if e.kind() == ErrorKind::InvalidData => {
                        let e = ProtocolError { id: serde_json::Value::Null, message: "message is not UTF-8".into() };
                        if tx.send(Inbound::Rejected(queue.id, e)).is_err() {
                            break;
                        }
                        buf.clear();
                    }
                    Err(_) => break,
                }
            }
            log::info!("client {} disconnected", queue.id);
            queue.close();
        })
    };

    let writer = thread::spawn(move || {
        loop {
            let batch: Vec<ServerMessage> = {
                let mut q = queue.messages.lock().unwrap();
                while q.is_empty() && !queue.closed.load(Ordering::SeqCst) {
                    q = queue.ready.wait_timeout(q, POLL).unwrap().0;
                }
                if q.is_empty() {
                    break;
                }
                q.drain(..).collect()
            };
            let text: String = batch.iter().map(ServerMessage::to_line).collect();
            if write_half.write_all(text.as_bytes()).and_then(|_| write_half.flush()).is_err() {
                queue.close();
                break;
            }
        }
        let _ = write_half.shutdown(std::net::Shutdown::Both);
    });
    Ok(vec![reader, writer])
}

struct SimLoop {
    sim: Simulation,
    config: SimConfig,
    clients: Clients,
    log: Arc<Mutex<SessionLog>>,
    running: bool,
    speed: f64,
    decimation: u64,
    seq: u64,
    anchor_wall: Instant,
    anchor_tick: u64,
}

impl SimLoop {
    fn new(
        sim: Simulation,
        config: SimConfig,
        opts: ServeOptions,
        clients: Clients,
        log: Arc<Mutex<SessionLog>>,
    ) -> Self {
        let frame_ms = 1000.0 / opts.frame_hz;
        let decimation = (frame_ms / config.scenario.dt_ms).round().max(1.0) as u64;
        Self {
            sim,
            config,
            clients,
            log,
            running: opts.autostart,
            speed: opts.speed,
            decimation,
            seq: 0,
            anchor_wall: Instant::now(),
            anchor_tick: 0,
        }
    }

    fn reanchor(&mut self) {
        self.anchor_wall = Instant::now();
        self.anchor_tick = self.sim.tick();
    }

    fn send_to(&self, client: u64, msg: ServerMessage) {
        if let Some(c) = self.clients.lock().unwrap().iter().find(|c| c.id == client) {
            c.push(msg);
        }
    }

    fn broadcast(&self, frame: StateFrame) {
        let msg = ServerMessage::Frame { frame };
        let mut clients = self.clients.lock().unwrap();
        clients.retain(|c| !c.closed.load(Ordering::SeqCst));
        for c in clients.iter() {
            c.push(msg.clone());
        }
    }

    fn handle(&mut self, msg: Inbound) {
        match msg {
            Inbound::Command(client, cmd) => self.apply(client, cmd),
            Inbound::Rejected(client, e) => self.send_to(client, ServerMessage::err(e)),
        }
    }

    fn apply(&mut self, client: u64, cmd: Command) {
        let reply = match &cmd.kind {
            CommandKind::SetStimulus { field, value } => {
                self.sim.set_stimulus_field(*field, *value);
                let ev = StimulusEvent { t_ms: self.sim.time_ms(), stimulus: self.sim.stimulus() };
                let mut log = self.log.lock().unwrap();
                match log.schedule.last_mut() {
                    Some(last) if last.t_ms == ev.t_ms => *last = ev,
                    _ => log.schedule.push(ev),
                }
                ServerMessage::ok(&cmd.kind, cmd.id)
            }
            CommandKind::Start => {
                if !self.running {
                    self.running = true;
                    self.reanchor();
                }
                ServerMessage::ok(&cmd.kind, cmd.id)
            }
            CommandKind::Pause => {
                self.running = false;
                ServerMessage::ok(&cmd.kind, cmd.id)
            }
            CommandKind::Reset => match Simulation::new(self.config.clone()) {
                Ok(sim) => {
                    self.sim = sim;
                    *self.log.lock().unwrap() = SessionLog::default();
                    self.reanchor();
                    ServerMessage::ok(&cmd.kind, cmd.id)
                }
                Err(e) => ServerMessage::Err { err: e.to_string(), id: cmd.id },
            },
            CommandKind::SetSpeed { speed } => {
                self.speed = *speed;
                self.reanchor();
                ServerMessage::ok(&cmd.kind, cmd.id)
            }
            CommandKind::GetConfig => ServerMessage::Ok {
                ok: cmd.kind.name().to_string(),
                id: cmd.id,
                config: Some(Box::new(self.config.clone())),
            },
        };
        self.send_to(client, reply);
    }

    /// Ticks that should have run by now at the current speed.
    fn due_tick(&self) -> u64 {
        let sim_ms = self.anchor_wall.elapsed().as_secs_f64() * 1000.0 * self.speed;
        self.anchor_tick + (sim_ms / self.config.scenario.dt_ms) as u64
    }

    fn wait_for_next_tick(&self) -> Duration {
        let next = (self.sim.tick() + 1 - self.anchor_tick) as f64 * self.config.scenario.dt_ms;
        let at = Duration::from_secs_f64(next / 1000.0 / self.speed);
        at.saturating_sub(self.anchor_wall.elapsed()).min(POLL)
    }

    fn run(mut self, rx: Receiver<Inbound>, shutdown: &AtomicBool) {
        self.reanchor();
        while !shutdown.load(Ordering::SeqCst) {
            while let Ok(msg) = rx.try_recv() {
                self.handle(msg);
            }
            if !self.running || self.sim.tick() >= self.due_tick() {
                let wait = if self.running { self.wait_for_next_tick() } else { POLL };
                match rx.recv_timeout(wait) {
                    Ok(msg) => self.handle(msg),
                    Err(RecvTimeoutError::Timeout) => {}
                    Err(RecvTimeoutError::Disconnected) => {
                        if !self.running {
                            thread::sleep(POLL);
                        }
                    }
                }
                continue;
            }
            let tick = self.sim.tick();
            match self.sim.step() {
                Ok(record) => {
                    self.log.lock().unwrap().ticks = self.sim.tick();
                    if tick.is_multiple_of(self.decimation) {
                        let frame = StateFrame::from_record(self.seq, &record);
                        self.seq += 1;
                        self.broadcast(frame);
                    }
                }
                Err(e) => {
                    log::error!("simulation stopped: {e}");
                    self.running = false;
                }
            }
        }
    }
}
