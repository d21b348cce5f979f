mod common;

use std::time::Duration;

use common::{frames_of, Client};
use serde_json::json;
use slugbot::telemetry::{serve, ServeOptions, ServerHandle, ServerMessage, StateFrame};
use slugbot_core::stimulus::BehaviorMode;
use slugbot_core::{run_scenario, SimConfig};

const DECIMATION: u64 = 20;

fn start(autostart: bool) -> ServerHandle {
    let opts = ServeOptions { speed: 10.0, autostart, ..Default::default() };
    serve(SimConfig::default(), "127.0.0.1:0", opts).unwrap()
}

/// A round trip guarantees the server has registered the client.
fn connected(server: &ServerHandle, id: i64) -> Client {
    let mut c = Client::connect(server.local_addr());
    c.send(json!({"cmd": "get_config", "id": id}));
    let (reply, _) = c.await_reply(id);
    assert!(matches!(reply, ServerMessage::Ok { config: Some(_), .. }));
    c
}

fn assert_gap_free(frames: &[StateFrame]) {
    for w in frames.windows(2) {
        assert_eq!(w[1].seq, w[0].seq + 1, "sequence gap");
        assert!(w[1].t_ms > w[0].t_ms);
    }
}

#[test]
fn clients_receive_identical_frames() {
    let server = start(false);
    let mut a = connected(&server, 1);
    let mut b = connected(&server, 2);
    a.send(json!({"cmd": "start", "id": 3}));
    let (_, mut fa) = a.await_reply(3);
    fa.extend(a.frames_until(|f| f.seq >= 60));
    let fb = b.frames_until(|f| f.seq >= 60);
    assert_eq!(fa[0].seq, 0);
    assert_eq!(fa[0].t_ms, 0.0);
    assert_eq!(fa[..=60], fb[..=60]);
    assert_gap_free(&fa);
    assert!(fa.windows(2).all(|w| w[1].t_ms - w[0].t_ms == DECIMATION as f64));
    server.shutdown();
}

#[test]
fn pause_freezes_simulated_time() {
    let server = start(true);
    let mut c = connected(&server, 1);
    c.frames_until(|f| f.seq >= 10);
    c.send(json!({"cmd": "pause", "id": 2}));
    let (_, before) = c.await_reply(2);
    let last_t = before.last().map(|f| f.t_ms);
    let quiet = c.drain(Duration::from_millis(1000));
    assert!(frames_of(&quiet).is_empty(), "frames arrived while paused");

    // Still serving while paused.
    c.send(json!({"cmd": "get_config", "id": 3}));
    assert!(matches!(c.await_reply(3).0, ServerMessage::Ok { .. }));

    c.send(json!({"cmd": "start", "id": 4}));
    c.await_reply(4);
    let resumed = c.frames_until(|_| true);
    if let Some(t) = last_t {
        assert!(resumed[0].t_ms > t);
    }
    server.shutdown();
}

#[test]
fn malformed_message_gets_error_only_for_sender() {
    let server = start(true);
    let mut a = connected(&server, 1);
    let mut b = connected(&server, 2);
    a.send_raw("{not json");
    a.send(json!({"cmd": "jump", "id": 7}));
    a.send(json!({"cmd": "set_speed", "speed": 50.0, "id": 8}));
    let mut errors = Vec::new();
    while errors.len() < 3 {
        match a.recv(Duration::from_secs(5)).expect("error replies") {
            ServerMessage::Err { id, .. } => errors.push(id),
            ServerMessage::Frame { .. } => {}
            other => panic!("unexpected {other:?}"),
        }
    }
    assert_eq!(errors, vec![json!(null), json!(7), json!(8)]);

    let seen_by_b = b.drain(Duration::from_millis(500));
    assert!(seen_by_b.iter().all(ServerMessage::is_frame));
    let fb: Vec<StateFrame> = frames_of(&seen_by_b).into_iter().cloned().collect();
    assert!(fb.len() > 5);
    assert_gap_free(&fb);
    server.shutdown();
}

#[test]
fn toggling_mech_grasper_switches_to_bite() {
    let server = start(true);
    let mut c = connected(&server, 1);
    let before = c.frames_until(|f| f.seq >= 5);
    assert!(before.iter().all(|f| f.mode == BehaviorMode::Swallow));
    c.send(json!({"cmd": "set_stimulus", "field": "mech_grasper", "value": false, "id": 2}));
    c.await_reply(2);
    let after = c.frames_until(|_| true);
    assert_eq!(after[0].mode, BehaviorMode::Bite);
    assert!(!after[0].stimulus.mech_grasper);
    assert!(!after[0].units["B38"]);
    server.shutdown();
}

#[test]
fn reset_restarts_from_config() {
    let server = start(true);
    let mut c = connected(&server, 1);
    c.frames_until(|f| f.seq >= 20);
    c.send(json!({"cmd": "set_stimulus", "field": "arousal", "value": false, "id": 2}));
    c.await_reply(2);
    c.send(json!({"cmd": "reset", "id": 3}));
    let (_, earlier) = c.await_reply(3);
    let next = c.frames_until(|_| true);
    let prev_seq = earlier.last().map_or(20, |f| f.seq);
    assert_eq!(next[0].t_ms, 0.0);
    assert!(next[0].seq > prev_seq, "sequence numbers keep counting across resets");
    assert_eq!(next[0].mode, BehaviorMode::Swallow);
    assert!(server.session_log().schedule.is_empty());
    server.shutdown();
}

#[test]
fn session_equals_headless_run_with_same_schedule() {
    let server = start(false);
    let mut c = connected(&server, 1);
    c.send(json!({"cmd": "start", "id": 2}));
    let (_, mut frames) = c.await_reply(2);
    let toggles = [
        (30, "mech_grasper", false),
        (80, "mech_grasper", true),
        (81, "chem_lips", false),
        (140, "mech_lips", false),
        (200, "mech_lips", true),
        (200, "chem_lips", true),
    ];
    for (i, &(after_seq, field, value)) in toggles.iter().enumerate() {
        frames.extend(c.frames_until(|f| f.seq >= after_seq));
        let id = 10 + i as i64;
        c.send(json!({"cmd": "set_stimulus", "field": field, "value": value, "id": id}));
        frames.extend(c.await_reply(id).1);
    }
    frames.extend(c.frames_until(|f| f.seq >= 300));
    c.send(json!({"cmd": "pause", "id": 99}));
    frames.extend(c.await_reply(99).1);
    let log = server.session_log();
    server.shutdown();

    assert_gap_free(&frames);
    let mut cfg = SimConfig::default();
    cfg.scenario.schedule = log.schedule.clone();
    cfg.scenario.duration_s = log.ticks as f64 / 1000.0;
    let trace = run_scenario(&cfg).unwrap();
    assert!(log.schedule.len() >= 4);
    for f in &frames {
        let expected = StateFrame::from_record(f.seq, &trace.records[(f.seq * DECIMATION) as usize]);
        assert_eq!(f, &expected, "frame {} diverges from headless run", f.seq);
    }
    assert!(frames.iter().any(|f| f.mode == BehaviorMode::Reject));
}

#[test]
fn stalled_client_does_not_stall_others() {
    let server = serve(
        SimConfig::default(),
        "127.0.0.1:0",
        ServeOptions { speed: 10.0, autostart: true, queue_capacity: 16, ..Default::default() },
    )
    .unwrap();
    let stalled = connected(&server, 1);
    let mut live = connected(&server, 2);
    let frames = live.frames_until(|f| f.seq >= 400);
    let tail: Vec<StateFrame> = frames.into_iter().skip_while(|f| f.seq < 10).collect();
    assert_gap_free(&tail);
    drop(stalled);
    server.shutdown();
}

#[test]
fn replies_follow_request_order() {
    let server = start(true);
    let mut c = connected(&server, 0);
    c.send(json!({"cmd": "set_stimulus", "field": "mech_grasper", "value": false, "id": 1}));
    c.send(json!({"cmd": "set_speed", "speed": 20, "id": 2}));
    c.send(json!({"cmd": "pause", "id": 3}));
    c.send_raw("oops");
    c.send(json!({"cmd": "set_speed", "speed": 2.5, "id": 5}));
    let mut replies = Vec::new();
    while replies.len() < 5 {
        match c.recv(Duration::from_secs(5)).expect("reply") {
            ServerMessage::Ok { id, .. } => replies.push(("ok", id)),
            ServerMessage::Err { id, .. } => replies.push(("err", id)),
            ServerMessage::Frame { .. } => {}
        }
    }
    assert_eq!(
        replies,
        vec![("ok", json!(1)), ("err", json!(2)), ("ok", json!(3)), ("err", json!(null)), ("ok", json!(5))]
    );
    server.shutdown();
}
