//! Event-list reference for the neural controller.
//!
//! Works on a whole recording at once instead of tick by tick: first the
//! phase intervals are cut from the mode and proprioception sequences, then
//! the delayed units become a list of (tick, unit) fire events, and finally
//! every tick is rendered from its interval and the events that precede it.

use slugbot_core::neural::{DelayParams, Phase, Unit, UnitStates};
use slugbot_core::stimulus::BehaviorMode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub phase: Phase,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FireEvent {
    pub tick: usize,
    pub unit: Unit,
    pub interval: usize,
}

/// Ticks needed for `delay_ms` to elapse at step `dt_ms`.
fn ticks(delay_ms: f64, dt_ms: f64) -> usize {
    let n = delay_ms / dt_ms;
    let r = n.round();
    // Tolerate representation error when the delay is a whole number of ticks.
    if (n - r).abs() < 1e-9 {
        r as usize
    } else {
        n.ceil() as usize
    }
}

pub fn phase_intervals(modes: &[BehaviorMode], x_hat: &[f64], dt_ms: f64, p: &DelayParams) -> Vec<Interval> {
    assert_eq!(modes.len(), x_hat.len());
    let prot_max = ticks(p.protraction_max_ms, dt_ms);
    let ret_max = ticks(p.retraction_max_ms, dt_ms);
    let mut out: Vec<Interval> = Vec::new();
    let mut phase = Phase::Idle;
    let mut start = 0;
    for (k, (&mode, &x)) in modes.iter().zip(x_hat).enumerate() {
        let next = if mode == BehaviorMode::Quiescent {
            Phase::Idle
        } else {
            match phase {
                Phase::Idle => Phase::Protraction,
                Phase::Protraction if x >= p.x_protraction_threshold || k - start >= prot_max => Phase::Retraction,
                Phase::Retraction if x <= p.x_retraction_threshold || k - start >= ret_max => Phase::Protraction,
                other => other,
            }
        };
        if next != phase || k == 0 {
            if k > 0 {
                out.push(Interval { phase, start, end: k });
            }
            phase = next;
            start = k;
        }
    }
    if !modes.is_empty() {
        out.push(Interval { phase, start, end: modes.len() });
    }
    out
}

pub fn fire_events(intervals: &[Interval], dt_ms: f64, p: &DelayParams) -> Vec<FireEvent> {
    let mut events = Vec::new();
    for (i, iv) in intervals.iter().enumerate() {
        let delayed: &[(Unit, f64)] = match iv.phase {
            Phase::Protraction => &[(Unit::B10, p.b10_ms)],
            Phase::Retraction => &[(Unit::Ru2, p.ru2_ms), (Unit::Ru3, p.ru3_ms)],
            Phase::Idle => &[],
        };
        for &(unit, delay) in delayed {
            let tick = iv.start + ticks(delay, dt_ms);
            if tick < iv.end {
                events.push(FireEvent { tick, unit, interval: i });
            }
        }
    }
    events.sort_by_key(|e| e.tick);
    events
}

/// Boolean unit states at every tick.
pub fn render(modes: &[BehaviorMode], x_hat: &[f64], dt_ms: f64, p: &DelayParams) -> Vec<UnitStates> {
    let intervals = phase_intervals(modes, x_hat, dt_ms, p);
    let events = fire_events(&intervals, dt_ms, p);
    let mut out = Vec::with_capacity(modes.len());
    for (i, iv) in intervals.iter().enumerate() {
        for (k, &mode) in modes.iter().enumerate().take(iv.end).skip(iv.start) {
            let fired = |unit: Unit| events.iter().any(|e| e.interval == i && e.unit == unit && e.tick <= k);
            let prot = iv.phase == Phase::Protraction;
            let ret = iv.phase == Phase::Retraction;
            let ingestive = matches!(mode, BehaviorMode::Bite | BehaviorMode::Swallow);
            let reject = mode == BehaviorMode::Reject;
            let mut u = UnitStates::default();
            u[Unit::B31B32] = prot;
            u[Unit::B64] = ret;
            u[Unit::B43B45] = ret;
            u[Unit::Ru1] = ret;
            u[Unit::B10] = prot && fired(Unit::B10);
            u[Unit::Ru2] = ret && fired(Unit::Ru2);
            u[Unit::Ru3] = ret && fired(Unit::Ru3);
            u[Unit::Opener] = (prot && ingestive) || (ret && reject);
            u[Unit::Closer] = (ret && ingestive) || (prot && reject);
            u[Unit::B38] = prot && mode == BehaviorMode::Swallow;
            u[Unit::Cbi3] = ingestive;
            out.push(u);
        }
    }
    out
}
