//! Event loops: drive agents from the shared clock and marks, record metrics.

use crate::baselines::{full_interaction_step, no_comm_step, PooledHistory, UcbHistory};
use crate::engine::{marks_for, reward_draw, Clock};
use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::metrics::{EpochRecord, Regime, RunTrace};
use crate::params::{initial_arm_sets, ProtocolParams};
use crate::protocol::{AgentState, EpochOutcome, ProtocolContext};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Epochs played by every agent.
    pub horizon: u64,
    /// Keep one [`EpochRecord`] per epoch.
    pub keep_records: bool,
    /// Stop at the first ring after this wall time.
    pub stop_time: Option<f64>,
}

impl RunOptions {
    pub fn horizon(horizon: u64) -> Self {
        Self {
            horizon,
            keep_records: false,
            stop_time: None,
        }
    }

    pub fn with_records(mut self) -> Self {
        self.keep_records = true;
        self
    }

    pub fn until(mut self, time: f64) -> Self {
        self.stop_time = Some(time);
        self
    }
}

fn record_of(time: f64, agent: usize, epoch: u64, out: &EpochOutcome) -> EpochRecord {
    EpochRecord {
        time,
        agent,
        epoch,
        phase: out.phase,
        epoch_in_phase: out.epoch_in_phase,
        arm: out.arm,
        reward: out.reward,
        msg_arm: out.message.map(|m| m.arm),
        msg_recipient: out.message.map(|m| m.recipient),
    }
}

fn run_protocol(
    inst: &ProblemInstance,
    params: &ProtocolParams,
    seed: u64,
    opts: RunOptions,
    virtual_mode: bool,
) -> Result<RunTrace> {
    if !virtual_mode {
        params.check_horizon(opts.horizon)?;
    }
    let ctx = ProtocolContext::new(inst, params)?;
    let (n, k) = (inst.n(), inst.k());
    let sets = initial_arm_sets(inst, params, seed)?;
    let mut agents: Vec<AgentState> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if virtual_mode {
                AgentState::new_virtual(i, s, k, params.m())
            } else {
                AgentState::new(i, s, k, params.m())
            }
        })
        .collect();
    let regime = if virtual_mode {
        Regime::VirtualCouple
    } else {
        Regime::Gossip
    };
    let mut trace = RunTrace::new(regime, inst, params.m(), seed, opts.horizon, opts.keep_records);
    trace.record_initial_sets(&sets);
    let mut clock = Clock::new(seed, n);
    let mut finished = 0;
    while finished < n {
        let Some(ev) = clock.next_event() else { break };
        if opts.stop_time.is_some_and(|s| ev.time > s) {
            break;
        }
        trace.last_time = ev.time;
        let marks = marks_for(seed, ev.agent, ev.epoch);
        let agent = &mut agents[ev.agent];
        let out = if virtual_mode {
            agent.on_epoch_virtual(ev.time, &marks, &ctx)
        } else {
            agent.on_epoch(ev.time, &marks, &ctx)
        };
        trace.record_epoch(ev.agent, out.arm, inst);
        if out.phase >= 0 && !virtual_mode {
            trace.record_late_epoch(ev.agent, out.phase);
        }
        if let Some(b) = out.boundary {
            trace.record_boundary(ev.agent, ev.time, &b);
        }
        if let Some(msg) = out.message {
            let recipient = &mut agents[msg.recipient];
            recipient.deliver(msg.arm);
            let phase = recipient.phase();
            trace.record_message(&msg, phase);
        }
        if trace.records.is_some() {
            trace.push_record(record_of(ev.time, ev.agent, ev.epoch, &out));
        }
        if ev.epoch == opts.horizon {
            clock.retire(ev.agent);
            finished += 1;
        }
    }
    Ok(trace)
}

/// Runs the gossip protocol until every agent has played `opts.horizon` epochs.
pub fn run_gossip(
    inst: &ProblemInstance,
    params: &ProtocolParams,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    run_protocol(inst, params, seed, opts, false)
}

/// Runs the virtual system; by default it stops at wall time `T_n`.
pub fn run_virtual(
    inst: &ProblemInstance,
    params: &ProtocolParams,
    seed: u64,
    mut opts: RunOptions,
) -> Result<RunTrace> {
    if opts.stop_time.is_none() {
        opts.stop_time = Some(params.sync_time());
    }
    run_protocol(inst, params, seed, opts, true)
}

/// Every agent runs UCB on its own history.
pub fn run_no_comm(
    inst: &ProblemInstance,
    alpha: f64,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    let (n, k) = (inst.n(), inst.k());
    let mut histories = vec![UcbHistory::new(k); n];
    let mut trace = RunTrace::new(Regime::NoComm, inst, 0, seed, opts.horizon, opts.keep_records);
    let mut clock = Clock::new(seed, n);
    let mut finished = 0;
    while finished < n {
        let Some(ev) = clock.next_event() else { break };
        if opts.stop_time.is_some_and(|s| ev.time > s) {
            break;
        }
        trace.last_time = ev.time;
        let marks = marks_for(seed, ev.agent, ev.epoch);
        let h = &mut histories[ev.agent];
        let arm = no_comm_step(h, ev.epoch, alpha);
        let reward = reward_draw(marks.u_reward, inst.mean(arm));
        h.record(arm, reward);
        trace.record_epoch(ev.agent, arm, inst);
        if trace.records.is_some() {
            trace.push_record(EpochRecord {
                time: ev.time,
                agent: ev.agent,
                epoch: ev.epoch,
                phase: 0,
                epoch_in_phase: ev.epoch,
                arm,
                reward,
                msg_arm: None,
                msg_recipient: None,
            });
        }
        if ev.epoch == opts.horizon {
            clock.retire(ev.agent);
            finished += 1;
        }
    }
    Ok(trace)
}

/// Every agent runs UCB on the history of the whole population.
pub fn run_full(
    inst: &ProblemInstance,
    alpha: f64,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    let n = inst.n();
    let mut pooled = PooledHistory::new(inst.k());
    let mut trace = RunTrace::new(Regime::Full, inst, 0, seed, opts.horizon, opts.keep_records);
    let mut clock = Clock::new(seed, n);
    let mut finished = 0;
    while finished < n {
        let Some(ev) = clock.next_event() else { break };
        if opts.stop_time.is_some_and(|s| ev.time > s) {
            break;
        }
        trace.last_time = ev.time;
        let marks = marks_for(seed, ev.agent, ev.epoch);
        let arm = full_interaction_step(&pooled, alpha);
        let reward = reward_draw(marks.u_reward, inst.mean(arm));
        pooled.record(arm, reward);
        trace.record_epoch(ev.agent, arm, inst);
        if trace.records.is_some() {
            trace.push_record(EpochRecord {
                time: ev.time,
                agent: ev.agent,
                epoch: ev.epoch,
                phase: 0,
                epoch_in_phase: ev.epoch,
                arm,
                reward,
                msg_arm: None,
                msg_recipient: None,
            });
        }
        if ev.epoch == opts.horizon {
            clock.retire(ev.agent);
            finished += 1;
        }
    }
    Ok(trace)
}

/// Dispatches on the regime. Baselines use the protocol's alpha.
pub fn run_regime(
    regime: Regime,
    inst: &ProblemInstance,
    params: &ProtocolParams,
    seed: u64,
    opts: RunOptions,
) -> Result<RunTrace> {
    match regime {
        Regime::Gossip => run_gossip(inst, params, seed, opts),
        Regime::NoComm => run_no_comm(inst, params.alpha(), seed, opts),
        Regime::Full => run_full(inst, params.alpha(), seed, opts),
        Regime::VirtualCouple => run_virtual(inst, params, seed, opts),
    }
}
