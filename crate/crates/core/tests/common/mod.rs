use std::collections::BTreeSet;

use gossip_bandit::engine::{marks_for, Clock, EpochMarks};
use gossip_bandit::instance::ProblemInstance;
use gossip_bandit::params::{initial_arm_sets, ProtocolParams};
use gossip_bandit::protocol::{AgentState, EpochOutcome, ProtocolContext};

pub struct Played {
    pub marks: EpochMarks,
    pub time: f64,
    pub out: EpochOutcome,
}

pub struct Segment {
    pub phase: i64,
    pub aware: Vec<usize>,
    pub opinion: Option<usize>,
    pub steps: Vec<Played>,
}

/// Drives the protocol directly, checking per-step invariants and cutting
/// each agent's history into phase segments.
pub fn drive(inst: &ProblemInstance, params: &ProtocolParams, seed: u64, horizon: u64) -> Vec<Vec<Segment>> {
    let ctx = ProtocolContext::new(inst, params).unwrap();
    let sets = initial_arm_sets(inst, params, seed).unwrap();
    let (n, k) = (inst.n(), inst.k());
    let mut agents: Vec<AgentState> = sets
        .iter()
        .enumerate()
        .map(|(i, s)| AgentState::new(i, s, k, params.m()))
        .collect();
    let mut segments: Vec<Vec<Segment>> = agents
        .iter()
        .map(|a| {
            vec![Segment {
                phase: a.phase(),
                aware: a.aware().to_vec(),
                opinion: None,
                steps: Vec::new(),
            }]
        })
        .collect();
    let mut clock = Clock::new(seed, n);
    let mut done = 0;
    while done < n {
        let ev = clock.next_event().unwrap();
        let marks = marks_for(seed, ev.agent, ev.epoch);
        let agent = &mut agents[ev.agent];
        let before: BTreeSet<usize> = agent.aware().iter().copied().collect();
        let out = agent.on_epoch(ev.time, &marks, &ctx);
        assert!(before.contains(&out.arm), "played outside the aware set");
        let after: BTreeSet<usize> = agent.aware().iter().copied().collect();
        assert!(before.is_subset(&after), "awareness shrank");
        assert!(agent.aware().windows(2).all(|w| w[0] < w[1]));
        let closed = out.boundary.is_some();
        let message = out.message;
        segments[ev.agent].last_mut().unwrap().steps.push(Played {
            marks,
            time: ev.time,
            out,
        });
        if closed {
            segments[ev.agent].push(Segment {
                phase: agent.phase(),
                aware: agent.aware().to_vec(),
                opinion: agent.opinion_prev(),
                steps: Vec::new(),
            });
        }
        if let Some(msg) = message {
            assert_ne!(msg.recipient, msg.sender);
            agents[msg.recipient].deliver(msg.arm);
        }
        if ev.epoch == horizon {
            clock.retire(ev.agent);
            done += 1;
        }
    }
    segments
}

/// Replays every phase segment from a fresh agent holding only the phase's
/// aware set and previous opinion; returns the first mismatch.
pub fn replay_mismatch(
    inst: &ProblemInstance,
    params: &ProtocolParams,
    segments: Vec<Vec<Segment>>,
) -> Option<(usize, i64, u64)> {
    let ctx = ProtocolContext::new(inst, params).unwrap();
    for (id, agent) in segments.into_iter().enumerate() {
        for seg in agent {
            let mut fresh =
                AgentState::at_phase(id, &seg.aware, inst.k(), params.m(), seg.phase, seg.opinion);
            for step in &seg.steps {
                let out = fresh.on_epoch(step.time, &step.marks, &ctx);
                let same = out.arm == step.out.arm
                    && out.reward == step.out.reward
                    && out.phase == step.out.phase
                    && out.epoch_in_phase == step.out.epoch_in_phase
                    && out.message == step.out.message
                    && out.boundary.is_some() == step.out.boundary.is_some();
                if !same {
                    return Some((id, seg.phase, step.out.epoch_in_phase));
                }
            }
        }
    }
    None
}
