//! Per-agent state machine of the gossip bandit protocol.
//!
//! Early phases (`-M..=-1`) last `L` epochs each: the agent plays its aware
//! arms round-robin and, on the last epoch, recommends the arm with the best
//! phase-local empirical mean to a uniformly random peer. Late phase `j >= 0`
//! lasts `T_j` epochs of UCB restricted to the aware set; for `j >= 1` the
//! first `n * 2^j` epochs also push the previous phase's most-played arm.
//! Received ids are buffered and merged into the aware set only at phase
//! boundaries, and all per-arm statistics are reset there.
//!
//! The virtual variant runs the early protocol forever and caps the aware set
//! at `2M + ceil(K/n)` by dropping random arms other than the best one.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{recipient_draw, reward_draw, EpochMarks};
use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::params::ProtocolParams;

/// One arm-id recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub arm: usize,
    pub sender: usize,
    pub recipient: usize,
    pub send_time: f64,
    /// Sender's phase when the message was sent; negative means early stage.
    pub sender_phase: i64,
}

impl Message {
    /// Bits needed to encode the payload for `k` arms.
    pub fn payload_bits(k: usize) -> u32 {
        usize::BITS - k.leading_zeros()
    }
}

/// Summary of a phase transition that happened at the end of an epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub new_phase: i64,
    pub aware_len: usize,
    /// The best arm entered the aware set at this merge.
    pub gained_best: bool,
    /// Virtual mode only: arms were dropped to respect the cap.
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutcome {
    pub arm: usize,
    pub reward: u8,
    pub phase: i64,
    pub epoch_in_phase: u64,
    pub message: Option<Message>,
    pub boundary: Option<Boundary>,
}

/// Read-only data shared by every agent of a run.
#[derive(Debug, Clone)]
pub struct ProtocolContext<'a> {
    pub inst: &'a ProblemInstance,
    pub params: &'a ProtocolParams,
    late_lengths: Vec<u64>,
    best_arm: usize,
}

impl<'a> ProtocolContext<'a> {
    pub fn new(inst: &'a ProblemInstance, params: &'a ProtocolParams) -> Result<Self> {
        Ok(Self {
            inst,
            params,
            late_lengths: params.late_schedule()?,
            best_arm: inst.best_arm(),
        })
    }

    pub fn best_arm(&self) -> usize {
        self.best_arm
    }

    /// Length of late phase `j`, or `None` past the phase cap.
    pub fn late_len(&self, j: u32) -> Option<u64> {
        self.late_lengths.get(j as usize).copied()
    }
}

/// UCB index `mean + sqrt(alpha ln k / count)`.
#[inline]
pub fn ucb_index(mean: f64, count: u64, ln_k: f64, alpha: f64) -> f64 {
    mean + (alpha * ln_k / count as f64).sqrt()
}

/// Arm to play among `arms` (ascending): the lowest unplayed one if any,
/// otherwise the UCB argmax with ties going to the lowest id.
#[inline]
pub(crate) fn ucb_pick(
    arms: impl Iterator<Item = usize> + Clone,
    counts: &[u64],
    sums: &[u64],
    k: u64,
    alpha: f64,
) -> usize {
    if let Some(a) = arms.clone().find(|&a| counts[a] == 0) {
        return a;
    }
    let ln_k = (k as f64).ln();
    let mut best = usize::MAX;
    let mut best_val = f64::NEG_INFINITY;
    for a in arms {
        let n = counts[a];
        let v = ucb_index(sums[a] as f64 / n as f64, n, ln_k, alpha);
        if v > best_val {
            best_val = v;
            best = a;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    id: usize,
    phase: i64,
    m: i64,
    aware: Vec<usize>,
    aware_mask: Vec<bool>,
    inbox: Vec<usize>,
    inbox_mask: Vec<bool>,
    epoch_in_phase: u64,
    total_epochs: u64,
    counts: Vec<u64>,
    sums: Vec<u64>,
    opinion_prev: Option<usize>,
    comm_quota_used: u64,
    virtual_mode: bool,
}

impl AgentState {
    /// Fresh agent in phase `-M` aware of `initial` (zero-based arm ids).
    pub fn new(id: usize, initial: &[usize], k: usize, m: u32) -> Self {
        let mut aware: Vec<usize> = initial.to_vec();
        aware.sort_unstable();
        aware.dedup();
        let mut aware_mask = vec![false; k];
        for &a in &aware {
            aware_mask[a] = true;
        }
        Self {
            id,
            phase: -(m as i64),
            m: m as i64,
            aware,
            aware_mask,
            inbox: Vec::new(),
            inbox_mask: vec![false; k],
            epoch_in_phase: 0,
            total_epochs: 0,
            counts: vec![0; k],
            sums: vec![0; k],
            opinion_prev: None,
            comm_quota_used: 0,
            virtual_mode: false,
        }
    }

    /// Agent of the virtual (arm-dropping, early-stage-only) system.
    pub fn new_virtual(id: usize, initial: &[usize], k: usize, m: u32) -> Self {
        Self {
            virtual_mode: true,
            ..Self::new(id, initial, k, m)
        }
    }

    /// Starts the agent directly in `phase` with the given aware set, clean
    /// statistics and an optional previous opinion. Used to replay one phase
    /// in isolation.
    pub fn at_phase(
        id: usize,
        aware: &[usize],
        k: usize,
        m: u32,
        phase: i64,
        opinion_prev: Option<usize>,
    ) -> Self {
        let mut s = Self::new(id, aware, k, m);
        s.phase = phase;
        s.opinion_prev = opinion_prev;
        s
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn phase(&self) -> i64 {
        self.phase
    }

    pub fn is_early(&self) -> bool {
        self.phase < 0 || self.virtual_mode
    }

    pub fn aware(&self) -> &[usize] {
        &self.aware
    }

    pub fn is_aware(&self, arm: usize) -> bool {
        self.aware_mask[arm]
    }

    pub fn inbox(&self) -> &[usize] {
        &self.inbox
    }

    pub fn epoch_in_phase(&self) -> u64 {
        self.epoch_in_phase
    }

    pub fn total_epochs(&self) -> u64 {
        self.total_epochs
    }

    pub fn opinion_prev(&self) -> Option<usize> {
        self.opinion_prev
    }

    pub fn comm_quota_used(&self) -> u64 {
        self.comm_quota_used
    }

    /// Phase-local play count of `arm`.
    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    /// Buffers a received arm id until the next phase boundary.
    pub fn deliver(&mut self, arm: usize) {
        if !self.inbox_mask[arm] {
            self.inbox_mask[arm] = true;
            self.inbox.push(arm);
        }
    }

    fn observe(&mut self, arm: usize, marks: &EpochMarks, inst: &ProblemInstance) -> u8 {
        let reward = reward_draw(marks.u_reward, inst.mean(arm));
        self.counts[arm] += 1;
        self.sums[arm] += reward as u64;
        reward
    }

    /// Highest phase-local empirical mean among played aware arms.
    fn best_empirical(&self) -> usize {
        let mut best = self.aware[0];
        let mut best_val = f64::NEG_INFINITY;
        for &a in &self.aware {
            let n = self.counts[a];
            if n == 0 {
                continue;
            }
            let v = self.sums[a] as f64 / n as f64;
            if v > best_val {
                best_val = v;
                best = a;
            }
        }
        best
    }

    fn most_played(&self) -> usize {
        let mut best = self.aware[0];
        for &a in &self.aware {
            if self.counts[a] > self.counts[best] {
                best = a;
            }
        }
        best
    }

    fn send(&mut self, arm: usize, time: f64, marks: &EpochMarks, n: usize) -> Option<Message> {
        let recipient = recipient_draw(marks.u_recipient, n, self.id)?;
        self.comm_quota_used += 1;
        Some(Message {
            arm,
            sender: self.id,
            recipient,
            send_time: time,
            sender_phase: self.phase,
        })
    }

    /// Merges the inbox, resets phase statistics and advances the phase.
    fn end_phase(&mut self, ctx: &ProtocolContext<'_>, drop_seed: Option<u64>) -> Boundary {
        for &a in &self.aware {
            self.counts[a] = 0;
            self.sums[a] = 0;
        }
        let best = ctx.best_arm();
        let had_best = self.aware_mask[best];
        for &a in &self.inbox {
            self.inbox_mask[a] = false;
            if !self.aware_mask[a] {
                self.aware_mask[a] = true;
                self.aware.push(a);
            }
        }
        self.inbox.clear();
        let mut dropped = false;
        if let Some(seed) = drop_seed {
            let cap = ctx.params.virtual_cap(ctx.inst);
            if self.aware.len() > cap {
                dropped = true;
                let keep_best = self.aware_mask[best];
                let mut others: Vec<usize> =
                    self.aware.iter().copied().filter(|&a| a != best).collect();
                others.sort_unstable();
                others.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                others.truncate(cap - usize::from(keep_best));
                for &a in &self.aware {
                    self.aware_mask[a] = false;
                }
                self.aware = others;
                if keep_best {
                    self.aware.push(best);
                }
                for &a in &self.aware {
                    self.aware_mask[a] = true;
                }
            }
        }
        self.aware.sort_unstable();
        self.phase += 1;
        self.epoch_in_phase = 0;
        self.comm_quota_used = 0;
        Boundary {
            new_phase: self.phase,
            aware_len: self.aware.len(),
            gained_best: !had_best && self.aware_mask[best],
            dropped,
        }
    }

    fn early_epoch(
        &mut self,
        time: f64,
        marks: &EpochMarks,
        ctx: &ProtocolContext<'_>,
        drop_seed: Option<u64>,
    ) -> EpochOutcome {
        self.epoch_in_phase += 1;
        self.total_epochs += 1;
        let k = self.epoch_in_phase;
        let phase = self.phase;
        let arm = self.aware[((k - 1) % self.aware.len() as u64) as usize];
        let reward = self.observe(arm, marks, ctx.inst);
        let mut message = None;
        let mut boundary = None;
        if k == ctx.params.l() {
            let rec = self.best_empirical();
            message = self.send(rec, time, marks, ctx.inst.n());
            boundary = Some(self.end_phase(ctx, drop_seed));
        }
        EpochOutcome {
            arm,
            reward,
            phase,
            epoch_in_phase: k,
            message,
            boundary,
        }
    }

    fn late_epoch(&mut self, time: f64, marks: &EpochMarks, ctx: &ProtocolContext<'_>) -> EpochOutcome {
        self.epoch_in_phase += 1;
        self.total_epochs += 1;
        let k = self.epoch_in_phase;
        let phase = self.phase;
        let j = phase as u32;
        let arm = ucb_pick(
            self.aware.iter().copied(),
            &self.counts,
            &self.sums,
            k,
            ctx.params.alpha(),
        );
        let reward = self.observe(arm, marks, ctx.inst);
        let n = ctx.inst.n();
        let mut message = None;
        if j >= 1 {
            let quota = (n as u64).saturating_mul(1u64.checked_shl(j).unwrap_or(u64::MAX));
            if k <= quota {
                if let Some(op) = self.opinion_prev {
                    message = self.send(op, time, marks, n);
                }
            }
        }
        let mut boundary = None;
        match ctx.late_len(j) {
            Some(len) if k == len => {
                self.opinion_prev = Some(self.most_played());
                boundary = Some(self.end_phase(ctx, None));
            }
            Some(_) => {}
            // Past the cap the phase never ends; runs refuse such horizons.
            None => {}
        }
        EpochOutcome {
            arm,
            reward,
            phase,
            epoch_in_phase: k,
            message,
            boundary,
        }
    }

    /// Plays one epoch of the protocol.
    pub fn on_epoch(&mut self, time: f64, marks: &EpochMarks, ctx: &ProtocolContext<'_>) -> EpochOutcome {
        debug_assert!(!self.virtual_mode, "virtual agent driven by on_epoch");
        if self.phase < 0 {
            self.early_epoch(time, marks, ctx, None)
        } else {
            self.late_epoch(time, marks, ctx)
        }
    }

    /// Plays one epoch of the virtual system.
    ///
    /// # Panics
    /// If the agent was not created with [`AgentState::new_virtual`].
    pub fn on_epoch_virtual(
        &mut self,
        time: f64,
        marks: &EpochMarks,
        ctx: &ProtocolContext<'_>,
    ) -> EpochOutcome {
        assert!(
            self.virtual_mode,
            "on_epoch_virtual called on a main-system agent"
        );
        self.early_epoch(time, marks, ctx, Some(marks.aux_bits()))
    }

    #[doc(hidden)]
    pub fn phase_floor(&self) -> i64 {
        -self.m
    }
}
