//! Regret, communication and awareness accounting for a single run, the
//! Good-event detector, and cross-run summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::params::ProtocolParams;
use crate::protocol::{Boundary, Message};

/// Epochs recorded one by one before the grid turns geometric.
pub const DENSE_CHECKPOINTS: u64 = 1000;
/// Growth factor of the checkpoint grid after the dense prefix.
pub const CHECKPOINT_GROWTH: f64 = 1.05;

/// Checkpoint epochs for a per-agent horizon: every epoch up to 1000, then
/// successive multiples of 1.05 (rounded), always ending at `horizon`.
pub fn checkpoint_grid(horizon: u64) -> Vec<u64> {
    let mut grid: Vec<u64> = (1..=horizon.min(DENSE_CHECKPOINTS)).collect();
    let mut c = DENSE_CHECKPOINTS;
    while c < horizon {
        c = ((c as f64 * CHECKPOINT_GROWTH).round() as u64).max(c + 1).min(horizon);
        grid.push(c);
    }
    grid
}

/// One played epoch, kept only when full traces are requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub time: f64,
    pub agent: usize,
    /// Per-agent epoch counter (1-based).
    pub epoch: u64,
    pub phase: i64,
    pub epoch_in_phase: u64,
    pub arm: usize,
    pub reward: u8,
    pub msg_arm: Option<usize>,
    pub msg_recipient: Option<usize>,
}

impl EpochRecord {
    /// Line-delimited JSON with one-based agent and arm ids.
    pub fn to_json_line(&self) -> String {
        let wire = serde_json::json!({
            "time": self.time,
            "agent": self.agent + 1,
            "epoch": self.epoch,
            "phase": self.phase,
            "epoch_in_phase": self.epoch_in_phase,
            "arm": self.arm + 1,
            "reward": self.reward,
            "msg_arm": self.msg_arm.map(|a| a + 1),
            "msg_recipient": self.msg_recipient.map(|a| a + 1),
        });
        wire.to_string()
    }
}

/// Everything measured about one agent during a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentTrace {
    pub epochs: u64,
    pub regret: f64,
    /// Cumulative regret at each reached checkpoint.
    pub regret_curve: Vec<f64>,
    pub sent_early: u64,
    pub sent_late: u64,
    pub received_early: u64,
    pub received_late: u64,
    /// Epochs spent and messages sent in each late phase `j`.
    pub late_epochs: Vec<u64>,
    pub late_sent: Vec<u64>,
    /// Aware-set size entering each phase, starting with phase `-M`.
    pub aware_sizes: Vec<usize>,
    /// Wall times of the early-stage transitions `-M -> -M+1`, ...
    pub early_transitions: Vec<f64>,
    /// Epoch count at which the best arm joined the aware set (0 if initial).
    pub best_aware_epoch: Option<u64>,
    pub best_aware_time: Option<f64>,
    /// Phase in which the best arm was first received (`-M` if initial).
    pub best_received_phase: Option<i64>,
    /// Wall time of the last early epoch, i.e. entry into phase 0.
    pub late_entry_time: Option<f64>,
    /// `(time, epoch)` of every virtual-system arm drop.
    pub drops: Vec<(f64, u64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Gossip,
    #[serde(rename = "nocomm")]
    NoComm,
    Full,
    #[serde(rename = "virtual-couple")]
    VirtualCouple,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Gossip => "gossip",
            Regime::NoComm => "nocomm",
            Regime::Full => "full",
            Regime::VirtualCouple => "virtual-couple",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gossip" => Ok(Regime::Gossip),
            "nocomm" => Ok(Regime::NoComm),
            "full" => Ok(Regime::Full),
            "virtual-couple" => Ok(Regime::VirtualCouple),
            other => Err(Error::config(format!("unknown regime {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub regime: Regime,
    pub seed: u64,
    pub horizon: u64,
    pub grid: Vec<u64>,
    pub agents: Vec<AgentTrace>,
    /// Time of the last processed clock ring.
    pub last_time: f64,
    pub m: u32,
    pub best_arm: usize,
    pub records: Option<Vec<EpochRecord>>,
    #[serde(skip)]
    best_mean: f64,
}

impl RunTrace {
    pub fn new(
        regime: Regime,
        inst: &ProblemInstance,
        m: u32,
        seed: u64,
        horizon: u64,
        keep_records: bool,
    ) -> Self {
        Self {
            regime,
            seed,
            horizon,
            grid: checkpoint_grid(horizon),
            agents: vec![AgentTrace::default(); inst.n()],
            last_time: 0.0,
            m,
            best_arm: inst.best_arm(),
            records: keep_records.then(Vec::new),
            best_mean: inst.best_mean(),
        }
    }

    /// Marks the initial aware sets: size, and best-arm awareness at epoch 0.
    pub fn record_initial_sets(&mut self, sets: &[Vec<usize>]) {
        let floor = -(self.m as i64);
        for (a, set) in self.agents.iter_mut().zip(sets) {
            a.aware_sizes.push(set.len());
            if set.contains(&self.best_arm) {
                a.best_aware_epoch = Some(0);
                a.best_aware_time = Some(0.0);
                a.best_received_phase = Some(floor);
            }
        }
    }

    /// Adds one play to the agent's regret and updates its checkpoints.
    #[inline]
    pub fn record_epoch(&mut self, agent: usize, arm: usize, inst: &ProblemInstance) {
        let t = &mut self.agents[agent];
        t.epochs += 1;
        t.regret += self.best_mean - inst.mean(arm);
        let idx = t.regret_curve.len();
        if idx < self.grid.len() && self.grid[idx] == t.epochs {
            t.regret_curve.push(t.regret);
        }
    }

    pub fn record_message(&mut self, msg: &Message, recipient_phase: i64) {
        let early = msg.sender_phase < 0;
        let s = &mut self.agents[msg.sender];
        if early {
            s.sent_early += 1;
        } else {
            s.sent_late += 1;
            let j = msg.sender_phase as usize;
            if s.late_sent.len() <= j {
                s.late_sent.resize(j + 1, 0);
            }
            s.late_sent[j] += 1;
        }
        let r = &mut self.agents[msg.recipient];
        if early {
            r.received_early += 1;
        } else {
            r.received_late += 1;
        }
        if msg.arm == self.best_arm && r.best_received_phase.is_none() {
            r.best_received_phase = Some(recipient_phase);
        }
    }

    pub fn record_late_epoch(&mut self, agent: usize, phase: i64) {
        let t = &mut self.agents[agent];
        let j = phase as usize;
        if t.late_epochs.len() <= j {
            t.late_epochs.resize(j + 1, 0);
        }
        t.late_epochs[j] += 1;
    }

    pub fn record_boundary(&mut self, agent: usize, time: f64, boundary: &Boundary) {
        let Boundary {
            new_phase,
            aware_len,
            gained_best,
            dropped,
        } = *boundary;
        let t = &mut self.agents[agent];
        t.aware_sizes.push(aware_len);
        if dropped {
            t.drops.push((time, t.epochs));
        }
        if new_phase <= 0 {
            t.early_transitions.push(time);
        }
        if new_phase == 0 {
            t.late_entry_time = Some(time);
        }
        if gained_best && t.best_aware_epoch.is_none() {
            t.best_aware_epoch = Some(t.epochs);
            t.best_aware_time = Some(time);
        }
    }

    pub fn push_record(&mut self, rec: EpochRecord) {
        if let Some(r) = self.records.as_mut() {
            r.push(rec);
        }
    }

    pub fn total_sent(&self) -> u64 {
        self.agents.iter().map(|a| a.sent_early + a.sent_late).sum()
    }

    pub fn total_received(&self) -> u64 {
        self.agents
            .iter()
            .map(|a| a.received_early + a.received_late)
            .sum()
    }

    /// Mean over agents of the cumulative regret at every checkpoint that all
    /// agents reached.
    pub fn mean_regret_curve(&self) -> Vec<f64> {
        let len = self
            .agents
            .iter()
            .map(|a| a.regret_curve.len())
            .min()
            .unwrap_or(0);
        let n = self.agents.len() as f64;
        (0..len)
            .map(|i| self.agents.iter().map(|a| a.regret_curve[i]).sum::<f64>() / n)
            .collect()
    }

    pub fn mean_final_regret(&self) -> f64 {
        self.agents.iter().map(|a| a.regret).sum::<f64>() / self.agents.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodFlags {
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
}

impl GoodFlags {
    pub fn good(&self) -> bool {
        self.e1 && self.e2 && self.e3
    }
}

/// Evaluates E1 (everyone aware of the best arm by `T_n`), E2 (at most
/// `2M - 2` early-stage receptions per agent) and E3 (nobody past phase -1
/// at `T_n`), with `T_n = (M - 1) L (1 + delta)`.
pub fn detect_good(trace: &RunTrace, params: &ProtocolParams) -> Result<GoodFlags> {
    let tn = params.sync_time();
    let all_past = trace.agents.iter().all(|a| a.late_entry_time.is_some());
    if trace.last_time < tn && !all_past {
        return Err(Error::Undetermined {
            needed: tn,
            reached: trace.last_time,
        });
    }
    let limit = 2 * params.m() as u64 - 2;
    Ok(GoodFlags {
        e1: trace
            .agents
            .iter()
            .all(|a| a.best_aware_time.is_some_and(|t| t <= tn)),
        e2: trace.agents.iter().all(|a| a.received_early <= limit),
        e3: trace
            .agents
            .iter()
            .all(|a| a.late_entry_time.is_none_or(|t| t > tn)),
    })
}

/// Whether every early transition `j` of every agent landed in
/// `[j L (1 - delta), j L (1 + delta)]`.
pub fn in_sync(trace: &RunTrace, params: &ProtocolParams) -> bool {
    let (l, d) = (params.l() as f64, params.delta());
    trace.agents.iter().all(|a| {
        a.early_transitions.iter().enumerate().all(|(i, &t)| {
            let j = (i + 1) as f64;
            t >= j * l * (1.0 - d) && t <= j * l * (1.0 + d)
        })
    })
}

/// Per-agent `(tau, S)`: epochs before best-arm awareness and the phase of
/// first receipt. `None` stands for "not within the horizon".
pub fn measure_tau(trace: &RunTrace) -> Vec<(Option<u64>, Option<i64>)> {
    trace
        .agents
        .iter()
        .map(|a| (a.best_aware_epoch, a.best_received_phase))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub grid: Vec<u64>,
    pub mean: Vec<f64>,
    pub half_width: Vec<f64>,
}

/// Pointwise mean and normal-approximation 95% half-width
/// `1.96 * sd / sqrt(runs)` with the sample standard deviation.
pub fn summarize_curves(grid: &[u64], curves: &[Vec<f64>]) -> Result<Summary> {
    if curves.len() < 2 {
        return Err(Error::config("confidence bands need at least 2 runs"));
    }
    if curves.iter().any(|c| c.len() != grid.len()) {
        return Err(Error::config("runs have mismatched checkpoint grids"));
    }
    let r = curves.len() as f64;
    let mut mean = Vec::with_capacity(grid.len());
    let mut half = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let m = curves.iter().map(|c| c[i]).sum::<f64>() / r;
        let var = curves.iter().map(|c| (c[i] - m).powi(2)).sum::<f64>() / (r - 1.0);
        mean.push(m);
        half.push(1.96 * var.sqrt() / r.sqrt());
    }
    Ok(Summary {
        grid: grid.to_vec(),
        mean,
        half_width: half,
    })
}

/// Summary of the per-agent mean regret curves of several runs.
pub fn summarize_runs(traces: &[RunTrace]) -> Result<Summary> {
    let first = traces
        .first()
        .ok_or_else(|| Error::config("no runs to summarize"))?;
    if traces.iter().any(|t| t.grid != first.grid) {
        return Err(Error::config("runs have mismatched checkpoint grids"));
    }
    let curves: Vec<Vec<f64>> = traces.iter().map(RunTrace::mean_regret_curve).collect();
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    let curves: Vec<Vec<f64>> = curves.into_iter().map(|mut c| {
        c.truncate(len);
        c
    }).collect();
    summarize_curves(&first.grid[..len], &curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = checkpoint_grid(100_000);
        assert_eq!(&g[..3], &[1, 2, 3]);
        assert_eq!(g[999], 1000);
        assert_eq!(g[1000], 1050);
        assert_eq!(*g.last().unwrap(), 100_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(checkpoint_grid(5), vec![1, 2, 3, 4, 5]);
        assert_eq!(checkpoint_grid(1001), {
            let mut v: Vec<u64> = (1..=1000).collect();
            v.push(1001);
            v
        });
    }

    fn inst() -> ProblemInstance {
        ProblemInstance::new(1, vec![0.85, 0.65], 0.2).unwrap()
    }

    #[test]
    fn regret_accounting() {
        let inst = inst();
        let mut t = RunTrace::new(Regime::NoComm, &inst, 1, 0, 20, false);
        for _ in 0..10 {
            t.record_epoch(0, 0, &inst);
        }
        assert_eq!(t.agents[0].regret, 0.0);
        for _ in 0..10 {
            t.record_epoch(0, 1, &inst);
        }
        assert!((t.agents[0].regret - 2.0).abs() < 1e-12);
        assert_eq!(t.agents[0].regret_curve.len(), 20);
        assert!(t.agents[0].regret_curve.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn summary_two_runs() {
        let s = summarize_curves(&[1], &[vec![10.0], vec![20.0]]).unwrap();
        assert_eq!(s.mean, vec![15.0]);
        assert!((s.half_width[0] - 9.80).abs() < 1e-9);
        let z = summarize_curves(&[1, 2], &[vec![3.0, 4.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(z.half_width, vec![0.0, 0.0]);
        assert!(summarize_curves(&[1], &[vec![1.0]]).is_err());
        assert!(summarize_curves(&[1, 2], &[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn e2_threshold() {
        let inst = ProblemInstance::new(3, vec![0.85, 0.65, 0.5], 0.2).unwrap();
        let params = ProtocolParams::custom(3, 10, 10, 3.0).unwrap();
        let mut t = RunTrace::new(Regime::Gossip, &inst, 3, 0, 100, false);
        t.last_time = 1e9;
        for a in &mut t.agents {
            a.best_aware_time = Some(0.0);
        }
        t.agents[1].received_early = 4;
        assert!(detect_good(&t, &params).unwrap().e2);
        t.agents[1].received_early = 5;
        let g = detect_good(&t, &params).unwrap();
        assert!(!g.e2 && !g.good());
        t.last_time = 1.0;
        assert!(matches!(detect_good(&t, &params), Err(Error::Undetermined { .. })));
    }

    #[test]
    fn regime_names_roundtrip() {
        for r in [Regime::Gossip, Regime::NoComm, Regime::Full, Regime::VirtualCouple] {
            assert_eq!(r.as_str().parse::<Regime>().unwrap(), r);
        }
    }
}
