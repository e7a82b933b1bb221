//! Benchmark policies: independent per-agent UCB (no communication) and UCB
//! on the pooled history of every agent (full interaction).

use serde::{Deserialize, Serialize};

use crate::protocol::ucb_pick;

/// Per-arm play counts and reward sums over all `K` arms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcbHistory {
    counts: Vec<u64>,
    sums: Vec<u64>,
    plays: u64,
}

/// The shared history seen by every agent in the full-interaction regime.
pub type PooledHistory = UcbHistory;

impl UcbHistory {
    pub fn new(k: usize) -> Self {
        Self {
            counts: vec![0; k],
            sums: vec![0; k],
            plays: 0,
        }
    }

    pub fn record(&mut self, arm: usize, reward: u8) {
        self.counts[arm] += 1;
        self.sums[arm] += reward as u64;
        self.plays += 1;
    }

    pub fn plays(&self) -> u64 {
        self.plays
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Single-agent UCB over all arms at the agent's `k`-th epoch (1-based).
pub fn no_comm_step(history: &UcbHistory, k: u64, alpha: f64) -> usize {
    ucb_pick(0..history.counts.len(), &history.counts, &history.sums, k, alpha)
}

/// UCB over the pooled history, indexed by the global play counter.
pub fn full_interaction_step(pooled: &PooledHistory, alpha: f64) -> usize {
    ucb_pick(
        0..pooled.counts.len(),
        &pooled.counts,
        &pooled.sums,
        pooled.plays + 1,
        alpha,
    )
}
