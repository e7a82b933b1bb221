//! Sample-path comparison of the main system and the virtual (arm-dropping)
//! system driven by identical clocks and marks.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::ProblemInstance;
use crate::metrics::{detect_good, in_sync, EpochRecord};
use crate::params::ProtocolParams;
use crate::sim::{run_gossip, run_virtual, RunOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingVerdict {
    pub seed: u64,
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    /// All early transitions fell inside their `[jL(1-d), jL(1+d)]` windows.
    pub in_sync: bool,
    /// First `(agent, epoch)` where the two traces differ before `T_n`.
    pub divergence: Option<(usize, u64)>,
    /// First `(agent, epoch)` at which the virtual system dropped arms.
    pub first_drop: Option<(usize, u64)>,
    pub coupled: bool,
}

fn same_step(a: &EpochRecord, b: &EpochRecord) -> bool {
    a.agent == b.agent
        && a.epoch == b.epoch
        && a.phase == b.phase
        && a.epoch_in_phase == b.epoch_in_phase
        && a.arm == b.arm
        && a.reward == b.reward
        && a.msg_arm == b.msg_arm
        && a.msg_recipient == b.msg_recipient
        && a.time.to_bits() == b.time.to_bits()
}

/// Runs both systems up to `T_n = (M - 1) L (1 + delta)` and compares their
/// epoch records one by one. The main system is additionally run through the
/// whole early stage so that E2 counts every early-stage reception.
pub fn couple_check(
    inst: &ProblemInstance,
    params: &ProtocolParams,
    seed: u64,
) -> Result<CouplingVerdict> {
    let tn = params.sync_time();
    let early = params.early_epochs();
    let main = run_gossip(inst, params, seed, RunOptions::horizon(early).with_records())?;
    let flags = detect_good(&main, params)?;
    let virt = run_virtual(
        inst,
        params,
        seed,
        RunOptions::horizon(u64::MAX).with_records().until(tn),
    )?;

    let main_recs: Vec<&EpochRecord> = main
        .records
        .as_deref()
        .unwrap_or_default()
        .iter()
        .filter(|r| r.time <= tn)
        .collect();
    let virt_recs = virt.records.as_deref().unwrap_or_default();

    let mut divergence = None;
    for i in 0..main_recs.len().max(virt_recs.len()) {
        match (main_recs.get(i), virt_recs.get(i)) {
            (Some(a), Some(b)) if same_step(a, b) => {}
            (Some(a), Some(b)) => {
                let first = if a.time <= b.time { a } else { b };
                divergence = Some((first.agent, first.epoch));
                break;
            }
            (Some(r), None) => {
                divergence = Some((r.agent, r.epoch));
                break;
            }
            (None, Some(r)) => {
                divergence = Some((r.agent, r.epoch));
                break;
            }
            (None, None) => unreachable!(),
        }
    }

    let first_drop = virt
        .agents
        .iter()
        .enumerate()
        .filter_map(|(agent, a)| a.drops.first().map(|&(t, e)| (t, agent, e)))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, agent, e)| (agent, e));

    Ok(CouplingVerdict {
        seed,
        e1: flags.e1,
        e2: flags.e2,
        e3: flags.e3,
        in_sync: in_sync(&main, params),
        divergence,
        first_drop,
        coupled: divergence.is_none(),
    })
}
