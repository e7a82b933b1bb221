//! Asynchronous clocks and counter-based epoch marks.
//!
//! Every agent carries a unit-rate Poisson clock. The k-th ring of agent `a`
//! comes with three uniforms (reward, recipient, auxiliary) that are a pure
//! function of `(seed, a, k)`. Two protocols driven by the same seed therefore
//! see identical randomness at identical `(agent, epoch)` coordinates, no
//! matter how differently they behave.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const LANE_REWARD: u64 = 0x5245_5741_5244;
const LANE_RECIPIENT: u64 = 0x5245_4349_5049;
const LANE_AUX: u64 = 0x0041_5558;
const LANE_CLOCK: u64 = 0x434c_4f43_4b;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a sequence of words into 64 well-mixed bits.
#[inline]
pub fn mix_key(words: &[u64]) -> u64 {
    let mut h = 0x6A09_E667_F3BC_C909;
    for &w in words {
        h = splitmix64(h ^ w);
    }
    h
}

/// Uniform on `[0, 1)` from the top 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The three uniforms attached to one clock ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMarks {
    pub u_reward: f64,
    pub u_recipient: f64,
    pub u_aux: f64,
}

impl EpochMarks {
    /// 64 bits for seeding auxiliary shuffles.
    pub fn aux_bits(&self) -> u64 {
        splitmix64(self.u_aux.to_bits())
    }
}

/// Marks for the `epoch`-th ring (1-based) of `agent`. Pure.
#[inline]
pub fn marks_for(seed: u64, agent: usize, epoch: u64) -> EpochMarks {
    let base = mix_key(&[seed, agent as u64, epoch]);
    EpochMarks {
        u_reward: unit_f64(splitmix64(base ^ LANE_REWARD)),
        u_recipient: unit_f64(splitmix64(base ^ LANE_RECIPIENT)),
        u_aux: unit_f64(splitmix64(base ^ LANE_AUX)),
    }
}

/// Exponential(1) gap preceding the `epoch`-th ring of `agent`.
#[inline]
fn clock_gap(seed: u64, agent: usize, epoch: u64) -> f64 {
    let u = unit_f64(mix_key(&[seed, agent as u64, epoch, LANE_CLOCK]));
    -(1.0 - u).ln()
}

/// Bernoulli reward: 1 iff `u < mean`.
#[inline]
pub fn reward_draw(u_reward: f64, mean: f64) -> u8 {
    u8::from(u_reward < mean)
}

/// Uniform recipient among the `n - 1` agents other than `self_id`
/// (zero-based). `None` when there is nobody to talk to.
#[inline]
pub fn recipient_draw(u_recipient: f64, n: usize, self_id: usize) -> Option<usize> {
    if n < 2 {
        return None;
    }
    let r = ((u_recipient * (n - 1) as f64) as usize).min(n - 2);
    Some(if r >= self_id { r + 1 } else { r })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockEvent {
    pub time: f64,
    pub agent: usize,
    /// Per-agent ring counter, starting at 1.
    pub epoch: u64,
}

#[derive(Debug, Clone, Copy)]
struct Pending(ClockEvent);

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.agent.cmp(&self.0.agent))
    }
}

/// Superposition of `n` independent unit-rate Poisson clocks.
#[derive(Debug, Clone)]
pub struct Clock {
    seed: u64,
    heap: BinaryHeap<Pending>,
    retired: Vec<bool>,
}

impl Clock {
    pub fn new(seed: u64, n: usize) -> Self {
        let heap = (0..n)
            .map(|agent| {
                Pending(ClockEvent {
                    time: clock_gap(seed, agent, 1),
                    agent,
                    epoch: 1,
                })
            })
            .collect();
        Self {
            seed,
            heap,
            retired: vec![false; n],
        }
    }

    /// Stops scheduling further rings for `agent`.
    pub fn retire(&mut self, agent: usize) {
        self.retired[agent] = true;
    }

    /// Time of the next ring, if any agent is still active.
    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|p| p.0.time)
    }

    /// Pops the earliest ring and schedules that agent's next one.
    pub fn next_event(&mut self) -> Option<ClockEvent> {
        loop {
            let Pending(ev) = self.heap.pop()?;
            if self.retired[ev.agent] {
                continue;
            }
            let next = ClockEvent {
                time: ev.time + clock_gap(self.seed, ev.agent, ev.epoch + 1),
                agent: ev.agent,
                epoch: ev.epoch + 1,
            };
            self.heap.push(Pending(next));
            return Some(ev);
        }
    }
}

impl Iterator for Clock {
    type Item = ClockEvent;

    fn next(&mut self) -> Option<ClockEvent> {
        self.next_event()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marks_are_pure() {
        assert_eq!(marks_for(5, 3, 17), marks_for(5, 3, 17));
        assert_ne!(marks_for(5, 3, 17), marks_for(5, 3, 18));
        assert_ne!(marks_for(5, 3, 17), marks_for(6, 3, 17));
    }

    #[test]
    fn reward_threshold() {
        assert_eq!(reward_draw(0.3, 0.5), 1);
        assert_eq!(reward_draw(0.9, 0.5), 0);
        assert_eq!(reward_draw(0.5, 0.5), 0);
    }

    #[test]
    fn recipient_rules() {
        for u in [0.0, 0.3, 0.999_999] {
            assert_eq!(recipient_draw(u, 2, 0), Some(1));
            assert_eq!(recipient_draw(u, 2, 1), Some(0));
        }
        assert_eq!(recipient_draw(0.5, 1, 0), None);
        for i in 0..1000 {
            let u = i as f64 / 1000.0;
            let r = recipient_draw(u, 10, 2).unwrap();
            assert!(r != 2 && r < 10);
        }
    }

    #[test]
    fn single_agent_stream() {
        let mut clock = Clock::new(1, 1);
        let mut last = 0.0;
        for k in 1..=100 {
            let ev = clock.next_event().unwrap();
            assert_eq!(ev.agent, 0);
            assert_eq!(ev.epoch, k);
            assert!(ev.time > last);
            last = ev.time;
        }
    }

    #[test]
    fn merged_stream_is_sorted_merge() {
        let seed = 42;
        let per_agent = |agent: usize| -> Vec<f64> {
            let c = Clock::new(seed, 2);
            c.filter(|e| e.agent == agent).take(200).map(|e| e.time).collect()
        };
        let (a, b) = (per_agent(0), per_agent(1));
        let mut merged: Vec<(f64, usize)> = a
            .iter()
            .map(|&t| (t, 0))
            .chain(b.iter().map(|&t| (t, 1)))
            .collect();
        merged.sort_by(|x, y| x.0.total_cmp(&y.0));
        let horizon = a[199].min(b[199]);
        let got: Vec<(f64, usize)> = Clock::new(seed, 2)
            .take_while(|e| e.time <= horizon)
            .map(|e| (e.time, e.agent))
            .collect();
        let want: Vec<(f64, usize)> = merged.into_iter().filter(|e| e.0 <= horizon).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn per_agent_stream_ignores_population() {
        let take = |n: usize| -> Vec<f64> {
            Clock::new(9, n).filter(|e| e.agent == 0).take(50).map(|e| e.time).collect()
        };
        assert_eq!(take(1), take(7));
    }

    #[test]
    fn retire_stops_agent() {
        let mut c = Clock::new(3, 2);
        c.retire(0);
        assert!(c.take(50).all(|e| e.agent == 1));
    }
}
