//! Noisy rumor-mongering processes in discrete slots, and solvers for the
//! constants of their spreading-time tail bound.

use serde::{Deserialize, Serialize};

use crate::engine::{mix_key, unit_f64};
use crate::error::{Error, Result};
use crate::par::par_map;

/// Informed time of an agent that has not heard the rumor yet.
pub const UNINFORMED: i64 = i64::MAX;

const RUMOR_LANE: u64 = 0x5255_4d4f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Callers must have held the rumor for a full slot (`Y_1 = -1`).
    Delayed,
    /// Callers relay from the slot after they were informed (`Y_1 = 0`).
    Undelayed,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Delayed => "delayed",
            Variant::Undelayed => "undelayed",
        }
    }

    fn origin(self) -> i64 {
        match self {
            Variant::Delayed => -1,
            Variant::Undelayed => 0,
        }
    }

    /// Largest informed time allowed to call in slot `t`.
    fn threshold(self, t: i64) -> i64 {
        match self {
            Variant::Delayed => t - 2,
            Variant::Undelayed => t - 1,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delayed" => Ok(Variant::Delayed),
            "undelayed" => Ok(Variant::Undelayed),
            other => Err(Error::config(format!("unknown rumor variant {other:?}"))),
        }
    }
}

/// Target and success draws of one call, keyed by `(seed, caller, slot)`.
pub fn call_marks(seed: u64, caller: usize, slot: i64) -> (f64, f64) {
    let base = mix_key(&[seed, RUMOR_LANE, caller as u64, slot as u64]);
    (unit_f64(mix_key(&[base, 1])), unit_f64(mix_key(&[base, 2])))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RumorState {
    n: usize,
    p: f64,
    variant: Variant,
    y: Vec<i64>,
    informed: Vec<usize>,
    t: i64,
}

impl RumorState {
    /// Agent 0 holds the rumor; every other agent is uninformed.
    pub fn new(n: usize, p: f64, variant: Variant) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("rumor population must be at least 1"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::config(format!("success probability {p} outside (0, 1]")));
        }
        let mut y = vec![UNINFORMED; n];
        y[0] = variant.origin();
        Ok(Self {
            n,
            p,
            variant,
            y,
            informed: vec![0],
            t: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn slot(&self) -> i64 {
        self.t
    }

    pub fn informed_times(&self) -> &[i64] {
        &self.y
    }

    pub fn informed_count(&self) -> usize {
        self.informed.len()
    }

    pub fn complete(&self) -> bool {
        self.informed.len() == self.n
    }

    /// `max_i Y_i` once complete.
    pub fn spread_time(&self) -> Option<i64> {
        self.complete().then(|| *self.y.iter().max().unwrap())
    }

    /// Advances to slot `t + 1` and lets every eligible caller make one call.
    pub fn step(&mut self, seed: u64) {
        self.t += 1;
        let t = self.t;
        let cutoff = self.variant.threshold(t);
        let callers = self.informed.len();
        for idx in 0..callers {
            let caller = self.informed[idx];
            if self.y[caller] > cutoff {
                continue;
            }
            let (u_target, u_success) = call_marks(seed, caller, t);
            let target = ((u_target * self.n as f64) as usize).min(self.n - 1);
            if u_success < self.p && self.y[target] == UNINFORMED {
                self.y[target] = t;
                self.informed.push(target);
            }
        }
    }

    pub fn step_delayed(&mut self, seed: u64) {
        debug_assert_eq!(self.variant, Variant::Delayed);
        self.step(seed);
    }

    pub fn step_undelayed(&mut self, seed: u64) {
        debug_assert_eq!(self.variant, Variant::Undelayed);
        self.step(seed);
    }
}

/// One complete trial; returns `S` (or `S~` for the undelayed variant).
pub fn spread_time(n: usize, p: f64, variant: Variant, seed: u64) -> Result<i64> {
    let mut s = RumorState::new(n, p, variant)?;
    while !s.complete() {
        s.step(seed);
    }
    Ok(s.spread_time().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadSummary {
    pub samples: Vec<i64>,
    pub mean: f64,
    pub median: f64,
    /// `(q, value)` for q in 0.1, 0.25, 0.5, 0.75, 0.9.
    pub quantiles: Vec<(f64, f64)>,
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[i64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] as f64 + (h - lo as f64) * (sorted[hi] - sorted[lo]) as f64
}

pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    mix_key(&[seed, trial])
}

/// Runs `trials` independent trials, in parallel when enabled.
pub fn spread_time_distribution(
    n: usize,
    p: f64,
    variant: Variant,
    trials: usize,
    seed: u64,
) -> Result<SpreadSummary> {
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    RumorState::new(n, p, variant)?;
    let ids: Vec<u64> = (0..trials as u64).collect();
    let samples: Vec<i64> = par_map(&ids, |&r| spread_time(n, p, variant, trial_seed(seed, r)))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut sorted = samples.clone();
    sorted.sort_unstable();
    let mean = samples.iter().sum::<i64>() as f64 / trials as f64;
    let quantiles = [0.1, 0.25, 0.5, 0.75, 0.9]
        .iter()
        .map(|&q| (q, quantile(&sorted, q)))
        .collect();
    Ok(SpreadSummary {
        mean,
        median: quantile(&sorted, 0.5),
        quantiles,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadConstants {
    pub gamma: f64,
    pub p: f64,
    pub n: usize,
    pub v: f64,
    pub eta: f64,
    pub d: f64,
    /// Coefficient of `ln n` in the spreading-time threshold.
    pub c: f64,
}

impl SpreadConstants {
    /// Slot count beyond which `S~` is a rare event: `C ln n`.
    pub fn threshold(&self, n: usize) -> f64 {
        self.c * (n as f64).ln()
    }

    /// `(2 + log_{2-eta} n) n^{-(gamma+1)}`.
    pub fn tail_probability(&self, n: usize) -> f64 {
        let ln_n = (n as f64).ln();
        (2.0 + ln_n / (2.0 - self.eta).ln()) * (-(self.gamma + 1.0) * ln_n).exp()
    }
}

pub fn v_constant(gamma: f64, p: f64) -> f64 {
    (gamma + 1.0) / (1.0 / (0.7 * p + (1.0 - p))).ln()
}

/// `ln` of the left side of the eta inequality.
pub fn eta_lhs_ln(eta: f64, p: f64) -> f64 {
    let lo = 2.0 * p / 3.0 + (1.0 - p);
    eta * (lo / eta).ln() - (1.0 - eta) * (1.0 - eta).ln()
}

/// `ln` of the D expression at `A = e^x`.
pub fn d_objective(d: f64, x: f64, p: f64, v: f64, n: usize) -> f64 {
    let b = d_base(p, v, n);
    let ln_ab = x + b.ln();
    let ln_am1 = x.exp_m1().ln();
    d * ln_ab + v * (p.ln() + x - ln_am1 - ln_ab)
}

/// `p V ln(n)/n + (1 - p)`.
pub fn d_base(p: f64, v: f64, n: usize) -> f64 {
    let nf = n as f64;
    p * v * nf.ln() / nf + (1.0 - p)
}

pub const LN_A_MAX: f64 = 20.0;

/// Minimum of [`d_objective`] over `ln A` in `(0, LN_A_MAX]` by golden-section
/// search (the objective is convex in `ln A`).
pub fn d_inner_min(d: f64, p: f64, v: f64, n: usize) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| d_objective(d, x, p, v, n);
    let (mut a, mut b) = (1e-12, LN_A_MAX);
    let mut c = b - phi * (b - a);
    let mut e = a + phi * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    for _ in 0..200 {
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + phi * (b - a);
            fe = f(e);
        }
        if b - a < 1e-12 {
            break;
        }
    }
    f(a).min(f(b)).min(fc).min(fe)
}

/// Solves V, eta, D and C for the given `gamma`, `p` and population `n`.
///
/// `eta` is the root of the eta inequality on `(2p/3 + 1 - p, 1)`, taken on
/// the satisfying side. The D condition holds exactly on an interval
/// `(0, D*]`; the returned `d` is its boundary `D*`.
pub fn solve_constants(gamma: f64, p: f64, n: usize) -> Result<SpreadConstants> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("gamma {gamma} must be positive")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::config(format!("success probability {p} outside (0, 1]")));
    }
    let v = v_constant(gamma, p);
    let b = d_base(p, v, n);
    if n < 2 || b >= 1.0 {
        return Err(Error::NTooSmall { n: n as u64, value: b });
    }

    let target = (0.7 * p + (1.0 - p)).ln();
    let mut lo = 2.0 * p / 3.0 + (1.0 - p);
    let mut hi = 1.0;
    // Scan for a satisfying point, then bisect towards the boundary.
    let steps = 1000;
    for i in 1..steps {
        let x = lo + (1.0 - lo) * i as f64 / steps as f64;
        if eta_lhs_ln(x, p) < target {
            hi = x;
            break;
        }
        lo = x;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if eta_lhs_ln(mid, p) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let eta = hi;

    let goal = -(gamma + 1.0);
    let holds = |d: f64| d_inner_min(d, p, v, n) <= goal;
    if !holds(0.0) {
        return Err(Error::domain("D condition fails for every D > 0"));
    }
    let (mut dlo, mut dhi) = (0.0, 1.0);
    while holds(dhi) {
        dlo = dhi;
        dhi *= 2.0;
        if dhi > 1e9 {
            return Err(Error::domain("D condition holds for every D"));
        }
    }
    while dhi - dlo > 1e-10 {
        let mid = 0.5 * (dlo + dhi);
        if holds(mid) {
            dlo = mid;
        } else {
            dhi = mid;
        }
    }
    let d = dlo;
    let c = 1.0 / (2.0 - eta).ln() + d + 3.0 * (3.0 + 2.0 * gamma) / p;
    Ok(SpreadConstants {
        gamma,
        p,
        n,
        v,
        eta,
        d,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_agents_first_slot() {
        // with p = 1 the only failure is a self-call
        for variant in [Variant::Delayed, Variant::Undelayed] {
            let times: Vec<i64> = (0..64)
                .map(|s| spread_time(2, 1.0, variant, s).unwrap())
                .collect();
            assert!(times.iter().all(|&t| t >= 1));
            assert!(times.contains(&1));
            for (s, &t) in times.iter().enumerate() {
                let self_calls = (1..t)
                    .filter(|&slot| call_marks(s as u64, 0, slot).0 < 0.5)
                    .count() as i64;
                assert_eq!(self_calls, t - 1);
            }
        }
    }

    #[test]
    fn single_agent_complete_at_start() {
        let s = RumorState::new(1, 0.5, Variant::Delayed).unwrap();
        assert!(s.complete());
        assert_eq!(s.spread_time(), Some(-1));
        assert_eq!(spread_time(1, 0.5, Variant::Undelayed, 3).unwrap(), 0);
    }

    #[test]
    fn delayed_caller_waits() {
        let mut s = RumorState::new(50, 1.0, Variant::Delayed).unwrap();
        s.step(9);
        let newly: Vec<i64> = s.informed_times().iter().copied().filter(|&y| y == 1).collect();
        assert!(newly.len() <= 1);
        // agents informed in slot 1 cannot call in slot 2
        let before = s.informed_count();
        s.step(9);
        assert!(s.informed_count() <= before + 1);
    }

    #[test]
    fn informed_at_most_doubles() {
        let mut s = RumorState::new(500, 1.0, Variant::Undelayed).unwrap();
        while !s.complete() {
            let before = s.informed_count();
            s.step(4);
            assert!(s.informed_count() <= 2 * before);
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(RumorState::new(0, 0.5, Variant::Delayed).is_err());
        assert!(RumorState::new(4, 1.2, Variant::Delayed).is_err());
        assert!(spread_time_distribution(4, 0.5, Variant::Delayed, 0, 1).is_err());
        assert!(matches!(
            solve_constants(2.0, 0.99, 10),
            Err(Error::NTooSmall { .. })
        ));
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[1, 2, 3, 4], 0.5), 2.5);
        assert_eq!(quantile(&[5], 0.9), 5.0);
    }

    #[test]
    fn constants_satisfy_their_inequalities() {
        let c = solve_constants(2.0, 0.99, 29).unwrap();
        let target = (0.7 * 0.99 + 0.01f64).ln();
        assert!(eta_lhs_ln(c.eta, 0.99) < target);
        assert!(eta_lhs_ln(c.eta - 1e-4, 0.99) >= target);
        assert!(d_inner_min(c.d, 0.99, c.v, 29) <= -3.0 + 1e-6);
        assert!(d_inner_min(c.d + 1e-4, 0.99, c.v, 29) > -3.0);
    }
}
