//! Protocol parameters (M, L, T0, alpha), their derivation from an instance,
//! the late-phase doubling schedule, and the initial aware sets.

use serde::{Deserialize, Serialize};

use crate::engine::mix_key;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;

/// Late phases representable by default (phases 0..=5).
pub const DEFAULT_PHASE_CAP: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Constants for which the regret guarantee is proved.
    Theory,
    /// Constants used in the synthetic experiments: `M = ceil(2.5 ln n) + 1`.
    Practice,
    /// Alternative practical constants: `M = ceil(3 ln n) + 1` with the
    /// `ln(10 (2M + ceil(K/n)) eps)` factor in L.
    PracticeAlt,
    Custom,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(Preset::Theory),
            "practice" => Ok(Preset::Practice),
            "practice-alt" => Ok(Preset::PracticeAlt),
            "custom" => Ok(Preset::Custom),
            other => Err(Error::config(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum InitMode {
    /// Contiguous wrap-around blocks of `ceil(K/n)` arms; agent 0 holds arm 0.
    Block,
    /// Each agent draws `M_gamma` arms uniformly with replacement.
    Random { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    m: u32,
    l: u64,
    t0: u64,
    alpha: f64,
    init: InitMode,
    preset: Preset,
    phase_cap: u32,
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

fn check_epsilon(inst: &ProblemInstance) -> Result<f64> {
    let eps = inst.epsilon();
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::config(format!(
            "parameter derivation needs epsilon in (0,1), got {eps}"
        )));
    }
    Ok(eps)
}

fn to_count(x: f64, what: &str) -> Result<u64> {
    let c = x.ceil();
    if !c.is_finite() || c > u64::MAX as f64 {
        return Err(Error::config(format!("{what} = {x} is not representable")));
    }
    Ok((c as u64).max(1))
}

/// `T0 = ceil(max(K^2, n) ln(1/eps) / eps^2)`, shared by every preset.
fn base_t0(inst: &ProblemInstance, eps: f64) -> Result<u64> {
    let k = inst.k() as f64;
    let n = inst.n() as f64;
    to_count((k * k).max(n) * (1.0 / eps).ln() / (eps * eps), "T0")
}

pub fn derive_theory_params(inst: &ProblemInstance) -> Result<ProtocolParams> {
    let eps = check_epsilon(inst)?;
    let n = inst.n() as f64;
    let m = (361.0 * n.ln()).ceil() as u32 + 1;
    let width = (2 * m as usize + ceil_div(inst.k(), inst.n())) as f64;
    let l = to_count(
        width / (eps * eps) * (18.0 * m as f64) * (100.0 * width).ln(),
        "L",
    )?;
    ProtocolParams::build(m, l, base_t0(inst, eps)?, 3.0, Preset::Theory)
}

pub fn derive_practice_params(inst: &ProblemInstance) -> Result<ProtocolParams> {
    let eps = check_epsilon(inst)?;
    let n = inst.n() as f64;
    let m = (2.5 * n.ln()).ceil() as u32 + 1;
    let width = (2 * m as usize + ceil_div(inst.k(), inst.n())) as f64;
    let l = to_count(0.8 * width / (eps * eps) * (20.0 * width).ln(), "L")?;
    ProtocolParams::build(m, l, base_t0(inst, eps)?, 3.0, Preset::Practice)
}

/// The alternative practical constants. The log factor can go negative for
/// very small epsilon; L is floored at 1.
pub fn derive_practice_alt_params(inst: &ProblemInstance) -> Result<ProtocolParams> {
    let eps = check_epsilon(inst)?;
    let n = inst.n() as f64;
    let m = (3.0 * n.ln()).ceil() as u32 + 1;
    let width = (2 * m as usize + ceil_div(inst.k(), inst.n())) as f64;
    let l = to_count(
        (0.8 * width / (eps * eps) * (10.0 * width * eps).ln()).max(1.0),
        "L",
    )?;
    ProtocolParams::build(m, l, base_t0(inst, eps)?, 3.0, Preset::PracticeAlt)
}

pub fn derive_params(inst: &ProblemInstance, preset: Preset) -> Result<ProtocolParams> {
    match preset {
        Preset::Theory => derive_theory_params(inst),
        Preset::Practice => derive_practice_params(inst),
        Preset::PracticeAlt => derive_practice_alt_params(inst),
        Preset::Custom => Err(Error::config(
            "custom preset needs explicit M, L, T0 and alpha",
        )),
    }
}

impl ProtocolParams {
    fn build(m: u32, l: u64, t0: u64, alpha: f64, preset: Preset) -> Result<Self> {
        if m < 1 || l < 1 || t0 < 1 {
            return Err(Error::config(format!(
                "need M, L, T0 >= 1 (got M={m}, L={l}, T0={t0})"
            )));
        }
        if !(alpha > 1.0) {
            return Err(Error::config(format!("alpha must exceed 1, got {alpha}")));
        }
        Ok(Self {
            m,
            l,
            t0,
            alpha,
            init: InitMode::Block,
            preset,
            phase_cap: DEFAULT_PHASE_CAP,
        })
    }

    pub fn custom(m: u32, l: u64, t0: u64, alpha: f64) -> Result<Self> {
        Self::build(m, l, t0, alpha, Preset::Custom)
    }

    pub fn with_init(mut self, init: InitMode) -> Result<Self> {
        if let InitMode::Random { gamma } = init {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::config(format!("gamma {gamma} outside (0,1)")));
            }
        }
        self.init = init;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 1.0) {
            return Err(Error::config(format!("alpha must exceed 1, got {alpha}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn with_phase_cap(mut self, cap: u32) -> Result<Self> {
        if cap == 0 {
            return Err(Error::config("phase cap must be at least 1"));
        }
        self.phase_cap = cap;
        self.late_boundary(cap)?;
        Ok(self)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn l(&self) -> u64 {
        self.l
    }

    pub fn t0(&self) -> u64 {
        self.t0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn init(&self) -> InitMode {
        self.init
    }

    pub fn preset(&self) -> Preset {
        self.preset
    }

    pub fn phase_cap(&self) -> u32 {
        self.phase_cap
    }

    /// Synchronisation slack `1 / (3M)`.
    pub fn delta(&self) -> f64 {
        1.0 / (3.0 * self.m as f64)
    }

    /// Epochs spent in the early stage, `M * L`.
    pub fn early_epochs(&self) -> u64 {
        self.m as u64 * self.l
    }

    /// Wall time `(M - 1) L (1 + delta)` at which the early-stage events are judged.
    pub fn sync_time(&self) -> f64 {
        (self.m as f64 - 1.0) * self.l as f64 * (1.0 + self.delta())
    }

    /// Cap on the virtual system's aware set: `2M + ceil(K/n)`.
    pub fn virtual_cap(&self, inst: &ProblemInstance) -> usize {
        2 * self.m as usize + ceil_div(inst.k(), inst.n())
    }

    /// `M_hat = 2M + ceil(3K/n^2) + ceil(K/n)`.
    pub fn m_hat(&self, inst: &ProblemInstance) -> u64 {
        let (n, k) = (inst.n(), inst.k());
        2 * self.m as u64 + ceil_div(3 * k, n * n) as u64 + ceil_div(k, n) as u64
    }

    /// Late-stage boundary `G_i`: `G_0 = 0`, `G_i = floor(T0/2 * 2^(2^(i-1)))`.
    ///
    /// For `i >= 1` the product is exactly `T0 * 2^(2^(i-1) - 1)`.
    pub fn late_boundary(&self, i: u32) -> Result<u64> {
        if i == 0 {
            return Ok(0);
        }
        let overflow = || {
            Error::config(format!(
                "late boundary G_{i} overflows 64 bits for T0 = {}",
                self.t0
            ))
        };
        let shift = 1u64
            .checked_shl(i - 1)
            .and_then(|p| p.checked_sub(1))
            .filter(|&s| s < 64)
            .ok_or_else(overflow)?;
        let factor = 1u64 << shift;
        self.t0.checked_mul(factor).ok_or_else(overflow)
    }

    /// Length `T_j = G_(j+1) - G_j` of late phase `j`.
    pub fn late_phase_len(&self, j: u32) -> Result<u64> {
        Ok(self.late_boundary(j + 1)? - self.late_boundary(j)?)
    }

    /// Lengths of late phases `0..phase_cap`.
    pub fn late_schedule(&self) -> Result<Vec<u64>> {
        (0..self.phase_cap).map(|j| self.late_phase_len(j)).collect()
    }

    /// Largest per-agent horizon the phase cap can represent.
    pub fn max_horizon(&self) -> Result<u64> {
        self.early_epochs()
            .checked_add(self.late_boundary(self.phase_cap)?)
            .ok_or_else(|| Error::config("early stage plus late cap overflows"))
    }

    pub fn check_horizon(&self, horizon: u64) -> Result<()> {
        let max = self.max_horizon()?;
        if horizon > max {
            return Err(Error::HorizonCap {
                horizon,
                phase_cap: self.phase_cap,
                max,
            });
        }
        Ok(())
    }

    /// Whether `T0 >= max(K(K+2), K(1 + 4 alpha ln(T0) / gap^2))`, the
    /// condition under which the most-played-arm bound covers every late phase.
    pub fn t0_valid_for(&self, k: usize, gap: f64) -> bool {
        let t0 = self.t0 as f64;
        let k = k as f64;
        t0 >= k * (k + 2.0) && t0 >= k * (1.0 + 4.0 * self.alpha * t0.ln() / (gap * gap))
    }
}

/// `M_gamma = ceil( ln(1/gamma) / (n ln(K/(K-1))) )`.
pub fn m_gamma(gamma: f64, n: usize, k: usize) -> Result<u64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::config(format!("gamma {gamma} outside (0,1)")));
    }
    if k < 2 || n == 0 {
        return Err(Error::config("M_gamma needs K >= 2 and n >= 1"));
    }
    let k = k as f64;
    Ok(((1.0 / gamma).ln() / (n as f64 * (k / (k - 1.0)).ln())).ceil() as u64)
}

/// Initial aware sets, one sorted list of distinct zero-based arm ids per agent.
///
/// In block mode agent `i` gets the `ceil(K/n)` consecutive ids starting at
/// `i * ceil(K/n) mod K`, wrapping around. Random mode draws `M_gamma` ids per
/// agent with replacement, keyed on `(seed, agent)`.
pub fn initial_arm_sets(
    inst: &ProblemInstance,
    params: &ProtocolParams,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let (n, k) = (inst.n(), inst.k());
    match params.init() {
        InitMode::Block => {
            let width = ceil_div(k, n);
            Ok((0..n)
                .map(|i| {
                    let start = (i * width) % k;
                    let mut set: Vec<usize> = (0..width).map(|o| (start + o) % k).collect();
                    set.sort_unstable();
                    set.dedup();
                    set
                })
                .collect())
        }
        InitMode::Random { gamma } => {
            let draws = m_gamma(gamma, n, k)?.max(1);
            Ok((0..n)
                .map(|i| {
                    let mut set: Vec<usize> = (0..draws)
                        .map(|d| {
                            let bits = mix_key(&[seed, 0x1417_u64, i as u64, d]);
                            ((bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * k as f64)
                                as usize
                        })
                        .collect();
                    set.sort_unstable();
                    set.dedup();
                    set
                })
                .collect())
        }
    }
}
