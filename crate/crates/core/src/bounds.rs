//! Closed-form bound evaluators and Chernoff tail bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{m_gamma, InitMode, ProtocolParams};

/// One evaluated bound. `value` is clamped for probability-valued bounds;
/// `raw` is the unclamped formula value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: Vec<(String, f64)>,
    pub value: f64,
    pub raw: f64,
    pub valid: bool,
}

impl BoundReport {
    fn new(name: &str, inputs: &[(&str, f64)], raw: f64, value: f64, valid: bool) -> Self {
        Self {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            raw,
            valid,
        }
    }

    /// `key=value;key=value` rendering of the inputs.
    pub fn inputs_string(&self) -> String {
        self.inputs
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn clamp_prob(x: f64) -> f64 {
    if x.is_nan() {
        1.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// `(4 alpha / Delta) ln T + K (1 + pi^2 / 3)`.
pub fn ucb_regret_bound(t: f64, k: usize, delta: f64, alpha: f64) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::domain(format!("horizon {t} must be at least 1")));
    }
    if !(delta > 0.0) {
        return Err(Error::domain("UCB regret bound undefined for zero gap"));
    }
    if !(alpha > 1.0) {
        return Err(Error::domain(format!("alpha {alpha} must exceed 1")));
    }
    Ok(4.0 * alpha / delta * t.ln() + k as f64 * (1.0 + PI * PI / 3.0))
}

/// Probability that the best arm is not the most played after `T` UCB plays:
/// `(K/(alpha-1)) (T/K - 1)^(2(1-alpha))`, valid when
/// `T >= max(K(K+2), K(1 + 4 alpha ln T / Delta^2))`.
pub fn most_played_error_bound(t: f64, k: usize, delta: f64, alpha: f64) -> Result<BoundReport> {
    if !(alpha > 1.0) {
        return Err(Error::domain(format!("alpha {alpha} must exceed 1")));
    }
    if !(delta > 0.0) {
        return Err(Error::domain("most-played bound undefined for zero gap"));
    }
    let kf = k as f64;
    let ratio = t / kf - 1.0;
    let raw = if ratio > 0.0 {
        kf / (alpha - 1.0) * ratio.powf(2.0 * (1.0 - alpha))
    } else {
        f64::INFINITY
    };
    let valid = ratio > 0.0
        && t >= kf * (kf + 2.0)
        && t >= kf * (1.0 + 4.0 * alpha * t.ln() / (delta * delta));
    Ok(BoundReport::new(
        "most_played_error",
        &[("T", t), ("K", kf), ("Delta", delta), ("alpha", alpha)],
        raw,
        clamp_prob(raw),
        valid,
    ))
}

/// Itemized regret bound of the two-stage protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GossipRegretTerms {
    pub ucb: f64,
    pub early: f64,
    pub rare: f64,
    pub doubling: f64,
    pub m_hat: f64,
}

impl GossipRegretTerms {
    pub fn total(&self) -> f64 {
        self.ucb + self.early + self.rare + self.doubling
    }
}

/// Evaluates the four summands at per-agent horizon `T`. With random
/// initialization, `M_gamma` replaces `ceil(K/n)` inside `M_hat`.
pub fn gossip_regret_bound(
    t: f64,
    n: usize,
    k: usize,
    delta: f64,
    params: &ProtocolParams,
) -> Result<GossipRegretTerms> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("horizon {t} must be positive")));
    }
    if !(delta > 0.0) {
        return Err(Error::domain("regret bound undefined for zero gap"));
    }
    if n == 0 || k == 0 {
        return Err(Error::domain("n and K must be positive"));
    }
    let (nf, kf) = (n as f64, k as f64);
    let m = params.m() as f64;
    let t0 = params.t0() as f64;
    let alpha = params.alpha();
    let init = match params.init() {
        InitMode::Block => (kf / nf).ceil(),
        InitMode::Random { gamma } => m_gamma(gamma, n, k)? as f64,
    };
    let m_hat = 2.0 * m + (3.0 * kf / (nf * nf)).ceil() + init;
    let c = 4.0 * alpha / delta;

    let ucb = if t > t0 {
        c * 4.0 * m_hat * (t - t0).ln().max(0.0)
    } else {
        0.0
    };
    let early = m * params.l() as f64;
    let rare = if n >= 29 {
        8.0 * t0 * 150.0 * nf.ln() / nf.powi(3)
    } else {
        8.0 * t0
    };
    let doubling = if t >= t0 {
        let outer = (2.0 * t / t0).log2().log2().max(0.0);
        2.0 * outer * (c * (t0 / 2.0).ln().max(0.0) + m_hat * (1.0 + PI * PI / 3.0))
    } else {
        0.0
    };
    Ok(GossipRegretTerms {
        ucb,
        early,
        rare,
        doubling,
        m_hat,
    })
}

/// Late-phase length `T_i = G_(i+1) - G_i` in floating point.
fn late_len_f64(i: u32, t0: f64) -> f64 {
    let g = |i: u32| {
        if i == 0 {
            0.0
        } else {
            t0 * 2f64.powf(2f64.powi(i as i32 - 1) - 1.0)
        }
    };
    g(i + 1) - g(i)
}

/// `P[X > j] <= prod_{i=1..j} min(1, (K/(alpha-1)) (T_(i-1)/K - 1)^(2(1-alpha)) + e^(-2^i))`.
pub fn dist_x_tail(j: u32, k: usize, alpha: f64, t0: u64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::domain(format!("alpha {alpha} must exceed 1")));
    }
    let kf = k as f64;
    let mut prod = 1.0;
    for i in 1..=j {
        let ti = late_len_f64(i - 1, t0 as f64);
        let ratio = ti / kf - 1.0;
        let most = if ratio > 0.0 {
            kf / (alpha - 1.0) * ratio.powf(2.0 * (1.0 - alpha))
        } else {
            f64::INFINITY
        };
        prod *= clamp_prob(most + (-(2f64.powi(i as i32))).exp());
    }
    Ok(prod)
}

/// `E|A^(j)| <= 2M + 3K/n^2 + ceil(K/n)`.
pub fn arm_count_bound(n: usize, k: usize, m: u32) -> Result<f64> {
    if n == 0 || k == 0 || m == 0 {
        return Err(Error::domain("n, K and M must be at least 1"));
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(2.0 * m as f64 + 3.0 * kf / (nf * nf) + (kf / nf).ceil())
}

/// `1 - 150 ln(n) / n^3`, clamped to `[0, 1]`.
pub fn good_probability_bound(n: usize) -> f64 {
    let nf = n as f64;
    clamp_prob(1.0 - 150.0 * nf.ln() / nf.powi(3))
}

/// `h(u) = 2((1+u) ln(1+u) - u)/u^2`, with `h(0) = 1`.
pub fn h_fn(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        // 1 - u/3 + u^2/6 - u^3/10
        1.0 - u / 3.0 + u * u / 6.0 - u * u * u / 10.0
    } else {
        2.0 * ((1.0 + u) * u.ln_1p() - u) / (u * u)
    }
}

/// `P[X >= lambda + t] <= exp(-t^2 h(t/lambda) / (2 lambda))` for Poisson `X`.
pub fn chernoff_poisson_upper(lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(t >= 0.0) {
        return Err(Error::domain("Poisson upper tail needs lambda > 0, t >= 0"));
    }
    Ok((-t * t * h_fn(t / lambda) / (2.0 * lambda)).exp())
}

/// `P[X <= lambda - t] <= exp(-t^2 h(-t/lambda) / (2 lambda))`, `0 < t < lambda`.
pub fn chernoff_poisson_lower(lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(t > 0.0 && t < lambda) {
        return Err(Error::domain("Poisson lower tail needs 0 < t < lambda"));
    }
    Ok((-t * t * h_fn(-t / lambda) / (2.0 * lambda)).exp())
}

/// `P[X >= (1+delta) np] <= exp(-delta^2 np / (2 + delta))` for Binomial `X`.
pub fn chernoff_binomial(n: u64, p: f64, delta: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) || !(delta > 0.0) || n == 0 {
        return Err(Error::domain("binomial tail needs n >= 1, p in (0,1], delta > 0"));
    }
    let np = n as f64 * p;
    Ok((-delta * delta * np / (2.0 + delta)).exp())
}

/// `P[X > t lambda] <= e^(-t)` for exponential `X` with mean `lambda`.
pub fn chernoff_exponential(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain("exponential tail needs t >= 0"));
    }
    Ok((-t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ucb_at_one() {
        let v = ucb_regret_bound(1.0, 2, 0.2, 3.0).unwrap();
        assert_relative_eq!(v, 2.0 * (1.0 + PI * PI / 3.0), epsilon = 1e-12);
        assert_relative_eq!(v, 8.579736267392905, epsilon = 1e-9);
        assert!(ucb_regret_bound(10.0, 2, 0.0, 3.0).is_err());
    }

    #[test]
    fn ucb_doubling_adds_ln2() {
        let a = ucb_regret_bound(1000.0, 5, 0.1, 2.0).unwrap();
        let b = ucb_regret_bound(2000.0, 5, 0.1, 2.0).unwrap();
        assert_relative_eq!(b - a, 80.0 * 2f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn most_played_direct() {
        let r = most_played_error_bound(1000.0, 2, 0.2, 3.0).unwrap();
        assert_relative_eq!(r.raw, 499f64.powi(-4), max_relative = 1e-12);
        assert!(!most_played_error_bound(7.0, 2, 0.2, 3.0).unwrap().valid);
        let bad = most_played_error_bound(2.0, 2, 0.2, 3.0).unwrap();
        assert!(!bad.valid);
        assert_eq!(bad.value, 1.0);
    }

    #[test]
    fn dist_x_empty_product() {
        assert_eq!(dist_x_tail(0, 2, 3.0, 100).unwrap(), 1.0);
        let one = dist_x_tail(1, 2, 3.0, 100).unwrap();
        let expected = 49f64.powi(-4) + (-2f64).exp();
        assert_relative_eq!(one, expected, max_relative = 1e-12);
        let mut prev = 1.0;
        for j in 0..8 {
            let v = dist_x_tail(j, 2, 3.0, 100).unwrap();
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn arm_count_linear_in_m() {
        let a = arm_count_bound(10, 10, 9).unwrap();
        assert_relative_eq!(a, 18.0 + 0.3 + 1.0);
        assert_relative_eq!(arm_count_bound(10, 10, 10).unwrap() - a, 2.0);
    }

    #[test]
    fn h_limit() {
        assert!((h_fn(1e-8) - 1.0).abs() < 1e-6);
        let u = 1e-3;
        let direct = 2.0 * ((1.0 + u) * (1.0f64 + u).ln() - u) / (u * u);
        assert_relative_eq!(h_fn(u), direct, max_relative = 1e-6);
    }

    #[test]
    fn chernoff_domains() {
        assert_eq!(chernoff_exponential(0.0).unwrap(), 1.0);
        assert!(chernoff_exponential(-1.0).is_err());
        assert!(chernoff_poisson_lower(5.0, 5.0).is_err());
        assert!(chernoff_poisson_upper(0.0, 1.0).is_err());
        assert!(chernoff_binomial(10, 1.5, 0.1).is_err());
    }

    #[test]
    fn gossip_regret_below_t0() {
        let p = ProtocolParams::custom(4, 10, 1000, 3.0).unwrap();
        let terms = gossip_regret_bound(500.0, 30, 10, 0.1, &p).unwrap();
        assert_eq!(terms.ucb, 0.0);
        assert_eq!(terms.doubling, 0.0);
        assert_relative_eq!(terms.total(), 40.0 + terms.rare);
    }

    #[test]
    fn good_probability() {
        assert_eq!(good_probability_bound(2), 0.0);
        assert!(good_probability_bound(100) > 0.99);
    }
}
