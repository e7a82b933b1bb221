//! Bandit problem instances: arm means, agent count and the gap hint.
//!
//! Arms and agents are zero-based internally. Every file or CSV written by
//! this crate reports them one-based.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean of the best arm in synthetic instances.
pub const SYNTHETIC_BEST_MEAN: f64 = 0.85;
/// Lower end of the sampling interval for suboptimal synthetic arms.
pub const SYNTHETIC_FLOOR: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    n: usize,
    means: Vec<f64>,
    epsilon: f64,
}

impl ProblemInstance {
    pub fn new(n: usize, means: Vec<f64>, epsilon: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("agent count n must be at least 1"));
        }
        if means.len() < 2 {
            return Err(Error::config(format!(
                "need at least 2 arms, got {}",
                means.len()
            )));
        }
        if let Some((i, m)) = means
            .iter()
            .enumerate()
            .find(|(_, m)| !(**m > 0.0 && **m < 1.0))
        {
            return Err(Error::config(format!(
                "arm {} has mean {m}, outside (0,1)",
                i + 1
            )));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::config(format!("epsilon {epsilon} outside (0,1]")));
        }
        Ok(Self { n, means, epsilon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    #[inline]
    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::config(format!("epsilon {epsilon} outside (0,1]")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn with_agents(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("agent count n must be at least 1"));
        }
        self.n = n;
        Ok(self)
    }

    /// Index of the largest mean; ties go to the lowest index.
    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for (i, &m) in self.means.iter().enumerate().skip(1) {
            if m > self.means[best] {
                best = i;
            }
        }
        best
    }

    pub fn best_mean(&self) -> f64 {
        self.means[self.best_arm()]
    }

    /// Best mean minus second-best mean. Zero when the maximum is shared.
    pub fn gap(&self) -> f64 {
        let best = self.best_arm();
        let second = self
            .means
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != best)
            .map(|(_, &m)| m)
            .fold(f64::NEG_INFINITY, f64::max);
        self.means[best] - second
    }

    /// Per-epoch regret of playing `arm`.
    #[inline]
    pub fn arm_regret(&self, arm: usize) -> f64 {
        self.best_mean() - self.means[arm]
    }

    /// Parses the two-line text format: `n K epsilon`, then K means.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or("empty instance file")?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(format!(
                "header must be `n K epsilon`, found {} fields",
                fields.len()
            ));
        }
        let n: usize = fields[0]
            .parse()
            .map_err(|e| format!("bad agent count {:?}: {e}", fields[0]))?;
        let k: usize = fields[1]
            .parse()
            .map_err(|e| format!("bad arm count {:?}: {e}", fields[1]))?;
        let epsilon: f64 = fields[2]
            .parse()
            .map_err(|e| format!("bad epsilon {:?}: {e}", fields[2]))?;
        let means = lines
            .flat_map(str::split_whitespace)
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| format!("bad mean {tok:?}: {e}"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if means.len() != k {
            return Err(format!("header declares {k} arms but {} means follow", means.len()));
        }
        Self::new(n, means, epsilon).map_err(|e| e.to_string())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text).map_err(|msg| Error::InstanceParse {
            path: path.to_path_buf(),
            msg,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n, self.k(), self.epsilon);
        for (i, m) in self.means.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{m}");
        }
        out.push('\n');
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// Samples a synthetic instance: arm 0 has mean 0.85, the other `k - 1`
/// means are i.i.d. uniform on `(0.4, 0.85 - delta)`.
///
/// The gap hint epsilon defaults to `delta`; override with
/// [`ProblemInstance::with_epsilon`].
pub fn generate_synthetic_instance(
    n: usize,
    k: usize,
    delta: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    let upper = SYNTHETIC_BEST_MEAN - delta;
    if !(delta > 0.0 && upper > SYNTHETIC_FLOOR) {
        return Err(Error::config(format!(
            "synthetic gap {delta} outside (0, {})",
            SYNTHETIC_BEST_MEAN - SYNTHETIC_FLOOR
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = Vec::with_capacity(k);
    means.push(SYNTHETIC_BEST_MEAN);
    for _ in 1..k {
        // open interval: resample the (measure-zero) lower endpoint
        let m = loop {
            let x = rng.gen_range(SYNTHETIC_FLOOR..upper);
            if x > SYNTHETIC_FLOOR {
                break x;
            }
        };
        means.push(m);
    }
    ProblemInstance::new(n, means, delta.min(1.0))
}
