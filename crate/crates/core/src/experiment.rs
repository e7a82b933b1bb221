//! Experiment configuration and runners that write CSV, SVG and provenance
//! files into an output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{
    arm_count_bound, dist_x_tail, good_probability_bound, most_played_error_bound,
    gossip_regret_bound, ucb_regret_bound, BoundReport,
};
use crate::coupling::{couple_check, CouplingVerdict};
use crate::engine::mix_key;
use crate::error::{Error, Result};
use crate::instance::{generate_synthetic_instance, ProblemInstance};
use crate::metrics::{detect_good, in_sync, summarize_runs, GoodFlags, Regime, RunTrace, Summary};
use crate::par::{par_map, with_jobs};
use crate::params::{derive_params, InitMode, Preset, ProtocolParams, DEFAULT_PHASE_CAP};
use crate::rumor::{solve_constants, spread_time_distribution, SpreadSummary, Variant};
use crate::sim::{run_regime, RunOptions};

const INSTANCE_TAG: u64 = 0x494e_5354;
const RUN_TAG: u64 = 0x5255_4e53;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSection {
    /// Instance file; overrides the synthetic fields when set.
    pub file: Option<PathBuf>,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    /// Gap hint; defaults to `delta` (synthetic) or the file's value.
    pub epsilon: Option<f64>,
}

impl Default for InstanceSection {
    fn default() -> Self {
        Self {
            file: None,
            n: 20,
            k: 50,
            delta: 0.2,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub preset: String,
    pub m: Option<u32>,
    pub l: Option<u64>,
    pub t0: Option<u64>,
    pub alpha: Option<f64>,
    /// `block` or `random`.
    pub init: String,
    pub gamma: Option<f64>,
    pub phase_cap: u32,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            preset: "practice".into(),
            m: None,
            l: None,
            t0: None,
            alpha: None,
            init: "block".into(),
            gamma: None,
            phase_cap: DEFAULT_PHASE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub regimes: Vec<Regime>,
    pub horizon: u64,
    pub runs: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            regimes: vec![Regime::Gossip, Regime::NoComm],
            horizon: 100_000,
            runs: 10,
            seed: 1,
            out: PathBuf::from("out"),
            jobs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RumorSection {
    pub n: Vec<usize>,
    pub p: f64,
    pub variant: Variant,
    pub trials: usize,
}

impl Default for RumorSection {
    fn default() -> Self {
        Self {
            n: vec![128, 512, 2048, 8192],
            p: 0.99,
            variant: Variant::Delayed,
            trials: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    pub gamma: f64,
    pub p: f64,
    pub n: usize,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            p: 0.99,
            n: 29,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSection,
    pub protocol: ProtocolSection,
    pub run: RunSection,
    pub rumor: RumorSection,
    pub bounds: BoundsSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.run.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if self.run.regimes.is_empty() {
            return Err(Error::config("no regimes selected"));
        }
        if self.rumor.trials == 0 {
            return Err(Error::config("rumor trials must be at least 1"));
        }
        if !(self.rumor.p > 0.0 && self.rumor.p <= 1.0) {
            return Err(Error::config(format!("rumor p {} outside (0, 1]", self.rumor.p)));
        }
        if !(self.bounds.p > 0.0 && self.bounds.p <= 1.0) {
            return Err(Error::config(format!("bounds p {} outside (0, 1]", self.bounds.p)));
        }
        if !(self.bounds.gamma > 0.0) {
            return Err(Error::config("bounds gamma must be positive"));
        }
        self.protocol.preset.parse::<Preset>()?;
        Ok(())
    }

    pub fn build_instance(&self) -> Result<ProblemInstance> {
        let sec = &self.instance;
        let inst = match &sec.file {
            Some(path) => ProblemInstance::from_file(path)?,
            None => generate_synthetic_instance(
                sec.n,
                sec.k,
                sec.delta,
                mix_key(&[self.run.seed, INSTANCE_TAG]),
            )?,
        };
        match sec.epsilon {
            Some(e) => inst.with_epsilon(e),
            None => Ok(inst),
        }
    }

    pub fn build_params(&self, inst: &ProblemInstance) -> Result<ProtocolParams> {
        let sec = &self.protocol;
        let preset: Preset = sec.preset.parse()?;
        let mut params = match preset {
            Preset::Custom => {
                let missing = |k: &str| Error::config(format!("custom preset needs `{k}`"));
                ProtocolParams::custom(
                    sec.m.ok_or_else(|| missing("m"))?,
                    sec.l.ok_or_else(|| missing("l"))?,
                    sec.t0.ok_or_else(|| missing("t0"))?,
                    sec.alpha.unwrap_or(3.0),
                )?
            }
            other => {
                let p = derive_params(inst, other)?;
                match sec.alpha {
                    Some(a) => p.with_alpha(a)?,
                    None => p,
                }
            }
        };
        let init = match sec.init.as_str() {
            "block" => InitMode::Block,
            "random" => InitMode::Random {
                gamma: sec
                    .gamma
                    .ok_or_else(|| Error::config("random init needs `gamma`"))?,
            },
            other => return Err(Error::config(format!("unknown init mode {other:?}"))),
        };
        params = params.with_init(init)?.with_phase_cap(sec.phase_cap)?;
        Ok(params)
    }
}

/// Seed of run `r`. Independent of the regime, so regimes are paired.
pub fn run_seed(master: u64, run: u64) -> u64 {
    mix_key(&[master, RUN_TAG, run])
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(format!("writing {}", path.display()), io),
        other => Error::config(format!("{other:?}")),
    })
}

fn flush(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Everything one `simulate` invocation produced.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub instance: ProblemInstance,
    pub params: ProtocolParams,
    pub traces: Vec<(Regime, Vec<RunTrace>)>,
    pub summaries: Vec<(Regime, Summary)>,
    pub good: Vec<Option<GoodFlags>>,
    pub coupling: Vec<CouplingVerdict>,
}

impl ExperimentReport {
    pub fn final_mean(&self, regime: Regime) -> Option<f64> {
        self.traces.iter().find(|(r, _)| *r == regime).map(|(_, ts)| {
            ts.iter().map(RunTrace::mean_final_regret).sum::<f64>() / ts.len() as f64
        })
    }
}

/// Summary that tolerates a single run (half-width 0).
fn summarize(traces: &[RunTrace]) -> Result<Summary> {
    if traces.len() == 1 {
        let mean = traces[0].mean_regret_curve();
        return Ok(Summary {
            grid: traces[0].grid[..mean.len()].to_vec(),
            half_width: vec![0.0; mean.len()],
            mean,
        });
    }
    summarize_runs(traces)
}

/// Runs every configured regime and writes:
/// `instance.txt`, `effective_config.toml`, `runs/<regime>_run<r>.csv`,
/// `summary.csv`, `comms.csv`, `good_events.csv` (gossip), `coupling.csv`
/// (virtual-couple) and `regret.svg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let inst = cfg.build_instance()?;
    let params = cfg.build_params(&inst)?;
    let horizon = cfg.run.horizon;
    let sim_regimes: Vec<Regime> = cfg
        .run
        .regimes
        .iter()
        .copied()
        .filter(|r| *r != Regime::VirtualCouple)
        .collect();
    if sim_regimes.contains(&Regime::Gossip) {
        params.check_horizon(horizon)?;
    }

    let out = &cfg.run.out;
    create_dir(&out.join("runs"))?;
    inst.write_file(&out.join("instance.txt"))?;
    write_file(&out.join("effective_config.toml"), &cfg.to_toml())?;

    let runs: Vec<u64> = (0..cfg.run.runs as u64).collect();
    let mut traces = Vec::new();
    for &regime in &sim_regimes {
        let ts = with_jobs(cfg.run.jobs, || {
            par_map(&runs, |&r| {
                run_regime(
                    regime,
                    &inst,
                    &params,
                    run_seed(cfg.run.seed, r),
                    RunOptions::horizon(horizon),
                )
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        traces.push((regime, ts));
    }

    let mut summaries = Vec::new();
    for (regime, ts) in &traces {
        for (r, t) in ts.iter().enumerate() {
            write_run_csv(&out.join("runs").join(format!("{regime}_run{r:03}.csv")), r, t)?;
        }
        summaries.push((*regime, summarize(ts)?));
    }
    write_summary_csv(&out.join("summary.csv"), &summaries)?;
    write_comms_csv(&out.join("comms.csv"), &traces)?;

    let mut good = Vec::new();
    if let Some((_, ts)) = traces.iter().find(|(r, _)| *r == Regime::Gossip) {
        let path = out.join("good_events.csv");
        let mut w = csv_writer(&path)?;
        w.write_record(["run", "e1", "e2", "e3", "good", "in_sync"])?;
        for (r, t) in ts.iter().enumerate() {
            let flags = detect_good(t, &params).ok();
            let cell = |f: Option<bool>| opt(f);
            w.write_record([
                r.to_string(),
                cell(flags.map(|f| f.e1)),
                cell(flags.map(|f| f.e2)),
                cell(flags.map(|f| f.e3)),
                cell(flags.map(|f| f.good())),
                in_sync(t, &params).to_string(),
            ])?;
            good.push(flags);
        }
        flush(w, &path)?;
    }

    let mut coupling = Vec::new();
    if cfg.run.regimes.contains(&Regime::VirtualCouple) {
        coupling = couple_batch(&inst, &params, cfg.run.seed, cfg.run.runs, cfg.run.jobs)?;
        write_coupling_csv(&out.join("coupling.csv"), &coupling)?;
    }

    if !summaries.is_empty() {
        write_file(&out.join("regret.svg"), &regret_svg(&summaries))?;
    }

    Ok(ExperimentReport {
        instance: inst,
        params,
        traces,
        summaries,
        good,
        coupling,
    })
}

/// `runs` paired couple checks with the experiment's run seeds.
pub fn couple_batch(
    inst: &ProblemInstance,
    params: &ProtocolParams,
    master: u64,
    runs: usize,
    jobs: Option<usize>,
) -> Result<Vec<CouplingVerdict>> {
    let ids: Vec<u64> = (0..runs as u64).collect();
    with_jobs(jobs, || {
        par_map(&ids, |&r| couple_check(inst, params, run_seed(master, r)))
    })
    .into_iter()
    .collect()
}

/// Writes `coupling.csv` for a couple-check batch.
pub fn run_couple_check(cfg: &ExperimentConfig) -> Result<Vec<CouplingVerdict>> {
    cfg.validate()?;
    let inst = cfg.build_instance()?;
    let params = cfg.build_params(&inst)?;
    create_dir(&cfg.run.out)?;
    let verdicts = couple_batch(&inst, &params, cfg.run.seed, cfg.run.runs, cfg.run.jobs)?;
    write_coupling_csv(&cfg.run.out.join("coupling.csv"), &verdicts)?;
    Ok(verdicts)
}

fn write_run_csv(path: &Path, run: usize, t: &RunTrace) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["regime", "run", "checkpoint_epoch", "agent", "cum_regret"])?;
    for (a, agent) in t.agents.iter().enumerate() {
        for (c, v) in t.grid.iter().zip(&agent.regret_curve) {
            w.write_record([
                t.regime.as_str().to_string(),
                run.to_string(),
                c.to_string(),
                (a + 1).to_string(),
                v.to_string(),
            ])?;
        }
    }
    flush(w, path)
}

fn write_summary_csv(path: &Path, summaries: &[(Regime, Summary)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["regime", "checkpoint_epoch", "mean", "ci_half_width"])?;
    for (regime, s) in summaries {
        for i in 0..s.grid.len() {
            w.write_record([
                regime.as_str().to_string(),
                s.grid[i].to_string(),
                s.mean[i].to_string(),
                s.half_width[i].to_string(),
            ])?;
        }
    }
    flush(w, path)
}

fn write_comms_csv(path: &Path, traces: &[(Regime, Vec<RunTrace>)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "regime",
        "run",
        "agent",
        "sent_early",
        "sent_late",
        "received_early",
        "received_late",
    ])?;
    for (regime, ts) in traces {
        for (r, t) in ts.iter().enumerate() {
            for (a, ag) in t.agents.iter().enumerate() {
                w.write_record([
                    regime.as_str().to_string(),
                    r.to_string(),
                    (a + 1).to_string(),
                    ag.sent_early.to_string(),
                    ag.sent_late.to_string(),
                    ag.received_early.to_string(),
                    ag.received_late.to_string(),
                ])?;
            }
        }
    }
    flush(w, path)
}

fn write_coupling_csv(path: &Path, verdicts: &[CouplingVerdict]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "run",
        "seed",
        "e1",
        "e2",
        "e3",
        "in_sync",
        "coupled",
        "divergence_agent",
        "divergence_epoch",
        "first_drop_agent",
        "first_drop_epoch",
    ])?;
    for (r, v) in verdicts.iter().enumerate() {
        w.write_record([
            r.to_string(),
            v.seed.to_string(),
            v.e1.to_string(),
            v.e2.to_string(),
            v.e3.to_string(),
            v.in_sync.to_string(),
            v.coupled.to_string(),
            opt(v.divergence.map(|d| d.0 + 1)),
            opt(v.divergence.map(|d| d.1)),
            opt(v.first_drop.map(|d| d.0 + 1)),
            opt(v.first_drop.map(|d| d.1)),
        ])?;
    }
    flush(w, path)
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Regret-vs-epoch plot with one line and 95% band per regime.
pub fn regret_svg(summaries: &[(Regime, Summary)]) -> String {
    let (w, h, pad) = (720.0, 440.0, 60.0);
    let x_max = summaries
        .iter()
        .filter_map(|(_, s)| s.grid.last().copied())
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let y_max = summaries
        .iter()
        .flat_map(|(_, s)| s.mean.iter().zip(&s.half_width).map(|(m, hw)| m + hw))
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let sx = |x: f64| pad + x / x_max * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - y / y_max * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {top} V{bot} H{right}" stroke="black" fill="none"/>"#,
        top = pad,
        bot = h - pad,
        right = w - pad
    );
    for i in 0..=4 {
        let fx = x_max * i as f64 / 4.0;
        let fy = y_max * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.0}</text>"#,
            sx(fx),
            h - pad + 18.0,
            fx
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.1}</text>"#,
            pad - 6.0,
            sy(fy) + 4.0,
            fy
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">epoch</text>"#,
        w / 2.0,
        h - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">mean cumulative regret per agent</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (i, (regime, sum)) in summaries.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper: Vec<String> = sum
            .grid
            .iter()
            .zip(sum.mean.iter().zip(&sum.half_width))
            .map(|(&x, (m, hw))| format!("{:.2},{:.2}", sx(x as f64), sy(m + hw)))
            .collect();
        let lower: Vec<String> = sum
            .grid
            .iter()
            .zip(sum.mean.iter().zip(&sum.half_width))
            .rev()
            .map(|(&x, (m, hw))| format!("{:.2},{:.2}", sx(x as f64), sy((m - hw).max(0.0))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = sum
            .grid
            .iter()
            .zip(&sum.mean)
            .map(|(&x, m)| format!("{:.2},{:.2}", sx(x as f64), sy(*m)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = pad + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{regime}</text>"#,
            pad + 10.0,
            pad + 30.0,
            pad + 36.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Rumor sweep: `rumor.csv` with one row per `(n, trial)` and
/// `rumor_summary.csv` with one row per `n`.
pub fn run_rumor(cfg: &ExperimentConfig) -> Result<Vec<(usize, SpreadSummary)>> {
    cfg.validate()?;
    let sec = &cfg.rumor;
    let out = &cfg.run.out;
    create_dir(out)?;
    let mut results = Vec::new();
    for &n in &sec.n {
        let seed = mix_key(&[cfg.run.seed, n as u64]);
        let summary = with_jobs(cfg.run.jobs, || {
            spread_time_distribution(n, sec.p, sec.variant, sec.trials, seed)
        })?;
        results.push((n, summary));
    }
    let path = out.join("rumor.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["n", "p", "variant", "trial", "S"])?;
    for (n, s) in &results {
        for (trial, v) in s.samples.iter().enumerate() {
            w.write_record([
                n.to_string(),
                sec.p.to_string(),
                sec.variant.as_str().to_string(),
                trial.to_string(),
                v.to_string(),
            ])?;
        }
    }
    flush(w, &path)?;
    let path = out.join("rumor_summary.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["n", "p", "variant", "trials", "mean", "median", "q10", "q25", "q75", "q90"])?;
    for (n, s) in &results {
        let q = |target: f64| {
            s.quantiles
                .iter()
                .find(|(p, _)| *p == target)
                .map(|(_, v)| v.to_string())
                .unwrap_or_default()
        };
        w.write_record([
            n.to_string(),
            sec.p.to_string(),
            sec.variant.as_str().to_string(),
            s.samples.len().to_string(),
            s.mean.to_string(),
            s.median.to_string(),
            q(0.1),
            q(0.25),
            q(0.75),
            q(0.9),
        ])?;
    }
    flush(w, &path)?;
    Ok(results)
}

/// Evaluates the bound family for the configured instance and horizon, plus
/// the rumor constants, and writes `bounds.csv`.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<BoundReport>> {
    cfg.validate()?;
    let inst = cfg.build_instance()?;
    let params = cfg.build_params(&inst)?;
    let (n, k) = (inst.n(), inst.k());
    let gap = inst.gap();
    let t = cfg.run.horizon as f64;
    let alpha = params.alpha();
    let mut reports = Vec::new();
    let row = |name: &str, inputs: &[(&str, f64)], value: f64| BoundReport {
        name: name.to_string(),
        inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        value,
        raw: value,
        valid: value.is_finite(),
    };

    let base = [("T", t), ("K", k as f64), ("Delta", gap), ("alpha", alpha)];
    reports.push(row("ucb_regret", &base, ucb_regret_bound(t, k, gap, alpha)?));
    reports.push(most_played_error_bound(t, k, gap, alpha)?);
    let terms = gossip_regret_bound(t, n, k, gap, &params)?;
    let t1 = [
        ("T", t),
        ("n", n as f64),
        ("K", k as f64),
        ("Delta", gap),
        ("M", params.m() as f64),
        ("L", params.l() as f64),
        ("T0", params.t0() as f64),
        ("alpha", alpha),
    ];
    reports.push(row("gossip_regret_ucb", &t1, terms.ucb));
    reports.push(row("gossip_regret_early", &t1, terms.early));
    reports.push(row("gossip_regret_rare", &t1, terms.rare));
    reports.push(row("gossip_regret_doubling", &t1, terms.doubling));
    reports.push(row("gossip_regret_total", &t1, terms.total()));
    for j in 0..=4u32 {
        let v = dist_x_tail(j, k, alpha, params.t0())?;
        reports.push(row(
            "dist_x_tail",
            &[("j", j as f64), ("K", k as f64), ("alpha", alpha), ("T0", params.t0() as f64)],
            v,
        ));
    }
    reports.push(row(
        "arm_count",
        &[("n", n as f64), ("K", k as f64), ("M", params.m() as f64)],
        arm_count_bound(n, k, params.m())?,
    ));
    reports.push(row("good_probability", &[("n", n as f64)], good_probability_bound(n)));

    let b = &cfg.bounds;
    let c = solve_constants(b.gamma, b.p, b.n)?;
    let ci = [("gamma", b.gamma), ("p", b.p), ("n", b.n as f64)];
    reports.push(row("rumor_V", &ci, c.v));
    reports.push(row("rumor_eta", &ci, c.eta));
    reports.push(row("rumor_D", &ci, c.d));
    reports.push(row("rumor_C", &ci, c.c));

    let out = &cfg.run.out;
    create_dir(out)?;
    let path = out.join("bounds.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["name", "inputs", "value", "raw", "valid"])?;
    for r in &reports {
        w.write_record([
            r.name.clone(),
            r.inputs_string(),
            r.value.to_string(),
            r.raw.to_string(),
            r.valid.to_string(),
        ])?;
    }
    flush(w, &path)?;
    Ok(reports)
}

/// Human-readable derived parameters.
pub fn describe_params(inst: &ProblemInstance, params: &ProtocolParams) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "n = {}", inst.n());
    let _ = writeln!(s, "K = {}", inst.k());
    let _ = writeln!(s, "epsilon = {}", inst.epsilon());
    let _ = writeln!(s, "gap = {}", inst.gap());
    let _ = writeln!(s, "preset = {:?}", params.preset());
    let _ = writeln!(s, "M = {}", params.m());
    let _ = writeln!(s, "L = {}", params.l());
    let _ = writeln!(s, "T0 = {}", params.t0());
    let _ = writeln!(s, "alpha = {}", params.alpha());
    let _ = writeln!(s, "early epochs ML = {}", params.early_epochs());
    let _ = writeln!(s, "T_n = {}", params.sync_time());
    let _ = writeln!(s, "M_hat = {}", params.m_hat(inst));
    let _ = writeln!(s, "phase cap = {}", params.phase_cap());
    match params.max_horizon() {
        Ok(h) => {
            let _ = writeln!(s, "max horizon = {h}");
        }
        Err(e) => {
            let _ = writeln!(s, "max horizon = unavailable ({e})");
        }
    }
    Ok(s)
}
