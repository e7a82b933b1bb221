use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gossip_bandit::experiment::{
    describe_params, run_bounds, run_couple_check, run_experiment, run_rumor, ExperimentConfig,
};
use gossip_bandit::rumor::Variant;
use gossip_bandit::{Error, Regime, Result};

#[derive(Parser)]
#[command(name = "gossip-bandit", version, about = "Gossip collaborative bandit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run regimes over matched seeds and write regret CSVs and a plot.
    Simulate(Common),
    /// Sweep the noisy rumor process over population sizes.
    Rumor {
        #[command(flatten)]
        common: Common,
        /// Population size (repeatable).
        #[arg(long = "pop")]
        pop: Vec<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Evaluate closed-form bounds and the rumor constants.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        /// Population size for the rumor constants.
        #[arg(long = "pop")]
        pop: Option<usize>,
    },
    /// Compare main and virtual systems on shared randomness.
    CoupleCheck(Common),
    /// Print the derived protocol parameters for an instance.
    Params(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Per-agent epochs.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// theory, practice, practice-alt or custom.
    #[arg(long)]
    preset: Option<String>,
    /// gossip, nocomm, full or virtual-couple (repeatable).
    #[arg(long)]
    regime: Vec<Regime>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    phase_cap: Option<u32>,
    /// Instance file (`n K epsilon` header, then K means).
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    agents: Option<usize>,
    #[arg(long)]
    arms: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    l: Option<u64>,
    #[arg(long)]
    t0: Option<u64>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($src:expr, $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(self.seed, cfg.run.seed);
        set!(self.runs, cfg.run.runs);
        set!(self.horizon, cfg.run.horizon);
        set!(self.out, cfg.run.out);
        set!(self.preset, cfg.protocol.preset);
        set!(self.phase_cap, cfg.protocol.phase_cap);
        set!(self.agents, cfg.instance.n);
        set!(self.arms, cfg.instance.k);
        set!(self.delta, cfg.instance.delta);
        if self.jobs.is_some() {
            cfg.run.jobs = self.jobs;
        }
        if self.instance.is_some() {
            cfg.instance.file = self.instance.clone();
        }
        if self.epsilon.is_some() {
            cfg.instance.epsilon = self.epsilon;
        }
        if self.alpha.is_some() {
            cfg.protocol.alpha = self.alpha;
        }
        if self.m.is_some() {
            cfg.protocol.m = self.m;
        }
        if self.l.is_some() {
            cfg.protocol.l = self.l;
        }
        if self.t0.is_some() {
            cfg.protocol.t0 = self.t0;
        }
        if !self.regime.is_empty() {
            cfg.run.regimes = self.regime.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.config()?;
            let report = run_experiment(&cfg)?;
            for (regime, _) in &report.traces {
                println!(
                    "{regime}: mean final regret per agent {:.3}",
                    report.final_mean(*regime).unwrap_or(f64::NAN)
                );
            }
            if !report.coupling.is_empty() {
                let coupled = report.coupling.iter().filter(|v| v.coupled).count();
                println!("virtual-couple: {coupled}/{} coupled", report.coupling.len());
            }
            println!("wrote {}", cfg.run.out.display());
        }
        Command::Rumor {
            common,
            pop,
            p,
            variant,
            trials,
        } => {
            let mut cfg = common.config()?;
            if !pop.is_empty() {
                cfg.rumor.n = pop;
            }
            if let Some(p) = p {
                cfg.rumor.p = p;
            }
            if let Some(v) = variant {
                cfg.rumor.variant = v;
            }
            if let Some(t) = trials {
                cfg.rumor.trials = t;
            }
            for (n, s) in run_rumor(&cfg)? {
                println!("n={n} mean={:.3} median={}", s.mean, s.median);
            }
        }
        Command::Bounds {
            common,
            gamma,
            p,
            pop,
        } => {
            let mut cfg = common.config()?;
            if let Some(g) = gamma {
                cfg.bounds.gamma = g;
            }
            if let Some(p) = p {
                cfg.bounds.p = p;
            }
            if let Some(n) = pop {
                cfg.bounds.n = n;
            }
            let reports = run_bounds(&cfg)?;
            println!("name,inputs,value,raw,valid");
            for r in reports {
                println!(
                    "{},\"{}\",{},{},{}",
                    r.name,
                    r.inputs_string(),
                    r.value,
                    r.raw,
                    r.valid
                );
            }
        }
        Command::CoupleCheck(common) => {
            let cfg = common.config()?;
            let verdicts = run_couple_check(&cfg)?;
            let good = verdicts.iter().filter(|v| v.e2 && v.e3).count();
            let coupled = verdicts.iter().filter(|v| v.coupled).count();
            let broken = verdicts
                .iter()
                .filter(|v| v.e2 && v.e3 && !v.coupled)
                .count();
            println!(
                "{} runs: {good} with E2 and E3, {coupled} coupled, {broken} counterexamples",
                verdicts.len()
            );
        }
        Command::Params(common) => {
            let cfg = common.config()?;
            let inst = cfg.build_instance()?;
            let params = cfg.build_params(&inst)?;
            print!("{}", describe_params(&inst, &params)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            report_chain(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn report_chain(e: &Error) {
    let mut src = std::error::Error::source(e);
    while let Some(s) = src {
        eprintln!("  caused by: {s}");
        src = s.source();
    }
}
