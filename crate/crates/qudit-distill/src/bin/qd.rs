//! Command-line front door for the distillation toolkit.

use clap::{Args, Parser, Subcommand};
use qudit_distill::cli::{
    self, apply_config_file, cmd_lemma1, cmd_lowrank, cmd_oracle_verify, cmd_rates, cmd_simulate,
    SweepConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qd", about = "Qudit entanglement distillation simulator and rate toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Optional key=value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Local dimension d.
    #[arg(long)]
    d: Option<usize>,
    /// Prime dimension d' (cross-dimension breeding, prime-power hashing).
    #[arg(long)]
    dprime: Option<u64>,
    /// Number of prime factors p (d = d'^p).
    #[arg(long)]
    p: Option<usize>,
    /// Fidelity grid start.
    #[arg(long)]
    f_start: Option<f64>,
    /// Fidelity grid stop.
    #[arg(long)]
    f_stop: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    f_points: Option<usize>,
    /// Single fidelity (simulate).
    #[arg(long)]
    f: Option<f64>,
    /// Comma-separated strategies, e.g. hashing,er,recurrence:2,subspace:3+4.
    #[arg(long)]
    strategies: Option<String>,
    /// Partition as a comma list of block dimensions (adds a subspace strategy).
    #[arg(long)]
    partition: Option<String>,
    /// Recurrence rounds (adds a recurrence strategy).
    #[arg(long)]
    recurrence_k: Option<usize>,
    /// Copies per trial (simulate).
    #[arg(long)]
    n: Option<usize>,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Maximum protocol rounds.
    #[arg(long)]
    rounds: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Protocol mode: breeding | breeding-crossdim | hashing.
    #[arg(long)]
    mode: Option<String>,
    /// Exact posterior enumeration (false = sampled typical set).
    #[arg(long)]
    exact: Option<bool>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn build(&self) -> qudit_distill::Result<SweepConfig> {
        let mut config = SweepConfig::default();
        if let Some(path) = &self.config {
            apply_config_file(&mut config, path)?;
        }
        if let Some(d) = self.d {
            config.d = d;
        }
        if self.dprime.is_some() {
            config.dprime = self.dprime;
        }
        if let Some(p) = self.p {
            config.p = p;
        }
        if let Some(x) = self.f_start {
            config.f_start = x;
        }
        if let Some(x) = self.f_stop {
            config.f_stop = x;
        }
        if let Some(x) = self.f_points {
            config.f_points = x;
        }
        if let Some(x) = self.f {
            config.f = x;
        }
        if let Some(s) = &self.strategies {
            config.strategies = s.split(',').map(|x| x.trim().to_string()).collect();
        }
        if let Some(p) = &self.partition {
            config
                .strategies
                .push(format!("subspace:{}", p.trim()));
        }
        if let Some(k) = self.recurrence_k {
            config.strategies.push(format!("recurrence:{k}"));
        }
        if let Some(n) = self.n {
            config.n = n;
        }
        if let Some(t) = self.trials {
            config.trials = t;
        }
        if let Some(r) = self.rounds {
            config.max_rounds = r;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(m) = &self.mode {
            config.mode = m.clone();
        }
        if let Some(e) = self.exact {
            config.exact = e;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rate sweep over a fidelity grid (CSV).
    Rates(CommonArgs),
    /// Finite-n identification simulation (CSV).
    Simulate(CommonArgs),
    /// Collision-probability table for difference vectors.
    Lemma1 {
        /// Comma-separated dimensions.
        #[arg(long, default_value = "2,3,4,5,6,7,8,9")]
        d_list: String,
        /// Largest vector length to enumerate.
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dense-oracle verification suite.
    OracleVerify {
        #[arg(long, default_value_t = 3)]
        d_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Low-rank optimality report.
    Lowrank {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> qudit_distill::Result<()> {
    cli::init_threads();
    let parsed = Cli::parse();
    match parsed.command {
        Command::Rates(args) => {
            let config = args.build()?;
            cli::emit(&cmd_rates(&config)?, args.out.as_deref())
        }
        Command::Simulate(args) => {
            let config = args.build()?;
            cli::emit(&cmd_simulate(&config)?, args.out.as_deref())
        }
        Command::Lemma1 { d_list, m_max, out } => {
            let ds: Vec<u64> = d_list
                .split(',')
                .map(|x| {
                    x.trim().parse().map_err(|_| {
                        qudit_distill::Error::InvalidConfig(format!("bad dimension '{x}'"))
                    })
                })
                .collect::<qudit_distill::Result<_>>()?;
            cli::emit(&cmd_lemma1(&ds, m_max)?, out.as_deref())
        }
        Command::OracleVerify { d_max, out } => {
            cli::emit(&cmd_oracle_verify(d_max)?, out.as_deref())
        }
        Command::Lowrank { d, samples, seed, out } => {
            cli::emit(&cmd_lowrank(d, samples, seed)?, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
