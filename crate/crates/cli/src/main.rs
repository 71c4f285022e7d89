use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use moma_core::detequiv::write_diagnostics_csv;
use moma_core::harness::{
    export_results, run_capacity_vs_target_rate, run_det_equiv, run_rate_vs_antennas, validate_scenario, Scenario,
};

#[derive(Parser)]
#[command(name = "moma", version, about = "Multi-class overloaded multiple access simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file. Omitted keys take their reference defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut sc = match &self.config {
            Some(path) => Scenario::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => Scenario::default(),
        };
        if let Some(seed) = self.seed {
            sc.seed = seed;
        }
        if let Some(trials) = self.trials {
            sc.trials = trials;
        }
        sc.validate()?;
        Ok(sc)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Ergodic class rates of every scheme against the antenna count.
    RateVsAntennas {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "rate_vs_antennas.csv")]
        output: PathBuf,
    },
    /// Largest class-2 population meeting each class-2 target rate.
    CapacityVsRate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "capacity_vs_rate.csv")]
        output: PathBuf,
    },
    /// Deterministic-equivalent SINRs and fixed-point diagnostics.
    Detequiv {
        #[command(flatten)]
        common: Common,
        /// Antenna count; defaults to the largest configured one.
        #[arg(long)]
        antennas: Option<usize>,
        #[arg(long, default_value = "detequiv.csv")]
        output: PathBuf,
        #[arg(long, default_value = "detequiv_diagnostics.csv")]
        diagnostics: PathBuf,
    },
    /// Check codebook, statistics and solver invariants for a scenario.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::RateVsAntennas { common, output } => {
            let rows = run_rate_vs_antennas(&common.scenario()?)?;
            export_results(&rows, &output)?;
            info!("wrote {} rows to {}", rows.len(), output.display());
        }
        Command::CapacityVsRate { common, output } => {
            let out = run_capacity_vs_target_rate(&common.scenario()?)?;
            for (scheme, curve) in &out.curves {
                let text: Vec<String> = curve.iter().map(|r| format!("{r:.3}")).collect();
                info!("{scheme}: worst class-2 rate for K2 = 1.. : {}", text.join(" "));
            }
            export_results(&out.rows, &output)?;
            info!("wrote {} rows to {}", out.rows.len(), output.display());
        }
        Command::Detequiv { common, antennas, output, diagnostics } => {
            let sc = common.scenario()?;
            let m = antennas.or_else(|| sc.antennas.iter().copied().max()).context("no antenna count configured")?;
            let (rows, diag) = run_det_equiv(&sc, m)?;
            export_results(&rows, &output)?;
            write_diagnostics_csv(&diag, std::fs::File::create(&diagnostics)?)?;
            info!("wrote {} rows to {} and diagnostics to {}", rows.len(), output.display(), diagnostics.display());
        }
        Command::Validate { common } => {
            let checks = validate_scenario(&common.scenario()?)?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                bail!("{failed} of {} checks failed", checks.len());
            }
        }
    }
    Ok(())
}
