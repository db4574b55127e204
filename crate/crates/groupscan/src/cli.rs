//! Command-line entry point.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use groupscan_core::irm::Concentration;

use crate::config::PipelineConfig;
use crate::error::{ExitStatus, Result};
use crate::pipeline::{self, Context};

#[derive(Debug, Parser)]
#[command(name = "groupscan", version, about = "Group structure from proximity-scan logs")]
pub struct Cli {
    /// Pipeline configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads for restarts, runs and trials (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse the scan log, hash device addresses and summarize.
    Ingest,
    /// Build the binary participant×concert matrix and remove outliers.
    Attendance,
    /// Fit the relational model with independent restarts.
    Irm(Concentrations),
    /// Repeated held-out fits: pairwise NMI and AUC.
    Robustness(Concentrations),
    /// Cluster summaries and metadata enrichment of the fitted state.
    Enrich,
    /// Co-occurrence micro-groups against the rewiring baseline.
    Micro,
    /// Write a synthetic festival to the configured input paths.
    Synth,
    /// Bundle every stage output into report.json and report.csv.
    Report,
}

#[derive(Debug, Args)]
pub struct Concentrations {
    /// Row CRP concentration: a positive number or `auto` (ln of the row count).
    #[arg(long, value_parser = parse_concentration)]
    pub alpha_row: Option<Concentration>,
    /// Column CRP concentration: a positive number or `auto`.
    #[arg(long, value_parser = parse_concentration)]
    pub alpha_col: Option<Concentration>,
}

fn parse_concentration(s: &str) -> std::result::Result<Concentration, String> {
    if s == "auto" {
        return Ok(Concentration::Auto);
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| *v > 0.0 && v.is_finite())
        .map(Concentration::Value)
        .ok_or_else(|| format!("expected a positive number or `auto`, got `{s}`"))
}

impl Cli {
    /// The effective configuration after command-line overrides.
    pub fn resolve_config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(dir) = &self.output {
            config.paths.output = dir.clone();
        }
        if let Command::Irm(c) | Command::Robustness(c) = &self.command {
            if let Some(a) = c.alpha_row {
                config.irm.alpha_row = a;
            }
            if let Some(a) = c.alpha_col {
                config.irm.alpha_col = a;
            }
        }
        Ok(config)
    }

    pub fn execute(&self) -> Result<Vec<PathBuf>> {
        let ctx = Context::new(self.resolve_config()?, self.jobs)?;
        match self.command {
            Command::Ingest => pipeline::ingest(&ctx),
            Command::Attendance => pipeline::attendance(&ctx),
            Command::Irm(_) => pipeline::irm(&ctx),
            Command::Robustness(_) => pipeline::robustness(&ctx),
            Command::Enrich => pipeline::enrich(&ctx),
            Command::Micro => pipeline::micro(&ctx),
            Command::Synth => pipeline::synth(&ctx),
            Command::Report => pipeline::report(&ctx),
        }
    }
}

/// Parses `args` (program name first), runs the subcommand and reports the
/// outcome on stderr.
pub fn run<I, T>(args: I) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Usage } else { ExitStatus::Success };
        }
    };
    match cli.execute() {
        Ok(written) => {
            for p in written {
                log::info!("wrote {}", p.display());
            }
            ExitStatus::Success
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("groupscan").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn overrides_apply() {
        let cli = parse(&["irm", "--seed", "7", "--output", "o", "--alpha-row", "auto", "--alpha-col", "0.5"]);
        let c = cli.resolve_config().unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.paths.output, PathBuf::from("o"));
        assert_eq!(c.irm.alpha_row, Concentration::Auto);
        assert_eq!(c.irm.alpha_col, Concentration::Value(0.5));
    }

    #[test]
    fn global_flags_before_subcommand() {
        let cli = parse(&["--jobs", "2", "micro"]);
        assert_eq!(cli.jobs, Some(2));
        assert!(matches!(cli.command, Command::Micro));
    }

    #[test]
    fn bad_concentration_rejected() {
        let r = Cli::try_parse_from(["groupscan", "irm", "--alpha-row", "-1"]);
        assert!(r.is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["groupscan", "frobnicate"]), ExitStatus::Usage);
        assert_eq!(run(["groupscan"]), ExitStatus::Usage);
        assert_eq!(run(["groupscan", "--help"]), ExitStatus::Success);
        assert_eq!(run(["groupscan", "ingest", "--jobs", "0"]), ExitStatus::Usage);
    }
}
