//! Command-line front end: `gen`, `assemble`, `match`, `audit`, `arun` and
//! `icp`. Each command reads a [`RunConfig`], applies flag overrides, prints
//! one JSON document and writes its files under `--out`.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_arun, cmd_assemble, cmd_audit, cmd_gen, cmd_icp, Outcome};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "bitr", version, about = "SE(3)-bi-equivariant point cloud assembly")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Model JSON; a random model from the seed otherwise.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Audit tolerance, or the rotation tolerance in degrees for assembly.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    #[arg(long)]
    pub source: Option<PathBuf>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    /// Ground-truth transform JSON.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub complete_match: bool,
    /// Refinement after the forward pass; only `icp` is available.
    #[arg(long, value_parser = ["icp"])]
    pub refine: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a mesh, add outliers, split and move both parts.
    Gen {
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        cloud: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        outliers: Option<usize>,
        /// Share of points in the source part.
        #[arg(long)]
        split: Option<f64>,
        /// Crop both copies independently instead of splitting.
        #[arg(long, conflicts_with = "split")]
        crop: Option<f64>,
    },
    /// Estimate the transform taking the source onto the reference.
    Assemble(AssembleArgs),
    /// Complete matching: assembly composed with the self-pair output.
    Match(AssembleArgs),
    /// Equivariance audit and kernel-constraint certification.
    Audit {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        break_swap_ties: bool,
        #[arg(long)]
        break_homogeneity: bool,
    },
    /// Closed-form registration of corresponded clouds.
    Arun(PairArgs),
    /// Iterative closest point refinement.
    Icp {
        #[command(flatten)]
        pair: PairArgs,
        /// Starting transform JSON.
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn apply_pair(cfg: &mut RunConfig, pair: PairArgs) {
    set_opt(&mut cfg.source, pair.source);
    set_opt(&mut cfg.reference, pair.reference);
}

/// Which command a parsed command line runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Gen,
    Assemble,
    Audit,
    Arun,
    Icp,
}

/// Builds the effective configuration of a parsed command line.
pub fn resolve(cli: Cli) -> Result<(RunConfig, Kind)> {
    let common = cli.common;
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, common.seed);
    set(&mut cfg.out, common.out);
    set_opt(&mut cfg.model, common.model);
    let kind = match cli.command {
        Command::Gen { mesh, cloud, samples, outliers, split, crop } => {
            set_opt(&mut cfg.gen.mesh, mesh);
            set_opt(&mut cfg.gen.cloud, cloud);
            set(&mut cfg.gen.samples, samples);
            set(&mut cfg.gen.outliers, outliers);
            if split.is_some() {
                cfg.gen.split = split;
                cfg.gen.crop = None;
            }
            if crop.is_some() {
                cfg.gen.crop = crop;
                cfg.gen.split = None;
            }
            Kind::Gen
        }
        Command::Assemble(args) => {
            apply_assemble(&mut cfg, args, false, common.tol);
            Kind::Assemble
        }
        Command::Match(args) => {
            apply_assemble(&mut cfg, args, true, common.tol);
            Kind::Assemble
        }
        Command::Audit { pair, trials, break_swap_ties, break_homogeneity } => {
            apply_pair(&mut cfg, pair);
            set(&mut cfg.audit.trials, trials);
            set(&mut cfg.audit.tol, common.tol);
            cfg.audit.break_swap_ties |= break_swap_ties;
            cfg.audit.break_homogeneity |= break_homogeneity;
            Kind::Audit
        }
        Command::Arun(pair) => {
            apply_pair(&mut cfg, pair);
            Kind::Arun
        }
        Command::Icp { pair, init, max_iter } => {
            apply_pair(&mut cfg, pair);
            set_opt(&mut cfg.icp_init, init);
            set(&mut cfg.icp.max_iter, max_iter);
            Kind::Icp
        }
    };
    cfg.validate()?;
    Ok((cfg, kind))
}

fn apply_assemble(cfg: &mut RunConfig, args: AssembleArgs, matching: bool, tol: Option<f64>) {
    apply_pair(cfg, args.pair);
    set_opt(&mut cfg.gt, args.gt);
    cfg.assemble.complete_match |= matching || args.complete_match;
    cfg.assemble.refine_icp |= args.refine.is_some();
    set_opt(&mut cfg.assemble.max_rotation_deg, tol);
}

/// Runs one command against an effective configuration.
pub fn execute(cfg: &RunConfig, kind: Kind) -> Result<Outcome> {
    match kind {
        Kind::Gen => cmd_gen(cfg),
        Kind::Assemble => cmd_assemble(cfg),
        Kind::Audit => cmd_audit(cfg),
        Kind::Arun => cmd_arun(cfg),
        Kind::Icp => cmd_icp(cfg),
    }
}

/// Parses arguments, runs the command and prints its report. Exit status is
/// 0 when the command succeeded and every tolerance held, 1 when a tolerance
/// failed and 2 on errors.
pub fn run<I, A>(args: I) -> ExitCode
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = resolve(cli).and_then(|(cfg, command)| execute(&cfg, command));
    match outcome {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.report).unwrap_or_default());
            if out.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("bitr: a configured tolerance failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("bitr: {e:#}");
            ExitCode::from(2)
        }
    }
}
