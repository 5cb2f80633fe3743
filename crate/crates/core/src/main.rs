use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use interest3d::commands::{self, Options, Report};
use interest3d::config::RunConfig;
use interest3d::{exec, Result};

/// Interest point detection on triangle meshes.
#[derive(Parser, Debug)]
#[command(name = "interest3d", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides the forest seed and the random fold seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Recompute outputs that look up to date.
    #[arg(long, global = true)]
    force: bool,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Compute the 43 per-vertex attributes of every mesh.
    Attributes,
    /// Cluster annotator clicks into ground truth over the (sigma, n) grid.
    ClusterGt,
    /// Train one forest per cross-validation fold.
    Train,
    /// Score held-out meshes and suppress non-maxima.
    Detect,
    /// Sweep the tolerance grid and write IOU/FNE/FPE curves and AUCs.
    Eval,
    /// Write curve CSVs and SVG charts from the evaluation summary.
    Curves,
}

fn run(cli: &Cli) -> Result<Report> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    cfg.validate()?;
    commands::write_snapshot(&cfg)?;
    let opts = Options { force: cli.force };
    let job = || match cli.command {
        Command::Attributes => commands::cmd_attributes(&cfg, &opts),
        Command::ClusterGt => commands::cmd_cluster_gt(&cfg, &opts),
        Command::Train => commands::cmd_train(&cfg, &opts),
        Command::Detect => commands::cmd_detect(&cfg, &opts),
        Command::Eval => commands::cmd_eval(&cfg, &opts),
        Command::Curves => commands::cmd_curves(&cfg, &opts),
    };
    match cli.jobs {
        Some(0) => Err(interest3d::Error::InvalidArgument(
            "--jobs must be at least 1".into(),
        )),
        Some(n) => exec::with_jobs(n, job),
        None => job(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(report) => {
            println!("{:?}: {}", cli.command, report.summary());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
