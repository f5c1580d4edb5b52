use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cocite::pipeline::{self, Command, PipelineConfig, Stage};
use cocite::Result;

/// Co-citation kinetics pipeline.
///
/// Settings come from an optional `key = value` file and `--key value`
/// overrides, e.g. `cocite all --config run.conf --partitions 8`.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and curate the inputs, write the curation report
    Ingest(Common),
    /// Enumerate and deduplicate co-cited pairs
    Pairs(Common),
    /// Count total and yearly co-citations
    Count(Common),
    /// Delayed co-citation, Sleeping Beauty and band screening
    Detect(Common),
    /// Histogram, ECDF, percentiles and cohort summary
    Stats(Common),
    /// Subject-area co-occurrence graph
    Subjects(Common),
    /// Every stage in order
    All(Common),
    /// Write a seeded synthetic corpus with its planting manifest
    Gen(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overwrite partial or mismatched workdir state
    #[arg(long)]
    force: bool,
    /// Configuration overrides as `--key value`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

fn execute(cmd: Cmd) -> Result<()> {
    let (common, command) = match cmd {
        Cmd::Ingest(c) => (c, Some(Command::Stage(Stage::Ingest))),
        Cmd::Pairs(c) => (c, Some(Command::Stage(Stage::Pairs))),
        Cmd::Count(c) => (c, Some(Command::Stage(Stage::Count))),
        Cmd::Detect(c) => (c, Some(Command::Stage(Stage::Detect))),
        Cmd::Stats(c) => (c, Some(Command::Stage(Stage::Stats))),
        Cmd::Subjects(c) => (c, Some(Command::Stage(Stage::Subjects))),
        Cmd::All(c) => (c, Some(Command::All)),
        Cmd::Gen(c) => (c, None),
    };
    let Common {
        mut config,
        mut force,
        overrides,
    } = common;
    // clap stops at the first override, so later --force/--config land here
    let mut rest = Vec::new();
    let mut args = overrides.into_iter();
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--force" => force = true,
            "--config" => config = args.next().map(PathBuf::from),
            _ => rest.push(arg),
        }
    }
    let overrides = pipeline::parse_overrides(&rest)?;
    // the generator has its own horizon; pipeline runs must set end_year
    let defaults: &[(&str, &str)] = if command.is_none() { &[("end_year", "2018")] } else { &[] };
    let cfg = PipelineConfig::load(config.as_deref(), defaults, &overrides)?;
    match command {
        Some(command) => {
            let report = pipeline::run(&cfg, command, force)?;
            for (stage, took) in report.stages {
                println!("{:<9} {:>10.2?}", stage.name(), took);
            }
        }
        None => {
            let corpus = pipeline::generate(&cfg)?;
            println!(
                "wrote {} publications, {} edges, {} planted pairs to {}",
                corpus.publication_count(),
                corpus.edge_count(),
                corpus.planted.len(),
                cfg.gen.out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
