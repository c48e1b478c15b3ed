//! `shadowkit` command line: build transition graphs, certify coverings,
//! shadow pseudo-orbits and write the artifacts to an output directory.
//!
//! Exit status: 0 success, 2 certification failure, 3 numeric exhaustion,
//! 4 invalid input.

mod commands;
mod config;
mod output;

use clap::{Parser, ValueEnum};
use config::RunConfig;
use serde_json::json;
use shadowkit::shadowing::PerturbMode;
use shadowkit::FailureClass;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Subdivide,
    Graph,
    DeltaBound,
    Certify,
    Pseudo,
    Shadow,
    Periodic,
    Splice,
    Oracle,
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Subdivide => "subdivide",
            Command::Graph => "graph",
            Command::DeltaBound => "delta-bound",
            Command::Certify => "certify",
            Command::Pseudo => "pseudo",
            Command::Shadow => "shadow",
            Command::Periodic => "periodic",
            Command::Splice => "splice",
            Command::Oracle => "oracle",
            Command::Verify => "verify",
        }
    }
}

/// Flags override the matching fields of `--config`.
///
/// Map descriptors are one line: `identity [n=N] [space=cube|torus]`,
/// `translation [v1,...]`, `toral [[a,b],[c,d]]`, `standard K=<k>`,
/// `perturbed [[a,b],[c,d]] eta=<e> [freq=<f>]`, `affine [[..]] [b..] [space=cube|torus]`.
#[derive(Debug, Parser)]
#[command(name = "shadowkit", version, about = "Rigorous shadowing of pseudo-orbits")]
struct Cli {
    command: Command,
    /// JSON RunConfig; see README for the schema.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Window half-length N.
    #[arg(long)]
    window: Option<usize>,
    /// Uniform-noise seed (switches the mode to uniform noise).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    period: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// A previous output file: pseudo-orbit source, or the target of `verify`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Do not print the summary.
    #[arg(long, short)]
    quiet: bool,
}

fn build_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.map {
        cfg.map = v.clone();
    }
    if let Some(v) = cli.m {
        cfg.m = v;
    }
    if let Some(v) = cli.delta {
        cfg.delta = v;
    }
    if let Some(v) = cli.eps {
        cfg.eps = Some(v);
    }
    if let Some(v) = cli.window {
        cfg.window = v;
    }
    if let Some(seed) = cli.seed {
        cfg.mode = PerturbMode::UniformNoise { seed };
    }
    if let Some(v) = &cli.x0 {
        cfg.x0 = Some(v.clone());
    }
    if let Some(v) = cli.period {
        cfg.period = Some(v);
    }
    if let Some(v) = &cli.out {
        cfg.output = v.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<shadowkit::Error>().map(|e| e.class()) {
        Some(FailureClass::Certification) => 2,
        Some(FailureClass::Numeric) => 3,
        Some(FailureClass::Input) | None => 4,
    }
}

fn run(cli: &Cli) -> anyhow::Result<(RunConfig, output::Outcome)> {
    let cfg = build_config(cli)?;
    let input = cli.input.as_deref().map(commands::read_input).transpose()?;
    let hash = output::input_hash(&cfg, input.as_ref().map(|(b, _)| b.as_slice()));
    let ctx = commands::Ctx { cfg: cfg.clone(), hash, input: input.map(|(_, v)| v) };
    let outcome = match cli.command {
        Command::Subdivide => commands::subdivide(&ctx),
        Command::Graph => commands::graph(&ctx),
        Command::DeltaBound => commands::delta_bound(&ctx),
        Command::Certify => commands::certify(&ctx),
        Command::Pseudo => commands::pseudo(&ctx),
        Command::Shadow => commands::run_shadow(&ctx),
        Command::Periodic => commands::periodic(&ctx),
        Command::Splice => commands::splice(&ctx),
        Command::Oracle => commands::oracle(&ctx),
        Command::Verify => commands::verify(&ctx),
    };
    match outcome {
        Ok(o) => Ok((cfg, o)),
        Err(e) => {
            // Failures still leave a record next to the other outputs.
            let code = exit_code(&e);
            let body = json!({"error": {"message": format!("{e:#}"), "exit_code": code}});
            let name = format!("{}.error.json", cli.command.name());
            let _ =
                output::write_all(&cfg.output, &[(name, output::envelope(cli.command.name(), &cfg, &ctx.hash, body))]);
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(4);
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().expect("thread pool set up once");
    }
    match run(&cli) {
        Ok((cfg, o)) => {
            let name = cli.command.name();
            let mut files = o.files;
            files.push((format!("{name}.txt"), o.summary.clone()));
            if let Err(e) = output::write_all(&cfg.output, &files) {
                eprintln!("error: {e:#}");
                return ExitCode::from(4);
            }
            if !cli.quiet {
                print!("{}", o.summary);
            }
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
