use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use worldsheet::background::BACKGROUND_NAMES;
use worldsheet::embedding::EMBEDDING_NAMES;
use worldsheet_cli::config::{parse_resolution, Format, RunConfig};
use worldsheet_cli::report::Report;
use worldsheet_cli::{suite, CliError};

/// Worker count for the thread pool; unset means all cores.
const THREADS_VAR: &str = "WORLDSHEET_THREADS";

#[derive(Parser)]
#[command(name = "worldsheet", version, about = "Numerical checks of embedding identities for 2-surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity battery over a refinement study.
    Verify(RunArgs),
    /// Euler number and genus of a closed surface.
    Euler(RunArgs),
    /// Symplectic form tables for deformation pairs.
    Symplectic(RunArgs),
    /// Pretty-print a saved report.
    Report {
        path: PathBuf,
    },
    /// List backgrounds and embeddings with their parameters.
    Catalog,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Coarsest resolution as N0xN1.
    #[arg(long, value_parser = parse_resolution)]
    resolution: Option<[usize; 2]>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::load(&self.config)?;
        if let Some(r) = self.resolution {
            c.resolution = r;
        }
        if let Some(l) = self.levels {
            c.refinement_levels = l;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        c.validate()?;
        Ok(c)
    }
}

fn thread_pool() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config { path: THREADS_VAR.into(), message: format!("expected a positive integer, got '{v}'") })?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Engine(e.to_string()))
}

fn emit(report: &Report, args: &RunArgs, cfg: &RunConfig) -> Result<(), CliError> {
    let format = args.format.unwrap_or(cfg.format());
    let text = report.render(format);
    let out = args.out.clone().or_else(|| cfg.out_path().map(PathBuf::from));
    match out {
        Some(p) => std::fs::write(&p, text).map_err(|e| CliError::Io { path: p.display().to_string(), source: e })?,
        None => print!("{text}"),
    }
    for f in report.failures() {
        eprintln!("FAIL {} on {}: {:.3e} (tolerance {:.3e})", f.id, f.geometry, f.max_residual, f.tolerance);
    }
    Ok(())
}

fn catalog() -> String {
    let params = |name: &str| match name {
        "round_s3" => "radius",
        "conformal_flat3" => "a0 a1 a2",
        "cylinder" => "a (minkowski4)",
        "wavy_cylinder" => "a eps w (minkowski4)",
        "sphere" => "a (euclidean3)",
        "torus" => "c a (euclidean3)",
        "s3_sphere" => "chi0 (round_s3)",
        "graph_patch" => "amp (3-dimensional)",
        "fourier" => "components, one per ambient coordinate",
        _ => "",
    };
    let mut s = String::from("backgrounds:\n");
    for b in BACKGROUND_NAMES {
        s += &format!("  {b:<16} {}\n", params(b));
    }
    s += "embeddings:\n";
    for e in EMBEDDING_NAMES {
        s += &format!("  {e:<16} {}\n", params(e));
    }
    s += "identities:\n";
    for i in suite::IDENTITIES {
        s += &format!("  {}\n", i.id);
    }
    s
}

fn run(cli: Cli) -> Result<bool, CliError> {
    thread_pool()?;
    match cli.command {
        Command::Verify(a) => {
            let cfg = a.load()?;
            let r = suite::run_verify(&cfg)?;
            emit(&r, &a, &cfg)?;
            Ok(r.all_pass())
        }
        Command::Euler(a) => {
            let cfg = a.load()?;
            let r = suite::run_euler(&cfg)?;
            emit(&r, &a, &cfg)?;
            Ok(r.all_pass())
        }
        Command::Symplectic(a) => {
            let cfg = a.load()?;
            let r = suite::run_symplectic(&cfg)?;
            emit(&r, &a, &cfg)?;
            Ok(r.all_pass())
        }
        Command::Report { path } => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
            let r: Report = serde_json::from_str(&text)
                .map_err(|e| CliError::Config { path: format!("line {} column {}", e.line(), e.column()), message: e.to_string() })?;
            print!("{}", r.pretty());
            Ok(r.all_pass())
        }
        Command::Catalog => {
            print!("{}", catalog());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
