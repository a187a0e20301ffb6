//! `formres run <config.json> [--out DIR] [--seed N]`
//!
//! Exit status: 0 on success, 1 for configuration errors, 2 when the
//! library reports a numerical failure.

mod config;
mod output;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::DEFAULT_OUT_DIR;
use output::Manifest;

pub const OUT_DIR_ENV: &str = "FORMRES_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "formres", version, about = "Batch runner for form-valued wave computations on de Sitter type backgrounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the single task described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the environment and the config.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Seed for randomized sampling; overrides numerics.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) | Failure::Io(_) => 2,
        }
    }
}

fn run(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<PathBuf, Failure> {
    let start = Instant::now();
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = config::parse(&text).map_err(|e| Failure::Config(e.0))?;
    let v = config::validate(cfg, seed).map_err(|e| Failure::Config(e.0))?;
    let dir = out.or_else(|| v.config.output.directory.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let io = |e: std::io::Error| Failure::Io(format!("writing to {}: {e}", dir.display()));
    std::fs::create_dir_all(&dir).map_err(io)?;

    let inputs = serde_json::to_value(&v.config).expect("config serializes");
    let mut manifest = Manifest::new(path, inputs, v.seed);
    let task = v.config.task.name();
    let result = tasks::run(&v);
    let failure = match &result {
        Ok(art) => {
            manifest.outputs = output::write_artifacts(&dir, task, art, &v.config.output.formats).map_err(io)?;
            None
        }
        Err(e) => {
            manifest.status = "failed";
            manifest.error = Some(e.to_string());
            Some(Failure::Numerical(format!("task {task}: {e}")))
        }
    };
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    output::write_manifest(&dir, &manifest).map_err(io)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let Command::Run { config, out, seed } = cli.command;
    match run(&config, out, seed) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            let (Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m)) = &f;
            let kind = if f.code() == 1 { "config error" } else { "error" };
            eprintln!("formres: {kind}: {m}");
            ExitCode::from(f.code())
        }
    }
}
