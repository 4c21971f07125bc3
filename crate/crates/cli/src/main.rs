use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use wqed_core::ensemble::file_digest;

mod commands;
mod config;

use config::{Command, RunConfig, CONFIG_FILE};

/// Exact diagonalization of atom arrays coupled to a waveguide.
#[derive(Parser)]
#[command(name = "wqed", version)]
struct Cli {
    /// TOML file with the same keys as the flags; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Complex spectrum with per-state metrics and the distance histogram
    Spectrum(RunConfig),
    /// One eigenstate, plus its orthogonal decomposition and momentum map
    Wavefunction(RunConfig),
    /// Brightest single-excitation mode against array length
    Scaling(RunConfig),
    /// Seeded disorder ensemble with a reproducibility manifest
    Disorder(RunConfig),
    /// Repeat a finished run from its config.toml and compare every output
    Rerun {
        /// Directory of the original run
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn resolve(command: Command, file: Option<&Path>, flags: &RunConfig) -> Result<config::Resolved> {
    let base = match file {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    base.merged(flags).resolve(command)
}

fn digests(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let name = path
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        // config.toml records the output directory, which differs by design
        if path.is_file() && name != CONFIG_FILE {
            out.insert(name, file_digest(&path)?);
        }
    }
    Ok(out)
}

fn rerun(from: &Path, out: &Path) -> Result<()> {
    let file = RunConfig::load(&from.join(CONFIG_FILE))?;
    let Some(command) = file.command else {
        bail!("{} does not name a command", from.join(CONFIG_FILE).display());
    };
    let flags = RunConfig {
        out: Some(out.to_path_buf()),
        ..Default::default()
    };
    commands::run(&file.merged(&flags).resolve(command)?)?;
    let (old, new) = (digests(from)?, digests(out)?);
    let mut bad: Vec<&String> = old.keys().filter(|k| old.get(*k) != new.get(*k)).collect();
    bad.extend(new.keys().filter(|k| !old.contains_key(*k)));
    if !bad.is_empty() {
        bail!("outputs differ from the original run: {bad:?}");
    }
    eprintln!("reproduced {} files byte for byte", old.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = cli.config.as_deref();
    let result = match &cli.command {
        Cmd::Spectrum(f) => resolve(Command::Spectrum, file, f).and_then(|r| commands::run(&r)),
        Cmd::Wavefunction(f) => resolve(Command::Wavefunction, file, f).and_then(|r| commands::run(&r)),
        Cmd::Scaling(f) => resolve(Command::Scaling, file, f).and_then(|r| commands::run(&r)),
        Cmd::Disorder(f) => resolve(Command::Disorder, file, f).and_then(|r| commands::run(&r)),
        Cmd::Rerun { from, out } => rerun(from, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
