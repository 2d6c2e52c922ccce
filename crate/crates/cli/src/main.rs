use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use hyperwave_core::artifact::{write_with_manifest, ArtifactKind};
use hyperwave_core::config::{GenericityModeName, LoadedConfig};
use hyperwave_core::pipeline::{self, Outcome, RunOutput};
use hyperwave_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "hyperwave", version, about = "Quasi-periodic solutions of the nonlinear wave equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Exhaustive,
    Sampled,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify the genericity conditions of the seed.
    Genericity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Enumerate characteristic points, components and the small-divisor profile.
    Charset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "box-n")]
        box_n: Option<i64>,
        #[arg(long = "box-j")]
        box_j: Option<i64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral gap of the linearized operator.
    Gap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "N")]
        n: Option<i64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Newton solve for the quasi-periodic solution.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        /// Certificate from `genericity`; computed inline when omitted.
        #[arg(long)]
        certificate: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the Cauchy problem up to T = delta^-A.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long = "A")]
        a_exp: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo estimates of the gap and genericity measures.
    Measure {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize artifacts from one pipeline.
    Report {
        artifacts: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Artifact(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<LoadedConfig> {
    LoadedConfig::from_path(path)
}

fn extra_path(out: &Path, name: &str) -> PathBuf {
    if name.is_empty() {
        out.to_path_buf()
    } else {
        out.with_extension(name)
    }
}

fn write_run(out: &Path, run: &RunOutput, started: Instant) -> Result<()> {
    let wall = started.elapsed().as_secs_f64();
    for f in &run.files {
        write_with_manifest(&extra_path(out, &f.name), &f.bytes, f.kind, &run.config_hash, run.rng_seed, wall)?;
    }
    Ok(())
}

fn report(artifacts: &[PathBuf], out: &Path, started: Instant) -> Result<Outcome> {
    let mut inputs = Vec::new();
    for p in artifacts {
        // lifetime CSVs carry their envelope in the sibling JSON
        let p = if p.extension().is_some_and(|e| e == "csv") { p.with_extension("json") } else { p.clone() };
        inputs.push((p.display().to_string(), read(&p)?));
    }
    let rep = pipeline::emit_report(&inputs)?;
    let wall = started.elapsed().as_secs_f64();
    write_with_manifest(out, rep.summary.as_bytes(), ArtifactKind::Report, &rep.config_hash, 0, wall)?;
    let dir = out.parent().unwrap_or(Path::new(""));
    for (name, csv) in &rep.csvs {
        write_with_manifest(&dir.join(name), csv.as_bytes(), ArtifactKind::Report, &rep.config_hash, 0, wall)?;
    }
    Ok(Outcome::Success)
}

fn run(cli: Cli) -> Result<Outcome> {
    let started = Instant::now();
    let (out, run) = match cli.command {
        Command::Genericity { config, mode, samples, seed, out } => {
            let mode = mode.map(|m| match m {
                Mode::Exhaustive => GenericityModeName::Exhaustive,
                Mode::Sampled => GenericityModeName::Sampled,
            });
            (out, pipeline::run_genericity(&load(&config)?, mode, samples, seed)?)
        }
        Command::Charset { config, box_n, box_j, out } => (out, pipeline::run_charset(&load(&config)?, box_n, box_j)?),
        Command::Gap { config, n, delta, eps, out } => (out, pipeline::run_gap(&load(&config)?, n, delta, eps)?),
        Command::Solve { config, delta, tol, max_iter, certificate, out } => {
            let cfg = load(&config)?;
            let cert = certificate.as_deref().map(read).transpose()?;
            (out, pipeline::run_solve(&cfg, delta, tol, max_iter, cert.as_deref())?)
        }
        Command::Evolve { config, delta, a_exp, out } => (out, pipeline::run_evolve(&load(&config)?, delta, a_exp)?),
        Command::Measure { config, samples, seed, out } => (out, pipeline::run_measure(&load(&config)?, samples, seed)?),
        Command::Report { artifacts, out } => return report(&artifacts, &out, started),
    };
    write_run(&out, &run, started)?;
    Ok(run.outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Negative(msg)) => {
            eprintln!("negative result: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
