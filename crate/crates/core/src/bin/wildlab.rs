use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use wildlab::io::{render_run_dir, run_command, Command, ExperimentConfig, Outcome, RunOptions, Status};
use wildlab::{ConfigError, RunError};

/// Numerical laboratory for wild initial data of barotropic Euler on the torus.
#[derive(Debug, Parser)]
#[command(name = "wildlab", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parent directory for content-addressed run directories.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Overrides the seed stored in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    /// Exit with status 4 when a certification fails.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Integrate the smooth solution and store snapshots.
    Solve,
    /// Certify zero and plane-wave subsolution candidates.
    Certify,
    /// Compute the wild window and the first eps giving a nonempty one.
    Window,
    /// Choose the energy level for an L2 budget and sweep wave frequencies.
    Budget,
    /// Render the reports of a run directory as text and CSV.
    Report {
        /// Run directory; defaults to the one addressed by --config.
        run_dir: Option<PathBuf>,
    },
}

struct Failure {
    class: &'static str,
    message: String,
    code: u8,
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure {
            class: e.class(),
            message: e.to_string(),
            code: e.exit_code() as u8,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        RunError::from(e).into()
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn fail(class: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("error[{class}]: {}", one_line(message));
    ExitCode::from(code)
}

fn execute(cli: &Cli) -> Result<(Vec<String>, Status), Failure> {
    let cmd = match &cli.command {
        Sub::Solve => Command::Solve,
        Sub::Certify => Command::Certify,
        Sub::Window => Command::Window,
        Sub::Budget => Command::Budget,
        Sub::Report { run_dir: Some(dir) } => {
            return Ok((render_run_dir(dir)?, Status::Ok));
        }
        Sub::Report { run_dir: None } => Command::Report,
    };
    let path = cli.config.as_ref().ok_or_else(|| {
        ConfigError::Missing(format!("`{}` needs --config <path>", cmd.name()))
    })?;
    let cfg = ExperimentConfig::load(path)?;
    let opts = RunOptions {
        out: cli.out.clone(),
        seed: cli.seed,
        strict: cli.strict,
    };
    let Outcome {
        run_dir,
        mut summary,
        status,
        ..
    } = run_command(cmd, &cfg, &opts)?;
    summary.insert(0, format!("run directory: {}", run_dir.display()));
    Ok((summary, status))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return fail("usage", first, 2);
        }
    };

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            if n == 0 {
                return fail("config.invalid", "--threads must be at least 1", 2);
            }
            b = b.num_threads(n);
        }
        match b.build() {
            Ok(p) => p,
            Err(e) => return fail("runtime", &e.to_string(), 2),
        }
    };

    match pool.install(|| execute(&cli)) {
        Ok((summary, status)) => {
            if !cli.quiet {
                for line in &summary {
                    println!("{line}");
                }
            }
            match status {
                Status::Ok => ExitCode::SUCCESS,
                Status::NumericalAbort(m) => fail("numerical.abort", &m, 3),
                Status::CertificationFailed(m) => fail("certification", &m, 4),
            }
        }
        Err(f) => fail(f.class, &f.message, f.code),
    }
}
