// SPDX-License-Identifier: Apache-2.0

//! `subtrack`: run subspace-tracking experiments and the GROUSE /
//! incremental-SVD equivalence check.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical or validation failure
//! (including a failed equivalence check).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use subtrack::datagen::StreamConfig;
use subtrack::harness::{
    self, io as files, Algorithm, EquivalenceConfig, ExperimentConfig, SnapshotSpec,
};
use subtrack::StepPolicy;

#[derive(Parser)]
#[command(
    name = "subtrack",
    version,
    about = "Subspace tracking from partially observed vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a synthetic (or imported) stream and write a per-step trace CSV.
    Run(RunArgs),
    /// Run GROUSE and the partial-data incremental SVD in lockstep over many
    /// seeded trials and report the largest per-step distance.
    Equivalence(EquivalenceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Grouse,
    IsvdFull,
    IsvdPartial,
    Brand,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Grouse => Algorithm::Grouse,
            AlgoArg::IsvdFull => Algorithm::IsvdFull,
            AlgoArg::IsvdPartial => Algorithm::IsvdPartial,
            AlgoArg::Brand => Algorithm::Brand,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StepArg {
    Greedy,
    Fixed,
}

#[derive(Args)]
struct StreamArgs {
    /// Ambient dimension.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Subspace dimension.
    #[arg(long, default_value_t = 10)]
    d: usize,
    /// Revealed entries per vector.
    #[arg(long, default_value_t = 60)]
    obs: usize,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Seed of the ground-truth subspace and the observation stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed of the random initial estimate.
    #[arg(long, default_value_t = 0)]
    init_seed: u64,
}

impl StreamArgs {
    fn config(&self, steps: usize) -> StreamConfig {
        StreamConfig {
            n: self.n,
            d: self.d,
            num_steps: steps,
            obs_count: self.obs,
            noise_stddev: self.noise,
            seed: self.seed,
            init_seed: self.init_seed,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "grouse")]
    algo: AlgoArg,
    /// GROUSE step rule.
    #[arg(long, value_enum, default_value = "greedy")]
    step: StepArg,
    /// Step size for `--step fixed`.
    #[arg(long)]
    eta: Option<f64>,
    /// Down-weighting factor for `--algo brand`.
    #[arg(long, default_value_t = harness::DEFAULT_DECAY)]
    decay: f64,
    #[command(flatten)]
    stream: StreamArgs,
    /// Number of stream vectors (ignored with --import-stream).
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Trace CSV path; stdout when omitted. Metadata goes to `<out>.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save the generated observation stream to this file.
    #[arg(long, conflicts_with = "import_stream")]
    export_stream: Option<PathBuf>,
    /// Replay observations from this file instead of generating them.
    #[arg(long)]
    import_stream: Option<PathBuf>,
    /// Write the basis to `<out>.step<t>.basis` every this many steps.
    #[arg(long, requires = "out")]
    snapshot_every: Option<usize>,
}

#[derive(Args)]
struct EquivalenceArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    stream: StreamArgs,
    /// Steps per trial.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// The check passes when the largest distance is strictly below this.
    #[arg(long, default_value_t = 1e-9)]
    threshold: f64,
    /// Per-trial report CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Run(subtrack::Error),
}

impl From<subtrack::Error> for Failure {
    fn from(e: subtrack::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.into())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        Failure::Run(subtrack::Error::Io(io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        )))
    })
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let step = match (args.step, args.eta) {
        (StepArg::Greedy, None) => StepPolicy::Greedy,
        (StepArg::Greedy, Some(_)) => {
            return Err(Failure::Usage(
                "--eta only applies with --step fixed".into(),
            ))
        }
        (StepArg::Fixed, Some(eta)) => StepPolicy::Fixed(eta),
        (StepArg::Fixed, None) => return Err(Failure::Usage("--step fixed needs --eta".into())),
    };
    if args.snapshot_every == Some(0) {
        return Err(Failure::Usage("--snapshot-every must be positive".into()));
    }

    let observations = match &args.import_stream {
        Some(path) => files::load_stream(path)?,
        None => Vec::new(),
    };
    let steps = match &args.import_stream {
        Some(_) => observations.len(),
        None => args.steps,
    };
    let mut config = ExperimentConfig::new(args.algo.into(), args.stream.config(steps));
    config.step = step;
    config.decay = args.decay;
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;

    let observations = match &args.import_stream {
        Some(_) => observations,
        None => harness::generated_observations(&config.stream)?,
    };
    if let Some(path) = &args.export_stream {
        files::save_stream(path, &observations)?;
    }

    let snapshots = args
        .snapshot_every
        .zip(args.out.as_ref())
        .map(|(every, out)| SnapshotSpec {
            every,
            prefix: out.clone(),
        });
    let trace = match &args.out {
        Some(path) => {
            let trace =
                harness::run_experiment(&config, &observations, create(path)?, snapshots.as_ref())?;
            fs::write(sidecar(path), trace.metadata_json() + "\n")?;
            trace
        }
        None => {
            let stdout = io::stdout().lock();
            harness::run_experiment(&config, &observations, BufWriter::new(stdout), None)?
        }
    };

    let final_error = trace
        .final_error()
        .map_or_else(|| "n/a".to_string(), |e| format!("{e:.3e}"));
    eprintln!(
        "{}: {} steps, final error {final_error}, {:.3}s",
        config.algorithm.name(),
        trace.records.len(),
        trace.metadata.duration_secs
    );
    Ok(())
}

fn equivalence(args: EquivalenceArgs) -> Result<bool, Failure> {
    let config = EquivalenceConfig {
        trials: args.trials,
        stream: args.stream.config(args.steps),
        threshold: args.threshold,
    };
    config
        .stream
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if !(config.threshold >= 0.0) {
        return Err(Failure::Usage("--threshold must be nonnegative".into()));
    }
    let report = harness::check_equivalence(&config)?;
    if let Some(path) = &args.out {
        report.write_csv(create(path)?)?;
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{}", report.summary())?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let result = match cli.command {
        Command::Run(args) => run(args).map(|()| true),
        Command::Equivalence(args) => equivalence(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}
