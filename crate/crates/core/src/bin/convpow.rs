use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use convpow::maximal::LatticeSequence;
use convpow::report::{self, AnalyzeOptions, MaximalOptions, Run, VerifyBoundsOptions};
use convpow::zoo::MeasureSpec;

const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "convpow", version, about = "Convolution powers of measures on the integers")]
struct Cli {
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral, tail and majorant diagnostics.
    Analyze {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = AnalyzeOptions::default().grid_size)]
        grid_size: usize,
    },
    /// Kernel decay and smoothness constants.
    VerifyBounds {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = report::DEFAULT_KERNEL_N_MAX)]
        n_max: u64,
        #[arg(long, default_value_t = report::DEFAULT_X_MAX)]
        x_max: i64,
        #[arg(long, default_value_t = report::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = report::DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Weak (1,1) level-set curve of the truncated maximal function.
    Maximal {
        #[command(flatten)]
        io: Io,
        /// Test sequence as JSON `{offset, weights}`; defaults to the unit mass at 0.
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long, default_value_t = report::DEFAULT_MAXIMAL_N_MAX)]
        n_max: u64,
        #[arg(long, default_value_t = convpow::maximal::DEFAULT_LAMBDA_MIN)]
        lambda_min: f64,
    },
}

#[derive(Args)]
struct Io {
    /// Measure spec as JSON `{kind, params, K}`.
    #[arg(long)]
    spec: PathBuf,
    /// Report path; CSV side files are written next to it.
    #[arg(long)]
    out: PathBuf,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn execute(command: Command) -> Result<(Run, PathBuf), String> {
    let (run, out) = match command {
        Command::Analyze { io, grid_size } => {
            let spec: MeasureSpec = read_json(&io.spec)?;
            (report::run_analyze(&spec, AnalyzeOptions { grid_size }), io.out)
        }
        Command::VerifyBounds {
            io,
            n_max,
            x_max,
            delta,
            alpha,
        } => {
            let spec: MeasureSpec = read_json(&io.spec)?;
            let options = VerifyBoundsOptions {
                n_max,
                x_max,
                delta,
                alpha,
            };
            (report::run_verify_bounds(&spec, options), io.out)
        }
        Command::Maximal {
            io,
            phi,
            n_max,
            lambda_min,
        } => {
            let spec: MeasureSpec = read_json(&io.spec)?;
            let phi = match phi {
                Some(path) => read_json::<LatticeSequence>(&path)?,
                None => LatticeSequence::delta(0),
            };
            let options = MaximalOptions { n_max, lambda_min, phi };
            (report::run_maximal(&spec, &options), io.out)
        }
    };
    run.map(|r| (r, out)).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    let (run, out) = match execute(cli.command) {
        Ok(v) => v,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    if let Err(e) = run.report.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run.write(&out) {
        Ok(paths) => {
            println!("{}", out.display());
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {}: {e}", out.display());
            return ExitCode::from(EXIT_INPUT);
        }
    }
    for finding in &run.report.findings {
        eprintln!("finding: {finding}");
    }
    ExitCode::from(run.report.exit_code() as u8)
}
