use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddmd::DmdError;

mod decompose;
mod fixtures;

#[derive(Parser)]
#[command(name = "ddmd", version, about = "Data-driven modal decomposition with residual certificates")]
struct Cli {
    /// Worker threads for the refinement loop (output does not depend on it).
    #[arg(long, global = true, env = "DMD_NUM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose snapshot data and write a spectrum report.
    Decompose(DecomposeArgs),
    /// Run the oracle-driven verification suite.
    Verify(VerifyArgs),
    /// Write the seeded DMM1 fixture set and its manifest.
    Fixtures(FixturesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Dmd,
    Rrr,
    RrrCompressed,
    Exact,
    Fb,
    Weighted,
    Weighted2,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RefineArg {
    None,
    All,
    Cap(f64),
}

fn parse_refine(s: &str) -> Result<RefineArg, String> {
    match s {
        "none" => Ok(RefineArg::None),
        "all" => Ok(RefineArg::All),
        _ => match s.strip_prefix("cap=").map(str::parse::<f64>) {
            Some(Ok(c)) if c >= 0.0 => Ok(RefineArg::Cap(c)),
            _ => Err(format!("expected none, all or cap=REAL, got {s:?}")),
        },
    }
}

#[derive(Args)]
pub struct DecomposeArgs {
    #[arg(long, value_enum, default_value = "rrr")]
    pub variant: VariantArg,
    /// Snapshot matrix X (DMM1, or CSV by extension).
    #[arg(long, requires = "y", conflicts_with = "seq")]
    pub x: Option<PathBuf>,
    /// Shifted snapshots Y.
    #[arg(long, requires = "x")]
    pub y: Option<PathBuf>,
    /// Sequential trajectory f_1..f_{m+1}.
    #[arg(long, required_unless_present = "x")]
    pub seq: Option<PathBuf>,
    /// Spectral truncation threshold; default max(n, m+1)·u.
    #[arg(long, conflicts_with = "rank")]
    pub eps: Option<f64>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub no_scale: bool,
    #[arg(long, value_parser = parse_refine, default_value = "all")]
    pub refine: RefineArg,
    /// Mark pairs with residual at most this value as selected.
    #[arg(long)]
    pub select_cap: Option<f64>,
    /// State-space weight: a vector of diagonal entries or a dense Gram matrix.
    #[arg(long)]
    pub weight: Option<PathBuf>,
    /// Snapshot-space weight for weighted2.
    #[arg(long)]
    pub weight_n: Option<PathBuf>,
    /// The weight files hold the inverse weight.
    #[arg(long)]
    pub weight_inverse: bool,
    /// Sampling interval; adds log(λ)/dt to each pair.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub modes_out: Option<PathBuf>,
    /// JSON report; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot-ready CSV of Ritz values and residuals.
    #[arg(long)]
    pub plot_csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 99)]
    m: usize,
    #[arg(long, default_value_t = 20240)]
    seed: u64,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixturesArgs {
    #[arg(long, default_value = "fixtures")]
    dir: PathBuf,
    #[arg(long, default_value_t = 20240)]
    seed: u64,
}

fn verify(args: &VerifyArgs) -> Result<bool, DmdError> {
    use ddmd::verify::suite;
    let cfg = suite::SuiteConfig {
        seed: args.seed,
        n: args.n,
        m: args.m,
    };
    let outcomes = suite::run(&cfg);
    let table = suite::render(&cfg, &outcomes);
    print!("{table}");
    if let Some(path) = &args.out {
        std::fs::write(path, &table).map_err(|source| DmdError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(outcomes.iter().all(|o| o.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ddmd::linalg::init_backend();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(4);
        }
    }
    let result = match &cli.command {
        Command::Decompose(a) => decompose::run(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Fixtures(a) => fixtures::write(&a.dir, a.seed).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
