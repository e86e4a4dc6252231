mod commands;
mod suite;
mod window;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "shifts", version, about = "Finite-window experiments on shift spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Pattern counts and entropy estimates on one or more windows
    Entropy,
    /// Greedy maximal tiling of a window
    Tile,
    /// Gluing test between a window and a far translate
    Glue,
    /// Low-entropy approximation with matching r-ball patterns
    Approx,
    /// Chain of approximations and the level reaching a target entropy
    Chain,
    /// Density-capped levels, spacing and the marker split
    Spectrum,
    /// Exhaustive and sampled checks of the counting bounds
    Verify,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct Opts {
    /// SFT description (JSON)
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Tile set (JSON)
    #[arg(long, global = true)]
    pub tileset: Option<PathBuf>,
    /// Marker tile set for `spectrum` (JSON); default is one cube of side ⌈1/ε⌉
    #[arg(long, global = true)]
    pub marker_tileset: Option<PathBuf>,
    /// `60`, `10x10`, or a run of intervals `5..20`
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Window for the exhaustive checks in `spectrum`
    #[arg(long, global = true)]
    pub check_window: Option<String>,
    /// Ball radius
    #[arg(long, global = true)]
    pub r: Option<usize>,
    /// Entropy tolerance ε, in (0,1]
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Target entropy for `chain`
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Gluing margin; defaults to max(SFT margin, 2r)
    #[arg(long, global = true)]
    pub margin: Option<usize>,
    /// Alphabet size for `spectrum` when no --spec is given
    #[arg(long, global = true)]
    pub alphabet: Option<usize>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the sampled covers in `verify`
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output format; default depends on the command
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

/// Everything written to the output, plus whether all certificates held.
pub struct Output {
    pub body: String,
    pub pass: bool,
    pub summary: String,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or input files.
    Input(String),
    /// A certificate could not be produced; the body still gets written.
    Certificate(Output),
}

impl std::fmt::Debug for Output {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Output").field("pass", &self.pass).field("summary", &self.summary).finish()
    }
}

fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, body)?;
    fs::rename(&tmp, path)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SHIFTS_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("SHIFTS_THREADS: expected a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("SHIFTS_THREADS: {e}")))
}

fn emit(out: &Output, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, &out.body),
        None => std::io::stdout().lock().write_all(out.body.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| commands::run(cli.command, &cli.opts));
    let out = match result {
        Ok(out) => out,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Err(CliError::Certificate(out)) => out,
    };
    if let Err(e) = emit(&out, cli.opts.out.as_deref()) {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(1);
    }
    eprintln!("{}", out.summary);
    if out.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
