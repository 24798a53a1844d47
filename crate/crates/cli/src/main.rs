//! `evtestbed`: generate corpora, run scenarios, compare reports, and serve
//! betting sessions.

mod commands;
mod error;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "evtestbed", version, about = "Evidential reasoning testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus from a generator model.
    Gen(GenArgs),
    /// Print the sample statements one query would see.
    Summarize(SummarizeArgs),
    /// Run a scenario and write its report.
    Run(RunArgs),
    /// Merge report files and mark the net/yield frontier.
    Compare(CompareArgs),
    /// Serve betting sessions over HTTP.
    Serve(ServeArgs),
}

/// Where the corpus vocabulary and rules come from.
#[derive(Args, Clone)]
pub struct Inputs {
    /// Generator model file; its vocabulary checks the corpus and its rules
    /// are used unless `--rules` is given. Defaults to the built-in model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Rule file.
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub inputs: Inputs,
    /// Number of snapshots.
    #[arg(long, default_value_t = 300)]
    pub count: usize,
    /// Overrides the model's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Corpus output; stdout if absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write the model's rules here.
    #[arg(long)]
    pub rules_out: Option<PathBuf>,
    /// Also write the model itself here.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Enumeration {
    Closed,
    AllSubsets,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Sweep {
    /// Forced-mode run with per-method and pooled correctness.
    Calibration,
    /// Kyburg at .7, .9 and adaptive on one stream.
    Confidence,
    /// One run per `--counts` announced-property count.
    Announced,
    /// One run per `--sizes` data size on a shared stream.
    DataSize,
}

/// Scenario settings; each flag overrides the `--config` file.
#[derive(Args, Clone)]
pub struct ScenarioArgs {
    /// JSON scenario config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    /// Snapshots given to the programs.
    #[arg(long)]
    pub data_points: Option<usize>,
    /// Snapshots held out of the query pool.
    #[arg(long)]
    pub data_reserve: Option<usize>,
    /// Announced properties per query.
    #[arg(long)]
    pub announced: Option<usize>,
    /// Lottery sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub pots: Option<Vec<f64>>,
    /// `fixed(.1)`, `per-method(kyburg)`, `average`, `sweep` or `sweep(.2,.5)`.
    #[arg(long)]
    pub odds: Option<String>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long)]
    pub dempster_confidence: Option<f64>,
    /// Interval rule: `narrowest` or `wilson`.
    #[arg(long)]
    pub rule: Option<String>,
    /// Number of queries.
    #[arg(long)]
    pub repetitions: Option<usize>,
    /// Method names, comma separated, e.g. `naive-average,kyburg(.7,.9)`.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long, value_enum)]
    pub enumeration: Option<Enumeration>,
    /// Class cap; `0` removes it.
    #[arg(long)]
    pub max_classes: Option<usize>,
    /// Candidate targets as atoms, e.g. `"(logged-on 'cox) (logged-on 'ng)"`.
    #[arg(long)]
    pub targets: Option<String>,
    /// Bet on every offer.
    #[arg(long)]
    pub forced: bool,
}

#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub inputs: Inputs,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, value_enum)]
    pub sweep: Option<Sweep>,
    /// Announced counts for `--sweep announced`.
    #[arg(long, value_delimiter = ',', default_value = "3,8,16")]
    pub counts: Vec<usize>,
    /// Data sizes for `--sweep data-size`.
    #[arg(long, value_delimiter = ',', default_value = "20,60")]
    pub sizes: Vec<usize>,
    /// Report output; stdout if absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Per-query trace as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct SummarizeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub inputs: Inputs,
    /// Announced atoms, e.g. `"(weekend) (on 'cox 'castor)"`.
    #[arg(long)]
    pub announced: String,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value_t = 60)]
    pub data_points: usize,
    /// Seed of the data split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "closed")]
    pub enumeration: Enumeration,
    #[arg(long)]
    pub max_classes: Option<usize>,
    /// Also print every method's belief at this confidence.
    #[arg(long)]
    pub beliefs: bool,
    #[arg(long, default_value_t = 0.9)]
    pub confidence: f64,
}

#[derive(Args)]
pub struct CompareArgs {
    /// Report files written by `run`.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub inputs: Inputs,
    /// Seed of the frozen query stream.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Queries per session.
    #[arg(long, default_value_t = 40)]
    pub queries: usize,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Directory of static files served beside the API.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Directory for session choice logs.
    #[arg(long)]
    pub sessions: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result: Result<(), CliError> = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Summarize(a) => commands::summarize(a),
        Command::Run(a) => commands::run(a),
        Command::Compare(a) => commands::compare(a),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evtestbed: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
