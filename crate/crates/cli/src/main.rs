mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use proper_actions::cartan::Mode;
use proper_actions::chamber::DEFAULT_RANK_CAP;
use serde::Serialize;

use report::CommandReport;

/// Decide whether free discrete subgroups act properly on `G/H`, and build
/// and verify Schottky witnesses in `SL(n, R)`.
#[derive(Parser, Debug, Serialize)]
#[command(name = "proper", version)]
struct Cli {
    /// Print the machine-readable report instead of a table.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for word-ball enumeration (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest real rank whose Weyl group may be enumerated.
    #[arg(long, global = true, env = "PROPER_RANK_CAP", default_value_t = DEFAULT_RANK_CAP)]
    rank_cap: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Decide the existence question for one catalog family.
    Decide(DecideArgs),
    /// Build a certified Schottky witness for a positive target.
    Construct(ConstructArgs),
    /// Check a witness on a word ball and fill in its word-ball section.
    Verify(VerifyArgs),
    /// Numeric probes.
    #[command(subcommand)]
    Probe(ProbeCommand),
    /// Decide every catalog family up to a dimension bound.
    Catalog(CatalogArgs),
}

#[derive(Args, Debug, Serialize)]
struct DecideArgs {
    /// Family tag, e.g. `sl_n_over_sl_m_x_i`.
    #[arg(long)]
    family: String,
    /// Parameters, e.g. `n=3,m=2`.
    #[arg(long, default_value = "")]
    params: String,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Group,
    Semigroup,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Group => Mode::Group,
            ModeArg::Semigroup => Mode::Semigroup,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct ConstructArgs {
    /// Dimension of the ambient `SL(n, R)`.
    #[arg(long)]
    n: usize,
    /// Target space as `FAMILY:PARAMS` (or `FAMILY/PARAMS`).
    #[arg(long)]
    target: String,
    /// Number of generators.
    #[arg(long, default_value_t = 2)]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest power tried by the power search.
    #[arg(long, default_value_t = 64)]
    max_m: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Group)]
    mode: ModeArg,
    /// Word length of the check that drives cone-escape escalation.
    #[arg(long, default_value_t = 6)]
    check_len: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    witness: PathBuf,
    #[arg(long, default_value_t = 6)]
    max_len: usize,
    /// Margin family as `FAMILY:PARAMS`; defaults to the witness target.
    #[arg(long)]
    margin: Option<String>,
    /// Skip the properness check even when the witness has a target.
    #[arg(long, conflicts_with = "margin")]
    no_margin: bool,
    /// Defaults to the witness mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Write the witness with its word-ball section filled in.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum ProbeCommand {
    /// Sup-distance between `μ(gᵖ f g⁻ᵖ)` and `μ(gᵖ f′ g⁻ᵖ)` for `p ≤ pmax`.
    Growth(GrowthArgs),
    /// Words of a witness whose margin is at most `ln R`, per length.
    Census(CensusArgs),
}

#[derive(Args, Debug, Serialize)]
struct GrowthArgs {
    #[arg(long, requires_all = ["f", "fprime"], conflicts_with = "sample_n")]
    g: Option<PathBuf>,
    #[arg(long)]
    f: Option<PathBuf>,
    #[arg(long)]
    fprime: Option<PathBuf>,
    /// Use the seeded `SL(n)` sample `(g, f, f⁻¹)` instead of files.
    #[arg(long, required_unless_present = "g")]
    sample_n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    pmax: usize,
}

#[derive(Args, Debug, Serialize)]
struct CensusArgs {
    #[arg(long)]
    witness: PathBuf,
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 6)]
    max_len: usize,
    /// Margin family as `FAMILY:PARAMS`.
    #[arg(long)]
    margin: String,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Args, Debug, Serialize)]
struct CatalogArgs {
    /// Largest `n` with `G ⊆ SL(n, R)` in the sweep.
    #[arg(long, default_value_t = 9)]
    max_n: usize,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Decide(_) => "decide",
            Command::Construct(_) => "construct",
            Command::Verify(_) => "verify",
            Command::Probe(ProbeCommand::Growth(_)) => "probe growth",
            Command::Probe(ProbeCommand::Census(_)) => "probe census",
            Command::Catalog(_) => "catalog",
        }
    }

    /// Exact commands always print JSON.
    fn is_exact(&self) -> bool {
        matches!(self, Command::Decide(_) | Command::Catalog(_))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot start {k} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let inputs = serde_json::to_value(&cli).unwrap_or_default();
    let start = Instant::now();
    let result = commands::run(&cli);
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;
    let as_json = cli.json || cli.command.is_exact();
    let (done, failure) = match result {
        Ok(done) => {
            let failure = done.failure;
            (Some((done.outcome, done.table)), failure)
        }
        Err(e) => (None, Some(e)),
    };
    let outcome = match (&done, &failure) {
        (Some((o, _)), _) => o.clone(),
        (None, Some(e)) => report::error_outcome(e),
        (None, None) => serde_json::Value::Null,
    };
    if as_json {
        let report = CommandReport::new(cli.command.name(), inputs, outcome, timing_ms);
        println!("{}", report.to_json());
    } else if let Some((_, table)) = &done {
        print!("{table}");
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
