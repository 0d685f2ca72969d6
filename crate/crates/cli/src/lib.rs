//! Command-line front end for the `patrolgame` library.
//!
//! Every subcommand writes JSON to standard output (CSV for `sweep`), with
//! floats rounded to 12 significant digits and node labels starting at 1.
//! All randomness comes from `--seed`, which defaults to 0.

mod commands;
pub mod config;
pub mod output;
mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{Mode, ScenarioConfig};

/// Exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILED: i32 = 1;
    pub const INVALID_INPUT: i32 = 2;
    pub const UNSUPPORTED: i32 = 3;
    pub const GUARD: i32 = 4;
}

#[derive(Debug, Parser)]
#[command(
    name = "patrolgame",
    version,
    about = "Stochastic patrol strategies and defense allocation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Scenario file (JSON). Flags on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a patrol strategy for given attack durations.
    Solve(ScenarioArgs),
    /// Allocate a defense budget across nodes.
    Allocate(ScenarioArgs),
    /// Split an even budget between the sides of a bipartite graph.
    #[command(name = "co-optimize")]
    CoOptimize(ScenarioArgs),
    /// Monte Carlo estimate of capture probabilities.
    Simulate(ScenarioArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
    /// Emit a CSV grid of instances for plotting.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// complete, bipartite, star or general.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub np: Option<usize>,
    #[arg(long)]
    pub nq: Option<usize>,
    /// Directed edges, one-based: `1-2,2-3,3-1`.
    #[arg(long)]
    pub edges: Option<String>,
    /// Attack durations, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tau: Option<Vec<u32>>,
    /// Defense budget.
    #[arg(long = "B")]
    pub budget: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Agreement tolerance between closed form and recursion.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Include the per-pair capture matrix.
    #[arg(long)]
    pub emit_cdf: bool,
    /// Also report the uniform allocation floor(B/n) and the gain over it.
    #[arg(long)]
    pub compare_uniform: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Bounds,
    AllocOracle,
    Montecarlo,
    StarOpt,
    ClosedForm,
    All,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Largest node count (alloc-oracle) or side size (bounds) to sweep.
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub family: String,
    /// Ranges are inclusive `a..b`, a comma list, or a single value.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub np: Option<String>,
    #[arg(long)]
    pub nq: Option<String>,
    /// Uniform attack duration applied to every node.
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long = "B")]
    pub budget: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(exit::INVALID_INPUT, message)
    }
}

impl From<patrolgame::Error> for Failure {
    fn from(e: patrolgame::Error) -> Self {
        use patrolgame::Error::*;
        let code = match e {
            SearchSpaceExceeded { .. } => exit::GUARD,
            InfeasibleTau { .. }
            | TrivialGame(_)
            | BudgetOutOfRange { .. }
            | Parity(_)
            | DimensionMismatch { .. }
            | InvalidSpec(_)
            | NotStochastic(_)
            | OffSupport(..)
            | NotIrreducible => exit::INVALID_INPUT,
            Bracket { .. } | InvalidStart(_) => exit::FAILED,
        };
        let message = match e {
            // Node labels on the command line start at 1.
            InfeasibleTau { node, tau, min } => format!(
                "attack duration {tau} at node {} is below the required minimum {min}",
                node + 1
            ),
            other => other.to_string(),
        };
        Self::new(code, message)
    }
}

/// What a single invocation produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Caps rayon's global pool at `PATROLGAME_THREADS` when it is set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("PATROLGAME_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Fails only if the pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

pub fn run(cli: Cli) -> Outcome {
    let result = dispatch(&cli);
    let mut outcome = match result {
        Ok(stdout) => Outcome {
            code: exit::OK,
            stdout,
            stderr: String::new(),
        },
        Err(Reported {
            code,
            stdout,
            stderr,
        }) => Outcome {
            code,
            stdout,
            stderr,
        },
    };
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &outcome.stdout) {
            outcome.code = exit::FAILED;
            outcome
                .stderr
                .push_str(&format!("cannot write {}: {e}\n", path.display()));
        }
        outcome.stdout.clear();
    }
    outcome
}

/// A failure that may still carry output (a failing verify report, say).
struct Reported {
    code: i32,
    stdout: String,
    stderr: String,
}

impl From<Failure> for Reported {
    fn from(f: Failure) -> Self {
        Self {
            code: f.code,
            stdout: String::new(),
            stderr: format!("error: {}\n", f.message),
        }
    }
}

impl From<patrolgame::Error> for Reported {
    fn from(e: patrolgame::Error) -> Self {
        Failure::from(e).into()
    }
}

fn dispatch(cli: &Cli) -> Result<String, Reported> {
    let config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let empty = ScenarioArgs::default();
    match &cli.command {
        Some(Command::Solve(a)) => commands::solve(&merge(config, a)?, a),
        Some(Command::Allocate(a)) => commands::allocate(&merge(config, a)?, a, Mode::Allocate),
        Some(Command::CoOptimize(a)) => commands::allocate(&merge(config, a)?, a, Mode::CoOptimize),
        Some(Command::Simulate(a)) => commands::simulate(&merge(config, a)?, a),
        Some(Command::Verify(a)) => commands::verify(&config, a),
        Some(Command::Sweep(a)) => Ok(sweep::sweep(a)?),
        None => match config.mode {
            Some(Mode::Solve) => commands::solve(&config, &empty),
            Some(mode @ (Mode::Allocate | Mode::CoOptimize)) => {
                commands::allocate(&config, &empty, mode)
            }
            Some(Mode::Simulate) => commands::simulate(&config, &empty),
            Some(Mode::Verify) => commands::verify(&config, &VerifyArgs::default()),
            None => Err(Failure::usage("give a subcommand or a scenario file with a mode").into()),
        },
    }
}

/// Overlays command-line flags on the scenario file.
fn merge(mut config: ScenarioConfig, a: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    if let Some(family) = &a.family {
        config.graph = Some(graph_from_flags(family, a)?);
    } else if a.n.is_some() || a.np.is_some() || a.nq.is_some() || a.edges.is_some() {
        return Err(Failure::usage("graph size flags need --family"));
    }
    if let Some(tau) = &a.tau {
        config.tau = Some(tau.clone());
        config.budget = None;
    }
    if let Some(b) = a.budget {
        config.budget = Some(b);
        config.tau = None;
    }
    config.trials = a.trials.or(config.trials);
    config.seed = a.seed.or(config.seed);
    config.tol = a.tol.or(config.tol);
    Ok(config)
}

fn graph_from_flags(family: &str, a: &ScenarioArgs) -> Result<patrolgame::GraphSpec, Failure> {
    let edges = match &a.edges {
        Some(text) => Some(parse_edges(text)?),
        None => None,
    };
    let n = a.n.or(match (a.np, a.nq) {
        (Some(p), Some(q)) => Some(p + q),
        _ => None,
    });
    Ok(patrolgame::GraphSpec {
        family: family.to_string(),
        n,
        n_p: a.np,
        n_q: a.nq,
        edges,
    })
}

fn parse_edges(text: &str) -> Result<Vec<[usize; 2]>, Failure> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|e| {
            let (i, j) = e
                .split_once('-')
                .ok_or_else(|| Failure::usage(format!("edge '{e}' is not of the form i-j")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::usage(format!("bad node label in edge '{e}'")))
            };
            Ok([parse(i)?, parse(j)?])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_parse() {
        assert_eq!(
            parse_edges("1-2, 2-3,3-1").unwrap(),
            vec![[1, 2], [2, 3], [3, 1]]
        );
        assert!(parse_edges("1:2").is_err());
    }

    #[test]
    fn flags_override_config() {
        let config = ScenarioConfig {
            tau: Some(vec![2, 2]),
            seed: Some(3),
            ..Default::default()
        };
        let a = ScenarioArgs {
            budget: Some(5),
            ..Default::default()
        };
        let merged = merge(config, &a).unwrap();
        assert_eq!(merged.budget, Some(5));
        assert_eq!(merged.tau, None);
        assert_eq!(merged.seed, Some(3));
    }
}
