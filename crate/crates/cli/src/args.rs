use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use egyptian::Rational;

/// Count, analyse and construct Egyptian fraction representations.
#[derive(Debug, Parser)]
#[command(name = "egyptian", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Output format. CSV is available for `entropy` and `modcover`.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write output here instead of stdout. Defaults to a file in
    /// $EGYPTIAN_OUT_DIR when that variable is set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Wall-clock limit in seconds; exceeding it exits with code 3.
    #[arg(long, global = true)]
    pub budget: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountMode {
    Exact,
    AtMost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountMethod {
    /// Currently meet-in-the-middle, which covers every n the brute force does.
    Auto,
    Brute,
    Mitm,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Count subsets of [n] whose reciprocals sum to (or at most) x.
    Count {
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_rational)]
        x: Rational,
        #[arg(long, value_enum, default_value_t = CountMode::Exact)]
        mode: CountMode,
        #[arg(long, value_enum, default_value_t = CountMethod::Auto)]
        method: CountMethod,
    },
    /// Maximum-entropy inclusion profile on [n] with reciprocal budget x.
    Entropy {
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_rational)]
        x: Rational,
    },
    /// Continuous Lagrange multiplier λ for budget x.
    Lambda {
        #[arg(long, value_parser = parse_rational)]
        x: Rational,
    },
    /// Growth constant c_x.
    Cx {
        #[arg(long, value_parser = parse_rational)]
        x: Rational,
    },
    /// Monte Carlo estimate of Pr[Z ≤ x] under the profile for (n, x).
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_rational)]
        x: Rational,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Residues reachable as sums of inverses of a subset of an interval mod q.
    Modcover {
        #[arg(long)]
        q: u64,
        /// Interval `lo:hi`; defaults to [⌈√q⌉, 2⌈√q⌉].
        #[arg(long, value_parser = parse_interval)]
        interval: Option<(u64, u64)>,
        /// Largest subset size; unbounded by default.
        #[arg(long)]
        smax: Option<usize>,
        /// Also return a minimum subset hitting this residue.
        #[arg(long)]
        target: Option<u64>,
    },
    /// Construct verified representations of x with denominators in [n].
    Construct {
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_rational)]
        x: Rational,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of witnesses, using seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Write the full trace(s) to this JSON file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Count t-powersmooth integers up to a limit.
    Sieve {
        #[arg(long)]
        limit: u64,
        #[arg(long)]
        t: u64,
    },
    /// Check that a set of denominators represents x exactly.
    Verify {
        #[arg(long, value_parser = parse_rational)]
        x: Rational,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        set: Vec<u64>,
        #[arg(long)]
        n: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Count { .. } => "count",
            Command::Entropy { .. } => "entropy",
            Command::Lambda { .. } => "lambda",
            Command::Cx { .. } => "cx",
            Command::Simulate { .. } => "simulate",
            Command::Modcover { .. } => "modcover",
            Command::Construct { .. } => "construct",
            Command::Sieve { .. } => "sieve",
            Command::Verify { .. } => "verify",
        }
    }
}

/// `[+-]?digits(/digits)?` with a non-zero denominator.
pub fn parse_rational(text: &str) -> Result<Rational, String> {
    text.parse::<Rational>().map_err(|e| e.to_string())
}

fn parse_interval(text: &str) -> Result<(u64, u64), String> {
    let (lo, hi) = text.split_once(':').ok_or("expected lo:hi")?;
    let lo: u64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower end {lo:?}"))?;
    let hi: u64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper end {hi:?}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("need 1 ≤ lo ≤ hi, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}
