use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use marll_core::convergence::{Period, Window};
use marll_core::engine::QSharing;
use marll_core::metrics::EdgeLength;
use marll_core::params::Params;

#[derive(Debug, Parser)]
#[command(name = "marll", version, about = "Graph layouts by classic spring embedders and multi-agent Q-learning")]
pub struct Cli {
    /// Log progress to stderr (RUST_LOG takes precedence).
    #[arg(short, long, global = true)]
    pub verbose: bool,

    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lay out one graph and print the positions and quality metrics.
    Layout(LayoutArgs),
    /// Run repeated seeded trials and write aggregate metrics as CSV.
    Eval(EvalArgs),
    /// Serve live layout sessions over TCP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    /// Graph file (edge list or .json) or built-in id such as `karate`,
    /// `g2`, `grid:5x5`.
    #[arg(short, long)]
    pub graph: Option<String>,

    /// fr, dgc, sm, marl-fr, marl-dgc, marl-local-stress,
    /// marl-global-stress, marl-hybrid or marl-custom.
    #[arg(short, long, default_value = "marl-fr")]
    pub algo: String,

    #[arg(short, long, env = "MARLL_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Also write the graph with its positions to this JSON file.
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Lock nodes whose positions are stored in the input (MARL only).
    #[arg(long)]
    pub lock_given: bool,

    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Graphs to evaluate; repeat or separate with commas.
    #[arg(short, long = "graph", value_delimiter = ',')]
    pub graphs: Vec<String>,

    /// Algorithms to run; repeat or separate with commas.
    #[arg(short, long = "algo", value_delimiter = ',', default_values_t = ["fr".to_string(), "marl-fr".to_string()])]
    pub algos: Vec<String>,

    /// Trials per graph and algorithm.
    #[arg(short, long, default_value_t = 100)]
    pub runs: usize,

    /// Seed of the first trial; trial i uses seed + i.
    #[arg(short, long, env = "MARLL_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for trials (default: all cores).
    #[arg(short, long)]
    pub jobs: Option<usize>,

    /// Aggregate CSV destination (default: stdout).
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Also write one CSV row per trial here.
    #[arg(long)]
    pub trials: Option<PathBuf>,

    /// Also write a JSON summary with MARL/classic ratios here.
    #[arg(long)]
    pub summary: Option<PathBuf>,

    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// 0 picks a free port and prints it.
    #[arg(short, long, default_value_t = 7878)]
    pub port: u16,

    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,

    /// Largest graph a session may be created on.
    #[arg(long, default_value_t = 20_000)]
    pub max_nodes: usize,

    /// Longest accepted message line, bytes.
    #[arg(long, default_value_t = 4 << 20)]
    pub max_line: usize,
}

/// Overrides for every tunable. Unset flags keep the value from `--params`
/// or the built-in default.
#[derive(Debug, Default, Args)]
#[command(next_help_heading = "Parameters")]
pub struct ParamArgs {
    /// JSON file with a full or partial parameter set.
    #[arg(long = "params", value_name = "FILE")]
    pub file: Option<PathBuf>,

    /// FR optimal distance.
    #[arg(long)]
    pub k: Option<f64>,
    /// DGC ideal edge length.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// DGC elastic constant.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// DGC repulsion constant.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Local stress neighbourhood, hops.
    #[arg(long)]
    pub p_hops: Option<u32>,
    /// Custom reward weights: overlaps, crossings, crowding, edge length,
    /// angles. Must sum to 1.
    #[arg(long, value_delimiter = ',')]
    pub omega: Option<Vec<f64>>,
    /// Custom reward edge length.
    #[arg(long)]
    pub length: Option<f64>,
    /// Hybrid mix; 1 is pure FR force.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Pixels per hop in stress computations.
    #[arg(long)]
    pub stress_unit: Option<f64>,
    /// Node radius of the custom reward.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Side of the initial random frame.
    #[arg(long)]
    pub frame: Option<f64>,

    /// Exploration rate.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Learning rate.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Discount factor.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Accept some worsening moves.
    #[arg(long)]
    pub metropolis: Option<bool>,
    /// Reward scale of the acceptance test.
    #[arg(long)]
    pub metropolis_scale: Option<f64>,
    /// `shared` or `per-agent` Q-tables.
    #[arg(long, value_parser = parse_sharing)]
    pub q_sharing: Option<QSharing>,

    /// Initial temperature (step length), pixels.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Cooling factor per period.
    #[arg(long)]
    pub cooling_factor: Option<f64>,
    /// Cooling period: `graph` for n + m, or a number of iterations.
    #[arg(long, value_parser = parse_period)]
    pub cooling_period: Option<Period>,
    /// Lower bound on the cooling period.
    #[arg(long)]
    pub min_period: Option<u64>,

    /// Iteration bound M.
    #[arg(long)]
    pub max_iterations: Option<u64>,
    /// Average displacement threshold A, pixels.
    #[arg(long)]
    pub avg_displacement: Option<f64>,
    /// Displacement rate threshold, pixels.
    #[arg(long)]
    pub displacement_rate: Option<f64>,
    /// Relative energy change threshold.
    #[arg(long)]
    pub stress_ratio: Option<f64>,
    /// Measurement window: `cooling` or a number of iterations.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<Window>,

    /// Node radius for the overlap metric.
    #[arg(long)]
    pub metric_radius: Option<f64>,
    /// Reference length of the edge metric: `best-fit` or pixels.
    #[arg(long, value_parser = parse_edge_length)]
    pub edge_length: Option<EdgeLength>,
}

fn parse_sharing(s: &str) -> Result<QSharing, String> {
    match s {
        "shared" => Ok(QSharing::Shared),
        "per-agent" => Ok(QSharing::PerAgent),
        _ => Err("expected `shared` or `per-agent`".into()),
    }
}

fn parse_period(s: &str) -> Result<Period, String> {
    if s == "graph" {
        return Ok(Period::GraphSize);
    }
    s.parse().map(Period::Iterations).map_err(|_| "expected `graph` or an iteration count".into())
}

fn parse_window(s: &str) -> Result<Window, String> {
    if s == "cooling" {
        return Ok(Window::CoolingPeriod);
    }
    s.parse().map(Window::Iterations).map_err(|_| "expected `cooling` or an iteration count".into())
}

fn parse_edge_length(s: &str) -> Result<EdgeLength, String> {
    if s == "best-fit" {
        return Ok(EdgeLength::BestFit);
    }
    s.parse().map(EdgeLength::Fixed).map_err(|_| "expected `best-fit` or a length".into())
}

impl ParamArgs {
    pub fn check(&self) -> Result<(), String> {
        match &self.omega {
            Some(w) if w.len() != 5 => Err(format!("--omega takes five weights, got {}", w.len())),
            _ => Ok(()),
        }
    }

    /// Applies the set flags on top of `base`. Call [`ParamArgs::check`]
    /// first.
    pub fn apply(&self, mut p: Params) -> Params {
        fn set<T: Copy>(dst: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *dst = v;
            }
        }
        set(&mut p.k, self.k);
        set(&mut p.lambda, self.lambda);
        set(&mut p.zeta, self.zeta);
        set(&mut p.mu, self.mu);
        set(&mut p.p_hops, self.p_hops);
        if let Some(w) = &self.omega {
            // length checked by `check`
            p.omega.copy_from_slice(&w[..5]);
        }
        set(&mut p.length, self.length);
        set(&mut p.beta, self.beta);
        set(&mut p.stress_unit, self.stress_unit);
        set(&mut p.radius, self.radius);
        set(&mut p.frame, self.frame);
        set(&mut p.learn.epsilon, self.epsilon);
        set(&mut p.learn.alpha, self.alpha);
        set(&mut p.learn.gamma, self.gamma);
        set(&mut p.learn.metropolis, self.metropolis);
        set(&mut p.learn.metropolis_scale, self.metropolis_scale);
        set(&mut p.learn.q_sharing, self.q_sharing);
        set(&mut p.learn.cooling.initial, self.temperature);
        set(&mut p.learn.cooling.factor, self.cooling_factor);
        set(&mut p.learn.cooling.period, self.cooling_period);
        set(&mut p.learn.cooling.min_period, self.min_period);
        set(&mut p.convergence.max_iterations, self.max_iterations);
        set(&mut p.convergence.avg_displacement, self.avg_displacement);
        set(&mut p.convergence.displacement_rate, self.displacement_rate);
        set(&mut p.convergence.stress_ratio, self.stress_ratio);
        set(&mut p.convergence.window, self.window);
        set(&mut p.metrics.radius, self.metric_radius);
        set(&mut p.metrics.edge_length, self.edge_length);
        p
    }
}
