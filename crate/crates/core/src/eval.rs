//! Repeated seeded trials, aggregation and MARL/classic ratio tables.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classic::{dgc_run, fr_run, stress_majorize_run};
use crate::convergence::ConvergenceReason;
use crate::engine::Session;
use crate::error::{Error, Result};
use crate::graph::{all_pairs_hop_distance, Graph};
use crate::layout::Layout;
use crate::metrics::{report, MetricsReport, MetricsRow};
use crate::params::Params;
use crate::rewards::RewardSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "fr")]
    Fr,
    #[serde(rename = "dgc")]
    Dgc,
    #[serde(rename = "sm")]
    StressMajorization,
    #[serde(rename = "marl-fr")]
    MarlFr,
    #[serde(rename = "marl-dgc")]
    MarlDgc,
    #[serde(rename = "marl-local-stress")]
    MarlLocalStress,
    #[serde(rename = "marl-global-stress")]
    MarlGlobalStress,
    #[serde(rename = "marl-hybrid")]
    MarlHybrid,
    #[serde(rename = "marl-custom")]
    MarlCustom,
}

impl Algorithm {
    pub const ALL: [Algorithm; 9] = [
        Algorithm::Fr,
        Algorithm::Dgc,
        Algorithm::StressMajorization,
        Algorithm::MarlFr,
        Algorithm::MarlDgc,
        Algorithm::MarlLocalStress,
        Algorithm::MarlGlobalStress,
        Algorithm::MarlHybrid,
        Algorithm::MarlCustom,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Fr => "fr",
            Algorithm::Dgc => "dgc",
            Algorithm::StressMajorization => "sm",
            Algorithm::MarlFr => "marl-fr",
            Algorithm::MarlDgc => "marl-dgc",
            Algorithm::MarlLocalStress => "marl-local-stress",
            Algorithm::MarlGlobalStress => "marl-global-stress",
            Algorithm::MarlHybrid => "marl-hybrid",
            Algorithm::MarlCustom => "marl-custom",
        }
    }

    pub fn is_marl(self) -> bool {
        self.reward(&Params::default()).is_some()
    }

    /// The MARL objective, `None` for classic algorithms.
    pub fn reward(self, params: &Params) -> Option<RewardSpec> {
        match self {
            Algorithm::Fr | Algorithm::Dgc | Algorithm::StressMajorization => None,
            Algorithm::MarlFr => Some(params.fr_reward()),
            Algorithm::MarlDgc => Some(params.dgc_reward()),
            Algorithm::MarlLocalStress => Some(params.local_stress_reward()),
            Algorithm::MarlGlobalStress => Some(params.global_stress_reward()),
            Algorithm::MarlHybrid => Some(params.hybrid_reward()),
            Algorithm::MarlCustom => Some(params.custom_reward()),
        }
    }

    /// Classic counterpart used for ratio tables.
    pub fn classic_baseline(self) -> Option<Algorithm> {
        match self {
            Algorithm::MarlFr => Some(Algorithm::Fr),
            Algorithm::MarlDgc => Some(Algorithm::Dgc),
            Algorithm::MarlLocalStress | Algorithm::MarlGlobalStress => {
                Some(Algorithm::StressMajorization)
            }
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// A finished layout run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub layout: Layout,
    pub iterations: u64,
    pub reason: ConvergenceReason,
    pub runtime_ms: f64,
}

/// Runs `algorithm` to convergence from the seeded random start.
pub fn run_algorithm(graph: &Graph, algorithm: Algorithm, params: &Params, seed: u64) -> Result<Outcome> {
    params.validate()?;
    let start = Instant::now();
    let (layout, iterations, reason) = match algorithm {
        Algorithm::Fr => {
            let r = fr_run(graph, &params.fr(), seed)?;
            (r.layout, r.iterations, r.reason)
        }
        Algorithm::Dgc => {
            let r = dgc_run(graph, &params.dgc(), seed)?;
            (r.layout, r.iterations, r.reason)
        }
        Algorithm::StressMajorization => {
            let dist = all_pairs_hop_distance(graph);
            let r = stress_majorize_run(graph, &params.stress(), &dist, seed)?;
            (r.layout, r.sweeps, r.reason)
        }
        marl => {
            let spec = marl.reward(params).expect("marl algorithm");
            let mut session = Session::new(Arc::new(graph.clone()), spec, params.session(), seed)?;
            let r = session.run_until_converged();
            (r.layout, r.iterations, r.reason)
        }
    };
    Ok(Outcome {
        layout,
        iterations,
        reason,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs one trial and scores it.
pub fn run_trial(
    graph: &Graph,
    graph_name: &str,
    algorithm: Algorithm,
    params: &Params,
    seed: u64,
) -> Result<MetricsReport> {
    let out = run_algorithm(graph, algorithm, params, seed)?;
    let mut r = report(&out.layout, graph, &params.metrics)?;
    r.graph = graph_name.to_string();
    r.algorithm = algorithm.id().to_string();
    r.seed = seed;
    r.iterations = out.iterations;
    r.runtime_ms = out.runtime_ms;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub graph: String,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub base_seed: u64,
    pub params: Params,
}

impl TrialPlan {
    pub fn new(graph: impl Into<String>, algorithm: Algorithm) -> Self {
        TrialPlan {
            graph: graph.into(),
            algorithm,
            runs: 100,
            base_seed: 0,
            params: Params::default(),
        }
    }
}

/// Mean and standard deviation of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Population statistics; the order of `values` only affects rounding,
    /// so callers sort first when they need bit-stable results.
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub graph: String,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub base_seed: u64,
    pub nc: Stat,
    pub no: Stat,
    pub ne: Stat,
    pub na: Stat,
    pub iterations: Stat,
    pub runtime_ms: Stat,
    pub trials: Vec<MetricsReport>,
}

impl Aggregate {
    /// Folds trial reports, ordered by seed so the result does not depend
    /// on completion order.
    pub fn from_trials(graph: &str, algorithm: Algorithm, base_seed: u64, mut trials: Vec<MetricsReport>) -> Self {
        trials.sort_by_key(|t| t.seed);
        let col = |f: fn(&MetricsReport) -> f64| -> Stat {
            Stat::of(&trials.iter().map(f).collect::<Vec<_>>())
        };
        Aggregate {
            graph: graph.to_string(),
            algorithm,
            runs: trials.len(),
            base_seed,
            nc: col(|t| t.nc),
            no: col(|t| t.no),
            ne: col(|t| t.ne),
            na: col(|t| t.na),
            iterations: col(|t| t.iterations as f64),
            runtime_ms: col(|t| t.runtime_ms),
            trials,
        }
    }

    pub fn row(&self) -> AggregateRow {
        AggregateRow {
            graph: self.graph.clone(),
            algorithm: self.algorithm.id().to_string(),
            seed: self.base_seed,
            nc: self.nc.mean,
            no: self.no.mean,
            ne: self.ne.mean,
            na: self.na.mean,
            iterations: self.iterations.mean,
            runtime_ms: self.runtime_ms.mean,
            runs: self.runs,
            nc_std: self.nc.std,
            no_std: self.no.std,
            ne_std: self.ne.std,
            na_std: self.na.std,
        }
    }
}

/// Trial `i` uses seed `base_seed + i`. `jobs` caps the worker threads;
/// `None` uses every core.
pub fn run_trials(graph: &Graph, plan: &TrialPlan, jobs: Option<usize>) -> Result<Aggregate> {
    if plan.runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    plan.params.validate()?;
    let seeds: Vec<u64> = (0..plan.runs as u64).map(|i| plan.base_seed.wrapping_add(i)).collect();
    let work = || -> Result<Vec<MetricsReport>> {
        seeds
            .par_iter()
            .map(|&s| run_trial(graph, &plan.graph, plan.algorithm, &plan.params, s))
            .collect()
    };
    let trials = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    Ok(Aggregate::from_trials(&plan.graph, plan.algorithm, plan.base_seed, trials))
}

/// MARL mean divided by classic mean, per metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub graph: String,
    pub marl: Algorithm,
    pub classic: Algorithm,
    /// `None` when the classic mean is zero and the MARL mean is not.
    pub r_nc: Option<f64>,
    pub r_no: Option<f64>,
    pub r_ne: Option<f64>,
    pub r_na: Option<f64>,
    /// Metrics whose classic mean was zero.
    pub flags: Vec<String>,
    /// MARL runtime over classic runtime.
    pub runtime_ratio: Option<f64>,
}

fn ratio(name: &str, num: f64, den: f64, flags: &mut Vec<String>) -> Option<f64> {
    if den != 0.0 {
        return Some(num / den);
    }
    flags.push(name.to_string());
    (num == 0.0).then_some(1.0)
}

pub fn ratio_table(marl: &Aggregate, classic: &Aggregate) -> RatioRow {
    let mut flags = Vec::new();
    let r_nc = ratio("nc", marl.nc.mean, classic.nc.mean, &mut flags);
    let r_no = ratio("no", marl.no.mean, classic.no.mean, &mut flags);
    let r_ne = ratio("ne", marl.ne.mean, classic.ne.mean, &mut flags);
    let r_na = ratio("na", marl.na.mean, classic.na.mean, &mut flags);
    let runtime_ratio = (classic.runtime_ms.mean > 0.0).then(|| marl.runtime_ms.mean / classic.runtime_ms.mean);
    RatioRow {
        graph: marl.graph.clone(),
        marl: marl.algorithm,
        classic: classic.algorithm,
        r_nc,
        r_no,
        r_ne,
        r_na,
        flags,
        runtime_ratio,
    }
}

/// CSV form of an [`Aggregate`]: means in the per-trial columns, then the
/// run count and standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub graph: String,
    pub algorithm: String,
    pub seed: u64,
    pub nc: f64,
    pub no: f64,
    pub ne: f64,
    pub na: f64,
    pub iterations: f64,
    pub runtime_ms: f64,
    pub runs: usize,
    pub nc_std: f64,
    pub no_std: f64,
    pub ne_std: f64,
    pub na_std: f64,
}

pub const AGGREGATE_HEADER: [&str; 14] = [
    "graph", "algorithm", "seed", "nc", "no", "ne", "na", "iterations", "runtime_ms", "runs",
    "nc_std", "no_std", "ne_std", "na_std",
];

pub fn export_csv<W: std::io::Write>(writer: W, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(AGGREGATE_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn import_csv<R: std::io::Read>(reader: R) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Per-trial rows of several aggregates.
pub fn trial_rows<'a>(aggregates: impl IntoIterator<Item = &'a Aggregate>) -> Vec<MetricsRow> {
    aggregates
        .into_iter()
        .flat_map(|a| a.trials.iter().map(MetricsReport::row))
        .collect()
}
