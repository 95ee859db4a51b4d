use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use tracing::{info, warn};

use marll_core::corpus;
use marll_core::engine::Session;
use marll_core::eval::{self, Aggregate, Algorithm, AggregateRow, RatioRow, TrialPlan};
use marll_core::graph::{to_json_graph, GraphDocument};
use marll_core::metrics::{self, MetricsReport};
use marll_core::params::Params;
use marll_server::ServerOptions;

use crate::args::{EvalArgs, LayoutArgs, ParamArgs, ServeArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    BadInput(String),
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("{0}")]
    PortInUse(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::BadInput(_) => 2,
            CliError::UnknownAlgorithm(_) => 3,
            CliError::PortInUse(_) => 4,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn bad(e: impl std::fmt::Display) -> CliError {
    CliError::BadInput(e.to_string())
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

pub fn params(args: &ParamArgs) -> Result<Params> {
    args.check().map_err(bad)?;
    let base = match &args.file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?
        }
        None => Params::default(),
    };
    let p = args.apply(base);
    p.validate().map_err(bad)?;
    Ok(p)
}

fn algorithm(id: &str) -> Result<Algorithm> {
    id.parse().map_err(|_| CliError::UnknownAlgorithm(id.to_string()))
}

fn load(id: &str) -> Result<GraphDocument> {
    corpus::load(id).map_err(|e| bad(format!("{id}: {e}")))
}

/// Writes pretty JSON to stdout. A reader that went away early (`| head`)
/// is not an error.
fn print_json(value: &impl Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    let written = serde_json::to_writer_pretty(&mut out, value)
        .map_err(io::Error::from)
        .and_then(|_| writeln!(out))
        .and_then(|_| out.flush());
    match written {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(failed(e)),
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| bad(format!("{}: {e}", path.display())))
}

fn metrics_json(r: &MetricsReport) -> Value {
    json!({
        "nc": r.nc,
        "no": r.no,
        "ne": r.ne,
        "na": r.na,
        "crossings": r.raw.crossings,
        "crossing_bound": r.raw.crossing_bound,
        "overlaps": r.raw.overlaps,
        "sigma": r.raw.sigma,
        "edge_length": r.raw.edge_length,
    })
}

pub fn layout(args: &LayoutArgs, print_config: bool) -> Result<()> {
    let algo = algorithm(&args.algo)?;
    let params = params(&args.params)?;
    if print_config {
        return print_json(&json!({
            "command": "layout",
            "graph": args.graph,
            "algorithm": algo,
            "seed": args.seed,
            "params": params,
        }));
    }
    let id = args.graph.as_deref().ok_or_else(|| bad("--graph is required"))?;
    let doc = load(id)?;
    let graph = doc.graph;
    let given = doc.positions.iter().any(Option::is_some);

    let (layout, iterations, reason, runtime_ms) = match algo.reward(&params) {
        Some(reward) if given => {
            let graph = Arc::new(graph.clone());
            let mut session = Session::with_positions(graph, reward, params.session(), args.seed, &doc.positions)
                .map_err(bad)?;
            if args.lock_given {
                for (v, p) in doc.positions.iter().enumerate() {
                    if p.is_some() {
                        session.lock_node(v).map_err(failed)?;
                    }
                }
            }
            let r = session.run_until_converged();
            (r.layout, r.iterations, r.reason, r.elapsed.as_secs_f64() * 1e3)
        }
        _ => {
            if given {
                warn!("{algo} starts from a random layout; stored positions are ignored");
            }
            let out = eval::run_algorithm(&graph, algo, &params, args.seed).map_err(bad)?;
            (out.layout, out.iterations, out.reason, out.runtime_ms)
        }
    };
    info!(iterations, %reason, runtime_ms, "layout done");

    let report = metrics::report(&layout, &graph, &params.metrics).map_err(failed)?;
    if let Some(path) = &args.output {
        let mut f = create(path)?;
        f.write_all(to_json_graph(&graph, Some(&layout.positions)).as_bytes())
            .and_then(|_| f.flush())
            .map_err(failed)?;
    }
    // Runtime is left out so the same command prints the same bytes.
    print_json(&json!({
        "graph": id,
        "algorithm": algo,
        "seed": args.seed,
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "iterations": iterations,
        "reason": reason,
        "positions": layout.to_json(&graph),
        "metrics": metrics_json(&report),
    }))
}

#[derive(Serialize)]
struct Summary<'a> {
    runs: usize,
    base_seed: u64,
    params: &'a Params,
    aggregates: Vec<AggregateRow>,
    ratios: Vec<RatioRow>,
}

pub fn eval(args: &EvalArgs, print_config: bool) -> Result<()> {
    let algos: Vec<Algorithm> = args.algos.iter().map(|a| algorithm(a)).collect::<Result<_>>()?;
    let params = params(&args.params)?;
    if args.runs == 0 {
        return Err(bad("--runs must be at least 1"));
    }
    if print_config {
        return print_json(&json!({
            "command": "eval",
            "graphs": args.graphs,
            "algorithms": algos,
            "runs": args.runs,
            "seed": args.seed,
            "jobs": args.jobs,
            "params": params,
        }));
    }
    let graphs: Vec<(String, marll_core::Graph)> = args
        .graphs
        .iter()
        .filter(|g| !g.is_empty())
        .map(|g| load(g).map(|d| (g.clone(), d.graph)))
        .collect::<Result<_>>()?;

    let mut aggregates: Vec<Aggregate> = Vec::new();
    for (name, graph) in &graphs {
        for &algorithm in &algos {
            let plan = TrialPlan {
                graph: name.clone(),
                algorithm,
                runs: args.runs,
                base_seed: args.seed,
                params,
            };
            let agg = eval::run_trials(graph, &plan, args.jobs).map_err(bad)?;
            info!(graph = %name, %algorithm, nc = agg.nc.mean, no = agg.no.mean, ne = agg.ne.mean, na = agg.na.mean, "trials done");
            aggregates.push(agg);
        }
    }

    let rows: Vec<AggregateRow> = aggregates.iter().map(Aggregate::row).collect();
    match &args.output {
        Some(path) => eval::export_csv(create(path)?, &rows).map_err(failed)?,
        None => eval::export_csv(io::stdout().lock(), &rows).map_err(failed)?,
    }
    if let Some(path) = &args.trials {
        metrics::write_csv(create(path)?, &eval::trial_rows(&aggregates)).map_err(failed)?;
    }
    if let Some(path) = &args.summary {
        let mut ratios = Vec::new();
        for marl in &aggregates {
            let Some(baseline) = marl.algorithm.classic_baseline() else { continue };
            if let Some(classic) = aggregates
                .iter()
                .find(|a| a.graph == marl.graph && a.algorithm == baseline)
            {
                ratios.push(eval::ratio_table(marl, classic));
            }
        }
        let summary = Summary { runs: args.runs, base_seed: args.seed, params: &params, aggregates: rows, ratios };
        let mut f = create(path)?;
        serde_json::to_writer_pretty(&mut f, &summary)
            .map_err(failed)
            .and_then(|_| f.flush().map_err(failed))?;
    }
    Ok(())
}

pub fn serve(args: &ServeArgs, print_config: bool) -> Result<()> {
    if print_config {
        return print_json(&json!({
            "command": "serve",
            "host": args.host,
            "port": args.port,
            "max_nodes": args.max_nodes,
            "max_line": args.max_line,
        }));
    }
    let options = ServerOptions { max_line: args.max_line, max_nodes: args.max_nodes };
    let runtime = tokio::runtime::Runtime::new().map_err(failed)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| match e.kind() {
                io::ErrorKind::AddrInUse => CliError::PortInUse(format!("port {} is already in use", args.port)),
                _ => bad(format!("cannot listen on {}:{}: {e}", args.host, args.port)),
            })?;
        let addr = listener.local_addr().map_err(failed)?;
        {
            let mut out = io::stdout().lock();
            writeln!(out, "listening on {addr}").and_then(|_| out.flush()).map_err(failed)?;
        }
        tokio::select! {
            r = marll_server::serve(listener, options) => r.map_err(failed),
            _ = tokio::signal::ctrl_c() => {
                info!("interrupted");
                Ok(())
            }
        }
    })
}
