//! Baseline layouts: Fruchterman-Reingold, DGC and localized stress
//! majorization.

use serde::{Deserialize, Serialize};

use crate::convergence::{
    stress_ratio, Cooling, ConvergenceConfig, ConvergenceReason, ConvergenceTracker, Criteria,
};
use crate::error::{Error, Result};
use crate::forces;
use crate::geometry::Point;
use crate::graph::{DistanceMatrix, Graph};
use crate::layout::{rng_from_seed, Layout, DEFAULT_FRAME};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrParams {
    /// Optimal distance between nodes, pixels.
    pub k: f64,
    pub cooling: Cooling,
    pub convergence: ConvergenceConfig,
    pub frame: f64,
}

impl Default for FrParams {
    fn default() -> Self {
        FrParams {
            k: 30.0,
            cooling: Cooling::default(),
            convergence: ConvergenceConfig::default(),
            frame: DEFAULT_FRAME,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgcParams {
    /// Ideal edge length, pixels.
    pub lambda: f64,
    /// Elastic constant.
    pub zeta: f64,
    /// Repulsion constant.
    pub mu: f64,
    pub cooling: Cooling,
    pub convergence: ConvergenceConfig,
    pub frame: f64,
}

impl Default for DgcParams {
    fn default() -> Self {
        DgcParams {
            lambda: 30.0,
            zeta: 5.0,
            mu: 5000.0,
            cooling: Cooling::default(),
            convergence: ConvergenceConfig::default(),
            frame: DEFAULT_FRAME,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressParams {
    /// Pixel length of one hop; ideal distances are `unit * hops` and the
    /// pair weights are their inverse squares.
    pub unit: f64,
    /// Stress-ratio tolerance.
    pub tolerance: f64,
    pub max_iterations: u64,
    pub frame: f64,
}

impl Default for StressParams {
    fn default() -> Self {
        StressParams {
            unit: 30.0,
            tolerance: 1e-4,
            max_iterations: 2500,
            frame: DEFAULT_FRAME,
        }
    }
}

/// Result of a classic run.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub layout: Layout,
    pub iterations: u64,
    pub reason: ConvergenceReason,
}

#[derive(Debug, Clone, Copy)]
enum ForceLaw {
    Fr { k: f64 },
    Dgc { lambda: f64, zeta: f64, mu: f64 },
}

impl ForceLaw {
    fn force(self, graph: &Graph, positions: &[Point], v: usize) -> Point {
        match self {
            ForceLaw::Fr { k } => forces::fr_force(graph, positions, v, k),
            ForceLaw::Dgc { lambda, zeta, mu } => {
                forces::dgc_force(graph, positions, v, lambda, zeta, mu)
            }
        }
    }
}

/// One spring-embedder iteration as seen by an observer.
pub struct IterationTrace<'a> {
    pub iteration: u64,
    pub temperature: f64,
    pub before: &'a [Point],
    pub after: &'a [Point],
}

fn validate_convergence(cfg: &ConvergenceConfig, cooling: &Cooling) -> Result<()> {
    cooling.validate()?;
    cfg.validate()
}

fn spring_embed(
    graph: &Graph,
    law: ForceLaw,
    cooling: &Cooling,
    convergence: &ConvergenceConfig,
    frame: f64,
    seed: u64,
    mut observe: impl FnMut(IterationTrace<'_>),
) -> Run {
    let n = graph.node_count();
    let mut rng = rng_from_seed(seed);
    let mut layout = Layout::random(n, frame, &mut rng);
    let period = cooling.period_for(n, graph.edge_count());
    let criteria = convergence.criteria.unwrap_or(Criteria::DISPLACEMENT);
    let mut tracker =
        ConvergenceTracker::new(convergence.window_len(period), &layout.positions, None);

    let mut net = vec![Point::ZERO; n];
    let mut t = 0u64;
    loop {
        let temperature = cooling.temperature(t, period);
        for (v, f) in net.iter_mut().enumerate() {
            *f = law.force(graph, &layout.positions, v);
        }
        let before = layout.positions.clone();
        for (p, f) in layout.positions.iter_mut().zip(&net) {
            let len = f.norm();
            if len > 0.0 && len.is_finite() {
                *p += *f * (len.min(temperature) / len);
            }
        }
        t += 1;
        observe(IterationTrace {
            iteration: t,
            temperature,
            before: &before,
            after: &layout.positions,
        });
        tracker.observe(t, &layout.positions, None);
        if let Some(reason) = tracker.check(t, convergence, criteria) {
            return Run {
                layout,
                iterations: t,
                reason,
            };
        }
    }
}

pub fn fr_run(graph: &Graph, params: &FrParams, seed: u64) -> Result<Run> {
    fr_run_traced(graph, params, seed, |_| {})
}

pub fn fr_run_traced(
    graph: &Graph,
    params: &FrParams,
    seed: u64,
    observe: impl FnMut(IterationTrace<'_>),
) -> Result<Run> {
    if !(params.k > 0.0) {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    validate_convergence(&params.convergence, &params.cooling)?;
    if graph.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(spring_embed(
        graph,
        ForceLaw::Fr { k: params.k },
        &params.cooling,
        &params.convergence,
        params.frame,
        seed,
        observe,
    ))
}

/// Fruchterman-Reingold layout from a seeded random start.
pub fn fr_layout(graph: &Graph, params: &FrParams, seed: u64) -> Result<Layout> {
    fr_run(graph, params, seed).map(|r| r.layout)
}

pub fn dgc_run(graph: &Graph, params: &DgcParams, seed: u64) -> Result<Run> {
    dgc_run_traced(graph, params, seed, |_| {})
}

pub fn dgc_run_traced(
    graph: &Graph,
    params: &DgcParams,
    seed: u64,
    observe: impl FnMut(IterationTrace<'_>),
) -> Result<Run> {
    if !(params.lambda > 0.0 && params.zeta > 0.0 && params.mu > 0.0) {
        return Err(Error::InvalidConfig("lambda, zeta and mu must be positive".into()));
    }
    validate_convergence(&params.convergence, &params.cooling)?;
    if graph.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(spring_embed(
        graph,
        ForceLaw::Dgc {
            lambda: params.lambda,
            zeta: params.zeta,
            mu: params.mu,
        },
        &params.cooling,
        &params.convergence,
        params.frame,
        seed,
        observe,
    ))
}

/// DGC spring-embedder layout from a seeded random start.
pub fn dgc_layout(graph: &Graph, params: &DgcParams, seed: u64) -> Result<Layout> {
    dgc_run(graph, params, seed).map(|r| r.layout)
}

/// Stress of one pair at Euclidean distance `d` and `hops` apart.
#[inline]
pub fn pair_stress(d: f64, hops: u32, unit: f64) -> f64 {
    let ideal = unit * f64::from(hops);
    let diff = d - ideal;
    diff * diff / (ideal * ideal)
}

/// Weighted stress over all reachable pairs `u < v`.
pub fn total_stress(layout: &Layout, dist: &DistanceMatrix, unit: f64) -> f64 {
    let p = &layout.positions;
    let n = p.len();
    let mut total = 0.0;
    for u in 0..n {
        let row = dist.row(u);
        for v in (u + 1)..n {
            let h = row[v];
            if h == DistanceMatrix::UNREACHABLE || h == 0 {
                continue;
            }
            total += pair_stress(p[u].dist(p[v]), h, unit);
        }
    }
    total
}

/// Stress terms that involve `v`.
pub fn node_stress(positions: &[Point], dist: &DistanceMatrix, v: usize, unit: f64) -> f64 {
    let row = dist.row(v);
    let pv = positions[v];
    let mut total = 0.0;
    for (u, &h) in row.iter().enumerate() {
        if u == v || h == DistanceMatrix::UNREACHABLE || h == 0 {
            continue;
        }
        total += pair_stress(pv.dist(positions[u]), h, unit);
    }
    total
}

/// Outcome of stress majorization with the stress after every sweep.
#[derive(Debug, Clone)]
pub struct StressRun {
    pub layout: Layout,
    pub sweeps: u64,
    pub reason: ConvergenceReason,
    /// `history[0]` is the initial stress; entry `i` the stress after sweep `i`.
    pub history: Vec<f64>,
}

/// Localized majorization update for `v` with all other nodes fixed.
fn majorize_node(positions: &[Point], dist: &DistanceMatrix, v: usize, unit: f64) -> Option<Point> {
    let row = dist.row(v);
    let pv = positions[v];
    let mut num = Point::ZERO;
    let mut den = 0.0;
    for (u, &h) in row.iter().enumerate() {
        if u == v || h == DistanceMatrix::UNREACHABLE || h == 0 {
            continue;
        }
        let ideal = unit * f64::from(h);
        let w = 1.0 / (ideal * ideal);
        let (delta, d) = forces::separation(positions, v, u);
        num += (positions[u] + delta * (ideal / d)) * w;
        den += w;
    }
    if den == 0.0 {
        return None;
    }
    let next = num * (1.0 / den);
    (next != pv).then_some(next)
}

pub fn stress_majorize_run(
    graph: &Graph,
    params: &StressParams,
    dist: &DistanceMatrix,
    seed: u64,
) -> Result<StressRun> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if dist.len() != n {
        return Err(Error::InvalidConfig("distance matrix does not match graph".into()));
    }
    if !(params.unit > 0.0 && params.tolerance > 0.0) || params.max_iterations == 0 {
        return Err(Error::InvalidConfig("invalid stress parameters".into()));
    }
    let mut rng = rng_from_seed(seed);
    let layout = Layout::random(n, params.frame, &mut rng);
    Ok(majorize_from(layout, params, dist))
}

/// One Gauss-Seidel pass of localized updates in ascending node order.
pub fn majorize_sweep(layout: &mut Layout, dist: &DistanceMatrix, unit: f64) {
    for v in 0..layout.len() {
        if let Some(p) = majorize_node(&layout.positions, dist, v, unit) {
            layout.positions[v] = p;
        }
    }
}

/// Runs majorization sweeps starting from `layout`.
pub fn majorize_from(mut layout: Layout, params: &StressParams, dist: &DistanceMatrix) -> StressRun {
    let mut energy = total_stress(&layout, dist, params.unit);
    let mut history = vec![energy];
    let mut sweeps = 0;
    let reason = loop {
        if energy == 0.0 {
            break ConvergenceReason::StressRatio;
        }
        if sweeps >= params.max_iterations {
            break ConvergenceReason::MaxIterations;
        }
        let previous = layout.positions.clone();
        majorize_sweep(&mut layout, dist, params.unit);
        sweeps += 1;
        let next = total_stress(&layout, dist, params.unit);
        if next > energy {
            // rounding noise once converged; keep the better sweep
            layout.positions = previous;
            history.push(energy);
            break ConvergenceReason::StressRatio;
        }
        history.push(next);
        let ratio = stress_ratio(energy, next);
        energy = next;
        if ratio.abs() < params.tolerance {
            break ConvergenceReason::StressRatio;
        }
    };
    StressRun {
        layout,
        sweeps,
        reason,
        history,
    }
}

/// Stress majorization from a seeded random start.
pub fn stress_majorize(
    graph: &Graph,
    params: &StressParams,
    dist: &DistanceMatrix,
    seed: u64,
) -> Result<Layout> {
    stress_majorize_run(graph, params, dist, seed).map(|r| r.layout)
}
