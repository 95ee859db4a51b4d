//! Pairwise force laws for the Fruchterman-Reingold and DGC spring
//! embedders, and the net force vector on a node.
//!
//! All forces are returned as vectors acting on the node `v`. Attraction
//! points from `v` toward its neighbour; repulsion points away from the
//! other node.

use crate::geometry::Point;
use crate::graph::Graph;

/// Separation used in place of an exact coincidence.
pub const COINCIDENT_JITTER: f64 = 1e-3;

/// Offset `p_v - p_u` and its length. Coincident nodes are separated by a
/// fixed pseudo-random offset of length [`COINCIDENT_JITTER`] derived from
/// the pair of ids, so the force stays finite and deterministic.
pub fn separation(positions: &[Point], v: usize, u: usize) -> (Point, f64) {
    let delta = positions[v] - positions[u];
    let d = delta.norm();
    if d > 0.0 {
        return (delta, d);
    }
    let (lo, hi) = (u.min(v), u.max(v));
    // golden-angle spread so distinct pairs get distinct directions
    let theta = ((lo as f64) * 2.399_963_229_728_653 + (hi as f64) * 0.618_033_988_749_895)
        % std::f64::consts::TAU;
    let dir = Point::new(theta.cos(), theta.sin());
    let jitter = if v > u { dir } else { -dir };
    (jitter * COINCIDENT_JITTER, COINCIDENT_JITTER)
}

pub fn fr_attraction(d: f64, k: f64) -> f64 {
    d * d / k
}

pub fn fr_repulsion(d: f64, k: f64) -> f64 {
    k * k / d
}

/// Signed DGC spring magnitude: positive pulls the endpoints together
/// (stretched, `d > lambda`), negative pushes them apart.
pub fn dgc_spring(d: f64, lambda: f64, zeta: f64) -> f64 {
    let m = (lambda - d) * (lambda - d) / zeta;
    if d > lambda {
        m
    } else {
        -m
    }
}

pub fn dgc_repulsion(d: f64, mu: f64) -> f64 {
    mu / (d * d)
}

/// Net Fruchterman-Reingold force on `v`.
pub fn fr_force(graph: &Graph, positions: &[Point], v: usize, k: f64) -> Point {
    let mut force = Point::ZERO;
    for u in 0..positions.len() {
        if u == v {
            continue;
        }
        let (delta, d) = separation(positions, v, u);
        force += delta * (fr_repulsion(d, k) / d);
    }
    for &u in graph.neighbors(v) {
        let (delta, d) = separation(positions, v, u);
        force -= delta * (fr_attraction(d, k) / d);
    }
    force
}

/// Net DGC force on `v`.
pub fn dgc_force(
    graph: &Graph,
    positions: &[Point],
    v: usize,
    lambda: f64,
    zeta: f64,
    mu: f64,
) -> Point {
    let mut force = Point::ZERO;
    for u in 0..positions.len() {
        if u == v {
            continue;
        }
        let (delta, d) = separation(positions, v, u);
        force += delta * (dgc_repulsion(d, mu) / d);
    }
    for &u in graph.neighbors(v) {
        let (delta, d) = separation(positions, v, u);
        force -= delta * (dgc_spring(d, lambda, zeta) / d);
    }
    force
}
