//! Bundled test graphs and small generators.
//!
//! Ids resolve as follows: `g1`/`karate` is Zachary's karate club;
//! `g2` and `g3` are fixed sparse connected graphs with 39/46 and 44/48
//! nodes/edges; `path:N`, `cycle:N`, `star:N`, `complete:N`, `grid:RxC`
//! and `gnp:N:P:SEED` are generated; anything else is read as a file
//! (`.json` graph documents, edge lists otherwise).

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{parse_edge_list, parse_json_graph, GraphDocument, Graph};
use crate::layout::rng_from_seed;

const KARATE: &str = include_str!("../data/karate.txt");

pub fn karate() -> Graph {
    parse_edge_list(KARATE).expect("bundled karate graph parses")
}

/// Connected graph on `n` nodes with `m` edges: a random recursive tree
/// plus `m - n + 1` random chords.
pub fn sparse_connected(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if n == 0 || m + 1 < n || m > n * (n - 1) / 2 {
        return Err(Error::InvalidConfig(format!("no connected simple graph with {n} nodes and {m} edges")));
    }
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::new();
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        let e = (order[i].min(parent), order[i].max(parent));
        seen.insert(e);
        edges.push(e);
    }
    while edges.len() < m {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let e = (u.min(v), u.max(v));
        if u != v && seen.insert(e) {
            edges.push(e);
        }
    }
    Graph::from_edges(n, edges)
}

pub fn g2() -> Graph {
    sparse_connected(39, 46, 0x6232).expect("valid size")
}

pub fn g3() -> Graph {
    sparse_connected(44, 48, 0x6233).expect("valid size")
}

pub fn path(n: usize) -> Graph {
    Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("valid ids")
}

pub fn cycle(n: usize) -> Graph {
    let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    if n > 2 {
        edges.push((n - 1, 0));
    }
    Graph::from_edges(n, edges).expect("valid ids")
}

pub fn star(leaves: usize) -> Graph {
    Graph::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("valid ids")
}

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::from_edges(n, edges).expect("valid ids")
}

pub fn grid(rows: usize, cols: usize) -> Graph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::from_edges(rows * cols, edges).expect("valid ids")
}

/// Erdos-Renyi `G(n, p)`.
pub fn gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).expect("valid ids")
}

fn parse_num<T: std::str::FromStr>(id: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::UnknownGraph(id.to_string()))
}

/// Resolves bundled and generated ids only; never touches the filesystem.
/// `Ok(None)` means the id is not one of them.
pub fn builtin(id: &str) -> Result<Option<Graph>> {
    builtin_with_limit(id, usize::MAX)
}

/// Like [`builtin`], refusing generated graphs with more than `max_nodes`
/// nodes before building them.
pub fn builtin_with_limit(id: &str, max_nodes: usize) -> Result<Option<Graph>> {
    let mut parts = id.split(':');
    let kind = parts.next().unwrap_or_default();
    let args: Vec<&str> = parts.collect();
    let size = |n: usize| {
        if n > max_nodes {
            Err(Error::InvalidConfig(format!("{id}: {n} nodes exceeds the limit of {max_nodes}")))
        } else {
            Ok(n)
        }
    };
    let g = match (kind, args.as_slice()) {
        ("g1" | "karate", []) => karate(),
        ("g2", []) => g2(),
        ("g3", []) => g3(),
        ("path", [n]) => path(size(parse_num(id, n)?)?),
        ("cycle", [n]) => cycle(size(parse_num(id, n)?)?),
        ("star", [n]) => star(size(parse_num::<usize>(id, n)?.saturating_add(1))? - 1),
        ("complete", [n]) => complete(size(parse_num(id, n)?)?),
        ("grid", [dims]) => {
            let (r, c) = dims.split_once('x').ok_or_else(|| Error::UnknownGraph(id.to_string()))?;
            let (r, c): (usize, usize) = (parse_num(id, r)?, parse_num(id, c)?);
            size(r.saturating_mul(c))?;
            grid(r, c)
        }
        ("gnp", [n, p, seed]) => {
            let p: f64 = parse_num(id, p)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::UnknownGraph(id.to_string()));
            }
            gnp(size(parse_num(id, n)?)?, p, &mut rng_from_seed(parse_num(id, seed)?))
        }
        _ => return Ok(None),
    };
    Ok(Some(g))
}

/// Resolves a graph id or path to a graph and any stored positions.
pub fn load(id: &str) -> Result<GraphDocument> {
    if let Some(graph) = builtin(id)? {
        let n = graph.node_count();
        return Ok(GraphDocument { graph, positions: vec![None; n] });
    }
    let path = Path::new(id);
    if !path.exists() {
        return Err(Error::UnknownGraph(id.to_string()));
    }
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        parse_json_graph(&text)
    } else {
        let graph = parse_edge_list(&text)?;
        let n = graph.node_count();
        Ok(GraphDocument { graph, positions: vec![None; n] })
    }
}

pub fn load_graph(id: &str) -> Result<Graph> {
    load(id).map(|d| d.graph)
}
