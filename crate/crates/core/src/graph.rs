//! Undirected simple graphs, the edge-list and JSON interchange formats,
//! and all-pairs hop distances.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Immutable undirected simple graph over dense node ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    labels: Vec<String>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from `n` nodes labelled by index and an edge list.
    /// Self-loops are dropped and duplicates collapsed.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::with_labels(labels, edges)
    }

    pub fn with_labels(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = labels.len();
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n {
                return Err(Error::NodeOutOfRange(u));
            }
            if v >= n {
                return Err(Error::NodeOutOfRange(v));
            }
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key) {
                list.push(key);
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        Ok(Graph {
            labels,
            edges: list,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, in first-seen order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.adjacency[u].len() <= self.adjacency[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adjacency[a].contains(&b)
    }

    /// Ids of the edges incident to `v`, as indices into [`Graph::edges`].
    pub fn incident_edges(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == v || b == v)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Parses a whitespace-separated edge list. Blank lines and lines starting
/// with `%` or `#` are skipped. Tokens are interned in order of first
/// appearance.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut edges = Vec::new();

    let mut intern = |tok: &str| -> usize {
        if let Some(&id) = ids.get(tok) {
            return id;
        }
        let id = labels.len();
        ids.insert(tok.to_string(), id);
        labels.push(tok.to_string());
        id
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::MalformedLine {
                line: idx + 1,
                message: format!("expected two node tokens, found {}", tokens.len()),
            });
        }
        let u = intern(tokens[0]);
        let v = intern(tokens[1]);
        edges.push((u, v));
    }

    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    Graph::with_labels(labels, edges)
}

/// A JSON graph document together with any positions it carried.
#[derive(Debug, Clone)]
pub struct GraphDocument {
    pub graph: Graph,
    pub positions: Vec<Option<Point>>,
}

fn id_string(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Parses `{nodes: [{id, x?, y?}], edges: [{source, target}]}`.
pub fn parse_json_graph(text: &str) -> Result<GraphDocument> {
    let doc: Value = serde_json::from_str(text)?;
    let nodes = doc
        .get("nodes")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::InvalidDocument("missing `nodes` array".into()))?;
    let edges = match doc.get("edges") {
        None | Some(Value::Null) => &[][..],
        Some(Value::Array(a)) => a.as_slice(),
        Some(_) => return Err(Error::InvalidDocument("`edges` is not an array".into())),
    };

    let mut ids = HashMap::new();
    let mut labels = Vec::with_capacity(nodes.len());
    let mut positions = Vec::with_capacity(nodes.len());
    for (i, node) in nodes.iter().enumerate() {
        let id = node.get("id").and_then(id_string).ok_or(Error::MissingId(i))?;
        if ids.contains_key(&id) {
            return Err(Error::InvalidDocument(format!("duplicate node id {id:?}")));
        }
        ids.insert(id.clone(), i);
        labels.push(id);
        let x = node.get("x").and_then(Value::as_f64);
        let y = node.get("y").and_then(Value::as_f64);
        positions.push(match (x, y) {
            (Some(x), Some(y)) => Some(Point::new(x, y)),
            _ => None,
        });
    }

    let mut pairs = Vec::with_capacity(edges.len());
    for edge in edges {
        let end = |key: &str| -> Result<usize> {
            let id = edge
                .get(key)
                .and_then(id_string)
                .ok_or_else(|| Error::InvalidDocument(format!("edge missing `{key}`")))?;
            ids.get(&id).copied().ok_or(Error::UnknownNode(id))
        };
        pairs.push((end("source")?, end("target")?));
    }

    Ok(GraphDocument {
        graph: Graph::with_labels(labels, pairs)?,
        positions,
    })
}

#[derive(Serialize, Deserialize)]
struct JsonNode<'a> {
    id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct JsonEdge<'a> {
    source: &'a str,
    target: &'a str,
}

#[derive(Serialize)]
struct JsonGraph<'a> {
    #[serde(borrow)]
    nodes: Vec<JsonNode<'a>>,
    edges: Vec<JsonEdge<'a>>,
}

/// Serializes a graph (and optionally positions) to the JSON graph format.
pub fn to_json_graph(graph: &Graph, positions: Option<&[Point]>) -> String {
    let nodes = graph
        .labels()
        .iter()
        .enumerate()
        .map(|(i, id)| JsonNode {
            id,
            x: positions.map(|p| p[i].x),
            y: positions.map(|p| p[i].y),
        })
        .collect();
    let edges = graph
        .edges()
        .iter()
        .map(|&(u, v)| JsonEdge {
            source: graph.label(u),
            target: graph.label(v),
        })
        .collect();
    serde_json::to_string(&JsonGraph { nodes, edges }).expect("graph serializes")
}

/// Hop distances between every pair of nodes. Unreachable pairs hold
/// [`DistanceMatrix::UNREACHABLE`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    hops: Vec<u32>,
}

impl DistanceMatrix {
    pub const UNREACHABLE: u32 = u32::MAX;

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Raw entry, possibly the sentinel.
    pub fn raw(&self, u: usize, v: usize) -> u32 {
        self.hops[u * self.n + v]
    }

    pub fn get(&self, u: usize, v: usize) -> Option<u32> {
        match self.raw(u, v) {
            Self::UNREACHABLE => None,
            d => Some(d),
        }
    }

    pub fn row(&self, v: usize) -> &[u32] {
        &self.hops[v * self.n..(v + 1) * self.n]
    }

    /// Largest finite hop distance.
    pub fn diameter(&self) -> u32 {
        self.hops
            .iter()
            .copied()
            .filter(|&d| d != Self::UNREACHABLE)
            .max()
            .unwrap_or(0)
    }
}

/// Breadth-first search from every node.
pub fn all_pairs_hop_distance(graph: &Graph) -> DistanceMatrix {
    let n = graph.node_count();
    let mut hops = vec![DistanceMatrix::UNREACHABLE; n * n];
    let mut queue = VecDeque::new();
    for source in 0..n {
        let row = &mut hops[source * n..(source + 1) * n];
        row[source] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let next = row[u] + 1;
            for &w in graph.neighbors(u) {
                if row[w] == DistanceMatrix::UNREACHABLE {
                    row[w] = next;
                    queue.push_back(w);
                }
            }
        }
    }
    DistanceMatrix { n, hops }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_of_three() {
        let g = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degrees(), vec![1, 2, 1]);
    }

    #[test]
    fn duplicate_edges_collapse() {
        let g = parse_edge_list("a b\nb a").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let g = parse_edge_list("% header\n# more\n\n1 2\n  \n2 3\n").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(g.label(0), "1");
    }

    #[test]
    fn malformed_line_reports_number() {
        match parse_edge_list("1 2\n3\n") {
            Err(Error::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_edge_list("1 2 3"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(parse_edge_list(""), Err(Error::EmptyInput)));
        assert!(matches!(parse_edge_list("% only\n"), Err(Error::EmptyInput)));
    }

    #[test]
    fn self_loops_dropped() {
        let g = parse_edge_list("a a\na b").unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn json_singleton_and_pair() {
        let doc = parse_json_graph(r#"{"nodes":[{"id":"x"}],"edges":[]}"#).unwrap();
        assert_eq!((doc.graph.node_count(), doc.graph.edge_count()), (1, 0));

        let doc = parse_json_graph(
            r#"{"nodes":[{"id":"a","x":1,"y":2},{"id":7}],"edges":[{"source":"a","target":7}]}"#,
        )
        .unwrap();
        assert_eq!((doc.graph.node_count(), doc.graph.edge_count()), (2, 1));
        assert_eq!(doc.positions[0], Some(Point::new(1.0, 2.0)));
        assert_eq!(doc.positions[1], None);
        assert_eq!(doc.graph.label(1), "7");
    }

    #[test]
    fn json_errors() {
        assert!(matches!(
            parse_json_graph(r#"{"nodes":[{"name":"x"}],"edges":[]}"#),
            Err(Error::MissingId(0))
        ));
        assert!(matches!(
            parse_json_graph(r#"{"nodes":[{"id":"x"}],"edges":[{"source":"x","target":"y"}]}"#),
            Err(Error::UnknownNode(id)) if id == "y"
        ));
        assert!(parse_json_graph(r#"{"edges":[]}"#).is_err());
    }

    #[test]
    fn json_round_trip_keeps_labels() {
        let g = parse_edge_list("alpha beta\nbeta gamma\ngamma alpha\ndelta alpha").unwrap();
        let text = to_json_graph(&g, None);
        let back = parse_json_graph(&text).unwrap().graph;
        assert_eq!(back, g);
    }

    #[test]
    fn hop_distances() {
        let path = parse_edge_list("a b\nb c").unwrap();
        let d = all_pairs_hop_distance(&path);
        assert_eq!(d.get(0, 2), Some(2));

        let k4 = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let d = all_pairs_hop_distance(&k4);
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(d.get(u, v), Some(u32::from(u != v)));
            }
        }

        let split = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let d = all_pairs_hop_distance(&split);
        assert_eq!(d.get(0, 2), None);
        assert_eq!(d.raw(1, 3), DistanceMatrix::UNREACHABLE);
        assert_eq!(d.get(2, 3), Some(1));
    }
}
