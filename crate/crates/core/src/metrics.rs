//! Aesthetic quality metrics for finished layouts. All four normalized
//! scores lie in `[0, 1]`, higher is better.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::segments_cross;
use crate::graph::Graph;
use crate::layout::Layout;
use crate::rewards::angular_gaps;

/// Unordered pairs of edges that cross; pairs sharing an endpoint are
/// never counted.
pub fn count_crossings(layout: &Layout, graph: &Graph) -> usize {
    let p = &layout.positions;
    let edges = graph.edges();
    let mut count = 0;
    for (i, &(a, b)) in edges.iter().enumerate() {
        for &(c, d) in &edges[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_cross(p[a], p[b], p[c], p[d]) {
                count += 1;
            }
        }
    }
    count
}

/// Edge pairs that could cross at all: every pair minus those sharing a
/// node. Clamped at zero.
pub fn crossing_upper_bound(graph: &Graph) -> usize {
    let m = graph.edge_count() as i64;
    let adjacent: i64 = graph
        .degrees()
        .iter()
        .map(|&d| (d as i64) * (d as i64 - 1))
        .sum::<i64>()
        / 2;
    (m * (m - 1) / 2 - adjacent).max(0) as usize
}

fn crossing_score(crossings: usize, bound: usize) -> f64 {
    if bound == 0 {
        1.0
    } else {
        (1.0 - crossings as f64 / bound as f64).clamp(0.0, 1.0)
    }
}

pub fn nc(layout: &Layout, graph: &Graph) -> f64 {
    crossing_score(count_crossings(layout, graph), crossing_upper_bound(graph))
}

/// Node pairs closer than `2 * radius`.
pub fn count_overlaps(layout: &Layout, radius: f64) -> usize {
    let p = &layout.positions;
    let mut count = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i].dist(p[j]) < 2.0 * radius {
                count += 1;
            }
        }
    }
    count
}

fn overlap_score(overlaps: usize, n: usize) -> f64 {
    if n < 2 {
        return 1.0;
    }
    let pairs = (n * (n - 1) / 2) as f64;
    1.0 - overlaps as f64 / pairs
}

pub fn no(layout: &Layout, radius: f64) -> f64 {
    overlap_score(count_overlaps(layout, radius), layout.len())
}

fn edge_lengths(layout: &Layout, graph: &Graph) -> Vec<f64> {
    let p = &layout.positions;
    graph.edges().iter().map(|&(u, v)| p[u].dist(p[v])).collect()
}

/// Mean squared relative deviation of edge lengths from `length`.
pub fn edge_length_error(layout: &Layout, graph: &Graph, length: f64) -> f64 {
    let lengths = edge_lengths(layout, graph);
    if lengths.is_empty() {
        return 0.0;
    }
    lengths.iter().map(|e| ((e - length) / length).powi(2)).sum::<f64>() / lengths.len() as f64
}

/// Reference length minimizing [`edge_length_error`]: `sum e^2 / sum e`.
/// Falls back to 1 when every edge is degenerate.
pub fn best_fit_length(layout: &Layout, graph: &Graph) -> f64 {
    let lengths = edge_lengths(layout, graph);
    let s1: f64 = lengths.iter().sum();
    let s2: f64 = lengths.iter().map(|e| e * e).sum();
    if s1 > 0.0 {
        s2 / s1
    } else {
        1.0
    }
}

pub fn ne(layout: &Layout, graph: &Graph, length: f64) -> f64 {
    1.0 / (1.0 + edge_length_error(layout, graph, length))
}

/// Smallest angle (degrees) between incident edges of every node, `None`
/// below degree 2.
pub fn min_angles(layout: &Layout, graph: &Graph) -> Vec<Option<f64>> {
    (0..graph.node_count())
        .map(|v| {
            angular_gaps(v, &layout.positions, graph)
                .into_iter()
                .reduce(f64::min)
                .map(f64::to_degrees)
        })
        .collect()
}

fn angle_score(graph: &Graph, angles: &[Option<f64>]) -> f64 {
    let n = graph.node_count();
    if n == 0 {
        return 1.0;
    }
    let deviation: f64 = angles
        .iter()
        .enumerate()
        .filter_map(|(v, a)| {
            let a = (*a)?;
            let ideal = 360.0 / graph.degree(v) as f64;
            Some(((ideal - a) / ideal).abs())
        })
        .sum();
    (1.0 - deviation / n as f64).clamp(0.0, 1.0)
}

pub fn na(layout: &Layout, graph: &Graph) -> f64 {
    angle_score(graph, &min_angles(layout, graph))
}

/// Reference edge length for the uniformity score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "px", rename_all = "snake_case")]
pub enum EdgeLength {
    /// Scale-free: the length that makes the layout look most uniform.
    BestFit,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    /// Node radius, pixels; nodes overlap below twice this distance.
    pub radius: f64,
    pub edge_length: EdgeLength,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams { radius: 10.0, edge_length: EdgeLength::BestFit }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCounts {
    pub crossings: usize,
    pub crossing_bound: usize,
    pub overlaps: usize,
    pub sigma: f64,
    pub edge_length: f64,
    pub min_angles: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub graph: String,
    pub algorithm: String,
    pub seed: u64,
    pub nc: f64,
    pub no: f64,
    pub ne: f64,
    pub na: f64,
    pub raw: RawCounts,
    pub iterations: u64,
    pub runtime_ms: f64,
}

/// The flat CSV form of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub graph: String,
    pub algorithm: String,
    pub seed: u64,
    pub nc: f64,
    pub no: f64,
    pub ne: f64,
    pub na: f64,
    pub iterations: u64,
    pub runtime_ms: f64,
}

impl MetricsReport {
    pub fn row(&self) -> MetricsRow {
        MetricsRow {
            graph: self.graph.clone(),
            algorithm: self.algorithm.clone(),
            seed: self.seed,
            nc: self.nc,
            no: self.no,
            ne: self.ne,
            na: self.na,
            iterations: self.iterations,
            runtime_ms: self.runtime_ms,
        }
    }
}

/// Scores a layout. Tags (`graph`, `algorithm`, `seed`, iterations and
/// runtime) are left empty for the caller to fill.
pub fn report(layout: &Layout, graph: &Graph, params: &MetricParams) -> Result<MetricsReport> {
    layout.check_covers(graph)?;
    let crossings = count_crossings(layout, graph);
    let bound = crossing_upper_bound(graph);
    let overlaps = count_overlaps(layout, params.radius);
    let length = match params.edge_length {
        EdgeLength::BestFit => best_fit_length(layout, graph),
        EdgeLength::Fixed(l) => l,
    };
    let sigma = edge_length_error(layout, graph, length);
    let angles = min_angles(layout, graph);
    Ok(MetricsReport {
        graph: String::new(),
        algorithm: String::new(),
        seed: 0,
        nc: crossing_score(crossings, bound),
        no: overlap_score(overlaps, layout.len()),
        ne: 1.0 / (1.0 + sigma),
        na: angle_score(graph, &angles),
        raw: RawCounts {
            crossings,
            crossing_bound: bound,
            overlaps,
            sigma,
            edge_length: length,
            min_angles: angles,
        },
        iterations: 0,
        runtime_ms: 0.0,
    })
}

/// Writes rows as CSV with a header; an empty slice yields the header only.
pub fn write_csv<W: std::io::Write>(writer: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 9] =
    ["graph", "algorithm", "seed", "nc", "no", "ne", "na", "iterations", "runtime_ms"];

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn lay(pts: &[(f64, f64)]) -> Layout {
        Layout::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    fn k4() -> Graph {
        Graph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn path_on_a_line() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let l = lay(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(count_crossings(&l, &g), 0);
        assert_eq!(crossing_upper_bound(&g), 0);
        assert_eq!(nc(&l, &g), 1.0);
        assert_eq!(ne(&l, &g, 1.0), 1.0);
        // straight through: min angle 180 = ideal
        assert_eq!(na(&l, &g), 1.0);
    }

    #[test]
    fn square_k4() {
        let g = k4();
        let l = lay(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(count_crossings(&l, &g), 1);
        assert_eq!(crossing_upper_bound(&g), 3);
        assert!((nc(&l, &g) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_edge_bound_zero() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(crossing_upper_bound(&g), 0);
    }

    #[test]
    fn overlaps() {
        let l = lay(&[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(no(&l, 10.0), 0.0);
        let l = lay(&[(0.0, 0.0), (5.0, 0.0), (100.0, 0.0)]);
        assert!((no(&l, 10.0) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(no(&lay(&[(0.0, 0.0)]), 10.0), 1.0);
    }

    #[test]
    fn edge_lengths_score() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let l = lay(&[(0.0, 0.0), (60.0, 0.0)]);
        assert_eq!(ne(&l, &g, 30.0), 0.5);
        assert_eq!(best_fit_length(&l, &g), 60.0);
        let empty = Graph::from_edges(3, []).unwrap();
        assert_eq!(ne(&lay(&[(0.0, 0.0); 3]), &empty, 30.0), 1.0);
    }

    #[test]
    fn best_fit_beats_neighbours() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let l = lay(&[(0.0, 0.0), (10.0, 0.0), (40.0, 0.0), (45.0, 0.0)]);
        let best = best_fit_length(&l, &g);
        let e = edge_length_error(&l, &g, best);
        for d in [-0.5, -0.01, 0.01, 0.5] {
            assert!(edge_length_error(&l, &g, best + d) >= e);
        }
    }

    #[test]
    fn angles() {
        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let mut pts = vec![Point::ZERO];
        for i in 0..3 {
            let t = (i as f64 * 120.0_f64).to_radians();
            pts.push(Point::new(t.cos(), t.sin()));
        }
        assert!((na(&Layout::new(pts), &star) - 1.0).abs() < 1e-12);

        let cross = Graph::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let l = lay(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]);
        assert!((na(&l, &cross) - 1.0).abs() < 1e-12);

        let bend = Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let l = lay(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let a = min_angles(&l, &bend);
        assert!((a[0].unwrap() - 90.0).abs() < 1e-12);
        assert_eq!(a[1], None);
        // one node deviates by 0.5, averaged over three
        assert!((na(&l, &bend) - (1.0 - 0.5 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn report_is_stable() {
        let g = k4();
        let l = lay(&[(0.0, 0.0), (40.0, 0.0), (40.0, 40.0), (0.0, 40.0)]);
        let a = report(&l, &g, &MetricParams::default()).unwrap();
        let b = report(&l, &g, &MetricParams::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.raw.crossings, 1);
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().trim(), CSV_HEADER.join(","));
        let g = k4();
        let l = lay(&[(0.0, 0.0), (40.0, 0.0), (40.0, 40.0), (0.0, 40.0)]);
        let mut r = report(&l, &g, &MetricParams::default()).unwrap();
        r.graph = "k4".into();
        r.algorithm = "fr".into();
        buf.clear();
        write_csv(&mut buf, &[r.row(), r.row()]).unwrap();
        let back = read_csv(&buf[..]).unwrap();
        assert_eq!(back, vec![r.row(), r.row()]);
    }
}
