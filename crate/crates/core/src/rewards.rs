//! Per-agent objectives. Every reward in the engine is
//! `objective(before move) - objective(after move)` for one of these.

use serde::{Deserialize, Serialize};

use crate::classic::{node_stress, pair_stress, total_stress};
use crate::error::{Error, Result};
use crate::forces;
use crate::geometry::{segments_cross, Point};
use crate::graph::{DistanceMatrix, Graph};
use crate::layout::Layout;

/// Parameters of the local quality measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityParams {
    /// Weights of overlaps, crossings, crowding, edge-length error and
    /// angle deviation, in that order. Must sum to 1.
    pub weights: [f64; 5],
    /// Desired edge length and minimum node distance, pixels.
    pub length: f64,
    /// Node radius for the overlap test, pixels.
    pub radius: f64,
}

impl Default for QualityParams {
    fn default() -> Self {
        QualityParams {
            weights: [0.35, 0.20, 0.10, 0.25, 0.10],
            length: 30.0,
            radius: 10.0,
        }
    }
}

/// Reward family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSpec {
    FrForce {
        k: f64,
    },
    DgcForce {
        lambda: f64,
        zeta: f64,
        mu: f64,
    },
    LocalStress {
        p_hops: u32,
        unit: f64,
    },
    GlobalStress {
        unit: f64,
    },
    Custom(QualityParams),
    /// `beta * FR force + (1 - beta) * local stress`.
    Hybrid {
        k: f64,
        p_hops: u32,
        unit: f64,
        beta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    FrForce,
    DgcForce,
    LocalStress,
    GlobalStress,
    Custom,
    Hybrid,
}

/// Value of an agent's objective at some layout. Lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub value: f64,
    pub kind: RewardKind,
}

impl RewardSpec {
    pub fn kind(&self) -> RewardKind {
        match self {
            RewardSpec::FrForce { .. } => RewardKind::FrForce,
            RewardSpec::DgcForce { .. } => RewardKind::DgcForce,
            RewardSpec::LocalStress { .. } => RewardKind::LocalStress,
            RewardSpec::GlobalStress { .. } => RewardKind::GlobalStress,
            RewardSpec::Custom(_) => RewardKind::Custom,
            RewardSpec::Hybrid { .. } => RewardKind::Hybrid,
        }
    }

    pub fn needs_distances(&self) -> bool {
        matches!(
            self,
            RewardSpec::LocalStress { .. } | RewardSpec::GlobalStress { .. } | RewardSpec::Hybrid { .. }
        )
    }

    /// Hop unit of the stress terms, when the objective has any.
    pub fn stress_unit(&self) -> Option<f64> {
        match *self {
            RewardSpec::LocalStress { unit, .. }
            | RewardSpec::GlobalStress { unit }
            | RewardSpec::Hybrid { unit, .. } => Some(unit),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidReward(format!("{name} must be positive, got {v}")))
            }
        };
        let hops = |p: u32| {
            if p >= 1 {
                Ok(())
            } else {
                Err(Error::InvalidReward("p_hops must be at least 1".into()))
            }
        };
        match *self {
            RewardSpec::FrForce { k } => positive("k", k),
            RewardSpec::DgcForce { lambda, zeta, mu } => {
                positive("lambda", lambda)?;
                positive("zeta", zeta)?;
                positive("mu", mu)
            }
            RewardSpec::LocalStress { p_hops, unit } => {
                hops(p_hops)?;
                positive("unit", unit)
            }
            RewardSpec::GlobalStress { unit } => positive("unit", unit),
            RewardSpec::Custom(q) => {
                positive("length", q.length)?;
                positive("radius", q.radius)?;
                if q.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(Error::InvalidReward("weights must be non-negative".into()));
                }
                let sum: f64 = q.weights.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidReward(format!("weights sum to {sum}, not 1")));
                }
                Ok(())
            }
            RewardSpec::Hybrid {
                k,
                p_hops,
                unit,
                beta,
            } => {
                positive("k", k)?;
                hops(p_hops)?;
                positive("unit", unit)?;
                if (0.0..=1.0).contains(&beta) {
                    Ok(())
                } else {
                    Err(Error::InvalidReward(format!("beta {beta} outside [0, 1]")))
                }
            }
        }
    }
}

/// Norm of the net Fruchterman-Reingold force on `v`.
pub fn fr_force_magnitude(v: usize, positions: &[Point], graph: &Graph, k: f64) -> f64 {
    forces::fr_force(graph, positions, v, k).norm()
}

/// Norm of the net DGC force on `v`.
pub fn dgc_force_magnitude(
    v: usize,
    positions: &[Point],
    graph: &Graph,
    lambda: f64,
    zeta: f64,
    mu: f64,
) -> f64 {
    forces::dgc_force(graph, positions, v, lambda, zeta, mu).norm()
}

/// Stress between `v` and every node at most `p_hops` hops away.
pub fn local_stress(v: usize, positions: &[Point], dist: &DistanceMatrix, p_hops: u32, unit: f64) -> f64 {
    let pv = positions[v];
    dist.row(v)
        .iter()
        .enumerate()
        .filter(|&(u, &h)| u != v && h != 0 && h <= p_hops)
        .map(|(u, &h)| pair_stress(pv.dist(positions[u]), h, unit))
        .sum()
}

/// The full layout stress, identical for every agent.
pub fn global_stress_for_agent(_v: usize, layout: &Layout, dist: &DistanceMatrix, unit: f64) -> f64 {
    total_stress(layout, dist, unit)
}

/// Unweighted components of the local quality measure of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QualityTerms {
    /// Nodes overlapping `v`.
    pub overlaps: f64,
    /// Crossings between `v`'s edges and any other edge.
    pub crossings: f64,
    /// Sum of `L - d` over nodes closer than `L`.
    pub crowding: f64,
    /// Mean relative squared error of `v`'s edge lengths.
    pub length_error: f64,
    /// Squared deviation of the angular gaps around `v` from `2pi/deg`.
    pub angle_deviation: f64,
}

impl QualityTerms {
    pub fn weighted(&self, w: &[f64; 5]) -> f64 {
        w[0] * self.overlaps
            + w[1] * self.crossings
            + w[2] * self.crowding
            + w[3] * self.length_error
            + w[4] * self.angle_deviation
    }
}

/// Number of other nodes whose centres lie closer than `2 * radius` to `v`.
pub fn node_overlaps(v: usize, positions: &[Point], radius: f64) -> usize {
    let pv = positions[v];
    positions
        .iter()
        .enumerate()
        .filter(|&(u, p)| u != v && pv.dist(*p) < 2.0 * radius)
        .count()
}

/// Crossings between edges incident to `v` and all non-adjacent edges.
pub fn node_crossings(v: usize, positions: &[Point], graph: &Graph) -> usize {
    let mut count = 0;
    for &a in graph.neighbors(v) {
        let (p1, p2) = (positions[v], positions[a]);
        for &(b, c) in graph.edges() {
            if b == v || c == v || b == a || c == a {
                continue;
            }
            if segments_cross(p1, p2, positions[b], positions[c]) {
                count += 1;
            }
        }
    }
    count
}

/// Consecutive angular gaps (radians) between `v`'s incident edges, sorted
/// by angle. They sum to `2pi`. Empty for degree below 2.
pub fn angular_gaps(v: usize, positions: &[Point], graph: &Graph) -> Vec<f64> {
    let neighbors = graph.neighbors(v);
    if neighbors.len() < 2 {
        return Vec::new();
    }
    let pv = positions[v];
    let mut angles: Vec<f64> = neighbors.iter().map(|&u| (positions[u] - pv).angle()).collect();
    angles.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = angles.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(std::f64::consts::TAU - (angles[angles.len() - 1] - angles[0]));
    gaps
}

pub fn quality_terms(v: usize, positions: &[Point], graph: &Graph, q: &QualityParams) -> QualityTerms {
    let pv = positions[v];
    let crowding = positions
        .iter()
        .enumerate()
        .filter(|&(u, _)| u != v)
        .map(|(_, p)| {
            let d = pv.dist(*p);
            if d < q.length {
                q.length - d
            } else {
                0.0
            }
        })
        .sum();

    let neighbors = graph.neighbors(v);
    let length_error = if neighbors.is_empty() {
        0.0
    } else {
        neighbors
            .iter()
            .map(|&u| {
                let rel = (pv.dist(positions[u]) - q.length) / q.length;
                rel * rel
            })
            .sum::<f64>()
            / neighbors.len() as f64
    };

    let gaps = angular_gaps(v, positions, graph);
    let angle_deviation = if gaps.is_empty() {
        0.0
    } else {
        let ideal = std::f64::consts::TAU / gaps.len() as f64;
        gaps.iter().map(|g| (g - ideal) * (g - ideal)).sum()
    };

    QualityTerms {
        overlaps: node_overlaps(v, positions, q.radius) as f64,
        crossings: node_crossings(v, positions, graph) as f64,
        crowding,
        length_error,
        angle_deviation,
    }
}

/// Weighted local quality of `v`.
pub fn local_quality(v: usize, positions: &[Point], graph: &Graph, q: &QualityParams) -> f64 {
    quality_terms(v, positions, graph, q).weighted(&q.weights)
}

fn require(dist: Option<&DistanceMatrix>) -> Result<&DistanceMatrix> {
    dist.ok_or_else(|| Error::InvalidReward("stress objectives need a distance matrix".into()))
}

/// Objective of agent `v` at `layout`.
pub fn evaluate_objective(
    spec: &RewardSpec,
    v: usize,
    layout: &Layout,
    graph: &Graph,
    dist: Option<&DistanceMatrix>,
) -> Result<Objective> {
    layout.check_covers(graph)?;
    if v >= graph.node_count() {
        return Err(Error::NodeOutOfRange(v));
    }
    let p = &layout.positions;
    let value = match *spec {
        RewardSpec::GlobalStress { unit } => global_stress_for_agent(v, layout, require(dist)?, unit),
        _ => agent_cost(spec, v, p, graph, dist)?,
    };
    Ok(Objective {
        value,
        kind: spec.kind(),
    })
}

/// The part of `v`'s objective that depends on `v`'s position. For every
/// kind except global stress this is the objective itself; for global
/// stress it is `v`'s row of the stress sum, since all other terms cancel
/// in a before/after difference.
pub fn agent_cost(
    spec: &RewardSpec,
    v: usize,
    positions: &[Point],
    graph: &Graph,
    dist: Option<&DistanceMatrix>,
) -> Result<f64> {
    Ok(match *spec {
        RewardSpec::FrForce { k } => fr_force_magnitude(v, positions, graph, k),
        RewardSpec::DgcForce { lambda, zeta, mu } => {
            dgc_force_magnitude(v, positions, graph, lambda, zeta, mu)
        }
        RewardSpec::LocalStress { p_hops, unit } => {
            local_stress(v, positions, require(dist)?, p_hops, unit)
        }
        RewardSpec::GlobalStress { unit } => node_stress(positions, require(dist)?, v, unit),
        RewardSpec::Custom(q) => local_quality(v, positions, graph, &q),
        RewardSpec::Hybrid {
            k,
            p_hops,
            unit,
            beta,
        } => {
            let force = fr_force_magnitude(v, positions, graph, k);
            let stress = local_stress(v, positions, require(dist)?, p_hops, unit);
            beta * force + (1.0 - beta) * stress
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::all_pairs_hop_distance;

    fn pair(d: f64, edge: bool) -> (Graph, Vec<Point>) {
        let edges: Vec<(usize, usize)> = if edge { vec![(0, 1)] } else { vec![] };
        let g = Graph::from_edges(2, edges).unwrap();
        (g, vec![Point::new(0.0, 0.0), Point::new(d, 0.0)])
    }

    #[test]
    fn fr_magnitudes() {
        let (g, p) = pair(30.0, true);
        assert!(fr_force_magnitude(0, &p, &g, 30.0).abs() < 1e-12);

        // attraction 60^2/30 = 120 toward, repulsion 900/60 = 15 away
        let (g, p) = pair(60.0, true);
        let f = forces::fr_force(&g, &p, 0, 30.0);
        assert!((f.norm() - 105.0).abs() < 1e-12);
        assert!(f.x > 0.0, "net force points at the neighbour");

        let (g, p) = pair(30.0, false);
        assert!((fr_force_magnitude(0, &p, &g, 30.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn dgc_magnitudes() {
        let (g, p) = pair(30.0, true);
        let m = dgc_force_magnitude(0, &p, &g, 30.0, 5.0, 5000.0);
        assert!((m - 5000.0 / 900.0).abs() < 1e-12);
        assert!((m - 5.56).abs() < 0.01);

        // compressed spring: 80 apart plus repulsion 50, both pushing away
        let (g, p) = pair(10.0, true);
        let m = dgc_force_magnitude(0, &p, &g, 30.0, 5.0, 5000.0);
        assert!((m - 130.0).abs() < 1e-12);

        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let s = 3f64.sqrt();
        let p = vec![Point::new(0.0, 0.0), Point::new(20.0, 0.0), Point::new(10.0, 10.0 * s)];
        let mags: Vec<f64> = (0..3)
            .map(|v| dgc_force_magnitude(v, &p, &tri, 30.0, 5.0, 5000.0))
            .collect();
        assert!((mags[0] - mags[1]).abs() < 1e-9 && (mags[1] - mags[2]).abs() < 1e-9);
    }

    #[test]
    fn local_stress_neighbourhoods() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let d = all_pairs_hop_distance(&g);
        let p = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0)];
        assert_eq!(local_stress(0, &p, &d, 1, 1.0), 0.0);
        let expected = (2f64.sqrt() - 2.0).powi(2) / 4.0;
        assert!((local_stress(0, &p, &d, 2, 1.0) - expected).abs() < 1e-15);

        let exact = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        for v in 0..3 {
            assert_eq!(local_stress(v, &exact, &d, 10, 1.0), 0.0);
        }
    }

    #[test]
    fn quality_isolated_far_node_is_zero() {
        let g = Graph::from_edges(3, [(1, 2)]).unwrap();
        let p = vec![Point::new(0.0, 0.0), Point::new(500.0, 0.0), Point::new(530.0, 0.0)];
        assert_eq!(local_quality(0, &p, &g, &QualityParams::default()), 0.0);
    }

    #[test]
    fn quality_single_overlap() {
        // isolated v, one node 15 px away: overlaps under radius 10 but not
        // closer than the minimum distance 10
        let g = Graph::from_edges(2, []).unwrap();
        let p = vec![Point::new(0.0, 0.0), Point::new(15.0, 0.0)];
        let q = QualityParams {
            length: 10.0,
            ..QualityParams::default()
        };
        let terms = quality_terms(0, &p, &g, &q);
        assert_eq!(terms.overlaps, 1.0);
        assert_eq!(terms.crowding, 0.0);
        assert!((local_quality(0, &p, &g, &q) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn quality_straight_degree_two() {
        let g = Graph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        let p = vec![Point::new(0.0, 0.0), Point::new(30.0, 0.0), Point::new(-30.0, 0.0)];
        let t = quality_terms(0, &p, &g, &QualityParams::default());
        assert_eq!(t.length_error, 0.0);
        assert!(t.angle_deviation < 1e-24);
        let gaps = angular_gaps(0, &p, &g);
        assert!((gaps.iter().sum::<f64>() - std::f64::consts::TAU).abs() < 1e-12);
    }

    #[test]
    fn hybrid_extremes_and_mix() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let d = all_pairs_hop_distance(&g);
        let l = Layout::new(vec![Point::new(0.0, 0.0), Point::new(40.0, 5.0), Point::new(70.0, 50.0)]);
        let eval = |beta| {
            let spec = RewardSpec::Hybrid {
                k: 30.0,
                p_hops: 10,
                unit: 30.0,
                beta,
            };
            evaluate_objective(&spec, 1, &l, &g, Some(&d)).unwrap().value
        };
        assert_eq!(eval(1.0), fr_force_magnitude(1, &l.positions, &g, 30.0));
        assert_eq!(eval(0.0), local_stress(1, &l.positions, &d, 10, 30.0));
        let f = fr_force_magnitude(1, &l.positions, &g, 30.0);
        let e = local_stress(1, &l.positions, &d, 10, 30.0);
        assert!((eval(0.5) - (0.5 * f + 0.5 * e)).abs() < 1e-12);
    }

    #[test]
    fn hybrid_hand_mix() {
        let (f, e, beta) = (10.0, 4.0, 0.5);
        assert_eq!(beta * f + (1.0 - beta) * e, 7.0);
    }

    #[test]
    fn spec_validation() {
        assert!(RewardSpec::FrForce { k: 0.0 }.validate().is_err());
        assert!(RewardSpec::LocalStress { p_hops: 0, unit: 30.0 }.validate().is_err());
        let mut q = QualityParams::default();
        assert!(RewardSpec::Custom(q).validate().is_ok());
        q.weights[0] = 0.5;
        assert!(RewardSpec::Custom(q).validate().is_err());
        let h = RewardSpec::Hybrid {
            k: 30.0,
            p_hops: 10,
            unit: 30.0,
            beta: 1.5,
        };
        assert!(h.validate().is_err());
    }

    #[test]
    fn stress_kinds_need_distances() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let l = Layout::new(vec![Point::ZERO, Point::new(1.0, 0.0)]);
        let spec = RewardSpec::GlobalStress { unit: 1.0 };
        assert!(evaluate_objective(&spec, 0, &l, &g, None).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let spec = RewardSpec::Hybrid {
            k: 30.0,
            p_hops: 10,
            unit: 30.0,
            beta: 0.5,
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains(r#""kind":"hybrid""#));
        let back: RewardSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let custom: RewardSpec = serde_json::from_str(
            r#"{"kind":"custom","weights":[0.35,0.2,0.1,0.25,0.1],"length":30,"radius":10}"#,
        )
        .unwrap();
        assert_eq!(custom, RewardSpec::Custom(QualityParams::default()));
    }
}
