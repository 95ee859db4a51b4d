use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::Graph;

/// Seeded generator used everywhere randomness enters a run.
pub type LayoutRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> LayoutRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Side length of the square frame random layouts are drawn from, in pixels.
pub const DEFAULT_FRAME: f64 = 1000.0;

/// Node positions in pixels, indexed by node id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub positions: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<(f64, f64)>,
}

impl Layout {
    pub fn new(positions: Vec<Point>) -> Self {
        Layout {
            positions,
            frame: None,
        }
    }

    /// Uniform positions in a `side` x `side` frame.
    pub fn random<R: Rng + ?Sized>(n: usize, side: f64, rng: &mut R) -> Self {
        let positions = (0..n)
            .map(|_| Point::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side))
            .collect();
        Layout {
            positions,
            frame: Some((side, side)),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn check_covers(&self, graph: &Graph) -> Result<()> {
        if self.positions.len() != graph.node_count() {
            return Err(Error::LayoutMismatch {
                layout: self.positions.len(),
                graph: graph.node_count(),
            });
        }
        Ok(())
    }

    pub fn translate(&mut self, offset: Point) {
        for p in &mut self.positions {
            *p += offset;
        }
    }

    /// Rotates about the origin, then scales uniformly, then translates.
    pub fn transformed(&self, radians: f64, scale: f64, offset: Point) -> Layout {
        Layout {
            positions: self
                .positions
                .iter()
                .map(|p| p.rotate(radians) * scale + offset)
                .collect(),
            frame: self.frame,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|p| p.is_finite())
    }

    /// `{label: {x, y}}` keyed by the graph's node labels.
    pub fn to_json(&self, graph: &Graph) -> Value {
        let mut map = Map::new();
        for (v, p) in self.positions.iter().enumerate() {
            let mut xy = Map::new();
            xy.insert("x".into(), Value::from(p.x));
            xy.insert("y".into(), Value::from(p.y));
            map.insert(graph.label(v).to_string(), Value::Object(xy));
        }
        Value::Object(map)
    }

    /// Inverse of [`Layout::to_json`]; every node of `graph` must be present.
    pub fn from_json(value: &Value, graph: &Graph) -> Result<Layout> {
        let map = value
            .as_object()
            .ok_or_else(|| Error::InvalidDocument("layout is not an object".into()))?;
        let mut positions = Vec::with_capacity(graph.node_count());
        for label in graph.labels() {
            let entry = map
                .get(label)
                .ok_or_else(|| Error::UnknownNode(label.clone()))?;
            let coord = |k: &str| {
                entry
                    .get(k)
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::InvalidDocument(format!("node {label:?} lacks `{k}`")))
            };
            positions.push(Point::new(coord("x")?, coord("y")?));
        }
        Ok(Layout::new(positions))
    }
}
