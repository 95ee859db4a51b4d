//! Graph layout with classic force-directed and stress methods and their
//! multi-agent Q-learning counterparts, plus the aesthetic metrics and
//! trial harness used to compare them.

pub mod classic;
pub mod convergence;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod eval;
pub mod forces;
pub mod geometry;
pub mod graph;
pub mod layout;
pub mod metrics;
pub mod params;
pub mod rewards;

pub use error::{Error, Result};
pub use geometry::Point;
pub use graph::{DistanceMatrix, Graph};
pub use layout::Layout;
