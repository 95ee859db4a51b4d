//! Multi-agent Q-learning layout engine.

mod action;
mod qtable;
mod session;

pub use action::{select_action, Action, AgentState};
pub use qtable::QTable;
pub use session::{
    default_criteria, HistoryEntry, LearnConfig, QSharing, RunResult, Session, SessionConfig,
    Snapshot, StepReport,
};
