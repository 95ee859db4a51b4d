use serde::{Deserialize, Serialize};

use super::action::{Action, AgentState};
use crate::error::{Error, Result};

/// Tabular action values over the nine states and nine actions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QTable {
    values: [[f64; 9]; 9],
}

impl QTable {
    pub fn get(&self, s: AgentState, a: Action) -> f64 {
        self.values[s.cell()][a.index()]
    }

    pub fn set(&mut self, s: AgentState, a: Action, value: f64) {
        self.values[s.cell()][a.index()] = value;
    }

    pub fn row(&self, s: AgentState) -> &[f64; 9] {
        &self.values[s.cell()]
    }

    pub fn max_value(&self, s: AgentState) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Argmax over actions, first in [`Action::ALL`] order on ties.
    pub fn greedy(&self, s: AgentState) -> Action {
        let row = self.row(s);
        let mut best = 0;
        for i in 1..row.len() {
            if row[i] > row[best] {
                best = i;
            }
        }
        Action::ALL[best]
    }

    /// `q[s,a] <- (1 - alpha) q[s,a] + alpha (r + gamma max_a' q[s',a'])`.
    pub fn update(
        &mut self,
        s: AgentState,
        a: Action,
        next: AgentState,
        reward: f64,
        alpha: f64,
        gamma: f64,
    ) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::NonFiniteReward(reward));
        }
        let target = reward + gamma * self.max_value(next);
        let cell = &mut self.values[s.cell()][a.index()];
        *cell = (1.0 - alpha) * *cell + alpha * target;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn clear(&mut self) {
        self.values = [[0.0; 9]; 9];
    }
}
