use rand::Rng;
use serde::{Deserialize, Serialize};

use super::qtable::QTable;
use crate::geometry::Point;

/// One of the nine moves available to every agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Stay,
    North,
    South,
    East,
    West,
    NorthEast,
    NorthWest,
    SouthEast,
    SouthWest,
}

const DIAG: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl Action {
    /// Fixed ordering; greedy ties resolve to the earliest entry.
    pub const ALL: [Action; 9] = [
        Action::Stay,
        Action::North,
        Action::South,
        Action::East,
        Action::West,
        Action::NorthEast,
        Action::NorthWest,
        Action::SouthEast,
        Action::SouthWest,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// Unit displacement (zero for `Stay`). Diagonals are normalized so
    /// every move has the same length.
    pub fn direction(self) -> Point {
        match self {
            Action::Stay => Point::ZERO,
            Action::North => Point::new(0.0, 1.0),
            Action::South => Point::new(0.0, -1.0),
            Action::East => Point::new(1.0, 0.0),
            Action::West => Point::new(-1.0, 0.0),
            Action::NorthEast => Point::new(DIAG, DIAG),
            Action::NorthWest => Point::new(-DIAG, DIAG),
            Action::SouthEast => Point::new(DIAG, -DIAG),
            Action::SouthWest => Point::new(-DIAG, -DIAG),
        }
    }

    /// Cell of the 3x3 grid this action leads to, row-major from the
    /// north-west corner; `Stay` is the centre.
    pub fn cell(self) -> AgentState {
        let c = match self {
            Action::NorthWest => 0,
            Action::North => 1,
            Action::NorthEast => 2,
            Action::West => 3,
            Action::Stay => 4,
            Action::East => 5,
            Action::SouthWest => 6,
            Action::South => 7,
            Action::SouthEast => 8,
        };
        AgentState(c)
    }
}

/// Grid cell of the agent's last executed action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentState(u8);

impl AgentState {
    pub const CENTER: AgentState = AgentState(4);

    pub fn new(cell: u8) -> Option<AgentState> {
        (cell < 9).then_some(AgentState(cell))
    }

    pub fn cell(self) -> usize {
        usize::from(self.0)
    }
}

impl Default for AgentState {
    fn default() -> Self {
        AgentState::CENTER
    }
}

/// Epsilon-greedy choice: a uniform action with probability `epsilon`,
/// otherwise the greedy action for `state`.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    state: AgentState,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return Action::ALL[rng.gen_range(0..Action::ALL.len())];
    }
    q.greedy(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::rng_from_seed;

    #[test]
    fn nine_actions_unit_length() {
        assert_eq!(Action::ALL.len(), 9);
        assert_eq!(Action::Stay.direction(), Point::ZERO);
        for a in &Action::ALL[1..] {
            assert!((a.direction().norm() - 1.0).abs() < 1e-15, "{a:?}");
        }
        let mut cells: Vec<usize> = Action::ALL.iter().map(|a| a.cell().cell()).collect();
        cells.sort_unstable();
        assert_eq!(cells, (0..9).collect::<Vec<_>>());
        assert_eq!(Action::Stay.cell(), AgentState::CENTER);
    }

    #[test]
    fn greedy_pick() {
        let mut q = QTable::default();
        let s = AgentState::CENTER;
        q.set(s, Action::East, 1.0);
        let mut rng = rng_from_seed(1);
        for _ in 0..10 {
            assert_eq!(select_action(&q, s, 0.0, &mut rng), Action::East);
        }
    }

    #[test]
    fn all_zero_ties_to_stay() {
        let q = QTable::default();
        let mut rng = rng_from_seed(1);
        for cell in 0..9 {
            let s = AgentState::new(cell).unwrap();
            assert_eq!(select_action(&q, s, 0.0, &mut rng), Action::Stay);
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q = QTable::default();
        let mut rng = rng_from_seed(99);
        let draws = 10_000;
        let mut counts = [0usize; 9];
        for _ in 0..draws {
            counts[select_action(&q, AgentState::CENTER, 1.0, &mut rng).index()] += 1;
        }
        let p = 1.0 / 9.0;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 3.0 * sd, "{counts:?}");
        }
    }
}
