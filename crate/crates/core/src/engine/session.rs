use std::collections::VecDeque;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::{select_action, Action, AgentState};
use super::qtable::QTable;
use crate::classic::total_stress;
use crate::convergence::{
    average_displacement, stress_ratio, Cooling, ConvergenceConfig, ConvergenceReason,
    ConvergenceTracker, Criteria, Telemetry,
};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::graph::{all_pairs_hop_distance, DistanceMatrix, Graph};
use crate::layout::{rng_from_seed, Layout, LayoutRng, DEFAULT_FRAME};
use crate::rewards::{agent_cost, evaluate_objective, Objective, RewardKind, RewardSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QSharing {
    /// One table updated by every agent.
    Shared,
    /// One table per agent.
    PerAgent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnConfig {
    /// Learning rate.
    pub alpha: f64,
    /// Discount factor.
    pub gamma: f64,
    /// Exploration rate of the epsilon-greedy policy.
    pub epsilon: f64,
    /// Step length schedule; a move travels the current temperature.
    pub cooling: Cooling,
    /// Accept reward-decreasing moves with probability `exp(r / (kappa T))`.
    pub metropolis: bool,
    /// `kappa`, the reward scale of the acceptance test.
    pub metropolis_scale: f64,
    pub q_sharing: QSharing,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            alpha: 0.3,
            gamma: 0.5,
            epsilon: 0.1,
            cooling: Cooling::default(),
            metropolis: true,
            metropolis_scale: 1.0,
            q_sharing: QSharing::Shared,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if !(self.metropolis_scale > 0.0 && self.metropolis_scale.is_finite()) {
            return Err(Error::InvalidConfig("metropolis scale must be positive".into()));
        }
        self.cooling.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub learn: LearnConfig,
    pub convergence: ConvergenceConfig,
    /// Side of the square frame for random initial positions, pixels.
    pub frame: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            learn: LearnConfig::default(),
            convergence: ConvergenceConfig::default(),
            frame: DEFAULT_FRAME,
        }
    }
}

/// Criteria used when the configuration leaves them unset.
pub fn default_criteria(kind: RewardKind) -> Criteria {
    match kind {
        RewardKind::FrForce | RewardKind::DgcForce | RewardKind::Custom => Criteria::DISPLACEMENT,
        RewardKind::LocalStress | RewardKind::GlobalStress => Criteria::STRESS,
        RewardKind::Hybrid => Criteria::RATE_OR_STRESS,
    }
}

/// Outcome of one sweep over all agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// Iteration count after this sweep.
    pub iteration: u64,
    /// Temperature the sweep moved with.
    pub temperature: f64,
    /// Average node displacement across this sweep.
    pub avg_displacement: f64,
    /// `|A(t) - A(t-1)|`, absent on the first sweep.
    pub displacement_rate: Option<f64>,
    /// Relative energy change across this sweep, for stress objectives.
    pub stress_ratio: Option<f64>,
    pub energy: Option<f64>,
    /// Reward of every agent (0 for locked agents).
    pub rewards: Vec<f64>,
    pub accepted: usize,
    pub rejected: usize,
}

/// One entry of the session history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: u64,
    pub avg_displacement: f64,
    pub energy: Option<f64>,
}

const HISTORY_LEN: usize = 256;

/// A running multi-agent layout optimization.
#[derive(Debug, Clone)]
pub struct Session {
    graph: Arc<Graph>,
    dist: Option<Arc<DistanceMatrix>>,
    reward: RewardSpec,
    config: SessionConfig,
    layout: Layout,
    q_tables: Vec<QTable>,
    states: Vec<AgentState>,
    locked: Vec<bool>,
    iteration: u64,
    rng: LayoutRng,
    tracker: ConvergenceTracker,
    history: VecDeque<HistoryEntry>,
    last: Option<StepReport>,
    seed: u64,
}

/// Serializable view of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: u64,
    pub temperature: f64,
    pub positions: Vec<[f64; 2]>,
    pub telemetry: Telemetry,
    pub avg_displacement: Option<f64>,
    pub displacement_rate: Option<f64>,
    pub stress_ratio: Option<f64>,
    pub locked: Vec<usize>,
    pub converged: Option<ConvergenceReason>,
}

/// Result of running a session to convergence.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub layout: Layout,
    pub reason: ConvergenceReason,
    pub iterations: u64,
    pub elapsed: Duration,
}

impl Session {
    /// New session with uniformly random positions in the configured frame.
    pub fn new(graph: Arc<Graph>, reward: RewardSpec, config: SessionConfig, seed: u64) -> Result<Self> {
        Self::with_positions(graph, reward, config, seed, &[])
    }

    /// Like [`Session::new`], but nodes with a given position start there.
    /// Random draws are made for every node regardless, so unpositioned
    /// nodes land where they would in a fresh session.
    pub fn with_positions(
        graph: Arc<Graph>,
        reward: RewardSpec,
        config: SessionConfig,
        seed: u64,
        given: &[Option<Point>],
    ) -> Result<Self> {
        let n = graph.node_count();
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        reward.validate()?;
        config.learn.validate()?;
        config.convergence.validate()?;
        if !(config.frame > 0.0) {
            return Err(Error::InvalidConfig("frame must be positive".into()));
        }
        let mut rng = rng_from_seed(seed);
        let mut layout = Layout::random(n, config.frame, &mut rng);
        for (p, g) in layout.positions.iter_mut().zip(given) {
            if let Some(g) = g {
                *p = *g;
            }
        }
        let dist = reward
            .needs_distances()
            .then(|| Arc::new(all_pairs_hop_distance(&graph)));
        let tables = match config.learn.q_sharing {
            QSharing::Shared => 1,
            QSharing::PerAgent => n,
        };
        let period = config.learn.cooling.period_for(n, graph.edge_count());
        let window = config.convergence.window_len(period);
        let mut session = Session {
            tracker: ConvergenceTracker::new(window, &layout.positions, None),
            graph,
            dist,
            reward,
            config,
            layout,
            q_tables: vec![QTable::default(); tables],
            states: vec![AgentState::CENTER; n],
            locked: vec![false; n],
            iteration: 0,
            rng,
            history: VecDeque::with_capacity(HISTORY_LEN),
            last: None,
            seed,
        };
        let energy = session.energy();
        session.tracker = ConvergenceTracker::new(window, &session.layout.positions, energy);
        Ok(session)
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn positions(&self) -> &[Point] {
        &self.layout.positions
    }

    pub fn reward(&self) -> &RewardSpec {
        &self.reward
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn agent_states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn q_tables(&self) -> &[QTable] {
        &self.q_tables
    }

    pub fn history(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.history.iter()
    }

    pub fn last_report(&self) -> Option<&StepReport> {
        self.last.as_ref()
    }

    pub fn telemetry(&self) -> &Telemetry {
        self.tracker.telemetry()
    }

    pub fn distances(&self) -> Option<&DistanceMatrix> {
        self.dist.as_deref()
    }

    pub fn cooling_period(&self) -> u64 {
        self.config
            .learn
            .cooling
            .period_for(self.graph.node_count(), self.graph.edge_count())
    }

    /// Step length for the next sweep.
    pub fn temperature(&self) -> f64 {
        self.config
            .learn
            .cooling
            .temperature(self.iteration, self.cooling_period())
    }

    pub fn criteria(&self) -> Criteria {
        self.config
            .convergence
            .criteria
            .unwrap_or_else(|| default_criteria(self.reward.kind()))
    }

    /// Total layout stress for stress-based objectives.
    pub fn energy(&self) -> Option<f64> {
        let unit = self.reward.stress_unit()?;
        let dist = self.dist.as_deref()?;
        Some(total_stress(&self.layout, dist, unit))
    }

    pub fn objective(&self, v: usize) -> Result<Objective> {
        evaluate_objective(&self.reward, v, &self.layout, &self.graph, self.dist.as_deref())
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v < self.graph.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange(v))
        }
    }

    pub fn lock_node(&mut self, v: usize) -> Result<()> {
        self.check_node(v)?;
        self.locked[v] = true;
        Ok(())
    }

    pub fn unlock_node(&mut self, v: usize) -> Result<()> {
        self.check_node(v)?;
        self.locked[v] = false;
        Ok(())
    }

    pub fn is_locked(&self, v: usize) -> bool {
        self.locked.get(v).copied().unwrap_or(false)
    }

    pub fn locked_nodes(&self) -> Vec<usize> {
        (0..self.locked.len()).filter(|&v| self.locked[v]).collect()
    }

    /// Places `v` at `p` directly, as an external accepted move.
    pub fn set_position(&mut self, v: usize, p: Point) -> Result<()> {
        self.check_node(v)?;
        if !p.is_finite() {
            return Err(Error::InvalidConfig("position must be finite".into()));
        }
        self.layout.positions[v] = p;
        Ok(())
    }

    /// Clears every Q-table and returns all agents to the centre state.
    pub fn reset_learning(&mut self) {
        for q in &mut self.q_tables {
            q.clear();
        }
        self.states.fill(AgentState::CENTER);
    }

    pub fn set_learn_config(&mut self, learn: LearnConfig) -> Result<()> {
        learn.validate()?;
        if learn.q_sharing != self.config.learn.q_sharing {
            return Err(Error::InvalidConfig("Q-table sharing is fixed per session".into()));
        }
        let period_changed = learn.cooling.period != self.config.learn.cooling.period
            || learn.cooling.min_period != self.config.learn.cooling.min_period;
        self.config.learn = learn;
        if period_changed {
            self.rewindow();
        }
        Ok(())
    }

    pub fn set_convergence(&mut self, convergence: ConvergenceConfig) -> Result<()> {
        convergence.validate()?;
        let window_changed = convergence.window != self.config.convergence.window;
        self.config.convergence = convergence;
        if window_changed {
            self.rewindow();
        }
        Ok(())
    }

    fn rewindow(&mut self) {
        let window = self.config.convergence.window_len(self.cooling_period());
        self.tracker.set_window(window);
        let energy = self.energy();
        self.tracker.rebase(&self.layout.positions, energy);
    }

    /// Swaps the objective. Kinds that need hop distances compute them on
    /// first use.
    pub fn set_reward(&mut self, reward: RewardSpec) -> Result<()> {
        reward.validate()?;
        if reward.needs_distances() && self.dist.is_none() {
            self.dist = Some(Arc::new(all_pairs_hop_distance(&self.graph)));
        }
        let energy_changed = reward.stress_unit() != self.reward.stress_unit();
        self.reward = reward;
        if energy_changed {
            let energy = self.energy();
            self.tracker.rebase(&self.layout.positions, energy);
        }
        Ok(())
    }

    fn cost(&self, v: usize) -> f64 {
        agent_cost(
            &self.reward,
            v,
            &self.layout.positions,
            &self.graph,
            self.dist.as_deref(),
        )
        .expect("reward validated against session")
    }

    /// One sweep: every unlocked agent in ascending id order picks an
    /// action, moves, and learns from the change in its objective.
    pub fn step(&mut self) -> StepReport {
        let n = self.graph.node_count();
        let temperature = self.temperature();
        let learn = self.config.learn;
        let shared = learn.q_sharing == QSharing::Shared;
        let before_sweep = self.layout.positions.clone();
        let energy_before = self.last.as_ref().and_then(|r| r.energy).or_else(|| self.energy());

        let mut rewards = vec![0.0; n];
        let (mut accepted, mut rejected) = (0, 0);
        for v in 0..n {
            if self.locked[v] {
                continue;
            }
            let table = if shared { 0 } else { v };
            let state = self.states[v];
            let action = select_action(&self.q_tables[table], state, learn.epsilon, &mut self.rng);

            let (reward, next) = if action == Action::Stay {
                accepted += 1;
                (0.0, Action::Stay.cell())
            } else {
                let before = self.cost(v);
                let origin = self.layout.positions[v];
                self.layout.positions[v] = origin + action.direction() * temperature;
                let after = self.cost(v);
                let reward = before - after;
                let keep = reward >= 0.0
                    || (learn.metropolis
                        && self.rng.gen::<f64>()
                            < (reward / (learn.metropolis_scale * temperature)).exp());
                if keep {
                    accepted += 1;
                    (reward, action.cell())
                } else {
                    self.layout.positions[v] = origin;
                    rejected += 1;
                    (reward, state)
                }
            };

            // objectives are finite for finite layouts; guard anyway
            let reward = if reward.is_finite() { reward } else { 0.0 };
            self.q_tables[table]
                .update(state, action, next, reward, learn.alpha, learn.gamma)
                .expect("finite reward");
            self.states[v] = next;
            rewards[v] = reward;
        }

        self.iteration += 1;
        let avg = average_displacement(&before_sweep, &self.layout.positions);
        let energy = self.energy();
        let report = StepReport {
            iteration: self.iteration,
            temperature,
            avg_displacement: avg,
            displacement_rate: self.last.as_ref().map(|r| (avg - r.avg_displacement).abs()),
            stress_ratio: match (energy_before, energy) {
                (Some(prev), Some(cur)) => Some(stress_ratio(prev, cur)),
                _ => None,
            },
            energy,
            rewards,
            accepted,
            rejected,
        };
        self.tracker.observe(self.iteration, &self.layout.positions, energy);
        if self.history.len() == HISTORY_LEN {
            self.history.pop_front();
        }
        self.history.push_back(HistoryEntry {
            iteration: self.iteration,
            avg_displacement: avg,
            energy,
        });
        self.last = Some(report.clone());
        report
    }

    /// First satisfied termination criterion, if any.
    pub fn check_convergence(&self) -> Option<ConvergenceReason> {
        self.tracker
            .check(self.iteration, &self.config.convergence, self.criteria())
    }

    pub fn run_until_converged(&mut self) -> RunResult {
        let start = Instant::now();
        let reason = loop {
            if let Some(reason) = self.check_convergence() {
                break reason;
            }
            self.step();
        };
        RunResult {
            layout: self.layout.clone(),
            reason,
            iterations: self.iteration,
            elapsed: start.elapsed(),
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            iteration: self.iteration,
            temperature: self.temperature(),
            positions: self.layout.positions.iter().map(|p| [p.x, p.y]).collect(),
            telemetry: *self.tracker.telemetry(),
            avg_displacement: self.last.as_ref().map(|r| r.avg_displacement),
            displacement_rate: self.last.as_ref().and_then(|r| r.displacement_rate),
            stress_ratio: self.last.as_ref().and_then(|r| r.stress_ratio),
            locked: self.locked_nodes(),
            converged: self.check_convergence(),
        }
    }
}
