//! Temperature schedule and termination criteria shared by the classic
//! spring embedders and the MARL engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// How many iterations pass between two cooling steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    /// `n + m` iterations.
    GraphSize,
    Iterations(u64),
}

impl Period {
    pub fn resolve(self, nodes: usize, edges: usize) -> u64 {
        match self {
            Period::GraphSize => (nodes + edges).max(1) as u64,
            Period::Iterations(k) => k.max(1),
        }
    }
}

/// Geometric cooling: `T(t) = initial * factor^floor(t / period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cooling {
    pub initial: f64,
    pub factor: f64,
    pub period: Period,
    /// Lower bound on the resolved period. Tiny graphs otherwise cool
    /// before a node can cross the initial frame.
    #[serde(default = "default_min_period")]
    pub min_period: u64,
}

fn default_min_period() -> u64 {
    100
}

impl Default for Cooling {
    fn default() -> Self {
        Cooling {
            initial: 10.0,
            factor: 0.75,
            period: Period::GraphSize,
            min_period: default_min_period(),
        }
    }
}

impl Cooling {
    /// Iterations between cooling steps on a graph with `nodes` and `edges`.
    pub fn period_for(&self, nodes: usize, edges: usize) -> u64 {
        self.period.resolve(nodes, edges).max(self.min_period)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial > 0.0 && self.initial.is_finite()) {
            return Err(Error::InvalidConfig("initial step must be positive".into()));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::InvalidConfig("cooling factor must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Temperature in force after `completed` iterations.
    pub fn temperature(&self, completed: u64, period: u64) -> f64 {
        let steps = completed / period.max(1);
        self.initial * self.factor.powi(steps.min(i32::MAX as u64) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceReason {
    MaxIterations,
    AvgDisplacement,
    DisplacementRate,
    StressRatio,
}

impl ConvergenceReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ConvergenceReason::MaxIterations => "max_iterations",
            ConvergenceReason::AvgDisplacement => "avg_displacement",
            ConvergenceReason::DisplacementRate => "displacement_rate",
            ConvergenceReason::StressRatio => "stress_ratio",
        }
    }
}

impl std::fmt::Display for ConvergenceReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which of the optional criteria are checked. The iteration bound is
/// always active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criteria {
    pub avg_displacement: bool,
    pub displacement_rate: bool,
    pub stress_ratio: bool,
}

impl Criteria {
    pub const DISPLACEMENT: Criteria = Criteria {
        avg_displacement: true,
        displacement_rate: true,
        stress_ratio: false,
    };
    pub const STRESS: Criteria = Criteria {
        avg_displacement: false,
        displacement_rate: false,
        stress_ratio: true,
    };
    pub const RATE_OR_STRESS: Criteria = Criteria {
        avg_displacement: false,
        displacement_rate: true,
        stress_ratio: true,
    };
    pub const NONE: Criteria = Criteria {
        avg_displacement: false,
        displacement_rate: false,
        stress_ratio: false,
    };
}

/// Span over which displacement and energy change are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Same span as the cooling period.
    CoolingPeriod,
    Iterations(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub max_iterations: u64,
    /// Threshold on the average node displacement `A`, pixels.
    pub avg_displacement: f64,
    /// Threshold on the displacement rate `|A(t) - A(t-1)|`, pixels.
    pub displacement_rate: f64,
    /// Threshold on the relative energy change.
    pub stress_ratio: f64,
    /// `None` picks the set appropriate to the objective.
    #[serde(default)]
    pub criteria: Option<Criteria>,
    pub window: Window,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            max_iterations: 2500,
            avg_displacement: 5.0,
            displacement_rate: 2.0,
            stress_ratio: 1e-4,
            criteria: None,
            window: Window::CoolingPeriod,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if !positive(self.avg_displacement)
            || !positive(self.displacement_rate)
            || !positive(self.stress_ratio)
        {
            return Err(Error::InvalidConfig(
                "convergence thresholds must be positive".into(),
            ));
        }
        if self.window == Window::Iterations(0) {
            return Err(Error::InvalidConfig("window must be positive".into()));
        }
        Ok(())
    }

    pub fn window_len(&self, cooling_period: u64) -> u64 {
        match self.window {
            Window::CoolingPeriod => cooling_period.max(1),
            Window::Iterations(k) => k.max(1),
        }
    }
}

/// Windowed convergence measurements, as of the last window boundary.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Telemetry {
    /// Iteration at which the values below were measured.
    pub measured_at: u64,
    pub avg_displacement: Option<f64>,
    pub displacement_rate: Option<f64>,
    pub stress_ratio: Option<f64>,
    pub energy: Option<f64>,
    /// Whether the energy did not increase across the last window.
    #[serde(default)]
    pub energy_decreased: bool,
}

/// Average Euclidean displacement between two position snapshots.
pub fn average_displacement(before: &[Point], after: &[Point]) -> f64 {
    if before.is_empty() {
        return 0.0;
    }
    let total: f64 = before.iter().zip(after).map(|(a, b)| a.dist(*b)).sum();
    total / before.len() as f64
}

/// `(E(t) - E(t-1)) / E(t)`, defined as 0 when the energy is zero.
pub fn stress_ratio(previous: f64, current: f64) -> f64 {
    if current == 0.0 {
        0.0
    } else {
        (current - previous) / current
    }
}

/// Tracks the windowed displacement and energy of a run and decides when
/// it has converged.
///
/// Displacement is measured as path length: the per-iteration average
/// node displacement summed over the window, so a window of one iteration
/// gives the plain `A(t)` and oscillating nodes still count as moving.
#[derive(Debug, Clone)]
pub struct ConvergenceTracker {
    window: u64,
    last: Vec<Point>,
    path: f64,
    anchor_energy: Option<f64>,
    telemetry: Telemetry,
}

impl ConvergenceTracker {
    pub fn new(window: u64, initial: &[Point], initial_energy: Option<f64>) -> Self {
        ConvergenceTracker {
            window: window.max(1),
            last: initial.to_vec(),
            path: 0.0,
            anchor_energy: initial_energy,
            telemetry: Telemetry::default(),
        }
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn set_window(&mut self, window: u64) {
        self.window = window.max(1);
    }

    pub fn telemetry(&self) -> &Telemetry {
        &self.telemetry
    }

    /// Records the state after iteration `t` (1-based). Measurements are
    /// published only when `t` closes a window.
    pub fn observe(&mut self, t: u64, positions: &[Point], energy: Option<f64>) {
        self.path += average_displacement(&self.last, positions);
        self.last.clear();
        self.last.extend_from_slice(positions);
        if t % self.window != 0 {
            return;
        }
        let avg = std::mem::take(&mut self.path);
        let rate = self.telemetry.avg_displacement.map(|prev| (avg - prev).abs());
        let (ratio, decreased) = match (self.anchor_energy, energy) {
            (Some(prev), Some(cur)) => (Some(stress_ratio(prev, cur)), cur <= prev),
            _ => (None, false),
        };
        self.telemetry = Telemetry {
            measured_at: t,
            avg_displacement: Some(avg),
            displacement_rate: rate,
            stress_ratio: ratio,
            energy,
            energy_decreased: decreased,
        };
        self.anchor_energy = energy;
    }

    /// Re-bases the tracker after an external change to the positions, so
    /// the jump is not counted and no rate spans it.
    pub fn rebase(&mut self, positions: &[Point], energy: Option<f64>) {
        self.last.clear();
        self.last.extend_from_slice(positions);
        self.anchor_energy = energy;
        self.telemetry.avg_displacement = None;
    }

    /// First satisfied criterion after `t` completed iterations, in the
    /// order: iteration bound, average displacement, displacement rate,
    /// stress ratio. Windowed criteria only fire on the iteration they
    /// were measured.
    pub fn check(
        &self,
        t: u64,
        config: &ConvergenceConfig,
        criteria: Criteria,
    ) -> Option<ConvergenceReason> {
        if t >= config.max_iterations {
            return Some(ConvergenceReason::MaxIterations);
        }
        let tel = &self.telemetry;
        if tel.measured_at != t || t == 0 {
            return None;
        }
        if criteria.avg_displacement
            && tel.avg_displacement.is_some_and(|a| a < config.avg_displacement)
        {
            return Some(ConvergenceReason::AvgDisplacement);
        }
        if criteria.displacement_rate
            && tel.displacement_rate.is_some_and(|r| r < config.displacement_rate)
        {
            return Some(ConvergenceReason::DisplacementRate);
        }
        if criteria.stress_ratio
            && tel.energy_decreased
            && tel.stress_ratio.is_some_and(|r| r.abs() < config.stress_ratio)
        {
            return Some(ConvergenceReason::StressRatio);
        }
        None
    }
}
