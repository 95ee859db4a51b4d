//! One flat bag of every tunable, with builders for each algorithm's
//! own parameter struct.

use serde::{Deserialize, Serialize};

use crate::classic::{DgcParams, FrParams, StressParams};
use crate::convergence::ConvergenceConfig;
use crate::engine::{LearnConfig, SessionConfig};
use crate::error::Result;
use crate::layout::DEFAULT_FRAME;
use crate::metrics::MetricParams;
use crate::rewards::{QualityParams, RewardSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// FR optimal distance.
    pub k: f64,
    /// DGC ideal edge length.
    pub lambda: f64,
    /// DGC elastic constant.
    pub zeta: f64,
    /// DGC repulsion constant.
    pub mu: f64,
    /// Neighbourhood radius of the local stress reward, hops.
    pub p_hops: u32,
    /// Custom reward weights.
    pub omega: [f64; 5],
    /// Custom reward edge length.
    pub length: f64,
    /// Hybrid mix, 1 = pure FR force.
    pub beta: f64,
    /// Pixels per hop for every stress computation.
    pub stress_unit: f64,
    /// Node radius for overlap tests.
    pub radius: f64,
    /// Side of the square initial frame.
    pub frame: f64,
    pub learn: LearnConfig,
    pub convergence: ConvergenceConfig,
    pub metrics: MetricParams,
}

impl Default for Params {
    fn default() -> Self {
        let quality = QualityParams::default();
        Params {
            k: 30.0,
            lambda: 30.0,
            zeta: 5.0,
            mu: 5000.0,
            p_hops: 10,
            omega: quality.weights,
            length: quality.length,
            beta: 0.5,
            stress_unit: 30.0,
            radius: quality.radius,
            frame: DEFAULT_FRAME,
            learn: LearnConfig::default(),
            convergence: ConvergenceConfig::default(),
            metrics: MetricParams::default(),
        }
    }
}

impl Params {
    pub fn fr(&self) -> FrParams {
        FrParams {
            k: self.k,
            cooling: self.learn.cooling,
            convergence: self.convergence,
            frame: self.frame,
        }
    }

    pub fn dgc(&self) -> DgcParams {
        DgcParams {
            lambda: self.lambda,
            zeta: self.zeta,
            mu: self.mu,
            cooling: self.learn.cooling,
            convergence: self.convergence,
            frame: self.frame,
        }
    }

    pub fn stress(&self) -> StressParams {
        StressParams {
            unit: self.stress_unit,
            tolerance: self.convergence.stress_ratio,
            max_iterations: self.convergence.max_iterations,
            frame: self.frame,
        }
    }

    pub fn quality(&self) -> QualityParams {
        QualityParams { weights: self.omega, length: self.length, radius: self.radius }
    }

    pub fn session(&self) -> SessionConfig {
        SessionConfig { learn: self.learn, convergence: self.convergence, frame: self.frame }
    }

    pub fn fr_reward(&self) -> RewardSpec {
        RewardSpec::FrForce { k: self.k }
    }

    pub fn dgc_reward(&self) -> RewardSpec {
        RewardSpec::DgcForce { lambda: self.lambda, zeta: self.zeta, mu: self.mu }
    }

    pub fn local_stress_reward(&self) -> RewardSpec {
        RewardSpec::LocalStress { p_hops: self.p_hops, unit: self.stress_unit }
    }

    pub fn global_stress_reward(&self) -> RewardSpec {
        RewardSpec::GlobalStress { unit: self.stress_unit }
    }

    pub fn custom_reward(&self) -> RewardSpec {
        RewardSpec::Custom(self.quality())
    }

    pub fn hybrid_reward(&self) -> RewardSpec {
        RewardSpec::Hybrid {
            k: self.k,
            p_hops: self.p_hops,
            unit: self.stress_unit,
            beta: self.beta,
        }
    }

    /// Checks every field used by any algorithm.
    pub fn validate(&self) -> Result<()> {
        for spec in [
            self.fr_reward(),
            self.dgc_reward(),
            self.local_stress_reward(),
            self.global_stress_reward(),
            self.custom_reward(),
            self.hybrid_reward(),
        ] {
            spec.validate()?;
        }
        self.learn.validate()?;
        self.convergence.validate()?;
        if !(self.frame > 0.0 && self.frame.is_finite()) {
            return Err(crate::Error::InvalidConfig("frame must be positive".into()));
        }
        if !(self.metrics.radius >= 0.0) {
            return Err(crate::Error::InvalidConfig("radius must be non-negative".into()));
        }
        Ok(())
    }
}
