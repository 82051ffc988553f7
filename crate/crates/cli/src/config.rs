use besselop_core::discrete_operator::Scheme;
use besselop_core::weighted_space::{default_grading, MeshDescriptor};
use besselop_core::{complex_serde, Complex64, OperatorParams, SpaceParams};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::CliError;

pub const TASKS: [&str; 13] = [
    "bessel",
    "transform-params",
    "green-table",
    "resolve",
    "evolve",
    "verify-kernel",
    "verify-domination",
    "verify-conjugation",
    "verify-commutation",
    "verify-pointwise",
    "verify-splitting",
    "estimate-rbound",
    "verify-multiplier-derivative",
];

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshDescriptor>,
    pub task: TaskBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub task: Task,
}

/// Right-hand sides for the solve tasks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rhs {
    Gaussian {
        center: f64,
        width: f64,
    },
    /// Equal to 1 near the origin, cut off smoothly.
    Plateau {
        plateau_end: f64,
        support_end: f64,
    },
    Constant {
        value: f64,
    },
}

impl Default for Rhs {
    fn default() -> Self {
        Rhs::Gaussian { center: 1.0, width: 1.0 }
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn default_orders() -> Vec<f64> {
    vec![0.0, 0.5, 1.0]
}

fn default_args() -> Vec<Complex64> {
    vec![Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)]
}

fn default_grid() -> Vec<f64> {
    (1..=8).map(|k| 0.25 * k as f64).collect()
}

fn default_beta() -> f64 {
    -0.5
}

fn default_n_steps() -> usize {
    200
}

fn default_samples() -> usize {
    6
}

fn default_mu() -> f64 {
    3.0
}

fn default_support() -> (f64, f64) {
    (0.2, 3.0)
}

fn default_intervals() -> usize {
    100
}

fn default_thetas() -> Vec<f64> {
    vec![0.5, 0.8, 0.9]
}

fn default_random() -> usize {
    8
}

fn default_sizes() -> Vec<usize> {
    vec![2, 4, 8, 16]
}

fn default_draws() -> usize {
    20
}

fn default_phi() -> f64 {
    std::f64::consts::PI / 8.0
}

fn default_delta() -> f64 {
    std::f64::consts::PI / 32.0
}

fn default_fine() -> f64 {
    1e-4
}

fn default_coarse() -> f64 {
    1e-2
}

fn default_lambda_mult() -> Complex64 {
    Complex64::new(2.0, 0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Task {
    Bessel {
        #[serde(default = "default_orders")]
        orders: Vec<f64>,
        #[serde(default = "default_args", with = "complex_serde::vec")]
        args: Vec<Complex64>,
        #[serde(default)]
        scaled: bool,
    },
    TransformParams {
        #[serde(default = "default_beta")]
        beta: f64,
    },
    GreenTable {
        #[serde(default = "one", with = "complex_serde")]
        lambda: Complex64,
        #[serde(default = "default_grid")]
        y: Vec<f64>,
        #[serde(default = "default_grid")]
        rho: Vec<f64>,
    },
    Resolve {
        #[serde(default = "one", with = "complex_serde")]
        lambda: Complex64,
        #[serde(default)]
        rhs: Rhs,
    },
    Evolve {
        #[serde(default = "one", with = "complex_serde")]
        t: Complex64,
        #[serde(default = "default_n_steps")]
        n_steps: usize,
        #[serde(default)]
        scheme: Scheme,
        #[serde(default)]
        rhs: Rhs,
        #[serde(default)]
        kernel: bool,
    },
    VerifyKernel {
        #[serde(default = "default_t")]
        t: f64,
        #[serde(default = "default_n_steps")]
        n_steps: usize,
    },
    VerifyDomination {
        #[serde(default = "default_t")]
        t: f64,
        #[serde(default = "default_n_steps")]
        n_steps: usize,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    VerifyConjugation {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_support")]
        support: (f64, f64),
        #[serde(default = "default_intervals")]
        intervals: usize,
    },
    VerifyCommutation {
        #[serde(default = "default_lambda_comm", with = "complex_serde")]
        lambda: Complex64,
        #[serde(default = "default_mu")]
        mu: f64,
    },
    VerifyPointwise {
        #[serde(default = "default_random")]
        random: usize,
        #[serde(default = "default_thetas")]
        thetas: Vec<f64>,
    },
    VerifySplitting {
        #[serde(default = "default_random_split")]
        random: usize,
    },
    EstimateRbound {
        #[serde(default = "default_sizes")]
        sizes: Vec<usize>,
        #[serde(default = "default_draws")]
        draws: usize,
        #[serde(default = "default_phi")]
        phi: f64,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    VerifyMultiplierDerivative {
        #[serde(default = "default_lambda_mult", with = "complex_serde")]
        lambda: Complex64,
        #[serde(default = "default_mu")]
        mu: f64,
        #[serde(default = "default_fine")]
        fine: f64,
        #[serde(default = "default_coarse")]
        coarse: f64,
    },
}

fn default_t() -> f64 {
    1.0
}

fn default_lambda_comm() -> Complex64 {
    Complex64::new(1.0, 2.0)
}

fn default_random_split() -> usize {
    20
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Bessel { .. } => "bessel",
            Task::TransformParams { .. } => "transform-params",
            Task::GreenTable { .. } => "green-table",
            Task::Resolve { .. } => "resolve",
            Task::Evolve { .. } => "evolve",
            Task::VerifyKernel { .. } => "verify-kernel",
            Task::VerifyDomination { .. } => "verify-domination",
            Task::VerifyConjugation { .. } => "verify-conjugation",
            Task::VerifyCommutation { .. } => "verify-commutation",
            Task::VerifyPointwise { .. } => "verify-pointwise",
            Task::VerifySplitting { .. } => "verify-splitting",
            Task::EstimateRbound { .. } => "estimate-rbound",
            Task::VerifyMultiplierDerivative { .. } => "verify-multiplier-derivative",
        }
    }

    /// Solve tasks treat range violations as errors; the verify tasks only warn.
    pub fn is_solve(&self) -> bool {
        matches!(self, Task::Resolve { .. } | Task::Evolve { .. })
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(op) = &cfg.operator {
            op.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(sp) = &cfg.space {
            SpaceParams::new(sp.p, sp.m).map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn operator(&self) -> Result<OperatorParams, CliError> {
        self.operator
            .clone()
            .ok_or_else(|| CliError::Config(format!("task {} needs an operator block", self.task.task.name())))
    }

    pub fn space(&self) -> Result<SpaceParams, CliError> {
        self.space.ok_or_else(|| CliError::Config(format!("task {} needs a space block", self.task.task.name())))
    }

    /// The mesh block, or `y_max = 20`, `n = 400` and the default grading for `c`.
    pub fn mesh(&self, c: f64) -> MeshDescriptor {
        self.mesh.unwrap_or(MeshDescriptor { y_max: 20.0, n: 400, grading: default_grading(c) })
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.task.seed).unwrap_or(DEFAULT_SEED)
    }
}
