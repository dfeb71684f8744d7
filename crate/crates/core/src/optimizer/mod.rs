//! Gradient-based editing of a motion until it realizes a target script.
//!
//! The motion is parameterized either directly (per-frame root yaw and
//! joint rotation vectors) or as a band-limited periodic offset from the
//! initial motion. Each step descends the masked symbol loss, by default
//! with an Armijo backtracking line search.

mod loss;
mod metrics;
pub mod params;

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::Motion;
use crate::script::SosScript;

pub use loss::{LossWeights, SosLoss};
pub use metrics::{l2_rot6d, sos_accuracy};
pub use params::Encoding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Direct,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Armijo backtracking (`c = 1e-4`, halving).
    Backtracking,
    /// `theta -= step_weight * grad`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub mode: Mode,
    pub harmonics: usize,
    pub step: StepRule,
    pub step_weight: f64,
    pub lambda_smooth: f64,
    pub lambda_init: f64,
    pub beta: f64,
    #[serde(alias = "iters")]
    pub max_iters: usize,
    pub tolerance: f64,
    /// Recorded for reproducibility; the descent itself is deterministic.
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            mode: Mode::Direct,
            harmonics: 3,
            step: StepRule::Backtracking,
            step_weight: 1.0,
            lambda_smooth: 1e-2,
            lambda_init: 1e-3,
            beta: 10.0,
            max_iters: 100,
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("step_weight", self.step_weight),
            ("lambda_smooth", self.lambda_smooth),
            ("lambda_init", self.lambda_init),
            ("tolerance", self.tolerance),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Parameter(format!("beta must be positive and finite, got {}", self.beta)));
        }
        if self.mode == Mode::Periodic && self.harmonics == 0 {
            return Err(Error::Parameter("periodic mode needs at least one harmonic".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub initial: Motion,
    pub script: SosScript,
    pub settings: OptimizerSettings,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub motion: Motion,
    pub loss_trace: Vec<f64>,
    pub sos_acc: f64,
    pub l2_rot6d: f64,
    /// Every script symbol is realized by the result.
    pub converged: bool,
    pub iterations: usize,
}

impl OptimizationResult {
    /// `iteration,loss` rows with a header.
    pub fn loss_trace_csv(&self) -> String {
        let mut out = String::from("iteration,loss\n");
        for (i, l) in self.loss_trace.iter().enumerate() {
            let _ = writeln!(out, "{i},{l:e}");
        }
        out
    }
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;
const MAX_STEP: f64 = 16.0;

pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationResult> {
    let s = &problem.settings;
    s.validate()?;
    let x0 = &problem.initial;
    if problem.script.num_frames() != x0.num_frames() {
        return Err(Error::Shape(format!(
            "script spans {} frames, motion has {}",
            problem.script.num_frames(),
            x0.num_frames()
        )));
    }
    x0.skeleton().require_roles()?;

    let table0 = params::encode_direct(x0);
    let (encoding, theta0) = match s.mode {
        Mode::Direct => Encoding::direct(&table0),
        Mode::Periodic => Encoding::periodic(&table0, s.harmonics)?,
    };
    let weights = LossWeights {
        smooth: s.lambda_smooth,
        init: s.lambda_init,
    };
    let loss = SosLoss::new(x0.skeleton(), &encoding, &problem.script, &theta0, s.beta, weights)?;

    let mut theta = theta0.clone();
    let (mut value, mut grad) = loss.value_and_gradient(&theta)?;
    let mut trace = vec![value];
    let mut eta: f64 = 0.5;
    let mut iterations = 0;
    while iterations < s.max_iters {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2 == 0.0 {
            break;
        }
        let next = match s.step {
            StepRule::Fixed => theta.iter().zip(&grad).map(|(t, g)| t - s.step_weight * g).collect(),
            StepRule::Backtracking => {
                let mut accepted = None;
                eta = (2.0 * eta).min(MAX_STEP);
                for _ in 0..MAX_HALVINGS {
                    let step = eta * s.step_weight;
                    let cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
                    match loss.value(&cand) {
                        Ok(v) if v <= value - ARMIJO_C * step * gnorm2 => {
                            accepted = Some(cand);
                            break;
                        }
                        _ => eta *= 0.5,
                    }
                }
                match accepted {
                    Some(c) => c,
                    None => break,
                }
            }
        };
        let (v, g) = loss.value_and_gradient(&next)?;
        iterations += 1;
        theta = next;
        grad = g;
        let delta = (value - v).abs();
        value = v;
        trace.push(value);
        if delta < s.tolerance {
            break;
        }
    }

    let motion = if iterations == 0 {
        x0.clone()
    } else {
        params::decode_direct(x0, &encoding.table::<f64>(&theta))?
    };
    let sos_acc = sos_accuracy(&motion, &problem.script)?;
    let l2 = l2_rot6d(&motion, x0)?;
    Ok(OptimizationResult {
        motion,
        loss_trace: trace,
        sos_acc,
        l2_rot6d: l2,
        converged: sos_acc == 1.0,
        iterations,
    })
}
