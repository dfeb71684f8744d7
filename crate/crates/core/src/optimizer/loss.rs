//! Masked symbol loss with smoothness and anchoring regularizers.

use std::collections::BTreeMap;

use crate::autodiff::{Scalar, Tape};
use crate::error::{Error, Result};
use crate::features::{part_feature, reference_frame, Part, DEGENERATE_NORM};
use crate::math::{self, lift3, lift33, Vec3};
use crate::motion::fk_frame;
use crate::quantizer::{soft_quantize_vec, templates};
use crate::script::SosScript;
use crate::skeleton::{RoleJoints, Skeleton};

use super::params::{frame_rotations, Encoding};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub smooth: f64,
    pub init: f64,
}

/// Everything needed to evaluate the loss at a parameter vector.
pub struct SosLoss<'a> {
    skeleton: &'a Skeleton,
    roles: RoleJoints,
    encoding: &'a Encoding,
    /// Targets grouped by frame: `(part, target template)`.
    targets: BTreeMap<usize, Vec<(Part, [f64; 3])>>,
    theta0: &'a [f64],
    beta: f64,
    weights: LossWeights,
}

impl<'a> SosLoss<'a> {
    pub fn new(
        skeleton: &'a Skeleton,
        encoding: &'a Encoding,
        script: &SosScript,
        theta0: &'a [f64],
        beta: f64,
        weights: LossWeights,
    ) -> Result<Self> {
        let roles = skeleton.require_roles()?;
        if script.num_frames() != encoding.frames() {
            return Err(Error::Shape(format!(
                "script spans {} frames, motion has {}",
                script.num_frames(),
                encoding.frames()
            )));
        }
        let set = templates();
        let mut targets: BTreeMap<usize, Vec<(Part, [f64; 3])>> = BTreeMap::new();
        for e in script.entries() {
            targets
                .entry(e.frame)
                .or_default()
                .push((e.part, set.for_part(e.part)[e.symbol as usize]));
        }
        Ok(Self {
            skeleton,
            roles,
            encoding,
            targets,
            theta0,
            beta,
            weights,
        })
    }

    fn evaluate<S: Scalar>(&self, theta: &[S]) -> Result<S> {
        let table = self.encoding.table(theta);
        let set = templates();

        let mut symbol_sq = S::zero();
        for (&frame, parts) in &self.targets {
            let pos = fk_frame(self.skeleton, [S::zero(); 3], &frame_rotations(&table[frame]));
            let basis = reference_frame(&pos, &self.roles)
                .unwrap_or_else(|| lift33([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]));
            for &(part, target) in parts {
                let o = part_feature(part, &pos, &basis, &self.roles);
                let q: Vec3<S> = if math::norm(o).value() < DEGENERATE_NORM {
                    lift3(soft_quantize_vec::<f64>([0.0, 1.0, 0.0], set.for_part(part), self.beta))
                } else {
                    soft_quantize_vec(o, set.for_part(part), self.beta)
                };
                let d = math::sub(q, lift3(target));
                let term = math::dot(d, d);
                if !term.value().is_finite() {
                    return Err(Error::NonFinite(format!("entry {part}@{frame}")));
                }
                symbol_sq = symbol_sq + term;
            }
        }
        let mut loss = if symbol_sq.value() > 0.0 {
            symbol_sq.sqrt()
        } else {
            S::zero()
        };

        if self.weights.smooth > 0.0 {
            let mut acc = S::zero();
            for w in table.windows(3) {
                for c in 0..w[0].len() {
                    let a = w[2][c] - w[1][c] * 2.0 + w[0][c];
                    acc = acc + a * a;
                }
            }
            loss = loss + acc * self.weights.smooth;
        }
        if self.weights.init > 0.0 {
            let mut acc = S::zero();
            for (x, x0) in theta.iter().zip(self.theta0) {
                let d = *x - *x0;
                acc = acc + d * d;
            }
            loss = loss + acc * self.weights.init;
        }
        if !loss.value().is_finite() {
            return Err(Error::NonFinite("regularization terms".into()));
        }
        Ok(loss)
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        self.evaluate(theta)
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let tape = Tape::new();
        let vars: Vec<_> = theta.iter().map(|&v| tape.var(v)).collect();
        let out = self.evaluate(&vars)?;
        let adj = tape.gradient(out);
        let grad = vars
            .iter()
            .map(|v| v.index().map_or(0.0, |i| adj[i]))
            .collect();
        Ok((out.value(), grad))
    }
}
