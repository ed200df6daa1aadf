//! Two-layer actor-critic MLP over sparse binary observations.
//!
//! All parameters live in one flat buffer so the optimizer, gradient clipping
//! and finite-difference checks can treat them uniformly.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::gridworld::{Observation, ACTIVE, OBS_DIM};

use super::LearnerError;

pub const HIDDEN: usize = 64;
pub const N_ACTIONS: usize = 7;

pub(crate) const W1: usize = 0;
pub(crate) const B1: usize = W1 + OBS_DIM * HIDDEN;
pub(crate) const W_PI: usize = B1 + HIDDEN;
pub(crate) const B_PI: usize = W_PI + N_ACTIONS * HIDDEN;
pub(crate) const W_V: usize = B_PI + N_ACTIONS;
pub(crate) const B_V: usize = W_V + HIDDEN;
pub const PARAM_COUNT: usize = B_V + 1;

/// Named parameter blocks, with their offset into the flat buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    W1,
    B1,
    WPi,
    BPi,
    WV,
    BV,
}

impl Block {
    pub const ALL: [Block; 6] = [Block::W1, Block::B1, Block::WPi, Block::BPi, Block::WV, Block::BV];

    pub fn range(self) -> std::ops::Range<usize> {
        match self {
            Block::W1 => W1..B1,
            Block::B1 => B1..W_PI,
            Block::WPi => W_PI..B_PI,
            Block::BPi => B_PI..W_V,
            Block::WV => W_V..B_V,
            Block::BV => B_V..PARAM_COUNT,
        }
    }
}

/// Actor-critic weights. `W1` is stored input-major (`OBS_DIM` rows of
/// `HIDDEN`), so a one-hot input selects one contiguous row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    data: Vec<f64>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone, Copy)]
pub struct Forward {
    pub hidden: [f64; HIDDEN],
    pub logits: [f64; N_ACTIONS],
    pub log_probs: [f64; N_ACTIONS],
    pub probs: [f64; N_ACTIONS],
    pub value: f64,
}

impl Forward {
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().zip(&self.log_probs).map(|(p, lp)| p * lp).sum::<f64>()
    }
}

impl Default for MlpParams {
    fn default() -> Self {
        Self::zeros()
    }
}

impl MlpParams {
    pub fn zeros() -> Self {
        Self {
            data: vec![0.0; PARAM_COUNT],
        }
    }

    /// Gaussian initialisation: unit-variance hidden pre-activations for a
    /// typical observation, near-uniform initial policy.
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut p = Self::zeros();
        let hidden = Normal::new(0.0, 1.0 / (ACTIVE as f64).sqrt()).expect("valid std");
        let policy = Normal::new(0.0, 0.01 / (HIDDEN as f64).sqrt()).expect("valid std");
        let value = Normal::new(0.0, 1.0 / (HIDDEN as f64).sqrt()).expect("valid std");
        for w in &mut p.data[Block::W1.range()] {
            *w = hidden.sample(rng);
        }
        for w in &mut p.data[Block::WPi.range()] {
            *w = policy.sample(rng);
        }
        for w in &mut p.data[Block::WV.range()] {
            *w = value.sample(rng);
        }
        p
    }

    pub fn from_vec(data: Vec<f64>) -> Result<Self, LearnerError> {
        if data.len() != PARAM_COUNT {
            return Err(LearnerError::Shape {
                expected: PARAM_COUNT,
                found: data.len(),
            });
        }
        Ok(Self { data })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn block(&self, b: Block) -> &[f64] {
        &self.data[b.range()]
    }

    pub fn block_mut(&mut self, b: Block) -> &mut [f64] {
        &mut self.data[b.range()]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn forward(&self, obs: &Observation) -> Forward {
        let d = &self.data;
        let mut pre = [0.0; HIDDEN];
        pre.copy_from_slice(&d[B1..B1 + HIDDEN]);
        for &j in obs.active() {
            let row = &d[W1 + j as usize * HIDDEN..W1 + (j as usize + 1) * HIDDEN];
            for (a, w) in pre.iter_mut().zip(row) {
                *a += w;
            }
        }
        self.head(pre)
    }

    /// Forward pass on an arbitrary dense input of length `OBS_DIM`.
    pub fn forward_dense(&self, x: &[f64]) -> Forward {
        assert_eq!(x.len(), OBS_DIM);
        let d = &self.data;
        let mut pre = [0.0; HIDDEN];
        pre.copy_from_slice(&d[B1..B1 + HIDDEN]);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                let row = &d[W1 + j * HIDDEN..W1 + (j + 1) * HIDDEN];
                for (a, w) in pre.iter_mut().zip(row) {
                    *a += xj * w;
                }
            }
        }
        self.head(pre)
    }

    fn head(&self, pre: [f64; HIDDEN]) -> Forward {
        let d = &self.data;
        let mut hidden = [0.0; HIDDEN];
        for (h, p) in hidden.iter_mut().zip(pre) {
            *h = p.tanh();
        }
        let mut logits = [0.0; N_ACTIONS];
        for (k, z) in logits.iter_mut().enumerate() {
            let row = &d[W_PI + k * HIDDEN..W_PI + (k + 1) * HIDDEN];
            *z = d[B_PI + k] + row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
        }
        let value = d[B_V] + d[W_V..W_V + HIDDEN].iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
        let log_probs = log_softmax(&logits);
        let mut probs = [0.0; N_ACTIONS];
        for (p, lp) in probs.iter_mut().zip(&log_probs) {
            *p = lp.exp();
        }
        Forward {
            hidden,
            logits,
            log_probs,
            probs,
            value,
        }
    }

    /// Action distribution and state value, rejecting non-finite output.
    pub fn policy_forward(&self, obs: &Observation) -> Result<([f64; N_ACTIONS], f64), LearnerError> {
        let f = self.forward(obs);
        if !f.value.is_finite() || f.log_probs.iter().any(|x| !x.is_finite()) {
            return Err(LearnerError::NumericalFault("non-finite network output".into()));
        }
        Ok((f.probs, f.value))
    }

    /// Accumulates `d loss / d params` for one sample given the loss
    /// gradients with respect to the logits and the value output.
    pub(crate) fn backward(
        &self,
        obs: &Observation,
        fwd: &Forward,
        dlogits: &[f64; N_ACTIONS],
        dvalue: f64,
        grad: &mut [f64],
    ) {
        let d = &self.data;
        let mut dh = [0.0; HIDDEN];
        for (k, &dz) in dlogits.iter().enumerate() {
            grad[B_PI + k] += dz;
            let w = &d[W_PI + k * HIDDEN..W_PI + (k + 1) * HIDDEN];
            let g = &mut grad[W_PI + k * HIDDEN..W_PI + (k + 1) * HIDDEN];
            for h in 0..HIDDEN {
                g[h] += dz * fwd.hidden[h];
                dh[h] += dz * w[h];
            }
        }
        grad[B_V] += dvalue;
        for h in 0..HIDDEN {
            grad[W_V + h] += dvalue * fwd.hidden[h];
            dh[h] += dvalue * d[W_V + h];
        }
        let mut dpre = [0.0; HIDDEN];
        for h in 0..HIDDEN {
            dpre[h] = dh[h] * (1.0 - fwd.hidden[h] * fwd.hidden[h]);
            grad[B1 + h] += dpre[h];
        }
        for &j in obs.active() {
            let g = &mut grad[W1 + j as usize * HIDDEN..W1 + (j as usize + 1) * HIDDEN];
            for (gh, dp) in g.iter_mut().zip(&dpre) {
                *gh += dp;
            }
        }
    }
}

pub fn log_softmax(z: &[f64; N_ACTIONS]) -> [f64; N_ACTIONS] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    let mut out = [0.0; N_ACTIONS];
    for (o, x) in out.iter_mut().zip(z) {
        *o = x - lse;
    }
    out
}
