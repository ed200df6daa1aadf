use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gridworld::Observation;

use super::gae::{compute_gae, standardize, Advantages, RolloutBuffer};
use super::mlp::{MlpParams, N_ACTIONS, PARAM_COUNT};
use super::LearnerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub grad_clip_norm: f64,
    pub rollout_len: usize,
    /// Sample actions during evaluation instead of taking the argmax.
    pub eval_stochastic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            learning_rate: 3e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 4,
            minibatch: 64,
            value_coeff: 0.5,
            entropy_coeff: 0.01,
            grad_clip_norm: 0.5,
            rollout_len: 256,
            eval_stochastic: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |field: &str, why: &str| Err(LearnerError::Config(format!("{field}: {why}")));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda", "must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam_beta", "must lie in [0, 1)");
        }
        for (name, v) in [
            ("clip", self.clip),
            ("learning_rate", self.learning_rate),
            ("adam_eps", self.adam_eps),
            ("grad_clip_norm", self.grad_clip_norm),
        ] {
            if v.is_nan() || v <= 0.0 {
                return bad(name, "must be positive");
            }
        }
        if self.value_coeff < 0.0 || self.entropy_coeff < 0.0 {
            return bad("coefficients", "must be nonnegative");
        }
        if self.epochs == 0 || self.minibatch == 0 || self.rollout_len == 0 {
            return bad("epochs/minibatch/rollout_len", "must be positive");
        }
        Ok(())
    }

    pub fn loss_coeffs(&self) -> LossCoeffs {
        LossCoeffs {
            clip: self.clip,
            value_coeff: self.value_coeff,
            entropy_coeff: self.entropy_coeff,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoeffs {
    pub clip: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
}

/// One training sample for the clipped surrogate loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub observation: Observation,
    pub action: usize,
    pub old_log_prob: f64,
    /// Standardized advantage.
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

/// Minibatch-mean PPO loss; accumulates its gradient into `grad` when given.
pub fn ppo_loss(params: &MlpParams, batch: &[Sample], coeffs: &LossCoeffs, mut grad: Option<&mut [f64]>) -> LossStats {
    let n = batch.len() as f64;
    let mut stats = LossStats::default();
    for s in batch {
        let f = params.forward(&s.observation);
        let logp = f.log_probs[s.action];
        let ratio = (logp - s.old_log_prob).exp();
        let clipped = ratio.clamp(1.0 - coeffs.clip, 1.0 + coeffs.clip);
        let surr1 = ratio * s.advantage;
        let surr2 = clipped * s.advantage;
        let policy = -surr1.min(surr2);
        let verr = f.value - s.ret;
        let value = coeffs.value_coeff * verr * verr;
        let entropy = f.entropy();
        stats.policy += policy / n;
        stats.value += value / n;
        stats.entropy += entropy / n;

        if let Some(g) = grad.as_deref_mut() {
            // The unclipped branch carries the gradient whenever it is the
            // minimum; otherwise the clipped ratio is constant.
            let dlogp = if surr1 <= surr2 { -s.advantage * ratio } else { 0.0 };
            let mut dlogits = [0.0; N_ACTIONS];
            for (k, dz) in dlogits.iter_mut().enumerate() {
                let p = f.probs[k];
                let onehot = if k == s.action { 1.0 } else { 0.0 };
                *dz = (dlogp * (onehot - p) + coeffs.entropy_coeff * p * (f.log_probs[k] + entropy)) / n;
            }
            let dvalue = 2.0 * coeffs.value_coeff * verr / n;
            params.backward(&s.observation, &f, &dlogits, dvalue, g);
        }
    }
    stats.total = stats.policy + stats.value - coeffs.entropy_coeff * stats.entropy;
    stats
}

pub fn global_norm(grad: &[f64]) -> f64 {
    grad.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Rescales `grad` in place so its global norm is at most `max_norm`.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = global_norm(grad);
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(config: &TrainConfig) -> Self {
        Self {
            lr: config.learning_rate,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_eps,
            t: 0,
            m: vec![0.0; PARAM_COUNT],
            v: vec![0.0; PARAM_COUNT],
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let step = self.lr / bc1;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= step * self.m[i] / ((self.v[i] / bc2).sqrt() + self.eps);
        }
    }
}

/// Builds loss samples from a filled buffer; advantages are standardized
/// across the whole rollout.
pub fn prepare_samples(buffer: &RolloutBuffer, adv: &Advantages) -> Vec<Sample> {
    let std_adv = standardize(&adv.advantages);
    buffer
        .transitions
        .iter()
        .zip(std_adv)
        .zip(&adv.returns)
        .map(|((tr, a), &ret)| Sample {
            observation: tr.observation,
            action: tr.action,
            old_log_prob: tr.log_prob,
            advantage: a,
            ret,
        })
        .collect()
}

/// Runs `epochs` passes of shuffled minibatch updates and returns the mean
/// losses over all minibatches.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut MlpParams,
    optimizer: &mut Adam,
    buffer: &RolloutBuffer,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<(LossStats, Advantages), LearnerError> {
    let adv = compute_gae(buffer, config.gamma, config.gae_lambda);
    let samples = prepare_samples(buffer, &adv);
    let coeffs = config.loss_coeffs();
    let mut grad = vec![0.0; PARAM_COUNT];
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut batch = Vec::with_capacity(config.minibatch);
    let mut mean = LossStats::default();
    let mut count = 0usize;

    for _ in 0..config.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(config.minibatch) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| samples[i]));
            grad.iter_mut().for_each(|g| *g = 0.0);
            let stats = ppo_loss(params, &batch, &coeffs, Some(&mut grad));
            if !stats.total.is_finite() {
                return Err(LearnerError::NumericalFault(format!("non-finite loss {stats:?}")));
            }
            clip_global_norm(&mut grad, config.grad_clip_norm);
            optimizer.step(params.as_mut_slice(), &grad);
            mean.total += stats.total;
            mean.policy += stats.policy;
            mean.value += stats.value;
            mean.entropy += stats.entropy;
            count += 1;
        }
    }
    if !params.is_finite() {
        return Err(LearnerError::NumericalFault("non-finite parameters after update".into()));
    }
    let k = count.max(1) as f64;
    mean.total /= k;
    mean.policy /= k;
    mean.value /= k;
    mean.entropy /= k;
    Ok((mean, adv))
}
