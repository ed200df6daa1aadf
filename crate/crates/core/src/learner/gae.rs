use serde::{Deserialize, Serialize};

use crate::gridworld::Observation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub action: usize,
    pub log_prob: f64,
    pub reward: f64,
    pub value: f64,
    /// Terminated or truncated.
    pub done: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    /// Value of the state after the last transition; ignored when it is done.
    pub bootstrap_value: f64,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advantages {
    /// Raw generalized advantage estimates.
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Advantages {
    /// Mean absolute raw advantage: the value-error signal handed to schedulers.
    pub fn mean_abs(&self) -> f64 {
        if self.advantages.is_empty() {
            return 0.0;
        }
        self.advantages.iter().map(|a| a.abs()).sum::<f64>() / self.advantages.len() as f64
    }

    /// Zero-mean, unit-variance copy used only inside the policy loss.
    pub fn standardized(&self) -> Vec<f64> {
        standardize(&self.advantages)
    }
}

pub fn standardize(xs: &[f64]) -> Vec<f64> {
    if xs.is_empty() {
        return Vec::new();
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    xs.iter().map(|x| (x - mean) / std).collect()
}

/// Backward recursion `A_t = δ_t + γλ(1 − done_t) A_{t+1}`.
pub fn compute_gae(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> Advantages {
    let n = buffer.len();
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = buffer.bootstrap_value;
    for t in (0..n).rev() {
        let tr = &buffer.transitions[t];
        let live = if tr.done { 0.0 } else { 1.0 };
        let delta = tr.reward + gamma * next_value * live - tr.value;
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
        next_value = tr.value;
    }
    let returns = advantages
        .iter()
        .zip(&buffer.transitions)
        .map(|(a, tr)| a + tr.value)
        .collect();
    Advantages { advantages, returns }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{make_task, TaskId};

    fn buffer(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64) -> RolloutBuffer {
        let obs = make_task(TaskId::Empty, 0).unwrap().observation();
        RolloutBuffer {
            transitions: rewards
                .iter()
                .zip(values)
                .zip(dones)
                .map(|((&reward, &value), &done)| Transition {
                    observation: obs,
                    action: 0,
                    log_prob: -1.0,
                    reward,
                    value,
                    done,
                })
                .collect(),
            bootstrap_value: bootstrap,
        }
    }

    /// Forward-sum oracle: A_t = Σ_k (γλ)^k δ_{t+k}, truncated at episode ends.
    fn forward_sum(b: &RolloutBuffer, gamma: f64, lambda: f64) -> Vec<f64> {
        let n = b.len();
        let value_after = |t: usize| if t + 1 < n { b.transitions[t + 1].value } else { b.bootstrap_value };
        let deltas: Vec<f64> = (0..n)
            .map(|t| {
                let tr = &b.transitions[t];
                let live = if tr.done { 0.0 } else { 1.0 };
                tr.reward + gamma * value_after(t) * live - tr.value
            })
            .collect();
        (0..n)
            .map(|t| {
                let mut sum = 0.0;
                let mut w = 1.0;
                for k in t..n {
                    sum += w * deltas[k];
                    if b.transitions[k].done {
                        break;
                    }
                    w *= gamma * lambda;
                }
                sum
            })
            .collect()
    }

    #[test]
    fn three_step_fixture_matches_forward_sum() {
        let b = buffer(&[0.0, 0.0, 1.0], &[0.5, 0.5, 0.5], &[false, false, true], 0.0);
        let gae = compute_gae(&b, 0.99, 0.95);
        let oracle = forward_sum(&b, 0.99, 0.95);
        for (a, o) in gae.advantages.iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-12);
        }
        // Hand values: δ = (-0.005, -0.005, 0.5).
        assert!((gae.advantages[2] - 0.5).abs() < 1e-12);
        assert!((gae.advantages[1] - (-0.005 + 0.9405 * 0.5)).abs() < 1e-12);
        assert!((gae.returns[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_zero_gives_td_errors() {
        let b = buffer(&[0.1, 0.0, 0.3, 0.0], &[0.2, 0.4, 0.1, 0.7], &[false, true, false, false], 0.9);
        let gae = compute_gae(&b, 0.9, 0.0);
        let expected = [0.1 + 0.9 * 0.4 - 0.2, 0.0 - 0.4, 0.3 + 0.9 * 0.7 - 0.1, 0.9 * 0.9 - 0.7];
        for (a, e) in gae.advantages.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_zero_gives_reward_minus_value() {
        let b = buffer(&[0.1, 0.0, 0.3], &[0.2, 0.4, 0.1], &[false, false, false], 5.0);
        let gae = compute_gae(&b, 0.0, 0.95);
        for (a, tr) in gae.advantages.iter().zip(&b.transitions) {
            assert!((a - (tr.reward - tr.value)).abs() < 1e-15);
        }
    }

    #[test]
    fn recursion_matches_oracle_on_longer_buffers() {
        let rewards: Vec<f64> = (0..40).map(|i| ((i * 7) % 5) as f64 / 5.0).collect();
        let values: Vec<f64> = (0..40).map(|i| ((i * 3) % 11) as f64 / 11.0).collect();
        let dones: Vec<bool> = (0..40).map(|i| i % 9 == 8).collect();
        let b = buffer(&rewards, &values, &dones, 0.37);
        let gae = compute_gae(&b, 0.99, 0.95);
        for (a, o) in gae.advantages.iter().zip(forward_sum(&b, 0.99, 0.95)) {
            assert!((a - o).abs() < 1e-12);
        }
    }

    #[test]
    fn standardization_moments() {
        let xs: Vec<f64> = (0..256).map(|i| ((i * 37) % 101) as f64 * 0.013 - 0.4).collect();
        let z = standardize(&xs);
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let std = (z.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-10);
        assert!((std - 1.0).abs() < 1e-6);
        // Constant input hits the std guard instead of dividing by zero.
        assert!(standardize(&[0.3; 8]).iter().all(|x| *x == 0.0));
    }
}
