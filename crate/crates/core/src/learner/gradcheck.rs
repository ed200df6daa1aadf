//! Central finite-difference check of the PPO loss gradient.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gridworld::{make_task, Action, TaskId};

use super::mlp::{Block, MlpParams, HIDDEN, N_ACTIONS, PARAM_COUNT};
use super::ppo::{ppo_loss, LossCoeffs, Sample};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub h: f64,
    /// Number of first-layer coordinates drawn from rows the batch activates.
    pub w1_coords: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            h: 1e-5,
            w1_coords: 400,
            seed: 0,
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Max relative error between analytic and numeric gradients over every
/// head/bias coordinate plus a random subset of first-layer weights.
pub fn gradient_check(params: &MlpParams, batch: &[Sample], coeffs: &LossCoeffs) -> f64 {
    gradient_check_with(params, batch, coeffs, &GradCheckConfig::default(), |_| {})
}

/// As [`gradient_check`], with `corrupt` applied to the analytic gradient
/// before comparison (for negative controls).
pub fn gradient_check_with(
    params: &MlpParams,
    batch: &[Sample],
    coeffs: &LossCoeffs,
    cfg: &GradCheckConfig,
    corrupt: impl Fn(&mut [f64]),
) -> f64 {
    assert!(batch.len() >= 4, "gradient check needs at least 4 samples");
    let mut analytic = vec![0.0; PARAM_COUNT];
    ppo_loss(params, batch, coeffs, Some(&mut analytic));
    corrupt(&mut analytic);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let coords = check_coordinates(batch, cfg.w1_coords, &mut rng);

    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for i in coords {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + cfg.h;
        let up = ppo_loss(&probe, batch, coeffs, None).total;
        probe.as_mut_slice()[i] = orig - cfg.h;
        let down = ppo_loss(&probe, batch, coeffs, None).total;
        probe.as_mut_slice()[i] = orig;
        let numeric = (up - down) / (2.0 * cfg.h);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}

fn check_coordinates<R: Rng + ?Sized>(batch: &[Sample], w1_coords: usize, rng: &mut R) -> Vec<usize> {
    let mut coords: Vec<usize> = Block::ALL
        .iter()
        .filter(|b| **b != Block::W1)
        .flat_map(|b| b.range())
        .collect();
    let mut rows: Vec<usize> = batch
        .iter()
        .flat_map(|s| s.observation.active().iter().map(|&j| j as usize))
        .collect();
    rows.sort_unstable();
    rows.dedup();
    let pool = rows.len() * HIDDEN;
    for k in sample(rng, pool, w1_coords.min(pool)) {
        coords.push(Block::W1.range().start + rows[k / HIDDEN] * HIDDEN + k % HIDDEN);
    }
    coords
}

/// Random batch of loss samples over real task observations. Importance
/// ratios stay clear of the clip boundaries, where the loss has a kink.
pub fn random_batch<R: Rng + ?Sized>(params: &MlpParams, n: usize, rng: &mut R) -> Vec<Sample> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let task = TaskId::ALL[rng.random_range(0..TaskId::ALL.len())];
        let mut world = make_task(task, rng.random_range(0..1000)).expect("registered task");
        for _ in 0..rng.random_range(0..6) {
            let a = Action::from_index(rng.random_range(0..N_ACTIONS)).expect("valid action");
            if world.step(a).expect("live episode").done() {
                break;
            }
        }
        if world.is_finished() {
            continue;
        }
        let obs = world.observation();
        let action = rng.random_range(0..N_ACTIONS);
        let logp = params.forward(&obs).log_probs[action];
        let ratio = loop {
            let r: f64 = rng.random_range(0.6..1.4);
            if (r - 0.8).abs() > 0.02 && (r - 1.2).abs() > 0.02 {
                break r;
            }
        };
        out.push(Sample {
            observation: obs,
            action,
            old_log_prob: logp - ratio.ln(),
            advantage: rng.random_range(-2.0..2.0),
            ret: rng.random_range(0.0..1.0),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(entropy: f64) -> LossCoeffs {
        LossCoeffs {
            clip: 0.2,
            value_coeff: 0.5,
            entropy_coeff: entropy,
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = MlpParams::init(&mut rng);
        let batch = random_batch(&params, 8, &mut rng);
        let err = gradient_check(&params, &batch, &coeffs(0.01));
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn corrupted_value_gradient_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let params = MlpParams::init(&mut rng);
        let batch = random_batch(&params, 8, &mut rng);
        let err = gradient_check_with(&params, &batch, &coeffs(0.01), &GradCheckConfig::default(), |g| {
            g[Block::WV.range()].iter_mut().for_each(|x| *x *= 2.0)
        });
        assert!(err > 0.1, "negative control only reached {err}");
    }

    #[test]
    fn zero_entropy_coefficient_still_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let params = MlpParams::init(&mut rng);
        let batch = random_batch(&params, 8, &mut rng);
        let err = gradient_check(&params, &batch, &coeffs(0.0));
        assert!(err < 1e-4, "max relative error {err}");
    }
}
