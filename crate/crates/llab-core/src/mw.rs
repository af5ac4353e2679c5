//! Multiplicative weights over a finite expert pool.
//!
//! Experts suffer 0-1 losses. After `s` rounds expert `i` carries weight
//! `exp(-eta * cum_loss_i)`; the learner's prediction each round is the
//! weight-proportional mixture of the experts' current outputs. With
//! `eta = sqrt((8/T) ln N)` the cumulative mixture loss exceeds the best
//! expert's loss by at most `sqrt((T/2) ln N)`.
//!
//! Weights are maintained in log space: the state stores integer cumulative
//! losses and derives `log w_i = -eta * cum_loss_i` exactly, so the weight
//! invariant holds to full precision and mixtures stay stable for any
//! horizon.

use crate::concept::PredictionDistribution;
use crate::error::{Error, Result};

/// Slack allowed when asserting regret bounds and mixture-loss identities.
pub const REGRET_TOLERANCE: f64 = 1e-9;

/// The tuned learning rate `sqrt((8/T) ln N)`.
///
/// Requires `t >= 1` and `n_experts >= 1`; a single expert yields `0`.
pub fn mw_eta(t: usize, n_experts: usize) -> f64 {
    debug_assert!(t >= 1 && n_experts >= 1);
    ((8.0 / t as f64) * (n_experts as f64).ln()).sqrt()
}

/// The worst-case regret bound `sqrt((T/2) ln N)` matching [`mw_eta`].
pub fn mw_regret_bound(t: usize, n_experts: usize) -> f64 {
    debug_assert!(t >= 1 && n_experts >= 1);
    ((t as f64 / 2.0) * (n_experts as f64).ln()).sqrt()
}

/// Weight state for a fixed pool of experts.
#[derive(Debug, Clone)]
pub struct MwState {
    eta: f64,
    cum_losses: Vec<u64>,
    rounds: usize,
}

impl MwState {
    /// Fresh state: every expert starts with zero loss and weight one.
    pub fn new(n_experts: usize, eta: f64) -> Result<MwState> {
        if n_experts == 0 {
            return Err(Error::InvalidInput("expert pool must be non-empty".into()));
        }
        if eta.is_nan() || eta < 0.0 {
            return Err(Error::InvalidInput(format!("learning rate must be >= 0, got {eta}")));
        }
        Ok(MwState { eta, cum_losses: vec![0; n_experts], rounds: 0 })
    }

    /// Number of experts.
    pub fn n_experts(&self) -> usize {
        self.cum_losses.len()
    }

    /// The learning rate.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Rounds absorbed so far.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// Cumulative 0-1 losses per expert.
    pub fn cumulative_losses(&self) -> &[u64] {
        &self.cum_losses
    }

    /// Smallest cumulative loss over the pool.
    pub fn min_cumulative_loss(&self) -> u64 {
        *self.cum_losses.iter().min().expect("pool is non-empty")
    }

    /// Log-weight of expert `i`: exactly `-eta * cum_loss_i`.
    pub fn log_weight(&self, i: usize) -> f64 {
        -self.eta * self.cum_losses[i] as f64
    }

    /// Unnormalized weights `exp(-eta * cum_loss_i)`.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.n_experts()).map(|i| self.log_weight(i).exp()).collect()
    }

    /// Shifted weights `exp(log w_i - max_j log w_j)`; proportional to the
    /// true weights with maximum exactly one, safe against underflow.
    fn shifted_weights(&self) -> Vec<f64> {
        let min_loss = self.min_cumulative_loss();
        self.cum_losses
            .iter()
            .map(|&l| (-self.eta * (l - min_loss) as f64).exp())
            .collect()
    }

    /// Absorbs one round of 0-1 losses.
    pub fn update(&mut self, losses: &[bool]) -> Result<()> {
        if losses.len() != self.n_experts() {
            return Err(Error::InvalidInput(format!(
                "got {} losses for {} experts",
                losses.len(),
                self.n_experts()
            )));
        }
        for (cum, &l) in self.cum_losses.iter_mut().zip(losses) {
            *cum += u64::from(l);
        }
        self.rounds += 1;
        Ok(())
    }

    /// Weight-proportional mixture of the experts' current outputs.
    ///
    /// `outputs[i]` is the label expert `i` advises this round. The result
    /// is a distribution over `0..n_labels` built from the weights as they
    /// stand, i.e. before this round's losses are absorbed.
    pub fn mix(&self, outputs: &[usize], n_labels: usize) -> Result<PredictionDistribution> {
        if outputs.len() != self.n_experts() {
            return Err(Error::InvalidInput(format!(
                "got {} outputs for {} experts",
                outputs.len(),
                self.n_experts()
            )));
        }
        let weights = self.shifted_weights();
        let mut per_label = vec![0.0f64; n_labels];
        let mut total = 0.0;
        for (i, &y) in outputs.iter().enumerate() {
            if y >= n_labels {
                return Err(Error::InvalidInput(format!(
                    "expert {i} outputs label {y}, alphabet has {n_labels}"
                )));
            }
            per_label[y] += weights[i];
            total += weights[i];
        }
        let p = PredictionDistribution::from_masses(
            per_label.into_iter().enumerate().map(|(y, w)| (y, w / total)),
        );
        p.validate(n_labels)?;
        Ok(p)
    }

    /// Weight-proportional average of the given 0-1 losses under the current
    /// weights. Equals `1 - p(y)` for the mixture `p` over the same outputs
    /// whenever `losses[i] = (outputs[i] != y)`.
    pub fn weighted_loss(&self, losses: &[bool]) -> Result<f64> {
        if losses.len() != self.n_experts() {
            return Err(Error::InvalidInput(format!(
                "got {} losses for {} experts",
                losses.len(),
                self.n_experts()
            )));
        }
        let weights = self.shifted_weights();
        let mut num = 0.0;
        let mut den = 0.0;
        for (w, &l) in weights.iter().zip(losses) {
            num += w * f64::from(u8::from(l));
            den += w;
        }
        Ok(num / den)
    }
}

/// Outcome of the binary expert-advice protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMwRun {
    /// Sum over rounds of `|p_t - y_t|`.
    pub cum_mixture_loss: f64,
    /// Smallest cumulative mistake count over the pool.
    pub best_expert_loss: u64,
    /// `cum_mixture_loss - best_expert_loss`.
    pub regret: f64,
    /// `sqrt((T/2) ln N)`.
    pub bound: f64,
}

/// Runs the full binary expert-advice protocol.
///
/// `expert_predictions[i][t]` is expert `i`'s 0/1 advice at round `t` and
/// `outcomes[t]` the revealed bit. The learner predicts the weighted
/// average `p_t` of the advice and suffers `|p_t - y_t|`; every round the
/// mixture loss is checked against the weighted average of the experts'
/// 0-1 losses, which is the same number by construction.
pub fn run_binary_protocol(expert_predictions: &[Vec<bool>], outcomes: &[bool]) -> Result<BinaryMwRun> {
    let n = expert_predictions.len();
    let t_horizon = outcomes.len();
    if n == 0 {
        return Err(Error::InvalidInput("expert pool must be non-empty".into()));
    }
    if t_horizon == 0 {
        return Err(Error::InvalidInput("horizon must be at least one round".into()));
    }
    for (i, row) in expert_predictions.iter().enumerate() {
        if row.len() != t_horizon {
            return Err(Error::InvalidInput(format!(
                "expert {i} advises {} rounds, horizon is {t_horizon}",
                row.len()
            )));
        }
    }

    let mut state = MwState::new(n, mw_eta(t_horizon, n))?;
    let mut cum_mixture_loss = 0.0;
    for t in 0..t_horizon {
        let outputs: Vec<usize> =
            expert_predictions.iter().map(|row| usize::from(row[t])).collect();
        let p = state.mix(&outputs, 2)?;
        let y = usize::from(outcomes[t]);
        let mixture_loss = 1.0 - p.mass(y);
        let losses: Vec<bool> = expert_predictions.iter().map(|row| row[t] != outcomes[t]).collect();
        let direct = state.weighted_loss(&losses)?;
        if (mixture_loss - direct).abs() > REGRET_TOLERANCE {
            return Err(Error::Internal(format!(
                "mixture loss {mixture_loss} disagrees with weighted expert loss {direct} at round {t}"
            )));
        }
        cum_mixture_loss += mixture_loss;
        state.update(&losses)?;
    }

    let best_expert_loss = state.min_cumulative_loss();
    Ok(BinaryMwRun {
        cum_mixture_loss,
        best_expert_loss,
        regret: cum_mixture_loss - best_expert_loss as f64,
        bound: mw_regret_bound(t_horizon, n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn eta_matches_its_formula() {
        for (t, n) in [(1, 1), (2, 7), (8, 2981), (64, 64)] {
            let expected = ((8.0 / t as f64) * (n as f64).ln()).sqrt();
            assert_eq!(mw_eta(t, n), expected);
        }
    }

    #[test]
    fn eta_anchor_values() {
        assert_eq!(mw_eta(5, 1), 0.0);
        // N close to e^8 at T = 8 gives eta close to sqrt(8).
        assert!((mw_eta(8, 2981) - 8f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn regret_bound_matches_its_formula() {
        for (t, n) in [(1, 1), (2, 7), (16, 9), (64, 64)] {
            let expected = ((t as f64 / 2.0) * (n as f64).ln()).sqrt();
            assert_eq!(mw_regret_bound(t, n), expected);
        }
        assert_eq!(mw_regret_bound(10, 1), 0.0);
        // N close to e^2 at T = 2 gives a bound close to sqrt(2).
        assert!((mw_regret_bound(2, 7) - 2f64.sqrt()).abs() < 0.05);
    }

    #[test]
    fn weights_track_exponentiated_cumulative_losses() {
        let mut state = MwState::new(3, 0.7).unwrap();
        state.update(&[true, false, true]).unwrap();
        state.update(&[true, false, false]).unwrap();
        state.update(&[false, true, true]).unwrap();
        assert_eq!(state.cumulative_losses(), &[2, 1, 2]);
        for i in 0..3 {
            let expected = (-0.7 * state.cumulative_losses()[i] as f64).exp();
            let got = state.weights()[i];
            assert!(
                (got - expected).abs() <= 1e-9 * expected,
                "weight {i}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn mix_weighs_labels_by_expert_weight() {
        let mut state = MwState::new(2, 1.0).unwrap();
        // Uniform weights: two experts split the mass.
        let p = state.mix(&[0, 2], 3).unwrap();
        assert!((p.mass(0) - 0.5).abs() < 1e-12);
        assert!((p.mass(2) - 0.5).abs() < 1e-12);
        assert_eq!(p.mass(1), 0.0);

        // After expert 0 errs once, expert 1 carries weight e / (1 + e).
        state.update(&[true, false]).unwrap();
        let p = state.mix(&[0, 2], 3).unwrap();
        let e = std::f64::consts::E;
        assert!((p.mass(2) - e / (1.0 + e)).abs() < 1e-12);
    }

    #[test]
    fn mix_uses_only_past_losses() {
        let state = MwState::new(2, 1.0).unwrap();
        let before = state.mix(&[0, 1], 2).unwrap();
        let mut updated = state.clone();
        updated.update(&[true, false]).unwrap();
        let after = updated.mix(&[0, 1], 2).unwrap();
        assert!((before.mass(0) - 0.5).abs() < 1e-12);
        assert!(after.mass(0) < before.mass(0));
    }

    #[test]
    fn update_and_mix_validate_shapes() {
        let mut state = MwState::new(2, 0.5).unwrap();
        assert!(state.update(&[true]).is_err());
        assert!(state.mix(&[0], 2).is_err());
        assert!(state.mix(&[0, 5], 2).is_err());
        assert!(MwState::new(0, 0.5).is_err());
    }

    #[test]
    fn single_expert_protocol_has_zero_regret() {
        let preds = vec![vec![true, false, true, true]];
        let outcomes = vec![false, false, true, false];
        let run = run_binary_protocol(&preds, &outcomes).unwrap();
        assert!((run.cum_mixture_loss - 2.0).abs() < 1e-12);
        assert_eq!(run.best_expert_loss, 2);
        assert!(run.regret.abs() < 1e-12);
        assert_eq!(run.bound, 0.0);
    }

    #[test]
    fn protocol_respects_the_regret_bound_on_random_and_adversarial_play() {
        for trial in 0..80u64 {
            let mut rng = crate::concept::seeded_rng(41, trial);
            let n = rng.gen_range(1..=16);
            let t = rng.gen_range(1..=32);
            let preds: Vec<Vec<bool>> =
                (0..n).map(|_| (0..t).map(|_| rng.gen()).collect()).collect();
            let outcomes: Vec<bool> = if trial % 3 == 0 {
                // Greedy adversary: pick the outcome the mixture likes less.
                let mut state = MwState::new(n, mw_eta(t, n)).unwrap();
                let mut ys = Vec::with_capacity(t);
                for s in 0..t {
                    let outputs: Vec<usize> =
                        preds.iter().map(|row| usize::from(row[s])).collect();
                    let p = state.mix(&outputs, 2).unwrap();
                    let y = p.mass(1) < p.mass(0);
                    let losses: Vec<bool> = preds.iter().map(|row| row[s] != y).collect();
                    state.update(&losses).unwrap();
                    ys.push(y);
                }
                ys
            } else {
                (0..t).map(|_| rng.gen()).collect()
            };
            let run = run_binary_protocol(&preds, &outcomes).unwrap();
            assert!(
                run.regret <= run.bound + REGRET_TOLERANCE,
                "trial {trial}: regret {} exceeds bound {}",
                run.regret,
                run.bound
            );
        }
    }

    #[test]
    fn protocol_validates_shapes() {
        assert!(run_binary_protocol(&[], &[true]).is_err());
        assert!(run_binary_protocol(&[vec![true]], &[]).is_err());
        assert!(run_binary_protocol(&[vec![true, false]], &[true]).is_err());
    }
}
