//! Gaussian step policy over a toy denoising state space.
//!
//! The policy is a velocity head that is linear in a fixed feature map of
//! (state, time, condition), wrapped in a Gaussian transition kernel with a
//! fixed per-step noise schedule. Transition log-densities, their parameter
//! gradients, and the per-step KL between two policies are all closed form,
//! which is what the surrogate objective and its gradient check rely on.

use super::GrpoError;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Gaussian transition policy for a reverse process with `sigma.len()` steps.
///
/// States are indexed x_T .. x_0: transition `t` (for `t` in `1..=T`) moves
/// x_t to x_{t-1} via `x_{t-1} = x_t + dt * v(x_t, time, c) + sigma_t * eps`
/// with `dt = 1/T` and `time = (T - t) / T` running from 0 at pure noise to
/// just under 1 at the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianStepPolicy {
    state_dim: usize,
    cond_dim: usize,
    /// Row-major `(state_dim, feature_dim)` weights of the velocity head.
    weights: Vec<f64>,
    /// Per-transition noise scales; index `t - 1` holds sigma_t.
    sigma: Vec<f64>,
}

impl GaussianStepPolicy {
    pub fn new(state_dim: usize, cond_dim: usize, sigma: Vec<f64>) -> Result<Self, GrpoError> {
        if state_dim == 0 {
            return Err(GrpoError::InvalidConfig("state_dim must be positive".into()));
        }
        if sigma.is_empty() {
            return Err(GrpoError::InvalidConfig(
                "noise schedule must have at least one step".into(),
            ));
        }
        if !sigma.iter().all(|&s| s > 0.0 && s.is_finite()) {
            return Err(GrpoError::InvalidConfig(
                "noise scales must be positive and finite".into(),
            ));
        }
        let feature_dim = Self::feature_dim_for(state_dim, cond_dim);
        Ok(GaussianStepPolicy {
            state_dim,
            cond_dim,
            weights: vec![0.0; state_dim * feature_dim],
            sigma,
        })
    }

    /// Policy with a constant noise scale across all `num_steps` transitions.
    pub fn with_uniform_sigma(
        state_dim: usize,
        cond_dim: usize,
        num_steps: usize,
        sigma: f64,
    ) -> Result<Self, GrpoError> {
        Self::new(state_dim, cond_dim, vec![sigma; num_steps])
    }

    fn feature_dim_for(state_dim: usize, cond_dim: usize) -> usize {
        // [x, c, t*x, t*c, t^2*x, t^2*c, t, t^2, 1]
        3 * (state_dim + cond_dim) + 3
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn cond_dim(&self) -> usize {
        self.cond_dim
    }

    pub fn num_steps(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn feature_dim(&self) -> usize {
        Self::feature_dim_for(self.state_dim, self.cond_dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<(), GrpoError> {
        if weights.len() != self.weights.len() {
            return Err(GrpoError::Dimension(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        self.weights = weights;
        Ok(())
    }

    /// True when the two policies share state/condition dimensions.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.state_dim == other.state_dim
            && self.cond_dim == other.cond_dim
            && self.sigma.len() == other.sigma.len()
    }

    /// True when the two policies also share the noise schedule exactly.
    pub fn same_schedule(&self, other: &Self) -> bool {
        self.same_shape(other) && self.sigma == other.sigma
    }

    /// Adds `scale * N(0, 1)` noise to every weight.
    pub fn perturb(&mut self, rng: &mut impl Rng, scale: f64) {
        for w in &mut self.weights {
            let noise: f64 = StandardNormal.sample(rng);
            *w += scale * noise;
        }
    }

    fn features(&self, state: &[f64], time: f64, condition: &[f64]) -> Vec<f64> {
        debug_assert_eq!(state.len(), self.state_dim);
        debug_assert_eq!(condition.len(), self.cond_dim);
        let mut phi = Vec::with_capacity(self.feature_dim());
        phi.extend_from_slice(state);
        phi.extend_from_slice(condition);
        for &x in state {
            phi.push(time * x);
        }
        for &c in condition {
            phi.push(time * c);
        }
        let t2 = time * time;
        for &x in state {
            phi.push(t2 * x);
        }
        for &c in condition {
            phi.push(t2 * c);
        }
        phi.push(time);
        phi.push(t2);
        phi.push(1.0);
        phi
    }

    /// The velocity head `v(state, time, condition)`.
    pub fn mean_velocity(&self, state: &[f64], time: f64, condition: &[f64]) -> Vec<f64> {
        let phi = self.features(state, time, condition);
        let f = phi.len();
        (0..self.state_dim)
            .map(|k| {
                let row = &self.weights[k * f..(k + 1) * f];
                row.iter().zip(&phi).map(|(w, p)| w * p).sum()
            })
            .collect()
    }

    fn dt(&self) -> f64 {
        1.0 / self.sigma.len() as f64
    }

    /// Normalized time input for transition `t` (`1..=T`).
    pub fn time_of_transition(&self, t: usize) -> f64 {
        debug_assert!(t >= 1 && t <= self.sigma.len());
        (self.sigma.len() - t) as f64 / self.sigma.len() as f64
    }

    /// Mean of the transition distribution at step `t`.
    pub fn step_mean(&self, state: &[f64], t: usize, condition: &[f64]) -> Vec<f64> {
        let v = self.mean_velocity(state, self.time_of_transition(t), condition);
        let dt = self.dt();
        state.iter().zip(v).map(|(x, vk)| x + dt * vk).collect()
    }

    /// Exact log-density of moving from `state` to `next` at step `t`.
    pub fn transition_log_prob(
        &self,
        state: &[f64],
        next: &[f64],
        t: usize,
        condition: &[f64],
    ) -> f64 {
        let mu = self.step_mean(state, t, condition);
        let sigma = self.sigma[t - 1];
        let var = sigma * sigma;
        let d = self.state_dim as f64;
        let quad: f64 = next
            .iter()
            .zip(&mu)
            .map(|(x, m)| (x - m) * (x - m))
            .sum::<f64>();
        -0.5 * quad / var - 0.5 * d * (2.0 * std::f64::consts::PI * var).ln()
    }

    /// Accumulates `scale * d log pi(next | state) / d weights` into `grad`.
    pub fn accumulate_log_prob_grad(
        &self,
        state: &[f64],
        next: &[f64],
        t: usize,
        condition: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) {
        debug_assert_eq!(grad.len(), self.weights.len());
        let mu = self.step_mean(state, t, condition);
        let phi = self.features(state, self.time_of_transition(t), condition);
        let sigma = self.sigma[t - 1];
        let var = sigma * sigma;
        let dt = self.dt();
        let f = phi.len();
        for k in 0..self.state_dim {
            let coeff = scale * (next[k] - mu[k]) / var * dt;
            let row = &mut grad[k * f..(k + 1) * f];
            for (g, p) in row.iter_mut().zip(&phi) {
                *g += coeff * p;
            }
        }
    }

    /// Closed-form KL between this policy's step distribution and `other`'s at
    /// the same state and step (shared noise schedule): `|mu_a - mu_b|^2 / (2 sigma_t^2)`.
    pub fn step_kl(&self, other: &Self, state: &[f64], t: usize, condition: &[f64]) -> f64 {
        let mu_a = self.step_mean(state, t, condition);
        let mu_b = other.step_mean(state, t, condition);
        let sigma = self.sigma[t - 1];
        let quad: f64 = mu_a
            .iter()
            .zip(&mu_b)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        quad / (2.0 * sigma * sigma)
    }

    /// Accumulates `scale * d KL(self || other) / d self.weights` into `grad`.
    pub fn accumulate_kl_grad(
        &self,
        other: &Self,
        state: &[f64],
        t: usize,
        condition: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) {
        debug_assert_eq!(grad.len(), self.weights.len());
        let mu_a = self.step_mean(state, t, condition);
        let mu_b = other.step_mean(state, t, condition);
        let phi = self.features(state, self.time_of_transition(t), condition);
        let sigma = self.sigma[t - 1];
        let var = sigma * sigma;
        let dt = self.dt();
        let f = phi.len();
        for k in 0..self.state_dim {
            let coeff = scale * (mu_a[k] - mu_b[k]) / var * dt;
            let row = &mut grad[k * f..(k + 1) * f];
            for (g, p) in row.iter_mut().zip(&phi) {
                *g += coeff * p;
            }
        }
    }

    /// Samples the next state at step `t`, returning it with its log-density.
    pub fn sample_step(
        &self,
        state: &[f64],
        t: usize,
        condition: &[f64],
        rng: &mut impl Rng,
    ) -> (Vec<f64>, f64) {
        let mu = self.step_mean(state, t, condition);
        let sigma = self.sigma[t - 1];
        let next: Vec<f64> = mu
            .iter()
            .map(|m| {
                let eps: f64 = StandardNormal.sample(rng);
                m + sigma * eps
            })
            .collect();
        let logp = self.transition_log_prob(state, &next, t, condition);
        (next, logp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn test_policy() -> GaussianStepPolicy {
        GaussianStepPolicy::with_uniform_sigma(2, 3, 4, 0.5).unwrap()
    }

    #[test]
    fn zero_weights_give_zero_velocity() {
        let policy = test_policy();
        let v = policy.mean_velocity(&[1.0, -2.0], 0.3, &[0.1, 0.2, 0.3]);
        assert_eq!(v, vec![0.0, 0.0]);
        let mu = policy.step_mean(&[1.0, -2.0], 2, &[0.1, 0.2, 0.3]);
        assert_eq!(mu, vec![1.0, -2.0]);
    }

    #[test]
    fn log_prob_matches_gaussian_density() {
        let mut policy = test_policy();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        policy.perturb(&mut rng, 0.3);

        let state = [0.4, -0.7];
        let cond = [1.0, 0.0, -1.0];
        let next = [0.2, -0.5];
        let t = 3;

        let mu = policy.step_mean(&state, t, &cond);
        let sigma = policy.sigma()[t - 1];
        let expected: f64 = next
            .iter()
            .zip(&mu)
            .map(|(x, m)| {
                let z = (x - m) / sigma;
                -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI * sigma * sigma).ln()
            })
            .sum();
        let got = policy.transition_log_prob(&state, &next, t, &cond);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        let mut policy = test_policy();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        policy.perturb(&mut rng, 0.2);

        let state = [0.4, -0.7];
        let cond = [1.0, 0.5, -1.0];
        let next = [0.6, -0.9];
        let t = 1;

        let mut grad = vec![0.0; policy.weights().len()];
        policy.accumulate_log_prob_grad(&state, &next, t, &cond, 1.0, &mut grad);

        let h = 1e-6;
        for (i, analytic) in grad.iter().enumerate() {
            let mut plus = policy.clone();
            plus.weights_mut()[i] += h;
            let mut minus = policy.clone();
            minus.weights_mut()[i] -= h;
            let fd = (plus.transition_log_prob(&state, &next, t, &cond)
                - minus.transition_log_prob(&state, &next, t, &cond))
                / (2.0 * h);
            assert!(
                (fd - analytic).abs() < 1e-5,
                "coordinate {i}: analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn kl_is_zero_for_identical_policies_and_quadratic_in_mean_gap() {
        let mut a = test_policy();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        a.perturb(&mut rng, 0.2);
        let state = [0.1, 0.2];
        let cond = [0.3, -0.4, 0.5];
        assert!(a.step_kl(&a.clone(), &state, 2, &cond).abs() < 1e-15);

        // Shift only the bias column: velocities differ by delta_v, means by
        // dt * delta_v, so KL = |dt * delta_v|^2 / (2 sigma^2).
        let mut b = a.clone();
        let f = b.feature_dim();
        b.weights_mut()[f - 1] += 1.0; // bias of output row 0
        let dt = 1.0 / a.num_steps() as f64;
        let sigma = a.sigma()[1];
        let expected = (dt * 1.0f64).powi(2) / (2.0 * sigma * sigma);
        let got = a.step_kl(&b, &state, 2, &cond);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn sampled_steps_report_their_own_log_prob() {
        let mut policy = test_policy();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        policy.perturb(&mut rng, 0.1);
        let state = [0.0, 1.0];
        let cond = [0.2, 0.2, 0.2];
        let (next, logp) = policy.sample_step(&state, 4, &cond, &mut rng);
        let recomputed = policy.transition_log_prob(&state, &next, 4, &cond);
        assert!((logp - recomputed).abs() < 1e-12);
    }

    #[test]
    fn time_runs_from_zero_toward_one() {
        let policy = test_policy();
        assert_eq!(policy.time_of_transition(4), 0.0);
        assert_eq!(policy.time_of_transition(1), 0.75);
    }
}
