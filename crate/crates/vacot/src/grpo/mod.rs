//! Group-relative policy optimization over multi-step denoising trajectories.
//!
//! Rewards are normalized within each sampled group into advantages, per-step
//! probability ratios against the behavior policy feed a clipped pessimistic
//! surrogate, and a closed-form per-step Gaussian KL to a reference policy
//! regularizes the update. A toy flow environment and a flow-matching loss
//! make the whole optimization loop runnable end to end at desk scale.

mod flow;
mod policy;
mod toy;

pub use flow::{
    circle_dataset, flow_matching_grad, flow_matching_loss, train_flow_matching, FlowSample,
    FlowSampleConfig, FlowTrainReport, FlowTrainSettings, NoiseSchedule, TimeSchedule,
};
pub use policy::GaussianStepPolicy;
pub use toy::{
    train_toy, OptimizerSettings, ToyFlowEnv, ToyTrainOutcome, TrainingReport, TrainingRow,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrpoError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("a group needs at least two samples")]
    GroupTooSmall,
    #[error("non-finite reward")]
    NonFiniteReward,
    #[error("non-finite log-probability")]
    NonFiniteLogProb,
    #[error("policies disagree on the noise schedule")]
    ScheduleMismatch,
    #[error("empty batch")]
    EmptyBatch,
    #[error("no trajectory groups supplied")]
    EmptyGroups,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("group {group}, trajectory {trajectory}, step {step}: {source}")]
    Objective {
        group: usize,
        trajectory: usize,
        step: usize,
        source: Box<GrpoError>,
    },
    #[error("training diverged: non-finite parameters at iteration {iteration}")]
    DivergenceDetected { iteration: usize },
    #[error("malformed training report: {0}")]
    MalformedReport(String),
}

/// Hyperparameters of the group-relative update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoConfig {
    /// Trajectories sampled per condition.
    pub group_size: usize,
    /// Denoising steps per trajectory.
    pub num_steps: usize,
    /// Ratio clip half-width.
    pub clip_epsilon: f64,
    /// Weight of the KL penalty against the reference policy.
    pub kl_beta: f64,
    /// Floor on the group reward standard deviation; constant-reward groups
    /// map to zero advantage instead of dividing by zero.
    pub std_floor: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            group_size: 8,
            num_steps: 8,
            clip_epsilon: 0.2,
            kl_beta: 0.01,
            std_floor: 1e-8,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.group_size < 2 {
            return Err(GrpoError::InvalidConfig("group_size must be >= 2".into()));
        }
        if self.num_steps < 1 {
            return Err(GrpoError::InvalidConfig("num_steps must be >= 1".into()));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon.is_finite()) {
            return Err(GrpoError::InvalidConfig(
                "clip_epsilon must be positive and finite".into(),
            ));
        }
        if !(self.kl_beta >= 0.0 && self.kl_beta.is_finite()) {
            return Err(GrpoError::InvalidConfig(
                "kl_beta must be non-negative and finite".into(),
            ));
        }
        if self.std_floor.is_nan() || self.std_floor <= 0.0 {
            return Err(GrpoError::InvalidConfig("std_floor must be positive".into()));
        }
        Ok(())
    }
}

/// What a trajectory is conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub prompt_features: Vec<f64>,
    pub context_features: Vec<f64>,
}

impl Condition {
    pub fn dim(&self) -> usize {
        self.prompt_features.len() + self.context_features.len()
    }

    /// The policy's condition input: prompt features then context features.
    pub fn concat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.extend_from_slice(&self.prompt_features);
        out.extend_from_slice(&self.context_features);
        out
    }
}

/// One reverse trajectory x_T .. x_0 with the behavior policy's per-step
/// log-probabilities recorded at sampling time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    states: Vec<Vec<f64>>,
    logp_behavior: Vec<f64>,
}

/// A borrowed view of one transition: from `x_t` to `x_{t-1}`.
#[derive(Debug, Clone, Copy)]
pub struct TransitionView<'a> {
    pub t: usize,
    pub x_t: &'a [f64],
    pub x_prev: &'a [f64],
}

impl Trajectory {
    /// `states` runs x_T first, x_0 last; `logp_behavior[i]` is the sampling
    /// log-density of transition `i` (from `states[i]` to `states[i + 1]`).
    pub fn new(states: Vec<Vec<f64>>, logp_behavior: Vec<f64>) -> Result<Self, GrpoError> {
        if states.len() < 2 {
            return Err(GrpoError::Dimension(
                "a trajectory needs at least two states".into(),
            ));
        }
        if logp_behavior.len() != states.len() - 1 {
            return Err(GrpoError::Dimension(format!(
                "{} states require {} log-probabilities, got {}",
                states.len(),
                states.len() - 1,
                logp_behavior.len()
            )));
        }
        let dim = states[0].len();
        if states.iter().any(|s| s.len() != dim) {
            return Err(GrpoError::Dimension("states differ in dimension".into()));
        }
        Ok(Trajectory {
            states,
            logp_behavior,
        })
    }

    pub fn num_transitions(&self) -> usize {
        self.states.len() - 1
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    /// x_0, the generated output.
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("at least two states")
    }

    /// x_T, the initial noise.
    pub fn initial_state(&self) -> &[f64] {
        &self.states[0]
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn logp_behavior(&self) -> &[f64] {
        &self.logp_behavior
    }

    /// Transition `index` (0-based from the noise end): step `t = T - index`.
    pub fn transition(&self, index: usize) -> TransitionView<'_> {
        TransitionView {
            t: self.num_transitions() - index,
            x_t: &self.states[index],
            x_prev: &self.states[index + 1],
        }
    }
}

/// G trajectories sampled for one condition, with their terminal rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryGroup {
    pub trajectories: Vec<Trajectory>,
    pub rewards: Vec<f64>,
    pub condition: Condition,
}

impl TrajectoryGroup {
    pub fn new(
        trajectories: Vec<Trajectory>,
        rewards: Vec<f64>,
        condition: Condition,
    ) -> Result<Self, GrpoError> {
        if trajectories.len() != rewards.len() {
            return Err(GrpoError::Dimension(format!(
                "{} trajectories but {} rewards",
                trajectories.len(),
                rewards.len()
            )));
        }
        if trajectories.len() < 2 {
            return Err(GrpoError::GroupTooSmall);
        }
        Ok(TrajectoryGroup {
            trajectories,
            rewards,
            condition,
        })
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

/// Normalizes rewards within a group: `(r - mean) / max(std, std_floor)` with
/// the population standard deviation. Constant groups map to all-zero
/// advantages through the floor.
pub fn group_advantages(rewards: &[f64], std_floor: f64) -> Result<Vec<f64>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall);
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(GrpoError::NonFiniteReward);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let variance = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = variance.sqrt().max(std_floor);
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Per-step probability ratio `exp(logp_new - logp_old)`.
pub fn step_ratio(logp_new: f64, logp_old: f64) -> Result<f64, GrpoError> {
    if !logp_new.is_finite() || !logp_old.is_finite() {
        return Err(GrpoError::NonFiniteLogProb);
    }
    Ok((logp_new - logp_old).exp())
}

/// The pessimistic clipped surrogate term
/// `min(r * adv, clip(r, 1 - eps, 1 + eps) * adv)`.
pub fn clipped_term(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    debug_assert!(ratio >= 0.0);
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// A state at which two step policies are compared.
#[derive(Debug, Clone, Copy)]
pub struct KlPoint<'a> {
    pub state: &'a [f64],
    pub t: usize,
    pub condition: &'a Condition,
}

/// Mean closed-form Gaussian KL between the step distributions of two
/// policies over a batch of visited states. The policies must share the
/// noise schedule.
pub fn gaussian_kl(
    policy_a: &GaussianStepPolicy,
    policy_b: &GaussianStepPolicy,
    batch: &[KlPoint<'_>],
) -> Result<f64, GrpoError> {
    if !policy_a.same_schedule(policy_b) {
        return Err(GrpoError::ScheduleMismatch);
    }
    if batch.is_empty() {
        return Err(GrpoError::EmptyBatch);
    }
    let total: f64 = batch
        .iter()
        .map(|p| policy_a.step_kl(policy_b, p.state, p.t, &p.condition.concat()))
        .sum();
    Ok(total / batch.len() as f64)
}

/// Value, gradient, and diagnostics of one objective evaluation.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub value: f64,
    /// Gradient with respect to the new policy's weights.
    pub gradient: Vec<f64>,
    /// Mean per-step KL to the reference policy.
    pub kl: f64,
    /// Fraction of steps whose ratio fell outside the clip band.
    pub clip_fraction: f64,
    /// Mean advantage across all trajectories (zero up to floating point).
    pub mean_advantage: f64,
}

/// The flow-GRPO objective over a list of trajectory groups:
/// per group, the step-averaged clipped surrogate minus `kl_beta` times the
/// mean per-step KL to the reference policy, averaged over groups.
pub fn grpo_objective(
    groups: &[TrajectoryGroup],
    policy: &GaussianStepPolicy,
    policy_old: &GaussianStepPolicy,
    policy_ref: &GaussianStepPolicy,
    config: &GrpoConfig,
) -> Result<f64, GrpoError> {
    Ok(evaluate_objective(groups, policy, policy_old, policy_ref, config)?.value)
}

/// Evaluates the objective together with its exact gradient in the new
/// policy's parameters. Component failures carry their
/// (group, trajectory, step) coordinates.
pub fn evaluate_objective(
    groups: &[TrajectoryGroup],
    policy: &GaussianStepPolicy,
    policy_old: &GaussianStepPolicy,
    policy_ref: &GaussianStepPolicy,
    config: &GrpoConfig,
) -> Result<ObjectiveEval, GrpoError> {
    config.validate()?;
    if groups.is_empty() {
        return Err(GrpoError::EmptyGroups);
    }
    if !policy.same_schedule(policy_old) || !policy.same_schedule(policy_ref) {
        return Err(GrpoError::ScheduleMismatch);
    }
    if policy.num_steps() != config.num_steps {
        return Err(GrpoError::Dimension(format!(
            "policy has {} steps, config expects {}",
            policy.num_steps(),
            config.num_steps
        )));
    }

    let num_groups = groups.len() as f64;
    let epsilon = config.clip_epsilon;
    let mut gradient = vec![0.0; policy.weights().len()];
    let mut value = 0.0;
    let mut kl_total = 0.0;
    let mut clip_events = 0usize;
    let mut step_count = 0usize;
    let mut advantage_sum = 0.0;
    let mut advantage_count = 0usize;

    for (group_index, group) in groups.iter().enumerate() {
        let advantages =
            group_advantages(&group.rewards, config.std_floor).map_err(|source| {
                GrpoError::Objective {
                    group: group_index,
                    trajectory: 0,
                    step: 0,
                    source: Box::new(source),
                }
            })?;
        let condition = group.condition.concat();
        let group_size = group.trajectories.len() as f64;
        let mut group_surrogate = 0.0;
        let mut group_kl = 0.0;

        for (traj_index, trajectory) in group.trajectories.iter().enumerate() {
            if trajectory.num_transitions() != config.num_steps {
                return Err(GrpoError::Dimension(format!(
                    "group {group_index}, trajectory {traj_index}: {} transitions, config expects {}",
                    trajectory.num_transitions(),
                    config.num_steps
                )));
            }
            if trajectory.state_dim() != policy.state_dim() {
                return Err(GrpoError::Dimension(format!(
                    "group {group_index}, trajectory {traj_index}: state dimension {} vs policy {}",
                    trajectory.state_dim(),
                    policy.state_dim()
                )));
            }
            let advantage = advantages[traj_index];
            advantage_sum += advantage;
            advantage_count += 1;

            // Per-group normalization of the surrogate and KL contributions:
            // 1/(G * T), then 1/num_groups at the end.
            let contribution_scale = 1.0 / (group_size * config.num_steps as f64 * num_groups);

            for step_index in 0..trajectory.num_transitions() {
                let tr = trajectory.transition(step_index);
                let logp_new = policy.transition_log_prob(tr.x_t, tr.x_prev, tr.t, &condition);
                let logp_old = policy_old.transition_log_prob(tr.x_t, tr.x_prev, tr.t, &condition);
                let ratio = step_ratio(logp_new, logp_old).map_err(|source| {
                    GrpoError::Objective {
                        group: group_index,
                        trajectory: traj_index,
                        step: tr.t,
                        source: Box::new(source),
                    }
                })?;

                group_surrogate += clipped_term(ratio, advantage, epsilon);
                step_count += 1;
                if ratio < 1.0 - epsilon || ratio > 1.0 + epsilon {
                    clip_events += 1;
                }

                // The min picks the unclipped branch (or the two coincide
                // inside the band); only then does gradient flow.
                let unclipped = ratio * advantage;
                let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon) * advantage;
                if unclipped <= clipped {
                    policy.accumulate_log_prob_grad(
                        tr.x_t,
                        tr.x_prev,
                        tr.t,
                        &condition,
                        advantage * ratio * contribution_scale,
                        &mut gradient,
                    );
                }

                group_kl += policy.step_kl(policy_ref, tr.x_t, tr.t, &condition);
                if config.kl_beta > 0.0 {
                    policy.accumulate_kl_grad(
                        policy_ref,
                        tr.x_t,
                        tr.t,
                        &condition,
                        -config.kl_beta * contribution_scale,
                        &mut gradient,
                    );
                }
            }
        }

        let per_step = group_size * config.num_steps as f64;
        value += (group_surrogate / per_step - config.kl_beta * (group_kl / per_step)) / num_groups;
        kl_total += group_kl / per_step / num_groups;
    }

    Ok(ObjectiveEval {
        value,
        gradient,
        kl: kl_total,
        clip_fraction: clip_events as f64 / step_count.max(1) as f64,
        mean_advantage: advantage_sum / advantage_count.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn advantages_of_one_two_three() {
        let adv = group_advantages(&[1.0, 2.0, 3.0], 1e-8).unwrap();
        // mean 2, population std sqrt(2/3); normalized values are +-sqrt(3/2).
        let expected = 1.224744871391589;
        assert!((adv[0] + expected).abs() < 1e-12);
        assert!(adv[1].abs() < 1e-12);
        assert!((adv[2] - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_rewards_map_to_zero_advantage() {
        let adv = group_advantages(&[0.5, 0.5, 0.5], 1e-8).unwrap();
        assert_eq!(adv, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn advantages_invariant_under_positive_affine_maps() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.gen_range(2..12);
            let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let a = rng.gen_range(0.1..10.0);
            let b = rng.gen_range(-3.0..3.0);
            let mapped: Vec<f64> = rewards.iter().map(|r| a * r + b).collect();
            let adv = group_advantages(&rewards, 1e-8).unwrap();
            let adv_mapped = group_advantages(&mapped, 1e-8).unwrap();
            for (x, y) in adv.iter().zip(&adv_mapped) {
                assert!((x - y).abs() < 1e-9, "affine invariance broke: {x} vs {y}");
            }
        }
    }

    #[test]
    fn group_too_small_and_non_finite_rejected() {
        assert!(matches!(
            group_advantages(&[1.0], 1e-8),
            Err(GrpoError::GroupTooSmall)
        ));
        assert!(matches!(
            group_advantages(&[1.0, f64::NAN], 1e-8),
            Err(GrpoError::NonFiniteReward)
        ));
    }

    #[test]
    fn step_ratio_arithmetic() {
        assert_eq!(step_ratio(-1.5, -1.5).unwrap(), 1.0);
        assert!((step_ratio(-1.0 + 2.0f64.ln(), -1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((step_ratio(-1.0 - 4.0f64.ln(), -1.0).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(
            step_ratio(f64::INFINITY, 0.0),
            Err(GrpoError::NonFiniteLogProb)
        ));
    }

    #[test]
    fn clipped_term_cases() {
        assert!((clipped_term(1.5, 1.0, 0.2) - 1.2).abs() < 1e-12);
        // Inside the band the clip is the identity.
        assert_eq!(clipped_term(1.1, 0.7, 0.2), 1.1 * 0.7);
        assert_eq!(clipped_term(0.9, -0.7, 0.2), 0.9 * -0.7);
        // Pessimistic branch for negative advantage.
        assert!((clipped_term(0.5, -1.0, 0.2) - (-0.8)).abs() < 1e-12);
    }

    #[test]
    fn clipped_term_is_pessimistic() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..200 {
            let ratio = rng.gen_range(0.0..3.0);
            let advantage = rng.gen_range(-2.0..2.0);
            assert!(clipped_term(ratio, advantage, 0.2) <= ratio * advantage + 1e-15);
        }
    }

    fn policy_with(seed: u64, scale: f64) -> GaussianStepPolicy {
        let mut policy = GaussianStepPolicy::with_uniform_sigma(2, 4, 4, 0.5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        policy.perturb(&mut rng, scale);
        policy
    }

    fn condition(rng: &mut impl Rng) -> Condition {
        Condition {
            prompt_features: (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            context_features: (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    fn sample_group(
        policy: &GaussianStepPolicy,
        group_size: usize,
        rng: &mut impl Rng,
    ) -> TrajectoryGroup {
        let cond = condition(rng);
        let cond_vec = cond.concat();
        let mut trajectories = Vec::new();
        let mut rewards = Vec::new();
        for _ in 0..group_size {
            let mut states = vec![(0..policy.state_dim())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect::<Vec<f64>>()];
            let mut logps = Vec::new();
            for t in (1..=policy.num_steps()).rev() {
                let (next, logp) =
                    policy.sample_step(states.last().unwrap(), t, &cond_vec, rng);
                states.push(next);
                logps.push(logp);
            }
            rewards.push(rng.gen_range(0.0..1.0));
            trajectories.push(Trajectory::new(states, logps).unwrap());
        }
        TrajectoryGroup::new(trajectories, rewards, cond).unwrap()
    }

    #[test]
    fn gaussian_kl_batch_mean_and_schedule_check() {
        let a = policy_with(1, 0.2);
        let b = policy_with(2, 0.2);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let cond = condition(&mut rng);
        let states: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let batch: Vec<KlPoint> = states
            .iter()
            .enumerate()
            .map(|(i, s)| KlPoint {
                state: s,
                t: (i % 4) + 1,
                condition: &cond,
            })
            .collect();

        let kl = gaussian_kl(&a, &b, &batch).unwrap();
        assert!(kl >= 0.0);
        assert!(gaussian_kl(&a, &a.clone(), &batch).unwrap().abs() < 1e-12);

        let mismatched = GaussianStepPolicy::with_uniform_sigma(2, 4, 4, 0.7).unwrap();
        assert!(matches!(
            gaussian_kl(&a, &mismatched, &batch),
            Err(GrpoError::ScheduleMismatch)
        ));
    }

    #[test]
    fn objective_is_mean_advantage_when_policies_coincide() {
        let policy = policy_with(7, 0.1);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let config = GrpoConfig {
            group_size: 6,
            num_steps: 4,
            kl_beta: 0.0,
            ..GrpoConfig::default()
        };
        let groups: Vec<TrajectoryGroup> =
            (0..3).map(|_| sample_group(&policy, 6, &mut rng)).collect();
        let value = grpo_objective(&groups, &policy, &policy.clone(), &policy.clone(), &config)
            .unwrap();
        // All ratios are exactly 1, so the surrogate is the mean advantage,
        // which is zero by construction.
        assert!(value.abs() < 1e-9, "objective {value} should vanish");
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let config = GrpoConfig {
            group_size: 4,
            num_steps: 4,
            clip_epsilon: 0.2,
            kl_beta: 0.05,
            std_floor: 1e-8,
        };
        for seed in 0..5 {
            let policy_old = policy_with(seed, 0.2);
            let mut policy = policy_old.clone();
            let mut rng = ChaCha20Rng::seed_from_u64(1000 + seed);
            policy.perturb(&mut rng, 0.02);
            let policy_ref = policy_with(seed + 500, 0.2);

            let groups: Vec<TrajectoryGroup> = (0..2)
                .map(|_| sample_group(&policy_old, 4, &mut rng))
                .collect();

            let eval =
                evaluate_objective(&groups, &policy, &policy_old, &policy_ref, &config).unwrap();
            let h = 1e-6;
            for i in 0..policy.weights().len() {
                let mut plus = policy.clone();
                plus.weights_mut()[i] += h;
                let mut minus = policy.clone();
                minus.weights_mut()[i] -= h;
                let fd = (grpo_objective(&groups, &plus, &policy_old, &policy_ref, &config)
                    .unwrap()
                    - grpo_objective(&groups, &minus, &policy_old, &policy_ref, &config)
                        .unwrap())
                    / (2.0 * h);
                let analytic = eval.gradient[i];
                let denom = analytic.abs().max(fd.abs()).max(1e-6);
                assert!(
                    ((analytic - fd) / denom).abs() < 1e-4,
                    "seed {seed} coordinate {i}: analytic {analytic} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn objective_requires_groups_and_matching_schedules() {
        let policy = policy_with(1, 0.1);
        let config = GrpoConfig::default();
        assert!(matches!(
            grpo_objective(&[], &policy, &policy.clone(), &policy.clone(), &config),
            Err(GrpoError::EmptyGroups)
        ));

        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let group = sample_group(&policy, 4, &mut rng);
        let other = GaussianStepPolicy::with_uniform_sigma(2, 4, 4, 0.9).unwrap();
        assert!(matches!(
            grpo_objective(&[group], &policy, &other, &policy.clone(), &GrpoConfig {
                group_size: 4,
                num_steps: 4,
                ..GrpoConfig::default()
            }),
            Err(GrpoError::ScheduleMismatch)
        ));
    }
}
