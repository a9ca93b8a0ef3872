//! Toy flow environment and the outer optimization loop.
//!
//! The environment is a T-step Gaussian reverse process over low-dimensional
//! vectors standing in for image denoising. Conditions are (prompt, context)
//! feature pairs, the target is their sum, and the default terminal reward is
//! `exp(-|x_0 - target|^2)`.
//!
//! Training draws fresh conditions and noise every iteration (the
//! likelihood-ratio gradient is only unbiased under resampling), while the
//! logged mean reward comes from a fixed evaluation set rolled under the
//! current behavior policy. The evaluation draws never change, so the reward
//! trace is a deterministic function of the parameters: a zero-learning-rate
//! run logs an exactly flat trace.

use super::{
    evaluate_objective, Condition, GaussianStepPolicy, GrpoConfig, GrpoError, Trajectory,
    TrajectoryGroup,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Deterministic sub-seed derivation: one master seed fans out into
/// independent streams keyed by a tag and two indices.
pub(crate) fn derive_seed(seed: u64, tag: &str, a: u64, b: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(a.to_le_bytes());
    hasher.update(b.to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// The toy rollout environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyFlowEnv {
    pub state_dim: usize,
    pub prompt_dim: usize,
    pub context_dim: usize,
    /// Scale of the sampled condition features.
    pub condition_scale: f64,
    /// Scale of the initial noise state x_T.
    pub init_scale: f64,
    /// Constant per-step noise scale of the policy's transitions.
    pub sigma: f64,
}

impl Default for ToyFlowEnv {
    fn default() -> Self {
        ToyFlowEnv {
            state_dim: 2,
            prompt_dim: 2,
            context_dim: 2,
            condition_scale: 0.5,
            init_scale: 1.0,
            sigma: 0.2,
        }
    }
}

impl ToyFlowEnv {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.state_dim == 0 {
            return Err(GrpoError::InvalidConfig("state_dim must be positive".into()));
        }
        if self.prompt_dim != self.state_dim {
            return Err(GrpoError::InvalidConfig(
                "prompt_dim must equal state_dim".into(),
            ));
        }
        if self.context_dim != 0 && self.context_dim != self.state_dim {
            return Err(GrpoError::InvalidConfig(
                "context_dim must be zero or equal state_dim".into(),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(GrpoError::InvalidConfig("sigma must be positive".into()));
        }
        Ok(())
    }

    pub fn cond_dim(&self) -> usize {
        self.prompt_dim + self.context_dim
    }

    pub fn sample_condition(&self, rng: &mut impl Rng) -> Condition {
        let draw = |rng: &mut dyn rand::RngCore, n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    self.condition_scale * z
                })
                .collect()
        };
        Condition {
            prompt_features: draw(rng, self.prompt_dim),
            context_features: draw(rng, self.context_dim),
        }
    }

    /// The point the generated output should land on: the sum of the prompt
    /// and context feature vectors.
    pub fn target(&self, condition: &Condition) -> Vec<f64> {
        let mut target = condition.prompt_features.clone();
        for (t, c) in target.iter_mut().zip(&condition.context_features) {
            *t += c;
        }
        target
    }

    /// Terminal reward in [0, 1]: `exp(-|x_0 - target|^2)`.
    pub fn default_reward(&self, x0: &[f64], condition: &Condition) -> f64 {
        (-crate::vecmath::squared_distance(x0, &self.target(condition))).exp()
    }

    /// Rolls one trajectory under `policy`: x_T from seeded noise, then T
    /// sampled transitions down to x_0.
    pub fn rollout(
        &self,
        policy: &GaussianStepPolicy,
        condition: &Condition,
        rng: &mut impl Rng,
    ) -> Trajectory {
        let cond = condition.concat();
        let initial: Vec<f64> = (0..self.state_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                self.init_scale * z
            })
            .collect();
        let mut states = vec![initial];
        let mut logps = Vec::with_capacity(policy.num_steps());
        for t in (1..=policy.num_steps()).rev() {
            let (next, logp) = policy.sample_step(states.last().unwrap(), t, &cond, rng);
            states.push(next);
            logps.push(logp);
        }
        Trajectory::new(states, logps).expect("rollout shapes are consistent")
    }
}

/// Settings of the outer ascent loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub learning_rate: f64,
    pub iterations: usize,
    pub groups_per_iteration: usize,
    /// Size of the fixed evaluation set (in groups) behind the logged reward.
    pub eval_groups: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            learning_rate: 0.05,
            iterations: 200,
            groups_per_iteration: 4,
            eval_groups: 4,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(GrpoError::InvalidConfig(
                "learning_rate must be finite and non-negative".into(),
            ));
        }
        if self.iterations == 0 || self.groups_per_iteration == 0 || self.eval_groups == 0 {
            return Err(GrpoError::InvalidConfig(
                "iterations, groups_per_iteration, and eval_groups must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One logged training iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub iteration: usize,
    pub mean_reward: f64,
    pub kl: f64,
    pub clip_fraction: f64,
    pub objective: f64,
}

/// The per-iteration log of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub rows: Vec<TrainingRow>,
}

impl TrainingReport {
    pub fn initial_mean_reward(&self) -> f64 {
        self.rows.first().map(|r| r.mean_reward).unwrap_or(0.0)
    }

    pub fn final_mean_reward(&self) -> f64 {
        self.rows.last().map(|r| r.mean_reward).unwrap_or(0.0)
    }

    /// Delimited-text form: a header line, then one comma-separated row per
    /// iteration.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from("iter,mean_reward,kl,clip_fraction,objective\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.iteration, row.mean_reward, row.kl, row.clip_fraction, row.objective
            ));
        }
        out
    }

    pub fn parse_delimited(raw: &str) -> Result<Self, GrpoError> {
        let mut lines = raw.lines();
        let header = lines
            .next()
            .ok_or_else(|| GrpoError::MalformedReport("empty report".into()))?;
        if header.trim() != "iter,mean_reward,kl,clip_fraction,objective" {
            return Err(GrpoError::MalformedReport(format!(
                "unexpected header `{header}`"
            )));
        }
        let mut rows = Vec::new();
        for (line_no, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(GrpoError::MalformedReport(format!(
                    "line {}: expected 5 fields, got {}",
                    line_no + 2,
                    fields.len()
                )));
            }
            let parse_f = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| GrpoError::MalformedReport(format!("line {}: {e}", line_no + 2)))
            };
            rows.push(TrainingRow {
                iteration: fields[0].trim().parse().map_err(|e| {
                    GrpoError::MalformedReport(format!("line {}: {e}", line_no + 2))
                })?,
                mean_reward: parse_f(fields[1])?,
                kl: parse_f(fields[2])?,
                clip_fraction: parse_f(fields[3])?,
                objective: parse_f(fields[4])?,
            });
        }
        Ok(TrainingReport { rows })
    }
}

/// The trained policy, the reference it was anchored to, and the log.
#[derive(Debug, Clone)]
pub struct ToyTrainOutcome {
    pub policy: GaussianStepPolicy,
    pub policy_ref: GaussianStepPolicy,
    pub report: TrainingReport,
}

/// Rolls one group for `condition` under `policy`, scoring final states.
fn sample_group(
    env: &ToyFlowEnv,
    policy: &GaussianStepPolicy,
    condition: &Condition,
    group_size: usize,
    reward_fn: &dyn Fn(&[f64], &Condition) -> f64,
    rng: &mut ChaCha20Rng,
) -> Result<TrajectoryGroup, GrpoError> {
    let mut trajectories = Vec::with_capacity(group_size);
    let mut rewards = Vec::with_capacity(group_size);
    for _ in 0..group_size {
        let trajectory = env.rollout(policy, condition, rng);
        let reward = reward_fn(trajectory.final_state(), condition);
        if !reward.is_finite() {
            return Err(GrpoError::NonFiniteReward);
        }
        rewards.push(reward);
        trajectories.push(trajectory);
    }
    TrajectoryGroup::new(trajectories, rewards, condition.clone())
}

/// Runs the full loop: per iteration, snapshot the behavior policy, sample
/// fresh groups under it, normalize rewards into group advantages, and take
/// one ascent step on the clipped objective per group (a single inner epoch).
/// The logged mean reward rolls a fixed evaluation set under the snapshot.
pub fn train_toy(
    env: &ToyFlowEnv,
    config: &GrpoConfig,
    settings: &OptimizerSettings,
    reward_fn: &dyn Fn(&[f64], &Condition) -> f64,
    seed: u64,
) -> Result<ToyTrainOutcome, GrpoError> {
    env.validate()?;
    config.validate()?;
    settings.validate()?;

    let mut policy = GaussianStepPolicy::with_uniform_sigma(
        env.state_dim,
        env.cond_dim(),
        config.num_steps,
        env.sigma,
    )?;
    let policy_ref = policy.clone();

    // Fixed evaluation conditions; their rollout streams are re-created
    // identically every iteration so the logged reward depends only on the
    // parameters being evaluated.
    let eval_conditions: Vec<Condition> = (0..settings.eval_groups)
        .map(|e| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, "eval-cond", e as u64, 0));
            env.sample_condition(&mut rng)
        })
        .collect();
    let evaluate_reward = |policy: &GaussianStepPolicy| -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (e, condition) in eval_conditions.iter().enumerate() {
            let mut rng =
                ChaCha20Rng::seed_from_u64(derive_seed(seed, "eval-roll", e as u64, 0));
            for _ in 0..config.group_size {
                let trajectory = env.rollout(policy, condition, &mut rng);
                sum += reward_fn(trajectory.final_state(), condition);
                count += 1;
            }
        }
        sum / count.max(1) as f64
    };

    let mut rows = Vec::with_capacity(settings.iterations);
    for iteration in 0..settings.iterations {
        let policy_old = policy.clone();
        let mean_reward = evaluate_reward(&policy_old);

        let mut groups = Vec::with_capacity(settings.groups_per_iteration);
        for g in 0..settings.groups_per_iteration {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(
                seed,
                "train",
                iteration as u64,
                g as u64,
            ));
            let condition = env.sample_condition(&mut rng);
            groups.push(sample_group(
                env,
                &policy_old,
                &condition,
                config.group_size,
                reward_fn,
                &mut rng,
            )?);
        }

        let mut kl_sum = 0.0;
        let mut clip_sum = 0.0;
        let mut objective_sum = 0.0;
        for group in &groups {
            let eval = evaluate_objective(
                std::slice::from_ref(group),
                &policy,
                &policy_old,
                &policy_ref,
                config,
            )
            .map_err(|e| match e {
                // Log-probabilities overflow when parameters blow up; report
                // that as divergence rather than a bad input.
                GrpoError::Objective { source, .. }
                    if matches!(*source, GrpoError::NonFiniteLogProb) =>
                {
                    GrpoError::DivergenceDetected { iteration }
                }
                other => other,
            })?;
            kl_sum += eval.kl;
            clip_sum += eval.clip_fraction;
            objective_sum += eval.value;
            for (w, g) in policy.weights_mut().iter_mut().zip(&eval.gradient) {
                *w += settings.learning_rate * g;
            }
            if policy.weights().iter().any(|w| !w.is_finite()) {
                return Err(GrpoError::DivergenceDetected { iteration });
            }
        }

        let n = groups.len() as f64;
        rows.push(TrainingRow {
            iteration,
            mean_reward,
            kl: kl_sum / n,
            clip_fraction: clip_sum / n,
            objective: objective_sum / n,
        });
    }

    Ok(ToyTrainOutcome {
        policy,
        policy_ref,
        report: TrainingReport { rows },
    })
}
