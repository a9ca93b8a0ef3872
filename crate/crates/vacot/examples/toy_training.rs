//! Runs the toy flow policy through a short group-relative training loop and
//! prints the reward curve.

use vacot::grpo::{train_toy, GrpoConfig, OptimizerSettings, ToyFlowEnv};

fn main() {
    let env = ToyFlowEnv::default();
    let config = GrpoConfig {
        group_size: 8,
        num_steps: 4,
        ..GrpoConfig::default()
    };
    let settings = OptimizerSettings {
        learning_rate: 0.05,
        iterations: 100,
        groups_per_iteration: 4,
        eval_groups: 4,
    };

    let outcome = train_toy(&env, &config, &settings, &|x0, c| env.default_reward(x0, c), 42)
        .expect("training runs");

    for row in outcome.report.rows.iter().step_by(10) {
        println!(
            "iter {:>3}  reward {:.4}  kl {:.4}  clip {:.3}",
            row.iteration, row.mean_reward, row.kl, row.clip_fraction
        );
    }
    println!(
        "reward {:.4} -> {:.4}",
        outcome.report.initial_mean_reward(),
        outcome.report.final_mean_reward()
    );
}
