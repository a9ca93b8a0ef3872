//! Iterative inference: plan once, generate, then evaluate-and-refine in a
//! bounded loop over an abstract generation backend.
//!
//! The control flow is fixed: exactly one planning call produces the
//! checklist and the initial image, then up to `max_iterations` refinement
//! calls run, breaking immediately after the first satisfied evaluation.
//! Every episode yields a complete [`EpisodeTrace`] with the plan, each
//! intermediate image, each evaluation, and (optionally) per-step rewards.

pub mod http;
mod sim;

pub use http::HttpGenerationBackend;
pub use sim::{simulated_backend, SimSpec, SimulatedBackend};

use crate::plan::{Checklist, EvalFeedback, Violation};
use crate::reward::{EpisodeScorer, RewardBreakdown, RewardError};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

/// Errors from episode execution and backend construction.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("prompt must be non-empty")]
    EmptyPrompt,
    #[error("max_iterations must be at least 1")]
    InvalidConfig,
    #[error("invalid simulated-backend spec: {0}")]
    InvalidSpec(String),
    #[error("backend failed at iteration {iteration}: {source}")]
    BackendFailure {
        iteration: usize,
        source: BackendError,
    },
    #[error("plan failed context validation: {}", format_violations(.violations))]
    PlanInvalid { violations: Vec<Violation> },
    #[error("reward scoring failed at iteration {iteration}: {source}")]
    Scoring {
        iteration: usize,
        source: RewardError,
    },
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// An opaque failure inside a generation backend.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct BackendError(pub String);

impl BackendError {
    pub fn msg(message: impl Into<String>) -> Self {
        BackendError(message.into())
    }
}

/// The user's text instruction. Always non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prompt(String);

impl Prompt {
    pub fn new(text: impl Into<String>) -> Result<Self, EngineError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(EngineError::EmptyPrompt);
        }
        Ok(Prompt(text))
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An opaque handle to an image: a file on disk, an in-memory blob, or, for
/// the simulated backend, a fixed-dimension feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageRef {
    Path(PathBuf),
    Bytes(#[serde(with = "hex::serde")] Vec<u8>),
    Vector(Vec<f64>),
}

impl ImageRef {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            ImageRef::Vector(v) => Some(v),
            _ => None,
        }
    }

    /// Raw bytes for path- and blob-backed images; `None` for vectors.
    pub fn resolve_bytes(&self) -> Option<std::io::Result<Vec<u8>>> {
        match self {
            ImageRef::Path(path) => Some(std::fs::read(path)),
            ImageRef::Bytes(bytes) => Some(Ok(bytes.clone())),
            ImageRef::Vector(_) => None,
        }
    }
}

/// The ordered reference images an episode conditions on. `image_1` addresses
/// the first element.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VisualContext {
    images: Vec<ImageRef>,
}

impl VisualContext {
    pub fn new(images: Vec<ImageRef>) -> Self {
        VisualContext { images }
    }

    pub fn empty() -> Self {
        VisualContext { images: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[ImageRef] {
        &self.images
    }

    /// Looks up a 1-based context image index.
    pub fn image(&self, index: u32) -> Option<&ImageRef> {
        if index == 0 {
            return None;
        }
        self.images.get(index as usize - 1)
    }
}

/// The unified model behind the loop: one call plans and generates, the other
/// evaluates the current image against the plan and refines it.
///
/// Contract: when the returned feedback is satisfied, the returned image must
/// be identical to the image that was evaluated, so "refined image" and
/// "current image" coincide at the terminal step.
pub trait GenerationBackend {
    fn plan_and_generate(
        &mut self,
        prompt: &Prompt,
        context: &VisualContext,
    ) -> Result<(Checklist, ImageRef), BackendError>;

    fn evaluate_and_refine(
        &mut self,
        prompt: &Prompt,
        context: &VisualContext,
        plan: &Checklist,
        current: &ImageRef,
    ) -> Result<(EvalFeedback, ImageRef), BackendError>;
}

/// Episode parameters. The seed is recorded in the trace and used by callers
/// to derive backend and scorer seeds; the loop itself draws no randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub max_iterations: usize,
    pub record_rewards: bool,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        // Refinement typically converges within three iterations; more tends
        // to over-correct.
        EngineConfig {
            max_iterations: 3,
            record_rewards: false,
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.max_iterations < 1 {
            return Err(EngineError::InvalidConfig);
        }
        Ok(())
    }
}

/// Why an episode stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Satisfied,
    MaxIterations,
}

/// One evaluate-and-refine step: the feedback on the incoming image and the
/// image the backend returned (refined, or unchanged when satisfied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStep {
    pub iteration: usize,
    pub feedback: EvalFeedback,
    pub image: ImageRef,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reward: Option<RewardBreakdown>,
}

/// The full record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub prompt: Prompt,
    pub context: VisualContext,
    pub config: EngineConfig,
    pub plan: Checklist,
    pub initial_image: ImageRef,
    pub steps: Vec<EpisodeStep>,
    pub final_image: ImageRef,
    pub terminated_by: Termination,
}

impl EpisodeTrace {
    /// Serializes the trace as one newline-terminated JSON document.
    pub fn to_document(&self) -> String {
        let mut doc = serde_json::to_string_pretty(self).expect("trace serializes");
        doc.push('\n');
        doc
    }

    pub fn parse(raw: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(raw)
    }
}

/// Runs one episode: plan and generate once, then evaluate and refine until
/// the backend reports satisfaction or `max_iterations` is reached.
///
/// When `record_rewards` is set and a scorer is supplied, every step carries
/// the composite reward of its image. Rewards are observational only; the
/// break condition is the backend's verdict.
pub fn run_episode(
    backend: &mut dyn GenerationBackend,
    prompt: &Prompt,
    context: &VisualContext,
    config: &EngineConfig,
    scorer: Option<&dyn EpisodeScorer>,
) -> Result<EpisodeTrace, EngineError> {
    config.validate()?;

    let (plan, initial_image) = backend
        .plan_and_generate(prompt, context)
        .map_err(|source| EngineError::BackendFailure {
            iteration: 0,
            source,
        })?;

    let violations = plan.validate_against_context(context.len());
    if !violations.is_empty() {
        return Err(EngineError::PlanInvalid { violations });
    }

    let mut current = initial_image.clone();
    let mut steps = Vec::new();
    let mut terminated_by = Termination::MaxIterations;

    for iteration in 1..=config.max_iterations {
        let (feedback, next) = backend
            .evaluate_and_refine(prompt, context, &plan, &current)
            .map_err(|source| EngineError::BackendFailure { iteration, source })?;

        let reward = match (config.record_rewards, scorer) {
            (true, Some(scorer)) => Some(
                scorer
                    .score(&plan, context, &next, prompt)
                    .map_err(|source| EngineError::Scoring { iteration, source })?,
            ),
            _ => None,
        };

        let satisfied = feedback.satisfied;
        steps.push(EpisodeStep {
            iteration,
            feedback,
            image: next.clone(),
            reward,
        });
        current = next;
        if satisfied {
            terminated_by = Termination::Satisfied;
            break;
        }
    }

    Ok(EpisodeTrace {
        prompt: prompt.clone(),
        context: context.clone(),
        config: config.clone(),
        plan,
        initial_image,
        steps,
        final_image: current,
        terminated_by,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{CheckItem, CheckType, ElementRef, ImageId, ItemVerdict, PlanOrigin};

    /// Backend whose evaluation verdicts follow a script; counts calls.
    struct ScriptedBackend {
        satisfy_at: Option<usize>,
        plan_calls: usize,
        refine_calls: usize,
        plan_target: ImageId,
        source_index: u32,
    }

    impl ScriptedBackend {
        fn new(satisfy_at: Option<usize>) -> Self {
            ScriptedBackend {
                satisfy_at,
                plan_calls: 0,
                refine_calls: 0,
                plan_target: ImageId::Generated,
                source_index: 1,
            }
        }
    }

    impl GenerationBackend for ScriptedBackend {
        fn plan_and_generate(
            &mut self,
            _prompt: &Prompt,
            _context: &VisualContext,
        ) -> Result<(Checklist, ImageRef), BackendError> {
            self.plan_calls += 1;
            let plan = Checklist {
                items: vec![CheckItem {
                    check_type: CheckType::Identity,
                    source: ElementRef::new(ImageId::Context(self.source_index), "subject"),
                    target: ElementRef::new(self.plan_target, "subject"),
                }],
                origin: PlanOrigin::ModelGenerated,
            };
            Ok((plan, ImageRef::Bytes(vec![0])))
        }

        fn evaluate_and_refine(
            &mut self,
            _prompt: &Prompt,
            _context: &VisualContext,
            plan: &Checklist,
            current: &ImageRef,
        ) -> Result<(EvalFeedback, ImageRef), BackendError> {
            self.refine_calls += 1;
            let satisfied = self.satisfy_at == Some(self.refine_calls);
            let verdicts = plan
                .items
                .iter()
                .enumerate()
                .map(|(item_index, _)| ItemVerdict {
                    item_index,
                    satisfied,
                    score: None,
                    critique: if satisfied { String::new() } else { "off".into() },
                })
                .collect();
            let edit = if satisfied { "" } else { "adjust the subject" };
            let feedback = EvalFeedback::new(verdicts, edit).unwrap();
            let image = if satisfied {
                current.clone()
            } else {
                ImageRef::Bytes(vec![self.refine_calls as u8])
            };
            Ok((feedback, image))
        }
    }

    fn prompt() -> Prompt {
        Prompt::new("two subjects side by side").unwrap()
    }

    fn context() -> VisualContext {
        VisualContext::new(vec![ImageRef::Bytes(vec![1, 2, 3])])
    }

    #[test]
    fn satisfied_on_first_evaluation_stops_after_one_step() {
        let mut backend = ScriptedBackend::new(Some(1));
        let trace = run_episode(
            &mut backend,
            &prompt(),
            &context(),
            &EngineConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.terminated_by, Termination::Satisfied);
        assert_eq!(backend.plan_calls, 1);
        assert_eq!(backend.refine_calls, 1);
        // Satisfied step returns the evaluated image unchanged.
        assert_eq!(trace.final_image, trace.initial_image);
    }

    #[test]
    fn never_satisfied_runs_exactly_max_iterations() {
        let mut backend = ScriptedBackend::new(None);
        let config = EngineConfig {
            max_iterations: 3,
            ..EngineConfig::default()
        };
        let trace = run_episode(&mut backend, &prompt(), &context(), &config, None).unwrap();
        assert_eq!(trace.steps.len(), 3);
        assert_eq!(trace.terminated_by, Termination::MaxIterations);
        assert_eq!(backend.plan_calls, 1);
        assert_eq!(backend.refine_calls, 3);
        assert_eq!(trace.final_image, ImageRef::Bytes(vec![3]));
    }

    #[test]
    fn breaks_immediately_after_satisfaction_mid_run() {
        for satisfy_at in 1..=5usize {
            let mut backend = ScriptedBackend::new(Some(satisfy_at));
            let config = EngineConfig {
                max_iterations: 5,
                ..EngineConfig::default()
            };
            let trace = run_episode(&mut backend, &prompt(), &context(), &config, None).unwrap();
            assert_eq!(backend.plan_calls, 1);
            assert_eq!(backend.refine_calls, satisfy_at);
            assert_eq!(trace.steps.len(), satisfy_at);
            assert_eq!(trace.terminated_by, Termination::Satisfied);
            assert!(trace.steps.last().unwrap().feedback.satisfied);
        }
    }

    #[test]
    fn plan_failing_context_validation_aborts() {
        let mut backend = ScriptedBackend::new(Some(1));
        backend.source_index = 3;
        let err = run_episode(
            &mut backend,
            &prompt(),
            &context(),
            &EngineConfig::default(),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, EngineError::PlanInvalid { .. }));
        assert_eq!(backend.refine_calls, 0);
    }

    #[test]
    fn plan_with_non_generated_target_aborts() {
        let mut backend = ScriptedBackend::new(Some(1));
        backend.plan_target = ImageId::Context(1);
        let err = run_episode(
            &mut backend,
            &prompt(),
            &context(),
            &EngineConfig::default(),
            None,
        )
        .unwrap_err();
        match err {
            EngineError::PlanInvalid { violations } => {
                assert_eq!(violations, vec![Violation::NonGeneratedTarget { item: 0 }]);
            }
            other => panic!("expected PlanInvalid, got {other:?}"),
        }
    }

    #[test]
    fn backend_failure_carries_iteration_index() {
        struct FailingRefine(ScriptedBackend);
        impl GenerationBackend for FailingRefine {
            fn plan_and_generate(
                &mut self,
                prompt: &Prompt,
                context: &VisualContext,
            ) -> Result<(Checklist, ImageRef), BackendError> {
                self.0.plan_and_generate(prompt, context)
            }
            fn evaluate_and_refine(
                &mut self,
                _: &Prompt,
                _: &VisualContext,
                _: &Checklist,
                _: &ImageRef,
            ) -> Result<(EvalFeedback, ImageRef), BackendError> {
                Err(BackendError::msg("refinement head unavailable"))
            }
        }
        let mut backend = FailingRefine(ScriptedBackend::new(None));
        let err = run_episode(
            &mut backend,
            &prompt(),
            &context(),
            &EngineConfig::default(),
            None,
        )
        .unwrap_err();
        match err {
            EngineError::BackendFailure { iteration, .. } => assert_eq!(iteration, 1),
            other => panic!("expected BackendFailure, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let mut backend = ScriptedBackend::new(Some(1));
        let config = EngineConfig {
            max_iterations: 0,
            ..EngineConfig::default()
        };
        assert!(matches!(
            run_episode(&mut backend, &prompt(), &context(), &config, None),
            Err(EngineError::InvalidConfig)
        ));
    }

    #[test]
    fn trace_document_round_trips() {
        let mut backend = ScriptedBackend::new(Some(2));
        let trace = run_episode(
            &mut backend,
            &prompt(),
            &context(),
            &EngineConfig::default(),
            None,
        )
        .unwrap();
        let doc = trace.to_document();
        assert!(doc.ends_with('\n'));
        assert_eq!(EpisodeTrace::parse(&doc).unwrap(), trace);
    }

    #[test]
    fn empty_prompt_rejected() {
        assert!(matches!(Prompt::new("  "), Err(EngineError::EmptyPrompt)));
    }
}
