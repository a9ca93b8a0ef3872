//! Engine for visual-aware chain-of-thought generation: adaptive checklist
//! planning, bounded evaluate-and-refine inference over pluggable backends,
//! a composite visual/text consistency reward, dataset construction with
//! loss-flagged sequence packing, and a flow-GRPO training core that runs
//! end to end on deterministic simulated backends.

pub mod cli;
pub mod dataset;
pub mod engine;
pub mod grpo;
pub mod plan;
pub mod report;
pub mod reward;
pub(crate) mod vecmath;

pub use engine::{ImageRef, Prompt, VisualContext};
pub use plan::{CheckItem, CheckType, Checklist, EvalFeedback, PlanOrigin};
