//! Dataset construction: planning and correction tuples, their rendering
//! into loss-flagged interleaved training sequences, and token-budget packing.
//!
//! Builds go through an [`AnnotatorClient`] (usually wrapped in the
//! record/replay [`cache`]); samples whose annotations fail schema validation
//! are quarantined with a reason, never silently dropped. Corpora are
//! line-delimited JSON records with image references inline, so they stream.

pub mod annotator;
pub mod cache;

pub use annotator::{
    AnnotatorClient, AnnotatorError, HttpAnnotator, MockAnnotator, RetryPolicy,
};
pub use cache::{AnnotationCache, CachedAnnotator};

use crate::engine::{ImageRef, Prompt, VisualContext};
use crate::plan::{Checklist, EvalFeedback};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("annotator: {0}")]
    Annotator(#[from] AnnotatorError),
    #[error("perfect_fraction must lie in [0, 1]")]
    InvalidFraction,
    #[error("degraded generation failed: {0}")]
    Degrader(String),
    #[error("tokenizer failed: {0}")]
    TokenizerFailure(String),
    #[error("image_token_cost must be at least 1")]
    InvalidImageTokenCost,
    #[error("sequence {index} has {tokens} tokens, exceeding the budget of {budget}")]
    SequenceExceedsBudget {
        index: usize,
        tokens: usize,
        budget: usize,
    },
    #[error("training sequence violates its invariants: {0}")]
    InvalidSequence(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
}

/// One input row for planning-dataset construction: the original task plus
/// its ground-truth output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTriple {
    pub prompt: Prompt,
    pub references: VisualContext,
    pub ground_truth: ImageRef,
}

/// A planning tuple: the task, the annotated ground-truth plan, and the
/// ground-truth image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningSample {
    pub prompt: Prompt,
    pub context: VisualContext,
    pub plan_gt: Checklist,
    pub final_gt: ImageRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionKind {
    /// The negative is a degraded image; the feedback critiques it.
    Suboptimal,
    /// The negative equals the ground truth; the feedback is fully satisfied
    /// and the model learns to stop.
    Perfect,
}

/// A correction tuple: a planning tuple extended with a negative image and
/// the ground-truth evaluation of that negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionSample {
    pub prompt: Prompt,
    pub context: VisualContext,
    pub plan_gt: Checklist,
    pub final_gt: ImageRef,
    pub negative: ImageRef,
    pub eval_gt: EvalFeedback,
    pub kind: CorrectionKind,
}

/// Why a sample was set aside during a build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quarantine {
    pub index: usize,
    pub reason: String,
}

/// The outcome of a dataset build: accepted samples plus quarantine records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport<T> {
    pub samples: Vec<T>,
    pub quarantined: Vec<Quarantine>,
}

/// Produces degraded negatives from a ground-truth image, deterministically
/// per variation seed.
pub trait DegradedGenerator {
    fn generate_negative(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
        final_gt: &ImageRef,
        variation_seed: u64,
    ) -> Result<ImageRef, DatasetError>;
}

/// Deterministic degrader: vector images drift by seeded noise, byte- and
/// path-backed images map to a hash-derived blob.
#[derive(Debug, Clone)]
pub struct MockDegrader {
    /// Noise scale applied to vector images.
    pub strength: f64,
}

impl Default for MockDegrader {
    fn default() -> Self {
        MockDegrader { strength: 0.5 }
    }
}

impl DegradedGenerator for MockDegrader {
    fn generate_negative(
        &self,
        _prompt: &Prompt,
        _context: &VisualContext,
        final_gt: &ImageRef,
        variation_seed: u64,
    ) -> Result<ImageRef, DatasetError> {
        match final_gt {
            ImageRef::Vector(v) => {
                let mut rng = ChaCha20Rng::seed_from_u64(variation_seed);
                let degraded = v
                    .iter()
                    .map(|x| {
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        x + self.strength * noise
                    })
                    .collect();
                Ok(ImageRef::Vector(degraded))
            }
            other => {
                let bytes = other
                    .resolve_bytes()
                    .expect("non-vector image resolves")
                    .map_err(|e| DatasetError::Degrader(e.to_string()))?;
                let mut hasher = Sha256::new();
                hasher.update(variation_seed.to_le_bytes());
                hasher.update(&bytes);
                Ok(ImageRef::Bytes(hasher.finalize().to_vec()))
            }
        }
    }
}

fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(index.to_le_bytes());
    u64::from_le_bytes(hasher.finalize()[..8].try_into().unwrap())
}

fn unit_fraction(v: u64) -> f64 {
    (v >> 11) as f64 / (1u64 << 53) as f64
}

/// Builds one planning sample per triple. Annotations that violate the plan
/// schema or fail context validation quarantine the triple; an unavailable
/// annotator aborts the build (a primed cache makes reruns resume for free).
pub fn build_planning(
    triples: &[RawTriple],
    annotator: &dyn AnnotatorClient,
) -> Result<BuildReport<PlanningSample>, DatasetError> {
    let mut samples = Vec::with_capacity(triples.len());
    let mut quarantined = Vec::new();

    for (index, triple) in triples.iter().enumerate() {
        let plan = match annotator.annotate_plan(&triple.prompt, &triple.references) {
            Ok(plan) => plan,
            Err(AnnotatorError::Schema(e)) => {
                quarantined.push(Quarantine {
                    index,
                    reason: format!("plan schema violation: {e}"),
                });
                continue;
            }
            Err(other) => return Err(other.into()),
        };
        let violations = plan.validate_against_context(triple.references.len());
        if !violations.is_empty() {
            let reasons: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            quarantined.push(Quarantine {
                index,
                reason: format!("plan fails context validation: {}", reasons.join("; ")),
            });
            continue;
        }
        samples.push(PlanningSample {
            prompt: triple.prompt.clone(),
            context: triple.references.clone(),
            plan_gt: plan,
            final_gt: triple.ground_truth.clone(),
        });
    }

    Ok(BuildReport {
        samples,
        quarantined,
    })
}

/// For each planning sample, emits a suboptimal correction sample (degraded
/// negative plus annotated feedback) and, with probability `perfect_fraction`
/// (seeded per sample), an additional perfect sample whose negative is the
/// ground truth and whose feedback is fully satisfied.
pub fn build_correction(
    planning: &[PlanningSample],
    degrader: &dyn DegradedGenerator,
    annotator: &dyn AnnotatorClient,
    perfect_fraction: f64,
    seed: u64,
) -> Result<BuildReport<CorrectionSample>, DatasetError> {
    if !(0.0..=1.0).contains(&perfect_fraction) {
        return Err(DatasetError::InvalidFraction);
    }

    let mut samples = Vec::new();
    let mut quarantined = Vec::new();

    for (index, sample) in planning.iter().enumerate() {
        let negative = degrader.generate_negative(
            &sample.prompt,
            &sample.context,
            &sample.final_gt,
            derive_seed(seed, "negative", index as u64),
        )?;

        let eval_gt = match annotator.annotate_eval(
            &sample.prompt,
            &sample.context,
            &sample.plan_gt,
            &negative,
            &sample.final_gt,
        ) {
            Ok(feedback) => feedback,
            Err(AnnotatorError::Schema(e)) => {
                quarantined.push(Quarantine {
                    index,
                    reason: format!("eval schema violation: {e}"),
                });
                continue;
            }
            Err(other) => return Err(other.into()),
        };
        if let Err(e) = eval_gt.check_item_bounds(&sample.plan_gt) {
            quarantined.push(Quarantine {
                index,
                reason: format!("eval out of bounds: {e}"),
            });
            continue;
        }

        samples.push(CorrectionSample {
            prompt: sample.prompt.clone(),
            context: sample.context.clone(),
            plan_gt: sample.plan_gt.clone(),
            final_gt: sample.final_gt.clone(),
            negative,
            eval_gt,
            kind: CorrectionKind::Suboptimal,
        });

        let draw = unit_fraction(derive_seed(seed, "perfect", index as u64));
        if draw < perfect_fraction {
            samples.push(CorrectionSample {
                prompt: sample.prompt.clone(),
                context: sample.context.clone(),
                plan_gt: sample.plan_gt.clone(),
                final_gt: sample.final_gt.clone(),
                negative: sample.final_gt.clone(),
                eval_gt: EvalFeedback::satisfied_for(&sample.plan_gt),
                kind: CorrectionKind::Perfect,
            });
        }
    }

    Ok(BuildReport {
        samples,
        quarantined,
    })
}

/// Maps text to a token count. Must be deterministic.
pub trait Tokenizer {
    fn count_tokens(&self, text: &str) -> Result<usize, DatasetError>;
}

/// Character-count approximation: about four characters per token, never
/// fewer than one.
#[derive(Debug, Clone)]
pub struct ApproxTokenizer {
    pub chars_per_token: usize,
}

impl Default for ApproxTokenizer {
    fn default() -> Self {
        ApproxTokenizer { chars_per_token: 4 }
    }
}

impl Tokenizer for ApproxTokenizer {
    fn count_tokens(&self, text: &str) -> Result<usize, DatasetError> {
        let chars = text.chars().count();
        Ok(chars.div_ceil(self.chars_per_token.max(1)).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    Image,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentPayload {
    Text(String),
    Image(ImageRef),
}

/// One interleaved segment with its loss flag and token cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSegment {
    pub modality: Modality,
    pub need_loss: bool,
    pub payload: SegmentPayload,
    pub token_length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Planning,
    CorrectionSuboptimal,
    CorrectionPerfect,
}

/// An interleaved text/image sequence ready for packing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSequence {
    pub segments: Vec<TrainingSegment>,
    pub sample_kind: SampleKind,
    pub total_tokens: usize,
}

impl TrainingSequence {
    fn from_segments(
        segments: Vec<TrainingSegment>,
        sample_kind: SampleKind,
    ) -> Result<Self, DatasetError> {
        let sequence = TrainingSequence {
            total_tokens: segments.iter().map(|s| s.token_length).sum(),
            segments,
            sample_kind,
        };
        sequence.validate()?;
        Ok(sequence)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let total: usize = self.segments.iter().map(|s| s.token_length).sum();
        if total != self.total_tokens {
            return Err(DatasetError::InvalidSequence(format!(
                "total_tokens {} but segments sum to {total}",
                self.total_tokens
            )));
        }
        if !self.segments.iter().any(|s| s.need_loss) {
            return Err(DatasetError::InvalidSequence(
                "no segment carries loss".to_string(),
            ));
        }
        if self.segments.iter().any(|s| s.token_length == 0) {
            return Err(DatasetError::InvalidSequence(
                "zero-length segment".to_string(),
            ));
        }
        Ok(())
    }

    /// The need_loss flags in segment order.
    pub fn loss_mask(&self) -> Vec<bool> {
        self.segments.iter().map(|s| s.need_loss).collect()
    }
}

/// Either corpus record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSample {
    Planning(PlanningSample),
    Correction(CorrectionSample),
}

/// Renders a sample into its interleaved loss-flagged layout.
///
/// Conditioning context never carries loss; model outputs do:
/// - planning: prompt, context images, then the plan text and the
///   ground-truth image under loss;
/// - suboptimal correction: prompt, context, plan, the negative image, then
///   the feedback text and the ground-truth image under loss;
/// - perfect correction: prompt, context, plan, the ground-truth image, then
///   only the satisfied feedback text under loss (no image target: the model
///   learns to stop).
pub fn to_training_sequence(
    sample: &DatasetSample,
    tokenizer: &dyn Tokenizer,
    image_token_cost: usize,
) -> Result<TrainingSequence, DatasetError> {
    if image_token_cost == 0 {
        return Err(DatasetError::InvalidImageTokenCost);
    }
    let text_segment = |text: String, need_loss: bool| -> Result<TrainingSegment, DatasetError> {
        let token_length = tokenizer.count_tokens(&text)?;
        Ok(TrainingSegment {
            modality: Modality::Text,
            need_loss,
            payload: SegmentPayload::Text(text),
            token_length,
        })
    };
    let image_segment = |image: &ImageRef, need_loss: bool| TrainingSegment {
        modality: Modality::Image,
        need_loss,
        payload: SegmentPayload::Image(image.clone()),
        token_length: image_token_cost,
    };

    match sample {
        DatasetSample::Planning(s) => {
            let mut segments = vec![text_segment(s.prompt.text().to_string(), false)?];
            for image in s.context.images() {
                segments.push(image_segment(image, false));
            }
            segments.push(text_segment(s.plan_gt.to_document(), true)?);
            segments.push(image_segment(&s.final_gt, true));
            TrainingSequence::from_segments(segments, SampleKind::Planning)
        }
        DatasetSample::Correction(s) => {
            let mut segments = vec![text_segment(s.prompt.text().to_string(), false)?];
            for image in s.context.images() {
                segments.push(image_segment(image, false));
            }
            segments.push(text_segment(s.plan_gt.to_document(), false)?);
            match s.kind {
                CorrectionKind::Suboptimal => {
                    segments.push(image_segment(&s.negative, false));
                    segments.push(text_segment(s.eval_gt.to_document(), true)?);
                    segments.push(image_segment(&s.final_gt, true));
                    TrainingSequence::from_segments(segments, SampleKind::CorrectionSuboptimal)
                }
                CorrectionKind::Perfect => {
                    segments.push(image_segment(&s.final_gt, false));
                    segments.push(text_segment(s.eval_gt.to_document(), true)?);
                    TrainingSequence::from_segments(segments, SampleKind::CorrectionPerfect)
                }
            }
        }
    }
}

/// A batch of whole sequences within the token budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedBatch {
    pub sequences: Vec<TrainingSequence>,
    pub total_tokens: usize,
}

/// Standard packing budget.
pub const DEFAULT_PACK_BUDGET: usize = 32_000;

/// Greedy order-preserving packing: append to the current batch while it
/// fits, otherwise start a new one. Every input appears exactly once and no
/// batch exceeds the budget.
pub fn pack(
    sequences: Vec<TrainingSequence>,
    budget: usize,
) -> Result<Vec<PackedBatch>, DatasetError> {
    for (index, sequence) in sequences.iter().enumerate() {
        if sequence.total_tokens > budget {
            return Err(DatasetError::SequenceExceedsBudget {
                index,
                tokens: sequence.total_tokens,
                budget,
            });
        }
    }

    let mut batches = Vec::new();
    let mut current: Vec<TrainingSequence> = Vec::new();
    let mut current_tokens = 0usize;
    for sequence in sequences {
        if current_tokens + sequence.total_tokens > budget && !current.is_empty() {
            batches.push(PackedBatch {
                sequences: std::mem::take(&mut current),
                total_tokens: current_tokens,
            });
            current_tokens = 0;
        }
        current_tokens += sequence.total_tokens;
        current.push(sequence);
    }
    if !current.is_empty() {
        batches.push(PackedBatch {
            sequences: current,
            total_tokens: current_tokens,
        });
    }
    Ok(batches)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        file.write_all(line.as_bytes())?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut records = Vec::new();
    for (line_index, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DatasetError::Corpus {
            line: line_index + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_triples(path: &Path, triples: &[RawTriple]) -> Result<(), DatasetError> {
    write_jsonl(path, triples)
}

pub fn read_triples(path: &Path) -> Result<Vec<RawTriple>, DatasetError> {
    read_jsonl(path)
}

pub fn write_corpus(path: &Path, samples: &[DatasetSample]) -> Result<(), DatasetError> {
    write_jsonl(path, samples)
}

pub fn read_corpus(path: &Path) -> Result<Vec<DatasetSample>, DatasetError> {
    read_jsonl(path)
}

pub fn write_sequences(path: &Path, sequences: &[TrainingSequence]) -> Result<(), DatasetError> {
    write_jsonl(path, sequences)
}

pub fn read_sequences(path: &Path) -> Result<Vec<TrainingSequence>, DatasetError> {
    let sequences: Vec<TrainingSequence> = read_jsonl(path)?;
    for (index, sequence) in sequences.iter().enumerate() {
        sequence.validate().map_err(|e| DatasetError::Corpus {
            line: index + 1,
            message: e.to_string(),
        })?;
    }
    Ok(sequences)
}

pub fn write_quarantine(path: &Path, records: &[Quarantine]) -> Result<(), DatasetError> {
    write_jsonl(path, records)
}
