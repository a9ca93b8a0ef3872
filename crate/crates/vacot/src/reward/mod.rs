//! Composite visual/text consistency reward.
//!
//! Checklist items are dispatched to type-specific scorers: identity and
//! attribute items run the detect-crop-embed object-similarity procedure
//! against the item's source image, style items compare whole-image style
//! embeddings, and the text reward scores prompt-image alignment. The total
//! reward is the weighted sum of the visual mean, the text score, and any
//! named extra scorers, which is what the policy-optimization stage consumes.

pub mod http;
mod mock;

pub use mock::{mock_suite, MockSuite};

use crate::engine::{ImageRef, Prompt, VisualContext};
use crate::plan::{CheckType, Checklist, ImageId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Failures inside an individual scorer.
#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("detection failed: {0}")]
    Detection(String),
    #[error("embedding failed: {0}")]
    Embedding(String),
    #[error("text scoring failed: {0}")]
    TextScoring(String),
    #[error("image unresolvable: {0}")]
    Image(String),
    #[error("scorer transport failed: {0}")]
    Transport(String),
}

/// Failures while composing a reward.
#[derive(Debug, Error)]
pub enum RewardError {
    #[error("invalid reward weights: {0}")]
    InvalidWeights(String),
    #[error("unknown extra scorer `{name}`")]
    UnknownExtraScorer { name: String },
    #[error("item {item}: {source}")]
    Item { item: usize, source: ScorerError },
    #[error("item {item} does not resolve against the visual context")]
    PlanContextMismatch { item: usize },
    #[error("text scoring: {source}")]
    Text { source: ScorerError },
    #[error("extra scorer `{name}`: {source}")]
    Extra { name: String, source: ScorerError },
    #[error("preference validation requires a non-empty pair list")]
    EmptyInput,
}

/// Axis-aligned detection box in normalized coordinates with a confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub confidence: f64,
}

impl BoundingBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64, confidence: f64) -> Result<Self, ScorerError> {
        if !(x0 < x1 && y0 < y1) {
            return Err(ScorerError::Detection(
                "bounding box requires x0 < x1 and y0 < y1".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(ScorerError::Detection(
                "confidence must lie in [0, 1]".to_string(),
            ));
        }
        Ok(BoundingBox {
            x0,
            y0,
            x1,
            y1,
            confidence,
        })
    }

    /// The whole image at full confidence.
    pub fn full_frame() -> Self {
        BoundingBox {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
            confidence: 1.0,
        }
    }
}

/// A region of an image selected for identity embedding. `None` region means
/// the whole image.
#[derive(Debug, Clone, Copy)]
pub struct Crop<'a> {
    pub image: &'a ImageRef,
    pub region: Option<BoundingBox>,
}

/// The pluggable scorer bundle: detector, identity/style embedders, the
/// prompt-image scorer, and optional extra scorers keyed by name.
///
/// Embedder outputs must be unit L2 vectors (within 1e-6); the reward
/// operations enforce this. Implementations must be safe for concurrent
/// read-only use or be wrapped so that scoring is serialized.
pub trait ScorerSuite {
    /// Locates `description` in the image; `None` means not found.
    fn detect(&self, image: &ImageRef, description: &str)
        -> Result<Option<BoundingBox>, ScorerError>;

    fn embed_identity(&self, crop: &Crop) -> Result<Vec<f64>, ScorerError>;

    fn embed_style(&self, image: &ImageRef) -> Result<Vec<f64>, ScorerError>;

    /// Prompt-image alignment in `[0, 1]`.
    fn score_text_image(&self, text: &str, image: &ImageRef) -> Result<f64, ScorerError>;

    /// Extra scorer by name (e.g. `"pick"`); `None` when the suite does not
    /// provide that scorer.
    fn extra_score(
        &self,
        name: &str,
        text: &str,
        image: &ImageRef,
    ) -> Option<Result<f64, ScorerError>> {
        let _ = (name, text, image);
        None
    }
}

/// Weights of the reward components. Defaults to the plain unweighted sum of
/// the visual and text rewards; extras support reward-composition ablations
/// (e.g. adding a `pick` scorer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub visual: f64,
    pub text: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            visual: 1.0,
            text: 1.0,
            extras: BTreeMap::new(),
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), RewardError> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !ok(self.visual) || !ok(self.text) || !self.extras.values().all(|&w| ok(w)) {
            return Err(RewardError::InvalidWeights(
                "weights must be finite and non-negative".to_string(),
            ));
        }
        Ok(())
    }

    /// Sum of all weights; the total reward lies in `[0, sum]`.
    pub fn sum(&self) -> f64 {
        self.visual + self.text + self.extras.values().sum::<f64>()
    }
}

/// The score and a short note for one checklist item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerItemScore {
    pub item_index: usize,
    pub score: f64,
    pub detail: String,
}

/// The fully itemized reward of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub per_item: Vec<PerItemScore>,
    pub r_visual: f64,
    pub r_text: f64,
    pub r_total: f64,
    pub weights: RewardWeights,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra_scores: BTreeMap<String, f64>,
}

/// The one place the weighted sum is computed, so the breakdown identity
/// `r_total = w_visual * r_visual + w_text * r_text + sum(w_k * extra_k)`
/// holds exactly for every breakdown.
pub fn weighted_total(
    weights: &RewardWeights,
    r_visual: f64,
    r_text: f64,
    extra_scores: &BTreeMap<String, f64>,
) -> f64 {
    let mut total = weights.visual * r_visual + weights.text * r_text;
    for (name, weight) in &weights.extras {
        total += weight * extra_scores.get(name).copied().unwrap_or(0.0);
    }
    total
}

fn checked_unit_embedding(v: Vec<f64>) -> Result<Vec<f64>, ScorerError> {
    let norm = crate::vecmath::norm(&v);
    if (norm - 1.0).abs() > 1e-6 {
        return Err(ScorerError::Embedding(format!(
            "embedder output has norm {norm}, expected unit"
        )));
    }
    Ok(v)
}

fn cosine_to_unit_interval(cos: f64) -> f64 {
    ((cos + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Result of scoring one element pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemScore {
    pub score: f64,
    pub detail: String,
}

/// Detects `description` in both images, crops both boxes, embeds the crops,
/// and maps the embedding cosine affinely onto `[0, 1]`.
///
/// A detection miss in either image scores 0 with detail `detection-miss`:
/// a missing subject is exactly the failure the reward must penalize.
pub fn object_similarity(
    suite: &dyn ScorerSuite,
    reference: &ImageRef,
    generated: &ImageRef,
    description: &str,
) -> Result<ItemScore, ScorerError> {
    let reference_box = suite.detect(reference, description)?;
    let generated_box = suite.detect(generated, description)?;
    let (reference_box, generated_box) = match (reference_box, generated_box) {
        (Some(r), Some(g)) => (r, g),
        _ => {
            return Ok(ItemScore {
                score: 0.0,
                detail: "detection-miss".to_string(),
            })
        }
    };

    let reference_embedding = checked_unit_embedding(suite.embed_identity(&Crop {
        image: reference,
        region: Some(reference_box),
    })?)?;
    let generated_embedding = checked_unit_embedding(suite.embed_identity(&Crop {
        image: generated,
        region: Some(generated_box),
    })?)?;

    let cos = crate::vecmath::cosine(&reference_embedding, &generated_embedding);
    Ok(ItemScore {
        score: cosine_to_unit_interval(cos),
        detail: "object-similarity".to_string(),
    })
}

/// Whole-image style similarity: the style-embedding cosine mapped onto `[0, 1]`.
pub fn style_similarity(
    suite: &dyn ScorerSuite,
    reference: &ImageRef,
    generated: &ImageRef,
) -> Result<f64, ScorerError> {
    let a = checked_unit_embedding(suite.embed_style(reference)?)?;
    let b = checked_unit_embedding(suite.embed_style(generated)?)?;
    Ok(cosine_to_unit_interval(crate::vecmath::cosine(&a, &b)))
}

/// Scores every checklist item against the generated image and aggregates by
/// arithmetic mean. An empty checklist scores 0 with an empty item list.
pub fn visual_reward(
    plan: &Checklist,
    context: &VisualContext,
    generated: &ImageRef,
    suite: &dyn ScorerSuite,
) -> Result<(f64, Vec<PerItemScore>), RewardError> {
    let mut per_item = Vec::with_capacity(plan.items.len());
    for (item_index, item) in plan.items.iter().enumerate() {
        let source_image = match item.source.image_id {
            ImageId::Context(i) => context
                .image(i)
                .ok_or(RewardError::PlanContextMismatch { item: item_index })?,
            ImageId::Generated => {
                return Err(RewardError::PlanContextMismatch { item: item_index })
            }
        };
        let scored = match item.check_type {
            CheckType::Identity | CheckType::Attribute => {
                object_similarity(suite, source_image, generated, &item.source.description)
                    .map_err(|source| RewardError::Item {
                        item: item_index,
                        source,
                    })?
            }
            CheckType::Style => {
                let score = style_similarity(suite, source_image, generated).map_err(|source| {
                    RewardError::Item {
                        item: item_index,
                        source,
                    }
                })?;
                ItemScore {
                    score,
                    detail: "style-similarity".to_string(),
                }
            }
        };
        per_item.push(PerItemScore {
            item_index,
            score: scored.score,
            detail: scored.detail,
        });
    }

    let r_visual = if per_item.is_empty() {
        0.0
    } else {
        per_item.iter().map(|p| p.score).sum::<f64>() / per_item.len() as f64
    };
    Ok((r_visual, per_item))
}

/// The composite reward: weighted sum of the visual mean, the prompt-image
/// score, and any configured extra scorers.
pub fn total_reward(
    plan: &Checklist,
    context: &VisualContext,
    generated: &ImageRef,
    prompt: &Prompt,
    suite: &dyn ScorerSuite,
    weights: &RewardWeights,
) -> Result<RewardBreakdown, RewardError> {
    weights.validate()?;
    let (r_visual, per_item) = visual_reward(plan, context, generated, suite)?;

    let r_text = suite
        .score_text_image(prompt.text(), generated)
        .map_err(|source| RewardError::Text { source })?;
    if !(0.0..=1.0).contains(&r_text) {
        return Err(RewardError::Text {
            source: ScorerError::TextScoring(format!("score {r_text} outside [0, 1]")),
        });
    }

    let mut extra_scores = BTreeMap::new();
    for name in weights.extras.keys() {
        let score = suite
            .extra_score(name, prompt.text(), generated)
            .ok_or_else(|| RewardError::UnknownExtraScorer { name: name.clone() })?
            .map_err(|source| RewardError::Extra {
                name: name.clone(),
                source,
            })?;
        if !(0.0..=1.0).contains(&score) {
            return Err(RewardError::Extra {
                name: name.clone(),
                source: ScorerError::TextScoring(format!("score {score} outside [0, 1]")),
            });
        }
        extra_scores.insert(name.clone(), score);
    }

    let r_total = weighted_total(weights, r_visual, r_text, &extra_scores);
    Ok(RewardBreakdown {
        per_item,
        r_visual,
        r_text,
        r_total,
        weights: weights.clone(),
        extra_scores,
    })
}

/// One ground-truth/negative pair for reward validation.
#[derive(Debug, Clone)]
pub struct PreferencePair {
    pub plan: Checklist,
    pub context: VisualContext,
    pub gt_image: ImageRef,
    pub negative_image: ImageRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub index: usize,
    pub gt_score: f64,
    pub negative_score: f64,
    pub gt_preferred: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceReport {
    /// Fraction of pairs where the ground truth scored strictly higher.
    pub fraction: f64,
    pub pairs: Vec<PairOutcome>,
}

/// Scores each pair's images with the visual reward and reports the fraction
/// of pairs where the ground truth strictly beats the negative.
pub fn preference_validation(
    pairs: &[PreferencePair],
    suite: &dyn ScorerSuite,
) -> Result<PreferenceReport, RewardError> {
    if pairs.is_empty() {
        return Err(RewardError::EmptyInput);
    }
    let mut outcomes = Vec::with_capacity(pairs.len());
    let mut wins = 0usize;
    for (index, pair) in pairs.iter().enumerate() {
        let (gt_score, _) = visual_reward(&pair.plan, &pair.context, &pair.gt_image, suite)?;
        let (negative_score, _) =
            visual_reward(&pair.plan, &pair.context, &pair.negative_image, suite)?;
        let gt_preferred = gt_score > negative_score;
        if gt_preferred {
            wins += 1;
        }
        outcomes.push(PairOutcome {
            index,
            gt_score,
            negative_score,
            gt_preferred,
        });
    }
    Ok(PreferenceReport {
        fraction: wins as f64 / pairs.len() as f64,
        pairs: outcomes,
    })
}

/// Anything that can attach a reward breakdown to an episode step.
pub trait EpisodeScorer {
    fn score(
        &self,
        plan: &Checklist,
        context: &VisualContext,
        image: &ImageRef,
        prompt: &Prompt,
    ) -> Result<RewardBreakdown, RewardError>;
}

/// A suite plus weights, ready to score episode steps.
pub struct RewardEvaluator<S> {
    pub suite: S,
    pub weights: RewardWeights,
}

impl<S: ScorerSuite> RewardEvaluator<S> {
    pub fn new(suite: S, weights: RewardWeights) -> Self {
        RewardEvaluator { suite, weights }
    }
}

impl<S: ScorerSuite> EpisodeScorer for RewardEvaluator<S> {
    fn score(
        &self,
        plan: &Checklist,
        context: &VisualContext,
        image: &ImageRef,
        prompt: &Prompt,
    ) -> Result<RewardBreakdown, RewardError> {
        total_reward(plan, context, image, prompt, &self.suite, &self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{CheckItem, ElementRef, PlanOrigin};

    /// Suite with hand-set embeddings: context image k embeds to the k-th
    /// basis vector; the generated image embeds to a configurable vector.
    struct StubSuite {
        generated_identity: Vec<f64>,
        generated_style: Vec<f64>,
        text_score: f64,
        pick_score: Option<f64>,
    }

    impl StubSuite {
        fn basis(k: usize) -> Vec<f64> {
            let mut v = vec![0.0; 4];
            v[k] = 1.0;
            v
        }

        fn embedding_for(&self, image: &ImageRef, generated: &[f64]) -> Vec<f64> {
            match image {
                ImageRef::Bytes(b) if b.len() == 1 => Self::basis(b[0] as usize),
                _ => generated.to_vec(),
            }
        }
    }

    impl ScorerSuite for StubSuite {
        fn detect(
            &self,
            _image: &ImageRef,
            description: &str,
        ) -> Result<Option<BoundingBox>, ScorerError> {
            if description.contains("ABSENT") {
                Ok(None)
            } else {
                Ok(Some(BoundingBox::full_frame()))
            }
        }

        fn embed_identity(&self, crop: &Crop) -> Result<Vec<f64>, ScorerError> {
            Ok(self.embedding_for(crop.image, &self.generated_identity))
        }

        fn embed_style(&self, image: &ImageRef) -> Result<Vec<f64>, ScorerError> {
            Ok(self.embedding_for(image, &self.generated_style))
        }

        fn score_text_image(&self, _text: &str, _image: &ImageRef) -> Result<f64, ScorerError> {
            Ok(self.text_score)
        }

        fn extra_score(
            &self,
            name: &str,
            _text: &str,
            _image: &ImageRef,
        ) -> Option<Result<f64, ScorerError>> {
            match name {
                "pick" => self.pick_score.map(Ok),
                _ => None,
            }
        }
    }

    fn stub() -> StubSuite {
        StubSuite {
            generated_identity: StubSuite::basis(0),
            generated_style: StubSuite::basis(0),
            text_score: 0.5,
            pick_score: Some(0.2),
        }
    }

    fn context_of(n: u8) -> VisualContext {
        VisualContext::new((0..n).map(|k| ImageRef::Bytes(vec![k])).collect())
    }

    fn identity_item(source: u32, description: &str) -> CheckItem {
        CheckItem::new(
            CheckType::Identity,
            ElementRef::new(ImageId::Context(source), description),
            ElementRef::new(ImageId::Generated, description),
        )
        .unwrap()
    }

    fn style_item(source: u32) -> CheckItem {
        CheckItem::new(
            CheckType::Style,
            ElementRef::new(ImageId::Context(source), "style"),
            ElementRef::new(ImageId::Generated, "style"),
        )
        .unwrap()
    }

    fn generated() -> ImageRef {
        ImageRef::Bytes(vec![9, 9])
    }

    #[test]
    fn object_similarity_maps_cosine_onto_unit_interval() {
        // Identical embeddings.
        let score =
            object_similarity(&stub(), &ImageRef::Bytes(vec![0]), &generated(), "subject")
                .unwrap();
        assert!((score.score - 1.0).abs() < 1e-6);

        // Orthogonal embeddings.
        let score =
            object_similarity(&stub(), &ImageRef::Bytes(vec![1]), &generated(), "subject")
                .unwrap();
        assert!((score.score - 0.5).abs() < 1e-12);

        // Opposite embeddings.
        let suite = StubSuite {
            generated_identity: vec![-1.0, 0.0, 0.0, 0.0],
            ..stub()
        };
        let score =
            object_similarity(&suite, &ImageRef::Bytes(vec![0]), &generated(), "subject")
                .unwrap();
        assert!(score.score.abs() < 1e-12);
    }

    #[test]
    fn detection_miss_scores_zero() {
        let score = object_similarity(
            &stub(),
            &ImageRef::Bytes(vec![0]),
            &generated(),
            "ABSENT cat",
        )
        .unwrap();
        assert_eq!(score.score, 0.0);
        assert_eq!(score.detail, "detection-miss");
    }

    #[test]
    fn non_unit_embedding_is_an_error() {
        struct BadEmbedder;
        impl ScorerSuite for BadEmbedder {
            fn detect(
                &self,
                _: &ImageRef,
                _: &str,
            ) -> Result<Option<BoundingBox>, ScorerError> {
                Ok(Some(BoundingBox::full_frame()))
            }
            fn embed_identity(&self, _: &Crop) -> Result<Vec<f64>, ScorerError> {
                Ok(vec![2.0, 0.0])
            }
            fn embed_style(&self, _: &ImageRef) -> Result<Vec<f64>, ScorerError> {
                Ok(vec![2.0, 0.0])
            }
            fn score_text_image(&self, _: &str, _: &ImageRef) -> Result<f64, ScorerError> {
                Ok(0.5)
            }
        }
        let err = object_similarity(
            &BadEmbedder,
            &ImageRef::Bytes(vec![0]),
            &generated(),
            "subject",
        )
        .unwrap_err();
        assert!(matches!(err, ScorerError::Embedding(_)));
    }

    #[test]
    fn visual_reward_averages_item_scores() {
        // Item on image_1 embeds identically to the generated image (1.0);
        // item on image_2 embeds orthogonally (0.5). Mean is 0.75.
        let plan = Checklist::new(
            vec![identity_item(1, "subject a"), identity_item(2, "subject b")],
            PlanOrigin::ModelGenerated,
        )
        .unwrap();
        let (r_visual, per_item) =
            visual_reward(&plan, &context_of(2), &generated(), &stub()).unwrap();
        assert!((per_item[0].score - 1.0).abs() < 1e-12);
        assert!((per_item[1].score - 0.5).abs() < 1e-12);
        assert!((r_visual - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_plan_scores_zero_visual() {
        let plan = crate::plan::fixed_template_plan("a photo of two dogs").unwrap();
        let (r_visual, per_item) =
            visual_reward(&plan, &VisualContext::empty(), &generated(), &stub()).unwrap();
        assert_eq!(r_visual, 0.0);
        assert!(per_item.is_empty());
    }

    #[test]
    fn style_items_use_style_similarity() {
        let plan = Checklist::new(vec![style_item(1)], PlanOrigin::ModelGenerated).unwrap();
        let (r_visual, per_item) =
            visual_reward(&plan, &context_of(1), &generated(), &stub()).unwrap();
        assert_eq!(per_item[0].detail, "style-similarity");
        assert!((r_visual - 1.0).abs() < 1e-6);
    }

    #[test]
    fn total_reward_is_weighted_sum() {
        // One style item embedding with cosine 0.2 gives r_visual 0.6.
        let suite = StubSuite {
            generated_style: vec![0.2, (1.0f64 - 0.04).sqrt(), 0.0, 0.0],
            text_score: 0.3,
            ..stub()
        };
        let plan = Checklist::new(vec![style_item(1)], PlanOrigin::ModelGenerated).unwrap();
        let prompt = Prompt::new("a red pepper on a table").unwrap();

        let breakdown = total_reward(
            &plan,
            &context_of(1),
            &generated(),
            &prompt,
            &suite,
            &RewardWeights::default(),
        )
        .unwrap();
        assert!((breakdown.r_visual - 0.6).abs() < 1e-12);
        assert!((breakdown.r_text - 0.3).abs() < 1e-12);
        assert!((breakdown.r_total - 0.9).abs() < 1e-12);

        // Visual-only configuration.
        let visual_only = RewardWeights {
            visual: 1.0,
            text: 0.0,
            extras: BTreeMap::new(),
        };
        let breakdown = total_reward(
            &plan,
            &context_of(1),
            &generated(),
            &prompt,
            &suite,
            &visual_only,
        )
        .unwrap();
        assert_eq!(breakdown.r_total, breakdown.r_visual);

        // Adding a pick scorer with weight 1 adds its score.
        let mut with_pick = visual_only.clone();
        with_pick.extras.insert("pick".to_string(), 1.0);
        let breakdown = total_reward(
            &plan,
            &context_of(1),
            &generated(),
            &prompt,
            &suite,
            &with_pick,
        )
        .unwrap();
        assert!((breakdown.r_total - (breakdown.r_visual + 0.2)).abs() < 1e-12);
        assert_eq!(
            breakdown.r_total,
            weighted_total(
                &breakdown.weights,
                breakdown.r_visual,
                breakdown.r_text,
                &breakdown.extra_scores
            )
        );
    }

    #[test]
    fn unknown_extra_scorer_is_an_error() {
        let mut weights = RewardWeights::default();
        weights.extras.insert("aesthetic".to_string(), 1.0);
        let plan = Checklist::new(vec![style_item(1)], PlanOrigin::ModelGenerated).unwrap();
        let err = total_reward(
            &plan,
            &context_of(1),
            &generated(),
            &Prompt::new("x").unwrap(),
            &stub(),
            &weights,
        )
        .unwrap_err();
        assert!(matches!(err, RewardError::UnknownExtraScorer { name } if name == "aesthetic"));
    }

    #[test]
    fn invalid_weights_rejected() {
        let weights = RewardWeights {
            visual: -1.0,
            ..RewardWeights::default()
        };
        assert!(weights.validate().is_err());
        let weights = RewardWeights {
            text: f64::NAN,
            ..RewardWeights::default()
        };
        assert!(weights.validate().is_err());
    }

    #[test]
    fn preference_validation_counts_strict_wins() {
        let plan = Checklist::new(vec![identity_item(1, "subject")], PlanOrigin::ModelGenerated)
            .unwrap();
        let suite = mock_suite(7);

        // Ground truth equals the reference vector, negative is orthogonal:
        // gt scores 1.0 > 0.5, every pair wins.
        let reference = ImageRef::Vector(vec![1.0, 0.0]);
        let pairs: Vec<PreferencePair> = (0..4)
            .map(|_| PreferencePair {
                plan: plan.clone(),
                context: VisualContext::new(vec![reference.clone()]),
                gt_image: reference.clone(),
                negative_image: ImageRef::Vector(vec![0.0, 1.0]),
            })
            .collect();
        let report = preference_validation(&pairs, &suite).unwrap();
        assert_eq!(report.fraction, 1.0);
        assert!(report.pairs.iter().all(|p| p.gt_preferred));

        // gt identical to its negative: strict comparison never wins.
        let pairs: Vec<PreferencePair> = (0..4)
            .map(|_| PreferencePair {
                plan: plan.clone(),
                context: VisualContext::new(vec![reference.clone()]),
                gt_image: reference.clone(),
                negative_image: reference.clone(),
            })
            .collect();
        let report = preference_validation(&pairs, &suite).unwrap();
        assert_eq!(report.fraction, 0.0);

        assert!(matches!(
            preference_validation(&[], &suite),
            Err(RewardError::EmptyInput)
        ));
    }
}
