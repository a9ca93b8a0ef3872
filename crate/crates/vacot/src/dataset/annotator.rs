//! Annotator-service interface: the external model that writes ground-truth
//! plans and evaluation feedback during dataset construction.
//!
//! The wire protocol is one POST per annotation. Responses carry the raw
//! checklist/feedback document, which the client parses under the canonical
//! schema; anything that fails to parse surfaces as a schema violation so the
//! caller can quarantine the sample instead of silently dropping it.

use crate::engine::{ImageRef, Prompt, VisualContext};
use crate::plan::{
    CheckItem, CheckType, Checklist, ElementRef, EvalFeedback, ImageId, ItemVerdict, PlanError,
    PlanOrigin,
};
use crate::reward::http::encode_image;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::time::Duration;
use thiserror::Error;

/// Environment variable naming the annotator endpoint.
pub const ANNOTATOR_URL_ENV: &str = "VACOT_ANNOTATOR_URL";
/// Environment variable carrying the optional annotator bearer token.
pub const ANNOTATOR_TOKEN_ENV: &str = "VACOT_ANNOTATOR_TOKEN";

/// System-prompt identifiers sent with each request.
pub const PLAN_SYSTEM_PROMPT_ID: &str = "plan_v1";
pub const EVAL_SYSTEM_PROMPT_ID: &str = "eval_v1";

#[derive(Debug, Error)]
pub enum AnnotatorError {
    #[error("annotator unavailable after {attempts} attempt(s): {message}")]
    Unavailable { attempts: usize, message: String },
    #[error("annotator response violates the plan schema: {0}")]
    Schema(#[from] PlanError),
    #[error("image encoding: {0}")]
    Image(String),
    #[error("replay cache has no entry for key {key}")]
    CacheMiss { key: String },
    #[error("cache io: {0}")]
    CacheIo(String),
}

/// Produces ground-truth plans and evaluations for dataset construction.
pub trait AnnotatorClient {
    fn annotate_plan(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
    ) -> Result<Checklist, AnnotatorError>;

    fn annotate_eval(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
        plan: &Checklist,
        negative: &ImageRef,
        final_gt: &ImageRef,
    ) -> Result<EvalFeedback, AnnotatorError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotateOp {
    Plan,
    Eval,
}

/// The request document. Image fields carry paths or base64 data, matching
/// the scorer protocol's encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotateRequest {
    pub op: AnnotateOp,
    pub prompt: String,
    pub images: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plan: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub negative: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gt: Option<String>,
    pub system_prompt_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotateResponse {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub document: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

fn encode(image: &ImageRef) -> Result<String, AnnotatorError> {
    encode_image(image).map_err(|e| AnnotatorError::Image(e.to_string()))
}

/// Builds the wire request for a planning annotation. Also the content that
/// record/replay caching keys on.
pub fn plan_request(
    prompt: &Prompt,
    context: &VisualContext,
) -> Result<AnnotateRequest, AnnotatorError> {
    Ok(AnnotateRequest {
        op: AnnotateOp::Plan,
        prompt: prompt.text().to_string(),
        images: context
            .images()
            .iter()
            .map(encode)
            .collect::<Result<_, _>>()?,
        plan: None,
        negative: None,
        gt: None,
        system_prompt_id: PLAN_SYSTEM_PROMPT_ID.to_string(),
    })
}

/// Builds the wire request for an evaluation annotation.
pub fn eval_request(
    prompt: &Prompt,
    context: &VisualContext,
    plan: &Checklist,
    negative: &ImageRef,
    final_gt: &ImageRef,
) -> Result<AnnotateRequest, AnnotatorError> {
    Ok(AnnotateRequest {
        op: AnnotateOp::Eval,
        prompt: prompt.text().to_string(),
        images: context
            .images()
            .iter()
            .map(encode)
            .collect::<Result<_, _>>()?,
        plan: Some(serde_json::to_value(plan).expect("checklist serializes")),
        negative: Some(encode(negative)?),
        gt: Some(encode(final_gt)?),
        system_prompt_id: EVAL_SYSTEM_PROMPT_ID.to_string(),
    })
}

/// Content hash of a request, used as the record/replay cache key.
pub fn request_key(request: &AnnotateRequest) -> String {
    let canonical = serde_json::to_string(request).expect("request serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex::encode(hasher.finalize())
}

/// Bounded-retry policy for the HTTP annotator.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub attempts: usize,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(100),
        }
    }
}

/// Blocking HTTP annotator client with exponential-backoff retries.
pub struct HttpAnnotator {
    endpoint: String,
    token: Option<String>,
    retry: RetryPolicy,
    agent: ureq::Agent,
}

impl HttpAnnotator {
    pub fn new(endpoint: impl Into<String>, token: Option<String>, retry: RetryPolicy) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(60))
            .build();
        HttpAnnotator {
            endpoint: endpoint.into(),
            token,
            retry,
            agent,
        }
    }

    /// Reads the endpoint from `VACOT_ANNOTATOR_URL` and the token from
    /// `VACOT_ANNOTATOR_TOKEN`.
    pub fn from_env() -> Result<Self, AnnotatorError> {
        let endpoint = std::env::var(ANNOTATOR_URL_ENV).map_err(|_| AnnotatorError::Unavailable {
            attempts: 0,
            message: format!("{ANNOTATOR_URL_ENV} is not set"),
        })?;
        let token = std::env::var(ANNOTATOR_TOKEN_ENV).ok();
        Ok(Self::new(endpoint, token, RetryPolicy::default()))
    }

    fn call(&self, request: &AnnotateRequest) -> Result<String, AnnotatorError> {
        let mut last_error = String::new();
        for attempt in 0..self.retry.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.retry.base_delay * (1 << (attempt - 1)));
            }
            let mut http_request = self.agent.post(&self.endpoint);
            if let Some(token) = &self.token {
                http_request = http_request.set("authorization", &format!("Bearer {token}"));
            }
            match http_request.send_json(request) {
                Ok(response) => {
                    let parsed: AnnotateResponse = response.into_json().map_err(|e| {
                        AnnotatorError::Unavailable {
                            attempts: attempt + 1,
                            message: format!("malformed response: {e}"),
                        }
                    })?;
                    if !parsed.ok {
                        return Err(AnnotatorError::Unavailable {
                            attempts: attempt + 1,
                            message: parsed
                                .error
                                .unwrap_or_else(|| "unspecified annotator error".to_string()),
                        });
                    }
                    return parsed.document.ok_or_else(|| AnnotatorError::Unavailable {
                        attempts: attempt + 1,
                        message: "response carried no document".to_string(),
                    });
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(AnnotatorError::Unavailable {
            attempts: self.retry.attempts.max(1),
            message: last_error,
        })
    }
}

impl AnnotatorClient for HttpAnnotator {
    fn annotate_plan(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
    ) -> Result<Checklist, AnnotatorError> {
        let document = self.call(&plan_request(prompt, context)?)?;
        Ok(Checklist::parse(&document)?)
    }

    fn annotate_eval(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
        plan: &Checklist,
        negative: &ImageRef,
        final_gt: &ImageRef,
    ) -> Result<EvalFeedback, AnnotatorError> {
        let document = self.call(&eval_request(prompt, context, plan, negative, final_gt)?)?;
        Ok(EvalFeedback::parse(&document)?)
    }
}

/// Deterministic annotator for offline builds and tests.
///
/// Planning reads the prompt for `image_k` mentions: `... style of image_k`
/// yields a style item, `<the> <noun> in image_k` yields an identity item on
/// that noun phrase, anything else an identity item on a generic subject.
/// Evaluation verdicts are hash-driven, except that a negative identical to
/// the ground truth is judged fully satisfied.
#[derive(Debug, Clone)]
pub struct MockAnnotator {
    pub seed: u64,
}

impl MockAnnotator {
    pub fn new(seed: u64) -> Self {
        MockAnnotator { seed }
    }

    fn describe(prompt: &str, index: u32) -> (CheckType, String) {
        let token = format!("image_{index}");
        let Some(position) = prompt.find(&token) else {
            return (CheckType::Identity, format!("the subject of image_{index}"));
        };
        let before = prompt[..position].trim_end();
        if before.ends_with("style of") {
            return (CheckType::Style, "the artistic style".to_string());
        }
        if let Some(stripped) = before.strip_suffix("in") {
            let words: Vec<&str> = stripped.split_whitespace().collect();
            if words.len() >= 2 {
                let phrase = words[words.len() - 2..].join(" ");
                return (CheckType::Identity, phrase);
            }
            if let Some(word) = words.last() {
                return (CheckType::Identity, (*word).to_string());
            }
        }
        (CheckType::Identity, format!("the subject of image_{index}"))
    }

    fn hash64(&self, parts: &[&[u8]]) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        for part in parts {
            hasher.update(part);
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

impl AnnotatorClient for MockAnnotator {
    fn annotate_plan(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
    ) -> Result<Checklist, AnnotatorError> {
        if context.is_empty() {
            return crate::plan::fixed_template_plan(prompt.text())
                .map_err(AnnotatorError::Schema);
        }
        let items = (1..=context.len() as u32)
            .map(|index| {
                let (check_type, description) = Self::describe(prompt.text(), index);
                CheckItem {
                    check_type,
                    source: ElementRef::new(ImageId::Context(index), description.clone()),
                    target: ElementRef::new(ImageId::Generated, description),
                }
            })
            .collect();
        Ok(Checklist {
            items,
            origin: PlanOrigin::GroundTruthAnnotation,
        })
    }

    fn annotate_eval(
        &self,
        prompt: &Prompt,
        _context: &VisualContext,
        plan: &Checklist,
        negative: &ImageRef,
        final_gt: &ImageRef,
    ) -> Result<EvalFeedback, AnnotatorError> {
        let negative_wire = encode(negative)?;
        let perfect = negative == final_gt;
        let plan_doc = plan.to_document();

        let mut verdicts = Vec::with_capacity(plan.items.len());
        let mut failing: Vec<String> = Vec::new();
        for (item_index, item) in plan.items.iter().enumerate() {
            let h = self.hash64(&[
                prompt.text().as_bytes(),
                plan_doc.as_bytes(),
                negative_wire.as_bytes(),
                &(item_index as u64).to_le_bytes(),
            ]);
            let satisfied = perfect || !h.is_multiple_of(3);
            let fraction = (h >> 11) as f64 / (1u64 << 53) as f64;
            let score = if satisfied {
                0.75 + 0.25 * fraction
            } else {
                0.6 * fraction
            };
            if !satisfied {
                failing.push(item.source.description.clone());
            }
            verdicts.push(ItemVerdict {
                item_index,
                satisfied,
                score: Some(score),
                critique: if satisfied {
                    String::new()
                } else {
                    format!("{} is not preserved", item.source.description)
                },
            });
        }

        // A degraded image should look degraded: force at least one failing
        // verdict when the hash happened to pass everything.
        if !perfect && failing.is_empty() && !verdicts.is_empty() {
            let last = verdicts.last_mut().unwrap();
            last.satisfied = false;
            last.critique = format!(
                "{} is not preserved",
                plan.items[last.item_index].source.description
            );
            last.score = Some(0.4);
            failing.push(plan.items[last.item_index].source.description.clone());
        }

        let edit_instruction = if failing.is_empty() {
            String::new()
        } else {
            format!("redraw to preserve {}", failing.join(" and "))
        };
        EvalFeedback::new(verdicts, edit_instruction).map_err(AnnotatorError::Schema)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector_context(n: usize) -> VisualContext {
        VisualContext::new(
            (0..n)
                .map(|i| ImageRef::Vector(vec![i as f64, 1.0]))
                .collect(),
        )
    }

    #[test]
    fn mock_plan_reads_identity_and_style_mentions() {
        let annotator = MockAnnotator::new(0);
        let prompt =
            Prompt::new("the woman in image_1 is dancing, in the artistic style of image_2")
                .unwrap();
        let plan = annotator
            .annotate_plan(&prompt, &vector_context(2))
            .unwrap();
        assert_eq!(plan.items.len(), 2);
        assert_eq!(plan.items[0].check_type, CheckType::Identity);
        assert_eq!(plan.items[0].source.description, "the woman");
        assert_eq!(plan.items[0].source.image_id, ImageId::Context(1));
        assert_eq!(plan.items[1].check_type, CheckType::Style);
        assert_eq!(plan.items[1].source.image_id, ImageId::Context(2));
        assert!(plan.validate_against_context(2).is_empty());
    }

    #[test]
    fn mock_plan_for_empty_context_is_fixed_template() {
        let annotator = MockAnnotator::new(0);
        let prompt = Prompt::new("a photo of two dogs").unwrap();
        let plan = annotator
            .annotate_plan(&prompt, &VisualContext::empty())
            .unwrap();
        assert!(plan.items.is_empty());
        assert_eq!(plan.origin, PlanOrigin::FixedTemplate);
    }

    #[test]
    fn mock_eval_marks_perfect_negatives_satisfied() {
        let annotator = MockAnnotator::new(1);
        let prompt = Prompt::new("the cat in image_1 sleeping").unwrap();
        let context = vector_context(1);
        let plan = annotator.annotate_plan(&prompt, &context).unwrap();
        let gt = ImageRef::Vector(vec![0.5, 0.5]);

        let feedback = annotator
            .annotate_eval(&prompt, &context, &plan, &gt, &gt)
            .unwrap();
        assert!(feedback.satisfied);
        assert!(feedback.edit_instruction.is_empty());

        let degraded = ImageRef::Vector(vec![0.9, -0.2]);
        let feedback = annotator
            .annotate_eval(&prompt, &context, &plan, &degraded, &gt)
            .unwrap();
        assert!(!feedback.satisfied);
        assert!(!feedback.edit_instruction.is_empty());
        assert!(feedback.check_item_bounds(&plan).is_ok());
    }

    #[test]
    fn mock_is_deterministic() {
        let prompt = Prompt::new("the dog in image_1 running").unwrap();
        let context = vector_context(1);
        let a = MockAnnotator::new(5)
            .annotate_plan(&prompt, &context)
            .unwrap();
        let b = MockAnnotator::new(5)
            .annotate_plan(&prompt, &context)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn request_keys_differ_by_content() {
        let prompt = Prompt::new("the dog in image_1").unwrap();
        let context = vector_context(1);
        let a = request_key(&plan_request(&prompt, &context).unwrap());
        let b = request_key(&plan_request(&prompt, &context).unwrap());
        assert_eq!(a, b);

        let other = Prompt::new("the cat in image_1").unwrap();
        let c = request_key(&plan_request(&other, &context).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn request_documents_use_canonical_fields() {
        let prompt = Prompt::new("p").unwrap();
        let context = VisualContext::new(vec![ImageRef::Bytes(vec![1, 2])]);
        let plan = MockAnnotator::new(0).annotate_plan(&prompt, &context).unwrap();
        let request =
            eval_request(&prompt, &context, &plan, &ImageRef::Bytes(vec![3]), &ImageRef::Bytes(vec![4]))
                .unwrap();
        let json = serde_json::to_value(&request).unwrap();
        assert_eq!(json["op"], "eval");
        assert_eq!(json["system_prompt_id"], "eval_v1");
        assert!(json["plan"].is_object());
        assert!(json["negative"].is_string());
        assert!(json["gt"].is_string());
        assert_eq!(json["images"].as_array().unwrap().len(), 1);
    }
}
