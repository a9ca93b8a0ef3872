//! Visual checklist and evaluation-feedback domain model.
//!
//! A checklist is the structured plan produced before generation: an ordered
//! list of typed consistency checks, each tying a visual element of a
//! reference image to the element that must match it in the generated image.
//! Evaluation feedback is the self-reflection output judged against a
//! checklist: one verdict per item, an overall satisfaction flag, and an
//! editing instruction for the next refinement step.
//!
//! Both carry a single canonical wire form: a UTF-8 JSON document,
//! newline-terminated. Backends that emit prose must be adapted to this
//! schema before anything downstream (validation, rewards) can use them.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Sentinel image id naming the generated output rather than a context image.
pub const GENERATED_TOKEN: &str = "GENERATED";

/// Errors raised while parsing, constructing, or validating plan documents.
#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("document is not well-formed: {0}")]
    Syntax(String),
    #[error("missing document field `{0}`")]
    MissingDocumentField(String),
    #[error("item {item}: unknown check_type `{value}`")]
    UnknownCheckType { item: usize, value: String },
    #[error("item {item}: missing field `{field}`")]
    MissingField { item: usize, field: String },
    #[error("item {item}: malformed region: {reason}")]
    MalformedRegion { item: usize, reason: String },
    #[error("item {item}: malformed image_id `{value}`")]
    MalformedImageId { item: usize, value: String },
    #[error("unknown origin `{0}`")]
    UnknownOrigin(String),
    #[error("items may be empty only for a fixed_template plan (origin is `{origin}`)")]
    EmptyItems { origin: String },
    #[error("prompt must be non-empty")]
    EmptyPrompt,
    #[error("check item source must name a context image and target must be GENERATED")]
    InvalidItemDirection,
    #[error("verdict {verdict}: {reason}")]
    MalformedVerdict { verdict: usize, reason: String },
    #[error("feedback `satisfied` must equal the conjunction of its verdicts")]
    InconsistentSatisfied,
    #[error("edit_instruction must be empty exactly when satisfied")]
    InconsistentEditInstruction,
}

/// The three consistency dimensions a check can target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckType {
    /// Preservation of a character or object identity (e.g. facial features).
    Identity,
    /// Maintenance of aesthetic style (palette, texture, artistic style).
    Style,
    /// Consistency of a specific property (color, shape, size, spatial relation).
    Attribute,
}

impl CheckType {
    fn parse_tag(item: usize, tag: &str) -> Result<Self, PlanError> {
        match tag {
            "identity" => Ok(CheckType::Identity),
            "style" => Ok(CheckType::Style),
            "attribute" => Ok(CheckType::Attribute),
            other => Err(PlanError::UnknownCheckType {
                item,
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for CheckType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckType::Identity => write!(f, "identity"),
            CheckType::Style => write!(f, "style"),
            CheckType::Attribute => write!(f, "attribute"),
        }
    }
}

/// Identifies either a 1-based context image (`image_1` ... `image_n`) or the
/// generated output (`GENERATED`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImageId {
    Context(u32),
    Generated,
}

impl ImageId {
    pub fn is_generated(&self) -> bool {
        matches!(self, ImageId::Generated)
    }

    fn parse_tag(item: usize, tag: &str) -> Result<Self, PlanError> {
        if tag == GENERATED_TOKEN {
            return Ok(ImageId::Generated);
        }
        let malformed = || PlanError::MalformedImageId {
            item,
            value: tag.to_string(),
        };
        let index = tag.strip_prefix("image_").ok_or_else(malformed)?;
        let index: u32 = index.parse().map_err(|_| malformed())?;
        if index == 0 {
            return Err(malformed());
        }
        Ok(ImageId::Context(index))
    }
}

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageId::Context(i) => write!(f, "image_{i}"),
            ImageId::Generated => write!(f, "{GENERATED_TOKEN}"),
        }
    }
}

impl Serialize for ImageId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ImageId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let tag = String::deserialize(deserializer)?;
        ImageId::parse_tag(0, &tag).map_err(|_| {
            serde::de::Error::custom(format!("malformed image_id `{tag}`"))
        })
    }
}

/// Axis-aligned box in normalized `[0, 1]` image coordinates.
///
/// Serialized as the 4-array `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, String> {
        let region = Region { x0, y0, x1, y1 };
        region.check()?;
        Ok(region)
    }

    fn check(&self) -> Result<(), String> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if ![self.x0, self.y0, self.x1, self.y1].iter().all(|&v| in_unit(v)) {
            return Err("coordinates must lie in [0, 1]".to_string());
        }
        if self.x0 >= self.x1 || self.y0 >= self.y1 {
            return Err("requires x0 < x1 and y0 < y1".to_string());
        }
        Ok(())
    }
}

impl From<Region> for [f64; 4] {
    fn from(r: Region) -> Self {
        [r.x0, r.y0, r.x1, r.y1]
    }
}

impl TryFrom<[f64; 4]> for Region {
    type Error = String;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        Region::new(v[0], v[1], v[2], v[3])
    }
}

/// A named visual element on a specific image, optionally localized to a region.
///
/// For attribute checks the property under test rides in the description
/// (e.g. "the pepper, color red") since the schema carries no dedicated field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementRef {
    pub image_id: ImageId,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub region: Option<Region>,
}

impl ElementRef {
    pub fn new(image_id: ImageId, description: impl Into<String>) -> Self {
        ElementRef {
            image_id,
            description: description.into(),
            region: None,
        }
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }
}

/// One consistency check: an element of a context image that must be
/// preserved in the generated output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub check_type: CheckType,
    pub source: ElementRef,
    pub target: ElementRef,
}

impl CheckItem {
    /// Builds a check item, enforcing that consistency flows from the context
    /// into the output: the source must name a context image and the target
    /// must be the generated image.
    pub fn new(
        check_type: CheckType,
        source: ElementRef,
        target: ElementRef,
    ) -> Result<Self, PlanError> {
        if source.image_id.is_generated() || !target.image_id.is_generated() {
            return Err(PlanError::InvalidItemDirection);
        }
        Ok(CheckItem {
            check_type,
            source,
            target,
        })
    }
}

/// How a checklist came to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanOrigin {
    /// Produced by the generation model during planning.
    ModelGenerated,
    /// The fixed text-only template (no visual context, zero items).
    FixedTemplate,
    /// Annotated ground truth from dataset construction.
    GroundTruthAnnotation,
}

impl PlanOrigin {
    fn parse_tag(tag: &str) -> Result<Self, PlanError> {
        match tag {
            "model_generated" => Ok(PlanOrigin::ModelGenerated),
            "fixed_template" => Ok(PlanOrigin::FixedTemplate),
            "ground_truth_annotation" => Ok(PlanOrigin::GroundTruthAnnotation),
            other => Err(PlanError::UnknownOrigin(other.to_string())),
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            PlanOrigin::ModelGenerated => "model_generated",
            PlanOrigin::FixedTemplate => "fixed_template",
            PlanOrigin::GroundTruthAnnotation => "ground_truth_annotation",
        }
    }
}

/// The structured visual plan: an ordered list of consistency checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checklist {
    pub items: Vec<CheckItem>,
    pub origin: PlanOrigin,
}

/// A semantic problem found when checking a plan against a visual context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Source references `image_{image_index}` but only `context_size` images exist.
    OutOfRangeSource {
        item: usize,
        image_index: u32,
        context_size: usize,
    },
    /// Source references the generated image.
    GeneratedSource { item: usize },
    /// Target is a context image instead of the generated one.
    NonGeneratedTarget { item: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRangeSource {
                item,
                image_index,
                context_size,
            } => write!(
                f,
                "item {item}: source image_{image_index} is out of range for {context_size} context image(s)"
            ),
            Violation::GeneratedSource { item } => {
                write!(f, "item {item}: source must not be the generated image")
            }
            Violation::NonGeneratedTarget { item } => {
                write!(f, "item {item}: target must be the generated image")
            }
        }
    }
}

impl Checklist {
    /// Builds a checklist from items produced by [`CheckItem::new`].
    ///
    /// An empty item list is only legal for the fixed-template origin.
    pub fn new(items: Vec<CheckItem>, origin: PlanOrigin) -> Result<Self, PlanError> {
        if items.is_empty() && origin != PlanOrigin::FixedTemplate {
            return Err(PlanError::EmptyItems {
                origin: origin.tag().to_string(),
            });
        }
        Ok(Checklist { items, origin })
    }

    /// Parses the canonical checklist document.
    pub fn parse(raw: &str) -> Result<Self, PlanError> {
        parse_checklist(raw)
    }

    /// Serializes to the canonical document form (newline-terminated JSON).
    ///
    /// `parse` of the result reproduces the checklist field for field.
    pub fn to_document(&self) -> String {
        let mut doc = serde_json::to_string_pretty(self).expect("checklist serializes");
        doc.push('\n');
        doc
    }

    /// Checks every item against a visual context of `context_size` reference
    /// images. Returns the empty list exactly when every source indexes a
    /// context image and every target is the generated image.
    pub fn validate_against_context(&self, context_size: usize) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (index, item) in self.items.iter().enumerate() {
            match item.source.image_id {
                ImageId::Generated => violations.push(Violation::GeneratedSource { item: index }),
                ImageId::Context(i) => {
                    if i as usize > context_size {
                        violations.push(Violation::OutOfRangeSource {
                            item: index,
                            image_index: i,
                            context_size,
                        });
                    }
                }
            }
            if !item.target.image_id.is_generated() {
                violations.push(Violation::NonGeneratedTarget { item: index });
            }
        }
        violations
    }
}

/// The checklist used when no visual context exists: zero items, leaving only
/// prompt-image consistency (the text reward path) to be evaluated downstream.
pub fn fixed_template_plan(prompt: &str) -> Result<Checklist, PlanError> {
    if prompt.trim().is_empty() {
        return Err(PlanError::EmptyPrompt);
    }
    Ok(Checklist {
        items: Vec::new(),
        origin: PlanOrigin::FixedTemplate,
    })
}

/// Parses the canonical checklist document, naming the offending item index
/// in every per-item error.
pub fn parse_checklist(raw: &str) -> Result<Checklist, PlanError> {
    let root: serde_json::Value =
        serde_json::from_str(raw).map_err(|e| PlanError::Syntax(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| PlanError::Syntax("top level must be an object".to_string()))?;

    let origin_tag = obj
        .get("origin")
        .and_then(|v| v.as_str())
        .ok_or_else(|| PlanError::MissingDocumentField("origin".to_string()))?;
    let origin = PlanOrigin::parse_tag(origin_tag)?;

    let raw_items = obj
        .get("items")
        .and_then(|v| v.as_array())
        .ok_or_else(|| PlanError::MissingDocumentField("items".to_string()))?;

    let mut items = Vec::with_capacity(raw_items.len());
    for (index, raw_item) in raw_items.iter().enumerate() {
        let item_obj = raw_item.as_object().ok_or_else(|| PlanError::MissingField {
            item: index,
            field: "check_type".to_string(),
        })?;
        let tag = item_obj
            .get("check_type")
            .and_then(|v| v.as_str())
            .ok_or_else(|| PlanError::MissingField {
                item: index,
                field: "check_type".to_string(),
            })?;
        let check_type = CheckType::parse_tag(index, tag)?;
        let source = parse_element(index, item_obj.get("source"), "source")?;
        let target = parse_element(index, item_obj.get("target"), "target")?;
        items.push(CheckItem {
            check_type,
            source,
            target,
        });
    }

    if items.is_empty() && origin != PlanOrigin::FixedTemplate {
        return Err(PlanError::EmptyItems {
            origin: origin.tag().to_string(),
        });
    }
    Ok(Checklist { items, origin })
}

fn parse_element(
    item: usize,
    value: Option<&serde_json::Value>,
    field: &str,
) -> Result<ElementRef, PlanError> {
    let missing = |sub: &str| PlanError::MissingField {
        item,
        field: if sub.is_empty() {
            field.to_string()
        } else {
            format!("{field}.{sub}")
        },
    };
    let obj = value
        .and_then(|v| v.as_object())
        .ok_or_else(|| missing(""))?;

    let image_tag = obj
        .get("image_id")
        .and_then(|v| v.as_str())
        .ok_or_else(|| missing("image_id"))?;
    let image_id = ImageId::parse_tag(item, image_tag)?;

    let description = obj
        .get("description")
        .and_then(|v| v.as_str())
        .ok_or_else(|| missing("description"))?
        .to_string();

    let region = match obj.get("region") {
        None | Some(serde_json::Value::Null) => None,
        Some(raw) => {
            let coords = raw
                .as_array()
                .filter(|a| a.len() == 4)
                .and_then(|a| {
                    a.iter()
                        .map(|v| v.as_f64())
                        .collect::<Option<Vec<f64>>>()
                })
                .ok_or_else(|| PlanError::MalformedRegion {
                    item,
                    reason: "expected [x0, y0, x1, y1]".to_string(),
                })?;
            let region = Region::new(coords[0], coords[1], coords[2], coords[3])
                .map_err(|reason| PlanError::MalformedRegion { item, reason })?;
            Some(region)
        }
    };

    Ok(ElementRef {
        image_id,
        description,
        region,
    })
}

/// The judgment of one checklist item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemVerdict {
    pub item_index: usize,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
    pub critique: String,
}

/// The self-reflection output for one evaluation pass: per-item verdicts, the
/// overall flag, and the instruction fed into the next refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalFeedback {
    pub verdicts: Vec<ItemVerdict>,
    pub satisfied: bool,
    pub edit_instruction: String,
}

impl EvalFeedback {
    /// Builds feedback whose `satisfied` flag is the conjunction of the
    /// verdicts. The edit instruction must be empty exactly when satisfied.
    pub fn new(verdicts: Vec<ItemVerdict>, edit_instruction: impl Into<String>) -> Result<Self, PlanError> {
        let edit_instruction = edit_instruction.into();
        let satisfied = verdicts.iter().all(|v| v.satisfied);
        if satisfied != edit_instruction.is_empty() {
            return Err(PlanError::InconsistentEditInstruction);
        }
        Ok(EvalFeedback {
            verdicts,
            satisfied,
            edit_instruction,
        })
    }

    /// The all-satisfied feedback for a plan: one passing verdict per item
    /// and no editing instruction.
    pub fn satisfied_for(plan: &Checklist) -> Self {
        let verdicts = plan
            .items
            .iter()
            .enumerate()
            .map(|(item_index, _)| ItemVerdict {
                item_index,
                satisfied: true,
                score: Some(1.0),
                critique: String::new(),
            })
            .collect();
        EvalFeedback {
            verdicts,
            satisfied: true,
            edit_instruction: String::new(),
        }
    }

    /// Parses the canonical feedback document, enforcing the satisfied/verdict
    /// conjunction and the edit-instruction convention.
    pub fn parse(raw: &str) -> Result<Self, PlanError> {
        let root: serde_json::Value =
            serde_json::from_str(raw).map_err(|e| PlanError::Syntax(e.to_string()))?;
        let obj = root
            .as_object()
            .ok_or_else(|| PlanError::Syntax("top level must be an object".to_string()))?;

        let raw_verdicts = obj
            .get("verdicts")
            .and_then(|v| v.as_array())
            .ok_or_else(|| PlanError::MissingDocumentField("verdicts".to_string()))?;
        let mut verdicts = Vec::with_capacity(raw_verdicts.len());
        for (index, raw) in raw_verdicts.iter().enumerate() {
            let malformed = |reason: &str| PlanError::MalformedVerdict {
                verdict: index,
                reason: reason.to_string(),
            };
            let v = raw.as_object().ok_or_else(|| malformed("expected object"))?;
            let item_index = v
                .get("item_index")
                .and_then(|x| x.as_u64())
                .ok_or_else(|| malformed("missing item_index"))? as usize;
            let satisfied = v
                .get("satisfied")
                .and_then(|x| x.as_bool())
                .ok_or_else(|| malformed("missing satisfied"))?;
            let score = match v.get("score") {
                None | Some(serde_json::Value::Null) => None,
                Some(raw_score) => {
                    let s = raw_score.as_f64().ok_or_else(|| malformed("score must be a number"))?;
                    if !(0.0..=1.0).contains(&s) {
                        return Err(malformed("score out of [0, 1]"));
                    }
                    Some(s)
                }
            };
            let critique = v
                .get("critique")
                .and_then(|x| x.as_str())
                .ok_or_else(|| malformed("missing critique"))?
                .to_string();
            verdicts.push(ItemVerdict {
                item_index,
                satisfied,
                score,
                critique,
            });
        }

        let satisfied = obj
            .get("satisfied")
            .and_then(|v| v.as_bool())
            .ok_or_else(|| PlanError::MissingDocumentField("satisfied".to_string()))?;
        let edit_instruction = obj
            .get("edit_instruction")
            .and_then(|v| v.as_str())
            .ok_or_else(|| PlanError::MissingDocumentField("edit_instruction".to_string()))?
            .to_string();

        if satisfied != verdicts.iter().all(|v| v.satisfied) {
            return Err(PlanError::InconsistentSatisfied);
        }
        if satisfied != edit_instruction.is_empty() {
            return Err(PlanError::InconsistentEditInstruction);
        }
        Ok(EvalFeedback {
            verdicts,
            satisfied,
            edit_instruction,
        })
    }

    /// Serializes to the canonical document form (newline-terminated JSON).
    pub fn to_document(&self) -> String {
        let mut doc = serde_json::to_string_pretty(self).expect("feedback serializes");
        doc.push('\n');
        doc
    }

    /// Checks that every verdict indexes an item of `plan`.
    pub fn check_item_bounds(&self, plan: &Checklist) -> Result<(), PlanError> {
        for (index, verdict) in self.verdicts.iter().enumerate() {
            if verdict.item_index >= plan.items.len() {
                return Err(PlanError::MalformedVerdict {
                    verdict: index,
                    reason: format!(
                        "item_index {} out of range for a {}-item checklist",
                        verdict.item_index,
                        plan.items.len()
                    ),
                });
            }
        }
        Ok(())
    }
}
