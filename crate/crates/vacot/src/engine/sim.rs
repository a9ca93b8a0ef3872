//! Deterministic vector-space stand-in for a real generation backend.
//!
//! Images are feature vectors. Planning derives one identity item per context
//! image and emits the context mean (plus seeded noise) as the initial image;
//! evaluation scores each item by cosine similarity to its source vector, and
//! refinement moves the image toward the worst-scoring violated source. The
//! whole episode dynamics are a closed-form recurrence, so traces can be
//! checked by hand.

use super::{BackendError, EngineError, GenerationBackend, ImageRef, Prompt, VisualContext};
use crate::plan::{
    CheckItem, CheckType, Checklist, ElementRef, EvalFeedback, ImageId, ItemVerdict, PlanOrigin,
};
use crate::vecmath;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Parameters of the simulated backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    /// Dimension of the vector images.
    pub dimension: usize,
    /// Step size toward the violated source, in (0, 1].
    pub refinement_rate: f64,
    /// Cosine threshold at which an item counts as satisfied, in (0, 1).
    pub satisfaction_threshold: f64,
    /// Scale of the seeded noise added to the initial image.
    pub noise_scale: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.dimension == 0 {
            return Err(EngineError::InvalidSpec("dimension must be positive".into()));
        }
        if !(self.refinement_rate > 0.0 && self.refinement_rate <= 1.0) {
            return Err(EngineError::InvalidSpec(
                "refinement_rate must lie in (0, 1]".into(),
            ));
        }
        if !(self.satisfaction_threshold > 0.0 && self.satisfaction_threshold < 1.0) {
            return Err(EngineError::InvalidSpec(
                "satisfaction_threshold must lie in (0, 1)".into(),
            ));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(EngineError::InvalidSpec(
                "noise_scale must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// See [`simulated_backend`].
pub struct SimulatedBackend {
    spec: SimSpec,
    rng: ChaCha20Rng,
}

/// Builds the deterministic simulated backend for `spec`. Identical specs
/// (including the seed) produce byte-identical episode traces.
pub fn simulated_backend(spec: SimSpec) -> Result<SimulatedBackend, EngineError> {
    spec.validate()?;
    let rng = ChaCha20Rng::seed_from_u64(spec.seed);
    Ok(SimulatedBackend { spec, rng })
}

impl SimulatedBackend {
    fn context_vectors<'a>(
        &self,
        context: &'a VisualContext,
    ) -> Result<Vec<&'a [f64]>, BackendError> {
        context
            .images()
            .iter()
            .enumerate()
            .map(|(i, image)| {
                let v = image.as_vector().ok_or_else(|| {
                    BackendError::msg(format!(
                        "context image {} is not a vector image",
                        i + 1
                    ))
                })?;
                if v.len() != self.spec.dimension {
                    return Err(BackendError::msg(format!(
                        "context image {} has dimension {}, expected {}",
                        i + 1,
                        v.len(),
                        self.spec.dimension
                    )));
                }
                Ok(v)
            })
            .collect()
    }

    fn source_vector<'a>(
        &self,
        context: &'a VisualContext,
        item: &CheckItem,
        index: usize,
    ) -> Result<&'a [f64], BackendError> {
        let image_index = match item.source.image_id {
            ImageId::Context(i) => i,
            ImageId::Generated => {
                return Err(BackendError::msg(format!(
                    "item {index} source references the generated image"
                )))
            }
        };
        let image = context.image(image_index).ok_or_else(|| {
            BackendError::msg(format!("item {index} source image_{image_index} missing"))
        })?;
        image.as_vector().ok_or_else(|| {
            BackendError::msg(format!("item {index} source is not a vector image"))
        })
    }
}

impl GenerationBackend for SimulatedBackend {
    fn plan_and_generate(
        &mut self,
        _prompt: &Prompt,
        context: &VisualContext,
    ) -> Result<(Checklist, ImageRef), BackendError> {
        let vectors = self.context_vectors(context)?;

        let plan = if vectors.is_empty() {
            Checklist {
                items: Vec::new(),
                origin: PlanOrigin::FixedTemplate,
            }
        } else {
            let items = (1..=vectors.len() as u32)
                .map(|i| {
                    let description = format!("reference subject {i}");
                    CheckItem {
                        check_type: CheckType::Identity,
                        source: ElementRef::new(ImageId::Context(i), description.clone()),
                        target: ElementRef::new(ImageId::Generated, description),
                    }
                })
                .collect();
            Checklist {
                items,
                origin: PlanOrigin::ModelGenerated,
            }
        };

        let mut initial =
            vecmath::mean(&vectors).unwrap_or_else(|| vec![0.0; self.spec.dimension]);
        if self.spec.noise_scale > 0.0 {
            for value in &mut initial {
                let noise: f64 = StandardNormal.sample(&mut self.rng);
                *value += self.spec.noise_scale * noise;
            }
        }
        Ok((plan, ImageRef::Vector(initial)))
    }

    fn evaluate_and_refine(
        &mut self,
        _prompt: &Prompt,
        context: &VisualContext,
        plan: &Checklist,
        current: &ImageRef,
    ) -> Result<(EvalFeedback, ImageRef), BackendError> {
        let y = current
            .as_vector()
            .ok_or_else(|| BackendError::msg("current image is not a vector image"))?;
        if y.len() != self.spec.dimension {
            return Err(BackendError::msg(format!(
                "current image has dimension {}, expected {}",
                y.len(),
                self.spec.dimension
            )));
        }

        let mut verdicts = Vec::with_capacity(plan.items.len());
        // (item index, source image index, cosine) of the worst violated item.
        let mut worst: Option<(usize, u32, f64)> = None;
        for (index, item) in plan.items.iter().enumerate() {
            let source = self.source_vector(context, item, index)?;
            let cos = vecmath::cosine(y, source);
            let satisfied = cos >= self.spec.satisfaction_threshold;
            verdicts.push(ItemVerdict {
                item_index: index,
                satisfied,
                score: Some(((cos + 1.0) / 2.0).clamp(0.0, 1.0)),
                critique: if satisfied {
                    String::new()
                } else {
                    format!(
                        "similarity to {} is {:.4}, below {:.4}",
                        item.source.image_id, cos, self.spec.satisfaction_threshold
                    )
                },
            });
            if !satisfied && worst.is_none_or(|(_, _, w)| cos < w) {
                let image_index = match item.source.image_id {
                    ImageId::Context(i) => i,
                    ImageId::Generated => unreachable!("checked in source_vector"),
                };
                worst = Some((index, image_index, cos));
            }
        }

        match worst {
            None => {
                let feedback = EvalFeedback::new(verdicts, "")
                    .map_err(|e| BackendError::msg(e.to_string()))?;
                Ok((feedback, current.clone()))
            }
            Some((item_index, image_index, _)) => {
                let source = self.source_vector(context, &plan.items[item_index], item_index)?;
                let eta = self.spec.refinement_rate;
                let refined: Vec<f64> = y
                    .iter()
                    .zip(source)
                    .map(|(yk, vk)| yk + eta * (vk - yk))
                    .collect();
                let feedback = EvalFeedback::new(
                    verdicts,
                    format!("increase similarity to image_{image_index}"),
                )
                .map_err(|e| BackendError::msg(e.to_string()))?;
                Ok((feedback, ImageRef::Vector(refined)))
            }
        }
    }
}
