//! Deterministic scorer suite for tests and desk-scale runs.
//!
//! Every output is a pure function of the inputs and the seed: vector images
//! embed to their own normalized direction, byte- and path-backed images hash
//! into unit vectors, and text-image scores hash into `[0, 1]`. The detector
//! finds everything except descriptions containing the sentinel `ABSENT`.

use super::{BoundingBox, Crop, ScorerError, ScorerSuite};
use crate::engine::ImageRef;
use crate::vecmath;
use sha2::{Digest, Sha256};

/// Dimension of hash-derived embeddings.
const HASH_EMBED_DIM: usize = 8;

/// Description sentinel that makes the mock detector report a miss.
pub const ABSENT_SENTINEL: &str = "ABSENT";

/// See [`mock_suite`].
#[derive(Debug, Clone)]
pub struct MockSuite {
    seed: u64,
}

/// Builds the deterministic mock suite for `seed`.
pub fn mock_suite(seed: u64) -> MockSuite {
    MockSuite { seed }
}

impl MockSuite {
    fn hasher(&self, tag: &str) -> Sha256 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(tag.as_bytes());
        hasher
    }

    fn image_bytes(image: &ImageRef) -> Result<Vec<u8>, ScorerError> {
        match image.resolve_bytes() {
            Some(Ok(bytes)) => Ok(bytes),
            Some(Err(e)) => Err(ScorerError::Image(e.to_string())),
            None => unreachable!("vector images are handled before hashing"),
        }
    }

    fn hash_embedding(
        &self,
        tag: &str,
        bytes: &[u8],
        region: Option<&BoundingBox>,
    ) -> Vec<f64> {
        let mut hasher = self.hasher(tag);
        hasher.update(bytes);
        if let Some(region) = region {
            for coord in [region.x0, region.y0, region.x1, region.y1] {
                hasher.update(coord.to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        let raw: Vec<f64> = digest
            .chunks_exact(4)
            .take(HASH_EMBED_DIM)
            .map(|chunk| {
                let v = u32::from_le_bytes(chunk.try_into().unwrap());
                (v as f64 / u32::MAX as f64) * 2.0 - 1.0
            })
            .collect();
        vecmath::normalized(&raw)
    }

    fn embed(
        &self,
        tag: &str,
        image: &ImageRef,
        region: Option<&BoundingBox>,
    ) -> Result<Vec<f64>, ScorerError> {
        if let Some(v) = image.as_vector() {
            // Simulated images carry their own features; the region has no
            // spatial meaning for them.
            return Ok(vecmath::normalized(v));
        }
        let bytes = Self::image_bytes(image)?;
        Ok(self.hash_embedding(tag, &bytes, region))
    }

    fn hash_unit_score(&self, tag: &str, text: &str, image: &ImageRef) -> Result<f64, ScorerError> {
        let mut hasher = self.hasher(tag);
        hasher.update(text.as_bytes());
        match image.as_vector() {
            Some(v) => {
                for value in v {
                    hasher.update(value.to_le_bytes());
                }
            }
            None => hasher.update(&Self::image_bytes(image)?),
        }
        let digest = hasher.finalize();
        let v = u64::from_le_bytes(digest[..8].try_into().unwrap());
        Ok(v as f64 / u64::MAX as f64)
    }
}

impl ScorerSuite for MockSuite {
    fn detect(
        &self,
        _image: &ImageRef,
        description: &str,
    ) -> Result<Option<BoundingBox>, ScorerError> {
        if description.contains(ABSENT_SENTINEL) {
            Ok(None)
        } else {
            Ok(Some(BoundingBox::full_frame()))
        }
    }

    fn embed_identity(&self, crop: &Crop) -> Result<Vec<f64>, ScorerError> {
        self.embed("identity", crop.image, crop.region.as_ref())
    }

    fn embed_style(&self, image: &ImageRef) -> Result<Vec<f64>, ScorerError> {
        self.embed("style", image, None)
    }

    fn score_text_image(&self, text: &str, image: &ImageRef) -> Result<f64, ScorerError> {
        self.hash_unit_score("text", text, image)
    }

    fn extra_score(
        &self,
        name: &str,
        text: &str,
        image: &ImageRef,
    ) -> Option<Result<f64, ScorerError>> {
        match name {
            "pick" => Some(self.hash_unit_score("extra:pick", text, image)),
            _ => None,
        }
    }
}
