//! Wire protocol and HTTP client for a remote scorer service.
//!
//! One POST per operation. The request carries the operation tag and a
//! payload whose `image` field is either a filesystem path or base64 data;
//! the response carries exactly one of `vector`, `box`, or `score`. The
//! endpoint comes from `VACOT_SCORER_URL` and the optional bearer token from
//! `VACOT_SCORER_TOKEN`.

use super::{BoundingBox, Crop, ScorerError, ScorerSuite};
use crate::engine::ImageRef;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerOp {
    Detect,
    EmbedIdentity,
    EmbedStyle,
    ScoreTextImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerPayload {
    /// Filesystem path or base64-encoded image data.
    pub image: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub text: Option<String>,
    /// Normalized `[x0, y0, x1, y1]` crop for identity embedding.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub crop: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerRequest {
    pub op: ScorerOp,
    pub payload: ScorerPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerResponse {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub vector: Option<Vec<f64>>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none", default)]
    pub bounding_box: Option<BoundingBox>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Encodes an image handle into the wire `image` string: the path for
/// path-backed images, base64 for blobs, and base64 over little-endian f64
/// bytes for simulated vector images.
pub fn encode_image(image: &ImageRef) -> Result<String, ScorerError> {
    match image {
        ImageRef::Path(path) => path
            .to_str()
            .map(str::to_string)
            .ok_or_else(|| ScorerError::Image("path is not valid UTF-8".to_string())),
        ImageRef::Bytes(bytes) => Ok(base64::engine::general_purpose::STANDARD.encode(bytes)),
        ImageRef::Vector(values) => {
            let mut bytes = Vec::with_capacity(values.len() * 8);
            for v in values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            Ok(base64::engine::general_purpose::STANDARD.encode(bytes))
        }
    }
}

/// Environment variable naming the scorer endpoint.
pub const SCORER_URL_ENV: &str = "VACOT_SCORER_URL";
/// Environment variable carrying the optional scorer bearer token.
pub const SCORER_TOKEN_ENV: &str = "VACOT_SCORER_TOKEN";

/// Blocking HTTP client implementing [`ScorerSuite`] over the wire protocol.
///
/// The suite exposes no extra scorers; reward-composition ablations run
/// against the mock suite.
pub struct HttpScorerSuite {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpScorerSuite {
    pub fn new(endpoint: impl Into<String>, token: Option<String>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(30))
            .build();
        HttpScorerSuite {
            endpoint: endpoint.into(),
            token,
            agent,
        }
    }

    /// Reads the endpoint from `VACOT_SCORER_URL` and the token from
    /// `VACOT_SCORER_TOKEN`.
    pub fn from_env() -> Result<Self, ScorerError> {
        let endpoint = std::env::var(SCORER_URL_ENV)
            .map_err(|_| ScorerError::Transport(format!("{SCORER_URL_ENV} is not set")))?;
        let token = std::env::var(SCORER_TOKEN_ENV).ok();
        Ok(Self::new(endpoint, token))
    }

    fn call(&self, request: &ScorerRequest) -> Result<ScorerResponse, ScorerError> {
        let mut http_request = self.agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            http_request = http_request.set("authorization", &format!("Bearer {token}"));
        }
        let response = http_request
            .send_json(request)
            .map_err(|e| ScorerError::Transport(e.to_string()))?;
        let parsed: ScorerResponse = response
            .into_json()
            .map_err(|e| ScorerError::Transport(format!("malformed response: {e}")))?;
        if !parsed.ok {
            let message = parsed.error.unwrap_or_else(|| "unspecified error".to_string());
            return Err(ScorerError::Transport(message));
        }
        Ok(parsed)
    }
}

impl ScorerSuite for HttpScorerSuite {
    fn detect(
        &self,
        image: &ImageRef,
        description: &str,
    ) -> Result<Option<BoundingBox>, ScorerError> {
        let response = self.call(&ScorerRequest {
            op: ScorerOp::Detect,
            payload: ScorerPayload {
                image: encode_image(image)?,
                text: Some(description.to_string()),
                crop: None,
            },
        })?;
        Ok(response.bounding_box)
    }

    fn embed_identity(&self, crop: &Crop) -> Result<Vec<f64>, ScorerError> {
        let response = self.call(&ScorerRequest {
            op: ScorerOp::EmbedIdentity,
            payload: ScorerPayload {
                image: encode_image(crop.image)?,
                text: None,
                crop: crop.region.map(|b| [b.x0, b.y0, b.x1, b.y1]),
            },
        })?;
        response
            .vector
            .ok_or_else(|| ScorerError::Embedding("response carried no vector".to_string()))
    }

    fn embed_style(&self, image: &ImageRef) -> Result<Vec<f64>, ScorerError> {
        let response = self.call(&ScorerRequest {
            op: ScorerOp::EmbedStyle,
            payload: ScorerPayload {
                image: encode_image(image)?,
                text: None,
                crop: None,
            },
        })?;
        response
            .vector
            .ok_or_else(|| ScorerError::Embedding("response carried no vector".to_string()))
    }

    fn score_text_image(&self, text: &str, image: &ImageRef) -> Result<f64, ScorerError> {
        let response = self.call(&ScorerRequest {
            op: ScorerOp::ScoreTextImage,
            payload: ScorerPayload {
                image: encode_image(image)?,
                text: Some(text.to_string()),
                crop: None,
            },
        })?;
        response
            .score
            .ok_or_else(|| ScorerError::TextScoring("response carried no score".to_string()))
    }
}
