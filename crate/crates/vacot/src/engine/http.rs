//! HTTP adapter for a remote generation backend.
//!
//! The engine's two calls map onto one POST each. Requests carry the prompt,
//! the context images (path or base64 strings, as in the scorer protocol),
//! and for refinement the plan document plus the current image. Responses
//! return the plan or feedback document together with the produced image.
//! The endpoint comes from `VACOT_BACKEND_URL`, the optional bearer token
//! from `VACOT_BACKEND_TOKEN`.

use super::{BackendError, GenerationBackend, ImageRef, Prompt, VisualContext};
use crate::plan::{Checklist, EvalFeedback};
use crate::reward::http::encode_image;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Duration;

pub const BACKEND_URL_ENV: &str = "VACOT_BACKEND_URL";
pub const BACKEND_TOKEN_ENV: &str = "VACOT_BACKEND_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendOp {
    PlanGenerate,
    EvaluateRefine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub op: BackendOp,
    pub prompt: String,
    pub images: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plan: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub current: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub ok: bool,
    /// The plan or feedback document, depending on the operation.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub document: Option<String>,
    /// Path or base64 of the produced image.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub image: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Decodes a wire image string: strict base64 becomes an in-memory blob,
/// anything else is treated as a filesystem path.
pub fn decode_image(wire: &str) -> ImageRef {
    match base64::engine::general_purpose::STANDARD.decode(wire) {
        Ok(bytes) => ImageRef::Bytes(bytes),
        Err(_) => ImageRef::Path(PathBuf::from(wire)),
    }
}

/// Generation backend reached over HTTP.
pub struct HttpGenerationBackend {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
}

impl HttpGenerationBackend {
    pub fn new(endpoint: impl Into<String>, token: Option<String>) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(120))
            .build();
        HttpGenerationBackend {
            endpoint: endpoint.into(),
            token,
            agent,
        }
    }

    /// Reads the endpoint from `VACOT_BACKEND_URL` and the token from
    /// `VACOT_BACKEND_TOKEN`.
    pub fn from_env() -> Result<Self, BackendError> {
        let endpoint = std::env::var(BACKEND_URL_ENV)
            .map_err(|_| BackendError::msg(format!("{BACKEND_URL_ENV} is not set")))?;
        let token = std::env::var(BACKEND_TOKEN_ENV).ok();
        Ok(Self::new(endpoint, token))
    }

    fn call(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let mut http_request = self.agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            http_request = http_request.set("authorization", &format!("Bearer {token}"));
        }
        let response = http_request
            .send_json(request)
            .map_err(|e| BackendError::msg(e.to_string()))?;
        let parsed: BackendResponse = response
            .into_json()
            .map_err(|e| BackendError::msg(format!("malformed response: {e}")))?;
        if !parsed.ok {
            return Err(BackendError::msg(
                parsed
                    .error
                    .unwrap_or_else(|| "unspecified backend error".to_string()),
            ));
        }
        Ok(parsed)
    }

    fn encode_context(context: &VisualContext) -> Result<Vec<String>, BackendError> {
        context
            .images()
            .iter()
            .map(|image| encode_image(image).map_err(|e| BackendError::msg(e.to_string())))
            .collect()
    }
}

impl GenerationBackend for HttpGenerationBackend {
    fn plan_and_generate(
        &mut self,
        prompt: &Prompt,
        context: &VisualContext,
    ) -> Result<(Checklist, ImageRef), BackendError> {
        let response = self.call(&BackendRequest {
            op: BackendOp::PlanGenerate,
            prompt: prompt.text().to_string(),
            images: Self::encode_context(context)?,
            plan: None,
            current: None,
        })?;
        let document = response
            .document
            .ok_or_else(|| BackendError::msg("response carried no plan document"))?;
        let plan = Checklist::parse(&document)
            .map_err(|e| BackendError::msg(format!("plan document invalid: {e}")))?;
        let image = response
            .image
            .ok_or_else(|| BackendError::msg("response carried no image"))?;
        Ok((plan, decode_image(&image)))
    }

    fn evaluate_and_refine(
        &mut self,
        prompt: &Prompt,
        context: &VisualContext,
        plan: &Checklist,
        current: &ImageRef,
    ) -> Result<(EvalFeedback, ImageRef), BackendError> {
        let response = self.call(&BackendRequest {
            op: BackendOp::EvaluateRefine,
            prompt: prompt.text().to_string(),
            images: Self::encode_context(context)?,
            plan: Some(serde_json::to_value(plan).expect("checklist serializes")),
            current: Some(encode_image(current).map_err(|e| BackendError::msg(e.to_string()))?),
        })?;
        let document = response
            .document
            .ok_or_else(|| BackendError::msg("response carried no feedback document"))?;
        let feedback = EvalFeedback::parse(&document)
            .map_err(|e| BackendError::msg(format!("feedback document invalid: {e}")))?;
        let image = response
            .image
            .ok_or_else(|| BackendError::msg("response carried no image"))?;
        Ok((feedback, decode_image(&image)))
    }
}
