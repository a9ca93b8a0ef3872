//! Record/replay cache for annotation calls.
//!
//! Responses are stored one file per request, keyed by the content hash of
//! the canonical request document. A primed cache makes dataset builds a pure
//! function of their inputs: repeat builds issue zero network calls, and an
//! interrupted build resumes from everything already recorded.

use super::annotator::{
    eval_request, plan_request, request_key, AnnotatorClient, AnnotatorError,
};
use crate::engine::{ImageRef, Prompt, VisualContext};
use crate::plan::{Checklist, EvalFeedback};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

/// On-disk store of annotation response documents.
#[derive(Debug)]
pub struct AnnotationCache {
    dir: PathBuf,
}

impl AnnotationCache {
    /// Opens (creating if needed) a cache directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, AnnotatorError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| AnnotatorError::CacheIo(e.to_string()))?;
        Ok(AnnotationCache { dir })
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.entry_path(key)).ok()
    }

    /// Writes atomically: a temp file in the cache directory, then a rename,
    /// so concurrent readers of other keys never see partial content.
    pub fn put(&self, key: &str, document: &str) -> Result<(), AnnotatorError> {
        let temporary = self.dir.join(format!(".{key}.tmp-{}", std::process::id()));
        std::fs::write(&temporary, document).map_err(|e| AnnotatorError::CacheIo(e.to_string()))?;
        std::fs::rename(&temporary, self.entry_path(key))
            .map_err(|e| AnnotatorError::CacheIo(e.to_string()))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entry_path(key).exists()
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// An annotator wrapped in a record/replay cache.
///
/// With an inner client, misses are forwarded and the responses recorded.
/// Without one (replay-only), a miss is an error, which is what guarantees
/// that a primed build issues zero network calls.
pub struct CachedAnnotator<A> {
    cache: AnnotationCache,
    inner: Option<A>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<A: AnnotatorClient> CachedAnnotator<A> {
    /// Record mode: misses go to `inner` and the response is stored.
    pub fn recording(cache: AnnotationCache, inner: A) -> Self {
        CachedAnnotator {
            cache,
            inner: Some(inner),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }
}

impl CachedAnnotator<NoAnnotator> {
    /// Replay mode: every request must already be cached.
    pub fn replay_only(cache: AnnotationCache) -> Self {
        CachedAnnotator {
            cache,
            inner: None,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }
}

impl<A> CachedAnnotator<A> {
    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

/// Placeholder client for replay-only caches; never called.
pub struct NoAnnotator;

impl AnnotatorClient for NoAnnotator {
    fn annotate_plan(
        &self,
        _: &Prompt,
        _: &VisualContext,
    ) -> Result<Checklist, AnnotatorError> {
        unreachable!("replay-only cache never forwards")
    }

    fn annotate_eval(
        &self,
        _: &Prompt,
        _: &VisualContext,
        _: &Checklist,
        _: &ImageRef,
        _: &ImageRef,
    ) -> Result<EvalFeedback, AnnotatorError> {
        unreachable!("replay-only cache never forwards")
    }
}

impl<A: AnnotatorClient> CachedAnnotator<A> {
    fn lookup_or<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, AnnotatorError>,
        produce: impl Fn(&A) -> Result<(T, String), AnnotatorError>,
    ) -> Result<T, AnnotatorError> {
        if let Some(document) = self.cache.get(key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return parse(&document);
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let Some(inner) = &self.inner else {
            return Err(AnnotatorError::CacheMiss {
                key: key.to_string(),
            });
        };
        let (value, document) = produce(inner)?;
        self.cache.put(key, &document)?;
        Ok(value)
    }
}

impl<A: AnnotatorClient> AnnotatorClient for CachedAnnotator<A> {
    fn annotate_plan(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
    ) -> Result<Checklist, AnnotatorError> {
        let key = request_key(&plan_request(prompt, context)?);
        self.lookup_or(
            &key,
            |document| Ok(Checklist::parse(document)?),
            |inner| {
                let plan = inner.annotate_plan(prompt, context)?;
                let document = plan.to_document();
                Ok((plan, document))
            },
        )
    }

    fn annotate_eval(
        &self,
        prompt: &Prompt,
        context: &VisualContext,
        plan: &Checklist,
        negative: &ImageRef,
        final_gt: &ImageRef,
    ) -> Result<EvalFeedback, AnnotatorError> {
        let key = request_key(&eval_request(prompt, context, plan, negative, final_gt)?);
        self.lookup_or(
            &key,
            |document| Ok(EvalFeedback::parse(document)?),
            |inner| {
                let feedback = inner.annotate_eval(prompt, context, plan, negative, final_gt)?;
                let document = feedback.to_document();
                Ok((feedback, document))
            },
        )
    }
}
