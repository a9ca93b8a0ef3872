//! C ABI over the engine's core surface: checklist parsing, validation, and
//! serialization, the group-relative advantage and clipped-surrogate math,
//! simulated inference episodes, and mock reward scoring.
//!
//! Conventions: functions return a [`VacotStatus`]; outputs go through out
//! pointers. Strings returned by this library are NUL-terminated UTF-8 owned
//! by the caller and must be released with [`vacot_string_free`]; checklist
//! handles are opaque and released with [`vacot_checklist_free`]. On any
//! non-OK status, [`vacot_last_error_message`] returns a description valid
//! until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fmt::Display;
use vacot::engine::{run_episode, simulated_backend, EngineConfig, SimSpec};
use vacot::grpo;
use vacot::plan::Checklist;
use vacot::reward::{mock_suite, total_reward, RewardWeights};
use vacot::{ImageRef, Prompt, VisualContext};

/// Result codes of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VacotStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, or an out-of-range argument.
    InvalidArgument = 1,
    /// A document failed to parse under the canonical schema.
    Parse = 2,
    /// A parsed document failed semantic validation.
    Validation = 3,
    /// The operation itself failed.
    Execution = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: VacotStatus, message: impl Display) -> VacotStatus {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
    status
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn vacot_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque checklist handle.
pub struct VacotChecklist {
    inner: Checklist,
}

unsafe fn utf8_arg<'a>(pointer: *const c_char, name: &str) -> Result<&'a str, VacotStatus> {
    if pointer.is_null() {
        return Err(fail(
            VacotStatus::InvalidArgument,
            format!("{name} must not be null"),
        ));
    }
    CStr::from_ptr(pointer).to_str().map_err(|_| {
        fail(
            VacotStatus::InvalidArgument,
            format!("{name} must be valid UTF-8"),
        )
    })
}

fn string_out(value: String, out: *mut *mut c_char) -> VacotStatus {
    match CString::new(value) {
        Ok(c_string) => {
            unsafe { *out = c_string.into_raw() };
            VacotStatus::Ok
        }
        Err(e) => fail(VacotStatus::Execution, e),
    }
}

/// Parses a canonical checklist document into a new handle.
///
/// # Safety
/// `document` must be a NUL-terminated string and `out` a valid pointer.
/// A non-null result handle must be released with [`vacot_checklist_free`].
#[no_mangle]
pub unsafe extern "C" fn vacot_checklist_parse(
    document: *const c_char,
    out: *mut *mut VacotChecklist,
) -> VacotStatus {
    if out.is_null() {
        return fail(VacotStatus::InvalidArgument, "out must not be null");
    }
    let document = match utf8_arg(document, "document") {
        Ok(text) => text,
        Err(status) => return status,
    };
    match Checklist::parse(document) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(VacotChecklist { inner }));
            VacotStatus::Ok
        }
        Err(e) => fail(VacotStatus::Parse, e),
    }
}

/// Serializes a checklist back to its canonical document.
///
/// # Safety
/// `plan` must be a live handle from [`vacot_checklist_parse`]; `out` must be
/// valid. The returned string is released with [`vacot_string_free`].
#[no_mangle]
pub unsafe extern "C" fn vacot_checklist_serialize(
    plan: *const VacotChecklist,
    out: *mut *mut c_char,
) -> VacotStatus {
    if plan.is_null() || out.is_null() {
        return fail(VacotStatus::InvalidArgument, "plan and out must not be null");
    }
    string_out((*plan).inner.to_document(), out)
}

/// Number of items in the checklist; zero for a null handle.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vacot_checklist_item_count(plan: *const VacotChecklist) -> usize {
    if plan.is_null() {
        return 0;
    }
    (*plan).inner.items.len()
}

/// Validates a checklist against a visual context of `context_size` images.
/// Writes the number of violations to `violation_count`; when violations
/// exist, returns `Validation` and stores a joined description in the last
/// error message.
///
/// # Safety
/// `plan` must be a live handle and `violation_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vacot_checklist_validate(
    plan: *const VacotChecklist,
    context_size: usize,
    violation_count: *mut usize,
) -> VacotStatus {
    if plan.is_null() || violation_count.is_null() {
        return fail(
            VacotStatus::InvalidArgument,
            "plan and violation_count must not be null",
        );
    }
    let violations = (*plan).inner.validate_against_context(context_size);
    *violation_count = violations.len();
    if violations.is_empty() {
        VacotStatus::Ok
    } else {
        let joined = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        fail(VacotStatus::Validation, joined)
    }
}

/// Releases a checklist handle. Null is ignored.
///
/// # Safety
/// `plan` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vacot_checklist_free(plan: *mut VacotChecklist) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `string` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vacot_string_free(string: *mut c_char) {
    if !string.is_null() {
        drop(CString::from_raw(string));
    }
}

/// Group-relative advantages: `(r - mean) / max(std, std_floor)` with the
/// population standard deviation, written into `out` (length `len`).
///
/// # Safety
/// `rewards` and `out` must point to `len` readable/writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vacot_group_advantages(
    rewards: *const f64,
    len: usize,
    std_floor: f64,
    out: *mut f64,
) -> VacotStatus {
    if rewards.is_null() || out.is_null() {
        return fail(
            VacotStatus::InvalidArgument,
            "rewards and out must not be null",
        );
    }
    let rewards = std::slice::from_raw_parts(rewards, len);
    match grpo::group_advantages(rewards, std_floor) {
        Ok(advantages) => {
            std::ptr::copy_nonoverlapping(advantages.as_ptr(), out, len);
            VacotStatus::Ok
        }
        Err(e) => fail(VacotStatus::Execution, e),
    }
}

/// Per-step probability ratio `exp(logp_new - logp_old)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vacot_step_ratio(
    logp_new: f64,
    logp_old: f64,
    out: *mut f64,
) -> VacotStatus {
    if out.is_null() {
        return fail(VacotStatus::InvalidArgument, "out must not be null");
    }
    match grpo::step_ratio(logp_new, logp_old) {
        Ok(ratio) => {
            *out = ratio;
            VacotStatus::Ok
        }
        Err(e) => fail(VacotStatus::Execution, e),
    }
}

/// The pessimistic clipped surrogate term
/// `min(ratio * advantage, clip(ratio, 1 - epsilon, 1 + epsilon) * advantage)`.
#[no_mangle]
pub extern "C" fn vacot_clipped_term(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    grpo::clipped_term(ratio, advantage, epsilon)
}

unsafe fn vector_context(
    context: *const f64,
    context_count: usize,
    dimension: usize,
) -> Result<VisualContext, VacotStatus> {
    if dimension == 0 {
        return Err(fail(
            VacotStatus::InvalidArgument,
            "dimension must be positive",
        ));
    }
    if context_count > 0 && context.is_null() {
        return Err(fail(
            VacotStatus::InvalidArgument,
            "context must not be null when context_count > 0",
        ));
    }
    let flat = if context_count == 0 {
        &[][..]
    } else {
        std::slice::from_raw_parts(context, context_count * dimension)
    };
    Ok(VisualContext::new(
        flat.chunks_exact(dimension)
            .map(|chunk| ImageRef::Vector(chunk.to_vec()))
            .collect(),
    ))
}

/// Runs one full simulated inference episode over vector images and returns
/// the trace as a JSON document. `context` is `context_count` images of
/// `dimension` doubles each, laid out row-major.
///
/// # Safety
/// `prompt` must be NUL-terminated, `context` must hold
/// `context_count * dimension` doubles, and `trace_out` must be valid. The
/// returned string is released with [`vacot_string_free`].
#[no_mangle]
pub unsafe extern "C" fn vacot_sim_episode(
    prompt: *const c_char,
    context: *const f64,
    context_count: usize,
    dimension: usize,
    refinement_rate: f64,
    satisfaction_threshold: f64,
    noise_scale: f64,
    seed: u64,
    max_iterations: usize,
    trace_out: *mut *mut c_char,
) -> VacotStatus {
    if trace_out.is_null() {
        return fail(VacotStatus::InvalidArgument, "trace_out must not be null");
    }
    let prompt = match utf8_arg(prompt, "prompt") {
        Ok(text) => text,
        Err(status) => return status,
    };
    let prompt = match Prompt::new(prompt) {
        Ok(prompt) => prompt,
        Err(e) => return fail(VacotStatus::InvalidArgument, e),
    };
    let visual_context = match vector_context(context, context_count, dimension) {
        Ok(context) => context,
        Err(status) => return status,
    };

    let mut backend = match simulated_backend(SimSpec {
        dimension,
        refinement_rate,
        satisfaction_threshold,
        noise_scale,
        seed,
    }) {
        Ok(backend) => backend,
        Err(e) => return fail(VacotStatus::InvalidArgument, e),
    };
    let config = EngineConfig {
        max_iterations,
        record_rewards: false,
        seed,
    };
    match run_episode(&mut backend, &prompt, &visual_context, &config, None) {
        Ok(trace) => string_out(trace.to_document(), trace_out),
        Err(e) => fail(VacotStatus::Execution, e),
    }
}

/// Scores a generated vector image against a checklist, a vector context,
/// and a prompt with the deterministic mock scorer suite at unit weights.
/// Returns the reward breakdown as a JSON document.
///
/// # Safety
/// Pointer arguments follow the same rules as [`vacot_sim_episode`]; `plan`
/// must be a live handle and `generated` must hold `dimension` doubles.
#[no_mangle]
pub unsafe extern "C" fn vacot_total_reward_mock(
    plan: *const VacotChecklist,
    context: *const f64,
    context_count: usize,
    dimension: usize,
    generated: *const f64,
    prompt: *const c_char,
    seed: u64,
    breakdown_out: *mut *mut c_char,
) -> VacotStatus {
    if plan.is_null() || generated.is_null() || breakdown_out.is_null() {
        return fail(
            VacotStatus::InvalidArgument,
            "plan, generated, and breakdown_out must not be null",
        );
    }
    let prompt = match utf8_arg(prompt, "prompt") {
        Ok(text) => text,
        Err(status) => return status,
    };
    let prompt = match Prompt::new(prompt) {
        Ok(prompt) => prompt,
        Err(e) => return fail(VacotStatus::InvalidArgument, e),
    };
    let visual_context = match vector_context(context, context_count, dimension) {
        Ok(context) => context,
        Err(status) => return status,
    };
    let generated = ImageRef::Vector(std::slice::from_raw_parts(generated, dimension).to_vec());

    let violations = (*plan).inner.validate_against_context(context_count);
    if !violations.is_empty() {
        let joined = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return fail(VacotStatus::Validation, joined);
    }

    let suite = mock_suite(seed);
    match total_reward(
        &(*plan).inner,
        &visual_context,
        &generated,
        &prompt,
        &suite,
        &RewardWeights::default(),
    ) {
        Ok(breakdown) => {
            let document = serde_json::to_string_pretty(&breakdown).expect("breakdown serializes");
            string_out(document, breakdown_out)
        }
        Err(e) => fail(VacotStatus::Execution, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_codes_are_stable() {
        assert_eq!(VacotStatus::Ok as i32, 0);
        assert_eq!(VacotStatus::InvalidArgument as i32, 1);
        assert_eq!(VacotStatus::Parse as i32, 2);
        assert_eq!(VacotStatus::Validation as i32, 3);
        assert_eq!(VacotStatus::Execution as i32, 4);
    }
}
