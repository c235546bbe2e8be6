//! C ABI over the [`gtbr`] library.
//!
//! Conventions, chosen so the surface binds cleanly from any language with a
//! C FFI:
//!
//! - **Opaque handles.** [`GtbrSolution`] and [`GtbrOutcome`] are only ever
//!   passed by pointer; they are created by `gtbr_*_new`/`gtbr_search_*` and
//!   released by the matching `gtbr_*_free`.
//! - **Status codes.** Every fallible call returns a [`GtbrStatus`]; outputs
//!   travel through out-pointers and are written only on `Ok`.
//! - **Two-call buffer sizing.** Calls that fill a caller-owned byte buffer
//!   report the required size and return [`GtbrStatus::BufferTooSmall`] when
//!   the buffer cannot hold it; call once with an empty buffer to size.
//! - **Thread-local error text.** After a non-`Ok` status,
//!   [`gtbr_last_error`] retrieves a human-readable message for the failure
//!   on the current thread.
//!
//! The generated C header lives at `include/gtbr.h` and is refreshed by the
//! build script.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use gtbr::{
    decode_chained, encode_chained, frames_from_bytes, frames_to_bytes, search, solve, Bits,
    CodecError, EntropyError, EntropySolution, RegulatorError, RegulatorSpec, SearchError,
    SearchOutcome, SearchProblem, StbrSpec,
};

/// Status code returned by every fallible `gtbr_*` call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GtbrStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// The regulator parameters are structurally invalid or outside the
    /// comparison band.
    InvalidSpec = 2,
    /// A non-spec argument is out of range (bad index, short buffer
    /// description, mismatched array length, ...).
    InvalidArgument = 3,
    /// A resource limit tripped before the result was complete.
    ResourceLimit = 4,
    /// Encoding or decoding failed (zero-capacity regulator, malformed or
    /// tampered frames, oversized content, ...).
    CodecFailure = 5,
    /// The output buffer is too small; the call reported the required size.
    BufferTooSmall = 6,
    /// An internal invariant failed; the library state is unchanged.
    Internal = 7,
}

/// Opaque handle to a solved regulator: the spec plus its exact
/// information-weight tables.
pub struct GtbrSolution {
    inner: EntropySolution,
}

/// Opaque handle to a completed envelope search.
pub struct GtbrOutcome {
    inner: SearchOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.into());
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().clear());
}

/// Runs an FFI body, converting panics into [`GtbrStatus::Internal`] so they
/// never unwind across the C boundary.
fn guarded<F: FnOnce() -> GtbrStatus>(body: F) -> GtbrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("internal panic: {message}"));
            GtbrStatus::Internal
        }
    }
}

fn regulator_status(err: &RegulatorError) -> GtbrStatus {
    set_error(err.to_string());
    GtbrStatus::InvalidSpec
}

fn entropy_status(err: &EntropyError) -> GtbrStatus {
    let status = match err {
        EntropyError::Regulator(_) => GtbrStatus::InvalidSpec,
        EntropyError::ResourceLimit(_) | EntropyError::EnumerationTooLarge { .. } => {
            GtbrStatus::ResourceLimit
        }
        EntropyError::StateOutOfRange { .. } => GtbrStatus::InvalidArgument,
    };
    set_error(err.to_string());
    status
}

fn search_status(err: &SearchError) -> GtbrStatus {
    match err {
        SearchError::Regulator(inner) => regulator_status(inner),
        SearchError::Entropy(inner) => entropy_status(inner),
        SearchError::RatioViolation(_) => {
            set_error(err.to_string());
            GtbrStatus::InvalidSpec
        }
        SearchError::ResourceLimit { .. } => {
            set_error(err.to_string());
            GtbrStatus::ResourceLimit
        }
    }
}

fn codec_status(err: &CodecError) -> GtbrStatus {
    set_error(err.to_string());
    GtbrStatus::CodecFailure
}

/// Interprets `(ptr, len)` as a slice; a null pointer is acceptable only for
/// an empty slice.
unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if ptr.is_null() {
        if len == 0 {
            Some(&[])
        } else {
            None
        }
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

/// Copies `bytes` into the caller's `(out, capacity)` buffer, reporting the
/// required size through `out_len`.
unsafe fn fill_buffer(
    bytes: &[u8],
    out: *mut u8,
    capacity: usize,
    out_len: *mut usize,
) -> GtbrStatus {
    if out_len.is_null() {
        set_error("out_len must not be null");
        return GtbrStatus::NullArgument;
    }
    *out_len = bytes.len();
    if bytes.len() > capacity {
        set_error(format!(
            "buffer holds {capacity} bytes, {} are required",
            bytes.len()
        ));
        return GtbrStatus::BufferTooSmall;
    }
    if out.is_null() {
        if bytes.is_empty() {
            return GtbrStatus::Ok;
        }
        set_error("output buffer must not be null");
        return GtbrStatus::NullArgument;
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), out, bytes.len());
    GtbrStatus::Ok
}

/// Copies the error message of the most recent failed `gtbr_*` call on this
/// thread into `buffer` (NUL-terminated, truncating if needed).
///
/// Returns the full message length including the NUL terminator, so a
/// return value larger than `capacity` means the copy was truncated. The
/// message is empty after a successful call.
///
/// # Safety
///
/// `buffer` must be valid for writes of `capacity` bytes, or null (the call
/// then only reports the required size).
#[no_mangle]
pub unsafe extern "C" fn gtbr_last_error(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let copied = bytes.len().min(capacity - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, copied);
            *buffer.add(copied) = 0;
        }
        bytes.len() + 1
    })
}

/// Solves a generalized regulator given per-slot token increments
/// (`increment_count` slots) and per-boundary bucket depths
/// (`increment_count - 1` entries) and stores a handle in `out`.
///
/// # Safety
///
/// `increments` must point to `increment_count` readable `uint64_t`s,
/// `depths` to `depth_count` readable `uint64_t`s (either may be null when
/// its count is zero), and `out` must be valid for a pointer write. On `Ok`
/// the caller owns the handle and must release it with
/// [`gtbr_solution_free`].
#[no_mangle]
pub unsafe extern "C" fn gtbr_solution_new(
    increments: *const u64,
    increment_count: usize,
    depths: *const u64,
    depth_count: usize,
    out: *mut *mut GtbrSolution,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if out.is_null() {
            set_error("out must not be null");
            return GtbrStatus::NullArgument;
        }
        let (Some(increments), Some(depths)) = (
            slice_arg(increments, increment_count),
            slice_arg(depths, depth_count),
        ) else {
            set_error("array argument is null but has a nonzero count");
            return GtbrStatus::NullArgument;
        };
        let spec = match RegulatorSpec::new(increments.to_vec(), depths.to_vec()) {
            Ok(spec) => spec,
            Err(err) => return regulator_status(&err),
        };
        match solve(&spec) {
            Ok(solution) => {
                *out = Box::into_raw(Box::new(GtbrSolution { inner: solution }));
                GtbrStatus::Ok
            }
            Err(err) => entropy_status(&err),
        }
    })
}

/// Solves the standard regulator with `horizon` slots, constant rate `rate`,
/// and constant depth `depth`.
///
/// # Safety
///
/// `out` must be valid for a pointer write; on `Ok` the caller owns the
/// handle and must release it with [`gtbr_solution_free`].
#[no_mangle]
pub unsafe extern "C" fn gtbr_solution_new_uniform(
    horizon: usize,
    rate: u64,
    depth: u64,
    out: *mut *mut GtbrSolution,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if out.is_null() {
            set_error("out must not be null");
            return GtbrStatus::NullArgument;
        }
        let spec = match StbrSpec::new(horizon, rate, depth).and_then(|e| e.to_gtbr()) {
            Ok(spec) => spec,
            Err(err) => return regulator_status(&err),
        };
        match solve(&spec) {
            Ok(solution) => {
                *out = Box::into_raw(Box::new(GtbrSolution { inner: solution }));
                GtbrStatus::Ok
            }
            Err(err) => entropy_status(&err),
        }
    })
}

/// Releases a solution handle. Null is ignored.
///
/// # Safety
///
/// `solution` must be null or a handle obtained from a `gtbr_solution_new*`
/// call that has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn gtbr_solution_free(solution: *mut GtbrSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of slots of the solved regulator, or 0 if `solution` is null.
///
/// # Safety
///
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gtbr_solution_horizon(solution: *const GtbrSolution) -> usize {
    if solution.is_null() {
        0
    } else {
        (*solution).inner.spec().horizon()
    }
}

/// Writes the information utility (max flow entropy, in bits) to `out`.
///
/// # Safety
///
/// `solution` must be a live handle and `out` valid for a `double` write.
#[no_mangle]
pub unsafe extern "C" fn gtbr_solution_utility_bits(
    solution: *const GtbrSolution,
    out: *mut f64,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if solution.is_null() || out.is_null() {
            set_error("solution and out must not be null");
            return GtbrStatus::NullArgument;
        }
        *out = (*solution).inner.information_utility();
        GtbrStatus::Ok
    })
}

/// Draws one packet-length schedule from the entropy-optimal policy and
/// writes it to `lengths`. The same seed always yields the same schedule.
///
/// # Safety
///
/// `solution` must be a live handle and `lengths` valid for
/// `length_count` `uint64_t` writes, where `length_count` equals the
/// regulator's horizon.
#[no_mangle]
pub unsafe extern "C" fn gtbr_solution_sample(
    solution: *const GtbrSolution,
    seed: u64,
    lengths: *mut u64,
    length_count: usize,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if solution.is_null() || lengths.is_null() {
            set_error("solution and lengths must not be null");
            return GtbrStatus::NullArgument;
        }
        let inner = &(*solution).inner;
        let horizon = inner.spec().horizon();
        if length_count != horizon {
            set_error(format!(
                "lengths holds {length_count} entries, the horizon is {horizon}"
            ));
            return GtbrStatus::InvalidArgument;
        }
        let schedule = inner.sampler(seed).sample();
        ptr::copy_nonoverlapping(schedule.lengths.as_ptr(), lengths, horizon);
        GtbrStatus::Ok
    })
}

/// Searches the `(horizon, rate, depth)` envelope for the entropy-optimal
/// generalized regulator (equality depth mode, default depth window) and
/// stores a handle to the outcome in `out`.
///
/// `relaxed` waives the `2r <= B <= 5r` comparison-band requirement.
///
/// # Safety
///
/// `out` must be valid for a pointer write; on `Ok` the caller owns the
/// handle and must release it with [`gtbr_outcome_free`].
#[no_mangle]
pub unsafe extern "C" fn gtbr_search_envelope(
    horizon: usize,
    rate: u64,
    depth: u64,
    relaxed: bool,
    out: *mut *mut GtbrOutcome,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if out.is_null() {
            set_error("out must not be null");
            return GtbrStatus::NullArgument;
        }
        let envelope = match StbrSpec::new(horizon, rate, depth) {
            Ok(envelope) => envelope,
            Err(err) => return regulator_status(&err),
        };
        let problem = if relaxed {
            SearchProblem::new_relaxed(envelope)
        } else {
            SearchProblem::new(envelope)
        };
        let problem = match problem {
            Ok(problem) => problem,
            Err(err) => return search_status(&err),
        };
        match search(&problem) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(GtbrOutcome { inner: outcome }));
                GtbrStatus::Ok
            }
            Err(err) => search_status(&err),
        }
    })
}

/// Releases an outcome handle. Null is ignored.
///
/// # Safety
///
/// `outcome` must be null or a handle obtained from [`gtbr_search_envelope`]
/// that has not already been freed.
#[no_mangle]
pub unsafe extern "C" fn gtbr_outcome_free(outcome: *mut GtbrOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// Writes the optimal utility `H_g*` (bits) to `out`.
///
/// # Safety
///
/// `outcome` must be a live handle and `out` valid for a `double` write.
#[no_mangle]
pub unsafe extern "C" fn gtbr_outcome_best_bits(
    outcome: *const GtbrOutcome,
    out: *mut f64,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if outcome.is_null() || out.is_null() {
            set_error("outcome and out must not be null");
            return GtbrStatus::NullArgument;
        }
        *out = (*outcome).inner.best_bits;
        GtbrStatus::Ok
    })
}

/// Writes the standard-regulator baseline utility `H_s` (bits) to `out`.
///
/// # Safety
///
/// `outcome` must be a live handle and `out` valid for a `double` write.
#[no_mangle]
pub unsafe extern "C" fn gtbr_outcome_baseline_bits(
    outcome: *const GtbrOutcome,
    out: *mut f64,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if outcome.is_null() || out.is_null() {
            set_error("outcome and out must not be null");
            return GtbrStatus::NullArgument;
        }
        *out = (*outcome).inner.baseline_bits;
        GtbrStatus::Ok
    })
}

/// Writes the relative improvement of `H_g*` over `H_s`, in percent, to
/// `out`.
///
/// # Safety
///
/// `outcome` must be a live handle and `out` valid for a `double` write.
#[no_mangle]
pub unsafe extern "C" fn gtbr_outcome_improvement_percent(
    outcome: *const GtbrOutcome,
    out: *mut f64,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if outcome.is_null() || out.is_null() {
            set_error("outcome and out must not be null");
            return GtbrStatus::NullArgument;
        }
        *out = (*outcome).inner.improvement_percent;
        GtbrStatus::Ok
    })
}

/// Number of tied optimal parameter sequences, or 0 if `outcome` is null.
///
/// # Safety
///
/// `outcome` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gtbr_outcome_optimum_count(outcome: *const GtbrOutcome) -> usize {
    if outcome.is_null() {
        0
    } else {
        (*outcome).inner.optima.len()
    }
}

/// Copies the `index`-th optimal parameter sequence into the caller's
/// arrays: `increments` receives the horizon per-slot token increments and
/// `depths` the `horizon - 1` bucket depths.
///
/// # Safety
///
/// `outcome` must be a live handle, `increments` valid for
/// `increment_count` `uint64_t` writes, and `depths` valid for `depth_count`
/// `uint64_t` writes (null allowed when `depth_count` is zero and the
/// horizon is 1).
#[no_mangle]
pub unsafe extern "C" fn gtbr_outcome_optimum(
    outcome: *const GtbrOutcome,
    index: usize,
    increments: *mut u64,
    increment_count: usize,
    depths: *mut u64,
    depth_count: usize,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if outcome.is_null() || increments.is_null() {
            set_error("outcome and increments must not be null");
            return GtbrStatus::NullArgument;
        }
        let inner = &(*outcome).inner;
        let Some(candidate) = inner.optima.get(index) else {
            set_error(format!(
                "optimum index {index} out of range ({} found)",
                inner.optima.len()
            ));
            return GtbrStatus::InvalidArgument;
        };
        if increment_count != candidate.increments.len()
            || depth_count != candidate.depths.len()
        {
            set_error(format!(
                "arrays hold {increment_count}/{depth_count} entries, the sequence \
                 has {}/{}",
                candidate.increments.len(),
                candidate.depths.len()
            ));
            return GtbrStatus::InvalidArgument;
        }
        ptr::copy_nonoverlapping(
            candidate.increments.as_ptr(),
            increments,
            candidate.increments.len(),
        );
        if !candidate.depths.is_empty() {
            if depths.is_null() {
                set_error("depths must not be null for horizons above 1");
                return GtbrStatus::NullArgument;
            }
            ptr::copy_nonoverlapping(candidate.depths.as_ptr(), depths, candidate.depths.len());
        }
        GtbrStatus::Ok
    })
}

/// Encodes the first `payload_bits` bits of `payload` (big-endian within
/// each byte) as a chained frame stream over the solved regulator, writing
/// the serialized stream to `out`.
///
/// On [`GtbrStatus::BufferTooSmall`], `out_len` still reports the required
/// byte count, so an empty first call sizes the buffer.
///
/// # Safety
///
/// `payload` must point to `payload_len` readable bytes (null only when
/// `payload_len` is zero), `out` must be valid for `out_capacity` byte
/// writes (null only when `out_capacity` is zero), and `out_len` must be
/// valid for a `size_t` write.
#[no_mangle]
pub unsafe extern "C" fn gtbr_encode(
    solution: *const GtbrSolution,
    payload: *const u8,
    payload_len: usize,
    payload_bits: usize,
    out: *mut u8,
    out_capacity: usize,
    out_len: *mut usize,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if solution.is_null() {
            set_error("solution must not be null");
            return GtbrStatus::NullArgument;
        }
        let Some(payload) = slice_arg(payload, payload_len) else {
            set_error("payload is null but payload_len is nonzero");
            return GtbrStatus::NullArgument;
        };
        if payload_bits.div_ceil(8) > payload.len() {
            set_error(format!(
                "payload_bits = {payload_bits} needs {} bytes, payload_len is {}",
                payload_bits.div_ceil(8),
                payload.len()
            ));
            return GtbrStatus::InvalidArgument;
        }
        let bits = Bits::from_bytes(payload, payload_bits);
        let frames = match encode_chained(&(*solution).inner, &bits) {
            Ok(frames) => frames,
            Err(err) => return codec_status(&err),
        };
        let stream = match frames_to_bytes(&frames) {
            Ok(stream) => stream,
            Err(err) => return codec_status(&err),
        };
        fill_buffer(&stream, out, out_capacity, out_len)
    })
}

/// Decodes a serialized chained frame stream, writing the recovered payload
/// bytes to `out` (the final byte zero-padded past `payload_bits`).
///
/// On [`GtbrStatus::BufferTooSmall`], `out_len` still reports the required
/// byte count, so an empty first call sizes the buffer.
///
/// # Safety
///
/// `frames` must point to `frames_len` readable bytes, `out` must be valid
/// for `out_capacity` byte writes (null only when `out_capacity` is zero),
/// and `out_len` and `payload_bits` must each be valid for a `size_t` write.
#[no_mangle]
pub unsafe extern "C" fn gtbr_decode(
    solution: *const GtbrSolution,
    frames: *const u8,
    frames_len: usize,
    out: *mut u8,
    out_capacity: usize,
    out_len: *mut usize,
    payload_bits: *mut usize,
) -> GtbrStatus {
    guarded(|| {
        clear_error();
        if solution.is_null() || payload_bits.is_null() {
            set_error("solution and payload_bits must not be null");
            return GtbrStatus::NullArgument;
        }
        let Some(frames) = slice_arg(frames, frames_len) else {
            set_error("frames is null but frames_len is nonzero");
            return GtbrStatus::NullArgument;
        };
        let inner = &(*solution).inner;
        let parsed = match frames_from_bytes(inner.spec(), frames) {
            Ok(parsed) => parsed,
            Err(err) => return codec_status(&err),
        };
        let decoded = match decode_chained(inner, &parsed) {
            Ok(decoded) => decoded,
            Err(err) => return codec_status(&err),
        };
        *payload_bits = decoded.payload.len();
        fill_buffer(decoded.payload.as_bytes(), out, out_capacity, out_len)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gtbr::evolve;

    fn solution_for(increments: &[u64], depths: &[u64]) -> *mut GtbrSolution {
        let mut handle: *mut GtbrSolution = ptr::null_mut();
        let status = unsafe {
            gtbr_solution_new(
                increments.as_ptr(),
                increments.len(),
                depths.as_ptr(),
                depths.len(),
                &mut handle,
            )
        };
        assert_eq!(status, GtbrStatus::Ok);
        assert!(!handle.is_null());
        handle
    }

    fn last_error() -> String {
        let mut buffer = [0 as c_char; 512];
        let needed = unsafe { gtbr_last_error(buffer.as_mut_ptr(), buffer.len()) };
        assert!(needed <= buffer.len(), "error message truncated");
        let bytes: Vec<u8> = buffer
            .iter()
            .take_while(|&&c| c != 0)
            .map(|&c| c as u8)
            .collect();
        String::from_utf8(bytes).expect("error message is UTF-8")
    }

    #[test]
    fn solves_and_reports_utility() {
        let handle = solution_for(&[6, 3, 3, 0], &[6, 6, 6]);
        assert_eq!(unsafe { gtbr_solution_horizon(handle) }, 4);

        let mut bits = 0.0f64;
        let status = unsafe { gtbr_solution_utility_bits(handle, &mut bits) };
        assert_eq!(status, GtbrStatus::Ok);
        assert!((bits - 20.9172).abs() < 5e-4, "bits = {bits}");
        unsafe { gtbr_solution_free(handle) };
    }

    #[test]
    fn uniform_constructor_matches_the_general_one() {
        let mut uniform: *mut GtbrSolution = ptr::null_mut();
        let status = unsafe { gtbr_solution_new_uniform(4, 3, 6, &mut uniform) };
        assert_eq!(status, GtbrStatus::Ok);

        let general = solution_for(&[3, 3, 3, 3], &[6, 6, 6]);
        let (mut a, mut b) = (0.0f64, 0.0f64);
        unsafe {
            assert_eq!(gtbr_solution_utility_bits(uniform, &mut a), GtbrStatus::Ok);
            assert_eq!(gtbr_solution_utility_bits(general, &mut b), GtbrStatus::Ok);
            gtbr_solution_free(uniform);
            gtbr_solution_free(general);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_null_and_malformed_arguments() {
        let increments = [3u64, 3];
        let status = unsafe {
            gtbr_solution_new(
                increments.as_ptr(),
                increments.len(),
                ptr::null(),
                0,
                ptr::null_mut(),
            )
        };
        assert_eq!(status, GtbrStatus::NullArgument);

        // Two slots need exactly one depth.
        let mut handle: *mut GtbrSolution = ptr::null_mut();
        let depths = [4u64, 4, 4];
        let status = unsafe {
            gtbr_solution_new(
                increments.as_ptr(),
                increments.len(),
                depths.as_ptr(),
                depths.len(),
                &mut handle,
            )
        };
        assert_eq!(status, GtbrStatus::InvalidSpec);
        assert!(handle.is_null());
        assert!(!last_error().is_empty());
    }

    #[test]
    fn sampled_schedules_conform() {
        let handle = solution_for(&[6, 3, 3, 0], &[6, 6, 6]);
        let mut lengths = [0u64; 4];
        for seed in 0..20 {
            let status =
                unsafe { gtbr_solution_sample(handle, seed, lengths.as_mut_ptr(), lengths.len()) };
            assert_eq!(status, GtbrStatus::Ok);
            let spec = RegulatorSpec::new(vec![6, 3, 3, 0], vec![6, 6, 6]).unwrap();
            evolve(&spec, &lengths).expect("sampled schedule conforms");
        }

        let status = unsafe { gtbr_solution_sample(handle, 0, lengths.as_mut_ptr(), 3) };
        assert_eq!(status, GtbrStatus::InvalidArgument);
        assert!(last_error().contains("horizon"));
        unsafe { gtbr_solution_free(handle) };
    }

    #[test]
    fn searches_an_envelope() {
        let mut outcome: *mut GtbrOutcome = ptr::null_mut();
        let status = unsafe { gtbr_search_envelope(2, 1, 2, false, &mut outcome) };
        assert_eq!(status, GtbrStatus::Ok);

        let mut best = 0.0f64;
        let mut baseline = 0.0f64;
        let mut gain = 0.0f64;
        unsafe {
            assert_eq!(gtbr_outcome_best_bits(outcome, &mut best), GtbrStatus::Ok);
            assert_eq!(
                gtbr_outcome_baseline_bits(outcome, &mut baseline),
                GtbrStatus::Ok
            );
            assert_eq!(
                gtbr_outcome_improvement_percent(outcome, &mut gain),
                GtbrStatus::Ok
            );
        }
        assert!((best - 4.0875).abs() < 5e-4, "best = {best}");
        assert!((baseline - 3.7004).abs() < 5e-4, "baseline = {baseline}");
        assert!((gain - 10.46).abs() < 0.01, "gain = {gain}");

        assert_eq!(unsafe { gtbr_outcome_optimum_count(outcome) }, 1);
        let mut increments = [0u64; 2];
        let mut depths = [0u64; 1];
        let status = unsafe {
            gtbr_outcome_optimum(
                outcome,
                0,
                increments.as_mut_ptr(),
                increments.len(),
                depths.as_mut_ptr(),
                depths.len(),
            )
        };
        assert_eq!(status, GtbrStatus::Ok);
        assert_eq!(increments, [2, 0]);
        assert_eq!(depths, [2]);

        let status = unsafe {
            gtbr_outcome_optimum(outcome, 1, increments.as_mut_ptr(), 2, depths.as_mut_ptr(), 1)
        };
        assert_eq!(status, GtbrStatus::InvalidArgument);

        // Out of the comparison band without the relaxed flag.
        let mut rejected: *mut GtbrOutcome = ptr::null_mut();
        let status = unsafe { gtbr_search_envelope(4, 3, 16, false, &mut rejected) };
        assert_eq!(status, GtbrStatus::InvalidSpec);
        assert!(rejected.is_null());

        unsafe { gtbr_outcome_free(outcome) };
    }

    #[test]
    fn codec_round_trips_through_byte_buffers() {
        let handle = solution_for(&[6, 3, 3, 0], &[6, 6, 6]);
        let payload = b"tokens over the wire";
        let payload_bits = payload.len() * 8;

        let mut needed = 0usize;
        let status = unsafe {
            gtbr_encode(
                handle,
                payload.as_ptr(),
                payload.len(),
                payload_bits,
                ptr::null_mut(),
                0,
                &mut needed,
            )
        };
        assert_eq!(status, GtbrStatus::BufferTooSmall);
        assert!(needed > 0);

        let mut stream = vec![0u8; needed];
        let mut written = 0usize;
        let status = unsafe {
            gtbr_encode(
                handle,
                payload.as_ptr(),
                payload.len(),
                payload_bits,
                stream.as_mut_ptr(),
                stream.len(),
                &mut written,
            )
        };
        assert_eq!(status, GtbrStatus::Ok);
        assert_eq!(written, needed);

        let mut recovered = vec![0u8; payload.len()];
        let mut recovered_len = 0usize;
        let mut recovered_bits = 0usize;
        let status = unsafe {
            gtbr_decode(
                handle,
                stream.as_ptr(),
                stream.len(),
                recovered.as_mut_ptr(),
                recovered.len(),
                &mut recovered_len,
                &mut recovered_bits,
            )
        };
        assert_eq!(status, GtbrStatus::Ok);
        assert_eq!(recovered_bits, payload_bits);
        assert_eq!(recovered_len, payload.len());
        assert_eq!(&recovered, payload);

        // Tampering with the stream must surface as a codec failure, not a
        // garbage payload.
        let mut tampered = stream.clone();
        *tampered.last_mut().unwrap() ^= 0x01;
        let status = unsafe {
            gtbr_decode(
                handle,
                tampered.as_ptr(),
                tampered.len(),
                recovered.as_mut_ptr(),
                recovered.len(),
                &mut recovered_len,
                &mut recovered_bits,
            )
        };
        assert_eq!(status, GtbrStatus::CodecFailure);

        unsafe { gtbr_solution_free(handle) };
    }

    #[test]
    fn zero_capacity_regulator_reports_codec_failure() {
        let handle = solution_for(&[0], &[]);
        let payload = [0xa5u8];
        let mut needed = 0usize;
        let status = unsafe {
            gtbr_encode(
                handle,
                payload.as_ptr(),
                payload.len(),
                8,
                ptr::null_mut(),
                0,
                &mut needed,
            )
        };
        assert_eq!(status, GtbrStatus::CodecFailure);
        assert!(!last_error().is_empty());
        unsafe { gtbr_solution_free(handle) };
    }

    #[test]
    fn generated_header_is_committed_and_current() {
        let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/gtbr.h");
        let text = std::fs::read_to_string(header).expect("include/gtbr.h is committed");
        for symbol in [
            "gtbr_solution_new",
            "gtbr_solution_new_uniform",
            "gtbr_solution_free",
            "gtbr_solution_sample",
            "gtbr_search_envelope",
            "gtbr_outcome_optimum",
            "gtbr_encode",
            "gtbr_decode",
            "gtbr_last_error",
        ] {
            assert!(text.contains(symbol), "header is missing {symbol}");
        }
    }
}
