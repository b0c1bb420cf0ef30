//! C ABI over `hysa-core`.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`HysaStatus`] and writes its result
//!   through an out-pointer. On failure the out-pointer is left untouched and
//!   [`hysa_last_error_message`] describes the error for the calling thread.
//! * Objects are opaque handles created by `*_new` / `*_parse` functions and
//!   released by the matching `*_free`. Passing NULL to a `*_free` is a no-op.
//! * Strings passed in are NUL-terminated UTF-8. Strings handed out are owned
//!   by the caller and released with [`hysa_string_free`].
//! * Bitrates are bits per second and durations seconds.
//!
//! The generated header is `include/hysa.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hysa::harness::{run_one, Named};
use hysa::playback::decide_playback;
use hysa::predictor::KamaState;
use hysa::qoe::{score_frame, FrameOutcome, QoeBreakdown, QoeWeights};
use hysa::trace::{parse_network_trace, parse_video_trace};
use hysa::{framedrop, NetworkTrace, RunSummary, SchemeConfig, SchemeId, SimulationLog, VideoTrace};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HysaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Simulation = 5,
    Panic = 6,
}

pub struct HysaConfig(SchemeConfig);

pub struct HysaVideoTrace(VideoTrace);

pub struct HysaNetworkTrace(NetworkTrace);

pub struct HysaRunResult {
    log: SimulationLog,
    summary: RunSummary,
}

pub struct HysaPredictor(KamaState);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HysaQoe {
    pub quality: f64,
    pub rebuf: f64,
    pub latency: f64,
    pub skip: f64,
    pub switch_: f64,
    pub overall: f64,
}

impl From<QoeBreakdown> for HysaQoe {
    fn from(q: QoeBreakdown) -> Self {
        Self {
            quality: q.quality,
            rebuf: q.rebuf,
            latency: q.latency,
            skip: q.skip,
            switch_: q.switch,
            overall: q.overall,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysaQoeWeights {
    pub quality: f64,
    pub rebuffer: f64,
    pub latency: f64,
    pub skip: f64,
    pub switch_: f64,
    pub drop_latency: f64,
}

impl From<HysaQoeWeights> for QoeWeights {
    fn from(w: HysaQoeWeights) -> Self {
        Self {
            quality: w.quality,
            rebuffer: w.rebuffer,
            latency: w.latency,
            skip: w.skip,
            switch: w.switch_,
            drop_latency: w.drop_latency,
        }
    }
}

impl From<QoeWeights> for HysaQoeWeights {
    fn from(w: QoeWeights) -> Self {
        Self {
            quality: w.quality,
            rebuffer: w.rebuffer,
            latency: w.latency,
            skip: w.skip,
            switch_: w.switch,
            drop_latency: w.drop_latency,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HysaFrameOutcome {
    pub coding_bitrate: f64,
    pub rebuffer_time: f64,
    pub latency: f64,
    pub skipped_length: f64,
    pub prev_coding_bitrate: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HysaRunStats {
    pub frames: usize,
    pub segments: usize,
    pub stalls: usize,
    pub skips: usize,
    pub played: f64,
    pub skipped: f64,
    pub final_buffer: f64,
    pub rebuffer_time: f64,
    pub wall_time: f64,
    pub pred_error: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HysaPlaybackDecision {
    /// 0 or 1.
    pub target_buffer: u32,
    pub rate: f64,
    pub resume_threshold: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(HysaStatus, String);

impl From<hysa::Error> for Failure {
    fn from(e: hysa::Error) -> Self {
        use hysa::Error as E;
        let status = match &e {
            E::Config(_) | E::Ladder(_) | E::UnknownScheme(_) | E::OutOfRange { .. } | E::SkipDisabled => {
                HysaStatus::InvalidArgument
            }
            E::Run { .. }
            | E::ControllerLevel { .. }
            | E::ControllerLatencyLimit { .. }
            | E::EmptyLog
            | E::ColdStart
            | E::InsufficientHistory { .. } => HysaStatus::Simulation,
            _ => HysaStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HysaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            HysaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside hysa");
            HysaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(HysaStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(HysaStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = value;
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(HysaStatus::InvalidArgument, "string contains NUL".into()))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn hysa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hysa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hysa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hysa_config_default(out: *mut *mut HysaConfig) -> HysaStatus {
    guard(|| put(out, HysaConfig(SchemeConfig::default())))
}

/// Parses a `key = value` configuration.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hysa_config_parse(text: *const c_char, out: *mut *mut HysaConfig) -> HysaStatus {
    guard(|| {
        let cfg = SchemeConfig::parse(c_str(text, "text")?)?;
        put(out, HysaConfig(cfg))
    })
}

/// Copies the QoE weights of `config` into `out`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_config_weights(config: *const HysaConfig, out: *mut HysaQoeWeights) -> HysaStatus {
    guard(|| write(out, borrow(config, "config")?.0.weights.into()))
}

/// # Safety
/// `config` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hysa_config_free(config: *mut HysaConfig) {
    release(config);
}

/// Parses a video trace CSV using the frame timing and ladder of `config`.
///
/// # Safety
/// `csv` must be a NUL-terminated string; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_video_trace_parse(
    csv: *const c_char,
    config: *const HysaConfig,
    out: *mut *mut HysaVideoTrace,
) -> HysaStatus {
    guard(|| {
        let cfg = &borrow(config, "config")?.0;
        let trace = parse_video_trace(c_str(csv, "csv")?.as_bytes(), cfg.timing, cfg.ladder.clone())?;
        put(out, HysaVideoTrace(trace))
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_video_trace_segment_count(trace: *const HysaVideoTrace, out: *mut usize) -> HysaStatus {
    guard(|| write(out, borrow(trace, "trace")?.0.segment_count()))
}

/// Actual bitrate of GOP `segment` at `level`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_video_trace_actual_bitrate(
    trace: *const HysaVideoTrace,
    segment: usize,
    level: usize,
    out: *mut f64,
) -> HysaStatus {
    guard(|| write(out, borrow(trace, "trace")?.0.segment_actual_bitrate(segment, level)?))
}

/// # Safety
/// `trace` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hysa_video_trace_free(trace: *mut HysaVideoTrace) {
    release(trace);
}

/// # Safety
/// `csv` must be a NUL-terminated string; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hysa_network_trace_parse(csv: *const c_char, out: *mut *mut HysaNetworkTrace) -> HysaStatus {
    guard(|| {
        let trace = parse_network_trace(c_str(csv, "csv")?.as_bytes())?;
        put(out, HysaNetworkTrace(trace))
    })
}

/// Constant-bandwidth network trace.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn hysa_network_trace_constant(bandwidth_bps: f64, out: *mut *mut HysaNetworkTrace) -> HysaStatus {
    guard(|| put(out, HysaNetworkTrace(NetworkTrace::constant(bandwidth_bps)?)))
}

/// # Safety
/// `trace` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hysa_network_trace_free(trace: *mut HysaNetworkTrace) {
    release(trace);
}

/// Runs `scheme` (for example `"hysa"`, `"hysa-n"`, `"fixed:0"`); NULL uses
/// the scheme named in `config`.
///
/// # Safety
/// Handles must be valid; `scheme` NULL or NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_simulate(
    video: *const HysaVideoTrace,
    network: *const HysaNetworkTrace,
    config: *const HysaConfig,
    scheme: *const c_char,
    out: *mut *mut HysaRunResult,
) -> HysaStatus {
    guard(|| {
        let cfg = &borrow(config, "config")?.0;
        let scheme: SchemeId = if scheme.is_null() {
            cfg.scheme
        } else {
            c_str(scheme, "scheme")?.parse()?
        };
        let video = Named::new("video", borrow(video, "video")?.0.clone());
        let network = Named::new("network", borrow(network, "network")?.0.clone());
        let (log, summary) = run_one(&video, &network, scheme, cfg)?;
        put(out, HysaRunResult { log, summary })
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_run_result_qoe(result: *const HysaRunResult, out: *mut HysaQoe) -> HysaStatus {
    guard(|| write(out, borrow(result, "result")?.summary.qoe.into()))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_run_result_stats(result: *const HysaRunResult, out: *mut HysaRunStats) -> HysaStatus {
    guard(|| {
        let r = borrow(result, "result")?;
        write(
            out,
            HysaRunStats {
                frames: r.log.frames.len(),
                segments: r.log.segments.len(),
                stalls: r.summary.stalls,
                skips: r.summary.skips,
                played: r.log.played,
                skipped: r.log.skipped,
                final_buffer: r.log.final_buffer,
                rebuffer_time: r.log.rebuffer_time,
                wall_time: r.log.wall_time,
                pred_error: r.summary.pred_error,
            },
        )
    })
}

/// Per-frame log as CSV; free with [`hysa_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_run_result_frames_csv(result: *const HysaRunResult, out: *mut *mut c_char) -> HysaStatus {
    guard(|| write(out, owned_string(borrow(result, "result")?.log.frames_csv())?))
}

/// Per-segment log as CSV; free with [`hysa_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_run_result_segments_csv(result: *const HysaRunResult, out: *mut *mut c_char) -> HysaStatus {
    guard(|| write(out, owned_string(borrow(result, "result")?.log.segments_csv())?))
}

/// # Safety
/// `result` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hysa_run_result_free(result: *mut HysaRunResult) {
    release(result);
}

/// KAMA bitrate predictor over the ladder and parameters of `config`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_predictor_new(config: *const HysaConfig, out: *mut *mut HysaPredictor) -> HysaStatus {
    guard(|| {
        let cfg = &borrow(config, "config")?.0;
        put(out, HysaPredictor(KamaState::new(cfg.kama, cfg.ladder.clone())))
    })
}

/// Feeds the actual bitrate observed for a segment downloaded at `level`.
///
/// # Safety
/// `predictor` must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_predictor_observe(
    predictor: *mut HysaPredictor,
    level: usize,
    observed_bps: f64,
) -> HysaStatus {
    guard(|| {
        let p = borrow_mut(predictor, "predictor")?;
        let levels = p.0.tracks().len();
        if level >= levels {
            return Err(Failure(
                HysaStatus::InvalidArgument,
                format!("level {level} outside ladder of {levels}"),
            ));
        }
        if !(observed_bps.is_finite() && observed_bps > 0.0) {
            return Err(Failure(HysaStatus::InvalidArgument, "observed bitrate must be > 0".into()));
        }
        p.0.observe(level, observed_bps);
        Ok(())
    })
}

/// Writes up to `len` per-level predictions into `out` and the level count
/// into `written`.
///
/// # Safety
/// `out` must hold `len` doubles; other pointers valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_predictor_predictions(
    predictor: *const HysaPredictor,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> HysaStatus {
    guard(|| {
        let preds = borrow(predictor, "predictor")?.0.predictions();
        if out.is_null() {
            return Err(null("out"));
        }
        let n = preds.len().min(len);
        ptr::copy_nonoverlapping(preds.as_ptr(), out, n);
        write(written, preds.len())
    })
}

/// # Safety
/// `predictor` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hysa_predictor_free(predictor: *mut HysaPredictor) {
    release(predictor);
}

/// Per-frame QoE breakdown.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_score_frame(
    weights: *const HysaQoeWeights,
    outcome: *const HysaFrameOutcome,
    frame_duration: f64,
    out: *mut HysaQoe,
) -> HysaStatus {
    guard(|| {
        let w: QoeWeights = (*borrow(weights, "weights")?).into();
        let o = borrow(outcome, "outcome")?;
        let o = FrameOutcome {
            coding_bitrate: o.coding_bitrate,
            rebuffer_time: o.rebuffer_time,
            latency: o.latency,
            skipped_length: o.skipped_length,
            prev_coding_bitrate: o.prev_coding_bitrate,
        };
        write(out, score_frame(&w, &o, frame_duration).into())
    })
}

/// Latency above which frames are skipped for a segment at `coding_bitrate`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_skip_threshold(
    coding_bitrate: f64,
    frame_duration: f64,
    weights: *const HysaQoeWeights,
    lambda: f64,
    out: *mut f64,
) -> HysaStatus {
    guard(|| {
        let w: QoeWeights = (*borrow(weights, "weights")?).into();
        write(out, framedrop::compute_skip_threshold(coding_bitrate, frame_duration, &w, lambda)?)
    })
}

/// Target-buffer choice and playback rate for the current buffer level.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hysa_decide_playback(
    config: *const HysaConfig,
    buffer: f64,
    out: *mut HysaPlaybackDecision,
) -> HysaStatus {
    guard(|| {
        let d = decide_playback(&borrow(config, "config")?.0.bands, buffer);
        write(
            out,
            HysaPlaybackDecision {
                target_buffer: d.target_buffer.index() as u32,
                rate: d.rate,
                resume_threshold: d.resume_threshold,
            },
        )
    })
}
