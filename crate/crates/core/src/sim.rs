//! Frame-level discrete-event replay of a live stream.
//!
//! The client fetches frames one at a time at the level chosen for the current
//! GOP. A frame can only be fetched once it has arrived at the CDN; while the
//! downloader idles or transfers, playback keeps draining the buffer at the
//! rate fixed for the segment. The controller is consulted before every GOP
//! download, and a latency-triggered skip jumps the download pointer to the
//! start of the newest GOP at the CDN.
//!
//! Latency at any instant is the CDN backlog (frames arrived but not yet
//! fetched or skipped) plus the client buffer, i.e. the distance from the live
//! edge to the playhead. Each downloaded frame's record carries the latency at
//! the moment its download completes.

use std::fmt::Write as _;

use crate::bitrate::LatencyEstimate;
use crate::error::{Error, Result};
use crate::framedrop::latency_exceeds;
use crate::playback::{TargetBuffer, TargetBufferBands};
use crate::qoe::FrameOutcome;
use crate::trace::{NetworkTrace, VideoTrace};

/// Slack allowed when comparing accumulated buffer against a resume threshold.
const RESUME_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerDecision {
    pub quality: usize,
    pub target_buffer: TargetBuffer,
    pub latency_limit: f64,
}

/// A controller's answer for one segment, with the diagnostics it used.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub decision: ControllerDecision,
    /// Predicted actual bitrate of the upcoming segment at every level.
    pub predictions: Vec<f64>,
    /// Latency estimate for the chosen level, when the controller made one.
    pub estimate: Option<LatencyEstimate>,
}

/// What the client measured while fetching one GOP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentObservation {
    pub segment: usize,
    pub level: usize,
    pub bits: u64,
    /// `bits` over the GOP duration.
    pub actual_bitrate: f64,
    /// Time spent transferring, excluding waits for frames to reach the CDN.
    pub transfer_time: f64,
    /// Wall-clock time from the decision to the last frame's arrival.
    pub elapsed: f64,
    pub throughput: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub video: &'a VideoTrace,
    /// GOP the download pointer sits at.
    pub segment: usize,
    pub wall_clock: f64,
    pub buffer: f64,
    pub latency: f64,
    pub latest_cdn_frame: Option<usize>,
    pub next_frame: usize,
    pub phase: Phase,
    pub last: Option<SegmentObservation>,
}

pub trait Controller {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Decision>;
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Decision> {
        (**self).decide(obs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Buffering before first play-out; waiting is not rebuffering.
    Startup,
    Playing,
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState {
    pub clock: f64,
    pub buffer: f64,
    pub phase: Phase,
    pub rate: f64,
    pub resume_threshold: f64,
    pub next_frame: usize,
    pub played: f64,
    pub downloaded: f64,
    pub skipped: f64,
    pub rebuffer_time: f64,
    pub idle_time: f64,
    pub transfer_time: f64,
    pub stalls: usize,
}

impl PlayerState {
    pub fn new(rate: f64, resume_threshold: f64) -> Self {
        Self {
            clock: 0.0,
            buffer: 0.0,
            phase: Phase::Startup,
            rate,
            resume_threshold,
            next_frame: 0,
            played: 0.0,
            downloaded: 0.0,
            skipped: 0.0,
            rebuffer_time: 0.0,
            idle_time: 0.0,
            transfer_time: 0.0,
            stalls: 0,
        }
    }

    /// Plays for `elapsed` seconds of wall clock (the clock itself is not
    /// moved). Drains at `rate`; time after the buffer empties is rebuffering.
    pub fn advance_playback(&mut self, elapsed: f64) {
        match self.phase {
            Phase::Playing => {
                let want = self.rate * elapsed;
                if want < self.buffer {
                    self.buffer -= want;
                    self.played += want;
                } else {
                    let drain_time = self.buffer / self.rate;
                    self.played += self.buffer;
                    self.buffer = 0.0;
                    self.phase = Phase::Stalled;
                    self.stalls += 1;
                    self.rebuffer_time += elapsed - drain_time;
                }
            }
            Phase::Stalled => self.rebuffer_time += elapsed,
            Phase::Startup => {}
        }
    }

    pub fn maybe_resume(&mut self) {
        if self.phase != Phase::Playing && self.buffer + RESUME_EPSILON >= self.resume_threshold {
            self.phase = Phase::Playing;
        }
    }

    /// Idles the downloader until `t` while playback continues.
    pub fn wait_until(&mut self, t: f64) {
        if t > self.clock {
            let idle = t - self.clock;
            self.advance_playback(idle);
            self.idle_time += idle;
            self.clock = t;
        }
    }

    /// Transfers one frame of `bits` starting now and appends `frame_duration`
    /// seconds of video to the buffer. Returns the transfer duration.
    pub fn download_frame(&mut self, bits: f64, frame_duration: f64, net: &NetworkTrace) -> f64 {
        let end = net.transfer_end(self.clock, bits);
        let duration = end - self.clock;
        self.advance_playback(duration);
        self.clock = end;
        self.transfer_time += duration;
        self.buffer += frame_duration;
        self.downloaded += frame_duration;
        self.next_frame += 1;
        self.maybe_resume();
        duration
    }

    /// Frames available at the CDN at the current wall clock.
    pub fn arrived_frames(&self, video: &VideoTrace) -> usize {
        video.frames().partition_point(|f| f.arrival_time <= self.clock)
    }

    /// Distance from the live edge to the playhead, in seconds.
    pub fn latency(&self, video: &VideoTrace) -> f64 {
        let backlog = self.arrived_frames(video).saturating_sub(self.next_frame);
        backlog as f64 * video.frame_duration() + self.buffer
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameLog {
    pub frame: usize,
    pub level: usize,
    pub coding_bitrate: f64,
    pub dl_start: f64,
    pub dl_end: f64,
    pub size_bits: u64,
    pub bandwidth: f64,
    pub buffer_before: f64,
    pub buffer_after: f64,
    pub latency: f64,
    pub rebuffer: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentLog {
    /// GOP actually downloaded (after any skip).
    pub segment: usize,
    pub decided_at: f64,
    pub buffer: f64,
    pub latency: f64,
    pub quality: usize,
    pub target_buffer: TargetBuffer,
    pub latency_limit: f64,
    pub rate: f64,
    pub skipped_frames: usize,
    pub predictions: Vec<f64>,
    pub estimate: Option<LatencyEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLog {
    pub frame_duration: f64,
    pub frames: Vec<FrameLog>,
    pub segments: Vec<SegmentLog>,
    pub played: f64,
    pub downloaded: f64,
    pub skipped: f64,
    pub final_buffer: f64,
    pub wall_time: f64,
    pub idle_time: f64,
    pub transfer_time: f64,
    pub rebuffer_time: f64,
    pub stalls: usize,
    pub skip_events: usize,
}

impl SimulationLog {
    /// One QoE outcome per frame record. Skipped frames carry only their
    /// skipped length; the switch term compares consecutive downloaded frames.
    pub fn frame_outcomes(&self) -> Vec<FrameOutcome> {
        let mut prev: Option<f64> = None;
        self.frames
            .iter()
            .map(|f| {
                if f.skipped {
                    FrameOutcome {
                        skipped_length: self.frame_duration,
                        ..FrameOutcome::default()
                    }
                } else {
                    let o = FrameOutcome {
                        coding_bitrate: f.coding_bitrate,
                        rebuffer_time: f.rebuffer,
                        latency: f.latency,
                        skipped_length: 0.0,
                        prev_coding_bitrate: prev.unwrap_or(f.coding_bitrate),
                    };
                    prev = Some(f.coding_bitrate);
                    o
                }
            })
            .collect()
    }

    pub fn frames_csv(&self) -> String {
        let mut out = String::from("frame,level,dl_start_s,dl_end_s,buffer_s,latency_s,rebuf_s,skipped\n");
        for f in &self.frames {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                f.frame,
                f.level,
                f.dl_start,
                f.dl_end,
                f.buffer_after,
                f.latency,
                f.rebuffer,
                u8::from(f.skipped)
            )
            .unwrap();
        }
        out
    }

    pub fn segments_csv(&self) -> String {
        let mut out = String::from(
            "segment,quality,target_buffer,latency_limit_s,pred_bitrate_bps,est_T_s,est_D_s\n",
        );
        for s in &self.segments {
            let (t, d) = s
                .estimate
                .map_or((String::new(), String::new()), |e| {
                    (e.download_time.to_string(), e.total.to_string())
                });
            writeln!(
                out,
                "{},{},{},{},{},{t},{d}",
                s.segment,
                s.quality,
                s.target_buffer.index(),
                s.latency_limit,
                s.predictions[s.quality],
            )
            .unwrap();
        }
        out
    }
}

/// Replays `video` over `net`, consulting `controller` before every GOP.
pub fn run<C: Controller + ?Sized>(
    video: &VideoTrace,
    net: &NetworkTrace,
    bands: &TargetBufferBands,
    controller: &mut C,
) -> Result<SimulationLog> {
    let df = video.frame_duration();
    let per_gop = video.frames_per_gop();
    let total = video.frames().len();
    let levels = video.levels();

    let initial = bands.tuple(TargetBuffer::Zero);
    let mut st = PlayerState::new(initial.rate_at(0.0), initial.target);
    let mut frames = Vec::with_capacity(total);
    let mut segments = Vec::with_capacity(video.segment_count());
    let mut last: Option<SegmentObservation> = None;
    let mut skip_events = 0;

    while st.next_frame < total {
        let arrived = st.arrived_frames(video);
        let obs = Observation {
            video,
            segment: st.next_frame / per_gop,
            wall_clock: st.clock,
            buffer: st.buffer,
            latency: st.latency(video),
            latest_cdn_frame: arrived.checked_sub(1),
            next_frame: st.next_frame,
            phase: st.phase,
            last,
        };
        let Decision {
            decision,
            predictions,
            estimate,
        } = controller.decide(&obs)?;
        if decision.quality >= levels {
            return Err(Error::ControllerLevel {
                segment: obs.segment,
                level: decision.quality,
                levels,
            });
        }
        if !(decision.latency_limit > 0.0) {
            return Err(Error::ControllerLatencyLimit {
                segment: obs.segment,
                limit: decision.latency_limit,
            });
        }

        let tuple = bands.tuple(decision.target_buffer);
        st.rate = tuple.rate_at(st.buffer);
        st.resume_threshold = tuple.target;
        st.maybe_resume();

        let mut skipped_frames = 0;
        if let Some(latest) = obs.latest_cdn_frame {
            let jump_to = latest / per_gop * per_gop;
            if latency_exceeds(obs.latency, decision.latency_limit) && jump_to > st.next_frame {
                let bw = net.bandwidth_at(st.clock);
                for f in st.next_frame..jump_to {
                    frames.push(FrameLog {
                        frame: f,
                        level: decision.quality,
                        coding_bitrate: 0.0,
                        dl_start: st.clock,
                        dl_end: st.clock,
                        size_bits: 0,
                        bandwidth: bw,
                        buffer_before: st.buffer,
                        buffer_after: st.buffer,
                        latency: obs.latency,
                        rebuffer: 0.0,
                        skipped: true,
                    });
                }
                skipped_frames = jump_to - st.next_frame;
                st.skipped += skipped_frames as f64 * df;
                st.next_frame = jump_to;
                skip_events += 1;
            }
        }

        let segment = st.next_frame / per_gop;
        segments.push(SegmentLog {
            segment,
            decided_at: st.clock,
            buffer: st.buffer,
            latency: st.latency(video),
            quality: decision.quality,
            target_buffer: decision.target_buffer,
            latency_limit: decision.latency_limit,
            rate: st.rate,
            skipped_frames,
            predictions,
            estimate,
        });

        let started = st.clock;
        let transfer_before = st.transfer_time;
        let coding_bitrate = video.ladder().bitrate(decision.quality);
        for rec in video.gop(segment) {
            let rebuffer_before = st.rebuffer_time;
            let buffer_before = st.buffer;
            st.wait_until(rec.arrival_time);
            let dl_start = st.clock;
            let bandwidth = net.bandwidth_at(dl_start);
            let size_bits = rec.sizes[decision.quality];
            st.download_frame(size_bits as f64, df, net);
            frames.push(FrameLog {
                frame: rec.index,
                level: decision.quality,
                coding_bitrate,
                dl_start,
                dl_end: st.clock,
                size_bits,
                bandwidth,
                buffer_before,
                buffer_after: st.buffer,
                latency: st.latency(video),
                rebuffer: st.rebuffer_time - rebuffer_before,
                skipped: false,
            });
        }

        let bits = video.segment_bits(segment, decision.quality);
        let transfer_time = st.transfer_time - transfer_before;
        last = Some(SegmentObservation {
            segment,
            level: decision.quality,
            bits,
            actual_bitrate: bits as f64 / video.gop_length(),
            transfer_time,
            elapsed: st.clock - started,
            throughput: bits as f64 / transfer_time,
        });
    }

    Ok(SimulationLog {
        frame_duration: df,
        frames,
        segments,
        played: st.played,
        downloaded: st.downloaded,
        skipped: st.skipped,
        final_buffer: st.buffer,
        wall_time: st.clock,
        idle_time: st.idle_time,
        transfer_time: st.transfer_time,
        rebuffer_time: st.rebuffer_time,
        stalls: st.stalls,
        skip_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::BandwidthSample;

    fn close(a: f64, e: f64) -> bool {
        (a - e).abs() <= 1e-9 * e.abs().max(1.0)
    }

    #[test]
    fn playback_consumes_buffer() {
        let mut st = PlayerState::new(1.0, 1.5);
        st.phase = Phase::Playing;
        st.buffer = 1.0;
        st.advance_playback(0.5);
        assert_eq!(st.buffer, 0.5);
        assert_eq!(st.rebuffer_time, 0.0);
        assert_eq!(st.phase, Phase::Playing);
    }

    #[test]
    fn playback_drains_then_rebuffers() {
        let mut st = PlayerState::new(1.05, 1.5);
        st.phase = Phase::Playing;
        st.buffer = 0.2;
        st.advance_playback(1.0);
        assert_eq!(st.buffer, 0.0);
        assert_eq!(st.phase, Phase::Stalled);
        assert!(close(st.rebuffer_time, 1.0 - 0.2 / 1.05));
        assert!((st.rebuffer_time - 0.8095).abs() < 1e-4);
        assert_eq!(st.stalls, 1);
    }

    #[test]
    fn zero_elapsed_is_identity() {
        let mut st = PlayerState::new(1.0, 1.5);
        st.phase = Phase::Playing;
        st.buffer = 0.7;
        let before = st.clone();
        st.advance_playback(0.0);
        assert_eq!(st, before);
    }

    #[test]
    fn startup_wait_is_not_rebuffering() {
        let mut st = PlayerState::new(1.0, 1.5);
        st.advance_playback(3.0);
        assert_eq!(st.rebuffer_time, 0.0);
        assert_eq!(st.phase, Phase::Startup);
    }

    #[test]
    fn download_under_constant_bandwidth() {
        let net = NetworkTrace::constant(1e6).unwrap();
        let mut st = PlayerState::new(1.0, 1.5);
        assert_eq!(st.download_frame(1e6, 0.04, &net), 1.0);
        assert_eq!(st.clock, 1.0);
        assert_eq!(st.buffer, 0.04);
    }

    #[test]
    fn download_straddling_a_step() {
        let net = NetworkTrace::new(vec![
            BandwidthSample { start: 0.0, bandwidth: 1e6 },
            BandwidthSample { start: 1.0, bandwidth: 2e6 },
        ])
        .unwrap();
        let mut st = PlayerState::new(1.0, 1.5);
        assert_eq!(st.download_frame(1.5e6, 0.04, &net), 1.25);
    }

    #[test]
    fn idle_wait_advances_clock_and_playback() {
        let mut st = PlayerState::new(1.0, 1.5);
        st.phase = Phase::Playing;
        st.buffer = 1.0;
        st.wait_until(0.25);
        assert_eq!(st.clock, 0.25);
        assert_eq!(st.idle_time, 0.25);
        assert_eq!(st.buffer, 0.75);
        st.wait_until(0.1);
        assert_eq!(st.clock, 0.25);
    }

    #[test]
    fn piecewise_rate_across_a_drain() {
        // 0.21 s of buffer at 1.05x, a 1 s transfer: plays 0.2 s, stalls 0.8 s
        let net = NetworkTrace::constant(1e6).unwrap();
        let mut st = PlayerState::new(1.05, 1.5);
        st.phase = Phase::Playing;
        st.buffer = 0.21;
        st.download_frame(1e6, 0.04, &net);
        assert!(close(st.played, 0.21));
        assert!(close(st.rebuffer_time, 0.8));
        assert!(close(st.buffer, 0.04));
        assert_eq!(st.phase, Phase::Stalled);
    }
}
