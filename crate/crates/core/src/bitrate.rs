//! Latency-constrained quality selection.
//!
//! For each candidate level the controller estimates how long the next GOP
//! takes to download, the client buffer left afterwards and the backlog left
//! at the CDN, then picks the level with the smallest total latency whose
//! post-download buffer stays above the stall threshold.

/// Per-level estimate of the state after downloading the next segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyEstimate {
    pub download_time: f64,
    pub buffer_after: f64,
    pub cdn_latency: f64,
    pub total: f64,
}

/// CDN-side bookkeeping after segment `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdnState {
    /// Index of the newest frame at the CDN after segment `n`.
    pub latest_cdn_frame: usize,
    /// The same index after segment `n - 1`.
    pub prev_latest_cdn_frame: usize,
    /// Index of the most recently downloaded frame.
    pub last_downloaded_frame: usize,
    /// Wall-clock duration of segment `n`'s download.
    pub last_download_time: f64,
    /// Accumulation speed from the previous step, seconds of video per second.
    pub prev_speed: f64,
}

impl CdnState {
    /// Unsmoothed accumulation speed of segment `n`; falls back to the previous
    /// speed when the download took no time.
    pub fn speed(&self, frame_duration: f64) -> f64 {
        if self.last_download_time > 0.0 {
            let grown = self.latest_cdn_frame.saturating_sub(self.prev_latest_cdn_frame);
            grown as f64 * frame_duration / self.last_download_time
        } else {
            self.prev_speed
        }
    }

    pub fn backlog_frames(&self) -> usize {
        self.latest_cdn_frame.saturating_sub(self.last_downloaded_frame)
    }
}

/// Constants of the latency model shared by every candidate level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyModel {
    /// Predictive factor applied to the measured accumulation speed.
    pub beta: f64,
    pub frame_duration: f64,
    pub segment_duration: f64,
    pub stall_threshold: f64,
}

pub fn estimate_download_time(predicted_bitrate: f64, segment_duration: f64, throughput: f64) -> f64 {
    predicted_bitrate * segment_duration / throughput
}

pub fn estimate_buffer_after(buffer: f64, segment_duration: f64, rate: f64, download_time: f64) -> f64 {
    (buffer + segment_duration - rate * download_time).max(0.0)
}

pub fn estimate_cdn_latency(
    state: &CdnState,
    beta: f64,
    frame_duration: f64,
    download_time: f64,
    segment_duration: f64,
) -> f64 {
    let speed = beta * state.speed(frame_duration);
    let backlog = state.backlog_frames() as f64 * frame_duration;
    (backlog + speed * download_time - segment_duration).max(0.0)
}

pub fn estimate_latency(
    model: &LatencyModel,
    predicted_bitrate: f64,
    throughput: f64,
    buffer: f64,
    rate: f64,
    state: &CdnState,
) -> LatencyEstimate {
    let d = model.segment_duration;
    let download_time = estimate_download_time(predicted_bitrate, d, throughput);
    let buffer_after = estimate_buffer_after(buffer, d, rate, download_time);
    let cdn_latency = estimate_cdn_latency(state, model.beta, model.frame_duration, download_time, d);
    LatencyEstimate {
        download_time,
        buffer_after,
        cdn_latency,
        total: buffer_after + cdn_latency,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityChoice {
    pub level: usize,
    pub estimates: Vec<LatencyEstimate>,
}

/// Enumerates every level. Among levels whose post-download buffer exceeds
/// the stall threshold the smallest total latency wins, ties going to the
/// higher level; with no feasible level the lowest is chosen.
pub fn select_quality(
    model: &LatencyModel,
    predictions: &[f64],
    throughput: f64,
    buffer: f64,
    rate: f64,
    state: &CdnState,
) -> QualityChoice {
    let estimates: Vec<_> = predictions
        .iter()
        .map(|&p| estimate_latency(model, p, throughput, buffer, rate, state))
        .collect();
    let mut best: Option<usize> = None;
    for (m, e) in estimates.iter().enumerate() {
        if e.buffer_after > model.stall_threshold
            && best.map_or(true, |b| e.total <= estimates[b].total)
        {
            best = Some(m);
        }
    }
    QualityChoice {
        level: best.unwrap_or(0),
        estimates,
    }
}
