//! Segment-bitrate and throughput prediction.
//!
//! After each download the observed actual bitrate of the fetched level is
//! scaled to every other level in proportion to the coding bitrates, and each
//! level's stream of (observed or scaled) samples feeds its own Kaufman
//! adaptive moving average. Throughput uses a linearly weighted moving average
//! over the last `W` segment downloads.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::trace::BitrateLadder;

/// Kaufman adaptive moving average parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KamaParams {
    /// Sample count of the slowest EMA.
    pub slow_len: usize,
    /// Sample count of the fastest EMA.
    pub fast_len: usize,
    /// Number of sample-to-sample changes in the efficiency-ratio window.
    pub er_window: usize,
}

impl Default for KamaParams {
    fn default() -> Self {
        Self {
            slow_len: 30,
            fast_len: 2,
            er_window: 10,
        }
    }
}

impl KamaParams {
    pub fn validate(&self) -> Result<()> {
        if self.fast_len < 1 || self.slow_len <= self.fast_len || self.er_window < 1 {
            return Err(Error::Config(format!(
                "KAMA needs l_min >= 1, l_max > l_min, N_1 >= 1 (got l_max={}, l_min={}, N_1={})",
                self.slow_len, self.fast_len, self.er_window
            )));
        }
        Ok(())
    }

    pub fn sc_slowest(&self) -> f64 {
        2.0 / (self.slow_len as f64 + 1.0)
    }

    pub fn sc_fastest(&self) -> f64 {
        2.0 / (self.fast_len as f64 + 1.0)
    }
}

/// Estimates the actual bitrate of every level from the one level downloaded,
/// scaling by the ratio of coding bitrates. The downloaded level is returned
/// unchanged.
pub fn scale_actual_bitrates(ladder: &BitrateLadder, downloaded: usize, observed: f64) -> Vec<f64> {
    let base = ladder.bitrate(downloaded);
    ladder
        .levels()
        .iter()
        .enumerate()
        .map(|(m, &v)| if m == downloaded { observed } else { v * observed / base })
        .collect()
}

/// Net change over path length of the last `window + 1` samples of `history`
/// (oldest first). A flat history has no path length and yields 1.
pub fn efficiency_ratio(history: &[f64], window: usize) -> Result<f64> {
    if window == 0 || history.len() < window + 1 {
        return Err(Error::InsufficientHistory {
            need: window + 1,
            have: history.len(),
        });
    }
    let h = &history[history.len() - window - 1..];
    let change = (h[window] - h[0]).abs();
    let path: f64 = h.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    if path == 0.0 {
        return Ok(1.0);
    }
    // rounding in the path sum can push a monotone history a hair above 1
    Ok((change / path).min(1.0))
}

pub fn smoothing_factor(er: f64, params: &KamaParams) -> f64 {
    let (slow, fast) = (params.sc_slowest(), params.sc_fastest());
    let sc = er * (fast - slow) + slow;
    sc * sc
}

/// One level's KAMA track.
#[derive(Debug, Clone)]
pub struct KamaTrack {
    prediction: f64,
    history: VecDeque<f64>,
    last_sc: Option<f64>,
}

impl KamaTrack {
    pub fn new(initial: f64) -> Self {
        Self {
            prediction: initial,
            history: VecDeque::new(),
            last_sc: None,
        }
    }

    pub fn prediction(&self) -> f64 {
        self.prediction
    }

    pub fn last_smoothing_factor(&self) -> Option<f64> {
        self.last_sc
    }

    /// Folds in the newest sample and returns the prediction for the next one.
    /// Until a full efficiency-ratio window is available the fastest smoothing
    /// factor applies.
    pub fn update(&mut self, sample: f64, params: &KamaParams) -> f64 {
        self.history.push_back(sample);
        while self.history.len() > params.er_window + 1 {
            self.history.pop_front();
        }
        let sc = match efficiency_ratio(self.history.make_contiguous(), params.er_window) {
            Ok(er) => smoothing_factor(er, params),
            Err(_) => params.sc_fastest().powi(2),
        };
        self.last_sc = Some(sc);
        // same as (1 - sc) * prev + sc * sample, but exact when sample == prev
        self.prediction += sc * (sample - self.prediction);
        self.prediction
    }
}

/// Per-level KAMA predictors for one run, seeded with the coding bitrates.
#[derive(Debug, Clone)]
pub struct KamaState {
    params: KamaParams,
    ladder: BitrateLadder,
    tracks: Vec<KamaTrack>,
}

impl KamaState {
    pub fn new(params: KamaParams, ladder: BitrateLadder) -> Self {
        let tracks = ladder.levels().iter().map(|&v| KamaTrack::new(v)).collect();
        Self {
            params,
            ladder,
            tracks,
        }
    }

    pub fn params(&self) -> &KamaParams {
        &self.params
    }

    pub fn tracks(&self) -> &[KamaTrack] {
        &self.tracks
    }

    pub fn predictions(&self) -> Vec<f64> {
        self.tracks.iter().map(KamaTrack::prediction).collect()
    }

    /// Records a downloaded segment's observed actual bitrate at `level` and
    /// returns the next segment's predictions for all levels.
    pub fn observe(&mut self, level: usize, observed: f64) -> Vec<f64> {
        let samples = scale_actual_bitrates(&self.ladder, level, observed);
        for (track, s) in self.tracks.iter_mut().zip(samples) {
            track.update(s, &self.params);
        }
        self.predictions()
    }
}

/// Source of the next segment's per-level bitrate prediction.
#[derive(Debug, Clone)]
pub enum BitratePredictor {
    Kama(KamaState),
    /// Uses the coding bitrate as the prediction, ignoring observations.
    Coding(BitrateLadder),
}

impl BitratePredictor {
    pub fn predictions(&self) -> Vec<f64> {
        match self {
            Self::Kama(k) => k.predictions(),
            Self::Coding(l) => l.levels().to_vec(),
        }
    }

    pub fn observe(&mut self, level: usize, observed: f64) {
        if let Self::Kama(k) = self {
            k.observe(level, observed);
        }
    }
}

/// Linearly weighted moving average of per-segment throughput samples; the
/// newest of `k` samples has weight `k`, the oldest weight 1.
#[derive(Debug, Clone)]
pub struct ThroughputEstimator {
    window: usize,
    samples: VecDeque<f64>,
}

impl ThroughputEstimator {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            samples: VecDeque::with_capacity(window.max(1)),
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn push(&mut self, bps: f64) {
        if self.samples.len() == self.window {
            self.samples.pop_front();
        }
        self.samples.push_back(bps);
    }

    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().copied()
    }

    pub fn estimate(&self) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::ColdStart);
        }
        let (num, den) = self
            .samples
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(n, d), (i, &s)| {
                let w = (i + 1) as f64;
                (n + w * s, d + w)
            });
        Ok(num / den)
    }
}

pub fn prediction_error(predicted: f64, actual: f64) -> f64 {
    (predicted - actual).abs() / actual
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, e: f64) -> bool {
        (a - e).abs() <= 1e-9 * e.abs().max(1e-300)
    }

    #[test]
    fn scaling_two_levels() {
        let ladder = BitrateLadder::from_kbps(&[1000.0, 2000.0]).unwrap();
        assert_eq!(scale_actual_bitrates(&ladder, 0, 1100.0), vec![1100.0, 2200.0]);
    }

    #[test]
    fn scaling_default_ladder() {
        let got = scale_actual_bitrates(&BitrateLadder::default(), 2, 1500.0);
        for (g, e) in got.iter().zip([625.0, 1062.5, 1500.0, 2312.5]) {
            assert!(rel(*g, e), "{g} vs {e}");
        }
        assert_eq!(got[2], 1500.0);
    }

    #[test]
    fn efficiency_ratio_cases() {
        assert_eq!(efficiency_ratio(&[1.0, 2.0, 4.0, 7.0], 3).unwrap(), 1.0);
        assert_eq!(efficiency_ratio(&[5.0, 9.0, 5.0], 2).unwrap(), 0.0);
        assert!(rel(efficiency_ratio(&[100.0, 110.0, 105.0], 2).unwrap(), 1.0 / 3.0));
        assert_eq!(efficiency_ratio(&[3.0, 3.0, 3.0], 2).unwrap(), 1.0);
        // only the trailing window counts
        assert_eq!(efficiency_ratio(&[0.0, 9.0, 5.0, 6.0], 1).unwrap(), 1.0);
        assert!(matches!(
            efficiency_ratio(&[1.0, 2.0], 2),
            Err(Error::InsufficientHistory { need: 3, have: 2 })
        ));
    }

    #[test]
    fn smoothing_factor_bounds() {
        let p = KamaParams { slow_len: 30, fast_len: 2, er_window: 2 };
        assert_eq!(smoothing_factor(0.0, &p), (2.0f64 / 31.0).powi(2));
        assert!(rel(smoothing_factor(1.0, &p), 4.0 / 9.0));
        // (1/3 * (2/3 - 2/31) + 2/31)^2 = (74/279)^2
        assert!(rel(smoothing_factor(1.0 / 3.0, &p), 0.07034853097981783));
    }

    #[test]
    fn constant_stream_is_a_fixed_point() {
        let p = KamaParams::default();
        let mut t = KamaTrack::new(700.0);
        for _ in 0..50 {
            assert_eq!(t.update(700.0, &p), 700.0);
        }
    }

    #[test]
    fn unit_smoothing_tracks_last_sample() {
        // l_min = 1 gives SC_fastest = 1; a monotone history gives ER = 1
        let p = KamaParams { slow_len: 10, fast_len: 1, er_window: 2 };
        let mut t = KamaTrack::new(0.0);
        for s in [3.0, 5.0, 8.0, 13.0] {
            assert_eq!(t.update(s, &p), s);
        }
    }

    #[test]
    fn kama_three_sample_stream() {
        // step-by-step: SC_f^2 twice (short history), then ER = 1/3
        let p = KamaParams { slow_len: 30, fast_len: 2, er_window: 2 };
        let mut t = KamaTrack::new(100.0);
        t.update(100.0, &p);
        t.update(110.0, &p);
        let got = t.update(105.0, &p);
        assert!(rel(got, 104.48352696165546), "{got}");
    }

    #[test]
    fn coding_predictor_ignores_observations() {
        let ladder = BitrateLadder::default();
        let mut p = BitratePredictor::Coding(ladder.clone());
        p.observe(1, 1.7e6);
        assert_eq!(p.predictions(), ladder.levels());
    }

    #[test]
    fn kama_state_starts_at_coding_bitrates() {
        let ladder = BitrateLadder::default();
        let mut s = KamaState::new(KamaParams::default(), ladder.clone());
        assert_eq!(s.predictions(), ladder.levels());
        // an observation exactly at the coding bitrate leaves every level put
        assert_eq!(s.observe(2, 1.2e6), ladder.levels());
    }

    #[test]
    fn throughput_wma() {
        let mut e = ThroughputEstimator::new(5);
        assert!(matches!(e.estimate(), Err(Error::ColdStart)));
        e.push(3e6);
        assert_eq!(e.estimate().unwrap(), 3e6);
        let mut c = ThroughputEstimator::new(5);
        for _ in 0..3 {
            c.push(1e6);
        }
        assert!(rel(c.estimate().unwrap(), 1e6));
        let mut r = ThroughputEstimator::new(3);
        for s in [9e6, 1e6, 2e6, 3e6] {
            r.push(s);
        }
        assert!(rel(r.estimate().unwrap(), 14e6 / 6.0));
    }

    #[test]
    fn prediction_error_metric() {
        assert_eq!(prediction_error(1000.0, 1000.0), 0.0);
        assert!(rel(prediction_error(1220.0, 1000.0), 0.22));
        assert!(rel(prediction_error(1258.0, 1000.0), 0.258));
        assert!(rel(prediction_error(780.0, 1000.0), 0.22));
    }

    proptest! {
        #[test]
        fn scaling_keeps_level_order(level in 0usize..4, observed in 1.0..1e8f64) {
            let s = scale_actual_bitrates(&BitrateLadder::default(), level, observed);
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn throughput_within_window_range(samples in prop::collection::vec(1e3..1e8f64, 1..12), w in 1usize..8) {
            let mut e = ThroughputEstimator::new(w);
            for &s in &samples {
                e.push(s);
            }
            let kept = &samples[samples.len().saturating_sub(w)..];
            let lo = kept.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = kept.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let est = e.estimate().unwrap();
            prop_assert!(est >= lo * (1.0 - 1e-12) && est <= hi * (1.0 + 1e-12));
        }
    }
}
