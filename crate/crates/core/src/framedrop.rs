//! QoE-oriented frame skipping threshold.
//!
//! Skipping `N` frames at quality `V` costs their quality and skip terms,
//! `(p_q V + p_s) d_f N`, and is credited with `p_d λ l N` of avoided latency.
//! The latency at which the two balance no longer depends on `N`; above it the
//! client skips.

use crate::error::{Error, Result};
use crate::qoe::{QoeWeights, BPS_PER_KBPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipPolicy {
    pub latency_limit: f64,
    pub lambda: f64,
    pub drop_latency_weight: f64,
}

impl SkipPolicy {
    pub fn new(coding_bitrate: f64, frame_duration: f64, weights: &QoeWeights, lambda: f64) -> Result<Self> {
        Ok(Self {
            latency_limit: compute_skip_threshold(coding_bitrate, frame_duration, weights, lambda)?,
            lambda,
            drop_latency_weight: weights.drop_latency,
        })
    }
}

/// Latency threshold in seconds for a segment at `coding_bitrate` (bits/s).
pub fn compute_skip_threshold(
    coding_bitrate: f64,
    frame_duration: f64,
    weights: &QoeWeights,
    lambda: f64,
) -> Result<f64> {
    let divisor = weights.drop_latency * lambda;
    if !(divisor > 0.0) {
        return Err(Error::SkipDisabled);
    }
    let v = coding_bitrate / BPS_PER_KBPS;
    Ok((weights.quality * v + weights.skip) * frame_duration / divisor)
}

/// QoE given up by skipping `frames` frames at `coding_bitrate`.
pub fn skip_cost(coding_bitrate: f64, frame_duration: f64, weights: &QoeWeights, frames: f64) -> f64 {
    let v = coding_bitrate / BPS_PER_KBPS;
    weights.quality * v * frame_duration * frames + weights.skip * frame_duration * frames
}

/// QoE recovered by skipping `frames` frames when latency sits at `latency`.
pub fn skip_benefit(latency: f64, weights: &QoeWeights, lambda: f64, frames: f64) -> f64 {
    weights.drop_latency * lambda * latency * frames
}

pub fn should_skip(current_latency: f64, policy: &SkipPolicy) -> bool {
    latency_exceeds(current_latency, policy.latency_limit)
}

pub fn latency_exceeds(current_latency: f64, latency_limit: f64) -> bool {
    current_latency > latency_limit
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(quality: f64, skip: f64, drop_latency: f64) -> QoeWeights {
        QoeWeights {
            quality,
            skip,
            drop_latency,
            ..QoeWeights::default()
        }
    }

    #[test]
    fn zero_numerator() {
        assert_eq!(compute_skip_threshold(1.2e6, 0.04, &w(0.0, 0.0, 1.0), 1.5).unwrap(), 0.0);
    }

    #[test]
    fn inverse_in_lambda() {
        let ws = w(1.0, 1.0, 0.3);
        let a = compute_skip_threshold(850e3, 0.04, &ws, 1.0).unwrap();
        let b = compute_skip_threshold(850e3, 0.04, &ws, 2.0).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn worked_threshold() {
        // (1200 + 1) * 0.04 / (12 * 2)
        let t = compute_skip_threshold(1.2e6, 0.04, &w(1.0, 1.0, 12.0), 2.0).unwrap();
        assert!((t - 1201.0 * 0.04 / 24.0).abs() <= 1e-9 * t);
        assert!((t - 2.0017).abs() < 1e-4);
    }

    #[test]
    fn zero_divisor_is_an_error() {
        let err = compute_skip_threshold(1.2e6, 0.04, &w(1.0, 1.0, 0.0), 2.0).unwrap_err();
        assert!(matches!(err, Error::SkipDisabled));
        assert!(err.to_string().contains("skip disabled divisor"));
        assert!(compute_skip_threshold(1.2e6, 0.04, &w(1.0, 1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn skip_decision() {
        let p = SkipPolicy::new(1.2e6, 0.04, &w(1.0, 1.0, 12.0), 2.0).unwrap();
        assert!(!should_skip(0.0, &p));
        assert!(!should_skip(p.latency_limit, &p));
        assert!(should_skip(p.latency_limit + 1e-9, &p));
    }

    #[test]
    fn threshold_increases_with_bitrate_and_weights() {
        let ws = QoeWeights::default();
        let t = |v: f64, ws: &QoeWeights| compute_skip_threshold(v, 0.04, ws, 1.5).unwrap();
        let mut prev = 0.0;
        for v in [500e3, 850e3, 1200e3, 1850e3] {
            assert!(t(v, &ws) > prev);
            prev = t(v, &ws);
        }
        assert!(t(850e3, &w(2.0, 1.0, 0.005)) >= t(850e3, &ws));
        assert!(t(850e3, &w(1.0, 3.0, 0.005)) >= t(850e3, &ws));
    }
}
