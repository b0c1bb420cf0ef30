//! Five-term linear QoE model.
//!
//! Per frame `k`:
//!
//! ```text
//! p_q * V_k * d_f  -  p_r * t_r  -  p_l * l_k  -  p_s * t_s  -  p_w * |V_k - V_{k-1}|
//! ```
//!
//! Bitrates are converted to kbps here and only here; every other module works
//! in bits per second. Durations are seconds.

use std::iter::Sum;
use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};
use crate::sim::SimulationLog;

pub const BPS_PER_KBPS: f64 = 1000.0;

/// QoE weight factors.
///
/// `quality` multiplies kbps·s of played video, `switch` multiplies kbps of
/// bitrate change between consecutive frames, `rebuffer` / `skip` multiply
/// seconds, and `latency` multiplies seconds of latency per frame.
/// `drop_latency` is the latency weight used by the frame-drop threshold; it
/// defaults to `latency` but is a separate knob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoeWeights {
    pub quality: f64,
    pub rebuffer: f64,
    pub latency: f64,
    pub skip: f64,
    pub switch: f64,
    pub drop_latency: f64,
}

impl Default for QoeWeights {
    fn default() -> Self {
        Self {
            quality: 1.0,
            rebuffer: 1.5,
            latency: 0.005,
            skip: 1.0,
            switch: 0.02,
            drop_latency: 0.005,
        }
    }
}

impl QoeWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.quality,
            self.rebuffer,
            self.latency,
            self.skip,
            self.switch,
            self.drop_latency,
        ];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Config("QoE weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Observed quantities for one frame. Bitrates in bits per second.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameOutcome {
    pub coding_bitrate: f64,
    pub rebuffer_time: f64,
    pub latency: f64,
    pub skipped_length: f64,
    pub prev_coding_bitrate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QoeBreakdown {
    pub quality: f64,
    pub rebuf: f64,
    pub latency: f64,
    pub skip: f64,
    pub switch: f64,
    pub overall: f64,
}

impl QoeBreakdown {
    pub fn from_components(quality: f64, rebuf: f64, latency: f64, skip: f64, switch: f64) -> Self {
        Self {
            quality,
            rebuf,
            latency,
            skip,
            switch,
            overall: quality + rebuf + latency + skip + switch,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_components(
            self.quality * factor,
            self.rebuf * factor,
            self.latency * factor,
            self.skip * factor,
            self.switch * factor,
        )
    }
}

impl Add for QoeBreakdown {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::from_components(
            self.quality + rhs.quality,
            self.rebuf + rhs.rebuf,
            self.latency + rhs.latency,
            self.skip + rhs.skip,
            self.switch + rhs.switch,
        )
    }
}

impl AddAssign for QoeBreakdown {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for QoeBreakdown {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut acc = [0.0; 5];
        for b in iter {
            acc[0] += b.quality;
            acc[1] += b.rebuf;
            acc[2] += b.latency;
            acc[3] += b.skip;
            acc[4] += b.switch;
        }
        Self::from_components(acc[0], acc[1], acc[2], acc[3], acc[4])
    }
}

pub fn score_frame(w: &QoeWeights, o: &FrameOutcome, frame_duration: f64) -> QoeBreakdown {
    let v = o.coding_bitrate / BPS_PER_KBPS;
    let v_prev = o.prev_coding_bitrate / BPS_PER_KBPS;
    QoeBreakdown::from_components(
        w.quality * v * frame_duration,
        -w.rebuffer * o.rebuffer_time,
        -w.latency * o.latency,
        -w.skip * o.skipped_length,
        -w.switch * (v - v_prev).abs(),
    )
}

pub fn score_outcomes(
    w: &QoeWeights,
    outcomes: &[FrameOutcome],
    frame_duration: f64,
) -> Result<QoeBreakdown> {
    if outcomes.is_empty() {
        return Err(Error::EmptyLog);
    }
    Ok(outcomes
        .iter()
        .map(|o| score_frame(w, o, frame_duration))
        .sum())
}

/// Scores every frame of a run: one outcome per downloaded or skipped frame.
pub fn score_run(w: &QoeWeights, log: &SimulationLog) -> Result<QoeBreakdown> {
    score_outcomes(w, &log.frame_outcomes(), log.frame_duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DF: f64 = 0.04;

    fn weights() -> QoeWeights {
        QoeWeights {
            quality: 1.0,
            rebuffer: 1.5,
            latency: 0.005,
            skip: 1.0,
            switch: 0.02,
            drop_latency: 0.005,
        }
    }

    #[test]
    fn zero_outcome_scores_zero() {
        let b = score_frame(&weights(), &FrameOutcome::default(), DF);
        assert_eq!(b, QoeBreakdown::default());
    }

    #[test]
    fn no_switch_penalty_for_equal_bitrates() {
        let o = FrameOutcome {
            coding_bitrate: 850e3,
            prev_coding_bitrate: 850e3,
            ..Default::default()
        };
        assert_eq!(score_frame(&weights(), &o, DF).switch, 0.0);
    }

    #[test]
    fn term_by_term() {
        // 1200 kbps * 0.04 s = 48; 1.5 * 0.5; 0.005 * 2; 0.02 * 350
        let o = FrameOutcome {
            coding_bitrate: 1.2e6,
            rebuffer_time: 0.5,
            latency: 2.0,
            skipped_length: 0.0,
            prev_coding_bitrate: 850e3,
        };
        let b = score_frame(&weights(), &o, DF);
        let close = |a: f64, e: f64| (a - e).abs() <= 1e-9 * e.abs().max(1.0);
        assert!(close(b.quality, 48.0));
        assert!(close(b.rebuf, -0.75));
        assert!(close(b.latency, -0.01));
        assert_eq!(b.skip, 0.0);
        assert!(close(b.switch, -7.0));
        assert!(close(b.overall, 48.0 - 0.75 - 0.01 - 7.0));
    }

    #[test]
    fn empty_run_is_an_error() {
        assert!(matches!(
            score_outcomes(&weights(), &[], DF),
            Err(Error::EmptyLog)
        ));
    }

    fn outcome() -> impl Strategy<Value = FrameOutcome> {
        (0.0..3e6f64, 0.0..2.0f64, 0.0..20.0f64, 0.0..1.0f64, 0.0..3e6f64).prop_map(
            |(v, r, l, s, p)| FrameOutcome {
                coding_bitrate: v,
                rebuffer_time: r,
                latency: l,
                skipped_length: s,
                prev_coding_bitrate: p,
            },
        )
    }

    proptest! {
        #[test]
        fn single_frame_run_equals_frame_score(o in outcome()) {
            let run = score_outcomes(&weights(), &[o], DF).unwrap();
            prop_assert_eq!(run, score_frame(&weights(), &o, DF));
        }

        #[test]
        fn linear_in_concatenation(a in prop::collection::vec(outcome(), 1..40),
                                   b in prop::collection::vec(outcome(), 1..40)) {
            let w = weights();
            let joined: Vec<_> = a.iter().chain(&b).copied().collect();
            let whole = score_outcomes(&w, &joined, DF).unwrap();
            let parts = score_outcomes(&w, &a, DF).unwrap() + score_outcomes(&w, &b, DF).unwrap();
            let tol = 1e-9 * (1.0 + whole.quality.abs() + whole.overall.abs());
            prop_assert!((whole.overall - parts.overall).abs() <= tol);
            prop_assert!((whole.quality - parts.quality).abs() <= tol);

            let doubled: Vec<_> = a.iter().chain(&a).copied().collect();
            let twice = score_outcomes(&w, &doubled, DF).unwrap();
            let single = score_outcomes(&w, &a, DF).unwrap().scale(2.0);
            prop_assert!((twice.overall - single.overall).abs() <= tol);
            prop_assert!((twice.switch - single.switch).abs() <= tol);
        }

        #[test]
        fn penalties_are_monotone(o in outcome(), bump in 0.0..5.0f64) {
            let w = weights();
            let base = score_frame(&w, &o, DF).overall;
            let worse = [
                FrameOutcome { rebuffer_time: o.rebuffer_time + bump, ..o },
                FrameOutcome { latency: o.latency + bump, ..o },
                FrameOutcome { skipped_length: o.skipped_length + bump, ..o },
            ];
            for x in worse {
                prop_assert!(score_frame(&w, &x, DF).overall <= base);
            }
            // move the previous bitrate away from the current one
            let more_switch = if o.coding_bitrate >= o.prev_coding_bitrate {
                FrameOutcome { prev_coding_bitrate: (o.prev_coding_bitrate - bump * 1e5).max(0.0), ..o }
            } else {
                FrameOutcome { prev_coding_bitrate: o.prev_coding_bitrate + bump * 1e5, ..o }
            };
            prop_assert!(score_frame(&w, &more_switch, DF).switch <= score_frame(&w, &o, DF).switch);
            let better = FrameOutcome { coding_bitrate: o.coding_bitrate + bump * 1e5, ..o };
            prop_assert!(score_frame(&w, &better, DF).quality >= score_frame(&w, &o, DF).quality);
        }

        #[test]
        fn overall_is_sum_of_components(o in prop::collection::vec(outcome(), 1..20)) {
            let b = score_outcomes(&weights(), &o, DF).unwrap();
            prop_assert_eq!(b.overall, b.quality + b.rebuf + b.latency + b.skip + b.switch);
            prop_assert!(b.rebuf <= 0.0 && b.latency <= 0.0 && b.skip <= 0.0 && b.switch <= 0.0);
        }
    }
}
