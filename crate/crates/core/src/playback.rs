//! Target-buffer selection and the playback rate it implies.
//!
//! Two target-buffer tuples `[B_min, B_target, B_max]` are available. The
//! player plays at 0.95x below `B_min` of the active tuple, 1.05x at or above
//! `B_max`, and 1.0x in between; after a stall it resumes once the buffer
//! reaches `B_target`. The selector is chosen from the buffer occupancy alone.

use crate::error::{Error, Result};

pub const RATE_SLOW: f64 = 0.95;
pub const RATE_NORMAL: f64 = 1.0;
pub const RATE_FAST: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetBuffer {
    Zero = 0,
    One = 1,
}

impl TargetBuffer {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Self::Zero),
            1 => Some(Self::One),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferTuple {
    pub min: f64,
    pub target: f64,
    pub max: f64,
}

impl BufferTuple {
    /// Playback rate the player applies under this tuple at occupancy `buffer`.
    pub fn rate_at(&self, buffer: f64) -> f64 {
        if buffer < self.min {
            RATE_SLOW
        } else if buffer < self.max {
            RATE_NORMAL
        } else {
            RATE_FAST
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetBufferBands {
    tuples: [BufferTuple; 2],
}

impl TargetBufferBands {
    pub fn new(zero: BufferTuple, one: BufferTuple) -> Result<Self> {
        let chain = [zero.min, one.min, zero.target, one.target, zero.max, one.max];
        if chain.iter().any(|b| !b.is_finite() || *b < 0.0) || chain.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "target buffers must satisfy b_min0 < b_min1 < b_target0 < b_target1 < b_max0 < b_max1, got {chain:?}"
            )));
        }
        Ok(Self { tuples: [zero, one] })
    }

    pub fn tuple(&self, sel: TargetBuffer) -> &BufferTuple {
        &self.tuples[sel.index()]
    }

    pub fn rate_for(&self, sel: TargetBuffer, buffer: f64) -> f64 {
        self.tuple(sel).rate_at(buffer)
    }
}

impl Default for TargetBufferBands {
    fn default() -> Self {
        Self {
            tuples: [
                BufferTuple { min: 0.5, target: 1.5, max: 2.5 },
                BufferTuple { min: 1.0, target: 2.0, max: 3.5 },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaybackDecision {
    pub target_buffer: TargetBuffer,
    pub rate: f64,
    pub resume_threshold: f64,
}

/// Selector 1 on `[B_min^0, B_max^0)`, else 0; the rate is 0.95 below
/// `B_min^1`, 1.0 on `[B_min^1, B_max^0)` and 1.05 above.
pub fn decide_playback(bands: &TargetBufferBands, buffer: f64) -> PlaybackDecision {
    let zero = bands.tuple(TargetBuffer::Zero);
    let one = bands.tuple(TargetBuffer::One);
    let target_buffer = if buffer >= zero.min && buffer < zero.max {
        TargetBuffer::One
    } else {
        TargetBuffer::Zero
    };
    let rate = if buffer < one.min {
        RATE_SLOW
    } else if buffer < zero.max {
        RATE_NORMAL
    } else {
        RATE_FAST
    };
    PlaybackDecision {
        target_buffer,
        rate,
        resume_threshold: bands.tuple(target_buffer).target,
    }
}

pub fn playback_rate_during_segment(decision: &PlaybackDecision, buffer_nonempty: bool) -> f64 {
    if buffer_nonempty {
        decision.rate
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_buffer_is_case_one() {
        let d = decide_playback(&TargetBufferBands::default(), 0.0);
        assert_eq!(d.target_buffer, TargetBuffer::Zero);
        assert_eq!(d.rate, RATE_SLOW);
        assert_eq!(d.resume_threshold, 1.5);
    }

    #[test]
    fn reasonable_buffer_is_case_three() {
        // midway between B_min^1 = 1.0 and B_max^0 = 2.5
        let d = decide_playback(&TargetBufferBands::default(), 1.75);
        assert_eq!(d.target_buffer, TargetBuffer::One);
        assert_eq!(d.rate, RATE_NORMAL);
        assert_eq!(d.resume_threshold, 2.0);
    }

    #[test]
    fn boundaries_follow_half_open_intervals() {
        let b = TargetBufferBands::default();
        let at = |x| {
            let d = decide_playback(&b, x);
            (d.target_buffer.index(), d.rate)
        };
        assert_eq!(at(0.5), (1, RATE_SLOW));
        assert_eq!(at(1.0), (1, RATE_NORMAL));
        assert_eq!(at(2.5), (0, RATE_FAST));
        assert_eq!(at(3.5), (0, RATE_FAST));
        assert_eq!(at(100.0), (0, RATE_FAST));
    }

    #[test]
    fn rate_during_segment() {
        let d = decide_playback(&TargetBufferBands::default(), 3.0);
        assert_eq!(playback_rate_during_segment(&d, true), RATE_FAST);
        assert_eq!(playback_rate_during_segment(&d, false), 0.0);
    }

    #[test]
    fn band_ordering_is_validated() {
        let zero = BufferTuple { min: 0.5, target: 1.5, max: 2.5 };
        let one = BufferTuple { min: 1.0, target: 2.0, max: 3.5 };
        assert!(TargetBufferBands::new(zero, one).is_ok());
        assert!(TargetBufferBands::new(one, zero).is_err());
        let overlap = BufferTuple { min: 1.0, target: 1.4, max: 3.5 };
        assert!(TargetBufferBands::new(zero, overlap).is_err());
    }

    #[test]
    fn decision_rate_matches_chosen_band_and_is_monotone() {
        let b = TargetBufferBands::default();
        let mut last = 0.0;
        for i in 0..=10_000 {
            let x = i as f64 * 7.0 / 10_000.0;
            let d = decide_playback(&b, x);
            assert_eq!(d.rate, b.rate_for(d.target_buffer, x), "buffer {x}");
            assert!(d.rate >= last);
            last = d.rate;
        }
    }
}
