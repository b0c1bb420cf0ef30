//! Video and network traces: the only external data entering the simulator.
//!
//! Both formats are CSV with fixed headers:
//!
//! ```text
//! frame_index,arrival_time_s,size_bits_L0,...,size_bits_L{M-1}
//! time_s,bandwidth_bps
//! ```
//!
//! GOP boundaries in a video trace are positional: every `gop_length /
//! frame_duration` rows form one GOP, and a trailing partial GOP is rejected.

use std::fmt::Write as _;
use std::io::Read;

use crate::error::{Error, Result};

/// Coding bitrates of the available representations, bits per second.
#[derive(Debug, Clone, PartialEq)]
pub struct BitrateLadder(Vec<f64>);

impl BitrateLadder {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::Ladder(format!(
                "need at least 2 levels, got {}",
                levels.len()
            )));
        }
        if levels.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Ladder("bitrates must be positive".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Ladder("bitrates must be strictly increasing".into()));
        }
        Ok(Self(levels))
    }

    pub fn from_kbps(kbps: &[f64]) -> Result<Self> {
        Self::new(kbps.iter().map(|k| k * 1000.0).collect())
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bitrate(&self, level: usize) -> f64 {
        self.0[level]
    }

    pub fn top(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl Default for BitrateLadder {
    fn default() -> Self {
        Self(vec![500e3, 850e3, 1200e3, 1850e3])
    }
}

/// Frame and GOP durations. Not carried by the CSV itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTiming {
    pub frame_duration: f64,
    pub gop_length: f64,
}

impl FrameTiming {
    pub fn new(frame_duration: f64, gop_length: f64) -> Result<Self> {
        let t = Self {
            frame_duration,
            gop_length,
        };
        t.frames_per_gop()?;
        Ok(t)
    }

    /// Number of frames per GOP; `gop_length` must be an integer multiple of
    /// `frame_duration`.
    pub fn frames_per_gop(&self) -> Result<usize> {
        if !(self.frame_duration > 0.0) || !(self.gop_length > 0.0) {
            return Err(Error::Config(
                "frame_duration_s and gop_length_s must be positive".into(),
            ));
        }
        let ratio = self.gop_length / self.frame_duration;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "gop_length_s {} is not an integer multiple of frame_duration_s {}",
                self.gop_length, self.frame_duration
            )));
        }
        Ok(n as usize)
    }
}

impl Default for FrameTiming {
    fn default() -> Self {
        Self {
            frame_duration: 0.04,
            gop_length: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub index: usize,
    /// Wall-clock second at which the frame becomes available at the CDN.
    pub arrival_time: f64,
    /// Size in bits at each quality level.
    pub sizes: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoTrace {
    timing: FrameTiming,
    frames_per_gop: usize,
    ladder: BitrateLadder,
    frames: Vec<FrameRecord>,
}

impl VideoTrace {
    /// Builds a trace from in-memory frames, applying the same validation as
    /// [`parse_video_trace`].
    pub fn new(timing: FrameTiming, ladder: BitrateLadder, frames: Vec<FrameRecord>) -> Result<Self> {
        let frames_per_gop = timing.frames_per_gop()?;
        if frames.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let m = ladder.len();
        for (i, f) in frames.iter().enumerate() {
            if f.index != i {
                return Err(Error::Malformed {
                    line: i as u64 + 2,
                    msg: format!("frame_index {} out of sequence, expected {i}", f.index),
                });
            }
            if f.sizes.len() != m {
                return Err(Error::LevelCountMismatch {
                    expected: m,
                    found: f.sizes.len(),
                });
            }
            if !f.arrival_time.is_finite() || f.arrival_time < 0.0 {
                return Err(Error::Malformed {
                    line: i as u64 + 2,
                    msg: "arrival_time_s must be a finite non-negative number".into(),
                });
            }
            if f.sizes.iter().any(|&s| s == 0) {
                return Err(Error::Malformed {
                    line: i as u64 + 2,
                    msg: "frame sizes must be positive".into(),
                });
            }
            if i > 0 && f.arrival_time < frames[i - 1].arrival_time {
                return Err(Error::NonMonotoneArrival { index: i });
            }
        }
        let trailing = frames.len() % frames_per_gop;
        if trailing != 0 {
            return Err(Error::IncompleteGop {
                trailing,
                per_gop: frames_per_gop,
            });
        }
        let trace = Self {
            timing,
            frames_per_gop,
            ladder,
            frames,
        };
        for gop in 0..trace.segment_count() {
            for level in 1..m {
                if trace.segment_bits(gop, level) <= trace.segment_bits(gop, level - 1) {
                    return Err(Error::NonIncreasingLevels { gop, level });
                }
            }
        }
        Ok(trace)
    }

    pub fn timing(&self) -> FrameTiming {
        self.timing
    }

    pub fn frame_duration(&self) -> f64 {
        self.timing.frame_duration
    }

    pub fn gop_length(&self) -> f64 {
        self.timing.gop_length
    }

    pub fn frames_per_gop(&self) -> usize {
        self.frames_per_gop
    }

    pub fn ladder(&self) -> &BitrateLadder {
        &self.ladder
    }

    pub fn levels(&self) -> usize {
        self.ladder.len()
    }

    pub fn frames(&self) -> &[FrameRecord] {
        &self.frames
    }

    pub fn segment_count(&self) -> usize {
        self.frames.len() / self.frames_per_gop
    }

    pub fn gop(&self, segment: usize) -> &[FrameRecord] {
        let start = segment * self.frames_per_gop;
        &self.frames[start..start + self.frames_per_gop]
    }

    /// Total bits of GOP `segment` at `level`. Panics if either is out of range.
    pub fn segment_bits(&self, segment: usize, level: usize) -> u64 {
        self.gop(segment).iter().map(|f| f.sizes[level]).sum()
    }

    /// Actual bitrate of a segment: summed frame sizes over the GOP duration.
    pub fn segment_actual_bitrate(&self, segment: usize, level: usize) -> Result<f64> {
        if segment >= self.segment_count() {
            return Err(Error::OutOfRange {
                what: "segment",
                index: segment,
                len: self.segment_count(),
            });
        }
        if level >= self.levels() {
            return Err(Error::OutOfRange {
                what: "level",
                index: level,
                len: self.levels(),
            });
        }
        Ok(self.segment_bits(segment, level) as f64 / self.timing.gop_length)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_index,arrival_time_s");
        for m in 0..self.levels() {
            write!(out, ",size_bits_L{m}").unwrap();
        }
        out.push('\n');
        for f in &self.frames {
            write!(out, "{},{}", f.index, f.arrival_time).unwrap();
            for s in &f.sizes {
                write!(out, ",{s}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    rec.get(i)
        .ok_or_else(|| Error::Malformed {
            line,
            msg: format!("missing {name}"),
        })?
        .parse()
        .map_err(|_| Error::Malformed {
            line,
            msg: format!("bad {name} `{}`", &rec[i]),
        })
}

/// Parses a video trace CSV. The frame timing and coding-bitrate ladder come
/// from the scheme configuration; the header must declare exactly as many
/// `size_bits_L*` columns as the ladder has levels.
pub fn parse_video_trace<R: Read>(
    source: R,
    timing: FrameTiming,
    ladder: BitrateLadder,
) -> Result<VideoTrace> {
    let mut rdr = csv_reader(source);
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[0] != "frame_index" || &header[1] != "arrival_time_s" {
        return Err(Error::Malformed {
            line: 1,
            msg: "expected header frame_index,arrival_time_s,size_bits_L0,...".into(),
        });
    }
    for (m, name) in header.iter().skip(2).enumerate() {
        if name != format!("size_bits_L{m}") {
            return Err(Error::Malformed {
                line: 1,
                msg: format!("column {} should be size_bits_L{m}, found `{name}`", m + 2),
            });
        }
    }
    let levels = header.len() - 2;
    if levels != ladder.len() {
        return Err(Error::LevelCountMismatch {
            expected: ladder.len(),
            found: levels,
        });
    }

    let mut frames = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Malformed {
                line,
                msg: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let index: usize = field(&rec, 0, "frame_index")?;
        let arrival_time: f64 = field(&rec, 1, "arrival_time_s")?;
        let sizes = (0..levels)
            .map(|m| field::<u64>(&rec, m + 2, "size_bits"))
            .collect::<Result<Vec<_>>>()?;
        frames.push(FrameRecord {
            index,
            arrival_time,
            sizes,
        });
    }
    VideoTrace::new(timing, ladder, frames)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthSample {
    pub start: f64,
    pub bandwidth: f64,
}

/// Piecewise-constant downlink bandwidth; the last sample extends forever.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTrace {
    samples: Vec<BandwidthSample>,
}

impl NetworkTrace {
    pub fn new(samples: Vec<BandwidthSample>) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyTrace)?;
        if first.start != 0.0 {
            return Err(Error::TraceStart);
        }
        for (i, s) in samples.iter().enumerate() {
            let line = i as u64 + 2;
            if !(s.bandwidth > 0.0) || !s.bandwidth.is_finite() {
                return Err(Error::NonPositiveBandwidth { line });
            }
            if i > 0 && !(s.start > samples[i - 1].start) {
                return Err(Error::NonIncreasingTime { line });
            }
        }
        Ok(Self { samples })
    }

    pub fn constant(bandwidth: f64) -> Result<Self> {
        Self::new(vec![BandwidthSample {
            start: 0.0,
            bandwidth,
        }])
    }

    pub fn samples(&self) -> &[BandwidthSample] {
        &self.samples
    }

    fn sample_index(&self, t: f64) -> usize {
        // first sample starts at 0, so the partition point is at least 1
        self.samples.partition_point(|s| s.start <= t).max(1) - 1
    }

    /// Bandwidth in effect at time `t` (bits per second).
    pub fn bandwidth_at(&self, t: f64) -> f64 {
        self.samples[self.sample_index(t)].bandwidth
    }

    /// Wall-clock time at which a transfer of `bits` started at `start`
    /// completes, integrating the piecewise-constant bandwidth exactly.
    pub fn transfer_end(&self, start: f64, bits: f64) -> f64 {
        let mut i = self.sample_index(start);
        let mut t = start;
        let mut remaining = bits;
        loop {
            let bw = self.samples[i].bandwidth;
            match self.samples.get(i + 1) {
                Some(next) if bw * (next.start - t) < remaining => {
                    remaining -= bw * (next.start - t);
                    t = next.start;
                    i += 1;
                }
                _ => return t + remaining / bw,
            }
        }
    }

    pub fn mean_bandwidth(&self, horizon: f64) -> f64 {
        let mut total = 0.0;
        for (i, s) in self.samples.iter().enumerate() {
            if s.start >= horizon {
                break;
            }
            let end = self
                .samples
                .get(i + 1)
                .map_or(horizon, |n| n.start.min(horizon));
            total += s.bandwidth * (end - s.start);
        }
        total / horizon
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,bandwidth_bps\n");
        for s in &self.samples {
            writeln!(out, "{},{}", s.start, s.bandwidth).unwrap();
        }
        out
    }
}

pub fn parse_network_trace<R: Read>(source: R) -> Result<NetworkTrace> {
    let mut rdr = csv_reader(source);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "time_s" || &header[1] != "bandwidth_bps" {
        return Err(Error::Malformed {
            line: 1,
            msg: "expected header time_s,bandwidth_bps".into(),
        });
    }
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Malformed {
                line: rec.position().map_or(0, |p| p.line()),
                msg: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        samples.push(BandwidthSample {
            start: field(&rec, 0, "time_s")?,
            bandwidth: field(&rec, 1, "bandwidth_bps")?,
        });
    }
    NetworkTrace::new(samples)
}
