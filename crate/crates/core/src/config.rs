//! Scheme configuration: a flat `key = value` file where every key is
//! optional. Blank lines and `#` comments are ignored; unknown keys are
//! rejected.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `p_q` `p_r` `p_l` `p_s` `p_w` | 1, 1.5, 0.005, 1, 0.02 | QoE weights |
//! | `p_d` | `p_l` | latency weight used by the skip threshold |
//! | `b_min0` `b_target0` `b_max0` | 0.5, 1.5, 2.5 | target buffer 0 (s) |
//! | `b_min1` `b_target1` `b_max1` | 1.0, 2.0, 3.5 | target buffer 1 (s) |
//! | `kama_l_max` `kama_l_min` `kama_n1` | 30, 2, 10 | KAMA lengths |
//! | `throughput_window` | 5 | WMA window (segments) |
//! | `beta` | 1.0 | CDN accumulation predictive factor |
//! | `b_th` | `b_min0` | stall warning threshold (s) |
//! | `lambda` | 1.5 | skip-estimation latency factor |
//! | `frame_skipping` | true | enable latency-triggered skips |
//! | `scheme` | hysa | controller |
//! | `lookahead_horizon` | 5 | lookahead baseline horizon (segments) |
//! | `frame_duration_s` `gop_length_s` | 0.04, 1.0 | frame / GOP length |
//! | `ladder_kbps` | 500,850,1200,1850 | coding bitrates |

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::SchemeId;
use crate::playback::{TargetBuffer, TargetBufferBands};
use crate::predictor::KamaParams;
use crate::qoe::QoeWeights;
use crate::trace::{BitrateLadder, FrameTiming};

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub weights: QoeWeights,
    pub bands: TargetBufferBands,
    pub kama: KamaParams,
    pub throughput_window: usize,
    pub beta: f64,
    pub stall_threshold: f64,
    pub lambda: f64,
    pub frame_skipping: bool,
    pub scheme: SchemeId,
    pub lookahead_horizon: usize,
    pub timing: FrameTiming,
    pub ladder: BitrateLadder,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        let bands = TargetBufferBands::default();
        Self {
            weights: QoeWeights::default(),
            stall_threshold: bands.tuple(TargetBuffer::Zero).min,
            bands,
            kama: KamaParams::default(),
            throughput_window: 5,
            beta: 1.0,
            lambda: 1.5,
            frame_skipping: true,
            scheme: SchemeId::Hysa,
            lookahead_horizon: 5,
            timing: FrameTiming::default(),
            ladder: BitrateLadder::default(),
        }
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("{key}: `{v}` is not a number")))
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: `{v}` is not a non-negative integer")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: `{v}` is not a boolean"))),
    }
}

impl SchemeConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut zero = *cfg.bands.tuple(TargetBuffer::Zero);
        let mut one = *cfg.bands.tuple(TargetBuffer::One);
        let mut drop_latency = None;
        let mut stall_threshold = None;

        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let w = &mut cfg.weights;
            match key {
                "p_q" => w.quality = num(key, value)?,
                "p_r" => w.rebuffer = num(key, value)?,
                "p_l" => w.latency = num(key, value)?,
                "p_s" => w.skip = num(key, value)?,
                "p_w" => w.switch = num(key, value)?,
                "p_d" => drop_latency = Some(num(key, value)?),
                "b_min0" => zero.min = num(key, value)?,
                "b_target0" => zero.target = num(key, value)?,
                "b_max0" => zero.max = num(key, value)?,
                "b_min1" => one.min = num(key, value)?,
                "b_target1" => one.target = num(key, value)?,
                "b_max1" => one.max = num(key, value)?,
                "kama_l_max" => cfg.kama.slow_len = count(key, value)?,
                "kama_l_min" => cfg.kama.fast_len = count(key, value)?,
                "kama_n1" => cfg.kama.er_window = count(key, value)?,
                "throughput_window" => cfg.throughput_window = count(key, value)?,
                "beta" => cfg.beta = num(key, value)?,
                "b_th" => stall_threshold = Some(num(key, value)?),
                "lambda" => cfg.lambda = num(key, value)?,
                "frame_skipping" => cfg.frame_skipping = flag(key, value)?,
                "scheme" => cfg.scheme = value.parse()?,
                "lookahead_horizon" => cfg.lookahead_horizon = count(key, value)?,
                "frame_duration_s" => cfg.timing.frame_duration = num(key, value)?,
                "gop_length_s" => cfg.timing.gop_length = num(key, value)?,
                "ladder_kbps" => {
                    let kbps = value
                        .split(',')
                        .map(|v| num(key, v.trim()))
                        .collect::<Result<Vec<_>>>()?;
                    cfg.ladder = BitrateLadder::from_kbps(&kbps)?;
                }
                _ => return Err(Error::Config(format!("line {}: unknown key `{key}`", i + 1))),
            }
        }

        cfg.weights.drop_latency = drop_latency.unwrap_or(cfg.weights.latency);
        cfg.bands = TargetBufferBands::new(zero, one)?;
        cfg.stall_threshold = stall_threshold.unwrap_or(zero.min);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.kama.validate()?;
        self.timing.frames_per_gop()?;
        if self.throughput_window < 1 {
            return Err(Error::Config("throughput_window must be >= 1".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config("beta must be > 0".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Config("lambda must be > 0".into()));
        }
        if !(self.stall_threshold >= 0.0) {
            return Err(Error::Config("b_th must be >= 0".into()));
        }
        if self.lookahead_horizon < 1 {
            return Err(Error::Config("lookahead_horizon must be >= 1".into()));
        }
        if let SchemeId::Fixed(level) = self.scheme {
            if level >= self.ladder.len() {
                return Err(Error::Config(format!(
                    "fixed level {level} outside ladder of {}",
                    self.ladder.len()
                )));
            }
        }
        Ok(())
    }

    /// Serializes every field; `parse(to_config_string())` reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let w = &self.weights;
        let zero = self.bands.tuple(TargetBuffer::Zero);
        let one = self.bands.tuple(TargetBuffer::One);
        let ladder: Vec<String> = self
            .ladder
            .levels()
            .iter()
            .map(|v| (v / 1000.0).to_string())
            .collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("p_q", w.quality.to_string());
        kv("p_r", w.rebuffer.to_string());
        kv("p_l", w.latency.to_string());
        kv("p_s", w.skip.to_string());
        kv("p_w", w.switch.to_string());
        kv("p_d", w.drop_latency.to_string());
        kv("b_min0", zero.min.to_string());
        kv("b_target0", zero.target.to_string());
        kv("b_max0", zero.max.to_string());
        kv("b_min1", one.min.to_string());
        kv("b_target1", one.target.to_string());
        kv("b_max1", one.max.to_string());
        kv("kama_l_max", self.kama.slow_len.to_string());
        kv("kama_l_min", self.kama.fast_len.to_string());
        kv("kama_n1", self.kama.er_window.to_string());
        kv("throughput_window", self.throughput_window.to_string());
        kv("beta", self.beta.to_string());
        kv("b_th", self.stall_threshold.to_string());
        kv("lambda", self.lambda.to_string());
        kv("frame_skipping", self.frame_skipping.to_string());
        kv("scheme", self.scheme.to_string());
        kv("lookahead_horizon", self.lookahead_horizon.to_string());
        kv("frame_duration_s", self.timing.frame_duration.to_string());
        kv("gop_length_s", self.timing.gop_length.to_string());
        kv("ladder_kbps", ladder.join(","));
        s
    }

    pub fn with_scheme(&self, scheme: SchemeId) -> Self {
        Self {
            scheme,
            ..self.clone()
        }
    }
}
