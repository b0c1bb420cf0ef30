//! Controllers, batch runs and result summaries.
//!
//! Every scheme runs on the same simulator and shares the playback-rate and
//! frame-skip modules; schemes differ only in how they pick the quality level.
//!
//! * `hysa`: KAMA bitrate prediction + latency-constrained selection.
//! * `hysa-n`: the same with coding bitrates standing in for predictions.
//! * `lookahead`: simplified horizon search. Enumerates every level sequence
//!   over `H` segments using coding bitrates and the WMA throughput, scores
//!   quality, rebuffering and switching, and takes the first level of the best
//!   sequence (the first in lexicographic order on ties).
//! * `buffer-threshold`: simplified dynamic-threshold rule, see
//!   [`BufferThresholdController`].
//! * `fixed:<level>`: always the same level.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::bitrate::{select_quality, CdnState, LatencyModel};
use crate::config::SchemeConfig;
use crate::error::{Error, Result};
use crate::framedrop::compute_skip_threshold;
use crate::playback::{decide_playback, TargetBuffer, TargetBufferBands};
use crate::predictor::{prediction_error, BitratePredictor, KamaState, ThroughputEstimator};
use crate::qoe::{score_run, QoeBreakdown, QoeWeights, BPS_PER_KBPS};
use crate::sim::{self, Controller, ControllerDecision, Decision, Observation, SimulationLog};
use crate::trace::{parse_network_trace, parse_video_trace, BitrateLadder, NetworkTrace, VideoTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    Hysa,
    HysaN,
    Lookahead,
    BufferThreshold,
    Fixed(usize),
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hysa => f.write_str("hysa"),
            Self::HysaN => f.write_str("hysa-n"),
            Self::Lookahead => f.write_str("lookahead"),
            Self::BufferThreshold => f.write_str("buffer-threshold"),
            Self::Fixed(l) => write!(f, "fixed:{l}"),
        }
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "hysa" => Ok(Self::Hysa),
            "hysa-n" | "hysa_n" => Ok(Self::HysaN),
            "lookahead" | "mpc" => Ok(Self::Lookahead),
            "buffer-threshold" | "buffer_threshold" | "dttb" => Ok(Self::BufferThreshold),
            other => {
                let level = other
                    .strip_prefix("fixed:")
                    .or_else(|| other.strip_prefix("fixed(").and_then(|r| r.strip_suffix(')')))
                    .and_then(|l| l.parse().ok())
                    .ok_or_else(|| Error::UnknownScheme(s.to_string()))?;
                Ok(Self::Fixed(level))
            }
        }
    }
}

pub fn parse_scheme_list(list: &str) -> Result<Vec<SchemeId>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Target-buffer and skip-threshold decisions shared by every scheme.
#[derive(Debug, Clone)]
struct LatencyControls {
    bands: TargetBufferBands,
    weights: QoeWeights,
    lambda: f64,
    frame_skipping: bool,
    frame_duration: f64,
}

impl LatencyControls {
    fn new(cfg: &SchemeConfig) -> Self {
        Self {
            bands: cfg.bands,
            weights: cfg.weights,
            lambda: cfg.lambda,
            frame_skipping: cfg.frame_skipping,
            frame_duration: cfg.timing.frame_duration,
        }
    }

    fn decision(&self, quality: usize, coding_bitrate: f64, target_buffer: TargetBuffer) -> Result<ControllerDecision> {
        let latency_limit = if self.frame_skipping {
            compute_skip_threshold(coding_bitrate, self.frame_duration, &self.weights, self.lambda)?
        } else {
            f64::INFINITY
        };
        Ok(ControllerDecision {
            quality,
            target_buffer,
            latency_limit,
        })
    }
}

/// The hybrid controller; with [`BitratePredictor::Coding`] it is HYSA-N.
#[derive(Debug, Clone)]
pub struct HysaController {
    predictor: BitratePredictor,
    throughput: ThroughputEstimator,
    controls: LatencyControls,
    model: LatencyModel,
    ladder: BitrateLadder,
    prev_latest_cdn_frame: Option<usize>,
    prev_speed: f64,
}

impl HysaController {
    pub fn new(cfg: &SchemeConfig, predictor: BitratePredictor) -> Self {
        Self {
            predictor,
            throughput: ThroughputEstimator::new(cfg.throughput_window),
            controls: LatencyControls::new(cfg),
            model: LatencyModel {
                beta: cfg.beta,
                frame_duration: cfg.timing.frame_duration,
                segment_duration: cfg.timing.gop_length,
                stall_threshold: cfg.stall_threshold,
            },
            ladder: cfg.ladder.clone(),
            prev_latest_cdn_frame: None,
            // live source: one second of video per second
            prev_speed: 1.0,
        }
    }

    pub fn with_kama(cfg: &SchemeConfig) -> Self {
        Self::new(cfg, BitratePredictor::Kama(KamaState::new(cfg.kama, cfg.ladder.clone())))
    }

    pub fn with_coding_bitrates(cfg: &SchemeConfig) -> Self {
        Self::new(cfg, BitratePredictor::Coding(cfg.ladder.clone()))
    }
}

impl Controller for HysaController {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Decision> {
        if let Some(last) = obs.last {
            self.predictor.observe(last.level, last.actual_bitrate);
            self.throughput.push(last.throughput);
        }
        let predictions = self.predictor.predictions();
        let playback = decide_playback(&self.controls.bands, obs.buffer);

        let mut level = 0;
        let mut estimate = None;
        if let (Some(last), Ok(throughput), Some(latest)) =
            (obs.last, self.throughput.estimate(), obs.latest_cdn_frame)
        {
            let state = CdnState {
                latest_cdn_frame: latest,
                prev_latest_cdn_frame: self.prev_latest_cdn_frame.unwrap_or(latest),
                last_downloaded_frame: obs.next_frame.saturating_sub(1),
                last_download_time: last.elapsed,
                prev_speed: self.prev_speed,
            };
            let choice = select_quality(
                &self.model,
                &predictions,
                throughput,
                obs.buffer,
                playback.rate,
                &state,
            );
            level = choice.level;
            estimate = Some(choice.estimates[level]);
            self.prev_speed = state.speed(self.model.frame_duration);
        }
        self.prev_latest_cdn_frame = obs.latest_cdn_frame;

        Ok(Decision {
            decision: self
                .controls
                .decision(level, self.ladder.bitrate(level), playback.target_buffer)?,
            predictions,
            estimate,
        })
    }
}

/// Score of one candidate sequence under the lookahead forward model. Levels
/// index `ladder`; bitrates are scored in kbps like the QoE model.
pub fn lookahead_score(
    ladder: &[f64],
    sequence: &[usize],
    throughput: f64,
    buffer: f64,
    rate: f64,
    prev_level: Option<usize>,
    segment_duration: f64,
    weights: &QoeWeights,
) -> f64 {
    let mut b = buffer;
    let mut prev = prev_level.map(|l| ladder[l]);
    let mut score = 0.0;
    for &m in sequence {
        let v = ladder[m];
        let t = v * segment_duration / throughput;
        let rebuf = (t - b / rate).max(0.0);
        b = (b - rate * t).max(0.0) + segment_duration;
        score += weights.quality * v / BPS_PER_KBPS * segment_duration - weights.rebuffer * rebuf;
        if let Some(p) = prev {
            score -= weights.switch * (v - p).abs() / BPS_PER_KBPS;
        }
        prev = Some(v);
    }
    score
}

/// First level of the best-scoring sequence of length `horizon`.
pub fn lookahead_plan(
    ladder: &[f64],
    horizon: usize,
    throughput: f64,
    buffer: f64,
    rate: f64,
    prev_level: Option<usize>,
    segment_duration: f64,
    weights: &QoeWeights,
) -> usize {
    let m = ladder.len();
    let mut seq = vec![0usize; horizon];
    let mut best = (f64::NEG_INFINITY, 0);
    loop {
        let s = lookahead_score(ladder, &seq, throughput, buffer, rate, prev_level, segment_duration, weights);
        if s > best.0 {
            best = (s, seq[0]);
        }
        // odometer increment, last position fastest
        let mut i = horizon;
        loop {
            if i == 0 {
                return best.1;
            }
            i -= 1;
            seq[i] += 1;
            if seq[i] < m {
                break;
            }
            seq[i] = 0;
        }
    }
}

#[derive(Debug, Clone)]
pub struct LookaheadController {
    horizon: usize,
    throughput: ThroughputEstimator,
    controls: LatencyControls,
    ladder: BitrateLadder,
    segment_duration: f64,
    last_level: Option<usize>,
}

impl LookaheadController {
    pub fn new(cfg: &SchemeConfig) -> Self {
        Self {
            horizon: cfg.lookahead_horizon,
            throughput: ThroughputEstimator::new(cfg.throughput_window),
            controls: LatencyControls::new(cfg),
            ladder: cfg.ladder.clone(),
            segment_duration: cfg.timing.gop_length,
            last_level: None,
        }
    }
}

impl Controller for LookaheadController {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Decision> {
        if let Some(last) = obs.last {
            self.throughput.push(last.throughput);
        }
        let playback = decide_playback(&self.controls.bands, obs.buffer);
        let level = match self.throughput.estimate() {
            Ok(thr) => lookahead_plan(
                self.ladder.levels(),
                self.horizon,
                thr,
                obs.buffer,
                playback.rate,
                self.last_level,
                self.segment_duration,
                &self.controls.weights,
            ),
            Err(_) => 0,
        };
        self.last_level = Some(level);
        Ok(Decision {
            decision: self
                .controls
                .decision(level, self.ladder.bitrate(level), playback.target_buffer)?,
            predictions: self.ladder.levels().to_vec(),
            estimate: None,
        })
    }
}

/// Simplified dynamic-buffer-threshold rule.
///
/// With throughput estimate `C` and top coding bitrate `V_top`:
/// the lower threshold is `b_min0`, the upper threshold is
/// `b_target0 * clamp(V_top / C, 0.5, 2)`, and the sustainable level `s` is
/// the highest level whose coding bitrate is at most `C` (level 0 if none).
/// Below the lower threshold the lowest level is chosen; at or above the upper
/// threshold `s`; in between the previous level, capped at `s`. Without a
/// throughput estimate the lowest level is chosen.
#[derive(Debug, Clone)]
pub struct BufferThresholdController {
    throughput: ThroughputEstimator,
    controls: LatencyControls,
    ladder: BitrateLadder,
    current: usize,
}

impl BufferThresholdController {
    pub fn new(cfg: &SchemeConfig) -> Self {
        Self {
            throughput: ThroughputEstimator::new(cfg.throughput_window),
            controls: LatencyControls::new(cfg),
            ladder: cfg.ladder.clone(),
            current: 0,
        }
    }

    pub fn thresholds(bands: &TargetBufferBands, ladder: &BitrateLadder, throughput: f64) -> (f64, f64) {
        let zero = bands.tuple(TargetBuffer::Zero);
        let scale = (ladder.top() / throughput).clamp(0.5, 2.0);
        (zero.min, zero.target * scale)
    }

    pub fn rule(
        bands: &TargetBufferBands,
        ladder: &BitrateLadder,
        throughput: Option<f64>,
        buffer: f64,
        current: usize,
    ) -> usize {
        let Some(c) = throughput else { return 0 };
        let (low, up) = Self::thresholds(bands, ladder, c);
        let sustainable = ladder.levels().iter().rposition(|&v| v <= c).unwrap_or(0);
        if buffer < low {
            0
        } else if buffer >= up {
            sustainable
        } else {
            current.min(sustainable)
        }
    }
}

impl Controller for BufferThresholdController {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Decision> {
        if let Some(last) = obs.last {
            self.throughput.push(last.throughput);
        }
        let playback = decide_playback(&self.controls.bands, obs.buffer);
        let level = Self::rule(
            &self.controls.bands,
            &self.ladder,
            self.throughput.estimate().ok(),
            obs.buffer,
            self.current,
        );
        self.current = level;
        Ok(Decision {
            decision: self
                .controls
                .decision(level, self.ladder.bitrate(level), playback.target_buffer)?,
            predictions: self.ladder.levels().to_vec(),
            estimate: None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct FixedController {
    level: usize,
    controls: LatencyControls,
    ladder: BitrateLadder,
}

impl FixedController {
    pub fn new(cfg: &SchemeConfig, level: usize) -> Self {
        Self {
            level,
            controls: LatencyControls::new(cfg),
            ladder: cfg.ladder.clone(),
        }
    }
}

impl Controller for FixedController {
    fn decide(&mut self, obs: &Observation<'_>) -> Result<Decision> {
        let playback = decide_playback(&self.controls.bands, obs.buffer);
        let coding = self.ladder.levels().get(self.level).copied().unwrap_or(f64::NAN);
        Ok(Decision {
            decision: self.controls.decision(self.level, coding, playback.target_buffer)?,
            predictions: self.ladder.levels().to_vec(),
            estimate: None,
        })
    }
}

pub fn make_controller(scheme: SchemeId, cfg: &SchemeConfig) -> Box<dyn Controller + Send> {
    match scheme {
        SchemeId::Hysa => Box::new(HysaController::with_kama(cfg)),
        SchemeId::HysaN => Box::new(HysaController::with_coding_bitrates(cfg)),
        SchemeId::Lookahead => Box::new(LookaheadController::new(cfg)),
        SchemeId::BufferThreshold => Box::new(BufferThresholdController::new(cfg)),
        SchemeId::Fixed(level) => Box::new(FixedController::new(cfg, level)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub video: String,
    pub network: String,
    pub scheme: SchemeId,
    pub qoe: QoeBreakdown,
    /// Mean relative error of the scheme's per-level bitrate predictions over
    /// every downloaded segment and level.
    pub pred_error: f64,
    /// The same, had the coding bitrates been used as predictions.
    pub coding_pred_error: f64,
    pub stalls: usize,
    pub skips: usize,
}

/// Mean relative prediction error over every downloaded segment and every
/// level, for the logged predictions and for the coding bitrates.
pub fn prediction_errors(video: &VideoTrace, log: &SimulationLog) -> (f64, f64) {
    let ladder = video.ladder().levels();
    let (mut pred, mut coding, mut n) = (0.0, 0.0, 0usize);
    for seg in &log.segments {
        for (m, &p) in seg.predictions.iter().enumerate() {
            let actual = video.segment_bits(seg.segment, m) as f64 / video.gop_length();
            pred += prediction_error(p, actual);
            coding += prediction_error(ladder[m], actual);
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    (pred / n, coding / n)
}

pub fn summarize(
    video_name: &str,
    network_name: &str,
    scheme: SchemeId,
    video: &VideoTrace,
    log: &SimulationLog,
    weights: &QoeWeights,
) -> Result<RunSummary> {
    let (pred_error, coding_pred_error) = prediction_errors(video, log);
    Ok(RunSummary {
        video: video_name.to_string(),
        network: network_name.to_string(),
        scheme,
        qoe: score_run(weights, log)?,
        pred_error,
        coding_pred_error,
        stalls: log.stalls,
        skips: log.skip_events,
    })
}

pub fn simulate(video: &VideoTrace, net: &NetworkTrace, scheme: SchemeId, cfg: &SchemeConfig) -> Result<SimulationLog> {
    if let SchemeId::Fixed(level) = scheme {
        if level >= video.levels() {
            return Err(Error::ControllerLevel {
                segment: 0,
                level,
                levels: video.levels(),
            });
        }
    }
    let mut controller = make_controller(scheme, cfg);
    sim::run(video, net, &cfg.bands, &mut controller)
}

#[derive(Debug, Clone)]
pub struct Named<T> {
    pub name: String,
    pub value: T,
}

impl<T> Named<T> {
    pub fn new(name: impl Into<String>, value: T) -> Self {
        Self {
            name: name.into(),
            value,
        }
    }
}

pub fn run_one(
    video: &Named<VideoTrace>,
    net: &Named<NetworkTrace>,
    scheme: SchemeId,
    cfg: &SchemeConfig,
) -> Result<(SimulationLog, RunSummary)> {
    let wrap = |e: Error| Error::Run {
        video: video.name.clone(),
        network: net.name.clone(),
        scheme: scheme.to_string(),
        source: Box::new(e),
    };
    let log = simulate(&video.value, &net.value, scheme, cfg).map_err(wrap)?;
    let summary = summarize(&video.name, &net.name, scheme, &video.value, &log, &cfg.weights).map_err(wrap)?;
    Ok((log, summary))
}

/// Runs every (video, network, scheme) triple, in parallel. Results come back
/// video-major, then network, then scheme, in input order.
pub fn run_matrix(
    videos: &[Named<VideoTrace>],
    networks: &[Named<NetworkTrace>],
    schemes: &[SchemeId],
    cfg: &SchemeConfig,
) -> Result<Vec<RunSummary>> {
    if videos.is_empty() || networks.is_empty() || schemes.is_empty() {
        return Err(Error::Config("run_matrix needs at least one video, network and scheme".into()));
    }
    let triples: Vec<_> = videos
        .iter()
        .flat_map(|v| networks.iter().flat_map(move |n| schemes.iter().map(move |s| (v, n, *s))))
        .collect();
    triples
        .par_iter()
        .map(|(v, n, s)| run_one(v, n, *s, cfg).map(|(_, summary)| summary))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Overall,
    Quality,
    Rebuf,
    Latency,
    Skip,
    Switch,
    PredError,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Overall,
        Metric::Quality,
        Metric::Rebuf,
        Metric::Latency,
        Metric::Skip,
        Metric::Switch,
        Metric::PredError,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Overall => "qoe_overall",
            Metric::Quality => "qoe_quality",
            Metric::Rebuf => "qoe_rebuf",
            Metric::Latency => "qoe_latency",
            Metric::Skip => "qoe_skip",
            Metric::Switch => "qoe_switch",
            Metric::PredError => "pred_error",
        }
    }

    pub fn value(self, s: &RunSummary) -> f64 {
        match self {
            Metric::Overall => s.qoe.overall,
            Metric::Quality => s.qoe.quality,
            Metric::Rebuf => s.qoe.rebuf,
            Metric::Latency => s.qoe.latency,
            Metric::Skip => s.qoe.skip,
            Metric::Switch => s.qoe.switch,
            Metric::PredError => s.pred_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfRow {
    pub value: f64,
    pub fraction: f64,
}

/// Empirical CDF: one row per distinct value with the fraction of samples at
/// or below it.
pub fn empirical_cdf(values: &[f64]) -> Vec<CdfRow> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut rows: Vec<CdfRow> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / n;
        match rows.last_mut() {
            Some(last) if last.value == v => last.fraction = fraction,
            _ => rows.push(CdfRow { value: v, fraction }),
        }
    }
    rows
}

pub fn emit_cdf(summaries: &[RunSummary], metric: Metric) -> Vec<CdfRow> {
    let values: Vec<f64> = summaries.iter().map(|s| metric.value(s)).collect();
    empirical_cdf(&values)
}

/// Per-scheme CDFs of `metric`, keyed in scheme order.
pub fn cdf_by_scheme(summaries: &[RunSummary], metric: Metric) -> BTreeMap<SchemeId, Vec<CdfRow>> {
    let mut groups: BTreeMap<SchemeId, Vec<RunSummary>> = BTreeMap::new();
    for s in summaries {
        groups.entry(s.scheme).or_default().push(s.clone());
    }
    groups
        .into_iter()
        .map(|(k, v)| (k, emit_cdf(&v, metric)))
        .collect()
}

pub fn cdf_csv(summaries: &[RunSummary], metric: Metric) -> String {
    let mut out = String::from("scheme,value,cumulative_fraction\n");
    for (scheme, rows) in cdf_by_scheme(summaries, metric) {
        for r in rows {
            out.push_str(&format!("{scheme},{},{}\n", r.value, r.fraction));
        }
    }
    out
}

pub const SUMMARY_HEADER: &str =
    "video,network,scheme,qoe_overall,qoe_quality,qoe_rebuf,qoe_latency,qoe_skip,qoe_switch,pred_error,stalls,skips";

pub fn summary_csv(summaries: &[RunSummary]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in summaries {
        let q = &s.qoe;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            s.video, s.network, s.scheme, q.overall, q.quality, q.rebuf, q.latency, q.skip, q.switch,
            s.pred_error, s.stalls, s.skips
        ));
    }
    out
}

/// Mean of `metric` per scheme.
pub fn scheme_means(summaries: &[RunSummary], metric: Metric) -> BTreeMap<SchemeId, f64> {
    let mut acc: BTreeMap<SchemeId, (f64, usize)> = BTreeMap::new();
    for s in summaries {
        let e = acc.entry(s.scheme).or_default();
        e.0 += metric.value(s);
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect()
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn load_video(path: &Path, cfg: &SchemeConfig) -> Result<Named<VideoTrace>> {
    let file = fs::File::open(path)?;
    Ok(Named::new(file_stem(path), parse_video_trace(file, cfg.timing, cfg.ladder.clone())?))
}

pub fn load_network(path: &Path) -> Result<Named<NetworkTrace>> {
    let file = fs::File::open(path)?;
    Ok(Named::new(file_stem(path), parse_network_trace(file)?))
}

/// `*.csv` files in `dir`, sorted by name.
pub fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_videos(dir: &Path, cfg: &SchemeConfig) -> Result<Vec<Named<VideoTrace>>> {
    csv_files(dir)?.iter().map(|p| load_video(p, cfg)).collect()
}

pub fn load_networks(dir: &Path) -> Result<Vec<Named<NetworkTrace>>> {
    csv_files(dir)?.iter().map(|p| load_network(p)).collect()
}
