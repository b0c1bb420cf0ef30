//! Seeded generator for the bundled trace suite.
//!
//! Videos follow a scene model: each scene scales every level's bitrate by a
//! lognormal factor around a per-profile bias, each GOP adds lognormal noise,
//! and each level gets a small independent deviation on top. Biases sit at or
//! below 1, as with a capped-VBR live encoder whose nominal bitrate acts as a
//! ceiling on the long-run rate. Network traces are
//! 1 s piecewise-constant bandwidth series drawn from a mean-preserving
//! lognormal AR(1) process.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::error::Result;
use crate::harness::Named;
use crate::trace::{BandwidthSample, BitrateLadder, FrameRecord, FrameTiming, NetworkTrace, VideoTrace};

pub const BUNDLED_SEED: u64 = 20_240_601;
pub const SUITE_GOPS: usize = 200;
pub const VBR_GOPS: usize = 60;
pub const NETWORK_COUNT: usize = 12;
pub const NETWORK_DURATION_S: usize = 600;
pub const MEAN_RANGE_BPS: (f64, f64) = (0.8e6, 2.5e6);
pub const SD_RANGE_BPS: (f64, f64) = (0.1e6, 2.0e6);
const AR_RHO: f64 = 0.9;
const LEVEL_JITTER_SD: f64 = 0.03;
const KEY_FRAME_WEIGHT: f64 = 6.0;
const FRAME_WEIGHT_SIGMA: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoProfile {
    pub name: &'static str,
    /// Long-run ratio of actual to coding bitrate.
    pub bias: f64,
    pub scene_sigma: f64,
    pub noise_sigma: f64,
    pub mean_scene_gops: f64,
}

pub const ROOM: VideoProfile = VideoProfile {
    name: "room",
    bias: 0.8,
    scene_sigma: 0.15,
    noise_sigma: 0.05,
    mean_scene_gops: 40.0,
};

pub const GAME: VideoProfile = VideoProfile {
    name: "game",
    bias: 0.9,
    scene_sigma: 0.3,
    noise_sigma: 0.08,
    mean_scene_gops: 20.0,
};

pub const SPORTS: VideoProfile = VideoProfile {
    name: "sports",
    bias: 1.0,
    scene_sigma: 0.45,
    noise_sigma: 0.12,
    mean_scene_gops: 12.0,
};

pub const PROFILES: [VideoProfile; 3] = [ROOM, GAME, SPORTS];

/// Unit-mean lognormal with log-sd `sigma`.
fn unit_lognormal(sigma: f64) -> LogNormal<f64> {
    LogNormal::new(-sigma * sigma / 2.0, sigma).expect("finite sigma")
}

/// Splits `total` bits over frames proportionally to `weights`, every frame
/// getting at least one bit; rounding slack goes to the first frame.
fn split_bits(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    let mut sizes: Vec<u64> = weights
        .iter()
        .map(|w| ((total as f64 * w / sum).floor() as u64).max(1))
        .collect();
    let assigned: u64 = sizes.iter().sum();
    if assigned <= total {
        sizes[0] += total - assigned;
    }
    sizes
}

pub fn generate_video(
    profile: &VideoProfile,
    gops: usize,
    timing: FrameTiming,
    ladder: &BitrateLadder,
    rng: &mut impl Rng,
) -> Result<VideoTrace> {
    let fpg = timing.frames_per_gop()?;
    let scene = unit_lognormal(profile.scene_sigma);
    let noise = unit_lognormal(profile.noise_sigma);
    let jitter = Normal::new(0.0, LEVEL_JITTER_SD).expect("finite sd");
    let frame_weight = unit_lognormal(FRAME_WEIGHT_SIGMA);
    let scene_change = 1.0 / profile.mean_scene_gops;

    let mut frames = Vec::with_capacity(gops * fpg);
    let mut scene_factor = scene.sample(rng);
    for g in 0..gops {
        if g > 0 && rng.gen_bool(scene_change) {
            scene_factor = scene.sample(rng);
        }
        let gop_factor = profile.bias * scene_factor * noise.sample(rng);
        let weights: Vec<f64> = (0..fpg)
            .map(|i| if i == 0 { KEY_FRAME_WEIGHT } else { frame_weight.sample(rng) })
            .collect();

        let mut per_level: Vec<Vec<u64>> = Vec::with_capacity(ladder.len());
        let mut prev_total = 0u64;
        for &v in ladder.levels() {
            let eps: f64 = jitter.sample(rng);
            let bits = v * timing.gop_length * gop_factor * (1.0 + eps).max(0.5);
            let total = (bits.round() as u64).max(prev_total + fpg as u64 + 1);
            prev_total = total;
            per_level.push(split_bits(total, &weights));
        }
        for i in 0..fpg {
            let index = g * fpg + i;
            frames.push(FrameRecord {
                index,
                arrival_time: index as f64 * timing.frame_duration,
                sizes: per_level.iter().map(|s| s[i]).collect(),
            });
        }
    }
    VideoTrace::new(timing, ladder.clone(), frames)
}

/// Constant-bitrate video: every frame at level `m` holds exactly
/// `V_m * d_f` bits (rounded).
pub fn cbr_video(gops: usize, timing: FrameTiming, ladder: &BitrateLadder) -> Result<VideoTrace> {
    let fpg = timing.frames_per_gop()?;
    let sizes: Vec<u64> = ladder
        .levels()
        .iter()
        .map(|v| (v * timing.frame_duration).round() as u64)
        .collect();
    let frames = (0..gops * fpg)
        .map(|index| FrameRecord {
            index,
            arrival_time: index as f64 * timing.frame_duration,
            sizes: sizes.clone(),
        })
        .collect();
    VideoTrace::new(timing, ladder.clone(), frames)
}

/// Lognormal AR(1) bandwidth series, rescaled so the realized mean is exactly
/// `mean`.
pub fn generate_network(mean: f64, sd: f64, duration_s: usize, rng: &mut impl Rng) -> Result<NetworkTrace> {
    let s = (1.0 + (sd / mean).powi(2)).ln().sqrt();
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let innovation = (1.0 - AR_RHO * AR_RHO).sqrt();
    let mut x = s * z.sample(rng);
    let mut raw = Vec::with_capacity(duration_s);
    for t in 0..duration_s {
        if t > 0 {
            x = AR_RHO * x + innovation * s * z.sample(rng);
        }
        raw.push((x - s * s / 2.0).exp());
    }
    let scale = mean * duration_s as f64 / raw.iter().sum::<f64>();
    let samples = raw
        .iter()
        .enumerate()
        .map(|(t, r)| BandwidthSample {
            start: t as f64,
            bandwidth: (r * scale).round().max(1.0),
        })
        .collect();
    NetworkTrace::new(samples)
}

/// `(mean, sd)` of network `i`: means ascend linearly, and the standard
/// deviations are spread over the same grid in a shuffled order so that mean
/// and variability are not tied.
pub fn network_envelope(i: usize) -> (f64, f64) {
    let n = (NETWORK_COUNT - 1) as f64;
    let lerp = |(a, b): (f64, f64), k: usize| a + (b - a) * k as f64 / n;
    (lerp(MEAN_RANGE_BPS, i), lerp(SD_RANGE_BPS, (i * 5) % NETWORK_COUNT))
}

#[derive(Debug, Clone)]
pub struct Suite {
    /// Single-video VBR trace used by parsing and prediction checks.
    pub vbr: VideoTrace,
    pub cbr: VideoTrace,
    pub videos: Vec<Named<VideoTrace>>,
    pub networks: Vec<Named<NetworkTrace>>,
}

pub fn generate_suite(seed: u64) -> Result<Suite> {
    let timing = FrameTiming::default();
    let ladder = BitrateLadder::default();
    let stream = |k: u64| ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(k));

    let vbr = generate_video(&GAME, VBR_GOPS, timing, &ladder, &mut stream(0))?;
    let cbr = cbr_video(VBR_GOPS, timing, &ladder)?;
    let videos = PROFILES
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let v = generate_video(p, SUITE_GOPS, timing, &ladder, &mut stream(1 + i as u64))?;
            Ok(Named::new(p.name, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let networks = (0..NETWORK_COUNT)
        .map(|i| {
            let (mean, sd) = network_envelope(i);
            let n = generate_network(mean, sd, NETWORK_DURATION_S, &mut stream(100 + i as u64))?;
            Ok(Named::new(format!("net_{i:02}"), n))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Suite {
        vbr,
        cbr,
        videos,
        networks,
    })
}

/// Writes `synthetic_vbr.csv`, `cbr.csv`, `videos/*.csv` and `networks/*.csv`
/// under `dir`.
pub fn write_suite(suite: &Suite, dir: &Path) -> Result<()> {
    let videos = dir.join("videos");
    let networks = dir.join("networks");
    fs::create_dir_all(&videos)?;
    fs::create_dir_all(&networks)?;
    fs::write(dir.join("synthetic_vbr.csv"), suite.vbr.to_csv())?;
    fs::write(dir.join("cbr.csv"), suite.cbr.to_csv())?;
    for v in &suite.videos {
        fs::write(videos.join(format!("{}.csv", v.name)), v.value.to_csv())?;
    }
    for n in &suite.networks {
        fs::write(networks.join(format!("{}.csv", n.name)), n.value.to_csv())?;
    }
    Ok(())
}
