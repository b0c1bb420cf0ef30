//! Hand-simulated timelines.
//!
//! Setup shared by both scenarios: 0.5 s frames, 1 s GOPs (2 frames), ladder
//! 500/1000 kbps, always level 0, frame k arriving at 0.5k. The network gives
//! 1 Mbps on [0, 2), 0.25 Mbps on [2, 4) and 1 Mbps after. Bands are
//! (0, 0.5, 2) and (0.25, 1, 3): every decision lands on target buffer 1,
//! resume threshold 1 s, and the post-startup decisions all play at 1.0x.
//!
//! Three-GOP derivation (level-0 sizes 250k, 250k | 250k, 1M | 250k, 250k):
//!
//! | event | clock | buffer | note |
//! |---|---|---|---|
//! | f0 250k @1M | 0 → 0.25 | 0.5 | startup |
//! | wait f1 | 0.25 → 0.5 | 0.5 | startup idle, not rebuffering |
//! | f1 250k @1M | 0.5 → 0.75 | 1.0 | resume, playing |
//! | wait f2 | 0.75 → 1.0 | 0.75 | |
//! | f2 250k @1M | 1.0 → 1.25 | 0.5 + 0.5 = 1.0 | |
//! | wait f3 | 1.25 → 1.5 | 0.75 | |
//! | f3 1M: 0.5M by t=2, 0.5M @0.25M | 1.5 → 4.0 | drains at 2.25, then 0.5 | stall from 2.25 |
//! | f4 250k @1M | 4.0 → 4.25 | 1.0 | resume at 4.25 |
//! | f5 250k @1M | 4.25 → 4.5 | 0.75 + 0.5 = 1.25 | |
//!
//! Latency after each frame is `(arrived - next) * 0.5 + buffer`.

use hysa::harness::simulate;
use hysa::qoe::score_run;
use hysa::trace::{parse_network_trace, parse_video_trace};
use hysa::{SchemeConfig, SchemeId, SimulationLog};

const NETWORK: &str = "time_s,bandwidth_bps\n0,1000000\n2,250000\n4,1000000\n";

const THREE_GOPS: &str = "frame_index,arrival_time_s,size_bits_L0,size_bits_L1
0,0,250000,500000
1,0.5,250000,500000
2,1.0,250000,500000
3,1.5,1000000,2000000
4,2.0,250000,500000
5,2.5,250000,500000
";

const CONFIG: &str = "frame_duration_s = 0.5
gop_length_s = 1.0
ladder_kbps = 500,1000
b_min0 = 0
b_target0 = 0.5
b_max0 = 2.0
b_min1 = 0.25
b_target1 = 1.0
b_max1 = 3.0
scheme = fixed:0
";

fn run(video_csv: &str, extra_config: &str) -> SimulationLog {
    let cfg = SchemeConfig::parse(&format!("{CONFIG}{extra_config}")).unwrap();
    let video = parse_video_trace(video_csv.as_bytes(), cfg.timing, cfg.ladder.clone()).unwrap();
    let net = parse_network_trace(NETWORK.as_bytes()).unwrap();
    simulate(&video, &net, SchemeId::Fixed(0), &cfg).unwrap()
}

struct Row {
    frame: usize,
    dl_start: f64,
    dl_end: f64,
    buffer: f64,
    latency: f64,
    rebuffer: f64,
    skipped: bool,
}

fn row(frame: usize, dl_start: f64, dl_end: f64, buffer: f64, latency: f64, rebuffer: f64) -> Row {
    Row {
        frame,
        dl_start,
        dl_end,
        buffer,
        latency,
        rebuffer,
        skipped: false,
    }
}

fn assert_timeline(log: &SimulationLog, expected: &[Row]) {
    assert_eq!(log.frames.len(), expected.len());
    for (got, want) in log.frames.iter().zip(expected) {
        let ctx = format!("frame {}", want.frame);
        assert_eq!(got.frame, want.frame, "{ctx}");
        assert_eq!(got.skipped, want.skipped, "{ctx}");
        assert_eq!(got.dl_start, want.dl_start, "{ctx} dl_start");
        assert_eq!(got.dl_end, want.dl_end, "{ctx} dl_end");
        assert_eq!(got.buffer_after, want.buffer, "{ctx} buffer");
        assert_eq!(got.latency, want.latency, "{ctx} latency");
        assert_eq!(got.rebuffer, want.rebuffer, "{ctx} rebuffer");
    }
}

#[test]
fn three_gop_timeline() {
    let log = run(THREE_GOPS, "frame_skipping = false\n");
    assert_timeline(
        &log,
        &[
            row(0, 0.0, 0.25, 0.5, 0.5, 0.0),
            row(1, 0.5, 0.75, 1.0, 1.0, 0.0),
            row(2, 1.0, 1.25, 1.0, 1.0, 0.0),
            row(3, 1.5, 4.0, 0.5, 1.5, 1.75),
            row(4, 4.0, 4.25, 1.0, 1.5, 0.25),
            row(5, 4.25, 4.5, 1.25, 1.25, 0.0),
        ],
    );

    let decided: Vec<_> = log.segments.iter().map(|s| (s.segment, s.decided_at, s.buffer, s.rate)).collect();
    assert_eq!(decided, vec![(0, 0.0, 0.0, 0.95), (1, 0.75, 1.0, 1.0), (2, 4.0, 0.5, 1.0)]);
    assert!(log.segments.iter().all(|s| s.target_buffer.index() == 1));

    // one stall, [2.25, 4.25]
    assert_eq!(log.stalls, 1);
    assert_eq!(log.rebuffer_time, 2.0);
    assert_eq!(log.played, 1.75);
    assert_eq!(log.final_buffer, 1.25);
    assert_eq!(log.downloaded, 3.0);
    assert_eq!(log.skipped, 0.0);
    assert_eq!(log.wall_time, 4.5);
    assert_eq!(log.idle_time, 0.75);
    assert_eq!(log.transfer_time, 3.75);
    assert_eq!(log.skip_events, 0);

    // 6 frames * 500 kbps * 0.5 s, 1.5 * 2 s stalled, 0.005 * 6.75 s latency
    let q = score_run(&SchemeConfig::default().weights, &log).unwrap();
    assert_eq!(q.quality, 1500.0);
    assert_eq!(q.rebuf, -3.0);
    assert!((q.latency + 0.03375).abs() < 1e-15);
    assert_eq!(q.skip, 0.0);
    assert_eq!(q.switch, 0.0);
    assert!((q.overall - 1496.96625).abs() < 1e-12);
}

/// Adds GOP 3 (frames 6 and 7 at 3.0 and 3.5 s). With p_d = 83.5 and
/// lambda = 1.5 the level-0 threshold is 250.5 / 125.25 = 2 s. Decisions at
/// 0 and 0.75 see latency 0.5 and 1.0; at t = 4 all eight frames have arrived,
/// latency is 4 * 0.5 + 0.5 = 2.5 > 2, so the client jumps to frame 6 and
/// skips GOP 2. GOP 3 then replays the tail of the three-GOP timeline.
#[test]
fn skip_timeline() {
    let video = format!("{THREE_GOPS}6,3.0,250000,500000\n7,3.5,250000,500000\n");
    let log = run(&video, "p_d = 83.5\nlambda = 1.5\n");
    let skipped = |frame| Row {
        frame,
        dl_start: 4.0,
        dl_end: 4.0,
        buffer: 0.5,
        latency: 2.5,
        rebuffer: 0.0,
        skipped: true,
    };
    assert_timeline(
        &log,
        &[
            row(0, 0.0, 0.25, 0.5, 0.5, 0.0),
            row(1, 0.5, 0.75, 1.0, 1.0, 0.0),
            row(2, 1.0, 1.25, 1.0, 1.0, 0.0),
            row(3, 1.5, 4.0, 0.5, 2.5, 1.75),
            skipped(4),
            skipped(5),
            row(6, 4.0, 4.25, 1.0, 1.5, 0.25),
            row(7, 4.25, 4.5, 1.25, 1.25, 0.0),
        ],
    );
    assert_eq!(log.segments.len(), 3);
    assert_eq!(log.segments[2].segment, 3);
    assert_eq!(log.segments[2].skipped_frames, 2);
    assert!(log.segments.iter().all(|s| s.latency_limit == 2.0));
    assert_eq!(log.skip_events, 1);
    assert_eq!(log.skipped, 1.0);
    assert_eq!(log.played + log.skipped + log.final_buffer, 4.0);

    let q = score_run(&SchemeConfig::default().weights, &log).unwrap();
    assert_eq!(q.skip, -1.0);
}
