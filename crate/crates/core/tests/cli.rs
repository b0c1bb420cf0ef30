use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn traces() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("traces")
}

fn hysa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hysa")).args(args).output().unwrap()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

#[test]
fn simulate_writes_three_logs() {
    let out = tempfile::tempdir().unwrap();
    let video = traces().join("synthetic_vbr.csv");
    let net = traces().join("networks/net_03.csv");
    let o = hysa(&[
        "simulate",
        "--video",
        video.to_str().unwrap(),
        "--network",
        net.to_str().unwrap(),
        "--scheme",
        "hysa",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("hysa on synthetic_vbr/net_03"));

    assert_eq!(
        first_line(&out.path().join("frames.csv")),
        "frame,level,dl_start_s,dl_end_s,buffer_s,latency_s,rebuf_s,skipped"
    );
    assert_eq!(
        first_line(&out.path().join("segments.csv")),
        "segment,quality,target_buffer,latency_limit_s,pred_bitrate_bps,est_T_s,est_D_s"
    );
    let summary = fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.lines().nth(1).unwrap().starts_with("synthetic_vbr,net_03,hysa,"));
    assert_eq!(fs::read_to_string(out.path().join("frames.csv")).unwrap().lines().count(), 60 * 25 + 1);
}

#[test]
fn batch_writes_summary_and_cdfs() {
    let inputs = tempfile::tempdir().unwrap();
    let (videos, nets) = (inputs.path().join("v"), inputs.path().join("n"));
    fs::create_dir_all(&videos).unwrap();
    fs::create_dir_all(&nets).unwrap();
    fs::copy(traces().join("synthetic_vbr.csv"), videos.join("vbr.csv")).unwrap();
    for n in ["net_00.csv", "net_07.csv"] {
        fs::copy(traces().join("networks").join(n), nets.join(n)).unwrap();
    }
    let out = tempfile::tempdir().unwrap();
    let o = hysa(&[
        "batch",
        "--videos",
        videos.to_str().unwrap(),
        "--networks",
        nets.to_str().unwrap(),
        "--schemes",
        "hysa,hysa-n,buffer-threshold",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let summary = fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
    for metric in [
        "qoe_overall",
        "qoe_quality",
        "qoe_rebuf",
        "qoe_latency",
        "qoe_skip",
        "qoe_switch",
        "pred_error",
    ] {
        let path = out.path().join(format!("cdf_{metric}.csv"));
        assert_eq!(first_line(&path), "scheme,value,cumulative_fraction", "{metric}");
    }
}

#[test]
fn gen_traces_reproduces_the_bundled_suite() {
    let out = tempfile::tempdir().unwrap();
    let o = hysa(&["gen-traces", "--seed", "20240601", "--out", out.path().to_str().unwrap()]);
    assert!(o.status.success());
    for rel in ["synthetic_vbr.csv", "videos/sports.csv", "networks/net_11.csv"] {
        assert!(fs::read(out.path().join(rel)).unwrap() == fs::read(traces().join(rel)).unwrap(), "{rel}");
    }
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let out = tempfile::tempdir().unwrap();
    let video = traces().join("cbr.csv");
    let net = traces().join("networks/net_00.csv");
    let o = hysa(&[
        "simulate",
        "--video",
        video.to_str().unwrap(),
        "--network",
        net.to_str().unwrap(),
        "--scheme",
        "bogus",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let cfg = out.path().join("bad.conf");
    fs::write(&cfg, "lambda = -1\n").unwrap();
    let o = hysa(&[
        "simulate",
        "--video",
        video.to_str().unwrap(),
        "--network",
        net.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.conf"));
}
