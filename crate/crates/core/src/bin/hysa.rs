use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use hysa::harness::{
    cdf_csv, load_network, load_networks, load_video, load_videos, parse_scheme_list, run_matrix, run_one,
    summary_csv, Metric,
};
use hysa::synth::{generate_suite, write_suite};
use hysa::{SchemeConfig, SchemeId};

#[derive(Parser)]
#[command(name = "hysa", version, about = "Trace-driven live streaming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheme on one video/network pair.
    Simulate {
        #[arg(long)]
        video: PathBuf,
        #[arg(long)]
        network: PathBuf,
        /// Overrides the config's `scheme` key.
        #[arg(long)]
        scheme: Option<SchemeId>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every scheme on every video/network pair.
    Batch {
        #[arg(long)]
        videos: PathBuf,
        #[arg(long)]
        networks: PathBuf,
        /// Comma-separated scheme list, e.g. `hysa,hysa-n,lookahead`.
        #[arg(long)]
        schemes: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the synthetic trace suite.
    GenTraces {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<SchemeConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SchemeConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(SchemeConfig::default()),
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            video,
            network,
            scheme,
            config,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = scheme {
                cfg = cfg.with_scheme(s);
                cfg.validate()?;
            }
            let video = load_video(&video, &cfg).with_context(|| format!("loading {}", video.display()))?;
            let network = load_network(&network).with_context(|| format!("loading {}", network.display()))?;
            let (log, summary) = run_one(&video, &network, cfg.scheme, &cfg)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("frames.csv"), log.frames_csv())?;
            fs::write(out.join("segments.csv"), log.segments_csv())?;
            fs::write(out.join("summary.csv"), summary_csv(std::slice::from_ref(&summary)))?;
            println!(
                "{} on {}/{}: overall QoE {:.3}, {} stalls, {} skips",
                summary.scheme, summary.video, summary.network, summary.qoe.overall, summary.stalls, summary.skips
            );
        }
        Command::Batch {
            videos,
            networks,
            schemes,
            config,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let schemes = parse_scheme_list(&schemes)?;
            let videos = load_videos(&videos, &cfg)?;
            let networks = load_networks(&networks)?;
            let summaries = run_matrix(&videos, &networks, &schemes, &cfg)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("summary.csv"), summary_csv(&summaries))?;
            for metric in Metric::ALL {
                fs::write(out.join(format!("cdf_{}.csv", metric.name())), cdf_csv(&summaries, metric))?;
            }
            println!("{} runs written to {}", summaries.len(), out.display());
        }
        Command::GenTraces { seed, out } => {
            write_suite(&generate_suite(seed)?, &out)?;
            println!("suite written to {}", out.display());
        }
    }
    Ok(())
}
