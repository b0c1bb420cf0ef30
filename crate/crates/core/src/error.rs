use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },

    #[error("non-monotone arrival: frame {index} arrives before frame {}", index - 1)]
    NonMonotoneArrival { index: usize },

    #[error("incomplete final GOP: {trailing} trailing frames, GOP holds {per_gop}")]
    IncompleteGop { trailing: usize, per_gop: usize },

    #[error("level-count mismatch: expected {expected} quality levels, found {found}")]
    LevelCountMismatch { expected: usize, found: usize },

    #[error("GOP {gop}: total size at level {level} does not exceed level {}", level - 1)]
    NonIncreasingLevels { gop: usize, level: usize },

    #[error("trace must start at time 0")]
    TraceStart,

    #[error("line {line}: timestamps must be strictly increasing")]
    NonIncreasingTime { line: u64 },

    #[error("line {line}: bandwidth must be positive")]
    NonPositiveBandwidth { line: u64 },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("invalid bitrate ladder: {0}")]
    Ladder(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{what} index {index} out of range (len {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("insufficient history: need {need} samples, have {have}")]
    InsufficientHistory { need: usize, have: usize },

    #[error("no throughput samples yet (cold start)")]
    ColdStart,

    #[error("skip disabled divisor: p_d * lambda must be positive")]
    SkipDisabled,

    #[error("empty simulation log")]
    EmptyLog,

    #[error("segment {segment}: controller returned quality {level}, ladder has {levels} levels")]
    ControllerLevel {
        segment: usize,
        level: usize,
        levels: usize,
    },

    #[error("segment {segment}: controller returned invalid latency limit {limit}")]
    ControllerLatencyLimit { segment: usize, limit: f64 },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("run ({video}, {network}, {scheme}) failed: {source}")]
    Run {
        video: String,
        network: String,
        scheme: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
