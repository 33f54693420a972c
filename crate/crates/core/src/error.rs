//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // signal
    #[error("signal too short: {len} samples (need at least {min})")]
    SignalTooShort { len: usize, min: usize },
    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("sample rate must be positive, got {0}")]
    InvalidSampleRate(f64),
    #[error("missing channels: {}", .0.join(", "))]
    MissingChannel(Vec<String>),
    #[error("channel lengths differ: {label} has {len}, expected {expected}")]
    ChannelLengthMismatch {
        label: String,
        len: usize,
        expected: usize,
    },
    #[error("window of {samples} samples is too short (need at least 2)")]
    WindowTooShort { samples: usize },

    // hfd
    #[error("k_max {k_max} invalid for signal of length {len} (need 2 <= k_max <= (len-1)/2)")]
    InvalidKmax { k_max: usize, len: usize },
    #[error("invalid offset m={m} for stride k={k} on signal of length {len}")]
    InvalidOffset { m: usize, k: usize, len: usize },
    #[error("curve length L({k}) is zero; log-log fit undefined")]
    DegenerateCurveLength { k: usize },
    #[error("HFD value {value} for channel {channel} outside sanity band [0.5, 2.5]")]
    OutOfSanityBand { channel: String, value: f64 },
    #[error("per-channel failures: {}", format_channel_errors(.0))]
    ChannelErrors(Vec<(String, Box<Error>)>),

    // tuner
    #[error("empty HFD vector")]
    EmptyVector,
    #[error("k_max grid must be strictly increasing with all candidates >= 2")]
    InvalidGrid,
    #[error("grid candidate k_max={k_max} infeasible for shortest signal length {len}")]
    GridInfeasible { k_max: usize, len: usize },

    // stats
    #[error("channel sets differ; only in first: [{}], only in second: [{}]",
            .only_a.join(", "), .only_b.join(", "))]
    ChannelMismatch {
        only_a: Vec<String>,
        only_b: Vec<String>,
    },
    #[error("sample too small: need at least {min} values, got {len}")]
    SampleTooSmall { len: usize, min: usize },
    #[error("both samples have zero variance; t statistic undefined")]
    DegenerateVariance,
    #[error("no {0:?} presentations in input")]
    MissingStyle(crate::signal::PresentationStyle),
    #[error("empty group: {0}")]
    EmptyGroup(String),

    // ml
    #[error("feature width mismatch: {}", format_width_offenders(.0))]
    HeterogeneousWidth(Vec<(String, usize)>),
    #[error("too few subjects for {folds} folds: {subjects}")]
    TooFewSubjects { subjects: usize, folds: usize },
    #[error("too few rows for {folds} folds: {rows}")]
    TooFewRows { rows: usize, folds: usize },
    #[error("training set contains a single class")]
    SingleClassTrainingSet,
    #[error("ranking requested {n} channels but only {available} exist")]
    RankTooLong { n: usize, available: usize },

    // synth
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),

    // io
    #[error("failed to load {} recording(s): {}", .0.len(), format_channel_errors(.0))]
    LoadFailures(Vec<(String, Box<Error>)>),
    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("duplicate (subject, presentation) pair: ({subject_id}, {presentation_id})")]
    ManifestConflict {
        subject_id: String,
        presentation_id: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Exit code class: 1 for input/validation problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_channel_errors(errs: &[(String, Box<Error>)]) -> String {
    errs.iter()
        .map(|(label, e)| format!("{label}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

fn format_width_offenders(offenders: &[(String, usize)]) -> String {
    offenders
        .iter()
        .map(|(id, w)| format!("{id} has width {w}"))
        .collect::<Vec<_>>()
        .join("; ")
}
