//! Core time-series and recording data model.
//!
//! A [`Recording`] is one subject watching one presentation: a map from
//! channel label to an equal-length [`TimeSeries`], plus group and
//! presentation metadata. The [`ChannelRegistry`] fixes the canonical
//! channel order used for every downstream feature vector and carries the
//! discard list of non-scalp channels (ocular and cardiac leads).
//!
//! Cohort sizes are not enforced anywhere in this module: ingestion accepts
//! any number of subjects per group and any number of presentations.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Channels excluded from feature extraction; they carry eye movement and
/// cardiac activity, not brain signals.
pub const DISCARD_CHANNELS: [&str; 5] = ["VEOGL", "HEOGL", "HEOGR", "VEOGU", "HEART"];

const REGISTRY_V1: &str = include_str!("../resources/channels_v1.txt");

/// One channel's samples at a fixed sampling rate.
///
/// Immutable after construction; all samples are finite and the rate is
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidSampleRate(sample_rate_hz));
        }
        if samples.len() < 2 {
            return Err(Error::SignalTooShort {
                len: samples.len(),
                min: 2,
            });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Cut into non-overlapping windows of `window_seconds`.
    ///
    /// The window width in samples is `floor(window_seconds * sample_rate)`;
    /// a trailing partial window is discarded, so the result has exactly
    /// `floor(len / width)` windows.
    pub fn segment(&self, window_seconds: f64) -> Result<Vec<TimeSeries>> {
        let width = (window_seconds * self.sample_rate_hz).floor() as usize;
        if width < 2 {
            return Err(Error::WindowTooShort { samples: width });
        }
        Ok(self
            .samples
            .chunks_exact(width)
            .map(|chunk| TimeSeries {
                samples: chunk.to_vec(),
                sample_rate_hz: self.sample_rate_hz,
            })
            .collect())
    }
}

/// Expert/novice cohort label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Expert,
    Novice,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Expert => write!(f, "expert"),
            Group::Novice => write!(f, "novice"),
        }
    }
}

impl std::str::FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "expert" => Ok(Group::Expert),
            "novice" => Ok(Group::Novice),
            other => Err(Error::Config(format!(
                "unknown group {other:?} (expected \"expert\" or \"novice\")"
            ))),
        }
    }
}

/// Presentation style: each demonstration was shown in an algebraic and a
/// geometric form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PresentationStyle {
    #[serde(rename = "A")]
    Algebraic,
    #[serde(rename = "G")]
    Geometric,
}

impl PresentationStyle {
    pub fn tag(self) -> &'static str {
        match self {
            PresentationStyle::Algebraic => "A",
            PresentationStyle::Geometric => "G",
        }
    }
}

impl fmt::Display for PresentationStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

impl std::str::FromStr for PresentationStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(PresentationStyle::Algebraic),
            "G" | "g" => Ok(PresentationStyle::Geometric),
            other => Err(Error::Config(format!(
                "unknown style {other:?} (expected \"A\" or \"G\")"
            ))),
        }
    }
}

/// Presentation identity: style plus ordinal, e.g. `7A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PresentationId {
    pub ordinal: u32,
    pub style: PresentationStyle,
}

impl PresentationId {
    pub fn new(ordinal: u32, style: PresentationStyle) -> Self {
        Self { ordinal, style }
    }

    /// Parse ids of the form `<ordinal><A|G>`, e.g. `1A`, `12G`.
    pub fn parse(s: &str) -> Result<Self> {
        let (num, tag) = s.split_at(s.len().saturating_sub(1));
        let style: PresentationStyle = tag.parse()?;
        let ordinal: u32 = num
            .parse()
            .map_err(|_| Error::Config(format!("bad presentation id {s:?}")))?;
        Ok(Self { ordinal, style })
    }
}

impl fmt::Display for PresentationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.ordinal, self.style.tag())
    }
}

/// Ordered list of feature channels plus the fixed discard set.
#[derive(Debug, Clone)]
pub struct ChannelRegistry {
    labels: Vec<String>,
    discard: HashSet<String>,
}

impl ChannelRegistry {
    /// The built-in 124-label scalp registry (version 1).
    pub fn builtin() -> Self {
        Self::parse(REGISTRY_V1).expect("bundled registry is valid")
    }

    /// Build from explicit labels; the discard set is always
    /// [`DISCARD_CHANNELS`].
    pub fn new(labels: Vec<String>) -> Result<Self> {
        let discard: HashSet<String> = DISCARD_CHANNELS.iter().map(|s| s.to_string()).collect();
        let mut seen = HashSet::new();
        for label in &labels {
            if !seen.insert(label.clone()) {
                return Err(Error::Config(format!("duplicate registry label {label:?}")));
            }
            if discard.contains(label) {
                return Err(Error::Config(format!(
                    "registry label {label:?} is in the discard set"
                )));
            }
        }
        if labels.is_empty() {
            return Err(Error::Config("registry has no labels".into()));
        }
        Ok(Self { labels, discard })
    }

    /// Parse the one-label-per-line text format; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let labels = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        Self::new(labels)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn discard_list(&self) -> &HashSet<String> {
        &self.discard
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// One subject-presentation multichannel recording.
///
/// All channel series have identical length and sample rate.
#[derive(Debug, Clone)]
pub struct Recording {
    pub subject_id: String,
    pub group: Group,
    pub presentation: PresentationId,
    channels: IndexMap<String, TimeSeries>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        group: Group,
        presentation: PresentationId,
        channels: IndexMap<String, TimeSeries>,
    ) -> Result<Self> {
        if let Some((_, first)) = channels.first() {
            let expected = first.len();
            let rate = first.sample_rate_hz();
            for (label, series) in &channels {
                if series.len() != expected {
                    return Err(Error::ChannelLengthMismatch {
                        label: label.clone(),
                        len: series.len(),
                        expected,
                    });
                }
                if series.sample_rate_hz() != rate {
                    return Err(Error::InvalidSampleRate(series.sample_rate_hz()));
                }
            }
        }
        Ok(Self {
            subject_id: subject_id.into(),
            group,
            presentation,
            channels,
        })
    }

    pub fn channels(&self) -> &IndexMap<String, TimeSeries> {
        &self.channels
    }

    pub fn channel(&self, label: &str) -> Option<&TimeSeries> {
        self.channels.get(label)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.channels.first().map_or(0, |(_, s)| s.len())
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.channels.first().map_or(0.0, |(_, s)| s.sample_rate_hz())
    }

    /// Restrict to the registry's channels, in registry order.
    ///
    /// Discard-list channels present in the input are dropped. Every
    /// registry label must be present; all missing labels are reported
    /// together.
    pub fn filter_channels(&self, registry: &ChannelRegistry) -> Result<Recording> {
        let missing: Vec<String> = registry
            .labels()
            .iter()
            .filter(|l| !self.channels.contains_key(*l))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingChannel(missing));
        }
        let channels = registry
            .labels()
            .iter()
            .map(|l| (l.clone(), self.channels[l].clone()))
            .collect();
        Ok(Recording {
            subject_id: self.subject_id.clone(),
            group: self.group,
            presentation: self.presentation.clone(),
            channels,
        })
    }
}
