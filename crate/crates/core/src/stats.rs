//! Expert-vs-novice and algebraic-vs-geometric channel contrasts.
//!
//! Deltas are differences of grand means taken jointly over all
//! subject-presentation pairs of each cohort. Significance uses Welch's
//! unequal-variance t-test; the test direction is always an explicit
//! parameter, never a default. No multiple-comparison correction is applied.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::hfd::HfdVector;
use crate::io::fmt_float;
use crate::signal::PresentationStyle;

/// Alternative hypothesis for the one-sided test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// mean(a) < mean(b)
    Less,
    /// mean(a) > mean(b)
    Greater,
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "less" => Ok(Direction::Less),
            "greater" => Ok(Direction::Greater),
            other => Err(Error::Config(format!(
                "unknown direction {other:?} (expected \"less\" or \"greater\")"
            ))),
        }
    }
}

/// Per-channel contrast between two groups of HFD vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStat {
    pub channel: String,
    pub group_a_mean: f64,
    pub group_b_mean: f64,
    /// `group_a_mean - group_b_mean`, exactly.
    pub delta: f64,
    /// Welch t statistic; absent when a group has fewer than two vectors or
    /// both per-channel samples are constant.
    pub t_statistic: Option<f64>,
    pub p_value: Option<f64>,
}

/// Channel contrasts in registry order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDelta {
    pub direction: Direction,
    pub channels: Vec<ChannelStat>,
}

impl ChannelDelta {
    pub fn get(&self, channel: &str) -> Option<&ChannelStat> {
        self.channels.iter().find(|c| c.channel == channel)
    }
}

/// Ranking key for [`top_n_channels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankBy {
    AbsDelta,
    SignedDelta,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_variance(values: &[f64], m: f64) -> f64 {
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Welch two-sample t statistic and one-sided p-value.
///
/// Uses the Student-t CDF with Welch-Satterthwaite degrees of freedom.
/// Identical samples give `t = 0, p = 0.5`.
pub fn one_sided_t(a: &[f64], b: &[f64], direction: Direction) -> Result<(f64, f64)> {
    if a.len() < 2 {
        return Err(Error::SampleTooSmall { len: a.len(), min: 2 });
    }
    if b.len() < 2 {
        return Err(Error::SampleTooSmall { len: b.len(), min: 2 });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a, ma), sample_variance(b, mb));
    if va == 0.0 && vb == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let sa = va / na;
    let sb = vb / nb;
    let se = (sa + sb).sqrt();
    let t = (ma - mb) / se;
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|_| Error::DegenerateVariance)?;
    let p = match direction {
        Direction::Less => dist.cdf(t),
        Direction::Greater => 1.0 - dist.cdf(t),
    };
    Ok((t, p))
}

fn check_same_channels(a: &[HfdVector], b: &[HfdVector]) -> Result<Vec<String>> {
    let reference: Vec<String> = a[0].channels().cloned().collect();
    let reference_set: std::collections::HashSet<&String> = reference.iter().collect();
    for v in a.iter().chain(b) {
        let set: std::collections::HashSet<&String> = v.channels().collect();
        if set != reference_set {
            let only_a = reference
                .iter()
                .filter(|c| !set.contains(c))
                .cloned()
                .collect();
            let only_b = v
                .channels()
                .filter(|c| !reference_set.contains(c))
                .cloned()
                .collect();
            return Err(Error::ChannelMismatch { only_a, only_b });
        }
    }
    Ok(reference)
}

/// Per-channel grand-mean difference (group A minus group B) with Welch
/// t-test in the stated direction.
///
/// The grand mean runs jointly over every vector of a group, i.e. over all
/// subject-presentation pairs; with a balanced design this coincides with
/// the mean of per-subject means.
pub fn group_delta(
    group_a: &[HfdVector],
    group_b: &[HfdVector],
    direction: Direction,
) -> Result<ChannelDelta> {
    if group_a.is_empty() {
        return Err(Error::EmptyGroup("group A".into()));
    }
    if group_b.is_empty() {
        return Err(Error::EmptyGroup("group B".into()));
    }
    let channels = check_same_channels(group_a, group_b)?;
    let stats = channels
        .iter()
        .map(|channel| {
            let a: Vec<f64> = group_a.iter().map(|v| v.get(channel).unwrap()).collect();
            let b: Vec<f64> = group_b.iter().map(|v| v.get(channel).unwrap()).collect();
            let group_a_mean = mean(&a);
            let group_b_mean = mean(&b);
            let (t_statistic, p_value) = match one_sided_t(&a, &b, direction) {
                Ok((t, p)) => (Some(t), Some(p)),
                Err(Error::SampleTooSmall { .. }) | Err(Error::DegenerateVariance) => (None, None),
                Err(e) => return Err(e),
            };
            Ok(ChannelStat {
                channel: channel.clone(),
                group_a_mean,
                group_b_mean,
                delta: group_a_mean - group_b_mean,
                t_statistic,
                p_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelDelta {
        direction,
        channels: stats,
    })
}

/// Channels sorted by the chosen key, descending; ties keep registry order.
pub fn top_n_channels(delta: &ChannelDelta, n: usize, by: RankBy) -> Result<Vec<ChannelStat>> {
    if n > delta.channels.len() {
        return Err(Error::RankTooLong {
            n,
            available: delta.channels.len(),
        });
    }
    let mut ranked: Vec<ChannelStat> = delta.channels.clone();
    ranked.sort_by(|x, y| {
        let kx = match by {
            RankBy::AbsDelta => x.delta.abs(),
            RankBy::SignedDelta => x.delta,
        };
        let ky = match by {
            RankBy::AbsDelta => y.delta.abs(),
            RankBy::SignedDelta => y.delta,
        };
        ky.total_cmp(&kx)
    });
    ranked.truncate(n);
    Ok(ranked)
}

/// Per-channel algebraic-vs-geometric contrast within one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleStat {
    pub channel: String,
    pub algebraic_mean: f64,
    pub geometric_mean: f64,
    /// `algebraic_mean - geometric_mean`; negates exactly when the style
    /// tags are swapped.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleDelta {
    pub channels: Vec<StyleStat>,
}

impl StyleDelta {
    pub fn get(&self, channel: &str) -> Option<&StyleStat> {
        self.channels.iter().find(|c| c.channel == channel)
    }
}

/// Mean over algebraic presentations minus mean over geometric ones, per
/// channel, within a single group. Style tags come from each vector's
/// provenance.
pub fn style_delta(group: &[HfdVector]) -> Result<StyleDelta> {
    let algebraic: Vec<&HfdVector> = group
        .iter()
        .filter(|v| v.provenance.presentation.style == PresentationStyle::Algebraic)
        .collect();
    let geometric: Vec<&HfdVector> = group
        .iter()
        .filter(|v| v.provenance.presentation.style == PresentationStyle::Geometric)
        .collect();
    if algebraic.is_empty() {
        return Err(Error::MissingStyle(PresentationStyle::Algebraic));
    }
    if geometric.is_empty() {
        return Err(Error::MissingStyle(PresentationStyle::Geometric));
    }
    let owned_a: Vec<HfdVector> = algebraic.iter().map(|v| (*v).clone()).collect();
    let owned_g: Vec<HfdVector> = geometric.iter().map(|v| (*v).clone()).collect();
    let channels = check_same_channels(&owned_a, &owned_g)?;
    let stats = channels
        .iter()
        .map(|channel| {
            let a: Vec<f64> = owned_a.iter().map(|v| v.get(channel).unwrap()).collect();
            let g: Vec<f64> = owned_g.iter().map(|v| v.get(channel).unwrap()).collect();
            let algebraic_mean = mean(&a);
            let geometric_mean = mean(&g);
            StyleStat {
                channel: channel.clone(),
                algebraic_mean,
                geometric_mean,
                delta: algebraic_mean - geometric_mean,
            }
        })
        .collect();
    Ok(StyleDelta { channels: stats })
}

/// Expert-minus-novice contrast computed separately for each presentation
/// style. Returns the algebraic-only and geometric-only deltas.
pub fn group_delta_by_style(
    experts: &[HfdVector],
    novices: &[HfdVector],
    direction: Direction,
) -> Result<(ChannelDelta, ChannelDelta)> {
    let by_style = |style: PresentationStyle, vectors: &[HfdVector]| -> Vec<HfdVector> {
        vectors
            .iter()
            .filter(|v| v.provenance.presentation.style == style)
            .cloned()
            .collect()
    };
    let mut deltas = Vec::with_capacity(2);
    for style in [PresentationStyle::Algebraic, PresentationStyle::Geometric] {
        let a = by_style(style, experts);
        let b = by_style(style, novices);
        if a.is_empty() || b.is_empty() {
            return Err(Error::MissingStyle(style));
        }
        deltas.push(group_delta(&a, &b, direction)?);
    }
    let geometric = deltas.pop().unwrap();
    let algebraic = deltas.pop().unwrap();
    Ok((algebraic, geometric))
}

/// Render `(channel, delta, p_value)` rows as CSV in registry order. The
/// output is a pure function of the delta values, byte-stable across runs.
pub fn export_heatmap(delta: &ChannelDelta) -> String {
    let mut out = String::from("channel,delta,p_value\n");
    for stat in &delta.channels {
        out.push_str(&stat.channel);
        out.push(',');
        out.push_str(&fmt_float(stat.delta));
        out.push(',');
        if let Some(p) = stat.p_value {
            out.push_str(&fmt_float(p));
        }
        out.push('\n');
    }
    out
}
