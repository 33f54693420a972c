//! Synthetic signals with analytically known fractal dimension.
//!
//! These generators are the project's independent ground truth: the HFD
//! engine is validated against them, never the other way around. The
//! fractional Brownian motion path uses exact circulant embedding
//! (Davies-Harte) of fractional Gaussian noise, so its covariance is exact
//! up to floating-point rounding rather than approximate like midpoint
//! displacement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::seed;
use crate::signal::{ChannelRegistry, Group, PresentationId, PresentationStyle, Recording, TimeSeries};

/// Truncate the Weierstrass series once the next term's amplitude drops
/// below this bound; far under every HFD test tolerance.
const WEIERSTRASS_AMPLITUDE_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthKind {
    Ramp,
    Sine { frequency_hz: f64 },
    WhiteNoise,
    FractionalBrownianMotion { hurst: f64 },
    Weierstrass { a: f64, b: f64 },
    AlternatingBinary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub length: usize,
    pub seed: u64,
    pub sample_rate_hz: f64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, length: usize, seed: u64, sample_rate_hz: f64) -> Self {
        Self {
            kind,
            length,
            seed,
            sample_rate_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::InvalidParameter(format!(
                "length must be >= 2, got {}",
                self.length
            )));
        }
        match self.kind {
            SynthKind::Sine { frequency_hz } => {
                if !(frequency_hz > 0.0 && frequency_hz.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "sine frequency must be positive, got {frequency_hz}"
                    )));
                }
            }
            SynthKind::FractionalBrownianMotion { hurst } => {
                if !(hurst > 0.0 && hurst < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "Hurst exponent must lie in (0, 1), got {hurst}"
                    )));
                }
            }
            SynthKind::Weierstrass { a, b } => {
                if !(a > 0.0 && a < 1.0 && a * b > 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "Weierstrass parameters need 0 < a < 1 and a*b > 1, got a={a}, b={b}"
                    )));
                }
            }
            SynthKind::Ramp | SynthKind::WhiteNoise | SynthKind::AlternatingBinary => {}
        }
        Ok(())
    }

    /// Analytic fractal dimension of the generated graph, where known.
    pub fn expected_fd(&self) -> Option<f64> {
        match self.kind {
            SynthKind::Ramp | SynthKind::Sine { .. } => Some(1.0),
            SynthKind::WhiteNoise => Some(2.0),
            SynthKind::FractionalBrownianMotion { hurst } => Some(2.0 - hurst),
            SynthKind::Weierstrass { a, b } => Some(2.0 + a.ln() / b.ln()),
            SynthKind::AlternatingBinary => None,
        }
    }
}

/// Generate one deterministic series for the spec.
pub fn generate(spec: &SynthSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let n = spec.length;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let samples = match spec.kind {
        SynthKind::Ramp => (1..=n).map(|i| i as f64).collect(),
        SynthKind::Sine { frequency_hz } => (0..n)
            .map(|i| {
                let t = i as f64 / spec.sample_rate_hz;
                (std::f64::consts::TAU * frequency_hz * t).sin()
            })
            .collect(),
        SynthKind::WhiteNoise => (0..n)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect(),
        SynthKind::FractionalBrownianMotion { hurst } => {
            let increments = fractional_gaussian_noise(n, hurst, &mut rng)?;
            let mut level = 0.0;
            increments
                .into_iter()
                .map(|dx| {
                    level += dx;
                    level
                })
                .collect()
        }
        SynthKind::Weierstrass { a, b } => weierstrass(n, a, b, &mut rng),
        SynthKind::AlternatingBinary => (0..n).map(|i| (i % 2) as f64).collect(),
    };
    TimeSeries::new(samples, spec.sample_rate_hz)
}

/// Exact fractional Gaussian noise by circulant embedding.
///
/// The covariance `g(j) = 0.5(|j-1|^{2H} - 2|j|^{2H} + |j+1|^{2H})` is
/// embedded in a circulant matrix of order 2n whose eigenvalues come out of
/// one forward FFT; a complex Gaussian vector shaped by those eigenvalues is
/// transformed back to give n stationary samples with the exact target
/// covariance. Draw order is fixed, so output is a pure function of the RNG
/// seed.
fn fractional_gaussian_noise(n: usize, hurst: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if n == 1 {
        return Ok(vec![StandardNormal.sample(rng)]);
    }
    let m = 2 * n;
    let gamma = |j: f64| -> f64 {
        0.5 * ((j - 1.0).abs().powf(2.0 * hurst) - 2.0 * j.abs().powf(2.0 * hurst)
            + (j + 1.0).abs().powf(2.0 * hurst))
    };
    // first row of the circulant: g(0..n) then the mirrored tail
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for j in 0..=n {
        row.push(Complex::new(gamma(j as f64), 0.0));
    }
    for j in (1..n).rev() {
        row.push(Complex::new(gamma(j as f64), 0.0));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);

    let mut eigenvalues = Vec::with_capacity(m);
    for (idx, value) in row.iter().enumerate() {
        let lambda = value.re;
        if lambda < -1e-8 {
            return Err(Error::InvalidParameter(format!(
                "circulant embedding not nonnegative definite at index {idx} (eigenvalue {lambda}); \
                 n={n}, hurst={hurst}"
            )));
        }
        eigenvalues.push(lambda.max(0.0));
    }

    let m_f = m as f64;
    let mut spectrum = vec![Complex::new(0.0, 0.0); m];
    let draw = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    spectrum[0] = Complex::new((eigenvalues[0] / m_f).sqrt() * draw(rng), 0.0);
    for k in 1..n {
        let scale = (eigenvalues[k] / (2.0 * m_f)).sqrt();
        let re = draw(rng);
        let im = draw(rng);
        spectrum[k] = Complex::new(scale * re, scale * im);
        spectrum[m - k] = spectrum[k].conj();
    }
    spectrum[n] = Complex::new((eigenvalues[n] / m_f).sqrt() * draw(rng), 0.0);

    fft.process(&mut spectrum);
    Ok(spectrum[..n].iter().map(|c| c.re).collect())
}

/// Truncated random-phase Weierstrass series on the unit interval.
fn weierstrass(n: usize, a: f64, b: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let terms = (WEIERSTRASS_AMPLITUDE_CUTOFF.ln() / a.ln()).ceil() as usize;
    let phases: Vec<f64> = (0..terms)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let mut acc = 0.0;
            let mut amplitude = 1.0;
            let mut frequency = 1.0;
            for &phase in &phases {
                acc += amplitude * (std::f64::consts::TAU * frequency * t + phase).cos();
                amplitude *= a;
                frequency *= b;
            }
            acc
        })
        .collect()
}

/// Fabricate a labeled cohort of recordings on the given channel registry.
///
/// Subjects split into experts (first half, rounded up) and novices;
/// presentation ids run `1A, 1G, 2A, 2G, ...`. Every channel of every
/// recording gets an independent seed derived from `root_seed`, so editing
/// one recording's stream cannot perturb any other.
pub fn make_cohort(
    n_subjects: usize,
    n_presentations: usize,
    expert_spec: &SynthSpec,
    novice_spec: &SynthSpec,
    channels: &ChannelRegistry,
    root_seed: u64,
) -> Result<Vec<Recording>> {
    expert_spec.validate()?;
    novice_spec.validate()?;
    let n_experts = n_subjects.div_ceil(2);
    let mut cohort = Vec::with_capacity(n_subjects * n_presentations);
    for subject_idx in 0..n_subjects {
        let (group, spec) = if subject_idx < n_experts {
            (Group::Expert, expert_spec)
        } else {
            (Group::Novice, novice_spec)
        };
        let subject_id = match group {
            Group::Expert => format!("expert{:02}", subject_idx + 1),
            Group::Novice => format!("novice{:02}", subject_idx + 1 - n_experts),
        };
        for pres_idx in 0..n_presentations {
            let presentation = PresentationId::new(
                (pres_idx / 2 + 1) as u32,
                if pres_idx % 2 == 0 {
                    PresentationStyle::Algebraic
                } else {
                    PresentationStyle::Geometric
                },
            );
            let channel_map = channels
                .labels()
                .iter()
                .enumerate()
                .map(|(channel_idx, label)| {
                    let derived = seed::derive(
                        root_seed,
                        &[
                            seed::component::SYNTH,
                            subject_idx as u64,
                            pres_idx as u64,
                            channel_idx as u64,
                        ],
                    );
                    let channel_spec = SynthSpec { seed: derived, ..*spec };
                    generate(&channel_spec).map(|series| (label.clone(), series))
                })
                .collect::<Result<_>>()?;
            cohort.push(Recording::new(
                subject_id.clone(),
                group,
                presentation,
                channel_map,
            )?);
        }
    }
    Ok(cohort)
}
