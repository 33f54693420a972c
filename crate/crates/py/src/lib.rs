//! Python bindings for the main hfdkit operations.
//!
//! Build with `cargo build -p hfdkit-py --release`; the resulting cdylib
//! imports as `hfdkit_py` once renamed to `hfdkit_py.so` (see
//! `python/smoke_test.py`).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use hfdkit::hfd::{curve_length_lk, curve_length_lmk, higuchi_fd, HfdParams};
use hfdkit::signal::TimeSeries;
use hfdkit::stats::{one_sided_t, Direction};
use hfdkit::synth::{generate, SynthKind, SynthSpec};
use hfdkit::tuner::{spread_of, CandidateSummary, TuningReport};

fn value_error(e: hfdkit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn series(samples: Vec<f64>) -> PyResult<TimeSeries> {
    TimeSeries::new(samples, 1.0).map_err(value_error)
}

/// Higuchi fractal dimension of a 1-D signal.
#[pyfunction]
fn hfd(samples: Vec<f64>, k_max: usize) -> PyResult<f64> {
    let params = HfdParams::new(k_max).map_err(value_error)?;
    higuchi_fd(&series(samples)?, params).map_err(value_error)
}

/// Average curve length L(k) at stride k.
#[pyfunction]
fn curve_length(samples: Vec<f64>, k: usize) -> PyResult<f64> {
    curve_length_lk(&series(samples)?, k).map_err(value_error)
}

/// Curve length L_m(k) of the stride-k subseries starting at 1-based m.
#[pyfunction]
fn curve_length_offset(samples: Vec<f64>, m: usize, k: usize) -> PyResult<f64> {
    curve_length_lmk(&series(samples)?, m, k).map_err(value_error)
}

/// Max minus min of a value list (channel spread).
#[pyfunction]
fn spread(values: Vec<f64>) -> PyResult<f64> {
    spread_of(values).map_err(value_error)
}

/// Pick k_max from (candidate, mean_spread) pairs: spread argmax, ties to
/// the smaller candidate.
#[pyfunction]
fn choose_k_max(candidates: Vec<usize>, mean_spreads: Vec<f64>) -> PyResult<usize> {
    if candidates.len() != mean_spreads.len() {
        return Err(PyValueError::new_err("length mismatch"));
    }
    let summaries = candidates
        .into_iter()
        .zip(mean_spreads)
        .map(|(k_max, mean_spread)| CandidateSummary {
            k_max,
            mean_hfd: 0.0,
            std_hfd: 0.0,
            mean_spread,
            std_spread: 0.0,
        })
        .collect();
    TuningReport::from_aggregates(summaries)
        .map(|report| report.chosen_k_max)
        .map_err(value_error)
}

/// Welch's one-sided t-test; direction is "less" or "greater". Returns
/// (t, p).
#[pyfunction]
fn welch_one_sided_t(a: Vec<f64>, b: Vec<f64>, direction: &str) -> PyResult<(f64, f64)> {
    let direction: Direction = direction.parse().map_err(value_error)?;
    one_sided_t(&a, &b, direction).map_err(value_error)
}

#[pyfunction]
fn ramp(length: usize) -> PyResult<Vec<f64>> {
    sample(SynthKind::Ramp, length, 0)
}

#[pyfunction]
fn white_noise(length: usize, seed: u64) -> PyResult<Vec<f64>> {
    sample(SynthKind::WhiteNoise, length, seed)
}

/// Fractional Brownian motion with exact-covariance increments; graph
/// dimension 2 - hurst.
#[pyfunction]
fn fbm(length: usize, hurst: f64, seed: u64) -> PyResult<Vec<f64>> {
    sample(
        SynthKind::FractionalBrownianMotion { hurst },
        length,
        seed,
    )
}

/// Random-phase Weierstrass series; graph dimension 2 + ln(a)/ln(b).
#[pyfunction]
fn weierstrass(length: usize, a: f64, b: f64, seed: u64) -> PyResult<Vec<f64>> {
    sample(SynthKind::Weierstrass { a, b }, length, seed)
}

/// Analytic fractal dimension of a generator, if known.
#[pyfunction]
#[pyo3(signature = (kind, hurst=None, a=None, b=None))]
fn expected_fd(kind: &str, hurst: Option<f64>, a: Option<f64>, b: Option<f64>) -> PyResult<Option<f64>> {
    let kind = match kind {
        "ramp" => SynthKind::Ramp,
        "sine" => SynthKind::Sine { frequency_hz: 1.0 },
        "white-noise" => SynthKind::WhiteNoise,
        "fbm" => SynthKind::FractionalBrownianMotion {
            hurst: hurst.ok_or_else(|| PyValueError::new_err("fbm needs hurst"))?,
        },
        "weierstrass" => SynthKind::Weierstrass {
            a: a.ok_or_else(|| PyValueError::new_err("weierstrass needs a"))?,
            b: b.ok_or_else(|| PyValueError::new_err("weierstrass needs b"))?,
        },
        "alternating" => SynthKind::AlternatingBinary,
        other => return Err(PyValueError::new_err(format!("unknown kind {other:?}"))),
    };
    let spec = SynthSpec::new(kind, 16, 0, 1.0);
    spec.validate().map_err(value_error)?;
    Ok(spec.expected_fd())
}

fn sample(kind: SynthKind, length: usize, seed: u64) -> PyResult<Vec<f64>> {
    let spec = SynthSpec::new(kind, length, seed, 1.0);
    generate(&spec)
        .map(|ts| ts.samples().to_vec())
        .map_err(value_error)
}

#[pymodule]
fn hfdkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(hfd, m)?)?;
    m.add_function(wrap_pyfunction!(curve_length, m)?)?;
    m.add_function(wrap_pyfunction!(curve_length_offset, m)?)?;
    m.add_function(wrap_pyfunction!(spread, m)?)?;
    m.add_function(wrap_pyfunction!(choose_k_max, m)?)?;
    m.add_function(wrap_pyfunction!(welch_one_sided_t, m)?)?;
    m.add_function(wrap_pyfunction!(ramp, m)?)?;
    m.add_function(wrap_pyfunction!(white_noise, m)?)?;
    m.add_function(wrap_pyfunction!(fbm, m)?)?;
    m.add_function(wrap_pyfunction!(weierstrass, m)?)?;
    m.add_function(wrap_pyfunction!(expected_fd, m)?)?;
    Ok(())
}
