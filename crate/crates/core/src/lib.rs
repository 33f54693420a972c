//! # hfdkit — Higuchi fractal dimension toolkit for multichannel time series
//!
//! `hfdkit` extracts per-channel Higuchi fractal dimension (HFD) features
//! from multichannel recordings (one CSV + JSON sidecar per
//! subject-presentation pair), tunes the estimator's `k_max` hyperparameter
//! by maximizing the cross-channel spread, contrasts expert and novice
//! cohorts per channel with one-sided Welch t-tests, and trains four
//! classifier families under three dataset-split protocols with seeded
//! 10-fold cross-validation.
//!
//! ```text
//! recordings ─ signal ─ hfd ─┬─ tuner      (pick k_max by spread argmax)
//!                            ├─ stats      (group deltas, t-tests, ranking)
//!                            └─ ml         (splits, kNN/SVM/tree/AdaBoost, CV)
//! synth  — generators with known fractal dimension (the test oracle)
//! io     — CSV/JSON formats, run config, end-to-end pipeline
//! ```
//!
//! Everything is deterministic: generators, splits, and solvers draw from
//! seeds derived through [`seed::derive`], channel/window parallelism never
//! changes summation order, and serialized reports are byte-identical
//! across reruns.
//!
//! ## Quick start
//!
//! ```
//! use hfdkit::hfd::{higuchi_fd, HfdParams};
//! use hfdkit::signal::TimeSeries;
//!
//! let ramp = TimeSeries::new((1..=1024).map(f64::from).collect(), 1.0).unwrap();
//! let fd = higuchi_fd(&ramp, HfdParams::new(16).unwrap()).unwrap();
//! assert!((fd - 1.0).abs() < 1e-9);
//! ```

pub mod error;
pub mod hfd;
pub mod io;
pub mod ml;
pub mod seed;
pub mod signal;
pub mod stats;
pub mod synth;
pub mod tuner;

pub use error::{Error, Result};
pub use hfd::{curve_length_lk, curve_length_lmk, higuchi_fd, HfdParams, HfdVector};
pub use signal::{ChannelRegistry, Group, PresentationId, PresentationStyle, Recording, TimeSeries};
