//! Higuchi fractal dimension estimator.
//!
//! For a series `x(1..N)` and stride `k`, the curve length of the subseries
//! starting at offset `m` is
//!
//! ```text
//! L_m(k) = (1/k) * [ sum_{i=1..M} |x(m+ik) - x(m+(i-1)k)| ] * (N-1)/(M*k),
//! M = floor((N-m)/k)
//! ```
//!
//! `L(k)` averages `L_m(k)` over the `k` offsets, and the fractal dimension
//! is the ordinary-least-squares slope (with intercept) of `ln L(k)` against
//! `ln(1/k)` for `k = 1..k_max`. Smooth signals score near 1, noise-like
//! signals near 2. Formulas here are written 1-based; storage is 0-based.
//!
//! Summation order inside each `L(k)` is fixed (sequential in `i`, then `m`),
//! so results are bit-identical regardless of how many channels or windows
//! are computed in parallel around it.

use indexmap::IndexMap;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::{Group, PresentationId, Recording, TimeSeries};

/// Hard validity bounds on a per-channel HFD value. Estimates of physical
/// signals live in [1, 2]; anything outside this wider band indicates a
/// broken input.
pub const SANITY_BAND: (f64, f64) = (0.5, 2.5);

/// Estimator parameters: the largest stride in the log-log fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HfdParams {
    k_max: usize,
}

impl HfdParams {
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max < 2 {
            return Err(Error::InvalidKmax { k_max, len: 0 });
        }
        Ok(Self { k_max })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Largest admissible k_max for a signal of length `len`: every stride
    /// up to k_max needs at least two points per subseries.
    pub fn max_for_len(len: usize) -> usize {
        len.saturating_sub(1) / 2
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if self.k_max > Self::max_for_len(len) {
            return Err(Error::InvalidKmax {
                k_max: self.k_max,
                len,
            });
        }
        Ok(())
    }
}

/// Curve length of the stride-`k` subseries starting at 1-based offset `m`.
pub fn curve_length_lmk(x: &TimeSeries, m: usize, k: usize) -> Result<f64> {
    let n = x.len();
    if k < 1 || m < 1 || m > k {
        return Err(Error::InvalidOffset { m, k, len: n });
    }
    let steps = (n - m) / k;
    if steps < 1 {
        return Err(Error::InvalidOffset { m, k, len: n });
    }
    let s = x.samples();
    let mut total = 0.0;
    for i in 1..=steps {
        total += (s[m - 1 + i * k] - s[m - 1 + (i - 1) * k]).abs();
    }
    let norm = (n as f64 - 1.0) / ((steps * k) as f64);
    Ok(total * norm / k as f64)
}

/// Average curve length over all `k` offsets.
pub fn curve_length_lk(x: &TimeSeries, k: usize) -> Result<f64> {
    let mut total = 0.0;
    for m in 1..=k {
        total += curve_length_lmk(x, m, k)?;
    }
    Ok(total / k as f64)
}

/// HFD of a single series: OLS slope of `(ln(1/k), ln L(k))`, `k = 1..k_max`.
pub fn higuchi_fd(x: &TimeSeries, params: HfdParams) -> Result<f64> {
    params.check_len(x.len())?;
    let k_max = params.k_max();
    let mut xs = Vec::with_capacity(k_max);
    let mut ys = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let lk = curve_length_lk(x, k)?;
        if lk <= 0.0 {
            return Err(Error::DegenerateCurveLength { k });
        }
        xs.push(-(k as f64).ln());
        ys.push(lk.ln());
    }
    Ok(ols_slope(&xs, &ys))
}

/// Least-squares slope with intercept.
fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    sxy / sxx
}

/// Identifies where a feature vector came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub subject_id: String,
    pub group: Group,
    pub presentation: PresentationId,
}

impl Provenance {
    pub fn of(rec: &Recording) -> Self {
        Self {
            subject_id: rec.subject_id.clone(),
            group: rec.group,
            presentation: rec.presentation.clone(),
        }
    }
}

/// One HFD value per channel for a whole recording.
#[derive(Debug, Clone)]
pub struct HfdVector {
    values: IndexMap<String, f64>,
    pub params: HfdParams,
    pub provenance: Provenance,
}

impl HfdVector {
    pub fn new(
        values: IndexMap<String, f64>,
        params: HfdParams,
        provenance: Provenance,
    ) -> Result<Self> {
        for (channel, &value) in &values {
            if !value.is_finite() || value < SANITY_BAND.0 || value > SANITY_BAND.1 {
                return Err(Error::OutOfSanityBand {
                    channel: channel.clone(),
                    value,
                });
            }
            if !(1.0..=2.0).contains(&value) {
                log::warn!(
                    "HFD {value:.4} for channel {channel} outside the physical range [1, 2]"
                );
            }
        }
        Ok(Self {
            values,
            params,
            provenance,
        })
    }

    pub fn values(&self) -> &IndexMap<String, f64> {
        &self.values
    }

    pub fn channels(&self) -> impl Iterator<Item = &String> {
        self.values.keys()
    }

    pub fn get(&self, channel: &str) -> Option<f64> {
        self.values.get(channel).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-channel HFD series over non-overlapping windows.
#[derive(Debug, Clone)]
pub struct HfdWindowSeries {
    values: IndexMap<String, Vec<f64>>,
    pub window_seconds: f64,
    pub params: HfdParams,
    pub provenance: Provenance,
}

impl HfdWindowSeries {
    /// Build from per-channel window values; every channel must carry the
    /// same window count and only finite values inside the sanity band.
    pub fn from_values(
        values: IndexMap<String, Vec<f64>>,
        window_seconds: f64,
        params: HfdParams,
        provenance: Provenance,
    ) -> Result<Self> {
        let expected = values.first().map_or(0, |(_, v)| v.len());
        for (channel, windows) in &values {
            if windows.len() != expected {
                return Err(Error::ChannelLengthMismatch {
                    label: channel.clone(),
                    len: windows.len(),
                    expected,
                });
            }
            for &value in windows {
                if !value.is_finite() || value < SANITY_BAND.0 || value > SANITY_BAND.1 {
                    return Err(Error::OutOfSanityBand {
                        channel: channel.clone(),
                        value,
                    });
                }
            }
        }
        Ok(Self {
            values,
            window_seconds,
            params,
            provenance,
        })
    }

    pub fn values(&self) -> &IndexMap<String, Vec<f64>> {
        &self.values
    }

    pub fn n_windows(&self) -> usize {
        self.values.first().map_or(0, |(_, v)| v.len())
    }
}

/// HFD of every channel of an already channel-filtered recording.
///
/// Channels are evaluated in parallel; per-channel failures are aggregated
/// with their labels rather than aborting on the first.
pub fn hfd_per_channel(rec: &Recording, params: HfdParams) -> Result<HfdVector> {
    let computed: Vec<(String, Result<f64>)> = rec
        .channels()
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(label, series)| ((*label).clone(), higuchi_fd(series, params)))
        .collect();
    let mut values = IndexMap::with_capacity(computed.len());
    let mut failures = Vec::new();
    for (label, result) in computed {
        match result {
            Ok(v) => {
                values.insert(label, v);
            }
            Err(e) => failures.push((label, Box::new(e))),
        }
    }
    if !failures.is_empty() {
        return Err(Error::ChannelErrors(failures));
    }
    HfdVector::new(values, params, Provenance::of(rec))
}

/// Windowed HFD: each channel is segmented and every window is estimated
/// independently. Failures are tagged `label[window i]`.
pub fn hfd_windowed(
    rec: &Recording,
    params: HfdParams,
    window_seconds: f64,
) -> Result<HfdWindowSeries> {
    let computed: Vec<(String, Result<Vec<f64>>)> = rec
        .channels()
        .iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|(label, series)| {
            let result = series.segment(window_seconds).and_then(|windows| {
                windows
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        higuchi_fd(w, params).map_err(|e| Error::ChannelErrors(vec![(
                            format!("{label}[window {i}]"),
                            Box::new(e),
                        )]))
                    })
                    .collect()
            });
            ((*label).clone(), result)
        })
        .collect();
    let mut values = IndexMap::with_capacity(computed.len());
    let mut failures = Vec::new();
    for (label, result) in computed {
        match result {
            Ok(v) => {
                values.insert(label, v);
            }
            Err(Error::ChannelErrors(mut tagged)) => failures.append(&mut tagged),
            Err(e) => failures.push((label, Box::new(e))),
        }
    }
    if !failures.is_empty() {
        return Err(Error::ChannelErrors(failures));
    }
    Ok(HfdWindowSeries {
        values,
        window_seconds,
        params,
        provenance: Provenance::of(rec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::PresentationStyle;
    use approx::assert_abs_diff_eq;
    use indexmap::IndexMap;
    use proptest::prelude::*;

    fn series(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(values, 1.0).unwrap()
    }

    fn ramp(n: usize) -> TimeSeries {
        series((1..=n).map(|i| i as f64).collect())
    }

    #[test]
    fn lmk_on_a_ramp_is_n_minus_1_over_k() {
        let x = ramp(9);
        assert_abs_diff_eq!(curve_length_lmk(&x, 1, 2).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(curve_length_lmk(&x, 2, 2).unwrap(), 4.0, epsilon = 1e-12);
        // every valid (m, k)
        for k in 1..=4 {
            for m in 1..=k {
                assert_abs_diff_eq!(
                    curve_length_lmk(&x, m, k).unwrap(),
                    8.0 / k as f64,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn lmk_of_constant_signal_is_zero() {
        let x = series(vec![3.5; 16]);
        for k in 1..=5 {
            for m in 1..=k {
                assert_eq!(curve_length_lmk(&x, m, k).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn lmk_rejects_bad_offsets() {
        let x = ramp(9);
        assert!(matches!(
            curve_length_lmk(&x, 3, 2),
            Err(Error::InvalidOffset { m: 3, k: 2, .. })
        ));
        // m == k == len: floor((9-9)/9) = 0 steps
        assert!(curve_length_lmk(&x, 9, 9).is_err());
    }

    #[test]
    fn lk_examples() {
        let x = ramp(9);
        assert_abs_diff_eq!(curve_length_lk(&x, 2).unwrap(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(curve_length_lk(&x, 1).unwrap(), 8.0, epsilon = 1e-12);
        let alternating = series(vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(curve_length_lk(&alternating, 2).unwrap(), 0.0);
    }

    #[test]
    fn ramp_dimension_is_exactly_one() {
        let x = ramp(64);
        let fd = higuchi_fd(&x, HfdParams::new(8).unwrap()).unwrap();
        assert_abs_diff_eq!(fd, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn alternating_signal_degenerates_at_k_2() {
        let x = series([0.0, 1.0].repeat(8));
        assert!(matches!(
            higuchi_fd(&x, HfdParams::new(2).unwrap()),
            Err(Error::DegenerateCurveLength { k: 2 })
        ));
    }

    #[test]
    fn kmax_bounds_are_enforced() {
        assert!(HfdParams::new(1).is_err());
        let params = HfdParams::new(8).unwrap();
        // len 16: (16-1)/2 = 7 < 8
        assert!(matches!(
            higuchi_fd(&ramp(16), params),
            Err(Error::InvalidKmax { k_max: 8, len: 16 })
        ));
        assert!(higuchi_fd(&ramp(17), params).is_ok());
    }

    fn toy_recording(channels: Vec<(&str, TimeSeries)>) -> Recording {
        let map: IndexMap<String, TimeSeries> = channels
            .into_iter()
            .map(|(l, s)| (l.to_string(), s))
            .collect();
        Recording::new(
            "s01",
            Group::Expert,
            PresentationId::new(1, PresentationStyle::Algebraic),
            map,
        )
        .unwrap()
    }

    #[test]
    fn per_channel_ramps_are_all_one() {
        let rec = toy_recording(vec![("Fp1", ramp(64)), ("Fpz", ramp(64)), ("Fp2", ramp(64))]);
        let vector = hfd_per_channel(&rec, HfdParams::new(8).unwrap()).unwrap();
        assert_eq!(vector.len(), 3);
        for (_, &v) in vector.values() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn full_registry_recording_yields_124_values() {
        let registry = crate::signal::ChannelRegistry::builtin();
        let channels: IndexMap<String, TimeSeries> = registry
            .labels()
            .iter()
            .map(|l| (l.clone(), ramp(64)))
            .collect();
        let rec = Recording::new(
            "s01",
            Group::Expert,
            PresentationId::new(1, PresentationStyle::Algebraic),
            channels,
        )
        .unwrap();
        let vector = hfd_per_channel(&rec, HfdParams::new(8).unwrap()).unwrap();
        assert_eq!(vector.len(), 124);
        assert!(vector.values().values().all(|v| (v - 1.0).abs() <= 1e-9));
        // channel order follows the registry
        let order: Vec<&String> = vector.channels().collect();
        assert_eq!(order[0], "Fp1");
        assert_eq!(order[123], "OI2h");
    }

    #[test]
    fn per_channel_failure_names_the_channel() {
        let rec = toy_recording(vec![("Fp1", ramp(64)), ("Cz", series(vec![2.0; 64]))]);
        match hfd_per_channel(&rec, HfdParams::new(8).unwrap()) {
            Err(Error::ChannelErrors(failures)) => {
                assert_eq!(failures.len(), 1);
                assert_eq!(failures[0].0, "Cz");
                assert!(matches!(
                    *failures[0].1,
                    Error::DegenerateCurveLength { k: 1 }
                ));
            }
            other => panic!("expected ChannelErrors, got {other:?}"),
        }
    }

    #[test]
    fn windowed_counts_match_segmentation() {
        // 40 "seconds" at 16 Hz with 8 s windows -> 5 windows per channel
        let ts = TimeSeries::new((1..=640).map(|i| i as f64).collect(), 16.0).unwrap();
        let rec = toy_recording(vec![("Fp1", ts.clone()), ("Fpz", ts)]);
        let windows = hfd_windowed(&rec, HfdParams::new(8).unwrap(), 8.0).unwrap();
        assert_eq!(windows.n_windows(), 5);
        assert!(windows.values().values().all(|v| v.len() == 5));
    }

    #[test]
    fn single_window_equals_whole_signal_hfd() {
        let ts = TimeSeries::new((1..=64).map(|i| (i as f64 * 0.37).sin()).collect(), 1.0).unwrap();
        let params = HfdParams::new(8).unwrap();
        let rec = toy_recording(vec![("Fp1", ts.clone())]);
        let windows = hfd_windowed(&rec, params, 64.0).unwrap();
        let whole = higuchi_fd(&ts, params).unwrap();
        assert_eq!(windows.values()["Fp1"], vec![whole]);
    }

    #[test]
    fn windowed_failure_is_tagged_with_window_index() {
        // second half constant -> window 1 degenerates
        let mut samples: Vec<f64> = (1..=32).map(|i| (i as f64 * 0.7).sin()).collect();
        samples.extend(vec![0.0; 32]);
        let rec = toy_recording(vec![("Fp1", TimeSeries::new(samples, 1.0).unwrap())]);
        match hfd_windowed(&rec, HfdParams::new(4).unwrap(), 32.0) {
            Err(Error::ChannelErrors(failures)) => {
                assert_eq!(failures[0].0, "Fp1[window 1]");
            }
            other => panic!("expected ChannelErrors, got {other:?}"),
        }
    }

    #[test]
    fn sanity_band_is_enforced_on_vectors() {
        let mut values = IndexMap::new();
        values.insert("Fp1".to_string(), 3.0);
        let provenance = Provenance {
            subject_id: "s".into(),
            group: Group::Expert,
            presentation: PresentationId::new(1, PresentationStyle::Algebraic),
        };
        assert!(matches!(
            HfdVector::new(values, HfdParams::new(2).unwrap(), provenance),
            Err(Error::OutOfSanityBand { .. })
        ));
    }

    proptest! {
        // Scaling multiplies every L(k) by |a| and shifting adds nothing, so
        // the slope of ln L(k) on ln(1/k) is untouched.
        #[test]
        fn affine_amplitude_invariance(
            seed in 0u64..1000,
            a in prop_oneof![Just(0.5f64), Just(-2.0), Just(3.0), Just(10.0)],
            b in -100.0f64..100.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let base: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
            let params = HfdParams::new(10).unwrap();
            let fd = higuchi_fd(&series(base.clone()), params).unwrap();
            let mapped: Vec<f64> = base.iter().map(|v| a * v + b).collect();
            let fd_mapped = higuchi_fd(&series(mapped), params).unwrap();
            prop_assert!((fd - fd_mapped).abs() <= 1e-9);
        }
    }
}
