//! Per-participant feature vectors for the speaking, gaze, and location
//! modalities: temporal statistics plus the first three non-DC DFT magnitudes
//! of the binned start-time series.
//!
//! All standard deviations are population (divide by n), so single-event logs
//! stay well defined. Point events are binned into [`EVENT_BINS`] equal bins
//! over the session before the DFT.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logmodel::{GroupSession, LocationSample, ParticipantLog};

/// Bin count used for event-series spectra.
pub const EVENT_BINS: usize = 256;

/// Speed threshold (length units per second) below which an interval counts
/// as idle.
pub const DEFAULT_V_IDLE: f64 = 0.05;

/// Cap applied to tortuosity when the net displacement degenerates.
pub const TORTUOSITY_CAP: f64 = 1e6;
const TORTUOSITY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakingFeatures {
    pub instance_count: f64,
    pub ts_mean: f64,
    pub ts_std: f64,
    pub dur_mean: f64,
    pub dur_std: f64,
    pub fft1: f64,
    pub fft2: f64,
    pub fft3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeFeatures {
    pub instance_count: f64,
    pub ts_mean: f64,
    pub ts_std: f64,
    pub dur_mean: f64,
    pub dur_std: f64,
    pub fft1: f64,
    pub fft2: f64,
    pub fft3: f64,
    pub object_entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationFeatures {
    pub instance_count: f64,
    pub ts_mean: f64,
    pub ts_std: f64,
    pub x_mean: f64,
    pub x_std: f64,
    pub y_mean: f64,
    pub y_std: f64,
    pub z_mean: f64,
    pub z_std: f64,
    pub x_range: f64,
    pub y_range: f64,
    pub z_range: f64,
    pub total_distance: f64,
    pub total_time: f64,
    pub speed_mean: f64,
    pub speed_max: f64,
    pub accel_mean: f64,
    pub accel_max: f64,
    pub jerk_mean: f64,
    pub tortuosity: f64,
    pub idle_fraction: f64,
    pub fft1: f64,
    pub fft2: f64,
    pub fft3: f64,
}

/// Documented column order for the speaking modality CSV/matrix.
pub const SPEAKING_COLUMNS: [&str; 8] = [
    "instance_count",
    "ts_mean",
    "ts_std",
    "dur_mean",
    "dur_std",
    "fft1",
    "fft2",
    "fft3",
];

/// Documented column order for the gaze modality CSV/matrix.
pub const GAZE_COLUMNS: [&str; 9] = [
    "instance_count",
    "ts_mean",
    "ts_std",
    "dur_mean",
    "dur_std",
    "fft1",
    "fft2",
    "fft3",
    "object_entropy",
];

/// Documented column order for the location modality CSV/matrix.
pub const LOCATION_COLUMNS: [&str; 24] = [
    "instance_count",
    "ts_mean",
    "ts_std",
    "x_mean",
    "x_std",
    "y_mean",
    "y_std",
    "z_mean",
    "z_std",
    "x_range",
    "y_range",
    "z_range",
    "total_distance",
    "total_time",
    "speed_mean",
    "speed_max",
    "accel_mean",
    "accel_max",
    "jerk_mean",
    "tortuosity",
    "idle_fraction",
    "fft1",
    "fft2",
    "fft3",
];

impl SpeakingFeatures {
    pub fn to_row(&self) -> Vec<f64> {
        vec![
            self.instance_count,
            self.ts_mean,
            self.ts_std,
            self.dur_mean,
            self.dur_std,
            self.fft1,
            self.fft2,
            self.fft3,
        ]
    }
}

impl GazeFeatures {
    pub fn to_row(&self) -> Vec<f64> {
        vec![
            self.instance_count,
            self.ts_mean,
            self.ts_std,
            self.dur_mean,
            self.dur_std,
            self.fft1,
            self.fft2,
            self.fft3,
            self.object_entropy,
        ]
    }
}

impl LocationFeatures {
    pub fn to_row(&self) -> Vec<f64> {
        vec![
            self.instance_count,
            self.ts_mean,
            self.ts_std,
            self.x_mean,
            self.x_std,
            self.y_mean,
            self.y_std,
            self.z_mean,
            self.z_std,
            self.x_range,
            self.y_range,
            self.z_range,
            self.total_distance,
            self.total_time,
            self.speed_mean,
            self.speed_max,
            self.accel_mean,
            self.accel_max,
            self.jerk_mean,
            self.tortuosity,
            self.idle_fraction,
            self.fft1,
            self.fft2,
            self.fft3,
        ]
    }
}

/// Row-major feature matrix with a fixed column order. `col_means`/`col_stds`
/// are populated by [`standardize`] so the transform can be inverted or
/// re-applied to new rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub row_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub col_means: Option<Vec<f64>>,
    pub col_stds: Option<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(columns: &[&str]) -> Self {
        FeatureMatrix {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            row_ids: Vec::new(),
            rows: Vec::new(),
            col_means: None,
            col_stds: None,
        }
    }

    pub fn push_row(&mut self, id: impl Into<String>, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.row_ids.push(id.into());
        self.rows.push(row);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Values of the named column, if present.
    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.column(j))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("row_id");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (id, row) in self.row_ids.iter().zip(&self.rows) {
            out.push_str(id);
            for v in row {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Population standard deviation; 0 for empty input.
pub fn pop_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Count event start times into `n_bins` equal bins over `[0, session_duration]`.
/// A start exactly at the session end lands in the last bin, so the bins sum
/// to the event count.
pub fn bin_event_series(starts: &[f64], session_duration: f64, n_bins: usize) -> Vec<f64> {
    assert!(n_bins >= 2, "n_bins must be at least 2");
    let mut bins = vec![0.0; n_bins];
    let width = session_duration / n_bins as f64;
    for &s in starts {
        let idx = if width > 0.0 {
            ((s / width).floor() as usize).min(n_bins - 1)
        } else {
            0
        };
        bins[idx] += 1.0;
    }
    bins
}

/// Magnitudes of the first three non-DC coefficients of the unnormalized
/// forward DFT.
pub fn dft_magnitudes(series: &[f64]) -> Result<(f64, f64, f64)> {
    dft_magnitudes_k(series, 3).map(|m| (m[0], m[1], m[2]))
}

/// Magnitudes |X_1| .. |X_k|.
pub fn dft_magnitudes_k(series: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 2 * k + 1 {
        return Err(Error::InvalidInput(format!(
            "series of length {n} too short for {k} harmonics"
        )));
    }
    let mut out = Vec::with_capacity(k);
    for h in 1..=k {
        let (re, im) = dft_coefficient(series, h);
        out.push((re * re + im * im).sqrt());
    }
    Ok(out)
}

/// Single unnormalized forward DFT coefficient X_h as (re, im).
pub fn dft_coefficient(series: &[f64], h: usize) -> (f64, f64) {
    let n = series.len() as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    for (i, &x) in series.iter().enumerate() {
        let angle = -2.0 * std::f64::consts::PI * h as f64 * i as f64 / n;
        re += x * angle.cos();
        im += x * angle.sin();
    }
    (re, im)
}

pub fn extract_speaking_features(log: &ParticipantLog, session_duration: f64) -> SpeakingFeatures {
    let starts: Vec<f64> = log.speaking.iter().map(|e| e.start).collect();
    let durs: Vec<f64> = log.speaking.iter().map(|e| e.duration).collect();
    let (fft1, fft2, fft3) = event_spectrum(&starts, session_duration);
    SpeakingFeatures {
        instance_count: starts.len() as f64,
        ts_mean: mean(&starts),
        ts_std: pop_std(&starts),
        dur_mean: mean(&durs),
        dur_std: pop_std(&durs),
        fft1,
        fft2,
        fft3,
    }
}

pub fn extract_gaze_features(
    log: &ParticipantLog,
    session_duration: f64,
    catalog: &[String],
) -> GazeFeatures {
    let starts: Vec<f64> = log.gaze.iter().map(|e| e.start).collect();
    let durs: Vec<f64> = log.gaze.iter().map(|e| e.duration).collect();
    let (fft1, fft2, fft3) = event_spectrum(&starts, session_duration);
    GazeFeatures {
        instance_count: starts.len() as f64,
        ts_mean: mean(&starts),
        ts_std: pop_std(&starts),
        dur_mean: mean(&durs),
        dur_std: pop_std(&durs),
        fft1,
        fft2,
        fft3,
        object_entropy: object_entropy(log, catalog),
    }
}

/// Shannon entropy (nats) of the empirical fixation-target distribution.
fn object_entropy(log: &ParticipantLog, catalog: &[String]) -> f64 {
    if log.gaze.is_empty() {
        return 0.0;
    }
    // BTreeMap keeps the summation order fixed so entropy is bit-reproducible
    let mut counts: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for ev in &log.gaze {
        *counts.entry(ev.target_object_id.as_str()).or_insert(0) += 1;
    }
    let total = log.gaze.len() as f64;
    let mut h = 0.0;
    for (_, c) in counts {
        let p = c as f64 / total;
        h -= p * p.ln();
    }
    // clamp tiny negative rounding; entropy is bounded by ln |catalog|
    h.max(0.0).min((catalog.len().max(1) as f64).ln().max(0.0))
}

fn event_spectrum(starts: &[f64], session_duration: f64) -> (f64, f64, f64) {
    let series = bin_event_series(starts, session_duration, EVENT_BINS);
    dft_magnitudes(&series).unwrap_or((0.0, 0.0, 0.0))
}

/// Arc length over net displacement, with an epsilon guard and a cap for
/// closed paths.
pub fn path_tortuosity(samples: &[LocationSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput(
            "tortuosity requires at least 2 samples".into(),
        ));
    }
    let mut arc = 0.0;
    for w in samples.windows(2) {
        arc += dist3(&w[0], &w[1]);
    }
    let net = dist3(&samples[0], &samples[samples.len() - 1]);
    Ok((arc / net.max(TORTUOSITY_EPS)).min(TORTUOSITY_CAP).max(1.0))
}

fn dist3(a: &LocationSample, b: &LocationSample) -> f64 {
    ((b.x - a.x).powi(2) + (b.y - a.y).powi(2) + (b.z - a.z).powi(2)).sqrt()
}

pub fn extract_location_features(
    log: &ParticipantLog,
    session_duration: f64,
    v_idle: f64,
) -> LocationFeatures {
    let s = &log.locations;
    let ts: Vec<f64> = s.iter().map(|p| p.t).collect();
    let xs: Vec<f64> = s.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = s.iter().map(|p| p.y).collect();
    let zs: Vec<f64> = s.iter().map(|p| p.z).collect();
    let range = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
            mx - mn
        }
    };
    let (fft1, fft2, fft3) = event_spectrum(&ts, session_duration);

    let mut total_distance = 0.0;
    let mut speeds = Vec::new();
    let mut dts = Vec::new();
    for w in s.windows(2) {
        let d = dist3(&w[0], &w[1]);
        let dt = w[1].t - w[0].t;
        total_distance += d;
        speeds.push(d / dt);
        dts.push(dt);
    }
    // accelerations between consecutive velocity vectors, jerks between
    // consecutive scalar accelerations
    let mut accels = Vec::new();
    for i in 0..speeds.len().saturating_sub(1) {
        let v0 = velocity(&s[i], &s[i + 1]);
        let v1 = velocity(&s[i + 1], &s[i + 2]);
        let dt = (dts[i] + dts[i + 1]) / 2.0;
        let dv = ((v1.0 - v0.0).powi(2) + (v1.1 - v0.1).powi(2) + (v1.2 - v0.2).powi(2)).sqrt();
        accels.push(dv / dt);
    }
    let mut jerks = Vec::new();
    for i in 0..accels.len().saturating_sub(1) {
        let dt = (dts[i] + 2.0 * dts[i + 1] + dts[i + 2]) / 4.0;
        jerks.push((accels[i + 1] - accels[i]).abs() / dt);
    }

    let idle_fraction = if dts.is_empty() {
        0.0
    } else {
        let total_dt: f64 = dts.iter().sum();
        let idle_dt: f64 = dts
            .iter()
            .zip(&speeds)
            .filter(|(_, &sp)| sp < v_idle)
            .map(|(dt, _)| dt)
            .sum();
        idle_dt / total_dt
    };

    LocationFeatures {
        instance_count: s.len() as f64,
        ts_mean: mean(&ts),
        ts_std: pop_std(&ts),
        x_mean: mean(&xs),
        x_std: pop_std(&xs),
        y_mean: mean(&ys),
        y_std: pop_std(&ys),
        z_mean: mean(&zs),
        z_std: pop_std(&zs),
        x_range: range(&xs),
        y_range: range(&ys),
        z_range: range(&zs),
        total_distance,
        total_time: if s.len() >= 2 { s[s.len() - 1].t - s[0].t } else { 0.0 },
        speed_mean: mean(&speeds),
        speed_max: speeds.iter().cloned().fold(0.0, f64::max),
        accel_mean: mean(&accels),
        accel_max: accels.iter().cloned().fold(0.0, f64::max),
        jerk_mean: mean(&jerks),
        tortuosity: path_tortuosity(s).unwrap_or(1.0),
        idle_fraction,
        fft1,
        fft2,
        fft3,
    }
}

fn velocity(a: &LocationSample, b: &LocationSample) -> (f64, f64, f64) {
    let dt = b.t - a.t;
    ((b.x - a.x) / dt, (b.y - a.y) / dt, (b.z - a.z) / dt)
}

/// Zero-mean unit-std columns (population std). Columns with std below
/// 1e-12 are set to zero. The inverse transform is stored on the result.
pub fn standardize(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    if matrix.n_rows() < 2 {
        return Err(Error::InvalidInput(
            "standardize requires at least 2 rows".into(),
        ));
    }
    let mut means = Vec::with_capacity(matrix.n_cols());
    let mut stds = Vec::with_capacity(matrix.n_cols());
    for j in 0..matrix.n_cols() {
        let col = matrix.column(j);
        means.push(mean(&col));
        stds.push(pop_std(&col));
    }
    let rows = matrix
        .rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, &v)| {
                    if stds[j] < 1e-12 {
                        0.0
                    } else {
                        (v - means[j]) / stds[j]
                    }
                })
                .collect()
        })
        .collect();
    Ok(FeatureMatrix {
        columns: matrix.columns.clone(),
        row_ids: matrix.row_ids.clone(),
        rows,
        col_means: Some(means),
        col_stds: Some(stds),
    })
}

fn participant_row_id(session: &GroupSession, log: &ParticipantLog) -> String {
    format!("{}/{}", session.group_id, log.participant_id)
}

/// Speaking feature matrix over all participants of a corpus, in session
/// order then participant order.
pub fn speaking_feature_matrix(corpus: &[GroupSession]) -> FeatureMatrix {
    let mut m = FeatureMatrix::new(&SPEAKING_COLUMNS);
    for session in corpus {
        for log in &session.participants {
            m.push_row(
                participant_row_id(session, log),
                extract_speaking_features(log, session.duration).to_row(),
            );
        }
    }
    m
}

pub fn gaze_feature_matrix(corpus: &[GroupSession]) -> FeatureMatrix {
    let mut m = FeatureMatrix::new(&GAZE_COLUMNS);
    for session in corpus {
        for log in &session.participants {
            m.push_row(
                participant_row_id(session, log),
                extract_gaze_features(log, session.duration, &session.object_catalog).to_row(),
            );
        }
    }
    m
}

pub fn location_feature_matrix(corpus: &[GroupSession], v_idle: f64) -> FeatureMatrix {
    let mut m = FeatureMatrix::new(&LOCATION_COLUMNS);
    for session in corpus {
        for log in &session.participants {
            m.push_row(
                participant_row_id(session, log),
                extract_location_features(log, session.duration, v_idle).to_row(),
            );
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logmodel::SpeakingEvent;

    fn log_with_speaking(times: &[(f64, f64)]) -> ParticipantLog {
        let mut log = ParticipantLog::empty("p0");
        log.speaking = times
            .iter()
            .map(|&(start, duration)| SpeakingEvent {
                participant_id: "p0".into(),
                start,
                duration,
            })
            .collect();
        log
    }

    /// O(N^2) naive full DFT, independent of the production path.
    fn naive_dft(series: &[f64]) -> Vec<(f64, f64)> {
        let n = series.len();
        (0..n)
            .map(|k| {
                let mut re = 0.0;
                let mut im = 0.0;
                for (i, &x) in series.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                    re += x * ang.cos();
                    im += x * ang.sin();
                }
                (re, im)
            })
            .collect()
    }

    #[test]
    fn bin_empty_is_zero() {
        assert_eq!(bin_event_series(&[], 10.0, 4), vec![0.0; 4]);
    }

    #[test]
    fn bin_single_event_at_origin() {
        assert_eq!(bin_event_series(&[0.0], 8.0, 4), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bin_end_of_session_lands_in_last_bin() {
        let bins = bin_event_series(&[8.0], 8.0, 4);
        assert_eq!(bins, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn bin_uniform_counts_within_binomial_bound() {
        // 100 deterministic quasi-uniform events over [0, 10)
        let starts: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let bins = bin_event_series(&starts, 10.0, 10);
        assert_eq!(bins.iter().sum::<f64>(), 100.0);
        // binomial 3 sigma around 10: sqrt(100 * 0.1 * 0.9) = 3
        for b in bins {
            assert!((b - 10.0).abs() <= 9.0);
        }
    }

    #[test]
    fn dft_constant_series_has_no_harmonics() {
        let series = vec![3.5; 64];
        let (m1, m2, m3) = dft_magnitudes(&series).unwrap();
        assert!(m1.abs() < 1e-9 && m2.abs() < 1e-9 && m3.abs() < 1e-9);
    }

    #[test]
    fn dft_pure_cosine_harmonic_two() {
        let n = 64;
        let series: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 2.0 * i as f64 / n as f64).cos())
            .collect();
        let (m1, m2, m3) = dft_magnitudes(&series).unwrap();
        assert!((m2 - 32.0).abs() < 1e-9, "m2={m2}");
        assert!(m1 < 1e-9 && m3 < 1e-9);
    }

    #[test]
    fn dft_matches_naive_oracle() {
        let mut x = 0.5_f64;
        let series: Vec<f64> = (0..50)
            .map(|_| {
                x = (x * 1103515245.0 + 12345.0) % 97.0;
                x / 97.0
            })
            .collect();
        let oracle = naive_dft(&series);
        let mags = dft_magnitudes_k(&series, 3).unwrap();
        for (h, m) in mags.iter().enumerate() {
            let (re, im) = oracle[h + 1];
            assert!((m - (re * re + im * im).sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn dft_too_short_errors() {
        assert!(dft_magnitudes(&[1.0; 6]).is_err());
        assert!(dft_magnitudes(&[1.0; 7]).is_ok());
    }

    #[test]
    fn parseval_holds_on_naive_full_spectrum() {
        let series: Vec<f64> = (0..128).map(|i| ((i * 37 % 11) as f64) - 5.0).collect();
        let spectrum = naive_dft(&series);
        let time_energy: f64 = series.iter().map(|x| x * x).sum();
        let freq_energy: f64 =
            spectrum.iter().map(|(re, im)| re * re + im * im).sum::<f64>() / series.len() as f64;
        assert!((time_energy - freq_energy).abs() / time_energy < 1e-9);
    }

    #[test]
    fn speaking_features_zero_events() {
        let log = log_with_speaking(&[]);
        let f = extract_speaking_features(&log, 100.0);
        assert_eq!(f.instance_count, 0.0);
        assert_eq!(f.ts_mean, 0.0);
        assert_eq!(f.dur_std, 0.0);
        assert_eq!((f.fft1, f.fft2, f.fft3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn speaking_features_hand_computed() {
        let log = log_with_speaking(&[(10.0, 2.0), (20.0, 2.0), (30.0, 2.0)]);
        let f = extract_speaking_features(&log, 100.0);
        assert_eq!(f.instance_count, 3.0);
        assert!((f.ts_mean - 20.0).abs() < 1e-12);
        // population std of {10,20,30}: sqrt(200/3)
        assert!((f.ts_std - (200.0_f64 / 3.0).sqrt()).abs() < 1e-9);
        assert!((f.dur_mean - 2.0).abs() < 1e-12);
        assert_eq!(f.dur_std, 0.0);
    }

    #[test]
    fn time_shift_moves_only_ts_mean() {
        let log_a = log_with_speaking(&[(10.0, 2.0), (20.0, 1.0), (30.0, 2.0)]);
        let log_b = log_with_speaking(&[(15.0, 2.0), (25.0, 1.0), (35.0, 2.0)]);
        let fa = extract_speaking_features(&log_a, 200.0);
        let fb = extract_speaking_features(&log_b, 200.0);
        assert!((fb.ts_mean - fa.ts_mean - 5.0).abs() < 1e-9);
        assert!((fb.ts_std - fa.ts_std).abs() < 1e-9);
        assert!((fb.dur_mean - fa.dur_mean).abs() < 1e-12);
        assert!((fb.dur_std - fa.dur_std).abs() < 1e-12);
    }

    fn gaze_log(targets: &[&str]) -> ParticipantLog {
        let mut log = ParticipantLog::empty("p0");
        log.gaze = targets
            .iter()
            .enumerate()
            .map(|(i, t)| crate::logmodel::GazeEvent {
                participant_id: "p0".into(),
                start: i as f64,
                duration: 0.1,
                target_object_id: t.to_string(),
            })
            .collect();
        log
    }

    #[test]
    fn entropy_single_object_is_zero() {
        let catalog: Vec<String> = vec!["a".into(), "b".into()];
        let f = extract_gaze_features(&gaze_log(&["a", "a", "a"]), 10.0, &catalog);
        assert_eq!(f.object_entropy, 0.0);
    }

    #[test]
    fn entropy_uniform_four_objects() {
        let catalog: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let f = extract_gaze_features(&gaze_log(&["a", "b", "c", "d"]), 10.0, &catalog);
        assert!((f.object_entropy - 4.0_f64.ln()).abs() < 1e-12);
    }

    fn loc(t: f64, x: f64, y: f64, z: f64) -> LocationSample {
        LocationSample {
            participant_id: "p0".into(),
            t,
            x,
            y,
            z,
        }
    }

    #[test]
    fn tortuosity_two_points_is_one() {
        let samples = vec![loc(0.0, 0.0, 0.0, 0.0), loc(1.0, 3.0, 4.0, 0.0)];
        assert!((path_tortuosity(&samples).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tortuosity_l_path_hand_geometry() {
        let samples = vec![
            loc(0.0, 0.0, 0.0, 0.0),
            loc(1.0, 1.0, 0.0, 0.0),
            loc(2.0, 1.0, 1.0, 0.0),
            loc(3.0, 0.0, 1.0, 0.0),
        ];
        assert!((path_tortuosity(&samples).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tortuosity_closed_loop_capped() {
        let samples = vec![
            loc(0.0, 0.0, 0.0, 0.0),
            loc(1.0, 1.0, 0.0, 0.0),
            loc(2.0, 1.0, 1.0, 0.0),
            loc(3.0, 0.0, 0.0, 0.0),
        ];
        assert_eq!(path_tortuosity(&samples).unwrap(), TORTUOSITY_CAP);
    }

    #[test]
    fn tortuosity_single_sample_errors() {
        assert!(path_tortuosity(&[loc(0.0, 0.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn straight_line_constant_speed() {
        let mut log = ParticipantLog::empty("p0");
        log.locations = (0..10).map(|i| loc(i as f64, 2.0 * i as f64, 0.0, 0.0)).collect();
        let f = extract_location_features(&log, 10.0, DEFAULT_V_IDLE);
        assert!((f.tortuosity - 1.0).abs() < 1e-12);
        assert!(f.accel_mean.abs() < 1e-12);
        assert!(f.jerk_mean.abs() < 1e-12);
        assert!((f.speed_mean - 2.0).abs() < 1e-12);
        assert!((f.speed_max - 2.0).abs() < 1e-12);
        assert_eq!(f.idle_fraction, 0.0);
        assert!((f.total_distance - 18.0).abs() < 1e-12);
    }

    /// Independent single-pass reference for the kinematic fields.
    fn reference_kinematics(s: &[LocationSample], v_idle: f64) -> (f64, f64, f64, f64) {
        let n = s.len();
        let mut dist = 0.0;
        let mut idle_time = 0.0;
        let mut move_time = 0.0;
        let mut speed_sum = 0.0;
        for i in 1..n {
            let dx = s[i].x - s[i - 1].x;
            let dy = s[i].y - s[i - 1].y;
            let dz = s[i].z - s[i - 1].z;
            let dt = s[i].t - s[i - 1].t;
            let d = (dx * dx + dy * dy + dz * dz).sqrt();
            dist += d;
            speed_sum += d / dt;
            move_time += dt;
            if d / dt < v_idle {
                idle_time += dt;
            }
        }
        (
            dist,
            speed_sum / (n - 1) as f64,
            idle_time / move_time,
            s[n - 1].t - s[0].t,
        )
    }

    #[test]
    fn random_walk_matches_reference_kinematics() {
        let mut state = 12345_u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64 - 0.5
        };
        let mut samples = Vec::new();
        let (mut x, mut y, mut z, mut t) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..200 {
            t += 0.5 + next().abs();
            x += next();
            y += next();
            z += 0.1 * next();
            samples.push(loc(t, x, y, z));
        }
        let f = extract_location_features(
            &ParticipantLog {
                locations: samples.clone(),
                ..ParticipantLog::empty("p0")
            },
            t + 1.0,
            DEFAULT_V_IDLE,
        );
        let (dist, speed_mean, idle, total_time) = reference_kinematics(&samples, DEFAULT_V_IDLE);
        assert!((f.total_distance - dist).abs() < 1e-9);
        assert!((f.speed_mean - speed_mean).abs() < 1e-9);
        assert!((f.idle_fraction - idle).abs() < 1e-9);
        assert!((f.total_time - total_time).abs() < 1e-9);
        assert!(f.speed_max >= f.speed_mean);
        assert!(f.tortuosity >= 1.0);
    }

    #[test]
    fn fewer_than_two_samples_zeroes_kinematics() {
        let mut log = ParticipantLog::empty("p0");
        log.locations = vec![loc(1.0, 5.0, 5.0, 5.0)];
        let f = extract_location_features(&log, 10.0, DEFAULT_V_IDLE);
        assert_eq!(f.speed_mean, 0.0);
        assert_eq!(f.accel_max, 0.0);
        assert_eq!(f.tortuosity, 1.0);
        assert_eq!(f.total_time, 0.0);
    }

    #[test]
    fn standardize_hand_computed_column() {
        let mut m = FeatureMatrix::new(&["a"]);
        m.push_row("r0", vec![1.0]);
        m.push_row("r1", vec![2.0]);
        m.push_row("r2", vec![3.0]);
        let s = standardize(&m).unwrap();
        let expected = 1.0 / (2.0_f64 / 3.0).sqrt(); // 1.2247448...
        assert!((s.rows[0][0] + expected).abs() < 1e-9);
        assert!(s.rows[1][0].abs() < 1e-12);
        assert!((s.rows[2][0] - expected).abs() < 1e-9);
    }

    #[test]
    fn standardize_is_idempotent() {
        let mut m = FeatureMatrix::new(&["a", "b"]);
        m.push_row("r0", vec![1.0, 10.0]);
        m.push_row("r1", vec![4.0, -3.0]);
        m.push_row("r2", vec![-2.0, 5.0]);
        let s1 = standardize(&m).unwrap();
        let s2 = standardize(&s1).unwrap();
        for (r1, r2) in s1.rows.iter().zip(&s2.rows) {
            for (a, b) in r1.iter().zip(r2) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn standardize_constant_column_is_zeroed() {
        let mut m = FeatureMatrix::new(&["a"]);
        m.push_row("r0", vec![7.0]);
        m.push_row("r1", vec![7.0]);
        let s = standardize(&m).unwrap();
        assert_eq!(s.rows, vec![vec![0.0], vec![0.0]]);
    }

    #[test]
    fn standardize_single_row_errors() {
        let mut m = FeatureMatrix::new(&["a"]);
        m.push_row("r0", vec![1.0]);
        assert!(standardize(&m).is_err());
    }

    #[test]
    fn csv_has_documented_column_count() {
        let mut m = FeatureMatrix::new(&SPEAKING_COLUMNS);
        m.push_row("r0", vec![0.0; 8]);
        let csv = m.to_csv_string();
        let header = csv.lines().next().unwrap();
        assert_eq!(header.split(',').count(), SPEAKING_COLUMNS.len() + 1);
    }
}
