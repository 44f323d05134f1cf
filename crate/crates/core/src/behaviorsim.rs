//! Per-cluster behavior synthesis: fit sampling generators from labeled
//! corpus participants, then simulate speaking, gaze, and locomotion streams
//! and assemble full simulated group sessions.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, Matrix4, Vector4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{bin_event_series, dft_coefficient, mean, pop_std, EVENT_BINS};
use crate::logmodel::{
    GazeEvent, GroupSession, InteractionKind, LocationSample, ObjectInteractionEvent,
    ParticipantLog, SpeakingEvent, TaskMetrics,
};
use crate::seeding::substream_rng;
use crate::taskpredict::{encode_group_config, predict_task_metrics, RegressionForest};

/// Bins of the smoothed start-time histogram over the normalized session.
pub const START_BINS: usize = 32;

/// Bins of empirical duration histograms.
pub const DURATION_BINS: usize = 32;

/// Number of stored spectrum coefficients: DC plus the first 3 harmonics.
pub const SPECTRUM_TERMS: usize = 4;

/// A participant's triple of cluster assignments, one per modality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    pub speaking_cluster: usize,
    pub gaze_cluster: usize,
    pub location_cluster: usize,
}

/// Per-modality cluster labels aligned with the corpus participant order
/// (groups in corpus order, participants in log order within each group).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusLabels {
    pub speaking: Vec<usize>,
    pub gaze: Vec<usize>,
    pub location: Vec<usize>,
}

/// Gaussian law over per-participant event counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountLaw {
    pub mean: f64,
    pub std: f64,
}

impl CountLaw {
    fn fit(counts: &[f64]) -> CountLaw {
        CountLaw {
            mean: mean(counts),
            std: pop_std(counts),
        }
    }

    /// Rounded Gaussian draw, clamped to a non-negative count.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let law = Normal::new(self.mean, self.std.max(0.0)).unwrap();
        law.sample(rng).round().max(0.0) as usize
    }
}

/// Equal-width empirical histogram over `[lo, hi]`, mass-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalHistogram {
    pub lo: f64,
    pub hi: f64,
    pub mass: Vec<f64>,
}

impl EmpiricalHistogram {
    fn fit(values: &[f64], n_bins: usize) -> EmpiricalHistogram {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || hi - lo < 1e-12 {
            // degenerate: all mass at a single value
            return EmpiricalHistogram {
                lo: if lo.is_finite() { lo } else { 0.0 },
                hi: if lo.is_finite() { lo } else { 0.0 },
                mass: vec![1.0],
            };
        }
        let mut mass = vec![0.0; n_bins];
        let width = (hi - lo) / n_bins as f64;
        for &v in values {
            let b = (((v - lo) / width) as usize).min(n_bins - 1);
            mass[b] += 1.0;
        }
        let total: f64 = mass.iter().sum();
        for m in mass.iter_mut() {
            *m /= total;
        }
        EmpiricalHistogram { lo, hi, mass }
    }

    fn fit_unit_interval(values: &[f64], n_bins: usize) -> EmpiricalHistogram {
        let mut mass = vec![0.0; n_bins];
        for &v in values {
            let b = ((v.clamp(0.0, 1.0) * n_bins as f64) as usize).min(n_bins - 1);
            mass[b] += 1.0;
        }
        let total: f64 = mass.iter().sum();
        if total > 0.0 {
            for m in mass.iter_mut() {
                *m /= total;
            }
        }
        EmpiricalHistogram {
            lo: 0.0,
            hi: 1.0,
            mass,
        }
    }

    /// Centered moving-average smoothing (window 3), renormalized.
    fn smoothed(&self) -> EmpiricalHistogram {
        let n = self.mass.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            out[i] = self.mass[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
        }
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            for m in out.iter_mut() {
                *m /= total;
            }
        }
        EmpiricalHistogram {
            lo: self.lo,
            hi: self.hi,
            mass: out,
        }
    }

    /// Inverse-CDF draw, uniform within the chosen bin.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.mass.len() == 1 || self.hi - self.lo < 1e-12 {
            return self.lo;
        }
        let width = (self.hi - self.lo) / self.mass.len() as f64;
        let mut u = rng.gen::<f64>();
        let mut bin = self.mass.len() - 1;
        for (i, &m) in self.mass.iter().enumerate() {
            u -= m;
            if u <= 0.0 {
                bin = i;
                break;
            }
        }
        self.lo + (bin as f64 + rng.gen::<f64>()) * width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakingGenerator {
    pub count_law: CountLaw,
    /// Smoothed start-time histogram over the normalized session.
    pub start_histogram: EmpiricalHistogram,
    pub duration_histogram: EmpiricalHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeGenerator {
    pub count_law: CountLaw,
    /// Mean binned-rate spectrum: (re, im) for DC and the first 3 harmonics.
    pub spectrum: Vec<(f64, f64)>,
    pub duration_histogram: EmpiricalHistogram,
    /// Empirical target-object frequency over the corpus catalog.
    pub object_frequency: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationGenerator {
    pub count_law: CountLaw,
    pub initial_mean: [f64; 3],
    pub initial_std: [f64; 3],
    /// ML mean of pooled consecutive (dt, dx, dy, dz) deltas.
    pub transition_mean: [f64; 4],
    /// Row-major 4x4 ML covariance of the deltas.
    pub transition_covariance: [[f64; 4]; 4],
    pub bounds_min: [f64; 3],
    pub bounds_max: [f64; 3],
}

/// Per-cluster sampling generators for all three modalities. Clusters that
/// had no corpus members are absent, with a note in `notes`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterGenerators {
    pub speaking: BTreeMap<usize, SpeakingGenerator>,
    pub gaze: BTreeMap<usize, GazeGenerator>,
    pub location: BTreeMap<usize, LocationGenerator>,
    pub notes: Vec<String>,
}

impl ClusterGenerators {
    /// Number of speaking clusters in the labeling this was built from.
    pub fn k_speaking(&self) -> usize {
        self.speaking.keys().max().map_or(0, |k| k + 1)
    }

    pub fn k_gaze(&self) -> usize {
        self.gaze.keys().max().map_or(0, |k| k + 1)
    }

    pub fn k_location(&self) -> usize {
        self.location.keys().max().map_or(0, |k| k + 1)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub group_id: String,
    pub session_duration: f64,
    pub group_size: usize,
    pub profiles: Vec<BehaviorProfile>,
    pub seed: u64,
    pub n_images: usize,
    pub n_categories: usize,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.session_duration > 0.0) {
            return Err(Error::InvalidInput("session_duration must be positive".into()));
        }
        if self.profiles.len() != self.group_size {
            return Err(Error::DimensionMismatch {
                expected: self.group_size,
                actual: self.profiles.len(),
            });
        }
        Ok(())
    }
}

fn pooled<'a, T, F: Fn(&'a ParticipantLog) -> T>(
    corpus: &'a [GroupSession],
    f: F,
) -> Vec<(usize, &'a GroupSession, &'a ParticipantLog, T)> {
    let mut out = Vec::new();
    let mut idx = 0;
    for session in corpus {
        for log in &session.participants {
            out.push((idx, session, log, f(log)));
            idx += 1;
        }
    }
    out
}

/// Fit per-cluster sampling generators from a labeled corpus.
///
/// Empty clusters are reported in `notes` and have no generator; every label
/// vector must match the corpus participant count.
pub fn build_generators(corpus: &[GroupSession], labels: &CorpusLabels) -> Result<ClusterGenerators> {
    let n: usize = corpus.iter().map(|s| s.participants.len()).sum();
    for v in [&labels.speaking, &labels.gaze, &labels.location] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v.len(),
            });
        }
    }
    let mut notes = Vec::new();

    // speaking: counts, normalized starts, durations per cluster
    let mut speaking = BTreeMap::new();
    let k_speak = labels.speaking.iter().max().map_or(0, |m| m + 1);
    for c in 0..k_speak {
        let mut counts = Vec::new();
        let mut starts = Vec::new();
        let mut durations = Vec::new();
        for (i, session, log, _) in pooled(corpus, |_| ()) {
            if labels.speaking[i] != c {
                continue;
            }
            counts.push(log.speaking.len() as f64);
            for e in &log.speaking {
                starts.push(e.start / session.duration);
                durations.push(e.duration);
            }
        }
        if counts.is_empty() {
            notes.push(format!("speaking cluster {c} has no members; generator absent"));
            continue;
        }
        speaking.insert(
            c,
            SpeakingGenerator {
                count_law: CountLaw::fit(&counts),
                start_histogram: EmpiricalHistogram::fit_unit_interval(&starts, START_BINS)
                    .smoothed(),
                duration_histogram: EmpiricalHistogram::fit(&durations, DURATION_BINS),
            },
        );
    }

    // gaze: counts, mean binned spectrum, durations, object frequencies
    let mut gaze = BTreeMap::new();
    let k_gaze = labels.gaze.iter().max().map_or(0, |m| m + 1);
    for c in 0..k_gaze {
        let mut counts = Vec::new();
        let mut durations = Vec::new();
        let mut spectrum = vec![(0.0, 0.0); SPECTRUM_TERMS];
        let mut objects: BTreeMap<String, f64> = BTreeMap::new();
        let mut members = 0usize;
        for (i, session, log, _) in pooled(corpus, |_| ()) {
            if labels.gaze[i] != c {
                continue;
            }
            members += 1;
            counts.push(log.gaze.len() as f64);
            let starts: Vec<f64> = log.gaze.iter().map(|e| e.start).collect();
            let series = bin_event_series(&starts, session.duration, EVENT_BINS);
            for (h, slot) in spectrum.iter_mut().enumerate() {
                let (re, im) = dft_coefficient(&series, h);
                slot.0 += re;
                slot.1 += im;
            }
            for e in &log.gaze {
                durations.push(e.duration);
                *objects.entry(e.target_object_id.clone()).or_insert(0.0) += 1.0;
            }
        }
        if members == 0 {
            notes.push(format!("gaze cluster {c} has no members; generator absent"));
            continue;
        }
        for slot in spectrum.iter_mut() {
            slot.0 /= members as f64;
            slot.1 /= members as f64;
        }
        let total: f64 = objects.values().sum();
        if total > 0.0 {
            for v in objects.values_mut() {
                *v /= total;
            }
        }
        gaze.insert(
            c,
            GazeGenerator {
                count_law: CountLaw::fit(&counts),
                spectrum,
                duration_histogram: if durations.is_empty() {
                    EmpiricalHistogram::fit(&[0.1], DURATION_BINS)
                } else {
                    EmpiricalHistogram::fit(&durations, DURATION_BINS)
                },
                object_frequency: objects,
            },
        );
    }

    // location: counts, initial positions, pooled transition deltas, bounds
    let mut location = BTreeMap::new();
    let k_loc = labels.location.iter().max().map_or(0, |m| m + 1);
    for c in 0..k_loc {
        let mut counts = Vec::new();
        let mut initials: Vec<[f64; 3]> = Vec::new();
        let mut deltas: Vec<[f64; 4]> = Vec::new();
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for (i, _, log, _) in pooled(corpus, |_| ()) {
            if labels.location[i] != c {
                continue;
            }
            counts.push(log.locations.len() as f64);
            if let Some(first) = log.locations.first() {
                initials.push([first.x, first.y, first.z]);
            }
            for s in &log.locations {
                for (axis, v) in [s.x, s.y, s.z].into_iter().enumerate() {
                    lo[axis] = lo[axis].min(v);
                    hi[axis] = hi[axis].max(v);
                }
            }
            for w in log.locations.windows(2) {
                deltas.push([
                    w[1].t - w[0].t,
                    w[1].x - w[0].x,
                    w[1].y - w[0].y,
                    w[1].z - w[0].z,
                ]);
            }
        }
        if counts.is_empty() {
            notes.push(format!("location cluster {c} has no members; generator absent"));
            continue;
        }
        let mut t_mean = [0.0; 4];
        for d in &deltas {
            for j in 0..4 {
                t_mean[j] += d[j];
            }
        }
        let nd = deltas.len().max(1) as f64;
        for v in t_mean.iter_mut() {
            *v /= nd;
        }
        let mut cov = [[0.0; 4]; 4];
        for d in &deltas {
            for a in 0..4 {
                for b in 0..4 {
                    cov[a][b] += (d[a] - t_mean[a]) * (d[b] - t_mean[b]);
                }
            }
        }
        for row in cov.iter_mut() {
            for v in row.iter_mut() {
                *v /= nd;
            }
        }
        let mut init_mean = [0.0; 3];
        for p in &initials {
            for j in 0..3 {
                init_mean[j] += p[j];
            }
        }
        let ni = initials.len().max(1) as f64;
        for v in init_mean.iter_mut() {
            *v /= ni;
        }
        let mut init_std = [0.0; 3];
        for p in &initials {
            for j in 0..3 {
                init_std[j] += (p[j] - init_mean[j]).powi(2);
            }
        }
        for v in init_std.iter_mut() {
            *v = (*v / ni).sqrt();
        }
        for axis in 0..3 {
            if !lo[axis].is_finite() {
                lo[axis] = 0.0;
                hi[axis] = 0.0;
            }
        }
        location.insert(
            c,
            LocationGenerator {
                count_law: CountLaw::fit(&counts),
                initial_mean: init_mean,
                initial_std: init_std,
                transition_mean: t_mean,
                transition_covariance: cov,
                bounds_min: lo,
                bounds_max: hi,
            },
        );
    }

    Ok(ClusterGenerators {
        speaking,
        gaze,
        location,
        notes,
    })
}

/// Sample a speaking stream from one cluster's generator.
pub fn simulate_speaking(
    gens: &ClusterGenerators,
    cluster: usize,
    participant_id: &str,
    duration: f64,
    seed: u64,
) -> Result<Vec<SpeakingEvent>> {
    let gen = gens
        .speaking
        .get(&cluster)
        .ok_or(Error::UnknownCluster(cluster))?;
    let mut rng = substream_rng(seed, &[0]);
    let n = gen.count_law.sample(&mut rng);
    let mut proto: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                gen.start_histogram.sample(&mut rng) * duration,
                gen.duration_histogram.sample(&mut rng).max(1e-3),
            )
        })
        .collect();
    proto.sort_by(|a, b| a.0.total_cmp(&b.0));
    // one voice per participant: push overlapping utterances later instead
    // of merging them away, preserving the sampled instance count
    let mut events = Vec::with_capacity(n);
    let mut cursor = 0.0_f64;
    for (start, dur) in proto {
        let s = start.max(cursor);
        if s >= duration - 1e-3 {
            continue;
        }
        let d = dur.min(duration - s);
        events.push(SpeakingEvent {
            participant_id: participant_id.to_string(),
            start: s,
            duration: d,
        });
        cursor = s + d + 1e-3;
    }
    // merging is a no-op safeguard on the already-disjoint stream
    Ok(crate::logmodel::merge_overlapping_events(&events))
}

/// Reconstruct the 256-point rate curve from the stored spectrum (inverse
/// DFT over DC + 3 harmonics), clip negatives, and normalize to a density.
/// Returns the density and whether the uniform fallback was used.
pub fn reconstruct_rate_curve(spectrum: &[(f64, f64)]) -> (Vec<f64>, bool) {
    let n = EVENT_BINS;
    let mut curve = vec![0.0; n];
    for (t, slot) in curve.iter_mut().enumerate() {
        let mut v = spectrum[0].0;
        for (h, &(re, im)) in spectrum.iter().enumerate().skip(1) {
            let angle = 2.0 * std::f64::consts::PI * h as f64 * t as f64 / n as f64;
            v += 2.0 * (re * angle.cos() - im * angle.sin());
        }
        *slot = (v / n as f64).max(0.0);
    }
    let total: f64 = curve.iter().sum();
    if total <= 1e-12 {
        return (vec![1.0 / n as f64; n], true);
    }
    for v in curve.iter_mut() {
        *v /= total;
    }
    (curve, false)
}

/// Sample a gaze stream from one cluster's generator. The boolean flags that
/// the rate curve degenerated and a uniform density was used instead.
pub fn simulate_gaze(
    gens: &ClusterGenerators,
    cluster: usize,
    participant_id: &str,
    duration: f64,
    catalog: &[String],
    seed: u64,
) -> Result<(Vec<GazeEvent>, bool)> {
    if catalog.is_empty() {
        return Err(Error::InvalidInput("empty object catalog".into()));
    }
    let gen = gens.gaze.get(&cluster).ok_or(Error::UnknownCluster(cluster))?;
    let mut rng = substream_rng(seed, &[1]);
    let (density, uniform_fallback) = reconstruct_rate_curve(&gen.spectrum);
    let rate = EmpiricalHistogram {
        lo: 0.0,
        hi: 1.0,
        mass: density,
    };
    // object draw restricted to the requested catalog
    let mut weights: Vec<(usize, f64)> = catalog
        .iter()
        .enumerate()
        .filter_map(|(i, o)| gen.object_frequency.get(o).map(|&w| (i, w)))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    if weights.is_empty() {
        weights = (0..catalog.len()).map(|i| (i, 1.0)).collect();
    }
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let n = gen.count_law.sample(&mut rng);
    let mut events: Vec<GazeEvent> = (0..n)
        .filter_map(|_| {
            let start = rate.sample(&mut rng) * duration;
            if start >= duration {
                return None;
            }
            let dur = gen
                .duration_histogram
                .sample(&mut rng)
                .clamp(0.0, duration - start);
            let mut u = rng.gen::<f64>() * total;
            let mut target = weights[weights.len() - 1].0;
            for &(i, w) in &weights {
                u -= w;
                if u <= 0.0 {
                    target = i;
                    break;
                }
            }
            Some(GazeEvent {
                participant_id: participant_id.to_string(),
                start,
                duration: dur,
                target_object_id: catalog[target].clone(),
            })
        })
        .collect();
    events.sort_by(|a, b| a.start.total_cmp(&b.start));
    Ok((events, uniform_fallback))
}

/// Sample a locomotion trajectory from one cluster's transition Gaussian.
pub fn simulate_locomotion(
    gens: &ClusterGenerators,
    cluster: usize,
    participant_id: &str,
    duration: f64,
    seed: u64,
) -> Result<Vec<LocationSample>> {
    let gen = gens
        .location
        .get(&cluster)
        .ok_or(Error::UnknownCluster(cluster))?;
    let mut rng = substream_rng(seed, &[2]);
    let n = gen.count_law.sample(&mut rng);
    let mut cov = Matrix4::from_fn(|a, b| gen.transition_covariance[a][b]);
    for i in 0..4 {
        cov[(i, i)] += 1e-9;
    }
    let chol = Cholesky::new(cov)
        .unwrap_or_else(|| Cholesky::new(Matrix4::identity() * 1e-9).unwrap());
    let l = chol.l();
    let mean_dt = gen.transition_mean[0].max(1e-3);
    let std_norm = Normal::new(0.0, 1.0).unwrap();
    let mut pos = [0.0; 3];
    for axis in 0..3 {
        pos[axis] = (gen.initial_mean[axis] + gen.initial_std[axis] * std_norm.sample(&mut rng))
            .clamp(gen.bounds_min[axis], gen.bounds_max[axis]);
    }
    let mut samples = Vec::with_capacity(n);
    let mut t = 0.0;
    for i in 0..n {
        if i > 0 {
            // positive-dt resampling keeps timestamps strictly increasing
            let mut delta = [0.0; 4];
            let mut ok = false;
            for _ in 0..100 {
                let z = Vector4::from_fn(|_, _| std_norm.sample(&mut rng));
                let step = l * z;
                for j in 0..4 {
                    delta[j] = gen.transition_mean[j] + step[j];
                }
                if delta[0] > 0.0 {
                    ok = true;
                    break;
                }
            }
            if !ok {
                delta[0] = mean_dt;
            }
            t += delta[0];
            if t >= duration {
                break;
            }
            for axis in 0..3 {
                pos[axis] = (pos[axis] + delta[axis + 1])
                    .clamp(gen.bounds_min[axis], gen.bounds_max[axis]);
            }
        }
        samples.push(LocationSample {
            participant_id: participant_id.to_string(),
            t,
            x: pos[0],
            y: pos[1],
            z: pos[2],
        });
    }
    Ok(samples)
}

/// Candidate fixation usable as an interaction anchor.
struct FixationRef {
    participant: usize,
    start: f64,
    end: f64,
    object_id: String,
}

fn overlaps(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// Mark a subset of gaze fixations as object interactions so per-group
/// totals match `metrics`. Returns the updated logs and whether any count
/// was capped by fixation availability.
pub fn synthesize_interactions(
    mut logs: Vec<ParticipantLog>,
    metrics: &TaskMetrics,
    rng: &mut ChaCha8Rng,
) -> (Vec<ParticipantLog>, bool) {
    let mut candidates: Vec<FixationRef> = Vec::new();
    for (pi, log) in logs.iter().enumerate() {
        for e in &log.gaze {
            if e.duration >= 0.01 {
                candidates.push(FixationRef {
                    participant: pi,
                    start: e.start,
                    end: e.end(),
                    object_id: e.target_object_id.clone(),
                });
            }
        }
    }
    // uniform selection without replacement: Fisher-Yates shuffle
    for i in (1..candidates.len()).rev() {
        candidates.swap(i, rng.gen_range(0..=i));
    }
    let mut capped = false;
    // grab/release pairs, respecting per-(participant, object) alternation
    let mut held: BTreeMap<(usize, String), Vec<(f64, f64)>> = BTreeMap::new();
    let mut grabs = 0u32;
    let mut cursor = 0usize;
    while grabs < metrics.total_grabs && cursor < candidates.len() {
        let c = &candidates[cursor];
        cursor += 1;
        if c.end <= c.start {
            continue;
        }
        let key = (c.participant, c.object_id.clone());
        let spans = held.entry(key).or_default();
        if spans.iter().any(|&s| overlaps(s, (c.start, c.end))) {
            continue;
        }
        spans.push((c.start, c.end));
        let log = &mut logs[c.participant];
        log.interactions.push(ObjectInteractionEvent {
            participant_id: log.participant_id.clone(),
            t: c.start,
            object_id: c.object_id.clone(),
            kind: InteractionKind::Grab,
        });
        log.interactions.push(ObjectInteractionEvent {
            participant_id: log.participant_id.clone(),
            t: c.end,
            object_id: c.object_id.clone(),
            kind: InteractionKind::Release,
        });
        grabs += 1;
    }
    if grabs < metrics.total_grabs {
        capped = true;
    }
    // label changes and overrides anchor at fixation midpoints
    for (count, kind) in [
        (metrics.label_changes, InteractionKind::LabelChange),
        (metrics.labels_overridden, InteractionKind::LabelOverride),
    ] {
        let mut placed = 0u32;
        while placed < count && cursor < candidates.len() {
            let c = &candidates[cursor];
            cursor += 1;
            let log = &mut logs[c.participant];
            log.interactions.push(ObjectInteractionEvent {
                participant_id: log.participant_id.clone(),
                t: (c.start + c.end) / 2.0,
                object_id: c.object_id.clone(),
                kind,
            });
            placed += 1;
        }
        if placed < count {
            capped = true;
        }
    }
    (logs, capped)
}

/// Warnings produced while assembling a simulated session.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SimulationNotes {
    pub uniform_gaze_fallback: Vec<String>,
    pub interaction_counts_capped: bool,
}

/// Simulate a full group session from per-participant behavior profiles.
///
/// When a trained forest is supplied, task metrics are predicted from the
/// group's cluster configuration and object interactions are synthesized to
/// match the predicted counts.
pub fn simulate_group(
    config: &SimulationConfig,
    gens: &ClusterGenerators,
    forest: Option<&RegressionForest>,
) -> Result<(GroupSession, SimulationNotes)> {
    config.validate()?;
    let catalog: Vec<String> = (0..config.n_images).map(|i| format!("img{i:02}")).collect();
    let mut notes = SimulationNotes::default();
    let mut logs = Vec::with_capacity(config.group_size);
    for (k, profile) in config.profiles.iter().enumerate() {
        let pid = format!("{}p{k}", config.group_id);
        let seed = crate::seeding::derive_seed(config.seed, &[k as u64]);
        let speaking = simulate_speaking(
            gens,
            profile.speaking_cluster,
            &pid,
            config.session_duration,
            seed,
        )?;
        let (gaze, fallback) = simulate_gaze(
            gens,
            profile.gaze_cluster,
            &pid,
            config.session_duration,
            &catalog,
            seed,
        )?;
        if fallback {
            notes.uniform_gaze_fallback.push(pid.clone());
        }
        let locations = simulate_locomotion(
            gens,
            profile.location_cluster,
            &pid,
            config.session_duration,
            seed,
        )?;
        logs.push(ParticipantLog {
            participant_id: pid,
            speaking,
            gaze,
            locations,
            interactions: Vec::new(),
        });
    }
    let metrics = match forest {
        Some(forest) => {
            let encoding = encode_group_config(
                &config.profiles,
                gens.k_speaking(),
                gens.k_gaze(),
                gens.k_location(),
            )?;
            Some(predict_task_metrics(forest, &encoding)?)
        }
        None => None,
    };
    if let Some(metrics) = &metrics {
        let mut rng = substream_rng(config.seed, &[u64::MAX, 9]);
        let (marked, capped) = synthesize_interactions(logs, metrics, &mut rng);
        logs = marked;
        notes.interaction_counts_capped = capped;
    }
    let session = GroupSession::new(
        config.group_id.clone(),
        config.session_duration,
        logs,
        catalog,
        metrics,
    )?;
    Ok((session, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpusgen::{builtin_archetypes, generate_corpus, ArchetypeMix, CorpusConfig};

    /// Corpus where every participant is labeled by its known archetype.
    fn labeled_corpus(n_groups: usize, seed: u64) -> (Vec<GroupSession>, CorpusLabels) {
        let config = CorpusConfig {
            n_groups,
            group_size: 4,
            archetype_mix: ArchetypeMix::RoundRobin,
            seed,
            ..Default::default()
        };
        let cat = builtin_archetypes();
        let corpus = generate_corpus(&config, &cat).unwrap();
        let mut labels = CorpusLabels {
            speaking: Vec::new(),
            gaze: Vec::new(),
            location: Vec::new(),
        };
        for g in 0..n_groups {
            for k in 0..4 {
                let global = g * 4 + k;
                let (s, gz, l) = config.archetype_mix.assign(global, &cat);
                labels.speaking.push(s);
                labels.gaze.push(gz);
                labels.location.push(l);
            }
        }
        (corpus, labels)
    }

    #[test]
    fn generators_deterministic_rebuild() {
        let (corpus, labels) = labeled_corpus(3, 0);
        let a = build_generators(&corpus, &labels).unwrap();
        let b = build_generators(&corpus, &labels).unwrap();
        assert_eq!(a.speaking, b.speaking);
        assert_eq!(a.gaze, b.gaze);
        assert_eq!(a.location, b.location);
    }

    #[test]
    fn single_participant_cluster_histogram_and_count() {
        // one participant with 3 events in a 100 s session
        let mut log = ParticipantLog::empty("p0");
        for (s, d) in [(5.0, 1.0), (6.5, 1.0), (95.0, 1.0)] {
            log.speaking.push(SpeakingEvent {
                participant_id: "p0".into(),
                start: s,
                duration: d,
            });
        }
        let session = GroupSession::new("g", 100.0, vec![log], vec!["o".into()], None).unwrap();
        let labels = CorpusLabels {
            speaking: vec![0],
            gaze: vec![0],
            location: vec![0],
        };
        let gens = build_generators(&[session], &labels).unwrap();
        let sg = &gens.speaking[&0];
        assert_eq!(sg.count_law.mean, 3.0);
        assert_eq!(sg.count_law.std, 0.0);
        // starts at 0.05, 0.065, 0.95 of the session: bins 1, 2, 30 of 32;
        // smoothing spreads mass only to adjacent bins
        let occupied: Vec<usize> = sg
            .start_histogram
            .mass
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(i, _)| i)
            .collect();
        assert!(occupied.iter().all(|&i| i <= 3 || (29..=31).contains(&i)),
            "occupied bins {occupied:?}");
    }

    #[test]
    fn transition_mean_equals_pooled_delta_mean() {
        let (corpus, labels) = labeled_corpus(2, 3);
        let gens = build_generators(&corpus, &labels).unwrap();
        for (c, gen) in &gens.location {
            // direct averaging oracle over pooled consecutive deltas
            let mut sums = [0.0f64; 4];
            let mut n = 0.0;
            for (i, (_, _, log, _)) in super::pooled(&corpus, |_| ()).into_iter().enumerate() {
                if labels.location[i] != *c {
                    continue;
                }
                for w in log.locations.windows(2) {
                    sums[0] += w[1].t - w[0].t;
                    sums[1] += w[1].x - w[0].x;
                    sums[2] += w[1].y - w[0].y;
                    sums[3] += w[1].z - w[0].z;
                    n += 1.0;
                }
            }
            for j in 0..4 {
                assert!((gen.transition_mean[j] - sums[j] / n).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_cluster_reported_absent() {
        let (corpus, mut labels) = labeled_corpus(1, 1);
        // label everyone speaking-cluster 1, leaving cluster 0 empty
        for l in labels.speaking.iter_mut() {
            *l = 1;
        }
        let gens = build_generators(&corpus, &labels).unwrap();
        assert!(!gens.speaking.contains_key(&0));
        assert!(gens.speaking.contains_key(&1));
        assert!(gens.notes.iter().any(|n| n.contains("speaking cluster 0")));
    }

    #[test]
    fn degenerate_zero_count_law_gives_empty_stream() {
        let (corpus, labels) = labeled_corpus(1, 2);
        let mut gens = build_generators(&corpus, &labels).unwrap();
        let g = gens.speaking.get_mut(&0).unwrap();
        g.count_law = CountLaw { mean: 0.0, std: 0.0 };
        let events = simulate_speaking(&gens, 0, "p", 600.0, 0).unwrap();
        assert!(events.is_empty());
    }

    #[test]
    fn all_mass_in_first_bin_confines_starts() {
        let (corpus, labels) = labeled_corpus(1, 2);
        let mut gens = build_generators(&corpus, &labels).unwrap();
        let g = gens.speaking.get_mut(&0).unwrap();
        let mut mass = vec![0.0; 32];
        mass[0] = 1.0;
        g.start_histogram = EmpiricalHistogram { lo: 0.0, hi: 1.0, mass };
        g.count_law = CountLaw { mean: 50.0, std: 0.0 };
        g.duration_histogram = EmpiricalHistogram { lo: 0.01, hi: 0.01, mass: vec![1.0] };
        let events = simulate_speaking(&gens, 0, "p", 320.0, 7).unwrap();
        assert!(!events.is_empty());
        for e in &events {
            assert!(e.start < 10.0, "start {} outside first bin", e.start);
        }
    }

    #[test]
    fn unknown_cluster_errors() {
        let (corpus, labels) = labeled_corpus(1, 2);
        let gens = build_generators(&corpus, &labels).unwrap();
        assert!(matches!(
            simulate_speaking(&gens, 99, "p", 600.0, 0),
            Err(Error::UnknownCluster(99))
        ));
        assert!(matches!(
            simulate_locomotion(&gens, 99, "p", 600.0, 0),
            Err(Error::UnknownCluster(99))
        ));
    }

    #[test]
    fn simulated_count_mean_tracks_count_law() {
        let (corpus, labels) = labeled_corpus(6, 5);
        let gens = build_generators(&corpus, &labels).unwrap();
        let law_mean = gens.speaking[&0].count_law.mean;
        let mut total = 0.0;
        let n_sims = 1000;
        for i in 0..n_sims {
            let events = simulate_speaking(&gens, 0, "p", 600.0, 1000 + i).unwrap();
            total += events.len() as f64;
        }
        let mean = total / n_sims as f64;
        assert!(
            (mean - law_mean).abs() / law_mean < 0.10,
            "simulated mean {mean} vs law mean {law_mean}"
        );
    }

    #[test]
    fn dc_only_spectrum_gives_uniform_density() {
        let mut spectrum = vec![(0.0, 0.0); SPECTRUM_TERMS];
        spectrum[0] = (100.0, 0.0);
        let (density, fallback) = reconstruct_rate_curve(&spectrum);
        assert!(!fallback);
        for v in &density {
            assert!((v - 1.0 / EVENT_BINS as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spectrum_falls_back_to_uniform_with_flag() {
        let (density, fallback) = reconstruct_rate_curve(&vec![(0.0, 0.0); SPECTRUM_TERMS]);
        assert!(fallback);
        assert!((density.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concentrated_object_distribution_hits_single_target() {
        let (corpus, labels) = labeled_corpus(1, 4);
        let mut gens = build_generators(&corpus, &labels).unwrap();
        let g = gens.gaze.get_mut(&0).unwrap();
        g.object_frequency.clear();
        g.object_frequency.insert("img03".into(), 1.0);
        let catalog: Vec<String> = (0..28).map(|i| format!("img{i:02}")).collect();
        let (events, _) = simulate_gaze(&gens, 0, "p", 600.0, &catalog, 3).unwrap();
        assert!(!events.is_empty());
        for e in &events {
            assert_eq!(e.target_object_id, "img03");
        }
    }

    #[test]
    fn degenerate_transition_gaussian_walks_straight() {
        let (corpus, labels) = labeled_corpus(1, 4);
        let mut gens = build_generators(&corpus, &labels).unwrap();
        let g = gens.location.get_mut(&0).unwrap();
        g.transition_mean = [1.0, 0.1, 0.0, 0.0];
        g.transition_covariance = [[0.0; 4]; 4];
        g.initial_mean = [0.0, 0.0, 1.5];
        g.initial_std = [0.0; 3];
        g.bounds_min = [-100.0, -100.0, 0.0];
        g.bounds_max = [100.0, 100.0, 3.0];
        g.count_law = CountLaw { mean: 10.0, std: 0.0 };
        let samples = simulate_locomotion(&gens, 0, "p", 600.0, 0).unwrap();
        assert_eq!(samples.len(), 10);
        for (i, s) in samples.iter().enumerate() {
            assert!((s.t - i as f64).abs() < 2e-4, "t={} at {i}", s.t);
            assert!((s.x - 0.1 * i as f64).abs() < 2e-4);
            assert!(s.y.abs() < 2e-4);
        }
    }

    #[test]
    fn locomotion_stays_in_bounds_and_monotone() {
        let (corpus, labels) = labeled_corpus(2, 6);
        let gens = build_generators(&corpus, &labels).unwrap();
        for c in gens.location.keys() {
            let g = &gens.location[c];
            let samples = simulate_locomotion(&gens, *c, "p", 600.0, 42).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for s in &samples {
                assert!(s.t > prev);
                prev = s.t;
                assert!(s.x >= g.bounds_min[0] - 1e-12 && s.x <= g.bounds_max[0] + 1e-12);
                assert!(s.y >= g.bounds_min[1] - 1e-12 && s.y <= g.bounds_max[1] + 1e-12);
                assert!(s.z >= g.bounds_min[2] - 1e-12 && s.z <= g.bounds_max[2] + 1e-12);
            }
        }
    }

    #[test]
    fn simulated_delta_mean_within_three_standard_errors() {
        let (corpus, labels) = labeled_corpus(3, 8);
        let gens = build_generators(&corpus, &labels).unwrap();
        let g = &gens.location[&0];
        let mut deltas: Vec<[f64; 4]> = Vec::new();
        for i in 0..200 {
            let samples = simulate_locomotion(&gens, 0, "p", 600.0, 5000 + i).unwrap();
            for w in samples.windows(2) {
                deltas.push([
                    w[1].t - w[0].t,
                    w[1].x - w[0].x,
                    w[1].y - w[0].y,
                    w[1].z - w[0].z,
                ]);
            }
        }
        assert!(deltas.len() > 10_000);
        let n = deltas.len() as f64;
        // dt is truncated at 0 and positions are clamped, so compare with a
        // generous multiple of the standard error on the spatial axes
        for j in 1..4 {
            let mean = deltas.iter().map(|d| d[j]).sum::<f64>() / n;
            let se = (g.transition_covariance[j][j] / n).sqrt();
            assert!(
                (mean - g.transition_mean[j]).abs() < 3.0 * se + 1e-3,
                "axis {j}: {mean} vs {} (se {se})",
                g.transition_mean[j]
            );
        }
    }

    fn demo_config(seed: u64, group_size: usize) -> SimulationConfig {
        SimulationConfig {
            group_id: "sim00".into(),
            session_duration: 600.0,
            group_size,
            profiles: (0..group_size)
                .map(|k| BehaviorProfile {
                    speaking_cluster: k % 3,
                    gaze_cluster: k % 3,
                    location_cluster: k % 4,
                })
                .collect(),
            seed,
            n_images: 28,
            n_categories: 6,
        }
    }

    #[test]
    fn simulate_group_single_participant_valid() {
        let (corpus, labels) = labeled_corpus(3, 9);
        let gens = build_generators(&corpus, &labels).unwrap();
        let (session, _) = simulate_group(&demo_config(0, 1), &gens, None).unwrap();
        assert_eq!(session.participants.len(), 1);
        session.validate().unwrap();
    }

    #[test]
    fn simulate_group_deterministic() {
        let (corpus, labels) = labeled_corpus(3, 9);
        let gens = build_generators(&corpus, &labels).unwrap();
        let (a, _) = simulate_group(&demo_config(11, 4), &gens, None).unwrap();
        let (b, _) = simulate_group(&demo_config(11, 4), &gens, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interaction_totals_match_requested_metrics() {
        let (corpus, labels) = labeled_corpus(2, 10);
        let gens = build_generators(&corpus, &labels).unwrap();
        let config = demo_config(3, 4);
        let (session, _) = simulate_group(&config, &gens, None).unwrap();
        let metrics = TaskMetrics {
            images_grabbed: 8,
            total_grabs: 10,
            labels_overridden: 2,
            images_looked_at: 20,
            completion_time: 500.0,
            accuracy: 80.0,
            label_changes: 5,
        };
        let mut rng = substream_rng(0, &[1]);
        let (logs, capped) = synthesize_interactions(session.participants.clone(), &metrics, &mut rng);
        assert!(!capped);
        let count_kind = |k: InteractionKind| {
            logs.iter()
                .flat_map(|l| &l.interactions)
                .filter(|e| e.kind == k)
                .count()
        };
        assert_eq!(count_kind(InteractionKind::Grab), 10);
        assert_eq!(count_kind(InteractionKind::Release), 10);
        assert_eq!(count_kind(InteractionKind::LabelChange), 5);
        assert_eq!(count_kind(InteractionKind::LabelOverride), 2);
        // marked logs still pass session validation
        GroupSession::new(
            session.group_id.clone(),
            session.duration,
            logs,
            session.object_catalog.clone(),
            Some(metrics),
        )
        .unwrap();
    }

    #[test]
    fn interaction_cap_flagged_when_fixations_scarce() {
        let mut log = ParticipantLog::empty("p0");
        log.gaze.push(GazeEvent {
            participant_id: "p0".into(),
            start: 1.0,
            duration: 2.0,
            target_object_id: "img00".into(),
        });
        let metrics = TaskMetrics {
            images_grabbed: 5,
            total_grabs: 5,
            labels_overridden: 0,
            images_looked_at: 1,
            completion_time: 10.0,
            accuracy: 50.0,
            label_changes: 0,
        };
        let mut rng = substream_rng(0, &[2]);
        let (logs, capped) = synthesize_interactions(vec![log], &metrics, &mut rng);
        assert!(capped);
        assert_eq!(
            logs[0]
                .interactions
                .iter()
                .filter(|e| e.kind == InteractionKind::Grab)
                .count(),
            1
        );
    }

    #[test]
    fn simulated_sessions_pass_logmodel_validation() {
        let (corpus, labels) = labeled_corpus(3, 12);
        let gens = build_generators(&corpus, &labels).unwrap();
        for seed in 0..5 {
            let (session, _) = simulate_group(&demo_config(seed, 4), &gens, None).unwrap();
            session.validate().unwrap();
        }
    }
}
