//! Synthetic reference corpus generation from parameterized behavior
//! archetypes.
//!
//! Stands in for a real captured dataset: each participant is drawn from one
//! speaking, one gaze, and one locomotion archetype, with instance counts
//! from an overdispersed count law, durations from truncated log-normals,
//! and locomotion as a bounded random walk with idle dwell states.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::behaviorsim::synthesize_interactions;
use crate::error::{Error, Result};
use crate::logmodel::{
    GazeEvent, GroupSession, LocationSample, ParticipantLog, SpeakingEvent, TaskMetrics,
};
use crate::seeding::substream_rng;

/// Minimum event duration after truncation, seconds.
pub const MIN_DURATION: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeakingArchetype {
    pub name: String,
    pub mean_instances: f64,
    /// Count-law variance is `instance_dispersion * mean_instances`.
    pub instance_dispersion: f64,
    pub duration_mean: f64,
    pub duration_std: f64,
    /// Beta(a, b) shape of start times over the normalized session.
    pub start_alpha: f64,
    pub start_beta: f64,
    /// Periodic burst modulation of the start profile: harmonic index over
    /// the session (0 disables) and modulation depth in [0, 1).
    #[serde(default)]
    pub burst_harmonic: usize,
    #[serde(default)]
    pub burst_depth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GazeArchetype {
    pub name: String,
    pub mean_instances: f64,
    pub instance_dispersion: f64,
    pub duration_mean: f64,
    pub duration_std: f64,
    /// Unnormalized preference weights over the object catalog; renormalized
    /// (and truncated or extended with the final weight) to the catalog size.
    pub object_preference: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RoomBounds {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocomotionArchetype {
    pub name: String,
    pub mean_samples: f64,
    pub instance_dispersion: f64,
    /// Nominal sampling rate implied by mean_samples over a default session.
    pub sample_rate: f64,
    pub step_std: [f64; 3],
    pub drift: [f64; 3],
    pub idle_prob: f64,
    pub room_bounds: RoomBounds,
    /// Descriptive tortuosity level this archetype aims for (not enforced).
    pub target_tortuosity: f64,
}

/// A full per-participant parameterization: one archetype per modality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchetypeSpec {
    pub name: String,
    pub speaking: SpeakingArchetype,
    pub gaze: GazeArchetype,
    pub locomotion: LocomotionArchetype,
}

/// Catalog of per-modality archetypes; participants compose one of each.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchetypeCatalog {
    pub speaking: Vec<SpeakingArchetype>,
    pub gaze: Vec<GazeArchetype>,
    pub locomotion: Vec<LocomotionArchetype>,
}

impl ArchetypeCatalog {
    pub fn compose(&self, speaking: usize, gaze: usize, locomotion: usize) -> ArchetypeSpec {
        let s = &self.speaking[speaking % self.speaking.len()];
        let g = &self.gaze[gaze % self.gaze.len()];
        let l = &self.locomotion[locomotion % self.locomotion.len()];
        ArchetypeSpec {
            name: format!("{}/{}/{}", s.name, g.name, l.name),
            speaking: s.clone(),
            gaze: g.clone(),
            locomotion: l.clone(),
        }
    }
}

fn geometric_preference(n: usize, decay: f64) -> Vec<f64> {
    (0..n).map(|i| decay.powi(i as i32)).collect()
}

/// Built-in archetypes parameterized to the published per-cluster statistics:
/// 3 speaking, 3 gaze, and 4 locomotion profiles.
pub fn builtin_archetypes() -> ArchetypeCatalog {
    let default_bounds = RoomBounds {
        min: [-4.0, -4.0, 1.0],
        max: [4.0, 4.0, 2.0],
    };
    ArchetypeCatalog {
        speaking: vec![
            SpeakingArchetype {
                name: "frequent".into(),
                mean_instances: 119.29,
                instance_dispersion: 1.5,
                duration_mean: 1.7,
                duration_std: 0.8,
                start_alpha: 1.0,
                start_beta: 1.0,
                burst_harmonic: 0,
                burst_depth: 0.0,
            },
            SpeakingArchetype {
                name: "infrequent".into(),
                mean_instances: 14.35,
                instance_dispersion: 1.5,
                duration_mean: 1.6,
                duration_std: 0.4,
                start_alpha: 2.5,
                start_beta: 1.2,
                burst_harmonic: 0,
                burst_depth: 0.0,
            },
            SpeakingArchetype {
                name: "moderate".into(),
                mean_instances: 48.63,
                instance_dispersion: 1.5,
                duration_mean: 1.32,
                duration_std: 0.6,
                start_alpha: 5.0,
                start_beta: 1.2,
                burst_harmonic: 2,
                burst_depth: 0.95,
            },
        ],
        gaze: vec![
            GazeArchetype {
                name: "low".into(),
                mean_instances: 836.43,
                instance_dispersion: 1.5,
                duration_mean: 0.14,
                duration_std: 0.18,
                object_preference: geometric_preference(28, 0.85),
            },
            GazeArchetype {
                name: "moderate".into(),
                mean_instances: 1325.77,
                instance_dispersion: 1.5,
                duration_mean: 0.18,
                duration_std: 0.24,
                object_preference: geometric_preference(28, 0.92),
            },
            GazeArchetype {
                name: "high".into(),
                mean_instances: 2014.00,
                instance_dispersion: 1.5,
                duration_mean: 0.18,
                duration_std: 0.25,
                object_preference: geometric_preference(28, 0.97),
            },
        ],
        locomotion: vec![
            LocomotionArchetype {
                name: "consistent".into(),
                mean_samples: 496.17,
                instance_dispersion: 1.5,
                sample_rate: 496.17 / 600.0,
                step_std: [0.08, 0.08, 0.01],
                drift: [0.0, 0.0, 0.0],
                idle_prob: 0.16,
                room_bounds: default_bounds,
                target_tortuosity: 2.49,
            },
            LocomotionArchetype {
                name: "variable".into(),
                mean_samples: 850.0,
                instance_dispersion: 1.5,
                sample_rate: 850.0 / 600.0,
                step_std: [0.2, 0.2, 0.02],
                drift: [0.0, 0.0, 0.0],
                idle_prob: 0.18,
                room_bounds: default_bounds,
                target_tortuosity: 3.45,
            },
            LocomotionArchetype {
                name: "dynamic".into(),
                mean_samples: 1140.2,
                instance_dispersion: 1.5,
                sample_rate: 1140.2 / 600.0,
                step_std: [0.3, 0.3, 0.03],
                drift: [0.0, 0.0, 0.0],
                idle_prob: 0.14,
                room_bounds: default_bounds,
                target_tortuosity: 2.29,
            },
            LocomotionArchetype {
                name: "stable".into(),
                mean_samples: 709.18,
                instance_dispersion: 1.5,
                sample_rate: 709.18 / 600.0,
                step_std: [0.12, 0.12, 0.015],
                drift: [0.0, 0.0, 0.0],
                idle_prob: 0.14,
                room_bounds: default_bounds,
                target_tortuosity: 2.32,
            },
        ],
    }
}

/// Assignment rule participant -> (speaking, gaze, locomotion) archetype
/// indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum ArchetypeMix {
    /// Cycle archetypes by global participant index so every group mixes
    /// profiles.
    RoundRobin,
    /// Explicit per-participant assignment, indexed globally.
    Fixed { assignments: Vec<(usize, usize, usize)> },
}

impl ArchetypeMix {
    pub fn assign(&self, global_index: usize, catalog: &ArchetypeCatalog) -> (usize, usize, usize) {
        match self {
            ArchetypeMix::RoundRobin => (
                global_index % catalog.speaking.len(),
                (global_index / catalog.speaking.len()) % catalog.gaze.len(),
                global_index % catalog.locomotion.len(),
            ),
            ArchetypeMix::Fixed { assignments } => assignments[global_index % assignments.len()],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n_groups: usize,
    pub group_size: usize,
    pub session_duration: f64,
    pub archetype_mix: ArchetypeMix,
    pub n_images: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_groups: 12,
            group_size: 4,
            session_duration: 600.0,
            archetype_mix: ArchetypeMix::RoundRobin,
            n_images: 28,
            seed: 0,
        }
    }
}

/// Overdispersed count draw: Poisson mixed over a Gamma rate so that
/// variance = dispersion * mean.
fn sample_count(mean: f64, dispersion: f64, rng: &mut impl Rng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let lambda = if dispersion <= 1.0 + 1e-9 {
        mean
    } else {
        let scale = dispersion - 1.0;
        let shape = mean / scale;
        Gamma::new(shape, scale).unwrap().sample(rng)
    };
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).unwrap().sample(rng) as usize
}

/// Log-normal matched to (mean, std), truncated below at [`MIN_DURATION`].
fn duration_law(mean: f64, std: f64) -> LogNormal<f64> {
    let cv2 = (std / mean).powi(2);
    let sigma2 = (1.0 + cv2).ln();
    let mu = mean.ln() - sigma2 / 2.0;
    LogNormal::new(mu, sigma2.sqrt()).unwrap()
}

fn sample_duration(law: &LogNormal<f64>, rng: &mut impl Rng) -> f64 {
    law.sample(rng).max(MIN_DURATION)
}

fn check_feasible(catalog: &ArchetypeCatalog, duration: f64) -> Result<()> {
    for s in &catalog.speaking {
        if s.mean_instances * s.duration_mean > duration {
            return Err(Error::InfeasibleParameters(format!(
                "speaking archetype '{}': {} instances x {} s exceed session duration {} s",
                s.name, s.mean_instances, s.duration_mean, duration
            )));
        }
        if s.mean_instances <= 0.0 || s.duration_mean <= 0.0 {
            return Err(Error::InfeasibleParameters(format!(
                "speaking archetype '{}' has non-positive means",
                s.name
            )));
        }
    }
    for g in &catalog.gaze {
        if g.mean_instances <= 0.0 || g.duration_mean <= 0.0 {
            return Err(Error::InfeasibleParameters(format!(
                "gaze archetype '{}' has non-positive means",
                g.name
            )));
        }
    }
    for l in &catalog.locomotion {
        if l.mean_samples <= 0.0 || !(0.0..=1.0).contains(&l.idle_prob) {
            return Err(Error::InfeasibleParameters(format!(
                "locomotion archetype '{}' has invalid parameters",
                l.name
            )));
        }
    }
    Ok(())
}

fn generate_speaking(
    arch: &SpeakingArchetype,
    pid: &str,
    duration: f64,
    rng: &mut impl Rng,
) -> Vec<SpeakingEvent> {
    let n = sample_count(arch.mean_instances, arch.instance_dispersion, rng);
    let start_law = Beta::new(arch.start_alpha, arch.start_beta).unwrap();
    let dur_law = duration_law(arch.duration_mean, arch.duration_std);
    let mut sample_start = |rng: &mut dyn rand::RngCore| loop {
        let u: f64 = start_law.sample(rng);
        if arch.burst_harmonic == 0 {
            return u;
        }
        // rejection step imposes a periodic burst structure on the profile
        let angle = 2.0 * std::f64::consts::PI * arch.burst_harmonic as f64 * u;
        let accept = (1.0 + arch.burst_depth * angle.cos()) / (1.0 + arch.burst_depth);
        if rng.gen::<f64>() < accept {
            return u;
        }
    };
    let mut proto: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            (
                sample_start(rng) * duration,
                sample_duration(&dur_law, rng),
            )
        })
        .collect();
    proto.sort_by(|a, b| a.0.total_cmp(&b.0));
    // one voice per participant: push overlapping utterances later, drop any
    // that fall off the session end
    let mut events = Vec::with_capacity(n);
    let mut cursor = 0.0_f64;
    for (start, dur) in proto {
        let s = start.max(cursor);
        if s >= duration - MIN_DURATION {
            continue;
        }
        let d = dur.min(duration - s);
        events.push(SpeakingEvent {
            participant_id: pid.to_string(),
            start: s,
            duration: d,
        });
        cursor = s + d + 0.01;
    }
    events
}

fn generate_gaze(
    arch: &GazeArchetype,
    pid: &str,
    duration: f64,
    catalog: &[String],
    rng: &mut impl Rng,
) -> Vec<GazeEvent> {
    let n = sample_count(arch.mean_instances, arch.instance_dispersion, rng);
    let dur_law = duration_law(arch.duration_mean, arch.duration_std);
    // adapt the stored preference weights to the catalog size
    let mut weights: Vec<f64> = (0..catalog.len())
        .map(|i| {
            *arch
                .object_preference
                .get(i)
                .or(arch.object_preference.last())
                .unwrap_or(&1.0)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let mut events: Vec<GazeEvent> = (0..n)
        .map(|_| {
            let start = rng.gen::<f64>() * duration;
            let dur = sample_duration(&dur_law, rng).min(duration - start).max(0.0);
            let mut target = catalog.len() - 1;
            let mut u = rng.gen::<f64>();
            for (i, &w) in weights.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    target = i;
                    break;
                }
            }
            GazeEvent {
                participant_id: pid.to_string(),
                start,
                duration: dur,
                target_object_id: catalog[target].clone(),
            }
        })
        .collect();
    events.sort_by(|a, b| a.start.total_cmp(&b.start));
    events
}

fn generate_locomotion(
    arch: &LocomotionArchetype,
    pid: &str,
    duration: f64,
    rng: &mut impl Rng,
) -> Vec<LocationSample> {
    let n = sample_count(arch.mean_samples, arch.instance_dispersion, rng).max(2);
    let b = &arch.room_bounds;
    let mut pos = [
        b.min[0] + rng.gen::<f64>() * (b.max[0] - b.min[0]),
        b.min[1] + rng.gen::<f64>() * (b.max[1] - b.min[1]),
        b.min[2] + rng.gen::<f64>() * (b.max[2] - b.min[2]),
    ];
    let step = Normal::new(0.0, 1.0).unwrap();
    let dt = duration / (n as f64 + 1.0);
    let mut samples = Vec::with_capacity(n);
    let mut t = 0.0;
    for _ in 0..n {
        t += dt * (1.0 + 0.3 * (rng.gen::<f64>() - 0.5));
        if t >= duration {
            break;
        }
        if rng.gen::<f64>() >= arch.idle_prob {
            for axis in 0..3 {
                let delta = arch.drift[axis] + arch.step_std[axis] * step.sample(rng);
                pos[axis] += delta;
                // reflect at the room bounds
                if pos[axis] < b.min[axis] {
                    pos[axis] = 2.0 * b.min[axis] - pos[axis];
                }
                if pos[axis] > b.max[axis] {
                    pos[axis] = 2.0 * b.max[axis] - pos[axis];
                }
                pos[axis] = pos[axis].clamp(b.min[axis], b.max[axis]);
            }
        }
        samples.push(LocationSample {
            participant_id: pid.to_string(),
            t,
            x: pos[0],
            y: pos[1],
            z: pos[2],
        });
    }
    samples
}

fn sample_task_metrics(
    n_images: usize,
    duration: f64,
    mean_gaze_instances: f64,
    rng: &mut impl Rng,
) -> TaskMetrics {
    let n = n_images as f64;
    // mild coupling to gaze activity so the forest has signal to find
    let activity = (mean_gaze_instances / 1400.0).clamp(0.3, 2.0);
    let images_grabbed = ((0.75 + 0.1 * activity + 0.1 * rng.gen::<f64>()) * n).min(n) as u32;
    let total_grabs = images_grabbed + (activity * 12.0 * rng.gen::<f64>()) as u32;
    TaskMetrics {
        images_grabbed,
        total_grabs,
        labels_overridden: (8.0 * rng.gen::<f64>()) as u32,
        images_looked_at: ((0.9 + 0.1 * rng.gen::<f64>()) * n).min(n) as u32,
        completion_time: duration * (0.8 + 0.15 * rng.gen::<f64>()),
        accuracy: 55.0 + 40.0 * rng.gen::<f64>(),
        label_changes: (10.0 + activity * 25.0 * rng.gen::<f64>()) as u32,
    }
}

/// Generate a deterministic corpus of group sessions from the archetype
/// catalog.
pub fn generate_corpus(
    config: &CorpusConfig,
    catalog: &ArchetypeCatalog,
) -> Result<Vec<GroupSession>> {
    check_feasible(catalog, config.session_duration)?;
    if config.n_groups == 0 {
        return Ok(Vec::new());
    }
    let object_catalog: Vec<String> = (0..config.n_images).map(|i| format!("img{i:02}")).collect();
    let mut sessions = Vec::with_capacity(config.n_groups);
    for g in 0..config.n_groups {
        let mut logs = Vec::with_capacity(config.group_size);
        let mut gaze_means = 0.0;
        for k in 0..config.group_size {
            let global = g * config.group_size + k;
            let (si, gi, li) = config.archetype_mix.assign(global, catalog);
            let spec = catalog.compose(si, gi, li);
            let pid = format!("g{g:02}p{k}");
            let mut rng_speak = substream_rng(config.seed, &[g as u64, k as u64, 0]);
            let mut rng_gaze = substream_rng(config.seed, &[g as u64, k as u64, 1]);
            let mut rng_loc = substream_rng(config.seed, &[g as u64, k as u64, 2]);
            let log = ParticipantLog {
                participant_id: pid.clone(),
                speaking: generate_speaking(
                    &spec.speaking,
                    &pid,
                    config.session_duration,
                    &mut rng_speak,
                ),
                gaze: generate_gaze(
                    &spec.gaze,
                    &pid,
                    config.session_duration,
                    &object_catalog,
                    &mut rng_gaze,
                ),
                locations: generate_locomotion(
                    &spec.locomotion,
                    &pid,
                    config.session_duration,
                    &mut rng_loc,
                ),
                interactions: Vec::new(),
            };
            gaze_means += spec.gaze.mean_instances / config.group_size as f64;
            logs.push(log);
        }
        let mut rng_task = substream_rng(config.seed, &[g as u64, u64::MAX, 3]);
        let metrics = sample_task_metrics(
            config.n_images,
            config.session_duration,
            gaze_means,
            &mut rng_task,
        );
        let mut rng_mark = substream_rng(config.seed, &[g as u64, u64::MAX, 4]);
        let (logs, _capped) = synthesize_interactions(logs, &metrics, &mut rng_mark);
        sessions.push(GroupSession::new(
            format!("g{g:02}"),
            config.session_duration,
            logs,
            object_catalog.clone(),
            Some(metrics),
        )?);
    }
    Ok(sessions)
}
