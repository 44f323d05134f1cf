//! Canonical data model and file I/O for interaction logs.
//!
//! A group session lives on disk as a directory:
//! `session.json` (manifest) plus, per participant `k` (1-based),
//! `p<k>_speaking.jsonl`, `p<k>_gaze.jsonl`, `p<k>_location.jsonl` and
//! `p<k>_interactions.jsonl`, one JSON record per line.
//!
//! Sessions are validated at parse time: events sorted, speaking
//! self-overlaps merged, location timestamps strictly increasing, gaze
//! targets drawn from the session's object catalog.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakingEvent {
    pub participant_id: String,
    pub start: f64,
    pub duration: f64,
}

impl SpeakingEvent {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeEvent {
    pub participant_id: String,
    pub start: f64,
    pub duration: f64,
    pub target_object_id: String,
}

impl GazeEvent {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationSample {
    pub participant_id: String,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Grab,
    Release,
    LabelChange,
    LabelOverride,
    Look,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInteractionEvent {
    pub participant_id: String,
    pub t: f64,
    pub object_id: String,
    pub kind: InteractionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantLog {
    pub participant_id: String,
    pub speaking: Vec<SpeakingEvent>,
    pub gaze: Vec<GazeEvent>,
    pub locations: Vec<LocationSample>,
    pub interactions: Vec<ObjectInteractionEvent>,
}

impl ParticipantLog {
    pub fn empty(participant_id: impl Into<String>) -> Self {
        ParticipantLog {
            participant_id: participant_id.into(),
            speaking: Vec::new(),
            gaze: Vec::new(),
            locations: Vec::new(),
            interactions: Vec::new(),
        }
    }
}

/// Group-level task outcome metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub images_grabbed: u32,
    pub total_grabs: u32,
    pub labels_overridden: u32,
    pub images_looked_at: u32,
    pub completion_time: f64,
    pub accuracy: f64,
    pub label_changes: u32,
}

impl TaskMetrics {
    /// Fixed target column order used by the regression forest and reports.
    pub const METRIC_NAMES: [&'static str; 7] = [
        "images_grabbed",
        "total_grabs",
        "labels_overridden",
        "images_looked_at",
        "completion_time",
        "accuracy",
        "label_changes",
    ];

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.images_grabbed as f64,
            self.total_grabs as f64,
            self.labels_overridden as f64,
            self.images_looked_at as f64,
            self.completion_time,
            self.accuracy,
            self.label_changes as f64,
        ]
    }

    /// Rebuild from a raw prediction vector: counts rounded to non-negative
    /// integers, accuracy clamped to [0, 100].
    pub fn from_vec(v: &[f64]) -> Self {
        let count = |x: f64| x.round().max(0.0) as u32;
        TaskMetrics {
            images_grabbed: count(v[0]),
            total_grabs: count(v[1]),
            labels_overridden: count(v[2]),
            images_looked_at: count(v[3]),
            completion_time: v[4].max(0.0),
            accuracy: v[5].clamp(0.0, 100.0),
            label_changes: count(v[6]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSession {
    pub group_id: String,
    pub duration: f64,
    pub participants: Vec<ParticipantLog>,
    pub object_catalog: Vec<String>,
    pub task_metrics: Option<TaskMetrics>,
}

/// On-disk manifest (`session.json`). The participant id list makes empty
/// logs round-trippable.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionManifest {
    group_id: String,
    duration: f64,
    group_size: usize,
    participants: Vec<String>,
    object_catalog: Vec<String>,
    task_metrics: Option<TaskMetrics>,
}

impl GroupSession {
    pub fn new(
        group_id: impl Into<String>,
        duration: f64,
        participants: Vec<ParticipantLog>,
        mut object_catalog: Vec<String>,
        task_metrics: Option<TaskMetrics>,
    ) -> Result<Self> {
        object_catalog.sort();
        object_catalog.dedup();
        let mut session = GroupSession {
            group_id: group_id.into(),
            duration,
            participants,
            object_catalog,
            task_metrics,
        };
        session.normalize()?;
        session.validate()?;
        Ok(session)
    }

    /// Sort all event streams and merge self-overlapping speaking events.
    pub fn normalize(&mut self) -> Result<()> {
        for log in &mut self.participants {
            log.speaking
                .sort_by(|a, b| a.start.total_cmp(&b.start).then(a.duration.total_cmp(&b.duration)));
            log.speaking = merge_overlapping_events(&log.speaking);
            log.gaze
                .sort_by(|a, b| a.start.total_cmp(&b.start).then(a.duration.total_cmp(&b.duration)));
            log.locations.sort_by(|a, b| a.t.total_cmp(&b.t));
            log.interactions.sort_by(|a, b| a.t.total_cmp(&b.t));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::InvalidSession(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for log in &self.participants {
            if !seen.insert(log.participant_id.clone()) {
                return Err(Error::DuplicateParticipant(log.participant_id.clone()));
            }
            self.validate_log(log)?;
        }
        Ok(())
    }

    fn validate_log(&self, log: &ParticipantLog) -> Result<()> {
        let pid = &log.participant_id;
        let within = |t: f64| t.is_finite() && t >= 0.0 && t <= self.duration;
        for ev in &log.speaking {
            if ev.participant_id != *pid {
                return Err(Error::InvalidSession(format!(
                    "speaking event of {} inside log of {}",
                    ev.participant_id, pid
                )));
            }
            if !(ev.duration > 0.0) || !within(ev.start) || ev.end() > self.duration + 1e-9 {
                return Err(Error::InvalidSession(format!(
                    "speaking event out of range for {pid}: start={} duration={}",
                    ev.start, ev.duration
                )));
            }
        }
        for w in log.speaking.windows(2) {
            if w[1].start < w[0].end() - 1e-12 {
                return Err(Error::InvalidSession(format!(
                    "overlapping speaking events for {pid} at {}",
                    w[1].start
                )));
            }
        }
        for ev in &log.gaze {
            if ev.participant_id != *pid {
                return Err(Error::InvalidSession(format!(
                    "gaze event of {} inside log of {}",
                    ev.participant_id, pid
                )));
            }
            if ev.duration < 0.0 || !within(ev.start) {
                return Err(Error::InvalidSession(format!(
                    "gaze event out of range for {pid}: start={}",
                    ev.start
                )));
            }
            if !self.object_catalog.iter().any(|o| o == &ev.target_object_id) {
                return Err(Error::InvalidSession(format!(
                    "gaze target {} not in object catalog",
                    ev.target_object_id
                )));
            }
        }
        let mut prev_t = f64::NEG_INFINITY;
        for s in &log.locations {
            if s.participant_id != *pid {
                return Err(Error::InvalidSession(format!(
                    "location sample of {} inside log of {}",
                    s.participant_id, pid
                )));
            }
            if !within(s.t) || !s.x.is_finite() || !s.y.is_finite() || !s.z.is_finite() {
                return Err(Error::InvalidSession(format!(
                    "location sample out of range for {pid} at t={}",
                    s.t
                )));
            }
            if s.t <= prev_t {
                return Err(Error::InvalidSession(format!(
                    "non-monotonic location timestamps for {pid} at t={}",
                    s.t
                )));
            }
            prev_t = s.t;
        }
        // grab/release must alternate per (participant, object)
        let mut held: HashMap<&str, bool> = HashMap::new();
        for ev in &log.interactions {
            if ev.participant_id != *pid {
                return Err(Error::InvalidSession(format!(
                    "interaction of {} inside log of {}",
                    ev.participant_id, pid
                )));
            }
            if !within(ev.t) {
                return Err(Error::InvalidSession(format!(
                    "interaction out of range for {pid} at t={}",
                    ev.t
                )));
            }
            match ev.kind {
                InteractionKind::Grab => {
                    let h = held.entry(ev.object_id.as_str()).or_insert(false);
                    if *h {
                        return Err(Error::InvalidSession(format!(
                            "double grab of {} by {pid}",
                            ev.object_id
                        )));
                    }
                    *h = true;
                }
                InteractionKind::Release => {
                    let h = held.entry(ev.object_id.as_str()).or_insert(false);
                    if !*h {
                        return Err(Error::InvalidSession(format!(
                            "release without grab of {} by {pid}",
                            ev.object_id
                        )));
                    }
                    *h = false;
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Interval union over one participant's speaking events.
///
/// Output is sorted and pairwise non-overlapping; the covered time set equals
/// the input's union (touching intervals are merged).
pub fn merge_overlapping_events(events: &[SpeakingEvent]) -> Vec<SpeakingEvent> {
    if events.is_empty() {
        return Vec::new();
    }
    let mut sorted: Vec<&SpeakingEvent> = events.iter().collect();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    let pid = sorted[0].participant_id.clone();
    let mut out: Vec<SpeakingEvent> = Vec::with_capacity(sorted.len());
    // singleton runs are passed through bit-exactly so merging is idempotent
    let flush = |run: &[&SpeakingEvent], cur_end: f64, out: &mut Vec<SpeakingEvent>| {
        if run.len() == 1 {
            out.push(run[0].clone());
        } else {
            out.push(SpeakingEvent {
                participant_id: pid.clone(),
                start: run[0].start,
                duration: cur_end - run[0].start,
            });
        }
    };
    let mut run: Vec<&SpeakingEvent> = vec![sorted[0]];
    let mut cur_end = sorted[0].end();
    for ev in &sorted[1..] {
        if ev.start <= cur_end {
            cur_end = cur_end.max(ev.end());
            run.push(ev);
        } else {
            flush(&run, cur_end, &mut out);
            run = vec![ev];
            cur_end = ev.end();
        }
    }
    flush(&run, cur_end, &mut out);
    out
}

fn modality_path(root: &Path, k: usize, modality: &str) -> PathBuf {
    root.join(format!("p{k}_{modality}.jsonl"))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Parse a session directory into a validated [`GroupSession`].
pub fn parse_group_session(root: &Path) -> Result<GroupSession> {
    let manifest_path = root.join("session.json");
    if !manifest_path.exists() {
        return Err(Error::MissingFile(manifest_path));
    }
    let manifest_text =
        fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: SessionManifest = serde_json::from_str(&manifest_text)?;
    if manifest.participants.len() != manifest.group_size {
        return Err(Error::InvalidSession(format!(
            "manifest lists {} participants but group_size is {}",
            manifest.participants.len(),
            manifest.group_size
        )));
    }
    let mut participants = Vec::with_capacity(manifest.group_size);
    for (idx, pid) in manifest.participants.iter().enumerate() {
        let k = idx + 1;
        let speaking: Vec<SpeakingEvent> = read_jsonl(&modality_path(root, k, "speaking"))?;
        let gaze: Vec<GazeEvent> = read_jsonl(&modality_path(root, k, "gaze"))?;
        let locations: Vec<LocationSample> = read_jsonl(&modality_path(root, k, "location"))?;
        let interactions: Vec<ObjectInteractionEvent> =
            read_jsonl(&modality_path(root, k, "interactions"))?;
        for owner in speaking
            .iter()
            .map(|e| &e.participant_id)
            .chain(gaze.iter().map(|e| &e.participant_id))
            .chain(locations.iter().map(|e| &e.participant_id))
            .chain(interactions.iter().map(|e| &e.participant_id))
        {
            if owner != pid {
                return Err(Error::InvalidSession(format!(
                    "record owned by {owner} found in files of {pid}"
                )));
            }
        }
        participants.push(ParticipantLog {
            participant_id: pid.clone(),
            speaking,
            gaze,
            locations,
            interactions,
        });
    }
    GroupSession::new(
        manifest.group_id,
        manifest.duration,
        participants,
        manifest.object_catalog,
        manifest.task_metrics,
    )
}

/// Write a session directory in the canonical layout. Byte output is
/// deterministic for identical input.
pub fn write_group_session(session: &GroupSession, root: &Path) -> Result<()> {
    session.validate()?;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let manifest = SessionManifest {
        group_id: session.group_id.clone(),
        duration: session.duration,
        group_size: session.participants.len(),
        participants: session
            .participants
            .iter()
            .map(|p| p.participant_id.clone())
            .collect(),
        object_catalog: session.object_catalog.clone(),
        task_metrics: session.task_metrics.clone(),
    };
    let manifest_path = root.join("session.json");
    let mut f = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let text = serde_json::to_string_pretty(&manifest)?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::io(&manifest_path, e))?;
    f.write_all(b"\n").map_err(|e| Error::io(&manifest_path, e))?;
    for (idx, log) in session.participants.iter().enumerate() {
        let k = idx + 1;
        write_jsonl(&modality_path(root, k, "speaking"), &log.speaking)?;
        write_jsonl(&modality_path(root, k, "gaze"), &log.gaze)?;
        write_jsonl(&modality_path(root, k, "location"), &log.locations)?;
        write_jsonl(&modality_path(root, k, "interactions"), &log.interactions)?;
    }
    Ok(())
}
