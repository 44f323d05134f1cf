//! Pipeline orchestration: corpus loading, the fit / simulate / evaluate
//! stages, and deterministic stamped artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use mocomr::behaviorsim::{
    build_generators, simulate_group, BehaviorProfile, CorpusLabels, SimulationConfig,
    SimulationNotes,
};
use mocomr::clustering::{
    assign_clusters, select_model, GmmConfig, GmmModel, ModelSelectionReport,
};
use mocomr::corpusgen::{builtin_archetypes, generate_corpus, ArchetypeMix, CorpusConfig};
use mocomr::features::{
    bin_event_series, gaze_feature_matrix, location_feature_matrix, speaking_feature_matrix,
    standardize, FeatureMatrix,
};
use mocomr::fidelity::{fidelity_report, FidelityReport};
use mocomr::logmodel::{parse_group_session, write_group_session, GroupSession};
use mocomr::seeding::derive_seed;
use mocomr::sociograph::{
    compare_graphs, conversation_graph, proximity_graph, shared_attention_graph, GraphFidelity,
    Sociogram,
};
use mocomr::taskpredict::{
    encode_group_config, evaluate_forest_loo, fit_forest, ForestConfig, ForestEvaluation,
    GroupConfigEncoding, RegressionForest,
};

use crate::config::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Fit,
    Simulate,
    Evaluate,
    All,
}

/// Wrapper stamped onto every artifact so outputs are traceable to the
/// configuration and seed that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_hash: String,
    pub seed: u64,
    pub payload: T,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalityFit {
    pub model: GmmModel,
    pub report: ModelSelectionReport,
    /// `group_id/participant_id` per feature-matrix row.
    pub row_ids: Vec<String>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelsFile {
    pub speaking: ModalityFit,
    pub gaze: ModalityFit,
    pub location: ModalityFit,
}

/// Atomic write: write a temp file in the target directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(parent)
        .with_context(|| format!("cannot create {}", parent.display()))?;
    let tmp = parent.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact")
    ));
    std::fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move artifact into place at {}", path.display()))?;
    Ok(())
}

fn write_stamped<T: Serialize>(config: &PipelineConfig, path: &Path, payload: &T) -> Result<()> {
    let doc = Stamped {
        config_hash: config.config_hash(),
        seed: config.seed,
        payload,
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn read_stamped<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Stamped<T>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read artifact {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed artifact {}", path.display()))
}

/// Load every session directory under `dir`, sorted by directory name.
pub fn load_corpus(dir: &Path) -> Result<Vec<GroupSession>> {
    if !dir.is_dir() {
        bail!(
            "corpus directory {} does not exist; run `gen-corpus` or point paths.corpus_dir at session data",
            dir.display()
        );
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    let mut corpus = Vec::with_capacity(subdirs.len());
    for sub in subdirs {
        corpus.push(
            parse_group_session(&sub)
                .with_context(|| format!("cannot parse session at {}", sub.display()))?,
        );
    }
    Ok(corpus)
}

/// Generate the built-in-archetype corpus into `paths.corpus_dir`.
pub fn gen_corpus(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let corpus_config = CorpusConfig {
        n_groups: config.simulation.n_groups,
        group_size: config.simulation.group_size,
        session_duration: config.simulation.session_duration,
        archetype_mix: ArchetypeMix::RoundRobin,
        n_images: config.simulation.n_images,
        seed: config.seed,
    };
    let corpus = generate_corpus(&corpus_config, &builtin_archetypes())?;
    let mut written = Vec::with_capacity(corpus.len());
    for session in &corpus {
        let dir = config.paths.corpus_dir.join(&session.group_id);
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        write_group_session(session, &dir)?;
        written.push(dir);
    }
    Ok(written)
}

fn usable_k_range(k_range: &[usize], n_rows: usize) -> Result<Vec<usize>> {
    let usable: Vec<usize> = k_range.iter().copied().filter(|&k| k >= 1 && k <= n_rows).collect();
    if usable.is_empty() {
        bail!("no usable k in k_range {k_range:?} for {n_rows} participants");
    }
    Ok(usable)
}

fn fit_modality(
    matrix: &FeatureMatrix,
    k_range: &[usize],
    seed: u64,
) -> Result<ModalityFit> {
    let standardized = standardize(matrix)?;
    let usable = usable_k_range(k_range, standardized.n_rows())?;
    let (model, report) = select_model(&standardized, &usable, seed, &GmmConfig::default())?;
    let labels = assign_clusters(&model, &standardized)?;
    Ok(ModalityFit {
        model,
        report,
        row_ids: standardized.row_ids.clone(),
        labels,
    })
}

/// `fit` stage: extract features per modality, select mixture models, and
/// persist models plus cluster assignments.
pub fn stage_fit(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let corpus = load_corpus(&config.paths.corpus_dir)?;
    if corpus.is_empty() {
        bail!("corpus contains no sessions");
    }
    let models = ModelsFile {
        speaking: fit_modality(
            &speaking_feature_matrix(&corpus),
            &config.thresholds.k_range,
            derive_seed(config.seed, &[1, 0]),
        )?,
        gaze: fit_modality(
            &gaze_feature_matrix(&corpus),
            &config.thresholds.k_range,
            derive_seed(config.seed, &[1, 1]),
        )?,
        location: fit_modality(
            &location_feature_matrix(&corpus, config.thresholds.v_idle),
            &config.thresholds.k_range,
            derive_seed(config.seed, &[1, 2]),
        )?,
    };
    write_stamped(config, &config.paths.models_file, &models)?;
    Ok(vec![config.paths.models_file.clone()])
}

fn load_models(config: &PipelineConfig) -> Result<ModelsFile> {
    let path = &config.paths.models_file;
    if !path.exists() {
        bail!(
            "models file {} not found; run the `fit` stage to produce it",
            path.display()
        );
    }
    let stamped: Stamped<ModelsFile> = read_stamped(path)?;
    if stamped.config_hash != config.config_hash() {
        bail!(
            "models file {} was produced with a different configuration (hash {} vs {}); re-run `fit`",
            path.display(),
            stamped.config_hash,
            config.config_hash()
        );
    }
    Ok(stamped.payload)
}

fn corpus_labels(models: &ModelsFile) -> CorpusLabels {
    CorpusLabels {
        speaking: models.speaking.labels.clone(),
        gaze: models.gaze.labels.clone(),
        location: models.location.labels.clone(),
    }
}

/// Per-group behavior profiles in corpus participant order.
fn group_profiles(corpus: &[GroupSession], labels: &CorpusLabels) -> Vec<Vec<BehaviorProfile>> {
    let mut out = Vec::with_capacity(corpus.len());
    let mut idx = 0;
    for session in corpus {
        let mut profiles = Vec::with_capacity(session.participants.len());
        for _ in &session.participants {
            profiles.push(BehaviorProfile {
                speaking_cluster: labels.speaking[idx],
                gaze_cluster: labels.gaze[idx],
                location_cluster: labels.location[idx],
            });
            idx += 1;
        }
        out.push(profiles);
    }
    out
}

fn training_rows(
    corpus: &[GroupSession],
    profiles: &[Vec<BehaviorProfile>],
    models: &ModelsFile,
) -> Result<(Vec<GroupConfigEncoding>, Vec<Vec<f64>>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (session, profs) in corpus.iter().zip(profiles) {
        if let Some(metrics) = &session.task_metrics {
            xs.push(encode_group_config(
                profs,
                models.speaking.model.k,
                models.gaze.model.k,
                models.location.model.k,
            )?);
            ys.push(metrics.to_vec());
        }
    }
    Ok((xs, ys))
}

fn metric_names() -> Vec<String> {
    mocomr::logmodel::TaskMetrics::METRIC_NAMES
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// `simulate` stage: build per-cluster generators, train the task-metric
/// forest, and emit one profile-matched simulated session per corpus group.
pub fn stage_simulate(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let corpus = load_corpus(&config.paths.corpus_dir)?;
    if corpus.is_empty() {
        bail!("corpus contains no sessions");
    }
    let models = load_models(config)?;
    let labels = corpus_labels(&models);
    let gens = build_generators(&corpus, &labels)?;
    let profiles = group_profiles(&corpus, &labels);

    let (xs, ys) = training_rows(&corpus, &profiles, &models)?;
    let forest: Option<RegressionForest> = if xs.len() >= 2 {
        Some(fit_forest(
            &xs,
            &ys,
            &metric_names(),
            derive_seed(config.seed, &[2]),
            &ForestConfig::default(),
        )?)
    } else {
        None
    };

    let mut artifacts = Vec::new();
    let sim_root = config.paths.output_dir.join("simulated");
    let mut notes: BTreeMap<String, SimulationNotes> = BTreeMap::new();
    for (g, (session, profs)) in corpus.iter().zip(&profiles).enumerate() {
        let sim_config = SimulationConfig {
            group_id: session.group_id.clone(),
            session_duration: session.duration,
            group_size: profs.len(),
            profiles: profs.clone(),
            seed: derive_seed(config.seed, &[3, g as u64]),
            n_images: config.simulation.n_images,
            n_categories: config.simulation.n_categories,
        };
        let (sim_session, session_notes) = simulate_group(&sim_config, &gens, forest.as_ref())?;
        let dir = sim_root.join(&sim_session.group_id);
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        write_group_session(&sim_session, &dir)?;
        notes.insert(sim_session.group_id.clone(), session_notes);
        artifacts.push(dir);
    }
    let notes_path = sim_root.join("notes.json");
    write_stamped(config, &notes_path, &notes)?;
    artifacts.push(notes_path);
    if let Some(forest) = &forest {
        let forest_path = config.paths.output_dir.join("forest.json");
        write_stamped(config, &forest_path, forest)?;
        artifacts.push(forest_path);
    }
    Ok(artifacts)
}

/// Relabel the simulated graph's nodes onto the real node set by sorted
/// index, so externally produced corpora with different id schemes still
/// compare.
fn align_nodes(sim: &Sociogram, real_nodes: &[String]) -> Result<Sociogram> {
    if sim.nodes == real_nodes {
        return Ok(sim.clone());
    }
    if sim.nodes.len() != real_nodes.len() {
        bail!(
            "cannot align graphs: {} simulated vs {} real participants",
            sim.nodes.len(),
            real_nodes.len()
        );
    }
    let mapping: BTreeMap<&String, &String> = sim.nodes.iter().zip(real_nodes).collect();
    let raw: Vec<(String, String, f64)> = sim
        .edges
        .iter()
        .map(|e| (mapping[&e.from].clone(), mapping[&e.to].clone(), e.weight))
        .collect();
    Ok(Sociogram::from_edges(sim.kind, sim.directed, real_nodes.to_vec(), &raw)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFidelityReport {
    /// per_group[group_id][graph_kind]
    pub per_group: BTreeMap<String, BTreeMap<String, GraphFidelity>>,
    pub mean: BTreeMap<String, GraphFidelity>,
}

fn mean_fidelity(values: &[&GraphFidelity]) -> GraphFidelity {
    let n = values.len().max(1) as f64;
    GraphFidelity {
        mean_weight_diff: values.iter().map(|v| v.mean_weight_diff).sum::<f64>() / n,
        mean_node_interaction_diff: values
            .iter()
            .map(|v| v.mean_node_interaction_diff)
            .sum::<f64>()
            / n,
        jaccard_edges: values.iter().map(|v| v.jaccard_edges).sum::<f64>() / n,
        cosine_similarity: values.iter().map(|v| v.cosine_similarity).sum::<f64>() / n,
        isomorphism_score: values.iter().map(|v| v.isomorphism_score).sum::<f64>() / n,
    }
}

/// Build the three sociograms for one session with configured thresholds.
pub fn session_graphs(
    session: &GroupSession,
    config: &PipelineConfig,
) -> Result<BTreeMap<String, Sociogram>> {
    let t = &config.thresholds;
    let mut out = BTreeMap::new();
    out.insert(
        "conversation".to_string(),
        conversation_graph(session, t.tau_turn)?,
    );
    out.insert(
        "proximity".to_string(),
        proximity_graph(session, t.d_thresh, t.grid_dt)?,
    );
    out.insert(
        "shared_attention".to_string(),
        shared_attention_graph(session)?,
    );
    Ok(out)
}

fn binned_speaking_series(corpus: &[GroupSession], n_bins: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for session in corpus {
        for log in &session.participants {
            let starts: Vec<f64> = log.speaking.iter().map(|e| e.start).collect();
            out.push(bin_event_series(&starts, session.duration, n_bins));
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationArtifacts {
    pub fidelity: BTreeMap<String, FidelityReport>,
    pub graphs: GraphFidelityReport,
    /// Absent when fewer than 3 corpus groups carry task metrics.
    pub forest: Option<ForestEvaluation>,
}

/// `evaluate` stage: per-feature fidelity reports, sociogram comparisons,
/// and leave-one-group-out forest evaluation.
pub fn stage_evaluate(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let corpus = load_corpus(&config.paths.corpus_dir)?;
    if corpus.is_empty() {
        bail!("corpus contains no sessions");
    }
    let models = load_models(config)?;
    let sim_root = config.paths.output_dir.join("simulated");
    if !sim_root.is_dir() {
        bail!(
            "simulated sessions not found at {}; run the `simulate` stage to produce them",
            sim_root.display()
        );
    }
    let simulated = load_corpus(&sim_root)?;
    if simulated.len() != corpus.len() {
        bail!(
            "simulated corpus has {} sessions but the real corpus has {}; re-run `simulate`",
            simulated.len(),
            corpus.len()
        );
    }

    let mut fidelity = BTreeMap::new();
    let real_series = binned_speaking_series(&corpus, config.thresholds.n_bins);
    let sim_series = binned_speaking_series(&simulated, config.thresholds.n_bins);
    fidelity.insert(
        "speaking".to_string(),
        fidelity_report(
            &speaking_feature_matrix(&corpus),
            &speaking_feature_matrix(&simulated),
            &real_series,
            &sim_series,
        )?,
    );
    fidelity.insert(
        "gaze".to_string(),
        fidelity_report(
            &gaze_feature_matrix(&corpus),
            &gaze_feature_matrix(&simulated),
            &[],
            &[],
        )?,
    );
    fidelity.insert(
        "location".to_string(),
        fidelity_report(
            &location_feature_matrix(&corpus, config.thresholds.v_idle),
            &location_feature_matrix(&simulated, config.thresholds.v_idle),
            &[],
            &[],
        )?,
    );

    let mut per_group: BTreeMap<String, BTreeMap<String, GraphFidelity>> = BTreeMap::new();
    for (real, sim) in corpus.iter().zip(&simulated) {
        let real_graphs = session_graphs(real, config)?;
        let sim_graphs = session_graphs(sim, config)?;
        let mut row = BTreeMap::new();
        for (kind, rg) in &real_graphs {
            let sg = align_nodes(&sim_graphs[kind], &rg.nodes)?;
            row.insert(kind.clone(), compare_graphs(rg, &sg)?);
        }
        per_group.insert(real.group_id.clone(), row);
    }
    let mut mean = BTreeMap::new();
    for kind in ["conversation", "proximity", "shared_attention"] {
        let values: Vec<&GraphFidelity> =
            per_group.values().filter_map(|row| row.get(kind)).collect();
        mean.insert(kind.to_string(), mean_fidelity(&values));
    }
    let graphs = GraphFidelityReport { per_group, mean };

    let labels = corpus_labels(&models);
    let profiles = group_profiles(&corpus, &labels);
    let (xs, ys) = training_rows(&corpus, &profiles, &models)?;
    let forest = if xs.len() >= 3 {
        Some(evaluate_forest_loo(
            &xs,
            &ys,
            &metric_names(),
            derive_seed(config.seed, &[4]),
            &ForestConfig::default(),
        )?)
    } else {
        None
    };

    let evaluation = EvaluationArtifacts {
        fidelity,
        graphs,
        forest,
    };
    let reports_dir = config.paths.output_dir.join("reports");
    let eval_path = reports_dir.join("evaluation.json");
    write_stamped(config, &eval_path, &evaluation)?;
    let mut artifacts = vec![eval_path];
    for (modality, report) in &evaluation.fidelity {
        let csv_path = reports_dir.join(format!("fidelity_{modality}.csv"));
        atomic_write(&csv_path, report.to_csv_string().as_bytes())?;
        artifacts.push(csv_path);
    }
    Ok(artifacts)
}

/// Write DOT sociograms for every corpus session into
/// `output_dir/sociograms/`.
pub fn write_sociograms(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let corpus = load_corpus(&config.paths.corpus_dir)?;
    if corpus.is_empty() {
        bail!("corpus contains no sessions");
    }
    let dir = config.paths.output_dir.join("sociograms");
    let mut artifacts = Vec::new();
    for session in &corpus {
        for (kind, graph) in session_graphs(session, config)? {
            let path = dir.join(format!("{}_{kind}.dot", session.group_id));
            atomic_write(&path, graph.to_dot().as_bytes())?;
            artifacts.push(path);
        }
    }
    Ok(artifacts)
}

/// Predict task metrics for one corpus group from the trained forest.
pub fn predict_for_group(
    config: &PipelineConfig,
    group_id: &str,
) -> Result<mocomr::logmodel::TaskMetrics> {
    let corpus = load_corpus(&config.paths.corpus_dir)?;
    let models = load_models(config)?;
    let forest_path = config.paths.output_dir.join("forest.json");
    if !forest_path.exists() {
        bail!(
            "forest file {} not found; run the `simulate` stage to produce it",
            forest_path.display()
        );
    }
    let forest: Stamped<RegressionForest> = read_stamped(&forest_path)?;
    let labels = corpus_labels(&models);
    let profiles = group_profiles(&corpus, &labels);
    let idx = corpus
        .iter()
        .position(|s| s.group_id == group_id)
        .with_context(|| format!("group {group_id} not found in corpus"))?;
    let encoding = encode_group_config(
        &profiles[idx],
        models.speaking.model.k,
        models.gaze.model.k,
        models.location.model.k,
    )?;
    Ok(mocomr::taskpredict::predict_task_metrics(
        &forest.payload,
        &encoding,
    )?)
}

/// Run one stage (or the full chain) and return the artifact paths written.
pub fn run_pipeline(config: &PipelineConfig, stage: Stage) -> Result<Vec<PathBuf>> {
    config.validate()?;
    match stage {
        Stage::Fit => stage_fit(config),
        Stage::Simulate => stage_simulate(config),
        Stage::Evaluate => stage_evaluate(config),
        Stage::All => {
            let mut artifacts = stage_fit(config)?;
            artifacts.extend(stage_simulate(config)?);
            artifacts.extend(stage_evaluate(config)?);
            Ok(artifacts)
        }
    }
}
