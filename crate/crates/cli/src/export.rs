//! Data export in interchange formats (JSONL, CSV, DOT).

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use serde::Deserialize;

use mocomr::features::{
    gaze_feature_matrix, location_feature_matrix, speaking_feature_matrix, FeatureMatrix,
};

use crate::config::PipelineConfig;
use crate::pipeline::{atomic_write, load_corpus, session_graphs, EvaluationArtifacts, Stamped};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum What {
    Sessions,
    Features,
    Sociograms,
    Reports,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
    Dot,
}

impl What {
    fn as_str(self) -> &'static str {
        match self {
            What::Sessions => "sessions",
            What::Features => "features",
            What::Sociograms => "sociograms",
            What::Reports => "reports",
        }
    }
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
            Format::Dot => "dot",
        }
    }
}

/// The supported `(what, format)` pairs.
pub const SUPPORTED_PAIRS: [(What, Format); 4] = [
    (What::Sessions, Format::Jsonl),
    (What::Features, Format::Csv),
    (What::Sociograms, Format::Dot),
    (What::Reports, Format::Csv),
];

fn feature_matrix_csv(matrix: &FeatureMatrix) -> String {
    let mut out = String::from("row_id");
    for c in &matrix.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (id, row) in matrix.row_ids.iter().zip(&matrix.rows) {
        out.push_str(id);
        for v in row {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

/// Export pipeline data to `dest` (a directory) in the requested format.
/// Returns the paths written. Unsupported `(what, format)` pairs are
/// rejected with a message listing the supported ones.
pub fn export_data(
    config: &PipelineConfig,
    what: What,
    format: Format,
    dest: &Path,
) -> Result<Vec<PathBuf>> {
    if !SUPPORTED_PAIRS.contains(&(what, format)) {
        let supported: Vec<String> = SUPPORTED_PAIRS
            .iter()
            .map(|(w, f)| format!("{}->{}", w.as_str(), f.as_str()))
            .collect();
        bail!(
            "unsupported export pair {}->{}; supported pairs: {}",
            what.as_str(),
            format.as_str(),
            supported.join(", ")
        );
    }
    let mut written = Vec::new();
    match what {
        What::Sessions => {
            let corpus = load_corpus(&config.paths.corpus_dir)?;
            let mut out = String::new();
            for session in &corpus {
                out.push_str(&serde_json::to_string(session)?);
                out.push('\n');
            }
            let path = dest.join("sessions.jsonl");
            atomic_write(&path, out.as_bytes())?;
            written.push(path);
        }
        What::Features => {
            let corpus = load_corpus(&config.paths.corpus_dir)?;
            if corpus.is_empty() {
                bail!("corpus contains no sessions");
            }
            let matrices = [
                ("speaking", speaking_feature_matrix(&corpus)),
                ("gaze", gaze_feature_matrix(&corpus)),
                (
                    "location",
                    location_feature_matrix(&corpus, config.thresholds.v_idle),
                ),
            ];
            for (name, matrix) in &matrices {
                let path = dest.join(format!("features_{name}.csv"));
                atomic_write(&path, feature_matrix_csv(matrix).as_bytes())?;
                written.push(path);
            }
        }
        What::Sociograms => {
            let corpus = load_corpus(&config.paths.corpus_dir)?;
            if corpus.is_empty() {
                bail!("corpus contains no sessions");
            }
            for session in &corpus {
                for (kind, graph) in session_graphs(session, config)? {
                    let path = dest.join(format!("{}_{kind}.dot", session.group_id));
                    atomic_write(&path, graph.to_dot().as_bytes())?;
                    written.push(path);
                }
            }
        }
        What::Reports => {
            let eval_path = config.paths.output_dir.join("reports/evaluation.json");
            if !eval_path.exists() {
                bail!(
                    "evaluation report {} not found; run the `evaluate` stage to produce it",
                    eval_path.display()
                );
            }
            let text = std::fs::read_to_string(&eval_path)?;
            let stamped: Stamped<EvaluationArtifacts> = Deserialize::deserialize(
                &mut serde_json::Deserializer::from_str(&text),
            )?;
            for (modality, report) in &stamped.payload.fidelity {
                let path = dest.join(format!("fidelity_{modality}.csv"));
                atomic_write(&path, report.to_csv_string().as_bytes())?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
