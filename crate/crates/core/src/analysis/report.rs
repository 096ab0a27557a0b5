use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::loo::{leave_one_out, LooConfig, LooModel, LooResult};
use super::metrics::{agreement, lexical_similarity};
use super::pipeline::{dimension_pipeline, DimensionReport, PipelineConfig};
use crate::error::{Error, Result};
use crate::mle_embed::{fit, FitConfig};
use crate::sign_matrix::{read_votes_str, MatrixStats, PartialSignMatrix};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct ReportConfig {
    pub pipeline: PipelineConfig,
    pub fit: FitConfig,
    pub loo: LooConfig,
    pub min_comments: usize,
    /// Embedding dimension cap when the estimate comes from the bound.
    pub max_embed_r: usize,
    pub embed: bool,
    pub run_loo: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            pipeline: PipelineConfig::default(),
            fit: FitConfig::default(),
            loo: LooConfig::default(),
            min_comments: 1,
            max_embed_r: 10,
            embed: true,
            run_loo: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSummary {
    pub r: usize,
    pub alpha: f64,
    pub final_objective: f64,
    pub epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternAccuracy {
    pub n_unique_patterns: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub discussion_id: String,
    pub n_comments: usize,
    pub n_voters: usize,
    pub stats: MatrixStats,
    pub dimension: DimensionReport,
    pub embedding: Option<EmbeddingSummary>,
    pub agreement: Option<f64>,
    pub lexical_similarity: Option<f64>,
    pub loo: Option<LooResult>,
    pub pattern_accuracy: Option<PatternAccuracy>,
}

/// Dimension, embedding, agreement, lexical similarity and leave-one-out
/// accuracy for one pruned discussion.
pub fn run_report(
    m: &PartialSignMatrix,
    discussion_id: &str,
    texts: Option<&[String]>,
    cfg: &ReportConfig,
) -> Result<Report> {
    let stats = m.stats();
    let dimension = dimension_pipeline(m, discussion_id, &cfg.pipeline)?;
    let r_embed = dimension.r_estimate.clamp(1, cfg.max_embed_r.max(1));

    let (embedding, agree) = if cfg.embed {
        let fit_cfg = FitConfig {
            r: r_embed,
            seed: cfg.pipeline.seed,
            ..cfg.fit.clone()
        };
        let out = fit(m, &fit_cfg)?;
        let agree = agreement(&out.embedding).ok();
        let summary = EmbeddingSummary {
            r: r_embed,
            alpha: out.embedding.alpha,
            final_objective: out.objective,
            epochs_run: out.epochs_run,
        };
        (Some(summary), agree)
    } else {
        (None, None)
    };

    let lexical = texts.and_then(|t| lexical_similarity(t).ok());

    let loo = if cfg.run_loo && m.n_observed() >= 2 {
        let loo_cfg = LooConfig {
            r: r_embed,
            seed: cfg.pipeline.seed,
            fit: cfg.fit.clone(),
            ..cfg.loo.clone()
        };
        Some(leave_one_out(m, LooModel::Pvm, &loo_cfg)?)
    } else {
        None
    };
    let pattern_accuracy = loo.filter(|l| l.n_evaluated > 0).map(|l| PatternAccuracy {
        n_unique_patterns: stats.n_unique_patterns,
        accuracy: l.accuracy,
    });

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        discussion_id: discussion_id.to_string(),
        n_comments: m.n_comments(),
        n_voters: m.n_voters(),
        stats,
        dimension,
        embedding,
        agreement: agree,
        lexical_similarity: lexical,
        loo,
        pattern_accuracy,
    })
}

/// Reads a vote file and prunes it. An empty result is a precondition error.
pub fn load_discussion(path: &Path, min_comments: usize) -> Result<PartialSignMatrix> {
    let text = fs::read_to_string(path)?;
    parse_discussion(&text, min_comments)
}

/// Parses votes (CSV or a JSON array) or a matrix document (a JSON object),
/// then prunes.
pub fn parse_discussion(text: &str, min_comments: usize) -> Result<PartialSignMatrix> {
    let m = if text.trim_start().starts_with('{') {
        PartialSignMatrix::from_json(text)?
    } else {
        PartialSignMatrix::from_vote_triplets(&read_votes_str(text)?)?
    };
    m.prune(min_comments)
        .into_option()
        .ok_or_else(|| Error::PrecondViolated("no votes left after pruning".into()))
}

/// Reads a `comment_id,text` CSV.
pub fn read_text_sidecar(path: &Path) -> Result<HashMap<String, String>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["comment_id", "text"] {
        return Err(Error::Parse(format!(
            "{}: expected header comment_id,text",
            path.display()
        )));
    }
    let mut out = HashMap::new();
    for record in reader.records() {
        let record = record?;
        out.insert(record[0].to_string(), record[1].to_string());
    }
    Ok(out)
}

/// Texts of the matrix's comments that appear in the sidecar, in row order.
pub fn texts_for(m: &PartialSignMatrix, sidecar: &HashMap<String, String>) -> Vec<String> {
    m.row_labels()
        .iter()
        .filter_map(|l| sidecar.get(l).cloned())
        .collect()
}

/// Full report for one vote file, with an optional text sidecar.
pub fn analyze_file(votes: &Path, text: Option<&Path>, cfg: &ReportConfig) -> Result<Report> {
    let m = load_discussion(votes, cfg.min_comments)?;
    let texts = text
        .map(read_text_sidecar)
        .transpose()?
        .map(|s| texts_for(&m, &s));
    run_report(&m, &discussion_id(votes), texts.as_deref(), cfg)
}

pub fn discussion_id(path: &Path) -> String {
    path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    )
}

/// Vote files in `dir` (`*.csv` or `*.json`, excluding `*.text.csv` and
/// `*.truth.json`), each paired with its `<stem>.text.csv` sidecar when
/// present. Sorted by path.
pub fn discover_batch(dir: &Path) -> Result<Vec<(PathBuf, Option<PathBuf>)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if name.ends_with(".text.csv")
            || name.ends_with(".truth.json")
            || !(name.ends_with(".csv") || name.ends_with(".json"))
        {
            continue;
        }
        let stem = discussion_id(&path);
        let sidecar = dir.join(format!("{stem}.text.csv"));
        out.push((path, sidecar.exists().then_some(sidecar)));
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn second_voting_pattern_csv_reports_two() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pattern.csv");
        let mut f = fs::File::create(&path).unwrap();
        writeln!(f, "comment_id,voter_id,vote").unwrap();
        for (i, row) in [[1, 1, 1], [1, -1, 1], [1, 1, 1]].iter().enumerate() {
            for (j, &s) in row.iter().enumerate() {
                writeln!(
                    f,
                    "c{},v{},{}",
                    i + 1,
                    j + 1,
                    if s > 0 { "up" } else { "down" }
                )
                .unwrap();
            }
        }
        drop(f);
        let report = analyze_file(&path, None, &ReportConfig::default()).unwrap();
        assert_eq!(report.dimension.r_estimate, 2);
        assert_eq!(report.discussion_id, "pattern");
        assert_eq!(report.schema_version, SCHEMA_VERSION);
        assert!(report.loo.is_some());
    }

    #[test]
    fn empty_file_is_a_precondition_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        fs::write(&path, "").unwrap();
        let err = analyze_file(&path, None, &ReportConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn conflicting_vote_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "comment_id,voter_id,vote\nc1,v1,up\nc1,v1,down\n").unwrap();
        let err = analyze_file(&path, None, &ReportConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let msg = err.to_string();
        assert!(msg.contains("c1") && msg.contains("v1"), "{msg}");
    }

    #[test]
    fn batch_pairs_sidecars() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.csv"), "").unwrap();
        fs::write(dir.path().join("a.csv"), "").unwrap();
        fs::write(dir.path().join("a.text.csv"), "").unwrap();
        fs::write(dir.path().join("notes.txt"), "").unwrap();
        fs::write(dir.path().join("a.truth.json"), "{}").unwrap();
        let found = discover_batch(dir.path()).unwrap();
        assert_eq!(found.len(), 2);
        assert_eq!(found[0].1, Some(dir.path().join("a.text.csv")));
        assert_eq!(found[1].1, None);
    }
}
