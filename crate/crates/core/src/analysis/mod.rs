//! End-to-end pipeline, evaluation and discussion metrics.

pub mod loo;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod synthetic;

pub use loo::{leave_one_out, LooConfig, LooModel, LooResult};
pub use metrics::{agreement, lexical_similarity, tokenize};
pub use pipeline::{
    dimension_pipeline, Artifact, DimensionMethod, DimensionReport, PipelineConfig,
};
pub use report::{
    analyze_file, discover_batch, discussion_id, load_discussion, parse_discussion,
    read_text_sidecar, run_report, texts_for, EmbeddingSummary, PatternAccuracy, Report,
    ReportConfig, SCHEMA_VERSION,
};
pub use synthetic::{
    generate_from_embedding, generate_synthetic, synthetic_comment_texts, SyntheticGroundTruth,
    SyntheticParams, VotingModel,
};
