//! Model artifacts and run reports.

mod artifact;
mod report;

pub use artifact::{
    load_model, read_artifact, save_model, write_artifact, ArrayMeta, ModelArtifact, NamedArray,
    FORMAT_VERSION, MAGIC,
};
pub use report::{
    round_significant, to_report_json, write_report, ArimaxSummary, CorrelationAudit,
    EnsembleEntry, FilterAudit, MemberEntry, ModelEntry, PreprocessAudit, RunReport, SplitMetrics,
    StackedEntry, SweepReport, SweepRow, WindowAudit,
};
