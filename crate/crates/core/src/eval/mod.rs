//! Classification metrics, ROC AUC, cross-validation and report tables.

mod auc;
mod cv;
mod metrics;
mod report;

pub use auc::roc_auc;
pub use cv::{cross_validate, FoldReport, MetricsReport, PipelineSpec};
pub use metrics::{
    classification_metrics, ClassMetrics, ClassificationMetrics, Confusion, DEFAULT_THRESHOLD,
};
pub use report::{read_reports, render_report, ReportFormat, CSV_COLUMNS};
