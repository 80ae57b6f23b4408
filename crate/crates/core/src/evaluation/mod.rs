//! Metrics, trial statistics, cluster quality and the end-to-end evaluation run.

pub mod cluster;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod stats;

pub use cluster::{calinski_harabasz, cluster_quality, pca_2d, silhouette, ClusterQuality, PcaProjection};
pub use metrics::{error_triple, ErrorTriple, Metric};
pub use stats::{
    aggregate_trials, relative_error, significance_flag, MetricSummary, RelativeErrorEstimate, Significance,
    SignificanceTest, TrialSummary,
};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput, PreparedData, PreparedTarget};
pub use report::{
    pca_csv, save_pca_csv, CellReport, ClusterReport, ExperimentReport, FeatureSpace, PcaPoint, RelativeReport, Variant,
};
