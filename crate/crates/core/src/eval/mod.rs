//! Classification metrics, ratio-mixture experiments and scatter plots.

mod experiment;
mod metrics;
mod plot;

pub use experiment::{
    calibrate_theta, calibrate_theta_weighted, default_theta_grid, gold_label, mix_weights, predict_documents, run_experiment,
    run_experiment_with_models, standard_mixes, DocumentScores, ExperimentCell, ExperimentData,
    ExperimentReport, ExperimentSpec, ReconstructionRow, ThetaCalibration, REFERENCE_NOTE,
};
pub use metrics::{
    classify_document, precision_recall_f1, ClassMetrics, ConfusionMatrix, MetricsReport,
    NONE_LABEL,
};
pub use plot::{emit_plot, render_plot};
