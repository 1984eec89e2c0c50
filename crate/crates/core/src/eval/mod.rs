//! Cross-validated benchmarking, zero-shot transfer and diagnostics.

pub mod bench;
pub mod diagnostics;
pub mod folds;
pub mod metrics;
pub mod transfer;

pub use bench::{
    cell_seed, mean_macro_f1, run_benchmark, summarize, write_report_csv, write_sweep_csv, BenchResult, CellFailure,
    Classifier, ConstantClassifier, GnnClassifier, LogisticClassifier, MetricsRow, OracleClassifier,
    RandomClassifier, SummaryRow,
};
pub use diagnostics::{embedding_swap_diagnostic, hl_post_rate, neighbor_composition, retained_fraction, SwapOutcome};
pub use folds::{make_fold_plan, Fold, FoldPlan, DEFAULT_FRACTIONS};
pub use metrics::{macro_metrics, ClassMetrics, Metrics};
pub use transfer::{cross_platform_eval, TrainedModel};
