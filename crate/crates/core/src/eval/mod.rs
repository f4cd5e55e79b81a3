//! Reconstruction metrics and systemic-risk ranking.

mod centrality;
mod metrics;
mod procrustes;

pub use centrality::{betweenness, risk_rank, RiskRow, RiskTable};
pub use metrics::{auc, auc_from_labels, rmse, MetricsReport, RmseKind};
pub use procrustes::{procrustes_align, procrustes_error};
