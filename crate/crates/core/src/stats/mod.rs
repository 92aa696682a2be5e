//! Regression, ANOVA and multiple comparisons.

pub mod anova;
pub mod design;
pub mod dist;
pub mod hsd;
pub mod linalg;
pub mod ols;
pub mod residuals;

use thiserror::Error;

pub use anova::{anova, anova_partial_f, format_p, AnovaRow, AnovaTable};
pub use design::{build_design, DesignMatrix, Factor};
pub use dist::{f_sf, ptukey, q_critical};
pub use hsd::{greedy_groups, one_way_mse, tukey_kramer, HsdResult, PairTest};
pub use linalg::Matrix;
pub use ols::{fit_ols, OlsFit};
pub use residuals::{residual_plot_data, ResidualSummary};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("design matrix is rank deficient; dependent columns: {dependent:?}")]
    Rank { dependent: Vec<usize> },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("argument out of range: {0}")]
    Domain(String),
    #[error("missing covariate: {0}")]
    MissingCovariate(String),
    #[error("numerical routine did not converge: {0}")]
    NonConvergence(String),
}
