use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-convergence: {0}")]
    NonConvergence(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("out of chart: {0}")]
    OutOfChart(String),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("degenerate plane: {0}")]
    DegeneratePlane(String),
    #[error("solver divergence: {0}")]
    SolverDivergence(String),
    #[error("max iterations exceeded: {0}")]
    MaxIterationsExceeded(String),
    #[error("line search failure: {0}")]
    LineSearchFailure(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    /// Stable snake_case identifier for machine-readable output.
    pub fn code(&self) -> &'static str {
        match self {
            LabError::InvalidInput(_) => "invalid_input",
            LabError::NonConvergence(_) => "non_convergence",
            LabError::BudgetExceeded(_) => "budget_exceeded",
            LabError::DegenerateMetric(_) => "degenerate_metric",
            LabError::OutOfChart(_) => "out_of_chart",
            LabError::RankDeficient(_) => "rank_deficient",
            LabError::DegeneratePlane(_) => "degenerate_plane",
            LabError::SolverDivergence(_) => "solver_divergence",
            LabError::MaxIterationsExceeded(_) => "max_iterations_exceeded",
            LabError::LineSearchFailure(_) => "line_search_failure",
        }
    }
}
