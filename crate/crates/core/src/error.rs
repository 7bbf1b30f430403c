use thiserror::Error;

/// Pipeline stage used to attribute failures raised inside [`crate::adclust`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Grid,
    Thresholds,
    Weighting,
    Merge,
    Walls,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Grid => "grid",
            Stage::Thresholds => "thresholds",
            Stage::Weighting => "weighting",
            Stage::Merge => "merge",
            Stage::Walls => "walls",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient labels: need at least one normal and one abnormal labeled point")]
    InsufficientLabels,
    #[error("degenerate density geometry: every neighborhood is a singleton")]
    DegenerateGeometry,
    #[error("dataset too small for density threshold ({0} points, need at least 3)")]
    DatasetTooSmall(usize),
    #[error("degenerate region: {0} points, need at least 2")]
    DegenerateRegion(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("grid budget exceeded ({cells} evaluations > {budget}); increase step")]
    GridBudgetExceeded { cells: u64, budget: u64 },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage attribution stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for problems with the caller's input, as opposed to numeric
    /// degeneracies discovered while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidInput(_)
                | Error::InsufficientLabels
                | Error::DatasetTooSmall(_)
                | Error::Domain(_)
                | Error::UnknownPreset(_)
                | Error::GridBudgetExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
