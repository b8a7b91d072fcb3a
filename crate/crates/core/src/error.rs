use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("target margin violated: {0}")]
    Margin(String),

    #[error("map node `{node}` is not invertible at ({r}, {s})")]
    NotInvertible { node: String, r: f64, s: f64 },

    #[error("point ({r}, {s}) lies within {tol} of the exceptional set")]
    NearSingular { r: f64, s: f64, tol: f64 },

    #[error("invalid bump: displacement {dist} is not below radius {radius}")]
    InvalidBump { dist: f64, radius: f64 },

    #[error("steering stage {stage}: no candidate in family {family} within {bound} after scanning {scanned} points")]
    EnumerationDepth {
        stage: usize,
        family: usize,
        bound: f64,
        scanned: usize,
    },

    #[error("steering stage {stage}: degenerate radius (point collides with a previous target)")]
    Degenerate { stage: usize },

    #[error("mesh resolution error: {msg} (try mesh_h <= {suggested})")]
    Resolution { msg: String, suggested: f64 },

    #[error("unsupported hanging-set structure: {0}")]
    UnsupportedStructure(String),

    #[error("invalid hutch family: hutches {0} and {1} intersect")]
    InvalidFamily(usize, usize),

    #[error("cable placement failed: {0}")]
    Placement(String),

    #[error("internal mesh inconsistency: {0}")]
    MeshLookup(String),

    #[error("step {step}: {source}")]
    Step {
        step: i64,
        #[source]
        source: Box<Error>,
    },

    #[error("pipeline stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn at_step(self, step: i64) -> Error {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                step,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
