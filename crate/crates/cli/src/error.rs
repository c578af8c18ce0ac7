use fovnet_core::brep::GeomError;
use fovnet_core::brj::BrjError;
use fovnet_core::dataset::DatasetError;
use fovnet_core::step::StepError;
use fovnet_nn::NnError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("UnsupportedEntity: {0}")]
    UnsupportedEntity(String),
    #[error("StepError: {0}")]
    Step(String),
    #[error("GeometryError: {0}")]
    Geometry(String),
    #[error("BrjError: {0}")]
    Brj(String),
    #[error("DatasetError: {0}")]
    Dataset(String),
    #[error("BadResolution: {0}")]
    BadResolution(String),
    #[error("BadArgument: {0}")]
    BadArgument(String),
    #[error("ContainerError: {0}")]
    Container(String),
    #[error("CheckpointMismatch: {0}")]
    CheckpointMismatch(String),
    #[error("EmptySplit: {0}")]
    EmptySplit(String),
    #[error("InvarianceViolation: {0}")]
    InvarianceViolation(String),
    #[error("TrainingError: {0}")]
    Training(String),
    #[error("IoError: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Training(_) | CliError::InvarianceViolation(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        }
    }

    /// The message on a single line.
    pub fn one_line(&self) -> String {
        self.to_string().split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

impl From<StepError> for CliError {
    fn from(e: StepError) -> Self {
        match e {
            StepError::UnsupportedEntity(name) => CliError::UnsupportedEntity(name),
            StepError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Step(other.to_string()),
        }
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::Geometry(e.to_string())
    }
}

impl From<BrjError> for CliError {
    fn from(e: BrjError) -> Self {
        CliError::Brj(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Dataset(e.to_string())
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::EmptySplit(s) => CliError::EmptySplit(s),
            other => CliError::Training(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
