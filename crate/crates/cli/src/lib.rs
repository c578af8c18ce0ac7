//! Pipeline behind the `fovnet` binary: ingestion, descriptor extraction,
//! invariance audits, dataset generation, training and evaluation.

pub mod checkpoint;
pub mod commands;
pub mod container;
pub mod descriptors;
pub mod error;
pub mod protocol;

pub use checkpoint::Checkpoint;
pub use container::DescriptorContainer;
pub use error::{CliError, EXIT_INPUT, EXIT_INTERNAL, EXIT_OK};
pub use protocol::{Experiment, LoadedDataset, RunConfig, RunOutcome, Variant};
