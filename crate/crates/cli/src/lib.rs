//! Library side of the `calabi` command: configuration parsing, file formats
//! and the command implementations. The binary only parses arguments and maps
//! errors to exit codes.

pub mod analyze;
pub mod config;
pub mod error;
pub mod plot;
pub mod run;
pub mod snapshot;

pub use config::{parse_config, InitialCondition, RunConfig};
pub use error::{Error, Result};
pub use snapshot::{PotentialKind, SnapshotFile};
