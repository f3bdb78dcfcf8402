//! Command-line front end for `hyptor-core`: certificates for the D4 action,
//! their verification, the classification sweep, and Hodge numbers of the
//! quotient.

pub mod certificate;
pub mod commands;
pub mod error;
pub mod invariants;
pub mod verify;

pub use certificate::{build_certificate, Certificate, Parameters, SCHEMA_VERSION};
pub use commands::run;
pub use error::CliError;
pub use hyptor_core::{Error as CoreError, Result as CoreResult};
pub use invariants::{hodge_numbers, InvariantReport};
pub use verify::{verify_certificate, VerifyReport};
