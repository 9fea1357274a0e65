//! IO, file formats and command implementations for the `locmix` CLI; all
//! numerics live in `locmix-core`.

pub mod commands;
pub mod config;
pub mod io;

pub use locmix_core as core;

/// Failure with its process exit code: 2 for usage/config problems, 3 for
/// numerical failures.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        CliError { code: 2, message }
    }

    pub fn numeric(message: String) -> Self {
        CliError { code: 3, message }
    }

    /// Validation-style core errors are usage problems; solver and
    /// quadrature breakdowns are numerical failures.
    pub fn from_core(e: locmix_core::Error) -> Self {
        use locmix_core::Error as E;
        let code = match e {
            E::IterationLimit
            | E::FitFailure
            | E::Quadrature { .. }
            | E::OutsideHull
            | E::Inconclusive
            | E::LpInternal(_)
            | E::NotInterior => 3,
            _ => 2,
        };
        CliError {
            code,
            message: format!("{e}"),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}
