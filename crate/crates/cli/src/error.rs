use std::fmt;

use kbpot_core::evaluation::EvalError;
use kbpot_core::pdbio::PdbError;
use kbpot_core::potential::{ParamsFormatError, PotentialError};
use kbpot_core::synthgen::SynthError;
use kbpot_core::training::TrainingError;
use serde::Serialize;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Usage,
    Data,
    Solver,
}

/// A failed command: category plus message, reported as one JSON object on
/// stderr.
#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { kind: Kind::Usage, message: msg.into() }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError { kind: Kind::Data, message: msg.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Usage => EXIT_USAGE,
            Kind::Data => EXIT_DATA,
            Kind::Solver => EXIT_SOLVER,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: Kind,
            message: &'a str,
            exit_code: i32,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Wrapper {
            error: Body { kind: self.kind, message: &self.message, exit_code: self.exit_code() },
        })
        .expect("error record serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<PdbError> for CliError {
    fn from(e: PdbError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<ParamsFormatError> for CliError {
    fn from(e: ParamsFormatError) -> Self {
        CliError::data(format!("params file: {e}"))
    }
}

impl From<PotentialError> for CliError {
    fn from(e: PotentialError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(_) => CliError::usage(e.to_string()),
            SynthError::Trace(_) => CliError::data(e.to_string()),
        }
    }
}

impl From<TrainingError> for CliError {
    fn from(e: TrainingError) -> Self {
        let kind = match e {
            TrainingError::InvalidConfig(_) => Kind::Usage,
            TrainingError::NoEnsembles | TrainingError::NoConstraints | TrainingError::Geometry(_) => Kind::Data,
            TrainingError::Lp(_) | TrainingError::SolverInfeasible { .. } | TrainingError::SolverFailed { .. } => {
                Kind::Solver
            }
        };
        CliError { kind, message: e.to_string() }
    }
}
