use std::fmt;
use std::process::ExitCode;

use hppsim_core::causal::CausalError;
use hppsim_core::hadamard::HadamardError;
use hppsim_core::hpp::HppError;
use hppsim_core::switch::SwitchError;

/// A command failure carrying its process exit code.
#[derive(Debug)]
pub enum Failure {
    Other(String),
    PromiseViolated(String),
    Unsatisfiable(String),
    NonDeterministic(String),
}

impl Failure {
    pub fn other(msg: impl Into<String>) -> Self {
        Failure::Other(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Other(_) => 1,
            Failure::PromiseViolated(_) => 2,
            Failure::Unsatisfiable(_) => 3,
            Failure::NonDeterministic(_) => 4,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Other(m) => write!(f, "error: {m}"),
            Failure::PromiseViolated(m) => write!(f, "promise violated: {m}"),
            Failure::Unsatisfiable(m) => write!(f, "unsatisfiable: {m}"),
            Failure::NonDeterministic(m) => write!(f, "non-deterministic measurement: {m}"),
        }
    }
}

impl From<HppError> for Failure {
    fn from(e: HppError) -> Self {
        match e {
            HppError::PromiseViolated(m) => Failure::PromiseViolated(m),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<SwitchError> for Failure {
    fn from(e: SwitchError) -> Self {
        match e {
            SwitchError::Hpp(h) => h.into(),
            SwitchError::ReadoutAmbiguous { .. } => Failure::NonDeterministic(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<CausalError> for Failure {
    fn from(e: CausalError) -> Self {
        match e {
            CausalError::Hpp(h) => h.into(),
            CausalError::Switch(s) => s.into(),
            CausalError::NonDeterministicMeasurement { .. } => Failure::NonDeterministic(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<HadamardError> for Failure {
    fn from(e: HadamardError) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(format!("json: {e}"))
    }
}
