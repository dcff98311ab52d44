use std::fmt;

use rlmix_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Io,
    Numerical,
    Horizon,
    Infeasible,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Config | Kind::Io => 2,
            Kind::Numerical => 3,
            Kind::Horizon | Kind::Infeasible => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Kind::Config => "config",
            Kind::Io => "io",
            Kind::Numerical => "numerical",
            Kind::Horizon => "horizon",
            Kind::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        Self { kind: Kind::Config, message }
    }

    pub fn io(message: String) -> Self {
        Self { kind: Kind::Io, message }
    }

    /// Single line `error[kind]: message`.
    pub fn line(&self) -> String {
        let flat: Vec<&str> = self.message.split_whitespace().collect();
        format!("error[{}]: {}", self.kind.label(), flat.join(" "))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Parameter(_)
            | Error::SingularParameter(_)
            | Error::Precondition(_)
            | Error::DegenerateInput(_)
            | Error::NoDarkState(_) => Kind::Config,
            Error::Solver { .. } | Error::Conditioning { .. } | Error::Stiffness { .. } | Error::AtExceptionalPoint { .. } => {
                Kind::Numerical
            }
            Error::HorizonTooShort { .. } => Kind::Horizon,
            Error::InfeasibleRecipe(_) => Kind::Infeasible,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}
