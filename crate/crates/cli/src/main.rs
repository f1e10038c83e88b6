mod args;
mod commands;
mod input;
mod output;
mod svg;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

/// Failures that end a run, with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input, invalid chain, I/O trouble: exit 1.
    Input(String),
    /// A hard check was violated: exit 2.
    Verification(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Verification(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<mixlab::Error> for CliError {
    fn from(e: mixlab::Error) -> Self {
        let name = format!("{e:?}");
        let variant = name.split(['(', ' ', '{']).next().unwrap_or("Error").to_string();
        CliError::Input(format!("{variant}: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::input("x").exit_code(), 1);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 2);
        let e: CliError = mixlab::Error::RowSumError { row: 0, sum: 0.99 }.into();
        assert!(matches!(&e, CliError::Input(m) if m.starts_with("RowSumError")));
    }
}
