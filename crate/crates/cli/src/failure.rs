//! Mapping errors to process exit codes.

use std::fmt;

use vdm_core::VdmError;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// A bad combination of flags or config values detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Invalid or ill-formed input is a usage error; anything else (I/O,
/// undefined metrics) is a runtime failure.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<VdmError>() {
            return match e {
                VdmError::InvalidArgument(_)
                | VdmError::Parse { .. }
                | VdmError::Csv(_)
                | VdmError::Json(_) => EXIT_USAGE,
                VdmError::Io(_) | VdmError::UndefinedMetric(_) => EXIT_RUNTIME,
            };
        }
    }
    EXIT_RUNTIME
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn classifies_through_context() {
        let e: anyhow::Result<()> =
            Err(VdmError::InvalidArgument("k".into())).context("matrix.csv");
        assert_eq!(exit_code(&e.unwrap_err()), EXIT_USAGE);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        let e: anyhow::Result<()> = Err(io).context("reading");
        assert_eq!(exit_code(&e.unwrap_err()), EXIT_RUNTIME);
        assert_eq!(exit_code(&usage("bad flag")), EXIT_USAGE);
    }
}
