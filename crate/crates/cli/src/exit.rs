//! Maps failures onto process exit codes.

use epps_core::Error;

pub const OK: u8 = 0;
pub const USAGE: u8 = 2;
pub const DATA: u8 = 3;
pub const NUMERIC: u8 = 4;

/// A bad flag combination or configuration document.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

fn core_code(e: &Error) -> u8 {
    match e {
        Error::Parameter { .. } | Error::Shape(_) => USAGE,
        Error::Input { .. }
        | Error::Io(_)
        | Error::EmptyInput(_)
        | Error::InsufficientData(_)
        | Error::Range(_)
        | Error::NoOverlap => DATA,
        Error::Numeric(_)
        | Error::Stability { .. }
        | Error::DegenerateVariance(_)
        | Error::Saturation(_)
        | Error::Scaling(_)
        | Error::Domain(_) => NUMERIC,
    }
}

pub fn code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<toml::de::Error>() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return core_code(e);
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return DATA;
        }
    }
    DATA
}
