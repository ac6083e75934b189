//! Command implementations behind the `smba` binary.

pub mod config;
pub mod generate;
pub mod rates;
pub mod solve;
pub mod svm;

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

/// Exit status for failures inside the numerical routines.
pub const EXIT_NUMERICAL: u8 = 1;
/// Exit status for bad flags, configs, files and data.
pub const EXIT_USAGE: u8 = 2;

/// Maps an error to the process exit status: numerical breakdowns give 1,
/// everything else 2.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<smba::Error>() {
            return match e {
                smba::Error::NonFinite(_)
                | smba::Error::NonPositiveLipschitz(_)
                | smba::Error::DegenerateConstraint { .. }
                | smba::Error::EmptyBall(_)
                | smba::Error::NotNonemptyBall(_) => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Thread pool sized by `SMBA_THREADS`, or rayon's default when unset.
pub fn thread_pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("SMBA_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("SMBA_THREADS must be a positive integer, got '{raw}'"))?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}
