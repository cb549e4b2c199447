//! Library side of the `gime` binary: argument types, run configs, schema
//! checks and one function per subcommand.

pub mod args;
mod commands;
pub mod config;
pub mod schema;

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use args::{Cli, Command};

pub use config::RunConfig;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_MAX_ITERS: u8 = 3;

/// Runs one invocation and returns its exit code. Errors map through
/// [`exit_code`].
pub fn run(cli: Cli) -> Result<u8> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .context("building the worker pool")?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Metrics(a) => commands::metrics(&a),
        Command::Select(a) => commands::select(&a),
        Command::Sensitivity(a) => commands::sensitivity(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Fixture(a) => commands::fixture(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Validate(a) => commands::validate(&a),
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    let core = err.chain().find_map(|e| e.downcast_ref::<gime_core::Error>());
    match core {
        Some(gime_core::Error::Infeasible { .. }) => EXIT_INFEASIBLE,
        Some(gime_core::Error::MaxItersExceeded { .. }) => EXIT_MAX_ITERS,
        _ => EXIT_FAILURE,
    }
}

/// Pretty JSON with a trailing newline; struct fields keep declaration order.
pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub(crate) fn emit<T: Serialize + ?Sized>(value: &T, out: Option<&Path>) -> Result<()> {
    let bytes = json_bytes(value)?;
    match out {
        Some(p) => write_file(p, &bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes).context("writing to stdout")?;
            stdout.flush().context("writing to stdout")
        }
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
