mod compare;
mod fixture;
mod metrics;
mod select;
mod theory;

use anyhow::{bail, Context, Result};
use gime_core::sensitivity::{fit_sensitivity, SweepSet};

use crate::args::{SensitivityArgs, ValidateArgs};
use crate::{emit, EXIT_FAILURE, EXIT_OK};

pub use compare::compare;
pub use fixture::fixture;
pub use metrics::metrics;
pub use select::select;
pub use theory::{sweep, verify};

pub fn sensitivity(args: &SensitivityArgs) -> Result<u8> {
    if !args.sweep.exists() {
        bail!("sweep file {} does not exist", args.sweep.display());
    }
    let sweeps =
        SweepSet::load(&args.sweep, args.direction.into()).with_context(|| format!("loading sweep {}", args.sweep.display()))?;
    let fit = fit_sensitivity(&sweeps, args.rho_high, args.rho_mod)?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    emit(&fit.profile, args.out.as_deref())?;
    Ok(EXIT_OK)
}

pub fn validate(args: &ValidateArgs) -> Result<u8> {
    let text = std::fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let doc: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.file.display()))?;
    let errors = crate::schema::check_named(args.schema, &doc);
    if errors.is_empty() {
        println!("{}: ok", args.file.display());
        return Ok(EXIT_OK);
    }
    for e in &errors {
        eprintln!("{}: {e}", args.file.display());
    }
    Ok(EXIT_FAILURE)
}
