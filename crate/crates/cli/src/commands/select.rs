use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use gime_core::ingest::DataFormat;
use gime_core::selector::gime_select;
use gime_core::{Error, Selection};

use crate::args::{SelectArgs, Verbosity};
use crate::config::{Run, RunConfig};
use crate::{json_bytes, write_file, EXIT_MAX_ITERS, EXIT_OK};

pub fn select(args: &SelectArgs) -> Result<u8> {
    let run = RunConfig::merged(&args.run)?.resolve()?;
    let out = run
        .output_dir
        .clone()
        .context("no output directory given (--out or output_dir)")?;
    let (selection, code) = match gime_select(&run.dataset, &run.manifest, &run.spec, &run.options) {
        Ok(s) => (s, EXIT_OK),
        Err(Error::MaxItersExceeded { iterations, best }) => {
            eprintln!("gime: no candidate passed within {iterations} iterations; writing the best candidate");
            (*best, EXIT_MAX_ITERS)
        }
        Err(e) => return Err(e.into()),
    };
    write_selection(&run, selection, &out)?;
    Ok(code)
}

/// Writes `subset_ids.txt`, `subset.<ext>`, `thresholds.json` and `report.json`.
pub(crate) fn write_selection(run: &Run, mut selection: Selection, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let ids = dir.join("subset_ids.txt");
    let mut w = BufWriter::new(std::fs::File::create(&ids).with_context(|| format!("creating {}", ids.display()))?);
    run.dataset.write_ids(&selection.handle, &mut w)?;
    w.flush().with_context(|| format!("writing {}", ids.display()))?;

    let ext = run.dataset.format().unwrap_or(DataFormat::Csv).extension();
    let subset = dir.join(format!("subset.{ext}"));
    let mut w = BufWriter::new(std::fs::File::create(&subset).with_context(|| format!("creating {}", subset.display()))?);
    run.dataset.write_subset(&selection.handle, &mut w)?;
    w.flush().with_context(|| format!("writing {}", subset.display()))?;

    write_file(&dir.join("thresholds.json"), &json_bytes(&run.spec)?)?;
    if run.verbosity == Verbosity::Summary {
        let its = &mut selection.report.iterations;
        its.drain(..its.len().saturating_sub(1));
    }
    write_file(&dir.join("report.json"), &json_bytes(&selection.report)?)
}
