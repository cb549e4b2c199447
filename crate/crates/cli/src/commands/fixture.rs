use std::path::PathBuf;

use anyhow::Result;
use gime_core::fixtures;
use gime_core::selector::TargetVolume;

use crate::args::{FixtureArgs, FixtureKind};
use crate::config::{RunConfig, SelectionConfig};
use crate::{json_bytes, write_file, EXIT_OK};

/// Writes `pool.csv`, `manifest.json`, `profile.json`, `policy.json` and
/// `run.json`; the civil fixture also gets `thresholds.json` and a run
/// config using it.
pub fn fixture(args: &FixtureArgs) -> Result<u8> {
    let dir = &args.out;
    let (manifest, records, profile, policy) = match args.kind {
        FixtureKind::Civil => {
            let n = args.size.unwrap_or(10_000);
            (
                fixtures::civil_manifest(),
                fixtures::civil_records(n)?,
                fixtures::civil_profile(),
                fixtures::civil_policy(),
            )
        }
        FixtureKind::Weather => (
            fixtures::weather_manifest(),
            fixtures::weather_records(args.size.unwrap_or(360), args.seed)?,
            fixtures::weather_profile(),
            fixtures::weather_policy(),
        ),
        FixtureKind::Ctr => (
            fixtures::ctr_manifest(),
            fixtures::ctr_records(args.size.unwrap_or(20_000), args.seed)?,
            fixtures::ctr_profile(),
            fixtures::ctr_policy(),
        ),
    };
    let mut pool = Vec::new();
    fixtures::write_csv(&manifest, &records, &mut pool)?;
    write_file(&dir.join("pool.csv"), &pool)?;
    write_file(&dir.join("manifest.json"), &json_bytes(&manifest)?)?;
    write_file(&dir.join("profile.json"), &json_bytes(&profile)?)?;
    write_file(&dir.join("policy.json"), &json_bytes(&policy)?)?;

    let base = RunConfig {
        schema_version: Some(gime_core::model::SCHEMA_VERSION),
        manifest: Some(PathBuf::from("manifest.json")),
        data: Some(PathBuf::from("pool.csv")),
        selection: SelectionConfig {
            seed: Some(args.seed),
            ..SelectionConfig::default()
        },
        output_dir: Some(PathBuf::from("out")),
        ..RunConfig::default()
    };
    let derived = RunConfig {
        profile: Some(PathBuf::from("profile.json")),
        policy: Some(PathBuf::from("policy.json")),
        ..base.clone()
    };
    if args.kind == FixtureKind::Civil {
        let n = records.len();
        write_file(&dir.join("thresholds.json"), &json_bytes(&fixtures::civil_thresholds(n))?)?;
        let gated = RunConfig {
            spec: Some(PathBuf::from("thresholds.json")),
            selection: SelectionConfig {
                target_volume: Some(TargetVolume::Count((n * 3).div_ceil(5))),
                ..base.selection.clone()
            },
            ..base
        };
        write_file(&dir.join("run.json"), &json_bytes(&gated)?)?;
        write_file(&dir.join("run_derived.json"), &json_bytes(&derived)?)?;
    } else {
        write_file(&dir.join("run.json"), &json_bytes(&derived)?)?;
    }
    Ok(EXIT_OK)
}
