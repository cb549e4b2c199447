use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gime_core::ingest::{load_dataset, DataFormat, Dataset, DatasetManifest};
use gime_core::selector::{Mode, SelectionOptions, TargetVolume};
use gime_core::sensitivity::{derive_thresholds, ThresholdPolicy};
use gime_core::{compute_all, SensitivityProfile, ThresholdSpec};
use serde::{Deserialize, Serialize};

use crate::args::{RunArgs, Verbosity};

/// File form of a run. Relative paths resolve against the config's directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DataFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "SelectionConfig::is_empty")]
    pub selection: SelectionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verbosity: Option<Verbosity>,
}

/// Selection options with every field optional so flags can fill gaps.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_volume: Option<TargetVolume>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate_pool: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate_sample_size: Option<usize>,
}

impl SelectionConfig {
    fn is_empty(&self) -> bool {
        *self == SelectionConfig::default()
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading run config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).with_context(|| format!("parsing run config {}", path.display()))?;
        if let Some(v) = cfg.schema_version {
            if v != gime_core::model::SCHEMA_VERSION {
                bail!("run config {}: unsupported schema_version {v}", path.display());
            }
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.manifest,
            &mut cfg.data,
            &mut cfg.spec,
            &mut cfg.profile,
            &mut cfg.policy,
            &mut cfg.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Flags win over file values.
    pub fn merged(args: &RunArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let over = |slot: &mut Option<PathBuf>, flag: &Option<PathBuf>| {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        };
        over(&mut cfg.manifest, &args.manifest);
        over(&mut cfg.data, &args.data);
        over(&mut cfg.output_dir, &args.out);
        if args.spec.is_some() {
            cfg.spec.clone_from(&args.spec);
            cfg.profile = None;
            cfg.policy = None;
        }
        if args.profile.is_some() || args.policy.is_some() {
            cfg.spec = None;
            over(&mut cfg.profile, &args.profile);
            over(&mut cfg.policy, &args.policy);
        }
        cfg.format = args.format.or(cfg.format);
        cfg.verbosity = args.verbosity.or(cfg.verbosity);
        let sel = &mut cfg.selection;
        if let Some(n) = args.target {
            sel.target_volume = Some(TargetVolume::Count(n));
        }
        if let Some(f) = args.target_fraction {
            sel.target_volume = Some(TargetVolume::Fraction(f));
        }
        sel.seed = args.seed.or(sel.seed);
        sel.max_iters = args.max_iters.or(sel.max_iters);
        sel.mode = args.mode.map(Mode::from).or(sel.mode);
        if args.estimate_pool {
            sel.estimate_pool = Some(true);
        }
        sel.estimate_sample_size = args.estimate_sample_size.or(sel.estimate_sample_size);
        Ok(cfg)
    }
}

pub enum Thresholds {
    Spec(ThresholdSpec),
    Derived {
        profile: Box<SensitivityProfile>,
        policy: ThresholdPolicy,
    },
}

/// A run config with every input loaded.
pub struct Run {
    pub manifest: DatasetManifest,
    pub dataset: Dataset,
    pub spec: ThresholdSpec,
    pub options: SelectionOptions,
    pub output_dir: Option<PathBuf>,
    pub verbosity: Verbosity,
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    let p = p
        .as_deref()
        .with_context(|| format!("no {what} given (flag or run config)"))?;
    existing(p, what)
}

fn existing<'a>(p: &'a Path, what: &str) -> Result<&'a Path> {
    if !p.exists() {
        bail!("{what} {} does not exist", p.display());
    }
    Ok(p)
}

fn read(path: &Path, what: &str) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    existing(path, "manifest")?;
    DatasetManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))
}

pub fn load_data(path: &Path, format: Option<DataFormat>, manifest: &DatasetManifest) -> Result<Dataset> {
    existing(path, "data file")?;
    let format = match format.or_else(|| DataFormat::from_path(path)) {
        Some(f) => f,
        None => bail!("cannot infer the format of {}; pass --format", path.display()),
    };
    load_dataset(path, format, manifest).with_context(|| format!("loading data {}", path.display()))
}

impl RunConfig {
    pub fn thresholds(&self) -> Result<Thresholds> {
        match (&self.spec, &self.profile, &self.policy) {
            (Some(spec), None, None) => {
                let spec = existing(spec, "threshold spec")?;
                let t = ThresholdSpec::from_json(&read(spec, "threshold spec")?)
                    .with_context(|| format!("parsing threshold spec {}", spec.display()))?;
                Ok(Thresholds::Spec(t))
            }
            (None, Some(profile), Some(policy)) => {
                let profile = existing(profile, "sensitivity profile")?;
                let policy = existing(policy, "threshold policy")?;
                Ok(Thresholds::Derived {
                    profile: Box::new(
                        SensitivityProfile::from_json(&read(profile, "sensitivity profile")?)
                            .with_context(|| format!("parsing sensitivity profile {}", profile.display()))?,
                    ),
                    policy: ThresholdPolicy::from_json(&read(policy, "threshold policy")?)
                        .with_context(|| format!("parsing threshold policy {}", policy.display()))?,
                })
            }
            (None, None, None) => bail!("supply either a threshold spec or a profile and a policy"),
            (Some(_), _, _) => bail!("a threshold spec cannot be combined with a profile or policy"),
            _ => bail!("a sensitivity profile and a threshold policy must be given together"),
        }
    }

    pub fn resolve(&self) -> Result<Run> {
        let manifest = load_manifest(required(&self.manifest, "manifest")?)?;
        let dataset = load_data(required(&self.data, "data file")?, self.format, &manifest)?;
        let spec = match self.thresholds()? {
            Thresholds::Spec(s) => s,
            Thresholds::Derived { profile, policy } => {
                let pool = compute_all(&dataset, &manifest)?;
                derive_thresholds(&profile, &pool, &policy)?
            }
        };
        let sel = &self.selection;
        let target = sel
            .target_volume
            .unwrap_or_else(|| TargetVolume::from_spec(&spec, dataset.record_count()));
        let mut options = SelectionOptions::new(target, sel.seed.unwrap_or(0));
        if let Some(n) = sel.max_iters {
            options.max_iters = n;
        }
        if let Some(m) = sel.mode {
            options.mode = m;
        }
        if let Some(e) = sel.estimate_pool {
            options.estimate_pool = e;
        }
        if let Some(n) = sel.estimate_sample_size {
            options.estimate_sample_size = n;
        }
        Ok(Run {
            manifest,
            dataset,
            spec,
            options,
            output_dir: self.output_dir.clone(),
            verbosity: self.verbosity.unwrap_or_default(),
        })
    }
}
