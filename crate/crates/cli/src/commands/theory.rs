use std::time::Instant;

use anyhow::{Context, Result};
use gime_core::model::{Timing, SCHEMA_VERSION};
use gime_core::rng::Stream;
use gime_core::theory::{eq1_check_random, generate_sweep, verify_lemma, Eq1Summary, LemmaReport, SyntheticPoolSpec, ValueLaw};
use gime_core::MetricTypeClass;
use serde::Serialize;

use crate::args::{SweepArgs, VerifyArgs};
use crate::{emit, write_file, EXIT_FAILURE, EXIT_OK};

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    pass: bool,
    lemma: LemmaReport,
    eq1: Eq1Summary,
    timing: Timing,
}

pub fn verify(args: &VerifyArgs) -> Result<u8> {
    let start = Instant::now();
    let pool = SyntheticPoolSpec::new(
        args.n,
        ValueLaw::Uniform { lo: 0.0, hi: 1.0 },
        MetricTypeClass::MeanType,
        args.seed,
    );
    let lemma = verify_lemma(&pool, args.k, args.trials, args.tol)?;
    let eq1 = eq1_check_random(args.eq1_configs, args.seed)?;
    for c in lemma.classes.iter().filter(|c| !c.pass) {
        eprintln!(
            "lemma {}: empirical {} vs closed form {}, allowed deviation {}{}",
            c.type_class,
            c.empirical,
            c.closed_form,
            c.allowed,
            c.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
        );
    }
    for f in &eq1.failures {
        eprintln!(
            "volume identity: {:?}: {}",
            f.config,
            f.detail.as_deref().unwrap_or("mismatch")
        );
    }
    let pass = lemma.pass && eq1.passed == eq1.total;
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        pass,
        lemma,
        eq1,
        timing: Timing {
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    };
    emit(&report, args.out.as_deref())?;
    Ok(if pass { EXIT_OK } else { EXIT_FAILURE })
}

pub fn sweep(args: &SweepArgs) -> Result<u8> {
    let pool = SyntheticPoolSpec::new(args.n, ValueLaw::Uniform { lo: 0.0, hi: 1.0 }, args.class, args.seed).build()?;
    let mut set = generate_sweep(&pool, args.metric, args.class, args.surrogate, &args.levels, args.seed)?;
    if args.shuffle {
        let mut s = Stream::substream(args.seed, 1);
        let n = set.points.len();
        for i in (1..n).rev() {
            let j = s.below_usize(i + 1);
            let (a, b) = (set.points[i].performance, set.points[j].performance);
            set.points[i].performance = b;
            set.points[j].performance = a;
        }
    }
    match &args.out {
        Some(p) if !p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => {
            let mut buf = Vec::new();
            set.write_csv(&mut buf)?;
            write_file(p, &buf).with_context(|| format!("writing sweep {}", p.display()))?;
        }
        out => emit(&set, out.as_deref())?,
    }
    Ok(EXIT_OK)
}
