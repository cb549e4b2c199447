//! Structured datasets whose volume is fixed by construction, checked
//! against the product identity of the engine's own metric outputs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, DatasetManifest, DurationMode, FieldDef, FieldKind, Record, Schema, TimeQuantity, Value};
use crate::metrics::MetricsEngine;
use crate::model::MetricId;
use crate::rng::Stream;

/// Exact `num / den` with `den > 0` and `gcd(num, den) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    pub num: i128,
    pub den: i128,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Rational {
    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1) * den.signum();
        Rational {
            num: num / g,
            den: den / g,
        }
    }

    pub fn int(v: i128) -> Self {
        Rational { num: v, den: 1 }
    }

    /// Best rational approximation with `den <= max_den`, accepted only when
    /// it lies within `1e-9` relative of `x`.
    pub fn recover(x: f64, max_den: i128) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let (mut h0, mut h1, mut k0, mut k1) = (0i128, 1i128, 1i128, 0i128);
        let mut rest = x;
        for _ in 0..64 {
            let a = rest.floor();
            if a.abs() > 1e15 {
                break;
            }
            let a = a as i128;
            let (h2, k2) = (a * h1 + h0, a * k1 + k0);
            if k2 > max_den {
                break;
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            let frac = rest - a as f64;
            if (h1 as f64 / k1 as f64 - x).abs() <= 1e-9 * x.abs().max(1.0) || frac == 0.0 {
                break;
            }
            rest = 1.0 / frac;
        }
        if k1 == 0 {
            return None;
        }
        let r = Rational::new(h1, k1);
        ((r.to_f64() - x).abs() <= 1e-9 * x.abs().max(1.0)).then_some(r)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }
}

impl std::ops::Mul for Rational {
    type Output = Rational;

    fn mul(self, o: Rational) -> Rational {
        Rational::new(self.num * o.num, self.den * o.den)
    }
}

impl std::ops::Div for Rational {
    type Output = Rational;

    fn div(self, o: Rational) -> Rational {
        assert!(o.num != 0, "division by zero");
        Rational::new(self.num * o.den, self.den * o.num)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eq1Config {
    pub scope: u32,
    pub variety: u32,
    pub duration_ticks: u32,
    /// In `(0, 1]`; must be a fraction `p/q` with `q <= 1000`.
    pub sampling_rate: f64,
    /// Must be `1/m` for a positive integer `m` (cells per scope value).
    pub granularity: f64,
    pub k_cells: u32,
}

impl Eq1Config {
    pub fn new(scope: u32, variety: u32, duration_ticks: u32, sampling_rate: f64, granularity: f64, k_cells: u32) -> Self {
        Eq1Config {
            scope,
            variety,
            duration_ticks,
            sampling_rate,
            granularity,
            k_cells,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eq1Outcome {
    pub config: Eq1Config,
    pub expected_volume: u64,
    pub volume: u64,
    pub scope: f64,
    pub variety: f64,
    pub duration: f64,
    pub sampling_rate: f64,
    pub granularity: f64,
    /// `k * scope * variety * duration * sampling_rate / granularity` over the
    /// rationals recovered from the engine outputs.
    pub identity: Option<Rational>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Seconds per internal time step of the generator.
const STEP: i64 = 60;
const MAX_RECORDS: u64 = 5_000_000;

struct Plan {
    cells: u32,
    rate: Rational,
    instants: u32,
}

fn plan(c: &Eq1Config) -> Result<Plan> {
    let bad = |msg: String| Err(Error::NonIntegralVolume(msg));
    if c.scope == 0 || c.variety == 0 || c.duration_ticks == 0 || c.k_cells == 0 {
        return Err(Error::invalid("scope, variety, duration and k must be positive"));
    }
    if !(c.sampling_rate > 0.0 && c.sampling_rate <= 1.0) {
        return Err(Error::invalid(format!(
            "sampling rate {} must lie in (0, 1]",
            c.sampling_rate
        )));
    }
    if !(c.granularity > 0.0) {
        return Err(Error::invalid(format!("granularity {} must be positive", c.granularity)));
    }
    let Some(rate) = Rational::recover(c.sampling_rate, 1000) else {
        return bad(format!(
            "sampling rate {} is not a fraction with denominator <= 1000",
            c.sampling_rate
        ));
    };
    let cells = match Rational::recover(1.0 / c.granularity, 1) {
        Some(r) if r.is_integer() && r.num >= 1 && r.num <= i128::from(u32::MAX) => r.num as u32,
        _ => return bad(format!("1/granularity = {} is not a positive integer", 1.0 / c.granularity)),
    };
    let instants = rate * Rational::int(i128::from(c.duration_ticks));
    if !instants.is_integer() {
        return bad(format!("sampling_rate * duration = {instants} is not an integer"));
    }
    if instants.num < 2 && rate != Rational::int(1) {
        return bad("a sampling rate below 1 needs at least two observation instants".into());
    }
    Ok(Plan {
        cells,
        rate,
        instants: instants.num as u32,
    })
}

/// Records and manifest realising `config`: one record per scope value,
/// cell, variety type, occupied instant and repetition.
pub fn eq1_dataset(config: &Eq1Config) -> Result<(DatasetManifest, Vec<Record>)> {
    let p = plan(config)?;
    let total = u64::from(config.scope)
        * u64::from(p.cells)
        * u64::from(config.variety)
        * u64::from(p.instants)
        * u64::from(config.k_cells);
    if total > MAX_RECORDS {
        return Err(Error::invalid(format!("configuration needs {total} records")));
    }
    let tick = p.rate.num as i64 * STEP;
    let step = p.rate.den as i64 * STEP;
    let schema = Schema::new(vec![
        FieldDef::new("id", FieldKind::Text),
        FieldDef::new("scope", FieldKind::Text),
        FieldDef::new("kind", FieldKind::Text),
        FieldDef::new("cell", FieldKind::Integer),
        FieldDef::new("t", FieldKind::Timestamp),
        FieldDef::new("g", FieldKind::Real),
    ]);
    let mut m = DatasetManifest::new(schema, "id", TimeQuantity::seconds(tick as f64));
    m.scope_field = Some("scope".into());
    m.variety_field = Some("kind".into());
    m.granularity_field = Some("g".into());
    m.event_time_field = Some("t".into());
    m.nominal_sampling_interval = Some(TimeQuantity::seconds(tick as f64));
    m.duration_mode = DurationMode::BucketUnion {
        bucket_size: TimeQuantity::seconds(step as f64),
    };
    let g = 1.0 / f64::from(p.cells);
    let mut records = Vec::with_capacity(total as usize);
    for s in 0..config.scope {
        for cell in 0..p.cells {
            for v in 0..config.variety {
                for j in 0..p.instants {
                    for rep in 0..config.k_cells {
                        records.push(Record::new(vec![
                            Value::Text(format!("s{s}-c{cell}-v{v}-j{j}-r{rep}")),
                            Value::Text(format!("s{s}")),
                            Value::Text(format!("v{v}")),
                            Value::Integer(i64::from(cell)),
                            Value::Timestamp(i64::from(j) * step),
                            Value::Real(g),
                        ]));
                    }
                }
            }
        }
    }
    Ok((m, records))
}

/// Generates the dataset for `config`, runs the metrics engine on it and
/// checks that the measured volume equals the product identity evaluated on
/// the measured scope, variety, duration, sampling rate and granularity.
pub fn eq1_generate_and_check(config: &Eq1Config) -> Result<Eq1Outcome> {
    let p = plan(config)?;
    let (manifest, records) = eq1_dataset(config)?;
    let ds = Dataset::from_records(&manifest, records)?;
    let mv = MetricsEngine::new(&manifest)?.compute(&ds)?;
    let get = |m: MetricId| mv.get(m).unwrap_or(f64::NAN);
    let expected_volume = u64::from(config.scope)
        * u64::from(p.cells)
        * u64::from(config.variety)
        * u64::from(p.instants)
        * u64::from(config.k_cells);
    let volume = get(MetricId::Volume) as u64;
    let measured = [
        MetricId::Scope,
        MetricId::Variety,
        MetricId::Duration,
        MetricId::SamplingRate,
        MetricId::Granularity,
    ]
    .map(|m| Rational::recover(get(m), 1_000_000));
    let identity = match measured {
        [Some(s), Some(v), Some(d), Some(r), Some(g)] if g.num != 0 => {
            Some(Rational::int(i128::from(config.k_cells)) * s * v * d * r / g)
        }
        _ => None,
    };
    let pass = volume == expected_volume && identity == Some(Rational::int(i128::from(volume)));
    let detail = (!pass).then(|| match identity {
        Some(id) => format!("volume {volume}, identity {id}, expected {expected_volume}"),
        None => "a metric output is absent or not a small rational".to_owned(),
    });
    Ok(Eq1Outcome {
        config: *config,
        expected_volume,
        volume,
        scope: get(MetricId::Scope),
        variety: get(MetricId::Variety),
        duration: get(MetricId::Duration),
        sampling_rate: get(MetricId::SamplingRate),
        granularity: get(MetricId::Granularity),
        identity,
        pass,
        detail,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eq1Summary {
    pub seed: u64,
    pub total: usize,
    pub passed: usize,
    pub failures: Vec<Eq1Outcome>,
}

/// Checks `count` random valid configurations drawn from `seed`.
pub fn eq1_check_random(count: usize, seed: u64) -> Result<Eq1Summary> {
    let mut s = Stream::new(seed);
    let mut roll = |lo: u32, hi: u32| lo + s.below(u64::from(hi - lo + 1)) as u32;
    let mut failures = Vec::new();
    let mut passed = 0;
    for _ in 0..count {
        let q = roll(1, 4);
        let p = roll(1, q);
        let cfg = Eq1Config {
            scope: roll(1, 6),
            variety: roll(1, 6),
            duration_ticks: q * roll(2, 5),
            sampling_rate: f64::from(p) / f64::from(q),
            granularity: 1.0 / f64::from(roll(1, 4)),
            k_cells: roll(1, 3),
        };
        let out = eq1_generate_and_check(&cfg)?;
        if out.pass {
            passed += 1;
        } else {
            failures.push(out);
        }
    }
    Ok(Eq1Summary {
        seed,
        total: count,
        passed,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_product() {
        let out = eq1_generate_and_check(&Eq1Config::new(2, 3, 10, 1.0, 1.0, 1)).unwrap();
        assert!(out.pass, "{out:?}");
        assert_eq!(out.volume, 60);
        let out = eq1_generate_and_check(&Eq1Config::new(2, 3, 10, 0.5, 1.0, 1)).unwrap();
        assert!(out.pass, "{out:?}");
        assert_eq!(out.volume, 30);
    }

    #[test]
    fn rejects_unrepresentable() {
        let r = eq1_generate_and_check(&Eq1Config::new(2, 3, 5, 0.5, 1.0, 1));
        assert!(matches!(r, Err(Error::NonIntegralVolume(_))));
        let r = eq1_generate_and_check(&Eq1Config::new(2, 3, 10, 1.0, 0.3, 1));
        assert!(matches!(r, Err(Error::NonIntegralVolume(_))));
    }

    #[test]
    fn recover_rationals() {
        assert_eq!(Rational::recover(0.75, 100), Some(Rational::new(3, 4)));
        assert_eq!(Rational::recover(2.0 / 3.0, 100), Some(Rational::new(2, 3)));
        assert_eq!(Rational::recover(std::f64::consts::PI, 100), None);
    }
}
