//! Monte Carlo and exact checks of the subset-expectation formulas, the
//! optimal-versus-random dominance property and the volume identity, on
//! synthetic valued pools.

mod eq1;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eq1::{eq1_check_random, eq1_generate_and_check, Eq1Config, Eq1Outcome, Eq1Summary, Rational};

use crate::error::{Error, Result};
use crate::model::{Merit, MetricId, MetricTypeClass, MetricVector};
use crate::rng::{Stream, SubsetSampler};
use crate::sensitivity::{SweepPoint, SweepSet};

/// How element values are laid out between `lo` and `hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueLaw {
    /// Continuous uniform, drawn stratified: element `i` is
    /// `lo + (i + U_i) / N * (hi - lo)`, then the pool is shuffled.
    Uniform { lo: f64, hi: f64 },
    /// `lo, lo + h, .., hi` with `h = (hi - lo) / (N - 1)`, in order.
    EquallySpaced { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPoolSpec {
    pub n: usize,
    pub law: ValueLaw,
    pub type_class: MetricTypeClass,
    pub seed: u64,
}

impl SyntheticPoolSpec {
    pub fn new(n: usize, law: ValueLaw, type_class: MetricTypeClass, seed: u64) -> Self {
        SyntheticPoolSpec {
            n,
            law,
            type_class,
            seed,
        }
    }

    pub fn build(&self) -> Result<ValuedPool> {
        if self.n < 2 {
            return Err(Error::invalid("synthetic pool needs at least 2 elements"));
        }
        let (lo, hi) = match self.law {
            ValueLaw::Uniform { lo, hi } | ValueLaw::EquallySpaced { lo, hi } => (lo, hi),
        };
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!(
                "value bounds [{lo}, {hi}] must be finite with lo < hi"
            )));
        }
        let n = self.n;
        let values = match self.law {
            ValueLaw::EquallySpaced { .. } => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
            ValueLaw::Uniform { .. } => {
                let mut s = Stream::new(self.seed);
                let mut v: Vec<f64> = (0..n)
                    .map(|i| lo + (i as f64 + s.unit_f64()) / n as f64 * (hi - lo))
                    .collect();
                for i in (1..n).rev() {
                    v.swap(i, s.below_usize(i + 1));
                }
                v
            }
        };
        ValuedPool::new(values)
    }
}

/// Finite scalar contribution of each pool element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValuedPool {
    values: Vec<f64>,
}

impl ValuedPool {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("pool values must be finite and non-empty"));
        }
        Ok(ValuedPool { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }

    /// `(m, M)`: the smallest and largest metric value over non-empty subsets.
    /// Additive pools use the total as `M` and the smallest element as `m`.
    pub fn bounds(&self, class: MetricTypeClass) -> (f64, f64) {
        let (lo, hi) = self.min_max();
        match class {
            MetricTypeClass::Additive => (lo, self.values.iter().sum()),
            _ => (lo, hi),
        }
    }
}

/// Metric of the subset at `indices`.
pub fn subset_metric(pool: &ValuedPool, indices: &[usize], class: MetricTypeClass) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut it = indices.iter().map(|&i| {
        pool.values
            .get(i)
            .copied()
            .ok_or_else(|| Error::invalid(format!("index {i} out of range")))
    });
    let first = it.next().expect("non-empty")?;
    let mut acc = first;
    for v in it {
        let v = v?;
        acc = match class {
            MetricTypeClass::Additive | MetricTypeClass::MeanType => acc + v,
            MetricTypeClass::MaximumType => acc.max(v),
            MetricTypeClass::MinimumType => acc.min(v),
        };
    }
    Ok(match class {
        MetricTypeClass::MeanType => acc / indices.len() as f64,
        _ => acc,
    })
}

/// Closed-form expected metric of a uniform random subset of size `k * n`.
pub fn lemma_expectation(class: MetricTypeClass, m: f64, big_m: f64, n: usize, k: f64) -> f64 {
    let kn = k * n as f64;
    match class {
        MetricTypeClass::Additive => k * big_m,
        MetricTypeClass::MaximumType => m + kn * (big_m - m) / (kn + 1.0),
        MetricTypeClass::MinimumType => big_m - kn * (big_m - m) / (kn + 1.0),
        MetricTypeClass::MeanType => (big_m + m) / 2.0,
    }
}

/// Subset size used for fraction `k`: `floor(k * n)`.
pub fn subset_size(n: usize, k: f64) -> Result<usize> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::invalid(format!("k = {k} must lie in (0, 1)")));
    }
    let size = (k * n as f64).floor() as usize;
    if size < 1 || size >= n {
        return Err(Error::invalid(format!("floor(k * N) = {size} must lie in [1, N)")));
    }
    Ok(size)
}

const CLASSES: [MetricTypeClass; 4] = [
    MetricTypeClass::Additive,
    MetricTypeClass::MaximumType,
    MetricTypeClass::MinimumType,
    MetricTypeClass::MeanType,
];

/// Sum, max, min and mean of one random subset per trial. Trial `t` draws
/// from `substream(seed, t)`, so results do not depend on thread count.
fn trial_stats(pool: &ValuedPool, size: usize, trials: usize, seed: u64) -> Vec<[f64; 4]> {
    (0..trials)
        .into_par_iter()
        .map_init(
            || SubsetSampler::new(pool.len()),
            |sampler, t| {
                let mut s = Stream::substream(seed, t as u64);
                let (mut sum, mut max, mut min) = (0.0, f64::NEG_INFINITY, f64::INFINITY);
                for &i in sampler.draw(size, &mut s) {
                    let v = pool.values[i];
                    sum += v;
                    max = max.max(v);
                    min = min.min(v);
                }
                [sum, max, min, sum / size as f64]
            },
        )
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

fn summarize(xs: impl Iterator<Item = f64> + Clone, n: usize) -> Estimate {
    let nf = n as f64;
    let mean = xs.clone().sum::<f64>() / nf;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    Estimate {
        mean,
        stderr: (var / nf).sqrt(),
    }
}

/// Empirical mean and standard error of the subset metric over `trials`
/// uniform draws of size `floor(k * N)`.
pub fn monte_carlo_expectation(pool: &ValuedPool, class: MetricTypeClass, k: f64, trials: usize, seed: u64) -> Result<Estimate> {
    if trials < 100 {
        return Err(Error::invalid("at least 100 trials are required"));
    }
    let size = subset_size(pool.len(), k)?;
    let col = CLASSES.iter().position(|&c| c == class).expect("all classes listed");
    let stats = trial_stats(pool, size, trials, seed);
    Ok(summarize(stats.iter().map(|s| s[col]), trials))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaClassResult {
    pub type_class: MetricTypeClass,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub closed_form: f64,
    pub empirical: f64,
    pub stderr: f64,
    /// `max(tolerance * (M - m), 4 * stderr)`.
    pub allowed: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n: usize,
    pub k: f64,
    pub subset_size: usize,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub classes: Vec<LemmaClassResult>,
    pub pass: bool,
}

/// Compares the closed forms with Monte Carlo estimates for all four type
/// classes on one pool (drawn from `spec`; its `type_class` is not used).
///
/// `tolerance` is relative to `M - m`. A tolerance below one standard error
/// cannot be resolved by the trial count and fails with a note.
pub fn verify_lemma(spec: &SyntheticPoolSpec, k: f64, trials: usize, tolerance: f64) -> Result<LemmaReport> {
    if !(tolerance >= 0.0) {
        return Err(Error::invalid("tolerance must be >= 0"));
    }
    if trials < 100 {
        return Err(Error::invalid("at least 100 trials are required"));
    }
    let pool = spec.build()?;
    let n = pool.len();
    let size = subset_size(n, k)?;
    let k_eff = size as f64 / n as f64;
    let stats = trial_stats(&pool, size, trials, spec.seed ^ 0x9e37_79b9_7f4a_7c15);
    let classes: Vec<LemmaClassResult> = CLASSES
        .iter()
        .enumerate()
        .map(|(col, &class)| {
            let (m, big_m) = pool.bounds(class);
            let closed_form = lemma_expectation(class, m, big_m, n, k_eff);
            let est = summarize(stats.iter().map(|s| s[col]), trials);
            let band = tolerance * (big_m - m);
            let allowed = band.max(4.0 * est.stderr);
            let resolvable = band >= est.stderr;
            let within = (est.mean - closed_form).abs() <= allowed;
            LemmaClassResult {
                type_class: class,
                m,
                big_m,
                closed_form,
                empirical: est.mean,
                stderr: est.stderr,
                allowed,
                pass: resolvable && within,
                note: (!resolvable).then(|| "tolerance below sampling noise".to_owned()),
            }
        })
        .collect();
    Ok(LemmaReport {
        n,
        k,
        subset_size: size,
        trials,
        tolerance,
        seed: spec.seed,
        pass: classes.iter().all(|c| c.pass),
        classes,
    })
}

/// Next bit pattern with the same number of set bits.
fn gosper(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

pub const MAX_ENUMERATION: u128 = 20_000_000;

/// Exact mean of the subset metric over all `C(N, size)` subsets.
///
/// Sums are accumulated before a single division, so integer-valued pools
/// give exact results for additive and mean types.
pub fn exact_expectation(pool: &ValuedPool, class: MetricTypeClass, size: usize) -> Result<f64> {
    let n = pool.len();
    if n > 63 || size == 0 || size > n || binomial(n as u64, size as u64) > MAX_ENUMERATION {
        return Err(Error::invalid(format!("C({n}, {size}) is too large to enumerate")));
    }
    let end = 1u64 << n;
    let mut mask = (1u64 << size) - 1;
    let (mut total, mut count) = (0.0f64, 0u64);
    while mask < end {
        let mut bits = mask;
        let mut acc = match class {
            MetricTypeClass::MaximumType => f64::NEG_INFINITY,
            MetricTypeClass::MinimumType => f64::INFINITY,
            _ => 0.0,
        };
        while bits != 0 {
            let v = pool.values[bits.trailing_zeros() as usize];
            acc = match class {
                MetricTypeClass::MaximumType => acc.max(v),
                MetricTypeClass::MinimumType => acc.min(v),
                _ => acc + v,
            };
            bits &= bits - 1;
        }
        total += acc;
        count += 1;
        if size == n {
            break;
        }
        mask = gosper(mask);
    }
    let denom = match class {
        MetricTypeClass::MeanType => count as f64 * size as f64,
        _ => count as f64,
    };
    Ok(total / denom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    pub type_class: MetricTypeClass,
    pub exact: f64,
    pub closed_form: f64,
    /// Allowed `|exact - closed_form|`.
    pub band: f64,
    pub pass: bool,
}

/// Exhaustive check of the closed forms on a small pool.
///
/// Additive and mean types must agree to rounding. The maximum and minimum
/// closed forms are continuous-limit results, so they are held to the
/// finite-pool band `(M - m) / (N - 1)`, one element spacing.
pub fn verify_enumeration(pool: &ValuedPool, k: f64) -> Result<Vec<EnumerationResult>> {
    let n = pool.len();
    let size = subset_size(n, k)?;
    let k_eff = size as f64 / n as f64;
    CLASSES
        .iter()
        .map(|&class| {
            let (m, big_m) = pool.bounds(class);
            let exact = exact_expectation(pool, class, size)?;
            let closed_form = lemma_expectation(class, m, big_m, n, k_eff);
            let band = match class {
                MetricTypeClass::Additive | MetricTypeClass::MeanType => 1e-12 * closed_form.abs().max(1.0),
                _ => (big_m - m) / (n - 1) as f64,
            };
            Ok(EnumerationResult {
                type_class: class,
                exact,
                closed_form,
                band,
                pass: (exact - closed_form).abs() <= band,
            })
        })
        .collect()
}

/// Indices (ascending) of a `size`-subset with the largest attainable metric.
///
/// Additive, mean and minimum types take the `size` largest values;
/// maximum type takes the global maximum plus the lowest other indices.
/// Ties prefer lower indices.
pub fn optimal_subset(pool: &ValuedPool, class: MetricTypeClass, size: usize) -> Result<Vec<usize>> {
    let n = pool.len();
    if size == 0 || size >= n {
        return Err(Error::invalid(format!("size {size} must lie in [1, {n})")));
    }
    let v = &pool.values;
    let mut out: Vec<usize> = match class {
        MetricTypeClass::MaximumType => {
            let top = (0..n).fold(0, |b, i| if v[i] > v[b] { i } else { b });
            std::iter::once(top)
                .chain((0..n).filter(|&i| i != top).take(size - 1))
                .collect()
        }
        _ => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
            order.truncate(size);
            order
        }
    };
    out.sort_unstable();
    Ok(out)
}

/// Strictly increasing link from metric value to performance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateModel {
    /// `a * x + b`.
    Affine { a: f64, b: f64 },
    /// `1 / (1 + exp(-a * (x - b)))`.
    Logistic { a: f64, b: f64 },
    /// Performance independent of the metric; a null model for sweeps.
    Constant { c: f64 },
}

impl Default for SurrogateModel {
    fn default() -> Self {
        SurrogateModel::Affine { a: 1.0, b: 0.0 }
    }
}

impl SurrogateModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SurrogateModel::Affine { a, b } | SurrogateModel::Logistic { a, b } if !(a > 0.0 && b.is_finite()) => {
                Err(Error::invalid("surrogate slope must be positive and offset finite"))
            }
            SurrogateModel::Constant { c } if !c.is_finite() => Err(Error::invalid("surrogate constant must be finite")),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SurrogateModel::Affine { a, b } => a * x + b,
            SurrogateModel::Logistic { a, b } => 1.0 / (1.0 + (-a * (x - b)).exp()),
            SurrogateModel::Constant { c } => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub type_class: MetricTypeClass,
    pub subset_size: usize,
    pub repetitions: usize,
    pub optimal_metric: f64,
    pub optimal_performance: f64,
    /// Fraction of repetitions with `p(S) > p(R)`.
    pub win_fraction: f64,
    /// Mean of `p(S) - p(R)`.
    pub mean_gap: f64,
    /// Set when every subset has the same metric (`m = M`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
}

/// Compares the optimal subset `S` against fresh uniform subsets `R` of the
/// same size under `surrogate`.
pub fn theorem_trial(
    pool: &ValuedPool,
    class: MetricTypeClass,
    k: f64,
    surrogate: SurrogateModel,
    repetitions: usize,
    seed: u64,
) -> Result<TheoremReport> {
    if repetitions < 100 {
        return Err(Error::invalid("at least 100 repetitions are required"));
    }
    surrogate.validate()?;
    let size = subset_size(pool.len(), k)?;
    let s = optimal_subset(pool, class, size)?;
    let metr_s = subset_metric(pool, &s, class)?;
    let p_s = surrogate.eval(metr_s);
    let col = CLASSES.iter().position(|&c| c == class).expect("all classes listed");
    let stats = trial_stats(pool, size, repetitions, seed);
    let gaps: Vec<f64> = stats.iter().map(|st| p_s - surrogate.eval(st[col])).collect();
    let wins = gaps.iter().filter(|&&g| g > 0.0).count();
    let (lo, hi) = pool.min_max();
    Ok(TheoremReport {
        type_class: class,
        subset_size: size,
        repetitions,
        optimal_metric: metr_s,
        optimal_performance: p_s,
        win_fraction: wins as f64 / repetitions as f64,
        mean_gap: gaps.iter().sum::<f64>() / repetitions as f64,
        regime: (lo == hi).then(|| "tie regime".to_owned()),
    })
}

/// Sweep of `metric` over nested prefixes of one seeded permutation of the
/// pool, sized `floor(level * N)`. The swept value is the subset size for
/// volume and the `class` metric of the prefix otherwise; no other metric is
/// recorded, so every group varies only its own metric.
pub fn generate_sweep(
    pool: &ValuedPool,
    metric: MetricId,
    class: MetricTypeClass,
    surrogate: SurrogateModel,
    levels: &[f64],
    seed: u64,
) -> Result<SweepSet> {
    surrogate.validate()?;
    if levels.len() < 4 {
        return Err(Error::InvalidSweep("a sweep needs at least 4 levels".into()));
    }
    let n = pool.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut s = Stream::new(seed);
    for i in (1..n).rev() {
        order.swap(i, s.below_usize(i + 1));
    }
    let points = levels
        .iter()
        .map(|&level| {
            let size = (level * n as f64).floor();
            if !(level <= 1.0) || size < 1.0 {
                return Err(Error::UnreachableLevel { metric, level });
            }
            let idx = &order[..size as usize];
            let value = if metric == MetricId::Volume {
                size
            } else {
                subset_metric(pool, idx, class)?
            };
            Ok(SweepPoint {
                metrics: MetricVector::new().with(metric, value),
                performance: surrogate.eval(value),
                varied_metric: metric,
                tag: format!("level={level}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepSet::new(points, Merit::HigherBetter))
}
