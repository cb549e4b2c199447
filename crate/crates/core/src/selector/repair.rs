//! Size-preserving candidate repair.
//!
//! Each swap removes one member and adds one outside record. Incoming records
//! are taken lowest pool index first; outgoing records are drawn from the
//! iteration's stream among members whose removal cannot lose a distinct
//! scope/variety/coverage value (sole carriers are protected).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ingest::{Dataset, DatasetManifest, MismatchTarget, Record, SampleHandle};
use crate::metrics::MetricsEngine;
use crate::model::{Criterion, MetricId, MetricVector, ThresholdSpec, Verdicts};
use crate::rng::Stream;

use super::pass_region;

/// Distinct-value column of a set metric, interned.
struct KeyColumn {
    metric: MetricId,
    key: Vec<Option<u32>>,
    /// Pool records carrying each key, ascending.
    carriers: Vec<Vec<usize>>,
}

struct Labels {
    class: Vec<u32>,
    target: Vec<f64>,
    members: Vec<Vec<usize>>,
}

/// Precomputed per-record data for repairing candidates of one pool.
pub struct Repairer {
    total: usize,
    columns: Vec<KeyColumn>,
    labels: Option<Labels>,
    delay: Option<(Vec<f64>, f64)>,
    distortion: Option<(Vec<f64>, f64)>,
}

fn intern(records: &[Record], idx: usize, keep: impl Fn(&str) -> bool, metric: MetricId) -> KeyColumn {
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut carriers: Vec<Vec<usize>> = Vec::new();
    let key = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let v = r.get(idx);
            if v.is_null() {
                return None;
            }
            let k = v.key();
            if !keep(&k) {
                return None;
            }
            let next = ids.len() as u32;
            let id = *ids.entry(k.into_owned()).or_insert(next);
            if id as usize == carriers.len() {
                carriers.push(Vec::new());
            }
            carriers[id as usize].push(i);
            Some(id)
        })
        .collect();
    KeyColumn { metric, key, carriers }
}

fn upper_bound(spec: &ThresholdSpec, pool: &MetricVector, m: MetricId) -> Option<f64> {
    match pass_region(spec.criterion(m), spec.merit(m), pool.get(m)) {
        Ok(Some((_, hi))) if hi.is_finite() => Some(hi),
        _ => None,
    }
}

impl Repairer {
    pub fn new(
        records: &[Record],
        manifest: &DatasetManifest,
        spec: &ThresholdSpec,
        pool: &MetricVector,
        engine: &MetricsEngine,
    ) -> Result<Self> {
        let pos = |f: &Option<String>| f.as_ref().and_then(|f| manifest.schema.position(f));
        let active = |m: MetricId| spec.criterion(m) != Criterion::Ignore;
        let mut columns = Vec::new();
        if active(MetricId::Scope) {
            if let Some(i) = pos(&manifest.scope_field) {
                columns.push(intern(records, i, |_| true, MetricId::Scope));
            }
        }
        if active(MetricId::Variety) {
            if let Some(i) = pos(&manifest.variety_field) {
                columns.push(intern(records, i, |_| true, MetricId::Variety));
            }
        }
        if active(MetricId::Coverage) {
            if let (Some(i), Some(u)) = (pos(&manifest.coverage_field), &manifest.coverage_universe) {
                columns.push(intern(records, i, |k| u.iter().any(|x| x == k), MetricId::Coverage));
            }
        }

        let labels = match (
            active(MetricId::Mismatch),
            pos(&manifest.label_field),
            &manifest.mismatch_target,
        ) {
            (true, Some(i), Some(target)) => {
                let (names, target): (Vec<String>, Vec<f64>) = match target {
                    MismatchTarget::Binary { positive_label, rate } => (vec![positive_label.clone()], vec![*rate, 1.0 - rate]),
                    MismatchTarget::Categorical(dist) => dist.iter().map(|(k, q)| (k.clone(), *q)).unzip(),
                };
                let binary = matches!(manifest.mismatch_target, Some(MismatchTarget::Binary { .. }));
                let mut members = vec![Vec::new(); target.len()];
                let class = records
                    .iter()
                    .enumerate()
                    .map(|(r, rec)| {
                        let k = rec.get(i).key();
                        let c = match names.iter().position(|n| *n == k) {
                            Some(c) => c,
                            None if binary => 1,
                            None => {
                                return Err(Error::UnknownLabel {
                                    label: k.into_owned(),
                                    line: r as u64 + 1,
                                })
                            }
                        };
                        members[c].push(r);
                        Ok(c as u32)
                    })
                    .collect::<Result<Vec<u32>>>()?;
                Some(Labels { class, target, members })
            }
            _ => None,
        };

        let per_record = |m: MetricId| -> Result<Option<(Vec<f64>, f64)>> {
            let Some(hi) = upper_bound(spec, pool, m) else {
                return Ok(None);
            };
            let vals = records
                .iter()
                .map(|r| Ok(engine.compute_records(std::slice::from_ref(r))?.get(m).unwrap_or(0.0)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Some((vals, hi)))
        };
        Ok(Repairer {
            total: records.len(),
            columns,
            labels,
            delay: per_record(MetricId::Delay)?,
            distortion: per_record(MetricId::Distortion)?,
        })
    }

    fn admissible(&self, r: usize) -> bool {
        self.delay.as_ref().is_none_or(|(v, hi)| v[r] <= *hi) && self.distortion.as_ref().is_none_or(|(v, hi)| v[r] <= *hi)
    }

    /// Repaired copy of `indices` (sorted), or `RepairStalled` when no swap
    /// was possible for any failing metric.
    pub fn repair(&self, indices: &[usize], verdicts: &Verdicts, stream: &mut Stream) -> Result<Vec<usize>> {
        let mut c = Candidate::new(self, indices);
        let mut changed = false;
        for m in verdicts.failing() {
            changed |= match m {
                MetricId::Scope | MetricId::Variety | MetricId::Coverage => {
                    match self.columns.iter().position(|col| col.metric == m) {
                        Some(k) => c.fill_missing(self, k, stream),
                        None => false,
                    }
                }
                MetricId::Mismatch => c.rebalance(self, stream),
                MetricId::Delay => c.purge(self, Purge::Delay),
                MetricId::Distortion => c.purge(self, Purge::Distortion),
                _ => false,
            };
        }
        if !changed {
            return Err(Error::RepairStalled);
        }
        let mut out = c.members;
        out.sort_unstable();
        Ok(out)
    }
}

#[derive(Clone, Copy)]
enum Purge {
    Delay,
    Distortion,
}

struct Candidate {
    members: Vec<usize>,
    slot: Vec<Option<usize>>,
    counts: Vec<Vec<u32>>,
    class_counts: Vec<u64>,
}

impl Candidate {
    fn new(rep: &Repairer, indices: &[usize]) -> Self {
        let mut slot = vec![None; rep.total];
        for (s, &i) in indices.iter().enumerate() {
            slot[i] = Some(s);
        }
        let counts = rep
            .columns
            .iter()
            .map(|col| {
                let mut c = vec![0u32; col.carriers.len()];
                for &i in indices {
                    if let Some(k) = col.key[i] {
                        c[k as usize] += 1;
                    }
                }
                c
            })
            .collect();
        let class_counts = rep
            .labels
            .as_ref()
            .map(|l| {
                let mut c = vec![0u64; l.target.len()];
                for &i in indices {
                    c[l.class[i] as usize] += 1;
                }
                c
            })
            .unwrap_or_default();
        Candidate {
            members: indices.to_vec(),
            slot,
            counts,
            class_counts,
        }
    }

    fn protected(&self, rep: &Repairer, r: usize) -> bool {
        rep.columns
            .iter()
            .zip(&self.counts)
            .any(|(col, counts)| col.key[r].is_some_and(|k| counts[k as usize] == 1))
    }

    fn swap(&mut self, rep: &Repairer, out: usize, incoming: usize) {
        let s = self.slot[out].take().expect("outgoing record is a member");
        self.members[s] = incoming;
        self.slot[incoming] = Some(s);
        for (col, counts) in rep.columns.iter().zip(self.counts.iter_mut()) {
            if let Some(k) = col.key[out] {
                counts[k as usize] -= 1;
            }
            if let Some(k) = col.key[incoming] {
                counts[k as usize] += 1;
            }
        }
        if let Some(l) = &rep.labels {
            self.class_counts[l.class[out] as usize] -= 1;
            self.class_counts[l.class[incoming] as usize] += 1;
        }
    }

    /// Random unprotected member satisfying `keep`.
    fn pick_out(&self, rep: &Repairer, stream: &mut Stream, keep: impl Fn(usize) -> bool) -> Option<usize> {
        let pool: Vec<usize> = self
            .members
            .iter()
            .copied()
            .filter(|&r| keep(r) && !self.protected(rep, r))
            .collect();
        if pool.is_empty() {
            None
        } else {
            Some(pool[stream.below_usize(pool.len())])
        }
    }

    fn fill_missing(&mut self, rep: &Repairer, k: usize, stream: &mut Stream) -> bool {
        let col = &rep.columns[k];
        let mut changed = false;
        for key in 0..col.carriers.len() {
            if self.counts[k][key] > 0 {
                continue;
            }
            let Some(&incoming) = col.carriers[key]
                .iter()
                .find(|&&r| self.slot[r].is_none() && rep.admissible(r))
            else {
                continue;
            };
            let same_class = |r: usize| rep.labels.as_ref().is_none_or(|l| l.class[r] == l.class[incoming]);
            let out = self
                .pick_out(rep, stream, same_class)
                .or_else(|| self.pick_out(rep, stream, |_| true));
            let Some(out) = out else {
                break;
            };
            self.swap(rep, out, incoming);
            changed = true;
        }
        changed
    }

    fn tvd(&self, target: &[f64], n: f64) -> f64 {
        0.5 * self
            .class_counts
            .iter()
            .zip(target)
            .map(|(&c, q)| (c as f64 / n - q).abs())
            .sum::<f64>()
    }

    fn rebalance(&mut self, rep: &Repairer, stream: &mut Stream) -> bool {
        let Some(labels) = &rep.labels else {
            return false;
        };
        let n = self.members.len() as f64;
        let mut cursor = vec![0usize; labels.target.len()];
        let mut changed = false;
        for _ in 0..self.members.len() {
            let gap: Vec<f64> = self
                .class_counts
                .iter()
                .zip(&labels.target)
                .map(|(&c, q)| c as f64 / n - q)
                .collect();
            let argmax =
                |f: &dyn Fn(f64) -> f64| (0..gap.len()).fold(0, |best, i| if f(gap[i]) > f(gap[best]) { i } else { best });
            let over = argmax(&|g| g);
            let under = argmax(&|g| -g);
            if over == under || self.class_counts[over] == 0 {
                break;
            }
            let before = self.tvd(&labels.target, n);
            self.class_counts[over] -= 1;
            self.class_counts[under] += 1;
            let after = self.tvd(&labels.target, n);
            self.class_counts[over] += 1;
            self.class_counts[under] -= 1;
            if after >= before {
                break;
            }
            let list = &labels.members[under];
            while cursor[under] < list.len() {
                let r = list[cursor[under]];
                if self.slot[r].is_none() && rep.admissible(r) {
                    break;
                }
                cursor[under] += 1;
            }
            let Some(&incoming) = list.get(cursor[under]) else {
                break;
            };
            let Some(out) = self.pick_out(rep, stream, |r| labels.class[r] as usize == over) else {
                break;
            };
            self.swap(rep, out, incoming);
            changed = true;
        }
        changed
    }

    /// Swaps out the worst offenders, highest value first.
    fn purge(&mut self, rep: &Repairer, which: Purge) -> bool {
        let Some((values, hi)) = (match which {
            Purge::Delay => rep.delay.as_ref(),
            Purge::Distortion => rep.distortion.as_ref(),
        }) else {
            return false;
        };
        let hi = *hi;
        let n = self.members.len() as f64;
        let mut sum: f64 = self.members.iter().map(|&r| values[r]).sum();
        let violated = |sum: f64, worst: f64| match which {
            Purge::Delay => worst > hi,
            Purge::Distortion => sum / n > hi,
        };
        let mut worst: Vec<usize> = self
            .members
            .iter()
            .copied()
            .filter(|&r| values[r] > hi || matches!(which, Purge::Distortion) && values[r] > 0.0)
            .collect();
        worst.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let mut cursor = 0usize;
        let mut changed = false;
        for out in worst {
            if !violated(sum, values[out]) {
                break;
            }
            if self.protected(rep, out) {
                continue;
            }
            let same_class = |r: usize| rep.labels.as_ref().is_none_or(|l| l.class[r] == l.class[out]);
            let fits = |r: usize| self.slot[r].is_none() && rep.admissible(r) && values[r] < values[out];
            let incoming = (0..rep.total)
                .find(|&r| fits(r) && same_class(r))
                .or_else(|| (cursor..rep.total).find(|&r| fits(r)));
            let Some(incoming) = incoming else {
                continue;
            };
            cursor = cursor.max(incoming);
            sum += values[incoming] - values[out];
            self.swap(rep, out, incoming);
            changed = true;
        }
        changed
    }
}

/// One repair round on a dataset-level candidate. Materializes the pool;
/// the selection loop keeps a [`Repairer`] instead.
pub fn repair_candidate(
    pool: &Dataset,
    manifest: &DatasetManifest,
    spec: &ThresholdSpec,
    pool_metrics: &MetricVector,
    candidate: &SampleHandle,
    verdicts: &Verdicts,
    stream: &mut Stream,
) -> Result<SampleHandle> {
    if verdicts.pass {
        return Ok(candidate.clone());
    }
    let records = pool.materialize()?;
    let engine = MetricsEngine::new(manifest)?;
    let rep = Repairer::new(&records, manifest, spec, pool_metrics, &engine)?;
    let fixed = rep.repair(candidate.indices(), verdicts, stream)?;
    Ok(SampleHandle::new(
        fixed,
        candidate.seed(),
        crate::ingest::DrawMethod::Repaired,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{FieldDef, FieldKind, Schema, TimeQuantity, Value};
    use crate::selector::evaluate_thresholds;

    fn fixture() -> (DatasetManifest, Vec<Record>) {
        let schema = Schema::new(vec![
            FieldDef::new("id", FieldKind::Text),
            FieldDef::new("kind", FieldKind::Text),
            FieldDef::new("label", FieldKind::Text),
        ]);
        let mut m = DatasetManifest::new(schema, "id", TimeQuantity::days(1.0));
        m.variety_field = Some("kind".into());
        m.label_field = Some("label".into());
        m.mismatch_target = Some(MismatchTarget::Binary {
            positive_label: "1".into(),
            rate: 0.5,
        });
        let records = (0..200)
            .map(|i| {
                Record::new(vec![
                    Value::Text(format!("r{i}")),
                    Value::Text(format!("k{}", i % 10)),
                    Value::Text(if i % 4 == 0 { "1" } else { "0" }.into()),
                ])
            })
            .collect();
        (m, records)
    }

    #[test]
    fn restores_missing_variety() {
        let (m, records) = fixture();
        let engine = MetricsEngine::new(&m).unwrap();
        let pool = engine.compute_records(&records).unwrap();
        let spec = ThresholdSpec::ignore_all().with(MetricId::Variety, Criterion::EqualPoolOptimal { tolerance: 0.0 });
        // Every record of kind k3 left out.
        let cand: Vec<usize> = (0..200).filter(|i| i % 10 != 3).take(50).collect();
        let before = engine.compute_indices(&records, &cand).unwrap();
        assert_eq!(before.get(MetricId::Variety), Some(9.0));
        let verdicts = evaluate_thresholds(&before, &spec, &pool);
        let rep = Repairer::new(&records, &m, &spec, &pool, &engine).unwrap();
        let fixed = rep.repair(&cand, &verdicts, &mut Stream::new(1)).unwrap();
        assert_eq!(fixed.len(), 50);
        let after = engine.compute_indices(&records, &fixed).unwrap();
        assert_eq!(after.get(MetricId::Variety), Some(10.0));
    }

    #[test]
    fn mismatch_never_worsens() {
        let (m, records) = fixture();
        let engine = MetricsEngine::new(&m).unwrap();
        let pool = engine.compute_records(&records).unwrap();
        let spec = ThresholdSpec::ignore_all()
            .with(MetricId::Mismatch, Criterion::AtMost(0.01))
            .with(MetricId::Variety, Criterion::EqualPoolOptimal { tolerance: 0.0 });
        let cand: Vec<usize> = (0..100).collect();
        let before = engine.compute_indices(&records, &cand).unwrap();
        assert_eq!(before.get(MetricId::Mismatch), Some(0.25));
        let verdicts = evaluate_thresholds(&before, &spec, &pool);
        let rep = Repairer::new(&records, &m, &spec, &pool, &engine).unwrap();
        let fixed = rep.repair(&cand, &verdicts, &mut Stream::new(9)).unwrap();
        let after = engine.compute_indices(&records, &fixed).unwrap();
        assert!(after.get(MetricId::Mismatch).unwrap() <= 0.25);
        assert_eq!(after.get(MetricId::Mismatch), Some(0.0));
        assert_eq!(after.get(MetricId::Variety), Some(10.0));
    }

    #[test]
    fn passing_candidate_is_unchanged() {
        let (m, records) = fixture();
        let ds = Dataset::from_records(&m, records).unwrap();
        let engine = MetricsEngine::new(&m).unwrap();
        let pool = engine.compute(&ds).unwrap();
        let spec = ThresholdSpec::ignore_all();
        let cand = SampleHandle::new(vec![1, 5, 7], 3, crate::ingest::DrawMethod::UniformWithoutReplacement);
        let verdicts = evaluate_thresholds(&pool, &spec, &pool);
        let out = repair_candidate(&ds, &m, &spec, &pool, &cand, &verdicts, &mut Stream::new(0)).unwrap();
        assert_eq!(out, cand);
    }
}
