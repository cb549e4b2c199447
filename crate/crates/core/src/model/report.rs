use serde::{Deserialize, Serialize};

use super::per_metric::PerMetric;
use super::vector::MetricVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    Ignored,
}

/// Outcome of one metric against its criterion.
///
/// `distance` is how far the value sits outside the passing region (0 when it
/// passes or is ignored); `None` when the value or its reference is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Verdict {
    pub fn ignored() -> Self {
        Verdict {
            status: VerdictStatus::Ignored,
            distance: Some(0.0),
            reason: None,
        }
    }

    pub fn failed(&self) -> bool {
        self.status == VerdictStatus::Fail
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub pass: bool,
    pub metrics: PerMetricVerdicts,
}

pub type PerMetricVerdicts = PerMetric<Verdict>;

impl<'de> Deserialize<'de> for PerMetric<Verdict> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let partial = super::per_metric::PartialPerMetric::<Verdict>::deserialize(d)?;
        Ok(partial.fill(|_| Verdict::ignored()))
    }
}

impl Verdicts {
    pub fn failing(&self) -> impl Iterator<Item = crate::model::MetricId> + '_ {
        self.metrics.iter().filter(|(_, v)| v.failed()).map(|(m, _)| m)
    }

    pub fn failure_count(&self) -> usize {
        self.failing().count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Accept,
    Redraw,
    Repair,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub candidate_size: usize,
    pub candidate_metrics: MetricVector,
    pub verdicts: Verdicts,
    pub action: Action,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Gime,
    Random,
    Full,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_ms: f64,
}

/// Full account of one subset selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub schema_version: u32,
    pub strategy: Strategy,
    pub accepted: bool,
    pub seed: u64,
    pub subset_size: usize,
    pub pool_estimated: bool,
    pub pool_metrics: MetricVector,
    pub final_metrics: MetricVector,
    pub iterations: Vec<IterationRecord>,
    pub config_digest: String,
    pub warnings: Vec<String>,
    /// Wall-clock fields; the only part of a report that varies between runs.
    pub timing: Timing,
}
