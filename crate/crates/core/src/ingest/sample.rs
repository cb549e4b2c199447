use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::record::Record;
use crate::error::{Error, Result};
use crate::rng::{sample_indices, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawMethod {
    UniformWithoutReplacement,
    Reservoir,
    Full,
    Repaired,
}

/// Indices of selected records plus how they were drawn.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleHandle {
    indices: Vec<usize>,
    seed: u64,
    method: DrawMethod,
}

impl SampleHandle {
    /// Indices must be unique; they are kept sorted ascending.
    pub fn new(mut indices: Vec<usize>, seed: u64, method: DrawMethod) -> Self {
        indices.sort_unstable();
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]), "duplicate indices");
        SampleHandle { indices, seed, method }
    }

    pub fn full(n: usize) -> Self {
        SampleHandle::new((0..n).collect(), 0, DrawMethod::Full)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn sorted_indices(&self) -> Vec<usize> {
        self.indices.clone()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn method(&self) -> DrawMethod {
        self.method
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.indices
    }
}

/// Uniform simple random sample of `n` records without replacement.
pub fn draw_uniform(dataset: &Dataset, n: usize, seed: u64) -> Result<SampleHandle> {
    draw_uniform_from(dataset.record_count(), n, &mut Stream::new(seed), seed)
}

pub(crate) fn draw_uniform_from(total: usize, n: usize, stream: &mut Stream, seed: u64) -> Result<SampleHandle> {
    if n > total {
        return Err(Error::SizeExceedsPool {
            requested: n,
            available: total,
        });
    }
    Ok(SampleHandle::new(
        sample_indices(total, n, stream),
        seed,
        DrawMethod::UniformWithoutReplacement,
    ))
}

/// Algorithm R over any iterator. Returns the chosen items with their
/// positions, sorted by position, and the number of items visited.
pub fn reservoir<T>(items: impl IntoIterator<Item = T>, n: usize, stream: &mut Stream) -> (Vec<(usize, T)>, usize) {
    let mut slots: Vec<(usize, T)> = Vec::with_capacity(n);
    let mut visited = 0usize;
    for (i, item) in items.into_iter().enumerate() {
        visited += 1;
        if slots.len() < n {
            slots.push((i, item));
        } else {
            let j = stream.below_usize(i + 1);
            if j < n {
                slots[j] = (i, item);
            }
        }
    }
    slots.sort_unstable_by_key(|(i, _)| *i);
    (slots, visited)
}

/// Single-pass sample of `min(n, record_count)` records, used for estimating
/// pool metrics. Returns the sampled records alongside the handle.
pub fn reservoir_estimate_sample(dataset: &Dataset, n: usize, seed: u64) -> Result<(SampleHandle, Vec<Record>)> {
    if n == 0 {
        return Err(Error::invalid("reservoir sample size must be at least 1"));
    }
    let mut stream = Stream::new(seed);
    let mut failure = None;
    let rows = dataset.rows()?.map_while(|r| match r {
        Ok(row) => Some(row.record),
        Err(e) => {
            failure = Some(e);
            None
        }
    });
    let (slots, _) = reservoir(rows, n, &mut stream);
    if let Some(e) = failure {
        return Err(e);
    }
    let (indices, records): (Vec<usize>, Vec<Record>) = slots.into_iter().unzip();
    Ok((SampleHandle::new(indices, seed, DrawMethod::Reservoir), records))
}
