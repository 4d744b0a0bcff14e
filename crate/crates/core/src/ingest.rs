//! Loading and pooling of activations and eye-tracking records.
//!
//! Per-token activation records are mean-pooled over time-steps into one
//! vector per sentence; word-level fixation durations are averaged over
//! participants and then over words to give one scalar per sentence.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::condition::ConditionSet;
use crate::error::{Error, Result};

/// One model layer, e.g. `bert:11`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerId {
    pub model: String,
    pub index: usize,
}

impl LayerId {
    pub fn new(model: impl Into<String>, index: usize) -> Self {
        LayerId {
            model: model.into(),
            index,
        }
    }
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.model, self.index)
    }
}

impl FromStr for LayerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (model, idx) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::Invalid(format!("layer id `{s}` is not of the form model:index")))?;
        let index = idx
            .parse()
            .map_err(|_| Error::Invalid(format!("layer index `{idx}` is not an integer")))?;
        if model.is_empty() {
            return Err(Error::Invalid(format!("layer id `{s}` has an empty model tag")));
        }
        Ok(LayerId::new(model, index))
    }
}

/// Per-token activations for one sentence under one layer: a T×H matrix.
#[derive(Debug, Clone)]
pub struct TokenActivations {
    pub condition: String,
    pub layer: LayerId,
    pub vectors: Vec<Vec<f64>>,
}

/// Pooled sentence representations for one layer: an N×H matrix whose rows
/// follow the condition-set order.
#[derive(Debug, Clone)]
pub struct ActivityMatrix {
    pub conditions: Arc<ConditionSet>,
    pub layer: LayerId,
    pub data: Vec<Vec<f64>>,
}

impl ActivityMatrix {
    pub fn dim(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixationMeasure {
    TotalFixation,
    FirstPass,
}

impl fmt::Display for FixationMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixationMeasure::TotalFixation => write!(f, "total_fixation"),
            FixationMeasure::FirstPass => write!(f, "first_pass"),
        }
    }
}

impl FromStr for FixationMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total_fixation" => Ok(FixationMeasure::TotalFixation),
            "first_pass" => Ok(FixationMeasure::FirstPass),
            other => Err(Error::Invalid(format!("unknown fixation measure `{other}`"))),
        }
    }
}

/// How to treat words a participant never fixated (stored as 0 ms).
///
/// `Zero` keeps the zeros in the participant average; `Exclude` averages
/// only over participants with a nonzero duration for the word (a word
/// skipped by everyone contributes 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkipPolicy {
    #[default]
    Zero,
    Exclude,
}

impl FromStr for SkipPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(SkipPolicy::Zero),
            "exclude" => Ok(SkipPolicy::Exclude),
            other => Err(Error::Invalid(format!("unknown skip policy `{other}`"))),
        }
    }
}

/// Word-level fixation durations for one sentence: a W×P matrix in
/// milliseconds, one column per participant. Missing fixations are 0.
#[derive(Debug, Clone)]
pub struct TokenFixationTable {
    pub condition: String,
    pub words: Vec<String>,
    pub durations: Vec<Vec<f64>>,
    pub measure: FixationMeasure,
}

/// Sentence-level scalar annotation in condition-set order.
#[derive(Debug, Clone)]
pub struct FeatureVector {
    pub conditions: Arc<ConditionSet>,
    pub name: String,
    pub values: Vec<f64>,
}

/// Sum with pairwise (tree) splitting so the reduction order is fixed and
/// rounding error stays O(log n).
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Mean over time-steps of a T×H token-activation block.
pub fn mean_pool(tokens: &TokenActivations) -> Result<Vec<f64>> {
    let t = tokens.vectors.len();
    if t == 0 {
        return Err(Error::EmptySentence);
    }
    let h = tokens.vectors[0].len();
    for v in &tokens.vectors {
        if v.len() != h {
            return Err(Error::DimensionMismatch {
                expected: h,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidActivation {
                id: tokens.condition.clone(),
            });
        }
    }
    let mut column = vec![0.0; t];
    let mut pooled = Vec::with_capacity(h);
    for d in 0..h {
        for (ti, v) in tokens.vectors.iter().enumerate() {
            column[ti] = v[d];
        }
        pooled.push(pairwise_sum(&column) / t as f64);
    }
    Ok(pooled)
}

/// Assemble pooled rows for one layer, ordered by the condition set.
pub fn build_activity_matrix(
    records: &[TokenActivations],
    conditions: &Arc<ConditionSet>,
) -> Result<ActivityMatrix> {
    let n = conditions.len();
    let mut by_condition: HashMap<&str, &TokenActivations> = HashMap::with_capacity(n);
    let mut layer: Option<&LayerId> = None;
    for rec in records {
        match layer {
            None => layer = Some(&rec.layer),
            Some(l) if *l == rec.layer => {}
            Some(l) => {
                return Err(Error::Invalid(format!(
                    "records mix layers {l} and {}",
                    rec.layer
                )))
            }
        }
        if conditions.index_of(&rec.condition).is_none() {
            return Err(Error::Invalid(format!(
                "record for unknown condition {}",
                rec.condition
            )));
        }
        if by_condition.insert(&rec.condition, rec).is_some() {
            return Err(Error::DuplicateCondition {
                id: rec.condition.clone(),
            });
        }
    }
    let layer = layer
        .cloned()
        .ok_or_else(|| Error::InsufficientData("no activation records".into()))?;

    let ordered: Vec<&TokenActivations> = conditions
        .ids()
        .iter()
        .map(|id| {
            by_condition
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::IncompleteLayer { id: id.clone() })
        })
        .collect::<Result<_>>()?;

    let data: Vec<Vec<f64>> = ordered
        .par_iter()
        .map(|rec| mean_pool(rec))
        .collect::<Result<_>>()?;

    let h = data[0].len();
    for row in &data {
        if row.len() != h {
            return Err(Error::DimensionMismatch {
                expected: h,
                got: row.len(),
            });
        }
    }
    Ok(ActivityMatrix {
        conditions: Arc::clone(conditions),
        layer,
        data,
    })
}

/// Sentence-level fixation scalar: participant mean per word, summed over
/// words, divided by the word count.
pub fn aggregate_fixations(table: &TokenFixationTable, policy: SkipPolicy) -> Result<f64> {
    let w = table.words.len();
    if w == 0 || table.durations.is_empty() {
        return Err(Error::EmptySentence);
    }
    if table.durations.len() != w {
        return Err(Error::DimensionMismatch {
            expected: w,
            got: table.durations.len(),
        });
    }
    let mut word_means = Vec::with_capacity(w);
    for row in &table.durations {
        if row.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no participants for condition {}",
                table.condition
            )));
        }
        let mean = match policy {
            SkipPolicy::Zero => pairwise_sum(row) / row.len() as f64,
            SkipPolicy::Exclude => {
                let nonzero: Vec<f64> = row.iter().copied().filter(|&d| d > 0.0).collect();
                if nonzero.is_empty() {
                    0.0
                } else {
                    pairwise_sum(&nonzero) / nonzero.len() as f64
                }
            }
        };
        word_means.push(mean);
    }
    Ok(pairwise_sum(&word_means) / w as f64)
}

/// One aggregated fixation scalar per condition, in condition-set order.
pub fn build_feature_vector(
    tables: &[TokenFixationTable],
    conditions: &Arc<ConditionSet>,
    policy: SkipPolicy,
) -> Result<FeatureVector> {
    let mut by_condition: HashMap<&str, &TokenFixationTable> = HashMap::new();
    let mut measure: Option<FixationMeasure> = None;
    for table in tables {
        match measure {
            None => measure = Some(table.measure),
            Some(m) if m == table.measure => {}
            Some(m) => {
                return Err(Error::MixedMeasures {
                    first: m.to_string(),
                    second: table.measure.to_string(),
                })
            }
        }
        if by_condition.insert(&table.condition, table).is_some() {
            return Err(Error::DuplicateCondition {
                id: table.condition.clone(),
            });
        }
    }
    let measure = measure.ok_or_else(|| Error::InsufficientData("no fixation tables".into()))?;
    let values: Vec<f64> = conditions
        .ids()
        .iter()
        .map(|id| {
            let table = by_condition
                .get(id.as_str())
                .ok_or_else(|| Error::IncompleteLayer { id: id.clone() })?;
            aggregate_fixations(table, policy)
        })
        .collect::<Result<_>>()?;
    Ok(FeatureVector {
        conditions: Arc::clone(conditions),
        name: measure.to_string(),
        values,
    })
}
