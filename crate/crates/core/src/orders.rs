//! Second-order analysis (RSM, per-condition layer agreement) and
//! third-order correlation of agreement against difficulty features, plus
//! the layer-group ANOVA harness.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::anova::{anova_two_way, AnovaTable};
use crate::condition::ConditionSet;
use crate::error::{Error, Result};
use crate::ingest::{FeatureVector, LayerId};
use crate::rankstats::{kendall_tau_a, spearman_rho, CorrelationReport};
use crate::rdm::Rdm;

/// Unordered pair of layers, canonicalized so that `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayerPair {
    pub a: LayerId,
    pub b: LayerId,
}

impl LayerPair {
    pub fn new(x: LayerId, y: LayerId) -> Result<Self> {
        if x == y {
            return Err(Error::Invalid(format!("degenerate layer pair {x}-{x}")));
        }
        if x <= y {
            Ok(LayerPair { a: x, b: y })
        } else {
            Ok(LayerPair { a: y, b: x })
        }
    }

    /// Adjacent means same model and |i − j| = 1.
    pub fn adjacent(&self) -> bool {
        self.a.model == self.b.model && self.b.index.abs_diff(self.a.index) == 1
    }
}

impl fmt::Display for LayerPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// Statistic used for row-wise and whole-RDM comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStat {
    KendallA,
    Spearman,
}

impl fmt::Display for RowStat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStat::KendallA => write!(f, "kendall_a"),
            RowStat::Spearman => write!(f, "spearman"),
        }
    }
}

impl FromStr for RowStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kendall_a" => Ok(RowStat::KendallA),
            "spearman" => Ok(RowStat::Spearman),
            other => Err(Error::Invalid(format!("unknown row statistic `{other}`"))),
        }
    }
}

fn row_correlation(stat: RowStat, a: &[f64], b: &[f64]) -> Result<f64> {
    match stat {
        RowStat::KendallA => kendall_tau_a(a, b),
        RowStat::Spearman => Ok(spearman_rho(a, b, 1)?.coefficient),
    }
}

/// Per-condition agreement between two RDMs: for each condition, the rank
/// correlation of its two dissimilarity rows. Disagreement is the derived
/// quantity 1 − agreement.
#[derive(Debug, Clone)]
pub struct DisagreementVector {
    pub label: String,
    pub conditions: Arc<ConditionSet>,
    pub agreement: Vec<f64>,
    pub stat: RowStat,
}

impl DisagreementVector {
    pub fn disagreement(&self) -> Vec<f64> {
        self.agreement.iter().map(|a| 1.0 - a).collect()
    }
}

/// Representational similarity matrix over a list of RDMs.
#[derive(Debug, Clone)]
pub struct Rsm {
    pub labels: Vec<String>,
    pub data: Vec<f64>,
}

impl Rsm {
    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k() + j]
    }
}

/// Row-wise comparison of two RDMs over a shared condition set. The
/// structural self-dissimilarity cell carries no information and is
/// excluded by default; `include_self` keeps it for sensitivity analysis.
pub fn per_condition_agreement(
    rdm_a: &Rdm,
    rdm_b: &Rdm,
    stat: RowStat,
    include_self: bool,
    label: impl Into<String>,
) -> Result<DisagreementVector> {
    if rdm_a.conditions != rdm_b.conditions {
        return Err(Error::ConditionSetMismatch);
    }
    let n = rdm_a.n();
    if n < 4 {
        return Err(Error::InsufficientData(
            "per-condition agreement needs N >= 4".into(),
        ));
    }
    let agreement: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|s| {
            if include_self {
                row_correlation(stat, rdm_a.row(s), rdm_b.row(s))
            } else {
                row_correlation(stat, &rdm_a.row_without_self(s), &rdm_b.row_without_self(s))
            }
        })
        .collect::<Result<_>>()?;
    Ok(DisagreementVector {
        label: label.into(),
        conditions: Arc::clone(&rdm_a.conditions),
        agreement,
        stat,
    })
}

/// Whole-RDM comparison: pairwise statistic over vectorized strict upper
/// triangles. The diagonal is 1 by definition.
pub fn rsm(rdms: &[&Rdm], labels: &[String], stat: RowStat) -> Result<Rsm> {
    if rdms.len() < 2 {
        return Err(Error::InsufficientData("rsm needs at least 2 RDMs".into()));
    }
    if labels.len() != rdms.len() {
        return Err(Error::DimensionMismatch {
            expected: rdms.len(),
            got: labels.len(),
        });
    }
    for rdm in &rdms[1..] {
        if rdm.conditions != rdms[0].conditions {
            return Err(Error::ConditionSetMismatch);
        }
    }
    let k = rdms.len();
    let triangles: Vec<Vec<f64>> = rdms.iter().map(|r| r.upper_triangle()).collect();
    let mut data = vec![1.0; k * k];
    for i in 0..k {
        for j in (i + 1)..k {
            let c = row_correlation(stat, &triangles[i], &triangles[j])?;
            data[i * k + j] = c;
            data[j * k + i] = c;
        }
    }
    Ok(Rsm {
        labels: labels.to_vec(),
        data,
    })
}

/// Third-order report: Spearman between a per-condition agreement vector
/// and a feature vector, with both sign conventions emitted.
#[derive(Debug, Clone)]
pub struct ThirdOrderReport {
    pub pair_label: String,
    pub feature_name: String,
    /// Correlation of the agreement form (V_Corr) with the feature.
    pub agreement: CorrelationReport,
    /// Coefficient under the disagreement form 1 − V_Corr: the exact
    /// negation (Spearman under a strictly decreasing map).
    pub disagreement_coefficient: f64,
}

pub fn third_order(
    disagreement: &DisagreementVector,
    feature: &FeatureVector,
    n_tests: usize,
) -> Result<ThirdOrderReport> {
    if disagreement.conditions != feature.conditions {
        return Err(Error::ConditionSetMismatch);
    }
    if n_tests < 1 {
        return Err(Error::Invalid("n_tests must be >= 1".into()));
    }
    let agreement = spearman_rho(&disagreement.agreement, &feature.values, n_tests)?;
    let disagreement_coefficient = -agreement.coefficient;
    Ok(ThirdOrderReport {
        pair_label: disagreement.label.clone(),
        feature_name: feature.name.clone(),
        agreement,
        disagreement_coefficient,
    })
}

/// Band assignment for a same-model layer pair with 1-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerGroup {
    Low,
    Middle,
    High,
    Out,
    Excluded,
}

impl fmt::Display for LayerGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerGroup::Low => write!(f, "low"),
            LayerGroup::Middle => write!(f, "middle"),
            LayerGroup::High => write!(f, "high"),
            LayerGroup::Out => write!(f, "out"),
            LayerGroup::Excluded => write!(f, "excluded"),
        }
    }
}

/// Split `n_layers` into three equal bands (low/middle/high). A pair with
/// both indices inside one band takes that band; otherwise it is `Out`
/// when |i−j| exceeds band_size − 1, else `Excluded` (straddles bands but
/// is not far apart — the published rules leave this case unnamed).
pub fn assign_layer_group(i: usize, j: usize, n_layers: usize) -> Result<LayerGroup> {
    if n_layers < 3 || n_layers % 3 != 0 {
        return Err(Error::Invalid(format!(
            "layer grouping needs a layer count divisible by 3, got {n_layers}"
        )));
    }
    for idx in [i, j] {
        if idx < 1 || idx > n_layers {
            return Err(Error::LayerOutOfRange {
                index: idx,
                n_layers,
            });
        }
    }
    if i == j {
        return Err(Error::Invalid(format!("degenerate layer pair {i}-{j}")));
    }
    let band = n_layers / 3;
    let band_of = |idx: usize| (idx - 1) / band;
    if band_of(i) == band_of(j) {
        return Ok(match band_of(i) {
            0 => LayerGroup::Low,
            1 => LayerGroup::Middle,
            _ => LayerGroup::High,
        });
    }
    if i.abs_diff(j) > band - 1 {
        Ok(LayerGroup::Out)
    } else {
        Ok(LayerGroup::Excluded)
    }
}

#[derive(Debug, Clone)]
pub struct GroupSummary {
    pub group: LayerGroup,
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
}

#[derive(Debug, Clone)]
pub struct GroupAnova {
    pub table: AnovaTable,
    pub groups: Vec<GroupSummary>,
}

/// ANOVA of per-pair correlations with band group and adjacency as the
/// two factors. Excluded pairs are dropped before the analysis.
pub fn group_anova(values: &[f64], pairs: &[(usize, usize)], n_layers: usize) -> Result<GroupAnova> {
    if values.len() != pairs.len() {
        return Err(Error::DimensionMismatch {
            expected: pairs.len(),
            got: values.len(),
        });
    }
    let mut kept_values = Vec::new();
    let mut factor_group = Vec::new();
    let mut factor_adjacency = Vec::new();
    let mut kept_groups = Vec::new();
    for (&v, &(i, j)) in values.iter().zip(pairs) {
        let group = assign_layer_group(i, j, n_layers)?;
        if group == LayerGroup::Excluded {
            continue;
        }
        kept_values.push(v);
        factor_group.push(group.to_string());
        factor_adjacency.push(if i.abs_diff(j) == 1 { "adjacent" } else { "non-adjacent" }.to_string());
        kept_groups.push(group);
    }
    let mut table = anova_two_way(&kept_values, &factor_group, &factor_adjacency)?;
    for term in &mut table.terms {
        term.name = match term.name.as_str() {
            "A" => "group".to_string(),
            "B" => "adjacency".to_string(),
            "A:B" => "group:adjacency".to_string(),
            other => other.to_string(),
        };
    }

    let mut groups = Vec::new();
    for group in [LayerGroup::Low, LayerGroup::Middle, LayerGroup::High, LayerGroup::Out] {
        let members: Vec<f64> = kept_values
            .iter()
            .zip(&kept_groups)
            .filter(|(_, g)| **g == group)
            .map(|(v, _)| *v)
            .collect();
        if members.is_empty() {
            continue;
        }
        let n = members.len();
        let mean = members.iter().sum::<f64>() / n as f64;
        let var = members.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        groups.push(GroupSummary {
            group,
            n,
            mean,
            stddev: var.sqrt(),
        });
    }
    Ok(GroupAnova { table, groups })
}

/// Symmetric n_layers×n_layers grid of per-pair coefficients; the diagonal
/// is empty. Exactly one report per unordered pair is required.
pub fn heatmap_grid(
    reports: &[((usize, usize), f64)],
    n_layers: usize,
) -> Result<Vec<Vec<Option<f64>>>> {
    let mut grid = vec![vec![None; n_layers]; n_layers];
    for &((i, j), value) in reports {
        for idx in [i, j] {
            if idx < 1 || idx > n_layers {
                return Err(Error::LayerOutOfRange {
                    index: idx,
                    n_layers,
                });
            }
        }
        if i == j {
            return Err(Error::Invalid(format!("self pair {i}-{j} in heatmap input")));
        }
        if grid[i - 1][j - 1].is_some() {
            return Err(Error::Invalid(format!("duplicate pair {i}-{j}")));
        }
        grid[i - 1][j - 1] = Some(value);
        grid[j - 1][i - 1] = Some(value);
    }
    for i in 0..n_layers {
        for j in (i + 1)..n_layers {
            if grid[i][j].is_none() {
                return Err(Error::MissingPair { i: i + 1, j: j + 1 });
            }
        }
    }
    Ok(grid)
}
