//! Dissimilarity measures and first-order RDM construction.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::condition::ConditionSet;
use crate::error::{Error, Result};
use crate::ingest::ActivityMatrix;
use crate::linalg;

/// Centered-norm threshold below which a vector counts as constant.
pub const CONSTANT_NORM_THRESHOLD: f64 = 1e-12;

/// Fallback dissimilarity for pairs involving a constant vector, the
/// expected correlation distance under independence.
pub const CONSTANT_FALLBACK_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DissimilarityMeasure {
    Correlation,
    Euclidean,
    Mahalanobis,
}

impl fmt::Display for DissimilarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DissimilarityMeasure::Correlation => write!(f, "correlation"),
            DissimilarityMeasure::Euclidean => write!(f, "euclidean"),
            DissimilarityMeasure::Mahalanobis => write!(f, "mahalanobis"),
        }
    }
}

impl FromStr for DissimilarityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlation" => Ok(DissimilarityMeasure::Correlation),
            "euclidean" => Ok(DissimilarityMeasure::Euclidean),
            "mahalanobis" => Ok(DissimilarityMeasure::Mahalanobis),
            other => Err(Error::Invalid(format!("unknown measure `{other}`"))),
        }
    }
}

/// N×N representational dissimilarity matrix: symmetric, zero diagonal.
#[derive(Debug, Clone)]
pub struct Rdm {
    pub conditions: Arc<ConditionSet>,
    pub measure: DissimilarityMeasure,
    data: Vec<f64>,
    /// Pairs that fell back to the constant-vector distance.
    pub flagged_pairs: Vec<(usize, usize)>,
}

impl Rdm {
    /// Wrap an existing matrix, validating the type invariants.
    pub fn from_matrix(
        conditions: Arc<ConditionSet>,
        measure: DissimilarityMeasure,
        data: Vec<f64>,
    ) -> Result<Self> {
        let n = conditions.len();
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::Invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let v = data[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Invalid(format!("invalid dissimilarity at ({i},{j})")));
                }
                if v != data[j * n + i] {
                    return Err(Error::Invalid(format!("asymmetry at ({i},{j})")));
                }
                if measure == DissimilarityMeasure::Correlation && v > 2.0 {
                    return Err(Error::Invalid(format!(
                        "correlation distance {v} out of [0,2] at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Rdm {
            conditions,
            measure,
            data,
            flagged_pairs: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.conditions.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.data[i * n..(i + 1) * n]
    }

    /// Row `i` with the self-comparison cell removed.
    pub fn row_without_self(&self, i: usize) -> Vec<f64> {
        let row = self.row(i);
        let mut out = Vec::with_capacity(row.len() - 1);
        out.extend_from_slice(&row[..i]);
        out.extend_from_slice(&row[i + 1..]);
        out
    }

    /// Strict upper triangle, row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.get(i, j));
            }
        }
        out
    }
}

/// Ridge-regularized sample covariance for the Mahalanobis distance.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate {
    pub dim: usize,
    pub ridge: f64,
    matrix: Vec<f64>,
    factor: Vec<f64>,
}

impl CovarianceEstimate {
    /// Identity covariance, under which Mahalanobis reduces to Euclidean.
    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        let factor = matrix.clone();
        CovarianceEstimate {
            dim,
            ridge: 0.0,
            matrix,
            factor,
        }
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }
}

/// 1 − Pearson correlation of mean-centered vectors, in [0, 2]. Pairs with
/// a constant vector get the fallback distance 1.0; `correlation_distance_flagged`
/// reports whether the fallback fired.
pub fn correlation_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    correlation_distance_flagged(a, b).map(|(d, _)| d)
}

pub fn correlation_distance_flagged(a: &[f64], b: &[f64]) -> Result<(f64, bool)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData(
            "correlation distance needs dimension >= 2".into(),
        ));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        dot += dx * dy;
        na += dx * dx;
        nb += dy * dy;
    }
    if na.sqrt() < CONSTANT_NORM_THRESHOLD || nb.sqrt() < CONSTANT_NORM_THRESHOLD {
        return Ok((CONSTANT_FALLBACK_DISTANCE, true));
    }
    // (na·nb).sqrt() keeps identical vectors at distance exactly 0
    let d = 1.0 - dot / (na * nb).sqrt();
    Ok((d.clamp(0.0, 2.0), false))
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// sqrt((a−b)ᵀ Σ⁻¹ (a−b)) through the Cholesky factor of Σ: with Σ = LLᵀ
/// the distance is ‖L⁻¹(a−b)‖₂, so no explicit inverse is formed.
pub fn mahalanobis_distance(a: &[f64], b: &[f64], cov: &CovarianceEstimate) -> Result<f64> {
    if a.len() != b.len() || a.len() != cov.dim {
        return Err(Error::DimensionMismatch {
            expected: cov.dim,
            got: if a.len() != cov.dim { a.len() } else { b.len() },
        });
    }
    let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    linalg::solve_lower(cov.dim, &cov.factor, &mut d);
    Ok(d.iter().map(|z| z * z).sum::<f64>().sqrt())
}

/// Sample covariance of the matrix rows (denominator N−1) with
/// ridge·trace/H added to the diagonal. When the raw covariance is all
/// zero (identical rows) the trace scale falls back to 1 so the ridge
/// still produces a positive-definite estimate.
pub fn estimate_covariance(matrix: &ActivityMatrix, ridge: f64) -> Result<CovarianceEstimate> {
    let n = matrix.data.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "covariance estimation needs N >= 2".into(),
        ));
    }
    let h = matrix.dim();
    let mut mean = vec![0.0; h];
    for row in &matrix.data {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![0.0; h * h];
    for row in &matrix.data {
        for i in 0..h {
            let di = row[i] - mean[i];
            for j in 0..=i {
                cov[i * h + j] += di * (row[j] - mean[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..h {
        for j in 0..=i {
            cov[i * h + j] /= denom;
            cov[j * h + i] = cov[i * h + j];
        }
    }
    let trace: f64 = (0..h).map(|i| cov[i * h + i]).sum();
    let scale = if trace > 0.0 { trace / h as f64 } else { 1.0 };
    for i in 0..h {
        cov[i * h + i] += ridge * scale;
    }
    let factor = linalg::cholesky(h, &cov).ok_or(Error::SingularCovariance)?;
    // A pivot tiny relative to the largest variance means the matrix is
    // numerically rank-deficient even if the factorization went through.
    let max_diag = (0..h).map(|i| cov[i * h + i]).fold(0.0f64, f64::max);
    if (0..h).any(|i| {
        let p = factor[i * h + i];
        p * p <= 1e-12 * max_diag
    }) {
        return Err(Error::SingularCovariance);
    }
    Ok(CovarianceEstimate {
        dim: h,
        ridge,
        matrix: cov,
        factor,
    })
}

/// Pairwise dissimilarities over the rows of an activity matrix. The upper
/// triangle is computed once (in parallel) and mirrored; the diagonal is
/// exactly 0.
pub fn build_rdm(
    matrix: &ActivityMatrix,
    measure: DissimilarityMeasure,
    cov: Option<&CovarianceEstimate>,
) -> Result<Rdm> {
    let n = matrix.data.len();
    if n != matrix.conditions.len() {
        return Err(Error::ConditionSetMismatch);
    }
    if measure == DissimilarityMeasure::Mahalanobis && cov.is_none() {
        return Err(Error::Invalid(
            "mahalanobis measure requires a covariance estimate".into(),
        ));
    }
    let h = matrix.dim();
    for row in &matrix.data {
        if row.len() != h {
            return Err(Error::DimensionMismatch {
                expected: h,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
    }

    // For the correlation measure, center rows and cache squared norms
    // once, so each cell is a dot product plus one sqrt. Keeping the
    // (na·nb).sqrt() form makes identical rows land at distance exactly 0.
    let prepared: Option<Vec<(Vec<f64>, f64, bool)>> = match measure {
        DissimilarityMeasure::Correlation => Some(
            matrix
                .data
                .iter()
                .map(|row| {
                    let mean = row.iter().sum::<f64>() / h as f64;
                    let centered: Vec<f64> = row.iter().map(|v| v - mean).collect();
                    let norm_sq = centered.iter().map(|v| v * v).sum::<f64>();
                    let constant = norm_sq.sqrt() < CONSTANT_NORM_THRESHOLD;
                    (centered, norm_sq, constant)
                })
                .collect(),
        ),
        _ => None,
    };

    let rows: Vec<(Vec<f64>, Vec<(usize, usize)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut out = vec![0.0; n];
            let mut flagged = Vec::new();
            for j in (i + 1)..n {
                let d = match measure {
                    DissimilarityMeasure::Correlation => {
                        let prepared = prepared.as_ref().unwrap();
                        let (ref a, na, ca) = prepared[i];
                        let (ref b, nb, cb) = prepared[j];
                        if ca || cb {
                            flagged.push((i, j));
                            CONSTANT_FALLBACK_DISTANCE
                        } else {
                            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                            (1.0 - dot / (na * nb).sqrt()).clamp(0.0, 2.0)
                        }
                    }
                    DissimilarityMeasure::Euclidean => {
                        euclidean_distance(&matrix.data[i], &matrix.data[j])?
                    }
                    DissimilarityMeasure::Mahalanobis => {
                        mahalanobis_distance(&matrix.data[i], &matrix.data[j], cov.unwrap())?
                    }
                };
                out[j] = d;
            }
            Ok((out, flagged))
        })
        .collect::<Result<_>>()?;

    let mut data = vec![0.0; n * n];
    let mut flagged_pairs = Vec::new();
    for (i, (row, flagged)) in rows.into_iter().enumerate() {
        for j in (i + 1)..n {
            data[i * n + j] = row[j];
            data[j * n + i] = row[j];
        }
        flagged_pairs.extend(flagged);
    }
    Ok(Rdm {
        conditions: Arc::clone(&matrix.conditions),
        measure,
        data,
        flagged_pairs,
    })
}
