//! Two-way analysis of variance with Type II sums of squares on possibly
//! unbalanced designs, via least-squares model comparisons under effects
//! coding.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::least_squares_rss;
use crate::special::f_sf;

#[derive(Debug, Clone)]
pub struct AnovaTerm {
    pub name: String,
    pub ss: f64,
    pub df: usize,
    pub ms: f64,
    /// `None` when the residual mean square is zero (constant data).
    pub f: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AnovaTable {
    pub terms: Vec<AnovaTerm>,
    pub residual: AnovaTerm,
    /// Σ(y − ȳ)², reported as the total row.
    pub total_ss: f64,
    pub total_df: usize,
    pub warnings: Vec<String>,
}

/// Effects-coded columns for one factor: level k of K maps to the K−1
/// indicator columns, with the last level coded −1 throughout.
fn effect_columns(level: usize, n_levels: usize, out: &mut Vec<f64>) {
    for c in 0..n_levels - 1 {
        if level == n_levels - 1 {
            out.push(-1.0);
        } else if level == c {
            out.push(1.0);
        } else {
            out.push(0.0);
        }
    }
}

struct Design {
    n: usize,
    levels_a: Vec<String>,
    levels_b: Vec<String>,
    a_idx: Vec<usize>,
    b_idx: Vec<usize>,
}

impl Design {
    /// Row-major design matrix with the requested term blocks.
    fn build(&self, with_a: bool, with_b: bool, with_ab: bool) -> (usize, Vec<f64>) {
        let ka = self.levels_a.len();
        let kb = self.levels_b.len();
        let n_cols = 1
            + if with_a { ka - 1 } else { 0 }
            + if with_b { kb - 1 } else { 0 }
            + if with_ab { (ka - 1) * (kb - 1) } else { 0 };
        let mut x = Vec::with_capacity(self.n * n_cols);
        for r in 0..self.n {
            x.push(1.0);
            let mut a_cols = Vec::new();
            let mut b_cols = Vec::new();
            effect_columns(self.a_idx[r], ka, &mut a_cols);
            effect_columns(self.b_idx[r], kb, &mut b_cols);
            if with_a {
                x.extend_from_slice(&a_cols);
            }
            if with_b {
                x.extend_from_slice(&b_cols);
            }
            if with_ab {
                for &a in &a_cols {
                    for &b in &b_cols {
                        x.push(a * b);
                    }
                }
            }
        }
        (n_cols, x)
    }
}

/// Type II two-way ANOVA. Each main effect is tested by comparing the
/// additive model against the model with that effect removed; the
/// interaction is fitted and tested only when every A×B cell is observed,
/// otherwise it is dropped with a warning.
pub fn anova_two_way(values: &[f64], factor_a: &[String], factor_b: &[String]) -> Result<AnovaTable> {
    let n = values.len();
    if factor_a.len() != n || factor_b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: factor_a.len().min(factor_b.len()),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let levels_a: Vec<String> = factor_a.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let levels_b: Vec<String> = factor_b.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if levels_a.len() < 2 {
        return Err(Error::DegenerateFactor { name: "A".into() });
    }
    if levels_b.len() < 2 {
        return Err(Error::DegenerateFactor { name: "B".into() });
    }
    let a_idx: Vec<usize> = factor_a
        .iter()
        .map(|l| levels_a.iter().position(|x| x == l).unwrap())
        .collect();
    let b_idx: Vec<usize> = factor_b
        .iter()
        .map(|l| levels_b.iter().position(|x| x == l).unwrap())
        .collect();
    let design = Design {
        n,
        levels_a,
        levels_b,
        a_idx,
        b_idx,
    };

    let ka = design.levels_a.len();
    let kb = design.levels_b.len();
    let mut warnings = Vec::new();

    let mut cells = vec![false; ka * kb];
    for r in 0..n {
        cells[design.a_idx[r] * kb + design.b_idx[r]] = true;
    }
    let with_interaction = cells.iter().all(|&c| c);
    if !with_interaction {
        warnings.push("interaction dropped: empty A×B cell".to_string());
    }

    let fit = |with_a: bool, with_b: bool, with_ab: bool| -> Result<f64> {
        let (cols, x) = design.build(with_a, with_b, with_ab);
        least_squares_rss(n, cols, &x, values)
            .ok_or_else(|| Error::Invalid("collinear design matrix".into()))
    };

    let rss_ab = fit(true, true, false)?;
    let rss_a = fit(true, false, false)?;
    let rss_b = fit(false, true, false)?;
    let rss_null = fit(false, false, false)?;

    let (rss_full, df_model_full) = if with_interaction {
        (
            fit(true, true, true)?,
            (ka - 1) + (kb - 1) + (ka - 1) * (kb - 1),
        )
    } else {
        (rss_ab, (ka - 1) + (kb - 1))
    };

    if n <= df_model_full + 1 {
        return Err(Error::NoResidualDf);
    }
    let df_res = n - df_model_full - 1;
    let ms_res = rss_full / df_res as f64;
    // Treat residual variance at rounding-noise level as zero so constant
    // data reports undefined F rather than a meaningless huge ratio.
    let scale = values.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let ms_res_is_zero = ms_res <= 1e-18 * scale.max(1.0);

    let mut terms = Vec::new();
    let mut push_term = |name: &str, ss: f64, df: usize| {
        let ss = ss.max(0.0);
        let ms = ss / df as f64;
        let (f, p) = if !ms_res_is_zero {
            let f = ms / ms_res;
            (Some(f), Some(f_sf(f, df as f64, df_res as f64)))
        } else {
            (None, None)
        };
        terms.push(AnovaTerm {
            name: name.to_string(),
            ss,
            df,
            ms,
            f,
            p,
        });
    };

    push_term("A", rss_b - rss_ab, ka - 1);
    push_term("B", rss_a - rss_ab, kb - 1);
    if with_interaction {
        push_term("A:B", rss_ab - rss_full, (ka - 1) * (kb - 1));
    }

    let residual = AnovaTerm {
        name: "residual".to_string(),
        ss: rss_full,
        df: df_res,
        ms: ms_res,
        f: None,
        p: None,
    };

    Ok(AnovaTable {
        terms,
        residual,
        total_ss: rss_null,
        total_df: n - 1,
        warnings,
    })
}
