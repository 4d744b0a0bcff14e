//! Rank-based and parametric correlation statistics: fractional ranking,
//! Pearson r, Spearman ρ with t-approximation p-values, Kendall τ_A with
//! O(n log n) inversion counting, and Bonferroni adjustment.

use std::fmt;

use crate::error::{Error, Result};
use crate::ingest::pairwise_sum;
use crate::rng;
use crate::special::inc_beta_reg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spearman,
    KendallA,
    Pearson,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Spearman => write!(f, "spearman"),
            Method::KendallA => write!(f, "kendall_a"),
            Method::Pearson => write!(f, "pearson"),
        }
    }
}

/// One correlation result with raw and Bonferroni-adjusted p-values.
#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub coefficient: f64,
    pub n: usize,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub n_tests: usize,
    pub method: Method,
}

fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        Err(Error::NonFinite)
    } else {
        Ok(())
    }
}

fn check_same_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        })
    } else {
        Ok(())
    }
}

/// Fractional (average) 1-based ranks; tied values share the mean of their
/// rank span.
pub fn rank_with_ties(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InsufficientData("empty input to ranking".into()));
    }
    check_finite(values)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j hold the same value; mean rank of the span
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    Ok(ranks)
}

/// Pearson correlation of two equal-length vectors.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    check_same_len(x, y)?;
    if x.len() < 2 {
        return Err(Error::InsufficientData("pearson needs n >= 2".into()));
    }
    check_finite(x)?;
    check_finite(y)?;
    let n = x.len() as f64;
    let mx = pairwise_sum(x) / n;
    let my = pairwise_sum(y) / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::ConstantInput);
    }
    // (sxx·syy).sqrt() rather than sqrt·sqrt: keeps r exactly ±1 when the
    // centered vectors are identical up to sign
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Upper-tail probability of Student's t with `df` degrees of freedom,
/// through the regularized incomplete beta with x = df/(df + t²).
pub fn student_t_sf(t: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::InsufficientData("t distribution needs df >= 1".into()));
    }
    let v = df as f64;
    let x = v / (v + t * t);
    let tail = 0.5 * inc_beta_reg(v / 2.0, 0.5, x);
    Ok(if t >= 0.0 { tail } else { 1.0 - tail })
}

/// Bonferroni adjustment: n_tests · p, clamped to 1.
pub fn bonferroni(p_raw: f64, n_tests: usize) -> f64 {
    (p_raw * n_tests as f64).min(1.0)
}

/// Spearman's ρ with a two-sided p-value from the t approximation
/// t = ρ·sqrt((n−2)/(1−ρ²)) on n−2 degrees of freedom.
pub fn spearman_rho(x: &[f64], y: &[f64], n_tests: usize) -> Result<CorrelationReport> {
    check_same_len(x, y)?;
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData("spearman needs n >= 3".into()));
    }
    let rx = rank_with_ties(x)?;
    let ry = rank_with_ties(y)?;
    let rho = match pearson_r(&rx, &ry) {
        Err(Error::ConstantInput) => return Err(Error::ZeroRankVariance),
        other => other?,
    };
    let p_raw = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * ((n as f64 - 2.0) / (1.0 - rho * rho)).sqrt();
        (2.0 * student_t_sf(t.abs(), n - 2)?).min(1.0)
    };
    Ok(CorrelationReport {
        coefficient: rho,
        n,
        p_raw,
        p_adjusted: bonferroni(p_raw, n_tests),
        n_tests,
        method: Method::Spearman,
    })
}

/// Seeded permutation p-value for Spearman's ρ (two-sided): the fraction of
/// `draws` shuffles of y whose |ρ| reaches the observed one.
pub fn spearman_p_permutation(x: &[f64], y: &[f64], draws: usize, seed: u64) -> Result<f64> {
    let observed = spearman_rho(x, y, 1)?.coefficient.abs();
    let mut shuffled = y.to_vec();
    let mut hits = 0usize;
    for d in 0..draws {
        // Fisher-Yates driven by the counter generator
        for i in (1..shuffled.len()).rev() {
            let j = (rng::draw(seed, 0x5045_524D, d, i) % (i as u64 + 1)) as usize;
            shuffled.swap(i, j);
        }
        if let Ok(report) = spearman_rho(x, &shuffled, 1) {
            if report.coefficient.abs() >= observed - 1e-15 {
                hits += 1;
            }
        }
    }
    // add-one rule keeps the estimate away from an impossible exact zero
    Ok((hits + 1) as f64 / (draws + 1) as f64)
}

/// Net concordance C − D of Kendall's τ: concordant minus discordant pairs,
/// ties counting toward neither. O(n log n) by sorting on x and counting
/// inversions of y with a merge sort (Knight's algorithm).
pub fn kendall_net_concordance(x: &[f64], y: &[f64]) -> Result<i64> {
    check_same_len(x, y)?;
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData("kendall needs n >= 2".into()));
    }
    check_finite(x)?;
    check_finite(y)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap()
            .then(y[a].partial_cmp(&y[b]).unwrap())
    });

    // pairs tied in x, and tied in both x and y
    let mut ties_x: i64 = 0;
    let mut ties_xy: i64 = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        let mut k = i;
        while j + 1 < n && x[order[j + 1]] == x[order[i]] {
            j += 1;
            if y[order[j]] == y[order[k]] {
                // extend the current (x, y) run
            } else {
                let run = (j - k) as i64;
                ties_xy += run * (run - 1) / 2;
                k = j;
            }
        }
        let run_x = (j - i + 1) as i64;
        ties_x += run_x * (run_x - 1) / 2;
        let run = (j - k + 1) as i64;
        ties_xy += run * (run - 1) / 2;
        i = j + 1;
    }

    // pairs tied in y
    let mut ys: Vec<f64> = y.to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ties_y: i64 = 0;
    let mut i = 0;
    while i < ys.len() {
        let mut j = i;
        while j + 1 < ys.len() && ys[j + 1] == ys[i] {
            j += 1;
        }
        let run = (j - i + 1) as i64;
        ties_y += run * (run - 1) / 2;
        i = j + 1;
    }

    // inversions of y in x-order = discordant pairs (strict on both axes)
    let mut seq: Vec<f64> = order.iter().map(|&idx| y[idx]).collect();
    let mut buf = vec![0.0; n];
    let discordant = merge_count(&mut seq, &mut buf) as i64;

    let total = (n as i64) * (n as i64 - 1) / 2;
    let concordant = total - ties_x - ties_y + ties_xy - discordant;
    Ok(concordant - discordant)
}

fn merge_count(seq: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = seq.len();
    if n <= 1 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (left, right) = seq.split_at_mut(mid);
        merge_count(left, &mut buf[..mid]) + merge_count(right, &mut buf[mid..])
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            buf[k] = seq[i];
            i += 1;
        } else {
            // seq[i] > seq[j]: everything left in the first half inverts with seq[j]
            inv += (mid - i) as u64;
            buf[k] = seq[j];
            j += 1;
        }
        k += 1;
    }
    while i < mid {
        buf[k] = seq[i];
        i += 1;
        k += 1;
    }
    while j < n {
        buf[k] = seq[j];
        j += 1;
        k += 1;
    }
    seq.copy_from_slice(&buf[..n]);
    inv
}

/// Kendall's τ_A: (C − D) / (n(n−1)/2). Tied pairs stay in the denominator.
pub fn kendall_tau_a(x: &[f64], y: &[f64]) -> Result<f64> {
    let net = kendall_net_concordance(x, y)?;
    let n = x.len() as i64;
    Ok(net as f64 / ((n * (n - 1) / 2) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_without_ties() {
        assert_eq!(rank_with_ties(&[10.0, 20.0, 30.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(rank_with_ties(&[5.0, 5.0, 7.0]).unwrap(), vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn ranks_match_sort_and_scan_oracle() {
        let values: Vec<f64> = (0..100)
            .map(|i| (rng::draw(19, 0, 0, i) % 20) as f64)
            .collect();
        let got = rank_with_ties(&values).unwrap();
        // oracle: rank of v = (# smaller) + (# equal + 1) / 2
        for (i, &v) in values.iter().enumerate() {
            let smaller = values.iter().filter(|&&w| w < v).count() as f64;
            let equal = values.iter().filter(|&&w| w == v).count() as f64;
            assert_eq!(got[i], smaller + (equal + 1.0) / 2.0);
        }
    }

    #[test]
    fn ranks_reject_non_finite() {
        assert!(matches!(
            rank_with_ties(&[1.0, f64::NAN]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn pearson_extremes() {
        let x = [1.0, 2.0, 4.0];
        assert_eq!(pearson_r(&x, &x).unwrap(), 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson_r(&x, &neg).unwrap(), -1.0);
        assert!(matches!(
            pearson_r(&x, &[2.0, 2.0, 2.0]),
            Err(Error::ConstantInput)
        ));
    }

    #[test]
    fn pearson_matches_loop_oracle() {
        let x: Vec<f64> = (0..50).map(|i| rng::gaussian(3, 0, 0, i)).collect();
        let y: Vec<f64> = (0..50).map(|i| rng::gaussian(3, 1, 0, i)).collect();
        let got = pearson_r(&x, &y).unwrap();
        let mx = x.iter().sum::<f64>() / 50.0;
        let my = y.iter().sum::<f64>() / 50.0;
        let num: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let dx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>().sqrt();
        let dy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum::<f64>().sqrt();
        assert!((got - num / (dx * dy)).abs() < 1e-12);
    }

    #[test]
    fn spearman_monotone() {
        let r = spearman_rho(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0], 1).unwrap();
        assert_eq!(r.coefficient, 1.0);
        let r = spearman_rho(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0], 1).unwrap();
        assert_eq!(r.coefficient, -1.0);
    }

    #[test]
    fn spearman_constant_errors() {
        assert!(matches!(
            spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], 1),
            Err(Error::ZeroRankVariance)
        ));
    }

    #[test]
    fn spearman_t_approximation_p() {
        // rho = 0.6 at n = 10 gives t = 2.1213, df = 8. The one-sided tail
        // 0.0333450558850701... is frozen from a 40-digit quadrature of the
        // t density (the acceptance suite re-derives it at lower precision).
        assert!((student_t_sf(2.1213, 8).unwrap() - 0.033345055885070113).abs() < 1e-9);
        // the report's p_raw must be exactly the two-sided formula value
        let x: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let y = [3.0, 1.0, 4.0, 2.0, 6.0, 5.0, 8.0, 7.0, 9.0, 10.0];
        let r = spearman_rho(&x, &y, 1).unwrap();
        let t = r.coefficient * ((r.n as f64 - 2.0) / (1.0 - r.coefficient * r.coefficient)).sqrt();
        let p = 2.0 * student_t_sf(t.abs(), r.n - 2).unwrap();
        assert_eq!(p.min(1.0), r.p_raw);
    }

    #[test]
    fn student_t_sf_basics() {
        for df in [1, 2, 8, 30] {
            assert!((student_t_sf(0.0, df).unwrap() - 0.5).abs() < 1e-14);
            assert!(student_t_sf(1e8, df).unwrap() < 1e-6);
            let t = 1.7;
            let s = student_t_sf(t, df).unwrap() + student_t_sf(-t, df).unwrap();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(student_t_sf(1.0, 0).is_err());
    }

    #[test]
    fn student_t_sf_cauchy_closed_form() {
        // df = 1 is Cauchy: sf(t) = 1/2 - atan(t)/pi
        for t in [-3.0f64, -0.5, 0.7, 4.2] {
            let expected = 0.5 - t.atan() / std::f64::consts::PI;
            assert!((student_t_sf(t, 1).unwrap() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn bonferroni_examples() {
        assert_eq!(bonferroni(0.001, 10), 0.01);
        assert_eq!(bonferroni(0.5, 10), 1.0);
        assert_eq!(bonferroni(0.123, 1), 0.123);
    }

    #[test]
    fn tau_a_basics() {
        assert_eq!(
            kendall_tau_a(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            1.0
        );
        assert_eq!(
            kendall_tau_a(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
    }

    #[test]
    fn tau_a_tie_convention() {
        // one tied pair in x stays in the denominator: (2 - 0) / 3
        let tau = kendall_tau_a(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(tau, 2.0 / 3.0);
    }

    /// O(n²) pair enumeration, the definitional oracle.
    fn tau_a_brute(x: &[f64], y: &[f64]) -> i64 {
        let mut net = 0i64;
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                let sx = (x[j] - x[i]).partial_cmp(&0.0).unwrap() as i64;
                let sy = (y[j] - y[i]).partial_cmp(&0.0).unwrap() as i64;
                let (sx, sy) = (sx.signum(), sy.signum());
                net += sx * sy;
            }
        }
        net
    }

    #[test]
    fn tau_a_matches_brute_force_with_ties() {
        for case in 0..50 {
            let n = 2 + (rng::draw(31, 0, case, 0) % 40) as usize;
            let x: Vec<f64> = (0..n).map(|i| (rng::draw(31, 1, case, i) % 8) as f64).collect();
            let y: Vec<f64> = (0..n).map(|i| (rng::draw(31, 2, case, i) % 8) as f64).collect();
            assert_eq!(
                kendall_net_concordance(&x, &y).unwrap(),
                tau_a_brute(&x, &y),
                "case {case} x={x:?} y={y:?}"
            );
        }
    }

    #[test]
    fn permutation_p_small_for_strong_monotone() {
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let p = spearman_p_permutation(&x, &x, 2000, 5).unwrap();
        assert!(p < 0.01, "p = {p}");
    }
}
