//! Medians and the two-sided Wilcoxon rank-sum (Mann-Whitney U) test.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// p-values below this count as significant.
pub const SIGNIFICANCE: f64 = 0.05;

/// Both samples at most this large (and tie-free) get the exact null distribution.
pub const EXACT_MAX_SIZE: usize = 10;

/// Median; the mean of the two central order statistics for even lengths.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median of no values"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankSumMethod {
    Exact,
    NormalApprox,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSumResult {
    /// U of the first sample: the number of pairs (a_i, b_j) with a_i > b_j, ties counting 1/2.
    pub u_statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    pub method: RankSumMethod,
    /// Every value of both samples is identical.
    pub degenerate: bool,
}

/// Midranks (1-based) of `values`, plus the tie-correction sum of t^3 - t.
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        let t = (end - start) as f64;
        tie_sum += t * t * t - t;
        start = end;
    }
    (ranks, tie_sum)
}

/// Number of orderings of `n` + `m` distinct values giving each U of the first
/// sample: `counts[u]` for `u` in `0..=n*m`.
pub fn exact_u_counts(n: usize, m: usize) -> Vec<u64> {
    // f[i][j][u]: arrangements of i a-values and j b-values with U = u.
    // Placing the largest element: if it is an a-value it beats all j b-values.
    let mut f = vec![vec![Vec::<u64>::new(); m + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=m {
            let mut row = vec![0u64; i * j + 1];
            if i == 0 || j == 0 {
                row[0] = 1;
            } else {
                for (u, slot) in row.iter_mut().enumerate() {
                    let from_a = if u >= j { f[i - 1][j].get(u - j).copied().unwrap_or(0) } else { 0 };
                    let from_b = f[i][j - 1].get(u).copied().unwrap_or(0);
                    *slot = from_a + from_b;
                }
            }
            f[i][j] = row;
        }
    }
    std::mem::take(&mut f[n][m])
}

/// Two-sided Mann-Whitney test. Small tie-free samples use the exact null
/// distribution, everything else the tie-corrected normal approximation.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> Result<RankSumResult> {
    rank_sum(a, b, true)
}

/// The tie-corrected normal approximation with continuity correction, even
/// where the exact distribution would be used.
pub fn rank_sum_test_normal(a: &[f64], b: &[f64]) -> Result<RankSumResult> {
    rank_sum(a, b, false)
}

fn rank_sum(a: &[f64], b: &[f64], allow_exact: bool) -> Result<RankSumResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("rank-sum samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Config("rank-sum samples contain NaN".into()));
    }
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_sum) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..n].iter().sum();
    let u = rank_sum_a - (n * (n + 1)) as f64 / 2.0;

    if pooled.iter().all(|&v| v == pooled[0]) {
        return Ok(RankSumResult {
            u_statistic: u,
            p_value: 1.0,
            method: RankSumMethod::NormalApprox,
            degenerate: true,
        });
    }

    if allow_exact && n <= EXACT_MAX_SIZE && m <= EXACT_MAX_SIZE && tie_sum == 0.0 {
        let counts = exact_u_counts(n, m);
        let total: u64 = counts.iter().sum();
        let u_int = u.round() as usize;
        let lower: u64 = counts[..=u_int].iter().sum();
        let upper: u64 = counts[u_int..].iter().sum();
        let p = (2.0 * lower.min(upper) as f64 / total as f64).min(1.0);
        return Ok(RankSumResult { u_statistic: u, p_value: p, method: RankSumMethod::Exact, degenerate: false });
    }

    let (nf, mf) = (n as f64, m as f64);
    let big_n = nf + mf;
    let mean = nf * mf / 2.0;
    let var = nf * mf / 12.0 * ((big_n + 1.0) - tie_sum / (big_n * (big_n - 1.0)));
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = erfc(z / std::f64::consts::SQRT_2).min(1.0);
    Ok(RankSumResult { u_statistic: u, p_value: p, method: RankSumMethod::NormalApprox, degenerate: false })
}

/// Outcome of comparing a strategy against the baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline_median: f64,
    pub candidate_median: f64,
    pub test: RankSumResult,
    pub significant: bool,
    /// Significant and the candidate's median error is lower.
    pub improved: bool,
}

pub fn compare_to_baseline(baseline: &[f64], candidate: &[f64]) -> Result<Comparison> {
    let test = rank_sum_test(candidate, baseline)?;
    let baseline_median = median(baseline)?;
    let candidate_median = median(candidate)?;
    let significant = test.p_value < SIGNIFICANCE;
    Ok(Comparison {
        baseline_median,
        candidate_median,
        test,
        significant,
        improved: significant && candidate_median < baseline_median,
    })
}
