//! Nonparametric comparison battery: the Friedman test with the
//! Iman-Davenport amendment, the Bonferroni-Dunn post hoc, the Wilcoxon
//! signed-rank test, and the counting sign test.

pub mod dist;

pub use dist::{erf, erfc, f_cdf, ln_gamma, normal_cdf, reg_inc_beta};

use crate::error::{Error, Result};
use crate::evaluate::{rank_row_asc, RankMatrix};

/// Outcome of a statistical test.
///
/// `p_value` is `None` for tests whose published decision rule is a direct
/// threshold comparison rather than a p-value (the sign test here).
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub significant: bool,
    pub alpha: f64,
}

/// Friedman test with the Iman-Davenport amendment.
///
/// From column mean ranks `R_j` over `N` rows and `M` columns:
/// `chi2_F = 12N/(M(M+1)) (sum R_j^2 - M(M+1)^2/4)` and
/// `F_F = (N-1) chi2_F / (N(M-1) - chi2_F)`, which follows the F
/// distribution with `(M-1)` and `(M-1)(N-1)` degrees of freedom.
pub fn friedman_iman_davenport(ranks: &RankMatrix, alpha: f64) -> Result<TestResult> {
    let n = ranks.n_rows() as f64;
    let m = ranks.n_cols() as f64;
    if ranks.n_rows() < 2 {
        return Err(Error::InvalidParameter(
            "friedman needs at least 2 rows".into(),
        ));
    }
    if ranks.n_cols() < 3 {
        return Err(Error::InvalidParameter(
            "friedman needs at least 3 columns".into(),
        ));
    }
    let mean_ranks = ranks.mean_ranks();
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let chi2 = 12.0 * n / (m * (m + 1.0)) * (sum_sq - m * (m + 1.0).powi(2) / 4.0);
    let denom = n * (m - 1.0) - chi2;
    if denom.abs() < 1e-12 {
        return Err(Error::Degenerate(format!(
            "iman-davenport denominator N(M-1) - chi2 vanished \
             (N={n}, M={m}, chi2={chi2}); the rows agree perfectly"
        )));
    }
    let f_stat = (n - 1.0) * chi2 / denom;
    let d1 = m - 1.0;
    let d2 = (m - 1.0) * (n - 1.0);
    let p = 1.0 - f_cdf(f_stat, d1, d2);
    Ok(TestResult {
        statistic: f_stat,
        p_value: Some(p),
        significant: p < alpha,
        alpha,
    })
}

/// Bonferroni-Dunn post hoc: compares every column against the column at
/// `best_index` with `z = (R_best - R_j) / sqrt(M(M+1)/(6N))`, two-sided
/// normal p-values, and the per-comparison threshold `alpha/(M-1)`.
///
/// Returns `(column, result)` for every non-best column.
pub fn bonferroni_dunn(
    ranks: &RankMatrix,
    best_index: usize,
    alpha: f64,
) -> Result<Vec<(usize, TestResult)>> {
    let m = ranks.n_cols();
    if best_index >= m {
        return Err(Error::InvalidParameter(format!(
            "best column {best_index} out of {m}"
        )));
    }
    let n = ranks.n_rows() as f64;
    let mean_ranks = ranks.mean_ranks();
    let scale = (m as f64 * (m as f64 + 1.0) / (6.0 * n)).sqrt();
    let threshold = alpha / (m as f64 - 1.0);
    Ok((0..m)
        .filter(|&j| j != best_index)
        .map(|j| {
            let z = (mean_ranks[best_index] - mean_ranks[j]) / scale;
            let p = 2.0 * normal_cdf(-z.abs());
            (
                j,
                TestResult {
                    statistic: z,
                    p_value: Some(p),
                    significant: p < threshold,
                    alpha: threshold,
                },
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    OneSided,
    TwoSided,
}

/// Wilcoxon signed-rank test on paired observations, normal approximation.
///
/// Absolute differences are ranked ascending with shared ties; ranks of zero
/// differences split half to each side. `T = min(R+, R-)` and
/// `z = (T - N(N+1)/4) / sqrt(N(N+1)(2N+1)/24)`. Needs at least 5 pairs for
/// the approximation to mean anything.
pub fn wilcoxon_signed_rank(
    pairs: &[(f64, f64)],
    alpha: f64,
    sidedness: Sidedness,
) -> Result<TestResult> {
    let n = pairs.len();
    if n < 5 {
        return Err(Error::InvalidParameter(format!(
            "wilcoxon normal approximation needs >= 5 pairs, got {n}; \
             an exact test is out of scope"
        )));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(a, b)| a - b).collect();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    // rank_row_asc gives rank 1 to the LARGEST value; negate for ascending.
    let neg: Vec<f64> = abs.iter().map(|a| -a).collect();
    let ranks = rank_row_asc(&neg);

    let mut r_plus = 0.0;
    let mut r_minus = 0.0;
    for (d, r) in diffs.iter().zip(&ranks) {
        if *d > 0.0 {
            r_plus += r;
        } else if *d < 0.0 {
            r_minus += r;
        } else {
            r_plus += r / 2.0;
            r_minus += r / 2.0;
        }
    }
    let t = r_plus.min(r_minus);
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt();
    let z = (t - mean) / sd;
    let p = match sidedness {
        Sidedness::OneSided => normal_cdf(z),
        Sidedness::TwoSided => 2.0 * normal_cdf(-z.abs()),
    };
    Ok(TestResult {
        statistic: z,
        p_value: Some(p),
        significant: p < alpha,
        alpha,
    })
}

/// One-tailed counting sign test at significance 0.05: with `N` comparisons
/// in total (ties included), the first method is significantly better when
/// `wins > N/2 + 1.96 sqrt(N/2)`.
pub fn sign_test(wins: usize, ties: usize, losses: usize) -> TestResult {
    let n = (wins + ties + losses) as f64;
    let threshold = n / 2.0 + 1.96 * (n / 2.0).sqrt();
    TestResult {
        statistic: wins as f64,
        p_value: None,
        significant: wins as f64 > threshold,
        alpha: 0.05,
    }
}

/// Decision threshold of [`sign_test`] for `n` comparisons.
pub fn sign_test_threshold(n: usize) -> f64 {
    let n = n as f64;
    n / 2.0 + 1.96 * (n / 2.0).sqrt()
}
