//! Rank matrices and the two rank-aggregation procedures used to compare
//! flows and modalities across the experiment grid.

use crate::error::{Error, Result};

/// Rows of shared-tie ranks over the same set of columns.
///
/// Each row is a permutation of `1..=M` with ties sharing the mean of the
/// ranks they span, so every row sums to `M(M+1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    rows: Vec<Vec<f64>>,
}

impl RankMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::EmptyInput("rank matrix".into()));
        };
        let m = first.len();
        if m == 0 {
            return Err(Error::EmptyInput("rank matrix columns".into()));
        }
        let expect = (m * (m + 1)) as f64 / 2.0;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "rank row {i} has {} columns, expected {m}",
                    row.len()
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - expect).abs() > 1e-6 {
                return Err(Error::InvalidValue(format!(
                    "rank row {i} sums to {sum}, expected {expect}"
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Column mean ranks `R_j`.
    pub fn mean_ranks(&self) -> Vec<f64> {
        let n = self.n_rows() as f64;
        (0..self.n_cols())
            .map(|j| self.rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect()
    }
}

/// Ranks one row of values so the largest gets rank `M` and the smallest
/// rank 1; tied values share the mean of the ranks they span.
pub fn rank_row_desc(values: &[f64]) -> Vec<f64> {
    rank_row(values, true)
}

/// Ranks one row of values so the largest gets rank 1 (best-first
/// convention); tied values share.
pub fn rank_row_asc(values: &[f64]) -> Vec<f64> {
    rank_row(values, false)
}

fn rank_row(values: &[f64], high_is_m: bool) -> Vec<f64> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    // ascending by value; highest value ends up last
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share ranks i+1..=j+1
        let shared = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = if high_is_m {
                shared
            } else {
                (m + 1) as f64 - shared
            };
        }
        i = j + 1;
    }
    ranks
}

/// Flow ranking over an AUC table (rows = rule combinations, columns =
/// flows): per row the best flow gets rank `M`, the worst rank 1, ties
/// share. The per-flow score is its rank sum normalized by the maximum
/// achievable `rows * M`.
pub struct FlowRanking {
    pub ranks: RankMatrix,
    pub scores: Vec<f64>,
}

pub fn rank_flows(auc_table: &[Vec<f64>]) -> Result<FlowRanking> {
    let Some(first) = auc_table.first() else {
        return Err(Error::EmptyInput("auc table".into()));
    };
    let m = first.len();
    if auc_table.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("ragged auc table".into()));
    }
    let rows: Vec<Vec<f64>> = auc_table.iter().map(|r| rank_row_desc(r)).collect();
    let ranks = RankMatrix::new(rows)?;
    let n = ranks.n_rows() as f64;
    let scores = ranks
        .mean_ranks()
        .into_iter()
        .map(|r| r * n / (n * m as f64))
        .collect();
    Ok(FlowRanking { ranks, scores })
}

/// Per-modality contribution scores from a multimodal AUC table.
///
/// Per row the `S` multimodal flows are ranked 1..=S (best = S, ties
/// shared); every modality then accumulates the rank of each flow that
/// contains it. Scores are normalized by the highest accumulation a modality
/// could reach, i.e. its flows taking the top ranks in every row.
pub fn rank_unimodal_contribution(
    auc_table: &[Vec<f64>],
    subsets: &[Vec<usize>],
    n_modalities: usize,
) -> Result<Vec<f64>> {
    let s = subsets.len();
    if s < 2 {
        return Err(Error::InvalidParameter(
            "need at least two multimodal flows".into(),
        ));
    }
    if auc_table.is_empty() {
        return Err(Error::EmptyInput("auc table".into()));
    }
    if auc_table.iter().any(|r| r.len() != s) {
        return Err(Error::DimensionMismatch(format!(
            "auc table columns must match the {s} subsets"
        )));
    }
    for subset in subsets {
        if subset.iter().any(|&m| m >= n_modalities) {
            return Err(Error::InvalidParameter(
                "subset names a modality outside the declared range".into(),
            ));
        }
    }

    let mut accum = vec![0.0; n_modalities];
    for row in auc_table {
        let ranks = rank_row_desc(row);
        for (subset, rank) in subsets.iter().zip(&ranks) {
            for &m in subset {
                accum[m] += rank;
            }
        }
    }

    let scores = (0..n_modalities)
        .map(|m| {
            let k = subsets.iter().filter(|sub| sub.contains(&m)).count();
            if k == 0 {
                return 0.0;
            }
            // top-k tie-free ranks: S, S-1, ..., S-k+1
            let per_row_max: f64 = (0..k).map(|i| (s - i) as f64).sum();
            accum[m] / (auc_table.len() as f64 * per_row_max)
        })
        .collect();
    Ok(scores)
}
