use serde::{Deserialize, Serialize};

use super::AnalysisError;

const TIE_TOLERANCE: f64 = 1e-12;

/// Pearson correlation; 0 when either sequence has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "pearson: length mismatch");
    let n = a.len() as f64;
    if a.is_empty() {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// `out[r][c] = pearson(rows[r], cols[c])`.
pub fn correlation_matrix(
    rows: &[Vec<f64>],
    cols: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>, AnalysisError> {
    let m = rows.first().or(cols.first()).map_or(0, Vec::len);
    if let Some(bad) = rows.iter().chain(cols).find(|s| s.len() != m) {
        return Err(AnalysisError::Shape(format!(
            "sequence of length {} among length {m}",
            bad.len()
        )));
    }
    Ok(rows
        .iter()
        .map(|r| cols.iter().map(|c| pearson(r, c)).collect())
        .collect())
}

/// One-to-one assignment of rows (sub-classifiers) to columns (weak
/// learners).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `(row, column)` pairs in increasing row order.
    pub pairs: Vec<(usize, usize)>,
    pub correlations: Vec<f64>,
    pub total: f64,
}

impl MatchResult {
    pub fn mean(&self) -> f64 {
        if self.pairs.is_empty() {
            0.0
        } else {
            self.total / self.pairs.len() as f64
        }
    }
}

/// Minimum-cost assignment of every row to a distinct column
/// (`rows ≤ cols`), shortest augmenting paths with potentials.
fn hungarian_min(cost: &[Vec<f64>], cols: usize) -> Vec<usize> {
    let n = cost.len();
    let m = cols;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Best total over the sub-matrix `rows × cols`, matching
/// `min(|rows|, |cols|)` pairs. Summed in row order.
fn best_total(matrix: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    if rows.len() <= cols.len() {
        let cost: Vec<Vec<f64>> = rows
            .iter()
            .map(|&r| cols.iter().map(|&c| -matrix[r][c]).collect())
            .collect();
        let a = hungarian_min(&cost, cols.len());
        rows.iter().zip(a).map(|(&r, j)| matrix[r][cols[j]]).sum()
    } else {
        let cost: Vec<Vec<f64>> = cols
            .iter()
            .map(|&c| rows.iter().map(|&r| -matrix[r][c]).collect())
            .collect();
        let a = hungarian_min(&cost, rows.len());
        let mut picked: Vec<(usize, usize)> =
            cols.iter().zip(a).map(|(&c, i)| (rows[i], c)).collect();
        picked.sort_unstable();
        picked.iter().map(|&(r, c)| matrix[r][c]).sum()
    }
}

/// Exact maximum-total-correlation matching of `min(rows, cols)` pairs.
/// Among optimal assignments (within 1e-12) the lexicographically smallest
/// sorted pair list wins: rows are fixed in order, each to the lowest
/// column that keeps the optimum reachable, or left unmatched when only
/// that does.
pub fn match_subclassifiers(matrix: &[Vec<f64>]) -> Result<MatchResult, AnalysisError> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(AnalysisError::Shape("ragged correlation matrix".into()));
    }
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(AnalysisError::Invalid(
            "correlation matrix has non-finite entries".into(),
        ));
    }
    let mut free_rows: Vec<usize> = (0..rows).collect();
    let mut free_cols: Vec<usize> = (0..cols).collect();
    let mut pairs = Vec::new();
    for r in 0..rows {
        if free_cols.is_empty() {
            break;
        }
        free_rows.retain(|&x| x != r);
        let with: Vec<f64> = (0..free_cols.len())
            .map(|k| {
                let mut rest = free_cols.clone();
                rest.remove(k);
                matrix[r][free_cols[k]] + best_total(matrix, &free_rows, &rest)
            })
            .collect();
        // Skipping `r` keeps the pair count only if enough rows remain.
        let without = (free_rows.len() >= free_cols.len())
            .then(|| best_total(matrix, &free_rows, &free_cols));
        let best = with
            .iter()
            .copied()
            .chain(without)
            .fold(f64::NEG_INFINITY, f64::max);
        if let Some(k) = with.iter().position(|&t| t >= best - TIE_TOLERANCE) {
            let c = free_cols.remove(k);
            pairs.push((r, c));
        }
    }
    let correlations: Vec<f64> = pairs.iter().map(|&(r, c)| matrix[r][c]).collect();
    let total = correlations.iter().sum();
    Ok(MatchResult {
        pairs,
        correlations,
        total,
    })
}
