//! Optimal one-to-one assignment (Hungarian method with row/column potentials).

use crate::num::Real;

/// Result of a gated assignment between rows (tracks) and columns (detections).
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
    /// Sum of matched costs, accumulated in row order.
    pub total_cost: T,
}

/// Minimum-cost perfect matching on a square matrix. Returns `col_of_row`.
///
/// O(n³) shortest augmenting path formulation; all entries must be finite.
pub fn solve_square<T: Real>(costs: &[Vec<T>]) -> Vec<usize> {
    let n = costs.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(costs.iter().all(|r| r.len() == n));

    // 1-based with a virtual column 0, as in the classic formulation.
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = costs[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] = u[row_of_col[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        if row_of_col[j] > 0 {
            col_of_row[row_of_col[j] - 1] = j - 1;
        }
    }
    col_of_row
}

/// Gated rectangular assignment.
///
/// Only pairs with `cost <= gate` may be matched. Among matchings built from
/// admissible pairs, the one with the most pairs wins, and ties in pair count
/// are broken by minimum total cost.
pub fn gated_assignment<T: Real>(costs: &[Vec<T>], n_cols: usize, gate: T) -> Assignment<T> {
    let n_rows = costs.len();
    debug_assert!(costs.iter().all(|r| r.len() == n_cols));
    let admissible = |c: T| c.is_finite() && c <= gate;

    let any_admissible = costs.iter().flatten().any(|&c| admissible(c));
    if !any_admissible {
        return Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..n_rows).collect(),
            unmatched_cols: (0..n_cols).collect(),
            total_cost: T::zero(),
        };
    }

    // Each non-matched slot costs more than any complete set of admissible
    // pairs, so maximising the pair count dominates the cost objective.
    let max_admissible = costs
        .iter()
        .flatten()
        .copied()
        .filter(|&c| admissible(c))
        .fold(T::zero(), T::max);
    let k = T::from_usize(n_rows.min(n_cols)).expect("size fits scalar") * max_admissible + T::one();

    let n = n_rows.max(n_cols);
    let square: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i < n_rows && j < n_cols && admissible(costs[i][j]) {
                        costs[i][j]
                    } else {
                        k
                    }
                })
                .collect()
        })
        .collect();
    let col_of_row = solve_square(&square);

    let mut pairs = Vec::new();
    let mut col_used = vec![false; n_cols];
    let mut row_used = vec![false; n_rows];
    let mut total = T::zero();
    for (i, &j) in col_of_row.iter().enumerate().take(n_rows) {
        if j < n_cols && admissible(costs[i][j]) {
            pairs.push((i, j));
            row_used[i] = true;
            col_used[j] = true;
            total = total + costs[i][j];
        }
    }
    Assignment {
        pairs,
        unmatched_rows: (0..n_rows).filter(|&i| !row_used[i]).collect(),
        unmatched_cols: (0..n_cols).filter(|&j| !col_used[j]).collect(),
        total_cost: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_square() {
        let costs = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = solve_square(&costs);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| costs[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn empty_inputs() {
        let a = gated_assignment::<f64>(&[], 2, 1.0);
        assert!(a.pairs.is_empty());
        assert_eq!(a.unmatched_cols, vec![0, 1]);
        let a = gated_assignment(&[vec![], vec![]], 0, 1.0f64);
        assert_eq!(a.unmatched_rows, vec![0, 1]);
    }

    #[test]
    fn gate_excludes_far_pairs() {
        let a = gated_assignment(&[vec![0.5, 3.0], vec![3.0, 2.5]], 2, 2.0f64);
        assert_eq!(a.pairs, vec![(0, 0)]);
        assert_eq!(a.unmatched_rows, vec![1]);
        assert_eq!(a.unmatched_cols, vec![1]);
    }

    #[test]
    fn prefers_more_pairs_over_lower_cost() {
        // Matching (0,0) alone costs 0.1 but blocks row 1; two pairs is preferred.
        let a = gated_assignment(&[vec![0.1, 0.9], vec![0.8, 5.0]], 2, 1.0f64);
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
        assert!((a.total_cost - 1.7).abs() < 1e-12);
    }

    #[test]
    fn rectangular_wide_and_tall() {
        let a = gated_assignment(&[vec![5.0, 0.2, 0.3]], 3, 1.0f64);
        assert_eq!(a.pairs, vec![(0, 1)]);
        assert_eq!(a.unmatched_cols, vec![0, 2]);
        let a = gated_assignment(&[vec![0.7], vec![0.2], vec![0.4]], 1, 1.0f32);
        assert_eq!(a.pairs, vec![(1, 0)]);
    }
}
