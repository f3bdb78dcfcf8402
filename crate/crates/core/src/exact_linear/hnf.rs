use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::matrix::IntegerMatrix;

/// Row Hermite normal form.
///
/// Returns `(H, U)` with `U` unimodular and `U·M = H`. `H` is upper echelon,
/// pivots are positive, and entries above each pivot lie in `[0, pivot)`.
/// Zero rows sit at the bottom.
pub fn hnf(m: &IntegerMatrix) -> (IntegerMatrix, IntegerMatrix) {
    let rows = m.rows();
    let mut h = m.clone();
    let mut u = IntegerMatrix::identity(rows);
    let mut pivot_row = 0;

    for col in 0..m.cols() {
        if pivot_row == rows {
            break;
        }
        loop {
            // Smallest nonzero |entry| at or below the pivot row.
            let best = (pivot_row..rows)
                .filter(|&i| !h[(i, col)].is_zero())
                .min_by(|&a, &b| h[(a, col)].abs().cmp(&h[(b, col)].abs()));
            let Some(best) = best else { break };
            h.swap_rows(pivot_row, best);
            u.swap_rows(pivot_row, best);

            let mut done = true;
            for i in pivot_row + 1..rows {
                if h[(i, col)].is_zero() {
                    continue;
                }
                let q = h[(i, col)].div_floor(&h[(pivot_row, col)]);
                h.add_row_multiple(i, pivot_row, &-&q);
                u.add_row_multiple(i, pivot_row, &-&q);
                if !h[(i, col)].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h[(pivot_row, col)].is_zero() {
            continue;
        }
        if h[(pivot_row, col)].is_negative() {
            h.negate_row(pivot_row);
            u.negate_row(pivot_row);
        }
        let pivot = h[(pivot_row, col)].clone();
        for i in 0..pivot_row {
            let q: BigInt = h[(i, col)].div_floor(&pivot);
            h.add_row_multiple(i, pivot_row, &-&q);
            u.add_row_multiple(i, pivot_row, &-&q);
        }
        pivot_row += 1;
    }
    (h, u)
}

/// Canonical basis of the column span: the nonzero columns of the transposed
/// row HNF of `Mᵀ`. Two matrices span the same lattice iff these agree.
pub fn column_hnf_basis(m: &IntegerMatrix) -> IntegerMatrix {
    let (h, _) = hnf(&m.transpose());
    let nonzero: Vec<usize> = (0..h.rows()).filter(|&i| h.row(i).iter().any(|x| !x.is_zero())).collect();
    h.select_rows(nonzero).transpose_or_empty(m.rows())
}

impl IntegerMatrix {
    /// Transpose that keeps the ambient row count when there are no rows to
    /// transpose (an empty basis still lives in `rows`-space).
    fn transpose_or_empty(&self, ambient_rows: usize) -> IntegerMatrix {
        if self.rows() == 0 {
            IntegerMatrix::zeros(ambient_rows, 0)
        } else {
            self.transpose()
        }
    }
}

/// Checks the row-HNF shape conventions used by [`hnf`].
pub fn is_row_hnf(h: &IntegerMatrix) -> bool {
    let mut last_pivot: Option<usize> = None;
    let mut seen_zero_row = false;
    for i in 0..h.rows() {
        let lead = (0..h.cols()).find(|&j| !h[(i, j)].is_zero());
        match lead {
            None => seen_zero_row = true,
            Some(j) => {
                if seen_zero_row || last_pivot.is_some_and(|p| j <= p) || !h[(i, j)].is_positive() {
                    return false;
                }
                for k in 0..i {
                    let x = &h[(k, j)];
                    if x.is_negative() || x >= &h[(i, j)] {
                        return false;
                    }
                }
                last_pivot = Some(j);
            }
        }
    }
    true
}
