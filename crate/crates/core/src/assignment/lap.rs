//! Rectangular linear sum assignment.
//!
//! [`lap_solve`] is a shortest augmenting path solver in the Jonker-Volgenant
//! family, started from zero duals (no column-reduction initialization), that
//! handles rectangular matrices by assigning every row of the smaller side.
//! [`brute_force_lap`] enumerates every maximal injection and is kept as an
//! oracle for small inputs.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest `min(rows, cols)` accepted by [`brute_force_lap`].
pub const BRUTE_FORCE_LIMIT: usize = 9;

/// Dense cost matrix with an optional mask of inadmissible entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    pub entries: Array2<T>,
    /// `true` marks a pair that must not be reported as a match.
    pub forbidden: Array2<bool>,
}

impl<T: Real> CostMatrix<T> {
    pub fn new(entries: Array2<T>) -> Self {
        let forbidden = Array2::from_elem(entries.dim(), false);
        Self { entries, forbidden }
    }

    pub fn with_forbidden(entries: Array2<T>, forbidden: Array2<bool>) -> Self {
        assert_eq!(entries.dim(), forbidden.dim(), "entry and mask shapes differ");
        Self { entries, forbidden }
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0 || self.cols() == 0
    }

    fn check_finite(&self) -> Result<()> {
        for ((row, col), &c) in self.entries.indexed_iter() {
            if !self.forbidden[[row, col]] && !c.is_finite() {
                return Err(Error::NonFiniteCost { row, col });
            }
        }
        Ok(())
    }

    /// Stand-in cost for forbidden entries: any matching with fewer forbidden
    /// pairs is strictly cheaper than one with more.
    fn sentinel(&self) -> T {
        let n = self.rows().min(self.cols());
        let max_abs = self
            .entries
            .iter()
            .zip(self.forbidden.iter())
            .filter(|(_, &f)| !f)
            .fold(T::zero(), |acc, (&c, _)| acc.max(c.abs()));
        T::from_usize_lossy(2 * n + 1) * (max_abs + T::one())
    }

    /// Entries with forbidden cells replaced by the sentinel.
    fn effective(&self) -> Array2<T> {
        let s = self.sentinel();
        let mut out = self.entries.clone();
        ndarray::Zip::from(&mut out).and(&self.forbidden).for_each(|c, &f| {
            if f {
                *c = s;
            }
        });
        out
    }

    /// Sum of the entries at `pairs`, accumulated in ascending row order.
    pub fn matching_cost(&self, pairs: &[(usize, usize)]) -> T {
        let mut sorted = pairs.to_vec();
        sorted.sort_unstable();
        sorted.iter().map(|&(r, c)| self.entries[[r, c]]).sum()
    }
}

/// Minimum-cost matching of size `min(rows, cols)`, sorted by row, with pairs
/// on forbidden entries dropped.
pub fn lap_solve<T: Real>(matrix: &CostMatrix<T>) -> Result<Vec<(usize, usize)>> {
    matrix.check_finite()?;
    if matrix.is_empty() {
        return Ok(Vec::new());
    }
    let costs = matrix.effective();
    let transposed = costs.nrows() > costs.ncols();
    let costs = if transposed { costs.reversed_axes() } else { costs };
    let col_for_row = shortest_augmenting_path(&costs);

    let mut pairs: Vec<(usize, usize)> = col_for_row
        .into_iter()
        .enumerate()
        .map(|(r, c)| if transposed { (c, r) } else { (r, c) })
        .filter(|&(r, c)| !matrix.forbidden[[r, c]])
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}

/// Assigns every row of a `rows <= cols` matrix; returns the column of each row.
fn shortest_augmenting_path<T: Real>(costs: &Array2<T>) -> Vec<usize> {
    let (nr, nc) = costs.dim();
    debug_assert!(nr <= nc);
    const NONE: usize = usize::MAX;

    let mut u = vec![T::zero(); nr];
    let mut v = vec![T::zero(); nc];
    let mut col4row = vec![NONE; nr];
    let mut row4col = vec![NONE; nc];

    let mut shortest = vec![T::infinity(); nc];
    let mut path = vec![NONE; nc];
    let mut scanned_rows = vec![false; nr];
    let mut scanned_cols = vec![false; nc];
    let mut remaining: Vec<usize> = Vec::with_capacity(nc);

    for cur_row in 0..nr {
        shortest.fill(T::infinity());
        path.fill(NONE);
        scanned_rows.fill(false);
        scanned_cols.fill(false);
        remaining.clear();
        remaining.extend((0..nc).rev());

        let mut min_val = T::zero();
        let mut i = cur_row;
        let sink = loop {
            scanned_rows[i] = true;
            let mut lowest = T::infinity();
            let mut index = NONE;
            for (it, &j) in remaining.iter().enumerate() {
                let r = min_val + costs[[i, j]] - u[i] - v[j];
                if r < shortest[j] {
                    path[j] = i;
                    shortest[j] = r;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == NONE) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            // All costs are finite, so some column is always reachable.
            min_val = lowest;
            let j = remaining.swap_remove(index);
            scanned_cols[j] = true;
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for r in 0..nr {
            if scanned_rows[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for c in 0..nc {
            if scanned_cols[c] {
                v[c] -= min_val - shortest[c];
            }
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }
    col4row
}

/// Exhaustive minimum over all maximal injective matchings.
///
/// Ties go to the lexicographically smallest row-sorted pair list. Forbidden
/// entries carry the same sentinel as in [`lap_solve`] and are dropped from
/// the result.
pub fn brute_force_lap<T: Real>(matrix: &CostMatrix<T>) -> Result<Vec<(usize, usize)>> {
    let n = matrix.rows().min(matrix.cols());
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::OracleTooLarge {
            max: BRUTE_FORCE_LIMIT,
            found: n,
        });
    }
    matrix.check_finite()?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let scored = CostMatrix::new(matrix.effective());
    let transposed = matrix.rows() > matrix.cols();
    let (small, large) = if transposed {
        (matrix.cols(), matrix.rows())
    } else {
        (matrix.rows(), matrix.cols())
    };

    let mut best: Option<(T, Vec<(usize, usize)>)> = None;
    let mut choice = Vec::with_capacity(small);
    let mut used = vec![false; large];
    enumerate(small, large, &mut choice, &mut used, &mut |choice: &[usize]| {
        let mut pairs: Vec<(usize, usize)> = choice
            .iter()
            .enumerate()
            .map(|(s, &l)| if transposed { (l, s) } else { (s, l) })
            .collect();
        pairs.sort_unstable();
        let cost = scored.matching_cost(&pairs);
        let better = match &best {
            None => true,
            Some((c, p)) => cost < *c || (cost == *c && pairs < *p),
        };
        if better {
            best = Some((cost, pairs));
        }
    });

    let (_, pairs) = best.expect("n > 0 yields at least one matching");
    Ok(pairs.into_iter().filter(|&(r, c)| !matrix.forbidden[[r, c]]).collect())
}

fn enumerate(small: usize, large: usize, choice: &mut Vec<usize>, used: &mut [bool], visit: &mut dyn FnMut(&[usize])) {
    if choice.len() == small {
        visit(choice);
        return;
    }
    for l in 0..large {
        if !used[l] {
            used[l] = true;
            choice.push(l);
            enumerate(small, large, choice, used, visit);
            choice.pop();
            used[l] = false;
        }
    }
}
