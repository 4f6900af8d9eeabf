/// Sparse LU factorization of a square matrix by right-looking Gaussian
/// elimination with Markowitz pivot selection and threshold partial
/// pivoting.
///
/// Rows of the matrix are constraint rows, columns are basis positions.
/// Step `k` pivots on row `piv_row[k]` and column `piv_col[k]`; its
/// multipliers eliminate that column from the remaining rows and its `U`
/// row keeps the pivot row restricted to the columns still active.
#[derive(Debug, Clone, Default)]
pub(crate) struct SparseLu {
    n: usize,
    piv_row: Vec<usize>,
    piv_col: Vec<usize>,
    pivot: Vec<f64>,
    /// Multipliers `(row, l)` of step `k` at `l_start[k]..l_start[k + 1]`.
    l_start: Vec<usize>,
    l_ent: Vec<(usize, f64)>,
    /// Off-diagonal entries `(column, u)` of pivot row `k`.
    u_start: Vec<usize>,
    u_ent: Vec<(usize, f64)>,
}

/// Relative size a pivot must have against the largest entry of its column.
const THRESHOLD: f64 = 0.1;
/// Columns of smallest count examined per step.
const SEARCH_COLS: usize = 4;

/// Rows and columns (basis positions) left unpivoted when elimination
/// found no acceptable pivot; both lists have the same length.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Square matrix in compressed sparse column form.
pub(crate) struct Csc<'a> {
    pub start: &'a [usize],
    pub index: &'a [usize],
    pub value: &'a [f64],
}

impl SparseLu {
    fn push_step(&mut self, r: usize, c: usize, pv: f64) {
        self.piv_row.push(r);
        self.piv_col.push(c);
        self.pivot.push(pv);
        self.l_start.push(self.l_ent.len());
        self.u_start.push(self.u_ent.len());
    }

    /// Factors an `n x n` matrix. On a (near) singular matrix returns the
    /// rows and columns that could not be pivoted.
    ///
    /// Column singletons are peeled first without any fill; the remaining
    /// bump is eliminated with dynamic sparse rows.
    pub fn factor(n: usize, a: Csc<'_>, tol: f64) -> Result<Self, Singular> {
        let mut lu = SparseLu {
            n,
            piv_row: Vec::with_capacity(n),
            piv_col: Vec::with_capacity(n),
            pivot: Vec::with_capacity(n),
            l_start: Vec::with_capacity(n + 1),
            l_ent: Vec::new(),
            u_start: Vec::with_capacity(n + 1),
            u_ent: Vec::new(),
        };
        // row-wise copy
        let mut row_start = vec![0usize; n + 1];
        for &i in a.index {
            row_start[i + 1] += 1;
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        let mut fill = row_start.clone();
        let mut row_ent = vec![(0usize, 0.0f64); a.index.len()];
        for j in 0..n {
            for p in a.start[j]..a.start[j + 1] {
                let i = a.index[p];
                row_ent[fill[i]] = (j, a.value[p]);
                fill[i] += 1;
            }
        }
        let mut count: Vec<usize> = (0..n).map(|j| a.start[j + 1] - a.start[j]).collect();
        let mut row_active = vec![true; n];
        let mut col_active = vec![true; n];

        // singleton phase: a column with one active row pivots there and
        // creates no fill
        let mut stack: Vec<usize> = (0..n).rev().filter(|&j| count[j] == 1).collect();
        while let Some(c) = stack.pop() {
            if !col_active[c] || count[c] != 1 {
                continue;
            }
            let Some((r, pv)) = (a.start[c]..a.start[c + 1])
                .map(|p| (a.index[p], a.value[p]))
                .find(|&(i, _)| row_active[i])
            else {
                continue;
            };
            if pv.abs() < tol {
                continue;
            }
            row_active[r] = false;
            col_active[c] = false;
            lu.push_step(r, c, pv);
            for &(j, v) in &row_ent[row_start[r]..row_start[r + 1]] {
                if j != c && col_active[j] {
                    lu.u_ent.push((j, v));
                    count[j] -= 1;
                    if count[j] == 1 {
                        stack.push(j);
                    }
                }
            }
        }

        // bump
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in (0..n).filter(|&i| row_active[i]) {
            for &(j, v) in &row_ent[row_start[i]..row_start[i + 1]] {
                if col_active[j] {
                    rows[i].push((j, v));
                    col_rows[j].push(i);
                }
            }
        }
        let mut slot = vec![usize::MAX; n];
        let value_at = |rows: &Vec<Vec<(usize, f64)>>, i: usize, j: usize| {
            rows[i].iter().find(|&&(c, _)| c == j).map_or(0.0, |&(_, v)| v)
        };
        let mut cands: Vec<usize> = Vec::with_capacity(SEARCH_COLS);
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let remaining = n - lu.piv_row.len();
        for _ in 0..remaining {
            cands.clear();
            for j in (0..n).filter(|&j| col_active[j]) {
                if cands.len() == SEARCH_COLS && count[j] >= count[cands[SEARCH_COLS - 1]] {
                    continue;
                }
                let pos = cands.partition_point(|&c| (count[c], c) <= (count[j], j));
                cands.insert(pos, j);
                cands.truncate(SEARCH_COLS);
            }
            let mut best: Option<(usize, usize, f64, usize)> = None; // (row, col, value, cost)
            for &j in &cands {
                col_rows[j].retain(|&i| row_active[i]);
                col_rows[j].sort_unstable();
                col_rows[j].dedup();
                entries.clear();
                entries.extend(col_rows[j].iter().map(|&i| (i, value_at(&rows, i, j))));
                count[j] = entries.len();
                let cmax = entries.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
                if cmax < tol {
                    continue;
                }
                for &(i, v) in &entries {
                    if v.abs() < THRESHOLD * cmax || v.abs() < tol {
                        continue;
                    }
                    let cost = (rows[i].len() - 1) * (entries.len() - 1);
                    let better = match best {
                        None => true,
                        Some((bi, bj, bv, bc)) => {
                            cost < bc
                                || (cost == bc
                                    && (v.abs() > bv.abs() * 1.5
                                        || (v.abs() >= bv.abs() / 1.5 && (j, i) < (bj, bi))))
                        }
                    };
                    if better {
                        best = Some((i, j, v, cost));
                    }
                }
                if best.is_some_and(|b| b.3 == 0) {
                    break;
                }
            }
            let Some((r, c, pv, _)) = best else {
                return Err(Singular {
                    rows: (0..n).filter(|&i| row_active[i]).collect(),
                    cols: (0..n).filter(|&j| col_active[j]).collect(),
                });
            };

            row_active[r] = false;
            col_active[c] = false;
            lu.push_step(r, c, pv);
            let prow = std::mem::take(&mut rows[r]);
            for &(j, _) in &prow {
                count[j] = count[j].saturating_sub(1);
            }
            for p in 0..col_rows[c].len() {
                let i = col_rows[c][p];
                if !row_active[i] {
                    continue;
                }
                let a = value_at(&rows, i, c);
                if a == 0.0 {
                    continue;
                }
                let f = a / pv;
                lu.l_ent.push((i, f));
                let row = &mut rows[i];
                row.retain(|&(j, _)| j != c);
                for (q, &(j, _)) in row.iter().enumerate() {
                    slot[j] = q;
                }
                for &(j, v) in &prow {
                    if j == c {
                        continue;
                    }
                    if slot[j] != usize::MAX {
                        row[slot[j]].1 -= f * v;
                    } else {
                        slot[j] = row.len();
                        row.push((j, -f * v));
                        col_rows[j].push(i);
                        count[j] += 1;
                    }
                }
                for &(j, _) in row.iter() {
                    slot[j] = usize::MAX;
                }
            }
            lu.u_ent.extend(prow.into_iter().filter(|&(j, _)| j != c));
        }
        lu.l_start.push(lu.l_ent.len());
        lu.u_start.push(lu.u_ent.len());
        Ok(lu)
    }

    fn l(&self, k: usize) -> &[(usize, f64)] {
        &self.l_ent[self.l_start[k]..self.l_start[k + 1]]
    }

    fn u(&self, k: usize) -> &[(usize, f64)] {
        &self.u_ent[self.u_start[k]..self.u_start[k + 1]]
    }

    /// Solves `B w = rhs` in place: `rhs` is indexed by rows on entry and
    /// by columns on return.
    pub fn solve(&self, rhs: &mut [f64]) {
        let mut b = rhs.to_vec();
        for k in 0..self.n {
            let br = b[self.piv_row[k]];
            if br != 0.0 {
                for &(i, f) in self.l(k) {
                    b[i] -= f * br;
                }
            }
        }
        for k in (0..self.n).rev() {
            let mut s = b[self.piv_row[k]];
            for &(j, u) in self.u(k) {
                s -= u * rhs[j];
            }
            rhs[self.piv_col[k]] = s / self.pivot[k];
        }
    }

    /// Solves `B^T z = rhs` in place: `rhs` is indexed by columns on entry
    /// and by rows on return.
    pub fn solve_transpose(&self, rhs: &mut [f64]) {
        let mut d = rhs.to_vec();
        let mut t = vec![0.0; self.n];
        for k in 0..self.n {
            let tk = d[self.piv_col[k]] / self.pivot[k];
            t[self.piv_row[k]] = tk;
            if tk != 0.0 {
                for &(j, u) in self.u(k) {
                    d[j] -= u * tk;
                }
            }
        }
        for k in (0..self.n).rev() {
            let r = self.piv_row[k];
            let mut acc = t[r];
            for &(i, f) in self.l(k) {
                acc -= f * t[i];
            }
            t[r] = acc;
        }
        rhs.copy_from_slice(&t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn factor(n: usize, a: &[f64]) -> Result<SparseLu, Singular> {
        let mut start = vec![0];
        let mut index = Vec::new();
        let mut value = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if a[i * n + j] != 0.0 {
                    index.push(i);
                    value.push(a[i * n + j]);
                }
            }
            start.push(index.len());
        }
        SparseLu::factor(n, Csc { start: &start, index: &index, value: &value }, 1e-12)
    }

    fn matvec(n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
        (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
    }

    fn check(n: usize, a: &[f64], b: &[f64]) {
        let lu = factor(n, a).unwrap();
        let mut w = b.to_vec();
        lu.solve(&mut w);
        let back = matvec(n, a, &w);
        for i in 0..n {
            assert!((back[i] - b[i]).abs() < 1e-9, "solve row {i}: {} vs {}", back[i], b[i]);
        }
        let mut z = b.to_vec();
        lu.solve_transpose(&mut z);
        let at: Vec<f64> = (0..n * n).map(|idx| a[(idx % n) * n + idx / n]).collect();
        let back = matvec(n, &at, &z);
        for i in 0..n {
            assert!((back[i] - b[i]).abs() < 1e-9, "transpose row {i}");
        }
    }

    #[test]
    fn solves_both_systems() {
        let a = vec![
            0.0, 2.0, 1.0, 0.0, //
            1.0, 0.0, 0.0, 3.0, //
            4.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 5.0, 1.0,
        ];
        check(4, &a, &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn random_sparse_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=25);
            // diagonal keeps the matrix away from singularity, then sparse noise
            let mut a = vec![0.0; n * n];
            let perm: Vec<usize> = {
                let mut p: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    p.swap(i, rng.gen_range(0..=i));
                }
                p
            };
            for i in 0..n {
                a[i * n + perm[i]] = rng.gen_range(1.0..4.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                for j in 0..n {
                    if j != perm[i] && rng.gen_bool(0.15) {
                        a[i * n + j] = rng.gen_range(-1.0..1.0);
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            check(n, &a, &b);
        }
    }

    #[test]
    fn detects_singular() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(factor(2, &a).is_err());
        let a = vec![1.0, 0.0, 0.0, 0.0];
        let sing = factor(2, &a).unwrap_err();
        assert_eq!((sing.rows, sing.cols), (vec![1], vec![1]));
    }
}
