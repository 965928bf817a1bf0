//! Basis factorization.
//!
//! Column singletons are peeled off iteratively, which leaves the permuted basis in the form
//!
//! ```text
//!   [ U  B_sk ]
//!   [ 0  K    ]
//! ```
//!
//! with `U` upper triangular (one singleton per peeled row) and `K` the square kernel of columns
//! that never became singletons. `K` is factorized densely with partial pivoting. LPs built from
//! per-hour rows have mostly singleton basics (logicals, imbalance columns), so the kernel stays
//! about as large as the number of basic policy coefficients.

/// Compressed sparse column matrix.
#[derive(Debug, Clone)]
pub(crate) struct Csc {
    pub nrows: usize,
    pub col_start: Vec<usize>,
    pub rows: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csc {
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.col_start[j], self.col_start[j + 1]);
        (&self.rows[s..e], &self.vals[s..e])
    }

    #[inline]
    pub fn dot(&self, j: usize, y: &[f64]) -> f64 {
        let (rows, vals) = self.col(j);
        rows.iter().zip(vals).map(|(&r, &v)| v * y[r]).sum()
    }
}

/// Positions of the basis that could not be pivoted and the rows left uncovered.
#[derive(Debug)]
pub(crate) struct Singular {
    pub dependent: Vec<usize>,
    pub uncovered: Vec<usize>,
}

const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug)]
struct DenseLu {
    /// Row stride (number of columns).
    k: usize,
    /// Row-major storage holding multipliers (L) and the upper factor (U).
    m: Vec<f64>,
    /// Pivot sequence: (local row, local column).
    piv: Vec<(usize, usize)>,
}

impl DenseLu {
    /// Factorizes in place; returns the local columns that had no acceptable pivot and
    /// the local rows that remained unpivoted.
    fn new(nr: usize, k: usize, mut m: Vec<f64>) -> (Self, Vec<usize>, Vec<usize>) {
        let mut row_done = vec![false; nr];
        let mut piv = Vec::with_capacity(k);
        let mut dep_cols = Vec::new();
        for c in 0..k {
            let mut best = None;
            let mut best_abs = PIVOT_TOL;
            for r in 0..nr {
                if !row_done[r] {
                    let v = m[r * k + c].abs();
                    if v > best_abs {
                        best_abs = v;
                        best = Some(r);
                    }
                }
            }
            let Some(pr) = best else {
                dep_cols.push(c);
                continue;
            };
            row_done[pr] = true;
            piv.push((pr, c));
            let pv = m[pr * k + c];
            for r in 0..nr {
                if row_done[r] {
                    continue;
                }
                let f = m[r * k + c] / pv;
                if f == 0.0 {
                    continue;
                }
                m[r * k + c] = f;
                for cc in (c + 1)..k {
                    let u = m[pr * k + cc];
                    if u != 0.0 {
                        m[r * k + cc] -= f * u;
                    }
                }
            }
        }
        let free_rows = (0..nr).filter(|&r| !row_done[r]).collect();
        (DenseLu { k, m, piv }, dep_cols, free_rows)
    }

    /// Solves `K x = b`; `b` is indexed by local row, the result by local column.
    fn solve(&self, b: &mut [f64]) -> Vec<f64> {
        let k = self.k;
        let n = self.piv.len();
        for s in 0..n {
            let (rs, cs) = self.piv[s];
            let bs = b[rs];
            if bs == 0.0 {
                continue;
            }
            for &(rt, _) in &self.piv[s + 1..] {
                b[rt] -= self.m[rt * k + cs] * bs;
            }
        }
        let mut x = vec![0.0; k];
        for s in (0..n).rev() {
            let (rs, cs) = self.piv[s];
            let mut v = b[rs];
            for &(_, ct) in &self.piv[s + 1..] {
                v -= self.m[rs * k + ct] * x[ct];
            }
            x[cs] = v / self.m[rs * k + cs];
        }
        x
    }

    /// Solves `K^T y = c`; `c` is indexed by local column, the result by local row.
    fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let k = self.k;
        let n = self.piv.len();
        let mut z = vec![0.0; k];
        for s in 0..n {
            let (rs, cs) = self.piv[s];
            let mut v = c[cs];
            for &(rt, _) in &self.piv[..s] {
                v -= self.m[rt * k + cs] * z[rt];
            }
            z[rs] = v / self.m[rs * k + cs];
        }
        for s in (0..n).rev() {
            let (rs, cs) = self.piv[s];
            let mut v = z[rs];
            for &(rt, _) in &self.piv[s + 1..] {
                v -= self.m[rt * k + cs] * z[rt];
            }
            z[rs] = v;
        }
        z
    }
}

#[derive(Debug)]
pub(crate) struct Factor {
    /// (basis position, row, pivot value) in peeling order.
    peel: Vec<(usize, usize, f64)>,
    kernel_rows: Vec<usize>,
    kernel_pos: Vec<usize>,
    lu: DenseLu,
}

impl Factor {
    pub fn new(a: &Csc, basis: &[usize]) -> Result<Self, Singular> {
        let m = a.nrows;
        debug_assert_eq!(basis.len(), m);
        // basis positions touching each row, in CSR form
        let mut row_start = vec![0usize; m + 1];
        let mut count = vec![0usize; m];
        for (p, &j) in basis.iter().enumerate() {
            let (rows, vals) = a.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                if v != 0.0 {
                    row_start[r + 1] += 1;
                    count[p] += 1;
                }
            }
        }
        for r in 0..m {
            row_start[r + 1] += row_start[r];
        }
        let mut fill = row_start.clone();
        let mut row_pos = vec![0usize; row_start[m]];
        for (p, &j) in basis.iter().enumerate() {
            let (rows, vals) = a.col(j);
            for (&r, &v) in rows.iter().zip(vals) {
                if v != 0.0 {
                    row_pos[fill[r]] = p;
                    fill[r] += 1;
                }
            }
        }
        let mut row_removed = vec![false; m];
        let mut peeled = vec![false; m];
        let mut dependent = Vec::new();
        let mut stack: Vec<usize> = (0..m).rev().filter(|&p| count[p] == 1).collect();
        for p in 0..m {
            if count[p] == 0 {
                dependent.push(p);
                peeled[p] = true;
            }
        }
        let mut peel = Vec::new();
        while let Some(p) = stack.pop() {
            if peeled[p] || count[p] != 1 {
                continue;
            }
            let (rows, vals) = a.col(basis[p]);
            let Some((r, v)) = rows
                .iter()
                .zip(vals)
                .find(|(&r, &v)| !row_removed[r] && v != 0.0)
                .map(|(&r, &v)| (r, v))
            else {
                continue;
            };
            if v.abs() < PIVOT_TOL {
                // leave it for the kernel, where pivoting can reject it properly
                continue;
            }
            peeled[p] = true;
            row_removed[r] = true;
            peel.push((p, r, v));
            for &q in &row_pos[row_start[r]..row_start[r + 1]] {
                if peeled[q] {
                    continue;
                }
                count[q] -= 1;
                if count[q] == 1 {
                    stack.push(q);
                } else if count[q] == 0 {
                    peeled[q] = true;
                    dependent.push(q);
                }
            }
        }
        let kernel_rows: Vec<usize> = (0..m).filter(|&r| !row_removed[r]).collect();
        let kernel_pos: Vec<usize> = (0..m).filter(|&p| !peeled[p]).collect();
        let (k, kc) = (kernel_rows.len(), kernel_pos.len());
        let mut local_row = vec![usize::MAX; m];
        for (l, &r) in kernel_rows.iter().enumerate() {
            local_row[r] = l;
        }
        let mut dense = vec![0.0; k * kc];
        for (lc, &p) in kernel_pos.iter().enumerate() {
            let (rows, vals) = a.col(basis[p]);
            for (&r, &v) in rows.iter().zip(vals) {
                let lr = local_row[r];
                if lr != usize::MAX {
                    dense[lr * kc + lc] += v;
                }
            }
        }
        let (lu, dep_cols, free_rows) = DenseLu::new(k, kc, dense);
        if !dep_cols.is_empty() || !dependent.is_empty() {
            let mut dep = dependent;
            dep.extend(dep_cols.iter().map(|&c| kernel_pos[c]));
            dep.sort_unstable();
            return Err(Singular {
                dependent: dep,
                uncovered: free_rows.iter().map(|&r| kernel_rows[r]).collect(),
            });
        }
        Ok(Factor {
            peel,
            kernel_rows,
            kernel_pos,
            lu,
        })
    }

    /// Solves `B x = w`. `w` is indexed by row and is consumed as scratch space;
    /// the result is indexed by basis position.
    pub fn ftran(&self, a: &Csc, basis: &[usize], w: &mut [f64], x: &mut [f64]) {
        if !self.kernel_rows.is_empty() {
            let mut b: Vec<f64> = self.kernel_rows.iter().map(|&r| w[r]).collect();
            let xk = self.lu.solve(&mut b);
            for (l, &p) in self.kernel_pos.iter().enumerate() {
                let v = xk[l];
                x[p] = v;
                if v != 0.0 {
                    let (rows, vals) = a.col(basis[p]);
                    for (&r, &av) in rows.iter().zip(vals) {
                        w[r] -= av * v;
                    }
                }
            }
        }
        for &(p, row, piv) in self.peel.iter().rev() {
            let v = w[row] / piv;
            x[p] = v;
            if v != 0.0 {
                let (rows, vals) = a.col(basis[p]);
                for (&r, &av) in rows.iter().zip(vals) {
                    if r != row {
                        w[r] -= av * v;
                    }
                }
            }
        }
    }

    /// Solves `B^T y = c` with `c` indexed by basis position; the result is indexed by row.
    pub fn btran(&self, a: &Csc, basis: &[usize], c: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for &(p, row, piv) in &self.peel {
            let (rows, vals) = a.col(basis[p]);
            let mut s = c[p];
            for (&r, &av) in rows.iter().zip(vals) {
                if r != row {
                    s -= av * y[r];
                }
            }
            y[row] = s / piv;
        }
        if !self.kernel_rows.is_empty() {
            let rhs: Vec<f64> = self
                .kernel_pos
                .iter()
                .map(|&p| c[p] - a.dot(basis[p], y))
                .collect();
            let yk = self.lu.solve_transpose(&rhs);
            for (l, &r) in self.kernel_rows.iter().enumerate() {
                y[r] = yk[l];
            }
        }
    }

    #[cfg(test)]
    pub fn kernel_size(&self) -> usize {
        self.kernel_rows.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_csc(rows: usize, cols: &[Vec<f64>]) -> Csc {
        let mut col_start = vec![0];
        let mut r_idx = Vec::new();
        let mut vals = Vec::new();
        for c in cols {
            for (r, &v) in c.iter().enumerate() {
                if v != 0.0 {
                    r_idx.push(r);
                    vals.push(v);
                }
            }
            col_start.push(r_idx.len());
        }
        Csc {
            nrows: rows,
            col_start,
            rows: r_idx,
            vals,
        }
    }

    fn mat_vec(cols: &[Vec<f64>], basis: &[usize], x: &[f64]) -> Vec<f64> {
        let m = x.len();
        let mut out = vec![0.0; m];
        for (p, &j) in basis.iter().enumerate() {
            for r in 0..m {
                out[r] += cols[j][r] * x[p];
            }
        }
        out
    }

    #[test]
    fn mixed_singleton_and_kernel_solves() {
        // columns: two dense, one singleton with an extra entry in an earlier row, one logical
        let cols = vec![
            vec![2.0, 1.0, 0.0, 3.0],
            vec![1.0, -1.0, 4.0, 1.0],
            vec![0.0, 5.0, 0.0, 2.0],
            vec![0.0, 0.0, 0.0, -1.0],
        ];
        let a = dense_to_csc(4, &cols);
        let basis = vec![0, 1, 2, 3];
        let f = Factor::new(&a, &basis).unwrap();
        assert!(f.kernel_size() <= 3);
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let mut x = vec![0.0; b.len()];
        f.ftran(&a, &basis, &mut b.clone(), &mut x);
        let back = mat_vec(&cols, &basis, &x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12, "{back:?} vs {b:?}");
        }
        // transpose: y^T B = c^T
        let c = vec![0.5, -1.0, 2.0, 1.0];
        let mut y = vec![0.0; c.len()];
        f.btran(&a, &basis, &c, &mut y);
        for (p, &j) in basis.iter().enumerate() {
            let s: f64 = (0..4).map(|r| cols[j][r] * y[r]).sum();
            assert!((s - c[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_basis_reports_dependencies() {
        let cols = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let a = dense_to_csc(2, &cols);
        let err = Factor::new(&a, &[0, 1]).unwrap_err();
        assert_eq!(err.dependent.len(), 1);
        assert_eq!(err.uncovered, vec![1]);
    }
}
