//! Compressed sparse row storage with a fixed pattern.

use std::io::Write;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Pattern from per-row column lists; columns are sorted and deduplicated.
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            debug_assert!(r.last().map_or(true, |&c| c < nrows));
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self {
            nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Symmetric pattern coupling every pair of nodes within each group.
    pub fn from_cliques<'a>(n: usize, cliques: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for clique in cliques {
            for &a in clique {
                rows[a].extend_from_slice(clique);
            }
        }
        Self::from_pattern(rows)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_pattern((0..n).map(|i| vec![i]).collect());
        m.values.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Accumulates into an existing entry.
    ///
    /// Panics when `(i, j)` is outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] = v;
    }

    pub fn clear_values(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn is_pattern_symmetric(&self) -> bool {
        (0..self.nrows).all(|i| self.row(i).0.iter().all(|&j| self.slot(j, i).is_some()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.nrows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).all(|(&j, &v)| {
                let w = self.get(j, i);
                (v - w).abs() <= tol * v.abs().max(w.abs()).max(1.0)
            })
        })
    }

    /// `P A Pᵀ` with `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.nrows;
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (new, &old) in perm.iter().enumerate() {
            let (cols, vals) = self.row(old);
            rows[new] = cols.iter().zip(vals).map(|(&c, &v)| (inv[c], v)).collect();
            rows[new].sort_unstable_by_key(|e| e.0);
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for r in rows {
            for (c, v) in r {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.nrows]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }

    /// Matrix Market coordinate format, 1-based indices.
    pub fn write_matrix_market(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.nrows, self.nnz())?;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Dense vector in Matrix Market array format.
pub fn write_vector_market(v: &[f64], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} 1", v.len())?;
    for x in v {
        writeln!(out, "{x:.17e}")?;
    }
    Ok(())
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
