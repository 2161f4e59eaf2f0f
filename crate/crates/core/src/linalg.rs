//! Linear solvers for the Newton updates.
//!
//! The direct path reorders unknowns with reverse Cuthill–McKee and factors
//! the resulting band matrix with partial pivoting. The iterative path is
//! restarted GMRES, right-preconditioned with ILU(0).

use std::collections::VecDeque;

use crate::assembly::DiscreteSystem;
use crate::error::{Error, Result};
use crate::sparse::{norm2, CsrMatrix};

/// Reverse Cuthill–McKee ordering of the (symmetrized) pattern; `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).0.iter().copied().filter(|&j| j != i).collect()).collect();
    for i in 0..n {
        for k in 0..adj[i].len() {
            let j = adj[i][k];
            if !a.row(j).0.contains(&i) {
                adj[j].push(i);
            }
        }
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    for nb in &mut adj {
        nb.sort_unstable_by_key(|&j| (degree[j], j));
        nb.dedup();
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
        let start = pseudo_peripheral(seed, &adj);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(start: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>]) -> usize {
    let mut v = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let lv = bfs_levels(v, adj);
        let far = lv.iter().copied().filter(|&l| l != usize::MAX).max().unwrap_or(0);
        if far <= ecc && ecc > 0 {
            break;
        }
        ecc = far;
        v = (0..adj.len())
            .filter(|&i| lv[i] == far)
            .min_by_key(|&i| (adj[i].len(), i))
            .unwrap();
    }
    v
}

/// Lower/upper half-bandwidth of `P A Pᵀ`.
pub fn bandwidth(a: &CsrMatrix, perm: &[usize]) -> (usize, usize) {
    let n = a.nrows();
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0, 0);
    for i in 0..n {
        for &j in a.row(i).0 {
            let (r, c) = (inv[i], inv[j]);
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
    }
    (kl, ku)
}

/// Band LU factorization with row pivoting of a permuted sparse matrix.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    perm: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        // row i stores columns i-kl ..= i+kl+ku
        i * self.width + (j + self.kl - i)
    }

    pub fn factor(a: &CsrMatrix, perm: &[usize]) -> Result<Self> {
        let n = a.nrows();
        let (kl, ku) = bandwidth(a, perm);
        let width = 2 * kl + ku + 1;
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut lu = Self {
            n,
            kl,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            perm: perm.to_vec(),
        };
        let mut scale = 0.0f64;
        for old in 0..n {
            let (cols, vals) = a.row(old);
            let r = inv[old];
            for (&c, &v) in cols.iter().zip(vals) {
                let k = lu.at(r, inv[c]);
                lu.data[k] = v;
                scale = scale.max(v.abs());
            }
        }
        let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE) * 1e-4;
        let upper = kl + ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.data[lu.at(k, k)].abs();
            for r in (k + 1)..=last_row {
                let v = lu.data[lu.at(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularSystem {
                    row: perm[k],
                    pivot: best,
                });
            }
            lu.pivots[k] = p;
            let last_col = (k + upper).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (ik, ip) = (lu.at(k, j), lu.at(p, j));
                    lu.data.swap(ik, ip);
                }
            }
            let pivot = lu.data[lu.at(k, k)];
            let base_k = lu.at(k, k);
            let span = last_col - k;
            for r in (k + 1)..=last_row {
                let base_r = lu.at(r, k);
                let l = lu.data[base_r] / pivot;
                lu.data[base_r] = l;
                if l == 0.0 {
                    continue;
                }
                // row k lies before row r in storage
                let (head, tail) = lu.data.split_at_mut(base_r);
                let urow = &head[base_k + 1..=base_k + span];
                for (x, u) in tail[1..=span].iter_mut().zip(urow) {
                    *x -= l * u;
                }
            }
        }
        Ok(lu)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for r in (k + 1)..=(k + self.kl).min(n - 1) {
                    x[r] -= self.data[self.at(r, k)] * xk;
                }
            }
        }
        let upper = self.width - self.kl - 1;
        for i in (0..n).rev() {
            let mut s = x[i];
            let base = self.at(i, i);
            for off in 1..=upper.min(n - 1 - i) {
                s -= self.data[base + off] * x[i + off];
            }
            x[i] = s / self.data[base];
        }
        let mut out = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

/// ILU(0) factors stored on the pattern of `A`.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for (i, d) in diag.iter_mut().enumerate() {
            let (lo, hi) = (lu.row_ptr()[i], lu.row_ptr()[i + 1]);
            *d = (lo..hi)
                .find(|&k| lu.col_idx()[k] == i)
                .ok_or(Error::SingularSystem { row: i, pivot: 0.0 })?;
        }
        let row_ptr = lu.row_ptr().to_vec();
        let col_idx = lu.col_idx().to_vec();
        let vals = lu.values_mut();
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            for k in lo..hi {
                pos[col_idx[k]] = k;
            }
            for k in lo..hi {
                let j = col_idx[k];
                if j >= i {
                    break;
                }
                let piv = vals[diag[j]];
                if piv == 0.0 {
                    return Err(Error::SingularSystem { row: j, pivot: 0.0 });
                }
                let l = vals[k] / piv;
                vals[k] = l;
                for kk in (diag[j] + 1)..row_ptr[j + 1] {
                    let c = col_idx[kk];
                    if pos[c] != usize::MAX {
                        vals[pos[c]] -= l * vals[kk];
                    }
                }
            }
            for k in lo..hi {
                pos[col_idx[k]] = usize::MAX;
            }
            if vals[diag[i]] == 0.0 {
                return Err(Error::SingularSystem { row: i, pivot: 0.0 });
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let (rp, ci, v) = (self.lu.row_ptr(), self.lu.col_idx(), self.lu.values());
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in rp[i]..self.diag[i] {
                s -= v[k] * x[ci[k]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (self.diag[i] + 1)..rp[i + 1] {
                s -= v[k] * x[ci[k]];
            }
            x[i] = s / v[self.diag[i]];
        }
        x
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresSettings {
    pub restart: usize,
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for GmresSettings {
    fn default() -> Self {
        Self {
            restart: 60,
            rel_tol: 1e-13,
            max_iters: 5000,
        }
    }
}

/// Right-preconditioned restarted GMRES; returns the solution and iteration count.
pub fn gmres(a: &CsrMatrix, b: &[f64], precond: &Ilu0, settings: GmresSettings) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let m = settings.restart.max(1);
    let mut total = 0;
    let mut rel = 1.0;
    while total < settings.max_iters {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= settings.rel_tol {
            return Ok((x, total));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let z = precond.apply(&v[k]);
            let mut w = a.mul_vec(&z);
            for (i, vi) in v.iter().enumerate() {
                let hik: f64 = w.iter().zip(vi).map(|(a, b)| a * b).sum();
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            if hn > 0.0 {
                v.push(w.iter().map(|wi| wi / hn).collect());
            }
            rel = g[k + 1].abs() / bnorm;
            if rel <= settings.rel_tol || hn == 0.0 || total >= settings.max_iters {
                break;
            }
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = ((i + 1)..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            update.iter_mut().zip(&v[j]).for_each(|(u, vj)| *u += yj * vj);
        }
        let dz = precond.apply(&update);
        x.iter_mut().zip(&dz).for_each(|(xi, d)| *xi += d);
    }
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let final_rel = norm2(&r) / bnorm;
    if final_rel <= settings.rel_tol * 10.0 {
        Ok((x, total))
    } else {
        Err(Error::KrylovFailure {
            iterations: total,
            residual: final_rel.max(rel),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum LinearMethod {
    #[default]
    Direct,
    Gmres(GmresSettings),
}

/// Reusable solver; caches the fill-reducing ordering of one sparsity pattern.
#[derive(Clone, Debug)]
pub struct LinearSolver {
    method: LinearMethod,
    perm: Option<Vec<usize>>,
}

impl LinearSolver {
    pub fn new(method: LinearMethod) -> Self {
        Self { method, perm: None }
    }

    /// Solves `A x = b`.
    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        match self.method {
            LinearMethod::Direct => {
                let perm = match &self.perm {
                    Some(p) if p.len() == a.nrows() => p,
                    _ => self.perm.insert(rcm_ordering(a)),
                };
                Ok(BandLu::factor(a, perm)?.solve(b))
            }
            LinearMethod::Gmres(settings) => {
                let ilu = Ilu0::new(a)?;
                Ok(gmres(a, b, &ilu, settings)?.0)
            }
        }
    }

    /// Newton update `δ` solving `J δ = −R`.
    pub fn newton_update(&mut self, system: &DiscreteSystem) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = system.residual.iter().map(|r| -r).collect();
        self.solve(&system.jacobian, &rhs)
    }
}

/// One-shot Newton update with the given method.
pub fn linear_solve(system: &DiscreteSystem, method: LinearMethod) -> Result<Vec<f64>> {
    LinearSolver::new(method).newton_update(system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut r = vec![i];
                for _ in 0..3 {
                    r.push(rng.gen_range(0..n));
                }
                r
            })
            .collect();
        let mut a = CsrMatrix::from_pattern(rows);
        for i in 0..n {
            let (lo, hi) = (a.row_ptr()[i], a.row_ptr()[i + 1]);
            for k in lo..hi {
                let j = a.col_idx()[k];
                a.values_mut()[k] = if i == j { 0.1 } else { rng.gen_range(-1.0..1.0) };
            }
        }
        a
    }

    fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
        let mut m = a.to_dense();
        let mut x = b.to_vec();
        let n = x.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for i in (k + 1)..n {
                let l = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= l * m[k][j];
                }
                x[i] -= l * x[k];
            }
        }
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| m[i][j] * x[j]).sum();
            x[i] = (x[i] - s) / m[i][i];
        }
        x
    }

    #[test]
    fn band_lu_needs_pivoting_and_matches_dense() {
        // small diagonal forces row exchanges
        let a = random_sparse(40, 3);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let x = LinearSolver::new(LinearMethod::Direct).solve(&a, &b).unwrap();
        let xd = dense_solve(&a, &b);
        for (p, q) in x.iter().zip(&xd) {
            assert_relative_eq!(p, q, max_relative = 1e-8, epsilon = 1e-10);
        }
    }

    #[test]
    fn identity_solve() {
        let sys = DiscreteSystem {
            residual: vec![1.0, -2.0, 3.0],
            jacobian: CsrMatrix::identity(3),
            constrained: Default::default(),
        };
        assert_eq!(linear_solve(&sys, LinearMethod::Direct).unwrap(), vec![-1.0, 2.0, -3.0]);
        let it = linear_solve(&sys, LinearMethod::Gmres(GmresSettings::default())).unwrap();
        assert_relative_eq!(it[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn singular_matrix_reported() {
        let mut a = CsrMatrix::from_cliques(3, [&[0usize, 1, 2][..]]);
        for v in a.values_mut() {
            *v = 1.0;
        }
        let err = LinearSolver::new(LinearMethod::Direct).solve(&a, &[1.0, 2.0, 3.0]);
        assert!(matches!(err, Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn rcm_reduces_bandwidth_of_shuffled_grid() {
        // 2D Laplacian on a 12x12 grid, nodes shuffled
        let m = 12;
        let n = m * m;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut shuffle: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            shuffle.swap(i, rng.gen_range(0..=i));
        }
        let mut rows = vec![Vec::new(); n];
        for j in 0..m {
            for i in 0..m {
                let id = shuffle[j * m + i];
                rows[id].push(id);
                if i + 1 < m {
                    rows[id].push(shuffle[j * m + i + 1]);
                    rows[shuffle[j * m + i + 1]].push(id);
                }
                if j + 1 < m {
                    rows[id].push(shuffle[(j + 1) * m + i]);
                    rows[shuffle[(j + 1) * m + i]].push(id);
                }
            }
        }
        let a = CsrMatrix::from_pattern(rows);
        let ident: Vec<usize> = (0..n).collect();
        let (kl0, _) = bandwidth(&a, &ident);
        let (kl, ku) = bandwidth(&a, &rcm_ordering(&a));
        assert!(kl <= m + 1 && ku <= m + 1, "rcm bandwidth {kl}/{ku}");
        assert!(kl0 > 3 * m);
    }

    #[test]
    fn gmres_ilu_agrees_with_direct() {
        let n = 60;
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            rows[i].extend([i, (i + 1) % n, (i + n - 1) % n]);
        }
        let mut a = CsrMatrix::from_pattern(rows);
        for i in 0..n {
            a.set(i, i, 4.0);
            a.set(i, (i + 1) % n, -1.3);
            a.set(i, (i + n - 1) % n, -0.7);
        }
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let xd = LinearSolver::new(LinearMethod::Direct).solve(&a, &b).unwrap();
        let xi = LinearSolver::new(LinearMethod::Gmres(GmresSettings {
            restart: 5,
            ..GmresSettings::default()
        }))
        .solve(&a, &b)
        .unwrap();
        for (p, q) in xd.iter().zip(&xi) {
            assert_relative_eq!(p, q, max_relative = 1e-10);
        }
    }
}
