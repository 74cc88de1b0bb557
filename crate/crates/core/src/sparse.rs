//! Sparse symmetric matrices, an LDLᵀ factorization with nested-dissection
//! ordering, Sylvester inertia counts and shift-invert Lanczos.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Symmetric matrix in CSR form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCsr {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    data: Vec<f64>,
    /// Optional grid coordinates of the unknowns, used for ordering.
    coords: Option<Vec<(i32, i32)>>,
}

impl SymCsr {
    /// Builds from `(row, col, value)` triplets, summing duplicates. Both
    /// `(i, j)` and `(j, i)` must be supplied; every diagonal entry is stored.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            row.push((i as u32, 0.0));
        }
        for &(i, j, v) in triplets {
            rows[i].push((j as u32, v));
        }
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<u32> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(j);
                    data.push(v);
                    last = Some(j);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            n,
            indptr,
            indices,
            data,
            coords: None,
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn with_coords(mut self, coords: Vec<(i32, i32)>) -> Self {
        assert_eq!(coords.len(), self.n);
        self.coords = Some(coords);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn coords(&self) -> Option<&[(i32, i32)]> {
        self.coords.as_deref()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .zip(&self.data[r])
            .map(|(&j, &v)| (j as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&(j as u32)) {
            Ok(p) => self.data[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .with_min_len(1024)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Gershgorin bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Bitwise symmetry of the stored entries.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i).to_bits() == v.to_bits()))
    }

    pub fn shifted(&self, s: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            let r = self.indptr[i]..self.indptr[i + 1];
            let p = self.indices[r.clone()].binary_search(&(i as u32)).unwrap();
            m.data[r.start + p] -= s;
        }
        m
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Drops explicitly stored zeros off the diagonal.
    pub fn pruned(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        let mut m = Self::from_triplets(self.n, &t);
        m.coords = self.coords.clone();
        m
    }

    /// Writes `row col value` lines (1-based), one per stored entry.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "% {} {} {}", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }
}

/// Fill-reducing elimination order: `perm[k]` is the unknown eliminated `k`-th.
pub fn fill_reducing_order(a: &SymCsr) -> Vec<usize> {
    match a.coords() {
        Some(c) => nested_dissection(a, c),
        None => reverse_cuthill_mckee(a),
    }
}

fn nested_dissection(a: &SymCsr, coords: &[(i32, i32)]) -> Vec<usize> {
    const LEAF: usize = 64;
    let n = a.n();
    let mut order = Vec::with_capacity(n);
    let mut side = vec![0u8; n];
    // explicit stack: (nodes, separator to append after both halves)
    enum Task {
        Split(Vec<usize>),
        Emit(Vec<usize>),
    }
    let mut stack = vec![Task::Split((0..n).collect())];
    while let Some(task) = stack.pop() {
        let nodes = match task {
            Task::Emit(s) => {
                order.extend(s);
                continue;
            }
            Task::Split(nodes) => nodes,
        };
        if nodes.len() <= LEAF {
            order.extend(nodes);
            continue;
        }
        let (mut xlo, mut xhi, mut ylo, mut yhi) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for &v in &nodes {
            let (x, y) = coords[v];
            xlo = xlo.min(x);
            xhi = xhi.max(x);
            ylo = ylo.min(y);
            yhi = yhi.max(y);
        }
        let use_x = xhi - xlo >= yhi - ylo;
        let key = |v: usize| if use_x { coords[v].0 } else { coords[v].1 };
        let mut keys: Vec<i32> = nodes.iter().map(|&v| key(v)).collect();
        let mid = keys.len() / 2;
        let (_, &mut m, _) = keys.select_nth_unstable(mid);
        let klo = if use_x { xlo } else { ylo };
        let m = m.max(klo + 1);
        for &v in &nodes {
            side[v] = if key(v) < m { 1 } else { 2 };
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut sep = Vec::new();
        for &v in &nodes {
            if side[v] == 2 {
                right.push(v);
            } else if a.row(v).any(|(j, _)| side[j] == 2) {
                sep.push(v);
            } else {
                left.push(v);
            }
        }
        for &v in &nodes {
            side[v] = 0;
        }
        if left.is_empty() || right.is_empty() {
            order.extend(nodes);
            continue;
        }
        stack.push(Task::Emit(sep));
        stack.push(Task::Split(right));
        stack.push(Task::Split(left));
    }
    order
}

fn reverse_cuthill_mckee(a: &SymCsr) -> Vec<usize> {
    let n = a.n();
    let deg: Vec<usize> = (0..n).map(|i| a.row(i).count()).collect();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&i| (deg[i], i));
    for s in starts {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut head = order.len();
        order.push(s);
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut nb: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !seen[j]).collect();
            nb.sort_by_key(|&j| (deg[j], j));
            for j in nb {
                if !seen[j] {
                    seen[j] = true;
                    order.push(j);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Symbolic analysis shared by factorizations of `A - sI` for any shift `s`.
#[derive(Debug, Clone)]
pub struct Symbolic {
    perm: Vec<usize>,
    pinv: Vec<usize>,
    parent: Vec<usize>,
    lp: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl Symbolic {
    pub fn new(a: &SymCsr, perm: Vec<usize>) -> Self {
        let n = a.n();
        let mut pinv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            pinv[p] = k;
        }
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for (j, _) in a.row(perm[k]) {
                let mut i = pinv[j];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut lp = vec![0; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        Self {
            perm,
            pinv,
            parent,
            lp,
        }
    }

    pub fn factor_nnz(&self) -> usize {
        *self.lp.last().unwrap()
    }
}

/// `P A Pᵀ = L D Lᵀ` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct Ldl {
    sym: Symbolic,
    li: Vec<u32>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    /// Factors `A - shift·I`.
    pub fn factor(a: &SymCsr, sym: &Symbolic, shift: f64) -> Result<Self> {
        let n = a.n();
        let nz = sym.factor_nnz();
        let mut li = vec![0u32; nz];
        let mut lx = vec![0.0; nz];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let kk = sym.perm[k];
            for (j, v) in a.row(kk) {
                let mut i = sym.pinv[j];
                if i <= k {
                    y[i] += if i == k { v - shift } else { v };
                    let mut len = 0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = sym.parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            while top < n {
                let i = pattern[top];
                top += 1;
                let yi = y[i];
                y[i] = 0.0;
                let p0 = sym.lp[i];
                let p2 = p0 + lnz[i];
                for p in p0..p2 {
                    y[li[p] as usize] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                li[p2] = k as u32;
                lx[p2] = lki;
                lnz[i] += 1;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(Error::ZeroPivot(k));
            }
        }
        Ok(Self {
            sym: sym.clone(),
            li,
            lx,
            d,
        })
    }

    /// Number of negative pivots, i.e. eigenvalues of `A` below the shift.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let lp = &self.sym.lp;
        let mut x: Vec<f64> = (0..n).map(|k| b[self.sym.perm[k]]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in lp[j]..lp[j + 1] {
                    x[self.li[p] as usize] -= self.lx[p] * xj;
                }
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in lp[j]..lp[j + 1] {
                s -= self.lx[p] * x[self.li[p] as usize];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.sym.perm[k]] = x[k];
        }
        out
    }
}

/// Number of eigenvalues of `A` strictly below `tau` (Sylvester's law of inertia).
pub fn count_below(a: &SymCsr, tau: f64) -> Result<usize> {
    let sym = Symbolic::new(a, fill_reducing_order(a));
    count_below_with(a, &sym, tau)
}

fn count_below_with(a: &SymCsr, sym: &Symbolic, tau: f64) -> Result<usize> {
    let mut t = tau;
    for _ in 0..8 {
        match Ldl::factor(a, sym, t) {
            Ok(f) => return Ok(f.negative_pivots()),
            Err(Error::ZeroPivot(_)) => t += 1e-13 * tau.abs().max(1.0),
            Err(e) => return Err(e),
        }
    }
    Err(Error::EigenNoConvergence(format!(
        "inertia count at {tau} hit repeated zero pivots"
    )))
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// `‖Av − λv‖` for each pair, with `‖v‖ = 1`.
    pub residuals: Vec<f64>,
    pub norm_bound: f64,
    pub shift: f64,
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Residual target relative to the Gershgorin norm bound.
    pub rel_residual: f64,
    /// Confirm by an inertia count that no eigenvalue below the last was missed.
    pub verify_count: bool,
    pub seed: u64,
    pub max_restarts: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            rel_residual: 1e-9,
            verify_count: true,
            seed: 0x5eed_1a2c,
            max_restarts: 12,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let nrm = dot(v, v).sqrt();
    if nrm > 0.0 {
        for x in v.iter_mut() {
            *x /= nrm;
        }
    }
    nrm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            axpy(-c, b, v);
        }
    }
}

/// Lanczos on `op` (symmetric), returning Ritz pairs for the `nev` largest
/// eigenvalues with `|β_m s_m| ≤ tol·|θ|`, restarted on the unconverged part.
fn lanczos_largest<F: Fn(&[f64]) -> Vec<f64>>(
    op: &F,
    n: usize,
    nev: usize,
    locked: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
    tol: f64,
    max_restarts: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let room = n.saturating_sub(locked.len());
    if nev == 0 || room == 0 {
        return Ok(Vec::new());
    }
    let nev = nev.min(room);
    let mmax = room.min((3 * nev + 30).max(50));
    let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    for _ in 0..=max_restarts {
        orthogonalize(&mut start, locked);
        if normalize(&mut start) == 0.0 {
            break;
        }
        let mut q: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut done = false;
        let mut converged: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut ritz: Vec<(f64, Vec<f64>, f64)> = Vec::new();
        while !done {
            let j = q.len() - 1;
            let mut w = op(&q[j]);
            let a = dot(&w, &q[j]);
            alpha.push(a);
            // the locked set goes last, or its components creep back in through q
            orthogonalize(&mut w, &q);
            orthogonalize(&mut w, locked);
            let b = normalize(&mut w);
            let m = alpha.len();
            let check = m >= nev && (m % 5 == 0 || m == mmax || b < 1e-14 * a.abs().max(1e-300));
            if check {
                let t = DMatrix::from_fn(m, m, |r, c| {
                    if r == c {
                        alpha[r]
                    } else if r + 1 == c {
                        beta[r]
                    } else if c + 1 == r {
                        beta[c]
                    } else {
                        0.0
                    }
                });
                let eig = SymmetricEigen::new(t);
                let mut idx: Vec<usize> = (0..m).collect();
                idx.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
                let top = &idx[..nev.min(m)];
                let scale = eig.eigenvalues[idx[0]].abs();
                let ok = top.iter().all(|&i| {
                    (b * eig.eigenvectors[(m - 1, i)]).abs() <= tol * eig.eigenvalues[i].abs()
                });
                if ok || m == mmax || b < 1e-14 * scale || m == room {
                    ritz = top
                        .iter()
                        .map(|&i| {
                            let mut v = vec![0.0; n];
                            for (r, qr) in q.iter().enumerate() {
                                axpy(eig.eigenvectors[(r, i)], qr, &mut v);
                            }
                            normalize(&mut v);
                            let est = (b * eig.eigenvectors[(m - 1, i)]).abs();
                            (eig.eigenvalues[i], v, est)
                        })
                        .collect();
                    done = true;
                    if ok || b < 1e-14 * scale || m == room {
                        converged = ritz.iter().map(|(t, v, _)| (*t, v.clone())).collect();
                    }
                }
            }
            if !done {
                beta.push(b);
                q.push(w);
            }
        }
        if converged.len() == nev {
            return Ok(converged);
        }
        // hand back whatever converged; the caller locks it and asks again
        let conv: Vec<(f64, Vec<f64>)> = ritz
            .iter()
            .filter(|(t, _, est)| *est <= tol * t.abs())
            .map(|(t, v, _)| (*t, v.clone()))
            .collect();
        if !conv.is_empty() {
            return Ok(conv);
        }
        // restart from the sum of the unconverged Ritz vectors
        start = vec![0.0; n];
        for (_, v, _) in &ritz {
            axpy(1.0, v, &mut start);
        }
    }
    Err(Error::EigenNoConvergence(format!(
        "lanczos did not converge for {nev} eigenvalues"
    )))
}

fn factor_near(a: &SymCsr, sym: &Symbolic, shift: f64) -> Result<(Ldl, f64)> {
    let mut s = shift;
    for _ in 0..8 {
        match Ldl::factor(a, sym, s) {
            Ok(f) => return Ok((f, s)),
            Err(Error::ZeroPivot(_)) => s -= 1e-9 * s.abs().max(1.0),
            Err(e) => return Err(e),
        }
    }
    Err(Error::EigenNoConvergence(format!(
        "repeated zero pivots near shift {shift}"
    )))
}

/// Shift strictly below the spectrum, with a factorization free of tiny pivots.
fn lower_shift(a: &SymCsr, sym: &Symbolic) -> Result<(Ldl, f64)> {
    let norm = a.norm_bound().max(1.0);
    let mut shift = 0.0;
    let mut step = 1.0;
    loop {
        match Ldl::factor(a, sym, shift) {
            Ok(f) if f.negative_pivots() == 0 && f.d.iter().all(|&d| d > 1e-10 * norm) => {
                return Ok((f, shift))
            }
            Ok(_) | Err(Error::ZeroPivot(_)) => {
                shift = -step;
                step *= 2.0;
                if step > 8.0 * norm {
                    return Err(Error::EigenNoConvergence(
                        "no shift below the spectrum found".into(),
                    ));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

enum Stop {
    Count(usize),
    Below(f64),
}

const BATCH: usize = 24;

/// Move a shift that lies below the spectrum up towards its bottom, which
/// separates the lowest eigenvalues far better under inversion.
fn raise_shift(a: &SymCsr, sym: &Symbolic, ldl: Ldl, s0: f64, rng: &mut ChaCha8Rng) -> Result<(Ldl, f64)> {
    let n = a.n();
    let steps = n.min(30);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut v);
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for _ in 0..steps {
        q.push(v.clone());
        let mut w = ldl.solve(&v);
        alpha.push(dot(&w, &v));
        orthogonalize(&mut w, &q);
        let b = normalize(&mut w);
        if b < 1e-14 {
            break;
        }
        beta.push(b);
        v = w;
    }
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alpha[r]
        } else if r.abs_diff(c) == 1 {
            beta[r.min(c)]
        } else {
            0.0
        }
    });
    let theta = SymmetricEigen::new(t).eigenvalues.max();
    if !(theta > 0.0) {
        return Ok((ldl, s0));
    }
    // s0 + 1/θ bounds the lowest eigenvalue from above
    let top = s0 + 1.0 / theta;
    let mut frac = 0.9;
    for _ in 0..6 {
        let t = s0 + frac * (top - s0);
        if let Ok(f) = Ldl::factor(a, sym, t) {
            if f.negative_pivots() == 0 {
                return Ok((f, t));
            }
        }
        frac *= 0.5;
    }
    Ok((ldl, s0))
}

/// Spectrum slicing: repeated shift-invert Lanczos above a moving shift,
/// with all accepted vectors locked and completeness checked by inertia.
fn slice(a: &SymCsr, stop: Stop, opts: &EigenOptions) -> Result<(Vec<(f64, Vec<f64>)>, f64)> {
    let n = a.n();
    let sym = Symbolic::new(a, fill_reducing_order(a));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let norm = a.norm_bound().max(1.0);
    let accept_tol = 0.1 * opts.rel_residual * norm;
    let (target, limit) = match stop {
        Stop::Count(m) => (m, f64::INFINITY),
        Stop::Below(l) => (count_below_with(a, &sym, l)?, l),
    };
    let (ldl0, s0) = lower_shift(a, &sym)?;
    let (mut ldl, mut s) = raise_shift(a, &sym, ldl0, s0, &mut rng)?;
    let first_shift = s;
    let mut found: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut idle = 0;
    let mut rounds = 0;
    let mut at_limit = false;
    loop {
        rounds += 1;
        if idle > opts.max_restarts || rounds > 40 * (target / BATCH + 4) {
            return Err(Error::EigenNoConvergence(format!(
                "slicing stalled with {} of {target} eigenvalues",
                found.len()
            )));
        }
        let locked: Vec<Vec<f64>> = found.iter().map(|p| p.1.clone()).collect();
        let c = ldl.negative_pivots();
        let below = found.iter().filter(|p| p.0 < s).count();
        let done = match stop {
            Stop::Count(_) => c == below && below >= target,
            Stop::Below(_) => at_limit && c == below,
        };
        if done || found.len() == n {
            break;
        }
        let candidates = if c > below {
            // eigenvalues below the shift were missed: take them from the other end
            let neg = |x: &[f64]| {
                let mut y = ldl.solve(x);
                y.iter_mut().for_each(|v| *v = -*v);
                y
            };
            lanczos_largest(&neg, n, c - below, &locked, &mut rng, 1e-12, opts.max_restarts)?
        } else {
            let want = (target.saturating_sub(found.len())).clamp(1, BATCH);
            let request = (want + 1).min(n - found.len());
            let op = |x: &[f64]| ldl.solve(x);
            lanczos_largest(&op, n, request, &locked, &mut rng, 1e-12, opts.max_restarts)?
        };
        let mut added = 0;
        for (_, mut v) in candidates {
            orthogonalize(&mut v, &locked);
            if normalize(&mut v) < 0.5 {
                continue;
            }
            let av = a.matvec(&v);
            let lambda = dot(&v, &av);
            let res = av
                .iter()
                .zip(&v)
                .map(|(p, q)| (p - lambda * q).powi(2))
                .sum::<f64>()
                .sqrt();
            if res <= accept_tol {
                found.push((lambda, v));
                added += 1;
            }
        }
        found.sort_by(|x, y| x.0.total_cmp(&y.0));
        if added == 0 {
            idle += 1;
            continue;
        }
        idle = 0;
        if c > below {
            continue;
        }
        // move the shift into the widest gap of the upper half of what lies above it
        let above: Vec<f64> = found.iter().map(|p| p.0).filter(|&x| x > s).collect();
        let need = target.saturating_sub(below);
        let ready = above.len() >= 2 && above.len() > need.min(BATCH);
        if !ready {
            let t = match stop {
                Stop::Below(l) if above.last().is_some_and(|&x| x >= l) => l,
                _ => continue,
            };
            let (f, s2) = factor_near(a, &sym, t)?;
            ldl = f;
            s = s2;
            at_limit = true;
            continue;
        }
        let r = above.len();
        let j = (r / 2..r)
            .max_by(|&p, &q| (above[p] - above[p - 1]).total_cmp(&(above[q] - above[q - 1])))
            .unwrap();
        let mut t = 0.5 * (above[j - 1] + above[j]);
        if t >= limit {
            t = limit;
        }
        let (f, s2) = factor_near(a, &sym, t)?;
        ldl = f;
        s = s2;
        at_limit = t == limit;
    }
    if let Stop::Below(l) = stop {
        found.retain(|p| p.0 < l);
        if found.len() != target {
            return Err(Error::EigenNoConvergence(format!(
                "found {} eigenvalues below {l}, inertia says {target}",
                found.len()
            )));
        }
    } else {
        found.truncate(target);
    }
    Ok((found, first_shift))
}

/// Rayleigh-Ritz on the span of the computed vectors.
fn rayleigh_ritz(a: &SymCsr, pairs: Vec<(f64, Vec<f64>)>) -> Vec<(f64, Vec<f64>)> {
    let k = pairs.len();
    if k == 0 {
        return pairs;
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (_, v) in pairs {
        let mut v = v;
        orthogonalize(&mut v, &basis);
        normalize(&mut v);
        basis.push(v);
    }
    let av: Vec<Vec<f64>> = basis.iter().map(|v| a.matvec(v)).collect();
    let mut h = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let x = 0.5 * (dot(&basis[i], &av[j]) + dot(&basis[j], &av[i]));
            h[(i, j)] = x;
            h[(j, i)] = x;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    idx.into_iter()
        .map(|c| {
            let mut v = vec![0.0; basis[0].len()];
            for (r, b) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(r, c)], b, &mut v);
            }
            normalize(&mut v);
            (eig.eigenvalues[c], v)
        })
        .collect()
}

fn finish(a: &SymCsr, pairs: Vec<(f64, Vec<f64>)>, shift: f64, opts: &EigenOptions) -> Result<EigenPairs> {
    let pairs = rayleigh_ritz(a, pairs);
    let norm = a.norm_bound();
    let target = opts.rel_residual * norm.max(1.0);
    let mut out = EigenPairs {
        values: Vec::with_capacity(pairs.len()),
        vectors: Vec::with_capacity(pairs.len()),
        residuals: Vec::with_capacity(pairs.len()),
        norm_bound: norm,
        shift,
    };
    for (lambda, v) in pairs {
        let mut r = a.matvec(&v);
        axpy(-lambda, &v, &mut r);
        let res = dot(&r, &r).sqrt();
        if res > target {
            return Err(Error::EigenNoConvergence(format!(
                "residual {res:e} above {target:e} at λ = {lambda}"
            )));
        }
        out.values.push(lambda);
        out.vectors.push(v);
        out.residuals.push(res);
    }
    Ok(out)
}

/// The `m` smallest eigenvalues of `A` with eigenvectors.
pub fn eigen_lowest(a: &SymCsr, m: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = a.n();
    if m > n {
        return Err(Error::param("m", format!("{m} eigenvalues requested for dimension {n}")));
    }
    if m == 0 {
        return finish(a, Vec::new(), 0.0, opts);
    }
    let (mut pairs, shift) = slice(a, Stop::Count(m), opts)?;
    if opts.verify_count && pairs.len() < n {
        let lm = pairs[m - 1].0;
        let tau = lm + 1e-9 * lm.abs().max(1.0);
        let below = count_below(a, tau)?;
        if below > m {
            // a degenerate partner of λ_m sits just above the cut; include it
            let (more, _) = slice(a, Stop::Count(below), opts)?;
            pairs = more;
            pairs.truncate(m);
        }
    }
    finish(a, pairs, shift, opts)
}

/// All eigenvalues of `A` strictly below `limit`.
pub fn eigen_below(a: &SymCsr, limit: f64, opts: &EigenOptions) -> Result<EigenPairs> {
    let (pairs, shift) = slice(a, Stop::Below(limit), opts)?;
    finish(a, pairs, shift, opts)
}
