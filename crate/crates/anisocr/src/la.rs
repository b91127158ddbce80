//! Dense and banded symmetric linear algebra at desk scale.
//!
//! Everything the harnesses need is here: small pivoted LU solves, dense and
//! banded Cholesky factorizations, a cyclic Jacobi eigensolver for symmetric
//! matrices (the full-spectrum route), and blocked power iteration for the
//! largest eigenpair of a symmetric-definite pencil `M x = lambda A x`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::float::FloatExt;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub enum LaError {
    /// Matrix expected to be symmetric positive definite is not.
    NotSpd { detail: String },
    /// Singular (or numerically singular) system.
    Singular,
    /// Iteration failed to reach the requested tolerance.
    NoConvergence { iterations: usize, residual: f64 },
}

impl core::fmt::Display for LaError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LaError::NotSpd { detail } => write!(f, "matrix is not positive definite: {detail}"),
            LaError::Singular => write!(f, "singular linear system"),
            LaError::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "iteration did not converge after {iterations} steps (residual {residual:.3e})"
            ),
        }
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct DenseMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = 1.0;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut s = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                s += a * b;
            }
            y[i] = s;
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                m = m.max((self.at(i, j) - self.at(j, i)).abs());
            }
        }
        m
    }

    /// Solve `self * x = b` by partial-pivoted LU. Intended for small systems
    /// (dof unisolvence, barycentric maps); the matrix is copied.
    pub fn solve_lu(&self, b: &[f64]) -> Result<Vec<f64>, LaError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x: Vec<f64> = b.to_vec();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[piv[k] * n + k].abs();
            for r in (k + 1)..n {
                let v = a[piv[r] * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(LaError::Singular);
            }
            piv.swap(k, p);
            let pk = piv[k];
            let akk = a[pk * n + k];
            for r in (k + 1)..n {
                let pr = piv[r];
                let f = a[pr * n + k] / akk;
                a[pr * n + k] = f;
                for c in (k + 1)..n {
                    a[pr * n + c] -= f * a[pk * n + c];
                }
                x[pr] -= f * x[pk];
            }
        }
        let mut out = vec![0.0; n];
        for k in (0..n).rev() {
            let pk = piv[k];
            let mut s = x[pk];
            for c in (k + 1)..n {
                s -= a[pk * n + c] * out[c];
            }
            out[k] = s / a[pk * n + k];
        }
        Ok(out)
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<DenseChol, LaError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.at(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(LaError::NotSpd {
                            detail: format!("pivot {s:.3e} at row {i}"),
                        });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(DenseChol { n, l })
    }
}

/// Dense lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct DenseChol {
    n: usize,
    l: Vec<f64>,
}

impl DenseChol {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        self.forward(&mut y);
        self.backward(&mut y);
        y
    }

    /// `L y = b` in place.
    pub fn forward(&self, y: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
    }

    /// `L^T x = y` in place.
    pub fn backward(&self, y: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns. Off-diagonal mass is annihilated to roundoff, so this serves as
/// the independent full-spectrum route against iterative solvers.
pub fn jacobi_eigh(a: &DenseMat) -> (Vec<f64>, DenseMat) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut v = DenseMat::identity(n);
    if n <= 1 {
        return (m.data.clone(), v);
    }
    let frob: f64 = m.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-15 * frob.max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.at(i, j) * m.at(i, j);
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = m.at(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m.at(p, p);
                let aqq = m.at(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.at(k, p);
                    let mkq = m.at(k, q);
                    *m.at_mut(k, p) = c * mkp - s * mkq;
                    *m.at_mut(k, q) = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m.at(p, k);
                    let mqk = m.at(q, k);
                    *m.at_mut(p, k) = c * mpk - s * mqk;
                    *m.at_mut(q, k) = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    *v.at_mut(k, p) = c * vkp - s * vkq;
                    *v.at_mut(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.at(i, i).partial_cmp(&m.at(j, j)).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m.at(i, i)).collect();
    let mut vecs = DenseMat::zeros(n, n);
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            *vecs.at_mut(r, newc) = v.at(r, oldc);
        }
    }
    (vals, vecs)
}

/// Full spectrum of the symmetric-definite pencil `M x = lambda A x`.
///
/// Reduces via the Cholesky factor of `A` to a standard symmetric problem
/// `L^-1 M L^-T y = lambda y` and back-substitutes the eigenvectors.
pub fn dense_generalized_eigh(m: &DenseMat, a: &DenseMat) -> Result<(Vec<f64>, DenseMat), LaError> {
    assert_eq!(m.rows, a.rows);
    let n = m.rows;
    let chol = a.cholesky()?;
    // C = L^-1 M L^-T, built column by column
    let mut c = DenseMat::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for (i, ci) in col.iter_mut().enumerate() {
            *ci = m.at(i, j);
        }
        chol.forward(&mut col);
        for i in 0..n {
            *c.at_mut(j, i) = col[i]; // store transposed: row j holds L^-1 M e_j
        }
    }
    // now apply L^-1 to the rows of c^T, i.e. forward-solve each row of c
    let mut sym = DenseMat::zeros(n, n);
    for i in 0..n {
        for (j, cj) in col.iter_mut().enumerate() {
            *cj = c.at(j, i);
        }
        chol.forward(&mut col);
        for j in 0..n {
            *sym.at_mut(i, j) = col[j];
        }
    }
    // enforce exact symmetry against roundoff
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (sym.at(i, j) + sym.at(j, i));
            *sym.at_mut(i, j) = avg;
            *sym.at_mut(j, i) = avg;
        }
    }
    let (vals, ys) = jacobi_eigh(&sym);
    let mut xs = DenseMat::zeros(n, n);
    for cidx in 0..n {
        for (r, cr) in col.iter_mut().enumerate() {
            *cr = ys.at(r, cidx);
        }
        chol.backward(&mut col);
        for r in 0..n {
            *xs.at_mut(r, cidx) = col[r];
        }
    }
    Ok((vals, xs))
}

/// Symmetric banded matrix, lower storage: row `i` holds `a[i][i-bw ..= i]`.
#[derive(Debug, Clone)]
pub struct BandSym {
    pub n: usize,
    pub bw: usize,
    data: Vec<f64>,
}

impl BandSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            return 0.0;
        }
        self.data[self.idx(r, c)]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let v = self.data[self.idx(i, j)];
                y[i] += v * x[j];
                y[j] += v * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
    }

    /// In-place banded Cholesky (lower).
    pub fn cholesky(mut self) -> Result<BandChol, LaError> {
        let n = self.n;
        let bw = self.bw;
        for j in 0..n {
            let mut d = self.data[self.idx(j, j)];
            let lo = j.saturating_sub(bw);
            for k in lo..j {
                let ljk = self.data[self.idx(j, k)];
                d -= ljk * ljk;
            }
            if d <= 0.0 {
                return Err(LaError::NotSpd {
                    detail: format!("pivot {d:.3e} at row {j}"),
                });
            }
            let ljj = d.sqrt();
            let jj = self.idx(j, j);
            self.data[jj] = ljj;
            let hi = (j + bw + 1).min(n);
            for i in (j + 1)..hi {
                let mut s = self.data[self.idx(i, j)];
                let lo2 = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for k in lo2..j {
                    if i - k <= bw {
                        s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                    }
                }
                let ij = self.idx(i, j);
                self.data[ij] = s / ljj;
            }
        }
        // transposed copy of the factor keeps the backward sweep on
        // contiguous memory
        let mut lt = vec![0.0; n * (bw + 1)];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                lt[j * (bw + 1) + (i - j)] = self.data[i * (bw + 1) + (bw - (i - j))];
            }
        }
        Ok(BandChol {
            n,
            bw,
            l: self.data,
            lt,
        })
    }
}

/// Banded lower Cholesky factor, stored row-wise and column-wise.
#[derive(Debug, Clone)]
pub struct BandChol {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    lt: Vec<f64>,
}

impl BandChol {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let bw = self.bw;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &self.l[i * (bw + 1) + (bw - (i - lo))..i * (bw + 1) + bw];
            let mut s = y[i];
            for (lik, yk) in row.iter().zip(y[lo..i].iter()) {
                s -= lik * yk;
            }
            y[i] = s / self.l[self.idx(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw + 1).min(n);
            let col = &self.lt[i * (bw + 1) + 1..i * (bw + 1) + 1 + (hi - i - 1)];
            let mut s = y[i];
            for (lki, yk) in col.iter().zip(y[i + 1..hi].iter()) {
                s -= lki * yk;
            }
            y[i] = s / self.lt[i * (bw + 1)];
        }
        y
    }
}

/// Triplet accumulator for symmetric assembly; duplicates sum.
#[derive(Debug, Clone)]
pub struct Coo {
    pub n: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl Coo {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        self.entries.push((i as u32, j as u32, v));
    }

    pub fn to_dense(&self) -> DenseMat {
        let mut m = DenseMat::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            *m.at_mut(i as usize, j as usize) += v;
        }
        m
    }

    /// Visit every stored triplet (duplicates included).
    pub fn for_each(&self, mut f: impl FnMut(usize, usize, f64)) {
        for &(i, j, v) in &self.entries {
            f(i as usize, j as usize, v);
        }
    }

    /// Matrix-vector product straight off the triplets.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for &(i, j, v) in &self.entries {
            y[i as usize] += v * x[j as usize];
        }
    }

    /// Accumulated diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            if i == j {
                d[i as usize] += v;
            }
        }
        d
    }

    /// Symmetric diagonal scaling in place: `a_ij <- d_i a_ij d_j`.
    pub fn scale_sym(&mut self, d: &[f64]) {
        for (i, j, v) in self.entries.iter_mut() {
            *v *= d[*i as usize] * d[*j as usize];
        }
    }

    /// Assemble under the permutation `perm` (`perm[old] = new`) into banded
    /// storage. The bandwidth is measured on the permuted pattern.
    pub fn to_banded(&self, perm: &[usize]) -> BandSym {
        let mut bw = 0usize;
        for &(i, j, _) in &self.entries {
            let (pi, pj) = (perm[i as usize], perm[j as usize]);
            bw = bw.max(pi.abs_diff(pj));
        }
        let mut b = BandSym::zeros(self.n, bw);
        for &(i, j, v) in &self.entries {
            let (pi, pj) = (perm[i as usize], perm[j as usize]);
            if pi >= pj {
                b.add(pi, pj, v);
            }
        }
        b
    }

    /// Apply `perm` to a vector in original ordering.
    pub fn permute(perm: &[usize], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (old, &new) in perm.iter().enumerate() {
            out[new] = x[old];
        }
        out
    }

    /// Undo `perm`.
    pub fn unpermute(perm: &[usize], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (old, &new) in perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}

/// Bandwidth-reducing ordering from spatial dof positions: stable sort by
/// (z, y, x). Returns `perm` with `perm[old] = new`.
pub fn coordinate_ordering(positions: &[[f64; 3]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..positions.len()).collect();
    idx.sort_by(|&a, &b| {
        let pa = positions[a];
        let pb = positions[b];
        (pa[2], pa[1], pa[0])
            .partial_cmp(&(pb[2], pb[1], pb[0]))
            .unwrap()
    });
    let mut perm = vec![0usize; positions.len()];
    for (new, &old) in idx.iter().enumerate() {
        perm[old] = new;
    }
    perm
}

/// Largest eigenpair of `M x = lambda A x` found by blocked power iteration
/// on `A^-1 M` with Rayleigh-Ritz extraction.
pub struct PencilTop {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `||M x - lambda A x|| / ||M x||` at exit.
    pub residual: f64,
}

/// `a_solve` must apply `A^-1`; `m_mul`/`a_mul` apply `M` and `A`.
///
/// Returns the best pair seen; iteration stops at `tol`, at `max_iter`, or
/// when the residual stagnates at its rounding floor. The caller judges the
/// returned residual.
#[allow(clippy::too_many_arguments)]
pub fn pencil_top(
    n: usize,
    m_mul: &dyn Fn(&[f64], &mut [f64]),
    a_mul: &dyn Fn(&[f64], &mut [f64]),
    a_solve: &dyn Fn(&[f64]) -> Vec<f64>,
    block: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<PencilTop, LaError> {
    let b = block.clamp(1, n);
    let mut rng = SplitMix64::new(seed);
    let mut basis: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..n).map(|_| rng.sym()).collect())
        .collect();
    orthonormalize(&mut basis);
    let mut tmp = vec![0.0; n];
    let mut best = PencilTop {
        lambda: 0.0,
        x: basis[0].clone(),
        iterations: 0,
        residual: f64::INFINITY,
    };
    let mut last_improvement = 0usize;
    for iter in 1..=max_iter {
        // Y = A^-1 M X
        let mut ys: Vec<Vec<f64>> = Vec::with_capacity(b);
        for x in &basis {
            m_mul(x, &mut tmp);
            ys.push(a_solve(&tmp));
        }
        orthonormalize(&mut ys);
        // Rayleigh-Ritz on the pencil restricted to span(Y)
        let mut mr = DenseMat::zeros(b, b);
        let mut ar = DenseMat::zeros(b, b);
        for (j, y) in ys.iter().enumerate() {
            m_mul(y, &mut tmp);
            for (i, yi) in ys.iter().enumerate() {
                *mr.at_mut(i, j) = dot_vec(yi, &tmp);
            }
            a_mul(y, &mut tmp);
            for (i, yi) in ys.iter().enumerate() {
                *ar.at_mut(i, j) = dot_vec(yi, &tmp);
            }
        }
        symmetrize(&mut mr);
        symmetrize(&mut ar);
        let (vals, vecs) = dense_generalized_eigh(&mr, &ar)?;
        // rotate the basis onto the Ritz vectors, best last -> first
        let mut rotated: Vec<Vec<f64>> = Vec::with_capacity(b);
        for k in 0..b {
            let col = b - 1 - k;
            let mut v = vec![0.0; n];
            for (j, y) in ys.iter().enumerate() {
                let c = vecs.at(j, col);
                for (vi, yi) in v.iter_mut().zip(y.iter()) {
                    *vi += c * yi;
                }
            }
            rotated.push(v);
        }
        basis = rotated;
        let lambda = vals[b - 1];
        // residual of the leading pair
        let x = &basis[0];
        m_mul(x, &mut tmp);
        let mnorm = norm_vec(&tmp);
        let ax = {
            let mut ax = vec![0.0; n];
            a_mul(x, &mut ax);
            ax
        };
        let mut res = 0.0f64;
        for i in 0..n {
            let r = tmp[i] - lambda * ax[i];
            res += r * r;
        }
        let rel = res.sqrt() / mnorm.max(f64::MIN_POSITIVE);
        if rel < best.residual {
            last_improvement = iter;
            best = PencilTop {
                lambda,
                x: x.clone(),
                iterations: iter,
                residual: rel,
            };
        }
        if rel <= tol || iter.saturating_sub(last_improvement) >= 15 {
            break;
        }
    }
    Ok(best)
}

fn symmetrize(m: &mut DenseMat) {
    for i in 0..m.rows {
        for j in (i + 1)..m.cols {
            let avg = 0.5 * (m.at(i, j) + m.at(j, i));
            *m.at_mut(i, j) = avg;
            *m.at_mut(j, i) = avg;
        }
    }
}

pub(crate) fn dot_vec(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Error-free sum transformation (Knuth).
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Error-free product via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = libm::fma(a, b, -p);
    (p, e)
}

/// Compensated accumulator: splits every product into value and rounding
/// error, so long cancelling sums (eigen-residual components) are measured
/// to roughly double-double accuracy.
#[derive(Clone, Copy, Default)]
pub struct CompAcc {
    hi: f64,
    lo: f64,
}

impl CompAcc {
    #[inline]
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let (p, pe) = two_prod(a, b);
        let (s, se) = two_sum(self.hi, p);
        self.hi = s;
        self.lo += pe + se;
    }

    /// Adds `a * b * c` with both products compensated.
    #[inline]
    pub fn add_prod3(&mut self, a: f64, b: f64, c: f64) {
        let (p, pe) = two_prod(a, b);
        let (q, qe) = two_prod(p, c);
        let (s, se) = two_sum(self.hi, q);
        self.hi = s;
        self.lo += qe + pe * c + se;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

pub(crate) fn norm_vec(a: &[f64]) -> f64 {
    dot_vec(a, a).sqrt()
}

/// Modified Gram-Schmidt; drops nothing, re-randomizing is the caller's job.
fn orthonormalize(vs: &mut [Vec<f64>]) {
    let m = vs.len();
    for i in 0..m {
        for j in 0..i {
            let (head, tail) = vs.split_at_mut(i);
            let c = dot_vec(&tail[0], &head[j]);
            for (t, h) in tail[0].iter_mut().zip(head[j].iter()) {
                *t -= c * h;
            }
        }
        let n = norm_vec(&vs[i]);
        if n > 1e-300 {
            for x in vs[i].iter_mut() {
                *x /= n;
            }
        }
    }
}

/// Largest and smallest singular value of the leading `dim x dim` block.
/// Closed form for 2x2, Jacobi iteration on `M^T M` for 3x3.
pub fn singular_extremes(m: &[[f64; 3]; 3], dim: usize) -> (f64, f64) {
    if dim == 2 {
        // stable closed form: sigma = Q +- R avoids the cancellation of
        // sqrt(t^2 - 4 det^2) when the singular values coincide
        let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
        let e = (a + d) / 2.0;
        let f = (a - d) / 2.0;
        let g = (b + c) / 2.0;
        let h = (b - c) / 2.0;
        let q = (e * e + h * h).sqrt();
        let r = (f * f + g * g).sqrt();
        (q + r, (q - r).abs())
    } else {
        let mut g = DenseMat::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += m[k][i] * m[k][j];
                }
                *g.at_mut(i, j) = s;
            }
        }
        let (vals, _) = jacobi_eigh(&g);
        (vals[2].max(0.0).sqrt(), vals[0].max(0.0).sqrt())
    }
}
