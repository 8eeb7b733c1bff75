//! Symmetric sparse matrices and their solvers.
//!
//! Matrices are stored in full CSR form (both triangles) over a shared
//! [`Pattern`]. The default solver is an up-looking LDLᵀ factorization under a
//! nested-dissection ordering; preconditioned conjugate gradients is kept as
//! the iterative alternative.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Symmetric sparsity structure in compressed-row form with sorted columns.
#[derive(Debug)]
pub struct Pattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    symbolic: OnceLock<Arc<SymbolicLdl>>,
}

impl Pattern {
    /// Builds a pattern from (row, col) pairs. The pairs are symmetrized and
    /// the diagonal is always present.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (i, j) in pairs {
            rows[i].push(j);
            rows[j].push(i);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, symbolic: OnceLock::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage position of entry (i, j), if present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }

    fn symbolic(&self) -> Arc<SymbolicLdl> {
        self.symbolic.get_or_init(|| Arc::new(SymbolicLdl::analyze(self))).clone()
    }
}

#[derive(Debug, Clone)]
pub struct SparseSymOperator {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl SparseSymOperator {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn identity(n: usize) -> Self {
        let pattern = Arc::new(Pattern::from_pairs(n, std::iter::empty()));
        Self { values: vec![1.0; n], pattern }
    }

    /// Dense-to-sparse conversion; entries with `|a| == 0` off the diagonal
    /// are dropped. The input must be symmetric to within `1e-14·max|A|`.
    pub fn from_dense(a: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut pairs = Vec::new();
        for i in 0..n {
            if a[i].len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: a[i].len() });
            }
            for j in 0..i {
                if (a[i][j] - a[j][i]).abs() > 1e-14 * scale {
                    return Err(Error::Invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
                if a[i][j] != 0.0 {
                    pairs.push((i, j));
                }
            }
        }
        let mut op = Self::zeros(Arc::new(Pattern::from_pairs(n, pairs)));
        for i in 0..n {
            let start = op.pattern.row_ptr[i];
            for (k, &j) in op.pattern.row(i).iter().enumerate() {
                op.values[start + k] = a[i][j];
            }
        }
        Ok(op)
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let p = self.pattern.position(i, j).expect("entry outside the sparsity pattern");
        self.values[p] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.max_abs();
        (0..self.dim()).all(|i| self.pattern.row(i).iter().all(|&j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// `self + scale·other` over the same pattern.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.pattern, &other.pattern) {
            return Err(Error::Invalid("operators have different sparsity patterns".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + scale * b).collect();
        Ok(Self { pattern: self.pattern.clone(), values })
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: y.len() });
        }
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            *yi = s;
        }
        Ok(())
    }

    /// `b − A x` with every row accumulated in double-double arithmetic, so
    /// the result is accurate even when it cancels to far below `‖A‖‖x‖`.
    pub fn residual_compensated(&self, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let p = &self.pattern;
        Ok((0..n)
            .map(|i| {
                let (mut s, mut c) = (b[i], 0.0);
                for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                    let (prod, ep) = two_prod(-self.values[k], x[p.col_idx[k]]);
                    let (sum, es) = two_sum(s, prod);
                    s = sum;
                    c += ep + es;
                }
                s + c
            })
            .collect())
    }

    /// `A x` accumulated like [`Self::residual_compensated`].
    pub fn matvec_compensated(&self, x: &[f64]) -> Result<Vec<f64>> {
        let zero = vec![0.0; x.len()];
        Ok(self.residual_compensated(&zero, x)?.into_iter().map(|v| -v).collect())
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let p = &self.pattern;
        (0..self.dim())
            .map(|i| self.values[p.row_ptr[i]..p.row_ptr[i + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// xᵀ A y
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(dot(x, &self.matvec(y)?))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn factor(&self) -> Result<LdlFactor> {
        LdlFactor::new(self)
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y ← y + alpha·x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

// ---------------------------------------------------------------------------
// Ordering

/// Nested dissection on the adjacency graph using breadth-first level
/// structures: the middle level of a rooted level structure from a
/// pseudo-peripheral vertex is the separator, which is numbered last.
fn nested_dissection(pattern: &Pattern) -> Vec<usize> {
    const LEAF: usize = 64;
    let n = pattern.n;
    let mut order = Vec::with_capacity(n);
    // Subgraph membership tag; vertices of the part being processed carry
    // the part's id.
    let mut tag = vec![0usize; n];
    let mut next_tag = 1usize;
    let mut level = vec![usize::MAX; n];

    let all: Vec<usize> = (0..n).collect();
    // Explicit stack of (vertices, emitted?) frames. A frame with
    // `separator` set emits those vertices once its two halves are done.
    enum Frame {
        Split(Vec<usize>),
        Emit(Vec<usize>),
    }
    let mut stack = vec![Frame::Split(all)];
    while let Some(frame) = stack.pop() {
        let verts = match frame {
            Frame::Emit(v) => {
                order.extend(v);
                continue;
            }
            Frame::Split(v) => v,
        };
        if verts.len() <= LEAF {
            order.extend(verts);
            continue;
        }
        let id = next_tag;
        next_tag += 1;
        for &v in &verts {
            tag[v] = id;
            level[v] = usize::MAX;
        }
        let bfs = |root: usize, level: &mut [usize], members: &[usize]| -> Vec<Vec<usize>> {
            for &v in members {
                level[v] = usize::MAX;
            }
            let mut levels = vec![vec![root]];
            level[root] = 0;
            loop {
                let mut next = Vec::new();
                for &v in levels.last().expect("non-empty") {
                    for &w in pattern.row(v) {
                        if tag[w] == id && level[w] == usize::MAX {
                            level[w] = levels.len();
                            next.push(w);
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                levels.push(next);
            }
            levels
        };

        // Pseudo-peripheral root.
        let mut root = verts[0];
        let mut levels = bfs(root, &mut level, &verts);
        for _ in 0..4 {
            let last = levels.last().expect("non-empty");
            let cand = *last
                .iter()
                .min_by_key(|&&v| pattern.row(v).iter().filter(|&&w| tag[w] == id).count())
                .expect("non-empty");
            let cand_levels = bfs(cand, &mut level, &verts);
            if cand_levels.len() <= levels.len() {
                break;
            }
            root = cand;
            levels = cand_levels;
        }
        let _ = root;
        let reached: usize = levels.iter().map(Vec::len).sum();
        if reached < verts.len() {
            // Disconnected: split off the reached component.
            let reached_set: Vec<usize> = levels.concat();
            let rest: Vec<usize> = verts.iter().copied().filter(|&v| level[v] == usize::MAX).collect();
            stack.push(Frame::Split(rest));
            stack.push(Frame::Split(reached_set));
            continue;
        }
        if levels.len() < 3 {
            order.extend(verts);
            continue;
        }
        let half = verts.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (k, l) in levels.iter().enumerate() {
            acc += l.len();
            if acc >= half {
                mid = k.clamp(1, levels.len() - 2);
                break;
            }
        }
        let first: Vec<usize> = levels[..mid].concat();
        let second: Vec<usize> = levels[mid + 1..].concat();
        let sep = levels[mid].clone();
        stack.push(Frame::Emit(sep));
        stack.push(Frame::Split(second));
        stack.push(Frame::Split(first));
    }
    order
}

// ---------------------------------------------------------------------------
// LDLᵀ

/// Ordering, elimination tree and column counts for a pattern.
#[derive(Debug)]
pub struct SymbolicLdl {
    perm: Vec<usize>,
    perm_inv: Vec<usize>,
    parent: Vec<usize>,
    l_ptr: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl SymbolicLdl {
    fn analyze(pattern: &Pattern) -> Self {
        let n = pattern.n;
        let perm = nested_dissection(pattern);
        let mut perm_inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            perm_inv[p] = k;
        }
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &col in pattern.row(perm[k]) {
                let mut i = perm_inv[col];
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
        let mut l_ptr = Vec::with_capacity(n + 1);
        l_ptr.push(0);
        for k in 0..n {
            l_ptr.push(l_ptr[k] + lnz[k]);
        }
        Self { perm, perm_inv, parent, l_ptr }
    }

    pub fn factor_nnz(&self) -> usize {
        *self.l_ptr.last().unwrap_or(&0)
    }
}

/// Numeric LDLᵀ factorization of a symmetric positive definite operator.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    symbolic: Arc<SymbolicLdl>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Fails with [`Error::Coercivity`] when a pivot is not safely positive.
    pub fn new(a: &SparseSymOperator) -> Result<Self> {
        let pattern = &a.pattern;
        let sym = pattern.symbolic();
        let n = pattern.n;
        let nnz_l = sym.factor_nnz();
        let mut l_idx = vec![0usize; nnz_l];
        let mut l_val = vec![0.0; nnz_l];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut stack = vec![0usize; n];
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let row = sym.perm[k];
            let mut diag = 0.0;
            for p in pattern.row_ptr[row]..pattern.row_ptr[row + 1] {
                let mut i = sym.perm_inv[pattern.col_idx[p]];
                if i > k {
                    continue;
                }
                if i == k {
                    diag = a.values[p].abs();
                }
                y[i] += a.values[p];
                let mut len = 0;
                while flag[i] != k {
                    stack[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = sym.parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    stack[top] = stack[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &stack[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let start = sym.l_ptr[i];
                let end = start + lnz[i];
                for p in start..end {
                    y[l_idx[p]] -= l_val[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                l_idx[end] = k;
                l_val[end] = l_ki;
                lnz[i] += 1;
            }
            if !(d[k] > 1e-14 * diag) || !d[k].is_finite() {
                return Err(Error::Coercivity { row: sym.perm[k], pivot: d[k] });
            }
        }
        Ok(Self { symbolic: sym, l_idx, l_val, d })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let sym = &self.symbolic;
        let mut x: Vec<f64> = sym.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            for p in sym.l_ptr[j]..sym.l_ptr[j + 1] {
                x[self.l_idx[p]] -= self.l_val[p] * xj;
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in sym.l_ptr[j]..sym.l_ptr[j + 1] {
                s -= self.l_val[p] * x[self.l_idx[p]];
            }
            x[j] = s;
        }
        let mut out = vec![0.0; n];
        for (k, &p) in sym.perm.iter().enumerate() {
            out[p] = x[k];
        }
        Ok(out)
    }
}

/// Solves `A x = b` for symmetric positive definite `A` with a direct
/// factorization plus iterative refinement; see [`solve_refined`].
pub fn solve_spd(a: &SparseSymOperator, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let factor = a.factor()?;
    solve_refined(a, &factor, b, tol)
}

/// Triangular solves followed by iterative refinement with compensated
/// residuals, continued until the correction stops shrinking.
///
/// Fails unless the normwise backward error `‖b − Ax‖ / (‖A‖‖x‖ + ‖b‖)` ends
/// at most `tol`.
pub fn solve_refined(a: &SparseSymOperator, factor: &LdlFactor, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; a.dim()]);
    }
    let anorm = a.norm_inf();
    let mut x = factor.solve(b)?;
    let mut history = Vec::new();
    let mut last_step = f64::INFINITY;
    for _ in 0..6 {
        let r = a.residual_compensated(b, &x)?;
        history.push(norm2(&r) / (anorm * norm2(&x) + bnorm));
        let dx = factor.solve(&r)?;
        let step = norm2(&dx);
        if step >= 0.5 * last_step {
            break;
        }
        axpy(1.0, &dx, &mut x);
        last_step = step;
        if step <= f64::EPSILON * norm2(&x) {
            break;
        }
    }
    let r = a.residual_compensated(b, &x)?;
    let backward = norm2(&r) / (anorm * norm2(&x) + bnorm);
    history.push(backward);
    if backward <= tol {
        Ok(x)
    } else {
        Err(Error::LinearSolve { tol, history })
    }
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg(a: &SparseSymOperator, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let dinv: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();
    for _ in 0..max_iter {
        a.matvec_into(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            history.push(norm2(&r) / bnorm);
            return Err(Error::Coercivity { row: 0, pivot: pap });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok(x);
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&dinv) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::LinearSolve { tol, history })
}
