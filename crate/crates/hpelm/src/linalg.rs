//! Dense row-major matrices, streaming normal-equation accumulation, and the
//! regularized least-squares solve used for the output weights.
//!
//! The training path never materializes the full hidden-layer matrix: row
//! blocks are folded into a [`NormalEqAccumulator`] holding `HᵀH` and `HᵀT`,
//! and the output weights come out of a Cholesky solve of
//! `(HᵀH + ridge·I)β = HᵀT`. A Jacobi-SVD pseudoinverse ([`pinv_oracle`])
//! exists as an independent cross-check of that solve; it never feeds the
//! production path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Build from a row-major buffer. Rejects length mismatches and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "from_vec",
                format!("buffer length {} != {rows}x{cols}", data.len()),
            ));
        }
        let m = DenseMatrix { rows, cols, data };
        m.check_finite("from_vec")?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::shape(
                    "from_rows",
                    format!("row {i} has {} entries, expected {cols}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn check_finite(&self, op: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Numeric(format!("non-finite entry produced by {op}")))
        }
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::shape(
                "matmul",
                format!(
                    "lhs is {}x{}, rhs is {}x{}",
                    self.rows, self.cols, rhs.rows, rhs.cols
                ),
            ));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = out.row_mut(i);
            for (k, &a) in arow.iter().enumerate() {
                let brow = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out.check_finite("matmul")?;
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise `self - rhs`.
    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.shape() != rhs.shape() {
            return Err(Error::shape(
                "sub",
                format!("lhs {:?} vs rhs {:?}", self.shape(), rhs.shape()),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<DenseMatrix> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            if r >= self.rows {
                return Err(Error::shape(
                    "select_rows",
                    format!("row index {r} out of range for {} rows", self.rows),
                ));
            }
            data.extend_from_slice(self.row(r));
        }
        Ok(DenseMatrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        })
    }

    pub fn select_columns(&self, idx: &[usize]) -> Result<DenseMatrix> {
        for &c in idx {
            if c >= self.cols {
                return Err(Error::shape(
                    "select_columns",
                    format!("column index {c} out of range for {} columns", self.cols),
                ));
            }
        }
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(idx.iter().map(|&c| row[c]));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        })
    }

    /// Horizontal concatenation; all blocks must share a row count.
    pub fn hconcat(blocks: &[DenseMatrix]) -> Result<DenseMatrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = DenseMatrix::zeros(rows, cols);
        let mut offset = 0;
        for (i, b) in blocks.iter().enumerate() {
            if b.rows != rows {
                return Err(Error::shape(
                    "hconcat",
                    format!("block {i} has {} rows, expected {rows}", b.rows),
                ));
            }
            for r in 0..rows {
                out.row_mut(r)[offset..offset + b.cols].copy_from_slice(b.row(r));
            }
            offset += b.cols;
        }
        Ok(out)
    }
}

/// Ridge policy for the normal-equation solve.
///
/// `Auto` resolves to `1e-9 · trace(HᵀH)/L`, a dimension-aware relative
/// default; `Fixed(0.0)` is an honest unregularized solve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Ridge {
    #[default]
    Auto,
    Fixed(f64),
}

impl std::str::FromStr for Ridge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Ridge::Auto);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("ridge must be `auto` or a number, got `{s}`")))?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Config(format!("ridge must be >= 0, got {v}")));
        }
        Ok(Ridge::Fixed(v))
    }
}

const RIDGE_REL: f64 = 1e-9;

/// Streaming accumulator for the normal-equation factors `HᵀH` and `HᵀT`.
///
/// Row blocks are ingested one at a time; the sum of squares of the targets
/// is tracked alongside so a residual estimate is available without a second
/// pass over the data. Gram symmetry is maintained exactly (the lower
/// triangle mirrors the upper after every block).
#[derive(Debug, Clone)]
pub struct NormalEqAccumulator {
    gram: DenseMatrix,
    cross: DenseMatrix,
    rows_seen: usize,
    t_sq: f64,
}

impl NormalEqAccumulator {
    /// `l` hidden columns, `m` target columns.
    pub fn new(l: usize, m: usize) -> Self {
        NormalEqAccumulator {
            gram: DenseMatrix::zeros(l, l),
            cross: DenseMatrix::zeros(l, m),
            rows_seen: 0,
            t_sq: 0.0,
        }
    }

    pub fn hidden_cols(&self) -> usize {
        self.gram.rows
    }

    pub fn target_cols(&self) -> usize {
        self.cross.cols
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    pub fn cross(&self) -> &DenseMatrix {
        &self.cross
    }

    /// Fold one `(H_block, T_block)` pair into the running sums.
    pub fn ingest(&mut self, h_block: &DenseMatrix, t_block: &DenseMatrix) -> Result<()> {
        let l = self.hidden_cols();
        let m = self.target_cols();
        if h_block.cols() != l {
            return Err(Error::shape(
                "accumulate",
                format!("h_block has {} columns, expected {l}", h_block.cols()),
            ));
        }
        if t_block.cols() != m {
            return Err(Error::shape(
                "accumulate",
                format!("t_block has {} columns, expected {m}", t_block.cols()),
            ));
        }
        if h_block.rows() != t_block.rows() || h_block.rows() == 0 {
            return Err(Error::shape(
                "accumulate",
                format!(
                    "h_block has {} rows, t_block has {} (need equal, >= 1)",
                    h_block.rows(),
                    t_block.rows()
                ),
            ));
        }
        h_block.check_finite("accumulate(h_block)")?;
        t_block.check_finite("accumulate(t_block)")?;

        for r in 0..h_block.rows() {
            let hrow = h_block.row(r);
            let trow = t_block.row(r);
            for i in 0..l {
                let hi = hrow[i];
                // upper triangle of the rank-1 update
                let grow = &mut self.gram.data[i * l + i..(i + 1) * l];
                for (g, &hj) in grow.iter_mut().zip(&hrow[i..]) {
                    *g += hi * hj;
                }
                let crow = &mut self.cross.data[i * m..(i + 1) * m];
                for (c, &t) in crow.iter_mut().zip(trow) {
                    *c += hi * t;
                }
            }
            self.t_sq += trow.iter().map(|t| t * t).sum::<f64>();
        }
        // mirror so the stored gram is symmetric bit-for-bit
        for i in 1..l {
            for j in 0..i {
                self.gram.data[i * l + j] = self.gram.data[j * l + i];
            }
        }
        self.rows_seen += h_block.rows();
        Ok(())
    }

    /// Entrywise merge of a sibling accumulator (for per-thread accumulation).
    pub fn merge(&mut self, other: &NormalEqAccumulator) -> Result<()> {
        if self.gram.shape() != other.gram.shape() || self.cross.shape() != other.cross.shape() {
            return Err(Error::shape(
                "merge",
                format!(
                    "accumulators disagree: {:?}/{:?} vs {:?}/{:?}",
                    self.gram.shape(),
                    self.cross.shape(),
                    other.gram.shape(),
                    other.cross.shape()
                ),
            ));
        }
        for (a, b) in self.gram.data.iter_mut().zip(&other.gram.data) {
            *a += b;
        }
        for (a, b) in self.cross.data.iter_mut().zip(&other.cross.data) {
            *a += b;
        }
        self.rows_seen += other.rows_seen;
        self.t_sq += other.t_sq;
        Ok(())
    }
}

/// Output of [`solve_normal`].
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Output weights, `L x m`.
    pub beta: DenseMatrix,
    /// `‖Hβ−T‖_F` estimated from the accumulated statistics
    /// (`‖T‖² − 2⟨β,HᵀT⟩ + ⟨β,HᵀHβ⟩`, clamped at zero). Exact to roundoff;
    /// callers needing full precision near zero recompute it in a data pass.
    pub residual_norm: f64,
    /// The ridge that actually produced `beta` (after any escalation).
    pub ridge_used: f64,
}

/// Solve `(HᵀH + ridge·I) β = HᵀT` by Cholesky factorization.
///
/// If the factorization hits a non-positive pivot the ridge is escalated
/// `x100` up to three times, starting from the Auto value when the requested
/// ridge is zero. Two iterative-refinement steps polish the solution.
pub fn solve_normal(acc: &NormalEqAccumulator, ridge: Ridge) -> Result<SolveReport> {
    if acc.rows_seen == 0 {
        return Err(Error::Numeric(
            "solve_normal on empty accumulator (no rows ingested)".into(),
        ));
    }
    let l = acc.hidden_cols();
    let trace: f64 = (0..l).map(|i| acc.gram.get(i, i)).sum();
    let auto = RIDGE_REL * trace / l as f64;
    let requested = match ridge {
        Ridge::Auto => auto,
        Ridge::Fixed(r) => {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::Config(format!("ridge must be >= 0, got {r}")));
            }
            r
        }
    };
    let base = if requested > 0.0 { requested } else { auto };

    let mut last_tried = requested;
    let mut prev = f64::NAN;
    for attempt in 0..4u32 {
        let r = if attempt == 0 {
            requested
        } else {
            base * 100f64.powi(attempt as i32)
        };
        if r == prev {
            continue; // ridge 0 with zero trace: nothing new to try
        }
        prev = r;
        last_tried = r;
        if let Some(beta) = try_solve(acc, r) {
            let residual_norm = residual_from_acc(acc, &beta);
            return Ok(SolveReport {
                beta,
                residual_norm,
                ridge_used: r,
            });
        }
    }
    Err(Error::Numeric(format!(
        "normal equations singular after ridge escalation (last ridge tried {last_tried:e})"
    )))
}

fn try_solve(acc: &NormalEqAccumulator, ridge: f64) -> Option<DenseMatrix> {
    let l = acc.hidden_cols();
    let mut a = acc.gram.clone();
    for i in 0..l {
        a.data[i * l + i] += ridge;
    }
    cholesky_in_place(&mut a).ok()?;
    let mut beta = chol_solve(&a, &acc.cross);
    // iterative refinement: r = cross − (gram + ridge I)·β, β += solve(r)
    for _ in 0..2 {
        let mut resid = acc.gram.matmul(&beta).ok()?;
        for i in 0..l {
            let b = beta.row(i);
            let rr = resid.row_mut(i);
            for (rv, &bv) in rr.iter_mut().zip(b) {
                *rv += ridge * bv;
            }
        }
        let resid = acc.cross.sub(&resid).ok()?;
        let delta = chol_solve(&a, &resid);
        for (b, d) in beta.data.iter_mut().zip(&delta.data) {
            *b += d;
        }
    }
    beta.is_finite().then_some(beta)
}

/// In-place lower Cholesky; fails on any non-positive or non-finite pivot.
fn cholesky_in_place(a: &mut DenseMatrix) -> std::result::Result<(), usize> {
    let n = a.rows;
    for j in 0..n {
        let (head, tail) = a.data.split_at_mut(j * n + j);
        let rowj = &head[j * n..]; // first j entries of row j
        let mut d = tail[0];
        d -= rowj.iter().map(|v| v * v).sum::<f64>();
        if !d.is_finite() || d <= 0.0 {
            return Err(j);
        }
        let ljj = d.sqrt();
        tail[0] = ljj;
        for i in j + 1..n {
            let (top, bottom) = a.data.split_at_mut(i * n);
            let rowj = &top[j * n..j * n + j];
            let rowi = &bottom[..j];
            let s: f64 = rowi.iter().zip(rowj).map(|(x, y)| x * y).sum();
            bottom[j] = (bottom[j] - s) / ljj;
        }
    }
    Ok(())
}

/// Solve `L Lᵀ X = B` given the lower factor from [`cholesky_in_place`].
fn chol_solve(lfac: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let n = lfac.rows;
    let m = b.cols;
    let mut x = b.clone();
    // forward: L y = b, processed as row vectors across all rhs columns
    for i in 0..n {
        let (solved, rest) = x.data.split_at_mut(i * m);
        let xi = &mut rest[..m];
        let lrow = &lfac.data[i * n..i * n + i];
        for (k, &lik) in lrow.iter().enumerate() {
            let yk = &solved[k * m..(k + 1) * m];
            for (xv, &yv) in xi.iter_mut().zip(yk) {
                *xv -= lik * yv;
            }
        }
        let d = lfac.data[i * n + i];
        for xv in xi.iter_mut() {
            *xv /= d;
        }
    }
    // backward: Lᵀ x = y
    for i in (0..n).rev() {
        let (head, tail) = x.data.split_at_mut((i + 1) * m);
        let xi = &mut head[i * m..];
        for k in i + 1..n {
            let lki = lfac.data[k * n + i];
            let xk = &tail[(k - i - 1) * m..(k - i) * m];
            for (xv, &kv) in xi.iter_mut().zip(xk) {
                *xv -= lki * kv;
            }
        }
        let d = lfac.data[i * n + i];
        for xv in xi.iter_mut() {
            *xv /= d;
        }
    }
    x
}

fn residual_from_acc(acc: &NormalEqAccumulator, beta: &DenseMatrix) -> f64 {
    let gb = match acc.gram.matmul(beta) {
        Ok(m) => m,
        Err(_) => return f64::NAN,
    };
    let quad: f64 = beta.data.iter().zip(&gb.data).map(|(b, g)| b * g).sum();
    let lin: f64 = beta
        .data
        .iter()
        .zip(&acc.cross.data)
        .map(|(b, c)| b * c)
        .sum();
    (acc.t_sq - 2.0 * lin + quad).max(0.0).sqrt()
}

/// Moore–Penrose least-squares solution `H† T` by one-sided Jacobi SVD.
///
/// Independent verification oracle for [`solve_normal`]; intended for
/// test-scale inputs (≤ 500x500).
pub fn pinv_oracle(h: &DenseMatrix, t: &DenseMatrix) -> Result<DenseMatrix> {
    if h.rows() == 0 {
        return Err(Error::shape("pinv_oracle", "h has no rows"));
    }
    if h.rows() != t.rows() {
        return Err(Error::shape(
            "pinv_oracle",
            format!("h has {} rows, t has {}", h.rows(), t.rows()),
        ));
    }
    let (u, s, v) = svd_jacobi(h);
    // tolerance in the usual max(m,n)·eps·σ_max form
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let tol = h.rows().max(h.cols()) as f64 * f64::EPSILON * smax;
    // w = Σ⁺ Uᵀ T, then β = V w
    let mut w = u.transpose().matmul(t)?;
    for (j, &sj) in s.iter().enumerate() {
        let inv = if sj > tol { 1.0 / sj } else { 0.0 };
        for wv in w.row_mut(j) {
            *wv *= inv;
        }
    }
    v.matmul(&w)
}

/// Thin SVD `A = U diag(s) Vᵀ` by one-sided Jacobi rotations.
/// For `m >= n`: U is m x n with orthonormal columns, V is n x n.
pub(crate) fn svd_jacobi(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    if a.rows() < a.cols() {
        let (u, s, v) = svd_jacobi(&a.transpose());
        return (v, s, u);
    }
    let m = a.rows();
    let n = a.cols();
    // column-major working copies
    let mut u: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| a.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    const MAX_SWEEPS: usize = 60;
    const TOL: f64 = 1e-15;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (up, uq) = (&u[p], &u[q]);
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for (&x, &y) in up.iter().zip(uq) {
                        al += x * x;
                        be += y * y;
                        ga += x * y;
                    }
                    (al, be, ga)
                };
                if gamma.abs() <= TOL * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let rotate = |cols: &mut Vec<Vec<f64>>| {
                    let (left, right) = cols.split_at_mut(q);
                    let cp = &mut left[p];
                    let cq = &mut right[0];
                    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                        let xp = c * *x - s * *y;
                        let yq = s * *x + c * *y;
                        *x = xp;
                        *y = yq;
                    }
                };
                rotate(&mut u);
                rotate(&mut v);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = u
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));

    let mut umat = DenseMatrix::zeros(m, n);
    let mut vmat = DenseMatrix::zeros(n, n);
    let mut s_sorted = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sj = sigma[src];
        s_sorted.push(sj);
        let scale = if sj > 0.0 { 1.0 / sj } else { 0.0 };
        for (i, &uv) in u[src].iter().enumerate() {
            umat.set(i, dst, uv * scale);
        }
        for (i, &vv) in v[src].iter().enumerate() {
            vmat.set(i, dst, vv);
        }
    }
    (umat, s_sorted, vmat)
}
