//! Sparse direct factorizations, the saddle-point solve and the symmetric
//! generalized eigenproblem `S x = mu M x`.
//!
//! Eigenvalues are always reported in descending order, so the smallest one
//! is the last entry.

use faer::linalg::solvers::Solve;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::sparse::linalg::solvers::{Llt as SparseLlt, Lu as SparseLu};
use faer::sparse::linalg::LltError;
use faer::{Mat, MatRef, Par, Side};

mod mixed;

pub use mixed::{galerkin_solve, DualMixedProblem, GalerkinProblem, MixedSolution};

use crate::error::{Error, Result};
use crate::sparse::{norm2, CsrMatrix};

/// Above this many rows the Schur complement is no longer formed densely.
pub const DENSE_LIMIT: usize = 5000;

/// Largest multiplier block solved through a dense Schur complement by
/// [`solve_saddle`]; bigger systems go through a sparse LU of the KKT matrix.
pub const SCHUR_SOLVE_LIMIT: usize = 2000;

/// Columns solved per block when forming `B A^{-1} B^T`.
const BLOCK: usize = 256;

fn col(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

fn col_to_vec(m: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

fn dense_cholesky_error(e: faer::linalg::cholesky::llt::factor::LltError) -> usize {
    match e {
        faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index } => index,
    }
}

/// Sparse Cholesky factorization of an SPD matrix.
pub struct Cholesky {
    n: usize,
    factor: SparseLlt<usize, f64>,
}

impl Cholesky {
    /// Fails with [`Error::NotPositiveDefinite`] naming the first non-positive
    /// pivot (in the fill-reducing ordering).
    pub fn new(k: &CsrMatrix) -> Result<Self> {
        if k.nrows() != k.ncols() {
            return Err(Error::DimensionMismatch(format!("Cholesky of a {}x{} matrix", k.nrows(), k.ncols())));
        }
        let factor = k.to_faer()?.sp_cholesky(Side::Lower).map_err(|e| match e {
            LltError::Numeric(e) => Error::NotPositiveDefinite { pivot: dense_cholesky_error(e) },
            LltError::Generic(e) => Error::Solver(format!("sparse Cholesky failed: {e:?}")),
        })?;
        Ok(Cholesky { n: k.nrows(), factor })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "Cholesky solve dimension mismatch");
        let mut x = col(rhs);
        self.factor.solve_in_place(x.as_mut());
        col_to_vec(x.as_ref(), 0)
    }

    pub fn solve_mat(&self, rhs: MatRef<'_, f64>) -> Mat<f64> {
        let mut x = rhs.to_owned();
        self.factor.solve_in_place(x.as_mut());
        x
    }
}

/// Sparse LU with partial pivoting, used for the indefinite KKT matrix.
pub struct Lu {
    n: usize,
    factor: SparseLu<usize, f64>,
}

impl Lu {
    pub fn new(k: &CsrMatrix) -> Result<Self> {
        if k.nrows() != k.ncols() {
            return Err(Error::DimensionMismatch(format!("LU of a {}x{} matrix", k.nrows(), k.ncols())));
        }
        let factor = k.to_faer()?.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
        Ok(Lu { n: k.nrows(), factor })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n, "LU solve dimension mismatch");
        let mut x = col(rhs);
        self.factor.solve_in_place(x.as_mut());
        col_to_vec(x.as_ref(), 0)
    }

    pub fn solve_mat(&self, rhs: MatRef<'_, f64>) -> Mat<f64> {
        let mut x = rhs.to_owned();
        self.factor.solve_in_place(x.as_mut());
        x
    }
}

/// `A y + B^T x = f`, `B y = g` with `A` SPD of size `N_V` and `B` of size
/// `N_Q x N_V`.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub rhs_f: Vec<f64>,
    pub rhs_g: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    /// Largest of the two relative block residuals.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SaddleMethod {
    /// Dense Schur complement up to [`SCHUR_SOLVE_LIMIT`] rows of `B`, KKT
    /// LU above.
    #[default]
    Auto,
    Schur,
    Kkt,
}

impl SaddleSystem {
    pub fn new(a: CsrMatrix, b: CsrMatrix, rhs_f: Vec<f64>, rhs_g: Vec<f64>) -> Result<Self> {
        let nv = a.nrows();
        if a.ncols() != nv || b.ncols() != nv || rhs_f.len() != nv || rhs_g.len() != b.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "saddle system: A {:?}, B {:?}, f {}, g {}",
                a.shape(),
                b.shape(),
                rhs_f.len(),
                rhs_g.len()
            )));
        }
        if !a.is_symmetric() {
            return Err(Error::InvalidArgument("saddle system: A is not symmetric".into()));
        }
        Ok(SaddleSystem { a, b, rhs_f, rhs_g })
    }

    pub fn n_v(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_q(&self) -> usize {
        self.b.nrows()
    }

    /// Relative block residuals
    /// `|A y + B^T x - f| / (|A| |y| + |B| |x| + |f|)` and
    /// `|B y - g| / (|B| |y| + |g|)`.
    pub fn residuals(&self, y: &[f64], x: &[f64]) -> (f64, f64) {
        let (r1, r2) = self.residual_vectors(y, x);
        let na = self.a.max_abs() * (self.n_v() as f64).sqrt();
        let nb = self.b.max_abs() * (self.n_v().max(self.n_q()) as f64).sqrt();
        let d1 = na * norm2(y) + nb * norm2(x) + norm2(&self.rhs_f);
        let d2 = nb * norm2(y) + norm2(&self.rhs_g);
        let rel = |r: f64, d: f64| if d > 0.0 { r / d } else { r };
        (rel(norm2(&r1), d1), rel(norm2(&r2), d2))
    }

    fn residual_vectors(&self, y: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ay = self.a.matvec(y);
        let btx = self.b.matvec_transpose(x);
        let r1 = (0..self.n_v()).map(|i| self.rhs_f[i] - ay[i] - btx[i]).collect();
        let by = self.b.matvec(y);
        let r2 = (0..self.n_q()).map(|i| self.rhs_g[i] - by[i]).collect();
        (r1, r2)
    }

    /// `[A B^T; B 0]`
    pub fn kkt_matrix(&self) -> CsrMatrix {
        let nv = self.n_v();
        let mut t = self.a.triplets();
        for (i, j, v) in self.b.triplets() {
            t.push((nv + i, j, v));
            t.push((j, nv + i, v));
        }
        CsrMatrix::from_triplets(nv + self.n_q(), nv + self.n_q(), &t)
    }
}

/// Relative residual accepted from [`solve_saddle`].
pub const SADDLE_TOL: f64 = 1e-9;

pub fn solve_saddle(sys: &SaddleSystem) -> Result<SaddleSolution> {
    solve_saddle_with(sys, SaddleMethod::Auto)
}

pub fn solve_saddle_with(sys: &SaddleSystem, method: SaddleMethod) -> Result<SaddleSolution> {
    let use_schur = match method {
        SaddleMethod::Auto => sys.n_q() <= SCHUR_SOLVE_LIMIT,
        SaddleMethod::Schur => true,
        SaddleMethod::Kkt => false,
    };
    if sys.n_q() == 0 {
        let chol = Cholesky::new(&sys.a)?;
        let y = chol.solve(&sys.rhs_f);
        let (r1, _) = sys.residuals(&y, &[]);
        return Ok(SaddleSolution { y, x: vec![], residual: r1 });
    }
    let (y, x) = if use_schur { schur_solve(sys)? } else { kkt_solve(sys)? };
    let (r1, r2) = sys.residuals(&y, &x);
    let residual = r1.max(r2);
    if !residual.is_finite() || residual > SADDLE_TOL {
        return Err(Error::InfSupFailure(format!("block residual {residual:.3e} after solve")));
    }
    Ok(SaddleSolution { y, x, residual })
}

fn schur_solve(sys: &SaddleSystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let schur = SchurOperator::new(&sys.a, &sys.b)?;
    let s = schur.to_dense();
    let llt = s.llt(Side::Lower).map_err(|e| {
        Error::InfSupFailure(format!("pivot {} of the Schur complement is not positive", dense_cholesky_error(e)))
    })?;
    // a Cholesky that succeeds on a numerically singular S still leaves a
    // tiny pivot behind
    let l = llt.L();
    let smax = (0..s.nrows()).map(|i| s[(i, i)]).fold(0.0f64, f64::max);
    let pmin = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if pmin <= 1e-13 * smax {
        return Err(Error::InfSupFailure(format!("pivot ratio {:.3e}", pmin / smax)));
    }
    let ainv_f = schur.chol.solve(&sys.rhs_f);
    let b_ainv_f = sys.b.matvec(&ainv_f);
    let rhs: Vec<f64> = b_ainv_f.iter().zip(&sys.rhs_g).map(|(a, g)| a - g).collect();
    let mut x = col(&rhs);
    llt.solve_in_place(x.as_mut());
    let x = col_to_vec(x.as_ref(), 0);
    let btx = sys.b.matvec_transpose(&x);
    let r: Vec<f64> = sys.rhs_f.iter().zip(&btx).map(|(f, b)| f - b).collect();
    let y = schur.chol.solve(&r);
    Ok((y, x))
}

fn kkt_solve(sys: &SaddleSystem) -> Result<(Vec<f64>, Vec<f64>)> {
    let nv = sys.n_v();
    let kkt = sys.kkt_matrix();
    let lu = Lu::new(&kkt).map_err(|e| Error::InfSupFailure(e.to_string()))?;
    let rhs: Vec<f64> = sys.rhs_f.iter().chain(&sys.rhs_g).copied().collect();
    let mut z = lu.solve(&rhs);
    for _ in 0..3 {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InfSupFailure("KKT factorization produced non-finite values".into()));
        }
        let (r1, r2) = sys.residuals(&z[..nv], &z[nv..]);
        if r1.max(r2) <= 1e-2 * SADDLE_TOL {
            break;
        }
        let kz = kkt.matvec(&z);
        let r: Vec<f64> = rhs.iter().zip(&kz).map(|(a, b)| a - b).collect();
        let dz = lu.solve(&r);
        for (zi, di) in z.iter_mut().zip(dz) {
            *zi += di;
        }
    }
    let x = z.split_off(nv);
    Ok((z, x))
}

/// Applies an inverse to a block of right-hand sides.
pub type BlockSolver<'a> = Box<dyn Fn(MatRef<'_, f64>) -> Mat<f64> + 'a>;

/// Symmetric operator acting on blocks of column vectors.
pub trait SymOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64>;
    fn to_dense(&self) -> Mat<f64>;
    /// Solver for `op z = r`, needed by the iterative path.
    fn inverse(&self) -> Result<BlockSolver<'_>>;
}

impl SymOperator for Mat<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        self * x
    }

    fn to_dense(&self) -> Mat<f64> {
        self.clone()
    }

    fn inverse(&self) -> Result<BlockSolver<'_>> {
        let lu = self.partial_piv_lu();
        Ok(Box::new(move |r| {
            let mut z = r.to_owned();
            lu.solve_in_place(z.as_mut());
            z
        }))
    }
}

impl SymOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        self.mul_dense(x)
    }

    fn to_dense(&self) -> Mat<f64> {
        CsrMatrix::to_dense(self)
    }

    fn inverse(&self) -> Result<BlockSolver<'_>> {
        let chol = Cholesky::new(self)?;
        Ok(Box::new(move |r| chol.solve_mat(r)))
    }
}

/// `S = B A^{-1} B^T` applied through a Cholesky factorization of `A`.
pub struct SchurOperator {
    a: CsrMatrix,
    b: CsrMatrix,
    bt: CsrMatrix,
    chol: Cholesky,
}

impl SchurOperator {
    pub fn new(a: &CsrMatrix, b: &CsrMatrix) -> Result<Self> {
        if a.nrows() != b.ncols() {
            return Err(Error::DimensionMismatch(format!("A is {:?} but B is {:?}", a.shape(), b.shape())));
        }
        Ok(SchurOperator { a: a.clone(), b: b.clone(), bt: b.transpose(), chol: Cholesky::new(a)? })
    }

    pub fn a_factor(&self) -> &Cholesky {
        &self.chol
    }

    /// `-A^{-1} B^T x`, the flux companion of a multiplier vector.
    pub fn lift(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let mut y = self.chol.solve_mat(self.bt.mul_dense(x).as_ref());
        y *= faer::Scale(-1.0);
        y
    }
}

impl SymOperator for SchurOperator {
    fn dim(&self) -> usize {
        self.b.nrows()
    }

    fn apply(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let w = self.chol.solve_mat(self.bt.mul_dense(x).as_ref());
        self.b.mul_dense(w.as_ref())
    }

    fn to_dense(&self) -> Mat<f64> {
        let n = self.dim();
        let mut s = Mat::<f64>::zeros(n, n);
        let mut start = 0;
        while start < n {
            let end = (start + BLOCK).min(n);
            let e = Mat::from_fn(n, end - start, |i, j| if i == start + j { 1.0 } else { 0.0 });
            let block = self.apply(e.as_ref());
            for j in 0..end - start {
                for i in 0..n {
                    s[(i, start + j)] = block[(i, j)];
                }
            }
            start = end;
        }
        // symmetrize away round-off
        for j in 0..n {
            for i in 0..j {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    /// `S^{-1} r` is the multiplier block of the KKT solve with right-hand
    /// side `(0, -r)`.
    fn inverse(&self) -> Result<BlockSolver<'_>> {
        let sys = SaddleSystem {
            a: self.a.clone(),
            b: self.b.clone(),
            rhs_f: vec![0.0; self.a.nrows()],
            rhs_g: vec![0.0; self.b.nrows()],
        };
        let lu = Lu::new(&sys.kkt_matrix())?;
        let nv = self.a.nrows();
        let nq = self.b.nrows();
        Ok(Box::new(move |r| {
            let mut rhs = Mat::<f64>::zeros(nv + nq, r.ncols());
            for j in 0..r.ncols() {
                for i in 0..nq {
                    rhs[(nv + i, j)] = -r[(i, j)];
                }
            }
            let z = lu.solve_mat(rhs.as_ref());
            Mat::from_fn(nq, r.ncols(), |i, j| z[(nv + i, j)])
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest(usize),
    Largest(usize),
    All,
}

/// Eigenpairs of `S x = mu M x`.
#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Descending.
    pub values: Vec<f64>,
    /// `M`-orthonormal columns matching `values`.
    pub vectors: Mat<f64>,
    /// `|S x - mu M x|_2` per pair.
    pub residuals: Vec<f64>,
    /// Estimate of `|S|_2` used to judge the residuals.
    pub op_norm: f64,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        col_to_vec(self.vectors.as_ref(), i)
    }

    pub fn max_relative_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0f64, |m, r| m.max(*r)) / self.op_norm.max(f64::MIN_POSITIVE)
    }
}

/// Accepted `|S x - mu M x| / |S|`.
pub const EIGEN_TOL: f64 = 1e-9;

/// Problem size and number of requested pairs.
fn check_eig_request(s: &dyn SymOperator, m: &CsrMatrix, which: Which) -> Result<(usize, usize)> {
    let n = s.dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!("operator of size {n} with M of shape {:?}", m.shape())));
    }
    let k = match which {
        Which::Smallest(k) | Which::Largest(k) => k,
        Which::All => n,
    };
    if k > n {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs of a problem of size {n}")));
    }
    Ok((n, k))
}

/// Dense up to [`DENSE_LIMIT`], block shift-invert subspace iteration above.
pub fn gen_eig(s: &dyn SymOperator, m: &CsrMatrix, which: Which) -> Result<EigenResult> {
    let (n, _) = check_eig_request(s, m, which)?;
    if n <= DENSE_LIMIT || which == Which::All {
        gen_eig_dense(s, m, which)
    } else {
        gen_eig_iterative(s, m, which)
    }
}

pub fn gen_eig_smallest(s: &dyn SymOperator, m: &CsrMatrix, k: usize) -> Result<EigenResult> {
    gen_eig(s, m, Which::Smallest(k))
}

pub fn gen_eig_largest(s: &dyn SymOperator, m: &CsrMatrix, k: usize) -> Result<EigenResult> {
    gen_eig(s, m, Which::Largest(k))
}

fn selected(n: usize, which: Which) -> Vec<usize> {
    // indices into ascending order, returned descending
    match which {
        Which::All => (0..n).rev().collect(),
        Which::Smallest(k) => (0..k).rev().collect(),
        Which::Largest(k) => (n - k..n).rev().collect(),
    }
}

pub fn gen_eig_dense(s: &dyn SymOperator, m: &CsrMatrix, which: Which) -> Result<EigenResult> {
    let (n, _) = check_eig_request(s, m, which)?;
    let sd = s.to_dense();
    let md = m.to_dense();
    let llt = md.llt(Side::Lower).map_err(|e| Error::NotPositiveDefinite { pivot: dense_cholesky_error(e) })?;
    let l = llt.L();
    // C = L^{-1} S L^{-T}
    let mut c = sd.clone();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let mut c = c.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let evd = c.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("dense eigensolver: {e:?}")))?;
    let idx = selected(n, which);
    let lam = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = idx.iter().map(|&i| lam[i]).collect();
    let mut vectors = Mat::from_fn(n, idx.len(), |r, j| u[(r, idx[j])]);
    solve_upper_triangular_in_place(l.transpose(), vectors.as_mut(), Par::Seq);
    let op_norm = dense_norm_estimate(&sd);
    finish(&sd, m, values, vectors, op_norm)
}

fn dense_norm_estimate(m: &Mat<f64>) -> f64 {
    // max row sum bounds the 2-norm of a symmetric matrix
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn sparse_norm_estimate(m: &CsrMatrix) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

fn finish(
    s: &dyn SymOperator,
    m: &CsrMatrix,
    values: Vec<f64>,
    vectors: Mat<f64>,
    op_norm: f64,
) -> Result<EigenResult> {
    let sx = s.apply(vectors.as_ref());
    let mx = m.mul_dense(vectors.as_ref());
    let residuals = (0..values.len())
        .map(|j| (0..vectors.nrows()).map(|i| (sx[(i, j)] - values[j] * mx[(i, j)]).powi(2)).sum::<f64>().sqrt())
        .collect();
    Ok(EigenResult { values, vectors, residuals, op_norm })
}

fn seed_block(n: usize, p: usize) -> Mat<f64> {
    // deterministic, well-spread start vectors
    Mat::from_fn(n, p, |i, j| {
        let t = (i as f64 + 1.0) * (j as f64 + 1.0) * 0.618_033_988_749_895;
        (t - t.floor()) - 0.5 + if i % (j + 2) == 0 { 0.25 } else { 0.0 }
    })
}

/// Rayleigh-Ritz on the pencil `(H, G)` with `G` SPD; returns ascending
/// values and `G`-orthonormal coefficient vectors.
fn ritz(h: &Mat<f64>, g: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let p = h.nrows();
    let sym = |a: &Mat<f64>| Mat::from_fn(p, p, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let g = sym(g);
    let llt = g.llt(Side::Lower).map_err(|_| Error::Solver("subspace basis lost independence".into()))?;
    let l = llt.L();
    let mut c = sym(h);
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let mut c = c.transpose().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let c = sym(&c);
    let evd = c.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Solver(format!("dense eigensolver: {e:?}")))?;
    let values = (0..p).map(|i| evd.S().column_vector()[i]).collect();
    let mut z = evd.U().to_owned();
    solve_upper_triangular_in_place(l.transpose(), z.as_mut(), Par::Seq);
    Ok((values, z))
}

const MAX_ITER: usize = 2000;

/// Block subspace iteration with Rayleigh-Ritz. For the smallest pairs the
/// iteration operator is `S^{-1} M`, for the largest `M^{-1} S`.
pub fn gen_eig_iterative(s: &dyn SymOperator, m: &CsrMatrix, which: Which) -> Result<EigenResult> {
    let (n, _) = check_eig_request(s, m, which)?;
    let (k, smallest) = match which {
        Which::Smallest(k) => (k, true),
        Which::Largest(k) => (k, false),
        Which::All => (n, true),
    };
    if k == 0 {
        return Ok(EigenResult { values: vec![], vectors: Mat::zeros(n, 0), residuals: vec![], op_norm: 1.0 });
    }
    let p = (2 * k + 8).min(n);
    let sinv = if smallest { Some(s.inverse()?) } else { None };
    let minv = if smallest { None } else { Some(Cholesky::new(m)?) };
    let mut x = seed_block(n, p);
    let mut last_res = f64::INFINITY;
    let mut op_norm = 0.0f64;
    let mnorm = sparse_norm_estimate(m);
    for it in 0..MAX_ITER {
        let (h, g, y) = if let Some(sinv) = &sinv {
            let mx = m.mul_dense(x.as_ref());
            let y = sinv(mx.as_ref());
            // Y^T S Y = Y^T M X
            (y.transpose() * &mx, y.transpose() * m.mul_dense(y.as_ref()), y)
        } else {
            let sx = s.apply(x.as_ref());
            let y = minv.as_ref().unwrap().solve_mat(sx.as_ref());
            (y.transpose() * s.apply(y.as_ref()), y.transpose() * m.mul_dense(y.as_ref()), y)
        };
        let (vals, z) = ritz(&h, &g)?;
        x = &y * &z;
        op_norm = op_norm.max(vals.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        if it % 5 == 4 {
            let order: Vec<usize> = if smallest { (0..k).collect() } else { (p - k..p).collect() };
            let xk = Mat::from_fn(n, k, |i, j| x[(i, order[j])]);
            let vk: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
            let sx = s.apply(xk.as_ref());
            let mx = m.mul_dense(xk.as_ref());
            let scale = op_norm.max(vk.iter().fold(0.0f64, |a, v| a.max(v.abs()))) * mnorm;
            let res = (0..k)
                .map(|j| (0..n).map(|i| (sx[(i, j)] - vk[j] * mx[(i, j)]).powi(2)).sum::<f64>().sqrt())
                .fold(0.0f64, f64::max);
            last_res = res / scale;
            if last_res <= EIGEN_TOL {
                let idx: Vec<usize> = order.into_iter().rev().collect();
                let values = idx.iter().map(|&i| vals[i]).collect();
                let vectors = Mat::from_fn(n, k, |i, j| x[(i, idx[j])]);
                return finish(s, m, values, vectors, scale);
            }
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITER, residual: last_res })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_hand_example() {
        let k = CsrMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let x = Cholesky::new(&k).unwrap().solve(&[1.0, 2.0]);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-15 && (x[1] - 7.0 / 11.0).abs() < 1e-15);
        let x = Cholesky::new(&CsrMatrix::identity(3)).unwrap().solve(&[1.0, -2.0, 3.0]);
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let k = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        assert!(matches!(Cholesky::new(&k), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn saddle_hand_example() {
        let sys = SaddleSystem::new(
            CsrMatrix::identity(2),
            CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0)]),
            vec![0.0, 0.0],
            vec![-1.0],
        )
        .unwrap();
        for method in [SaddleMethod::Schur, SaddleMethod::Kkt] {
            let sol = solve_saddle_with(&sys, method).unwrap();
            assert!((sol.y[0] + 1.0).abs() < 1e-14 && sol.y[1].abs() < 1e-14);
            assert!((sol.x[0] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_deficient_b_is_an_infsup_failure() {
        let b = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (1, 0, 2.0)]);
        let sys = SaddleSystem::new(CsrMatrix::identity(3), b, vec![1.0, 0.0, 0.0], vec![0.0, 1.0]).unwrap();
        for method in [SaddleMethod::Schur, SaddleMethod::Kkt] {
            let err = solve_saddle_with(&sys, method).unwrap_err();
            assert!(err.to_string().contains("inf-sup failure: singular Schur complement"), "{err}");
        }
    }

    #[test]
    fn eig_trivial_cases() {
        let d = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let r = gen_eig_smallest(&d, &CsrMatrix::identity(3), 2).unwrap();
        assert!((r.values[0] - 2.0).abs() < 1e-14 && (r.values[1] - 1.0).abs() < 1e-14);
        let r = gen_eig_largest(&d, &CsrMatrix::identity(3), 1).unwrap();
        assert!((r.values[0] - 3.0).abs() < 1e-14);
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let r = gen_eig(&m, &m, Which::All).unwrap();
        assert!(r.values.iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn iterative_matches_dense() {
        // 1D Laplacian against a lumped mass, clustered low end
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let k = CsrMatrix::from_triplets(n, n, &t);
        let m = CsrMatrix::from_diagonal(&(0..n).map(|i| 1.0 + (i % 3) as f64 * 0.1).collect::<Vec<_>>());
        for which in [Which::Smallest(4), Which::Largest(3)] {
            let a = gen_eig_dense(&k, &m, which).unwrap();
            let b = gen_eig_iterative(&k, &m, which).unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-9 * a.op_norm, "{which:?}: {x} vs {y}");
            }
            assert!(b.max_relative_residual() <= EIGEN_TOL);
        }
    }
}
