//! Dense complex-matrix kernel.
//!
//! Storage is row-major. Bipartite operators always order the tensor factors
//! as (object, apparatus), so the composite index of `|s⟩⊗|a⟩` is
//! `s * dim_a + a`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QmError, Result};

pub type C64 = Complex64;

/// Default absolute tolerance, scaled by `max(1, ‖·‖_F)` where relevant.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Which tensor factor of `H_S ⊗ H_A` to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Object,
    Apparatus,
}

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for col in 0..self.cols {
                let z = self[(r, col)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting wrong lengths and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(QmError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QmError::NonFinite);
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != cols) {
            return Err(QmError::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(r, cols, rows.iter().flatten().copied().collect())
    }

    /// Real matrix from rows; convenient for fixtures.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&x| re(x)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for col in 0..cols {
                data.push(f(r, col));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = re(v);
        }
        m
    }

    /// Projection `|v⟩⟨v|` (not normalised).
    pub fn outer(v: &[C64]) -> Self {
        Self::outer2(v, v)
    }

    /// `|u⟩⟨v|`.
    pub fn outer2(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, col| u[r] * v[col].conj())
    }

    /// Projection onto the computational basis vector `|k⟩` in dimension `n`.
    pub fn basis_projector(n: usize, k: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(k, k)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, col)]).collect()
    }

    pub fn set_column(&mut self, col: usize, v: &[C64]) {
        for (r, &z) in v.iter().enumerate() {
            self[(r, col)] = z;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, col| self[(col, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, col| self[(col, r)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max(1, ‖m‖_F)`, the scale used by all relative tolerances.
    pub fn tol_scale(&self) -> f64 {
        self.frobenius_norm().max(1.0)
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "distance: shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "max_abs_diff: shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `‖m − m†‖_F`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for r in 0..self.rows {
            for col in 0..self.cols {
                acc += (self[(r, col)] - self[(col, r)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol * self.tol_scale()
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermitian_defect();
        let bound = tol * self.tol_scale();
        if defect <= bound {
            Ok(())
        } else {
            Err(QmError::NotHermitian { defect, tol: bound })
        }
    }

    /// Hermitian part `(m + m†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, col| (self[(r, col)] + self[(col, r)].conj()) * 0.5)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.frobenius_norm() <= tol
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "apply: dimension mismatch");
        (0..self.rows)
            .map(|r| {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        assert_eq!(self.cols, other.rows, "trace_product: dimension mismatch");
        assert_eq!(self.rows, other.cols, "trace_product: dimension mismatch");
        let mut acc = ZERO;
        for r in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(r, k)] * other[(k, r)];
            }
        }
        acc
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        vdot(v, &self.apply(v))
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul: dimension mismatch {}x{} * {}x{}", self.rows, self.cols, other.rows, other.cols);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · m · self†`.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        self.matmul(m).matmul(&self.adjoint())
    }

    /// `self · other − other · self`.
    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &self.matmul(other) - &other.matmul(self)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, col): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + col]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, col): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + col]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add: shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub: shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

impl std::iter::Sum for CMatrix {
    /// Panics on an empty iterator; shapes are not known up front.
    fn sum<It: Iterator<Item = CMatrix>>(mut iter: It) -> CMatrix {
        let first = iter.next().expect("sum of an empty matrix iterator");
        iter.fold(first, |acc, m| &acc + &m)
    }
}

/// `⟨u|v⟩`, antilinear in the first argument.
pub fn vdot(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len(), "vdot: length mismatch");
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vnorm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &[C64]) -> Result<Vec<C64>> {
    let n = vnorm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(QmError::NotNormalized(n));
    }
    Ok(v.iter().map(|z| z / n).collect())
}

/// Computational basis vector `|k⟩` in dimension `n`.
pub fn basis_vector(n: usize, k: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[k] = ONE;
    v
}

/// Tensor product of vectors, first factor major.
pub fn kron_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = CMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Partial trace of an operator on `H_S ⊗ H_A`, keeping the requested factor.
pub fn partial_trace(m: &CMatrix, dim_s: usize, dim_a: usize, keep: Subsystem) -> Result<CMatrix> {
    let n = dim_s * dim_a;
    if m.rows != n || m.cols != n {
        return Err(QmError::DimensionMismatch(format!(
            "partial trace of {}x{} over {dim_s}⊗{dim_a}",
            m.rows, m.cols
        )));
    }
    Ok(match keep {
        Subsystem::Object => CMatrix::from_fn(dim_s, dim_s, |s, t| {
            (0..dim_a).map(|a| m[(s * dim_a + a, t * dim_a + a)]).sum()
        }),
        Subsystem::Apparatus => CMatrix::from_fn(dim_a, dim_a, |a, b| {
            (0..dim_s).map(|s| m[(s * dim_a + a, s * dim_a + b)]).sum()
        }),
    })
}

/// `(I⊗left)·m·(I⊗right)` on `H_S ⊗ H_A`, computed block by block.
pub fn sandwich_apparatus(m: &CMatrix, left: &CMatrix, right: &CMatrix, dim_s: usize, dim_a: usize) -> CMatrix {
    assert_eq!(m.rows, dim_s * dim_a, "sandwich_apparatus: dimension mismatch");
    let mut out = CMatrix::zeros(m.rows, m.cols);
    let mut block = CMatrix::zeros(dim_a, dim_a);
    for s in 0..dim_s {
        for t in 0..dim_s {
            for a in 0..dim_a {
                for b in 0..dim_a {
                    block[(a, b)] = m[(s * dim_a + a, t * dim_a + b)];
                }
            }
            let res = left.matmul(&block).matmul(right);
            for a in 0..dim_a {
                for b in 0..dim_a {
                    out[(s * dim_a + a, t * dim_a + b)] = res[(a, b)];
                }
            }
        }
    }
    out
}

/// `Tr_A[m·(I⊗z)]`, an operator on `H_S`.
pub fn reduce_with_apparatus(m: &CMatrix, z: &CMatrix, dim_s: usize, dim_a: usize) -> CMatrix {
    assert_eq!(m.rows, dim_s * dim_a, "reduce_with_apparatus: dimension mismatch");
    CMatrix::from_fn(dim_s, dim_s, |s, t| {
        let mut acc = ZERO;
        for a in 0..dim_a {
            for b in 0..dim_a {
                acc += m[(s * dim_a + a, t * dim_a + b)] * z[(b, a)];
            }
        }
        acc
    })
}

/// `⟨v|(I⊗z)|v⟩` for a joint vector.
pub fn apparatus_expectation(v: &[C64], z: &CMatrix, dim_s: usize, dim_a: usize) -> C64 {
    assert_eq!(v.len(), dim_s * dim_a, "apparatus_expectation: dimension mismatch");
    let mut acc = ZERO;
    for s in 0..dim_s {
        let block = &v[s * dim_a..(s + 1) * dim_a];
        acc += vdot(block, &z.apply(block));
    }
    acc
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// `V f(Λ) V†` for a complex-valued spectral function.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let v = &self.eigenvectors;
        let n = self.dim();
        let mut scaled = v.clone();
        for col in 0..n {
            let w = f(self.eigenvalues[col]);
            for r in 0..n {
                scaled[(r, col)] *= w;
            }
        }
        scaled.matmul(&v.adjoint())
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn(re)
    }

    /// Sum of the eigenprojections whose indices satisfy `pick`.
    pub fn projection(&self, pick: impl Fn(usize) -> bool) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for k in (0..n).filter(|&k| pick(k)) {
            for r in 0..n {
                let vr = self.eigenvectors[(r, k)];
                for col in 0..n {
                    out[(r, col)] += vr * self.eigenvectors[(col, k)].conj();
                }
            }
        }
        out
    }
}

/// Rotates a vector so that its largest-modulus entry (first one, up to round-off) is real positive.
fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-8)).copied().unwrap_or(ONE);
    let phase = pivot.conj() / pivot.norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending.
pub fn herm_eig(h: &CMatrix) -> Result<HermEig> {
    if !h.is_square() {
        return Err(QmError::DimensionMismatch(format!("herm_eig of {}x{}", h.rows, h.cols)));
    }
    h.check_hermitian(DEFAULT_TOL)?;
    let n = h.rows;
    if n == 0 {
        return Ok(HermEig { eigenvalues: vec![], eigenvectors: CMatrix::zeros(0, 0) });
    }
    let herm = h.hermitian_part();
    let (values, vectors): (Vec<f64>, CMatrix) = if herm.is_real() {
        let real = DMatrix::from_fn(n, n, |r, col| herm[(r, col)].re);
        let eig = real.symmetric_eigen();
        let vecs = CMatrix::from_fn(n, n, |r, col| re(eig.eigenvectors[(r, col)]));
        (eig.eigenvalues.iter().copied().collect(), vecs)
    } else {
        let eig = herm.to_nalgebra().symmetric_eigen();
        let vecs = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, col)]);
        (eig.eigenvalues.iter().copied().collect(), vecs)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut eigenvectors = CMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src);
        fix_phase(&mut col);
        eigenvectors.set_column(dst, &col);
        eigenvalues.push(values[src]);
    }
    Ok(HermEig { eigenvalues, eigenvectors })
}

/// Square root of a positive semi-definite matrix.
///
/// Eigenvalues in `[-1e-10, 0)` are treated as round-off and clamped to zero;
/// anything below `-1e-8·max(1, ‖p‖_F)` is rejected.
pub fn psd_sqrt(p: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(p)?;
    let floor = -1e-8 * p.tol_scale();
    if let Some(&min) = eig.eigenvalues.first() {
        if min < floor {
            return Err(QmError::NotPositive(min));
        }
    }
    Ok(eig.apply_fn(|x| re(x.max(0.0).sqrt())))
}

/// `exp(i·scale·h)` for Hermitian `h`.
pub fn expm_i_herm(h: &CMatrix, scale: f64) -> Result<CMatrix> {
    let eig = herm_eig(h)?;
    Ok(eig.apply_fn(|x| C64::from_polar(1.0, scale * x)))
}

/// Smallest projection `Q` with `Q·p = p`: the span of eigenvectors with eigenvalue above `tol`.
pub fn support_projection(p: &CMatrix, tol: f64) -> Result<CMatrix> {
    let eig = herm_eig(p)?;
    let floor = -(tol.max(1e-8 * p.tol_scale()));
    if let Some(&min) = eig.eigenvalues.first() {
        if min < floor {
            return Err(QmError::NotPositive(min));
        }
    }
    Ok(eig.projection(|k| eig.eigenvalues[k] > tol))
}

/// Schmidt (biorthogonal) decomposition of a unit vector in `H_S ⊗ H_A`.
#[derive(Debug, Clone)]
pub struct SchmidtForm {
    /// Strictly positive, descending.
    pub coefficients: Vec<f64>,
    /// Orthonormal columns in `H_S`, one per coefficient.
    pub left: CMatrix,
    /// Orthonormal columns in `H_A`, one per coefficient.
    pub right: CMatrix,
}

impl SchmidtForm {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// `Σ c_k α_k ⊗ χ_k`.
    pub fn reassemble(&self) -> Vec<C64> {
        let ds = self.left.rows();
        let da = self.right.rows();
        let mut v = vec![ZERO; ds * da];
        for (k, &ck) in self.coefficients.iter().enumerate() {
            for s in 0..ds {
                let a = self.left[(s, k)] * ck;
                for b in 0..da {
                    v[s * da + b] += a * self.right[(b, k)];
                }
            }
        }
        v
    }
}

/// Squared Schmidt coefficients at or below this are treated as numerical zeros.
const SCHMIDT_CUTOFF: f64 = 1e-14;

pub fn schmidt(v: &[C64], dim_s: usize, dim_a: usize) -> Result<SchmidtForm> {
    if v.len() != dim_s * dim_a {
        return Err(QmError::DimensionMismatch(format!(
            "vector of length {} in {dim_s}⊗{dim_a}",
            v.len()
        )));
    }
    let norm = vnorm(v);
    if (norm - 1.0).abs() > DEFAULT_TOL {
        return Err(QmError::NotNormalized(norm));
    }
    // Ψ[s][a] = v[s·dA + a]; the reduced object state is ΨΨ†.
    let psi = CMatrix::from_vec(dim_s, dim_a, v.to_vec())?;
    let reduced = psi.matmul(&psi.adjoint());
    let eig = herm_eig(&reduced)?;
    let mut picks: Vec<(f64, Vec<C64>)> = (0..dim_s)
        .filter(|&k| eig.eigenvalues[k] > SCHMIDT_CUTOFF)
        .map(|k| (eig.eigenvalues[k], eig.vector(k)))
        .collect();
    picks.sort_by(|(la, va), (lb, vb)| {
        lb.total_cmp(la).then_with(|| {
            for (x, y) in va.iter().zip(vb) {
                let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
                if o != std::cmp::Ordering::Equal {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    let rank = picks.len();
    let mut left = CMatrix::zeros(dim_s, rank);
    let mut right = CMatrix::zeros(dim_a, rank);
    let mut coefficients = Vec::with_capacity(rank);
    for (k, (lambda, alpha)) in picks.iter().enumerate() {
        let ck = lambda.sqrt();
        left.set_column(k, alpha);
        // χ_k[a] = Σ_s conj(α_k[s]) Ψ[s][a] / c_k
        let chi: Vec<C64> = (0..dim_a)
            .map(|a| (0..dim_s).map(|s| alpha[s].conj() * psi[(s, a)]).sum::<C64>() / ck)
            .collect();
        right.set_column(k, &chi);
        coefficients.push(ck);
    }
    Ok(SchmidtForm { coefficients, left, right })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sz() -> CMatrix {
        CMatrix::diag_real(&[1.0, -1.0])
    }

    fn sx() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    fn sy() -> CMatrix {
        CMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap()
    }

    #[test]
    fn kron_identity_and_projectors() {
        assert_eq!(kron(&CMatrix::identity(2), &CMatrix::identity(2)), CMatrix::identity(4));
        let k = kron(&CMatrix::diag_real(&[1.0, 0.0]), &CMatrix::diag_real(&[0.0, 1.0]));
        assert_eq!(k, CMatrix::diag_real(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_zz_on_11() {
        let zz = kron(&sz(), &sz());
        let v = basis_vector(4, 3);
        let out = zz.apply(&v);
        // dense oracle: (σz⊗σz)|11⟩ = (−1)(−1)|11⟩
        assert!((out[3] - ONE).norm() < 1e-15);
        assert!(out[..3].iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn partial_trace_cases() {
        let rho = CMatrix::from_real_rows(&[&[0.7, 0.2], &[0.2, 0.3]]).unwrap();
        let sigma = CMatrix::diag_real(&[0.5, 1.5]);
        let pt = partial_trace(&kron(&rho, &sigma), 2, 2, Subsystem::Object).unwrap();
        assert!(pt.distance(&rho.scale_real(2.0)) < 1e-14);

        let h = 1.0 / 2f64.sqrt();
        let bell = vec![re(h), ZERO, ZERO, re(h)];
        let pt = partial_trace(&CMatrix::outer(&bell), 2, 2, Subsystem::Object).unwrap();
        assert!(pt.distance(&CMatrix::identity(2).scale_real(0.5)) < 1e-15);

        let mixed = CMatrix::identity(4).scale_real(0.25);
        let pt = partial_trace(&mixed, 2, 2, Subsystem::Apparatus).unwrap();
        assert!(pt.distance(&CMatrix::identity(2).scale_real(0.5)) < 1e-15);

        assert!(partial_trace(&CMatrix::identity(3), 2, 2, Subsystem::Object).is_err());
    }

    #[test]
    fn partial_trace_asymmetric_dims() {
        // |0⟩⊗|2⟩ in 2⊗3
        let v = kron_vec(&basis_vector(2, 0), &basis_vector(3, 2));
        let m = CMatrix::outer(&v);
        let s = partial_trace(&m, 2, 3, Subsystem::Object).unwrap();
        let a = partial_trace(&m, 2, 3, Subsystem::Apparatus).unwrap();
        assert_eq!(s, CMatrix::basis_projector(2, 0));
        assert_eq!(a, CMatrix::basis_projector(3, 2));
    }

    #[test]
    fn herm_eig_examples() {
        let e = herm_eig(&sz()).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 1.0]);

        let e = herm_eig(&sx()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14 && (e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let h = 1.0 / 2f64.sqrt();
        let minus = [re(h), re(-h)];
        let plus = [re(h), re(h)];
        assert!((vdot(&e.vector(0), &minus).norm() - 1.0).abs() < 1e-14);
        assert!((vdot(&e.vector(1), &plus).norm() - 1.0).abs() < 1e-14);

        let e = herm_eig(&CMatrix::diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 3.0]);

        let e = herm_eig(&sy()).unwrap();
        assert!(e.reconstruct().distance(&sy()) < 1e-14);

        let bad = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(herm_eig(&bad), Err(QmError::NotHermitian { .. })));
    }

    #[test]
    fn psd_sqrt_examples() {
        let p = CMatrix::diag_real(&[1.0, 0.0]);
        assert!(psd_sqrt(&p).unwrap().distance(&p) < 1e-14);
        let d = psd_sqrt(&CMatrix::diag_real(&[4.0, 9.0])).unwrap();
        assert!(d.distance(&CMatrix::diag_real(&[2.0, 3.0])) < 1e-14);
        let p1 = CMatrix::diag_real(&[0.0, 0.5]);
        let s = psd_sqrt(&p1).unwrap();
        assert!(s.distance(&CMatrix::diag_real(&[0.0, 0.5f64.sqrt()])) < 1e-14);
        assert!(matches!(psd_sqrt(&CMatrix::diag_real(&[1.0, -0.1])), Err(QmError::NotPositive(_))));
        // round-off negativity is clamped
        assert!(psd_sqrt(&CMatrix::diag_real(&[1.0, -1e-12])).is_ok());
    }

    #[test]
    fn expm_examples() {
        let z = CMatrix::zeros(3, 3);
        assert!(expm_i_herm(&z, 1.7).unwrap().distance(&CMatrix::identity(3)) < 1e-15);

        // (σz⊗σy)² = I ⇒ exp(iπ σz⊗σy) = cos π I + i sin π σz⊗σy = −I
        let g = kron(&sz(), &sy());
        let u = expm_i_herm(&g, std::f64::consts::PI).unwrap();
        let series = &CMatrix::identity(4).scale_real(std::f64::consts::PI.cos())
            + &g.scale(I * std::f64::consts::PI.sin());
        assert!(u.distance(&series) < 1e-12);
        assert!(u.distance(&CMatrix::identity(4).scale_real(-1.0)) < 1e-12);

        let h = &kron(&sx(), &sz()) + &kron(&sz(), &CMatrix::identity(2)).scale_real(0.3);
        let prod = expm_i_herm(&h, 0.8).unwrap().matmul(&expm_i_herm(&h, -0.8).unwrap());
        assert!(prod.distance(&CMatrix::identity(4)) < 1e-9);
    }

    #[test]
    fn support_projection_examples() {
        let p = CMatrix::diag_real(&[0.3, 0.0, 0.7]);
        let q = support_projection(&p, 1e-10).unwrap();
        assert!(q.distance(&CMatrix::diag_real(&[1.0, 0.0, 1.0])) < 1e-14);

        let h = 1.0 / 2f64.sqrt();
        let phi = vec![re(h), c(0.0, h)];
        let pp = CMatrix::outer(&phi);
        assert!(support_projection(&pp, 1e-10).unwrap().distance(&pp) < 1e-14);

        let half = CMatrix::identity(2).scale_real(0.5);
        assert!(support_projection(&half, 1e-10).unwrap().distance(&CMatrix::identity(2)) < 1e-14);
        assert!(support_projection(&CMatrix::diag_real(&[1.0, -0.5]), 1e-10).is_err());
    }

    #[test]
    fn schmidt_examples() {
        let prod = kron_vec(&basis_vector(2, 0), &basis_vector(2, 0));
        let f = schmidt(&prod, 2, 2).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.coefficients[0] - 1.0).abs() < 1e-14);

        let h = 1.0 / 2f64.sqrt();
        let bell = vec![re(h), ZERO, ZERO, re(h)];
        let f = schmidt(&bell, 2, 2).unwrap();
        assert_eq!(f.rank(), 2);
        for ck in &f.coefficients {
            assert!((ck - h).abs() < 1e-14);
        }
        let back = f.reassemble();
        assert!(back.iter().zip(&bell).all(|(a, b)| (a - b).norm() < 1e-14));

        assert!(matches!(schmidt(&[ONE, ONE, ZERO, ZERO], 2, 2), Err(QmError::NotNormalized(_))));
    }

    #[test]
    fn schmidt_controlled_rotation_vector() {
        // U(|+⟩⊗|0⟩) for the controlled-R_y(π/2) coupling: (1/√2, 0, 1/2, 1/2)
        let h = 1.0 / 2f64.sqrt();
        let v = vec![re(h), ZERO, re(0.5), re(0.5)];
        let f = schmidt(&v, 2, 2).unwrap();
        // oracle: reduced object state [[1/2, 1/(2√2)], [1/(2√2), 1/2]] has eigenvalues ½ ± 1/(2√2)
        let expect = [0.5 + 0.5 * h, 0.5 - 0.5 * h];
        for (ck, e) in f.coefficients.iter().zip(expect) {
            assert!((ck * ck - e).abs() < 1e-12);
        }
        assert!((expect[0] - 0.8536).abs() < 1e-3 && (expect[1] - 0.1464).abs() < 1e-3);
    }
}
