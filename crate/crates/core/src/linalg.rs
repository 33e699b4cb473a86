//! Dense complex linear algebra and implicit Kronecker-structured operators.
//!
//! Everything downstream reduces to two primitives: the spectral norm (the
//! minimal tensor norm of `B(H ⊗ … ⊗ K)` realized by Kronecker products) and
//! the extremal eigenvalue of a Hermitian matrix. Small operators are handled
//! by full decompositions, large Kronecker sums by matrix-free power
//! iteration.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex<f64>;

/// Default dimension guard: tensor powers must stay below this unless
/// `OPSPACE_MAX_DIM` overrides it.
pub const DEFAULT_MAX_DIM: usize = 1 << 16;

/// Total dimension at or below which full decompositions are used instead of
/// power iteration.
pub const DENSE_CROSSOVER: usize = 512;

/// Relative tolerance of the power iteration.
pub const POWER_TOL: f64 = 1e-10;

/// Iteration cap of the power iteration.
pub const POWER_MAX_ITER: usize = 10_000;

/// Dimension guard currently in effect (`OPSPACE_MAX_DIM` or the default).
pub fn max_dim() -> usize {
    std::env::var("OPSPACE_MAX_DIM")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(DEFAULT_MAX_DIM)
}

/// Checks a total dimension against the guard, with overflow treated as a
/// guard trip.
pub fn check_dim(dim: u128, context: &str) -> Result<usize> {
    let max = max_dim();
    if dim == 0 || dim > max as u128 {
        return Err(Error::DimensionGuard {
            dim,
            max,
            context: context.to_string(),
        });
    }
    Ok(dim as usize)
}

/// Product of dimensions checked against the guard.
pub fn checked_dim_product(dims: &[usize], context: &str) -> Result<usize> {
    let mut total: u128 = 1;
    for &d in dims {
        total = total.saturating_mul(d as u128);
    }
    check_dim(total, context)
}

/// Deterministic RNG from a root seed and an instance index; instances drawn
/// this way are independent streams of one experiment.
pub fn split_rng(root_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(root_seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    /// Matrix unit `e_{ij}`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.set(i, j, C64::new(1.0, 0.0));
        m
    }

    /// Builds a matrix from a function of (row, col).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must be dim²");
        Self {
            dim,
            data: entries.to_vec(),
        }
    }

    /// 1×1 matrix holding one scalar.
    pub fn scalar(z: C64) -> Self {
        Self { dim: 1, data: vec![z] }
    }

    /// Matrix with i.i.d. standard complex Gaussian entries `(ξ+iη)/√2`,
    /// so `E|entry|² = 1`.
    pub fn gaussian(dim: usize, rng: &mut impl Rng) -> Self {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_fn(dim, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * inv, im * inv)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Entrywise complex conjugate; an involution.
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    /// Transpose without conjugation.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|w| w * z).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, other: &Self, z: C64) {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * z;
        }
    }

    /// Matrix product.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimensions must agree");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Unnormalized trace.
    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖M − M†‖_F, the Hermiticity defect.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).frobenius_norm()
    }

    /// Row-major Kronecker product: block (i,j) of the result is
    /// `self[i,j] · other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let dim = check_dim(
            self.dim as u128 * other.dim as u128,
            "Kronecker product of two matrices",
        )?;
        let (da, db) = (self.dim, other.dim);
        let mut out = Self::zeros(dim);
        for i in 0..da {
            for j in 0..da {
                let a = self.get(i, j);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        out.set(i * db + k, j * db + l, a * other.get(k, l));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Column-major vectorization stacked row by row: `vec(M)[i*d + j] = M[i,j]`.
    pub fn vec_rows(&self) -> Vec<C64> {
        self.data.clone()
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim);
        let n = self.dim;
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (i, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                acc += self.data[i * n + j] * xj;
            }
            *out = acc;
        }
        y
    }

    fn to_na(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Largest singular value. Dense decomposition below the crossover,
    /// matrix-free power iteration above it (with a dense fallback if the
    /// iteration stalls; the decomposition always terminates).
    pub fn spectral_norm(&self) -> f64 {
        if self.dim <= DENSE_CROSSOVER {
            return self.dense_spectral_norm();
        }
        match operator_norm(&DenseOp(self), POWER_TOL, POWER_MAX_ITER) {
            Ok(v) => v,
            Err(_) => self.dense_spectral_norm(),
        }
    }

    fn dense_spectral_norm(&self) -> f64 {
        if self.dim == 1 {
            return self.data[0].norm();
        }
        let sv = self.to_na().singular_values();
        sv.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of `(M + M†)/2`, with no Hermiticity check.
    pub fn min_eig_symmetrized(&self) -> f64 {
        let h = self
            .add(&self.adjoint())
            .scale(C64::new(0.5, 0.0));
        if h.dim == 1 {
            return h.data[0].re;
        }
        let ev = h.to_na().symmetric_eigenvalues();
        ev.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Smallest eigenvalue and largest absolute eigenvalue of `(M + M†)/2`,
    /// from one decomposition.
    pub fn symmetrized_eig_bounds(&self) -> (f64, f64) {
        let h = self.add(&self.adjoint()).scale(C64::new(0.5, 0.0));
        if h.dim == 1 {
            return (h.data[0].re, h.data[0].re.abs());
        }
        let ev = h.to_na().symmetric_eigenvalues();
        let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_abs = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
        (min, max_abs)
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    ///
    /// Requires `‖M − M†‖_F ≤ 1e-9·(1 + ‖M‖_F)`; the matrix is symmetrized
    /// before solving.
    pub fn min_eig_hermitian(&self) -> Result<f64> {
        let defect = self.hermiticity_defect();
        let tol = 1e-9 * (1.0 + self.frobenius_norm());
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        Ok(self.min_eig_symmetrized())
    }

    /// Entrywise closeness within an absolute tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.sub(other).max_abs() <= tol
    }
}

/// Kronecker product of a slice of matrices, left to right.
pub fn kron_list(factors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    assert!(!factors.is_empty());
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = acc.kron(f)?;
    }
    Ok(acc)
}

/// Square operator presented through matrix-vector products.
pub trait LinearOp {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64>;
}

struct DenseOp<'a>(&'a ComplexMatrix);

impl LinearOp for DenseOp<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.0.matvec(x)
    }
    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        // y_j = Σ_i conj(M[i,j]) x_i without materializing the adjoint
        let n = self.0.dim();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for (i, xi) in x.iter().enumerate() {
            for (j, out) in y.iter_mut().enumerate() {
                *out += self.0.get(i, j).conj() * xi;
            }
        }
        y
    }
}

fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(x: &mut [C64]) -> f64 {
    let n = norm2(x);
    if n > 0.0 {
        for z in x.iter_mut() {
            *z /= n;
        }
    }
    n
}

struct PowerRun {
    converged: bool,
    iterations: usize,
    last: f64,
    previous: f64,
}

fn power_run<O: LinearOp>(op: &O, start: Vec<C64>, tol: f64, max_iter: usize) -> PowerRun {
    let mut v = start;
    normalize(&mut v);
    let mut previous = f64::NAN;
    let mut last = f64::NAN;
    for it in 0..max_iter {
        let mut w = op.apply_adjoint(&op.apply(&v));
        let lam = norm2(&w);
        if lam == 0.0 {
            return PowerRun {
                converged: true,
                iterations: it + 1,
                last: 0.0,
                previous: if last.is_nan() { 0.0 } else { last },
            };
        }
        normalize(&mut w);
        v = w;
        previous = last;
        last = lam;
        if !previous.is_nan() && (last - previous).abs() <= tol * last.max(f64::MIN_POSITIVE) {
            return PowerRun {
                converged: true,
                iterations: it + 1,
                last,
                previous,
            };
        }
    }
    PowerRun {
        converged: false,
        iterations: max_iter,
        last,
        previous,
    }
}

/// Spectral norm of `op` by power iteration on `op†∘op`.
///
/// Starts from the normalized all-ones vector; a fixed pseudo-random restart
/// guards against starts orthogonal to the top eigenspace (detected as
/// suspiciously fast convergence) and against stagnation.
pub fn operator_norm<O: LinearOp>(op: &O, tol: f64, max_iter: usize) -> Result<f64> {
    let n = op.dim();
    let ones = vec![C64::new(1.0, 0.0); n];
    let first = power_run(op, ones, tol, max_iter);
    let need_restart = !first.converged || first.iterations < 5 || first.last == 0.0;
    if !need_restart {
        return Ok(first.last.sqrt());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let start: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let second = power_run(op, start, tol, max_iter);
    match (first.converged, second.converged) {
        (true, true) => Ok(first.last.max(second.last).sqrt()),
        (true, false) | (false, true) => {
            let r = if first.converged { &first } else { &second };
            Ok(r.last.sqrt())
        }
        (false, false) => Err(Error::NonConvergence {
            iterations: max_iter,
            previous: second.previous,
            last: second.last,
        }),
    }
}

/// A finite sum of elementary Kronecker tensors `Σ_t a_{t,1} ⊗ … ⊗ a_{t,r}`,
/// kept implicit so norms of large tensor powers stay tractable.
#[derive(Debug, Clone)]
pub struct KronSumOperator {
    factor_dims: Vec<usize>,
    terms: Vec<Vec<ComplexMatrix>>,
    total_dim: usize,
}

impl KronSumOperator {
    /// Builds the operator, checking arity/dimension consistency and the
    /// global dimension guard.
    pub fn new(terms: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument(
                "a Kronecker sum needs at least one term".into(),
            ));
        }
        let factor_dims: Vec<usize> = terms[0].iter().map(|m| m.dim()).collect();
        if factor_dims.is_empty() {
            return Err(Error::InvalidArgument(
                "a Kronecker term needs at least one factor".into(),
            ));
        }
        for term in &terms {
            if term.len() != factor_dims.len() {
                return Err(Error::DimensionMismatch(format!(
                    "Kronecker terms have mixed arity ({} vs {})",
                    term.len(),
                    factor_dims.len()
                )));
            }
            for (slot, m) in term.iter().enumerate() {
                if m.dim() != factor_dims[slot] {
                    return Err(Error::DimensionMismatch(format!(
                        "slot {} has dimension {} but expected {}",
                        slot,
                        m.dim(),
                        factor_dims[slot]
                    )));
                }
            }
        }
        let total_dim = checked_dim_product(&factor_dims, "Kronecker sum construction")?;
        Ok(Self {
            factor_dims,
            terms,
            total_dim,
        })
    }

    /// One elementary tensor.
    pub fn elementary(factors: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(vec![factors])
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn terms(&self) -> &[Vec<ComplexMatrix>] {
        &self.terms
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn arity(&self) -> usize {
        self.factor_dims.len()
    }

    /// Sum of two operators over the same slot layout.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.factor_dims != other.factor_dims {
            return Err(Error::DimensionMismatch(
                "Kronecker sums with different slot layouts cannot be added".into(),
            ));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms)
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut terms = self.terms.clone();
        for term in &mut terms {
            term[0] = term[0].scale(z);
        }
        Self {
            factor_dims: self.factor_dims.clone(),
            terms,
            total_dim: self.total_dim,
        }
    }

    /// Tensor product: slots of `other` appended after the slots of `self`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut t = a.clone();
                t.extend(b.iter().cloned());
                terms.push(t);
            }
        }
        Self::new(terms)
    }

    /// Applies one permutation of the slot order to every term:
    /// slot `s` of the result is slot `perm[s]` of the input.
    pub fn permute_slots(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.arity() {
            return Err(Error::InvalidArgument(
                "slot permutation has wrong length".into(),
            ));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidArgument("not a permutation of slots".into()));
            }
            seen[p] = true;
        }
        let terms = self
            .terms
            .iter()
            .map(|t| perm.iter().map(|&p| t[p].clone()).collect())
            .collect();
        Self::new(terms)
    }

    /// Dense materialization (guarded by the global dimension cap).
    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        check_dim(self.total_dim as u128, "dense materialization")?;
        let mut acc = ComplexMatrix::zeros(self.total_dim);
        for term in &self.terms {
            acc.add_assign(&kron_list(term)?);
        }
        Ok(acc)
    }

    fn apply_term(factors: &[ComplexMatrix], dims: &[usize], x: &[C64], adjoint: bool) -> Vec<C64> {
        // Apply factor k along mode k of x viewed as a dims-shaped tensor.
        let mut cur = x.to_vec();
        let total = x.len();
        let mut stride = total;
        for (k, a) in factors.iter().enumerate() {
            let d = dims[k];
            stride /= d;
            let block = d * stride;
            let mut next = vec![C64::new(0.0, 0.0); total];
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    for row in 0..d {
                        let mut acc = C64::new(0.0, 0.0);
                        for col in 0..d {
                            let coeff = if adjoint {
                                a.get(col, row).conj()
                            } else {
                                a.get(row, col)
                            };
                            acc += coeff * cur[outer + col * stride + inner];
                        }
                        next[outer + row * stride + inner] = acc;
                    }
                }
            }
            cur = next;
        }
        cur
    }

    /// Spectral norm: full decomposition at or below the crossover, implicit
    /// power iteration above it.
    pub fn spectral_norm(&self) -> Result<f64> {
        if self.total_dim <= DENSE_CROSSOVER {
            Ok(self.to_dense()?.spectral_norm())
        } else {
            operator_norm(self, POWER_TOL, POWER_MAX_ITER)
        }
    }
}

impl LinearOp for KronSumOperator {
    fn dim(&self) -> usize {
        self.total_dim
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.total_dim];
        for term in &self.terms {
            let t = Self::apply_term(term, &self.factor_dims, x, false);
            for (a, b) in y.iter_mut().zip(t) {
                *a += b;
            }
        }
        y
    }

    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.total_dim];
        for term in &self.terms {
            let t = Self::apply_term(term, &self.factor_dims, x, true);
            for (a, b) in y.iter_mut().zip(t) {
                *a += b;
            }
        }
        y
    }
}
