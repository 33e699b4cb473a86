//! Λ_p on the matrix algebra `M_n` with its normalized trace.
//!
//! An `NcElement` is a finite sum `Σ_k b_k ⊗ x_k` with `b_k` operator
//! coefficients and `x_k ∈ M_n`. The Λ_p norm is
//! `‖τ̂(f* ⊗̇ f ⊗̇ … ⊗̇ f* ⊗̇ f)‖^{1/p}`, where `⊗̇` tensors the coefficient
//! slots but multiplies the `M_n` slots and `τ̂ = id ⊗ τ` closes the trace.
//! Chains are contracted as a ring of four-index tensors with bond dimension
//! `n`, so the coefficient dimension `(dim B)^p` never multiplies against an
//! exploding `M_n` power; above the dense crossover the chain value is a
//! matrix-free operator fed to power iteration.

use crate::cone::{PairedTensor, Pairing};
use crate::error::{Error, Result};
use crate::linalg::{
    checked_dim_product, operator_norm, ComplexMatrix, KronSumOperator, LinearOp, C64,
    DENSE_CROSSOVER, POWER_MAX_ITER, POWER_TOL,
};
use rand::Rng;

/// An element `Σ_k b_k ⊗ x_k` of `B(H) ⊗ M_n`.
///
/// Equality of elements is a property of the canonical dense block form
/// `Σ_k b_k ⊗ x_k` (dimension `opdim·n`), not of the representing list.
#[derive(Debug, Clone)]
pub struct NcElement {
    opdim: usize,
    n: usize,
    rep: Vec<(ComplexMatrix, ComplexMatrix)>,
}

impl NcElement {
    pub fn new(
        opdim: usize,
        n: usize,
        rep: Vec<(ComplexMatrix, ComplexMatrix)>,
    ) -> Result<Self> {
        if rep.is_empty() {
            return Err(Error::InvalidArgument(
                "an element needs at least one term (use a zero term if needed)".into(),
            ));
        }
        for (b, x) in &rep {
            if b.dim() != opdim || x.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "term has shape ({}, {}) but expected ({opdim}, {n})",
                    b.dim(),
                    x.dim()
                )));
            }
        }
        Ok(Self { opdim, n, rep })
    }

    /// Single elementary term `b ⊗ x`.
    pub fn from_term(b: ComplexMatrix, x: ComplexMatrix) -> Self {
        Self {
            opdim: b.dim(),
            n: x.dim(),
            rep: vec![(b, x)],
        }
    }

    /// `I ⊗ 1`.
    pub fn unit(opdim: usize, n: usize) -> Self {
        Self::from_term(ComplexMatrix::identity(opdim), ComplexMatrix::identity(n))
    }

    /// Random element with the given number of Gaussian terms.
    pub fn gaussian(opdim: usize, n: usize, terms: usize, rng: &mut impl Rng) -> Self {
        let rep = (0..terms.max(1))
            .map(|_| {
                (
                    ComplexMatrix::gaussian(opdim, rng),
                    ComplexMatrix::gaussian(n, rng),
                )
            })
            .collect();
        Self { opdim, n, rep }
    }

    /// Row element `c · Σ_j b_j ⊗ e_{1j}`.
    ///
    /// With the scale `c = n^{1/p}` its Λ_p norm equals the operator-Hilbert
    /// value `‖Σ b_j ⊗ b̄_j‖^{1/2}` for every even `p`. For reference: under
    /// the interpolated operator-space structure on L_p of the unnormalized
    /// trace, the unscaled row with `b_j = e_{j1}` instead has norm
    /// `n^{1/2p}`; that structure is out of scope here and the value is
    /// recorded only as a documented comparison constant.
    pub fn row(coefficients: &[ComplexMatrix], n: usize, scale: f64) -> Result<Self> {
        if coefficients.len() > n {
            return Err(Error::InvalidArgument(
                "more row coefficients than columns".into(),
            ));
        }
        let opdim = coefficients[0].dim();
        let rep = coefficients
            .iter()
            .enumerate()
            .map(|(j, b)| {
                (
                    b.scale(C64::new(scale, 0.0)),
                    ComplexMatrix::unit(n, 0, j),
                )
            })
            .collect();
        Self::new(opdim, n, rep)
    }

    /// Diagonal element `Σ_j β_j ⊗ e_{jj}` with scalar coefficients.
    pub fn diagonal_scalars(betas: &[C64]) -> Self {
        let n = betas.len();
        let rep = betas
            .iter()
            .enumerate()
            .map(|(j, &z)| (ComplexMatrix::scalar(z), ComplexMatrix::unit(n, j, j)))
            .collect();
        Self { opdim: 1, n, rep }
    }

    pub fn opdim(&self) -> usize {
        self.opdim
    }

    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    pub fn rep(&self) -> &[(ComplexMatrix, ComplexMatrix)] {
        &self.rep
    }

    /// Canonical dense block form `Σ_k b_k ⊗ x_k`.
    pub fn dense(&self) -> Result<ComplexMatrix> {
        let dim = checked_dim_product(&[self.opdim, self.n], "dense form of an element")?;
        let mut acc = ComplexMatrix::zeros(dim);
        for (b, x) in &self.rep {
            acc.add_assign(&b.kron(x)?);
        }
        Ok(acc)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> Result<bool> {
        if self.opdim != other.opdim || self.n != other.n {
            return Ok(false);
        }
        Ok(self.dense()?.approx_eq(&other.dense()?, tol))
    }

    /// The adjoint `f* = Σ_k b̄_k ⊗ x_k*`; an involution.
    pub fn star(&self) -> Self {
        Self {
            opdim: self.opdim,
            n: self.n,
            rep: self
                .rep
                .iter()
                .map(|(b, x)| (b.conj(), x.adjoint()))
                .collect(),
        }
    }

    /// `f ⊗̇ g = Σ_{k,j} b_k ⊗ c_j ⊗ x_k y_j`: coefficient slots tensor,
    /// matrix slots multiply.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(
                "elements live over different matrix algebras".into(),
            ));
        }
        let opdim =
            checked_dim_product(&[self.opdim, other.opdim], "product of elements")?;
        let mut rep = Vec::with_capacity(self.rep.len() * other.rep.len());
        for (b, x) in &self.rep {
            for (c, y) in &other.rep {
                rep.push((b.kron(c)?, x.matmul(y)));
            }
        }
        Ok(Self {
            opdim,
            n: self.n,
            rep,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.opdim != other.opdim || self.n != other.n {
            return Err(Error::DimensionMismatch(
                "added elements must have equal shapes".into(),
            ));
        }
        let mut rep = self.rep.clone();
        rep.extend(other.rep.iter().cloned());
        Ok(Self {
            opdim: self.opdim,
            n: self.n,
            rep,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut rep = self.rep.clone();
        for (b, _) in rep.iter_mut() {
            *b = b.scale(z);
        }
        Self {
            opdim: self.opdim,
            n: self.n,
            rep,
        }
    }

    /// `τ̂(f) = Σ_k b_k · τ(x_k)` with the normalized trace `τ = tr/n`.
    pub fn hat_tau(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.opdim);
        for (b, x) in &self.rep {
            acc.add_scaled(b, x.trace() / C64::new(self.n as f64, 0.0));
        }
        acc
    }

    /// The `d×d` array of `n×n` blocks `G[a,b] = Σ_k b_k[a,b]·x_k` used by
    /// the chain contraction.
    fn factor_blocks(&self) -> Vec<ComplexMatrix> {
        let d = self.opdim;
        let mut g = vec![ComplexMatrix::zeros(self.n); d * d];
        for (b, x) in &self.rep {
            for a in 0..d {
                for bb in 0..d {
                    let coef = b.get(a, bb);
                    if coef != C64::new(0.0, 0.0) {
                        g[a * d + bb].add_scaled(x, coef);
                    }
                }
            }
        }
        g
    }

    /// Λ_p norm `‖τ̂((f* ⊗̇ f)^{⊗̇ p/2})‖^{1/p}`; at `p = 2` the OH value.
    pub fn lambda_norm(&self, p: usize) -> Result<f64> {
        crate::lambda::even_half(p)?;
        let mut chain: Vec<&NcElement> = Vec::with_capacity(p);
        let star = self.star();
        for _ in 0..p / 2 {
            chain.push(&star);
            chain.push(self);
        }
        Ok(chain_norm(&chain)?.powf(1.0 / p as f64))
    }
}

fn check_chain(factors: &[&NcElement]) -> Result<(usize, Vec<usize>, usize)> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("empty chain".into()));
    }
    let n = factors[0].n;
    if factors.iter().any(|f| f.n != n) {
        return Err(Error::DimensionMismatch(
            "chain factors live over different matrix algebras".into(),
        ));
    }
    let dims: Vec<usize> = factors.iter().map(|f| f.opdim).collect();
    let total = checked_dim_product(&dims, "coefficient slots of a trace chain")?;
    Ok((n, dims, total))
}

/// `τ̂(f_1 ⊗̇ f_2 ⊗̇ … ⊗̇ f_p)` as a dense matrix on the coefficient slots.
pub fn hat_tau_chain(factors: &[&NcElement]) -> Result<ComplexMatrix> {
    let (n, dims, total) = check_chain(factors)?;
    let mut blocks = vec![ComplexMatrix::identity(n)];
    let mut cur = 1usize;
    for (f, d) in factors.iter().zip(&dims) {
        let g = f.factor_blocks();
        let d = *d;
        let next_dim = cur * d;
        let mut next = vec![ComplexMatrix::zeros(n); next_dim * next_dim];
        for r in 0..cur {
            for c in 0..cur {
                let base = &blocks[r * cur + c];
                for a in 0..d {
                    for b in 0..d {
                        next[(r * d + a) * next_dim + (c * d + b)] =
                            base.matmul(&g[a * d + b]);
                    }
                }
            }
        }
        blocks = next;
        cur = next_dim;
    }
    debug_assert_eq!(cur, total);
    let mut m = ComplexMatrix::zeros(total);
    let norm = C64::new(n as f64, 0.0);
    for r in 0..total {
        for c in 0..total {
            m.set(r, c, blocks[r * total + c].trace() / norm);
        }
    }
    Ok(m)
}

/// The chain value `τ̂(f_1 ⊗̇ … ⊗̇ f_p)` kept implicit: a linear operator on
/// the coefficient slots applied by sweeping the ring of factor tensors.
pub struct NcChainOperator {
    n: usize,
    dims: Vec<usize>,
    g: Vec<Vec<ComplexMatrix>>,
    g_adj: Vec<Vec<ComplexMatrix>>,
    total: usize,
}

impl NcChainOperator {
    pub fn new(factors: &[&NcElement]) -> Result<Self> {
        let (n, dims, total) = check_chain(factors)?;
        let g: Vec<Vec<ComplexMatrix>> =
            factors.iter().map(|f| f.factor_blocks()).collect();
        let g_adj = g
            .iter()
            .zip(&dims)
            .map(|(blocks, &d)| {
                let mut adj = vec![ComplexMatrix::zeros(n); d * d];
                for a in 0..d {
                    for b in 0..d {
                        adj[a * d + b] = blocks[b * d + a].conj();
                    }
                }
                adj
            })
            .collect();
        Ok(Self {
            n,
            dims,
            g,
            g_adj,
            total,
        })
    }

    fn sweep(&self, tensors: &[Vec<ComplexMatrix>], x: &[C64]) -> Vec<C64> {
        let n = self.n;
        let total = self.total;
        // state[((i1·n + j)·a_size + ra)·b_size + rb]
        let mut a_size = 1usize;
        let mut b_size = total;
        let mut state = vec![C64::new(0.0, 0.0); n * n * total];
        for i in 0..n {
            for (rb, &v) in x.iter().enumerate() {
                state[(i * n + i) * total + rb] = v;
            }
        }
        for (s, &d) in self.dims.iter().enumerate() {
            let b_new = b_size / d;
            let a_new = a_size * d;
            let mut next = vec![C64::new(0.0, 0.0); n * n * total];
            for i1 in 0..n {
                for j in 0..n {
                    for ra in 0..a_size {
                        for b in 0..d {
                            for rb in 0..b_new {
                                let v = state
                                    [((i1 * n + j) * a_size + ra) * b_size + b * b_new + rb];
                                if v == C64::new(0.0, 0.0) {
                                    continue;
                                }
                                for a in 0..d {
                                    let gm = &tensors[s][a * d + b];
                                    for jp in 0..n {
                                        let coeff = gm.get(j, jp);
                                        if coeff == C64::new(0.0, 0.0) {
                                            continue;
                                        }
                                        next[((i1 * n + jp) * a_new + ra * d + a) * b_new
                                            + rb] += coeff * v;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            state = next;
            a_size = a_new;
            b_size = b_new;
        }
        let mut y = vec![C64::new(0.0, 0.0); total];
        let norm = C64::new(n as f64, 0.0);
        for (ra, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                acc += state[(i * n + i) * total + ra];
            }
            *out = acc / norm;
        }
        y
    }
}

impl LinearOp for NcChainOperator {
    fn dim(&self) -> usize {
        self.total
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.sweep(&self.g, x)
    }

    fn apply_adjoint(&self, x: &[C64]) -> Vec<C64> {
        self.sweep(&self.g_adj, x)
    }
}

/// `‖τ̂(f_1 ⊗̇ … ⊗̇ f_p)‖`: dense below the crossover, implicit above it.
pub fn chain_norm(factors: &[&NcElement]) -> Result<f64> {
    let (_, _, total) = check_chain(factors)?;
    if total <= DENSE_CROSSOVER {
        Ok(hat_tau_chain(factors)?.spectral_norm())
    } else {
        let op = NcChainOperator::new(factors)?;
        operator_norm(&op, POWER_TOL, POWER_MAX_ITER)
    }
}

/// Hölder check over the trace:
/// `‖τ̂(f_1 ⊗̇ … ⊗̇ f_p)‖ ≤ Π_j ‖f_j‖_(p)`.
pub fn nc_holder_check(fs: &[NcElement], p: usize) -> Result<crate::lambda::RatioReport> {
    crate::lambda::even_half(p)?;
    if fs.len() != p {
        return Err(Error::InvalidArgument(format!(
            "Hölder with exponent {p} needs exactly {p} elements, got {}",
            fs.len()
        )));
    }
    let refs: Vec<&NcElement> = fs.iter().collect();
    let lhs = chain_norm(&refs)?;
    let mut rhs = 1.0;
    for f in fs {
        rhs *= f.lambda_norm(p)?;
    }
    Ok(crate::lambda::RatioReport::new(lhs, rhs))
}

/// Views `τ̂(f* ⊗̇ f)` (which lives on conjugate ⊗ plain coefficient slots)
/// as a paired tensor for the cone test.
pub fn hat_tau_square_as_paired(f: &NcElement) -> Result<PairedTensor> {
    let star = f.star();
    let m = hat_tau_chain(&[&star, f])?;
    let d = f.opdim();
    let mut terms = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let block = ComplexMatrix::from_fn(d, |k, l| m.get(i * d + k, j * d + l));
            terms.push(vec![ComplexMatrix::unit(d, i, j), block]);
        }
    }
    PairedTensor::new(
        KronSumOperator::new(terms)?,
        Pairing::new(vec![1], vec![0])?,
    )
}

/// Which matrices a block of a [`BlockSubalgebra`] may hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// The full matrix algebra on the block; the conditional expectation is
    /// the pinching that keeps the diagonal block untouched.
    Full,
    /// Scalar multiples of the block identity; the conditional expectation
    /// replaces the block by its normalized partial trace.
    Scalar,
}

/// A *-subalgebra of `M_n` given by an interval partition of the coordinates
/// with a block kind per interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSubalgebra {
    n: usize,
    /// `(start, length, kind)` per interval, in order.
    blocks: Vec<(usize, usize, BlockKind)>,
}

impl BlockSubalgebra {
    /// Builds from interval lengths and kinds (intervals tile `0..n`).
    pub fn new(lengths_and_kinds: &[(usize, BlockKind)]) -> Result<Self> {
        if lengths_and_kinds.is_empty() {
            return Err(Error::InvalidArgument("a subalgebra needs blocks".into()));
        }
        let mut blocks = Vec::with_capacity(lengths_and_kinds.len());
        let mut start = 0usize;
        for &(len, kind) in lengths_and_kinds {
            if len == 0 {
                return Err(Error::InvalidArgument("empty subalgebra block".into()));
            }
            blocks.push((start, len, kind));
            start += len;
        }
        Ok(Self { n: start, blocks })
    }

    /// All of `M_n`.
    pub fn full(n: usize) -> Self {
        Self::new(&[(n, BlockKind::Full)]).expect("n > 0")
    }

    /// The diagonal algebra (`n` singleton blocks).
    pub fn diagonal(n: usize) -> Self {
        Self::new(&vec![(1, BlockKind::Full); n]).expect("n > 0")
    }

    /// The scalars `ℂ·1`.
    pub fn trivial(n: usize) -> Self {
        Self::new(&[(n, BlockKind::Scalar)]).expect("n > 0")
    }

    /// Pinching algebra `⊕ M_{len_i}` from interval lengths.
    pub fn pinching(lengths: &[usize]) -> Result<Self> {
        Self::new(
            &lengths
                .iter()
                .map(|&l| (l, BlockKind::Full))
                .collect::<Vec<_>>(),
        )
    }

    /// Block-scalar algebra `⊕ ℂ·1_{len_i}` from interval lengths.
    pub fn scalar_blocks(lengths: &[usize]) -> Result<Self> {
        Self::new(
            &lengths
                .iter()
                .map(|&l| (l, BlockKind::Scalar))
                .collect::<Vec<_>>(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[(usize, usize, BlockKind)] {
        &self.blocks
    }

    pub fn is_full(&self) -> bool {
        self.blocks.len() == 1 && self.blocks[0].2 == BlockKind::Full
    }

    /// Whether `smaller ⊆ self` as subalgebras.
    ///
    /// A full block of `smaller` needs one enclosing full block here (or a
    /// shared singleton); a scalar-block identity `1_B` lies in `self` iff
    /// every scalar block of `self` is disjoint from `B` or inside it — full
    /// blocks of `self` absorb any piece of a diagonal.
    pub fn includes(&self, smaller: &BlockSubalgebra) -> bool {
        if self.n != smaller.n {
            return false;
        }
        for &(s, l, kind) in &smaller.blocks {
            match kind {
                BlockKind::Full => {
                    let housed = self.blocks.iter().any(|&(bs, bl, bk)| {
                        bs <= s
                            && s + l <= bs + bl
                            && (bk == BlockKind::Full || (l == 1 && bl == 1))
                    });
                    if !housed {
                        return false;
                    }
                }
                BlockKind::Scalar => {
                    let ok = self.blocks.iter().all(|&(bs, bl, bk)| {
                        bk == BlockKind::Full
                            || bs + bl <= s          // disjoint, left
                            || bs >= s + l           // disjoint, right
                            || (bs >= s && bs + bl <= s + l) // contained
                    });
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The trace-preserving conditional expectation applied to one matrix:
    /// off-block entries vanish; Full blocks survive, Scalar blocks are
    /// replaced by their normalized partial trace times the block identity.
    pub fn expect_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "matrix has dimension {} but the subalgebra sits in M_{}",
                x.dim(),
                self.n
            )));
        }
        let mut out = ComplexMatrix::zeros(self.n);
        for &(start, len, kind) in &self.blocks {
            match kind {
                BlockKind::Full => {
                    for i in start..start + len {
                        for j in start..start + len {
                            out.set(i, j, x.get(i, j));
                        }
                    }
                }
                BlockKind::Scalar => {
                    let mut tr = C64::new(0.0, 0.0);
                    for i in start..start + len {
                        tr += x.get(i, i);
                    }
                    let avg = tr / C64::new(len as f64, 0.0);
                    for i in start..start + len {
                        out.set(i, i, avg);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Conditional expectation onto a block subalgebra, applied to the `M_n`
/// slot of every term; completely contractive on each Λ_p.
pub fn nc_conditional_expectation(f: &NcElement, alg: &BlockSubalgebra) -> Result<NcElement> {
    if alg.n() != f.matrix_dim() {
        return Err(Error::DimensionMismatch(
            "subalgebra size does not match the element".into(),
        ));
    }
    let rep = f
        .rep()
        .iter()
        .map(|(b, x)| Ok((b.clone(), alg.expect_matrix(x)?)))
        .collect::<Result<Vec<_>>>()?;
    NcElement::new(f.opdim(), f.matrix_dim(), rep)
}

/// Quantities of the p = 4 martingale comparison over `M_n`.
#[derive(Debug, Clone, Copy)]
pub struct NcBurkholderReport {
    /// `‖f‖_(4)`.
    pub norm: f64,
    /// `max{‖Σ d_j ⊗̇ d_j*‖^{1/2}_{(2)}, ‖Σ d_j* ⊗̇ d_j‖^{1/2}_{(2)}}`.
    pub square_max: f64,
    /// `max{‖τ̂(Σ d ⊗̇ d* ⊗̇ d ⊗̇ d*)‖^{1/4}, ‖σ_r‖^{1/2}_{(2)}, ‖σ_c‖^{1/2}_{(2)}}`.
    pub bracket: f64,
    pub ratio_norm_over_square: f64,
    pub ratio_square_over_norm: f64,
}

/// Runs the p = 4 experiment along a chain of subalgebras increasing to the
/// full `M_n`: martingale differences by consecutive conditional
/// expectations, then the square-function and bracket quantities.
pub fn nc_burkholder4(f: &NcElement, chain: &[BlockSubalgebra]) -> Result<NcBurkholderReport> {
    if chain.is_empty() {
        return Err(Error::InvalidArgument("empty subalgebra chain".into()));
    }
    let n = f.matrix_dim();
    if !chain.last().unwrap().is_full() || chain.last().unwrap().n() != n {
        return Err(Error::InvalidArgument(
            "the last level must be the full matrix algebra".into(),
        ));
    }
    for w in chain.windows(2) {
        if !w[1].includes(&w[0]) {
            return Err(Error::InvalidArgument(
                "subalgebra chain must be increasing".into(),
            ));
        }
    }
    let mut ds = Vec::with_capacity(chain.len());
    let mut prev = nc_conditional_expectation(f, &chain[0])?;
    ds.push(prev.clone());
    for alg in &chain[1..] {
        let cur = nc_conditional_expectation(f, alg)?;
        ds.push(cur.sub(&prev)?);
        prev = cur;
    }

    let mut s_r: Option<NcElement> = None;
    let mut s_c: Option<NcElement> = None;
    let mut sigma_r: Option<NcElement> = None;
    let mut sigma_c: Option<NcElement> = None;
    let mut diag: Option<NcElement> = None;
    for (j, d) in ds.iter().enumerate() {
        let r = d.product(&d.star())?;
        let c = d.star().product(d)?;
        let rr = if j == 0 {
            r.clone()
        } else {
            let alg = &chain[j - 1];
            NcElement::new(
                r.opdim(),
                n,
                r.rep()
                    .iter()
                    .map(|(b, x)| Ok((b.clone(), alg.expect_matrix(x)?)))
                    .collect::<Result<Vec<_>>>()?,
            )?
        };
        let cc = if j == 0 {
            c.clone()
        } else {
            nc_conditional_expectation(&c, &chain[j - 1])?
        };
        let dd = r.product(&r)?;
        s_r = accumulate(s_r, r)?;
        s_c = accumulate(s_c, c)?;
        sigma_r = accumulate(sigma_r, rr)?;
        sigma_c = accumulate(sigma_c, cc)?;
        diag = accumulate(diag, dd)?;
    }

    let norm = f.lambda_norm(4)?;
    let square_max = s_r
        .unwrap()
        .lambda_norm(2)?
        .max(s_c.unwrap().lambda_norm(2)?)
        .sqrt();
    let diag_term = diag.unwrap().hat_tau().spectral_norm().powf(0.25);
    let bracket = diag_term
        .max(sigma_r.unwrap().lambda_norm(2)?.sqrt())
        .max(sigma_c.unwrap().lambda_norm(2)?.sqrt());
    Ok(NcBurkholderReport {
        norm,
        square_max,
        bracket,
        ratio_norm_over_square: if square_max == 0.0 { 1.0 } else { norm / square_max },
        ratio_square_over_norm: if norm == 0.0 { 1.0 } else { square_max / norm },
    })
}

fn accumulate(acc: Option<NcElement>, term: NcElement) -> Result<Option<NcElement>> {
    Ok(Some(match acc {
        None => term,
        Some(a) => a.add(&term)?,
    }))
}

/// The nondecreasing sequence `‖f‖_{(2^m)}` for `m = 1..m_max`; its last
/// entry is the reported lower approximation to the limit norm as `p → ∞`.
pub fn cb_oh_limit(f: &NcElement, m_max: usize) -> Result<Vec<(usize, f64)>> {
    if m_max == 0 {
        return Err(Error::InvalidArgument("need m_max ≥ 1".into()));
    }
    let mut out = Vec::with_capacity(m_max);
    for m in 1..=m_max {
        let p = 1usize << m;
        out.push((p, f.lambda_norm(p)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::split_rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn star_is_an_involution_and_fixes_the_unit() {
        let mut rng = split_rng(130, 0);
        let f = NcElement::gaussian(2, 3, 2, &mut rng);
        assert!(f.star().star().approx_eq(&f, 1e-14).unwrap());
        let unit = NcElement::unit(2, 3);
        assert!(unit.star().approx_eq(&unit, 0.0).unwrap());
    }

    #[test]
    fn star_preserves_the_two_norm() {
        for idx in 0..20 {
            let mut rng = split_rng(131, idx);
            let f = NcElement::gaussian(2, 3, 2, &mut rng);
            let a = f.lambda_norm(2).unwrap();
            let b = f.star().lambda_norm(2).unwrap();
            assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        }
    }

    #[test]
    fn product_with_unit_adds_a_trivial_slot() {
        let mut rng = split_rng(132, 0);
        let f = NcElement::gaussian(2, 3, 2, &mut rng);
        let unit = NcElement::from_term(
            ComplexMatrix::identity(1),
            ComplexMatrix::identity(3),
        );
        let g = f.product(&unit).unwrap();
        assert!(g.approx_eq(&f, 1e-14).unwrap());
    }

    #[test]
    fn scalar_algebra_products_are_plain_products() {
        let mut rng = split_rng(133, 0);
        let b1 = ComplexMatrix::gaussian(2, &mut rng);
        let b2 = ComplexMatrix::gaussian(2, &mut rng);
        let z1 = c(1.5, -0.5);
        let z2 = c(0.25, 2.0);
        let f = NcElement::from_term(b1.clone(), ComplexMatrix::scalar(z1));
        let g = NcElement::from_term(b2.clone(), ComplexMatrix::scalar(z2));
        let prod = f.product(&g).unwrap();
        let expected =
            NcElement::from_term(b1.kron(&b2).unwrap().scale(z1 * z2), ComplexMatrix::scalar(c(1.0, 0.0)));
        assert!(prod.approx_eq(&expected, 1e-13).unwrap());
    }

    #[test]
    fn product_is_associative_on_the_dense_form() {
        let mut rng = split_rng(134, 0);
        let f = NcElement::gaussian(2, 2, 2, &mut rng);
        let g = NcElement::gaussian(2, 2, 2, &mut rng);
        let h = NcElement::gaussian(2, 2, 2, &mut rng);
        let left = f.product(&g).unwrap().product(&h).unwrap();
        let right = f.product(&g.product(&h).unwrap()).unwrap();
        assert!(left.approx_eq(&right, 1e-11).unwrap());
    }

    #[test]
    fn hat_tau_basics() {
        let mut rng = split_rng(135, 0);
        let b = ComplexMatrix::gaussian(2, &mut rng);
        let f = NcElement::from_term(b.clone(), ComplexMatrix::identity(3));
        assert!(f.hat_tau().approx_eq(&b, 1e-14));
        let g = NcElement::from_term(b, ComplexMatrix::unit(3, 0, 1));
        assert!(g.hat_tau().max_abs() < 1e-15);
    }

    #[test]
    fn hat_tau_is_cyclic_in_norm() {
        let mut rng = split_rng(136, 0);
        for _ in 0..20 {
            let fs: Vec<NcElement> =
                (0..3).map(|_| NcElement::gaussian(2, 2, 2, &mut rng)).collect();
            let refs: Vec<&NcElement> = fs.iter().collect();
            let rotated: Vec<&NcElement> = vec![&fs[2], &fs[0], &fs[1]];
            let a = hat_tau_chain(&refs).unwrap().spectral_norm();
            let b = hat_tau_chain(&rotated).unwrap().spectral_norm();
            assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        }
    }

    #[test]
    fn hat_tau_swap_identity() {
        // ‖τ̂(Σ f_ℓ ⊗̇ g_ℓ)‖ = ‖τ̂(Σ g_ℓ ⊗̇ f_ℓ)‖
        let mut rng = split_rng(137, 0);
        for _ in 0..20 {
            let f: Vec<NcElement> =
                (0..2).map(|_| NcElement::gaussian(2, 3, 1, &mut rng)).collect();
            let g: Vec<NcElement> =
                (0..2).map(|_| NcElement::gaussian(2, 3, 1, &mut rng)).collect();
            let mut fg: Option<NcElement> = None;
            let mut gf: Option<NcElement> = None;
            for (a, b) in f.iter().zip(&g) {
                fg = accumulate(fg, a.product(b).unwrap()).unwrap();
                gf = accumulate(gf, b.product(a).unwrap()).unwrap();
            }
            let x = fg.unwrap().hat_tau().spectral_norm();
            let y = gf.unwrap().hat_tau().spectral_norm();
            assert!((x - y).abs() <= 1e-10 * (1.0 + x));
        }
    }

    #[test]
    fn chain_contraction_matches_explicit_product_expansion() {
        // oracle: expand f* ⊗̇ f ⊗̇ f* ⊗̇ f through `product` and take hat_tau
        let mut rng = split_rng(138, 0);
        let f = NcElement::gaussian(2, 3, 2, &mut rng);
        let star = f.star();
        let chain = hat_tau_chain(&[&star, &f, &star, &f]).unwrap();
        let explicit = star
            .product(&f)
            .unwrap()
            .product(&star.product(&f).unwrap())
            .unwrap()
            .hat_tau();
        assert!(chain.approx_eq(&explicit, 1e-10));
    }

    #[test]
    fn implicit_chain_operator_matches_dense() {
        let mut rng = split_rng(139, 0);
        let f = NcElement::gaussian(2, 2, 2, &mut rng);
        let star = f.star();
        let chain: Vec<&NcElement> = vec![&star, &f, &star, &f];
        let dense = hat_tau_chain(&chain).unwrap();
        let op = NcChainOperator::new(&chain).unwrap();
        let implicit = operator_norm(&op, POWER_TOL, POWER_MAX_ITER).unwrap();
        let direct = dense.spectral_norm();
        assert!((implicit - direct).abs() <= 1e-8 * (1.0 + direct));
    }

    #[test]
    fn implicit_chain_operator_matches_dense_at_the_crossover() {
        // p = 8 over M_3 with 2-dimensional coefficients: a 256-dimensional
        // chain value, still dense-checkable
        let mut rng = split_rng(157, 0);
        let f = NcElement::gaussian(2, 3, 2, &mut rng);
        let star = f.star();
        let mut chain: Vec<&NcElement> = Vec::new();
        for _ in 0..4 {
            chain.push(&star);
            chain.push(&f);
        }
        let dense = hat_tau_chain(&chain).unwrap();
        assert_eq!(dense.dim(), 256);
        let op = NcChainOperator::new(&chain).unwrap();
        let implicit = operator_norm(&op, POWER_TOL, POWER_MAX_ITER).unwrap();
        let direct = dense.spectral_norm();
        assert!(
            (implicit - direct).abs() <= 1e-8 * (1.0 + direct),
            "{implicit} vs {direct}"
        );

        // the adjoint sweep really is the adjoint: ⟨Mx, y⟩ = ⟨x, M†y⟩
        let x: Vec<C64> = (0..256)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let y: Vec<C64> = (0..256)
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let mx = op.apply(&x);
        let mty = op.apply_adjoint(&y);
        let inner = |a: &[C64], b: &[C64]| -> C64 {
            a.iter().zip(b).map(|(u, v)| u * v.conj()).sum()
        };
        let lhs = inner(&mx, &y);
        let rhs = inner(&x, &mty);
        assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn unit_has_norm_one_and_b_tensor_one_gives_norm_b() {
        let mut rng = split_rng(140, 0);
        let b = ComplexMatrix::gaussian(2, &mut rng);
        let f = NcElement::from_term(b.clone(), ComplexMatrix::identity(3));
        for p in [2usize, 4, 6] {
            let got = f.lambda_norm(p).unwrap();
            assert!((got - b.spectral_norm()).abs() <= 1e-10 * (1.0 + got), "p={p}");
        }
    }

    #[test]
    fn row_elements_carry_the_oh_norm() {
        for idx in 0..10 {
            let mut rng = split_rng(141, idx);
            let n = 3usize;
            let bs: Vec<ComplexMatrix> =
                (0..n).map(|_| ComplexMatrix::gaussian(2, &mut rng)).collect();
            let oh = KronSumOperator::new(bs.iter().map(|b| vec![b.clone(), b.conj()]).collect())
                .unwrap()
                .spectral_norm()
                .unwrap()
                .sqrt();
            for p in [2usize, 4, 6] {
                let scale = (n as f64).powf(1.0 / p as f64);
                let f = NcElement::row(&bs, n, scale).unwrap();
                let got = f.lambda_norm(p).unwrap();
                assert!(
                    (got - oh).abs() <= 1e-9 * (1.0 + oh),
                    "idx={idx} p={p}: {got} vs {oh}"
                );
            }
        }
    }

    #[test]
    fn diagonal_scalars_give_normalized_lp_means() {
        let betas = [c(1.0, 0.0), c(-2.0, 1.0), c(0.5, 0.5)];
        let f = NcElement::diagonal_scalars(&betas);
        for p in [2usize, 4, 6] {
            let expected = (betas.iter().map(|z| z.norm().powi(p as i32)).sum::<f64>()
                / betas.len() as f64)
                .powf(1.0 / p as f64);
            let got = f.lambda_norm(p).unwrap();
            assert!((got - expected).abs() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn lambda_norms_are_monotone_in_p() {
        for idx in 0..20 {
            let mut rng = split_rng(142, idx);
            let f = NcElement::gaussian(2, 2, 2, &mut rng);
            let n2 = f.lambda_norm(2).unwrap();
            let n4 = f.lambda_norm(4).unwrap();
            let n6 = f.lambda_norm(6).unwrap();
            assert!(n2 <= n4 + 1e-9 && n4 <= n6 + 1e-9, "idx={idx}");
        }
    }

    #[test]
    fn star_preserves_every_lambda_norm() {
        for idx in 0..10 {
            let mut rng = split_rng(143, idx);
            let f = NcElement::gaussian(2, 2, 2, &mut rng);
            for p in [2usize, 4] {
                let a = f.lambda_norm(p).unwrap();
                let b = f.star().lambda_norm(p).unwrap();
                assert!((a - b).abs() <= 1e-9 * (1.0 + a));
            }
        }
    }

    #[test]
    fn haagerup_cauchy_schwarz_for_the_trace_state() {
        // ‖Σ τ̂(f_k* ⊗̇ g_k)‖ ≤ ‖Σ τ̂(f_k* ⊗̇ f_k)‖^{1/2} ‖Σ τ̂(g_k* ⊗̇ g_k)‖^{1/2}
        for idx in 0..100 {
            let mut rng = split_rng(144, idx);
            let count = 1 + (idx as usize) % 3;
            let fs: Vec<NcElement> =
                (0..count).map(|_| NcElement::gaussian(2, 2, 1, &mut rng)).collect();
            let gs: Vec<NcElement> =
                (0..count).map(|_| NcElement::gaussian(2, 2, 1, &mut rng)).collect();
            let mut fg = ComplexMatrix::zeros(4);
            let mut ff = ComplexMatrix::zeros(4);
            let mut gg = ComplexMatrix::zeros(4);
            for (f, g) in fs.iter().zip(&gs) {
                fg.add_assign(&f.star().product(g).unwrap().hat_tau());
                ff.add_assign(&f.star().product(f).unwrap().hat_tau());
                gg.add_assign(&g.star().product(g).unwrap().hat_tau());
            }
            let lhs = fg.spectral_norm();
            let rhs = ff.spectral_norm().sqrt() * gg.spectral_norm().sqrt();
            assert!(lhs <= rhs + 1e-9 * (1.0 + rhs), "idx={idx}");
        }
    }

    #[test]
    fn hat_tau_of_star_square_is_cone_positive() {
        for idx in 0..30 {
            let mut rng = split_rng(145, idx);
            let f = NcElement::gaussian(2, 3, 2, &mut rng);
            let paired = hat_tau_square_as_paired(&f).unwrap();
            assert!(paired.is_positive_default().unwrap(), "idx={idx}");
        }
    }

    #[test]
    fn nc_holder_equality_and_fuzz() {
        let mut rng = split_rng(146, 0);
        let f = NcElement::gaussian(2, 2, 2, &mut rng);
        let star = f.star();
        let report = nc_holder_check(
            &[star.clone(), f.clone(), star.clone(), f.clone()],
            4,
        )
        .unwrap();
        assert!((report.ratio - 1.0).abs() < 1e-9);

        for idx in 0..100 {
            let mut rng = split_rng(147, idx);
            let n = 2 + (idx as usize) % 2;
            let fs: Vec<NcElement> =
                (0..4).map(|_| NcElement::gaussian(2, n, 2, &mut rng)).collect();
            let report = nc_holder_check(&fs, 4).unwrap();
            assert!(report.holds(1e-9), "idx={idx}: ratio {}", report.ratio);
        }
    }

    #[test]
    fn conditional_expectation_identity_and_kills_off_diagonal() {
        let mut rng = split_rng(148, 0);
        let f = NcElement::gaussian(2, 3, 2, &mut rng);
        let full = BlockSubalgebra::full(3);
        assert!(nc_conditional_expectation(&f, &full)
            .unwrap()
            .approx_eq(&f, 1e-14)
            .unwrap());

        let b = ComplexMatrix::gaussian(2, &mut rng);
        let off = NcElement::from_term(b, ComplexMatrix::unit(3, 0, 1));
        let diag = BlockSubalgebra::diagonal(3);
        let e = nc_conditional_expectation(&off, &diag).unwrap();
        assert!(e.dense().unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn conditional_expectation_bimodule_identities() {
        // τ̂(T(f) ⊗̇ g) = τ̂(f ⊗̇ T(g)) = τ̂(T(f) ⊗̇ T(g)), and T(f*) = T(f)*
        let mut rng = split_rng(149, 0);
        let alg = BlockSubalgebra::new(&[
            (2, BlockKind::Full),
            (2, BlockKind::Scalar),
        ])
        .unwrap();
        for _ in 0..20 {
            let f = NcElement::gaussian(2, 4, 2, &mut rng);
            let g = NcElement::gaussian(2, 4, 2, &mut rng);
            let tf = nc_conditional_expectation(&f, &alg).unwrap();
            let tg = nc_conditional_expectation(&g, &alg).unwrap();
            let a = tf.product(&g).unwrap().hat_tau();
            let b = f.product(&tg).unwrap().hat_tau();
            let cc = tf.product(&tg).unwrap().hat_tau();
            assert!(a.approx_eq(&b, 1e-12) && b.approx_eq(&cc, 1e-12));
            let star_then = nc_conditional_expectation(&f.star(), &alg).unwrap();
            assert!(star_then.approx_eq(&tf.star(), 1e-13).unwrap());
        }
    }

    #[test]
    fn conditional_expectation_is_lambda_contractive() {
        for idx in 0..100 {
            let mut rng = split_rng(150, idx);
            let n = 4;
            let f = NcElement::gaussian(1 + (idx as usize) % 2, n, 2, &mut rng);
            let alg = match idx % 4 {
                0 => BlockSubalgebra::diagonal(n),
                1 => BlockSubalgebra::pinching(&[2, 2]).unwrap(),
                2 => BlockSubalgebra::scalar_blocks(&[2, 2]).unwrap(),
                _ => BlockSubalgebra::trivial(n),
            };
            let e = nc_conditional_expectation(&f, &alg).unwrap();
            for p in [2usize, 4] {
                let before = f.lambda_norm(p).unwrap();
                let after = e.lambda_norm(p).unwrap();
                assert!(after <= before + 1e-9, "idx={idx} p={p}");
            }
        }
    }

    #[test]
    fn subalgebra_inclusion_rules() {
        let diag = BlockSubalgebra::diagonal(4);
        let pinch = BlockSubalgebra::pinching(&[2, 2]).unwrap();
        let full = BlockSubalgebra::full(4);
        let scal = BlockSubalgebra::scalar_blocks(&[2, 2]).unwrap();
        let triv = BlockSubalgebra::trivial(4);
        assert!(full.includes(&pinch) && pinch.includes(&diag) && full.includes(&diag));
        assert!(pinch.includes(&scal) && diag.includes(&diag));
        // two scalar blocks do not sit inside one scalar block
        assert!(!triv.includes(&scal));
        // a scalar block cannot swallow the diagonal
        assert!(!triv.includes(&diag));
        assert!(full.includes(&triv));
    }

    #[test]
    fn burkholder4_single_level_chain_collapses() {
        let mut rng = split_rng(151, 0);
        let f = NcElement::gaussian(2, 2, 2, &mut rng);
        let report = nc_burkholder4(&f, &[BlockSubalgebra::full(2)]).unwrap();
        // one difference d_0 = f: the square function is f ⊗̇ f* so the
        // ratio structure is fixed by ‖f ⊗̇ f*‖_(2) = ‖f‖²_(4)
        assert!(
            (report.square_max - report.norm).abs() <= 1e-9 * (1.0 + report.norm),
            "{report:?}"
        );
    }

    #[test]
    fn burkholder4_commutative_embedding_matches_the_field_experiment() {
        use crate::martingale::{burkholder_experiment, DyadicSpace};
        let dyadic = DyadicSpace::new(2).unwrap();
        let mut rng = split_rng(152, 0);
        let f_field = crate::lambda::MatrixField::gaussian(dyadic.space().clone(), 2, &mut rng);
        let commutative = burkholder_experiment(&f_field, dyadic.filtration(), 4).unwrap();

        // embed: diagonal of M_4, scalar-block subalgebras from the dyadic levels
        let n = 4usize;
        let rep: Vec<(ComplexMatrix, ComplexMatrix)> = (0..n)
            .map(|a| (f_field.value(a).clone(), ComplexMatrix::unit(n, a, a)))
            .collect();
        let f = NcElement::new(2, n, rep).unwrap();
        let chain = vec![
            BlockSubalgebra::trivial(n),
            BlockSubalgebra::scalar_blocks(&[2, 2]).unwrap(),
            BlockSubalgebra::scalar_blocks(&[1, 1, 1, 1]).unwrap(),
            BlockSubalgebra::full(n),
        ];
        let report = nc_burkholder4(&f, &chain).unwrap();
        assert!(
            (report.norm - commutative.x).abs() <= 1e-9 * (1.0 + commutative.x),
            "norms differ: {} vs {}",
            report.norm,
            commutative.x
        );
        assert!(
            (report.square_max - commutative.y).abs() <= 1e-9 * (1.0 + commutative.y),
            "square terms differ: {} vs {}",
            report.square_max,
            commutative.y
        );
    }

    #[test]
    fn burkholder4_random_chains_stay_finite() {
        for idx in 0..30 {
            let mut rng = split_rng(153, idx);
            let f = NcElement::gaussian(2, 4, 2, &mut rng);
            let chain = vec![
                BlockSubalgebra::trivial(4),
                BlockSubalgebra::scalar_blocks(&[2, 2]).unwrap(),
                BlockSubalgebra::pinching(&[2, 2]).unwrap(),
                BlockSubalgebra::full(4),
            ];
            let report = nc_burkholder4(&f, &chain).unwrap();
            assert!(report.norm.is_finite() && report.square_max.is_finite());
            assert!(report.bracket.is_finite());
            assert!(report.ratio_norm_over_square.is_finite());
        }
    }

    #[test]
    fn cb_limit_of_the_unit_is_identically_one() {
        let f = NcElement::unit(2, 3);
        for (p, v) in cb_oh_limit(&f, 3).unwrap() {
            assert_eq!(v, 1.0, "p={p}");
        }
    }

    #[test]
    fn cb_limit_of_diagonal_scalars_collapses_commutatively() {
        let betas = [c(0.5, 0.0), c(-1.5, 0.5), c(2.0, -1.0)];
        let f = NcElement::diagonal_scalars(&betas);
        let seq = cb_oh_limit(&f, 3).unwrap();
        let max_abs = betas.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut prev = 0.0;
        for (p, v) in &seq {
            let expected = (betas.iter().map(|z| z.norm().powi(*p as i32)).sum::<f64>()
                / betas.len() as f64)
                .powf(1.0 / *p as f64);
            assert!((v - expected).abs() < 1e-10);
            assert!(*v >= prev - 1e-10);
            assert!(*v <= max_abs + 1e-9);
            prev = *v;
        }
    }

    #[test]
    fn cb_limit_sequences_are_nondecreasing() {
        for idx in 0..10 {
            let mut rng = split_rng(154, idx);
            let f = NcElement::gaussian(2, 2, 2, &mut rng);
            let seq = cb_oh_limit(&f, 3).unwrap();
            for w in seq.windows(2) {
                assert!(w[0].1 <= w[1].1 + 1e-10, "idx={idx}: {seq:?}");
            }
        }
    }

    #[test]
    fn exponent_bookkeeping_doubles_consistently() {
        // ‖f‖²_(4) = ‖f* ⊗̇ f‖_(2)
        for idx in 0..10 {
            let mut rng = split_rng(155, idx);
            let f = NcElement::gaussian(2, 2, 2, &mut rng);
            let lhs = f.lambda_norm(4).unwrap().powi(2);
            let rhs = f.star().product(&f).unwrap().lambda_norm(2).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs), "idx={idx}");
        }
    }

    #[test]
    fn implicit_path_reaches_p_sixteen() {
        let mut rng = split_rng(156, 0);
        let f = NcElement::gaussian(2, 2, 2, &mut rng);
        let seq = cb_oh_limit(&f, 4).unwrap();
        assert_eq!(seq.last().unwrap().0, 16);
        for w in seq.windows(2) {
            assert!(w[0].1 <= w[1].1 + 1e-10);
        }
    }
}
