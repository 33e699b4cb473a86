//! Filtrations on finite probability spaces, martingale square functions,
//! and the inequality experiments built on them.
//!
//! A filtration is a refining chain of atom partitions starting at the
//! trivial partition and ending at singletons; conditional expectations are
//! the block averages of [`crate::lambda`]. The square function of a
//! difference sequence is `S(f) = Σ d_n ⊗̇ d̄_n`, a pointwise cone-positive
//! field whose Λ values control `‖f‖_(p)`.

use crate::error::{Error, Result};
use crate::lambda::{even_half, AtomPartition, FiniteMeasureSpace, MatrixField, RatioReport};
use crate::linalg::{ComplexMatrix, KronSumOperator, C64};
use crate::partitions;

/// A refining chain of partitions: level 0 trivial, last level singletons.
#[derive(Debug, Clone)]
pub struct Filtration {
    space: FiniteMeasureSpace,
    levels: Vec<AtomPartition>,
}

impl Filtration {
    pub fn new(space: FiniteMeasureSpace, levels: Vec<AtomPartition>) -> Result<Self> {
        if !space.is_probability() {
            return Err(Error::InvalidArgument(
                "filtrations live on probability spaces".into(),
            ));
        }
        let n = space.atoms();
        if levels.is_empty() {
            return Err(Error::InvalidArgument("a filtration needs levels".into()));
        }
        if levels[0] != AtomPartition::trivial(n) {
            return Err(Error::InvalidArgument(
                "level 0 of a filtration must be the trivial partition".into(),
            ));
        }
        if *levels.last().unwrap() != AtomPartition::discrete(n) {
            return Err(Error::InvalidArgument(
                "the last level of a filtration must separate all atoms".into(),
            ));
        }
        for w in levels.windows(2) {
            if !w[1].refines(&w[0]) {
                return Err(Error::InvalidArgument(
                    "each filtration level must refine the previous one".into(),
                ));
            }
        }
        Ok(Self { space, levels })
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn levels(&self) -> &[AtomPartition] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// `E_n f`, the conditional expectation at level `n`.
    pub fn expectation(&self, f: &MatrixField, n: usize) -> Result<MatrixField> {
        if n >= self.levels.len() {
            return Err(Error::InvalidArgument(format!(
                "level {n} out of range (filtration has {})",
                self.levels.len()
            )));
        }
        f.conditional_expectation(&self.levels[n])
    }
}

/// The sign space `{−1,+1}^N` with uniform weights, its coordinate fields,
/// and the coordinate filtration.
#[derive(Debug, Clone)]
pub struct DyadicSpace {
    n: usize,
    space: FiniteMeasureSpace,
    filtration: Filtration,
}

impl DyadicSpace {
    /// `N` coordinates, `2^N` atoms. Atom `a` has coordinate `k` equal to
    /// `+1` when bit `N−k` of `a` is 0, so level-`n` blocks are contiguous.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::InvalidArgument(
                "the dyadic space supports 1..=20 coordinates".into(),
            ));
        }
        let atoms = 1usize << n;
        let space = FiniteMeasureSpace::uniform_probability(atoms);
        let mut levels = Vec::with_capacity(n + 1);
        for level in 0..=n {
            let block_len = 1usize << (n - level);
            let blocks: Vec<Vec<usize>> = (0..(1usize << level))
                .map(|b| (b * block_len..(b + 1) * block_len).collect())
                .collect();
            levels.push(AtomPartition::new(atoms, blocks)?);
        }
        let filtration = Filtration::new(space.clone(), levels)?;
        Ok(Self {
            n,
            space,
            filtration,
        })
    }

    pub fn coordinates(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    /// Sign of coordinate `k` (1-based) at atom `a`.
    pub fn sign(&self, k: usize, atom: usize) -> f64 {
        assert!(k >= 1 && k <= self.n);
        if atom & (1usize << (self.n - k)) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// The scalar coordinate field `ε_k`.
    pub fn epsilon(&self, k: usize) -> MatrixField {
        let values: Vec<ComplexMatrix> = (0..self.space.atoms())
            .map(|a| ComplexMatrix::scalar(C64::new(self.sign(k, a), 0.0)))
            .collect();
        MatrixField::new(self.space.clone(), values).expect("coordinate field is well formed")
    }

    /// `Σ_k b_k ε_k` as a matrix field.
    pub fn rademacher_sum(&self, coefficients: &[ComplexMatrix]) -> Result<MatrixField> {
        if coefficients.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                self.n,
                coefficients.len()
            )));
        }
        let dim = coefficients[0].dim();
        let values: Vec<ComplexMatrix> = (0..self.space.atoms())
            .map(|a| {
                let mut acc = ComplexMatrix::zeros(dim);
                for (k, b) in coefficients.iter().enumerate() {
                    acc.add_scaled(b, C64::new(self.sign(k + 1, a), 0.0));
                }
                acc
            })
            .collect();
        MatrixField::new(self.space.clone(), values)
    }
}

/// Martingale differences `d_0 = E_0 f`, `d_n = E_n f − E_{n−1} f`.
/// They telescope back to `f` since the last level is discrete.
pub fn martingale_differences(f: &MatrixField, fil: &Filtration) -> Result<Vec<MatrixField>> {
    if f.space() != fil.space() {
        return Err(Error::InvalidArgument(
            "field and filtration live on different spaces".into(),
        ));
    }
    let mut prev = fil.expectation(f, 0)?;
    let mut ds = vec![prev.clone()];
    for n in 1..fil.len() {
        let cur = fil.expectation(f, n)?;
        ds.push(cur.sub(&prev)?);
        prev = cur;
    }
    Ok(ds)
}

/// Square function `S = Σ_n d_n ⊗̇ d̄_n`; atomwise a cone element.
pub fn square_function(ds: &[MatrixField]) -> Result<MatrixField> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty difference sequence".into()));
    }
    let mut acc: Option<MatrixField> = None;
    for d in ds {
        let t = d.pointwise_tensor(&d.conj())?;
        acc = Some(match acc {
            None => t,
            Some(s) => s.add(&t)?,
        });
    }
    Ok(acc.unwrap())
}

/// Conditioned square function
/// `σ = d_0 ⊗̇ d̄_0 + Σ_{n≥1} E_{n−1}(d_n ⊗̇ d̄_n)`.
pub fn conditioned_square(ds: &[MatrixField], fil: &Filtration) -> Result<MatrixField> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty difference sequence".into()));
    }
    let mut acc = ds[0].pointwise_tensor(&ds[0].conj())?;
    for (n, d) in ds.iter().enumerate().skip(1) {
        let t = fil.expectation(&d.pointwise_tensor(&d.conj())?, n - 1)?;
        acc = acc.add(&t)?;
    }
    Ok(acc)
}

/// `‖∫ h^{⊗̇q} dμ‖^{1/q}` for a pointwise cone-positive, conjugation-symmetric
/// field (a square-function-type quantity).
///
/// For even `q` this equals the Λ_q norm of `h`: the conjugate of such a
/// field is a fixed slot swap, which the minimal norm ignores; for odd `q`
/// it is the natural extension the inequalities are stated with.
pub fn positive_chain_value(h: &MatrixField, q: usize) -> Result<f64> {
    assert!(q >= 1);
    Ok(h.pointwise_power(q)?
        .integrate()
        .spectral_norm()
        .powf(1.0 / q as f64))
}

/// The two Burkholder quantities and their ratios.
#[derive(Debug, Clone, Copy)]
pub struct BurkholderReport {
    /// `x = ‖f‖_(p)`.
    pub x: f64,
    /// `y = ‖S(f)‖^{1/2}_{(p/2)}`.
    pub y: f64,
    /// `max(x/y, y/x)`.
    pub max_ratio: f64,
}

/// Computes `x = ‖f‖_(p)` and `y = ‖S(f)‖^{1/2}_{(p/2)}`.
///
/// At `p = 4` the two are equivalent with `max(x/y, y/x) ≤ √2+√3`; other
/// exponents are reported for empirical constant tracking only.
pub fn burkholder_experiment(
    f: &MatrixField,
    fil: &Filtration,
    p: usize,
) -> Result<BurkholderReport> {
    even_half(p)?;
    if p < 4 {
        return Err(Error::InvalidArgument(
            "the Burkholder experiment needs p ≥ 4".into(),
        ));
    }
    let ds = martingale_differences(f, fil)?;
    let s = square_function(&ds)?;
    let x = f.lambda_norm(p)?;
    let y = positive_chain_value(&s, p / 2)?.sqrt();
    let max_ratio = if x == 0.0 && y == 0.0 {
        1.0
    } else {
        (x / y).max(y / x)
    };
    Ok(BurkholderReport { x, y, max_ratio })
}

/// Dual Doob check: with `α = Σ E_n(θ_n ⊗̇ θ̄_n)` and `β = Σ θ_n ⊗̇ θ̄_n`,
/// `‖∫ α^{⊗̇m}‖ ≤ m^m ‖∫ β^{⊗̇m}‖`.
pub fn dual_doob_check(
    thetas: &[MatrixField],
    fil: &Filtration,
    m: usize,
) -> Result<RatioReport> {
    if thetas.is_empty() || m < 1 {
        return Err(Error::InvalidArgument(
            "need at least one θ and m ≥ 1".into(),
        ));
    }
    if thetas.len() + 1 > fil.len() {
        return Err(Error::InvalidArgument(format!(
            "{} summands need filtration levels 1..={}, but only {} levels exist",
            thetas.len(),
            thetas.len(),
            fil.len()
        )));
    }
    let mut alpha: Option<MatrixField> = None;
    let mut beta: Option<MatrixField> = None;
    for (i, theta) in thetas.iter().enumerate() {
        let sq = theta.pointwise_tensor(&theta.conj())?;
        let proj = fil.expectation(&sq, i + 1)?;
        alpha = Some(match alpha {
            None => proj,
            Some(a) => a.add(&proj)?,
        });
        beta = Some(match beta {
            None => sq,
            Some(b) => b.add(&sq)?,
        });
    }
    let lhs = alpha
        .unwrap()
        .pointwise_power(m)?
        .integrate()
        .spectral_norm();
    let rhs = (m as f64).powi(m as i32)
        * beta
            .unwrap()
            .pointwise_power(m)?
            .integrate()
            .spectral_norm();
    Ok(RatioReport::new(lhs, rhs))
}

/// Stein check: with
/// `v = Σ E_{n−1}(x_n ⊗̇ x̄_n) ⊗̇ E_{n−1}(x̄_n ⊗̇ x_n)` and
/// `δ = Σ x_n ⊗̇ x̄_n ⊗̇ x̄_n ⊗̇ x_n`, `‖∫ v^{⊗̇m}‖ ≤ m^m ‖∫ δ^{⊗̇m}‖`.
pub fn stein_check(xs: &[MatrixField], fil: &Filtration, m: usize) -> Result<RatioReport> {
    if xs.is_empty() || m < 1 {
        return Err(Error::InvalidArgument(
            "need at least one x and m ≥ 1".into(),
        ));
    }
    if xs.len() > fil.len() {
        return Err(Error::InvalidArgument(
            "more summands than filtration levels".into(),
        ));
    }
    let mut v: Option<MatrixField> = None;
    let mut delta: Option<MatrixField> = None;
    for (i, x) in xs.iter().enumerate() {
        let plain = x.pointwise_tensor(&x.conj())?;
        let swapped = x.conj().pointwise_tensor(x)?;
        let term = fil
            .expectation(&plain, i)?
            .pointwise_tensor(&fil.expectation(&swapped, i)?)?;
        v = Some(match v {
            None => term,
            Some(a) => a.add(&term)?,
        });
        let d = plain.pointwise_tensor(&swapped)?;
        delta = Some(match delta {
            None => d,
            Some(b) => b.add(&d)?,
        });
    }
    let lhs = v.unwrap().pointwise_power(m)?.integrate().spectral_norm();
    let rhs = (m as f64).powi(m as i32)
        * delta
            .unwrap()
            .pointwise_power(m)?
            .integrate()
            .spectral_norm();
    Ok(RatioReport::new(lhs, rhs))
}

/// `‖f‖_(p)` against the Rosenthal-style bracket
/// `[f]_p = ‖σ(f)‖^{1/2}_{(p/2)} + ‖∫(Σ d_n ⊗̇ d̄_n ⊗̇ d_n ⊗̇ d̄_n)^{⊗̇p/4}‖^{1/p}`.
#[derive(Debug, Clone, Copy)]
pub struct RosenthalReport {
    pub norm: f64,
    pub bracket: f64,
    pub sigma_term: f64,
    pub diagonal_term: f64,
}

pub fn rosenthal_bracket(
    f: &MatrixField,
    fil: &Filtration,
    p: usize,
) -> Result<RosenthalReport> {
    if p % 4 != 0 || p < 4 {
        return Err(Error::InvalidArgument(
            "the Rosenthal bracket needs p divisible by 4".into(),
        ));
    }
    let ds = martingale_differences(f, fil)?;
    let sigma = conditioned_square(&ds, fil)?;
    let sigma_term = positive_chain_value(&sigma, p / 2)?.sqrt();
    let mut diag: Option<MatrixField> = None;
    for d in &ds {
        let dd = d.pointwise_tensor(&d.conj())?;
        let t = dd.pointwise_tensor(&dd)?;
        diag = Some(match diag {
            None => t,
            Some(a) => a.add(&t)?,
        });
    }
    let diagonal_term = diag
        .unwrap()
        .pointwise_power(p / 4)?
        .integrate()
        .spectral_norm()
        .powf(1.0 / p as f64);
    Ok(RosenthalReport {
        norm: f.lambda_norm(p)?,
        bracket: sigma_term + diagonal_term,
        sigma_term,
        diagonal_term,
    })
}

/// Khintchine-type comparison for a Rademacher sum `f = Σ b_k ε_k`:
/// `rhs = ‖Σ b_k ⊗ b̄_k‖^{1/2} ≤ ‖f‖_(p) ≤ C_{gauss,p} · rhs`.
#[derive(Debug, Clone, Copy)]
pub struct KhintchineReport {
    pub lhs: f64,
    pub rhs: f64,
    /// The Gaussian pairing constant `((p−1)!!)^{1/p}` that bounds the ratio.
    pub constant: f64,
}

pub fn rademacher_khintchine(bs: &[ComplexMatrix], p: usize) -> Result<KhintchineReport> {
    even_half(p)?;
    if bs.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one coefficient".into(),
        ));
    }
    let dyadic = DyadicSpace::new(bs.len())?;
    let f = dyadic.rademacher_sum(bs)?;
    let lhs = f.lambda_norm(p)?;
    let terms: Vec<Vec<ComplexMatrix>> = bs.iter().map(|b| vec![b.clone(), b.conj()]).collect();
    let rhs = KronSumOperator::new(terms)?.spectral_norm()?.sqrt();
    let constant = partitions::khintchine_constant(partitions::MomentFunction::Gaussian, p)?;
    Ok(KhintchineReport { lhs, rhs, constant })
}

/// Result of the p-orthogonality test and the associated inequality check.
#[derive(Debug, Clone)]
pub struct POrthReport {
    /// Whether every injective alternating word integrates to (numerical) zero.
    pub is_p_orthogonal: bool,
    /// Largest norm among the injective-word integrals.
    pub max_word_norm: f64,
    /// `‖Σ d_j‖_(p)` divided by `(3π/2)·p·Δ` with Δ the square-function
    /// maximum; present only when the family is p-orthogonal.
    pub ratio: Option<f64>,
}

/// Brute-force p-orthogonality: for every injective `g: [1..p] → I` the
/// integral `∫ d̄_{g(1)} ⊗̇ d_{g(2)} ⊗̇ … ⊗̇ d_{g(p)} dμ` must vanish. When it
/// does, the sum obeys `‖Σ d_j‖_(p) ≤ (3π/2)·p·Δ`, and the report carries
/// the observed ratio against that bound.
pub fn p_orthogonality_check(ds: &[MatrixField], p: usize) -> Result<POrthReport> {
    even_half(p)?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("empty family".into()));
    }
    let count = ds.len();
    if (count as f64).powi(p as i32) > 1e6 {
        return Err(Error::SizeCap(format!(
            "injective enumeration needs |I|^p = {count}^{p} ≤ 10^6"
        )));
    }
    let scale = ds
        .iter()
        .map(MatrixField::sup_norm)
        .fold(0.0, f64::max)
        .powi(p as i32);
    let mut max_word_norm: f64 = 0.0;
    let mut chosen = vec![usize::MAX; p];
    let mut used = vec![false; count];
    enumerate_injective(ds, p, 0, &mut chosen, &mut used, &mut max_word_norm)?;
    let orthogonal = max_word_norm <= 1e-10 * (scale + f64::MIN_POSITIVE);

    let ratio = if orthogonal {
        let mut sum = ds[0].clone();
        for d in &ds[1..] {
            sum = sum.add(d)?;
        }
        let lhs = sum.lambda_norm(p)?;
        let s_plain = square_function(ds)?;
        let mut s_swapped: Option<MatrixField> = None;
        for d in ds {
            let t = d.conj().pointwise_tensor(d)?;
            s_swapped = Some(match s_swapped {
                None => t,
                Some(a) => a.add(&t)?,
            });
        }
        let v1 = positive_chain_value(&s_plain, p / 2)?;
        let v2 = positive_chain_value(&s_swapped.unwrap(), p / 2)?;
        let delta = v1.max(v2).sqrt();
        let bound = 1.5 * std::f64::consts::PI * p as f64 * delta;
        Some(if lhs == 0.0 { 0.0 } else { lhs / bound })
    } else {
        None
    };
    Ok(POrthReport {
        is_p_orthogonal: orthogonal,
        max_word_norm,
        ratio,
    })
}

fn enumerate_injective(
    ds: &[MatrixField],
    p: usize,
    depth: usize,
    chosen: &mut [usize],
    used: &mut [bool],
    max_word_norm: &mut f64,
) -> Result<()> {
    if depth == p {
        let mut prod: Option<MatrixField> = None;
        for (pos, &j) in chosen.iter().enumerate() {
            // 1-based odd positions carry the conjugate
            let factor = if pos % 2 == 0 {
                ds[j].conj()
            } else {
                ds[j].clone()
            };
            prod = Some(match prod {
                None => factor,
                Some(a) => a.pointwise_tensor(&factor)?,
            });
        }
        let norm = prod.unwrap().integrate().spectral_norm();
        if norm > *max_word_norm {
            *max_word_norm = norm;
        }
        return Ok(());
    }
    for j in 0..ds.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        chosen[depth] = j;
        enumerate_injective(ds, p, depth + 1, chosen, used, max_word_norm)?;
        used[j] = false;
    }
    Ok(())
}
