//! Operator-valued functions on finite measure spaces and their Λ_p norms.
//!
//! A `MatrixField` is a `B(H)`-valued function on an atomic measure space.
//! For even `p = 2m` the Λ_p norm is
//! `‖∫ f^{⊗̇m} ⊗̇ f̄^{⊗̇m} dμ‖^{1/2m}` — the minimal tensor norm of an
//! integrated pointwise tensor power. At `p = 2` this is the operator-Hilbert
//! norm `‖∫ f ⊗̇ f̄ dμ‖^{1/2}`. Conditional expectations are weighted block
//! averages and are completely contractive in every Λ_p.

use crate::error::{Error, Result};
use crate::linalg::{checked_dim_product, ComplexMatrix, KronSumOperator, C64};
use rand::Rng;

/// An atomic measure space: labeled points with strictly positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasureSpace {
    labels: Vec<String>,
    weights: Vec<f64>,
}

impl FiniteMeasureSpace {
    pub fn new(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if labels.len() != weights.len() || labels.is_empty() {
            return Err(Error::InvalidArgument(
                "a measure space needs one positive weight per atom".into(),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidArgument(
                "atom weights must be strictly positive".into(),
            ));
        }
        Ok(Self { labels, weights })
    }

    /// Space with the given weights and numeric labels.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| i.to_string()).collect();
        Self::new(labels, weights)
    }

    /// Uniform probability space on `n` atoms.
    pub fn uniform_probability(n: usize) -> Self {
        Self::from_weights(vec![1.0 / n as f64; n]).expect("n must be positive")
    }

    pub fn atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, atom: usize) -> f64 {
        self.weights[atom]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// A partition of the atoms of a measure space into nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomPartition {
    atoms: usize,
    blocks: Vec<Vec<usize>>,
}

impl AtomPartition {
    pub fn new(atoms: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; atoms];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidArgument("empty partition block".into()));
            }
            for &a in block {
                if a >= atoms || seen[a] {
                    return Err(Error::InvalidArgument(format!(
                        "atom {a} missing or repeated in partition"
                    )));
                }
                seen[a] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(
                "partition does not cover all atoms".into(),
            ));
        }
        let mut blocks = blocks;
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { atoms, blocks })
    }

    /// Single block containing every atom.
    pub fn trivial(atoms: usize) -> Self {
        Self {
            atoms,
            blocks: vec![(0..atoms).collect()],
        }
    }

    /// One singleton block per atom.
    pub fn discrete(atoms: usize) -> Self {
        Self {
            atoms,
            blocks: (0..atoms).map(|a| vec![a]).collect(),
        }
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Whether every block of `self` is contained in a block of `coarser`.
    pub fn refines(&self, coarser: &AtomPartition) -> bool {
        if self.atoms != coarser.atoms {
            return false;
        }
        let mut block_of = vec![usize::MAX; self.atoms];
        for (i, b) in coarser.blocks.iter().enumerate() {
            for &a in b {
                block_of[a] = i;
            }
        }
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&a| block_of[a] == block_of[b[0]]))
    }
}

/// A `B(H)`-valued function on a finite measure space.
#[derive(Debug, Clone)]
pub struct MatrixField {
    space: FiniteMeasureSpace,
    opdim: usize,
    values: Vec<ComplexMatrix>,
}

impl MatrixField {
    pub fn new(space: FiniteMeasureSpace, values: Vec<ComplexMatrix>) -> Result<Self> {
        if values.len() != space.atoms() {
            return Err(Error::DimensionMismatch(
                "one matrix per atom is required".into(),
            ));
        }
        let opdim = values[0].dim();
        if values.iter().any(|v| v.dim() != opdim) {
            return Err(Error::DimensionMismatch(
                "all values of a field must share one dimension".into(),
            ));
        }
        Ok(Self {
            space,
            opdim,
            values,
        })
    }

    /// Constant field.
    pub fn constant(space: FiniteMeasureSpace, value: ComplexMatrix) -> Self {
        let values = vec![value; space.atoms()];
        Self {
            opdim: values[0].dim(),
            space,
            values,
        }
    }

    /// Scalar (1×1) field from complex values.
    pub fn scalar(space: FiniteMeasureSpace, values: &[C64]) -> Result<Self> {
        Self::new(
            space,
            values.iter().map(|&z| ComplexMatrix::scalar(z)).collect(),
        )
    }

    /// Field with i.i.d. Gaussian matrix values.
    pub fn gaussian(space: FiniteMeasureSpace, opdim: usize, rng: &mut impl Rng) -> Self {
        let values = (0..space.atoms())
            .map(|_| ComplexMatrix::gaussian(opdim, rng))
            .collect();
        Self {
            space,
            opdim,
            values,
        }
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn opdim(&self) -> usize {
        self.opdim
    }

    pub fn value(&self, atom: usize) -> &ComplexMatrix {
        &self.values[atom]
    }

    pub fn values(&self) -> &[ComplexMatrix] {
        &self.values
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::InvalidArgument(
                "fields live on different measure spaces".into(),
            ));
        }
        Ok(())
    }

    /// Pointwise complex conjugate `ω ↦ conj(f(ω))`.
    pub fn conj(&self) -> Self {
        Self {
            space: self.space.clone(),
            opdim: self.opdim,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        if self.opdim != other.opdim {
            return Err(Error::DimensionMismatch("field dimensions differ".into()));
        }
        Ok(Self {
            space: self.space.clone(),
            opdim: self.opdim,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            space: self.space.clone(),
            opdim: self.opdim,
            values: self.values.iter().map(|v| v.scale(z)).collect(),
        }
    }

    /// Atomwise Kronecker product `(f ⊗̇ g)(ω) = f(ω) ⊗ g(ω)`.
    pub fn pointwise_tensor(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        checked_dim_product(&[self.opdim, other.opdim], "pointwise tensor of fields")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.kron(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            space: self.space.clone(),
            opdim: self.opdim * other.opdim,
            values,
        })
    }

    /// m-fold pointwise tensor power.
    pub fn pointwise_power(&self, m: usize) -> Result<Self> {
        assert!(m >= 1);
        let mut acc = self.clone();
        for _ in 1..m {
            acc = acc.pointwise_tensor(self)?;
        }
        Ok(acc)
    }

    /// `Σ_ω μ(ω) f(ω)`.
    pub fn integrate(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.opdim);
        for (w, v) in self.space.weights.iter().zip(&self.values) {
            acc.add_scaled(v, C64::new(*w, 0.0));
        }
        acc
    }

    /// The integrand of the Λ_p norm, `∫ f^{⊗̇m} ⊗̇ f̄^{⊗̇m} dμ`, kept as a
    /// Kronecker sum with one elementary term per atom.
    pub fn lambda_integrand(&self, p: usize) -> Result<KronSumOperator> {
        let m = even_half(p)?;
        checked_dim_product(&vec![self.opdim; p], "Λ_p integrand")?;
        let terms: Vec<Vec<ComplexMatrix>> = self
            .values
            .iter()
            .zip(&self.space.weights)
            .map(|(v, w)| {
                let mut t = Vec::with_capacity(p);
                // fold the atom weight into the first slot
                t.push(v.scale(C64::new(*w, 0.0)));
                for _ in 1..m {
                    t.push(v.clone());
                }
                let vc = v.conj();
                for _ in 0..m {
                    t.push(vc.clone());
                }
                t
            })
            .collect();
        KronSumOperator::new(terms)
    }

    /// The Λ_p norm for even `p = 2m`:
    /// `‖∫ f^{⊗̇m} ⊗̇ f̄^{⊗̇m} dμ‖^{1/2m}`. At `p = 2` this is the OH norm.
    pub fn lambda_norm(&self, p: usize) -> Result<f64> {
        let norm = self.lambda_integrand(p)?.spectral_norm()?;
        Ok(norm.powf(1.0 / p as f64))
    }

    /// `‖(f ⊗̇ f̄)^{⊗̇m}‖` in the Λ_1 sense, reduced to `lambda_norm(f, 2m)^{2m}`.
    pub fn half_product_l1_norm(&self, m: usize) -> Result<f64> {
        Ok(self.lambda_norm(2 * m)?.powi(2 * m as i32))
    }

    /// Conditional expectation with respect to a partition of the atoms:
    /// on each block, the μ-weighted average of `f` over the block.
    pub fn conditional_expectation(&self, blocks: &AtomPartition) -> Result<Self> {
        if blocks.atoms() != self.space.atoms() {
            return Err(Error::DimensionMismatch(
                "partition is over a different atom set".into(),
            ));
        }
        let mut values = vec![ComplexMatrix::zeros(self.opdim); self.space.atoms()];
        for block in blocks.blocks() {
            let mass: f64 = block.iter().map(|&a| self.space.weight(a)).sum();
            let mut avg = ComplexMatrix::zeros(self.opdim);
            for &a in block {
                avg.add_scaled(&self.values[a], C64::new(self.space.weight(a) / mass, 0.0));
            }
            for &a in block {
                values[a] = avg.clone();
            }
        }
        Ok(Self {
            space: self.space.clone(),
            opdim: self.opdim,
            values,
        })
    }

    /// `max_ω ‖f(ω)‖`, the endpoint the Λ_p norms increase toward.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.spectral_norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.space == other.space
            && self.opdim == other.opdim
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.approx_eq(b, tol))
    }
}

pub(crate) fn even_half(p: usize) -> Result<usize> {
    if p < 2 || p % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "Λ_p is defined only for even integer p ≥ 2, got {p}"
        )));
    }
    Ok(p / 2)
}

/// Two sides of an inequality together with their ratio (`0` when the left
/// side vanishes).
#[derive(Debug, Clone, Copy)]
pub struct RatioReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl RatioReport {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self { lhs, rhs, ratio }
    }

    /// Whether the inequality `lhs ≤ rhs` holds with relative slack.
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack * (1.0 + self.rhs)
    }
}

/// Hölder check: `‖∫ f_1 ⊗̇ … ⊗̇ f_p dμ‖ ≤ Π_k ‖f_k‖_(p)` for `p` fields.
pub fn holder_check(fields: &[MatrixField], p: usize) -> Result<RatioReport> {
    even_half(p)?;
    if fields.len() != p {
        return Err(Error::InvalidArgument(format!(
            "Hölder with exponent {p} needs exactly {p} fields, got {}",
            fields.len()
        )));
    }
    for f in &fields[1..] {
        fields[0].check_same_space(f)?;
    }
    let mut prod = fields[0].clone();
    for f in &fields[1..] {
        prod = prod.pointwise_tensor(f)?;
    }
    let lhs = prod.integrate().spectral_norm();
    let mut rhs = 1.0;
    for f in fields {
        rhs *= f.lambda_norm(p)?;
    }
    Ok(RatioReport::new(lhs, rhs))
}

/// Cauchy–Schwarz check:
/// `‖∫ f ⊗̇ g dμ‖ ≤ ‖∫ f ⊗̇ f̄ dμ‖^{1/2} ‖∫ g ⊗̇ ḡ dμ‖^{1/2}`.
pub fn cauchy_schwarz_check(f: &MatrixField, g: &MatrixField) -> Result<RatioReport> {
    f.check_same_space(g)?;
    let lhs = f.pointwise_tensor(g)?.integrate().spectral_norm();
    let ff = f.pointwise_tensor(&f.conj())?.integrate().spectral_norm();
    let gg = g.pointwise_tensor(&g.conj())?.integrate().spectral_norm();
    Ok(RatioReport::new(lhs, ff.sqrt() * gg.sqrt()))
}

/// Generalized Cauchy–Schwarz for tensor powers of sums:
/// `‖∫(Σ a_k ⊗̇ b_k)^{⊗̇m}‖ ≤ ‖∫(Σ a_k ⊗̇ ā_k)^{⊗̇m}‖^{1/2} ‖∫(Σ b_k ⊗̇ b̄_k)^{⊗̇m}‖^{1/2}`.
pub fn tensor_power_cauchy_schwarz_check(
    a: &[MatrixField],
    b: &[MatrixField],
    m: usize,
) -> Result<RatioReport> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument(
            "the two sequences must have equal positive length".into(),
        ));
    }
    let sum_of = |xs: &[MatrixField], ys: &[MatrixField]| -> Result<MatrixField> {
        let mut acc: Option<MatrixField> = None;
        for (x, y) in xs.iter().zip(ys) {
            let t = x.pointwise_tensor(y)?;
            acc = Some(match acc {
                None => t,
                Some(s) => s.add(&t)?,
            });
        }
        Ok(acc.unwrap())
    };
    let ab = sum_of(a, b)?.pointwise_power(m)?.integrate().spectral_norm();
    let b_conj: Vec<MatrixField> = b.iter().map(|f| f.conj()).collect();
    let a_conj: Vec<MatrixField> = a.iter().map(|f| f.conj()).collect();
    let aa = sum_of(a, &a_conj)?
        .pointwise_power(m)?
        .integrate()
        .spectral_norm();
    let bb = sum_of(b, &b_conj)?
        .pointwise_power(m)?
        .integrate()
        .spectral_norm();
    Ok(RatioReport::new(ab, aa.sqrt() * bb.sqrt()))
}

/// One Λ_p value in a limit report.
#[derive(Debug, Clone, Copy)]
pub struct LambdaValue {
    pub p: usize,
    pub norm: f64,
}

/// Report of the Λ_p → L_∞ limit behavior on a probability space.
#[derive(Debug, Clone)]
pub struct LinfReport {
    /// Λ_p norms, in the order of the requested exponents.
    pub norms: Vec<LambdaValue>,
    /// `max_ω ‖f(ω)‖`.
    pub sup_norm: f64,
    /// `sup_norm − ‖f‖_(p)` at the largest requested `p`.
    pub gap_at_largest: f64,
    /// Whether the sequence is nondecreasing within `1e-9`.
    pub nondecreasing: bool,
    /// Whether every value stays at or below `sup_norm + 1e-9`.
    pub bounded_by_sup: bool,
    /// Whether `‖f(ω)‖ ≤ μ(ω)^{-1/p} ‖f‖_(p) + 1e-9` holds at every atom for
    /// the largest requested `p` (checked when that `p` is a power of two).
    pub atom_lower_bound_ok: bool,
}

/// Λ_p values against the L_∞ norm they converge to as `p → ∞`.
pub fn linf_limit_check(f: &MatrixField, p_list: &[usize]) -> Result<LinfReport> {
    if !f.space().is_probability() {
        return Err(Error::InvalidArgument(
            "the L_∞ limit check needs a probability space".into(),
        ));
    }
    if p_list.is_empty() {
        return Err(Error::InvalidArgument("empty exponent list".into()));
    }
    let mut norms = Vec::with_capacity(p_list.len());
    for &p in p_list {
        norms.push(LambdaValue {
            p,
            norm: f.lambda_norm(p)?,
        });
    }
    let sup = f.sup_norm();
    let mut sorted = norms.clone();
    sorted.sort_by_key(|v| v.p);
    let nondecreasing = sorted.windows(2).all(|w| w[0].norm <= w[1].norm + 1e-9);
    let bounded = sorted.iter().all(|v| v.norm <= sup + 1e-9);
    let largest = *sorted.last().unwrap();
    let mut atom_ok = true;
    if largest.p.is_power_of_two() {
        for atom in 0..f.space().atoms() {
            let bound =
                f.space().weight(atom).powf(-1.0 / largest.p as f64) * largest.norm + 1e-9;
            if f.value(atom).spectral_norm() > bound {
                atom_ok = false;
            }
        }
    }
    Ok(LinfReport {
        norms,
        sup_norm: sup,
        gap_at_largest: sup - largest.norm,
        nondecreasing,
        bounded_by_sup: bounded,
        atom_lower_bound_ok: atom_ok,
    })
}
