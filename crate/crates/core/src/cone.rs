//! The order `x ≺ y` on tensors with conjugate-paired slots.
//!
//! The cone of finite sums `Σ a_k ⊗ ā_k` (slots grouped into plain copies and
//! their conjugates by an explicit pairing) admits a decidable membership
//! test: rearranging the coefficients of `x` into a Gram-style matrix turns
//! cone membership into positive semidefiniteness. Norm monotonicity along
//! the order is what every inequality downstream leans on.

use crate::error::{Error, Result};
use crate::linalg::{check_dim, ComplexMatrix, KronSumOperator, C64};

/// Declares which slots of an arity-`2m` tensor are plain copies and which
/// are their conjugates; `plain[j]` is paired with `conj[j]`.
///
/// The pairing is explicit data fixed for the lifetime of a value: it is
/// never inferred, and every derived result keeps it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    plain: Vec<usize>,
    conj: Vec<usize>,
}

impl Pairing {
    /// Validates that `plain` and `conj` together enumerate `0..2m` exactly
    /// once.
    pub fn new(plain: Vec<usize>, conj: Vec<usize>) -> Result<Self> {
        if plain.len() != conj.len() {
            return Err(Error::InvalidArgument(
                "pairing needs equally many plain and conjugate slots".into(),
            ));
        }
        let arity = plain.len() + conj.len();
        let mut seen = vec![false; arity];
        for &s in plain.iter().chain(conj.iter()) {
            if s >= arity || seen[s] {
                return Err(Error::InvalidArgument(format!(
                    "pairing does not enumerate slots 0..{arity} exactly once"
                )));
            }
            seen[s] = true;
        }
        Ok(Self { plain, conj })
    }

    /// Standard layout: slots `0..m` plain, `m..2m` their conjugates in order.
    pub fn standard(m: usize) -> Self {
        Self {
            plain: (0..m).collect(),
            conj: (m..2 * m).collect(),
        }
    }

    pub fn pairs(&self) -> usize {
        self.plain.len()
    }

    pub fn plain_slots(&self) -> &[usize] {
        &self.plain
    }

    pub fn conj_slots(&self) -> &[usize] {
        &self.conj
    }

    /// Pairing of a tensor product: the slots of `other` follow the slots of
    /// `self`.
    pub fn merged(&self, other: &Self) -> Self {
        let off = 2 * self.pairs();
        let mut plain = self.plain.clone();
        plain.extend(other.plain.iter().map(|s| s + off));
        let mut conj = self.conj.clone();
        conj.extend(other.conj.iter().map(|s| s + off));
        Self { plain, conj }
    }
}

/// A Kronecker sum together with the conjugate pairing of its slots.
#[derive(Debug, Clone)]
pub struct PairedTensor {
    value: KronSumOperator,
    pairing: Pairing,
}

impl PairedTensor {
    /// Attaches a pairing to a Kronecker sum, checking arity and that paired
    /// slots have equal dimensions.
    pub fn new(value: KronSumOperator, pairing: Pairing) -> Result<Self> {
        if value.arity() != 2 * pairing.pairs() {
            return Err(Error::DimensionMismatch(format!(
                "pairing covers {} slots but the tensor has {}",
                2 * pairing.pairs(),
                value.arity()
            )));
        }
        let dims = value.factor_dims();
        for (p, c) in pairing.plain.iter().zip(&pairing.conj) {
            if dims[*p] != dims[*c] {
                return Err(Error::DimensionMismatch(format!(
                    "paired slots {p} and {c} have dimensions {} and {}",
                    dims[*p], dims[*c]
                )));
            }
        }
        Ok(Self { value, pairing })
    }

    /// Builds `Σ_k (a_{k,1}⊗…⊗a_{k,m}) ⊗ (ā_{k,1}⊗…⊗ā_{k,m})` with the
    /// standard pairing: the archetypal cone element.
    pub fn gram(elements: &[Vec<ComplexMatrix>]) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument(
                "a Gram element needs at least one term".into(),
            ));
        }
        let m = elements[0].len();
        let terms: Vec<Vec<ComplexMatrix>> = elements
            .iter()
            .map(|factors| {
                let mut t = factors.clone();
                t.extend(factors.iter().map(|a| a.conj()));
                t
            })
            .collect();
        Ok(Self {
            value: KronSumOperator::new(terms)?,
            pairing: Pairing::standard(m),
        })
    }

    pub fn value(&self) -> &KronSumOperator {
        &self.value
    }

    pub fn pairing(&self) -> &Pairing {
        &self.pairing
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.pairing != other.pairing {
            return Err(Error::InvalidArgument(
                "paired tensors with different pairings cannot be combined".into(),
            ));
        }
        Ok(Self {
            value: self.value.add(&other.value)?,
            pairing: self.pairing.clone(),
        })
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            value: self.value.scale(z),
            pairing: self.pairing.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Minimal tensor norm of the underlying operator.
    pub fn spectral_norm(&self) -> Result<f64> {
        self.value.spectral_norm()
    }

    /// The matrix of the sesquilinear form attached to `x`: expanding `x` in
    /// matrix units, the coefficient of `(e_{i₁j₁}⊗…) ⊗ (ē_{k₁l₁}⊗…)` lands
    /// at row `(i⃗,j⃗)`, column `(k⃗,l⃗)`. `x` is in the cone iff this matrix is
    /// PSD.
    pub fn realign(&self) -> Result<ComplexMatrix> {
        let dims = self.value.factor_dims();
        let mut total: u128 = 1;
        for &p in &self.pairing.plain {
            total = total.saturating_mul((dims[p] * dims[p]) as u128);
        }
        let d = check_dim(total, "realignment of a paired tensor")?;
        let mut r = ComplexMatrix::zeros(d);
        for term in self.value.terms() {
            let u = vec_of_slots(term, &self.pairing.plain);
            let w = vec_of_slots(term, &self.pairing.conj);
            for (i, ui) in u.iter().enumerate() {
                if *ui == C64::new(0.0, 0.0) {
                    continue;
                }
                for (j, wj) in w.iter().enumerate() {
                    if *wj == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let cur = r.get(i, j);
                    r.set(i, j, cur + ui * wj);
                }
            }
        }
        Ok(r)
    }

    /// Cone membership at tolerance `tol ≥ 0` (relative to the realigned
    /// norm).
    ///
    /// A realignment that fails to be Hermitian beyond `1e-6` relative
    /// signals an inconsistent pairing and is an error rather than `false`.
    pub fn is_positive(&self, tol: f64) -> Result<bool> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidArgument(
                "the positivity tolerance must be nonnegative".into(),
            ));
        }
        let r = self.realign()?;
        let defect = r.hermiticity_defect();
        let herm_tol = 1e-6 * (1.0 + r.frobenius_norm());
        if defect > herm_tol {
            return Err(Error::NotHermitian {
                defect,
                tol: herm_tol,
            });
        }
        let (min_eig, norm) = r.symmetrized_eig_bounds();
        Ok(min_eig >= -tol * (1.0 + norm))
    }

    /// Cone membership at the default tolerance `1e-9`.
    pub fn is_positive_default(&self) -> Result<bool> {
        self.is_positive(1e-9)
    }

    /// Whether `self ≺ other`, i.e. `other − self` lies in the cone.
    pub fn precedes(&self, other: &Self, tol: f64) -> Result<bool> {
        other.sub(self)?.is_positive(tol)
    }

    /// Tensor product under the merged pairing; positivity of both factors
    /// carries over to the product.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.value.tensor(&other.value)?,
            self.pairing.merged(&other.pairing),
        )
    }

    /// m-fold tensor power.
    pub fn tensor_power(&self, m: usize) -> Result<Self> {
        assert!(m >= 1);
        let mut acc = self.clone();
        for _ in 1..m {
            acc = acc.tensor(self)?;
        }
        Ok(acc)
    }
}

fn vec_of_slots(term: &[ComplexMatrix], slots: &[usize]) -> Vec<C64> {
    let mut acc = vec![C64::new(1.0, 0.0)];
    for &s in slots {
        let v = term[s].vec_rows();
        let mut next = Vec::with_capacity(acc.len() * v.len());
        for a in &acc {
            for b in &v {
                next.push(a * b);
            }
        }
        acc = next;
    }
    acc
}
