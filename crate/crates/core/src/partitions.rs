//! Set-partition lattice, Möbius function, pair partitions and crossing
//! numbers, pairing-moment constants, and Λ(p)-set counting.
//!
//! Everything here is exact integer/rational combinatorics; the only floats
//! are the final constants like `(Σ_ν |ψ(ν)|)^{1/p}`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lambda::RatioReport;
use crate::linalg::{ComplexMatrix, KronSumOperator, C64};
use crate::torus::TrigPolynomial;
use rand::Rng;

/// Largest `n` for which the full partition lattice is enumerated.
pub const MAX_LATTICE_N: usize = 12;

/// Largest `n` (even) for which pair partitions are enumerated.
pub const MAX_PAIRING_N: usize = 16;

/// A partition of `{0, …, n−1}` into disjoint nonempty blocks, kept in
/// canonical order (blocks sorted, then ordered by smallest element).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidArgument("empty partition block".into()));
            }
            for &x in b {
                if x >= n || seen[x] {
                    return Err(Error::InvalidArgument(format!(
                        "element {x} missing from range or repeated"
                    )));
                }
                seen[x] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(
                "blocks do not cover the ground set".into(),
            ));
        }
        let mut blocks = blocks;
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { n, blocks })
    }

    /// The minimal partition `0̂` (all singletons).
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            blocks: (0..n).map(|x| vec![x]).collect(),
        }
    }

    /// The maximal partition `1̂` (one block).
    pub fn one(n: usize) -> Self {
        Self {
            n,
            blocks: vec![(0..n).collect()],
        }
    }

    /// Builds a partition from a restricted-growth-style block assignment.
    pub fn from_assignment(assignment: &[usize]) -> Self {
        let n = assignment.len();
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (x, &b) in assignment.iter().enumerate() {
            blocks[b].push(x);
        }
        blocks.retain(|b| !b.is_empty());
        Self { n, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Block index of each element.
    pub fn assignment(&self) -> Vec<usize> {
        let mut a = vec![0usize; self.n];
        for (i, b) in self.blocks.iter().enumerate() {
            for &x in b {
                a[x] = i;
            }
        }
        a
    }

    /// Refinement order: `self ≤ other` iff every block of `self` is
    /// contained in some block of `other`.
    pub fn leq(&self, other: &SetPartition) -> bool {
        if self.n != other.n {
            return false;
        }
        let of = other.assignment();
        self.blocks
            .iter()
            .all(|b| b.iter().all(|&x| of[x] == of[b[0]]))
    }

    /// `μ(0̂, self)` by the product formula
    /// `Π_B (−1)^{|B|−1} (|B|−1)!` over the blocks.
    pub fn mobius_from_zero(&self) -> i64 {
        self.blocks
            .iter()
            .map(|b| {
                let k = b.len() as i64;
                let sign = if (k - 1) % 2 == 0 { 1 } else { -1 };
                sign * factorial(k - 1)
            })
            .product()
    }
}

fn factorial(k: i64) -> i64 {
    (1..=k).product::<i64>().max(1)
}

/// `μ(fine, coarse)` for `fine ≤ coarse`: the interval factors into full
/// lattices, one per block of `coarse`, with rank the number of `fine`-blocks
/// it contains.
pub fn interval_mobius(fine: &SetPartition, coarse: &SetPartition) -> Result<i64> {
    if !fine.leq(coarse) {
        return Err(Error::InvalidArgument(
            "interval Möbius needs fine ≤ coarse".into(),
        ));
    }
    let fine_of = fine.assignment();
    let mut mu = 1i64;
    for block in coarse.blocks() {
        let mut fine_blocks: Vec<usize> = block.iter().map(|&x| fine_of[x]).collect();
        fine_blocks.sort_unstable();
        fine_blocks.dedup();
        let k = fine_blocks.len() as i64;
        let sign = if (k - 1) % 2 == 0 { 1 } else { -1 };
        mu *= sign * factorial(k - 1);
    }
    Ok(mu)
}

/// Streams every partition of `{0,…,n−1}` (restricted growth strings).
pub fn for_each_partition(n: usize, mut f: impl FnMut(&SetPartition)) -> Result<()> {
    if n == 0 || n > MAX_LATTICE_N {
        return Err(Error::SizeCap(format!(
            "partition lattice enumeration supports 1..={MAX_LATTICE_N}, got {n}"
        )));
    }
    let mut rgs = vec![0usize; n];
    loop {
        f(&SetPartition::from_assignment(&rgs));
        // next restricted growth string
        let mut i = n;
        loop {
            if i == 1 {
                return Ok(());
            }
            i -= 1;
            let max_prefix = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= max_prefix {
                rgs[i] += 1;
                for v in rgs[i + 1..].iter_mut() {
                    *v = 0;
                }
                break;
            }
        }
    }
}

/// All partitions of `{0,…,n−1}`, materialized.
pub fn enumerate_partitions(n: usize) -> Result<Vec<SetPartition>> {
    let mut out = Vec::new();
    for_each_partition(n, |p| out.push(p.clone()))?;
    Ok(out)
}

/// Bell numbers by the standard recurrence (exact for `n ≤ 20`).
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for v in &row {
            next.push(next.last().unwrap() + v);
        }
        row = next;
    }
    row[0]
}

/// A partition of `{0,…,n−1}` into two-element blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairPartition {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    pub fn new(n: usize, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if n % 2 != 0 || pairs.len() != n / 2 {
            return Err(Error::InvalidArgument(
                "a pair partition needs n even and n/2 pairs".into(),
            ));
        }
        let mut seen = vec![false; n];
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        for &(a, b) in &pairs {
            if a == b || b >= n || seen[a] || seen[b] {
                return Err(Error::InvalidArgument(
                    "pairs must cover the ground set exactly once".into(),
                ));
            }
            seen[a] = true;
            seen[b] = true;
        }
        pairs.sort_by_key(|&(a, _)| a);
        Ok(Self { n, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Number of interleaved pairs `{a<b}, {c<d}` with `a<c<b<d`.
    pub fn crossing_number(&self) -> usize {
        let mut crossings = 0;
        for i in 0..self.pairs.len() {
            for j in i + 1..self.pairs.len() {
                let (a, b) = self.pairs[i];
                let (c, d) = self.pairs[j];
                let (a, b, c, d) = if a < c { (a, b, c, d) } else { (c, d, a, b) };
                if a < c && c < b && b < d {
                    crossings += 1;
                }
            }
        }
        crossings
    }

    pub fn is_noncrossing(&self) -> bool {
        self.crossing_number() == 0
    }

    /// View as a general set partition.
    pub fn as_set_partition(&self) -> SetPartition {
        SetPartition::new(self.n, self.pairs.iter().map(|&(a, b)| vec![a, b]).collect())
            .expect("pair partitions are valid partitions")
    }
}

/// Streams every pair partition of `{0,…,n−1}`.
pub fn for_each_pair_partition(n: usize, mut f: impl FnMut(&PairPartition)) -> Result<()> {
    if n == 0 || n % 2 != 0 || n > MAX_PAIRING_N {
        return Err(Error::SizeCap(format!(
            "pair partition enumeration supports even 2..={MAX_PAIRING_N}, got {n}"
        )));
    }
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    fn recurse(
        n: usize,
        used: &mut [bool],
        pairs: &mut Vec<(usize, usize)>,
        f: &mut impl FnMut(&PairPartition),
    ) {
        let first = match (0..n).find(|&i| !used[i]) {
            None => {
                f(&PairPartition {
                    n,
                    pairs: pairs.clone(),
                });
                return;
            }
            Some(i) => i,
        };
        used[first] = true;
        for j in first + 1..n {
            if used[j] {
                continue;
            }
            used[j] = true;
            pairs.push((first, j));
            recurse(n, used, pairs, f);
            pairs.pop();
            used[j] = false;
        }
        used[first] = false;
    }
    recurse(n, &mut used, &mut pairs, &mut f);
    Ok(())
}

/// All pair partitions, materialized.
pub fn enumerate_pair_partitions(n: usize) -> Result<Vec<PairPartition>> {
    let mut out = Vec::new();
    for_each_pair_partition(n, |p| out.push(p.clone()))?;
    Ok(out)
}

/// `(2m−1)!! = 1·3·5···(2m−1)` as an exact float.
pub fn double_factorial_odd(p: usize) -> f64 {
    let mut acc = 1.0;
    let mut k = 1;
    while k < p {
        acc *= k as f64;
        k += 2;
    }
    acc
}

/// Catalan numbers by the convolution recurrence.
pub fn catalan(m: usize) -> u64 {
    let mut c = vec![0u64; m + 1];
    c[0] = 1;
    for i in 1..=m {
        for j in 0..i {
            c[i] += c[j] * c[i - 1 - j];
        }
    }
    c[m]
}

/// Pairing weight functions `ψ` for the moment families whose Khintchine
/// constants are `(Σ_ν |ψ(ν)|)^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentFunction {
    /// `ψ ≡ 1`: real Gaussian / Rademacher moments.
    Gaussian,
    /// `ψ(ν) = q^{i(ν)}` with `i` the crossing number.
    QGaussian(f64),
    /// Indicator of noncrossing pairings (semicircular family).
    Free,
    /// `ψ(ν) = (−1)^{i(ν)}`; constants use `|ψ| ≡ 1`.
    Spin,
}

impl MomentFunction {
    /// Signed pairing weight.
    pub fn psi(&self, nu: &PairPartition) -> f64 {
        match self {
            MomentFunction::Gaussian => 1.0,
            MomentFunction::QGaussian(q) => q.powi(nu.crossing_number() as i32),
            MomentFunction::Free => {
                if nu.is_noncrossing() {
                    1.0
                } else {
                    0.0
                }
            }
            MomentFunction::Spin => {
                if nu.crossing_number() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }

    pub fn psi_abs(&self, nu: &PairPartition) -> f64 {
        self.psi(nu).abs()
    }
}

/// The Khintchine constant `C_{ψ,p} = (Σ_{ν∈P₂(p)} |ψ(ν)|)^{1/p}`.
///
/// For `ψ ≡ 1` this is `((p−1)!!)^{1/p}`, the L_p norm of a standard real
/// Gaussian; for the noncrossing indicator it is `Catalan(p/2)^{1/p} ≤ 2`.
pub fn khintchine_constant(psi: MomentFunction, p: usize) -> Result<f64> {
    if p % 2 != 0 || p == 0 {
        return Err(Error::InvalidArgument(
            "Khintchine constants need even p ≥ 2".into(),
        ));
    }
    let mut sum = 0.0;
    for_each_pair_partition(p, |nu| sum += psi.psi_abs(nu))?;
    Ok(sum.powf(1.0 / p as f64))
}

/// Residual of the Möbius decomposition of a multilinear form evaluated on
/// sums, against its injective-part/lattice-corrected expansion.
#[derive(Debug, Clone, Copy)]
pub struct MobiusDecompositionReport {
    pub residual: f64,
    pub scale: f64,
}

/// Builds a random `n`-linear form `φ` on `(ℂ²)ⁿ` and random vectors
/// `d_i(k)` for `i` in an index set of the given size, then checks
/// `φ(F_1,…,F_n) = Φ(0̂) − Σ_{0̂<π} μ(0̂,π) Ψ(π)` where `F_k = Σ_i d_i(k)`,
/// `Φ(0̂)` is the injective part and `Ψ(π)` sums over maps constant on the
/// blocks of `π`.
pub fn mobius_decomposition_check(
    n: usize,
    index_count: usize,
    seed: u64,
) -> Result<MobiusDecompositionReport> {
    if n == 0 || n > 6 {
        return Err(Error::SizeCap("the decomposition check supports n ≤ 6".into()));
    }
    if index_count == 0 || index_count > 4 {
        return Err(Error::SizeCap("the decomposition check supports |I| ≤ 4".into()));
    }
    let dim = 2usize;
    let mut rng = crate::linalg::split_rng(seed, 0);
    let rand_c = |rng: &mut rand_chacha::ChaCha8Rng| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    };
    // dense coefficient tensor of the multilinear form
    let tensor: Vec<C64> = (0..dim.pow(n as u32)).map(|_| rand_c(&mut rng)).collect();
    let d: Vec<Vec<Vec<C64>>> = (0..index_count)
        .map(|_| {
            (0..n)
                .map(|_| (0..dim).map(|_| rand_c(&mut rng)).collect())
                .collect()
        })
        .collect();
    decomposition_residual(n, index_count, dim, &tensor, &d)
}

/// Evaluates both sides of the decomposition for explicit data: the form's
/// dense coefficient `tensor` and vectors `d[i][k]`.
pub fn decomposition_residual(
    n: usize,
    index_count: usize,
    dim: usize,
    tensor: &[C64],
    d: &[Vec<Vec<C64>>],
) -> Result<MobiusDecompositionReport> {
    if tensor.len() != dim.pow(n as u32) || d.len() != index_count {
        return Err(Error::InvalidArgument(
            "tensor or vector data has the wrong shape".into(),
        ));
    }
    let phi = |vectors: &[&Vec<C64>]| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (flat, t) in tensor.iter().enumerate() {
            let mut prod = *t;
            let mut rest = flat;
            for k in (0..n).rev() {
                prod *= vectors[k][rest % dim];
                rest /= dim;
            }
            acc += prod;
        }
        acc
    };

    let sums: Vec<Vec<C64>> = (0..n)
        .map(|k| {
            let mut s = vec![C64::new(0.0, 0.0); dim];
            for di in d {
                for (j, v) in di[k].iter().enumerate() {
                    s[j] += v;
                }
            }
            s
        })
        .collect();
    let lhs = phi(&sums.iter().collect::<Vec<_>>());

    // injective part Φ(0̂)
    let mut injective_part = C64::new(0.0, 0.0);
    let mut g = vec![0usize; n];
    loop {
        let inj = {
            let mut seen = vec![false; index_count];
            g.iter().all(|&i| {
                if seen[i] {
                    false
                } else {
                    seen[i] = true;
                    true
                }
            })
        };
        if inj {
            let vectors: Vec<&Vec<C64>> = (0..n).map(|k| &d[g[k]][k]).collect();
            injective_part += phi(&vectors);
        }
        if !advance(&mut g, index_count) {
            break;
        }
    }

    // lattice correction
    let mut correction = C64::new(0.0, 0.0);
    let mut scale = injective_part.norm();
    for_each_partition(n, |pi| {
        if pi.block_count() == n {
            return; // skip 0̂
        }
        let mu = pi.mobius_from_zero() as f64;
        // sum over maps constant on the blocks of π
        let blocks = pi.blocks();
        let mut h = vec![0usize; blocks.len()];
        let mut psi_value = C64::new(0.0, 0.0);
        loop {
            let mut g_full = vec![0usize; n];
            for (b, block) in blocks.iter().enumerate() {
                for &x in block {
                    g_full[x] = h[b];
                }
            }
            let vectors: Vec<&Vec<C64>> = (0..n).map(|k| &d[g_full[k]][k]).collect();
            psi_value += phi(&vectors);
            if !advance(&mut h, index_count) {
                break;
            }
        }
        correction += psi_value * C64::new(mu, 0.0);
        scale += mu.abs() * psi_value.norm();
    })?;

    let rhs = injective_part - correction;
    Ok(MobiusDecompositionReport {
        residual: (lhs - rhs).norm(),
        scale: scale + lhs.norm() + 1.0,
    })
}

fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn check_z_cap(freq_count: usize, half: usize) -> Result<()> {
    if (freq_count as f64).powi(half as i32) > 1e7 {
        return Err(Error::SizeCap(format!(
            "Λ(p)-set counting needs |E|^(p/2) = {freq_count}^{half} ≤ 10^7"
        )));
    }
    Ok(())
}

fn z_counts(freqs: &[i64], p: usize, alternating: bool) -> Result<HashMap<i64, u64>> {
    if p % 2 != 0 || p < 2 {
        return Err(Error::InvalidArgument("Λ(p)-set counting needs even p".into()));
    }
    let half = p / 2;
    check_z_cap(freqs.len(), half)?;
    let mut counts = HashMap::new();
    let mut used = vec![false; freqs.len()];
    fn recurse(
        freqs: &[i64],
        used: &mut [bool],
        depth: usize,
        half: usize,
        sum: i64,
        alternating: bool,
        counts: &mut HashMap<i64, u64>,
    ) {
        if depth == half {
            *counts.entry(sum).or_insert(0) += 1;
            return;
        }
        let sign = if alternating && depth % 2 == 1 { -1 } else { 1 };
        for (i, &t) in freqs.iter().enumerate() {
            if used[i] {
                continue;
            }
            used[i] = true;
            recurse(freqs, used, depth + 1, half, sum + sign * t, alternating, counts);
            used[i] = false;
        }
    }
    recurse(freqs, &mut used, 0, half, 0, alternating, &mut counts);
    Ok(counts)
}

/// `Z_p(γ, E)`: injective `g: [1..p/2] → E` with alternating combination
/// `g(1) − g(2) + g(3) − …` equal to `γ`.
pub fn z_count(freqs: &[i64], p: usize, gamma: i64) -> Result<u64> {
    Ok(*z_counts(freqs, p, true)?.get(&gamma).unwrap_or(&0))
}

/// `Z(E) = max_γ Z_p(γ, E)`.
pub fn z_max(freqs: &[i64], p: usize) -> Result<u64> {
    Ok(z_counts(freqs, p, true)?.values().copied().max().unwrap_or(0))
}

/// Plain-sum variant `Z_{p+}(γ, E)` with `γ = g(1) + g(2) + … + g(p/2)`.
pub fn z_plus_count(freqs: &[i64], p: usize, gamma: i64) -> Result<u64> {
    Ok(*z_counts(freqs, p, false)?.get(&gamma).unwrap_or(&0))
}

/// `Z_+(E) = max_γ Z_{p+}(γ, E)`.
pub fn z_plus_max(freqs: &[i64], p: usize) -> Result<u64> {
    Ok(z_counts(freqs, p, false)?.values().copied().max().unwrap_or(0))
}

/// Lacunary Khintchine check on the torus: for `f = Σ_{t∈E} b_t e^{itθ}`,
/// `‖f‖_(p) ≤ ((4Z(E))^{1/p} + (9π/8)p) · ‖Σ b_t ⊗ b̄_t‖^{1/2}`.
pub fn lacunary_khintchine_check(
    freqs: &[i64],
    coefficients: &[ComplexMatrix],
    p: usize,
) -> Result<RatioReport> {
    if freqs.len() != coefficients.len() || freqs.is_empty() {
        return Err(Error::InvalidArgument(
            "need one coefficient per frequency".into(),
        ));
    }
    let mut sorted = freqs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != freqs.len() {
        return Err(Error::InvalidArgument("frequencies must be distinct".into()));
    }
    let f = TrigPolynomial::new(
        coefficients[0].dim(),
        freqs.iter().copied().zip(coefficients.iter().cloned()),
    )?;
    let lhs = f.lambda_norm(p)?;
    let z = z_max(freqs, p)? as f64;
    let oh = KronSumOperator::new(
        coefficients
            .iter()
            .map(|b| vec![b.clone(), b.conj()])
            .collect(),
    )?
    .spectral_norm()?
    .sqrt();
    let constant = (4.0 * z).powf(1.0 / p as f64) + (9.0 * std::f64::consts::PI / 8.0) * p as f64;
    Ok(RatioReport::new(lhs, constant * oh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::split_rng;

    #[test]
    fn pair_partition_counts_are_double_factorials() {
        assert_eq!(enumerate_pair_partitions(2).unwrap().len(), 1);
        assert_eq!(enumerate_pair_partitions(4).unwrap().len(), 3);
        for m in 1..=6usize {
            let count = enumerate_pair_partitions(2 * m).unwrap().len();
            assert_eq!(count as f64, double_factorial_odd(2 * m), "m={m}");
        }
    }

    #[test]
    fn bell_numbers_match_enumeration() {
        assert_eq!(enumerate_partitions(4).unwrap().len(), 15);
        for n in 1..=7usize {
            assert_eq!(
                enumerate_partitions(n).unwrap().len() as u64,
                bell_number(n),
                "n={n}"
            );
        }
    }

    #[test]
    fn refinement_order_basics() {
        let zero = SetPartition::zero(3);
        let one = SetPartition::one(3);
        let mid = SetPartition::new(3, vec![vec![0, 1], vec![2]]).unwrap();
        let other = SetPartition::new(3, vec![vec![0, 2], vec![1]]).unwrap();
        assert!(zero.leq(&mid) && zero.leq(&one) && mid.leq(&one));
        assert!(!mid.leq(&other) && !other.leq(&mid));
        assert!(!one.leq(&mid));
    }

    #[test]
    fn leq_is_transitive_on_random_triples() {
        let all = enumerate_partitions(5).unwrap();
        let mut rng = split_rng(100, 0);
        use rand::Rng;
        for _ in 0..500 {
            let a = &all[rng.gen::<u32>() as usize % all.len()];
            let b = &all[rng.gen::<u32>() as usize % all.len()];
            let c = &all[rng.gen::<u32>() as usize % all.len()];
            if a.leq(b) && b.leq(c) {
                assert!(a.leq(c));
            }
        }
    }

    #[test]
    fn mobius_values() {
        assert_eq!(SetPartition::zero(5).mobius_from_zero(), 1);
        assert_eq!(SetPartition::one(3).mobius_from_zero(), 2);
        assert_eq!(SetPartition::one(4).mobius_from_zero(), -6);
    }

    #[test]
    fn mobius_mass_is_n_factorial() {
        for n in 1..=8usize {
            let mut mass: i64 = 0;
            for_each_partition(n, |p| mass += p.mobius_from_zero().abs()).unwrap();
            let expected: i64 = (1..=n as i64).product();
            assert_eq!(mass, expected, "n={n}");
        }
    }

    #[test]
    fn interval_mobius_agrees_with_product_formula_on_full_intervals() {
        for n in 1..=5usize {
            let zero = SetPartition::zero(n);
            for_each_partition(n, |p| {
                assert_eq!(interval_mobius(&zero, p).unwrap(), p.mobius_from_zero());
            })
            .unwrap();
        }
    }

    #[test]
    fn mobius_sums_vanish_above_zero_hat() {
        // Σ_{0̂ ≤ π ≤ σ} μ(π, σ) = 0 for σ ≠ 0̂
        for n in 2..=5usize {
            let all = enumerate_partitions(n).unwrap();
            for sigma in &all {
                if sigma.block_count() == n {
                    continue;
                }
                let mut total = 0i64;
                for pi in &all {
                    if pi.leq(sigma) {
                        total += interval_mobius(pi, sigma).unwrap();
                    }
                }
                assert_eq!(total, 0, "σ = {sigma:?}");
            }
        }
    }

    #[test]
    fn mobius_inversion_recovers_the_summand() {
        use rand::Rng;
        for n in 1..=5usize {
            let all = enumerate_partitions(n).unwrap();
            let mut rng = split_rng(101, n as u64);
            let phi: Vec<i64> = (0..all.len()).map(|_| rng.gen_range(-50i64..50)).collect();
            // Ψ(σ) = Σ_{π ≤ σ} Φ(π)
            let psi: Vec<i64> = all
                .iter()
                .map(|sigma| {
                    all.iter()
                        .zip(&phi)
                        .filter(|(pi, _)| pi.leq(sigma))
                        .map(|(_, v)| v)
                        .sum()
                })
                .collect();
            // inversion: Φ(σ) = Σ_{π ≤ σ} μ(π, σ) Ψ(π)
            for (i, sigma) in all.iter().enumerate() {
                let mut recovered = 0i64;
                for (j, pi) in all.iter().enumerate() {
                    if pi.leq(sigma) {
                        recovered += interval_mobius(pi, sigma).unwrap() * psi[j];
                    }
                }
                assert_eq!(recovered, phi[i]);
            }
        }
    }

    #[test]
    fn crossing_numbers() {
        let flat = PairPartition::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert_eq!(flat.crossing_number(), 0);
        let crossed = PairPartition::new(4, vec![(0, 2), (1, 3)]).unwrap();
        assert_eq!(crossed.crossing_number(), 1);
        let nested = PairPartition::new(4, vec![(0, 3), (1, 2)]).unwrap();
        assert_eq!(nested.crossing_number(), 0);
    }

    #[test]
    fn noncrossing_pairings_are_counted_by_catalan() {
        for m in 1..=6usize {
            let mut count = 0u64;
            for_each_pair_partition(2 * m, |nu| {
                if nu.is_noncrossing() {
                    count += 1;
                }
            })
            .unwrap();
            assert_eq!(count, catalan(m), "m={m}");
        }
    }

    #[test]
    fn khintchine_constants() {
        for p in [2usize, 4, 6, 8, 10] {
            let c = khintchine_constant(MomentFunction::Gaussian, p).unwrap();
            assert_eq!(c, double_factorial_odd(p).powf(1.0 / p as f64), "p={p}");
        }
        assert_eq!(
            khintchine_constant(MomentFunction::Gaussian, 4).unwrap(),
            3f64.powf(0.25)
        );
        for p in [2usize, 4, 6, 8, 10, 12] {
            let free = khintchine_constant(MomentFunction::Free, p).unwrap();
            assert_eq!(free, (catalan(p / 2) as f64).powf(1.0 / p as f64));
            assert!(free <= 2.0);
        }
        // q = 1 collapses to the Gaussian constant
        for p in [2usize, 4, 6, 8, 10, 12] {
            let q1 = khintchine_constant(MomentFunction::QGaussian(1.0), p).unwrap();
            let gauss = khintchine_constant(MomentFunction::Gaussian, p).unwrap();
            assert!((q1 - gauss).abs() < 1e-12);
        }
        // spin constants coincide with Gaussian ones
        for p in [2usize, 4, 6, 8] {
            assert_eq!(
                khintchine_constant(MomentFunction::Spin, p).unwrap(),
                khintchine_constant(MomentFunction::Gaussian, p).unwrap()
            );
        }
    }

    #[test]
    fn q_constant_is_monotone_in_abs_q() {
        let grid: [f64; 8] = [-1.0, -0.7, -0.3, 0.0, 0.2, 0.5, 0.8, 1.0];
        for p in [4usize, 6, 8] {
            let mut values: Vec<(f64, f64)> = grid
                .iter()
                .map(|&q| {
                    (
                        q.abs(),
                        khintchine_constant(MomentFunction::QGaussian(q), p).unwrap(),
                    )
                })
                .collect();
            values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for w in values.windows(2) {
                assert!(w[0].1 <= w[1].1 + 1e-12);
            }
        }
    }

    #[test]
    fn mobius_decomposition_residual_vanishes() {
        for n in 2..=5usize {
            for idx in 0..10u64 {
                let report = mobius_decomposition_check(n, 1 + (idx as usize % 4), 200 + idx).unwrap();
                assert!(
                    report.residual <= 1e-10 * report.scale,
                    "n={n} idx={idx}: residual {} vs scale {}",
                    report.residual,
                    report.scale
                );
            }
        }
    }

    #[test]
    fn mobius_decomposition_zero_inputs_vanish_exactly() {
        // all-zero d_i(k) make both sides vanish identically
        let n = 3usize;
        let dim = 2usize;
        let tensor = vec![C64::new(1.0, 0.5); dim.pow(n as u32)];
        let zeros = vec![vec![vec![C64::new(0.0, 0.0); dim]; n]; 2];
        let report = decomposition_residual(n, 2, dim, &tensor, &zeros).unwrap();
        assert_eq!(report.residual, 0.0);
    }

    #[test]
    fn z_counting_examples() {
        // all pairwise differences distinct
        assert_eq!(z_max(&[1, 2, 4, 8], 4).unwrap(), 1);
        // γ = 1 is a−b for (2,1) and (3,2)
        assert_eq!(z_count(&[1, 2, 3], 4, 1).unwrap(), 2);
        // unreachable γ
        assert_eq!(z_count(&[1, 2, 3], 4, 100).unwrap(), 0);
        // plain-sum variant: γ = 3 = 1+2 = 2+1
        assert_eq!(z_plus_count(&[1, 2, 4], 4, 3).unwrap(), 2);
        assert_eq!(z_plus_max(&[1, 2, 4], 4).unwrap(), 2);
    }

    #[test]
    fn lacunary_single_frequency_and_geometric_set() {
        let mut rng = split_rng(102, 0);
        let b = ComplexMatrix::gaussian(2, &mut rng);
        let single = lacunary_khintchine_check(&[5], std::slice::from_ref(&b), 4).unwrap();
        assert!((single.lhs - b.spectral_norm()).abs() < 1e-9);
        assert!(single.holds(1e-9));

        for idx in 0..20u64 {
            let mut rng = split_rng(103, idx);
            let freqs = [1i64, 2, 4, 8, 16];
            let bs: Vec<ComplexMatrix> =
                (0..freqs.len()).map(|_| ComplexMatrix::gaussian(2, &mut rng)).collect();
            let report = lacunary_khintchine_check(&freqs, &bs, 4).unwrap();
            assert!(report.holds(1e-9), "instance {idx}: ratio {}", report.ratio);
        }
    }

    #[test]
    fn lacunary_scalar_case_matches_classical_lp() {
        // scalar coefficients reduce to a classical Λ(p)-set inequality,
        // with the left side an ordinary L_p norm over the circle
        let freqs = [1i64, 2, 4, 8];
        let bs: Vec<ComplexMatrix> = [1.0, 0.5, -0.25, 2.0]
            .iter()
            .map(|&x| ComplexMatrix::scalar(C64::new(x, 0.0)))
            .collect();
        let report = lacunary_khintchine_check(&freqs, &bs, 4).unwrap();
        // direct quadrature of |f|⁴ on enough nodes
        let nodes = 64usize;
        let mut integral = 0.0;
        for j in 0..nodes {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
            let mut v = C64::new(0.0, 0.0);
            for (t, b) in freqs.iter().zip([1.0, 0.5, -0.25, 2.0]) {
                v += C64::new(0.0, *t as f64 * theta).exp() * b;
            }
            integral += v.norm().powi(4) / nodes as f64;
        }
        assert!((report.lhs - integral.powf(0.25)).abs() < 1e-9);
        assert!(report.holds(1e-9));
    }
}
