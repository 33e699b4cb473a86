//! Operator-valued trigonometric polynomials, the Hilbert transform as a
//! Fourier multiplier, and exact-quadrature Λ_p norms on the circle.
//!
//! Nothing here is discretized approximately: a trigonometric polynomial of
//! degree `d` is integrated exactly by any equispaced rule with more than `d`
//! nodes, so every Λ_p value on the circle is exact up to rounding.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lambda::{even_half, FiniteMeasureSpace, MatrixField};
use crate::linalg::{checked_dim_product, ComplexMatrix, C64};

/// A finitely supported Fourier series `Σ_n f̂(n) e^{int}` with matrix
/// coefficients.
#[derive(Debug, Clone)]
pub struct TrigPolynomial {
    opdim: usize,
    coeffs: BTreeMap<i64, ComplexMatrix>,
}

impl TrigPolynomial {
    pub fn new(
        opdim: usize,
        coefficients: impl IntoIterator<Item = (i64, ComplexMatrix)>,
    ) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (n, m) in coefficients {
            if m.dim() != opdim {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient at frequency {n} has dimension {} but expected {opdim}",
                    m.dim()
                )));
            }
            match coeffs.entry(n) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(m);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    e.get_mut().add_assign(&m);
                }
            }
        }
        Ok(Self { opdim, coeffs })
    }

    pub fn zero(opdim: usize) -> Self {
        Self {
            opdim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(value: ComplexMatrix) -> Self {
        let opdim = value.dim();
        Self::new(opdim, [(0, value)]).expect("constant coefficient is consistent")
    }

    pub fn monomial(n: i64, value: ComplexMatrix) -> Self {
        let opdim = value.dim();
        Self::new(opdim, [(n, value)]).expect("monomial coefficient is consistent")
    }

    pub fn opdim(&self) -> usize {
        self.opdim
    }

    /// Max `|n|` over the (possibly zero) stored coefficients.
    pub fn degree(&self) -> i64 {
        self.coeffs.keys().map(|n| n.abs()).max().unwrap_or(0)
    }

    pub fn coefficient(&self, n: i64) -> ComplexMatrix {
        self.coeffs
            .get(&n)
            .cloned()
            .unwrap_or_else(|| ComplexMatrix::zeros(self.opdim))
    }

    pub fn frequencies(&self) -> impl Iterator<Item = i64> + '_ {
        self.coeffs.keys().copied()
    }

    /// Largest entry magnitude over all coefficients.
    pub fn sup_coefficient_norm(&self) -> f64 {
        self.coeffs.values().map(|m| m.max_abs()).fold(0.0, f64::max)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.opdim != other.opdim {
            return Err(Error::DimensionMismatch(
                "polynomial dimensions differ".into(),
            ));
        }
        let mut coeffs = self.coeffs.clone();
        for (n, m) in &other.coeffs {
            match coeffs.entry(*n) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(m.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    e.get_mut().add_assign(m);
                }
            }
        }
        Ok(Self {
            opdim: self.opdim,
            coeffs,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            opdim: self.opdim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(n, m)| (*n, m.scale(z)))
                .collect(),
        }
    }

    /// Pointwise complex conjugate: `conj(f)^(n) = conj(f̂(−n))`.
    pub fn conj(&self) -> Self {
        Self {
            opdim: self.opdim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(n, m)| (-n, m.conj()))
                .collect(),
        }
    }

    /// Pointwise tensor `(f ⊗̇ g)(θ) = f(θ) ⊗ g(θ)`, a convolution of the
    /// coefficients.
    pub fn pointwise_tensor(&self, other: &Self) -> Result<Self> {
        checked_dim_product(
            &[self.opdim, other.opdim],
            "pointwise tensor of trigonometric polynomials",
        )?;
        let mut coeffs: BTreeMap<i64, ComplexMatrix> = BTreeMap::new();
        for (a, ma) in &self.coeffs {
            for (b, mb) in &other.coeffs {
                let k = ma.kron(mb)?;
                match coeffs.entry(a + b) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(k);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        e.get_mut().add_assign(&k);
                    }
                }
            }
        }
        Ok(Self {
            opdim: self.opdim * other.opdim,
            coeffs,
        })
    }

    /// The Hilbert transform: coefficient `n` multiplied by `−i·sign(n)`
    /// (frequency 0 is annihilated). `T² = −id` on mean-zero polynomials.
    pub fn hilbert_transform(&self) -> Self {
        Self {
            opdim: self.opdim,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(n, _)| **n != 0)
                .map(|(n, m)| {
                    let phi = C64::new(0.0, -(n.signum() as f64));
                    (*n, m.scale(phi))
                })
                .collect(),
        }
    }

    /// Value at the angle `θ`.
    pub fn evaluate(&self, theta: f64) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.opdim);
        for (n, m) in &self.coeffs {
            let phase = C64::new(0.0, *n as f64 * theta).exp();
            acc.add_scaled(m, phase);
        }
        acc
    }

    /// Samples on `nodes` equispaced points with uniform weights; exact as a
    /// quadrature for integrands of degree below `nodes`.
    pub fn sample_field(&self, nodes: usize) -> Result<MatrixField> {
        if nodes == 0 {
            return Err(Error::InvalidArgument("need at least one node".into()));
        }
        let space = FiniteMeasureSpace::uniform_probability(nodes);
        let values: Vec<ComplexMatrix> = (0..nodes)
            .map(|j| self.evaluate(std::f64::consts::TAU * j as f64 / nodes as f64))
            .collect();
        MatrixField::new(space, values)
    }

    /// Λ_p norm over the circle via exact quadrature on `p·degree + 1`
    /// equispaced nodes (the integrand has degree at most `p·degree`).
    pub fn lambda_norm(&self, p: usize) -> Result<f64> {
        even_half(p)?;
        let nodes = (p as i64 * self.degree() + 1) as usize;
        self.lambda_norm_with_nodes(p, nodes)
    }

    /// Λ_p with an explicit node count (any count above the exactness
    /// threshold returns the same value).
    pub fn lambda_norm_with_nodes(&self, p: usize, nodes: usize) -> Result<f64> {
        checked_dim_product(&vec![self.opdim; p], "Λ_p integrand on the circle")?;
        self.sample_field(nodes)?.lambda_norm(p)
    }

    /// `‖∫ h^{⊗̇q} dm‖^{1/q}` for square-function-type polynomials, by exact
    /// quadrature; extends the even-`q` Λ value to odd `q`.
    pub fn positive_chain_value(&self, q: usize) -> Result<f64> {
        assert!(q >= 1);
        let nodes = (q as i64 * self.degree() + 1) as usize;
        let field = self.sample_field(nodes)?;
        Ok(field
            .pointwise_power(q)?
            .integrate()
            .spectral_norm()
            .powf(1.0 / q as f64))
    }
}

/// Residual of the multiplier identity
/// `T(f ⊗̇ g − Tf ⊗̇ Tg) = f ⊗̇ Tg + Tf ⊗̇ g`, its conjugated variant, and
/// `conj(Tf) = T(conj f)`, in the sup-of-coefficients norm.
#[derive(Debug, Clone, Copy)]
pub struct CotlarReport {
    pub residual: f64,
    /// `(1 + sup‖f̂‖)·(1 + sup‖ĝ‖)` for relative comparison.
    pub scale: f64,
}

pub fn cotlar_residual(f: &TrigPolynomial, g: &TrigPolynomial) -> Result<CotlarReport> {
    let one_sided = |f: &TrigPolynomial, g: &TrigPolynomial| -> Result<f64> {
        let tf = f.hilbert_transform();
        let tg = g.hilbert_transform();
        let lhs = f
            .pointwise_tensor(g)?
            .sub(&tf.pointwise_tensor(&tg)?)?
            .hilbert_transform();
        let rhs = f.pointwise_tensor(&tg)?.add(&tf.pointwise_tensor(g)?)?;
        Ok(lhs.sub(&rhs)?.sup_coefficient_norm())
    };
    let direct = one_sided(f, g)?;
    let conjugated = one_sided(f, &g.conj())?;
    let star = f
        .hilbert_transform()
        .conj()
        .sub(&f.conj().hilbert_transform())?
        .sup_coefficient_norm();
    Ok(CotlarReport {
        residual: direct.max(conjugated).max(star),
        scale: (1.0 + f.sup_coefficient_norm()) * (1.0 + g.sup_coefficient_norm()),
    })
}

/// Λ_p norms of `f` and of its Hilbert transform, with their ratio; the
/// transform is bounded on each Λ_p but with no explicit constant, so the
/// ratio is reported rather than asserted.
#[derive(Debug, Clone, Copy)]
pub struct HilbertReport {
    pub norm_f: f64,
    pub norm_tf: f64,
    pub ratio: f64,
}

pub fn hilbert_cb_experiment(f: &TrigPolynomial, p: usize) -> Result<HilbertReport> {
    let norm_f = f.lambda_norm(p)?;
    let norm_tf = f.hilbert_transform().lambda_norm(p)?;
    let ratio = if norm_tf == 0.0 { 0.0 } else { norm_tf / norm_f };
    Ok(HilbertReport {
        norm_f,
        norm_tf,
        ratio,
    })
}

/// `‖f‖_(p)` against the dyadic-block square function
/// `𝒮(f) = Σ_n Δ_n ⊗̇ conj(Δ_n)` with blocks `2^n ≤ k < 2^{n+1}`.
#[derive(Debug, Clone, Copy)]
pub struct LittlewoodPaleyReport {
    pub norm_f: f64,
    /// `‖𝒮(f)‖^{1/2}_{(p/2)}`.
    pub square_norm: f64,
    pub ratio: f64,
}

pub fn littlewood_paley_check(f: &TrigPolynomial, p: usize) -> Result<LittlewoodPaleyReport> {
    even_half(p)?;
    if f.frequencies().any(|n| n <= 0) {
        return Err(Error::InvalidArgument(
            "the Littlewood–Paley check needs frequencies n > 0".into(),
        ));
    }
    let degree = f.degree();
    let mut square: Option<TrigPolynomial> = None;
    let mut start: i64 = 1;
    while start <= degree {
        let block = TrigPolynomial::new(
            f.opdim(),
            f.frequencies()
                .filter(|&n| n >= start && n < 2 * start)
                .map(|n| (n, f.coefficient(n))),
        )?;
        let term = block.pointwise_tensor(&block.conj())?;
        square = Some(match square {
            None => term,
            Some(s) => s.add(&term)?,
        });
        start *= 2;
    }
    let square = square.unwrap_or_else(|| TrigPolynomial::zero(f.opdim() * f.opdim()));
    let norm_f = f.lambda_norm(p)?;
    let square_norm = square.positive_chain_value(p / 2)?.sqrt();
    let ratio = if norm_f == 0.0 {
        0.0
    } else {
        norm_f / square_norm
    };
    Ok(LittlewoodPaleyReport {
        norm_f,
        square_norm,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{split_rng, KronSumOperator};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_poly(opdim: usize, degree: i64, seed: u64, idx: u64) -> TrigPolynomial {
        let mut rng = split_rng(seed, idx);
        TrigPolynomial::new(
            opdim,
            (-degree..=degree).map(|n| (n, ComplexMatrix::gaussian(opdim, &mut rng))),
        )
        .unwrap()
    }

    #[test]
    fn hilbert_transform_on_monomials() {
        let mut rng = split_rng(110, 0);
        let b = ComplexMatrix::gaussian(2, &mut rng);
        let f = TrigPolynomial::monomial(1, b.clone());
        let tf = f.hilbert_transform();
        assert!(tf.coefficient(1).approx_eq(&b.scale(c(0.0, -1.0)), 0.0));

        let constant = TrigPolynomial::constant(b);
        let tc = constant.hilbert_transform();
        assert_eq!(tc.sup_coefficient_norm(), 0.0);
    }

    #[test]
    fn hilbert_transform_squares_to_minus_identity_off_the_mean() {
        for idx in 0..20 {
            let f = random_poly(2, 3, 111, idx);
            let mean_zero = TrigPolynomial::new(
                2,
                f.frequencies()
                    .filter(|&n| n != 0)
                    .map(|n| (n, f.coefficient(n))),
            )
            .unwrap();
            let ttf = mean_zero.hilbert_transform().hilbert_transform();
            let residual = ttf
                .add(&mean_zero)
                .unwrap()
                .sup_coefficient_norm();
            assert!(residual < 1e-14, "instance {idx}");
        }
    }

    #[test]
    fn conjugation_commutes_with_the_transform() {
        for idx in 0..20 {
            let f = random_poly(2, 4, 112, idx);
            let lhs = f.hilbert_transform().conj();
            let rhs = f.conj().hilbert_transform();
            assert!(lhs.sub(&rhs).unwrap().sup_coefficient_norm() < 1e-14);
        }
    }

    #[test]
    fn cotlar_identity_on_monomials_and_constants() {
        let id = ComplexMatrix::identity(1);
        let f = TrigPolynomial::monomial(1, id.clone());
        let report = cotlar_residual(&f, &f).unwrap();
        assert!(report.residual < 1e-14);

        let mut rng = split_rng(113, 0);
        let constant = TrigPolynomial::constant(ComplexMatrix::gaussian(2, &mut rng));
        let g = random_poly(2, 3, 113, 1);
        let report = cotlar_residual(&constant, &g).unwrap();
        assert!(report.residual <= 1e-10 * report.scale);
    }

    #[test]
    fn cotlar_identity_on_random_polynomials() {
        for idx in 0..100 {
            let dim = 1 + (idx % 2) as usize;
            let f = random_poly(dim, 4, 114, idx);
            let g = random_poly(dim, 4, 115, idx);
            let report = cotlar_residual(&f, &g).unwrap();
            assert!(
                report.residual <= 1e-10 * report.scale,
                "instance {idx}: residual {} scale {}",
                report.residual,
                report.scale
            );
        }
    }

    #[test]
    fn lambda_norm_constants_and_unimodular_scalars() {
        let mut rng = split_rng(116, 0);
        let b = ComplexMatrix::gaussian(3, &mut rng);
        let f = TrigPolynomial::constant(b.clone());
        for p in [2usize, 4, 6] {
            assert!((f.lambda_norm(p).unwrap() - b.spectral_norm()).abs() < 1e-10);
        }
        let e = TrigPolynomial::monomial(1, ComplexMatrix::identity(1));
        for p in [2usize, 4, 6, 8] {
            assert!((e.lambda_norm(p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_is_exact_already_at_the_threshold() {
        for idx in 0..100 {
            let dim = 1 + (idx % 2) as usize;
            let deg = 1 + (idx % 3) as i64;
            let f = random_poly(dim, deg, 117, idx);
            let p = 4;
            let threshold = (p as i64 * f.degree() + 1) as usize;
            let base = f.lambda_norm_with_nodes(p, threshold).unwrap();
            let doubled = f.lambda_norm_with_nodes(p, 2 * threshold).unwrap();
            assert!(
                (base - doubled).abs() <= 1e-12 * (1.0 + base),
                "instance {idx}: {base} vs {doubled}"
            );
        }
    }

    #[test]
    fn parseval_at_p_two() {
        for idx in 0..20 {
            let f = random_poly(2, 3, 118, idx);
            let l2 = f.lambda_norm(2).unwrap();
            let terms: Vec<Vec<ComplexMatrix>> = f
                .frequencies()
                .map(|n| {
                    let m = f.coefficient(n);
                    vec![m.clone(), m.conj()]
                })
                .collect();
            let osum = KronSumOperator::new(terms)
                .unwrap()
                .spectral_norm()
                .unwrap();
            assert!((l2 * l2 - osum).abs() <= 1e-10 * (1.0 + osum));
        }
    }

    #[test]
    fn analytic_polynomials_have_unimodular_transform_ratio() {
        let mut rng = split_rng(119, 0);
        let f = TrigPolynomial::new(
            2,
            (1..=3).map(|n| (n, ComplexMatrix::gaussian(2, &mut rng))),
        )
        .unwrap();
        let report = hilbert_cb_experiment(&f, 4).unwrap();
        assert!((report.ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cosine_goes_to_sine_with_equal_norms() {
        let mut rng = split_rng(120, 0);
        let b = ComplexMatrix::gaussian(2, &mut rng);
        let half = b.scale(c(0.5, 0.0));
        let f = TrigPolynomial::new(2, [(1, half.clone()), (-1, half)]).unwrap();
        let tf = f.hilbert_transform();
        // Tf = sin·b: coefficients ∓i/2
        assert!(tf
            .coefficient(1)
            .approx_eq(&b.scale(c(0.0, -0.5)), 1e-15));
        assert!(tf
            .coefficient(-1)
            .approx_eq(&b.scale(c(0.0, 0.5)), 1e-15));
        let report = hilbert_cb_experiment(&f, 4).unwrap();
        let expected = (3.0f64 / 8.0).powf(0.25) * b.spectral_norm();
        assert!((report.norm_f - expected).abs() < 1e-10);
        assert!((report.norm_tf - expected).abs() < 1e-10);
    }

    #[test]
    fn hilbert_ratio_stays_finite_on_random_corpus() {
        let mut worst: f64 = 0.0;
        for idx in 0..50 {
            let dim = 1 + (idx % 2) as usize;
            let f = random_poly(dim, 3, 121, idx);
            let report = hilbert_cb_experiment(&f, 4).unwrap();
            assert!(report.ratio.is_finite());
            worst = worst.max(report.ratio);
        }
        assert!(worst < 10.0, "empirical ratio envelope blew up: {worst}");
    }

    #[test]
    fn littlewood_paley_single_block_gives_ratio_one() {
        let mut rng = split_rng(122, 0);
        let f = TrigPolynomial::new(
            2,
            (4..8).map(|n| (n, ComplexMatrix::gaussian(2, &mut rng))),
        )
        .unwrap();
        let report = littlewood_paley_check(&f, 4).unwrap();
        assert!((report.ratio - 1.0).abs() < 1e-9, "ratio {}", report.ratio);
    }

    #[test]
    fn littlewood_paley_scalar_lacunary_and_random_blocks() {
        // lacunary scalar series: one frequency per dyadic block
        let freqs = [1i64, 2, 4, 8];
        let f = TrigPolynomial::new(
            1,
            freqs.iter().map(|&n| (n, ComplexMatrix::identity(1))),
        )
        .unwrap();
        let report = littlewood_paley_check(&f, 4).unwrap();
        // 𝒮(f) ≡ 4, so the square norm is 2; the L₄ norm comes from quadrature
        assert!((report.square_norm - 2.0).abs() < 1e-12);
        let mut integral = 0.0;
        let nodes = 64;
        for j in 0..nodes {
            let theta = std::f64::consts::TAU * j as f64 / nodes as f64;
            let v: C64 = freqs
                .iter()
                .map(|&t| C64::new(0.0, t as f64 * theta).exp())
                .sum();
            integral += v.norm().powi(4) / nodes as f64;
        }
        assert!((report.norm_f - integral.powf(0.25)).abs() < 1e-10);

        let mut rng = split_rng(123, 0);
        let two_block = TrigPolynomial::new(
            2,
            [2i64, 3, 4, 6]
                .iter()
                .map(|&n| (n, ComplexMatrix::gaussian(2, &mut rng))),
        )
        .unwrap();
        let report = littlewood_paley_check(&two_block, 4).unwrap();
        assert!(report.ratio.is_finite() && report.ratio > 0.0);
    }

    #[test]
    fn mean_support_is_rejected_by_littlewood_paley() {
        let f = TrigPolynomial::constant(ComplexMatrix::identity(2));
        assert!(littlewood_paley_check(&f, 4).is_err());
    }
}
