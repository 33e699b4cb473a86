//! Wick pairing moments and exact Ginibre trace moments.
//!
//! Mixed Gaussian moments are sums over pair partitions of products of
//! second moments; for the normalized Ginibre ensemble `Y = N^{-1/2}(g_ij)`
//! the trace moment `E τ_N(|Y|^p)` becomes a sum of pairing weights that are
//! powers of `N` counted by index cycles, with the noncrossing pairings
//! surviving as `N → ∞`. A seeded Monte-Carlo estimator cross-checks the
//! exact values.

use crate::error::{Error, Result};
use crate::linalg::{split_rng, ComplexMatrix, C64};
use crate::partitions::{for_each_pair_partition, PairPartition};

/// Longest word accepted by the exact pairing sums.
pub const MAX_WICK_LENGTH: usize = 12;

/// Mixed moment `E(X_{w_1} ⋯ X_{w_k})` of a jointly Gaussian family from its
/// bilinear second moments `m[a][b] = E(X_a X_b)`: zero for odd length,
/// otherwise the sum over pairings of products of pair moments.
pub fn wick_scalar_moment(second_moments: &ComplexMatrix, word: &[usize]) -> Result<C64> {
    let vars = second_moments.dim();
    if word.iter().any(|&w| w >= vars) {
        return Err(Error::InvalidArgument(
            "word refers to a variable outside the moment matrix".into(),
        ));
    }
    if second_moments
        .sub(&second_moments.transpose())
        .max_abs()
        > 1e-12 * (1.0 + second_moments.max_abs())
    {
        return Err(Error::InvalidArgument(
            "second moments E(X_a X_b) must form a symmetric matrix".into(),
        ));
    }
    if word.len() % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    if word.is_empty() {
        return Ok(C64::new(1.0, 0.0));
    }
    if word.len() > MAX_WICK_LENGTH {
        return Err(Error::SizeCap(format!(
            "pairing sums support words of length ≤ {MAX_WICK_LENGTH}"
        )));
    }
    let mut total = C64::new(0.0, 0.0);
    for_each_pair_partition(word.len(), |nu| {
        let mut prod = C64::new(1.0, 0.0);
        for &(a, b) in nu.pairs() {
            prod *= second_moments.get(word[a], word[b]);
        }
        total += prod;
    })?;
    Ok(total)
}

/// The normalized Ginibre ensemble: `N×N`, entries `N^{-1/2}·g` with
/// `E|g|² = 1`, and a seed that fully determines the sample stream.
#[derive(Debug, Clone, Copy)]
pub struct GinibreSpec {
    pub n: usize,
    pub seed: u64,
}

impl GinibreSpec {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix size must be positive".into()));
        }
        Ok(Self { n, seed })
    }

    /// One sample `Y = N^{-1/2}(g_ij)`.
    pub fn sample(&self, rng: &mut impl rand::Rng) -> ComplexMatrix {
        ComplexMatrix::gaussian(self.n, rng)
            .scale(C64::new(1.0 / (self.n as f64).sqrt(), 0.0))
    }
}

/// Pairing weight `ψ^{(N)}(ν) = E τ_N(Y^ν)` for the alternating word
/// `Y Y* Y Y* …` of length `p`.
///
/// Zero unless every block pairs a `Y` position with a `Y*` position;
/// otherwise `N^{c(ν) − 1 − p/2}` where `c(ν)` counts the index cycles forced
/// by the Wick delta constraints around the trace word.
pub fn ginibre_pairing_weight(nu: &PairPartition, n: usize, p: usize) -> f64 {
    assert_eq!(nu.n(), p, "pairing size must match the word length");
    // positions are 0-based: even = Y, odd = Y*
    for &(a, b) in nu.pairs() {
        if a % 2 == b % 2 {
            return 0.0;
        }
    }
    // union-find over the p boundary indices i_0..i_{p-1}
    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let union = |parent: &mut [usize], a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    };
    for &(a, b) in nu.pairs() {
        let (y_pos, star_pos) = if a % 2 == 0 { (a, b) } else { (b, a) };
        // E[Y[i_s, i_{s+1}]·conj(Y[i_{t+1}, i_t])] forces i_s = i_{t+1}, i_{s+1} = i_t
        union(&mut parent, y_pos, (star_pos + 1) % p);
        union(&mut parent, (y_pos + 1) % p, star_pos);
    }
    let cycles = (0..p).filter(|&x| find(&mut parent, x) == x).count();
    (n as f64).powi(cycles as i32 - 1 - (p / 2) as i32)
}

/// Exact `E τ_N(|Y^{(N)}|^p)` as the sum of pairing weights.
pub fn moment_exact(n: usize, p: usize) -> Result<f64> {
    if p % 2 != 0 || p == 0 {
        return Err(Error::InvalidArgument("trace moments need even p".into()));
    }
    if p > MAX_WICK_LENGTH {
        return Err(Error::SizeCap(format!(
            "exact moments support p ≤ {MAX_WICK_LENGTH}"
        )));
    }
    let mut total = 0.0;
    for_each_pair_partition(p, |nu| total += ginibre_pairing_weight(nu, n, p))?;
    Ok(total)
}

/// Monte-Carlo estimate of `E τ_N(|Y|^p)` with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McReport {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl McReport {
    /// Whether a reference value sits within `k` standard errors.
    pub fn consistent_with(&self, reference: f64, k: f64) -> bool {
        (self.estimate - reference).abs() <= k * self.stderr
    }
}

/// Samples `τ_N(|Y|^p)` under a fixed seed; reruns are bit-identical.
pub fn moment_mc(spec: GinibreSpec, p: usize, samples: usize) -> Result<McReport> {
    if p % 2 != 0 || p == 0 {
        return Err(Error::InvalidArgument("trace moments need even p".into()));
    }
    if samples < 1_000 {
        return Err(Error::InvalidArgument(
            "the estimator needs at least 10³ samples".into(),
        ));
    }
    let mut rng = split_rng(spec.seed, 0);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let y = spec.sample(&mut rng);
        let gram = y.matmul(&y.adjoint());
        let mut power = gram.clone();
        for _ in 1..p / 2 {
            power = power.matmul(&gram);
        }
        let v = power.trace().re / spec.n as f64;
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    Ok(McReport {
        estimate: mean,
        stderr: (var / samples as f64).sqrt(),
        samples,
    })
}

/// The optimal random-matrix Khintchine constant
/// `(E τ_N(|Y^{(N)}|^p))^{1/p}`.
pub fn rm_khintchine_constant(n: usize, p: usize) -> Result<f64> {
    Ok(moment_exact(n, p)?.powf(1.0 / p as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{catalan, enumerate_pair_partitions};

    #[test]
    fn wick_single_pair_and_fourth_moment() {
        let mut m = ComplexMatrix::zeros(2);
        m.set(0, 1, C64::new(0.7, 0.1));
        m.set(1, 0, C64::new(0.7, 0.1));
        m.set(0, 0, C64::new(1.3, 0.0));
        let pair = wick_scalar_moment(&m, &[0, 1]).unwrap();
        assert!((pair - C64::new(0.7, 0.1)).norm() < 1e-15);

        // E X⁴ = 3σ⁴ for a centered Gaussian with variance σ²
        let fourth = wick_scalar_moment(&m, &[0, 0, 0, 0]).unwrap();
        assert!((fourth - C64::new(3.0 * 1.3 * 1.3, 0.0)).norm() < 1e-12);

        // odd words vanish
        assert_eq!(
            wick_scalar_moment(&m, &[0, 1, 0]).unwrap(),
            C64::new(0.0, 0.0)
        );
    }

    #[test]
    fn wick_length_six_matches_monte_carlo() {
        // real Gaussian vector with a random PSD covariance
        use rand::Rng;
        let mut rng = split_rng(160, 0);
        let dim = 3;
        let a = ComplexMatrix::from_fn(dim, |_, _| C64::new(rng.gen::<f64>() - 0.5, 0.0));
        let cov = a.matmul(&a.transpose());
        let word = [0usize, 1, 2, 0, 1, 2];
        let exact = wick_scalar_moment(&cov, &word).unwrap().re;

        // sample X = A·ξ with ξ standard real Gaussian
        use rand_distr::StandardNormal;
        let samples = 1_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..samples {
            let xi: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let x: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|j| a.get(i, j).re * xi[j]).sum())
                .collect();
            let v: f64 = word.iter().map(|&w| x[w]).product();
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / samples as f64;
        let stderr = ((sum_sq / samples as f64 - mean * mean) / samples as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * stderr,
            "MC {mean} ± {stderr} vs exact {exact}"
        );
    }

    #[test]
    fn weights_vanish_on_equal_parity_blocks() {
        let same_parity = PairPartition::new(4, vec![(0, 2), (1, 3)]).unwrap();
        assert_eq!(ginibre_pairing_weight(&same_parity, 3, 4), 0.0);
    }

    #[test]
    fn p4_pairings_have_unit_weight() {
        let a = PairPartition::new(4, vec![(0, 1), (2, 3)]).unwrap();
        let b = PairPartition::new(4, vec![(0, 3), (1, 2)]).unwrap();
        for n in 1..=5 {
            assert_eq!(ginibre_pairing_weight(&a, n, 4), 1.0);
            assert_eq!(ginibre_pairing_weight(&b, n, 4), 1.0);
        }
    }

    #[test]
    fn weights_are_nonnegative() {
        for p in [2usize, 4, 6, 8] {
            for nu in enumerate_pair_partitions(p).unwrap() {
                for n in 1..=4 {
                    assert!(ginibre_pairing_weight(&nu, n, p) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn exact_moments_small_p() {
        for n in 1..=6 {
            assert_eq!(moment_exact(n, 2).unwrap(), 1.0, "p=2, N={n}");
            assert_eq!(moment_exact(n, 4).unwrap(), 2.0, "p=4, N={n}");
        }
        assert_eq!(moment_exact(1, 6).unwrap(), 6.0);
        for n in 1..=5usize {
            let expected = 5.0 + 1.0 / (n * n) as f64;
            assert!((moment_exact(n, 6).unwrap() - expected).abs() < 1e-12, "N={n}");
        }
    }

    #[test]
    fn moments_match_entrywise_wick_expansion() {
        // brute force over all index tuples with entry variables g, ḡ
        for n in 1..=3usize {
            for p in [2usize, 4, 6] {
                let vars = 2 * n * n;
                let mut m = ComplexMatrix::zeros(vars);
                for a in 0..n {
                    for b in 0..n {
                        let g = a * n + b;
                        let gbar = n * n + a * n + b;
                        m.set(g, gbar, C64::new(1.0, 0.0));
                        m.set(gbar, g, C64::new(1.0, 0.0));
                    }
                }
                let mut total = C64::new(0.0, 0.0);
                let tuples = (n as u32).pow(p as u32);
                for code in 0..tuples {
                    let mut idx = Vec::with_capacity(p);
                    let mut rest = code as usize;
                    for _ in 0..p {
                        idx.push(rest % n);
                        rest /= n;
                    }
                    let word: Vec<usize> = (0..p)
                        .map(|s| {
                            let (row, col) = (idx[s], idx[(s + 1) % p]);
                            if s % 2 == 0 {
                                row * n + col
                            } else {
                                n * n + col * n + row
                            }
                        })
                        .collect();
                    total += wick_scalar_moment(&m, &word).unwrap();
                }
                let scale = (n as f64).powi(-(p as i32) / 2 - 1);
                let brute = total.re * scale;
                let exact = moment_exact(n, p).unwrap();
                assert!(
                    (brute - exact).abs() < 1e-10,
                    "N={n}, p={p}: {brute} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn monte_carlo_agrees_with_exact_values() {
        let spec = GinibreSpec::new(8, 42).unwrap();
        for p in [2usize, 4, 6] {
            let report = moment_mc(spec, p, 20_000).unwrap();
            let exact = moment_exact(8, p).unwrap();
            assert!(
                report.consistent_with(exact, 4.0),
                "p={p}: {} ± {} vs {exact}",
                report.estimate,
                report.stderr
            );
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_under_a_fixed_seed() {
        let spec = GinibreSpec::new(4, 7).unwrap();
        let a = moment_mc(spec, 4, 2_000).unwrap();
        let b = moment_mc(spec, 4, 2_000).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn large_n_moments_approach_catalan_numbers() {
        for k in 1..=4usize {
            let p = 2 * k;
            let cat = catalan(k) as f64;
            for n in [10usize, 20, 40] {
                let gap = moment_exact(n, p).unwrap() - cat;
                let pairings = enumerate_pair_partitions(p).unwrap().len() as f64;
                assert!(gap >= 0.0, "noncrossing terms undercounted");
                assert!(
                    gap <= pairings / (n * n) as f64,
                    "k={k}, N={n}: gap {gap} too large"
                );
            }
        }
    }

    #[test]
    fn khintchine_constants_from_moments() {
        // N = 1: complex Gaussian p-norms, e.g. (E|g|⁴)^{1/4} = 2^{1/4}
        assert!((rm_khintchine_constant(1, 4).unwrap() - 2f64.powf(0.25)).abs() < 1e-12);
        // large N at p = 4: Catalan(2)^{1/4} = 2^{1/4}
        let limit = (catalan(2) as f64).powf(0.25);
        let at_40 = rm_khintchine_constant(40, 4).unwrap();
        assert!((at_40 - limit).abs() < 1e-3);
        // the constant decreases toward the Catalan limit as N grows
        let mut prev = f64::INFINITY;
        for n in [1usize, 2, 4, 8, 16] {
            let v = rm_khintchine_constant(n, 4).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn mixed_words_without_pairings_vanish_in_monte_carlo() {
        // τ(Y₁ Y₂* Y₁ Y₂*) pairs equal indices at equal parity only
        let n = 4usize;
        let mut rng = split_rng(161, 0);
        let samples = 20_000;
        let mut sum = C64::new(0.0, 0.0);
        let mut sum_sq = 0.0;
        for _ in 0..samples {
            let y1 = ComplexMatrix::gaussian(n, &mut rng)
                .scale(C64::new(1.0 / (n as f64).sqrt(), 0.0));
            let y2 = ComplexMatrix::gaussian(n, &mut rng)
                .scale(C64::new(1.0 / (n as f64).sqrt(), 0.0));
            let word = y1
                .matmul(&y2.adjoint())
                .matmul(&y1)
                .matmul(&y2.adjoint());
            let v = word.trace() / C64::new(n as f64, 0.0);
            sum += v;
            sum_sq += v.norm_sqr();
        }
        let mean = sum / C64::new(samples as f64, 0.0);
        let stderr = ((sum_sq / samples as f64 - mean.norm_sqr()).max(0.0)
            / samples as f64)
            .sqrt();
        assert!(
            mean.norm() <= 4.0 * stderr + 1e-12,
            "cross moment {mean} ± {stderr} does not vanish"
        );
    }
}
