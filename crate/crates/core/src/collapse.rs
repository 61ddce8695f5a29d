//! Projective measurement on Alice's side.
//!
//! [`DiscreteBipartite`] is the finite-dimensional pair `Σ a_ij α_i ⊗ β_j`
//! with its Born-rule collapse; [`project_aperture`] is the same rule for a
//! position projector on the particle-1 axis of a lattice state.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::entangle::{BipartiteWave, NORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::lattice::GridSpec;

/// Outcomes with probability at or below this are treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-15;

/// Coefficients `a_ij` over Alice's basis (rows) and Bob's basis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBipartite {
    coefficients: Array2<Complex64>,
}

impl DiscreteBipartite {
    pub fn new(coefficients: Array2<Complex64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidParameter { name: "coefficients", reason: "empty state".into() });
        }
        let norm_sqr: f64 = coefficients.iter().map(|v| v.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { coefficients })
    }

    /// Normalize `coefficients` and wrap them.
    pub fn normalized(mut coefficients: Array2<Complex64>) -> Result<Self> {
        let norm_sqr: f64 = coefficients.iter().map(|v| v.norm_sqr()).sum();
        if !(norm_sqr > 0.0 && norm_sqr.is_finite()) {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let s = norm_sqr.sqrt().recip();
        coefficients.mapv_inplace(|v| v * s);
        Self::new(coefficients)
    }

    /// Product state `b ⊗ c`.
    pub fn product(alice: &[Complex64], bob: &[Complex64]) -> Result<Self> {
        let a = Array2::from_shape_fn((alice.len(), bob.len()), |(i, j)| alice[i] * bob[j]);
        Self::new(a)
    }

    /// Seeded random state with i.i.d. complex Gaussian coefficients.
    pub fn random(alice_dim: usize, bob_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Array2::from_shape_simple_fn((alice_dim, bob_dim), || {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        });
        Self::normalized(a)
    }

    pub fn coefficients(&self) -> &Array2<Complex64> {
        &self.coefficients
    }

    pub fn alice_dim(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn bob_dim(&self) -> usize {
        self.coefficients.ncols()
    }

    /// `ρ₁ᵢ = Σ_j |a_ij|²`.
    pub fn alice_marginal(&self) -> Vec<f64> {
        self.coefficients.map(|v| v.norm_sqr()).sum_axis(Axis(1)).to_vec()
    }

    /// `ρ₂ⱼ = Σ_i |a_ij|²`.
    pub fn bob_marginal(&self) -> Vec<f64> {
        self.coefficients.map(|v| v.norm_sqr()).sum_axis(Axis(0)).to_vec()
    }

    /// Collapse after Alice finds outcome `i`.
    pub fn collapse_on_alice(&self, outcome: usize) -> Result<CollapseOutcome> {
        if outcome >= self.alice_dim() {
            return Err(Error::InvalidParameter {
                name: "outcome",
                reason: format!("index {outcome} out of range for dimension {}", self.alice_dim()),
            });
        }
        let row = self.coefficients.row(outcome);
        let probability: f64 = row.iter().map(|v| v.norm_sqr()).sum();
        if probability <= ZERO_PROBABILITY {
            return Err(Error::ZeroProbabilityOutcome { probability });
        }
        let scale = probability.sqrt().recip();
        let mut post = Array2::zeros(self.coefficients.raw_dim());
        post.row_mut(outcome).assign(&row.mapv(|v| v * scale));
        Ok(CollapseOutcome { outcome, probability, post_state: DiscreteBipartite { coefficients: post } })
    }

    /// Draw `n_pairs` i.i.d. joint outcomes from `|a_ij|²` and count them.
    pub fn sample_joint(&self, seed: u64, n_pairs: u64) -> Result<Array2<u64>> {
        if n_pairs == 0 {
            return Err(Error::InvalidParameter { name: "n_pairs", reason: "must be at least 1".into() });
        }
        let cols = self.bob_dim();
        let mut cumulative = Vec::with_capacity(self.coefficients.len());
        let mut acc = 0.0;
        for v in self.coefficients.iter() {
            acc += v.norm_sqr();
            cumulative.push(acc);
        }
        let mut counts = Array2::zeros(self.coefficients.raw_dim());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_pairs {
            let u: f64 = rng.random::<f64>() * acc;
            // First cell whose cumulative weight exceeds u; zero-weight cells
            // share their predecessor's cumulative value and are never hit.
            let cell = cumulative.partition_point(|c| *c <= u).min(cumulative.len() - 1);
            counts[[cell / cols, cell % cols]] += 1;
        }
        Ok(counts)
    }
}

/// Result of Alice observing outcome `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOutcome {
    pub outcome: usize,
    /// `ρ₁ᵢ`.
    pub probability: f64,
    pub post_state: DiscreteBipartite,
}

impl CollapseOutcome {
    /// Bob's distribution given Alice's outcome, `ρ₂ⱼ/ᵢ`.
    pub fn conditional_bob(&self) -> Vec<f64> {
        self.post_state.bob_marginal()
    }
}

/// Subset of `y₁` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    mask: Vec<bool>,
}

impl Region {
    pub fn from_mask(grid: &GridSpec, mask: Vec<bool>) -> Result<Self> {
        grid.check_len(mask.len())?;
        Ok(Self { mask })
    }

    pub fn all(grid: &GridSpec) -> Self {
        Self { mask: vec![true; grid.len()] }
    }

    /// Nodes with periodic distance to `center` at most `half_width`.
    pub fn interval(grid: &GridSpec, center: f64, half_width: f64) -> Self {
        let mask = grid.positions().into_iter().map(|y| grid.periodic_distance(y, center) <= half_width).collect();
        Self { mask }
    }

    /// Nodes with `y ≥ 0`.
    pub fn upper_half(grid: &GridSpec) -> Self {
        Self { mask: grid.positions().into_iter().map(|y| y >= 0.0).collect() }
    }

    pub fn complement(&self) -> Self {
        Self { mask: self.mask.iter().map(|b| !b).collect() }
    }

    pub fn contains(&self, node: usize) -> bool {
        self.mask.get(node).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Project particle 1 onto `region`.
///
/// Returns the outcome probability `p = Σ_{y₁∈R} Σ_{y₂} |ψ|² dy²` and the
/// renormalized post-measurement state.
pub fn project_aperture(state: &BipartiteWave, region: &Region) -> Result<(f64, BipartiteWave)> {
    state.grid.check_len(region.mask.len())?;
    if region.count() == 0 {
        return Err(Error::InvalidParameter { name: "region", reason: "empty region".into() });
    }
    let mut psi = state.psi.clone();
    for (mut row, keep) in psi.axis_iter_mut(Axis(0)).zip(&region.mask) {
        if !keep {
            row.fill(Complex64::new(0.0, 0.0));
        }
    }
    let dy = state.grid.dy();
    let p: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dy * dy;
    if p <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbabilityOutcome { probability: p });
    }
    let s = p.sqrt().recip();
    psi.mapv_inplace(|v| v * s);
    Ok((p, state.with_psi(psi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> DiscreteBipartite {
        DiscreteBipartite::new(ndarray::array![[c(FRAC_1_SQRT_2), c(0.0)], [c(0.0), c(FRAC_1_SQRT_2)]]).unwrap()
    }

    #[test]
    fn bell_marginals_and_collapse() {
        let s = bell();
        let rho2 = s.bob_marginal();
        assert_abs_diff_eq!(rho2[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho2[1], 0.5, epsilon = 1e-15);
        let out = s.collapse_on_alice(0).unwrap();
        assert_abs_diff_eq!(out.probability, 0.5, epsilon = 1e-15);
        let cond = out.conditional_bob();
        assert_abs_diff_eq!(cond[0], 1.0, epsilon = 1e-15);
        assert_eq!(cond[1], 0.0);
    }

    #[test]
    fn product_state_has_no_back_action() {
        let b = [c(0.6), Complex64::new(0.0, 0.8)];
        let bob = [c(0.5), Complex64::new(0.5, 0.5), c(-0.5)];
        let s = DiscreteBipartite::product(&b, &bob).unwrap();
        let expect: Vec<f64> = bob.iter().map(|v| v.norm_sqr()).collect();
        for (x, y) in s.bob_marginal().iter().zip(&expect) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
        for i in 0..2 {
            for (x, y) in s.collapse_on_alice(i).unwrap().conditional_bob().iter().zip(&expect) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn marginal_matches_double_loop() {
        let s = DiscreteBipartite::random(3, 4, 17).unwrap();
        let a = s.coefficients();
        let mut oracle = [0.0f64; 4];
        for j in 0..4 {
            for i in 0..3 {
                oracle[j] += a[[i, j]].re * a[[i, j]].re + a[[i, j]].im * a[[i, j]].im;
            }
        }
        for (x, y) in s.bob_marginal().iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn outcome_average_reproduces_bob_marginal() {
        let s = DiscreteBipartite::random(3, 3, 4).unwrap();
        let rho2 = s.bob_marginal();
        let mut avg = [0.0; 3];
        for i in 0..3 {
            let out = s.collapse_on_alice(i).unwrap();
            for (acc, v) in avg.iter_mut().zip(out.conditional_bob()) {
                *acc += out.probability * v;
            }
        }
        for (x, y) in avg.iter().zip(&rho2) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn collapse_is_idempotent_and_normalized() {
        let s = DiscreteBipartite::random(4, 2, 8).unwrap();
        let once = s.collapse_on_alice(2).unwrap();
        let norm: f64 = once.post_state.coefficients().iter().map(|v| v.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        let twice = once.post_state.collapse_on_alice(2).unwrap();
        assert_abs_diff_eq!(twice.probability, 1.0, epsilon = 1e-12);
        for (a, b) in twice.post_state.coefficients().iter().zip(once.post_state.coefficients().iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn collapse_errors() {
        let s = bell();
        let post = s.collapse_on_alice(1).unwrap().post_state;
        assert!(matches!(post.collapse_on_alice(0), Err(Error::ZeroProbabilityOutcome { .. })));
        assert!(s.collapse_on_alice(2).is_err());
        assert!(DiscreteBipartite::new(ndarray::array![[c(1.0), c(1.0)]]).is_err());
    }

    #[test]
    fn sampling() {
        let s = bell();
        let a = s.sample_joint(3, 100_000).unwrap();
        assert_eq!(a[[0, 1]], 0);
        assert_eq!(a[[1, 0]], 0);
        assert_eq!(a.sum(), 100_000);
        assert_eq!(a, s.sample_joint(3, 100_000).unwrap());
        assert!(s.sample_joint(3, 0).is_err());
    }
}
