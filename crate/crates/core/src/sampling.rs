//! Seeded Gaussian sampling.
//!
//! * [`RngStream`]: a per-run random stream derived from `(base_seed, run)`.
//! * [`LowRankCovariance`]: `αI + Σ wᵢ qᵢqᵢᵀ` kept in factored form and
//!   sampled in O(mn) without ever forming the n×n matrix.
//! * [`CholeskyState`]: a dense covariance maintained through its Cholesky
//!   factor with O(n²) rank-one updates.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_pcg::Pcg64Mcg;

use crate::error::{Error, Result};

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream used by replicate `run_index` of an experiment.
pub fn derive_seed(base_seed: u64, run_index: u64) -> u64 {
    mix64(mix64(base_seed) ^ run_index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// A single-owner stream of random numbers.
///
/// Backed by a 128-bit MCG (period 2¹²⁶); normal variates use the ziggurat
/// method from `rand_distr`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: Pcg64Mcg,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: Pcg64Mcg::seed_from_u64(seed),
        }
    }

    pub fn for_run(base_seed: u64, run_index: u64) -> Self {
        Self::new(derive_seed(base_seed, run_index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }

    /// `n` independent standard normal variates.
    pub fn standard_normal(&mut self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Input("cannot sample a vector of dimension 0".into()));
        }
        let mut out = vec![0.0; n];
        self.fill_standard_normal(&mut out);
        Ok(out)
    }
}

/// Covariance `alpha·I + Σ weights[i]·dirs[i]·dirs[i]ᵀ` in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankCovariance {
    n: usize,
    alpha: f64,
    weights: Vec<f64>,
    dirs: Vec<Vec<f64>>,
}

impl LowRankCovariance {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            alpha: 1.0,
            weights: Vec::new(),
            dirs: Vec::new(),
        }
    }

    pub fn new(n: usize, alpha: f64, terms: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::Input(format!(
                "identity scale must be non-negative, got {alpha}"
            )));
        }
        let mut weights = Vec::with_capacity(terms.len());
        let mut dirs = Vec::with_capacity(terms.len());
        for (w, q) in terms {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Input(format!("term weights must be non-negative, got {w}")));
            }
            if q.len() != n {
                return Err(Error::Input(format!(
                    "term direction has length {}, expected {n}",
                    q.len()
                )));
            }
            weights.push(w);
            dirs.push(q);
        }
        Ok(Self {
            n,
            alpha,
            weights,
            dirs,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.dirs
    }

    /// Directions can be rewritten in place; weights stay attached to
    /// positions.
    pub fn directions_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.dirs
    }

    pub fn rank(&self) -> usize {
        self.dirs.len()
    }

    /// Materialize the n×n matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut c = DMatrix::identity(self.n, self.n) * self.alpha;
        for (w, q) in self.weights.iter().zip(&self.dirs) {
            for j in 0..self.n {
                let wq = w * q[j];
                for i in 0..self.n {
                    c[(i, j)] += wq * q[i];
                }
            }
        }
        c
    }

    /// Draw `u ~ N(0, C)` into `out`: `√α·z + Σ √wᵢ·ζᵢ·qᵢ`, drawing `z`
    /// first and then the `ζᵢ` in term order.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n);
        rng.fill_standard_normal(out);
        let sa = self.alpha.sqrt();
        if sa != 1.0 {
            for v in out.iter_mut() {
                *v *= sa;
            }
        }
        for (w, q) in self.weights.iter().zip(&self.dirs) {
            let c = w.sqrt() * rng.normal();
            for (o, qi) in out.iter_mut().zip(q) {
                *o += c * qi;
            }
        }
    }
}

/// Identity scale and per-term weights after applying
/// `C ← (1-c)C + c·qqᵀ` `count` times, starting from `I`.
pub fn epcma_weights(count: usize, c_cov: f64) -> (f64, Vec<f64>) {
    let keep = 1.0 - c_cov;
    let alpha = keep.powi(count as i32);
    let weights = (1..=count).map(|i| c_cov * keep.powi((count - i) as i32)).collect();
    (alpha, weights)
}

/// Factored form of applying `C ← (1-c_cov)C + c_cov·qqᵀ` for each path in
/// order, starting from the n×n identity. An empty list gives the identity.
pub fn build_epcma_covariance(n: usize, paths: &[Vec<f64>], c_cov: f64) -> Result<LowRankCovariance> {
    if !(c_cov > 0.0 && c_cov < 1.0) {
        return Err(Error::Config(format!("c_cov must lie in (0, 1), got {c_cov}")));
    }
    if let Some(q) = paths.iter().find(|q| q.len() != n) {
        return Err(Error::Input(format!("path has length {}, expected {n}", q.len())));
    }
    let (alpha, weights) = epcma_weights(paths.len(), c_cov);
    LowRankCovariance::new(n, alpha, weights.into_iter().zip(paths.iter().cloned()).collect())
}

/// Draw one sample from a low-rank covariance.
pub fn sample_lowrank(rng: &mut RngStream, cov: &LowRankCovariance) -> Vec<f64> {
    let mut out = vec![0.0; cov.n()];
    cov.sample_into(rng, &mut out);
    out
}

/// Dense covariance `C = ΛΛᵀ` tracked through its lower-triangular Cholesky
/// factor `Λ`.
///
/// The dense matrix is accumulated alongside the factor so a numerically
/// broken update can be repaired by refactorizing.
#[derive(Debug, Clone)]
pub struct CholeskyState {
    n: usize,
    /// Row-major, only the lower triangle is meaningful.
    factor: Vec<f64>,
    /// Row-major lower triangle of `C`.
    dense: Vec<f64>,
    work: Vec<f64>,
    rebuilds: u64,
}

impl CholeskyState {
    pub fn identity(n: usize) -> Self {
        let mut factor = vec![0.0; n * n];
        for i in 0..n {
            factor[i * n + i] = 1.0;
        }
        Self {
            n,
            dense: factor.clone(),
            factor,
            work: vec![0.0; n],
            rebuilds: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// How many times the factor had to be recomputed from scratch.
    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    pub fn factor(&self) -> DMatrix<f64> {
        DMatrix::from_fn(
            self.n,
            self.n,
            |i, j| if j <= i { self.factor[i * self.n + j] } else { 0.0 },
        )
    }

    /// The tracked covariance (not reconstructed from the factor).
    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            let (r, c) = if j <= i { (i, j) } else { (j, i) };
            self.dense[r * self.n + c]
        })
    }

    /// `ΛΛᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let l = self.factor();
        &l * l.transpose()
    }

    /// `ΛΛᵀ ← scale_old·ΛΛᵀ + weight·vvᵀ` in O(n²).
    pub fn rank_one_update(&mut self, scale_old: f64, weight: f64, v: &[f64]) -> Result<()> {
        let n = self.n;
        if v.len() != n {
            return Err(Error::Input(format!(
                "update vector has length {}, expected {n}",
                v.len()
            )));
        }
        if !(scale_old > 0.0) || !scale_old.is_finite() {
            return Err(Error::Input(format!("scale must be positive, got {scale_old}")));
        }
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::Input(format!("weight must be non-negative, got {weight}")));
        }

        for i in 0..n {
            for j in 0..=i {
                self.dense[i * n + j] = scale_old * self.dense[i * n + j] + weight * v[i] * v[j];
            }
        }

        let s = scale_old.sqrt();
        for i in 0..n {
            for j in 0..=i {
                self.factor[i * n + j] *= s;
            }
        }
        if weight == 0.0 {
            return Ok(());
        }

        let w = weight.sqrt();
        for (dst, src) in self.work.iter_mut().zip(v) {
            *dst = w * src;
        }
        if !self.update_factor() {
            self.rebuild(v)?;
        }
        Ok(())
    }

    /// Classic rank-one update of the factor with `work` as the update vector.
    /// Returns false if the result is not a valid factor.
    fn update_factor(&mut self) -> bool {
        let n = self.n;
        for k in 0..n {
            let lkk = self.factor[k * n + k];
            let xk = self.work[k];
            let r = (lkk * lkk + xk * xk).sqrt();
            if !(r > 0.0) || !r.is_finite() {
                return false;
            }
            let c = r / lkk;
            let s = xk / lkk;
            self.factor[k * n + k] = r;
            for i in k + 1..n {
                let lik = (self.factor[i * n + k] + s * self.work[i]) / c;
                self.factor[i * n + k] = lik;
                self.work[i] = c * self.work[i] - s * lik;
            }
        }
        true
    }

    fn rebuild(&mut self, v: &[f64]) -> Result<()> {
        let chol = nalgebra::Cholesky::new(self.covariance())
            .ok_or_else(|| Error::numeric("covariance lost positive definiteness", v))?;
        let l = chol.l();
        for i in 0..self.n {
            for j in 0..=i {
                self.factor[i * self.n + j] = l[(i, j)];
            }
        }
        self.rebuilds += 1;
        Ok(())
    }

    /// `out = Λz` for a fresh standard normal `z`.
    pub fn sample_into(&mut self, rng: &mut RngStream, out: &mut [f64]) {
        let n = self.n;
        rng.fill_standard_normal(&mut self.work);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.factor[i * n..i * n + i + 1];
            *o = row.iter().zip(&self.work).map(|(a, b)| a * b).sum();
        }
    }
}
