//! Benchmark objectives: three diagonal quadratics with prescribed spectra and
//! the Rosenbrock function.
//!
//! Quadratics are stored as their diagonal Hessian, `f(x) = ½ Σ dᵢ xᵢ²`, so
//! evaluation is O(n) and the spectrum is known exactly.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Anything the solvers can minimize.
///
/// `value` is the hot-path evaluation and performs no validation; callers are
/// responsible for passing vectors of length [`Objective::dim`].
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Whether `value` is exactly quadratic, which lets the exact line search
    /// use closed-form interpolation instead of bracketing.
    fn is_quadratic(&self) -> bool {
        false
    }
}

/// Wraps a closure as an [`Objective`]. Mostly useful in tests.
pub struct FnObjective<F> {
    dim: usize,
    quadratic: bool,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            quadratic: false,
            f,
        }
    }

    /// Declares that `f` is an exact quadratic.
    pub fn quadratic(dim: usize, f: F) -> Self {
        Self {
            dim,
            quadratic: true,
            f,
        }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn is_quadratic(&self) -> bool {
        self.quadratic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectiveKind {
    /// Exponentially spread spectrum `L^((i-1)/(n-1))`.
    FExp,
    /// Linearly spread spectrum `1 + (i-1)(L-1)/(n-1)`, from 1 to L.
    FLin,
    /// Two eigenvalues: 1 on the first half of the coordinates, L on the rest.
    FTwo,
    FRosen,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] = [
        ObjectiveKind::FExp,
        ObjectiveKind::FLin,
        ObjectiveKind::FTwo,
        ObjectiveKind::FRosen,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ObjectiveKind::FExp => "fexp",
            ObjectiveKind::FLin => "flin",
            ObjectiveKind::FTwo => "ftwo",
            ObjectiveKind::FRosen => "frosen",
        }
    }

    pub fn is_quadratic(self) -> bool {
        !matches!(self, ObjectiveKind::FRosen)
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fexp" => Ok(ObjectiveKind::FExp),
            "flin" => Ok(ObjectiveKind::FLin),
            "ftwo" => Ok(ObjectiveKind::FTwo),
            "frosen" => Ok(ObjectiveKind::FRosen),
            other => Err(Error::Config(format!(
                "unknown objective `{other}` (expected fexp, flin, ftwo or frosen)"
            ))),
        }
    }
}

/// Bounds on the Hessian spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    /// Lower bound on the smallest Hessian eigenvalue (strong convexity).
    pub mu: f64,
    /// Upper bound on the largest Hessian eigenvalue (smoothness).
    pub lmax: f64,
    /// Hessian trace, known for quadratics only.
    pub trace: Option<f64>,
}

impl SpectralBounds {
    pub fn condition_number(&self) -> f64 {
        self.lmax / self.mu
    }
}

/// A benchmark function instance: kind, dimension and conditioning parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    n: usize,
    l: f64,
    /// Diagonal Hessian for quadratic kinds, empty for Rosenbrock.
    diag: Vec<f64>,
    bounds: SpectralBounds,
}

impl ObjectiveSpec {
    /// `l` is ignored for Rosenbrock but must still be finite and positive.
    pub fn new(kind: ObjectiveKind, n: usize, l: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Input(format!("dimension must be at least 2, got {n}")));
        }
        if !l.is_finite() || l <= 0.0 {
            return Err(Error::Input(format!(
                "conditioning parameter must be positive, got {l}"
            )));
        }
        if kind.is_quadratic() && l < 1.0 {
            return Err(Error::Input(format!("conditioning parameter must be >= 1, got {l}")));
        }

        let denom = (n - 1) as f64;
        let diag: Vec<f64> = match kind {
            ObjectiveKind::FExp => (0..n).map(|i| l.powf(i as f64 / denom)).collect(),
            ObjectiveKind::FLin => (0..n).map(|i| 1.0 + i as f64 * (l - 1.0) / denom).collect(),
            ObjectiveKind::FTwo => (0..n).map(|i| if i < n / 2 { 1.0 } else { l }).collect(),
            ObjectiveKind::FRosen => Vec::new(),
        };

        let bounds = if kind.is_quadratic() {
            let mu = diag.iter().copied().fold(f64::INFINITY, f64::min);
            let lmax = diag.iter().copied().fold(0.0, f64::max);
            let trace = match kind {
                ObjectiveKind::FTwo => (n / 2) as f64 + n.div_ceil(2) as f64 * l,
                _ => diag.iter().sum(),
            };
            SpectralBounds {
                mu,
                lmax,
                trace: Some(trace),
            }
        } else {
            rosenbrock_bounds(n)
        };

        Ok(Self {
            kind,
            n,
            l,
            diag,
            bounds,
        })
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Diagonal Hessian coefficients; empty for Rosenbrock.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn spectral_bounds(&self) -> SpectralBounds {
        self.bounds
    }

    /// The global minimizer: the origin for quadratics, all ones for Rosenbrock.
    pub fn minimizer(&self) -> Vec<f64> {
        let v = if self.kind.is_quadratic() { 0.0 } else { 1.0 };
        vec![v; self.n]
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Input(format!(
                "expected a vector of length {}, got {}",
                self.n,
                x.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("component {i} is not finite ({})", x[i])));
        }
        Ok(())
    }

    /// Validated evaluation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.value(x))
    }

    /// Analytic gradient.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        if self.kind.is_quadratic() {
            return Ok(self.diag.iter().zip(x).map(|(d, xi)| d * xi).collect());
        }
        let mut g = vec![0.0; self.n];
        for i in 0..self.n - 1 {
            let r = x[i] * x[i] - x[i + 1];
            g[i] += 400.0 * r * x[i] + 2.0 * (x[i] - 1.0);
            g[i + 1] -= 200.0 * r;
        }
        Ok(g)
    }
}

impl Objective for ObjectiveSpec {
    fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn value(&self, x: &[f64]) -> f64 {
        if self.kind.is_quadratic() {
            0.5 * self.diag.iter().zip(x).map(|(d, xi)| d * xi * xi).sum::<f64>()
        } else {
            x.windows(2)
                .map(|w| {
                    let r = w[0] * w[0] - w[1];
                    let s = w[0] - 1.0;
                    100.0 * r * r + s * s
                })
                .sum()
        }
    }

    fn is_quadratic(&self) -> bool {
        self.kind.is_quadratic()
    }
}

/// Hessian of the Rosenbrock function at its minimizer `x* = 1`. Tridiagonal.
pub fn rosenbrock_hessian_at_optimum(n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        h[(i, i)] += 802.0;
        h[(i, i + 1)] -= 400.0;
        h[(i + 1, i)] -= 400.0;
        h[(i + 1, i + 1)] += 200.0;
    }
    h
}

fn rosenbrock_bounds(n: usize) -> SpectralBounds {
    let eig = SymmetricEigen::new(rosenbrock_hessian_at_optimum(n)).eigenvalues;
    SpectralBounds {
        mu: eig.min(),
        lmax: eig.max(),
        trace: None,
    }
}

/// Expected one-step contraction factor of random pursuit with exact line
/// search on a quadratic: `1 - λ_min / Tr`.
pub fn rp_exact_rate_bound(bounds: &SpectralBounds) -> Result<f64> {
    let trace = bounds
        .trace
        .ok_or_else(|| Error::UnsupportedObjective("rate bound needs the Hessian trace (quadratics only)".into()))?;
    if !(bounds.mu > 0.0) || !(trace > bounds.mu) {
        return Err(Error::Input(format!(
            "rate bound needs 0 < mu < trace, got mu={} trace={trace}",
            bounds.mu
        )));
    }
    Ok(1.0 - bounds.mu / trace)
}
