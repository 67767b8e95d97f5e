//! Simple accelerated random pursuit.
//!
//! Keeps three sequences: the line-search outputs `x`, the query points `y`
//! and the estimate sequence `v`. With `θ = √(μ/(2n²L))`:
//!
//! ```text
//! (x_k, σ_k) = lineSearch(y_{k-1}, u_k, σ_{k-1})
//! y_k = (θ v_{k-1} + x_k) / (1 + θ)
//! v_k = (1 - θ) v_{k-1} + θ y_k + θ n (L/μ) σ_k u_k
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linesearch::{line_search_into, LineSearchMode};
use crate::objectives::Objective;
use crate::sampling::RngStream;

use super::{run_solver, CommonConfig, RunRecord, Solver};

/// Which step length multiplies `u_k` in the estimate-sequence update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DriftMode {
    /// The step size returned by the line search, also on rejected steps.
    /// With the adaptive line search this keeps kicking `v` along directions
    /// that were never taken and diverges on ill-conditioned problems.
    Verbatim,
    /// The step actually taken: zero when the line search rejected `u_k`.
    #[default]
    TakenStep,
}

impl fmt::Display for DriftMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DriftMode::Verbatim => "verbatim",
            DriftMode::TakenStep => "taken-step",
        })
    }
}

impl FromStr for DriftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "verbatim" => Ok(DriftMode::Verbatim),
            "taken-step" | "taken_step" => Ok(DriftMode::TakenStep),
            other => Err(Error::Config(format!(
                "unknown drift mode `{other}` (expected verbatim or taken-step)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarpConfig {
    /// Strong convexity parameter, a lower bound on the Hessian spectrum.
    pub mu: f64,
    /// Smoothness parameter, an upper bound on the Hessian spectrum.
    pub lmax: f64,
    pub drift_mode: DriftMode,
}

impl SarpConfig {
    pub fn new(mu: f64, lmax: f64) -> Self {
        Self {
            mu,
            lmax,
            drift_mode: DriftMode::default(),
        }
    }

    pub fn with_drift_mode(mut self, mode: DriftMode) -> Self {
        self.drift_mode = mode;
        self
    }

    pub fn theta(&self, n: usize) -> f64 {
        (self.mu / (2.0 * (n * n) as f64 * self.lmax)).sqrt()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= self.lmax && self.lmax.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < mu <= L, got mu={} L={}",
                self.mu, self.lmax
            )));
        }
        let theta = self.theta(n);
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1), got {theta}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Sarp {
    x: Vec<f64>,
    fx: f64,
    y: Vec<f64>,
    v: Vec<f64>,
    sigma: f64,
    theta: f64,
    /// `θ n L/μ`.
    drift_gain: f64,
    drift_mode: DriftMode,
    mode: LineSearchMode,
    n: usize,
    kappa: f64,
    evals: u64,
    u: Vec<f64>,
}

impl Sarp {
    pub fn new<O: Objective + ?Sized>(f: &O, cfg: &CommonConfig, scfg: &SarpConfig) -> Result<Self> {
        cfg.validate(f)?;
        let n = cfg.x0.len();
        scfg.validate(n)?;
        let theta = scfg.theta(n);
        let kappa = scfg.lmax / scfg.mu;
        Ok(Self {
            fx: f.value(&cfg.x0),
            x: cfg.x0.clone(),
            y: cfg.x0.clone(),
            v: cfg.x0.clone(),
            sigma: cfg.sigma0,
            theta,
            drift_gain: theta * n as f64 * kappa,
            drift_mode: scfg.drift_mode,
            mode: cfg.mode(),
            n,
            kappa,
            evals: 1,
            u: vec![0.0; n],
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// The query point of the next line search.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }
}

impl Solver for Sarp {
    fn x(&self) -> &[f64] {
        &self.x
    }

    fn fval(&self) -> f64 {
        self.fx
    }

    fn sigma(&self) -> f64 {
        self.sigma
    }

    fn evals(&self) -> u64 {
        self.evals
    }

    fn step<O: Objective + ?Sized>(&mut self, f: &O, rng: &mut RngStream) -> Result<()> {
        rng.fill_standard_normal(&mut self.u);
        let info = line_search_into(self.mode, f, &self.y, &self.u, self.sigma, None, &mut self.x)?;
        self.fx = info.f_next;
        self.sigma = info.sigma_next;
        self.evals += info.evals;

        let step = match self.drift_mode {
            DriftMode::Verbatim => info.sigma_next,
            DriftMode::TakenStep => info.sigma_taken,
        };
        let theta = self.theta;
        let kick = self.drift_gain * step;
        let inv = 1.0 / (1.0 + theta);
        for i in 0..self.n {
            let yi = (theta * self.v[i] + self.x[i]) * inv;
            self.y[i] = yi;
            self.v[i] = (1.0 - theta) * self.v[i] + theta * yi + kick * self.u[i];
        }
        if self.v.iter().any(|c| !c.is_finite()) {
            return Err(Error::numeric("estimate sequence overflowed", &self.x));
        }
        Ok(())
    }

    fn drift(&self) -> Option<f64> {
        Some(
            self.y
                .iter()
                .zip(&self.x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        )
    }

    fn drift_constants(&self) -> Option<(f64, f64)> {
        let theta_prime = (1.0 / ((self.n * self.n) as f64 * self.kappa)).sqrt();
        Some((theta_prime, (1.0 - theta_prime) / (1.0 + theta_prime)))
    }
}

/// Run accelerated random pursuit. FVAL is `f(x_k)`, which is not monotone.
pub fn sarp_run<O: Objective + ?Sized>(
    f: &O,
    cfg: &CommonConfig,
    scfg: &SarpConfig,
    rng: &mut RngStream,
) -> Result<RunRecord> {
    let mut solver = Sarp::new(f, cfg, scfg)?;
    let name = match cfg.mode() {
        LineSearchMode::Exact { .. } => "sarp-exact",
        LineSearchMode::Adaptive { .. } => "sarp",
    };
    Ok(run_solver(&mut solver, f, cfg.budget, cfg.target, rng, name))
}
