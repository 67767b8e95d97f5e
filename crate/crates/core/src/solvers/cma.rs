//! (1+1)-CMA with a dense covariance, and EP-CMA-m, which biases the search
//! only through the evolution path and up to `m-1` stored snapshots of it.

use crate::error::{Error, Result};
use crate::linesearch::{ass_step_into, check_probability};
use crate::objectives::Objective;
use crate::sampling::{build_epcma_covariance, CholeskyState, LowRankCovariance, RngStream};

use super::{run_solver, CommonConfig, RunRecord, Solver};

/// Learning rates of the evolution-path schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmaConfig {
    /// Path cumulation rate on success.
    pub c_c: f64,
    /// Path decay rate on failure.
    pub c_p: f64,
    pub c_cov: f64,
    /// Number of rank-one terms in EP-CMA (the live path plus `memory-1`
    /// snapshots). Unused by (1+1)-CMA.
    pub memory: usize,
    /// Iterations between path snapshots (EP-CMA only).
    pub shift_interval: u64,
}

impl CmaConfig {
    /// `c_c = 2/(n+2)`, `c_p = 1/12`, `c_cov = 2/(n²+6)`.
    pub fn cma11(n: usize) -> Self {
        let nf = n as f64;
        Self {
            c_c: 2.0 / (nf + 2.0),
            c_p: 1.0 / 12.0,
            c_cov: 2.0 / (nf * nf + 6.0),
            memory: 1,
            shift_interval: (n * n) as u64,
        }
    }

    /// `c_cov = 1/5` for `m = 1` and `2/(6+m)` otherwise; snapshots every
    /// `⌈n²/m⌉` iterations.
    pub fn epcma(n: usize, memory: usize) -> Self {
        let memory = memory.max(1);
        let c_cov = if memory == 1 { 0.2 } else { 2.0 / (6.0 + memory as f64) };
        Self {
            c_cov,
            memory,
            shift_interval: (n * n).div_ceil(memory) as u64,
            ..Self::cma11(n)
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c_c", self.c_c), ("c_p", self.c_p), ("c_cov", self.c_cov)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.memory == 0 {
            return Err(Error::Config("memory must be at least 1".into()));
        }
        Ok(())
    }

    fn path_gain(&self) -> f64 {
        (self.c_c * (2.0 - self.c_c)).sqrt()
    }
}

/// Shared part of both schemes: the adaptive step, the normalized
/// displacement `y_k = (x_k − x_{k−1})/σ_{k−1}` and the path update.
#[derive(Debug, Clone)]
struct PathState {
    x: Vec<f64>,
    fx: f64,
    sigma: f64,
    p: f64,
    evals: u64,
    u: Vec<f64>,
    next: Vec<f64>,
    y: Vec<f64>,
}

impl PathState {
    fn new<O: Objective + ?Sized>(f: &O, cfg: &CommonConfig) -> Result<Self> {
        cfg.validate(f)?;
        check_probability(cfg.p)?;
        let n = cfg.x0.len();
        Ok(Self {
            fx: f.value(&cfg.x0),
            x: cfg.x0.clone(),
            sigma: cfg.sigma0,
            p: cfg.p,
            evals: 1,
            u: vec![0.0; n],
            next: vec![0.0; n],
            y: vec![0.0; n],
        })
    }

    /// Adaptive step along `self.u`; returns whether the iterate moved.
    fn advance<O: Objective + ?Sized>(&mut self, f: &O) -> Result<bool> {
        let info = ass_step_into(f, &self.x, &self.u, self.sigma, self.p, Some(self.fx), &mut self.next)?;
        let mut moved = false;
        for ((yi, a), b) in self.y.iter_mut().zip(&self.next).zip(&self.x) {
            *yi = (a - b) / self.sigma;
            moved |= *yi != 0.0;
        }
        std::mem::swap(&mut self.x, &mut self.next);
        self.fx = info.f_next;
        self.sigma = info.sigma_next;
        self.evals += info.evals;
        Ok(moved)
    }

    fn update_path(path: &mut [f64], y: &[f64], moved: bool, cfg: &CmaConfig) {
        if moved {
            let keep = 1.0 - cfg.c_c;
            let gain = cfg.path_gain();
            for (pi, yi) in path.iter_mut().zip(y) {
                *pi = keep * *pi + gain * yi;
            }
        } else {
            let keep = 1.0 - cfg.c_p;
            for pi in path.iter_mut() {
                *pi *= keep;
            }
        }
    }
}

/// (1+1)-CMA: `u ~ N(0, C)`, rank-one covariance update from the evolution
/// path after every success.
#[derive(Debug, Clone)]
pub struct Cma11 {
    state: PathState,
    cfg: CmaConfig,
    path: Vec<f64>,
    chol: CholeskyState,
}

impl Cma11 {
    pub fn new<O: Objective + ?Sized>(f: &O, cfg: &CommonConfig, ccfg: &CmaConfig) -> Result<Self> {
        ccfg.validate()?;
        let state = PathState::new(f, cfg)?;
        let n = state.x.len();
        Ok(Self {
            state,
            cfg: *ccfg,
            path: vec![0.0; n],
            chol: CholeskyState::identity(n),
        })
    }

    pub fn path(&self) -> &[f64] {
        &self.path
    }

    pub fn cholesky(&self) -> &CholeskyState {
        &self.chol
    }

    /// One iteration with a caller-supplied direction instead of a sample.
    pub fn step_with_direction<O: Objective + ?Sized>(&mut self, f: &O, u: &[f64]) -> Result<bool> {
        self.state.u.copy_from_slice(u);
        self.finish_step(f)
    }

    fn finish_step<O: Objective + ?Sized>(&mut self, f: &O) -> Result<bool> {
        let moved = self.state.advance(f)?;
        PathState::update_path(&mut self.path, &self.state.y, moved, &self.cfg);
        if moved {
            self.chol
                .rank_one_update(1.0 - self.cfg.c_cov, self.cfg.c_cov, &self.path)?;
        }
        Ok(moved)
    }
}

impl Solver for Cma11 {
    fn x(&self) -> &[f64] {
        &self.state.x
    }

    fn fval(&self) -> f64 {
        self.state.fx
    }

    fn sigma(&self) -> f64 {
        self.state.sigma
    }

    fn evals(&self) -> u64 {
        self.state.evals
    }

    fn step<O: Objective + ?Sized>(&mut self, f: &O, rng: &mut RngStream) -> Result<()> {
        self.chol.sample_into(rng, &mut self.state.u);
        self.finish_step(f).map(|_| ())
    }
}

/// EP-CMA-m: samples from `C_k`, the result of applying the rank-one update
/// with the `m-1` stored path snapshots and then the live path to `I`.
#[derive(Debug, Clone)]
pub struct EpCma {
    state: PathState,
    cfg: CmaConfig,
    /// Snapshots in positions `0..m-1`, live path `p_{k-1}` last.
    cov: LowRankCovariance,
    iteration: u64,
    last_shift: u64,
}

impl EpCma {
    pub fn new<O: Objective + ?Sized>(f: &O, cfg: &CommonConfig, ccfg: &CmaConfig) -> Result<Self> {
        ccfg.validate()?;
        let state = PathState::new(f, cfg)?;
        let n = state.x.len();
        let cov = build_epcma_covariance(n, &vec![vec![0.0; n]; ccfg.memory], ccfg.c_cov)?;
        Ok(Self {
            state,
            cfg: *ccfg,
            cov,
            iteration: 0,
            last_shift: 0,
        })
    }

    /// The covariance the next direction is drawn from.
    pub fn covariance(&self) -> &LowRankCovariance {
        &self.cov
    }

    pub fn path(&self) -> &[f64] {
        self.cov.directions().last().expect("at least one term")
    }

    /// Stored snapshots, oldest first.
    pub fn snapshots(&self) -> &[Vec<f64>] {
        let dirs = self.cov.directions();
        &dirs[..dirs.len() - 1]
    }

    pub fn step_with_direction<O: Objective + ?Sized>(&mut self, f: &O, u: &[f64]) -> Result<bool> {
        self.state.u.copy_from_slice(u);
        self.finish_step(f)
    }

    fn finish_step<O: Objective + ?Sized>(&mut self, f: &O) -> Result<bool> {
        self.iteration += 1;
        let moved = self.state.advance(f)?;
        let m = self.cfg.memory;
        let dirs = self.cov.directions_mut();
        PathState::update_path(&mut dirs[m - 1], &self.state.y, moved, &self.cfg);
        if self.iteration > self.last_shift + self.cfg.shift_interval {
            if m >= 2 {
                dirs[..m - 1].rotate_left(1);
                let (ring, live) = dirs.split_at_mut(m - 1);
                ring[m - 2].copy_from_slice(&live[0]);
            }
            self.last_shift = self.iteration;
        }
        Ok(moved)
    }
}

impl Solver for EpCma {
    fn x(&self) -> &[f64] {
        &self.state.x
    }

    fn fval(&self) -> f64 {
        self.state.fx
    }

    fn sigma(&self) -> f64 {
        self.state.sigma
    }

    fn evals(&self) -> u64 {
        self.state.evals
    }

    fn step<O: Objective + ?Sized>(&mut self, f: &O, rng: &mut RngStream) -> Result<()> {
        self.cov.sample_into(rng, &mut self.state.u);
        self.finish_step(f).map(|_| ())
    }
}

pub fn cma11_run<O: Objective + ?Sized>(
    f: &O,
    cfg: &CommonConfig,
    ccfg: &CmaConfig,
    rng: &mut RngStream,
) -> Result<RunRecord> {
    let mut solver = Cma11::new(f, cfg, ccfg)?;
    Ok(run_solver(&mut solver, f, cfg.budget, cfg.target, rng, "cma11"))
}

pub fn epcma_run<O: Objective + ?Sized>(
    f: &O,
    cfg: &CommonConfig,
    ccfg: &CmaConfig,
    rng: &mut RngStream,
) -> Result<RunRecord> {
    let mut solver = EpCma::new(f, cfg, ccfg)?;
    let name = format!("epcma-{}", ccfg.memory);
    Ok(run_solver(&mut solver, f, cfg.budget, cfg.target, rng, name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{ObjectiveKind, ObjectiveSpec};
    use crate::solvers::dot;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn fexp(n: usize) -> ObjectiveSpec {
        ObjectiveSpec::new(ObjectiveKind::FExp, n, 100.0).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    #[test]
    fn coefficients() {
        let c = CmaConfig::cma11(20);
        assert_relative_eq!(c.c_c, 2.0 / 22.0);
        assert_relative_eq!(c.c_p, 1.0 / 12.0);
        assert_relative_eq!(c.c_cov, 2.0 / 406.0);
        assert_eq!(CmaConfig::epcma(20, 1).c_cov, 0.2);
        assert_eq!(CmaConfig::epcma(20, 4).c_cov, 0.2);
        assert_eq!(CmaConfig::epcma(20, 2).c_cov, 0.25);
        assert_eq!(CmaConfig::epcma(20, 3).shift_interval, 134);
        assert_eq!(CmaConfig::epcma(20, 4).shift_interval, 100);
    }

    #[test]
    fn first_success_sets_scaled_path() {
        let n = 4;
        let f = fexp(n);
        let ccfg = CmaConfig::cma11(n);
        let mut s = Cma11::new(&f, &CommonConfig::new(vec![1.0; n]), &ccfg).unwrap();
        let u = vec![-0.5, -0.1, -0.2, -0.3];
        assert!(s.step_with_direction(&f, &u).unwrap());
        for (p, ui) in s.path().iter().zip(&u) {
            assert_relative_eq!(*p, ccfg.path_gain() * ui, max_relative = 1e-14);
        }
    }

    #[test]
    fn failure_decays_path() {
        let n = 4;
        let f = fexp(n);
        let mut s = Cma11::new(&f, &CommonConfig::new(vec![1.0; n]), &CmaConfig::cma11(n)).unwrap();
        s.step_with_direction(&f, &[-0.5, -0.1, -0.2, -0.3]).unwrap();
        let before = dot(s.path(), s.path()).sqrt();
        let cov_before = s.cholesky().covariance();
        assert!(!s.step_with_direction(&f, &[3.0, 3.0, 3.0, 3.0]).unwrap());
        let after = dot(s.path(), s.path()).sqrt();
        assert_relative_eq!(after, (1.0 - 1.0 / 12.0) * before, max_relative = 1e-14);
        assert_eq!(s.cholesky().covariance(), cov_before);
    }

    #[test]
    fn path_norm_respects_triangle_bound() {
        let n = 6;
        let f = fexp(n);
        let ccfg = CmaConfig::cma11(n);
        let mut s = Cma11::new(&f, &CommonConfig::new(vec![1.0; n]), &ccfg).unwrap();
        let mut rng = RngStream::new(4);
        let gain = ccfg.path_gain();
        for _ in 0..2000 {
            let prev = s.path().to_vec();
            let sigma = s.sigma();
            let x_prev = s.x().to_vec();
            s.step(&f, &mut rng).unwrap();
            let y: Vec<f64> = s.x().iter().zip(&x_prev).map(|(a, b)| (a - b) / sigma).collect();
            if y.iter().any(|v| *v != 0.0) {
                let np = dot(&prev, &prev).sqrt();
                let ny = dot(&y, &y).sqrt();
                let lhs = dot(s.path(), s.path());
                let keep = 1.0 - ccfg.c_c;
                let rhs = keep * keep * np * np + gain * gain * ny * ny + 2.0 * keep * gain * np * ny;
                assert!(lhs <= rhs * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn epcma_first_covariance_is_shrunk_identity() {
        let n = 5;
        let f = fexp(n);
        let s = EpCma::new(&f, &CommonConfig::new(vec![1.0; n]), &CmaConfig::epcma(n, 1)).unwrap();
        let diff = s.covariance().to_dense() - DMatrix::identity(n, n) * 0.8;
        assert!(max_abs(&diff) < 1e-15);
    }

    #[test]
    fn epcma_matches_cma11_after_one_success() {
        let n = 5;
        let f = fexp(n);
        let cfg = CommonConfig::new(vec![1.0; n]);
        let shared = CmaConfig {
            c_cov: 0.2,
            ..CmaConfig::cma11(n)
        };
        let mut cma = Cma11::new(&f, &cfg, &shared).unwrap();
        let mut ep = EpCma::new(&f, &cfg, &CmaConfig { memory: 1, ..shared }).unwrap();
        let u = vec![-0.4, -0.3, 0.1, -0.2, -0.1];
        assert!(cma.step_with_direction(&f, &u).unwrap());
        assert!(ep.step_with_direction(&f, &u).unwrap());
        let diff = cma.cholesky().covariance() - ep.covariance().to_dense();
        assert!(max_abs(&diff) <= 1e-12);
    }

    #[test]
    fn snapshots_shift_on_schedule() {
        let n = 3;
        let f = fexp(n);
        let ccfg = CmaConfig {
            shift_interval: 2,
            ..CmaConfig::epcma(n, 3)
        };
        let mut s = EpCma::new(&f, &CommonConfig::new(vec![1.0; n]), &ccfg).unwrap();
        let mut rng = RngStream::new(10);
        let mut taken = Vec::new();
        for k in 1..=9u64 {
            s.step(&f, &mut rng).unwrap();
            if k == 3 || k == 6 || k == 9 {
                taken.push(s.path().to_vec());
            }
            if k == 6 {
                assert_eq!(s.snapshots()[0], taken[0]);
                assert_eq!(s.snapshots()[1], taken[1]);
            }
        }
        assert_eq!(s.snapshots()[0], taken[1]);
        assert_eq!(s.snapshots()[1], taken[2]);
    }

    /// EP-CMA-1 written out directly from its definition.
    fn epcma1_reference(f: &ObjectiveSpec, x0: Vec<f64>, iters: usize, seed: u64) -> Vec<f64> {
        let n = x0.len();
        let (c_c, c_p, c_cov, p_succ) = (2.0 / (n as f64 + 2.0), 1.0 / 12.0, 0.2f64, 0.27f64);
        let mut rng = RngStream::new(seed);
        let mut x = x0;
        let mut fx = f.value(&x);
        let mut sigma = 1.0;
        let mut path = vec![0.0; n];
        for _ in 0..iters {
            let z = rng.standard_normal(n).unwrap();
            let zeta = rng.normal();
            let a = (1.0 - c_cov).sqrt();
            let b = c_cov.sqrt() * zeta;
            let u: Vec<f64> = (0..n).map(|i| a * z[i] + b * path[i]).collect();
            let trial: Vec<f64> = (0..n).map(|i| x[i] + sigma * u[i]).collect();
            let ft = f.value(&trial);
            if ft <= fx {
                let y: Vec<f64> = (0..n).map(|i| (trial[i] - x[i]) / sigma).collect();
                for i in 0..n {
                    path[i] = (1.0 - c_c) * path[i] + (c_c * (2.0 - c_c)).sqrt() * y[i];
                }
                x = trial;
                fx = ft;
                sigma *= (1.0f64 / 3.0).exp();
            } else {
                for p in path.iter_mut() {
                    *p *= 1.0 - c_p;
                }
                sigma *= (-p_succ / (3.0 * (1.0 - p_succ))).exp();
            }
        }
        x
    }

    #[test]
    fn epcma1_matches_direct_loop() {
        let n = 6;
        let f = fexp(n);
        let mut s = EpCma::new(&f, &CommonConfig::new(vec![1.0; n]), &CmaConfig::epcma(n, 1)).unwrap();
        let mut rng = RngStream::new(31);
        for _ in 0..500 {
            s.step(&f, &mut rng).unwrap();
        }
        assert_eq!(s.x(), epcma1_reference(&f, vec![1.0; n], 500, 31).as_slice());
    }

    #[test]
    fn both_converge_monotonically() {
        let n = 8;
        let f = fexp(n);
        let cfg = CommonConfig::new(vec![1.0; n]).with_budget(200_000);
        let runs = [
            cma11_run(&f, &cfg, &CmaConfig::cma11(n), &mut RngStream::new(2)).unwrap(),
            epcma_run(&f, &cfg, &CmaConfig::epcma(n, 2), &mut RngStream::new(2)).unwrap(),
        ];
        for rec in runs {
            assert!(rec.success, "{} final {}", rec.algorithm, rec.final_fval);
            assert!(rec.checkpoints.windows(2).all(|w| w[1].fval <= w[0].fval));
        }
    }
}
