//! Fast self-checks of the numerical building blocks, run by `pursuit verify`.
//!
//! Each check is a small randomized experiment with a fixed seed and a
//! pass/fail verdict plus a one-line measurement.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::linesearch::{ass_exponents, exact_ls, DEFAULT_LS_TOL, DEFAULT_SUCCESS_PROBABILITY};
use crate::objectives::{rp_exact_rate_bound, FnObjective, ObjectiveKind, ObjectiveSpec, SpectralBounds};
use crate::sampling::{build_epcma_covariance, sample_lowrank, CholeskyState, RngStream};
use crate::solvers::{CommonConfig, Rp, Solver};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn diag_quadratic(d: Vec<f64>) -> FnObjective<impl Fn(&[f64]) -> f64 + Sync> {
    FnObjective::quadratic(d.len(), move |x: &[f64]| {
        0.5 * x.iter().zip(&d).map(|(xi, di)| di * xi * xi).sum::<f64>()
    })
}

/// Step-size exponents balance at the target success rate, and RP's
/// observed acceptance rate settles near it.
pub fn check_ass_equilibrium(seed: u64) -> CheckOutcome {
    let p = DEFAULT_SUCCESS_PROBABILITY;
    let (up, down) = ass_exponents(p);
    let drift = p * up + (1.0 - p) * down;
    let f = ObjectiveSpec::new(ObjectiveKind::FExp, 20, 1e4).expect("valid objective");
    let cfg = CommonConfig::new(vec![1.0; 20]);
    let mut solver = Rp::new(&f, &cfg).expect("valid config");
    let mut rng = RngStream::new(seed);
    let iters = 10_000;
    for _ in 0..iters {
        if solver.step(&f, &mut rng).is_err() {
            break;
        }
    }
    let rate = solver.accepted() as f64 / iters as f64;
    outcome(
        "step-size equilibrium",
        drift.abs() < 1e-15 && (rate - p).abs() <= 0.10,
        format!("log drift {drift:.1e}, acceptance {rate:.3}"),
    )
}

/// Mean one-step progress of RP with exact line search respects
/// `1 - mu/trace`.
pub fn check_rate_bound(seed: u64, samples: usize) -> CheckOutcome {
    let n = 10;
    let mut rng = RngStream::new(seed);
    let d: Vec<f64> = (0..n).map(|_| 10f64.powf(3.0 * rng.uniform())).collect();
    let bounds = SpectralBounds {
        mu: d.iter().cloned().fold(f64::INFINITY, f64::min),
        lmax: d.iter().cloned().fold(0.0, f64::max),
        trace: Some(d.iter().sum()),
    };
    let bound = rp_exact_rate_bound(&bounds).expect("trace known");
    let f = diag_quadratic(d);
    let x = rng.standard_normal(n).expect("n > 0");
    let fx = crate::objectives::Objective::value(&f, &x);
    let mut u = vec![0.0; n];
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        rng.fill_standard_normal(&mut u);
        match exact_ls(&f, &x, &u, DEFAULT_LS_TOL, Some(fx)) {
            Ok(r) => ratios.push(r.f_next / fx),
            Err(e) => return outcome("exact-search rate bound", false, e.to_string()),
        }
    }
    let m = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / m;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0);
    let se = (var / m).sqrt();
    outcome(
        "exact-search rate bound",
        mean <= bound + 3.0 * se,
        format!("mean ratio {mean:.6} vs bound {bound:.6} (se {se:.1e})"),
    )
}

/// The exact line search lands on a point where the directional derivative
/// vanishes.
pub fn check_line_search_exactness(seed: u64, instances: usize) -> CheckOutcome {
    let mut rng = RngStream::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = 2 + (rng.uniform() * 19.0) as usize;
        let d: Vec<f64> = (0..n).map(|_| 10f64.powf(4.0 * rng.uniform())).collect();
        let x = rng.standard_normal(n).expect("n > 0");
        let u = rng.standard_normal(n).expect("n > 0");
        let f = diag_quadratic(d.clone());
        let r = match exact_ls(&f, &x, &u, DEFAULT_LS_TOL, None) {
            Ok(r) => r,
            Err(e) => return outcome("line-search exactness", false, e.to_string()),
        };
        let grad_dot = |p: &[f64]| p.iter().zip(&d).zip(&u).map(|((pi, di), ui)| di * pi * ui).sum::<f64>();
        let gnorm = x.iter().zip(&d).map(|(xi, di)| (di * xi).powi(2)).sum::<f64>().sqrt();
        let unorm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(grad_dot(&r.x_next).abs() / (gnorm * unorm));
    }
    outcome(
        "line-search exactness",
        worst <= 1e-8,
        format!("worst relative directional derivative {worst:.1e}"),
    )
}

/// Factored EP-CMA covariance equals the sequential update, and its sampler
/// reproduces it.
pub fn check_sampler(seed: u64, samples: usize) -> CheckOutcome {
    let mut rng = RngStream::new(seed);
    let mut worst = 0.0f64;
    for n in [2, 7, 16] {
        for m in [1, 5, 16] {
            let paths: Vec<Vec<f64>> = (0..m).map(|_| rng.standard_normal(n).expect("n > 0")).collect();
            let c_cov = 2.0 / (6.0 + m as f64);
            let factored = build_epcma_covariance(n, &paths, c_cov)
                .expect("valid paths")
                .to_dense();
            let mut dense = DMatrix::<f64>::identity(n, n);
            for p in &paths {
                let q = DVector::from_column_slice(p);
                dense = dense * (1.0 - c_cov) + (&q * q.transpose()) * c_cov;
            }
            worst = worst.max((factored - dense).abs().max());
        }
    }
    let n = 6;
    let paths: Vec<Vec<f64>> = (0..3).map(|_| rng.standard_normal(n).expect("n > 0")).collect();
    let cov = build_epcma_covariance(n, &paths, 0.4).expect("valid paths");
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for _ in 0..samples {
        let s = DVector::from_vec(sample_lowrank(&mut rng, &cov));
        acc += &s * s.transpose();
    }
    let empirical = (acc / samples as f64 - cov.to_dense()).abs().max();
    outcome(
        "low-rank sampler",
        worst <= 1e-12 && empirical <= 0.05,
        format!("factored vs sequential {worst:.1e}, empirical covariance error {empirical:.3}"),
    )
}

/// Rank-one Cholesky updates track the covariance they represent.
pub fn check_cholesky(seed: u64, updates: usize) -> CheckOutcome {
    let n = 20;
    let mut rng = RngStream::new(seed);
    let mut chol = CholeskyState::identity(n);
    let mut reference = DMatrix::<f64>::identity(n, n);
    let c = 2.0 / ((n * n) as f64 + 6.0);
    for _ in 0..updates {
        let v = rng.standard_normal(n).expect("n > 0");
        if let Err(e) = chol.rank_one_update(1.0 - c, c, &v) {
            return outcome("Cholesky maintenance", false, e.to_string());
        }
        let q = DVector::from_vec(v);
        reference = reference * (1.0 - c) + (&q * q.transpose()) * c;
    }
    let err = (chol.reconstruct() - reference).abs().max();
    outcome(
        "Cholesky maintenance",
        err <= 1e-9,
        format!("reconstruction error {err:.1e} after {updates} updates"),
    )
}

/// Every check at its default size.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_ass_equilibrium(seed),
        check_rate_bound(seed, 100_000),
        check_line_search_exactness(seed, 1000),
        check_sampler(seed, 200_000),
        check_cholesky(seed, 10_000),
    ]
}
