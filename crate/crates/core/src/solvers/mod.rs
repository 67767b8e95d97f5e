//! Random search schemes behind a common step/run interface.
//!
//! Every scheme implements [`Solver`]; [`run_solver`] drives any of them to a
//! target value or an iteration budget and records a [`RunRecord`].

mod cma;
mod rp;
mod sarp;

use std::fmt;
use std::str::FromStr;

pub use cma::{cma11_run, epcma_run, Cma11, CmaConfig, EpCma};
pub use rp::{rp_run, Rp};
pub use sarp::{sarp_run, DriftMode, Sarp, SarpConfig};

use crate::error::{Error, Result};
use crate::linesearch::{
    check_probability, LineSearchKind, LineSearchMode, DEFAULT_LS_TOL, DEFAULT_SUCCESS_PROBABILITY,
};
use crate::objectives::Objective;
use crate::sampling::RngStream;

/// Default FVAL threshold that counts as solved.
pub const DEFAULT_TARGET: f64 = 1e-9;

/// Default iteration budget: `10⁷·n`.
pub fn default_budget(n: usize) -> u64 {
    10_000_000 * n as u64
}

/// Settings shared by every scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonConfig {
    pub x0: Vec<f64>,
    pub sigma0: f64,
    /// Target success probability of adaptive step size control.
    pub p: f64,
    /// Maximum number of iterations.
    pub budget: u64,
    pub target: f64,
    pub line_search: LineSearchKind,
    /// Golden-section tolerance for exact line search on non-quadratics.
    pub ls_tol: f64,
}

impl CommonConfig {
    pub fn new(x0: Vec<f64>) -> Self {
        let budget = default_budget(x0.len());
        Self {
            x0,
            sigma0: 1.0,
            p: DEFAULT_SUCCESS_PROBABILITY,
            budget,
            target: DEFAULT_TARGET,
            line_search: LineSearchKind::Adaptive,
            ls_tol: DEFAULT_LS_TOL,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_line_search(mut self, kind: LineSearchKind) -> Self {
        self.line_search = kind;
        self
    }

    pub fn mode(&self) -> LineSearchMode {
        match self.line_search {
            LineSearchKind::Exact => LineSearchMode::Exact { tol: self.ls_tol },
            LineSearchKind::Adaptive => LineSearchMode::Adaptive { p: self.p },
        }
    }

    pub fn validate<O: Objective + ?Sized>(&self, f: &O) -> Result<()> {
        if self.x0.len() != f.dim() {
            return Err(Error::Config(format!(
                "start point has length {}, objective has dimension {}",
                self.x0.len(),
                f.dim()
            )));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("start point has non-finite components".into()));
        }
        if !(self.sigma0 > 0.0) || !self.sigma0.is_finite() {
            return Err(Error::Config(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if !(self.target > 0.0) {
            return Err(Error::Config(format!("target must be positive, got {}", self.target)));
        }
        check_probability(self.p)?;
        self.mode().validate()
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub iter: u64,
    pub fval: f64,
    pub sigma: f64,
}

/// Distance between the query point and the last line-search output of the
/// accelerated scheme, sampled at checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftLog {
    /// `sqrt(1/(n²κ))`.
    pub theta_prime: f64,
    /// `(1-θ')/(1+θ')`, the expected per-step discount of past steps.
    pub beta: f64,
    /// `(iter, ‖y_k − x_k‖)`.
    pub entries: Vec<(u64, f64)>,
}

/// Result of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: String,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    /// Iterations needed to reach the target, if it was reached.
    pub its_to_target: Option<u64>,
    pub evals: u64,
    pub success: bool,
    pub final_fval: f64,
    /// Iterations actually performed.
    pub iterations: u64,
    pub drift_log: Option<DriftLog>,
    /// Set when the run was aborted by a numeric failure.
    pub error: Option<String>,
}

/// Common interface of the iterative schemes.
pub trait Solver {
    /// The iterate whose value is reported as FVAL.
    fn x(&self) -> &[f64];
    fn fval(&self) -> f64;
    fn sigma(&self) -> f64;
    fn evals(&self) -> u64;
    /// Perform one iteration.
    fn step<O: Objective + ?Sized>(&mut self, f: &O, rng: &mut RngStream) -> Result<()>;

    /// Current drift length, for schemes that have one.
    fn drift(&self) -> Option<f64> {
        None
    }

    /// `(θ', β)` header of the drift log, for schemes that have one.
    fn drift_constants(&self) -> Option<(f64, f64)> {
        None
    }
}

const MARKS_PER_OCTAVE: f64 = 8.0;

/// Decides which iterations become checkpoints: each time FVAL first drops
/// below the next half-decade `10^(-k/2)`, at log-spaced iteration marks
/// starting at `n` (eight per doubling), and at the final iterate.
struct Recorder {
    checkpoints: Vec<Checkpoint>,
    drift: Option<Vec<(u64, f64)>>,
    /// Index `k` of the next threshold `10^(-k/2)`.
    level: i64,
    next_mark: u64,
    mark_exponent: f64,
    base: f64,
}

impl Recorder {
    fn new(n: usize, with_drift: bool) -> Self {
        Self {
            checkpoints: Vec::new(),
            drift: with_drift.then(Vec::new),
            level: i64::MIN,
            next_mark: n.max(1) as u64,
            mark_exponent: 0.0,
            base: n.max(1) as f64,
        }
    }

    fn threshold(level: i64) -> f64 {
        10f64.powf(-(level as f64) / 2.0)
    }

    /// Smallest `k` with `10^(-k/2) < fval`.
    fn level_below(fval: f64) -> i64 {
        if fval <= 0.0 {
            return i64::MAX;
        }
        let mut k = (-2.0 * fval.log10()).floor() as i64;
        while Self::threshold(k) >= fval {
            k += 1;
        }
        while k > i64::MIN + 1 && Self::threshold(k - 1) < fval {
            k -= 1;
        }
        k
    }

    fn push<S: Solver>(&mut self, iter: u64, solver: &S) {
        if self.checkpoints.last().is_some_and(|c| c.iter == iter) {
            return;
        }
        self.checkpoints.push(Checkpoint {
            iter,
            fval: solver.fval(),
            sigma: solver.sigma(),
        });
        if let (Some(log), Some(d)) = (self.drift.as_mut(), solver.drift()) {
            log.push((iter, d));
        }
    }

    fn start<S: Solver>(&mut self, solver: &S) {
        self.level = Self::level_below(solver.fval());
        self.push(0, solver);
    }

    fn observe<S: Solver>(&mut self, iter: u64, solver: &S) {
        let fval = solver.fval();
        let mut record = false;
        if fval < Self::threshold(self.level) {
            self.level = Self::level_below(fval);
            record = true;
        }
        if iter >= self.next_mark {
            while self.next_mark <= iter {
                self.mark_exponent += 1.0;
                let next = (self.base * 2f64.powf(self.mark_exponent / MARKS_PER_OCTAVE)).round() as u64;
                self.next_mark = next.max(self.next_mark + 1);
            }
            record = true;
        }
        if record {
            self.push(iter, solver);
        }
    }
}

/// Drive `solver` until FVAL ≤ `target` or `budget` iterations have run.
///
/// A numeric failure ends the run early and is reported in
/// [`RunRecord::error`].
pub fn run_solver<S: Solver, O: Objective + ?Sized>(
    solver: &mut S,
    f: &O,
    budget: u64,
    target: f64,
    rng: &mut RngStream,
    algorithm: impl Into<String>,
) -> RunRecord {
    let mut rec = Recorder::new(f.dim(), solver.drift_constants().is_some());
    rec.start(solver);

    let mut its_to_target = (solver.fval() <= target).then_some(0);
    let mut iter = 0;
    let mut error = None;
    while its_to_target.is_none() && iter < budget {
        iter += 1;
        if let Err(e) = solver.step(f, rng) {
            error = Some(e.to_string());
            iter -= 1;
            break;
        }
        rec.observe(iter, solver);
        if solver.fval() <= target {
            its_to_target = Some(iter);
        }
    }
    rec.push(iter, solver);

    let drift_log = match (solver.drift_constants(), rec.drift) {
        (Some((theta_prime, beta)), Some(entries)) => Some(DriftLog {
            theta_prime,
            beta,
            entries,
        }),
        _ => None,
    };

    RunRecord {
        algorithm: algorithm.into(),
        seed: rng.seed(),
        checkpoints: rec.checkpoints,
        its_to_target,
        evals: solver.evals(),
        success: its_to_target.is_some(),
        final_fval: solver.fval(),
        iterations: iter,
        drift_log,
        error,
    }
}

/// Identifier of a scheme as used in configs, filenames and summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmId {
    Rp,
    RpExact,
    Sarp,
    SarpExact,
    Cma11,
    EpCma(Memory),
}

/// Memory parameter of EP-CMA; `SqrtN` and `N` resolve against the dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Memory {
    Fixed(usize),
    SqrtN,
    N,
}

impl Memory {
    /// `√n` rounds to the nearest integer.
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Memory::Fixed(m) => m,
            Memory::SqrtN => ((n as f64).sqrt().round() as usize).max(1),
            Memory::N => n,
        }
    }
}

impl AlgorithmId {
    /// The ten schemes of the full benchmark grid.
    pub const ALL: [AlgorithmId; 10] = [
        AlgorithmId::Rp,
        AlgorithmId::RpExact,
        AlgorithmId::Sarp,
        AlgorithmId::SarpExact,
        AlgorithmId::Cma11,
        AlgorithmId::EpCma(Memory::Fixed(1)),
        AlgorithmId::EpCma(Memory::Fixed(2)),
        AlgorithmId::EpCma(Memory::Fixed(4)),
        AlgorithmId::EpCma(Memory::SqrtN),
        AlgorithmId::EpCma(Memory::N),
    ];
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmId::Rp => f.write_str("rp"),
            AlgorithmId::RpExact => f.write_str("rp-exact"),
            AlgorithmId::Sarp => f.write_str("sarp"),
            AlgorithmId::SarpExact => f.write_str("sarp-exact"),
            AlgorithmId::Cma11 => f.write_str("cma11"),
            AlgorithmId::EpCma(Memory::Fixed(m)) => write!(f, "epcma-{m}"),
            AlgorithmId::EpCma(Memory::SqrtN) => f.write_str("epcma-sqrtn"),
            AlgorithmId::EpCma(Memory::N) => f.write_str("epcma-n"),
        }
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let id = match s.as_str() {
            "rp" => AlgorithmId::Rp,
            "rp-exact" => AlgorithmId::RpExact,
            "sarp" => AlgorithmId::Sarp,
            "sarp-exact" => AlgorithmId::SarpExact,
            "cma11" => AlgorithmId::Cma11,
            _ => match s.strip_prefix("epcma-") {
                Some("sqrtn") => AlgorithmId::EpCma(Memory::SqrtN),
                Some("n") => AlgorithmId::EpCma(Memory::N),
                Some(m) => match m.parse::<usize>() {
                    Ok(m) if m >= 1 => AlgorithmId::EpCma(Memory::Fixed(m)),
                    _ => return Err(Error::Config(format!("invalid EP-CMA memory in `{s}`"))),
                },
                None => return Err(Error::Config(format!("unknown algorithm `{s}`"))),
            },
        };
        Ok(id)
    }
}

#[cfg(test)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_ids_round_trip() {
        for id in AlgorithmId::ALL {
            assert_eq!(id.to_string().parse::<AlgorithmId>().unwrap(), id);
        }
        assert_eq!(
            "epcma-7".parse::<AlgorithmId>().unwrap(),
            AlgorithmId::EpCma(Memory::Fixed(7))
        );
        assert!("epcma-0".parse::<AlgorithmId>().is_err());
        assert!("epcma-x".parse::<AlgorithmId>().is_err());
        assert!("nelder-mead".parse::<AlgorithmId>().is_err());
    }

    #[test]
    fn memory_rounds_sqrt_n() {
        let got: Vec<usize> = [20, 40, 60, 80, 100]
            .iter()
            .map(|n| Memory::SqrtN.resolve(*n))
            .collect();
        assert_eq!(got, vec![4, 6, 8, 9, 10]);
        assert_eq!(Memory::N.resolve(20), 20);
    }

    #[test]
    fn threshold_levels() {
        assert_eq!(Recorder::level_below(1.0), 1);
        assert_eq!(Recorder::level_below(0.5), 1);
        assert_eq!(Recorder::level_below(0.3), 2);
        assert_eq!(Recorder::level_below(13000.0), -8);
        assert!(Recorder::threshold(Recorder::level_below(2e-9)) < 2e-9);
        assert!(Recorder::threshold(Recorder::level_below(2e-9) - 1) >= 2e-9);
    }

    #[test]
    fn config_validation() {
        let f = crate::objectives::ObjectiveSpec::new(crate::objectives::ObjectiveKind::FExp, 3, 10.0).unwrap();
        assert!(CommonConfig::new(vec![1.0; 3]).validate(&f).is_ok());
        assert!(CommonConfig::new(vec![1.0; 2]).validate(&f).is_err());
        let mut c = CommonConfig::new(vec![1.0; 3]);
        c.sigma0 = 0.0;
        assert!(c.validate(&f).is_err());
        let mut c = CommonConfig::new(vec![1.0; 3]);
        c.p = 1.0;
        assert!(c.validate(&f).is_err());
        let mut c = CommonConfig::new(vec![1.0; 3]);
        c.target = 0.0;
        assert!(c.validate(&f).is_err());
        assert_eq!(CommonConfig::new(vec![1.0; 3]).budget, 30_000_000);
    }
}
