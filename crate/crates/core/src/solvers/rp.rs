use crate::error::Result;
use crate::linesearch::{line_search_into, LineSearchMode};
use crate::objectives::Objective;
use crate::sampling::RngStream;

use super::{run_solver, CommonConfig, RunRecord, Solver};

/// Random pursuit: isotropic Gaussian direction plus a line-search oracle.
#[derive(Debug, Clone)]
pub struct Rp {
    x: Vec<f64>,
    fx: f64,
    sigma: f64,
    mode: LineSearchMode,
    evals: u64,
    u: Vec<f64>,
    next: Vec<f64>,
    accepted: u64,
}

impl Rp {
    pub fn new<O: Objective + ?Sized>(f: &O, cfg: &CommonConfig) -> Result<Self> {
        cfg.validate(f)?;
        let n = cfg.x0.len();
        Ok(Self {
            fx: f.value(&cfg.x0),
            x: cfg.x0.clone(),
            sigma: cfg.sigma0,
            mode: cfg.mode(),
            evals: 1,
            u: vec![0.0; n],
            next: vec![0.0; n],
            accepted: 0,
        })
    }

    /// Number of steps the line search accepted so far.
    pub fn accepted(&self) -> u64 {
        self.accepted
    }
}

impl Solver for Rp {
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
        let info = line_search_into(
            self.mode,
            f,
            &self.x,
            &self.u,
            self.sigma,
            Some(self.fx),
            &mut self.next,
        )?;
        std::mem::swap(&mut self.x, &mut self.next);
        self.fx = info.f_next;
        self.sigma = info.sigma_next;
        self.evals += info.evals;
        self.accepted += u64::from(info.accepted && info.sigma_taken != 0.0);
        Ok(())
    }
}

/// Run random pursuit with the line search selected in `cfg`.
pub fn rp_run<O: Objective + ?Sized>(f: &O, cfg: &CommonConfig, rng: &mut RngStream) -> Result<RunRecord> {
    let mut solver = Rp::new(f, cfg)?;
    let name = match cfg.mode() {
        LineSearchMode::Exact { .. } => "rp-exact",
        LineSearchMode::Adaptive { .. } => "rp",
    };
    Ok(run_solver(&mut solver, f, cfg.budget, cfg.target, rng, name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linesearch::LineSearchKind;
    use crate::objectives::{ObjectiveKind, ObjectiveSpec};

    fn fexp(n: usize, l: f64) -> ObjectiveSpec {
        ObjectiveSpec::new(ObjectiveKind::FExp, n, l).unwrap()
    }

    #[test]
    fn zero_budget_returns_start() {
        let f = fexp(5, 100.0);
        let cfg = CommonConfig::new(vec![1.0; 5]).with_budget(0);
        let rec = rp_run(&f, &cfg, &mut RngStream::new(1)).unwrap();
        assert_eq!(rec.checkpoints.len(), 1);
        assert_eq!(rec.checkpoints[0].iter, 0);
        assert_eq!(rec.its_to_target, None);
        assert!(!rec.success);
        assert_eq!(rec.final_fval, f.value(&[1.0; 5]));
    }

    #[test]
    fn start_at_target_is_immediate_success() {
        let f = fexp(5, 100.0);
        let cfg = CommonConfig::new(vec![0.0; 5]);
        let rec = rp_run(&f, &cfg, &mut RngStream::new(1)).unwrap();
        assert_eq!(rec.its_to_target, Some(0));
        assert!(rec.success);
    }

    #[test]
    fn converges_and_is_monotone() {
        let f = fexp(10, 100.0);
        for kind in [LineSearchKind::Adaptive, LineSearchKind::Exact] {
            let cfg = CommonConfig::new(vec![1.0; 10])
                .with_line_search(kind)
                .with_budget(200_000);
            let rec = rp_run(&f, &cfg, &mut RngStream::new(5)).unwrap();
            assert!(rec.success, "{kind} did not converge: {}", rec.final_fval);
            assert!(rec.final_fval <= 1e-9);
            assert!(rec
                .checkpoints
                .windows(2)
                .all(|w| w[1].fval <= w[0].fval && w[1].iter > w[0].iter));
            assert_eq!(rec.checkpoints.last().unwrap().iter, rec.its_to_target.unwrap());
        }
    }

    #[test]
    fn same_seed_same_record() {
        let f = fexp(8, 1e3);
        let cfg = CommonConfig::new(vec![1.0; 8]).with_budget(5_000);
        let a = rp_run(&f, &cfg, &mut RngStream::new(42)).unwrap();
        let b = rp_run(&f, &cfg, &mut RngStream::new(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_start_is_a_config_error() {
        let f = fexp(4, 10.0);
        assert!(rp_run(&f, &CommonConfig::new(vec![1.0; 3]), &mut RngStream::new(0)).is_err());
    }
}
