//! The built-in benchmark grid: functions × L × dimensions × all schemes.

use std::path::PathBuf;

use crate::error::Result;
use crate::linesearch::LineSearchKind;
use crate::objectives::{ObjectiveKind, ObjectiveSpec};
use crate::solvers::{AlgorithmId, DriftMode, Memory};

use super::{run_cell, write_cell_trajectories, write_summary_csv, ExperimentSpec, SummaryStats};

pub const SWEEP_LS: [f64; 2] = [1e4, 1e6];
pub const SWEEP_DIMS: [usize; 5] = [20, 40, 60, 80, 100];

/// Replicates of `algo` in a grid cell, or `None` when the cell omits it.
///
/// Most cells use 51 runs. RP on `flin` with L=1e6 uses 11, and `ftwo` with
/// L=1e6 at n=100 uses 11 for every scheme and drops memory `n`.
pub fn grid_runs(kind: ObjectiveKind, l: f64, n: usize, algo: AlgorithmId) -> Option<usize> {
    match kind {
        ObjectiveKind::FLin if l >= 1e6 && matches!(algo, AlgorithmId::Rp | AlgorithmId::RpExact) => Some(11),
        ObjectiveKind::FTwo if l >= 1e6 && n == 100 => (!matches!(algo, AlgorithmId::EpCma(Memory::N))).then_some(11),
        _ => Some(51),
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub funcs: Vec<ObjectiveKind>,
    /// Ignored for `frosen`, which has a single cell per dimension.
    pub ls: Vec<f64>,
    pub dims: Vec<usize>,
    pub algorithms: Vec<AlgorithmId>,
    /// Replicates for every cell; `None` uses [`grid_runs`].
    pub runs: Option<usize>,
    pub base_seed: u64,
    pub target: Option<f64>,
    pub budget: Option<u64>,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub line_search: LineSearchKind,
    pub drift_mode: DriftMode,
    pub sarp_mu: Option<f64>,
    pub sarp_lmax: Option<f64>,
}

impl SweepSpec {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            funcs: ObjectiveKind::ALL.to_vec(),
            ls: SWEEP_LS.to_vec(),
            dims: SWEEP_DIMS.to_vec(),
            algorithms: AlgorithmId::ALL.to_vec(),
            runs: None,
            base_seed: 0,
            target: None,
            budget: None,
            workers: 1,
            output_dir: output_dir.into(),
            line_search: LineSearchKind::Adaptive,
            drift_mode: DriftMode::default(),
            sarp_mu: None,
            sarp_lmax: None,
        }
    }

    /// One experiment per grid cell, in `func, L, n` order.
    pub fn cells(&self) -> Result<Vec<ExperimentSpec>> {
        let mut cells = Vec::new();
        for &kind in &self.funcs {
            let ls: &[f64] = if kind.is_quadratic() { &self.ls } else { &[1.0] };
            for &l in ls {
                for &n in &self.dims {
                    cells.push(self.cell(ObjectiveSpec::new(kind, n, l)?));
                }
            }
        }
        Ok(cells)
    }

    fn cell(&self, objective: ObjectiveSpec) -> ExperimentSpec {
        let (kind, l, n) = (objective.kind(), objective.l(), objective.n());
        let counts: Vec<(AlgorithmId, Option<usize>)> = self
            .algorithms
            .iter()
            .map(|&a| (a, self.runs.or_else(|| grid_runs(kind, l, n, a))))
            .collect();
        let mut spec = ExperimentSpec::new(
            objective,
            counts.iter().filter(|c| c.1.is_some()).map(|c| c.0).collect(),
        );
        spec.runs = self.runs.unwrap_or(51);
        for (a, r) in counts {
            if let Some(r) = r.filter(|r| *r != spec.runs) {
                spec.runs_per_algorithm.insert(a, r);
            }
        }
        spec.base_seed = self.base_seed;
        if let Some(t) = self.target {
            spec.target = t;
        }
        spec.budget = self.budget;
        spec.workers = self.workers;
        spec.line_search = self.line_search;
        spec.drift_mode = self.drift_mode;
        spec.sarp_mu = self.sarp_mu;
        spec.sarp_lmax = self.sarp_lmax;
        spec
    }

    /// Run every cell, writing trajectories as each cell finishes and one
    /// combined `summary.csv` at the end.
    pub fn run(&self) -> Result<Vec<SummaryStats>> {
        let cells = self.cells()?;
        for cell in &cells {
            cell.validate()?;
        }
        let mut summary = Vec::new();
        for cell in &cells {
            let out = run_cell(cell)?;
            write_cell_trajectories(&self.output_dir, &cell.objective, &out)?;
            summary.extend(out.summary);
        }
        write_summary_csv(&self.output_dir.join("summary.csv"), &summary)?;
        Ok(summary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_shape() {
        let cells = SweepSpec::new("x").cells().unwrap();
        // Three quadratics with two L values, Rosenbrock with one.
        assert_eq!(cells.len(), (3 * 2 + 1) * 5);
        assert!(cells.iter().all(|c| c.algorithms.len() <= 10));
    }

    #[test]
    fn reduced_cells() {
        let sweep = SweepSpec::new("x");
        let cells = sweep.cells().unwrap();
        let find = |k, l, n| {
            cells
                .iter()
                .find(|c| c.objective.kind() == k && c.objective.l() == l && c.n() == n)
                .unwrap()
        };
        let lin = find(ObjectiveKind::FLin, 1e6, 40);
        assert_eq!(lin.runs_for(AlgorithmId::Rp), 11);
        assert_eq!(lin.runs_for(AlgorithmId::Sarp), 51);
        let two = find(ObjectiveKind::FTwo, 1e6, 100);
        assert_eq!(two.algorithms.len(), 9);
        assert!(two.algorithms.iter().all(|a| two.runs_for(*a) == 11));
        let two = find(ObjectiveKind::FTwo, 1e6, 80);
        assert_eq!(two.algorithms.len(), 10);
    }

    #[test]
    fn explicit_runs_override() {
        let mut sweep = SweepSpec::new("x");
        sweep.runs = Some(3);
        for c in sweep.cells().unwrap() {
            assert!(c.algorithms.iter().all(|a| c.runs_for(*a) == 3));
            assert_eq!(c.algorithms.len(), 10);
        }
    }

    #[test]
    fn small_slice_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut sweep = SweepSpec::new(dir.path());
        sweep.funcs = vec![ObjectiveKind::FExp];
        sweep.ls = vec![1e2];
        sweep.dims = vec![4];
        sweep.runs = Some(2);
        sweep.budget = Some(50);
        let summary = sweep.run().unwrap();
        assert_eq!(summary.len(), 10);
        let csvs = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(csvs, 10 * 2 + 1);
    }
}
