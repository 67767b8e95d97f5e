//! Seeded replication of solver runs over benchmark cells, aggregation of
//! iteration counts and CSV output.
//!
//! A cell is one `(function, L, n)` triple. Each algorithm runs `runs`
//! replicates; replicate `i` of every algorithm draws from the stream
//! `derive_seed(base_seed, i)`.

mod config;
mod output;
mod stats;
mod sweep;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;

pub use config::{load_config, parse_config};
pub use output::{
    format_l, read_trajectory_csv, summary_header, summary_row, trajectory_file_name, write_summary_csv,
    write_trajectory_csv, TRAJECTORY_HEADER,
};
pub use stats::{median_trajectory, summarize, SummaryStats};
pub use sweep::{grid_runs, SweepSpec};

use crate::error::{Error, Result};
use crate::linesearch::{LineSearchKind, DEFAULT_LS_TOL, DEFAULT_SUCCESS_PROBABILITY};
use crate::objectives::{ObjectiveKind, ObjectiveSpec};
use crate::sampling::RngStream;
use crate::solvers::{
    cma11_run, default_budget, epcma_run, rp_run, sarp_run, AlgorithmId, CmaConfig, CommonConfig, DriftMode, RunRecord,
    SarpConfig, DEFAULT_TARGET,
};

/// Everything needed to reproduce one cell of experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub objective: ObjectiveSpec,
    pub algorithms: Vec<AlgorithmId>,
    /// Replicates per algorithm.
    pub runs: usize,
    /// Replicate counts that differ from `runs`.
    pub runs_per_algorithm: BTreeMap<AlgorithmId, usize>,
    pub base_seed: u64,
    pub target: f64,
    /// Iteration budget per run; `None` means `10⁷·n`.
    pub budget: Option<u64>,
    /// Where CSVs go; `None` keeps results in memory only.
    pub output_dir: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
    /// Start point filled with this value. Defaults to 1 for quadratics and
    /// 0 for Rosenbrock.
    pub x0: Option<f64>,
    pub sigma0: f64,
    pub p: f64,
    /// Line search used by `rp` and `sarp` (the `-exact` ids always use the
    /// exact oracle).
    pub line_search: LineSearchKind,
    pub ls_tol: f64,
    pub drift_mode: DriftMode,
    /// Overrides of the spectral bounds handed to SARP.
    pub sarp_mu: Option<f64>,
    pub sarp_lmax: Option<f64>,
}

impl ExperimentSpec {
    pub fn new(objective: ObjectiveSpec, algorithms: Vec<AlgorithmId>) -> Self {
        Self {
            objective,
            algorithms,
            runs: 51,
            runs_per_algorithm: BTreeMap::new(),
            base_seed: 0,
            target: DEFAULT_TARGET,
            budget: None,
            output_dir: None,
            workers: 1,
            x0: None,
            sigma0: 1.0,
            p: DEFAULT_SUCCESS_PROBABILITY,
            line_search: LineSearchKind::Adaptive,
            ls_tol: DEFAULT_LS_TOL,
            drift_mode: DriftMode::default(),
            sarp_mu: None,
            sarp_lmax: None,
        }
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = Some(dir.into());
        self
    }

    pub fn runs_for(&self, algo: AlgorithmId) -> usize {
        self.runs_per_algorithm.get(&algo).copied().unwrap_or(self.runs)
    }

    pub fn n(&self) -> usize {
        self.objective.n()
    }

    pub fn start_point(&self) -> Vec<f64> {
        let fill = self.x0.unwrap_or(match self.objective.kind() {
            ObjectiveKind::FRosen => 0.0,
            _ => 1.0,
        });
        vec![fill; self.n()]
    }

    pub fn sarp_config(&self) -> SarpConfig {
        let b = self.objective.spectral_bounds();
        SarpConfig::new(self.sarp_mu.unwrap_or(b.mu), self.sarp_lmax.unwrap_or(b.lmax)).with_drift_mode(self.drift_mode)
    }

    pub fn common_config(&self, line_search: LineSearchKind) -> CommonConfig {
        CommonConfig {
            x0: self.start_point(),
            sigma0: self.sigma0,
            p: self.p,
            budget: self.budget.unwrap_or_else(|| default_budget(self.n())),
            target: self.target,
            line_search,
            ls_tol: self.ls_tol,
        }
    }

    /// Check everything that can be checked before any run starts.
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if self.runs == 0 || self.runs_per_algorithm.values().any(|r| *r == 0) {
            return Err(Error::Config("at least one run per algorithm is required".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        let f = &self.objective;
        for kind in [LineSearchKind::Adaptive, LineSearchKind::Exact] {
            self.common_config(kind).validate(f)?;
        }
        let n = self.n();
        for algo in &self.algorithms {
            match algo {
                AlgorithmId::Sarp | AlgorithmId::SarpExact => self.sarp_config().validate(n)?,
                AlgorithmId::Cma11 => CmaConfig::cma11(n).validate()?,
                AlgorithmId::EpCma(m) => CmaConfig::epcma(n, m.resolve(n)).validate()?,
                AlgorithmId::Rp | AlgorithmId::RpExact => {}
            }
        }
        Ok(())
    }
}

/// Run one replicate of `algo` with the given stream.
pub fn run_algorithm(spec: &ExperimentSpec, algo: AlgorithmId, rng: &mut RngStream) -> Result<RunRecord> {
    let f = &spec.objective;
    let n = spec.n();
    let mut record = match algo {
        AlgorithmId::Rp => rp_run(f, &spec.common_config(spec.line_search), rng)?,
        AlgorithmId::RpExact => rp_run(f, &spec.common_config(LineSearchKind::Exact), rng)?,
        AlgorithmId::Sarp => sarp_run(f, &spec.common_config(spec.line_search), &spec.sarp_config(), rng)?,
        AlgorithmId::SarpExact => sarp_run(f, &spec.common_config(LineSearchKind::Exact), &spec.sarp_config(), rng)?,
        AlgorithmId::Cma11 => cma11_run(
            f,
            &spec.common_config(LineSearchKind::Adaptive),
            &CmaConfig::cma11(n),
            rng,
        )?,
        AlgorithmId::EpCma(m) => epcma_run(
            f,
            &spec.common_config(LineSearchKind::Adaptive),
            &CmaConfig::epcma(n, m.resolve(n)),
            rng,
        )?,
    };
    record.algorithm = algo.to_string();
    Ok(record)
}

/// Records of one algorithm within a cell, ordered by replicate index.
#[derive(Debug, Clone)]
pub struct AlgorithmRuns {
    pub algorithm: AlgorithmId,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: Vec<SummaryStats>,
    pub runs: Vec<AlgorithmRuns>,
}

impl ExperimentOutput {
    pub fn records(&self, algo: AlgorithmId) -> Option<&[RunRecord]> {
        self.runs
            .iter()
            .find(|r| r.algorithm == algo)
            .map(|r| r.records.as_slice())
    }

    pub fn summary_for(&self, algo: AlgorithmId) -> Option<&SummaryStats> {
        let name = algo.to_string();
        self.summary.iter().find(|s| s.algo == name)
    }
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// Execute all replicates of a cell without touching the filesystem.
pub fn run_cell(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let jobs: Vec<(AlgorithmId, u64)> = spec
        .algorithms
        .iter()
        .flat_map(|a| (0..spec.runs_for(*a) as u64).map(move |i| (*a, i)))
        .collect();

    let pool = thread_pool(spec.workers)?;
    let results: Vec<Result<RunRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|(algo, i)| run_algorithm(spec, *algo, &mut RngStream::for_run(spec.base_seed, *i)))
            .collect()
    });

    let mut runs: Vec<AlgorithmRuns> = spec
        .algorithms
        .iter()
        .map(|a| AlgorithmRuns {
            algorithm: *a,
            records: Vec::new(),
        })
        .collect();
    for ((algo, _), rec) in jobs.iter().zip(results) {
        let slot = runs.iter_mut().find(|r| r.algorithm == *algo).expect("known algorithm");
        slot.records.push(rec?);
    }

    let summary = runs
        .iter()
        .map(|r| summarize(&spec.objective, &r.algorithm.to_string(), &r.records))
        .collect();
    Ok(ExperimentOutput { summary, runs })
}

/// Execute the experiment and, if an output directory is set, write one
/// trajectory CSV per run plus `summary.csv`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let out = run_cell(spec)?;
    if let Some(dir) = &spec.output_dir {
        write_cell_trajectories(dir, &spec.objective, &out)?;
        write_summary_csv(&dir.join("summary.csv"), &out.summary)?;
    }
    Ok(out)
}

pub(crate) fn write_cell_trajectories(
    dir: &std::path::Path,
    objective: &ObjectiveSpec,
    out: &ExperimentOutput,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for runs in &out.runs {
        for (i, rec) in runs.records.iter().enumerate() {
            let name = trajectory_file_name(objective, &runs.algorithm.to_string(), i);
            write_trajectory_csv(&dir.join(name), rec)?;
        }
    }
    Ok(())
}
