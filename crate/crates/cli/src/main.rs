use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pursuit_core::harness::{self, summary_header, summary_row, ExperimentSpec, SweepSpec};
use pursuit_core::objectives::rp_exact_rate_bound;
use pursuit_core::{verify, AlgorithmId, DriftMode, Error, LineSearchKind, ObjectiveKind, ObjectiveSpec};

/// Derivative-free random search experiments.
#[derive(Debug, Parser)]
#[command(name = "pursuit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Run the built-in benchmark grid (or a slice of it).
    Sweep {
        /// Dimensions to include.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Objectives to include: fexp, flin, ftwo, frosen.
        #[arg(long, value_delimiter = ',')]
        funcs: Option<Vec<ObjectiveKind>>,
        /// Conditioning parameters for the quadratic objectives.
        #[arg(long = "L", value_delimiter = ',')]
        conditioning: Option<Vec<f64>>,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Print the spectral bounds of an objective and the exact-search rate.
    Bounds {
        func: ObjectiveKind,
        n: usize,
        #[arg(name = "L")]
        l: f64,
    },
    /// Run the numerical self-checks.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct Overrides {
    /// Replicates per algorithm.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration budget per run.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    target: Option<f64>,
    /// Algorithm ids, e.g. rp,sarp,cma11,epcma-4.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<AlgorithmId>>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for trajectory and summary CSVs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Line search for rp and sarp.
    #[arg(long)]
    ls: Option<LineSearchKind>,
    #[arg(long)]
    drift_mode: Option<DriftMode>,
    #[arg(long)]
    sarp_mu: Option<f64>,
    #[arg(long = "sarp-L")]
    sarp_l: Option<f64>,
}

impl Overrides {
    fn budget(&self) -> Result<Option<u64>, Error> {
        self.budget
            .map(|b| {
                if b >= 0.0 && b.fract() == 0.0 && b < u64::MAX as f64 {
                    Ok(b as u64)
                } else {
                    Err(Error::Config(format!(
                        "--budget must be a non-negative integer, got {b}"
                    )))
                }
            })
            .transpose()
    }

    fn apply(&self, spec: &mut ExperimentSpec) -> Result<(), Error> {
        if let Some(r) = self.runs {
            spec.runs = r;
            spec.runs_per_algorithm.clear();
        }
        if let Some(s) = self.seed {
            spec.base_seed = s;
        }
        if let Some(b) = self.budget()? {
            spec.budget = Some(b);
        }
        if let Some(t) = self.target {
            spec.target = t;
        }
        if let Some(a) = &self.algos {
            spec.algorithms = a.clone();
        }
        if let Some(w) = self.workers {
            spec.workers = w;
        }
        if let Some(o) = &self.out {
            spec.output_dir = Some(o.clone());
        }
        if let Some(ls) = self.ls {
            spec.line_search = ls;
        }
        if let Some(d) = self.drift_mode {
            spec.drift_mode = d;
        }
        if self.sarp_mu.is_some() {
            spec.sarp_mu = self.sarp_mu;
        }
        if self.sarp_l.is_some() {
            spec.sarp_lmax = self.sarp_l;
        }
        Ok(())
    }
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

/// Configuration problems are usage errors; everything else happened while
/// running.
fn runtime(error: Error) -> Failure {
    let code = match error {
        Error::Config(_) => 2,
        _ => 1,
    };
    Failure { code, error }
}

fn usage(error: Error) -> Failure {
    Failure { code: 2, error }
}

/// Short human-readable number: plain in [1e-3, 1e4), exponent otherwise.
fn fmt_num(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn print_summary(rows: &[harness::SummaryStats]) {
    println!("{}", summary_header());
    for row in rows {
        println!("{}", summary_row(row));
    }
}

fn cmd_run(config: &std::path::Path, opts: &Overrides) -> Result<(), Failure> {
    let mut spec = harness::load_config(config).map_err(usage)?;
    opts.apply(&mut spec).map_err(usage)?;
    spec.validate().map_err(usage)?;
    let out = harness::run_experiment(&spec).map_err(runtime)?;
    print_summary(&out.summary);
    report_run_errors(out.runs.iter().flat_map(|r| &r.records));
    Ok(())
}

fn report_run_errors<'a>(records: impl Iterator<Item = &'a pursuit_core::RunRecord>) {
    for r in records {
        if let Some(e) = &r.error {
            eprintln!("warning: {} seed {} stopped early: {e}", r.algorithm, r.seed);
        }
    }
}

fn cmd_sweep(
    dims: &Option<Vec<usize>>,
    funcs: &Option<Vec<ObjectiveKind>>,
    conditioning: &Option<Vec<f64>>,
    opts: &Overrides,
) -> Result<(), Failure> {
    let mut sweep = SweepSpec::new(opts.out.clone().unwrap_or_else(|| PathBuf::from("results")));
    if let Some(d) = dims {
        sweep.dims = d.clone();
    }
    if let Some(f) = funcs {
        sweep.funcs = f.clone();
    }
    if let Some(l) = conditioning {
        sweep.ls = l.clone();
    }
    if let Some(a) = &opts.algos {
        sweep.algorithms = a.clone();
    }
    sweep.runs = opts.runs;
    sweep.base_seed = opts.seed.unwrap_or(0);
    sweep.target = opts.target;
    sweep.budget = opts.budget().map_err(usage)?;
    sweep.workers = opts.workers.unwrap_or(1);
    sweep.line_search = opts.ls.unwrap_or(LineSearchKind::Adaptive);
    sweep.drift_mode = opts.drift_mode.unwrap_or_default();
    sweep.sarp_mu = opts.sarp_mu;
    sweep.sarp_lmax = opts.sarp_l;
    let cells = sweep.cells().map_err(usage)?;
    for cell in &cells {
        cell.validate().map_err(usage)?;
    }
    let rows = sweep.run().map_err(runtime)?;
    print_summary(&rows);
    Ok(())
}

fn cmd_bounds(func: ObjectiveKind, n: usize, l: f64) -> Result<(), Failure> {
    let f = ObjectiveSpec::new(func, n, l).map_err(usage)?;
    let b = f.spectral_bounds();
    print!("mu={} lmax={}", fmt_num(b.mu), fmt_num(b.lmax));
    if let Some(t) = b.trace {
        print!(" trace={}", fmt_num(t));
    }
    match rp_exact_rate_bound(&b) {
        Ok(rate) => println!(" rate={rate}"),
        Err(e) => println!(" rate=unavailable ({e})"),
    }
    Ok(())
}

fn cmd_verify(seed: u64) -> Result<(), Failure> {
    let outcomes = verify::run_all(seed);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Failure {
            code: 1,
            error: Error::Numeric {
                message: format!("{failed} of {} checks failed", outcomes.len()),
                iterate: Vec::new(),
            },
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, opts } => cmd_run(config, opts),
        Command::Sweep {
            dims,
            funcs,
            conditioning,
            opts,
        } => cmd_sweep(dims, funcs, conditioning, opts),
        Command::Bounds { func, n, l } => cmd_bounds(*func, *n, *l),
        Command::Verify { seed } => cmd_verify(*seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error}");
            ExitCode::from(code)
        }
    }
}
