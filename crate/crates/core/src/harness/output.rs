//! CSV files: one trajectory per run, one summary per experiment.
//!
//! Floats are written in Rust's shortest round-trip exponent form, so files
//! are byte-identical whenever the underlying values are.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;
use crate::solvers::{Checkpoint, RunRecord};

use super::stats::SummaryStats;

pub const TRAJECTORY_HEADER: &str = "iter,fval,sigma";

pub fn summary_header() -> &'static str {
    "func,L,n,algo,runs,success,its_median,its_mean,its_std,median_seed,evals_mean"
}

/// `10000.0` → `1e4`.
pub fn format_l(l: f64) -> String {
    format!("{l:e}")
}

pub fn trajectory_file_name(objective: &ObjectiveSpec, algo: &str, run_index: usize) -> String {
    format!(
        "{}_L{}_n{}_{}_run{}.csv",
        objective.kind().key(),
        format_l(objective.l()),
        objective.n(),
        algo,
        run_index
    )
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_trajectory_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let mut s = String::with_capacity(32 * (record.checkpoints.len() + 1));
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for c in &record.checkpoints {
        let _ = writeln!(s, "{},{:e},{:e}", c.iter, c.fval, c.sigma);
    }
    write_file(path, &s)
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<Checkpoint>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(TRAJECTORY_HEADER) {
        return Err(Error::Input(format!(
            "{}: missing `{TRAJECTORY_HEADER}` header",
            path.display()
        )));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::Input(format!("{}:{}: malformed row `{line}`", path.display(), i + 2));
            let mut parts = line.split(',');
            let iter = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let fval = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            let sigma = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() {
                return Err(bad());
            }
            Ok(Checkpoint { iter, fval, sigma })
        })
        .collect()
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_f(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub fn summary_row(s: &SummaryStats) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{:e}",
        s.func,
        format_l(s.l),
        s.n,
        s.algo,
        s.runs,
        s.success,
        opt(s.its_median),
        opt_f(s.its_mean),
        opt_f(s.its_std),
        opt(s.median_seed),
        s.evals_mean
    )
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryStats]) -> Result<()> {
    let mut s = String::from(summary_header());
    s.push('\n');
    for row in rows {
        s.push_str(&summary_row(row));
        s.push('\n');
    }
    write_file(path, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ObjectiveKind;

    #[test]
    fn l_formatting() {
        assert_eq!(format_l(1e4), "1e4");
        assert_eq!(format_l(1e6), "1e6");
        assert_eq!(format_l(1.0), "1e0");
        assert_eq!(format_l(2500.0), "2.5e3");
    }

    #[test]
    fn file_names() {
        let f = ObjectiveSpec::new(ObjectiveKind::FExp, 20, 1e4).unwrap();
        assert_eq!(trajectory_file_name(&f, "sarp", 3), "fexp_L1e4_n20_sarp_run3.csv");
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let record = RunRecord {
            algorithm: "rp".into(),
            seed: 1,
            checkpoints: vec![
                Checkpoint {
                    iter: 0,
                    fval: 13.25,
                    sigma: 1.0,
                },
                Checkpoint {
                    iter: 20,
                    fval: 1.0e-9 / 3.0,
                    sigma: 0.125,
                },
            ],
            its_to_target: Some(20),
            evals: 21,
            success: true,
            final_fval: 1.0e-9 / 3.0,
            iterations: 20,
            drift_log: None,
            error: None,
        };
        write_trajectory_csv(&path, &record).unwrap();
        assert_eq!(read_trajectory_csv(&path).unwrap(), record.checkpoints);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "iter,fval,sigma\n0,1,1\n5,oops,1\n").unwrap();
        let err = read_trajectory_csv(&path).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
    }
}
