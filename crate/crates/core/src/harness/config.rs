//! Flat TOML experiment files.
//!
//! ```toml
//! func = "fexp"
//! n = 20
//! L = 1e4
//! algos = ["rp", "sarp", "cma11", "epcma-4"]
//! runs = 51
//! seed = 1
//! out = "results/fexp"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linesearch::LineSearchKind;
use crate::objectives::{ObjectiveKind, ObjectiveSpec};
use crate::solvers::{AlgorithmId, DriftMode};

use super::ExperimentSpec;

/// Integer-valued keys also accept floats such as `1e7`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Count {
    Int(i64),
    Float(f64),
}

impl Count {
    fn to_u64(&self, key: &str) -> Result<u64> {
        match *self {
            Count::Int(v) if v >= 0 => Ok(v as u64),
            Count::Float(v) if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 => Ok(v as u64),
            _ => Err(Error::Config(format!("`{key}` must be a non-negative integer"))),
        }
    }
}

/// Seeds span the full `u64` range, which TOML integers cannot, so a
/// decimal string is accepted too.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Seed {
    Int(i64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    func: String,
    n: Count,
    #[serde(rename = "L")]
    l: Option<f64>,
    algos: Vec<String>,
    runs: Option<Count>,
    seed: Option<Seed>,
    target: Option<f64>,
    budget: Option<Count>,
    out: Option<PathBuf>,
    workers: Option<Count>,
    ls: Option<String>,
    ls_tol: Option<f64>,
    drift_mode: Option<String>,
    sarp_mu: Option<f64>,
    #[serde(rename = "sarp_L")]
    sarp_l: Option<f64>,
    x0: Option<f64>,
    sigma0: Option<f64>,
    p: Option<f64>,
}

fn usize_key(c: &Count, key: &str) -> Result<usize> {
    usize::try_from(c.to_u64(key)?).map_err(|_| Error::Config(format!("`{key}` is too large")))
}

/// Parse an experiment file's contents and validate the result.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let kind: ObjectiveKind = raw.func.parse()?;
    let n = usize_key(&raw.n, "n")?;
    let l = match (kind, raw.l) {
        (_, Some(l)) => l,
        (ObjectiveKind::FRosen, None) => 1.0,
        (_, None) => return Err(Error::Config(format!("`L` is required for {kind}"))),
    };
    let objective = ObjectiveSpec::new(kind, n, l).map_err(|e| Error::Config(e.to_string()))?;
    let algorithms = raw
        .algos
        .iter()
        .map(|a| a.parse::<AlgorithmId>())
        .collect::<Result<Vec<_>>>()?;

    let mut spec = ExperimentSpec::new(objective, algorithms);
    if let Some(r) = &raw.runs {
        spec.runs = usize_key(r, "runs")?;
    }
    if let Some(seed) = raw.seed {
        spec.base_seed = match seed {
            Seed::Int(v) if v >= 0 => v as u64,
            Seed::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("`seed` must be a 64-bit unsigned integer, got `{s}`")))?,
            Seed::Int(v) => return Err(Error::Config(format!("`seed` must be non-negative, got {v}"))),
        };
    }
    if let Some(t) = raw.target {
        spec.target = t;
    }
    if let Some(b) = &raw.budget {
        spec.budget = Some(b.to_u64("budget")?);
    }
    spec.output_dir = raw.out;
    if let Some(w) = &raw.workers {
        spec.workers = usize_key(w, "workers")?;
    }
    if let Some(ls) = raw.ls {
        spec.line_search = ls.parse::<LineSearchKind>()?;
    }
    if let Some(tol) = raw.ls_tol {
        spec.ls_tol = tol;
    }
    if let Some(mode) = raw.drift_mode {
        spec.drift_mode = mode.parse::<DriftMode>()?;
    }
    spec.sarp_mu = raw.sarp_mu;
    spec.sarp_lmax = raw.sarp_l;
    spec.x0 = raw.x0;
    if let Some(s) = raw.sigma0 {
        spec.sigma0 = s;
    }
    if let Some(p) = raw.p {
        spec.p = p;
    }
    spec.validate()?;
    Ok(spec)
}

/// Read and parse an experiment file.
pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Memory;

    #[test]
    fn minimal_file() {
        let spec = parse_config("func = \"fexp\"\nn = 20\nL = 1e4\nalgos = [\"rp\", \"epcma-sqrtn\"]\n").unwrap();
        assert_eq!(spec.n(), 20);
        assert_eq!(spec.objective.l(), 1e4);
        assert_eq!(
            spec.algorithms,
            vec![AlgorithmId::Rp, AlgorithmId::EpCma(Memory::SqrtN)]
        );
        assert_eq!(spec.runs, 51);
        assert_eq!(spec.budget, None);
    }

    #[test]
    fn all_keys() {
        let text = r#"
            func = "frosen"
            n = 10
            algos = ["sarp", "cma11"]
            runs = 11
            seed = "18446744073709551615"
            target = 1e-6
            budget = 1e6
            out = "o"
            workers = 2
            ls = "exact"
            ls_tol = 1e-10
            drift_mode = "taken-step"
            sarp_mu = 0.5
            sarp_L = 4000
            x0 = 0.5
            sigma0 = 0.1
            p = 0.2
        "#;
        let spec = parse_config(text).unwrap();
        assert_eq!(spec.base_seed, u64::MAX);
        assert_eq!(spec.budget, Some(1_000_000));
        assert_eq!(spec.line_search, LineSearchKind::Exact);
        assert_eq!(spec.drift_mode, DriftMode::TakenStep);
        assert_eq!(spec.sarp_config().lmax, 4000.0);
        assert_eq!(spec.start_point(), vec![0.5; 10]);
        assert_eq!(spec.objective.l(), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "func = \"fexp\"\nn = 20\nL = 1e4\nalgos = [\"rp\"]\nbogus = 1\n",
            "func = \"fexp\"\nn = 20\nalgos = [\"rp\"]\n",
            "func = \"nope\"\nn = 20\nL = 1e4\nalgos = [\"rp\"]\n",
            "func = \"fexp\"\nn = 20\nL = 1e4\nalgos = [\"rp2\"]\n",
            "func = \"fexp\"\nn = 20\nL = 1e4\nalgos = [\"rp\"]\nruns = 0\n",
            "func = \"fexp\"\nn = 20\nL = 1e4\nalgos = [\"rp\"]\nbudget = 1.5\n",
            "func = \"fexp\"\nn = 20\nL = 1e4\nalgos = [\"rp\"]\np = 1.0\n",
            "func = \"fexp\"\nn = 1\nL = 1e4\nalgos = [\"rp\"]\n",
            "not toml at all",
        ] {
            assert!(matches!(parse_config(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn missing_file_is_io() {
        assert!(matches!(
            load_config(Path::new("/nonexistent/x.toml")),
            Err(Error::Io { .. })
        ));
    }
}
