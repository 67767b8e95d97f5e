use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;
use crate::solvers::RunRecord;

/// Aggregate of one algorithm's replicates within a cell.
///
/// Iteration statistics cover successful runs only; failed runs count
/// towards `runs` but not `success`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub func: String,
    pub l: f64,
    pub n: usize,
    pub algo: String,
    pub runs: usize,
    pub success: usize,
    /// Lower median of the successful iteration counts.
    pub its_median: Option<u64>,
    pub its_mean: Option<f64>,
    /// Sample standard deviation (0 for a single success).
    pub its_std: Option<f64>,
    /// Seed of the run realizing the median.
    pub median_seed: Option<u64>,
    pub evals_mean: f64,
}

/// Lower median of the sorted values: index `(len-1)/2`.
pub(crate) fn lower_median(sorted: &[u64]) -> Option<u64> {
    (!sorted.is_empty()).then(|| sorted[(sorted.len() - 1) / 2])
}

/// Mean and sample standard deviation.
pub(crate) fn mean_std(values: &[u64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|v| *v as f64).sum::<f64>() / n;
    let std = if values.len() > 1 {
        let ss: f64 = values.iter().map(|v| (*v as f64 - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

/// The successful run whose `its_to_target` is the lower median; ties go to
/// the smallest seed.
pub fn median_trajectory(records: &[RunRecord]) -> Result<&RunRecord> {
    let mut its: Vec<u64> = records.iter().filter_map(|r| r.its_to_target).collect();
    its.sort_unstable();
    let median = lower_median(&its)
        .ok_or_else(|| Error::Input(format!("none of the {} runs reached the target", records.len())))?;
    Ok(records
        .iter()
        .filter(|r| r.its_to_target == Some(median))
        .min_by_key(|r| r.seed)
        .expect("median is realized by some run"))
}

pub fn summarize(objective: &ObjectiveSpec, algo: &str, records: &[RunRecord]) -> SummaryStats {
    let mut its: Vec<u64> = records.iter().filter_map(|r| r.its_to_target).collect();
    its.sort_unstable();
    let moments = mean_std(&its);
    let evals_mean = if records.is_empty() {
        0.0
    } else {
        records.iter().map(|r| r.evals as f64).sum::<f64>() / records.len() as f64
    };
    SummaryStats {
        func: objective.kind().key().to_string(),
        l: objective.l(),
        n: objective.n(),
        algo: algo.to_string(),
        runs: records.len(),
        success: its.len(),
        its_median: lower_median(&its),
        its_mean: moments.map(|m| m.0),
        its_std: moments.map(|m| m.1),
        median_seed: median_trajectory(records).ok().map(|r| r.seed),
        evals_mean,
    }
}
