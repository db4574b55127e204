//! Repeated fits on independently held-out data.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{auc, nmi, MeanSd};
use crate::attendance::BinaryAttendance;
use crate::error::{Error, Result};
use crate::irm::{hold_out, IrmConfig, Partition, Sampler};
use crate::rng::{derive_seed, seeded};

/// One fit of the robustness protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRun {
    pub seed: u64,
    pub rows: Partition,
    pub cols: Partition,
    pub auc: f64,
    pub best_log_posterior: f64,
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub runs: usize,
    pub pairwise_nmi_rows: MeanSd,
    pub pairwise_nmi_cols: MeanSd,
    pub auc: MeanSd,
    pub traces: Vec<Vec<f64>>,
}

/// Holds out `fraction` of the links (and as many non-links), fits one chain
/// and scores the held-out cells. The mask and the chain use separate streams
/// derived from `run_seed`.
pub fn robustness_run(a: &BinaryAttendance, config: &IrmConfig, fraction: f64, run_seed: u64) -> Result<RobustnessRun> {
    let (_, mask) = hold_out(a, fraction, &mut seeded(derive_seed(run_seed, 0)))?;
    let hyper = config.hyperparameters(a.n_rows(), a.n_cols())?;
    let sampler = Sampler::new(a, &mask, hyper)?;
    let inference = sampler.run(config, derive_seed(run_seed, 1));
    let auc = auc(&inference.best, a)?;
    Ok(RobustnessRun {
        seed: run_seed,
        rows: inference.best.rows().clone(),
        cols: inference.best.cols().clone(),
        auc,
        best_log_posterior: inference.best.log_posterior(),
        trace: inference.trace,
    })
}

impl RobustnessReport {
    /// Aggregates runs: NMI over all unordered pairs of runs for both modes,
    /// and the AUC distribution.
    pub fn from_runs(runs: &[RobustnessRun]) -> Result<Self> {
        if runs.len() < 2 {
            return Err(Error::InvalidParameter(format!("robustness needs at least 2 runs, got {}", runs.len())));
        }
        let mut nmi_rows = Vec::with_capacity(runs.len() * (runs.len() - 1) / 2);
        let mut nmi_cols = Vec::with_capacity(nmi_rows.capacity());
        for (k, x) in runs.iter().enumerate() {
            for y in &runs[k + 1..] {
                nmi_rows.push(nmi(&x.rows, &y.rows)?);
                nmi_cols.push(nmi(&x.cols, &y.cols)?);
            }
        }
        let aucs: Vec<f64> = runs.iter().map(|r| r.auc).collect();
        Ok(Self {
            runs: runs.len(),
            pairwise_nmi_rows: MeanSd::of(&nmi_rows),
            pairwise_nmi_cols: MeanSd::of(&nmi_cols),
            auc: MeanSd::of(&aucs),
            traces: runs.iter().map(|r| r.trace.clone()).collect(),
        })
    }
}

/// `runs` sequential fits with seeds derived from `config.seed`.
pub fn robustness_suite(a: &BinaryAttendance, config: &IrmConfig, runs: usize, fraction: f64) -> Result<RobustnessReport> {
    let seeds: Vec<u64> = (0..runs as u64).map(|r| derive_seed(config.seed, r)).collect();
    robustness_suite_with_seeds(a, config, fraction, &seeds)
}

pub fn robustness_suite_with_seeds(
    a: &BinaryAttendance,
    config: &IrmConfig,
    fraction: f64,
    seeds: &[u64],
) -> Result<RobustnessReport> {
    if seeds.len() < 2 {
        return Err(Error::InvalidParameter(format!("robustness needs at least 2 runs, got {}", seeds.len())));
    }
    let runs = seeds
        .iter()
        .map(|&s| robustness_run(a, config, fraction, s))
        .collect::<Result<Vec<_>>>()?;
    RobustnessReport::from_runs(&runs)
}
