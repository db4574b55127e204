//! Model-quality and interpretation metrics.

mod enrichment;
mod report;
mod robustness;

pub use enrichment::{
    align_schedule, chi_squared_enrichment, ClusterEnrichment, EnrichmentConfig, EnrichmentReport, Feature,
    FeatureTest, SkippedCluster,
};
pub use report::{cluster_report, ClusterReport, ClusterSummary};
pub use robustness::{
    robustness_run, robustness_suite, robustness_suite_with_seeds, RobustnessReport, RobustnessRun,
};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::attendance::BinaryAttendance;
use crate::error::{Error, Result};
use crate::irm::{IrmState, Partition};

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self { mean: f64::NAN, sd: f64::NAN };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() < 2 {
            0.0
        } else {
            libm::sqrt(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0))
        };
        Self { mean, sd }
    }
}

/// Normalized mutual information `2·I(a; b) / (H(a) + H(b))` with plug-in
/// entropies. Two single-cluster partitions score 1.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n == 0 {
        return Ok(1.0);
    }
    let h_a = entropy(a.sizes(), n);
    let h_b = entropy(b.sizes(), n);
    if h_a + h_b == 0.0 {
        return Ok(1.0);
    }
    let mut pairs: Vec<(usize, usize)> =
        a.assignments().iter().copied().zip(b.assignments().iter().copied()).collect();
    pairs.sort_unstable();
    let nf = n as f64;
    let mut mi = 0.0;
    let mut k = 0;
    while k < pairs.len() {
        let mut end = k + 1;
        while end < pairs.len() && pairs[end] == pairs[k] {
            end += 1;
        }
        let (x, y) = pairs[k];
        let joint = (end - k) as f64;
        mi += joint / nf * libm::log(joint * nf / (a.sizes()[x] as f64 * b.sizes()[y] as f64));
        k = end;
    }
    Ok((2.0 * mi / (h_a + h_b)).clamp(0.0, 1.0))
}

fn entropy(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * libm::log(p)
        })
        .sum()
}

/// Area under the ROC curve by the rank statistic: the probability that a
/// positive outscores a negative, counting ties as one half.
pub fn rank_auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: positive.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("AUC scores must not be NaN".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidParameter("AUC needs at least one positive and one negative".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&x, &y| scores[x].total_cmp(&scores[y]));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && scores[order[end]] == scores[order[k]] {
            end += 1;
        }
        // 1-based ranks k+1..=end share their average
        let avg = (k + 1 + end) as f64 / 2.0;
        rank_sum += avg * order[k..end].iter().filter(|&&i| positive[i]).count() as f64;
        k = end;
    }
    let np = n_pos as f64;
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Held-out AUC: every masked cell is scored by η̂ of its block and labelled by
/// its value in `a`.
pub fn auc(state: &IrmState, a: &BinaryAttendance) -> Result<f64> {
    let mask = state.mask();
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let eta = state.predict_eta();
    let (rows, cols) = (state.rows(), state.cols());
    if rows.len() != a.n_rows() || cols.len() != a.n_cols() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "state of {}×{} for a {}×{} matrix",
            rows.len(),
            cols.len(),
            a.n_rows(),
            a.n_cols()
        )));
    }
    let mut scores = Vec::with_capacity(mask.len());
    let mut positive = Vec::with_capacity(mask.len());
    for cell in mask.cells() {
        let (i, j) = (cell.row as usize, cell.col as usize);
        scores.push(eta.get(rows.cluster_of(i), cols.cluster_of(j)));
        positive.push(a.get(i, j));
    }
    rank_auc(&scores, &positive)
}

/// Convergence summary of a log-posterior trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFlatness {
    /// Difference between the means of the two halves of the tail window.
    pub drift: f64,
    /// Max minus min over the whole trace.
    pub range: f64,
    /// Standard deviation within the tail window.
    pub tail_sd: f64,
    pub flat: bool,
}

/// Checks whether the last `tail_fraction` of a trace has stopped moving:
/// `|drift| < tolerance · range`.
pub fn trace_flatness(trace: &[f64], tail_fraction: f64, tolerance: f64) -> Result<TraceFlatness> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) || !(tolerance >= 0.0) {
        return Err(Error::InvalidParameter("tail fraction must be in (0, 1] and tolerance ≥ 0".into()));
    }
    let tail_len = libm::ceil(trace.len() as f64 * tail_fraction) as usize;
    if tail_len < 2 {
        return Err(Error::InvalidParameter("trace too short for a flatness check".into()));
    }
    let tail = &trace[trace.len() - tail_len..];
    let (first, second) = tail.split_at(tail_len / 2);
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let drift = mean(second) - mean(first);
    let max = trace.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = trace.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    let tail_sd = MeanSd::of(tail).sd;
    Ok(TraceFlatness { drift, range, tail_sd, flat: libm::fabs(drift) <= tolerance * range })
}
