use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{thresholded_graph, EdgeThresholds, OccurrenceMatrix};
use crate::error::{Error, Result};
use crate::eval::MeanSd;
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewireStats {
    pub swaps: usize,
    pub attempts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub seed: u64,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullModelStats {
    pub trials: usize,
    pub surviving_nodes: MeanSd,
    pub surviving_edges: MeanSd,
    pub per_trial: Vec<TrialCounts>,
}

impl NullModelStats {
    pub fn from_trials(per_trial: Vec<TrialCounts>) -> Result<Self> {
        if per_trial.is_empty() {
            return Err(Error::InvalidParameter("the null model needs at least one trial".into()));
        }
        let nodes: Vec<f64> = per_trial.iter().map(|t| t.nodes as f64).collect();
        let edges: Vec<f64> = per_trial.iter().map(|t| t.edges as f64).collect();
        Ok(Self {
            trials: per_trial.len(),
            surviving_nodes: MeanSd::of(&nodes),
            surviving_edges: MeanSd::of(&edges),
            per_trial,
        })
    }
}

/// Randomizes the incidence by double-edge swaps: two incidences `(d₁, b₁)`,
/// `(d₂, b₂)` become `(d₁, b₂)`, `(d₂, b₁)` unless that would duplicate an
/// incidence. Every device keeps its number of bins and every bin its number
/// of devices. Stops after `swaps` successful swaps or `max_attempts` tries.
pub fn rewire<R: Rng + ?Sized>(
    occ: &OccurrenceMatrix,
    swaps: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<(OccurrenceMatrix, RewireStats)> {
    let mut rows = occ.rows().to_vec();
    let mut incidences: Vec<(u32, u32)> = rows
        .iter()
        .enumerate()
        .flat_map(|(d, r)| r.iter().map(move |&b| (d as u32, b)))
        .collect();
    let mut stats = RewireStats { swaps: 0, attempts: 0 };
    let n = incidences.len();
    if n >= 2 {
        while stats.swaps < swaps && stats.attempts < max_attempts {
            stats.attempts += 1;
            let x = rng.random_range(0..n);
            let y = rng.random_range(0..n);
            let (d1, b1) = incidences[x];
            let (d2, b2) = incidences[y];
            if d1 == d2 || b1 == b2 {
                continue;
            }
            let (r1, r2) = (d1 as usize, d2 as usize);
            let Err(at1) = rows[r1].binary_search(&b2) else { continue };
            let Err(at2) = rows[r2].binary_search(&b1) else { continue };
            rows[r1].insert(at1, b2);
            let pos = rows[r1].binary_search(&b1).expect("present");
            rows[r1].remove(pos);
            rows[r2].insert(at2, b1);
            let pos = rows[r2].binary_search(&b2).expect("present");
            rows[r2].remove(pos);
            incidences[x] = (d1, b2);
            incidences[y] = (d2, b1);
            stats.swaps += 1;
        }
    }
    let out = occ.with_rows(rows);
    if out.device_degrees() != occ.device_degrees() || out.bin_degrees() != occ.bin_degrees() {
        return Err(Error::Invariant("rewiring changed a device or bin degree".into()));
    }
    Ok((out, stats))
}

/// One null-model draw: rewire with `swap_factor × incidences` swaps (at most
/// ten times as many attempts), rebuild and threshold the graph.
pub fn null_trial(
    occ: &OccurrenceMatrix,
    thresholds: &EdgeThresholds,
    swap_factor: usize,
    seed: u64,
) -> Result<TrialCounts> {
    let target = swap_factor * occ.num_incidences();
    let (rewired, _) = rewire(occ, target, target.saturating_mul(10), &mut seeded(seed))?;
    let g = thresholded_graph(&rewired, thresholds)?;
    Ok(TrialCounts { seed, nodes: g.num_nodes(), edges: g.num_edges() })
}

/// `trials` sequential null-model draws with seeds derived from `master_seed`.
pub fn rewiring_baseline(
    occ: &OccurrenceMatrix,
    trials: usize,
    thresholds: &EdgeThresholds,
    swap_factor: usize,
    master_seed: u64,
) -> Result<NullModelStats> {
    if trials == 0 {
        return Err(Error::InvalidParameter(format!("trials must be at least 1, got {trials}")));
    }
    let per_trial = (0..trials as u64)
        .map(|t| null_trial(occ, thresholds, swap_factor, derive_seed(master_seed, t)))
        .collect::<Result<Vec<_>>>()?;
    NullModelStats::from_trials(per_trial)
}
