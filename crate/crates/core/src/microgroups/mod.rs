//! Micro-groups: devices that repeatedly share spatio-temporal bins.
//!
//! Events are collapsed into a boolean device×bin incidence, where a bin is a
//! (scanner, time window) pair. Directed edge weights are the share of the
//! source device's bins that the target also occupies; thresholded edges form
//! the micro-group graph. A degree-preserving rewiring of the incidence gives
//! the chance level.

mod graph;
mod null;

pub use graph::{
    co_occurrence_graph, thresholded_graph, threshold_edges, CoOccurrenceIndex, Edge, EdgeThresholds,
    MicroGroupGraph,
};
pub use null::{null_trial, rewire, rewiring_baseline, NullModelStats, RewireStats, TrialCounts};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ScanEvent;

/// A (scanner, time window) cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpaceTimeBin {
    pub scanner_id: u32,
    pub time_bin: i64,
}

/// Boolean device×bin incidence. Bins are sorted by (scanner, time), so the
/// bins of one scanner are contiguous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceMatrix {
    devices: Vec<String>,
    bins: Vec<SpaceTimeBin>,
    /// Sorted bin indices per device.
    rows: Vec<Vec<u32>>,
    bin_width: i64,
    t0: i64,
}

/// Earliest timestamp rounded down to the hour.
pub fn default_t0(events: &[ScanEvent]) -> Option<i64> {
    events.iter().map(|e| e.timestamp).min().map(|t| t.div_euclid(3600) * 3600)
}

/// Bins events into `(scanner, ⌊(t − t0) / bin_width⌋)` cells. `t0` defaults to
/// [`default_t0`].
pub fn bin_events(events: &[ScanEvent], bin_width: i64, t0: Option<i64>) -> Result<OccurrenceMatrix> {
    if bin_width <= 0 {
        return Err(Error::InvalidParameter(format!("bin width {bin_width} must be positive")));
    }
    let t0 = t0.or_else(|| default_t0(events)).unwrap_or(0);
    let mut cells: BTreeMap<&str, BTreeSet<SpaceTimeBin>> = BTreeMap::new();
    for e in events {
        let bin = SpaceTimeBin { scanner_id: e.scanner_id, time_bin: (e.timestamp - t0).div_euclid(bin_width) };
        cells.entry(e.device_id.as_str()).or_default().insert(bin);
    }
    let devices = cells.keys().map(|d| String::from(*d)).collect();
    let rows = cells.into_values().map(|s| s.into_iter().collect()).collect();
    Ok(OccurrenceMatrix::from_device_bins(devices, rows, bin_width, t0))
}

impl OccurrenceMatrix {
    /// Builds the matrix from per-device bin sets; the bin list is the union.
    pub fn from_device_bins(devices: Vec<String>, device_bins: Vec<Vec<SpaceTimeBin>>, bin_width: i64, t0: i64) -> Self {
        let bins: Vec<SpaceTimeBin> =
            device_bins.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let rows = device_bins
            .iter()
            .map(|r| {
                let mut idx: Vec<u32> =
                    r.iter().map(|b| bins.binary_search(b).expect("bin in union") as u32).collect();
                idx.sort_unstable();
                idx.dedup();
                idx
            })
            .collect();
        Self { devices, bins, rows, bin_width, t0 }
    }

    pub fn devices(&self) -> &[String] {
        &self.devices
    }

    pub fn bins(&self) -> &[SpaceTimeBin] {
        &self.bins
    }

    pub fn row(&self, device: usize) -> &[u32] {
        &self.rows[device]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn bin_width(&self) -> i64 {
        self.bin_width
    }

    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn n_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn num_incidences(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Distinct time windows the device was seen in.
    pub fn temporal_count(&self, device: usize) -> usize {
        self.rows[device].iter().map(|&b| self.bins[b as usize].time_bin).collect::<BTreeSet<_>>().len()
    }

    /// Distinct scanners the device was seen at.
    pub fn spatial_count(&self, device: usize) -> usize {
        let mut n = 0;
        let mut last = None;
        for &b in &self.rows[device] {
            let s = self.bins[b as usize].scanner_id;
            if last != Some(s) {
                n += 1;
                last = Some(s);
            }
        }
        n
    }

    pub fn device_degrees(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    pub fn bin_degrees(&self) -> Vec<usize> {
        let mut d = alloc::vec![0; self.bins.len()];
        for r in &self.rows {
            for &b in r {
                d[b as usize] += 1;
            }
        }
        d
    }

    /// Keeps the devices for which `keep` holds; bins left empty are dropped.
    pub fn retain_devices(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let kept: Vec<usize> = (0..self.n_devices()).filter(|&d| keep(d)).collect();
        let devices = kept.iter().map(|&d| self.devices[d].clone()).collect();
        let device_bins = kept
            .iter()
            .map(|&d| self.rows[d].iter().map(|&b| self.bins[b as usize]).collect())
            .collect();
        Self::from_device_bins(devices, device_bins, self.bin_width, self.t0)
    }

    pub(crate) fn with_rows(&self, rows: Vec<Vec<u32>>) -> Self {
        Self { rows, ..self.clone() }
    }
}

/// Keeps devices seen in at least `min_temporal` time windows and at least
/// `min_spatial` scanners.
pub fn filter_devices(occ: &OccurrenceMatrix, min_temporal: usize, min_spatial: usize) -> Result<OccurrenceMatrix> {
    if min_temporal == 0 || min_spatial == 0 {
        return Err(Error::InvalidParameter("device filter thresholds must be at least 1".into()));
    }
    Ok(occ.retain_devices(|d| occ.temporal_count(d) >= min_temporal && occ.spatial_count(d) >= min_spatial))
}

/// Devices with identical incidence rows, reported under the name kept for
/// the merged node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeGroup {
    pub representative: String,
    pub members: Vec<String>,
}

/// Collapses devices with identical incidence rows into one node named after
/// the first of them in device order. Only groups of two or more are reported.
pub fn merge_duplicates(occ: &OccurrenceMatrix) -> (OccurrenceMatrix, Vec<MergeGroup>) {
    let mut by_row: BTreeMap<&[u32], Vec<usize>> = BTreeMap::new();
    for (d, r) in occ.rows.iter().enumerate() {
        by_row.entry(r.as_slice()).or_default().push(d);
    }
    let mut firsts: Vec<&Vec<usize>> = by_row.values().collect();
    firsts.sort_by_key(|g| g[0]);
    let groups = firsts
        .iter()
        .filter(|g| g.len() > 1)
        .map(|g| MergeGroup {
            representative: occ.devices[g[0]].clone(),
            members: g.iter().map(|&d| occ.devices[d].clone()).collect(),
        })
        .collect();
    let keep: BTreeSet<usize> = firsts.iter().map(|g| g[0]).collect();
    (occ.retain_devices(|d| keep.contains(&d)), groups)
}
