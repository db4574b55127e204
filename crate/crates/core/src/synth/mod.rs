//! Planted-structure generators. Every generator is a pure function of its
//! spec and seed.

mod festival;
mod trajectories;

pub use festival::{
    civil_date, gen_festival, gen_scan_log, gen_scanner_map, gen_schedule, vendor_mix, Festival, FestivalSpec,
    ScanLogSpec, ScheduleSpec, StageSpec, VendorShare,
};
pub use trajectories::{gen_trajectories, PlantedTrajectories, PlantedTrajectorySpec};

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attendance::BinaryAttendance;
use crate::error::{Error, Result};
use crate::irm::Partition;
use crate::rng::seeded;

/// Planted co-clustered binary matrix. Row cluster `l` and column cluster
/// `m` are paired (link rate `eta_in`) iff `l == m`; every other block,
/// including those of surplus clusters on the larger side, has rate
/// `eta_out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedBipartiteSpec {
    pub rows: usize,
    pub cols: usize,
    pub row_clusters: usize,
    pub col_clusters: usize,
    pub eta_in: f64,
    pub eta_out: f64,
    /// Relative cluster sizes; equal when empty.
    pub row_proportions: Vec<f64>,
    pub col_proportions: Vec<f64>,
    pub seed: u64,
}

impl Default for PlantedBipartiteSpec {
    fn default() -> Self {
        Self {
            rows: 200,
            cols: 40,
            row_clusters: 4,
            col_clusters: 5,
            eta_in: 0.8,
            eta_out: 0.05,
            row_proportions: Vec::new(),
            col_proportions: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedBipartite {
    pub attendance: BinaryAttendance,
    /// Planted cluster of each row, as used by [`PlantedBipartiteSpec::is_paired`].
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
}

impl PlantedBipartite {
    pub fn rows(&self) -> Partition {
        Partition::from_labels(&self.row_labels)
    }

    pub fn cols(&self) -> Partition {
        Partition::from_labels(&self.col_labels)
    }
}

impl PlantedBipartiteSpec {
    pub fn validate(&self) -> Result<()> {
        let rate = |x: f64| (0.0..=1.0).contains(&x);
        if !rate(self.eta_in) || !rate(self.eta_out) {
            return Err(Error::InvalidParameter("link rates must lie in [0, 1]".into()));
        }
        for (n, k, props, what) in [
            (self.rows, self.row_clusters, &self.row_proportions, "row"),
            (self.cols, self.col_clusters, &self.col_proportions, "column"),
        ] {
            if k == 0 || k > n {
                return Err(Error::InvalidParameter(format!("{k} {what} clusters for {n} {what}s")));
            }
            if !props.is_empty() && (props.len() != k || props.iter().any(|&p| !(p > 0.0))) {
                return Err(Error::InvalidParameter(format!("{what} proportions must be {k} positive numbers")));
            }
        }
        Ok(())
    }

    pub fn is_paired(&self, row_cluster: usize, col_cluster: usize) -> bool {
        col_cluster == row_cluster
    }
}

/// Cluster sizes summing to `n` by largest remainder, each at least one.
pub(crate) fn apportion(n: usize, k: usize, props: &[f64]) -> Vec<usize> {
    let weights: Vec<f64> = if props.is_empty() { alloc::vec![1.0; k] } else { props.to_vec() };
    let total: f64 = weights.iter().sum();
    let spare = n - k;
    let exact: Vec<f64> = weights.iter().map(|w| w / total * spare as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|&x| 1 + libm::floor(x) as usize).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| (exact[b] - libm::floor(exact[b])).total_cmp(&(exact[a] - libm::floor(exact[a]))));
    let mut left = n - sizes.iter().sum::<usize>();
    for &c in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[c] += 1;
        left -= 1;
    }
    sizes
}

fn planted_labels<R: Rng + ?Sized>(n: usize, k: usize, props: &[f64], rng: &mut R) -> Vec<usize> {
    let mut labels: Vec<usize> =
        apportion(n, k, props).into_iter().enumerate().flat_map(|(c, s)| core::iter::repeat_n(c, s)).collect();
    labels.shuffle(rng);
    labels
}

pub fn gen_bipartite(spec: &PlantedBipartiteSpec) -> Result<PlantedBipartite> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let row_labels = planted_labels(spec.rows, spec.row_clusters, &spec.row_proportions, &mut rng);
    let col_labels = planted_labels(spec.cols, spec.col_clusters, &spec.col_proportions, &mut rng);
    let dense: Vec<Vec<bool>> = row_labels
        .iter()
        .map(|&l| {
            col_labels
                .iter()
                .map(|&m| {
                    let p = if spec.is_paired(l, m) { spec.eta_in } else { spec.eta_out };
                    rng.random_bool(p)
                })
                .collect()
        })
        .collect();
    Ok(PlantedBipartite {
        attendance: BinaryAttendance::from_dense(&dense)?,
        row_labels,
        col_labels,
    })
}

/// Dense Bernoulli(`p`) matrix without structure.
pub fn gen_noise(rows: usize, cols: usize, p: f64, seed: u64) -> Result<BinaryAttendance> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("link rate {p} outside [0, 1]")));
    }
    let mut rng = seeded(seed);
    let dense: Vec<Vec<bool>> = (0..rows).map(|_| (0..cols).map(|_| rng.random_bool(p)).collect()).collect();
    BinaryAttendance::from_dense(&dense)
}
