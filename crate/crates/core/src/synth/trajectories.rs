use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{DeviceId, ScanEvent};
use crate::rng::{derive_seed, seeded};

/// Devices moving between scanners, some of them in planted groups.
///
/// Every group (devices outside planted groups form groups of one) walks over
/// the scanners: each bin it stays put with probability `stay_probability`,
/// otherwise it moves to another scanner uniformly. The group is on site in a
/// bin with probability `group_activity`. When it is, each member is seen at
/// the group's scanner with probability `p_follow`; failing that, it is seen
/// at a uniformly random scanner with probability `background_rate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedTrajectorySpec {
    pub num_devices: usize,
    pub num_groups: usize,
    pub min_group_size: usize,
    pub max_group_size: usize,
    pub num_scanners: u32,
    pub num_bins: usize,
    pub bin_width: i64,
    pub t0: i64,
    pub p_follow: f64,
    pub stay_probability: f64,
    pub group_activity: f64,
    pub background_rate: f64,
    /// Events per sighting are drawn uniformly from `1..=max_events_per_sighting`.
    pub max_events_per_sighting: u32,
    pub seed: u64,
}

impl Default for PlantedTrajectorySpec {
    fn default() -> Self {
        Self {
            num_devices: 500,
            num_groups: 60,
            min_group_size: 2,
            max_group_size: 4,
            num_scanners: 10,
            num_bins: 288,
            bin_width: 600,
            t0: 0,
            p_follow: 0.8,
            stay_probability: 0.7,
            group_activity: 0.15,
            background_rate: 0.5,
            max_events_per_sighting: 3,
            seed: 0,
        }
    }
}

impl PlantedTrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if ![self.p_follow, self.stay_probability, self.group_activity, self.background_rate].into_iter().all(prob) {
            return Err(Error::InvalidParameter("trajectory probabilities must lie in [0, 1]".into()));
        }
        if self.min_group_size < 1 || self.min_group_size > self.max_group_size {
            return Err(Error::InvalidParameter("group sizes need 1 ≤ min ≤ max".into()));
        }
        if self.num_groups * self.max_group_size > self.num_devices {
            return Err(Error::InvalidParameter(format!(
                "{} groups of up to {} do not fit in {} devices",
                self.num_groups, self.max_group_size, self.num_devices
            )));
        }
        if self.num_scanners == 0 || self.bin_width <= 0 || self.max_events_per_sighting == 0 {
            return Err(Error::InvalidParameter("scanners, bin width and events per sighting must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedTrajectories {
    /// Sorted by (timestamp, scanner, device).
    pub events: Vec<ScanEvent>,
    /// Planted groups of two or more devices.
    pub groups: Vec<Vec<DeviceId>>,
}

impl PlantedTrajectories {
    /// Ordered pairs of distinct devices in the same planted group.
    pub fn intra_group_pairs(&self) -> Vec<(DeviceId, DeviceId)> {
        let mut pairs = Vec::new();
        for g in &self.groups {
            for a in g {
                for b in g {
                    if a != b {
                        pairs.push((a.clone(), b.clone()));
                    }
                }
            }
        }
        pairs
    }
}

pub fn gen_trajectories(spec: &PlantedTrajectorySpec) -> Result<PlantedTrajectories> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let mut ids: Vec<DeviceId> = (0..spec.num_devices).map(|k| DeviceId(format!("dev{k:05}"))).collect();
    ids.shuffle(&mut rng);
    let mut groups: Vec<Vec<DeviceId>> = Vec::new();
    let mut next = 0;
    for _ in 0..spec.num_groups {
        let size = rng.random_range(spec.min_group_size..=spec.max_group_size);
        groups.push(ids[next..next + size].to_vec());
        next += size;
    }
    let planted = groups.iter().filter(|g| g.len() > 1).cloned().collect();
    groups.extend(ids[next..].iter().map(|d| alloc::vec![d.clone()]));

    let mut events = Vec::new();
    // one stream per group so that groups do not perturb each other
    for (g, members) in groups.iter().enumerate() {
        let mut rng = seeded(derive_seed(spec.seed, 1 + g as u64));
        let mut at = rng.random_range(0..spec.num_scanners);
        for bin in 0..spec.num_bins {
            if bin > 0 && spec.num_scanners > 1 && !rng.random_bool(spec.stay_probability) {
                let step = rng.random_range(1..spec.num_scanners);
                at = (at + step) % spec.num_scanners;
            }
            if !rng.random_bool(spec.group_activity) {
                continue;
            }
            for d in members {
                let scanner = if rng.random_bool(spec.p_follow) {
                    at
                } else if rng.random_bool(spec.background_rate) {
                    rng.random_range(0..spec.num_scanners)
                } else {
                    continue;
                };
                let start = spec.t0 + bin as i64 * spec.bin_width;
                for _ in 0..rng.random_range(1..=spec.max_events_per_sighting) {
                    events.push(ScanEvent {
                        timestamp: start + rng.random_range(0..spec.bin_width),
                        scanner_id: scanner + 1,
                        device_id: d.clone(),
                        vendor: None,
                    });
                }
            }
        }
    }
    events.sort_by(|a, b| (a.timestamp, a.scanner_id, &a.device_id).cmp(&(b.timestamp, b.scanner_id, &b.device_id)));
    Ok(PlantedTrajectories { events, groups: planted })
}
