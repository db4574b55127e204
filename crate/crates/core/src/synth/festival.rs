use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use super::{gen_bipartite, PlantedBipartite, PlantedBipartiteSpec};
use crate::attendance::{validate_schedule, AttendanceWindow, Concert, Genre, Origin, StageSize};
use crate::error::{Error, Result};
use crate::ingest::{MacAddress, OuiTable, RawScanRecord, ScannerInfo, ScannerMap};
use crate::rng::{derive_seed, seeded};

const DAY: i64 = 86_400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: String,
    pub size: StageSize,
    pub scanners: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSpec {
    pub num_concerts: usize,
    pub stages: Vec<StageSpec>,
    pub days: usize,
    /// UTC midnight of the first day.
    pub first_day: i64,
    pub first_slot_hour: i64,
    pub slot_secs: i64,
    /// Weights over genres in their declaration order.
    pub genre_weights: Vec<f64>,
    /// Weights over origins in their declaration order.
    pub origin_weights: Vec<f64>,
    pub playcount_mu: f64,
    pub playcount_sigma: f64,
    /// Share of concerts whose playcount is unknown (recorded as 0).
    pub missing_playcount: f64,
    pub seed: u64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        let stage = |name: &str, size, scanners| StageSpec { name: name.into(), size, scanners };
        Self {
            num_concerts: 160,
            stages: alloc::vec![
                stage("Orange", StageSize::Big, 2),
                stage("Arena", StageSize::Big, 2),
                stage("Odeon", StageSize::Medium, 1),
                stage("Cosmopol", StageSize::Medium, 1),
                stage("Pavilion", StageSize::Small, 1),
                stage("Apollo", StageSize::Small, 1),
            ],
            days: 8,
            first_day: 1_341_100_800,
            first_slot_hour: 12,
            slot_secs: 7200,
            genre_weights: alloc::vec![0.25, 0.3, 0.15, 0.1, 0.1, 0.1],
            origin_weights: alloc::vec![0.3, 0.15, 0.2, 0.25, 0.1],
            playcount_mu: 11.0,
            playcount_sigma: 2.0,
            missing_playcount: 0.05,
            seed: 0,
        }
    }
}

/// `YYYY-MM-DD` of a UTC timestamp.
pub fn civil_date(secs: i64) -> String {
    let z = secs.div_euclid(DAY) + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let day = doy - (153 * mp + 2) / 5 + 1;
    let month = if mp < 10 { mp + 3 } else { mp - 9 };
    let year = yoe + era * 400 + i64::from(month <= 2);
    format!("{year:04}-{month:02}-{day:02}")
}

fn weighted(weights: &[f64], n: usize, what: &str) -> Result<WeightedIndex<f64>> {
    if weights.len() != n {
        return Err(Error::InvalidParameter(format!("{what} weights need {n} entries")));
    }
    WeightedIndex::new(weights).map_err(|e| Error::InvalidParameter(format!("{what} weights: {e}")))
}

/// Concerts spread evenly over days, then round-robin over stages in
/// fixed-length slots, so windows on one stage never overlap.
pub fn gen_schedule(spec: &ScheduleSpec) -> Result<Vec<Concert>> {
    if spec.stages.is_empty() || spec.days == 0 {
        return Err(Error::InvalidParameter("a schedule needs at least one stage and one day".into()));
    }
    let genres = weighted(&spec.genre_weights, Genre::ALL.len(), "genre")?;
    let origins = weighted(&spec.origin_weights, Origin::ALL.len(), "origin")?;
    let playcount = LogNormal::new(spec.playcount_mu, spec.playcount_sigma)
        .map_err(|e| Error::InvalidParameter(format!("playcount distribution: {e}")))?;
    if !(0.0..=1.0).contains(&spec.missing_playcount) {
        return Err(Error::InvalidParameter("missing playcount share outside [0, 1]".into()));
    }
    let n_stages = spec.stages.len();
    let mut rng = seeded(spec.seed);
    let concerts: Vec<Concert> = (0..spec.num_concerts)
        .map(|k| {
            let day = k * spec.days / spec.num_concerts;
            let first_of_day = (day * spec.num_concerts).div_ceil(spec.days);
            let r = k - first_of_day;
            let (slot, stage) = (r / n_stages, &spec.stages[r % n_stages]);
            let start_time =
                spec.first_day + day as i64 * DAY + spec.first_slot_hour * 3600 + slot as i64 * spec.slot_secs;
            let plays = if rng.random_bool(spec.missing_playcount) {
                0
            } else {
                libm::round(playcount.sample(&mut rng)).max(1.0) as u64
            };
            Concert {
                concert_id: k as u32 + 1,
                band: format!("Band {:03}", k + 1),
                stage: stage.name.clone(),
                start_time,
                date: civil_date(start_time),
                genre: Genre::ALL[genres.sample(&mut rng)],
                origin: Origin::ALL[origins.sample(&mut rng)],
                playcount: plays,
                stage_size: stage.size,
            }
        })
        .collect();
    validate_schedule(&concerts, AttendanceWindow::default(), None)?;
    Ok(concerts)
}

/// Scanner ids from 1, stage by stage.
pub fn gen_scanner_map(stages: &[StageSpec]) -> ScannerMap {
    let mut scanners = Vec::new();
    for s in stages {
        for k in 0..s.scanners.max(1) {
            scanners.push(ScannerInfo {
                id: scanners.len() as u32 + 1,
                stage: s.name.clone(),
                location: format!("{} #{}", s.name, k + 1),
            });
        }
    }
    ScannerMap { scanners }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VendorShare {
    pub prefix: u32,
    pub vendor: String,
    pub share: f64,
}

/// Fifteen vendors; the seven largest cover 96% of devices.
pub fn vendor_mix() -> Vec<VendorShare> {
    let major = [0.38, 0.21, 0.14, 0.09, 0.06, 0.05, 0.03];
    let mut mix: Vec<VendorShare> = major
        .iter()
        .enumerate()
        .map(|(k, &share)| VendorShare {
            prefix: 0x0010_0000 + 0x1111 * k as u32,
            vendor: format!("Vendor {}", (b'A' + k as u8) as char),
            share,
        })
        .collect();
    for k in 0..8u32 {
        mix.push(VendorShare { prefix: 0x00A0_0000 + 0x0203 * k, vendor: format!("Minor vendor {}", k + 1), share: 0.005 });
    }
    mix
}

pub fn oui_table(mix: &[VendorShare]) -> OuiTable {
    let mut t = OuiTable::new();
    for v in mix {
        t.insert(v.prefix, v.vendor.clone());
    }
    t
}

/// Distinct hardware addresses with vendor prefixes drawn from `mix`.
pub fn gen_macs<R: Rng + ?Sized>(n: usize, mix: &[VendorShare], rng: &mut R) -> Result<Vec<MacAddress>> {
    let shares: Vec<f64> = mix.iter().map(|v| v.share).collect();
    let pick = WeightedIndex::new(&shares).map_err(|e| Error::InvalidParameter(format!("vendor shares: {e}")))?;
    let mut seen = BTreeSet::new();
    let mut macs = Vec::with_capacity(n);
    while macs.len() < n {
        let prefix = mix[pick.sample(rng)].prefix;
        let low: u32 = rng.random_range(0..1 << 24);
        let b = |x: u32, s: u32| (x >> s) as u8;
        let mac = MacAddress([b(prefix, 16), b(prefix, 8), b(prefix, 0), b(low, 16), b(low, 8), b(low, 0)]);
        if seen.insert(mac) {
            macs.push(mac);
        }
    }
    Ok(macs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanLogSpec {
    /// Mean of the Poisson number of scans per attended concert.
    pub scans_mean: f64,
    /// Chance of a single stray scan at a concert the participant skipped.
    pub walk_by_rate: f64,
    pub seed: u64,
}

impl Default for ScanLogSpec {
    fn default() -> Self {
        Self { scans_mean: 4.0, walk_by_rate: 0.02, seed: 0 }
    }
}

/// Raw scans for a participant×concert matrix: `concerts[j]` is column `j`,
/// `macs[i]` is row `i`. Scans fall uniformly inside the attendance window
/// at one of the stage's scanners. Sorted by (timestamp, scanner, address).
pub fn gen_scan_log(
    planted: &crate::attendance::BinaryAttendance,
    concerts: &[Concert],
    scanners: &ScannerMap,
    macs: &[MacAddress],
    spec: &ScanLogSpec,
) -> Result<Vec<RawScanRecord>> {
    if concerts.len() != planted.n_cols() || macs.len() != planted.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} concerts and {} addresses for a {}×{} matrix",
            concerts.len(),
            macs.len(),
            planted.n_rows(),
            planted.n_cols()
        )));
    }
    let scans = Poisson::new(spec.scans_mean).map_err(|e| Error::InvalidParameter(format!("scan rate: {e}")))?;
    if !(0.0..=1.0).contains(&spec.walk_by_rate) {
        return Err(Error::InvalidParameter("walk-by rate outside [0, 1]".into()));
    }
    let stage_scanners: Vec<Vec<u32>> = concerts
        .iter()
        .map(|c| {
            let ids: Vec<u32> = scanners.scanners.iter().filter(|s| s.stage == c.stage).map(|s| s.id).collect();
            if ids.is_empty() {
                Err(Error::InvalidSchedule(format!("stage `{}` has no scanner", c.stage)))
            } else {
                Ok(ids)
            }
        })
        .collect::<Result<_>>()?;
    let window = AttendanceWindow::default();
    let mut records = Vec::new();
    for (i, mac) in macs.iter().enumerate() {
        let mut rng = seeded(derive_seed(spec.seed, i as u64));
        for (j, c) in concerts.iter().enumerate() {
            let n = if planted.get(i, j) {
                scans.sample(&mut rng) as u64
            } else {
                u64::from(rng.random_bool(spec.walk_by_rate))
            };
            for _ in 0..n {
                let ids = &stage_scanners[j];
                records.push(RawScanRecord {
                    timestamp: rng.random_range(c.start_time - window.before_secs..=c.start_time + window.after_secs),
                    scanner_id: ids[rng.random_range(0..ids.len())],
                    mac: *mac,
                });
            }
        }
    }
    records.sort_by(|a, b| (a.timestamp, a.scanner_id, a.mac).cmp(&(b.timestamp, b.scanner_id, b.mac)));
    Ok(records)
}

/// A complete synthetic festival.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FestivalSpec {
    pub planted: PlantedBipartiteSpec,
    /// `num_concerts` is taken from `planted.cols`.
    pub schedule: ScheduleSpec,
    pub scan_log: ScanLogSpec,
    pub seed: u64,
}

impl Default for FestivalSpec {
    fn default() -> Self {
        Self {
            planted: PlantedBipartiteSpec::default(),
            schedule: ScheduleSpec { days: 2, ..Default::default() },
            scan_log: ScanLogSpec::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Festival {
    pub schedule: Vec<Concert>,
    pub scanners: ScannerMap,
    pub oui: OuiTable,
    pub macs: Vec<MacAddress>,
    pub records: Vec<RawScanRecord>,
    pub planted: PlantedBipartite,
}

/// Planted attendance, schedule, scanners, vendors and scan log, each from its
/// own stream of `spec.seed`.
pub fn gen_festival(spec: &FestivalSpec) -> Result<Festival> {
    let planted = gen_bipartite(&PlantedBipartiteSpec { seed: derive_seed(spec.seed, 0), ..spec.planted.clone() })?;
    let schedule = gen_schedule(&ScheduleSpec {
        num_concerts: spec.planted.cols,
        seed: derive_seed(spec.seed, 1),
        ..spec.schedule.clone()
    })?;
    let scanners = gen_scanner_map(&spec.schedule.stages);
    let mix = vendor_mix();
    let macs = gen_macs(spec.planted.rows, &mix, &mut seeded(derive_seed(spec.seed, 2)))?;
    let records = gen_scan_log(
        &planted.attendance,
        &schedule,
        &scanners,
        &macs,
        &ScanLogSpec { seed: derive_seed(spec.seed, 3), ..spec.scan_log.clone() },
    )?;
    Ok(Festival { schedule, scanners, oui: oui_table(&mix), macs, records, planted })
}
