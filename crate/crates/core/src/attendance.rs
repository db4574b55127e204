//! From scan events and a concert schedule to the binary participant×concert
//! attendance matrix.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ScanEvent, ScannerMap};
use crate::special;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Genre {
    #[serde(rename = "electronic")]
    Electronic,
    #[serde(rename = "rock/pop")]
    RockPop,
    #[serde(rename = "folk/world")]
    FolkWorld,
    #[serde(rename = "hip-hop/rap")]
    HipHopRap,
    #[serde(rename = "metal/punk/hardcore")]
    MetalPunkHardcore,
    #[serde(rename = "other")]
    Other,
}

impl Genre {
    pub const ALL: [Genre; 6] = [
        Genre::Electronic,
        Genre::RockPop,
        Genre::FolkWorld,
        Genre::HipHopRap,
        Genre::MetalPunkHardcore,
        Genre::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Genre::Electronic => "electronic",
            Genre::RockPop => "rock/pop",
            Genre::FolkWorld => "folk/world",
            Genre::HipHopRap => "hip-hop/rap",
            Genre::MetalPunkHardcore => "metal/punk/hardcore",
            Genre::Other => "other",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Origin {
    Denmark,
    #[serde(rename = "Other Nordic")]
    OtherNordic,
    #[serde(rename = "USA")]
    Usa,
    #[serde(rename = "Western Europe")]
    WesternEurope,
    Other,
}

impl Origin {
    pub const ALL: [Origin; 5] = [
        Origin::Denmark,
        Origin::OtherNordic,
        Origin::Usa,
        Origin::WesternEurope,
        Origin::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Origin::Denmark => "Denmark",
            Origin::OtherNordic => "Other Nordic",
            Origin::Usa => "USA",
            Origin::WesternEurope => "Western Europe",
            Origin::Other => "Other",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageSize {
    Small,
    Medium,
    Big,
}

impl StageSize {
    pub fn label(self) -> &'static str {
        match self {
            StageSize::Small => "small",
            StageSize::Medium => "medium",
            StageSize::Big => "big",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concert {
    pub concert_id: u32,
    pub band: String,
    pub stage: String,
    /// UTC seconds.
    pub start_time: i64,
    /// ISO-8601 calendar day.
    pub date: String,
    pub genre: Genre,
    pub origin: Origin,
    pub playcount: u64,
    pub stage_size: StageSize,
}

/// Offsets around a concert's start during which scans count as attendance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttendanceWindow {
    pub before_secs: i64,
    pub after_secs: i64,
}

impl Default for AttendanceWindow {
    /// Ten minutes before the start until one hour 45 minutes after it.
    fn default() -> Self {
        Self { before_secs: 600, after_secs: 6300 }
    }
}

impl AttendanceWindow {
    pub fn contains(&self, start: i64, t: i64) -> bool {
        t >= start - self.before_secs && t <= start + self.after_secs
    }
}

/// Checks concert id uniqueness, per-stage window disjointness and, when a
/// scanner map is given, that every scheduled stage has a scanner.
pub fn validate_schedule(
    schedule: &[Concert],
    window: AttendanceWindow,
    scanners: Option<&ScannerMap>,
) -> Result<()> {
    let mut ids = BTreeSet::new();
    for c in schedule {
        if !ids.insert(c.concert_id) {
            return Err(Error::InvalidSchedule(format!("duplicate concert id {}", c.concert_id)));
        }
    }
    for (stage, concerts) in by_stage(schedule) {
        for pair in concerts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b.start_time - window.before_secs <= a.start_time + window.after_secs {
                return Err(Error::InvalidSchedule(format!(
                    "attendance windows of concerts {} and {} overlap on stage {stage}",
                    a.concert_id, b.concert_id
                )));
            }
        }
    }
    if let Some(map) = scanners {
        let stages = map.stages();
        for c in schedule {
            if !stages.contains(c.stage.as_str()) {
                return Err(Error::InvalidSchedule(format!(
                    "stage {} of concert {} has no scanner",
                    c.stage, c.concert_id
                )));
            }
        }
    }
    Ok(())
}

fn by_stage(schedule: &[Concert]) -> BTreeMap<&str, Vec<&Concert>> {
    let mut out: BTreeMap<&str, Vec<&Concert>> = BTreeMap::new();
    for c in schedule {
        out.entry(c.stage.as_str()).or_default().push(c);
    }
    for list in out.values_mut() {
        list.sort_by_key(|c| (c.start_time, c.concert_id));
    }
    out
}

/// Per-participant scan counts at each concert.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountMatrix {
    pub participants: Vec<String>,
    pub concerts: Vec<u32>,
    /// Sparse rows of `(concert index, count)`, sorted by concert index.
    pub rows: Vec<Vec<(u32, u32)>>,
}

impl CountMatrix {
    pub fn get(&self, i: usize, j: usize) -> u32 {
        let row = &self.rows[i];
        match row.binary_search_by_key(&(j as u32), |&(c, _)| c) {
            Ok(k) => row[k].1,
            Err(_) => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountStats {
    pub counted: u64,
    pub outside_windows: u64,
    pub unknown_scanner: u64,
}

/// Assigns each event to the concert whose window on the scanner's stage
/// contains it. Participants are devices with at least one counted event,
/// sorted by id; concerts are sorted by id.
pub fn build_count_matrix(
    events: &[ScanEvent],
    schedule: &[Concert],
    scanners: &ScannerMap,
    window: AttendanceWindow,
) -> Result<(CountMatrix, CountStats)> {
    validate_schedule(schedule, window, None)?;
    scanners.validate()?;
    let mut concerts: Vec<u32> = schedule.iter().map(|c| c.concert_id).collect();
    concerts.sort_unstable();
    let column: BTreeMap<u32, u32> =
        concerts.iter().enumerate().map(|(j, &id)| (id, j as u32)).collect();
    let stages = by_stage(schedule);
    let stage_of = scanners.stage_index();

    let mut stats = CountStats::default();
    let mut cells: BTreeMap<&str, BTreeMap<u32, u32>> = BTreeMap::new();
    for e in events {
        let Some(stage) = stage_of.get(&e.scanner_id) else {
            stats.unknown_scanner += 1;
            continue;
        };
        let hit = stages.get(stage).and_then(|list| {
            // last concert starting no later than t + before
            let k = list.partition_point(|c| c.start_time - window.before_secs <= e.timestamp);
            k.checked_sub(1)
                .map(|k| list[k])
                .filter(|c| window.contains(c.start_time, e.timestamp))
        });
        match hit {
            Some(c) => {
                stats.counted += 1;
                *cells
                    .entry(e.device_id.as_str())
                    .or_default()
                    .entry(column[&c.concert_id])
                    .or_insert(0) += 1;
            }
            None => stats.outside_windows += 1,
        }
    }
    let mut participants = Vec::with_capacity(cells.len());
    let mut rows = Vec::with_capacity(cells.len());
    for (dev, row) in cells {
        participants.push(dev.to_string());
        rows.push(row.into_iter().collect());
    }
    Ok((CountMatrix { participants, concerts, rows }, stats))
}

/// Sparse boolean participant×concert matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryAttendance {
    participants: Vec<String>,
    concerts: Vec<u32>,
    rows: Vec<Vec<u32>>,
    threshold_used: u32,
}

impl BinaryAttendance {
    /// Builds a matrix from per-row column index lists (sorted and
    /// deduplicated here).
    pub fn new(
        participants: Vec<String>,
        concerts: Vec<u32>,
        mut rows: Vec<Vec<u32>>,
        threshold_used: u32,
    ) -> Result<Self> {
        if participants.len() != rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} participant labels for {} rows",
                participants.len(),
                rows.len()
            )));
        }
        let n_cols = concerts.len() as u32;
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            if row.last().is_some_and(|&j| j >= n_cols) {
                return Err(Error::DimensionMismatch(format!(
                    "column index {} out of range for {} concerts",
                    row.last().unwrap(),
                    n_cols
                )));
            }
        }
        Ok(Self { participants, concerts, rows, threshold_used })
    }

    /// Unlabeled matrix from dense booleans; rows are labelled `p<i>` and
    /// columns `0..J`.
    pub fn from_dense(dense: &[Vec<bool>]) -> Result<Self> {
        let n_cols = dense.first().map_or(0, Vec::len);
        let rows = dense
            .iter()
            .map(|r| {
                if r.len() != n_cols {
                    return Err(Error::DimensionMismatch("ragged dense matrix".into()));
                }
                Ok(r.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j as u32).collect())
            })
            .collect::<Result<Vec<Vec<u32>>>>()?;
        Self::new(
            (0..dense.len()).map(|i| format!("p{i}")).collect(),
            (0..n_cols as u32).collect(),
            rows,
            1,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.concerts.len()
    }

    pub fn participants(&self) -> &[String] {
        &self.participants
    }

    pub fn concerts(&self) -> &[u32] {
        &self.concerts
    }

    pub fn threshold_used(&self) -> u32 {
        self.threshold_used
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&(j as u32)).is_ok()
    }

    pub fn num_links(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Row indices linked to each column, sorted.
    pub fn columns(&self) -> Vec<Vec<u32>> {
        let mut cols = vec![Vec::new(); self.n_cols()];
        for (i, row) in self.rows.iter().enumerate() {
            for &j in row {
                cols[j as usize].push(i as u32);
            }
        }
        cols
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.n_cols()];
        for row in &self.rows {
            for &j in row {
                sums[j as usize] += 1;
            }
        }
        sums
    }

    /// `(row, col)` pairs of all links in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&j| (i as u32, j)))
    }

    /// Keeps only the rows whose index satisfies `keep`.
    pub fn retain_rows(&self, mut keep: impl FnMut(usize) -> bool) -> BinaryAttendance {
        let mut participants = Vec::new();
        let mut rows = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if keep(i) {
                participants.push(self.participants[i].clone());
                rows.push(row.clone());
            }
        }
        BinaryAttendance {
            participants,
            concerts: self.concerts.clone(),
            rows,
            threshold_used: self.threshold_used,
        }
    }

    /// Removes the given cells (row, col) from the link set.
    pub fn without_cells(&self, cells: impl IntoIterator<Item = (u32, u32)>) -> BinaryAttendance {
        let mut out = self.clone();
        for (i, j) in cells {
            let row = &mut out.rows[i as usize];
            if let Ok(k) = row.binary_search(&j) {
                row.remove(k);
            }
        }
        out
    }
}

pub fn binarize(counts: &CountMatrix, threshold: u32) -> Result<BinaryAttendance> {
    if threshold < 1 {
        return Err(Error::InvalidParameter("binarization threshold must be ≥ 1".into()));
    }
    let rows = counts
        .rows
        .iter()
        .map(|r| r.iter().filter(|&&(_, n)| n >= threshold).map(|&(j, _)| j).collect())
        .collect();
    BinaryAttendance::new(counts.participants.clone(), counts.concerts.clone(), rows, threshold)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierRules {
    /// Rows with fewer set entries are dropped.
    pub min_concerts: usize,
    /// Fraction of a stage's concerts that marks a stationary device.
    pub stage_fraction: f64,
    /// Required ratio of entries at that stage to entries elsewhere.
    pub stage_dominance: f64,
}

impl Default for OutlierRules {
    fn default() -> Self {
        Self { min_concerts: 3, stage_fraction: 0.70, stage_dominance: 2.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub removed_stationary: Vec<String>,
    pub removed_sparse: Vec<String>,
}

/// Drops stationary devices (rule b) and then participants with too few
/// concerts (rule a). Columns are never removed.
pub fn remove_outliers(
    a: &BinaryAttendance,
    schedule: &[Concert],
    rules: OutlierRules,
) -> (BinaryAttendance, OutlierReport) {
    let stage_by_id: BTreeMap<u32, &str> =
        schedule.iter().map(|c| (c.concert_id, c.stage.as_str())).collect();
    let mut stage_names: Vec<&str> = stage_by_id.values().copied().collect();
    stage_names.sort_unstable();
    stage_names.dedup();
    let col_stage: Vec<Option<usize>> = a
        .concerts()
        .iter()
        .map(|id| stage_by_id.get(id).map(|s| stage_names.binary_search(s).unwrap()))
        .collect();
    let mut held_at = vec![0usize; stage_names.len()];
    for s in col_stage.iter().flatten() {
        held_at[*s] += 1;
    }

    let mut report = OutlierReport::default();
    let mut per_stage = vec![0usize; stage_names.len()];
    let kept = a.retain_rows(|i| {
        let row = a.row(i);
        per_stage.iter_mut().for_each(|c| *c = 0);
        for &j in row {
            if let Some(s) = col_stage[j as usize] {
                per_stage[s] += 1;
            }
        }
        let total = row.len();
        let stationary = per_stage.iter().zip(&held_at).any(|(&at, &held)| {
            at > 0
                && at as f64 >= rules.stage_fraction * held as f64
                && at as f64 >= rules.stage_dominance * (total - at) as f64
        });
        if stationary {
            report.removed_stationary.push(a.participants()[i].clone());
            return false;
        }
        if total < rules.min_concerts {
            report.removed_sparse.push(a.participants()[i].clone());
            return false;
        }
        true
    });
    (kept, report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopularityCorrelation {
    /// `None` when either variable has zero variance or fewer than 3 concerts.
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
}

/// Pearson correlation between ln(playcount) and concert attendance, per
/// stage-size group. Concerts with zero playcount are left out.
pub fn popularity_correlation(
    schedule: &[Concert],
    a: &BinaryAttendance,
) -> BTreeMap<StageSize, PopularityCorrelation> {
    let by_id: BTreeMap<u32, &Concert> = schedule.iter().map(|c| (c.concert_id, c)).collect();
    let sums = a.column_sums();
    let mut groups: BTreeMap<StageSize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (j, id) in a.concerts().iter().enumerate() {
        let Some(c) = by_id.get(id) else { continue };
        if c.playcount == 0 {
            continue;
        }
        let g = groups.entry(c.stage_size).or_default();
        g.0.push(libm::log(c.playcount as f64));
        g.1.push(sums[j] as f64);
    }
    groups
        .into_iter()
        .map(|(size, (x, y))| {
            let n = x.len();
            let rho = if n >= 3 { special::pearson(&x, &y) } else { None };
            let p_value = rho.map(|r| {
                let df = (n - 2) as f64;
                if r.abs() >= 1.0 {
                    0.0
                } else {
                    special::student_t_two_sided(r * libm::sqrt(df / (1.0 - r * r)), df)
                }
            });
            (size, PopularityCorrelation { rho, p_value, n })
        })
        .collect()
}
