//! Scan records, device anonymization, vendor lookup and dataset summaries.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use hmac::{Hmac, KeyInit, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::error::{Error, Result};

/// A 48-bit hardware address.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MacAddress(pub [u8; 6]);

impl MacAddress {
    /// The 24-bit organizationally unique identifier.
    pub fn oui(&self) -> u32 {
        (u32::from(self.0[0]) << 16) | (u32::from(self.0[1]) << 8) | u32::from(self.0[2])
    }
}

impl FromStr for MacAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = [0u8; 6];
        let mut parts = s.trim().split(':');
        for byte in out.iter_mut() {
            let part = parts.next().ok_or_else(|| Error::InvalidMac(s.to_string()))?;
            if part.len() != 2 {
                return Err(Error::InvalidMac(s.to_string()));
            }
            *byte = u8::from_str_radix(part, 16).map_err(|_| Error::InvalidMac(s.to_string()))?;
        }
        if parts.next().is_some() {
            return Err(Error::InvalidMac(s.to_string()));
        }
        Ok(MacAddress(out))
    }
}

impl fmt::Display for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(
            f,
            "{:02X}:{:02X}:{:02X}:{:02X}:{:02X}:{:02X}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

impl Serialize for MacAddress {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MacAddress {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One line of a raw scan log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawScanRecord {
    pub timestamp: i64,
    pub scanner_id: u32,
    pub mac: MacAddress,
}

/// Opaque anonymized device identifier (16 lowercase hex characters).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub String);

impl DeviceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An anonymized sighting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanEvent {
    pub timestamp: i64,
    pub scanner_id: u32,
    pub device_id: DeviceId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vendor: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScannerInfo {
    pub id: u32,
    pub stage: String,
    pub location: String,
}

/// Scanner placement: which stage (and spot) each scanner covers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScannerMap {
    pub scanners: Vec<ScannerInfo>,
}

impl ScannerMap {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for s in &self.scanners {
            if !seen.insert(s.id) {
                return Err(Error::InvalidParameter(format!("duplicate scanner id {}", s.id)));
            }
        }
        Ok(())
    }

    pub fn stage_of(&self, scanner_id: u32) -> Option<&str> {
        self.scanners.iter().find(|s| s.id == scanner_id).map(|s| s.stage.as_str())
    }

    /// Scanner id → stage label lookup table.
    pub fn stage_index(&self) -> BTreeMap<u32, &str> {
        self.scanners.iter().map(|s| (s.id, s.stage.as_str())).collect()
    }

    pub fn stages(&self) -> BTreeSet<&str> {
        self.scanners.iter().map(|s| s.stage.as_str()).collect()
    }
}

/// OUI prefix → vendor label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OuiTable {
    entries: BTreeMap<u32, String>,
}

impl OuiTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prefix: u32, vendor: impl Into<String>) {
        self.entries.insert(prefix & 0x00ff_ffff, vendor.into());
    }

    pub fn get(&self, prefix: u32) -> Option<&str> {
        self.entries.get(&prefix).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.entries.iter().map(|(k, v)| (*k, v.as_str()))
    }
}

/// Keyed one-way device identifier: HMAC-SHA256 of the address under `salt`,
/// truncated to 64 bits and hex encoded.
pub fn anonymize(mac: &MacAddress, salt: &[u8]) -> Result<DeviceId> {
    if salt.is_empty() {
        return Err(Error::EmptySalt);
    }
    let mut mac_fn =
        <Hmac<Sha256> as KeyInit>::new_from_slice(salt).map_err(|_| Error::EmptySalt)?;
    mac_fn.update(&mac.0);
    let digest = mac_fn.finalize().into_bytes();
    let mut id = String::with_capacity(16);
    for b in &digest[..8] {
        use core::fmt::Write;
        let _ = write!(id, "{b:02x}");
    }
    Ok(DeviceId(id))
}

pub fn extract_vendor<'a>(mac: &MacAddress, table: &'a OuiTable) -> Option<&'a str> {
    table.get(mac.oui())
}

/// Anonymizes a raw record, attaching its vendor label when known.
pub fn to_event(record: &RawScanRecord, salt: &[u8], table: &OuiTable) -> Result<ScanEvent> {
    Ok(ScanEvent {
        timestamp: record.timestamp,
        scanner_id: record.scanner_id,
        device_id: anonymize(&record.mac, salt)?,
        vendor: extract_vendor(&record.mac, table).map(str::to_string),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScannerSummary {
    pub observations: u64,
    pub unique_devices: u64,
    /// Devices seen by this scanner and no other.
    pub exclusive_devices: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VendorCount {
    pub devices: u64,
    pub observations: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total_observations: u64,
    pub unique_devices: u64,
    pub mean_obs_per_device: f64,
    pub per_scanner: BTreeMap<u32, ScannerSummary>,
    pub vendor_histogram: BTreeMap<String, VendorCount>,
}

impl DatasetSummary {
    /// Share of unique devices covered by the `k` vendors with most devices.
    pub fn top_vendor_share(&self, k: usize) -> f64 {
        if self.unique_devices == 0 {
            return 0.0;
        }
        let mut counts: Vec<u64> = self.vendor_histogram.values().map(|v| v.devices).collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        counts.iter().take(k).sum::<u64>() as f64 / self.unique_devices as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct DeviceTally {
    per_scanner: BTreeMap<u32, u64>,
    vendor: Option<String>,
}

/// Mergeable per-device tallies; [`SummaryAccumulator::finish`] turns them
/// into a [`DatasetSummary`]. `merge` is associative and commutative, so a
/// log can be summarized shard by shard.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SummaryAccumulator {
    devices: BTreeMap<DeviceId, DeviceTally>,
}

impl SummaryAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: &ScanEvent) {
        let tally = self.devices.entry(event.device_id.clone()).or_default();
        *tally.per_scanner.entry(event.scanner_id).or_insert(0) += 1;
        if tally.vendor.is_none() {
            tally.vendor.clone_from(&event.vendor);
        }
    }

    pub fn merge(mut self, other: SummaryAccumulator) -> SummaryAccumulator {
        for (id, theirs) in other.devices {
            let ours = self.devices.entry(id).or_default();
            for (scanner, n) in theirs.per_scanner {
                *ours.per_scanner.entry(scanner).or_insert(0) += n;
            }
            // Vendor is a function of the address, so any non-empty label agrees.
            if ours.vendor.is_none() {
                ours.vendor = theirs.vendor;
            }
        }
        self
    }

    pub fn finish(&self) -> DatasetSummary {
        let mut summary = DatasetSummary::default();
        for tally in self.devices.values() {
            let device_obs: u64 = tally.per_scanner.values().sum();
            summary.total_observations += device_obs;
            summary.unique_devices += 1;
            let exclusive = tally.per_scanner.len() == 1;
            for (&scanner, &n) in &tally.per_scanner {
                let s = summary.per_scanner.entry(scanner).or_default();
                s.observations += n;
                s.unique_devices += 1;
                if exclusive {
                    s.exclusive_devices += 1;
                }
            }
            if let Some(v) = &tally.vendor {
                let h = summary.vendor_histogram.entry(v.clone()).or_default();
                h.devices += 1;
                h.observations += device_obs;
            }
        }
        if summary.unique_devices > 0 {
            summary.mean_obs_per_device =
                summary.total_observations as f64 / summary.unique_devices as f64;
        }
        summary
    }
}

pub fn summarize<'a>(events: impl IntoIterator<Item = &'a ScanEvent>) -> DatasetSummary {
    let mut acc = SummaryAccumulator::new();
    for e in events {
        acc.push(e);
    }
    acc.finish()
}
