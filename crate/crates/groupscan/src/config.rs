//! Pipeline configuration: one TOML file with a section per stage.

use std::fs;
use std::path::{Path, PathBuf};

use groupscan_core::attendance::{AttendanceWindow, OutlierRules};
use groupscan_core::eval::{EnrichmentConfig, Feature};
use groupscan_core::irm::{Concentration, IrmConfig};
use groupscan_core::microgroups::EdgeThresholds;
use groupscan_core::rng::derive_seed;
use groupscan_core::synth::FestivalSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Sub-stream of the master seed used by each stochastic stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Irm = 1,
    Robustness = 2,
    Micro = 3,
    Synth = 4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Raw scan log, `.csv` or `.jsonl`.
    pub events: PathBuf,
    pub schedule: PathBuf,
    pub scanners: PathBuf,
    pub oui: PathBuf,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            events: "scans.csv".into(),
            schedule: "schedule.json".into(),
            scanners: "scanners.json".into(),
            oui: "oui.tsv".into(),
            output: "out".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestParams {
    /// Key for device-id hashing.
    pub salt: String,
}

impl Default for IngestParams {
    fn default() -> Self {
        Self { salt: "groupscan".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttendanceParams {
    pub threshold: u32,
    pub before_secs: i64,
    pub after_secs: i64,
    pub min_concerts: usize,
    pub stage_fraction: f64,
    pub stage_dominance: f64,
}

impl Default for AttendanceParams {
    fn default() -> Self {
        let w = AttendanceWindow::default();
        let r = OutlierRules::default();
        Self {
            threshold: 2,
            before_secs: w.before_secs,
            after_secs: w.after_secs,
            min_concerts: r.min_concerts,
            stage_fraction: r.stage_fraction,
            stage_dominance: r.stage_dominance,
        }
    }
}

impl AttendanceParams {
    pub fn window(&self) -> AttendanceWindow {
        AttendanceWindow { before_secs: self.before_secs, after_secs: self.after_secs }
    }

    pub fn outlier_rules(&self) -> OutlierRules {
        OutlierRules {
            min_concerts: self.min_concerts,
            stage_fraction: self.stage_fraction,
            stage_dominance: self.stage_dominance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrmParams {
    pub beta: f64,
    pub alpha_row: Concentration,
    pub alpha_col: Concentration,
    pub sweeps: usize,
    pub split_merge_per_sweep: usize,
    pub restricted_sweeps: usize,
    /// Independent chains; the best final state is kept.
    pub restarts: usize,
}

impl Default for IrmParams {
    fn default() -> Self {
        let c = IrmConfig::default();
        Self {
            beta: c.beta,
            alpha_row: c.alpha_row,
            alpha_col: c.alpha_col,
            sweeps: c.sweeps,
            split_merge_per_sweep: c.split_merge_per_sweep,
            restricted_sweeps: c.restricted_sweeps,
            restarts: 10,
        }
    }
}

impl IrmParams {
    pub fn irm_config(&self, seed: u64) -> IrmConfig {
        IrmConfig {
            beta: self.beta,
            alpha_row: self.alpha_row,
            alpha_col: self.alpha_col,
            sweeps: self.sweeps,
            split_merge_per_sweep: self.split_merge_per_sweep,
            restricted_sweeps: self.restricted_sweeps,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicroParams {
    pub bin_width: i64,
    /// Bin origin; the hour floor of the earliest event when absent.
    pub t0: Option<i64>,
    pub min_temporal: usize,
    pub min_spatial: usize,
    pub merge_duplicates: bool,
    pub min_weight: f64,
    pub min_locations: u32,
    pub min_co: u32,
    pub trials: usize,
    /// Successful swaps per incidence in each null-model trial.
    pub swap_factor: usize,
    /// In-degree at which a node with no out-edges is flagged as a star.
    pub star_min_in: usize,
}

impl Default for MicroParams {
    fn default() -> Self {
        let t = EdgeThresholds::default();
        Self {
            bin_width: 600,
            t0: None,
            min_temporal: 10,
            min_spatial: 3,
            merge_duplicates: true,
            min_weight: t.min_weight,
            min_locations: t.min_locations,
            min_co: t.min_co,
            trials: 35,
            swap_factor: 10,
            star_min_in: 5,
        }
    }
}

impl MicroParams {
    pub fn thresholds(&self) -> EdgeThresholds {
        EdgeThresholds { min_weight: self.min_weight, min_locations: self.min_locations, min_co: self.min_co }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    pub runs: usize,
    pub fraction: f64,
    pub alpha_sig: f64,
    pub top_k: usize,
    pub features: Vec<Feature>,
}

impl Default for EvalParams {
    fn default() -> Self {
        let e = EnrichmentConfig::default();
        Self { runs: 110, fraction: 0.025, alpha_sig: e.alpha_sig, top_k: e.top_k, features: e.features }
    }
}

impl EvalParams {
    pub fn enrichment(&self) -> EnrichmentConfig {
        EnrichmentConfig { features: self.features.clone(), alpha_sig: self.alpha_sig, top_k: self.top_k }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every stochastic stage draws from its own stream of it.
    pub seed: u64,
    pub paths: Paths,
    pub ingest: IngestParams,
    pub attendance: AttendanceParams,
    pub irm: IrmParams,
    pub micro: MicroParams,
    pub eval: EvalParams,
    pub synth: FestivalSpec,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(CliError::MissingInput(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_toml(&text).map_err(|e| CliError::Config(vec![e]))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.paths.resolve_against(base);
        Ok(config)
    }

    pub fn stream_seed(&self, stream: Stream) -> u64 {
        derive_seed(self.seed, stream as u64)
    }

    /// Every problem with the parameters, in section order.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let mut check = |section: &str, ok: bool, msg: String| {
            if !ok {
                errors.push(format!("{section}: {msg}"));
            }
        };

        check("ingest.salt", !self.ingest.salt.is_empty(), "must not be empty".into());

        let a = &self.attendance;
        check("attendance.threshold", a.threshold >= 1, format!("must be ≥ 1, got {}", a.threshold));
        check("attendance.before_secs", a.before_secs >= 0, format!("must be ≥ 0, got {}", a.before_secs));
        check("attendance.after_secs", a.after_secs >= 0, format!("must be ≥ 0, got {}", a.after_secs));
        check(
            "attendance.stage_fraction",
            (0.0..=1.0).contains(&a.stage_fraction),
            format!("must lie in [0, 1], got {}", a.stage_fraction),
        );
        check(
            "attendance.stage_dominance",
            a.stage_dominance >= 0.0 && a.stage_dominance.is_finite(),
            format!("must be ≥ 0, got {}", a.stage_dominance),
        );

        let i = &self.irm;
        if let Err(e) = i.irm_config(0).validate() {
            check("irm", false, e.to_string());
        }
        check("irm.sweeps", i.sweeps >= 1, "must be ≥ 1".into());
        check("irm.restarts", i.restarts >= 1, "must be ≥ 1".into());

        let m = &self.micro;
        check("micro.bin_width", m.bin_width > 0, format!("must be positive, got {}", m.bin_width));
        check(
            "micro.min_weight",
            (0.0..=1.0).contains(&m.min_weight),
            format!("must lie in [0, 1], got {}", m.min_weight),
        );
        check("micro.trials", m.trials >= 1, "must be ≥ 1".into());

        let e = &self.eval;
        check("eval.runs", e.runs >= 2, format!("must be ≥ 2, got {}", e.runs));
        check(
            "eval.fraction",
            e.fraction > 0.0 && e.fraction < 1.0,
            format!("must lie in (0, 1), got {}", e.fraction),
        );
        if let Err(err) = e.enrichment().validate() {
            check("eval", false, err.to_string());
        }
        check("eval.features", !e.features.is_empty(), "must name at least one feature".into());

        let s = &self.synth;
        if let Err(err) = s.planted.validate() {
            check("synth.planted", false, err.to_string());
        }
        check("synth.schedule.days", s.schedule.days >= 1, "must be ≥ 1".into());
        check("synth.schedule.stages", !s.schedule.stages.is_empty(), "must list at least one stage".into());
        check(
            "synth.scan_log.scans_mean",
            s.scan_log.scans_mean > 0.0 && s.scan_log.scans_mean.is_finite(),
            format!("must be positive, got {}", s.scan_log.scans_mean),
        );
        check(
            "synth.scan_log.walk_by_rate",
            (0.0..=1.0).contains(&s.scan_log.walk_by_rate),
            format!("must lie in [0, 1], got {}", s.scan_log.walk_by_rate),
        );
        errors
    }

    /// SHA-256 of the analysis parameters and seed as canonical JSON. File
    /// locations are left out, so moving inputs or outputs keeps the hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.paths = Paths::default();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl Paths {
    fn resolve_against(&mut self, base: &Path) {
        for p in [&mut self.events, &mut self.schedule, &mut self.scanners, &mut self.oui, &mut self.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = PipelineConfig::from_toml("").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert!(c.validate().is_empty());
        assert_eq!(c.attendance.threshold, 2);
        assert_eq!(c.micro.trials, 35);
        assert_eq!(c.eval.runs, 110);
    }

    #[test]
    fn sections_parse() {
        let c = PipelineConfig::from_toml(
            r#"
            seed = 9
            [irm]
            alpha_row = "auto"
            alpha_col = 0.5
            sweeps = 20
            [eval]
            features = ["genre", "stage"]
            [synth.planted]
            rows = 50
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.irm.alpha_col, Concentration::Value(0.5));
        assert_eq!(c.irm.alpha_row, Concentration::Auto);
        assert_eq!(c.eval.features, vec![Feature::Genre, Feature::Stage]);
        assert_eq!(c.synth.planted.rows, 50);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_toml("[irm]\nsweep = 3").is_err());
        assert!(PipelineConfig::from_toml("colour = 1").is_err());
    }

    #[test]
    fn every_error_reported() {
        let c = PipelineConfig::from_toml(
            r#"
            [ingest]
            salt = ""
            [attendance]
            threshold = 0
            [irm]
            beta = -1.0
            [eval]
            runs = 1
            fraction = 1.5
            "#,
        )
        .unwrap();
        let errors = c.validate();
        assert_eq!(errors.len(), 5, "{errors:#?}");
        assert!(errors[0].starts_with("ingest.salt"));
        assert!(errors.iter().any(|e| e.starts_with("eval.fraction")));
    }

    #[test]
    fn hash_ignores_paths_but_not_seed() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.paths.output = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "[paths]\nevents = \"data/scans.csv\"\noutput = \"/abs/out\"").unwrap();
        let c = PipelineConfig::load(&path).unwrap();
        assert_eq!(c.paths.events, dir.path().join("data/scans.csv"));
        assert_eq!(c.paths.output, PathBuf::from("/abs/out"));
    }

    #[test]
    fn streams_differ() {
        let c = PipelineConfig::default();
        assert_ne!(c.stream_seed(Stream::Irm), c.stream_seed(Stream::Micro));
    }
}
