//! χ² goodness-of-fit of concert-cluster metadata against the whole schedule.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::attendance::Concert;
use crate::error::{Error, Result};
use crate::irm::Partition;
use crate::special::chi_squared_sf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Date,
    Genre,
    Origin,
    Stage,
}

impl Feature {
    pub const ALL: [Feature; 4] = [Feature::Date, Feature::Genre, Feature::Origin, Feature::Stage];

    pub fn label(self) -> &'static str {
        match self {
            Feature::Date => "date",
            Feature::Genre => "genre",
            Feature::Origin => "origin",
            Feature::Stage => "stage",
        }
    }

    pub fn category(self, c: &Concert) -> String {
        match self {
            Feature::Date => c.date.clone(),
            Feature::Genre => c.genre.label().to_string(),
            Feature::Origin => c.origin.label().to_string(),
            Feature::Stage => c.stage.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnrichmentConfig {
    pub features: Vec<Feature>,
    pub alpha_sig: f64,
    pub top_k: usize,
}

impl Default for EnrichmentConfig {
    fn default() -> Self {
        Self { features: Feature::ALL.to_vec(), alpha_sig: 0.05, top_k: 10 }
    }
}

impl EnrichmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_sig > 0.0 && self.alpha_sig < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha_sig {} outside (0, 1)", self.alpha_sig)));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidParameter("top_k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureTest {
    pub feature: Feature,
    /// Every category present in the schedule, sorted.
    pub categories: Vec<String>,
    pub observed: Vec<u64>,
    pub overall: Vec<u64>,
    pub expected: Vec<f64>,
    pub chi_squared: f64,
    pub df: usize,
    pub p_value: f64,
    pub significant: bool,
    /// Some included category has an expected count below 5.
    pub low_expected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterEnrichment {
    /// Position in the size-descending order.
    pub rank: usize,
    /// Cluster label in the partition.
    pub cluster: usize,
    pub size: usize,
    pub tests: Vec<FeatureTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCluster {
    pub rank: usize,
    pub cluster: usize,
    pub size: usize,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentReport {
    pub alpha_sig: f64,
    pub clusters: Vec<ClusterEnrichment>,
    pub skipped: Vec<SkippedCluster>,
}

impl EnrichmentReport {
    pub fn significant_count(&self, feature: Feature) -> usize {
        self.clusters
            .iter()
            .filter(|c| c.tests.iter().any(|t| t.feature == feature && t.significant))
            .count()
    }
}

/// Reorders `schedule` to follow `concert_ids` (the column order of the
/// attendance matrix).
pub fn align_schedule(schedule: &[Concert], concert_ids: &[u32]) -> Result<Vec<Concert>> {
    let by_id: BTreeMap<u32, &Concert> = schedule.iter().map(|c| (c.concert_id, c)).collect();
    concert_ids
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .map(|&c| c.clone())
                .ok_or_else(|| Error::InvalidSchedule(format!("concert {id} is not in the schedule")))
        })
        .collect()
}

/// Tests the `top_k` largest clusters of `cols` on each feature. `concerts[j]`
/// describes column `j`. Expected counts are `cluster size × overall share`;
/// categories with no concerts anywhere never appear, so every expected count
/// is positive.
pub fn chi_squared_enrichment(
    cols: &Partition,
    concerts: &[Concert],
    config: &EnrichmentConfig,
) -> Result<EnrichmentReport> {
    config.validate()?;
    if cols.len() != concerts.len() {
        return Err(Error::LengthMismatch { left: cols.len(), right: concerts.len() });
    }
    let total = concerts.len() as f64;
    let overall: Vec<(Feature, BTreeMap<String, u64>)> = config
        .features
        .iter()
        .map(|&f| {
            let mut h = BTreeMap::new();
            for c in concerts {
                *h.entry(f.category(c)).or_insert(0) += 1;
            }
            (f, h)
        })
        .collect();

    let mut clusters = Vec::new();
    let mut skipped = Vec::new();
    for (rank, cluster) in cols.order_by_size().into_iter().take(config.top_k).enumerate() {
        let members = cols.members(cluster);
        let size = members.len();
        if size < 2 {
            skipped.push(SkippedCluster { rank, cluster, size, note: "fewer than 2 concerts".into() });
            continue;
        }
        let tests = overall
            .iter()
            .map(|(feature, overall)| {
                let mut observed: BTreeMap<&str, u64> = overall.keys().map(|k| (k.as_str(), 0)).collect();
                for &j in &members {
                    *observed.get_mut(feature.category(&concerts[j]).as_str()).expect("category seen overall") += 1;
                }
                let categories: Vec<String> = overall.keys().cloned().collect();
                let observed: Vec<u64> = observed.into_values().collect();
                let overall: Vec<u64> = overall.values().copied().collect();
                let expected: Vec<f64> = overall.iter().map(|&n| size as f64 * n as f64 / total).collect();
                goodness_of_fit(*feature, categories, observed, overall, expected, config.alpha_sig)
            })
            .collect();
        clusters.push(ClusterEnrichment { rank, cluster, size, tests });
    }
    Ok(EnrichmentReport { alpha_sig: config.alpha_sig, clusters, skipped })
}

fn goodness_of_fit(
    feature: Feature,
    categories: Vec<String>,
    observed: Vec<u64>,
    overall: Vec<u64>,
    expected: Vec<f64>,
    alpha_sig: f64,
) -> FeatureTest {
    let mut chi_squared = 0.0;
    let mut included = 0usize;
    let mut low_expected = false;
    for (&o, &e) in observed.iter().zip(&expected) {
        if e > 0.0 {
            included += 1;
            low_expected |= e < 5.0;
            let d = o as f64 - e;
            chi_squared += d * d / e;
        }
    }
    let df = included.saturating_sub(1);
    let p_value = if df == 0 { 1.0 } else { chi_squared_sf(chi_squared, df as f64) };
    FeatureTest {
        feature,
        categories,
        observed,
        overall,
        expected,
        chi_squared,
        df,
        p_value,
        significant: p_value < alpha_sig,
        low_expected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attendance::{Genre, Origin, StageSize};

    fn concert(id: u32, genre: Genre, date: &str, stage: &str) -> Concert {
        Concert {
            concert_id: id,
            band: format!("band {id}"),
            stage: stage.into(),
            start_time: 0,
            date: date.into(),
            genre,
            origin: Origin::Denmark,
            playcount: 0,
            stage_size: StageSize::Small,
        }
    }

    /// 60 concerts, 10 per genre; cluster 0 holds the 10 electronic ones.
    fn uniform_genres() -> (Partition, Vec<Concert>) {
        let concerts: Vec<Concert> =
            (0..60).map(|k| concert(k, Genre::ALL[k as usize / 10], "2012-07-01", "A")).collect();
        let labels: Vec<usize> = (0..60).map(|k| usize::from(k >= 10)).collect();
        (Partition::from_labels(&labels), concerts)
    }

    #[test]
    fn all_one_genre_against_uniform() {
        let (cols, concerts) = uniform_genres();
        let cfg = EnrichmentConfig { features: alloc::vec![Feature::Genre], ..Default::default() };
        let r = chi_squared_enrichment(&cols, &concerts, &cfg).unwrap();
        let small = r.clusters.iter().find(|c| c.size == 10).unwrap();
        let t = &small.tests[0];
        assert!((t.chi_squared - 50.0).abs() < 1e-9);
        assert_eq!(t.df, 5);
        assert!(t.p_value < 0.001);
        assert!(t.significant);
        assert!(t.low_expected);
        assert_eq!(t.observed.iter().sum::<u64>(), 10);
    }

    #[test]
    fn matching_distribution_scores_zero() {
        let concerts: Vec<Concert> = (0..12).map(|k| concert(k, Genre::ALL[k as usize % 3], "d", "A")).collect();
        let labels: Vec<usize> = (0..12).map(|k| k / 6).collect();
        let r = chi_squared_enrichment(&Partition::from_labels(&labels), &concerts, &EnrichmentConfig::default())
            .unwrap();
        for c in &r.clusters {
            for t in &c.tests {
                assert_eq!(t.chi_squared, 0.0);
                assert!(!t.significant);
            }
        }
    }

    #[test]
    fn single_category_has_no_degrees_of_freedom() {
        let (cols, concerts) = uniform_genres();
        let r = chi_squared_enrichment(&cols, &concerts, &EnrichmentConfig::default()).unwrap();
        let date = r.clusters[0].tests.iter().find(|t| t.feature == Feature::Date).unwrap();
        assert_eq!(date.df, 0);
        assert_eq!(date.p_value, 1.0);
    }

    #[test]
    fn singletons_are_skipped_and_top_k_respected() {
        let concerts: Vec<Concert> = (0..6).map(|k| concert(k, Genre::ALL[k as usize % 6], "d", "A")).collect();
        let cols = Partition::from_labels(&[0, 0, 0, 1, 2, 3]);
        let cfg = EnrichmentConfig { top_k: 2, ..Default::default() };
        let r = chi_squared_enrichment(&cols, &concerts, &cfg).unwrap();
        assert_eq!(r.clusters.len(), 1);
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.clusters[0].size, 3);
    }

    #[test]
    fn aligns_by_id() {
        let s = alloc::vec![concert(7, Genre::Other, "d", "A"), concert(3, Genre::Electronic, "d", "B")];
        let aligned = align_schedule(&s, &[3, 7]).unwrap();
        assert_eq!(aligned[0].concert_id, 3);
        assert!(align_schedule(&s, &[4]).is_err());
    }
}
