use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::enrichment::{align_schedule, chi_squared_enrichment, EnrichmentConfig, EnrichmentReport};
use crate::attendance::{BinaryAttendance, Concert};
use crate::error::{Error, Result};
use crate::irm::{IrmState, Partition};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub rank: usize,
    pub cluster: usize,
    pub size: usize,
    pub members: Vec<String>,
}

/// A fitted state laid out for reading: clusters in size-descending order and
/// η̂ permuted to match.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub log_posterior: f64,
    pub row_clusters: Vec<ClusterSummary>,
    pub col_clusters: Vec<ClusterSummary>,
    /// `eta[r][c]` between the `r`-th largest row cluster and the `c`-th
    /// largest column cluster.
    pub eta: Vec<Vec<f64>>,
    pub enrichment: EnrichmentReport,
}

pub fn cluster_report(
    state: &IrmState,
    schedule: &[Concert],
    a: &BinaryAttendance,
    config: &EnrichmentConfig,
) -> Result<ClusterReport> {
    if state.rows().len() != a.n_rows() || state.cols().len() != a.n_cols() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "state of {}×{} for a {}×{} matrix",
            state.rows().len(),
            state.cols().len(),
            a.n_rows(),
            a.n_cols()
        )));
    }
    let concerts = align_schedule(schedule, a.concerts())?;
    let row_order = state.rows().order_by_size();
    let col_order = state.cols().order_by_size();
    let eta_raw = state.predict_eta();
    let eta = row_order
        .iter()
        .map(|&l| col_order.iter().map(|&m| eta_raw.get(l, m)).collect())
        .collect();
    let concert_labels: Vec<String> = concerts.iter().map(|c| alloc::format!("{}", c.concert_id)).collect();
    Ok(ClusterReport {
        log_posterior: state.log_posterior(),
        row_clusters: summaries(state.rows(), &row_order, a.participants()),
        col_clusters: summaries(state.cols(), &col_order, &concert_labels),
        eta,
        enrichment: chi_squared_enrichment(state.cols(), &concerts, config)?,
    })
}

fn summaries(p: &Partition, order: &[usize], names: &[String]) -> Vec<ClusterSummary> {
    order
        .iter()
        .enumerate()
        .map(|(rank, &cluster)| {
            let members: Vec<String> = p.members(cluster).into_iter().map(|i| names[i].clone()).collect();
            ClusterSummary { rank, cluster, size: members.len(), members }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attendance::{Genre, Origin, StageSize};
    use crate::irm::{HeldOutMask, Hyperparameters, Sampler};
    use alloc::vec;

    #[test]
    fn sorted_by_size_with_matching_eta() {
        let dense: Vec<Vec<bool>> = (0..15).map(|i| (0..4).map(|j| (i + j) % 3 == 0).collect()).collect();
        let a = BinaryAttendance::from_dense(&dense).unwrap();
        let s = Sampler::new(&a, &HeldOutMask::empty(), Hyperparameters { beta: 1.0, alpha_row: 1.0, alpha_col: 1.0 })
            .unwrap();
        let rows: Vec<usize> = (0..15).map(|i| if i < 3 { 0 } else if i < 10 { 1 } else { 2 }).collect();
        let st = s.state(Partition::from_labels(&rows), Partition::from_labels(&[0, 1, 1, 0])).unwrap();
        let schedule: Vec<Concert> = (0..4)
            .map(|k| Concert {
                concert_id: k,
                band: "b".into(),
                stage: "A".into(),
                start_time: 0,
                date: "2012-07-01".into(),
                genre: Genre::Electronic,
                origin: Origin::Usa,
                playcount: 1,
                stage_size: StageSize::Big,
            })
            .collect();
        let r = cluster_report(&st, &schedule, &a, &EnrichmentConfig::default()).unwrap();
        let sizes: Vec<usize> = r.row_clusters.iter().map(|c| c.size).collect();
        assert_eq!(sizes, vec![7, 5, 3]);
        assert_eq!((r.eta.len(), r.eta[0].len()), (3, 2));
        let eta = st.predict_eta();
        assert_eq!(r.eta[0][0], eta.get(1, 0));
        assert_eq!(r.eta[2][1], eta.get(0, 1));
        assert_eq!(r.row_clusters[2].members, vec!["p0", "p1", "p2"]);
    }
}
