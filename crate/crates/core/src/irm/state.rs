use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BlockCounts, HeldOutMask, Hyperparameters, Mode, Partition};

/// Full collapsed-sampler state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrmState {
    pub(crate) rows: Partition,
    pub(crate) cols: Partition,
    pub(crate) blocks: BlockCounts,
    pub(crate) mask: HeldOutMask,
    pub(crate) hyper: Hyperparameters,
    pub(crate) log_posterior: f64,
}

impl IrmState {
    pub fn rows(&self) -> &Partition {
        &self.rows
    }

    pub fn cols(&self) -> &Partition {
        &self.cols
    }

    pub fn partition(&self, mode: Mode) -> &Partition {
        match mode {
            Mode::Row => &self.rows,
            Mode::Col => &self.cols,
        }
    }

    pub(crate) fn partition_mut(&mut self, mode: Mode) -> &mut Partition {
        match mode {
            Mode::Row => &mut self.rows,
            Mode::Col => &mut self.cols,
        }
    }

    pub fn blocks(&self) -> &BlockCounts {
        &self.blocks
    }

    pub fn mask(&self) -> &HeldOutMask {
        &self.mask
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    pub fn log_posterior(&self) -> f64 {
        self.log_posterior
    }

    pub fn predict_eta(&self) -> LinkProbability {
        predict_eta(self)
    }
}

/// Posterior mean link probability per block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkProbability {
    pub eta: Vec<Vec<f64>>,
}

impl LinkProbability {
    #[inline]
    pub fn get(&self, row_cluster: usize, col_cluster: usize) -> f64 {
        self.eta[row_cluster][col_cluster]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.eta.len(), self.eta.first().map_or(0, Vec::len))
    }
}

/// `η̂ = (N⁺ + β) / (N⁺ + N⁻ + 2β)`, the mean of the Beta(N⁺ + β, N⁻ + β)
/// block posterior.
pub fn predict_eta(state: &IrmState) -> LinkProbability {
    let beta = state.hyper.beta;
    let b = &state.blocks;
    let eta = (0..b.n_row_clusters())
        .map(|l| {
            (0..b.n_col_clusters())
                .map(|m| eta_mean(b.links(l, m), b.nonlinks(l, m), beta))
                .collect()
        })
        .collect();
    LinkProbability { eta }
}

#[inline]
pub(crate) fn eta_mean(links: u64, nonlinks: u64, beta: f64) -> f64 {
    (links as f64 + beta) / ((links + nonlinks) as f64 + 2.0 * beta)
}
