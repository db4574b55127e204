//! Infinite Relational Model for bipartite binary relations.
//!
//! Rows and columns are partitioned by independent Chinese restaurant process
//! priors; each (row cluster, column cluster) block has a Beta(β, β) link
//! probability that is integrated out, so the sampler only moves cluster
//! assignments. Inference alternates systematic-scan Gibbs sweeps over all
//! nodes with Metropolis–Hastings split-merge moves whose launch states come
//! from sequential allocation followed by restricted Gibbs sweeps.

mod blocks;
mod inference;
mod partition;
mod prior;
mod relation;
mod sampler;
mod split_merge;
mod state;

pub use blocks::{Block, BlockCounts};
pub use inference::{best_of, run_inference, run_restarts, Inference};
pub use partition::Partition;
pub use prior::{crp_log_prior, joint_log_posterior, sample_crp};
pub use relation::{hold_out, HeldOutMask, MaskedCell, Relation};
pub use sampler::{Candidate, Conditional, Sampler};
pub use split_merge::SplitMergeOutcome;
pub use state::{predict_eta, IrmState, LinkProbability};

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of the bipartite relation a node belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Row,
    Col,
}

impl Mode {
    pub fn other(self) -> Mode {
        match self {
            Mode::Row => Mode::Col,
            Mode::Col => Mode::Row,
        }
    }
}

/// A CRP concentration: a fixed value or `auto`, meaning ln(number of nodes).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Concentration {
    #[default]
    Auto,
    Value(f64),
}

impl Concentration {
    pub fn resolve(self, n: usize) -> Result<f64> {
        let value = match self {
            Concentration::Auto => libm::log(n as f64),
            Concentration::Value(v) => v,
        };
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Error::InvalidParameter(format!(
                "concentration must be positive, got {value} (n = {n})"
            )))
        }
    }
}

impl Serialize for Concentration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Concentration::Auto => s.serialize_str("auto"),
            Concentration::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Concentration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Concentration::Value(v)),
            Raw::Text(t) if t == "auto" => Ok(Concentration::Auto),
            Raw::Text(t) => t
                .parse()
                .map(Concentration::Value)
                .map_err(|_| serde::de::Error::custom(format!("expected a number or `auto`, got `{t}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrmConfig {
    /// Symmetric Beta prior parameter on block link probabilities.
    pub beta: f64,
    pub alpha_row: Concentration,
    pub alpha_col: Concentration,
    pub sweeps: usize,
    /// Split-merge proposals per mode after every Gibbs sweep.
    pub split_merge_per_sweep: usize,
    /// Restricted Gibbs sweeps in a split-merge proposal; the last one
    /// defines the proposal density.
    pub restricted_sweeps: usize,
    pub seed: u64,
}

impl Default for IrmConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            alpha_row: Concentration::Auto,
            alpha_col: Concentration::Auto,
            sweeps: 500,
            split_merge_per_sweep: 1,
            restricted_sweeps: 3,
            seed: 0,
        }
    }
}

impl IrmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        for a in [self.alpha_row, self.alpha_col] {
            if let Concentration::Value(v) = a {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!("alpha must be positive, got {v}")));
                }
            }
        }
        if self.restricted_sweeps < 1 {
            return Err(Error::InvalidParameter("restricted_sweeps must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn hyperparameters(&self, n_rows: usize, n_cols: usize) -> Result<Hyperparameters> {
        self.validate()?;
        Ok(Hyperparameters {
            beta: self.beta,
            alpha_row: self.alpha_row.resolve(n_rows)?,
            alpha_col: self.alpha_col.resolve(n_cols)?,
        })
    }
}

/// Resolved prior parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub beta: f64,
    pub alpha_row: f64,
    pub alpha_col: f64,
}

impl Hyperparameters {
    pub fn alpha(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Row => self.alpha_row,
            Mode::Col => self.alpha_col,
        }
    }
}
