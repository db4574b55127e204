//! Envelope that ties every JSON output to the configuration that made it.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub stage: String,
    pub config_hash: String,
    pub seed: u64,
    pub data: T,
}

/// The comment line that opens every CSV output.
pub fn provenance(config_hash: &str, seed: u64) -> String {
    format!("config_hash={config_hash} seed={seed}")
}
