//! Group-structure inference from proximity-scan event logs.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the whole analysis
//! path that does not touch the filesystem:
//!
//! * [`ingest`]: hardware-address anonymization, vendor lookup and dataset
//!   summaries over scan events.
//! * [`attendance`]: concert windowing, binarization, outlier removal and
//!   popularity correlation, producing the binary participant×concert matrix.
//! * [`irm`]: an Infinite Relational Model for bipartite binary data, fitted by
//!   collapsed Gibbs sampling with split-merge moves.
//! * [`eval`]: NMI, held-out AUC, the repeated-fit robustness protocol and
//!   χ² enrichment of concert clusters against metadata.
//! * [`microgroups`]: spatio-temporal co-occurrence graphs and a
//!   degree-preserving rewiring null model.
//! * [`synth`]: planted-structure generators for every stage above.
//!
//! File formats, configuration and the command line live in the companion
//! `groupscan` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod attendance;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod irm;
pub mod microgroups;
pub mod rng;
pub mod special;
pub mod synth;

pub use error::{Error, Result};
