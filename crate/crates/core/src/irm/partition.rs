use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNASSIGNED: usize = usize::MAX;

/// Assignment of nodes to clusters `0..num_clusters`, with no empty cluster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    assignments: Vec<usize>,
    sizes: Vec<usize>,
}

/// What happened to a node's old cluster when the node was taken out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Detached {
    Kept(usize),
    /// The cluster became empty and was removed; the previously last cluster
    /// (if it was a different one) now carries index `removed`.
    Removed { removed: usize, moved_from: Option<usize> },
}

impl Partition {
    /// Builds a partition from arbitrary labels, renumbering clusters in order
    /// of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut assignments = Vec::with_capacity(labels.len());
        let mut sizes = Vec::new();
        for &l in labels {
            let c = match map.iter().find(|(k, _)| *k == l) {
                Some(&(_, c)) => c,
                None => {
                    map.push((l, sizes.len()));
                    sizes.push(0);
                    sizes.len() - 1
                }
            };
            sizes[c] += 1;
            assignments.push(c);
        }
        Self { assignments, sizes }
    }

    pub fn single_cluster(n: usize) -> Self {
        Self::from_labels(&vec![0; n])
    }

    pub fn singletons(n: usize) -> Self {
        Self { assignments: (0..n).collect(), sizes: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.assignments[node]
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.assignments[i] == cluster).collect()
    }

    /// Labels renumbered by first appearance (restricted growth string); two
    /// partitions are equal up to relabeling iff their canonical forms are.
    pub fn canonical(&self) -> Vec<usize> {
        Self::from_labels(&self.assignments).assignments
    }

    /// Cluster order by decreasing size (ties by index).
    pub fn order_by_size(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.num_clusters()).collect();
        order.sort_by(|&a, &b| self.sizes[b].cmp(&self.sizes[a]).then(a.cmp(&b)));
        order
    }

    pub(crate) fn detach(&mut self, node: usize) -> Detached {
        let c = self.assignments[node];
        debug_assert!(c != UNASSIGNED);
        self.assignments[node] = UNASSIGNED;
        self.sizes[c] -= 1;
        if self.sizes[c] > 0 {
            return Detached::Kept(c);
        }
        let last = self.sizes.len() - 1;
        self.sizes.swap_remove(c);
        if c == last {
            return Detached::Removed { removed: c, moved_from: None };
        }
        for a in self.assignments.iter_mut().filter(|a| **a == last) {
            *a = c;
        }
        Detached::Removed { removed: c, moved_from: Some(last) }
    }

    /// Puts a detached node into `cluster`; `cluster == num_clusters()` opens
    /// a new one.
    pub(crate) fn attach(&mut self, node: usize, cluster: usize) {
        debug_assert_eq!(self.assignments[node], UNASSIGNED);
        if cluster == self.sizes.len() {
            self.sizes.push(0);
        }
        self.sizes[cluster] += 1;
        self.assignments[node] = cluster;
    }

    /// Moves every member of `from` into `into` and removes `from`.
    /// Returns the index that was relocated into `from`'s slot, if any.
    pub(crate) fn merge(&mut self, into: usize, from: usize) -> Option<usize> {
        debug_assert_ne!(into, from);
        for a in self.assignments.iter_mut().filter(|a| **a == from) {
            *a = into;
        }
        self.sizes[into] += self.sizes[from];
        self.sizes[from] = 0;
        let last = self.sizes.len() - 1;
        self.sizes.swap_remove(from);
        if from == last {
            return None;
        }
        for a in self.assignments.iter_mut().filter(|a| **a == last) {
            *a = from;
        }
        Some(last)
    }

    pub fn check(&self) -> Result<()> {
        let mut sizes = vec![0usize; self.sizes.len()];
        for &a in &self.assignments {
            if a >= sizes.len() {
                return Err(Error::Invariant("cluster index out of range".into()));
            }
            sizes[a] += 1;
        }
        if sizes != self.sizes || sizes.contains(&0) {
            return Err(Error::Invariant("cluster sizes inconsistent with assignments".into()));
        }
        Ok(())
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(labels: Vec<usize>) -> Result<Self> {
        Ok(Self::from_labels(&labels))
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.assignments
    }
}
