use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Mode;

/// Link and non-link counts between one row cluster and one column cluster.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub links: u64,
    pub nonlinks: u64,
}

impl Block {
    #[inline]
    pub(crate) fn plus(self, other: Block) -> Block {
        Block { links: self.links + other.links, nonlinks: self.nonlinks + other.nonlinks }
    }
}

/// `N⁺` / `N⁻` for every (row cluster, column cluster) pair, masked cells
/// excluded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "BlockMatrices", from = "BlockMatrices")]
pub struct BlockCounts {
    cells: Vec<Vec<Block>>,
    n_cols: usize,
}

#[derive(Serialize, Deserialize)]
struct BlockMatrices {
    links: Vec<Vec<u64>>,
    nonlinks: Vec<Vec<u64>>,
}

impl From<BlockCounts> for BlockMatrices {
    fn from(b: BlockCounts) -> Self {
        BlockMatrices {
            links: b.cells.iter().map(|r| r.iter().map(|c| c.links).collect()).collect(),
            nonlinks: b.cells.iter().map(|r| r.iter().map(|c| c.nonlinks).collect()).collect(),
        }
    }
}

impl From<BlockMatrices> for BlockCounts {
    fn from(m: BlockMatrices) -> Self {
        let n_cols = m.links.first().map_or(0, Vec::len);
        let cells = m
            .links
            .iter()
            .zip(&m.nonlinks)
            .map(|(l, n)| l.iter().zip(n).map(|(&links, &nonlinks)| Block { links, nonlinks }).collect())
            .collect();
        BlockCounts { cells, n_cols }
    }
}

impl BlockCounts {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { cells: vec![vec![Block::default(); n_cols]; n_rows], n_cols }
    }

    pub fn n_row_clusters(&self) -> usize {
        self.cells.len()
    }

    pub fn n_col_clusters(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, row_cluster: usize, col_cluster: usize) -> Block {
        self.cells[row_cluster][col_cluster]
    }

    pub fn links(&self, row_cluster: usize, col_cluster: usize) -> u64 {
        self.get(row_cluster, col_cluster).links
    }

    pub fn nonlinks(&self, row_cluster: usize, col_cluster: usize) -> u64 {
        self.get(row_cluster, col_cluster).nonlinks
    }

    pub(crate) fn get_mut(&mut self, row_cluster: usize, col_cluster: usize) -> &mut Block {
        &mut self.cells[row_cluster][col_cluster]
    }

    /// Block between `own` cluster of `mode` and `other` cluster of the
    /// opposite mode.
    #[inline]
    pub(crate) fn oriented(&self, mode: Mode, own: usize, other: usize) -> Block {
        match mode {
            Mode::Row => self.cells[own][other],
            Mode::Col => self.cells[other][own],
        }
    }

    #[inline]
    fn oriented_mut(&mut self, mode: Mode, own: usize, other: usize) -> &mut Block {
        match mode {
            Mode::Row => &mut self.cells[own][other],
            Mode::Col => &mut self.cells[other][own],
        }
    }

    pub(crate) fn push_cluster(&mut self, mode: Mode) {
        match mode {
            Mode::Row => self.cells.push(vec![Block::default(); self.n_cols]),
            Mode::Col => {
                self.cells.iter_mut().for_each(|r| r.push(Block::default()));
                self.n_cols += 1;
            }
        }
    }

    /// Removes cluster `c` of `mode` by moving the last cluster into its slot,
    /// mirroring [`Partition`](super::Partition) compaction.
    pub(crate) fn swap_remove_cluster(&mut self, mode: Mode, c: usize) {
        match mode {
            Mode::Row => {
                self.cells.swap_remove(c);
            }
            Mode::Col => {
                self.cells.iter_mut().for_each(|r| {
                    r.swap_remove(c);
                });
                self.n_cols -= 1;
            }
        }
    }

    /// Adds a node's per-opposite-cluster contribution to cluster `own`.
    pub(crate) fn add(&mut self, mode: Mode, own: usize, stats: &[Block]) {
        for (other, s) in stats.iter().enumerate() {
            let b = self.oriented_mut(mode, own, other);
            b.links += s.links;
            b.nonlinks += s.nonlinks;
        }
    }

    pub(crate) fn sub(&mut self, mode: Mode, own: usize, stats: &[Block]) {
        for (other, s) in stats.iter().enumerate() {
            let b = self.oriented_mut(mode, own, other);
            b.links -= s.links;
            b.nonlinks -= s.nonlinks;
        }
    }

    /// Folds cluster `from` into `into` (before compaction).
    pub(crate) fn fold_into(&mut self, mode: Mode, into: usize, from: usize) {
        let n_other = match mode {
            Mode::Row => self.n_cols,
            Mode::Col => self.cells.len(),
        };
        for other in 0..n_other {
            let moved = self.oriented(mode, from, other);
            let b = self.oriented_mut(mode, into, other);
            *b = b.plus(moved);
        }
    }
}
