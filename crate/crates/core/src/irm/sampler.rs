use alloc::format;

use alloc::vec::Vec;

use rand::Rng;

use super::partition::Detached;
use super::prior::{crp_log_prior_unchecked, sample_crp, BlockTerms};
use super::{Block, BlockCounts, HeldOutMask, Hyperparameters, IrmState, Mode, Partition, Relation};
use crate::attendance::BinaryAttendance;
use crate::error::{Error, Result};
use crate::rng::{gumbel_max, log_normalize};

/// Data, priors and cached special-function values for one chain (or many
/// chains over the same masked matrix).
#[derive(Clone, Debug)]
pub struct Sampler {
    relation: Relation,
    mask: HeldOutMask,
    hyper: Hyperparameters,
    terms: BlockTerms,
}

/// A target cluster in a conditional distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Candidate {
    /// Existing cluster, by its index in the state the conditional was taken from.
    Existing(usize),
    New,
}

/// Unnormalized log conditional probabilities for one node, with the node
/// removed from its cluster. A node alone in its cluster sees that cluster
/// only as [`Candidate::New`].
#[derive(Clone, Debug, PartialEq)]
pub struct Conditional {
    pub candidates: Vec<Candidate>,
    pub log_probs: Vec<f64>,
}

impl Conditional {
    pub fn probabilities(&self) -> Vec<f64> {
        let mut lp = self.log_probs.clone();
        log_normalize(&mut lp);
        lp.into_iter().map(libm::exp).collect()
    }
}

/// Scratch buffers reused across node updates.
#[derive(Default)]
pub(crate) struct Workspace {
    pub(crate) stats: Vec<Block>,
    pub(crate) scores: Vec<f64>,
}

impl Sampler {
    pub fn new(a: &BinaryAttendance, mask: &HeldOutMask, hyper: Hyperparameters) -> Result<Self> {
        let relation = Relation::new(a, mask)?;
        let terms = BlockTerms::new(hyper.beta, a.n_rows() * a.n_cols());
        Ok(Self { relation, mask: mask.clone(), hyper, terms })
    }

    pub fn relation(&self) -> &Relation {
        &self.relation
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyper
    }

    /// State with the given partitions; block counts and log posterior are
    /// computed from scratch.
    pub fn state(&self, rows: Partition, cols: Partition) -> Result<IrmState> {
        if rows.len() != self.relation.n_rows() || cols.len() != self.relation.n_cols() {
            return Err(Error::DimensionMismatch(format!(
                "partitions of {}×{} for a {}×{} relation",
                rows.len(),
                cols.len(),
                self.relation.n_rows(),
                self.relation.n_cols()
            )));
        }
        rows.check()?;
        cols.check()?;
        let blocks = self.block_counts(&rows, &cols);
        let log_posterior = self.log_posterior_of(&rows, &cols, &blocks);
        Ok(IrmState { rows, cols, blocks, mask: self.mask.clone(), hyper: self.hyper, log_posterior })
    }

    /// Initial state drawn from the CRP priors.
    pub fn prior_state<R: Rng + ?Sized>(&self, rng: &mut R) -> IrmState {
        let rows = sample_crp(self.relation.n_rows(), self.hyper.alpha_row, rng);
        let cols = sample_crp(self.relation.n_cols(), self.hyper.alpha_col, rng);
        self.state(rows, cols).expect("prior draws have matching dimensions")
    }

    pub fn block_counts(&self, rows: &Partition, cols: &Partition) -> BlockCounts {
        let mut blocks = BlockCounts::zeros(rows.num_clusters(), cols.num_clusters());
        for (l, &rs) in rows.sizes().iter().enumerate() {
            for (m, &cs) in cols.sizes().iter().enumerate() {
                blocks.get_mut(l, m).nonlinks = (rs * cs) as u64;
            }
        }
        for i in 0..rows.len() {
            let l = rows.cluster_of(i);
            for &j in self.relation.links(Mode::Row, i) {
                let b = blocks.get_mut(l, cols.cluster_of(j as usize));
                b.links += 1;
                b.nonlinks -= 1;
            }
            for &j in self.relation.masked(Mode::Row, i) {
                blocks.get_mut(l, cols.cluster_of(j as usize)).nonlinks -= 1;
            }
        }
        blocks
    }

    pub fn log_posterior_of(&self, rows: &Partition, cols: &Partition, blocks: &BlockCounts) -> f64 {
        let mut likelihood = 0.0;
        for l in 0..blocks.n_row_clusters() {
            for m in 0..blocks.n_col_clusters() {
                likelihood += self.terms.term(blocks.get(l, m));
            }
        }
        likelihood
            + crp_log_prior_unchecked(rows, self.hyper.alpha_row)
            + crp_log_prior_unchecked(cols, self.hyper.alpha_col)
    }

    pub(crate) fn refresh_log_posterior(&self, state: &mut IrmState) {
        state.log_posterior = self.log_posterior_of(&state.rows, &state.cols, &state.blocks);
    }

    /// Verifies cached block counts and log posterior against a full
    /// recomputation.
    pub fn check_state(&self, state: &IrmState) -> Result<()> {
        state.rows.check()?;
        state.cols.check()?;
        let fresh = self.block_counts(&state.rows, &state.cols);
        if fresh != state.blocks {
            return Err(Error::Invariant("cached block counts differ from recomputation".into()));
        }
        for l in 0..fresh.n_row_clusters() {
            for m in 0..fresh.n_col_clusters() {
                let b = fresh.get(l, m);
                let area = (state.rows.sizes()[l] * state.cols.sizes()[m]) as u64;
                if b.links + b.nonlinks > area {
                    return Err(Error::Invariant(format!("block ({l}, {m}) exceeds its area")));
                }
            }
        }
        let lp = self.log_posterior_of(&state.rows, &state.cols, &fresh);
        if (lp - state.log_posterior).abs() > 1e-9 * lp.abs().max(1.0) {
            return Err(Error::Invariant(format!(
                "cached log posterior {} differs from recomputed {lp}",
                state.log_posterior
            )));
        }
        Ok(())
    }

    /// Links and observed non-links from `node` into each opposite cluster.
    pub(crate) fn node_stats(&self, state: &IrmState, mode: Mode, node: usize, out: &mut Vec<Block>) {
        let opposite = state.partition(mode.other());
        out.clear();
        out.extend(opposite.sizes().iter().map(|&s| Block { links: 0, nonlinks: s as u64 }));
        for &j in self.relation.links(mode, node) {
            let b = &mut out[opposite.cluster_of(j as usize)];
            b.links += 1;
            b.nonlinks -= 1;
        }
        for &j in self.relation.masked(mode, node) {
            out[opposite.cluster_of(j as usize)].nonlinks -= 1;
        }
    }

    /// Takes `node` out of its cluster; returns what happened to the cluster.
    pub(crate) fn remove_node(&self, state: &mut IrmState, mode: Mode, node: usize, stats: &[Block]) -> Detached {
        let own = state.partition(mode).cluster_of(node);
        state.blocks.sub(mode, own, stats);
        let detached = state.partition_mut(mode).detach(node);
        if let Detached::Removed { removed, .. } = detached {
            state.blocks.swap_remove_cluster(mode, removed);
        }
        detached
    }

    pub(crate) fn insert_node(&self, state: &mut IrmState, mode: Mode, node: usize, cluster: usize, stats: &[Block]) {
        if cluster == state.partition(mode).num_clusters() {
            state.blocks.push_cluster(mode);
        }
        state.partition_mut(mode).attach(node, cluster);
        state.blocks.add(mode, cluster, stats);
    }

    /// Log marginal-likelihood ratio of adding a node with `stats` to cluster
    /// `own` (which must not contain it).
    #[inline]
    pub(crate) fn likelihood_gain(&self, state: &IrmState, mode: Mode, own: usize, stats: &[Block]) -> f64 {
        let mut gain = 0.0;
        for (other, &x) in stats.iter().enumerate() {
            if x.links == 0 && x.nonlinks == 0 {
                continue;
            }
            let b = state.blocks.oriented(mode, own, other);
            gain += self.terms.term(b.plus(x)) - self.terms.term(b);
        }
        gain
    }

    #[inline]
    fn new_cluster_gain(&self, stats: &[Block]) -> f64 {
        stats.iter().map(|&x| self.terms.term(x)).sum()
    }

    /// Scores of every existing cluster followed by a new one, for a node
    /// already removed from the state.
    pub(crate) fn scores(&self, state: &IrmState, mode: Mode, stats: &[Block], out: &mut Vec<f64>) {
        let part = state.partition(mode);
        out.clear();
        for (l, &size) in part.sizes().iter().enumerate() {
            out.push(self.likelihood_gain(state, mode, l, stats) + libm::log(size as f64));
        }
        out.push(self.new_cluster_gain(stats) + libm::log(self.hyper.alpha(mode)));
    }

    /// Conditional distribution of `node`'s cluster given everything else.
    pub fn conditional_log_probs(&self, state: &IrmState, mode: Mode, node: usize) -> Conditional {
        let mut work = state.clone();
        let mut stats = Vec::new();
        self.node_stats(&work, mode, node, &mut stats);
        let detached = self.remove_node(&mut work, mode, node, &stats);
        let mut log_probs = Vec::new();
        self.scores(&work, mode, &stats, &mut log_probs);
        let n_existing = log_probs.len() - 1;
        let candidates = (0..n_existing)
            .map(|c| match detached {
                Detached::Removed { removed, moved_from: Some(last) } if c == removed => {
                    Candidate::Existing(last)
                }
                _ => Candidate::Existing(c),
            })
            .chain([Candidate::New])
            .collect();
        Conditional { candidates, log_probs }
    }

    pub(crate) fn resample_node<R: Rng + ?Sized>(
        &self,
        state: &mut IrmState,
        mode: Mode,
        node: usize,
        ws: &mut Workspace,
        rng: &mut R,
    ) {
        self.node_stats(state, mode, node, &mut ws.stats);
        self.remove_node(state, mode, node, &ws.stats);
        self.scores(state, mode, &ws.stats, &mut ws.scores);
        let c = gumbel_max(&ws.scores, rng);
        self.insert_node(state, mode, node, c, &ws.stats);
    }

    /// One systematic scan: every row node, then every column node.
    pub fn gibbs_sweep<R: Rng + ?Sized>(&self, state: &mut IrmState, rng: &mut R) {
        let mut ws = Workspace::default();
        for mode in [Mode::Row, Mode::Col] {
            for node in 0..self.relation.size(mode) {
                self.resample_node(state, mode, node, &mut ws, rng);
            }
        }
        self.refresh_log_posterior(state);
    }

    /// Merges cluster `from` into `into` and refreshes the log posterior.
    pub(crate) fn merge_clusters(&self, state: &mut IrmState, mode: Mode, into: usize, from: usize) {
        state.blocks.fold_into(mode, into, from);
        state.partition_mut(mode).merge(into, from);
        state.blocks.swap_remove_cluster(mode, from);
        self.refresh_log_posterior(state);
    }
}

/// Exhaustive normalizer check helper: all set partitions of `n` items as
/// restricted growth strings.
#[cfg(test)]
pub(crate) fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    use alloc::vec;
    fn extend(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            let next = if c > max { c } else { max };
            extend(prefix, next, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(vec![]);
        return out;
    }
    let mut prefix = vec![0];
    extend(&mut prefix, 0, n, &mut out);
    out
}
