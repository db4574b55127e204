//! Split-merge Metropolis–Hastings moves with restricted Gibbs proposals.
//!
//! Two distinct anchors `i`, `j` are drawn. The remaining members `S` of their
//! clusters are taken out and re-seated between two fresh clusters seeded by
//! the anchors: first by sequential allocation in random order, then by
//! `restricted_sweeps − 1` intermediate restricted Gibbs sweeps. This launch
//! state depends only on `S ∪ {i, j}`, never on how they are currently split,
//! so it is shared by a move and its reverse. One final restricted sweep then
//! either samples the proposed split (its transition probability is the
//! proposal density) or, for a merge, evaluates the probability of
//! reproducing the current split.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::sampler::Workspace;
use super::{Block, IrmState, Mode, Partition, Sampler};
use crate::rng::{gumbel_max, log_normalize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitMergeOutcome {
    /// Fewer than two nodes in the mode.
    NoOp,
    Split { accepted: bool },
    Merge { accepted: bool },
}

#[derive(Clone, Debug)]
pub(crate) struct Proposal {
    pub(crate) state: IrmState,
    pub(crate) log_ratio: f64,
    pub(crate) split: bool,
}

impl Sampler {
    pub fn split_merge<R: Rng + ?Sized>(
        &self,
        state: &mut IrmState,
        mode: Mode,
        restricted_sweeps: usize,
        rng: &mut R,
    ) -> SplitMergeOutcome {
        let n = state.partition(mode).len();
        if n < 2 {
            return SplitMergeOutcome::NoOp;
        }
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let proposal = self.propose(state, mode, i, j, restricted_sweeps, rng, None);
        let accepted =
            proposal.log_ratio >= 0.0 || libm::log(rng.random::<f64>()) < proposal.log_ratio;
        let split = proposal.split;
        if accepted {
            *state = proposal.state;
        }
        if split {
            SplitMergeOutcome::Split { accepted }
        } else {
            SplitMergeOutcome::Merge { accepted }
        }
    }

    /// Builds the proposal for anchors `i`, `j`. With `forced_split`, a split
    /// proposal is steered to that partition's split of the anchors' cluster
    /// instead of being sampled (the reported density is still that of the
    /// final restricted sweep).
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn propose<R: Rng + ?Sized>(
        &self,
        state: &IrmState,
        mode: Mode,
        i: usize,
        j: usize,
        restricted_sweeps: usize,
        rng: &mut R,
        forced_split: Option<&Partition>,
    ) -> Proposal {
        debug_assert!(restricted_sweeps >= 1);
        let part = state.partition(mode);
        let (ci, cj) = (part.cluster_of(i), part.cluster_of(j));
        let split = ci == cj;
        let mut others: Vec<usize> = (0..part.len())
            .filter(|&k| k != i && k != j && (part.cluster_of(k) == ci || part.cluster_of(k) == cj))
            .collect();
        others.shuffle(rng);

        // Node statistics only depend on the opposite partition, which the
        // move never touches.
        let mut ws = Workspace::default();
        let stats_of = |k: usize, ws: &mut Workspace| -> Vec<Block> {
            self.node_stats(state, mode, k, &mut ws.stats);
            ws.stats.clone()
        };
        let anchor_stats = [stats_of(i, &mut ws), stats_of(j, &mut ws)];
        let member_stats: Vec<Vec<Block>> = others.iter().map(|&k| stats_of(k, &mut ws)).collect();

        let mut launch = state.clone();
        self.remove_node(&mut launch, mode, i, &anchor_stats[0]);
        self.remove_node(&mut launch, mode, j, &anchor_stats[1]);
        for (&k, s) in others.iter().zip(&member_stats) {
            self.remove_node(&mut launch, mode, k, s);
        }
        let side_a = launch.partition(mode).num_clusters();
        let side_b = side_a + 1;
        self.insert_node(&mut launch, mode, i, side_a, &anchor_stats[0]);
        self.insert_node(&mut launch, mode, j, side_b, &anchor_stats[1]);

        let mut scores = [0.0f64; 2];
        let restricted_scores = |w: &IrmState, s: &[Block], scores: &mut [f64; 2]| {
            let sizes = w.partition(mode).sizes();
            for (slot, side) in [side_a, side_b].into_iter().enumerate() {
                scores[slot] = self.likelihood_gain(w, mode, side, s) + libm::log(sizes[side] as f64);
            }
        };

        // sequential allocation
        for (&k, s) in others.iter().zip(&member_stats) {
            restricted_scores(&launch, s, &mut scores);
            let side = [side_a, side_b][gumbel_max(&scores, rng)];
            self.insert_node(&mut launch, mode, k, side, s);
        }
        // intermediate restricted sweeps
        for _ in 1..restricted_sweeps {
            for (&k, s) in others.iter().zip(&member_stats) {
                self.remove_node(&mut launch, mode, k, s);
                restricted_scores(&launch, s, &mut scores);
                let side = [side_a, side_b][gumbel_max(&scores, rng)];
                self.insert_node(&mut launch, mode, k, side, s);
            }
        }

        // final sweep: sampled for a split, evaluated at the current split
        // for a merge
        let target = if split { forced_split } else { Some(part) };
        let mut log_q = 0.0;
        for (&k, s) in others.iter().zip(&member_stats) {
            self.remove_node(&mut launch, mode, k, s);
            restricted_scores(&launch, s, &mut scores);
            log_normalize(&mut scores);
            let slot = match target {
                Some(t) => usize::from(t.cluster_of(k) != t.cluster_of(i)),
                None => gumbel_max(&scores, rng),
            };
            log_q += scores[slot];
            self.insert_node(&mut launch, mode, k, [side_a, side_b][slot], s);
        }

        if split {
            self.refresh_log_posterior(&mut launch);
            let log_ratio = launch.log_posterior - state.log_posterior - log_q;
            Proposal { state: launch, log_ratio, split }
        } else {
            let mut merged = state.clone();
            self.merge_clusters(&mut merged, mode, ci, cj);
            let log_ratio = merged.log_posterior - state.log_posterior + log_q;
            Proposal { state: merged, log_ratio, split }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attendance::BinaryAttendance;
    use crate::irm::{HeldOutMask, Hyperparameters};
    use crate::rng::seeded;
    use alloc::vec;

    fn sampler() -> Sampler {
        let a = BinaryAttendance::from_dense(&[
            vec![true, true, false, false],
            vec![true, true, false, true],
            vec![false, false, true, true],
            vec![false, true, true, true],
            vec![true, false, false, false],
            vec![false, false, true, false],
        ])
        .unwrap();
        Sampler::new(&a, &HeldOutMask::empty(), Hyperparameters { beta: 1.0, alpha_row: 1.0, alpha_col: 1.0 })
            .unwrap()
    }

    #[test]
    fn fewer_than_two_nodes_is_noop() {
        let a = BinaryAttendance::from_dense(&[vec![true, false]]).unwrap();
        let s = Sampler::new(&a, &HeldOutMask::empty(), Hyperparameters { beta: 1.0, alpha_row: 1.0, alpha_col: 1.0 })
            .unwrap();
        let mut st = s.state(Partition::single_cluster(1), Partition::singletons(2)).unwrap();
        let before = st.clone();
        assert_eq!(s.split_merge(&mut st, Mode::Row, 3, &mut seeded(1)), SplitMergeOutcome::NoOp);
        assert_eq!(st, before);
    }

    #[test]
    fn merge_then_reverse_split_ratios_cancel() {
        let s = sampler();
        let split_rows = Partition::from_labels(&[0, 0, 1, 1, 0, 2]);
        let st = s.state(split_rows.clone(), Partition::from_labels(&[0, 0, 1, 1])).unwrap();
        for seed in 0..20 {
            for restricted in [1, 3] {
                let (i, j) = (1, 3); // clusters 0 and 1
                let merge = s.propose(&st, Mode::Row, i, j, restricted, &mut seeded(seed), None);
                assert!(!merge.split);
                let split = s.propose(&merge.state, Mode::Row, i, j, restricted, &mut seeded(seed), Some(&split_rows));
                assert!(split.split);
                assert_eq!(split.state.rows.canonical(), split_rows.canonical());
                assert!((merge.log_ratio + split.log_ratio).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn proposals_keep_counts_consistent() {
        let s = sampler();
        let mut st = s.prior_state(&mut seeded(5));
        let mut rng = seeded(6);
        let mut outcomes = [0usize; 4];
        for _ in 0..2000 {
            for mode in [Mode::Row, Mode::Col] {
                match s.split_merge(&mut st, mode, 3, &mut rng) {
                    SplitMergeOutcome::Split { accepted } => outcomes[usize::from(accepted)] += 1,
                    SplitMergeOutcome::Merge { accepted } => outcomes[2 + usize::from(accepted)] += 1,
                    SplitMergeOutcome::NoOp => unreachable!(),
                }
                s.check_state(&st).unwrap();
            }
        }
        assert!(outcomes.iter().all(|&n| n > 0), "{outcomes:?}");
    }
}
