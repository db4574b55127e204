use alloc::vec::Vec;

use rand::Rng;

use super::{Block, HeldOutMask, IrmConfig, Partition, Sampler};
use crate::attendance::BinaryAttendance;
use crate::error::{Error, Result};
use crate::rng::gumbel_max;
use crate::special::{ln_beta, ln_gamma};

/// Log probability of `partition` under a CRP with concentration `alpha`:
/// `L·ln α + lnΓ(α) − lnΓ(n + α) + Σ lnΓ(M_ℓ)`.
pub fn crp_log_prior(partition: &Partition, alpha: f64, n: usize) -> Result<f64> {
    if partition.len() != n {
        return Err(Error::LengthMismatch { left: partition.len(), right: n });
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter("CRP concentration must be positive".into()));
    }
    Ok(crp_log_prior_unchecked(partition, alpha))
}

pub(crate) fn crp_log_prior_unchecked(partition: &Partition, alpha: f64) -> f64 {
    let n = partition.len() as f64;
    let l = partition.num_clusters() as f64;
    l * libm::log(alpha) + ln_gamma(alpha) - ln_gamma(n + alpha)
        + partition.sizes().iter().map(|&m| ln_gamma(m as f64)).sum::<f64>()
}

/// Draws a partition of `n` nodes by sequential seating.
pub fn sample_crp<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Partition {
    let mut labels = Vec::with_capacity(n);
    let mut sizes: Vec<usize> = Vec::new();
    let mut weights = Vec::new();
    for _ in 0..n {
        weights.clear();
        weights.extend(sizes.iter().map(|&s| libm::log(s as f64)));
        weights.push(libm::log(alpha));
        let c = gumbel_max(&weights, rng);
        if c == sizes.len() {
            sizes.push(0);
        }
        sizes[c] += 1;
        labels.push(c);
    }
    Partition::from_labels(&labels)
}

/// `log p(A, z_row, z_col | β, α_row, α_col)` with masked cells excluded from
/// the block counts.
pub fn joint_log_posterior(
    a: &BinaryAttendance,
    rows: &Partition,
    cols: &Partition,
    config: &IrmConfig,
    mask: &HeldOutMask,
) -> Result<f64> {
    if rows.len() != a.n_rows() || cols.len() != a.n_cols() {
        return Err(Error::DimensionMismatch(alloc::format!(
            "partitions of {}×{} for a {}×{} matrix",
            rows.len(),
            cols.len(),
            a.n_rows(),
            a.n_cols()
        )));
    }
    let hyper = config.hyperparameters(a.n_rows(), a.n_cols())?;
    let sampler = Sampler::new(a, mask, hyper)?;
    let blocks = sampler.block_counts(rows, cols);
    Ok(sampler.log_posterior_of(rows, cols, &blocks))
}

const TABLE_LIMIT: usize = 1 << 22;

/// Cached `lnB(N⁺ + β, N⁻ + β) − lnB(β, β)` for integer counts.
#[derive(Clone, Debug)]
pub(crate) struct BlockTerms {
    beta: f64,
    ln_gamma_beta: Vec<f64>,
    ln_gamma_two_beta: Vec<f64>,
    ln_beta_prior: f64,
}

impl BlockTerms {
    pub(crate) fn new(beta: f64, max_count: usize) -> Self {
        let len = max_count.min(TABLE_LIMIT) + 1;
        Self {
            beta,
            ln_gamma_beta: (0..len).map(|k| ln_gamma(k as f64 + beta)).collect(),
            ln_gamma_two_beta: (0..len).map(|k| ln_gamma(k as f64 + 2.0 * beta)).collect(),
            ln_beta_prior: ln_beta(beta, beta),
        }
    }

    #[inline]
    fn lg(&self, k: u64) -> f64 {
        match self.ln_gamma_beta.get(k as usize) {
            Some(&v) => v,
            None => ln_gamma(k as f64 + self.beta),
        }
    }

    #[inline]
    fn lg2(&self, k: u64) -> f64 {
        match self.ln_gamma_two_beta.get(k as usize) {
            Some(&v) => v,
            None => ln_gamma(k as f64 + 2.0 * self.beta),
        }
    }

    #[inline]
    pub(crate) fn term(&self, b: Block) -> f64 {
        if b.links == 0 && b.nonlinks == 0 {
            return 0.0;
        }
        self.lg(b.links) + self.lg(b.nonlinks) - self.lg2(b.links + b.nonlinks) - self.ln_beta_prior
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use alloc::vec;

    #[test]
    fn three_nodes_single_cluster() {
        let p = Partition::single_cluster(3);
        let lp = crp_log_prior(&p, 1.0, 3).unwrap();
        assert!((lp - libm::log(2.0 / 6.0)).abs() < 1e-14);
        let lp = crp_log_prior(&Partition::singletons(3), 1.0, 3).unwrap();
        assert!((lp - libm::log(1.0 / 6.0)).abs() < 1e-14);
    }

    #[test]
    fn single_node_is_certain() {
        for alpha in [0.1, 1.0, 7.5] {
            let lp = crp_log_prior(&Partition::single_cluster(1), alpha, 1).unwrap();
            assert!(lp.abs() < 1e-14);
        }
    }

    #[test]
    fn depends_only_on_sizes() {
        let a = Partition::from_labels(&[0, 0, 1, 2, 2, 2]);
        let b = Partition::from_labels(&[4, 1, 4, 4, 9, 1]);
        assert_eq!(
            crp_log_prior(&a, 0.7, 6).unwrap(),
            crp_log_prior(&b, 0.7, 6).unwrap()
        );
    }

    #[test]
    fn rejects_bad_input() {
        let p = Partition::single_cluster(3);
        assert!(crp_log_prior(&p, 1.0, 4).is_err());
        assert!(crp_log_prior(&Partition::single_cluster(0), 1.0, 2).is_err());
        assert!(crp_log_prior(&p, 0.0, 3).is_err());
    }

    #[test]
    fn one_by_one_link() {
        let a = BinaryAttendance::from_dense(&[vec![true]]).unwrap();
        let config = IrmConfig {
            alpha_row: super::super::Concentration::Value(1.0),
            alpha_col: super::super::Concentration::Value(1.0),
            ..Default::default()
        };
        let p = Partition::single_cluster(1);
        let lp = joint_log_posterior(&a, &p, &p, &config, &HeldOutMask::empty()).unwrap();
        assert!((lp - libm::log(0.5)).abs() < 1e-14);
        let lp = joint_log_posterior(&a, &p, &p, &config, &HeldOutMask::all(&a)).unwrap();
        assert!(lp.abs() < 1e-14);
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let t = BlockTerms::new(0.7, 50);
        for (p, n) in [(0, 3), (5, 0), (12, 30), (40, 60)] {
            let direct = ln_beta(p as f64 + 0.7, n as f64 + 0.7) - ln_beta(0.7, 0.7);
            assert!((t.term(Block { links: p, nonlinks: n }) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn crp_draws_cover_nodes() {
        let p = sample_crp(50, 2.0, &mut seeded(4));
        assert_eq!(p.len(), 50);
        p.check().unwrap();
    }
}
