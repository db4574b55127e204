use alloc::vec::Vec;

use super::{HeldOutMask, IrmConfig, IrmState, Mode, Sampler};
use crate::attendance::BinaryAttendance;
use crate::error::Result;
use crate::rng::{derive_seed, seeded};

/// Outcome of one chain.
#[derive(Clone, Debug)]
pub struct Inference {
    /// Highest-posterior state visited after any sweep.
    pub best: IrmState,
    /// Log posterior after every sweep (including its split-merge moves).
    pub trace: Vec<f64>,
    pub seed: u64,
}

/// Runs one chain from a CRP prior draw. Each sweep is a full Gibbs scan
/// followed by `split_merge_per_sweep` split-merge proposals per mode.
pub fn run_inference(a: &BinaryAttendance, config: &IrmConfig, mask: &HeldOutMask) -> Result<Inference> {
    let hyper = config.hyperparameters(a.n_rows(), a.n_cols())?;
    let sampler = Sampler::new(a, mask, hyper)?;
    Ok(run_chain(&sampler, config, config.seed))
}

pub(crate) fn run_chain(sampler: &Sampler, config: &IrmConfig, seed: u64) -> Inference {
    let mut rng = seeded(seed);
    let mut state = sampler.prior_state(&mut rng);
    let mut best: Option<IrmState> = None;
    let mut trace = Vec::with_capacity(config.sweeps);
    for sweep in 0..config.sweeps {
        sampler.gibbs_sweep(&mut state, &mut rng);
        for _ in 0..config.split_merge_per_sweep {
            for mode in [Mode::Row, Mode::Col] {
                sampler.split_merge(&mut state, mode, config.restricted_sweeps, &mut rng);
            }
        }
        if cfg!(debug_assertions) && (sweep + 1) % 100 == 0 {
            if let Err(e) = sampler.check_state(&state) {
                panic!("sampler state inconsistent after sweep {}: {e}", sweep + 1);
            }
        }
        trace.push(state.log_posterior);
        if best.as_ref().is_none_or(|b| state.log_posterior > b.log_posterior) {
            best = Some(state.clone());
        }
    }
    Inference { best: best.unwrap_or(state), trace, seed }
}

/// `restarts` independent chains seeded from `config.seed`, in order.
pub fn run_restarts(
    a: &BinaryAttendance,
    config: &IrmConfig,
    mask: &HeldOutMask,
    restarts: usize,
) -> Result<Vec<Inference>> {
    let hyper = config.hyperparameters(a.n_rows(), a.n_cols())?;
    let sampler = Sampler::new(a, mask, hyper)?;
    Ok((0..restarts)
        .map(|r| run_chain(&sampler, config, derive_seed(config.seed, r as u64)))
        .collect())
}

/// The chain whose best state has the highest log posterior (first on ties).
pub fn best_of(runs: &[Inference]) -> Option<&Inference> {
    runs.iter().fold(None, |acc: Option<&Inference>, r| match acc {
        Some(b) if b.best.log_posterior >= r.best.log_posterior => Some(b),
        _ => Some(r),
    })
}

impl Sampler {
    /// Runs one chain on this sampler's data with an explicit seed.
    pub fn run(&self, config: &IrmConfig, seed: u64) -> Inference {
        run_chain(self, config, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irm::Concentration;
    use alloc::vec;

    #[test]
    fn trace_maximum_is_best_state() {
        let a = BinaryAttendance::from_dense(&[
            vec![true, true, false, false, true],
            vec![true, true, false, false, false],
            vec![false, false, true, true, false],
            vec![false, false, true, true, true],
            vec![true, true, false, true, false],
        ])
        .unwrap();
        let config = IrmConfig { sweeps: 60, seed: 3, ..Default::default() };
        let run = run_inference(&a, &config, &HeldOutMask::empty()).unwrap();
        assert_eq!(run.trace.len(), 60);
        let max = run.trace.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(run.best.log_posterior(), max);
        let recomputed = crate::irm::joint_log_posterior(
            &a,
            run.best.rows(),
            run.best.cols(),
            &config,
            &HeldOutMask::empty(),
        )
        .unwrap();
        assert!((recomputed - max).abs() < 1e-9);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = BinaryAttendance::from_dense(&[vec![true, false], vec![false, true], vec![true, true]]).unwrap();
        let config = IrmConfig {
            sweeps: 30,
            alpha_row: Concentration::Value(1.0),
            alpha_col: Concentration::Value(1.0),
            seed: 17,
            ..Default::default()
        };
        let x = run_inference(&a, &config, &HeldOutMask::empty()).unwrap();
        let y = run_inference(&a, &config, &HeldOutMask::empty()).unwrap();
        assert_eq!(x.trace, y.trace);
        assert_eq!(x.best, y.best);
    }
}
