//! Acceptance criteria 1–10. Each test prints one PASS/FAIL line to stderr
//! (bypassing output capture) and fails when its criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::process::Command;

use groupscan_core::attendance::{
    binarize, build_count_matrix, remove_outliers, AttendanceWindow, BinaryAttendance, Concert, CountMatrix, Genre,
    Origin, OutlierRules, StageSize,
};
use groupscan_core::eval::{chi_squared_enrichment, nmi, robustness_run, EnrichmentConfig, Feature, MeanSd};
use groupscan_core::ingest::{DeviceId, ScanEvent, ScannerInfo, ScannerMap};
use groupscan_core::irm::{
    best_of, crp_log_prior, HeldOutMask, Hyperparameters, IrmConfig, Mode, Partition, Sampler,
};
use groupscan_core::microgroups::{bin_events, rewire, thresholded_graph, EdgeThresholds, OccurrenceMatrix};
use groupscan_core::rng::{derive_seed, seeded};
use groupscan_core::synth::{gen_bipartite, gen_noise, gen_trajectories, PlantedBipartiteSpec, PlantedTrajectorySpec};
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

fn verdict(criterion: u32, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {criterion:>2} {}: {title}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

// ----------------------------------------------------------------- oracles

/// Restricted growth strings of length `n` (every set partition once).
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for c in 0..=max + 1 {
            prefix.push(c);
            grow(prefix, max.max(c), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut vec![0], 0, n, &mut out);
    out
}

fn crp_oracle(labels: &[usize], alpha: f64) -> f64 {
    let k = labels.iter().max().unwrap() + 1;
    let sizes = (0..k).map(|c| labels.iter().filter(|&&l| l == c).count());
    k as f64 * alpha.ln() + ln_gamma(alpha) - ln_gamma(labels.len() as f64 + alpha)
        + sizes.map(|s| ln_gamma(s as f64)).sum::<f64>()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn joint_oracle(dense: &[Vec<bool>], rows: &[usize], cols: &[usize], alpha: f64, beta: f64) -> f64 {
    let l1 = rows.iter().max().unwrap() + 1;
    let l2 = cols.iter().max().unwrap() + 1;
    let mut pos = vec![vec![0.0; l2]; l1];
    let mut neg = vec![vec![0.0; l2]; l1];
    for (i, row) in dense.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x {
                pos[rows[i]][cols[j]] += 1.0;
            } else {
                neg[rows[i]][cols[j]] += 1.0;
            }
        }
    }
    let mut lp = crp_oracle(rows, alpha) + crp_oracle(cols, alpha);
    for l in 0..l1 {
        for m in 0..l2 {
            lp += ln_beta(pos[l][m] + beta, neg[l][m] + beta) - ln_beta(beta, beta);
        }
    }
    lp
}

type PairKey = (Vec<usize>, Vec<usize>);

fn exact_posterior(dense: &[Vec<bool>], alpha: f64, beta: f64) -> HashMap<PairKey, f64> {
    let mut lps = Vec::new();
    for r in set_partitions(dense.len()) {
        for c in set_partitions(dense[0].len()) {
            let lp = joint_oracle(dense, &r, &c, alpha, beta);
            lps.push(((r.clone(), c), lp));
        }
    }
    let max = lps.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = lps.iter().map(|x| (x.1 - max).exp()).sum();
    lps.into_iter().map(|(k, lp)| (k, (lp - max).exp() / z)).collect()
}

fn total_variation(p: &HashMap<PairKey, f64>, q: &HashMap<PairKey, f64>) -> f64 {
    let keys: std::collections::HashSet<_> = p.keys().chain(q.keys()).collect();
    0.5 * keys.into_iter().map(|k| (p.get(k).unwrap_or(&0.0) - q.get(k).unwrap_or(&0.0)).abs()).sum::<f64>()
}

// --------------------------------------------------------------- criterion 1

fn chain_distribution(sampler: &Sampler, sweeps: usize, split_merge: bool, seed: u64) -> HashMap<PairKey, f64> {
    let mut rng = seeded(seed);
    let mut state = sampler.prior_state(&mut rng);
    let mut counts: HashMap<PairKey, usize> = HashMap::new();
    for _ in 0..sweeps {
        sampler.gibbs_sweep(&mut state, &mut rng);
        if split_merge {
            for mode in [Mode::Row, Mode::Col] {
                sampler.split_merge(&mut state, mode, 3, &mut rng);
            }
        }
        *counts.entry((state.rows().canonical(), state.cols().canonical())).or_default() += 1;
    }
    counts.into_iter().map(|(k, n)| (k, n as f64 / sweeps as f64)).collect()
}

#[test]
fn criterion_01_exhaustive_posterior() {
    const SWEEPS: usize = 1_000_000;
    let started = std::time::Instant::now();
    let mut suite_rng = seeded(20_240_601);
    let matrices: Vec<Vec<Vec<bool>>> = (0..20)
        .map(|_| (0..4).map(|_| (0..3).map(|_| suite_rng.random_bool(0.5)).collect()).collect())
        .collect();
    let results: Vec<(f64, f64)> = matrices
        .par_iter()
        .enumerate()
        .map(|(k, dense)| {
            let exact = exact_posterior(dense, 0.5, 1.0);
            assert_eq!(exact.len(), 75);
            let a = BinaryAttendance::from_dense(dense).unwrap();
            let hyper = Hyperparameters { beta: 1.0, alpha_row: 0.5, alpha_col: 0.5 };
            let sampler = Sampler::new(&a, &HeldOutMask::empty(), hyper).unwrap();
            let gibbs = chain_distribution(&sampler, SWEEPS, false, derive_seed(1, k as u64));
            let sm = chain_distribution(&sampler, SWEEPS, true, derive_seed(2, k as u64));
            (total_variation(&gibbs, &exact), total_variation(&sm, &exact))
        })
        .collect();
    let max_gibbs = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_sm = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let elapsed = started.elapsed().as_secs_f64();
    let pass = max_gibbs <= 0.05 && max_sm <= 0.05;
    verdict(
        1,
        "exhaustive-posterior oracle",
        pass,
        &format!(
            "20 matrices, max TV {max_gibbs:.4} (Gibbs), {max_sm:.4} (split-merge), tolerance 0.05, {elapsed:.0} s"
        ),
    );
    assert!(pass);
}

// --------------------------------------------------------------- criterion 2

#[test]
fn criterion_02_crp() {
    const DRAWS: usize = 1_000_000;
    let mut worst_sum = 0.0f64;
    let mut worst_oracle = 0.0f64;
    let mut worst_z = 0.0f64;
    let mut cells = 0;
    let mut outside = Vec::new();
    for n in [3usize, 4, 5] {
        for alpha in [0.5, 1.0, 2.0] {
            let partitions = set_partitions(n);
            let probs: Vec<f64> = partitions
                .iter()
                .map(|p| crp_log_prior(&Partition::from_labels(p), alpha, n).unwrap().exp())
                .collect();
            worst_sum = worst_sum.max((probs.iter().sum::<f64>() - 1.0).abs());
            for (p, &q) in partitions.iter().zip(&probs) {
                worst_oracle = worst_oracle.max((q - crp_oracle(p, alpha).exp()).abs());
            }

            // sequential seating: customer k joins a table of size s with
            // probability s / (k + α), or a new table with α / (k + α)
            let mut rng = seeded(derive_seed(n as u64, alpha.to_bits()));
            let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
            let mut labels = Vec::with_capacity(n);
            let mut sizes: Vec<usize> = Vec::new();
            for _ in 0..DRAWS {
                labels.clear();
                sizes.clear();
                for k in 0..n {
                    let u = rng.random::<f64>() * (k as f64 + alpha);
                    let mut acc = 0.0;
                    let mut table = sizes.len();
                    for (t, &s) in sizes.iter().enumerate() {
                        acc += s as f64;
                        if u < acc {
                            table = t;
                            break;
                        }
                    }
                    if table == sizes.len() {
                        sizes.push(0);
                    }
                    sizes[table] += 1;
                    labels.push(table);
                }
                *counts.entry(labels.clone()).or_default() += 1;
            }
            for (p, &q) in partitions.iter().zip(&probs) {
                let freq = *counts.get(p).unwrap_or(&0) as f64 / DRAWS as f64;
                let sd = (q * (1.0 - q) / DRAWS as f64).sqrt();
                let z = (freq - q).abs() / sd;
                worst_z = worst_z.max(z);
                cells += 1;
                if z > 3.0 {
                    outside.push(format!("n={n} α={alpha} {p:?}: z={z:.2}"));
                }
            }
        }
    }
    let pass = worst_sum <= 1e-12 && worst_oracle <= 1e-12 && outside.is_empty();
    verdict(
        2,
        "CRP enumeration and seating simulation",
        pass,
        &format!(
            "max |Σp − 1| = {worst_sum:.1e}, max |p − closed form| = {worst_oracle:.1e}, \
             {cells} partitions, max |z| = {worst_z:.2} (limit 3){}",
            if outside.is_empty() { String::new() } else { format!(", outside: {}", outside.join("; ")) }
        ),
    );
    assert!(pass);
}

// --------------------------------------------------------------- criterion 3

/// AUC of the scorer that knows every cell's planted rate exactly, by
/// counting link/non-link pairs.
fn planted_auc_ceiling(spec: &PlantedBipartiteSpec, a: &BinaryAttendance, rows: &[usize], cols: &[usize]) -> f64 {
    let (mut link_in, mut link_out, mut non_in, mut non_out) = (0f64, 0f64, 0f64, 0f64);
    for (i, &l) in rows.iter().enumerate() {
        for (j, &m) in cols.iter().enumerate() {
            match (a.get(i, j), spec.is_paired(l, m)) {
                (true, true) => link_in += 1.0,
                (true, false) => link_out += 1.0,
                (false, true) => non_in += 1.0,
                (false, false) => non_out += 1.0,
            }
        }
    }
    let wins = link_in * non_out + 0.5 * (link_in * non_in + link_out * non_out);
    wins / ((link_in + link_out) * (non_in + non_out))
}

#[test]
fn criterion_03_planted_recovery() {
    let spec = PlantedBipartiteSpec { seed: 3, ..Default::default() };
    let planted = gen_bipartite(&spec).unwrap();
    let a = &planted.attendance;
    let config = IrmConfig { sweeps: 500, seed: 33, ..Default::default() };
    let hyper = config.hyperparameters(a.n_rows(), a.n_cols()).unwrap();
    let sampler = Sampler::new(a, &HeldOutMask::empty(), hyper).unwrap();
    let restarts: Vec<_> =
        (0..10u64).into_par_iter().map(|r| sampler.run(&config, derive_seed(config.seed, r))).collect();
    let best = &best_of(&restarts).unwrap().best;
    let nmi_rows = nmi(best.rows(), &planted.rows()).unwrap();
    let nmi_cols = nmi(best.cols(), &planted.cols()).unwrap();

    let aucs: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|r| robustness_run(a, &config, 0.025, derive_seed(303, r)).unwrap().auc)
        .collect();
    let auc = MeanSd::of(&aucs);
    let ceiling = planted_auc_ceiling(&spec, a, &planted.row_labels, &planted.col_labels);

    let nmi_pass = nmi_rows >= 0.95 && nmi_cols >= 0.95;
    let auc_pass = auc.mean >= 0.95;
    verdict(
        3,
        "planted co-cluster recovery",
        nmi_pass && auc_pass,
        &format!(
            "NMI rows {nmi_rows:.3}, columns {nmi_cols:.3} (≥ 0.95: {}); held-out AUC {:.3} ± {:.3} over 10 runs \
             (≥ 0.95: {}; Bayes ceiling for these planted rates {ceiling:.3})",
            if nmi_pass { "met" } else { "not met" },
            auc.mean,
            auc.sd,
            if auc_pass { "met" } else { "not met" },
        ),
    );
    assert!(nmi_pass, "NMI rows {nmi_rows}, columns {nmi_cols}");
    assert!(auc_pass, "held-out AUC {:.3} below 0.95; planted-rate ceiling {ceiling:.3}", auc.mean);
}

// --------------------------------------------------------------- criterion 4

#[test]
fn criterion_04_noise_auc() {
    let a = gen_noise(200, 40, 0.1, 4).unwrap();
    let config = IrmConfig { sweeps: 500, seed: 44, ..Default::default() };
    let aucs: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|r| robustness_run(&a, &config, 0.025, derive_seed(config.seed, r)).unwrap().auc)
        .collect();
    let auc = MeanSd::of(&aucs);
    let pass = (0.45..=0.58).contains(&auc.mean);
    verdict(
        4,
        "null-structure control",
        pass,
        &format!("Bernoulli(0.1) 200×40, AUC {:.3} ± {:.3} over 10 runs, band [0.45, 0.58]", auc.mean, auc.sd),
    );
    assert!(pass);
}

// --------------------------------------------------------------- criterion 5

#[test]
fn criterion_05_posterior_mean() {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n_pos in 0..=8usize {
        for n_neg in 0..=8usize {
            if n_pos + n_neg == 0 {
                continue;
            }
            let row: Vec<bool> = (0..n_pos + n_neg).map(|k| k < n_pos).collect();
            let a = BinaryAttendance::from_dense(&[row]).unwrap();
            for beta in [0.1, 0.5, 1.0, 2.0, 7.5] {
                let hyper = Hyperparameters { beta, alpha_row: 1.0, alpha_col: 1.0 };
                let sampler = Sampler::new(&a, &HeldOutMask::empty(), hyper).unwrap();
                let state = sampler
                    .state(Partition::single_cluster(1), Partition::single_cluster(n_pos + n_neg))
                    .unwrap();
                let got = state.predict_eta().get(0, 0);
                let want = (n_pos as f64 + beta) / (n_pos as f64 + n_neg as f64 + 2.0 * beta);
                worst = worst.max((got - want).abs());
                cases += 1;
            }
        }
    }
    let pass = worst <= 1e-12;
    verdict(
        5,
        "posterior-mean identity",
        pass,
        &format!("{cases} (N⁺, N⁻, β) cases, max |η̂ − (N⁺+β)/(N⁺+N⁻+2β)| = {worst:.1e}"),
    );
    assert!(pass);
}

// ------------------------------------------------------------ criteria 6, 7

fn degrees(occ: &OccurrenceMatrix) -> (Vec<usize>, Vec<usize>) {
    let devices = occ.rows().iter().map(Vec::len).collect();
    let mut bins = vec![0; occ.bins().len()];
    for r in occ.rows() {
        for &b in r {
            bins[b as usize] += 1;
        }
    }
    (devices, bins)
}

/// Surviving edge counts of `trials` rewired copies, plus whether every copy
/// kept all device and bin degrees.
fn baseline_edges(occ: &OccurrenceMatrix, th: &EdgeThresholds, trials: u64, seed: u64) -> (Vec<f64>, bool) {
    let original = degrees(occ);
    let target = 10 * occ.num_incidences();
    let per_trial: Vec<(f64, bool)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (rewired, _) = rewire(occ, target, 10 * target, &mut seeded(derive_seed(seed, t))).unwrap();
            let kept = degrees(&rewired) == original;
            (thresholded_graph(&rewired, th).unwrap().num_edges() as f64, kept)
        })
        .collect();
    (per_trial.iter().map(|x| x.0).collect(), per_trial.iter().all(|x| x.1))
}

#[test]
fn criterion_06_micro_group_recovery() {
    let spec = PlantedTrajectorySpec { p_follow: 0.8, seed: 6, ..Default::default() };
    assert_eq!((spec.num_devices, spec.num_groups, spec.num_bins, spec.num_scanners), (500, 60, 288, 10));
    let planted = gen_trajectories(&spec).unwrap();
    let occ = bin_events(&planted.events, spec.bin_width, Some(spec.t0)).unwrap();
    let th = EdgeThresholds { min_weight: 0.5, min_locations: 3, min_co: 3 };
    let graph = thresholded_graph(&occ, &th).unwrap();
    let pairs = planted.intra_group_pairs();
    let recovered = pairs.iter().filter(|(a, b)| graph.edge(a.as_str(), b.as_str()).is_some()).count();
    let recall = recovered as f64 / pairs.len() as f64;

    let (edges, degrees_kept) = baseline_edges(&occ, &th, 35, 66);
    let base = MeanSd::of(&edges);
    let real = graph.num_edges() as f64;
    let pass = recall >= 0.9 && real > base.mean + 2.0 * base.sd && degrees_kept;
    verdict(
        6,
        "micro-group recovery",
        pass,
        &format!(
            "{recovered}/{} intra-group pairs survive ({:.1}%, need ≥ 90%); {real} edges vs baseline \
             {:.2} ± {:.2} over 35 trials",
            pairs.len(),
            100.0 * recall,
            base.mean,
            base.sd
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_rewiring_null_soundness() {
    let th = EdgeThresholds::default();
    let outcomes: Vec<(f64, MeanSd, bool)> = (0..20u64)
        .map(|s| {
            let spec = PlantedTrajectorySpec { p_follow: 0.0, seed: 700 + s, ..Default::default() };
            let planted = gen_trajectories(&spec).unwrap();
            let occ = bin_events(&planted.events, spec.bin_width, Some(spec.t0)).unwrap();
            let real = thresholded_graph(&occ, &th).unwrap().num_edges() as f64;
            let (edges, kept) = baseline_edges(&occ, &th, 35, derive_seed(77, s));
            (real, MeanSd::of(&edges), kept)
        })
        .collect();
    let within = outcomes.iter().filter(|(r, b, _)| (r - b.mean).abs() <= 2.0 * b.sd).count();
    let degrees_kept = outcomes.iter().all(|o| o.2);
    let pass = within >= 18 && degrees_kept;
    let sample: Vec<String> =
        outcomes.iter().take(3).map(|(r, b, _)| format!("{r} vs {:.2} ± {:.2}", b.mean, b.sd)).collect();
    verdict(
        7,
        "rewiring-null soundness",
        pass,
        &format!(
            "{within}/20 seeds within baseline ± 2σ (need 18), degrees preserved in all 700 trials: {degrees_kept}; \
             first seeds: {}",
            sample.join(", ")
        ),
    );
    assert!(pass);
}

// --------------------------------------------------------------- criterion 8

fn concert(id: u32, stage: &str, start: i64) -> Concert {
    Concert {
        concert_id: id,
        band: format!("band{id}"),
        stage: stage.into(),
        start_time: start,
        date: "2012-07-05".into(),
        genre: Genre::RockPop,
        origin: Origin::Denmark,
        playcount: 1000,
        stage_size: StageSize::Big,
    }
}

fn event(t: i64, device: &str) -> ScanEvent {
    ScanEvent { timestamp: t, scanner_id: 1, device_id: DeviceId(device.into()), vendor: None }
}

#[test]
fn criterion_08_preprocessing_fixtures() {
    let mut failures = Vec::new();

    // window boundaries
    let start = 100_000;
    let schedule = vec![concert(1, "A", start)];
    let scanners = ScannerMap { scanners: vec![ScannerInfo { id: 1, stage: "A".into(), location: "front".into() }] };
    let events = vec![
        event(start - 601, "early_out"),
        event(start - 600, "early_in"),
        event(start + 6300, "late_in"),
        event(start + 6301, "late_out"),
    ];
    let (counts, stats) = build_count_matrix(&events, &schedule, &scanners, AttendanceWindow::default()).unwrap();
    if counts.participants != ["early_in", "late_in"] || stats.counted != 2 || stats.outside_windows != 2 {
        failures.push(format!("window: participants {:?}, stats {stats:?}", counts.participants));
    }

    // outlier rules: three stages of ten concerts each
    let mut schedule = Vec::new();
    for (s, stage) in ["A", "B", "C"].iter().enumerate() {
        for k in 0..10 {
            schedule.push(concert((10 * s + k) as u32, stage, 10_000 * k as i64));
        }
    }
    let at = |a: u32, b: u32, c: u32| -> Vec<u32> {
        (0..a).chain(10..10 + b).chain(20..20 + c).collect()
    };
    let rows: Vec<(&str, Vec<u32>, bool)> = vec![
        ("sparse_3", at(1, 1, 1), true),
        ("sparse_2", at(1, 1, 0), false),
        ("fraction_exact", at(7, 3, 0), false),
        ("fraction_below", at(6, 0, 0), true),
        ("dominance_exact", at(8, 2, 2), false),
        ("dominance_below", at(7, 2, 2), true),
    ];
    let a = BinaryAttendance::new(
        rows.iter().map(|r| r.0.to_string()).collect(),
        (0..30).collect(),
        rows.iter().map(|r| r.1.clone()).collect(),
        2,
    )
    .unwrap();
    let rules = OutlierRules::default();
    assert_eq!((rules.min_concerts, rules.stage_fraction, rules.stage_dominance), (3, 0.7, 2.0));
    let (kept, report) = remove_outliers(&a, &schedule, rules);
    let expected: Vec<&str> = rows.iter().filter(|r| r.2).map(|r| r.0).collect();
    if kept.participants() != expected.as_slice() {
        failures.push(format!("outliers: kept {:?}, expected {expected:?}", kept.participants()));
    }
    if report.removed_sparse != ["sparse_2"] {
        failures.push(format!("sparse rule removed {:?}", report.removed_sparse));
    }
    if report.removed_stationary != ["fraction_exact", "dominance_exact"] {
        failures.push(format!("stationary rule removed {:?}", report.removed_stationary));
    }

    // binarization monotonicity
    let mut rng = seeded(8);
    let counts = CountMatrix {
        participants: (0..40).map(|i| format!("p{i}")).collect(),
        concerts: (0..12).collect(),
        rows: (0..40)
            .map(|_| (0..12u32).filter_map(|j| Some((j, rng.random_range(0..7u32))).filter(|c| c.1 > 0)).collect())
            .collect(),
    };
    for t in 1..7 {
        let lo = binarize(&counts, t).unwrap();
        let hi = binarize(&counts, t + 1).unwrap();
        if hi.triplets().any(|(i, j)| !lo.get(i as usize, j as usize)) || hi.num_links() > lo.num_links() {
            failures.push(format!("threshold {} adds links over {t}", t + 1));
        }
    }

    let pass = failures.is_empty();
    verdict(
        8,
        "preprocessing rules",
        pass,
        &if pass {
            "window −600/+6300 inclusive, both outlier rules at their boundaries, thresholds 1–7 nested".to_string()
        } else {
            failures.join("; ")
        },
    );
    assert!(pass);
}

// --------------------------------------------------------------- criterion 9

#[test]
fn criterion_09_enrichment_fixture() {
    const GENRES: [Genre; 6] =
        [Genre::Electronic, Genre::RockPop, Genre::FolkWorld, Genre::HipHopRap, Genre::MetalPunkHardcore, Genre::Other];
    // 12 concerts per genre: an all-electronic cluster of 10, a balanced
    // cluster of 12 (2 per genre) and the rest
    let mut concerts = Vec::new();
    let mut labels = Vec::new();
    for (g, &genre) in GENRES.iter().enumerate() {
        for k in 0..12 {
            let mut c = concert((12 * g + k) as u32, "A", 0);
            c.genre = genre;
            concerts.push(c);
            labels.push(match (g, k) {
                (0, k) if k < 10 => 0,
                (_, k) if k >= 10 => 1,
                _ => 2,
            });
        }
    }
    let config = EnrichmentConfig { features: vec![Feature::Genre], ..Default::default() };
    let report = chi_squared_enrichment(&Partition::from_labels(&labels), &concerts, &config).unwrap();
    let by_size: BTreeMap<usize, _> = report.clusters.iter().map(|c| (c.size, &c.tests[0])).collect();
    let electronic = by_size[&10];
    let balanced = by_size[&12];
    let p_oracle = ChiSquared::new(5.0).unwrap().sf(50.0);
    let pass = (electronic.chi_squared - 50.0).abs() <= 1e-9
        && electronic.df == 5
        && electronic.p_value < 0.001
        && (electronic.p_value - p_oracle).abs() <= 1e-9 * p_oracle
        && balanced.chi_squared.abs() <= 1e-12;
    verdict(
        9,
        "enrichment fixture",
        pass,
        &format!(
            "all-electronic χ² = {:.12} (df {}, p = {:.3e}, χ²₅ survival {p_oracle:.3e}); balanced χ² = {:.1e}",
            electronic.chi_squared, electronic.df, electronic.p_value, balanced.chi_squared
        ),
    );
    assert!(pass);
}

// -------------------------------------------------------------- criterion 10

const STAGES: [&str; 8] = ["synth", "ingest", "attendance", "irm", "robustness", "enrich", "micro", "report"];

fn run_chain(dir: &Path, jobs: &str) -> Vec<(String, i32)> {
    let config = dir.join("planted.toml");
    std::fs::copy(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/planted.toml"), &config).unwrap();
    STAGES
        .iter()
        .map(|stage| {
            let status = Command::new(env!("CARGO_BIN_EXE_groupscan"))
                .args(["--config", config.to_str().unwrap(), "--jobs", jobs, stage])
                .env("RUST_LOG", "warn")
                .status()
                .unwrap();
            (stage.to_string(), status.code().unwrap_or(-1))
        })
        .collect()
}

fn json_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn criterion_10_cli_determinism() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let codes_a = run_chain(first.path(), "1");
    let codes_b = run_chain(second.path(), "4");
    let failed: Vec<String> =
        codes_a.iter().chain(&codes_b).filter(|(_, c)| *c != 0).map(|(s, c)| format!("{s} exited {c}")).collect();
    let a = json_outputs(first.path());
    let b = json_outputs(second.path());
    let differing: Vec<&String> = a.keys().filter(|k| b.get(*k) != a.get(*k)).collect();
    let pass = failed.is_empty() && a.len() == 9 && a.keys().eq(b.keys()) && differing.is_empty();
    verdict(
        10,
        "CLI determinism",
        pass,
        &format!(
            "8 stages twice (--jobs 1 and 4): {} non-zero exits, {} JSON outputs, {} differ{}",
            failed.len(),
            a.len(),
            differing.len(),
            if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
        ),
    );
    assert!(pass);
}

