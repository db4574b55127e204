//! The pipeline stages. Each reads its declared inputs, writes its outputs
//! into the output directory and returns the files it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use groupscan_core::attendance::{
    binarize, build_count_matrix, popularity_correlation, remove_outliers, validate_schedule, BinaryAttendance,
    CountStats, OutlierReport, StageSize,
};
use groupscan_core::eval::{cluster_report, robustness_run, ClusterReport, MeanSd, RobustnessReport};
use groupscan_core::ingest::{summarize, to_event, DatasetSummary, ScanEvent};
use groupscan_core::irm::{best_of, HeldOutMask, Hyperparameters, Inference, Partition, Sampler};
use groupscan_core::microgroups::{
    bin_events, filter_devices, merge_duplicates, null_trial, threshold_edges, CoOccurrenceIndex, EdgeThresholds,
    MergeGroup, MicroGroupGraph, NullModelStats, OccurrenceMatrix,
};
use groupscan_core::rng::derive_seed;
use groupscan_core::synth::gen_festival;
use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::artifact::{provenance, Artifact};
use crate::config::{IrmParams, PipelineConfig, Stream};
use crate::error::{CliError, Result};
use crate::formats::{
    self, format_oui, read_events, read_json, read_oui, read_scan_log, read_scanner_map, read_schedule,
    read_triplets, require, to_dot, write_events, write_json, write_rows, write_scan_log, write_text,
    write_triplets, AttendanceLabels, SkippedLine,
};

pub const EVENTS_CSV: &str = "events.csv";
pub const INGEST_JSON: &str = "ingest.json";
pub const ATTENDANCE_CSV: &str = "attendance.csv";
pub const ATTENDANCE_JSON: &str = "attendance.json";
pub const IRM_JSON: &str = "irm_state.json";
pub const IRM_TRACE_CSV: &str = "irm_trace.csv";
pub const ETA_CSV: &str = "eta.csv";
pub const ROBUSTNESS_JSON: &str = "robustness.json";
pub const ROBUSTNESS_RUNS_CSV: &str = "robustness_runs.csv";
pub const ROBUSTNESS_TRACE_CSV: &str = "robustness_trace.csv";
pub const CLUSTERS_JSON: &str = "clusters.json";
pub const ENRICHMENT_CSV: &str = "enrichment.csv";
pub const MEMBERS_CSV: &str = "cluster_members.csv";
pub const MICRO_JSON: &str = "micro.json";
pub const NULL_MODEL_JSON: &str = "null_model.json";
pub const EDGES_CSV: &str = "micro_edges.csv";
pub const GRAPH_DOT: &str = "micro_graph.dot";
pub const SYNTH_JSON: &str = "synth.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

/// Stage JSON outputs collected by `report`, in pipeline order.
pub const STAGE_ARTIFACTS: [&str; 8] =
    [SYNTH_JSON, INGEST_JSON, ATTENDANCE_JSON, IRM_JSON, ROBUSTNESS_JSON, CLUSTERS_JSON, MICRO_JSON, NULL_MODEL_JSON];

/// Skipped lines listed individually in `ingest.json`; the rest are counted.
const MAX_LISTED_SKIPS: usize = 100;

pub struct Context {
    pub config: PipelineConfig,
    pub hash: String,
    pool: rayon::ThreadPool,
}

impl Context {
    /// Validates `config` and sets up a worker pool of `jobs` threads (all
    /// cores when `None`).
    pub fn new(config: PipelineConfig, jobs: Option<usize>) -> Result<Self> {
        let errors = config.validate();
        if !errors.is_empty() {
            return Err(CliError::Config(errors));
        }
        if jobs == Some(0) {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Invariant(format!("worker pool: {e}")))?;
        let hash = config.hash();
        Ok(Self { config, hash, pool })
    }

    pub fn output(&self) -> &Path {
        &self.config.paths.output
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output().join(name)
    }

    fn provenance(&self) -> String {
        provenance(&self.hash, self.config.seed)
    }

    fn write_artifact<T: Serialize>(&self, name: &str, stage: &str, data: T) -> Result<PathBuf> {
        let path = self.out(name);
        let artifact = Artifact { stage: stage.into(), config_hash: self.hash.clone(), seed: self.config.seed, data };
        write_json(&path, &artifact)?;
        Ok(path)
    }

    /// Reads an upstream artifact, refusing one made under another config.
    fn read_artifact<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let path = self.out(name);
        let artifact: Artifact<T> = read_json(&path)?;
        if artifact.config_hash != self.hash {
            return Err(CliError::MixedArtifacts(format!(
                "{} has config hash {}, current config has {}",
                path.display(),
                artifact.config_hash,
                self.hash
            )));
        }
        Ok(artifact.data)
    }

    fn input_error(&self, path: &Path) -> impl Fn(groupscan_core::Error) -> CliError + '_ {
        let path = path.to_path_buf();
        move |e| match e {
            groupscan_core::Error::Invariant(m) => CliError::Invariant(m),
            other => CliError::input(&path, other),
        }
    }
}

// ---------------------------------------------------------------- ingest

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestOutput {
    pub records: usize,
    pub skipped_lines: usize,
    pub skipped: Vec<SkippedLine>,
    pub summary: DatasetSummary,
}

pub fn ingest(ctx: &Context) -> Result<Vec<PathBuf>> {
    let paths = &ctx.config.paths;
    require(&paths.events)?;
    require(&paths.oui)?;
    let oui = read_oui(&paths.oui)?;
    let (records, skipped) = read_scan_log(&paths.events)?;
    for s in skipped.iter().take(MAX_LISTED_SKIPS) {
        warn!("{}:{}: skipped: {}", paths.events.display(), s.line, s.reason);
    }
    let salt = ctx.config.ingest.salt.as_bytes();
    let events: Vec<ScanEvent> = ctx
        .pool
        .install(|| records.par_iter().map(|r| to_event(r, salt, &oui)).collect::<groupscan_core::Result<_>>())?;
    let summary = summarize(&events);
    info!(
        "ingest: {} records, {} skipped, {} devices",
        records.len(),
        skipped.len(),
        summary.unique_devices
    );
    let events_path = ctx.out(EVENTS_CSV);
    write_events(&events_path, &ctx.provenance(), &events)?;
    let output = IngestOutput {
        records: records.len(),
        skipped_lines: skipped.len(),
        skipped: skipped.into_iter().take(MAX_LISTED_SKIPS).collect(),
        summary,
    };
    Ok(vec![events_path, ctx.write_artifact(INGEST_JSON, "ingest", output)?])
}

// ------------------------------------------------------------ attendance

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopularityRow {
    pub stage_size: StageSize,
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttendanceOutput {
    pub labels: AttendanceLabels,
    pub count_stats: CountStats,
    /// Shape of the binarized matrix before outlier removal.
    pub binarized_rows: usize,
    pub binarized_links: usize,
    pub outliers: OutlierReport,
    pub rows: usize,
    pub cols: usize,
    pub links: usize,
    pub popularity: Vec<PopularityRow>,
}

pub fn attendance(ctx: &Context) -> Result<Vec<PathBuf>> {
    let paths = &ctx.config.paths;
    let events_path = ctx.out(EVENTS_CSV);
    for p in [&events_path, &paths.schedule, &paths.scanners] {
        require(p)?;
    }
    let params = &ctx.config.attendance;
    let events = read_events(&events_path)?;
    let schedule = read_schedule(&paths.schedule)?;
    let scanners = read_scanner_map(&paths.scanners)?;
    validate_schedule(&schedule, params.window(), Some(&scanners)).map_err(ctx.input_error(&paths.schedule))?;

    let (counts, count_stats) =
        build_count_matrix(&events, &schedule, &scanners, params.window()).map_err(ctx.input_error(&events_path))?;
    let binary = binarize(&counts, params.threshold)?;
    let (a, outliers) = remove_outliers(&binary, &schedule, params.outlier_rules());
    info!(
        "attendance: {}×{} with {} links ({} stationary, {} sparse removed)",
        a.n_rows(),
        a.n_cols(),
        a.num_links(),
        outliers.removed_stationary.len(),
        outliers.removed_sparse.len()
    );
    let popularity = popularity_correlation(&schedule, &a)
        .into_iter()
        .map(|(stage_size, c)| PopularityRow { stage_size, rho: c.rho, p_value: c.p_value, n: c.n })
        .collect();
    let triplets = ctx.out(ATTENDANCE_CSV);
    write_triplets(&triplets, &ctx.provenance(), &a)?;
    let output = AttendanceOutput {
        labels: AttendanceLabels {
            participants: a.participants().to_vec(),
            concerts: a.concerts().to_vec(),
            threshold: a.threshold_used(),
        },
        count_stats,
        binarized_rows: binary.n_rows(),
        binarized_links: binary.num_links(),
        outliers,
        rows: a.n_rows(),
        cols: a.n_cols(),
        links: a.num_links(),
        popularity,
    };
    Ok(vec![triplets, ctx.write_artifact(ATTENDANCE_JSON, "attendance", output)?])
}

fn load_attendance(ctx: &Context) -> Result<BinaryAttendance> {
    let csv = ctx.out(ATTENDANCE_CSV);
    require(&ctx.out(ATTENDANCE_JSON))?;
    require(&csv)?;
    let meta: AttendanceOutput = ctx.read_artifact(ATTENDANCE_JSON)?;
    let a = read_triplets(&csv, &meta.labels)?;
    if a.n_rows() == 0 || a.n_cols() == 0 {
        return Err(CliError::input(&csv, "attendance matrix is empty"));
    }
    Ok(a)
}

// ------------------------------------------------------------------- irm

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub seed: u64,
    pub best_log_posterior: f64,
    pub final_log_posterior: f64,
}

/// Best state over all restarts. Cluster labels are size ranks (0 = largest)
/// and `eta` is laid out in the same order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrmSnapshot {
    pub config: IrmParams,
    pub hyperparameters: Hyperparameters,
    pub participants: Vec<String>,
    pub concerts: Vec<u32>,
    pub row_assignments: Vec<usize>,
    pub col_assignments: Vec<usize>,
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
    pub log_posterior: f64,
    pub eta: Vec<Vec<f64>>,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
}

/// Labels renumbered by decreasing cluster size, with the sizes in that order.
fn by_size(p: &Partition) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let order = p.order_by_size();
    let mut rank = vec![0; order.len()];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r;
    }
    let labels = p.assignments().iter().map(|&c| rank[c]).collect();
    let sizes = order.iter().map(|&c| p.sizes()[c]).collect();
    (labels, sizes, order)
}

#[derive(Serialize)]
struct TraceRow {
    chain: usize,
    sweep: usize,
    log_posterior: f64,
}

fn trace_rows(traces: &[&[f64]]) -> Vec<TraceRow> {
    traces
        .iter()
        .enumerate()
        .flat_map(|(chain, t)| {
            t.iter().enumerate().map(move |(s, &lp)| TraceRow { chain, sweep: s + 1, log_posterior: lp })
        })
        .collect()
}

pub fn irm(ctx: &Context) -> Result<Vec<PathBuf>> {
    let a = load_attendance(ctx)?;
    let params = &ctx.config.irm;
    let config = params.irm_config(ctx.config.stream_seed(Stream::Irm));
    let hyper = config.hyperparameters(a.n_rows(), a.n_cols())?;
    let sampler = Sampler::new(&a, &HeldOutMask::empty(), hyper)?;
    let runs: Vec<Inference> = ctx.pool.install(|| {
        (0..params.restarts)
            .into_par_iter()
            .map(|r| sampler.run(&config, derive_seed(config.seed, r as u64)))
            .collect()
    });
    let best = best_of(&runs).expect("at least one restart");
    let best_restart = runs.iter().position(|r| std::ptr::eq(r, best)).unwrap_or(0);
    sampler.check_state(&best.best)?;
    let state = &best.best;
    info!(
        "irm: best log posterior {:.3} from restart {best_restart}, {} row × {} column clusters",
        state.log_posterior(),
        state.rows().num_clusters(),
        state.cols().num_clusters()
    );

    let (row_assignments, row_sizes, row_order) = by_size(state.rows());
    let (col_assignments, col_sizes, col_order) = by_size(state.cols());
    let eta_raw = state.predict_eta();
    let eta: Vec<Vec<f64>> =
        row_order.iter().map(|&l| col_order.iter().map(|&m| eta_raw.get(l, m)).collect()).collect();

    let prov = ctx.provenance();
    let eta_path = ctx.out(ETA_CSV);
    let mut w = formats::csv_writer(&eta_path, &prov)?;
    let io = |e: csv::Error| CliError::io(&eta_path, e.into());
    let mut header = vec!["row_cluster".to_string()];
    header.extend((0..col_sizes.len()).map(|m| format!("col_cluster_{m}")));
    w.write_record(&header).map_err(io)?;
    for (l, row) in eta.iter().enumerate() {
        let mut rec = vec![l.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(&eta_path, e))?;

    let trace_path = ctx.out(IRM_TRACE_CSV);
    let traces: Vec<&[f64]> = runs.iter().map(|r| r.trace.as_slice()).collect();
    write_rows(&trace_path, &prov, trace_rows(&traces))?;

    let snapshot = IrmSnapshot {
        config: params.clone(),
        hyperparameters: hyper,
        participants: a.participants().to_vec(),
        concerts: a.concerts().to_vec(),
        row_assignments,
        col_assignments,
        row_sizes,
        col_sizes,
        log_posterior: state.log_posterior(),
        eta,
        best_restart,
        restarts: runs
            .iter()
            .enumerate()
            .map(|(restart, r)| RestartSummary {
                restart,
                seed: r.seed,
                best_log_posterior: r.best.log_posterior(),
                final_log_posterior: r.trace.last().copied().unwrap_or(f64::NAN),
            })
            .collect(),
    };
    Ok(vec![ctx.write_artifact(IRM_JSON, "irm", snapshot)?, eta_path, trace_path])
}

// ------------------------------------------------------------ robustness

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub auc: f64,
    pub best_log_posterior: f64,
    pub row_clusters: usize,
    pub col_clusters: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessOutput {
    pub runs: usize,
    pub fraction: f64,
    pub pairwise_nmi_rows: MeanSd,
    pub pairwise_nmi_cols: MeanSd,
    pub auc: MeanSd,
    pub per_run: Vec<RunSummary>,
}

pub fn robustness(ctx: &Context) -> Result<Vec<PathBuf>> {
    let a = load_attendance(ctx)?;
    let eval = &ctx.config.eval;
    let config = ctx.config.irm.irm_config(ctx.config.stream_seed(Stream::Robustness));
    let seeds: Vec<u64> = (0..eval.runs as u64).map(|r| derive_seed(config.seed, r)).collect();
    let runs = ctx.pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| robustness_run(&a, &config, eval.fraction, s))
            .collect::<groupscan_core::Result<Vec<_>>>()
    })?;
    let report = RobustnessReport::from_runs(&runs)?;
    info!(
        "robustness: {} runs, AUC {:.3} ± {:.3}, NMI rows {:.3}, columns {:.3}",
        report.runs, report.auc.mean, report.auc.sd, report.pairwise_nmi_rows.mean, report.pairwise_nmi_cols.mean
    );
    let per_run: Vec<RunSummary> = runs
        .iter()
        .enumerate()
        .map(|(run, r)| RunSummary {
            run,
            seed: r.seed,
            auc: r.auc,
            best_log_posterior: r.best_log_posterior,
            row_clusters: r.rows.num_clusters(),
            col_clusters: r.cols.num_clusters(),
        })
        .collect();
    let prov = ctx.provenance();
    let runs_path = ctx.out(ROBUSTNESS_RUNS_CSV);
    write_rows(&runs_path, &prov, &per_run)?;
    let trace_path = ctx.out(ROBUSTNESS_TRACE_CSV);
    let traces: Vec<&[f64]> = report.traces.iter().map(Vec::as_slice).collect();
    write_rows(&trace_path, &prov, trace_rows(&traces))?;
    let output = RobustnessOutput {
        runs: report.runs,
        fraction: eval.fraction,
        pairwise_nmi_rows: report.pairwise_nmi_rows,
        pairwise_nmi_cols: report.pairwise_nmi_cols,
        auc: report.auc,
        per_run,
    };
    Ok(vec![ctx.write_artifact(ROBUSTNESS_JSON, "robustness", output)?, runs_path, trace_path])
}

// ---------------------------------------------------------------- enrich

#[derive(Serialize)]
struct EnrichmentRow<'a> {
    cluster_rank: usize,
    cluster_size: usize,
    feature: &'a str,
    category: &'a str,
    observed: u64,
    expected: f64,
    overall: u64,
    chi_squared: f64,
    df: usize,
    p_value: f64,
    significant: bool,
}

#[derive(Serialize)]
struct MemberRow<'a> {
    mode: &'a str,
    cluster_rank: usize,
    member: &'a str,
}

pub fn enrich(ctx: &Context) -> Result<Vec<PathBuf>> {
    let schedule_path = &ctx.config.paths.schedule;
    require(&ctx.out(IRM_JSON))?;
    require(schedule_path)?;
    let a = load_attendance(ctx)?;
    let snapshot: IrmSnapshot = ctx.read_artifact(IRM_JSON)?;
    let schedule = read_schedule(schedule_path)?;
    if snapshot.participants != a.participants() || snapshot.concerts != a.concerts() {
        return Err(CliError::input(ctx.out(IRM_JSON), "state labels do not match the attendance matrix"));
    }
    let sampler = Sampler::new(&a, &HeldOutMask::empty(), snapshot.hyperparameters)?;
    let state = sampler.state(
        Partition::from_labels(&snapshot.row_assignments),
        Partition::from_labels(&snapshot.col_assignments),
    )?;
    let report: ClusterReport =
        cluster_report(&state, &schedule, &a, &ctx.config.eval.enrichment()).map_err(ctx.input_error(schedule_path))?;
    info!(
        "enrich: {} concert clusters tested, {} skipped",
        report.enrichment.clusters.len(),
        report.enrichment.skipped.len()
    );

    let prov = ctx.provenance();
    let enrichment_path = ctx.out(ENRICHMENT_CSV);
    let rows = report.enrichment.clusters.iter().flat_map(|c| {
        c.tests.iter().flat_map(move |t| {
            t.categories.iter().enumerate().map(move |(k, category)| EnrichmentRow {
                cluster_rank: c.rank,
                cluster_size: c.size,
                feature: t.feature.label(),
                category,
                observed: t.observed[k],
                expected: t.expected[k],
                overall: t.overall[k],
                chi_squared: t.chi_squared,
                df: t.df,
                p_value: t.p_value,
                significant: t.significant,
            })
        })
    });
    write_rows(&enrichment_path, &prov, rows)?;

    let members_path = ctx.out(MEMBERS_CSV);
    let members = [("row", &report.row_clusters), ("col", &report.col_clusters)].into_iter().flat_map(
        |(mode, clusters)| {
            clusters.iter().flat_map(move |c| {
                c.members.iter().map(move |m| MemberRow { mode, cluster_rank: c.rank, member: m })
            })
        },
    );
    write_rows(&members_path, &prov, members)?;
    Ok(vec![ctx.write_artifact(CLUSTERS_JSON, "enrich", &report)?, enrichment_path, members_path])
}

// ----------------------------------------------------------------- micro

/// Thresholded co-occurrence graph, built in parallel over source devices.
pub fn parallel_thresholded_graph(
    occ: &OccurrenceMatrix,
    thresholds: &EdgeThresholds,
) -> groupscan_core::Result<MicroGroupGraph> {
    let index = CoOccurrenceIndex::new(occ)?;
    let per_source: Vec<Vec<_>> = (0..occ.n_devices())
        .into_par_iter()
        .map_init(
            || (index.scratch(), Vec::new()),
            |(scratch, buf), from| {
                index.edges_from(from, scratch, buf);
                buf.drain(..).filter(|e| thresholds.admits(e)).collect()
            },
        )
        .collect();
    let full = MicroGroupGraph { nodes: occ.devices().to_vec(), edges: per_source.into_iter().flatten().collect() };
    Ok(threshold_edges(&full, thresholds))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicroOutput {
    pub bin_width: i64,
    pub t0: i64,
    pub devices_binned: usize,
    pub bins: usize,
    pub incidences: usize,
    pub devices_after_filter: usize,
    pub merge_groups: Vec<MergeGroup>,
    pub devices_analysed: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Weakly connected components of two or more devices.
    pub components: Vec<Vec<String>>,
    /// Nodes with many incoming and no outgoing edges, for manual review.
    pub star_centers: Vec<String>,
    pub baseline_edges: MeanSd,
    pub baseline_nodes: MeanSd,
    /// (edges − baseline mean) / baseline sd; absent when the sd is zero.
    pub excess_edges_sigma: Option<f64>,
}

#[derive(Serialize)]
struct EdgeRow<'a> {
    from: &'a str,
    to: &'a str,
    weight: f64,
    co_count: u32,
    locations: u32,
}

pub fn micro(ctx: &Context) -> Result<Vec<PathBuf>> {
    let events_path = ctx.out(EVENTS_CSV);
    require(&events_path)?;
    let m = &ctx.config.micro;
    let events = read_events(&events_path)?;
    let occ = bin_events(&events, m.bin_width, m.t0).map_err(ctx.input_error(&events_path))?;
    let filtered = filter_devices(&occ, m.min_temporal, m.min_spatial)?;
    let (analysed, merge_groups) =
        if m.merge_duplicates { merge_duplicates(&filtered) } else { (filtered.clone(), Vec::new()) };
    let thresholds = m.thresholds();
    let graph = ctx.pool.install(|| parallel_thresholded_graph(&analysed, &thresholds))?;

    let seed = ctx.config.stream_seed(Stream::Micro);
    let trials = ctx.pool.install(|| {
        (0..m.trials as u64)
            .into_par_iter()
            .map(|t| null_trial(&analysed, &thresholds, m.swap_factor, derive_seed(seed, t)))
            .collect::<groupscan_core::Result<Vec<_>>>()
    })?;
    let null = NullModelStats::from_trials(trials)?;
    let edges = graph.num_edges();
    let excess = (null.surviving_edges.sd > 0.0)
        .then(|| (edges as f64 - null.surviving_edges.mean) / null.surviving_edges.sd);
    info!(
        "micro: {} devices analysed, {} nodes, {} edges; baseline {:.1} ± {:.1}",
        analysed.n_devices(),
        graph.num_nodes(),
        edges,
        null.surviving_edges.mean,
        null.surviving_edges.sd
    );

    let name = |k: usize| graph.nodes[k].clone();
    let output = MicroOutput {
        bin_width: occ.bin_width(),
        t0: occ.t0(),
        devices_binned: occ.n_devices(),
        bins: occ.bins().len(),
        incidences: occ.num_incidences(),
        devices_after_filter: filtered.n_devices(),
        merge_groups,
        devices_analysed: analysed.n_devices(),
        nodes: graph.num_nodes(),
        edges,
        components: graph
            .components()
            .into_iter()
            .filter(|c| c.len() > 1)
            .map(|c| c.into_iter().map(name).collect())
            .collect(),
        star_centers: graph.star_centers(m.star_min_in).into_iter().map(name).collect(),
        baseline_edges: null.surviving_edges,
        baseline_nodes: null.surviving_nodes,
        excess_edges_sigma: excess,
    };

    let edges_path = ctx.out(EDGES_CSV);
    write_rows(
        &edges_path,
        &ctx.provenance(),
        graph.edges.iter().map(|e| EdgeRow {
            from: &graph.nodes[e.from],
            to: &graph.nodes[e.to],
            weight: e.weight,
            co_count: e.co_count,
            locations: e.locations,
        }),
    )?;
    let dot_path = ctx.out(GRAPH_DOT);
    write_text(&dot_path, &format!("// {}\n{}", ctx.provenance(), to_dot(&graph)))?;
    Ok(vec![
        ctx.write_artifact(MICRO_JSON, "micro", output)?,
        ctx.write_artifact(NULL_MODEL_JSON, "micro", &null)?,
        edges_path,
        dot_path,
    ])
}

// ----------------------------------------------------------------- synth

/// Ground truth of a synthetic festival, keyed by hardware address.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub records: usize,
    pub concerts: Vec<u32>,
    pub macs: Vec<String>,
    pub row_labels: Vec<usize>,
    pub col_labels: Vec<usize>,
    pub planted_links: usize,
}

/// Writes a synthetic festival to the configured input paths.
pub fn synth(ctx: &Context) -> Result<Vec<PathBuf>> {
    let paths = &ctx.config.paths;
    let mut spec = ctx.config.synth.clone();
    spec.seed = ctx.config.stream_seed(Stream::Synth);
    let f = gen_festival(&spec)?;
    write_scan_log(&paths.events, &f.records)?;
    write_json(&paths.schedule, &f.schedule)?;
    write_json(&paths.scanners, &f.scanners)?;
    write_text(&paths.oui, &format_oui(&f.oui))?;
    info!(
        "synth: {} scans from {} devices at {} concerts",
        f.records.len(),
        f.macs.len(),
        f.schedule.len()
    );
    let output = SynthOutput {
        records: f.records.len(),
        concerts: f.planted.attendance.concerts().to_vec(),
        macs: f.macs.iter().map(|m| m.to_string()).collect(),
        row_labels: f.planted.row_labels.clone(),
        col_labels: f.planted.col_labels.clone(),
        planted_links: f.planted.attendance.num_links(),
    };
    Ok(vec![
        paths.events.clone(),
        paths.schedule.clone(),
        paths.scanners.clone(),
        paths.oui.clone(),
        ctx.write_artifact(SYNTH_JSON, "synth", output)?,
    ])
}

// ---------------------------------------------------------------- report

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub config_hash: String,
    pub seed: u64,
    pub stages: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct MetricRow<'a> {
    stage: &'a str,
    metric: String,
    value: String,
}

/// Scalars of a stage's data, descending one level into objects.
fn metrics<'a>(stage: &'a str, data: &serde_json::Value, out: &mut Vec<MetricRow<'a>>) {
    fn scalar(v: &serde_json::Value) -> Option<String> {
        match v {
            serde_json::Value::Number(n) => Some(n.to_string()),
            serde_json::Value::Bool(b) => Some(b.to_string()),
            _ => None,
        }
    }
    let Some(obj) = data.as_object() else { return };
    for (k, v) in obj {
        if let Some(s) = scalar(v) {
            out.push(MetricRow { stage, metric: k.clone(), value: s });
        } else if let Some(inner) = v.as_object() {
            for (k2, v2) in inner {
                if let Some(s) = scalar(v2) {
                    out.push(MetricRow { stage, metric: format!("{k}.{k2}"), value: s });
                }
            }
        }
    }
}

/// Collects every stage artifact in the output directory into one bundle.
/// Artifacts from differing configurations are refused.
pub fn report(ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut found: Vec<(&str, Artifact<serde_json::Value>)> = Vec::new();
    for name in STAGE_ARTIFACTS {
        let path = ctx.out(name);
        if path.exists() {
            found.push((name, read_json(&path)?));
        }
    }
    if found.is_empty() {
        return Err(CliError::MissingInput(ctx.out(INGEST_JSON)));
    }
    let hashes: std::collections::BTreeSet<&str> = found.iter().map(|(_, a)| a.config_hash.as_str()).collect();
    if hashes.len() > 1 {
        let listing: Vec<String> = found.iter().map(|(n, a)| format!("{n}={}", a.config_hash)).collect();
        return Err(CliError::MixedArtifacts(listing.join(", ")));
    }
    let (config_hash, seed) = (found[0].1.config_hash.clone(), found[0].1.seed);
    let mut rows = Vec::new();
    let mut stages = BTreeMap::new();
    for (name, artifact) in &found {
        let key = name.trim_end_matches(".json");
        metrics(key, &artifact.data, &mut rows);
        stages.insert(key.to_string(), artifact.data.clone());
    }
    let csv_path = ctx.out(REPORT_CSV);
    write_rows(&csv_path, &provenance(&config_hash, seed), &rows)?;
    let json_path = ctx.out(REPORT_JSON);
    write_json(&json_path, &Bundle { config_hash, seed, stages })?;
    Ok(vec![json_path, csv_path])
}
