//! Configuration-driven experiment harness: seeded trials over sample-size
//! sweeps, the community-count sweep, and the theory report.
//!
//! Every random choice flows from the master seed through tagged stream
//! paths (`[TAG_TRIAL, trial, TAG_GRAPH, m_index]`, ...), so results are
//! byte-identical across runs and independent of trial scheduling; the
//! `deterministic` flag merely forces serial execution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, FilterConfig, ModelConfig, ResolvedModel, TaskKind};
use crate::error::{Error, Result};
use crate::excitation::ExcitationSpec;
use crate::filter::{apply_filter, FilterSpec, ShiftKind};
use crate::graph::{GraphProcess, GraphSequence};
use crate::metrics::error_rate;
use crate::order::{select_order_mdl, select_order_threshold};
use crate::partition::{kmeans_cost, recover_partition, Labeling};
use crate::rng::{
    derive_seed, stream, TAG_COLORING, TAG_EXCITATION, TAG_GRAPH, TAG_KMEANS, TAG_PERMUTATION,
    TAG_SWEEP, TAG_TRIAL,
};
use crate::spectral::{
    eigendecompose, sample_covariance_centered, CovarianceAccumulator, SignalBatch,
    SpectralSummary,
};
use crate::theory::{
    adjacency_constants, analytic_spectrum, estimate_constants, sample_bounds, FilterConstants,
};

/// Per-trial outcome; fields are filled according to the task.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialRecord {
    pub trial: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_star_mdl: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_star_threshold: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmeans_cost: Option<f64>,
}

/// Aggregated outcomes at one swept sample size.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepPoint {
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr_error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct_rate_mdl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct_rate_threshold: Option<f64>,
    pub trials: Vec<TrialRecord>,
}

/// One (k, scheme) cell of the community-count sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SnrPoint {
    pub k: usize,
    /// "fixed" keeps the between-block probability; "normalized" scales it
    /// to keep the expected inter-cluster degree constant.
    pub scheme: String,
    pub m: usize,
    pub mean_overlap: f64,
    pub stderr_overlap: f64,
    pub trials: Vec<TrialRecord>,
}

/// Theory-oracle output for a model + filter pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TheoryReport {
    /// "closedForm" (adjacency filter with self-loops on an exact PPM) or
    /// "monteCarlo".
    pub route: String,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub n: usize,
    pub k: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub multiplicities: (usize, usize, usize),
    pub assumption_holds: bool,
    /// Relative sample-size difficulty scores `(1/(c3-c1)^2, 1/(c1-c2)^2)`;
    /// absent when a gap is closed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<(f64, f64)>,
}

/// A complete experiment outcome, embedding the resolved config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub points: Vec<SweepPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub snr_points: Vec<SnrPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<TheoryReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

/// One generated batch, already node-permuted, with its spectral summary
/// and the matching permuted truth.
pub struct TrialBatch {
    pub summary: SpectralSummary,
    pub truth: Labeling,
    pub m: usize,
}

/// Generates the batch for one (trial, sweep index) cell. The node
/// permutation hides the contiguous block layout from the inference path.
#[allow(clippy::too_many_arguments)]
pub fn generate_trial_batch(
    model: &ResolvedModel,
    filter: &FilterSpec,
    excitation: &ExcitationSpec,
    process: GraphProcess,
    self_loops: bool,
    mean_center: bool,
    m: usize,
    seed: u64,
    trial: u64,
    sweep: u64,
) -> Result<TrialBatch> {
    let n = model.sbm.n();
    let mut coloring_rng = stream(seed, &[TAG_TRIAL, trial, TAG_COLORING, sweep]);
    let prepared = excitation.prepare(n, &mut coloring_rng)?;
    let graph_rng = stream(seed, &[TAG_TRIAL, trial, TAG_GRAPH, sweep]);
    let mut excitation_rng = stream(seed, &[TAG_TRIAL, trial, TAG_EXCITATION, sweep]);
    let mut perm_rng = stream(seed, &[TAG_TRIAL, trial, TAG_PERMUTATION, sweep]);

    let mut permutation: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    permutation.shuffle(&mut perm_rng);

    let mut sequence = GraphSequence::new(&model.sbm, &model.labels, self_loops, process, graph_rng)?;

    let covariance = if mean_center {
        let mut signals = Vec::with_capacity(m);
        for _ in 0..m {
            let graph = sequence.advance()?;
            let w = prepared.draw(&mut excitation_rng);
            let y = apply_filter(filter, graph, &w)?;
            signals.push(permute_signal(&y, &permutation));
        }
        sample_covariance_centered(&SignalBatch::new(signals)?)
    } else {
        let mut acc = CovarianceAccumulator::new(n);
        let mut buffer = vec![0.0; n];
        for _ in 0..m {
            let graph = sequence.advance()?;
            let w = prepared.draw(&mut excitation_rng);
            let y = apply_filter(filter, graph, &w)?;
            for (i, &target) in permutation.iter().enumerate() {
                buffer[target] = y[i];
            }
            acc.push(&buffer);
        }
        acc.finish()?
    };

    let summary = eigendecompose(&covariance)?;
    let truth = Labeling::from_indicator(&model.labels.permuted(&permutation)?);
    Ok(TrialBatch { summary, truth, m })
}

fn permute_signal(y: &[f64], permutation: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    for (i, &target) in permutation.iter().enumerate() {
        out[target] = y[i];
    }
    out
}

/// True-spectrum constants for the threshold baseline and the theory
/// report: the Example-1 closed form when it applies, otherwise a Monte
/// Carlo estimate, both scaled by the white excitation variance.
pub fn resolve_constants(cfg: &ExperimentConfig, model: &ResolvedModel) -> Result<(FilterConstants, String)> {
    let sigma2 = cfg.excitation.white_variance().ok_or_else(|| {
        Error::AssumptionViolated(
            "true-spectrum constants require a white excitation; colored covariances are not \
             three-valued"
                .into(),
        )
    })?;
    let filter = cfg.filter.build(model.sbm.n())?;
    let closed_form = matches!(filter.shift, ShiftKind::Adjacency)
        && filter.coefficients == [0.0, 1.0]
        && cfg.self_loops;
    if closed_form {
        if let Some(ppm) = &model.ppm {
            let c = adjacency_constants(ppm.p_in(), ppm.p_out(), ppm.n, ppm.k)?;
            let scaled = FilterConstants::new(c.c1 * sigma2, c.c2 * sigma2, c.c3 * sigma2, c.n, c.k)?;
            return Ok((scaled, "closedForm".into()));
        }
    }
    let mut rng = stream(cfg.seed, &[TAG_SWEEP, 0xC0]);
    let c = estimate_constants(
        &filter,
        &model.sbm,
        &model.labels,
        cfg.self_loops,
        sigma2,
        cfg.theory_trials,
        &mut rng,
    )?;
    Ok((c, "monteCarlo".into()))
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

fn run_trials<F>(trials: usize, deterministic: bool, runner: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(usize) -> Result<TrialRecord> + Sync,
{
    if deterministic {
        (0..trials).map(&runner).collect()
    } else {
        (0..trials).into_par_iter().map(&runner).collect()
    }
}

/// Runs a configured experiment. The same config and seed always produce
/// the same result, bit for bit.
pub fn run_experiment(cfg: &ExperimentConfig, deterministic: bool) -> Result<ExperimentResult> {
    cfg.validate()?;
    match cfg.task {
        TaskKind::Theory => run_theory(cfg),
        TaskKind::SnrSweep => run_snr_sweep(cfg, deterministic),
        TaskKind::Order => run_sampling_task(cfg, deterministic),
        TaskKind::Partition => run_sampling_task(cfg, deterministic),
        TaskKind::Pipeline => run_sampling_task(cfg, deterministic),
    }
}

fn run_theory(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let model = cfg.model.build()?;
    let (constants, route) = resolve_constants(cfg, &model)?;
    let spectrum = analytic_spectrum(&constants);
    let report = TheoryReport {
        route,
        c1: constants.c1,
        c2: constants.c2,
        c3: constants.c3,
        n: constants.n,
        k: constants.k,
        lambda1: spectrum.lambda1,
        lambda2: spectrum.lambda2,
        lambda3: spectrum.lambda3,
        multiplicities: spectrum.multiplicity,
        assumption_holds: spectrum.assumption_holds,
        difficulty: sample_bounds(&constants).ok(),
    };
    let mut notes = Vec::new();
    if !spectrum.assumption_holds {
        notes.push("spectral-gap assumption fails for this model and filter".into());
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        points: Vec::new(),
        snr_points: Vec::new(),
        theory: Some(report),
        notes,
    })
}

fn run_sampling_task(cfg: &ExperimentConfig, deterministic: bool) -> Result<ExperimentResult> {
    let model = cfg.model.build()?;
    let filter = cfg.filter.build(model.sbm.n())?;
    let excitation = cfg.excitation.build(&model)?;
    let process = cfg.graph_process.build()?;
    let m_values = cfg.m.as_ref().expect("validated").values()?;

    // The threshold baseline needs the true spectrum; skip it (with a note)
    // when the excitation is colored.
    let mut notes = Vec::new();
    let threshold_constants = if cfg.task == TaskKind::Order {
        match resolve_constants(cfg, &model) {
            Ok((c, _)) if c.assumption_holds() => Some(c),
            Ok(_) => {
                notes.push("threshold baseline skipped: spectral-gap assumption fails".into());
                None
            }
            Err(_) => {
                notes.push("threshold baseline skipped: colored excitation has no three-valued true spectrum".into());
                None
            }
        }
    } else {
        None
    };

    let mut points = Vec::with_capacity(m_values.len());
    for (sweep_idx, &m) in m_values.iter().enumerate() {
        let trials = run_trials(cfg.trials, deterministic, |trial| {
            let batch = generate_trial_batch(
                &model,
                &filter,
                &excitation,
                process,
                cfg.self_loops,
                cfg.mean_center,
                m,
                cfg.seed,
                trial as u64,
                sweep_idx as u64,
            )?;
            let mut record = TrialRecord { trial, ..TrialRecord::default() };
            match cfg.task {
                TaskKind::Order => {
                    record.k_star_mdl = Some(select_order_mdl(&batch.summary, m)?.k_star);
                    if let Some(c) = &threshold_constants {
                        record.k_star_threshold = Some(select_order_threshold(&batch.summary, c)?.k_star);
                    }
                }
                TaskKind::Partition => {
                    let mut kmeans_rng =
                        stream(cfg.seed, &[TAG_TRIAL, trial as u64, TAG_KMEANS, sweep_idx as u64]);
                    let labeling =
                        recover_partition(&batch.summary, model.k, &cfg.kmeans, &mut kmeans_rng)?;
                    let vk = crate::spectral::top_k_eigenvectors(&batch.summary, model.k)?;
                    record.kmeans_cost = Some(kmeans_cost(&labeling, &vk)?);
                    let report = error_rate(&labeling, &batch.truth)?;
                    record.error_rate = Some(report.error_rate);
                    record.overlap = Some(report.overlap);
                }
                TaskKind::Pipeline => {
                    let estimate = select_order_mdl(&batch.summary, m)?;
                    record.k_star_mdl = Some(estimate.k_star);
                    let mut kmeans_rng =
                        stream(cfg.seed, &[TAG_TRIAL, trial as u64, TAG_KMEANS, sweep_idx as u64]);
                    let labeling =
                        recover_partition(&batch.summary, estimate.k_star, &cfg.kmeans, &mut kmeans_rng)?;
                    let vk = crate::spectral::top_k_eigenvectors(&batch.summary, estimate.k_star)?;
                    record.kmeans_cost = Some(kmeans_cost(&labeling, &vk)?);
                    let report = error_rate(&labeling, &batch.truth)?;
                    record.error_rate = Some(report.error_rate);
                    record.overlap = Some(report.overlap);
                }
                TaskKind::Theory | TaskKind::SnrSweep => unreachable!("dispatched earlier"),
            }
            Ok(record)
        })?;

        let mut point = SweepPoint { m, trials, ..SweepPoint::default() };
        let errors: Vec<f64> = point.trials.iter().filter_map(|t| t.error_rate).collect();
        if !errors.is_empty() {
            let (mean, se) = mean_and_stderr(&errors);
            point.mean_error_rate = Some(mean);
            point.stderr_error_rate = Some(se);
        }
        let overlaps: Vec<f64> = point.trials.iter().filter_map(|t| t.overlap).collect();
        if !overlaps.is_empty() {
            point.mean_overlap = Some(mean_and_stderr(&overlaps).0);
        }
        let mdl_hits: Vec<f64> = point
            .trials
            .iter()
            .filter_map(|t| t.k_star_mdl.map(|k| f64::from(u8::from(k == model.k))))
            .collect();
        if cfg.task != TaskKind::Partition && !mdl_hits.is_empty() {
            point.correct_rate_mdl = Some(mean_and_stderr(&mdl_hits).0);
        }
        let thr_hits: Vec<f64> = point
            .trials
            .iter()
            .filter_map(|t| t.k_star_threshold.map(|k| f64::from(u8::from(k == model.k))))
            .collect();
        if !thr_hits.is_empty() {
            point.correct_rate_threshold = Some(mean_and_stderr(&thr_hits).0);
        }
        points.push(point);
    }

    // Soft monotonicity check: error against m should not rise for white
    // excitations. Monte Carlo noise makes this advisory only.
    if cfg.task == TaskKind::Partition && cfg.excitation.white_variance().is_some() {
        let sorted = m_values.windows(2).all(|w| w[0] <= w[1]);
        if sorted {
            for pair in points.windows(2) {
                if let (Some(a), Some(b)) = (pair[0].mean_error_rate, pair[1].mean_error_rate) {
                    if b > a + 1e-9 {
                        notes.push(format!(
                            "mean error rose from {a:.4} (m = {}) to {b:.4} (m = {})",
                            pair[0].m, pair[1].m
                        ));
                    }
                }
            }
        }
    }

    Ok(ExperimentResult {
        config: cfg.clone(),
        points,
        snr_points: Vec::new(),
        theory: None,
        notes,
    })
}

/// The two between-block scalings of the community-count sweep. At each k
/// the within probability `p_in = a2 / (2 n_c)` is held fixed; the "fixed"
/// scheme also holds `p_out = gamma2 p_in`, while the "normalized" scheme
/// uses `p_out = gamma2 p_in / (k - 1)`, keeping the expected inter-cluster
/// degree of a node constant.
fn run_snr_sweep(cfg: &ExperimentConfig, deterministic: bool) -> Result<ExperimentResult> {
    let snr = cfg.snr.as_ref().expect("validated");
    let m_values = cfg.m.as_ref().expect("validated").values()?;
    let n_c = snr.community_size;
    let a2 = snr.a2.unwrap_or_else(|| 4.0 * (2.0 * n_c as f64).ln());
    let p_in = a2 / (2 * n_c) as f64;
    if !(0.0..=1.0).contains(&p_in) {
        return Err(Error::Config(format!("a2 = {a2} gives p_in = {p_in} outside [0, 1]")));
    }

    let mut snr_points = Vec::new();
    for &k in &snr.ks {
        let n = k * n_c;
        // Scheme seeds depend only on k, so the two schemes coincide
        // exactly at k = 2 where their parameters are equal.
        let sub_seed = derive_seed(cfg.seed, &[TAG_SWEEP, k as u64]);
        for (scheme, gamma_k) in
            [("fixed", snr.gamma2), ("normalized", snr.gamma2 / (k as f64 - 1.0))]
        {
            let model_cfg = ModelConfig::Ppm {
                n,
                k,
                a: p_in * n as f64,
                b: gamma_k * p_in * n as f64,
            };
            let model = model_cfg.build()?;
            let filter_cfg = FilterConfig::Preset {
                preset: crate::config::DiffusionPreset::Diffusion,
                gamma: gamma_k,
                order: snr.order,
            };
            let filter = filter_cfg.build(n)?;
            let excitation = cfg.excitation.build(&model)?;
            let process = cfg.graph_process.build()?;

            for (sweep_idx, &m) in m_values.iter().enumerate() {
                let trials = run_trials(cfg.trials, deterministic, |trial| {
                    let batch = generate_trial_batch(
                        &model,
                        &filter,
                        &excitation,
                        process,
                        cfg.self_loops,
                        cfg.mean_center,
                        m,
                        sub_seed,
                        trial as u64,
                        sweep_idx as u64,
                    )?;
                    let mut kmeans_rng =
                        stream(sub_seed, &[TAG_TRIAL, trial as u64, TAG_KMEANS, sweep_idx as u64]);
                    let labeling = recover_partition(&batch.summary, k, &cfg.kmeans, &mut kmeans_rng)?;
                    let report = error_rate(&labeling, &batch.truth)?;
                    Ok(TrialRecord {
                        trial,
                        error_rate: Some(report.error_rate),
                        overlap: Some(crate::metrics::overlap_score(&labeling, &batch.truth, k)?),
                        ..TrialRecord::default()
                    })
                })?;
                let overlaps: Vec<f64> = trials.iter().filter_map(|t| t.overlap).collect();
                let (mean, se) = mean_and_stderr(&overlaps);
                snr_points.push(SnrPoint {
                    k,
                    scheme: scheme.into(),
                    m,
                    mean_overlap: mean,
                    stderr_overlap: se,
                    trials,
                });
            }
        }
    }

    Ok(ExperimentResult {
        config: cfg.clone(),
        points: Vec::new(),
        snr_points,
        theory: None,
        notes: Vec::new(),
    })
}

/// Flat CSV of the sweep aggregates, one row per point, for plotting.
pub fn result_to_csv(result: &ExperimentResult) -> String {
    let mut out = String::new();
    if !result.points.is_empty() {
        out.push_str("m,meanErrorRate,stderrErrorRate,meanOverlap,correctRateMdl,correctRateThreshold\n");
        for p in &result.points {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.m,
                fmt(p.mean_error_rate),
                fmt(p.stderr_error_rate),
                fmt(p.mean_overlap),
                fmt(p.correct_rate_mdl),
                fmt(p.correct_rate_threshold),
            ));
        }
    }
    if !result.snr_points.is_empty() {
        out.push_str("k,scheme,m,meanOverlap,stderrOverlap\n");
        for p in &result.snr_points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.k, p.scheme, p.m, p.mean_overlap, p.stderr_overlap
            ));
        }
    }
    out
}
