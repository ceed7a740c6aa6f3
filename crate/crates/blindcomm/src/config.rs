//! JSON experiment configuration and its resolution into model objects.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::excitation::{ExcitationKind, ExcitationSpec};
use crate::filter::{diffusion_filter, FilterSpec, ShiftKind};
use crate::graph::{GraphProcess, PartitionIndicator, PpmParams, SbmParams};
use crate::partition::KMeansConfig;

/// What the harness runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TaskKind {
    /// Estimate the model order and score it against the true k.
    Order,
    /// Recover the partition with the true k and score the error rate.
    Partition,
    /// Chain order selection into partition recovery.
    Pipeline,
    /// Print constants, spectrum, assumption status, difficulty scores.
    Theory,
    /// Overlap score against a growing community count under two
    /// between-block scalings.
    SnrSweep,
}

/// The latent graph model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ModelConfig {
    Ppm { n: usize, k: usize, a: f64, b: f64 },
    Sbm { group_sizes: Vec<usize>, affinity: Vec<Vec<f64>> },
}

/// A model resolved into sampling-ready pieces.
#[derive(Debug, Clone)]
pub struct ResolvedModel {
    pub sbm: SbmParams,
    pub labels: PartitionIndicator,
    pub k: usize,
    /// Present when the model is an exact equal-block PPM.
    pub ppm: Option<PpmParams>,
}

impl ResolvedModel {
    /// The expected adjacency `G Omega G^T` of the generating model.
    pub fn expected_adjacency(&self) -> DMatrix<f64> {
        let g = self.labels.matrix();
        &g * self.sbm.affinity() * g.transpose()
    }
}

/// Near-equal contiguous sizes: the first `n mod k` groups get the extra
/// node.
pub fn balanced_sizes(n: usize, k: usize) -> Vec<usize> {
    let base = n / k;
    let extra = n % k;
    (0..k).map(|g| base + usize::from(g < extra)).collect()
}

impl ModelConfig {
    pub fn build(&self) -> Result<ResolvedModel> {
        match self {
            ModelConfig::Ppm { n, k, a, b } => {
                if *k == 0 || *n == 0 || k > n {
                    return Err(Error::Config(format!("bad PPM dimensions n = {n}, k = {k}")));
                }
                if n % k == 0 {
                    let ppm = PpmParams::new(*n, *k, *a, *b).map_err(|e| Error::Config(e.to_string()))?;
                    let labels = PartitionIndicator::equal_blocks(*n, *k)?;
                    Ok(ResolvedModel { sbm: ppm.to_sbm(), labels, k: *k, ppm: Some(ppm) })
                } else {
                    // k does not divide n: fall back to near-equal blocks
                    // with the same two edge probabilities.
                    let sizes = balanced_sizes(*n, *k);
                    let (p_in, p_out) = (a / *n as f64, b / *n as f64);
                    let sbm = SbmParams::planted(sizes.clone(), p_in, p_out)
                        .map_err(|e| Error::Config(e.to_string()))?;
                    let labels = PartitionIndicator::contiguous(&sizes)?;
                    Ok(ResolvedModel { sbm, labels, k: *k, ppm: None })
                }
            }
            ModelConfig::Sbm { group_sizes, affinity } => {
                let k = group_sizes.len();
                if affinity.len() != k || affinity.iter().any(|row| row.len() != k) {
                    return Err(Error::Config("affinity must be k x k".into()));
                }
                let matrix = DMatrix::from_fn(k, k, |i, j| affinity[i][j]);
                let sbm = SbmParams::new(group_sizes.clone(), matrix)
                    .map_err(|e| Error::Config(e.to_string()))?;
                let labels = PartitionIndicator::contiguous(group_sizes)?;
                Ok(ResolvedModel { sbm, labels, k, ppm: None })
            }
        }
    }
}

/// Filter specification: explicit coefficients or the diffusion preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterConfig {
    Preset { preset: DiffusionPreset, gamma: f64, order: usize },
    Explicit { shift: ShiftKind, coeffs: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffusionPreset {
    #[serde(rename = "diffusion")]
    Diffusion,
}

impl FilterConfig {
    pub fn build(&self, n: usize) -> Result<FilterSpec> {
        match self {
            FilterConfig::Preset { preset: DiffusionPreset::Diffusion, gamma, order } => {
                diffusion_filter(*gamma, n, *order).map_err(|e| Error::Config(e.to_string()))
            }
            FilterConfig::Explicit { shift, coeffs } => {
                FilterSpec::new(coeffs.clone(), *shift).map_err(|e| Error::Config(e.to_string()))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FilterConfig::Preset { gamma, order, .. } => format!("diffusion(gamma={gamma}, order={order})"),
            FilterConfig::Explicit { shift, coeffs } => format!("{shift:?} coeffs {coeffs:?}"),
        }
    }
}

/// Excitation specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExcitationConfig {
    pub kind: ExcitationKindConfig,
    /// Wishart sample count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    /// Keep the raw Wishart `Z Z^T` instead of `(1/p) Z Z^T`.
    #[serde(default)]
    pub raw_wishart: bool,
    /// Rescale U[-1, 1] to unit variance.
    #[serde(default)]
    pub unit_variance: bool,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        Self { kind: ExcitationKindConfig::WhiteUniform, p: None, raw_wishart: false, unit_variance: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExcitationKindConfig {
    WhiteUniform,
    WhiteGaussian,
    Diagonal,
    Wishart,
    Adversarial,
}

impl ExcitationConfig {
    pub fn build(&self, model: &ResolvedModel) -> Result<ExcitationSpec> {
        let kind = match self.kind {
            ExcitationKindConfig::WhiteUniform => ExcitationKind::WhiteUniform,
            ExcitationKindConfig::WhiteGaussian => ExcitationKind::WhiteGaussian,
            ExcitationKindConfig::Diagonal => ExcitationKind::Diagonal,
            ExcitationKindConfig::Wishart => {
                let samples = self
                    .p
                    .ok_or_else(|| Error::Config("wishart excitation needs \"p\"".into()))?;
                ExcitationKind::Wishart { samples, normalized: !self.raw_wishart }
            }
            ExcitationKindConfig::Adversarial => ExcitationKind::Adversarial {
                expected_adjacency: model.expected_adjacency(),
                k: model.k,
            },
        };
        let mut spec = ExcitationSpec::new(kind);
        spec.scale_to_unit_variance = self.unit_variance;
        Ok(spec)
    }

    /// Per-coordinate variance for white kinds; colored kinds return None.
    pub fn white_variance(&self) -> Option<f64> {
        match self.kind {
            ExcitationKindConfig::WhiteUniform => {
                Some(if self.unit_variance { 1.0 } else { 1.0 / 3.0 })
            }
            ExcitationKindConfig::WhiteGaussian => Some(1.0),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        format!("{:?}", self.kind)
    }
}

/// Graph evolution across observations: `"independent"` or
/// `{"bernoulli": p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphProcessConfig {
    Named(IndependentName),
    Bernoulli { bernoulli: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndependentName {
    #[serde(rename = "independent")]
    Independent,
}

impl Default for GraphProcessConfig {
    fn default() -> Self {
        Self::Named(IndependentName::Independent)
    }
}

impl GraphProcessConfig {
    pub fn build(&self) -> Result<GraphProcess> {
        match self {
            GraphProcessConfig::Named(_) => Ok(GraphProcess::Independent),
            GraphProcessConfig::Bernoulli { bernoulli } => {
                if !(0.0..=1.0).contains(bernoulli) {
                    return Err(Error::Config(format!("bernoulli probability {bernoulli} not in [0, 1]")));
                }
                Ok(GraphProcess::Bernoulli { redraw: *bernoulli })
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GraphProcessConfig::Named(_) => "independent".into(),
            GraphProcessConfig::Bernoulli { bernoulli } => format!("bernoulli({bernoulli})"),
        }
    }
}

/// Sample counts: a single value or a sweep list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MSpec {
    Single(usize),
    Sweep(Vec<usize>),
}

impl MSpec {
    pub fn values(&self) -> Result<Vec<usize>> {
        let values = match self {
            MSpec::Single(m) => vec![*m],
            MSpec::Sweep(list) => list.clone(),
        };
        if values.is_empty() {
            return Err(Error::Config("empty m sweep".into()));
        }
        if values.iter().any(|&m| m == 0) {
            return Err(Error::Config("m must be >= 1".into()));
        }
        Ok(values)
    }
}

/// Sweep setup for the community-count experiment: fixed community size,
/// growing k, and the k = 2 baseline ratio `gamma2 = b/a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SnrConfig {
    pub community_size: usize,
    pub ks: Vec<usize>,
    pub gamma2: f64,
    /// Within-group intensity at k = 2; defaults to `4 ln(2 community_size)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    /// Diffusion filter order applied at every k.
    #[serde(default = "default_snr_order")]
    pub order: usize,
}

fn default_snr_order() -> usize {
    5
}

fn default_trials() -> usize {
    10
}

/// A full experiment description. Serialized back verbatim into every
/// result record so runs are self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub model: ModelConfig,
    pub filter: FilterConfig,
    #[serde(default)]
    pub excitation: ExcitationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<MSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub graph_process: GraphProcessConfig,
    #[serde(default)]
    pub self_loops: bool,
    #[serde(default)]
    pub kmeans: KMeansConfig,
    /// Mean-center the sample covariance (real-data pipelines).
    #[serde(default)]
    pub mean_center: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<SnrConfig>,
    /// Monte Carlo graph draws used to estimate theory constants when no
    /// closed form applies (theory task, threshold baseline).
    #[serde(default = "default_theory_trials")]
    pub theory_trials: usize,
}

fn default_theory_trials() -> usize {
    200
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.build()?;
        let n = match &self.model {
            ModelConfig::Ppm { n, .. } => *n,
            ModelConfig::Sbm { group_sizes, .. } => group_sizes.iter().sum(),
        };
        self.filter.build(n)?;
        self.graph_process.build()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        match self.task {
            TaskKind::Theory => {}
            TaskKind::SnrSweep => {
                let snr = self
                    .snr
                    .as_ref()
                    .ok_or_else(|| Error::Config("snrSweep task needs an \"snr\" section".into()))?;
                if snr.ks.is_empty() || snr.community_size == 0 {
                    return Err(Error::Config("snr sweep needs ks and a community size".into()));
                }
                if snr.ks.iter().any(|&k| k < 2) {
                    return Err(Error::Config("snr sweep needs k >= 2".into()));
                }
                if !(0.0..1.0).contains(&snr.gamma2) {
                    return Err(Error::Config("gamma2 must lie in [0, 1)".into()));
                }
                self.m
                    .as_ref()
                    .ok_or_else(|| Error::Config("snrSweep task needs \"m\"".into()))?
                    .values()?;
            }
            _ => {
                self.m
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("{:?} task needs \"m\"", self.task)))?
                    .values()?;
            }
        }
        Ok(())
    }
}
