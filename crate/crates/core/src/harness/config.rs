//! Experiment configuration files.
//!
//! ```toml
//! [kernel]
//! type = "stationary_schoenberg"   # or "spin_glass", "quadratic"
//! atoms = [[1.0, 1.0]]
//! mean_level = 0.0
//!
//! [algorithm]
//! type = "gd"                      # or "heavy_ball", "nesterov", "fr_cg"
//! alpha = 0.4
//! projection = "none"              # or "sphere", "ball"
//!
//! [experiment]
//! lambda = 1.0
//! N_list = [64, 256, 1024, 4096]
//! steps = 8
//! replications = 200
//! epsilon = [0.3]
//! master_seed = 42
//!
//! [numerics]                       # optional
//! conditioning = "jitter"          # or "jitter_then_pseudo_inverse", "pseudo_inverse"
//! freeze_dimension = false
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gaussian::{ConditioningPolicy, JitterPolicy, PseudoInverse};
use crate::gsa::{self, GsaSpec};
use crate::kernelspace::{
    lift_stationary, quadratic_kernel, spin_glass_kernel, KernelModel, SchoenbergMixture,
    SpinGlassMixture,
};
use crate::predictor::PredictOptions;
use crate::sampler::SamplerOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Predict,
    Simulate,
    Verify,
    TwoInit,
    Halting,
    Barrier,
    CheckKernel,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelSection {
    #[serde(rename = "type")]
    kind: String,
    atoms: Option<Vec<[f64; 2]>>,
    coeffs: Option<Vec<f64>>,
    #[serde(rename = "sigma_A")]
    sigma_a: Option<f64>,
    sigma_eta: Option<f64>,
    #[serde(rename = "R")]
    radius: Option<f64>,
    mean_level: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgorithmSection {
    #[serde(rename = "type")]
    kind: String,
    alpha: f64,
    beta: Option<f64>,
    projection: Option<String>,
    radius: Option<f64>,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_n_list() -> Vec<u64> {
    vec![64, 256, 1024, 4096]
}

fn default_steps() -> usize {
    8
}

fn default_replications() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSection {
    mode: Option<Mode>,
    #[serde(default = "default_lambda")]
    lambda: f64,
    #[serde(rename = "N_list", default = "default_n_list")]
    n_list: Vec<u64>,
    #[serde(default = "default_steps")]
    steps: usize,
    #[serde(default = "default_replications")]
    replications: usize,
    #[serde(default)]
    epsilon: Vec<f64>,
    #[serde(default)]
    master_seed: u64,
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumericsSection {
    conditioning: Option<String>,
    jitter_start: Option<f64>,
    jitter_max: Option<f64>,
    #[serde(default)]
    freeze_dimension: bool,
    quadrature_points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    kernel: KernelSection,
    algorithm: AlgorithmSection,
    experiment: ExperimentSection,
    #[serde(default)]
    numerics: NumericsSection,
}

/// A validated experiment definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kernel: KernelModel,
    pub algorithm: GsaSpec,
    pub lambda: f64,
    pub n_list: Vec<u64>,
    pub steps: usize,
    pub replications: usize,
    pub epsilon: Vec<f64>,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    pub mode: Option<Mode>,
    pub policy: ConditioningPolicy,
    pub freeze_dimension: bool,
    pub quadrature_points: usize,
}

impl ExperimentConfig {
    pub fn predict_options(&self) -> PredictOptions {
        PredictOptions { policy: self.policy, freeze_dimension: self.freeze_dimension }
    }

    pub fn sampler_options(&self) -> SamplerOptions {
        SamplerOptions { policy: self.policy }
    }

    /// The mixture behind a spin glass kernel.
    pub fn spin_glass_mixture(&self) -> Option<&SpinGlassMixture> {
        match &self.kernel {
            KernelModel::SpinGlass(k) => Some(&k.mixture),
            _ => None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(one_line(&e.to_string())))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: ConfigFile) -> Result<Self> {
        let kernel = build_kernel(&raw.kernel)?;
        let algorithm = build_algorithm(&raw.algorithm)?;
        let e = raw.experiment;
        if !(e.lambda >= 0.0 && e.lambda.is_finite()) {
            return Err(Error::Config(format!("experiment.lambda = {} must be >= 0", e.lambda)));
        }
        if e.n_list.is_empty() || e.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("experiment.N_list must be non-empty and strictly increasing".into()));
        }
        if e.replications < 2 {
            return Err(Error::Config("experiment.replications must be >= 2".into()));
        }
        if e.steps < 1 {
            return Err(Error::Config("experiment.steps must be >= 1".into()));
        }
        if e.epsilon.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("experiment.epsilon values must be positive".into()));
        }
        let policy = build_policy(&raw.numerics)?;
        Ok(Self {
            kernel,
            algorithm,
            lambda: e.lambda,
            n_list: e.n_list,
            steps: e.steps,
            replications: e.replications,
            epsilon: e.epsilon,
            master_seed: e.master_seed,
            output: e.output,
            mode: e.mode,
            policy,
            freeze_dimension: raw.numerics.freeze_dimension,
            quadrature_points: raw.numerics.quadrature_points.unwrap_or(16),
        })
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing key {key}")))
}

fn reject(present: bool, key: &str, kind: &str) -> Result<()> {
    if present {
        Err(Error::Config(format!("key {key} does not apply to type {kind}")))
    } else {
        Ok(())
    }
}

fn build_kernel(k: &KernelSection) -> Result<KernelModel> {
    match k.kind.as_str() {
        "stationary_schoenberg" => {
            reject(k.coeffs.is_some(), "kernel.coeffs", &k.kind)?;
            reject(k.sigma_a.is_some() || k.sigma_eta.is_some() || k.radius.is_some(), "kernel.sigma_A/sigma_eta/R", &k.kind)?;
            let atoms = k.atoms.clone().ok_or_else(|| Error::Config("missing key kernel.atoms".into()))?;
            let mixture = SchoenbergMixture::new(atoms.iter().map(|a| (a[0], a[1])).collect())?;
            Ok(lift_stationary(mixture, k.mean_level.unwrap_or(0.0)))
        }
        "spin_glass" => {
            reject(k.atoms.is_some(), "kernel.atoms", &k.kind)?;
            reject(k.mean_level.is_some(), "kernel.mean_level", &k.kind)?;
            reject(k.sigma_a.is_some() || k.sigma_eta.is_some() || k.radius.is_some(), "kernel.sigma_A/sigma_eta/R", &k.kind)?;
            let coeffs = k.coeffs.clone().ok_or_else(|| Error::Config("missing key kernel.coeffs".into()))?;
            Ok(spin_glass_kernel(SpinGlassMixture::new(coeffs)?))
        }
        "quadratic" => {
            reject(k.atoms.is_some() || k.coeffs.is_some(), "kernel.atoms/coeffs", &k.kind)?;
            reject(k.mean_level.is_some(), "kernel.mean_level", &k.kind)?;
            Ok(quadratic_kernel(
                need(k.sigma_a, "kernel.sigma_A")?,
                need(k.sigma_eta, "kernel.sigma_eta")?,
                need(k.radius, "kernel.R")?,
            )?)
        }
        other => Err(Error::Config(format!(
            "kernel.type = {other:?}; expected stationary_schoenberg, spin_glass or quadratic"
        ))),
    }
}

fn build_algorithm(a: &AlgorithmSection) -> Result<GsaSpec> {
    let inner = match a.kind.as_str() {
        "gd" => gsa::gd(a.alpha)?,
        "heavy_ball" => gsa::heavy_ball(a.alpha, need(a.beta, "algorithm.beta")?)?,
        "nesterov" => gsa::nesterov(a.alpha, need(a.beta, "algorithm.beta")?)?,
        "fr_cg" => gsa::fr_cg(a.alpha)?,
        other => {
            return Err(Error::Config(format!(
                "algorithm.type = {other:?}; expected gd, heavy_ball, nesterov or fr_cg"
            )))
        }
    };
    if matches!(a.kind.as_str(), "gd" | "fr_cg") && a.beta.is_some() {
        return Err(Error::Config(format!("key algorithm.beta does not apply to type {}", a.kind)));
    }
    match a.projection.as_deref().unwrap_or("none") {
        "none" => {
            reject(a.radius.is_some(), "algorithm.radius", "projection none")?;
            Ok(inner)
        }
        "sphere" => Ok(gsa::with_sphere_projection(inner, need(a.radius, "algorithm.radius")?)?),
        "ball" => Ok(gsa::with_ball_projection(inner, need(a.radius, "algorithm.radius")?)?),
        other => Err(Error::Config(format!(
            "algorithm.projection = {other:?}; expected none, sphere or ball"
        ))),
    }
}

fn build_policy(n: &NumericsSection) -> Result<ConditioningPolicy> {
    let default = JitterPolicy::default();
    let JitterPolicy::Escalate { start, max } = default else { unreachable!() };
    let start = n.jitter_start.unwrap_or(start);
    let max = n.jitter_max.unwrap_or(max);
    if !(start > 0.0 && max >= start) {
        return Err(Error::Config("numerics.jitter_start must be > 0 and <= jitter_max".into()));
    }
    let pseudo_inverse = match n.conditioning.as_deref().unwrap_or("jitter") {
        "jitter" => PseudoInverse::Never,
        "jitter_then_pseudo_inverse" => PseudoInverse::Fallback,
        "pseudo_inverse" => PseudoInverse::Always,
        other => {
            return Err(Error::Config(format!(
                "numerics.conditioning = {other:?}; expected jitter, jitter_then_pseudo_inverse or pseudo_inverse"
            )))
        }
    };
    Ok(ConditioningPolicy { jitter: JitterPolicy::Escalate { start, max }, pseudo_inverse })
}
